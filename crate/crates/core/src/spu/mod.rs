//! Bit-exact model of the quantized sampling pipeline:
//! 8-bit energy -> dynamic scaling -> LUT probability -> inverse-transform
//! sampling driven by a 19-bit LFSR (or an FP64 uniform source).

mod lfsr;
mod lut;

pub use lfsr::{Lfsr19, LFSR_BITS, LFSR_PERIOD, SAMPLE_BITS};
pub use lut::{build_lut, dynamic_scale, quantize_energy, validate_p_bits, ProbLut};

use serde::{Deserialize, Serialize};

use crate::chain::{run_chain, SiteKernel};
use crate::model::{GridModel, LabelField};
use crate::reference::{inverse_transform, softmax_into, RunConfig, SampleTrace};
use crate::rng::ReferenceRng;
use crate::{Error, Result};

/// Upper bound on the summed weights the 12-bit sampler can address.
pub const MAX_WEIGHT_SUM: u32 = 1 << SAMPLE_BITS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RngKind {
    Lfsr19,
    Fp64Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// LUT conversion plus integer-weight inverse transform.
    Quantized,
    /// Softmax on the scaled energies and FP64 inverse transform.
    Fp64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpuConfig {
    pub p_bits: u32,
    pub pow2_approx: bool,
    pub rng: RngKind,
    pub backend: Backend,
}

impl SpuConfig {
    pub fn quantized(p_bits: u32, pow2_approx: bool, rng: RngKind) -> Self {
        Self {
            p_bits,
            pow2_approx,
            rng,
            backend: Backend::Quantized,
        }
    }

    pub fn fp64_backend() -> Self {
        Self {
            p_bits: 8,
            pow2_approx: false,
            rng: RngKind::Fp64Uniform,
            backend: Backend::Fp64,
        }
    }

    /// Checks the bit width and that `labels * (2^P - 1)` fits the 12-bit sampler.
    pub fn validate(&self, labels: usize) -> Result<()> {
        if self.backend == Backend::Fp64 {
            return Ok(());
        }
        validate_p_bits(self.p_bits)?;
        let worst = labels as u64 * ((1u64 << self.p_bits) - 1);
        if worst > MAX_WEIGHT_SUM as u64 {
            return Err(Error::Config(format!(
                "{labels} labels x {}-bit probabilities sum to {worst} > {MAX_WEIGHT_SUM}",
                self.p_bits
            )));
        }
        Ok(())
    }
}

/// Uniform input to the discrete sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UniformDraw {
    /// 12-bit LFSR output, reduced modulo the weight sum.
    Bits12(u16),
    /// Real in [0, 1), scaled by the weight sum.
    Real(f64),
}

/// Inverse-transform sampling over integer weights in label order.
///
/// With total weight W > 0 the threshold is `u mod W` (12-bit input) or
/// `u * W` (real input) and the first label whose running sum exceeds it is
/// returned. With W = 0 every label was truncated away and the label of
/// minimum scaled energy wins, ties to the smallest index.
pub fn sample_discrete(weights: &[u16], u: UniformDraw, scaled_energies: &[u8]) -> usize {
    debug_assert_eq!(weights.len(), scaled_energies.len());
    let total: u32 = weights.iter().map(|&w| w as u32).sum();
    if total == 0 {
        return argmin_first(scaled_energies);
    }
    let mut cdf = 0u32;
    match u {
        UniformDraw::Bits12(bits) => {
            let threshold = bits as u32 % total;
            for (i, &w) in weights.iter().enumerate() {
                cdf += w as u32;
                if cdf > threshold {
                    return i;
                }
            }
        }
        UniformDraw::Real(x) => {
            let threshold = x * total as f64;
            for (i, &w) in weights.iter().enumerate() {
                cdf += w as u32;
                if cdf as f64 > threshold {
                    return i;
                }
            }
        }
    }
    weights.iter().rposition(|&w| w > 0).expect("nonzero total")
}

pub(crate) fn argmin_first(values: &[u8]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

enum UniformSource {
    Lfsr(Lfsr19),
    Mt(ReferenceRng),
}

impl UniformSource {
    #[inline]
    fn draw(&mut self) -> UniformDraw {
        match self {
            UniformSource::Lfsr(l) => UniformDraw::Bits12(l.next_sample()),
            UniformSource::Mt(r) => UniformDraw::Real(r.uniform()),
        }
    }

    fn draw_real(&mut self) -> f64 {
        match self.draw() {
            UniformDraw::Bits12(b) => b as f64 / MAX_WEIGHT_SUM as f64,
            UniformDraw::Real(x) => x,
        }
    }
}

pub(crate) struct SpuKernel {
    config: SpuConfig,
    source: UniformSource,
    temperature: f64,
    lut: Option<ProbLut>,
    lut_builds: usize,
    quantized: Vec<u8>,
    scaled: Vec<u8>,
    weights: Vec<u16>,
    scaled_real: Vec<f64>,
    probabilities: Vec<f64>,
}

impl SpuKernel {
    pub(crate) fn new(config: SpuConfig, rng: ReferenceRng, seed: u64, labels: usize) -> Self {
        let source = match config.rng {
            RngKind::Lfsr19 => UniformSource::Lfsr(Lfsr19::from_seed(seed)),
            RngKind::Fp64Uniform => UniformSource::Mt(rng),
        };
        Self {
            config,
            source,
            temperature: f64::NAN,
            lut: None,
            lut_builds: 0,
            quantized: vec![0; labels],
            scaled: vec![0; labels],
            weights: vec![0; labels],
            scaled_real: vec![0.0; labels],
            probabilities: vec![0.0; labels],
        }
    }
}

impl SiteKernel for SpuKernel {
    fn set_temperature(&mut self, temperature: f64) {
        if temperature == self.temperature {
            return;
        }
        self.temperature = temperature;
        if self.config.backend == Backend::Quantized {
            self.lut = Some(
                build_lut(temperature, self.config.p_bits, self.config.pow2_approx)
                    .expect("config validated before the run"),
            );
            self.lut_builds += 1;
        }
    }

    fn draw(&mut self, energies: &[f64]) -> usize {
        for (q, &e) in self.quantized.iter_mut().zip(energies) {
            *q = quantize_energy(e);
        }
        lut::dynamic_scale_into(&self.quantized, &mut self.scaled);
        match &self.lut {
            Some(lut) if self.config.backend == Backend::Quantized => {
                for (w, &e) in self.weights.iter_mut().zip(&self.scaled) {
                    *w = lut.get(e);
                }
                let u = self.source.draw();
                sample_discrete(&self.weights, u, &self.scaled)
            }
            _ => {
                for (r, &e) in self.scaled_real.iter_mut().zip(&self.scaled) {
                    *r = e as f64;
                }
                softmax_into(&self.scaled_real, self.temperature, &mut self.probabilities);
                inverse_transform(&self.probabilities, self.source.draw_real())
            }
        }
    }
}

/// Runs the pipeline model with the same sweep structure, initialization and
/// temperature schedule as the reference sampler.
pub fn spu_run(
    model: &GridModel,
    spu: &SpuConfig,
    run: &RunConfig,
) -> Result<(LabelField, SampleTrace)> {
    run.validate()?;
    spu.validate(model.labels())?;
    let labels = model.labels();
    let seed = run.seed;
    Ok(run_chain(model, run, |rng| {
        SpuKernel::new(*spu, rng, seed, labels)
    }))
}
