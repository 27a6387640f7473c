//! Full-precision Gibbs sampler used as the baseline for every comparison.

use serde::{Deserialize, Serialize};

use crate::chain::{run_chain, SiteKernel};
use crate::model::{GridModel, LabelField};
use crate::rng::ReferenceRng;
use crate::{Error, Result};

pub const DEFAULT_T0: f64 = 10.0;
pub const DEFAULT_T_FINAL: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Mode {
    /// Constant temperature.
    Sampling { temperature: f64 },
    /// Simulated annealing with T_k = t0 * decay^k.
    Optimization { t0: f64, decay: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub iterations: usize,
    pub seed: u64,
    /// Number of trailing sweeps retained in the trace.
    pub collect_last: usize,
}

/// Geometric decay that takes `t0` to `t_final` after `iterations` steps.
pub fn geometric_decay(t0: f64, t_final: f64, iterations: usize) -> f64 {
    (t_final / t0).powf(1.0 / iterations.max(1) as f64)
}

impl RunConfig {
    pub fn sampling(temperature: f64, iterations: usize, seed: u64) -> Self {
        Self {
            mode: Mode::Sampling { temperature },
            iterations,
            seed,
            collect_last: iterations,
        }
    }

    /// Annealing from T0 = 10 down to roughly 0.1 at the last iteration.
    pub fn optimization(iterations: usize, seed: u64) -> Self {
        Self {
            mode: Mode::Optimization {
                t0: DEFAULT_T0,
                decay: geometric_decay(DEFAULT_T0, DEFAULT_T_FINAL, iterations),
            },
            iterations,
            seed,
            collect_last: iterations,
        }
    }

    pub fn with_collect_last(mut self, collect_last: usize) -> Self {
        self.collect_last = collect_last;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be positive".into()));
        }
        if self.collect_last > self.iterations {
            return Err(Error::Config(format!(
                "collect_last {} exceeds iterations {}",
                self.collect_last, self.iterations
            )));
        }
        match self.mode {
            Mode::Sampling { temperature } if !(temperature > 0.0 && temperature.is_finite()) => {
                Err(Error::Config(format!(
                    "temperature {temperature} must be > 0"
                )))
            }
            Mode::Optimization { t0, decay } => {
                if !(t0 > 0.0 && t0.is_finite()) {
                    Err(Error::Config(format!("t0 {t0} must be > 0")))
                } else if !(decay > 0.0 && decay < 1.0) {
                    Err(Error::Config(format!("decay {decay} must lie in (0, 1)")))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn temperature_at(&self, iteration: usize) -> f64 {
        match self.mode {
            Mode::Sampling { temperature } => temperature,
            Mode::Optimization { t0, decay } => t0 * decay.powi(iteration as i32),
        }
    }
}

/// Retained samples of every variable, variable-major: variable `v`
/// occupies `data[v * len .. (v + 1) * len]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleTrace {
    width: usize,
    height: usize,
    label_count: usize,
    len: usize,
    data: Vec<u16>,
}

impl SampleTrace {
    pub fn from_parts(
        width: usize,
        height: usize,
        label_count: usize,
        len: usize,
        data: Vec<u16>,
    ) -> Result<Self> {
        if data.len() != width * height * len {
            return Err(Error::arg(format!(
                "trace buffer has {} samples, expected {}",
                data.len(),
                width * height * len
            )));
        }
        if let Some(&l) = data.iter().find(|&&l| l as usize >= label_count) {
            return Err(Error::arg(format!(
                "trace label {l} outside label space of {label_count}"
            )));
        }
        Ok(Self {
            width,
            height,
            label_count,
            len,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn variables(&self) -> usize {
        self.width * self.height
    }

    /// Samples per variable.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn variable(&self, var: usize) -> &[u16] {
        &self.data[var * self.len..(var + 1) * self.len]
    }

    pub fn as_slice(&self) -> &[u16] {
        &self.data
    }

    pub fn state_at(&self, t: usize) -> LabelField {
        let labels = (0..self.variables()).map(|v| self.variable(v)[t]).collect();
        LabelField::new(self.width, self.height, labels).expect("trace shape")
    }

    pub fn last_state(&self) -> Option<LabelField> {
        (self.len > 0).then(|| self.state_at(self.len - 1))
    }

    /// The trailing `n` samples of each variable (all of them if `n >= len`).
    pub fn tail(&self, n: usize) -> SampleTrace {
        let n = n.min(self.len);
        let data = (0..self.variables())
            .flat_map(|v| self.variable(v)[self.len - n..].iter().copied())
            .collect();
        SampleTrace {
            data,
            len: n,
            ..*self
        }
    }
}

/// Softmax of `-energies / temperature`, stabilized by subtracting the
/// minimum energy.
pub fn softmax_probabilities(energies: &[f64], temperature: f64) -> Vec<f64> {
    let mut out = vec![0.0; energies.len()];
    softmax_into(energies, temperature, &mut out);
    out
}

pub(crate) fn softmax_into(energies: &[f64], temperature: f64, out: &mut [f64]) {
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    for (p, &e) in out.iter_mut().zip(energies) {
        *p = (-(e - min) / temperature).exp();
        sum += *p;
    }
    for p in out.iter_mut() {
        *p /= sum;
    }
}

/// First index whose running CDF (label order 0..L-1) exceeds `u`.
pub fn inverse_transform(probabilities: &[f64], u: f64) -> usize {
    let mut cdf = 0.0;
    for (i, &p) in probabilities.iter().enumerate() {
        cdf += p;
        if cdf > u {
            return i;
        }
    }
    // rounding left the CDF just below u
    probabilities
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(probabilities.len() - 1)
}

/// Conditional distribution of `var` given the rest of `state`.
pub fn gibbs_probabilities_fp64(
    model: &GridModel,
    state: &LabelField,
    var: usize,
    temperature: f64,
) -> Result<Vec<f64>> {
    if !(temperature > 0.0) {
        return Err(Error::arg(format!("temperature {temperature} must be > 0")));
    }
    let energies = (0..model.labels())
        .map(|l| model.total_energy(state, var, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(softmax_probabilities(&energies, temperature))
}

pub(crate) struct Fp64Kernel {
    rng: ReferenceRng,
    temperature: f64,
    probabilities: Vec<f64>,
}

impl Fp64Kernel {
    pub(crate) fn new(rng: ReferenceRng, labels: usize) -> Self {
        Self {
            rng,
            temperature: 1.0,
            probabilities: vec![0.0; labels],
        }
    }
}

impl SiteKernel for Fp64Kernel {
    fn set_temperature(&mut self, temperature: f64) {
        self.temperature = temperature;
    }

    fn draw(&mut self, energies: &[f64]) -> usize {
        softmax_into(energies, self.temperature, &mut self.probabilities);
        inverse_transform(&self.probabilities, self.rng.uniform())
    }
}

/// Runs the reference sampler; returns the final state and the retained trace.
pub fn run(model: &GridModel, config: &RunConfig) -> Result<(LabelField, SampleTrace)> {
    config.validate()?;
    let labels = model.labels();
    Ok(run_chain(model, config, |rng| Fp64Kernel::new(rng, labels)))
}

/// Most frequent label per variable; ties go to the smallest label.
pub fn mode_estimate(trace: &SampleTrace) -> Result<LabelField> {
    if trace.is_empty() {
        return Err(Error::arg("mode of an empty trace"));
    }
    let mut counts = vec![0usize; trace.label_count()];
    let labels = (0..trace.variables())
        .map(|v| {
            counts.fill(0);
            for &l in trace.variable(v) {
                counts[l as usize] += 1;
            }
            argmax_first(&counts) as u16
        })
        .collect();
    LabelField::new(trace.width(), trace.height(), labels)
}

pub(crate) fn argmax_first(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}
