//! Jensen-Shannon divergence and the data-independent binary-label sweep.

use std::f64::consts::LN_2;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::reference::softmax_probabilities;
use crate::spu::{argmin_first, build_lut, dynamic_scale, Backend, ProbLut, SpuConfig};
use crate::{Error, Result};

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

fn check_distribution(p: &[f64], name: &str) -> Result<()> {
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::arg(format!(
            "{name} has negative or non-finite entries"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::arg(format!("{name} sums to {sum}, not 1")));
    }
    Ok(())
}

#[inline]
fn kl_term(p: f64, m: f64) -> f64 {
    if p > 0.0 {
        p * (p / m).ln()
    } else {
        0.0
    }
}

/// D_JS(P || Q) in nats, with 0 log(0/x) = 0; always within [0, ln 2].
pub fn jsd(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::arg(format!(
            "distribution lengths differ: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    check_distribution(p, "P")?;
    check_distribution(q, "Q")?;
    Ok(jsd_unchecked(p, q))
}

fn jsd_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        total += kl_term(a, m) + kl_term(b, m);
    }
    (0.5 * total).clamp(0.0, LN_2)
}

/// Energy-to-distribution model of one pipeline for the binary sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BinaryPipeline {
    /// Softmax of the raw energies in FP64.
    Fp64,
    /// Pipeline model; `dynamic_scaling: false` feeds raw energies to the LUT,
    /// as the first-generation design without the scaling stage did.
    Spu {
        config: SpuConfig,
        dynamic_scaling: bool,
    },
}

struct PreparedPipeline {
    pipeline: BinaryPipeline,
    temperature: f64,
    lut: Option<ProbLut>,
}

impl PreparedPipeline {
    fn new(pipeline: BinaryPipeline, temperature: f64) -> Result<Self> {
        let lut = match pipeline {
            BinaryPipeline::Spu { config, .. } if config.backend == Backend::Quantized => {
                config.validate(2)?;
                Some(build_lut(temperature, config.p_bits, config.pow2_approx)?)
            }
            _ => None,
        };
        Ok(Self {
            pipeline,
            temperature,
            lut,
        })
    }

    fn distribution(&self, energies: [u8; 2]) -> [f64; 2] {
        let (scaled, fp64) = match self.pipeline {
            BinaryPipeline::Fp64 => (energies, true),
            BinaryPipeline::Spu {
                config,
                dynamic_scaling,
            } => {
                let e = if dynamic_scaling {
                    let s = dynamic_scale(&energies);
                    [s[0], s[1]]
                } else {
                    energies
                };
                (e, config.backend == Backend::Fp64)
            }
        };
        if fp64 || self.lut.is_none() {
            let p = softmax_probabilities(&[scaled[0] as f64, scaled[1] as f64], self.temperature);
            return [p[0], p[1]];
        }
        let lut = self.lut.as_ref().expect("quantized pipeline has a LUT");
        let w = [lut.get(scaled[0]) as f64, lut.get(scaled[1]) as f64];
        let total = w[0] + w[1];
        if total == 0.0 {
            let mut point = [0.0; 2];
            point[argmin_first(&scaled)] = 1.0;
            point
        } else {
            [w[0] / total, w[1] / total]
        }
    }
}

/// The distribution a pipeline samples from for one binary energy pair.
pub fn binary_distribution(
    pipeline: BinaryPipeline,
    energies: [u8; 2],
    temperature: f64,
) -> Result<[f64; 2]> {
    if !(temperature > 0.0) {
        return Err(Error::arg(format!("temperature {temperature} must be > 0")));
    }
    Ok(PreparedPipeline::new(pipeline, temperature)?.distribution(energies))
}

/// JSD for every (E(0), E(1)) in [0,255]^2 at one temperature; cell index
/// is `e0 * 256 + e1`.
#[derive(Debug, Clone, PartialEq)]
pub struct JsdGrid {
    pub temperature: f64,
    values: Vec<f64>,
}

impl JsdGrid {
    pub const SIDE: usize = 256;

    pub fn get(&self, e0: u8, e1: u8) -> f64 {
        self.values[e0 as usize * Self::SIDE + e1 as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Number of cells strictly above `threshold`.
    pub fn count_above(&self, threshold: f64) -> usize {
        self.values.iter().filter(|&&v| v > threshold).count()
    }

    /// Header `e0,e1,jsd`, then one row per cell.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "e0,e1,jsd")?;
        for e0 in 0..Self::SIDE {
            for e1 in 0..Self::SIDE {
                writeln!(out, "{e0},{e1},{}", self.values[e0 * Self::SIDE + e1])?;
            }
        }
        Ok(())
    }
}

/// Sweeps all binary energy inputs comparing pipeline `a` against `b`.
pub fn jsd_sweep(
    a: BinaryPipeline,
    b: BinaryPipeline,
    label_count: usize,
    temperatures: &[f64],
) -> Result<Vec<JsdGrid>> {
    if label_count != 2 {
        return Err(Error::Unsupported(format!(
            "JSD sweep is defined for binary labels only, got {label_count}"
        )));
    }
    temperatures
        .iter()
        .map(|&t| {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::arg(format!("temperature {t} must be > 0")));
            }
            let pa = PreparedPipeline::new(a, t)?;
            let pb = PreparedPipeline::new(b, t)?;
            let mut values = Vec::with_capacity(JsdGrid::SIDE * JsdGrid::SIDE);
            for e0 in 0..=255u8 {
                for e1 in 0..=255u8 {
                    let p = pa.distribution([e0, e1]);
                    let q = pb.distribution([e0, e1]);
                    values.push(jsd_unchecked(&p, &q));
                }
            }
            Ok(JsdGrid {
                temperature: t,
                values,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spu::RngKind;

    fn spu4() -> BinaryPipeline {
        BinaryPipeline::Spu {
            config: SpuConfig::quantized(4, true, RngKind::Lfsr19),
            dynamic_scaling: true,
        }
    }

    #[test]
    fn identical_is_zero() {
        assert_eq!(jsd(&[0.2, 0.3, 0.5], &[0.2, 0.3, 0.5]).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_support_is_ln2() {
        assert!((jsd(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - LN_2).abs() < 1e-15);
    }

    #[test]
    fn zero_entries_stay_finite() {
        let v = jsd(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!(v.is_finite() && v > 0.0 && v < LN_2);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(jsd(&[0.5, 0.4], &[0.5, 0.5]).is_err());
        assert!(jsd(&[1.5, -0.5], &[0.5, 0.5]).is_err());
        assert!(jsd(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn four_bit_truncation_cell() {
        let hw = binary_distribution(spu4(), [0, 3], 1.0).unwrap();
        assert_eq!(hw, [1.0, 0.0]);
        let sw = binary_distribution(BinaryPipeline::Fp64, [0, 3], 1.0).unwrap();
        let expect0 = 1.0 / (1.0 + (-3.0f64).exp());
        assert!((sw[0] - expect0).abs() < 1e-12);
        assert!((sw[0] - 0.9526).abs() < 1e-4);
        let d = jsd(&sw, &hw).unwrap();
        assert!(d > 0.0 && d.is_finite());
    }

    #[test]
    fn unscaled_zero_weights_point_mass_on_argmin() {
        let rsu = BinaryPipeline::Spu {
            config: SpuConfig::quantized(4, true, RngKind::Lfsr19),
            dynamic_scaling: false,
        };
        assert_eq!(binary_distribution(rsu, [40, 30], 1.0).unwrap(), [0.0, 1.0]);
        assert_eq!(binary_distribution(rsu, [30, 30], 1.0).unwrap(), [1.0, 0.0]);
    }

    #[test]
    fn sweep_requires_binary_labels() {
        assert!(matches!(
            jsd_sweep(spu4(), BinaryPipeline::Fp64, 3, &[1.0]),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn diagonal_is_zero_and_csv_shape() {
        let grids = jsd_sweep(spu4(), BinaryPipeline::Fp64, 2, &[1.0]).unwrap();
        let g = &grids[0];
        for e in 0..=255u8 {
            assert_eq!(g.get(e, e), 0.0);
        }
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("e0,e1,jsd"));
        assert_eq!(lines.count(), 65536);
    }
}
