use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::metrics::{BinaryPipeline, DEFAULT_RHAT_THRESHOLD};
use crate::model::{
    build_stereo_model, build_synthetic_model, load_pgm, GridModel, LabelField, SyntheticSpec,
};
use crate::reference::{geometric_decay, Mode, RunConfig, DEFAULT_T0, DEFAULT_T_FINAL};
use crate::spu::{RngKind, SpuConfig};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Named pipeline configurations explored by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignPoint {
    Fp64,
    Spu,
    P4a,
    P6a,
    P8a,
    P4,
    P6,
    P8,
    Pd,
}

impl DesignPoint {
    pub const ALL: [DesignPoint; 9] = [
        DesignPoint::Fp64,
        DesignPoint::Spu,
        DesignPoint::P4a,
        DesignPoint::P6a,
        DesignPoint::P8a,
        DesignPoint::P4,
        DesignPoint::P6,
        DesignPoint::P8,
        DesignPoint::Pd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DesignPoint::Fp64 => "fp64",
            DesignPoint::Spu => "spu",
            DesignPoint::P4a => "p4a",
            DesignPoint::P6a => "p6a",
            DesignPoint::P8a => "p8a",
            DesignPoint::P4 => "p4",
            DesignPoint::P6 => "p6",
            DesignPoint::P8 => "p8",
            DesignPoint::Pd => "pd",
        }
    }

    /// Pipeline configuration, or `None` for the FP64 reference sampler.
    pub fn spu_config(self) -> Option<SpuConfig> {
        use RngKind::*;
        Some(match self {
            DesignPoint::Fp64 => return None,
            DesignPoint::Spu => SpuConfig::quantized(4, true, Lfsr19),
            DesignPoint::P4a => SpuConfig::quantized(4, true, Fp64Uniform),
            DesignPoint::P6a => SpuConfig::quantized(6, true, Fp64Uniform),
            DesignPoint::P8a => SpuConfig::quantized(8, true, Fp64Uniform),
            DesignPoint::P4 => SpuConfig::quantized(4, false, Fp64Uniform),
            DesignPoint::P6 => SpuConfig::quantized(6, false, Fp64Uniform),
            DesignPoint::P8 => SpuConfig::quantized(8, false, Fp64Uniform),
            DesignPoint::Pd => SpuConfig::fp64_backend(),
        })
    }

    pub fn binary_pipeline(self, dynamic_scaling: bool) -> BinaryPipeline {
        match self.spu_config() {
            None => BinaryPipeline::Fp64,
            Some(config) => BinaryPipeline::Spu {
                config,
                dynamic_scaling,
            },
        }
    }
}

impl std::fmt::Display for DesignPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DesignPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DesignPoint::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::arg(format!("unknown design point {s:?}")))
    }
}

/// Stereo pair loaded from PGM files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StereoSource {
    pub left: PathBuf,
    pub right: PathBuf,
    pub labels: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Optional disparity map; label = pixel / `ground_truth_scale`, rounded.
    #[serde(default)]
    pub ground_truth: Option<PathBuf>,
    #[serde(default = "one")]
    pub ground_truth_scale: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSource {
    Synthetic(SyntheticSpec),
    Stereo(StereoSource),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    Sampling,
    Optimization,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    #[serde(default = "default_t0")]
    pub t0: f64,
    /// Defaults to the decay reaching T = 0.1 at the last iteration.
    #[serde(default)]
    pub decay: Option<f64>,
}

fn default_t0() -> f64 {
    DEFAULT_T0
}
fn default_runs() -> usize {
    10
}
fn default_ess_window() -> usize {
    1000
}
fn default_rhat() -> f64 {
    DEFAULT_RHAT_THRESHOLD
}
fn default_burn_in() -> f64 {
    0.5
}
fn default_dataset() -> String {
    "synthetic".into()
}

/// JSON experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub schema_version: u32,
    #[serde(default = "default_dataset")]
    pub dataset: String,
    pub model: ModelSource,
    pub design_points: Vec<DesignPoint>,
    pub mode: ModeKind,
    pub iterations: usize,
    /// Sampling temperature (default 1).
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default)]
    pub schedule: Option<ScheduleSpec>,
    /// Independent chains for the convergence diagnostic.
    #[serde(default = "default_runs")]
    pub chains: usize,
    /// Runs for ESS and RMSE statistics.
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_ess_window")]
    pub ess_window: usize,
    #[serde(default = "default_rhat")]
    pub rhat_threshold: f64,
    #[serde(default = "default_burn_in")]
    pub burn_in_fraction: f64,
}

impl ExperimentSpec {
    /// Reads and validates a spec; relative model paths resolve against the
    /// spec file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut spec: ExperimentSpec = serde_json::from_str(&text)?;
        if let ModelSource::Stereo(s) = &mut spec.model {
            let base = path.parent().unwrap_or(Path::new("."));
            for p in [&mut s.left, &mut s.right]
                .into_iter()
                .chain(s.ground_truth.as_mut())
            {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return fail(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.design_points.is_empty() {
            return fail("design_points is empty".into());
        }
        let mut seen = self.design_points.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.design_points.len() {
            return fail("design_points contains duplicates".into());
        }
        if self.chains < 2 {
            return fail(format!("chains = {} but R̂ needs at least 2", self.chains));
        }
        if self.runs < 1 {
            return fail("runs must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return fail(format!(
                "burn_in_fraction {} outside [0, 1)",
                self.burn_in_fraction
            ));
        }
        if self.retained() < 4 {
            return fail(format!(
                "only {} iterations remain after burn-in; at least 4 are required",
                self.retained()
            ));
        }
        if self.ess_window < 4 {
            return fail("ess_window must be at least 4".into());
        }
        if !(self.rhat_threshold > 1.0) {
            return fail(format!(
                "rhat_threshold {} must exceed 1",
                self.rhat_threshold
            ));
        }
        match self.mode {
            ModeKind::Sampling if self.schedule.is_some() => {
                return fail("schedule only applies to optimization mode".into())
            }
            ModeKind::Optimization if self.temperature.is_some() => {
                return fail("temperature only applies to sampling mode; use schedule".into())
            }
            _ => {}
        }
        self.run_config(self.base_seed).validate()
    }

    pub fn burn_in(&self) -> usize {
        (self.iterations as f64 * self.burn_in_fraction).floor() as usize
    }

    pub fn retained(&self) -> usize {
        self.iterations.saturating_sub(self.burn_in())
    }

    /// Total runs per design point: enough for both chains and runs.
    pub fn total_runs(&self) -> usize {
        self.chains.max(self.runs)
    }

    pub fn seed_for(&self, run: usize) -> u64 {
        self.base_seed.wrapping_add(run as u64)
    }

    pub fn run_config(&self, seed: u64) -> RunConfig {
        let mode = match self.mode {
            ModeKind::Sampling => Mode::Sampling {
                temperature: self.temperature.unwrap_or(1.0),
            },
            ModeKind::Optimization => {
                let s = self.schedule.unwrap_or(ScheduleSpec {
                    t0: DEFAULT_T0,
                    decay: None,
                });
                Mode::Optimization {
                    t0: s.t0,
                    decay: s
                        .decay
                        .unwrap_or_else(|| geometric_decay(s.t0, DEFAULT_T_FINAL, self.iterations)),
                }
            }
        };
        RunConfig {
            mode,
            iterations: self.iterations,
            seed,
            collect_last: self.retained(),
        }
    }

    /// Design points in report order; the FP64 baseline is always first.
    pub fn report_points(&self) -> Vec<DesignPoint> {
        let mut points = self.design_points.clone();
        if !points.contains(&DesignPoint::Fp64) {
            points.insert(0, DesignPoint::Fp64);
        }
        points
    }

    pub fn build_model(&self) -> Result<(GridModel, Option<LabelField>)> {
        match &self.model {
            ModelSource::Synthetic(s) => {
                let inst = build_synthetic_model(s)?;
                Ok((inst.model, Some(inst.ground_truth)))
            }
            ModelSource::Stereo(s) => {
                let left = load_pgm(&s.left)?;
                let right = load_pgm(&s.right)?;
                let model = build_stereo_model(&left, &right, s.labels, s.alpha, s.beta)?;
                let truth = match &s.ground_truth {
                    None => None,
                    Some(p) => {
                        let img = load_pgm(p)?;
                        if img.width() != model.width() || img.height() != model.height() {
                            return Err(Error::arg("ground truth dimensions differ from the pair"));
                        }
                        let labels = img
                            .pixels()
                            .iter()
                            .map(|&px| {
                                ((px as f64 / s.ground_truth_scale).round() as usize)
                                    .min(s.labels - 1) as u16
                            })
                            .collect();
                        Some(LabelField::new(img.width(), img.height(), labels)?)
                    }
                };
                Ok((model, truth))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SyntheticKind;

    pub(crate) fn sample_spec() -> ExperimentSpec {
        ExperimentSpec {
            schema_version: 1,
            dataset: "t".into(),
            model: ModelSource::Synthetic(SyntheticSpec::new(SyntheticKind::TwoLabelDenoise, 8, 1)),
            design_points: vec![DesignPoint::Fp64, DesignPoint::P4],
            mode: ModeKind::Sampling,
            iterations: 20,
            temperature: Some(1.0),
            schedule: None,
            chains: 2,
            runs: 3,
            base_seed: 5,
            ess_window: 1000,
            rhat_threshold: 1.1,
            burn_in_fraction: 0.5,
        }
    }

    #[test]
    fn design_point_expansion() {
        let spu = DesignPoint::Spu.spu_config().unwrap();
        assert_eq!(
            (spu.p_bits, spu.pow2_approx, spu.rng),
            (4, true, RngKind::Lfsr19)
        );
        let p6a = DesignPoint::P6a.spu_config().unwrap();
        assert_eq!(
            (p6a.p_bits, p6a.pow2_approx, p6a.rng),
            (6, true, RngKind::Fp64Uniform)
        );
        let p8 = DesignPoint::P8.spu_config().unwrap();
        assert_eq!((p8.p_bits, p8.pow2_approx), (8, false));
        assert_eq!(
            DesignPoint::Pd.spu_config().unwrap().backend,
            crate::Backend::Fp64
        );
        assert!(DesignPoint::Fp64.spu_config().is_none());
        for d in DesignPoint::ALL {
            assert_eq!(d.name().parse::<DesignPoint>().unwrap(), d);
            assert_eq!(
                serde_json::to_string(&d).unwrap(),
                format!("\"{}\"", d.name())
            );
        }
    }

    #[test]
    fn protocol_derivations() {
        let s = sample_spec();
        assert!(s.validate().is_ok());
        assert_eq!((s.burn_in(), s.retained(), s.total_runs()), (10, 10, 3));
        assert_eq!(s.run_config(9).collect_last, 10);
        assert_eq!(s.report_points()[0], DesignPoint::Fp64);
    }

    #[test]
    fn validation_failures() {
        let mut s = sample_spec();
        s.chains = 1;
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let mut s = sample_spec();
        s.schema_version = 2;
        assert!(s.validate().is_err());
        let mut s = sample_spec();
        s.design_points.push(DesignPoint::P4);
        assert!(s.validate().is_err());
        let mut s = sample_spec();
        s.iterations = 6;
        assert!(s.validate().is_err());
        let mut s = sample_spec();
        s.schedule = Some(ScheduleSpec {
            t0: 10.0,
            decay: None,
        });
        assert!(s.validate().is_err());
    }

    #[test]
    fn optimization_default_schedule() {
        let mut s = sample_spec();
        s.mode = ModeKind::Optimization;
        s.temperature = None;
        let rc = s.run_config(0);
        assert_eq!(rc.temperature_at(0), 10.0);
        assert!((rc.temperature_at(20) - 0.1).abs() < 1e-9);
    }

    #[test]
    fn json_rejects_unknown_fields() {
        let s = sample_spec();
        let mut v = serde_json::to_value(&s).unwrap();
        v["bogus"] = serde_json::json!(1);
        assert!(serde_json::from_value::<ExperimentSpec>(v).is_err());
        let back: ExperimentSpec =
            serde_json::from_value(serde_json::to_value(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
