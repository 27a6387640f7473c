//! Stereo model construction and seeded synthetic problem instances.

use serde::{Deserialize, Serialize};

use super::{GrayImage, GridModel, LabelField, Pairwise};
use crate::rng::ReferenceRng;
use crate::{Error, Result};

/// Stereo matching model: singleton(v=(x,y), d) = |left(x,y) - right(x-d,y)|
/// with out-of-frame columns clamped to 0, Potts smoothness.
pub fn build_stereo_model(
    left: &GrayImage,
    right: &GrayImage,
    labels: usize,
    alpha: f64,
    beta: f64,
) -> Result<GridModel> {
    if left.width() != right.width() || left.height() != right.height() {
        return Err(Error::arg(format!(
            "stereo pair dimensions differ: {}x{} vs {}x{}",
            left.width(),
            left.height(),
            right.width(),
            right.height()
        )));
    }
    if labels > left.width() {
        return Err(Error::arg(format!(
            "{labels} disparities exceed image width {}",
            left.width()
        )));
    }
    let (w, h) = (left.width(), left.height());
    let mut singleton = Vec::with_capacity(w * h * labels);
    for y in 0..h {
        for x in 0..w {
            let l = left.get(x, y) as i32;
            for d in 0..labels {
                let r = right.get(x.saturating_sub(d), y) as i32;
                singleton.push((l - r).abs().clamp(0, 255) as f64);
            }
        }
    }
    GridModel::new(w, h, labels, alpha, beta, singleton, Pairwise::Potts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticKind {
    TwoLabelDenoise,
    ShiftedStereo,
}

impl std::str::FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-label-denoise" => Ok(Self::TwoLabelDenoise),
            "shifted-stereo" => Ok(Self::ShiftedStereo),
            other => Err(Error::arg(format!("unknown synthetic kind {other:?}"))),
        }
    }
}

fn default_noise() -> f64 {
    0.1
}
fn default_alpha() -> f64 {
    2.0
}
fn default_beta() -> f64 {
    1.0
}
fn default_stereo_labels() -> usize {
    4
}
fn default_shift() -> usize {
    2
}

/// Parameters of a synthetic instance; `labels` and `shift` only apply to
/// `shifted-stereo`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub size: usize,
    pub seed: u64,
    #[serde(default = "default_noise")]
    pub noise: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_stereo_labels")]
    pub labels: usize,
    #[serde(default = "default_shift")]
    pub shift: usize,
}

impl SyntheticSpec {
    pub fn new(kind: SyntheticKind, size: usize, seed: u64) -> Self {
        Self {
            kind,
            size,
            seed,
            noise: default_noise(),
            alpha: default_alpha(),
            beta: default_beta(),
            labels: default_stereo_labels(),
            shift: default_shift(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub model: GridModel,
    pub ground_truth: LabelField,
    /// Denoise: the noisy observation. Stereo: `[left, right]`.
    pub images: Vec<GrayImage>,
}

pub fn build_synthetic_model(spec: &SyntheticSpec) -> Result<SyntheticInstance> {
    if spec.size < 8 {
        return Err(Error::arg(format!("size {} below minimum 8", spec.size)));
    }
    if !(0.0..=1.0).contains(&spec.noise) {
        return Err(Error::arg(format!(
            "noise rate {} outside [0, 1]",
            spec.noise
        )));
    }
    match spec.kind {
        SyntheticKind::TwoLabelDenoise => denoise(spec),
        SyntheticKind::ShiftedStereo => stereo(spec),
    }
}

fn denoise(spec: &SyntheticSpec) -> Result<SyntheticInstance> {
    let n = spec.size;
    let mut rng = ReferenceRng::new(spec.seed);
    let mut truth = vec![0u16; n * n];
    for _ in 0..3 {
        let w = n / 4 + rng.below(n / 4 + 1);
        let h = n / 4 + rng.below(n / 4 + 1);
        let x0 = rng.below(n - w + 1);
        let y0 = rng.below(n - h + 1);
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                truth[y * n + x] = 1;
            }
        }
    }
    let observed: Vec<u16> = truth
        .iter()
        .map(|&t| if rng.uniform() < spec.noise { 1 - t } else { t })
        .collect();
    let singleton = observed
        .iter()
        .flat_map(|&o| (0..2u16).map(move |l| if l == o { 0.0 } else { 1.0 }))
        .collect();
    let model = GridModel::new(n, n, 2, spec.alpha, spec.beta, singleton, Pairwise::Potts)?;
    let image = GrayImage::new(n, n, observed.iter().map(|&o| o as u8 * 255).collect())?;
    Ok(SyntheticInstance {
        model,
        ground_truth: LabelField::new(n, n, truth)?,
        images: vec![image],
    })
}

fn stereo(spec: &SyntheticSpec) -> Result<SyntheticInstance> {
    let n = spec.size;
    if spec.labels < 2 || spec.shift >= spec.labels {
        return Err(Error::arg(format!(
            "shift {} must be below label count {} (>= 2)",
            spec.shift, spec.labels
        )));
    }
    let mut rng = ReferenceRng::new(spec.seed);
    let right: Vec<u8> = (0..n * n).map(|_| rng.below(256) as u8).collect();
    let mut left = vec![0u8; n * n];
    for y in 0..n {
        for x in 0..n {
            let src = right[y * n + x.saturating_sub(spec.shift)];
            left[y * n + x] = if rng.uniform() < spec.noise {
                rng.below(256) as u8
            } else {
                src
            };
        }
    }
    let left = GrayImage::new(n, n, left)?;
    let right = GrayImage::new(n, n, right)?;
    let model = build_stereo_model(&left, &right, spec.labels, spec.alpha, spec.beta)?;
    Ok(SyntheticInstance {
        model,
        ground_truth: LabelField::filled(n, n, spec.shift as u16),
        images: vec![left, right],
    })
}
