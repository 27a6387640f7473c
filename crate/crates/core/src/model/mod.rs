//! First-order (4-connected) MRF model used by every sampler.

mod pgm;
mod synth;

pub use pgm::{decode_pgm, encode_pgm, load_pgm, save_pgm, GrayImage};
pub use synth::{
    build_stereo_model, build_synthetic_model, SyntheticInstance, SyntheticKind, SyntheticSpec,
};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Smoothness term between a variable's label and one neighbor's label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairwise {
    /// 0 if the labels agree, 1 otherwise.
    Potts,
    /// Dense symmetric `L x L` table, row-major.
    Table(Vec<f64>),
}

impl Pairwise {
    #[inline]
    pub fn cost(&self, labels: usize, a: usize, b: usize) -> f64 {
        match self {
            Pairwise::Potts => {
                if a == b {
                    0.0
                } else {
                    1.0
                }
            }
            Pairwise::Table(t) => t[a * labels + b],
        }
    }

    fn validate(&self, labels: usize) -> Result<()> {
        if let Pairwise::Table(t) = self {
            if t.len() != labels * labels {
                return Err(Error::arg(format!(
                    "pairwise table has {} entries, expected {}",
                    t.len(),
                    labels * labels
                )));
            }
            for a in 0..labels {
                for b in 0..labels {
                    let v = t[a * labels + b];
                    if !v.is_finite() || v < 0.0 {
                        return Err(Error::arg("pairwise entries must be finite and >= 0"));
                    }
                    if v != t[b * labels + a] {
                        return Err(Error::arg(format!(
                            "pairwise table is not symmetric at ({a}, {b})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GridModelRepr {
    width: usize,
    height: usize,
    labels: usize,
    alpha: f64,
    beta: f64,
    pairwise: Pairwise,
    singleton: Vec<f64>,
}

/// Immutable MRF instance: lattice size, label space, energy weights and
/// per-variable singleton energies (indexed `var * labels + label`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridModelRepr", into = "GridModelRepr")]
pub struct GridModel {
    width: usize,
    height: usize,
    labels: usize,
    alpha: f64,
    beta: f64,
    pairwise: Pairwise,
    singleton: Vec<f64>,
}

impl TryFrom<GridModelRepr> for GridModel {
    type Error = Error;

    fn try_from(r: GridModelRepr) -> Result<Self> {
        GridModel::new(
            r.width,
            r.height,
            r.labels,
            r.alpha,
            r.beta,
            r.singleton,
            r.pairwise,
        )
    }
}

impl From<GridModel> for GridModelRepr {
    fn from(m: GridModel) -> Self {
        GridModelRepr {
            width: m.width,
            height: m.height,
            labels: m.labels,
            alpha: m.alpha,
            beta: m.beta,
            pairwise: m.pairwise,
            singleton: m.singleton,
        }
    }
}

impl GridModel {
    pub fn new(
        width: usize,
        height: usize,
        labels: usize,
        alpha: f64,
        beta: f64,
        singleton: Vec<f64>,
        pairwise: Pairwise,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::arg("grid must have at least one variable"));
        }
        if labels < 2 || labels > u16::MAX as usize {
            return Err(Error::arg(format!("label count {labels} out of range")));
        }
        if !(alpha.is_finite() && alpha >= 0.0 && beta.is_finite() && beta >= 0.0) {
            return Err(Error::arg("alpha and beta must be finite and >= 0"));
        }
        if singleton.len() != width * height * labels {
            return Err(Error::arg(format!(
                "singleton table has {} entries, expected {}",
                singleton.len(),
                width * height * labels
            )));
        }
        if let Some(i) = singleton.iter().position(|e| !e.is_finite() || *e < 0.0) {
            return Err(Error::arg(format!(
                "singleton entry {i} is negative or not finite"
            )));
        }
        pairwise.validate(labels)?;
        Ok(Self {
            width,
            height,
            labels,
            alpha,
            beta,
            pairwise,
            singleton,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn variables(&self) -> usize {
        self.width * self.height
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn pairwise(&self) -> &Pairwise {
        &self.pairwise
    }

    pub fn singleton(&self, var: usize, label: usize) -> f64 {
        self.singleton[var * self.labels + label]
    }

    /// In-bounds 4-connected neighbors of `var` (up, left, right, down).
    pub fn neighbors(&self, var: usize) -> impl Iterator<Item = usize> {
        let (w, h) = (self.width, self.height);
        let (x, y) = (var % w, var / w);
        let up = (y > 0).then(|| var - w);
        let left = (x > 0).then(|| var - 1);
        let right = (x + 1 < w).then(|| var + 1);
        let down = (y + 1 < h).then(|| var + w);
        [up, left, right, down].into_iter().flatten()
    }

    /// α·E_singleton(var, label) + β·Σ pairwise(label, neighbor label).
    pub fn total_energy(&self, state: &LabelField, var: usize, label: usize) -> Result<f64> {
        if var >= self.variables() {
            return Err(Error::arg(format!(
                "variable {var} out of range (0..{})",
                self.variables()
            )));
        }
        if label >= self.labels {
            return Err(Error::arg(format!(
                "label {label} out of range (0..{})",
                self.labels
            )));
        }
        self.check_field(state)?;
        Ok(self.energy_unchecked(state.as_slice(), var, label))
    }

    #[inline]
    pub(crate) fn energy_unchecked(&self, state: &[u16], var: usize, label: usize) -> f64 {
        let smooth: f64 = self
            .neighbors(var)
            .map(|n| self.pairwise.cost(self.labels, label, state[n] as usize))
            .sum();
        self.alpha * self.singleton[var * self.labels + label] + self.beta * smooth
    }

    /// Energies of every label of `var` given the current state.
    pub(crate) fn label_energies(&self, state: &[u16], var: usize, out: &mut [f64]) {
        for (label, e) in out.iter_mut().enumerate() {
            *e = self.energy_unchecked(state, var, label);
        }
    }

    pub(crate) fn check_field(&self, field: &LabelField) -> Result<()> {
        if field.width != self.width || field.height != self.height {
            return Err(Error::arg(format!(
                "label field is {}x{}, model is {}x{}",
                field.width, field.height, self.width, self.height
            )));
        }
        if let Some(&l) = field.labels.iter().find(|&&l| l as usize >= self.labels) {
            return Err(Error::arg(format!("label {l} out of range for model")));
        }
        Ok(())
    }
}

/// One label per variable, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelField {
    width: usize,
    height: usize,
    labels: Vec<u16>,
}

impl LabelField {
    pub fn new(width: usize, height: usize, labels: Vec<u16>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::arg(format!(
                "label field has {} entries, expected {}x{}",
                labels.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn filled(width: usize, height: usize, label: u16) -> Self {
        Self {
            width,
            height,
            labels: vec![label; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, var: usize) -> u16 {
        self.labels[var]
    }

    pub fn as_slice(&self) -> &[u16] {
        &self.labels
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [u16] {
        &mut self.labels
    }

    pub fn same_shape(&self, other: &LabelField) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Grayscale rendering with labels spread over 0..=255.
    pub fn to_image(&self, label_count: usize) -> GrayImage {
        let top = (label_count.max(2) - 1) as u32;
        let pixels = self
            .labels
            .iter()
            .map(|&l| ((l as u32).min(top) * 255 / top) as u8)
            .collect();
        GrayImage::new(self.width, self.height, pixels).expect("dimensions match")
    }
}
