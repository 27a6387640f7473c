use crate::{Error, Result};

/// Rounds a real energy to an 8-bit unsigned integer, saturating at 0 and 255.
#[inline]
pub fn quantize_energy(energy: f64) -> u8 {
    energy.round().clamp(0.0, 255.0) as u8
}

/// E_s(i) = E(i) - min_j E(j); at least one output is zero.
pub fn dynamic_scale(energies: &[u8]) -> Vec<u8> {
    let mut out = vec![0; energies.len()];
    dynamic_scale_into(energies, &mut out);
    out
}

pub(crate) fn dynamic_scale_into(energies: &[u8], out: &mut [u8]) {
    let min = energies.iter().copied().min().unwrap_or(0);
    for (o, &e) in out.iter_mut().zip(energies) {
        *o = e.saturating_sub(min);
    }
}

pub fn validate_p_bits(p_bits: u32) -> Result<()> {
    match p_bits {
        4 | 6 | 8 => Ok(()),
        other => Err(Error::Config(format!(
            "probability width {other} not in {{4, 6, 8}}"
        ))),
    }
}

/// Scaled-energy to truncated-probability table for one temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbLut {
    p_bits: u32,
    pow2_approx: bool,
    temperature: f64,
    entries: [u16; 256],
}

impl ProbLut {
    pub fn p_bits(&self) -> u32 {
        self.p_bits
    }

    pub fn pow2_approx(&self) -> bool {
        self.pow2_approx
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn entries(&self) -> &[u16; 256] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, scaled_energy: u8) -> u16 {
        self.entries[scaled_energy as usize]
    }
}

/// p_s = (2^P - 1) exp(-E_s / T); the entry is floor(p_s), or the largest
/// power of two not above p_s with `pow2_approx`. Either way p_s < 1 gives 0.
pub fn build_lut(temperature: f64, p_bits: u32, pow2_approx: bool) -> Result<ProbLut> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::Config(format!(
            "temperature {temperature} must be > 0"
        )));
    }
    validate_p_bits(p_bits)?;
    let full_scale = ((1u32 << p_bits) - 1) as f64;
    let mut entries = [0u16; 256];
    for (e_s, entry) in entries.iter_mut().enumerate() {
        let p_s = full_scale * (-(e_s as f64) / temperature).exp();
        let truncated = p_s.floor() as u16;
        *entry = if pow2_approx && truncated > 0 {
            1 << (15 - truncated.leading_zeros())
        } else {
            truncated
        };
    }
    Ok(ProbLut {
        p_bits,
        pow2_approx,
        temperature,
        entries,
    })
}
