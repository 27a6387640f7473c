use crate::{Error, Result};

pub const LFSR_BITS: u32 = 19;
pub const LFSR_MASK: u32 = (1 << LFSR_BITS) - 1;
pub const LFSR_PERIOD: u32 = LFSR_MASK;
pub const SAMPLE_BITS: u32 = 12;
pub const SAMPLE_MASK: u16 = (1 << SAMPLE_BITS) - 1;

/// 19-bit Fibonacci LFSR, polynomial x^19 + x^18 + x^17 + x^14 + 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lfsr19 {
    state: u32,
}

impl Lfsr19 {
    pub fn new(state: u32) -> Result<Self> {
        let state = state & LFSR_MASK;
        if state == 0 {
            return Err(Error::arg("LFSR state must be nonzero"));
        }
        Ok(Self { state })
    }

    /// Maps any 64-bit seed onto a nonzero 19-bit state.
    pub fn from_seed(seed: u64) -> Self {
        Self {
            state: (seed % LFSR_PERIOD as u64) as u32 + 1,
        }
    }

    pub fn state(&self) -> u32 {
        self.state
    }

    /// Advances one step and returns the low 12 bits of the new state.
    #[inline]
    pub fn next_sample(&mut self) -> u16 {
        let s = self.state;
        // taps 19, 18, 17, 14 -> bit indices 18, 17, 16, 13
        let feedback = ((s >> 18) ^ (s >> 17) ^ (s >> 16) ^ (s >> 13)) & 1;
        self.state = ((s << 1) | feedback) & LFSR_MASK;
        (self.state as u16) & SAMPLE_MASK
    }
}
