//! Reference random source: 64-bit Mersenne Twister (MT19937-64).

use rand_mt::Mt64;

/// Seedable high-quality uniform source shared by the FP64 reference and
/// every design point that replaces the LFSR with a floating-point sampler.
#[derive(Clone)]
pub struct ReferenceRng {
    inner: Mt64,
}

impl ReferenceRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Mt64::new(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in [0, 1) from the top 53 bits of one 64-bit draw.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n), computed as floor(u * n).
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }
}

impl std::fmt::Debug for ReferenceRng {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ReferenceRng(Mt64)")
    }
}
