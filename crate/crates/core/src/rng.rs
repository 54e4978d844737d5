//! Deterministic 64-bit generator with a fixed draw-order contract.
//!
//! The generator is splitmix64. It is a pure function of the seed, constant
//! time per draw, and trivial to reimplement, which keeps independently
//! written backends bit-comparable as long as they consume draws in the same
//! documented order. Every public method consumes exactly one `next_u64`
//! call, and the instance counts its draws so tests can assert per-step draw
//! budgets.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX2: u64 = 0x94D0_49BB_1331_11EB;
/// 2^-53; maps the top 53 bits of a draw onto [0, 1).
const UNIT: f64 = 1.0 / 9_007_199_254_740_992.0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    state: u64,
    draws: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            state: seed,
            draws: 0,
        }
    }

    /// Next raw output of the splitmix64 recurrence.
    pub fn next_u64(&mut self) -> u64 {
        self.draws += 1;
        self.state = self.state.wrapping_add(GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(MIX1);
        z = (z ^ (z >> 27)).wrapping_mul(MIX2);
        z ^ (z >> 31)
    }

    /// Uniform real in [0, 1). One draw.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * UNIT
    }

    /// Uniform integer in [0, n) via the multiply-high mapping. One draw,
    /// unconditionally, so streams stay aligned across backends; the bias is
    /// negligible for n well below 2^64.
    ///
    /// # Panics
    /// Panics if `n` is zero.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n >= 1, "below(n) requires n >= 1");
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Number of `next_u64` calls consumed so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent restatement of the recurrence, kept deliberately separate
    /// from `Rng` so the two can disagree if either drifts.
    fn reference_stream(seed: u64, len: usize) -> Vec<u64> {
        let mut state = seed as u128;
        let mask: u128 = (1u128 << 64) - 1;
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            state = (state + 0x9E37_79B9_7F4A_7C15) & mask;
            let mut z = state;
            z = ((z ^ (z >> 30)) * 0xBF58_476D_1CE4_E5B9) & mask;
            z = ((z ^ (z >> 27)) * 0x94D0_49BB_1331_11EB) & mask;
            out.push(((z ^ (z >> 31)) & mask) as u64);
        }
        out
    }

    #[test]
    fn matches_reference_implementation() {
        for seed in [0u64, 1, 1u64 << 63] {
            let mut rng = Rng::new(seed);
            let expect = reference_stream(seed, 1000);
            for (i, &e) in expect.iter().enumerate() {
                assert_eq!(rng.next_u64(), e, "seed {seed}, draw {i}");
            }
        }
    }

    #[test]
    fn frozen_first_outputs() {
        // Cross-checked against an external evaluation of the recurrence.
        let mut rng = Rng::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(rng.next_u64(), 0x06C4_5D18_8009_454F);
        let mut rng = Rng::new(1);
        assert_eq!(rng.next_u64(), 0x910A_2DEC_8902_5CC1);
    }

    #[test]
    fn seeds_zero_and_one_differ() {
        assert_ne!(Rng::new(0).next_u64(), Rng::new(1).next_u64());
    }

    #[test]
    fn uniform_stays_in_unit_interval() {
        let mut rng = Rng::new(7);
        for _ in 0..1_000_000 {
            let u = rng.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn uniform_empirical_mean() {
        let mut rng = Rng::new(12345);
        let mean = (0..1_000_000).map(|_| rng.uniform()).sum::<f64>() / 1e6;
        assert!((0.498..=0.502).contains(&mean), "mean {mean}");
    }

    #[test]
    fn below_one_is_zero() {
        let mut rng = Rng::new(99);
        for _ in 0..100 {
            assert_eq!(rng.below(1), 0);
        }
    }

    #[test]
    fn below_matches_multiply_high_mapping() {
        let mut rng = Rng::new(42);
        let raw = reference_stream(42, 4);
        for &r in &raw {
            assert_eq!(rng.below(10), ((r as u128 * 10) >> 64) as u64);
        }
    }

    #[test]
    #[should_panic(expected = "n >= 1")]
    fn below_zero_panics() {
        Rng::new(0).below(0);
    }

    #[test]
    fn draw_counter() {
        let mut rng = Rng::new(3);
        rng.next_u64();
        rng.uniform();
        rng.below(5);
        assert_eq!(rng.draws(), 3);
    }
}
