/// xorshift64* generator.
///
/// The state is `seed ^ 0x9E3779B97F4A7C15` (or the constant itself when
/// that is zero). Each draw applies `x ^= x >> 12; x ^= x << 25;
/// x ^= x >> 27` to the state and returns `x * 0x2545F4914F6CDD1D` (wrapping).
/// An index below `n` is `next_u64() % n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XorShift64Star {
    state: u64,
}

const SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;
const MULTIPLIER: u64 = 0x2545_F491_4F6C_DD1D;

impl XorShift64Star {
    pub fn new(seed: u64) -> Self {
        let state = match seed ^ SEED_MIX {
            0 => SEED_MIX,
            s => s,
        };
        Self { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(MULTIPLIER)
    }

    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "cannot draw from an empty range");
        (self.next_u64() % n as u64) as usize
    }
}
