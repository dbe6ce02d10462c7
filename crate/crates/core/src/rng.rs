//! Seeded random streams with a fixed draw contract.
//!
//! Every random quantity in the crate is produced by [`SeedStream`], a
//! ChaCha20 generator keyed from a 64-bit seed and a stream identifier.
//! The mapping from `(seed, stream)` to values is:
//!
//! * key: four consecutive SplitMix64 outputs of `seed`, little-endian;
//! * stream: ChaCha20 stream id `stream`, word position zero;
//! * uniform: `(next_u64 >> 11) * 2^-53`, in `[0, 1)`;
//! * gaussian: Box–Muller on two uniforms `u1, u2`,
//!   `r = sqrt(-2 ln(1 - u1))`, emitting `r cos(2π u2)` then `r sin(2π u2)`;
//! * rademacher: `+1` when the top bit of `next_u64` is clear, else `-1`.
//!
//! The same parameters therefore regenerate the same frequency matrices
//! and dithers in every process, which is what makes sketches built on
//! different machines mergeable.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream identifiers used inside the crate.
pub mod streams {
    pub const DENSE_OPERATOR: u64 = 1;
    pub const STRUCTURED_OPERATOR: u64 = 2;
    pub const DITHER: u64 = 3;
    pub const LAPLACE_NOISE: u64 = 4;
    pub const GAUSSIAN_NOISE: u64 = 5;
    pub const SOLVER: u64 = 6;
    pub const SYNTHETIC: u64 = 7;
    pub const BASELINE: u64 = 8;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct SeedStream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl SeedStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(stream);
        Self { rng, spare: None }
    }

    /// Derives an independent child stream, e.g. one per restart.
    pub fn fork(&mut self, stream: u64) -> Self {
        Self::new(self.next_u64(), stream)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    pub fn rademacher(&mut self) -> f64 {
        if self.next_u64() >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Uniform index in `0..n`; `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    /// Standard Laplace draw (scale 1) by inverse CDF.
    pub fn laplace(&mut self) -> f64 {
        let u = self.uniform() - 0.5;
        let mag = -(1.0 - 2.0 * u.abs()).ln();
        if u < 0.0 {
            -mag
        } else {
            mag
        }
    }

    /// χ draw with `dof` degrees of freedom as the norm of a Gaussian vector.
    pub fn chi(&mut self, dof: usize) -> f64 {
        (0..dof)
            .map(|_| {
                let g = self.gaussian();
                g * g
            })
            .sum::<f64>()
            .sqrt()
    }
}
