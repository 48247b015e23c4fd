//! Seeded, splittable random streams.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream `stream` of the generator keyed by `seed`. Distinct streams are
/// independent ChaCha keystreams, so replications can run in any order.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

/// Uniform on the open interval (0, 1), 53 bits of resolution.
pub fn open_unit(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * TWO_POW_NEG_53
}

/// Standard normal variates by the Box-Muller transform: exactly two
/// uniforms per pair of normals, no rejection loop.
pub struct Normals<R> {
    rng: R,
    spare: Option<f64>,
}

impl<R: RngCore> Normals<R> {
    pub fn new(rng: R) -> Self {
        Self { rng, spare: None }
    }

    pub fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = open_unit(&mut self.rng);
        let u2 = open_unit(&mut self.rng);
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = self.next());
    }
}
