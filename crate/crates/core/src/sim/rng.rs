//! Counter-based per-path random streams.
//!
//! Every path derives its own generator from (seed, stream index), so the
//! draw sequence is a pure function of those two integers and results are
//! bit-identical no matter how paths are distributed across workers.

use std::f64::consts::PI;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix(z: u64) -> u64 {
    let mut z = z;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// splitmix64 stream keyed by (seed, stream).
#[derive(Debug, Clone)]
pub struct PathRng {
    state: u64,
}

impl PathRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        // Two mixing rounds separate nearby (seed, stream) pairs.
        let state = splitmix(splitmix(seed ^ GOLDEN).wrapping_add(stream.wrapping_mul(GOLDEN)));
        Self { state }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        splitmix(self.state)
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }
}

/// Draw source with an antithetic mirror: normals flip sign, uniforms map to
/// their complement.  The mirrored stream has the same marginal law.
#[derive(Debug, Clone)]
pub struct Draws {
    rng: PathRng,
    antithetic: bool,
    spare_normal: Option<f64>,
}

impl Draws {
    pub fn new(seed: u64, stream: u64, antithetic: bool) -> Self {
        Self {
            rng: PathRng::new(seed, stream),
            antithetic,
            spare_normal: None,
        }
    }

    /// Standard normal via Box–Muller.
    #[inline]
    pub fn normal(&mut self) -> f64 {
        let z = if let Some(z) = self.spare_normal.take() {
            z
        } else {
            let u1 = self.rng.uniform();
            let u2 = self.rng.uniform();
            let mag = (-2.0 * u1.ln()).sqrt();
            let (s, c) = (2.0 * PI * u2).sin_cos();
            self.spare_normal = Some(mag * s);
            mag * c
        };
        if self.antithetic {
            -z
        } else {
            z
        }
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        let u = self.rng.uniform();
        if self.antithetic {
            1.0 - u
        } else {
            u
        }
    }
}
