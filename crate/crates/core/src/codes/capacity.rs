//! BPSK constellation-constrained capacity `C(gamma)` and its inverse.

use std::sync::LazyLock;

use crate::numeric::{bisect, gauss_hermite};
use crate::{Error, Result};

pub const DEFAULT_QUADRATURE_ORDER: usize = 64;

/// `C(gamma) = 1 - E[log2(1 + exp(-2 y sqrt(gamma)))]` with
/// `y ~ Normal(sqrt(gamma), 1)`, evaluated by Gauss–Hermite quadrature.
#[derive(Debug, Clone)]
pub struct ConstellationCapacity {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

static DEFAULT_BPSK: LazyLock<ConstellationCapacity> =
    LazyLock::new(|| ConstellationCapacity::bpsk(DEFAULT_QUADRATURE_ORDER));

/// `log2(1 + e^{-t})` without overflow for either sign of `t`.
fn log2_1p_exp_neg(t: f64) -> f64 {
    let nats = if t > 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    };
    nats / std::f64::consts::LN_2
}

impl ConstellationCapacity {
    pub fn bpsk(order: usize) -> Self {
        let (x, w) = gauss_hermite(order);
        let norm = std::f64::consts::PI.sqrt();
        Self {
            nodes: x.iter().map(|x| x * std::f64::consts::SQRT_2).collect(),
            weights: w.iter().map(|w| w / norm).collect(),
        }
    }

    /// Shared instance with the default quadrature order.
    pub fn default_bpsk() -> &'static Self {
        &DEFAULT_BPSK
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Capacity in bits per channel use; `C(0) = 0` exactly.
    pub fn capacity(&self, gamma: f64) -> f64 {
        if gamma <= 0.0 {
            return 0.0;
        }
        let s = gamma.sqrt();
        let loss: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(z, w)| w * log2_1p_exp_neg(2.0 * s * (s + z)))
            .sum();
        (1.0 - loss).max(0.0)
    }

    /// Smallest `gamma` with `C(gamma) = c`, for `c` in `[0, 1)`.
    pub fn inverse(&self, c: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&c) {
            return Err(Error::Domain(format!("capacity inverse needs c in [0, 1), got {c}")));
        }
        if c == 0.0 {
            return Ok(0.0);
        }
        let mut hi = 1.0;
        while self.capacity(hi) < c {
            hi *= 2.0;
            if hi > 1e8 {
                return Err(Error::SearchRange(format!(
                    "capacity {c} not reached below gamma = 1e8"
                )));
            }
        }
        bisect(|g| self.capacity(g) - c, 0.0, hi, 1e-15 * hi)
    }
}

pub fn bpsk_capacity(gamma: f64) -> f64 {
    ConstellationCapacity::default_bpsk().capacity(gamma)
}

pub fn bpsk_capacity_inv(c: f64) -> Result<f64> {
    ConstellationCapacity::default_bpsk().inverse(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::SeededStream;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn endpoints() {
        assert_eq!(bpsk_capacity(0.0), 0.0);
        assert!(bpsk_capacity(1e4) > 0.999);
        assert!(bpsk_capacity(1e4) <= 1.0);
        assert!(bpsk_capacity_inv(1.0).is_err());
        assert_eq!(bpsk_capacity_inv(0.0).unwrap(), 0.0);
    }

    #[test]
    fn monte_carlo_at_0_db() {
        let mut rng = SeededStream::new(11, 0).rng();
        let n = 10_000_000;
        let mut acc = 0.0;
        for _ in 0..n {
            // Box–Muller on two uniforms.
            let u1: f64 = rng.random();
            let u2: f64 = rng.random();
            let z = (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
            acc += log2_1p_exp_neg(2.0 * (1.0 + z));
        }
        let mc = 1.0 - acc / n as f64;
        assert!((bpsk_capacity(1.0) - mc).abs() < 1e-4, "{} vs {mc}", bpsk_capacity(1.0));
    }

    #[test]
    fn strictly_increasing() {
        let mut last = 0.0;
        // Above ~12 dB, 1 - C falls below double resolution.
        for i in 1..=150 {
            let g = 10f64.powf(-3.0 + 0.03 * i as f64);
            let c = bpsk_capacity(g);
            assert!(c > last, "C not increasing at {g}");
            last = c;
        }
    }

    proptest! {
        #[test]
        fn inverse_round_trip(c in 1e-6f64..0.995) {
            let g = bpsk_capacity_inv(c).unwrap();
            prop_assert!((bpsk_capacity(g) - c).abs() < 1e-9);
        }
    }
}
