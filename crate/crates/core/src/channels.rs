//! Channel ensemble, unit conventions and reproducible Rayleigh gain sampling.
//!
//! Noise variance is 1 on every channel, so the SNR of channel `k` is simply
//! `P_k * gain_k`. Power gains of Rayleigh channels are exponential with the
//! ensemble mean (`alpha_b` towards Bob, `alpha_e` towards Eve).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Ensemble parameters of the K parallel wiretap channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    k: usize,
    alpha_b: f64,
    alpha_e: f64,
    p_max: f64,
}

impl ChannelModel {
    pub fn new(k: usize, alpha_b: f64, alpha_e: f64, p_max: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("K must be at least 1".into()));
        }
        for (name, v) in [("alpha_B", alpha_b), ("alpha_E", alpha_e), ("P_max", p_max)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            k,
            alpha_b,
            alpha_e,
            p_max,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha_b(&self) -> f64 {
        self.alpha_b
    }

    pub fn alpha_e(&self) -> f64 {
        self.alpha_e
    }

    /// Average per-channel power budget.
    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    /// Same model with a different number of channels.
    pub fn with_k(&self, k: usize) -> Result<Self> {
        Self::new(k, self.alpha_b, self.alpha_e, self.p_max)
    }

    pub fn with_alpha_e(&self, alpha_e: f64) -> Result<Self> {
        Self::new(self.k, self.alpha_b, alpha_e, self.p_max)
    }
}

fn check_nonnegative(what: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidInput(format!("{what} must not be empty")));
    }
    if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidInput(format!(
            "{what}[{i}] must be finite and nonnegative, got {v}"
        )));
    }
    Ok(())
}

/// Linear power gains `H_k` (Bob) or `G_k` (Eve), one per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct GainVector(Vec<f64>);

impl GainVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_nonnegative("gain", &values)?;
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks the length against a channel model.
    pub fn check_model(&self, model: &ChannelModel) -> Result<()> {
        if self.len() != model.k() {
            return Err(Error::InvalidInput(format!(
                "gain vector has {} entries, model has K = {}",
                self.len(),
                model.k()
            )));
        }
        Ok(())
    }
}

/// Nonnegative transmit powers `P_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation(Vec<f64>);

impl PowerAllocation {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_nonnegative("power", &values)?;
        Ok(Self(values))
    }

    pub fn uniform(k: usize, p: f64) -> Result<Self> {
        Self::new(vec![p; k])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    /// `(1/K) sum P_k <= P_max`, with a relative slack for rounding.
    pub fn is_feasible(&self, p_max: f64) -> bool {
        self.mean() <= p_max * (1.0 + 1e-12)
    }
}

/// Secrecy rates in bits per channel use.
#[derive(Debug, Clone, PartialEq)]
pub enum RateAllocation {
    /// One rate per sub-message (CPS).
    PerChannel(Vec<f64>),
    /// A single rate for the codeword spanning all channels (CAS).
    Joint(f64),
}

impl RateAllocation {
    pub fn per_channel(rates: Vec<f64>) -> Result<Self> {
        check_nonnegative("rate", &rates)?;
        Ok(Self::PerChannel(rates))
    }

    pub fn joint(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::InvalidInput(format!("rate must be nonnegative, got {rate}")));
        }
        Ok(Self::Joint(rate))
    }

    pub fn total(&self) -> f64 {
        match self {
            Self::PerChannel(r) => r.iter().sum(),
            Self::Joint(r) => *r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Bob,
    Eve,
}

/// A reproducible random stream: `(seed, stream_id)` fixes every draw.
///
/// Backed by ChaCha8 with the stream id mapped onto the cipher's stream
/// counter, so distinct ids give independent sequences from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeededStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl SeededStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Derived stream for sub-task `index` (per realization, per grid point).
    pub fn child(&self, index: u64) -> Self {
        let mixed = self
            .stream_id
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .rotate_left(29)
            ^ index.wrapping_mul(0xBF58_476D_1CE4_E5B9);
        Self {
            seed: self.seed,
            stream_id: mixed,
        }
    }
}

/// Exponential draw with the given mean by inverse-CDF transform.
#[inline]
pub fn exponential<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> f64 {
    let u: f64 = rng.random();
    -mean * (-u).ln_1p()
}

/// K i.i.d. exponential power gains with the side's ensemble mean.
pub fn sample_gains(model: &ChannelModel, side: Side, stream: SeededStream) -> GainVector {
    let mean = match side {
        Side::Bob => model.alpha_b(),
        Side::Eve => model.alpha_e(),
    };
    let mut rng = stream.rng();
    GainVector((0..model.k()).map(|_| exponential(&mut rng, mean)).collect())
}

pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

pub fn linear_to_db(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "linear_to_db needs a positive finite value, got {x}"
        )));
    }
    Ok(10.0 * x.log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn model_rejects_bad_parameters() {
        assert!(ChannelModel::new(0, 1.0, 1.0, 1.0).is_err());
        assert!(ChannelModel::new(2, 0.0, 1.0, 1.0).is_err());
        assert!(ChannelModel::new(2, 1.0, -1.0, 1.0).is_err());
        assert!(ChannelModel::new(2, 1.0, 1.0, f64::NAN).is_err());
        assert!(ChannelModel::new(2, 1.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn vectors_reject_negative_entries() {
        assert!(GainVector::new(vec![1.0, -0.1]).is_err());
        assert!(PowerAllocation::new(vec![]).is_err());
        assert!(RateAllocation::per_channel(vec![0.5, -1.0]).is_err());
        let p = PowerAllocation::new(vec![1.0, 3.0]).unwrap();
        assert_eq!(p.mean(), 2.0);
        assert!(p.is_feasible(2.0));
        assert!(!p.is_feasible(1.9));
    }

    #[test]
    fn sampling_is_reproducible() {
        let model = ChannelModel::new(4, 1.0, 0.05, 1.0).unwrap();
        let s = SeededStream::new(42, 7);
        let a = sample_gains(&model, Side::Bob, s);
        let b = sample_gains(&model, Side::Bob, s);
        assert_eq!(a, b);
        let c = sample_gains(&model, Side::Bob, SeededStream::new(42, 8));
        assert_ne!(a, c);
    }

    #[test]
    fn exponential_moments_match() {
        // 10^6 draws: mean within 3 standard errors of alpha_E, variance within 4.
        let n = 1_000_000;
        let model = ChannelModel::new(n, 1.0, 0.05, 1.0).unwrap();
        let g = sample_gains(&model, Side::Eve, SeededStream::new(1, 0));
        let mean = g.values().iter().sum::<f64>() / n as f64;
        let se = 0.05 / (n as f64).sqrt();
        assert!((mean - 0.05).abs() < 3.0 * se, "mean {mean}");
        let var = g.values().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // Var of the sample variance for Exp(a): (mu4 - sigma^4)/n = 8 a^4 / n.
        let se_var = (8.0f64).sqrt() * 0.05f64.powi(2) / (n as f64).sqrt();
        assert!((var - 0.0025).abs() < 4.0 * se_var, "var {var}");
    }

    #[test]
    fn exponential_cdf_at_one() {
        let n = 200_000;
        let model = ChannelModel::new(n, 1.0, 1.0, 1.0).unwrap();
        let g = sample_gains(&model, Side::Bob, SeededStream::new(3, 1));
        let frac = g.values().iter().filter(|&&x| x <= 1.0).count() as f64 / n as f64;
        let p = 1.0 - (-1.0f64).exp();
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((frac - p).abs() < 4.0 * se, "{frac}");
    }

    #[test]
    fn db_values() {
        assert_eq!(db_to_linear(0.0), 1.0);
        assert!((db_to_linear(0.8) - 1.202_264_434_6).abs() < 1e-9);
        assert!((db_to_linear(-11.43) - 0.071_944_897_8).abs() < 1e-9);
        assert!(linear_to_db(0.0).is_err());
        assert!(linear_to_db(-2.0).is_err());
    }

    proptest! {
        #[test]
        fn db_round_trip(x in -80.0f64..80.0) {
            let back = linear_to_db(db_to_linear(x)).unwrap();
            prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0));
            let lin = db_to_linear(x);
            prop_assert!((db_to_linear(linear_to_db(lin).unwrap()) - lin).abs() <= 1e-12 * lin);
        }
    }
}
