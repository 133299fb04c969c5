//! Distribution of the eps-outage security gap over Bob's gains when Alice
//! uses minimum power and skips realizations that exceed the budget.
//!
//! The budget constraint `(1/K) sum_k 1/X_k <= b` (with `X_k = H_k / alpha_B`
//! unit-mean exponential and `b = P_max alpha_B / gamma_delta_B`) is rarely
//! met for large K, so realizations are drawn exactly from the conditional
//! law by rejection from a tilted product law. Each `X_k` is drawn with
//! density proportional to `exp(-x - lambda/x)`; a feasible vector is kept
//! with probability `exp(lambda (sum 1/X_k - K b))`, which is at most one on
//! the feasible set. Any `lambda >= 0` is exact; `lambda` is chosen so the
//! tilted mean of `1/X` equals `b`, which makes the budget typical.

use rand::Rng;

use super::{gamma_bar_max_e, min_power_allocation, Scheme};
use crate::channels::{ChannelModel, SeededStream};
use crate::numeric::bisect;
use crate::{Error, Result};

/// Sorted per-realization gaps in dB; `cdf` at index `i` is `(i + 1) / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecgapCdf {
    pub samples_db: Vec<f64>,
    /// Average of the dB values.
    pub mean_db: f64,
    /// Tilted proposals drawn to collect the samples.
    pub proposals: u64,
    pub lambda: f64,
}

impl SecgapCdf {
    pub fn cdf(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.samples_db.len() as f64;
        self.samples_db
            .iter()
            .enumerate()
            .map(move |(i, &s)| (s, (i + 1) as f64 / n))
    }
}

/// `exp(z) K_nu(z)` from `int_0^inf exp(-z (cosh t - 1)) cosh(nu t) dt`.
///
/// The integrand is analytic and decays double-exponentially, so the
/// trapezoidal rule converges geometrically in the node count.
fn scaled_bessel_k(nu: f64, z: f64) -> f64 {
    const NODES: usize = 4000;
    let t_max = (1.0 + 745.0 / z).acosh();
    let h = t_max / NODES as f64;
    let f = |t: f64| (-z * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
    let inner: f64 = (1..NODES).map(|i| f(i as f64 * h)).sum();
    h * (0.5 * f(0.0) + inner + 0.5 * f(t_max))
}

/// Mean of `1/X` under the tilted density `exp(-x - lambda/x)`:
/// `K_0(2 sqrt(lambda)) / (sqrt(lambda) K_1(2 sqrt(lambda)))`.
fn tilted_inverse_mean(lambda: f64) -> f64 {
    let r = lambda.sqrt();
    scaled_bessel_k(0.0, 2.0 * r) / (r * scaled_bessel_k(1.0, 2.0 * r))
}

/// Tilt making the tilted mean of `1/X` equal to `budget`; zero when even a
/// negligible tilt leaves the mean below the budget.
pub fn tilt_parameter(budget: f64) -> Result<f64> {
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "budget ratio must be positive, got {budget}"
        )));
    }
    let g = |ln_l: f64| tilted_inverse_mean(ln_l.exp()).ln() - budget.ln();
    let (lo, hi) = (-30.0, 30.0);
    if g(lo) <= 0.0 {
        return Ok(0.0);
    }
    if g(hi) >= 0.0 {
        return Err(Error::SearchRange(format!(
            "budget ratio {budget} is too small to sample"
        )));
    }
    Ok(bisect(g, lo, hi, 1e-12)?.exp())
}

/// One draw with density proportional to `exp(-x - lambda/x)`.
///
/// Proposals: `Exp(1)` (acceptance `exp(-lambda/x)`) when `lambda < 1/e`,
/// else `Gamma(2, 1)` (acceptance `(lambda/x) exp(1 - lambda/x)`); the choice
/// maximizes the acceptance rate.
fn tilted_draw<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> f64 {
    let exp1 = |rng: &mut R| -(-rng.random::<f64>()).ln_1p();
    loop {
        if lambda * std::f64::consts::E < 1.0 {
            let x = exp1(rng);
            if rng.random::<f64>() < (-lambda / x).exp() {
                return x;
            }
        } else {
            let x = exp1(rng) + exp1(rng);
            let r = lambda / x;
            if rng.random::<f64>() < r * (1.0 - r).exp() {
                return x;
            }
        }
    }
}

/// Monte Carlo distribution of the CPS eps-outage gap under minimum-power
/// allocation, over `n` budget-feasible Bob realizations (infeasible ones are
/// skipped, as Alice does not transmit).
///
/// Bob thresholds are `gamma_delta_b` and Eve thresholds `gamma_eta_e` on
/// every channel; `model` supplies K, alpha_B and P_max. Proposal `i` uses
/// stream `stream.child(i)`, so results depend only on `(inputs, stream)`.
pub fn secgap_cdf_mc(
    model: &ChannelModel,
    gamma_delta_b: f64,
    gamma_eta_e: f64,
    eps: f64,
    n: usize,
    stream: SeededStream,
) -> Result<SecgapCdf> {
    if n < 1000 {
        return Err(Error::InvalidInput(format!("need at least 1000 realizations, got {n}")));
    }
    if !(gamma_delta_b > 0.0 && gamma_eta_e > 0.0) {
        return Err(Error::InvalidInput("thresholds must be positive".into()));
    }
    let k = model.k();
    let budget = model.p_max() * model.alpha_b() / gamma_delta_b;
    let lambda = tilt_parameter(budget)?;
    let max_proposals = 10_000 * n as u64;
    let gd = vec![gamma_delta_b; k];
    let ge = vec![gamma_eta_e; k];
    let mut samples = Vec::with_capacity(n);
    let mut proposals = 0u64;
    let mut x = vec![0.0; k];
    while samples.len() < n {
        if proposals == max_proposals {
            return Err(Error::Accuracy(format!(
                "only {} of {n} feasible realizations after {proposals} proposals",
                samples.len()
            )));
        }
        let mut rng = stream.child(proposals).rng();
        proposals += 1;
        for v in x.iter_mut() {
            *v = tilted_draw(&mut rng, lambda);
        }
        let excess: f64 = x.iter().map(|v| 1.0 / v).sum::<f64>() - k as f64 * budget;
        if excess > 0.0 || rng.random::<f64>() >= (lambda * excess).exp() {
            continue;
        }
        let h: Vec<f64> = x.iter().map(|v| v * model.alpha_b()).collect();
        let m = min_power_allocation(&h, &gd, model.p_max())?;
        let Some(p) = m.p.filter(|_| m.within_budget) else {
            continue;
        };
        let g = gamma_bar_max_e(&p, &ge, eps, Scheme::Cps)?;
        samples.push(10.0 * (gamma_delta_b / g).log10());
    }
    let mean_db = samples.iter().sum::<f64>() / n as f64;
    samples.sort_by(f64::total_cmp);
    Ok(SecgapCdf {
        samples_db: samples,
        mean_db,
        proposals,
        lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::db_to_linear;
    use crate::channels::PowerAllocation;
    use crate::secgap::security_gap_eps;

    #[test]
    fn tilt_matches_bessel_values() {
        // K0(2 sqrt l) / (sqrt l K1(2 sqrt l)) = b at these reference points.
        for (b, l) in [
            (0.5, 3.112173272087158),
            (1.0, 0.6026814804142818),
            (2.0, 0.08852015166465117),
        ] {
            let got = tilt_parameter(b).unwrap();
            assert!((got / l - 1.0).abs() < 1e-8, "{b}: {got}");
        }
        assert_eq!(tilt_parameter(100.0).unwrap(), 0.0);
    }

    #[test]
    fn tilted_draws_have_target_mean() {
        let lambda = tilt_parameter(1.0).unwrap();
        for lam in [lambda, 0.2] {
            let mut rng = SeededStream::new(5, 0).rng();
            let n = 200_000;
            let s: f64 = (0..n).map(|_| 1.0 / tilted_draw(&mut rng, lam)).sum();
            let expect = tilted_inverse_mean(lam);
            assert!((s / n as f64 / expect - 1.0).abs() < 0.01, "{lam}");
        }
    }

    #[test]
    fn cdf_shape_and_determinism() {
        let gd = db_to_linear(0.8);
        let model = ChannelModel::new(4, 1.0, 1.0, gd).unwrap();
        let s = SeededStream::new(2015, 4);
        let a = secgap_cdf_mc(&model, gd, db_to_linear(-4.8), 0.01, 1000, s).unwrap();
        let b = secgap_cdf_mc(&model, gd, db_to_linear(-4.8), 0.01, 1000, s).unwrap();
        assert_eq!(a, b);
        let pts: Vec<(f64, f64)> = a.cdf().collect();
        assert!(pts.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 < w[1].1));
        assert_eq!(pts.last().unwrap().1, 1.0);
        // Unequal powers never beat the equal-gain benchmark.
        let p = PowerAllocation::uniform(4, 1.0).unwrap();
        let bench = security_gap_eps(&p, &[gd; 4], &[db_to_linear(-4.8); 4], 0.01, Scheme::Cps).unwrap();
        assert!(a.samples_db[0] >= bench.s_eps_db() - 1e-9);
        assert!(secgap_cdf_mc(&model, gd, 0.3, 0.01, 999, s).is_err());
    }

    #[test]
    fn mean_gaps_match_reference_averages() {
        let gd = db_to_linear(0.8);
        for (k, expect) in [(4, 14.68), (8, 15.84), (16, 16.94), (32, 17.93)] {
            let model = ChannelModel::new(k, 1.0, 1.0, gd).unwrap();
            let r = secgap_cdf_mc(
                &model,
                gd,
                db_to_linear(-4.8),
                0.01,
                10_000,
                SeededStream::new(2015, k as u64),
            )
            .unwrap();
            assert!((r.mean_db - expect).abs() < 0.3, "K={k}: {}", r.mean_db);
        }
    }
}
