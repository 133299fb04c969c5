//! Rate maximisation for coding per sub-message.
//!
//! For fixed per-sub-message outage targets `pbar_k` the sum rate is concave
//! in the powers, and its stationarity conditions give each power in closed
//! form as a function of a single multiplier `nu` ([`theorem1_power`]). The
//! outer search runs over the targets with the outage budget
//! `1 - prod(1 - pbar_k) = eps` folded in.

use super::search::{canonical_order, maximize_on_simplex};
use crate::channels::{ChannelModel, GainVector, PowerAllocation, RateAllocation};
use crate::numeric::bisect;
use crate::{Error, Result};

/// Per-sub-message outage targets and the power multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct CPSTargets {
    pub pbar: Vec<f64>,
    pub nu: f64,
    /// `-alpha_E ln pbar_k`.
    pub ubar: Vec<f64>,
}

impl CPSTargets {
    pub fn new(pbar: Vec<f64>, nu: f64, alpha_e: f64) -> Result<Self> {
        if let Some(p) = pbar.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::InvalidInput(format!(
                "outage targets must lie in (0, 1), got {p}"
            )));
        }
        if !(nu > 0.0) {
            return Err(Error::InvalidInput(format!("nu must be positive, got {nu}")));
        }
        let ubar = pbar.iter().map(|p| -alpha_e * p.ln()).collect();
        Ok(Self { pbar, nu, ubar })
    }
}

/// Result of [`cps_optimize`]. `active` lists the channels that carry a
/// sub-message; `targets` is indexed like `active`.
#[derive(Debug, Clone, PartialEq)]
pub struct CPSSolution {
    pub p: PowerAllocation,
    pub r: RateAllocation,
    pub active: Vec<usize>,
    pub targets: Option<CPSTargets>,
    pub total_rate: f64,
    pub feasible: bool,
}

/// Positive root of `ubar nu H P^2 + nu (ubar + H) P + (nu - H + ubar) = 0`,
/// or `None` when `nu >= H - ubar` (the channel cannot be used).
pub fn theorem1_power(ubar: f64, h: f64, nu: f64) -> Option<f64> {
    let c = nu - h + ubar;
    if c >= 0.0 {
        return None;
    }
    let a = ubar * nu * h;
    let b = nu * (ubar + h);
    // -2c / (b + sqrt(b^2 - 4ac)) avoids cancellation for small a.
    Some(-2.0 * c / (b + (b * b - 4.0 * a * c).sqrt()))
}

/// Residual of the stationarity quadratic at `p`, scaled by its coefficients.
pub fn theorem1_residual(ubar: f64, h: f64, nu: f64, p: f64) -> f64 {
    let a = ubar * nu * h;
    let b = nu * (ubar + h);
    let c = nu - h + ubar;
    (a * p * p + b * p + c) / (a * p * p).abs().max((b * p).abs()).max(c.abs()).max(f64::MIN_POSITIVE)
}

/// `log2((1 + H P) / (1 + ubar P))`, clamped at zero.
pub fn theorem1_rate(ubar: f64, h: f64, p: f64) -> f64 {
    (((h * p).ln_1p() - (ubar * p).ln_1p()) / std::f64::consts::LN_2).max(0.0)
}

/// `pbar_k = 1 - (1 - eps)^{w_k}`: the budget is spent exactly for any
/// simplex weights `w`.
fn targets_from_weights(w: &[f64], eps: f64) -> Vec<f64> {
    let l = (-eps).ln_1p();
    w.iter().map(|wk| -(wk * l).exp_m1()).collect()
}

/// Powers for given `ubar` under the mean-power equality; `None` when no
/// channel can be used.
fn powers_for(h: &[f64], ubar: &[f64], total: f64) -> Option<(f64, Vec<f64>)> {
    let nu_hi = h.iter().zip(ubar).map(|(h, u)| h - u).fold(f64::NEG_INFINITY, f64::max);
    if !(nu_hi > 0.0) {
        return None;
    }
    let sum_at = |ln_nu: f64| -> f64 {
        let nu = ln_nu.exp();
        h.iter()
            .zip(ubar)
            .map(|(&h, &u)| theorem1_power(u, h, nu).unwrap_or(0.0))
            .sum::<f64>()
    };
    let hi = nu_hi.ln();
    let mut lo = hi - 1.0;
    while sum_at(lo) < total {
        lo -= 8.0;
        if lo < hi - 1400.0 {
            return None;
        }
    }
    let ln_nu = bisect(|x| sum_at(x) - total, lo, hi, 1e-15).ok()?;
    let nu = ln_nu.exp();
    let p = h
        .iter()
        .zip(ubar)
        .map(|(&h, &u)| theorem1_power(u, h, nu).unwrap_or(0.0))
        .collect();
    Some((nu, p))
}

struct Evaluated {
    pbar: Vec<f64>,
    ubar: Vec<f64>,
    nu: f64,
    p: Vec<f64>,
    rates: Vec<f64>,
    total: f64,
}

fn evaluate(h: &[f64], w: &[f64], eps: f64, alpha_e: f64, total_power: f64) -> Option<Evaluated> {
    let pbar = targets_from_weights(w, eps);
    let ubar: Vec<f64> = pbar.iter().map(|p| -alpha_e * p.ln()).collect();
    let (nu, p) = powers_for(h, &ubar, total_power)?;
    let rates: Vec<f64> = p
        .iter()
        .zip(h.iter().zip(&ubar))
        .map(|(&p, (&h, &u))| if p > 0.0 { theorem1_rate(u, h, p) } else { 0.0 })
        .collect();
    let total = rates.iter().sum();
    Some(Evaluated {
        pbar,
        ubar,
        nu,
        p,
        rates,
        total,
    })
}

fn check_inputs(h: &GainVector, model: &ChannelModel, eps: f64) -> Result<()> {
    h.check_model(model)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// Maximum CPS sum rate at secrecy outage `eps` under the mean-power budget.
///
/// Channels that cannot be used at the optimum are dropped (power and rate
/// zero) and the problem is solved again on the rest; the best solution over
/// these rounds is returned.
pub fn cps_optimize(h: &GainVector, model: &ChannelModel, eps: f64) -> Result<CPSSolution> {
    check_inputs(h, model, eps)?;
    let k = model.k();
    let alpha = model.alpha_e();
    let total_power = k as f64 * model.p_max();
    let hv = h.values();
    // A channel needs H_k > ubar_k >= -alpha ln eps to be usable at all.
    let floor = -alpha * eps.ln();
    let mut active: Vec<usize> = canonical_order(hv, None)
        .into_iter()
        .filter(|&i| hv[i] > floor)
        .collect();
    let mut best: Option<(Vec<usize>, Evaluated)> = None;
    while !active.is_empty() {
        let ha: Vec<f64> = active.iter().map(|&i| hv[i]).collect();
        let (w, _) = maximize_on_simplex(active.len(), |w| {
            evaluate(&ha, w, eps, alpha, total_power).map_or(0.0, |e| e.total)
        });
        let Some(e) = evaluate(&ha, &w, eps, alpha, total_power) else {
            break;
        };
        let unused: Vec<usize> = (0..active.len()).filter(|&j| e.p[j] == 0.0).collect();
        // Later rounds use fewer channels and win near-ties.
        let improves = best
            .as_ref()
            .is_none_or(|(_, b)| e.total >= b.total - 1e-12 * b.total.max(1.0));
        let next: Vec<usize> = active
            .iter()
            .enumerate()
            .filter(|(j, _)| !unused.contains(j))
            .map(|(_, &i)| i)
            .collect();
        if improves {
            best = Some((active.clone(), e));
        }
        if unused.is_empty() {
            break;
        }
        active = next;
    }
    let Some((active, e)) = best else {
        return Ok(CPSSolution {
            p: PowerAllocation::new(vec![0.0; k])?,
            r: RateAllocation::per_channel(vec![0.0; k])?,
            active: vec![],
            targets: None,
            total_rate: 0.0,
            feasible: false,
        });
    };
    let mut p = vec![0.0; k];
    let mut r = vec![0.0; k];
    for (j, &i) in active.iter().enumerate() {
        p[i] = e.p[j];
        r[i] = e.rates[j];
    }
    Ok(CPSSolution {
        p: PowerAllocation::new(p)?,
        r: RateAllocation::per_channel(r)?,
        targets: Some(CPSTargets {
            pbar: e.pbar,
            nu: e.nu,
            ubar: e.ubar,
        }),
        active,
        total_rate: e.total,
        feasible: true,
    })
}

/// CPS sum rate for a fixed power vector, with the outage targets optimised.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPowerCps {
    pub total_rate: f64,
    /// Per-channel targets; zero on channels that stay silent.
    pub pbar: Vec<f64>,
    pub rates: Vec<f64>,
}

/// Best CPS sum rate `sum_k log2((1 + H_k P_k)/(1 + ubar_k P_k))` over the
/// outage targets, for the given powers.
pub fn cps_rate_fixed_power(h: &GainVector, p: &PowerAllocation, alpha_e: f64, eps: f64) -> Result<FixedPowerCps> {
    if h.len() != p.len() {
        return Err(Error::InvalidInput(format!("{} powers for {} gains", p.len(), h.len())));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    let (hv, pv) = (h.values(), p.values());
    let k = hv.len();
    let floor = -alpha_e * eps.ln();
    let mut active: Vec<usize> = canonical_order(hv, Some(pv))
        .into_iter()
        .filter(|&i| pv[i] > 0.0 && hv[i] > floor)
        .collect();
    let rates_for = |idx: &[usize], w: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let pbar = targets_from_weights(w, eps);
        let rates = idx
            .iter()
            .zip(&pbar)
            .map(|(&i, pb)| theorem1_rate(-alpha_e * pb.ln(), hv[i], pv[i]))
            .collect();
        (pbar, rates)
    };
    let mut best = FixedPowerCps {
        total_rate: 0.0,
        pbar: vec![0.0; k],
        rates: vec![0.0; k],
    };
    while !active.is_empty() {
        let (w, _) = maximize_on_simplex(active.len(), |w| rates_for(&active, w).1.iter().sum());
        let (pbar, rates) = rates_for(&active, &w);
        let total: f64 = rates.iter().sum();
        if total > best.total_rate {
            best = FixedPowerCps {
                total_rate: total,
                pbar: vec![0.0; k],
                rates: vec![0.0; k],
            };
            for (j, &i) in active.iter().enumerate() {
                best.pbar[i] = pbar[j];
                best.rates[i] = rates[j];
            }
        }
        let keep: Vec<usize> = active
            .iter()
            .zip(&rates)
            .filter(|(_, &r)| r > 0.0)
            .map(|(&i, _)| i)
            .collect();
        if keep.len() == active.len() {
            break;
        }
        active = keep;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alloc::{equal_power, waterfilling};
    use crate::channels::SeededStream;
    use crate::outage::cps_submessage_outage;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn closed_form_example() {
        let p = theorem1_power(0.2303, 1.0, 0.3128).unwrap();
        assert!((p - 1.0).abs() < 2e-3, "{p}");
        assert!(theorem1_residual(0.2303, 1.0, 0.3128, p).abs() < 1e-12);
        assert!(theorem1_power(0.25, 1.0, 0.75).is_none());
        let tiny = theorem1_power(0.25, 1.0, 0.75 - 1e-9).unwrap();
        assert!(tiny > 0.0 && tiny < 1e-8);
        assert_eq!(theorem1_rate(0.4, 0.4, 3.0), 0.0);
        assert!((theorem1_rate(0.2303, 1.0, 1.0) - (2.0f64 / 1.2303).log2()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn stationarity_and_round_trip(u in 0.01f64..3.0, extra in 0.01f64..5.0, frac in 0.01f64..0.99, alpha in 0.01f64..1.0) {
            let h = u + extra;
            let nu = frac * (h - u);
            let p = theorem1_power(u, h, nu).unwrap();
            prop_assert!(p > 0.0);
            prop_assert!(theorem1_residual(u, h, nu, p).abs() < 1e-9);
            let pbar = (-u / alpha).exp();
            let r = theorem1_rate(u, h, p);
            let back = cps_submessage_outage(h, p, r, alpha).unwrap();
            prop_assert!((back - pbar).abs() <= 1e-10 * pbar.max(1e-300) + 1e-300 || (back - pbar).abs() < 1e-10);
        }
    }

    #[test]
    fn single_channel() {
        let model = ChannelModel::new(1, 1.0, 0.05, 1.0).unwrap();
        let s = cps_optimize(&GainVector::new(vec![1.0]).unwrap(), &model, 0.01).unwrap();
        assert!(s.feasible);
        assert!((s.p.values()[0] - 1.0).abs() < 1e-9);
        let t = s.targets.unwrap();
        assert!((t.pbar[0] - 0.01).abs() < 1e-12);
        let expect = (2.0 / (1.0 + 0.05 * -(0.01f64.ln()))).log2();
        assert!((s.total_rate - expect).abs() < 1e-9);
        assert!((s.total_rate - 0.7009).abs() < 2e-4);
    }

    #[test]
    fn infeasible_when_no_channel_beats_eve() {
        let model = ChannelModel::new(2, 1.0, 1.0, 1.0).unwrap();
        let s = cps_optimize(&GainVector::new(vec![0.1, 0.2]).unwrap(), &model, 0.01).unwrap();
        assert!(!s.feasible);
        assert_eq!(s.total_rate, 0.0);
    }

    #[test]
    fn symmetric_channels_split_evenly() {
        let model = ChannelModel::new(3, 1.0, 0.05, 2.0).unwrap();
        let s = cps_optimize(&GainVector::new(vec![1.5; 3]).unwrap(), &model, 0.01).unwrap();
        let t = s.targets.unwrap();
        for k in 1..3 {
            assert!((t.pbar[k] - t.pbar[0]).abs() < 1e-6 * t.pbar[0]);
            assert!((s.p.values()[k] - s.p.values()[0]).abs() < 1e-5);
        }
    }

    fn check_solution(s: &CPSSolution, h: &[f64], model: &ChannelModel, eps: f64) {
        assert!((s.p.mean() / model.p_max() - 1.0).abs() < 1e-8);
        let t = s.targets.as_ref().unwrap();
        let spent = 1.0 - t.pbar.iter().map(|p| 1.0 - p).product::<f64>();
        assert!((spent - eps).abs() < 1e-6);
        for (j, &i) in s.active.iter().enumerate() {
            assert!(theorem1_residual(t.ubar[j], h[i], t.nu, s.p.values()[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn invariants_and_dominance_on_random_pairs() {
        let mut rng = SeededStream::new(30, 0).rng();
        let eps = 0.01;
        for _ in 0..20 {
            let h: Vec<f64> = (0..2).map(|_| 10f64.powf(rng.random_range(-0.5..0.5))).collect();
            let model = ChannelModel::new(2, 1.0, 0.05, 1.0).unwrap();
            let g = GainVector::new(h.clone()).unwrap();
            let s = cps_optimize(&g, &model, eps).unwrap();
            check_solution(&s, &h, &model, eps);
            for base in [waterfilling(&g, &model).unwrap(), equal_power(&model)] {
                let b = cps_rate_fixed_power(&g, &base, 0.05, eps).unwrap();
                assert!(
                    s.total_rate >= b.total_rate - 1e-6,
                    "{} < {}",
                    s.total_rate,
                    b.total_rate
                );
            }
            let brute = brute_force_pair(&h, 0.05, 1.0, eps);
            assert!((s.total_rate - brute).abs() < 1e-3, "{} vs grid {brute}", s.total_rate);
            assert!(s.total_rate >= brute - 1e-9);
        }
    }

    /// Grid search over (pbar_1, P_1); pbar_2 and P_2 follow from the budgets.
    fn brute_force_pair(h: &[f64], alpha: f64, p_max: f64, eps: f64) -> f64 {
        let rate = |u: f64, h: f64, p: f64| if p > 0.0 { theorem1_rate(u, h, p) } else { 0.0 };
        let mut best: f64 = 0.0;
        let n = 400;
        for i in 0..=n {
            let pb1 = eps * i as f64 / n as f64;
            let pb2 = 1.0 - (1.0 - eps) / (1.0 - pb1);
            let u1 = if pb1 > 0.0 { -alpha * pb1.ln() } else { f64::INFINITY };
            let u2 = if pb2 > 0.0 { -alpha * pb2.ln() } else { f64::INFINITY };
            for j in 0..=n {
                let p1 = 2.0 * p_max * j as f64 / n as f64;
                let p2 = 2.0 * p_max - p1;
                let r1 = if u1.is_finite() { rate(u1, h[0], p1) } else { 0.0 };
                let r2 = if u2.is_finite() { rate(u2, h[1], p2) } else { 0.0 };
                best = best.max(r1 + r2);
            }
        }
        best
    }

    #[test]
    fn weak_channel_is_dropped() {
        // Channel 2 is barely above the usable floor; all power goes to channel 1.
        let model = ChannelModel::new(2, 1.0, 0.05, 1.0).unwrap();
        let g = GainVector::new(vec![3.0, 0.24]).unwrap();
        let s = cps_optimize(&g, &model, 0.01).unwrap();
        assert_eq!(s.active, vec![0]);
        assert_eq!(s.p.values()[1], 0.0);
        assert!((s.p.values()[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn permuted_inputs_are_bit_identical() {
        let model = ChannelModel::new(2, 1.0, 0.05, 1.0).unwrap();
        let a = cps_optimize(&GainVector::new(vec![0.7, 2.1]).unwrap(), &model, 0.01).unwrap();
        let b = cps_optimize(&GainVector::new(vec![2.1, 0.7]).unwrap(), &model, 0.01).unwrap();
        assert_eq!(a.total_rate.to_bits(), b.total_rate.to_bits());
        assert_eq!(a.p.values()[0].to_bits(), b.p.values()[1].to_bits());
    }
}
