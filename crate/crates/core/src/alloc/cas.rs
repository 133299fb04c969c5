//! Rate maximisation for coding across sub-messages.

use rand::Rng;

use super::search::canonical_order;
use super::{equal_power, waterfilling};
use crate::channels::{ChannelModel, GainVector, PowerAllocation, RateAllocation, SeededStream};
use crate::numeric::{nelder_mead, NelderMeadOptions};
use crate::outage::{cas_outage, cas_rate_at_outage, CASGridConfig, OutageQuery};
use crate::{Error, Result};

const RANDOM_STARTS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct CASSolution {
    pub p: PowerAllocation,
    pub r: f64,
    pub achieved_outage: f64,
}

/// Maximum CAS rate at secrecy outage `eps` under the mean-power budget.
pub fn cas_optimize(h: &GainVector, model: &ChannelModel, eps: f64, cfg: &CASGridConfig) -> Result<CASSolution> {
    cas_optimize_with_starts(h, model, eps, cfg, &[])
}

/// As [`cas_optimize`], with additional caller-supplied starting powers
/// (for example a CPS optimum, whose CAS rate is never below its CPS rate).
///
/// The search uses the whole budget: powers are `K P_max y_k^2 / |y|^2`,
/// and a derivative-free simplex search runs from equal power, waterfilling,
/// seeded random points and the extra starts. Ties go to the earliest start.
pub fn cas_optimize_with_starts(
    h: &GainVector,
    model: &ChannelModel,
    eps: f64,
    cfg: &CASGridConfig,
    extra_starts: &[PowerAllocation],
) -> Result<CASSolution> {
    h.check_model(model)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    let k = model.k();
    let total = k as f64 * model.p_max();
    let alpha = model.alpha_e();
    // Work in canonical channel order; map back at the end.
    let order = canonical_order(h.values(), None);
    let hs = GainVector::new(order.iter().map(|&i| h.values()[i]).collect())?;
    let permute = |p: &PowerAllocation| -> Vec<f64> { order.iter().map(|&i| p.values()[i]).collect() };

    let to_powers = |y: &[f64]| -> Vec<f64> {
        let s: f64 = y.iter().map(|v| v * v).sum();
        if !(s > 0.0) || !s.is_finite() {
            return vec![total / k as f64; k];
        }
        y.iter().map(|v| total * v * v / s).collect()
    };
    let rate_of = |p: &[f64]| -> f64 {
        match PowerAllocation::new(p.to_vec()) {
            Ok(pa) => cas_rate_at_outage(&pa, eps, &hs, alpha, cfg).unwrap_or(0.0),
            Err(_) => 0.0,
        }
    };

    let mut starts: Vec<Vec<f64>> = vec![equal_power(model).values().to_vec()];
    if let Ok(wf) = waterfilling(&hs, model) {
        starts.push(wf.values().to_vec());
    }
    let mut rng = SeededStream::new(0x4341_5330, k as u64).rng();
    for _ in 0..RANDOM_STARTS {
        let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let s: f64 = e.iter().sum();
        starts.push(e.iter().map(|v| total * v / s).collect());
    }
    for p in extra_starts {
        if p.len() != k {
            return Err(Error::InvalidInput(format!(
                "start has {} powers, model has K = {k}",
                p.len()
            )));
        }
        starts.push(permute(p));
    }

    let mut best = (starts[0].clone(), rate_of(&starts[0]));
    if k > 1 {
        let opts = NelderMeadOptions {
            initial_step: 0.25,
            f_tol: 1e-5,
            x_tol: 1e-4,
            max_evals: 60 * k + 120,
        };
        for s in &starts {
            let start_rate = rate_of(s);
            if start_rate > best.1 {
                best = (s.clone(), start_rate);
            }
            let y0: Vec<f64> = s.iter().map(|p| (p / total).sqrt()).collect();
            let m = nelder_mead(|y| -rate_of(&to_powers(y)), &y0, opts);
            if -m.value > best.1 {
                best = (to_powers(&m.x), -m.value);
            }
        }
    }

    let mut p = vec![0.0; k];
    for (j, &i) in order.iter().enumerate() {
        p[i] = best.0[j];
    }
    let p = PowerAllocation::new(p)?;
    let achieved_outage = if best.1 > 0.0 {
        cas_outage(
            &OutageQuery::new(p.clone(), RateAllocation::joint(best.1)?, h.clone(), alpha)?,
            cfg,
        )?
    } else {
        0.0
    };
    Ok(CASSolution {
        p,
        r: best.1,
        achieved_outage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alloc::cps_optimize;

    #[test]
    fn single_channel_uses_full_power() {
        let model = ChannelModel::new(1, 1.0, 0.05, 1.0).unwrap();
        let h = GainVector::new(vec![1.0]).unwrap();
        let cfg = CASGridConfig::default();
        let s = cas_optimize(&h, &model, 0.01, &cfg).unwrap();
        assert_eq!(s.p.values(), &[1.0]);
        let direct = cas_rate_at_outage(&s.p, 0.01, &h, 0.05, &cfg).unwrap();
        assert_eq!(s.r, direct);
        assert!(s.achieved_outage <= 0.01 + 1e-4);
    }

    #[test]
    fn at_least_the_cps_rate() {
        let cfg = CASGridConfig::default();
        let model = ChannelModel::new(2, 1.0, 0.05, 1.0).unwrap();
        for h in [[0.5, 2.0], [1.0, 1.0], [3.0, 0.4]] {
            let g = GainVector::new(h.to_vec()).unwrap();
            let cps = cps_optimize(&g, &model, 0.01).unwrap();
            let cas = cas_optimize_with_starts(&g, &model, 0.01, &cfg, std::slice::from_ref(&cps.p)).unwrap();
            assert!(cas.r >= cps.total_rate - 1e-3, "{h:?}: {} < {}", cas.r, cps.total_rate);
            assert!(cas.p.is_feasible(1.0));
            assert!(cas.achieved_outage <= 0.01 + 1e-4);
        }
    }

    #[test]
    fn symmetric_gains_give_symmetric_powers() {
        let cfg = CASGridConfig::default();
        let model = ChannelModel::new(2, 1.0, 0.05, 1.0).unwrap();
        let g = GainVector::new(vec![1.3, 1.3]).unwrap();
        let s = cas_optimize(&g, &model, 0.01, &cfg).unwrap();
        let p = s.p.values();
        // The rate is flat near the symmetric point, so only approximate symmetry holds.
        let eq = cas_rate_at_outage(&equal_power(&model), 0.01, &g, 0.05, &cfg).unwrap();
        assert!(s.r >= eq);
        assert!(s.r - eq < 1e-3 || (p[0] - p[1]).abs() < 0.2, "{p:?}");
    }
}
