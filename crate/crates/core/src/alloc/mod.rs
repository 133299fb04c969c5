//! Power and rate allocation for the two coding architectures, plus the
//! waterfilling, equal-power and channel-selection baselines.

mod cas;
mod cps;
mod search;

pub use cas::{cas_optimize, cas_optimize_with_starts, CASSolution};
pub use cps::{
    cps_optimize, cps_rate_fixed_power, theorem1_power, theorem1_rate, theorem1_residual, CPSSolution, CPSTargets,
    FixedPowerCps,
};

use crate::channels::{ChannelModel, GainVector, PowerAllocation};
use crate::outage::{bob_sum_rate, cas_rate_at_outage, rate_at_outage_with, CASGridConfig, CasEngine};
use crate::{Error, Result};

/// Waterfilling on Bob's gains: `P_k = max(0, mu - 1/H_k)` with the water
/// level `mu` set by the mean-power budget.
pub fn waterfilling(h: &GainVector, model: &ChannelModel) -> Result<PowerAllocation> {
    h.check_model(model)?;
    let hv = h.values();
    if hv.iter().all(|&x| x == 0.0) {
        return Err(Error::Domain("waterfilling needs at least one positive gain".into()));
    }
    let total = model.k() as f64 * model.p_max();
    // Fill channels in order of decreasing gain; the level is exact once
    // the next channel's floor lies above it.
    let mut order: Vec<usize> = (0..hv.len()).filter(|&i| hv[i] > 0.0).collect();
    order.sort_by(|&a, &b| hv[b].total_cmp(&hv[a]).then(a.cmp(&b)));
    let mut floors = 0.0;
    let mut mu = 0.0;
    for (n, &i) in order.iter().enumerate() {
        let floor = 1.0 / hv[i];
        if n > 0 && floor >= mu {
            break;
        }
        floors += floor;
        mu = (total + floors) / (n + 1) as f64;
    }
    PowerAllocation::new(
        hv.iter()
            .map(|&x| if x > 0.0 { (mu - 1.0 / x).max(0.0) } else { 0.0 })
            .collect(),
    )
}

/// `P_k = P_max` on every channel.
pub fn equal_power(model: &ChannelModel) -> PowerAllocation {
    PowerAllocation::uniform(model.k(), model.p_max()).expect("P_max is positive")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub k_prime: usize,
    pub p: PowerAllocation,
    pub rate: f64,
}

/// Uniform power `K P_max / K'` on the `K'` strongest channels (ties to the
/// lower index), with the `K'` maximising the CAS rate at outage `eps`.
pub fn select_uniform(h: &GainVector, model: &ChannelModel, eps: f64, cfg: &CASGridConfig) -> Result<Selection> {
    Ok(select_uniform_sweep(h, model, eps, cfg)?.0)
}

/// As [`select_uniform`], also returning the rate for every `K' = 1..=K`.
pub fn select_uniform_sweep(
    h: &GainVector,
    model: &ChannelModel,
    eps: f64,
    cfg: &CASGridConfig,
) -> Result<(Selection, Vec<f64>)> {
    h.check_model(model)?;
    let k = model.k();
    let mut best: Option<Selection> = None;
    let mut sweep = Vec::with_capacity(k);
    for kp in 1..=k {
        let p = uniform_on_strongest(h, model, kp)?;
        let rate = cas_rate_at_outage(&p, eps, h, model.alpha_e(), cfg)?;
        sweep.push(rate);
        if best.as_ref().is_none_or(|b| rate > b.rate) {
            best = Some(Selection { k_prime: kp, p, rate });
        }
    }
    Ok((best.expect("K >= 1"), sweep))
}

/// [`select_uniform`] over many Bob draws. Eve's sum-rate law under uniform
/// power depends on `K'` alone, so one engine per `K'` serves every draw.
/// Results agree with the per-draw call up to grid rounding.
pub fn select_uniform_batch(
    draws: &[GainVector],
    model: &ChannelModel,
    eps: f64,
    cfg: &CASGridConfig,
) -> Result<Vec<Selection>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    for h in draws {
        h.check_model(model)?;
    }
    let k = model.k();
    let mut best: Vec<Option<Selection>> = vec![None; draws.len()];
    for kp in 1..=k {
        let ps: Vec<PowerAllocation> = draws
            .iter()
            .map(|h| uniform_on_strongest(h, model, kp))
            .collect::<Result<_>>()?;
        let c_b: Vec<f64> = draws.iter().zip(&ps).map(|(h, p)| bob_sum_rate(h, p)).collect();
        let t_cap = c_b.iter().copied().fold(0.0, f64::max);
        let Some(first) = ps.first() else {
            return Ok(Vec::new());
        };
        let engine = CasEngine::new(first, model.alpha_e(), t_cap, cfg)?;
        for ((slot, p), &c) in best.iter_mut().zip(ps).zip(&c_b) {
            let rate = rate_at_outage_with(&engine, c, eps)?;
            if slot.as_ref().is_none_or(|b| rate > b.rate) {
                *slot = Some(Selection { k_prime: kp, p, rate });
            }
        }
    }
    Ok(best.into_iter().map(|s| s.expect("K >= 1")).collect())
}

/// `K P_max / K'` on the `K'` largest gains, ties to the lower index.
fn uniform_on_strongest(h: &GainVector, model: &ChannelModel, kp: usize) -> Result<PowerAllocation> {
    let k = model.k();
    let hv = h.values();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| hv[b].total_cmp(&hv[a]).then(a.cmp(&b)));
    let level = k as f64 * model.p_max() / kp as f64;
    let mut p = vec![0.0; k];
    for &i in &order[..kp] {
        p[i] = level;
    }
    PowerAllocation::new(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{sample_gains, SeededStream, Side};

    #[test]
    fn waterfilling_cases() {
        let model = ChannelModel::new(2, 1.0, 0.05, 1.5).unwrap();
        let p = waterfilling(&GainVector::new(vec![2.0, 2.0]).unwrap(), &model).unwrap();
        assert_eq!(p.values(), &[1.5, 1.5]);
        let p = waterfilling(&GainVector::new(vec![5.0, 0.1]).unwrap(), &model).unwrap();
        assert_eq!(p.values(), &[3.0, 0.0]);
        assert!(waterfilling(&GainVector::new(vec![0.0, 0.0]).unwrap(), &model).is_err());
        let model = ChannelModel::new(16, 1.0, 0.05, 0.7).unwrap();
        for s in 0..5 {
            let h = sample_gains(&model, Side::Bob, SeededStream::new(40, s));
            let p = waterfilling(&h, &model).unwrap();
            assert!((p.values().iter().sum::<f64>() - 16.0 * 0.7).abs() < 1e-10);
            // Active channels share one water level.
            let levels: Vec<f64> = p
                .values()
                .iter()
                .zip(h.values())
                .filter(|(p, _)| **p > 0.0)
                .map(|(p, h)| p + 1.0 / h)
                .collect();
            assert!(levels.iter().all(|l| (l - levels[0]).abs() < 1e-10));
        }
    }

    #[test]
    fn equal_power_cases() {
        let model = ChannelModel::new(1, 1.0, 0.05, 2.5).unwrap();
        assert_eq!(equal_power(&model).values(), &[2.5]);
        let model = ChannelModel::new(3, 1.0, 0.05, 2.5).unwrap();
        assert_eq!(equal_power(&model).mean(), 2.5);
        let h = GainVector::new(vec![0.9; 3]).unwrap();
        assert_eq!(waterfilling(&h, &model).unwrap(), equal_power(&model));
    }

    #[test]
    fn selection_cases() {
        let cfg = CASGridConfig::default();
        let model = ChannelModel::new(1, 1.0, 0.05, 1.0).unwrap();
        let s = select_uniform(&GainVector::new(vec![1.0]).unwrap(), &model, 0.01, &cfg).unwrap();
        assert_eq!((s.k_prime, s.p.values()[0]), (1, 1.0));
        let model = ChannelModel::new(4, 1.0, 0.5, 1.0).unwrap();
        let h = GainVector::new(vec![0.05, 20.0, 0.02, 0.03]).unwrap();
        let (s, sweep) = select_uniform_sweep(&h, &model, 0.01, &cfg).unwrap();
        assert_eq!(s.k_prime, 1);
        assert_eq!(s.p.values()[1], 4.0);
        assert!(s.rate >= sweep[3]);
    }

    #[test]
    fn batch_selection_matches_per_draw() {
        let cfg = CASGridConfig::default();
        let model = ChannelModel::new(8, 1.0, 0.3, 2.4).unwrap();
        let draws: Vec<GainVector> = (0..6)
            .map(|d| sample_gains(&model, Side::Bob, SeededStream::new(9, d)))
            .collect();
        let batch = select_uniform_batch(&draws, &model, 0.01, &cfg).unwrap();
        for (h, b) in draws.iter().zip(&batch) {
            let (one, sweep) = select_uniform_sweep(h, &model, 0.01, &cfg).unwrap();
            assert!((one.rate - b.rate).abs() < 1e-5, "{} vs {}", one.rate, b.rate);
            // A different K' is only acceptable on a near tie.
            assert!((sweep[b.k_prime - 1] - one.rate).abs() < 1e-5);
        }
    }
}
