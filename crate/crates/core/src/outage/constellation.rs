//! Outage with a constellation-constrained rate function `C(gamma)` in place
//! of `log2(1 + gamma)`.

use super::OutageQuery;
use crate::codes::ConstellationCapacity;
use crate::Result;

/// `P[G_k P_k > C^-1(C(H_k P_k) - R_k)]` for one channel; 1 when the rate is
/// not below Bob's constrained capacity.
fn channel_outage(h: f64, p: f64, r: f64, alpha_e: f64, cap: &ConstellationCapacity) -> Result<f64> {
    if p == 0.0 {
        return Ok(if r > 0.0 { 1.0 } else { 0.0 });
    }
    let bob = cap.capacity(h * p);
    if r >= bob {
        return Ok(1.0);
    }
    let snr = cap.inverse(bob - r)?;
    Ok((-snr / (p * alpha_e)).exp())
}

/// CPS outage `1 - prod_k (1 - p_k)` with constrained rates. Every channel
/// that transmits (`P_k > 0`) enters the product, including `R_k = 0`.
pub fn constellation_outage_cps(q: &OutageQuery, cap: &ConstellationCapacity) -> Result<f64> {
    let rates = q.per_channel_rates()?;
    let mut ln_ok = 0.0;
    for ((&h, &p), &r) in q.h.values().iter().zip(q.p.values()).zip(rates) {
        let pk = channel_outage(h, p, r, q.alpha_e, cap)?;
        if pk >= 1.0 {
            return Ok(1.0);
        }
        ln_ok += (-pk).ln_1p();
    }
    Ok(-ln_ok.exp_m1())
}

/// Upper bound on the CAS outage with constrained rates, obtained by
/// splitting the rate margin `sum_j C(H_j P_j) - R` evenly over the channels.
pub fn constellation_outage_cas_bound(q: &OutageQuery, cap: &ConstellationCapacity) -> Result<f64> {
    let r = q.joint_rate()?;
    let k = q.k() as f64;
    let bob: f64 =
        q.h.values()
            .iter()
            .zip(q.p.values())
            .map(|(h, p)| cap.capacity(h * p))
            .sum();
    if r >= bob {
        return Ok(1.0);
    }
    let snr = cap.inverse((bob - r) / k)?;
    let mut ln_ok = 0.0;
    for &p in q.p.values() {
        if p > 0.0 {
            ln_ok += (-(-snr / (p * q.alpha_e)).exp()).ln_1p();
        }
    }
    Ok(-ln_ok.exp_m1())
}
