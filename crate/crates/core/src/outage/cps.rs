use super::{check_alpha, OutageQuery};
use crate::Result;

/// Outage probability of one sub-message sent at rate `r` (bits) with power
/// `p` over a Bob channel of gain `h`, against Eve with mean gain `alpha_e`.
pub fn cps_submessage_outage(h: f64, p: f64, r: f64, alpha_e: f64) -> Result<f64> {
    check_alpha(alpha_e)?;
    if p == 0.0 {
        return Ok(if r > 0.0 { 1.0 } else { 0.0 });
    }
    let bob = (h * p).ln_1p() / std::f64::consts::LN_2;
    if r >= bob {
        return Ok(1.0);
    }
    // Eve's gain threshold ((1 + hP) 2^-R - 1) / P, positive here.
    let threshold = ((h * p).ln_1p() - r * std::f64::consts::LN_2).exp_m1() / p;
    Ok((-threshold / alpha_e).exp())
}

/// `1 - prod_k (1 - p_k)` over channels carrying a sub-message (`R_k > 0`).
pub fn cps_outage(q: &OutageQuery) -> Result<f64> {
    let rates = q.per_channel_rates()?;
    let mut ln_ok = 0.0;
    for ((&h, &p), &r) in q.h.values().iter().zip(q.p.values()).zip(rates) {
        if r == 0.0 {
            continue;
        }
        let pk = cps_submessage_outage(h, p, r, q.alpha_e)?;
        if pk >= 1.0 {
            return Ok(1.0);
        }
        ln_ok += (-pk).ln_1p();
    }
    Ok(-ln_ok.exp_m1())
}
