//! Security-gap and equivocation metrics under outage constraints.
//!
//! All ratios are formed in the linear domain; dB conversion happens only in
//! the accessors and at the CSV edge.

mod cdf;

pub use cdf::{secgap_cdf_mc, tilt_parameter, SecgapCdf};

use crate::channels::{PowerAllocation, SeededStream};
use crate::codes::{per_realization_cer_snr, CodeSpec, ConstellationCapacity};
use crate::numeric::bisect;
use crate::{Error, Result};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Cps,
    Cas,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Cps => "CPS",
            Self::Cas => "CAS",
        }
    }
}

/// Reliability and secrecy targets. The per-codeword threshold `delta` is
/// derived from the message error target `rho`, never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSpec {
    eps: f64,
    omega: f64,
    rho: f64,
    eta: f64,
    k: usize,
    scheme: Scheme,
}

impl TargetSpec {
    pub fn new(eps: f64, omega: f64, rho: f64, eta: f64, k: usize, scheme: Scheme) -> Result<Self> {
        for (name, v) in [("eps", eps), ("omega", omega), ("rho", rho), ("eta", eta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidInput(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if k == 0 {
            return Err(Error::InvalidInput("K must be at least 1".into()));
        }
        Ok(Self {
            eps,
            omega,
            rho,
            eta,
            k,
            scheme,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Per-codeword CER threshold: `1 - (1 - rho)^(1/K)` for CPS (K
    /// independent codewords must all succeed), `rho` for CAS.
    pub fn delta(&self) -> f64 {
        match self.scheme {
            Scheme::Cps => -((-self.rho).ln_1p() / self.k as f64).exp_m1(),
            Scheme::Cas => self.rho,
        }
    }
}

/// Thresholds and gaps for one configuration. Linear SNRs throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityGapReport {
    /// Mean of the per-channel Bob thresholds (CPS) or their maximum (CAS).
    pub gamma_delta_b: f64,
    /// Mean of the per-channel Eve thresholds (CPS) or their minimum (CAS).
    pub gamma_eta_e: f64,
    pub gamma_bar_max_e: f64,
    pub gamma_bar_min_b: Option<f64>,
    pub s_eps: f64,
    pub s_omega_eps: Option<f64>,
    pub scheme: Scheme,
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

impl SecurityGapReport {
    pub fn gamma_bar_max_e_db(&self) -> f64 {
        db(self.gamma_bar_max_e)
    }

    pub fn s_eps_db(&self) -> f64 {
        db(self.s_eps)
    }

    pub fn gamma_bar_min_b_db(&self) -> Option<f64> {
        self.gamma_bar_min_b.map(db)
    }

    pub fn s_omega_eps_db(&self) -> Option<f64> {
        self.s_omega_eps.map(db)
    }
}

/// Minimum powers meeting Bob's thresholds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct MinPower {
    /// `None` when a channel has zero gain (no finite power suffices).
    pub p: Option<PowerAllocation>,
    /// `(1/K) sum P_k <= P_max`; false means the transmission is skipped.
    pub within_budget: bool,
}

/// `P_k = gamma_delta_B(k) / H_k`.
pub fn min_power_allocation(h: &[f64], gamma_delta_b: &[f64], p_max: f64) -> Result<MinPower> {
    if h.len() != gamma_delta_b.len() || h.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} gains for {} thresholds",
            h.len(),
            gamma_delta_b.len()
        )));
    }
    if h.iter().any(|&x| !(x >= 0.0 && x.is_finite())) || gamma_delta_b.iter().any(|&g| !(g > 0.0)) {
        return Err(Error::InvalidInput(
            "gains must be nonnegative and thresholds positive".into(),
        ));
    }
    if h.contains(&0.0) {
        return Ok(MinPower {
            p: None,
            within_budget: false,
        });
    }
    let p = PowerAllocation::new(h.iter().zip(gamma_delta_b).map(|(h, g)| g / h).collect())?;
    let within_budget = p.is_feasible(p_max);
    Ok(MinPower {
        p: Some(p),
        within_budget,
    })
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::Domain(format!("{name} must lie in (0, 1), got {v}")));
    }
    Ok(())
}

fn scheme_thresholds(g: &[f64], scheme: Scheme, pick_cas: fn(f64, f64) -> f64) -> Vec<f64> {
    match scheme {
        Scheme::Cps => g.to_vec(),
        Scheme::Cas => vec![g.iter().copied().fold(g[0], pick_cas); g.len()],
    }
}

/// Largest mean Eve SNR `(1/K) sum P_k alpha_E` with
/// `1 - prod_k [1 - exp(-g_k / (P_k alpha_E))] <= eps`.
///
/// For CPS `g_k` is the channel's own Eve threshold; for CAS every factor
/// uses the smallest threshold. Channels with `P_k = 0` are ignored.
pub fn gamma_bar_max_e(p: &PowerAllocation, gamma_eta_e: &[f64], eps: f64, scheme: Scheme) -> Result<f64> {
    check_unit("eps", eps)?;
    if p.len() != gamma_eta_e.len() || p.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} powers for {} thresholds",
            p.len(),
            gamma_eta_e.len()
        )));
    }
    if gamma_eta_e.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
        return Err(Error::InvalidInput("Eve thresholds must be positive".into()));
    }
    let g = scheme_thresholds(gamma_eta_e, scheme, f64::min);
    let c: Vec<f64> = p
        .values()
        .iter()
        .zip(&g)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, g)| g / p)
        .collect();
    if c.is_empty() {
        return Err(Error::Domain("no channel carries power".into()));
    }
    Ok(p.mean() / inverse_alpha(&c, eps)?)
}

/// Solves `sum_k ln(1 - exp(-c_k t)) = ln(1 - eps)` for `t = 1/alpha_E`.
fn inverse_alpha(c: &[f64], eps: f64) -> Result<f64> {
    let target = (-eps).ln_1p();
    let f = |ln_t: f64| -> f64 {
        let t = ln_t.exp();
        c.iter().map(|ck| (-(-ck * t).exp_m1()).ln()).sum::<f64>() - target
    };
    // f increases from -inf to 0; expand the bracket around the equal-c answer.
    let c_mean = c.iter().sum::<f64>() / c.len() as f64;
    let guess = -(-(target / c.len() as f64).exp_m1()).ln() / c_mean;
    let (mut lo, mut hi) = (guess.ln() - 2.0, guess.ln() + 2.0);
    while f(lo) > 0.0 {
        lo -= 8.0;
    }
    while f(hi) < 0.0 {
        hi += 8.0;
    }
    Ok(bisect(f, lo, hi, 1e-14)?.exp())
}

fn bob_scalar(gamma_delta_b: &[f64], scheme: Scheme) -> f64 {
    match scheme {
        Scheme::Cps => gamma_delta_b.iter().sum::<f64>() / gamma_delta_b.len() as f64,
        Scheme::Cas => gamma_delta_b.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// eps-outage security gap for the given powers.
pub fn security_gap_eps(
    p: &PowerAllocation,
    gamma_delta_b: &[f64],
    gamma_eta_e: &[f64],
    eps: f64,
    scheme: Scheme,
) -> Result<SecurityGapReport> {
    if gamma_delta_b.len() != p.len() || gamma_delta_b.iter().any(|&g| !(g > 0.0)) {
        return Err(Error::InvalidInput(
            "need one positive Bob threshold per channel".into(),
        ));
    }
    let gamma_bar_max_e = gamma_bar_max_e(p, gamma_eta_e, eps, scheme)?;
    let gamma_delta_b = bob_scalar(gamma_delta_b, scheme);
    let gamma_eta_e = match scheme {
        Scheme::Cps => gamma_eta_e.iter().sum::<f64>() / gamma_eta_e.len() as f64,
        Scheme::Cas => gamma_eta_e.iter().copied().fold(f64::INFINITY, f64::min),
    };
    Ok(SecurityGapReport {
        gamma_delta_b,
        gamma_eta_e,
        gamma_bar_max_e,
        gamma_bar_min_b: None,
        s_eps: gamma_delta_b / gamma_bar_max_e,
        s_omega_eps: None,
        scheme,
    })
}

/// Smallest mean Bob SNR `(1/K) sum P_k alpha_B` with
/// `1 - prod_k exp(-g_k / (P_k alpha_B)) <= omega` for Rayleigh Bob gains.
///
/// Closed form: `alpha_B = sum_k (g_k / P_k) / (-ln(1 - omega))`. CAS uses
/// the largest threshold on every channel. With equal thresholds and powers
/// this is `gamma_delta K / (-ln(1 - omega))`.
pub fn gamma_bar_min_b(p: &PowerAllocation, gamma_delta_b: &[f64], omega: f64, scheme: Scheme) -> Result<f64> {
    check_unit("omega", omega)?;
    if p.len() != gamma_delta_b.len() || p.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} powers for {} thresholds",
            p.len(),
            gamma_delta_b.len()
        )));
    }
    if p.values().iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Domain(
            "Bob's outage needs positive power on every channel".into(),
        ));
    }
    let g = scheme_thresholds(gamma_delta_b, scheme, f64::max);
    let s: f64 = g.iter().zip(p.values()).map(|(g, p)| g / p).sum();
    Ok(p.mean() * s / -(-omega).ln_1p())
}

/// Adds the statistical-Bob threshold and `S_{omega,eps} = gamma_bar_min_B / gamma_bar_max_E`.
pub fn security_gap_omega_eps(report: &SecurityGapReport, gamma_bar_min_b: f64) -> Result<SecurityGapReport> {
    if !(gamma_bar_min_b > 0.0 && gamma_bar_min_b.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "gamma_bar_min_B must be positive, got {gamma_bar_min_b}"
        )));
    }
    Ok(SecurityGapReport {
        gamma_bar_min_b: Some(gamma_bar_min_b),
        s_omega_eps: Some(gamma_bar_min_b / report.gamma_bar_max_e),
        ..*report
    })
}

/// Bob gain law for the per-realization method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fading {
    /// Unit-mean exponential power gain per coded bit.
    Rayleigh,
    /// All gains equal to one.
    Static,
}

/// Smallest mean Bob SNR at which the per-realization CER estimate exceeds
/// `delta` with probability at most `omega`, for CAS with one coded bit per
/// channel.
///
/// Each of `n_mc` gain draws gets its own threshold SNR (found by
/// bisection); the answer is the matching upper order statistic, so the
/// search over the mean SNR uses common random numbers throughout.
pub fn per_realization_gamma_min_b(
    code: &CodeSpec,
    delta: f64,
    omega: f64,
    n_mc: usize,
    fading: Fading,
    stream: SeededStream,
) -> Result<f64> {
    check_unit("delta", delta)?;
    check_unit("omega", omega)?;
    if n_mc == 0 {
        return Err(Error::InvalidInput("n_mc must be positive".into()));
    }
    let supports = code.supports().ok_or_else(|| {
        Error::Capability("the per-realization method needs the codeword supports of the code".into())
    })?;
    let n = code.n();
    let mut thresholds = Vec::with_capacity(n_mc);
    let mut snr = vec![0.0; n];
    for i in 0..n_mc {
        let gains: Vec<f64> = match fading {
            Fading::Rayleigh => {
                let mut rng = stream.child(i as u64).rng();
                (0..n).map(|_| -(-rng.random::<f64>()).ln_1p()).collect()
            }
            Fading::Static => vec![1.0; n],
        };
        let mut cer_at = |g_db: f64| -> f64 {
            let g = 10f64.powf(g_db / 10.0);
            for (s, x) in snr.iter_mut().zip(&gains) {
                *s = g * x;
            }
            per_realization_cer_snr(supports, &snr).raw
        };
        let (mut lo, mut hi) = (-20.0, 20.0);
        while cer_at(hi) > delta {
            hi += 20.0;
            if hi > 400.0 {
                return Err(Error::SearchRange(format!(
                    "realization {i} never reaches delta = {delta}"
                )));
            }
        }
        while cer_at(lo) <= delta {
            lo -= 20.0;
        }
        thresholds.push(bisect(|x| cer_at(x).ln() - delta.ln(), lo, hi, 1e-9)?);
        if fading == Fading::Static {
            thresholds.resize(n_mc, thresholds[0]);
            break;
        }
    }
    thresholds.sort_by(f64::total_cmp);
    let allowed = (omega * n_mc as f64).floor() as usize;
    Ok(10f64.powf(thresholds[n_mc - 1 - allowed.min(n_mc - 1)] / 10.0))
}

fn check_rate_inputs(gamma_bar_e: f64, eps: f64, k: usize) -> Result<()> {
    if !(gamma_bar_e >= 0.0 && gamma_bar_e.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "gamma_bar_E must be nonnegative, got {gamma_bar_e}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidInput("K must be at least 1".into()));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1], got {eps}")));
    }
    Ok(())
}

/// eps-outage equivocation rate `max(0, Rc - C(-gamma_bar_E ln(1 - (1 - eps)^(1/K))))`.
pub fn equivocation_rate(rc: f64, gamma_bar_e: f64, eps: f64, k: usize, cap: &ConstellationCapacity) -> Result<f64> {
    check_rate_inputs(gamma_bar_e, eps, k)?;
    if !(rc > 0.0) {
        return Err(Error::InvalidInput(format!("code rate must be positive, got {rc}")));
    }
    if gamma_bar_e == 0.0 {
        return Ok(rc);
    }
    // 1 - (1 - eps)^(1/K) without cancellation.
    let q = -((-eps).ln_1p() / k as f64).exp_m1();
    Ok((rc - cap.capacity(-gamma_bar_e * q.ln())).max(0.0))
}

/// Constellation-constrained eps-outage secrecy rate
/// `max(0, C(gamma_delta_B) - C(-gamma_bar_E ln(eps) / K))`.
pub fn constrained_secrecy_rate(
    gamma_delta_b: f64,
    gamma_bar_e: f64,
    eps: f64,
    k: usize,
    cap: &ConstellationCapacity,
) -> Result<f64> {
    check_rate_inputs(gamma_bar_e, eps, k)?;
    if !(gamma_delta_b >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "gamma_delta_B must be nonnegative, got {gamma_delta_b}"
        )));
    }
    Ok((cap.capacity(gamma_delta_b) - cap.capacity(-gamma_bar_e * eps.ln() / k as f64)).max(0.0))
}
