//! Shannon's sphere-packing lower bound on the ML codeword error rate of a
//! length-N code, evaluated in the log domain.
//!
//! The bound is the probability that the noisy received vector leaves the
//! N-dimensional cone of half-angle `theta1` around the transmitted point,
//! where `theta1` is chosen so the cone's solid-angle fraction equals
//! `exp(-N * Rc * ln 2)`.

use std::f64::consts::{LN_2, PI};

use super::special::{ln_gamma, ln_gamma_pq, q_function};
use crate::numeric::{adaptive_simpson, bisect, log_sum_exp};
use crate::{Error, Result};

const OUTER_PANELS: usize = 100;
const OUTER_REL_TOL: f64 = 1e-8;

/// Parameters at which the bound is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpbParams {
    pub n: usize,
    /// Code rate in nats per channel use.
    pub rcn: f64,
    pub theta1: f64,
    /// Normalised signal amplitude, `sqrt(2 gamma)`.
    pub a: f64,
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("block length must be at least 2, got {n}")));
    }
    Ok(())
}

/// `ln(Omega_N(theta) / Omega_N(pi))`, the log solid-angle fraction of a cone
/// of half-angle `theta` in N dimensions.
pub fn ln_solid_angle_fraction(n: usize, theta: f64) -> Result<f64> {
    check_n(n)?;
    if theta <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let theta = theta.min(PI);
    let nf = n as f64;
    let ln_norm = ln_gamma(nf / 2.0) - 0.5 * PI.ln() - ln_gamma((nf - 1.0) / 2.0);
    if n == 2 {
        return Ok(ln_norm + theta.ln());
    }
    // Scale by the integrand's maximum on [0, theta] so the quadrature sees
    // values in [0, 1] even when (sin phi)^(N-2) underflows.
    let ln_peak = theta.min(PI / 2.0).sin().ln();
    let p = nf - 2.0;
    let scaled = adaptive_simpson(
        |phi: f64| {
            let s = phi.sin();
            if s <= 0.0 {
                0.0
            } else {
                (p * (s.ln() - ln_peak)).exp()
            }
        },
        0.0,
        theta,
        OUTER_PANELS,
        1e-13,
        0.0,
    )?;
    Ok(ln_norm + p * ln_peak + scaled.ln())
}

/// Cone half-angle whose solid-angle fraction is `exp(-N * Rc * ln 2)`.
pub fn solve_theta1(n: usize, rc: f64) -> Result<f64> {
    check_n(n)?;
    if !(rc > 0.0 && rc.is_finite()) {
        return Err(Error::Domain(format!("code rate must be positive, got {rc}")));
    }
    let target = -(n as f64) * rc * LN_2;
    // Work with the log of the angle: the solution can be tiny for long,
    // high-rate codes.
    let f = |u: f64| match ln_solid_angle_fraction(n, u.exp()) {
        Ok(v) => v - target,
        Err(_) => f64::NAN,
    };
    let u = bisect(f, (1e-300f64).ln(), PI.ln(), 1e-15)?;
    Ok(u.exp())
}

/// Per-`j` constants of `d(N, j, x)` that do not depend on `x`.
struct FnTerms {
    n: usize,
    constant: Vec<f64>,
}

impl FnTerms {
    fn new(n: usize) -> Self {
        let nf = n as f64;
        let constant = (0..n)
            .map(|j| {
                let jf = j as f64;
                ln_gamma(nf / 2.0) - ln_gamma(jf / 2.0 + 1.0) - ln_gamma(nf - jf) - 0.5 * LN_2
            })
            .collect();
        Self { n, constant }
    }

    /// `ln f_N(x)` for `x >= 0`.
    fn ln_f(&self, x: f64) -> f64 {
        let n = self.n;
        let half_x2 = 0.5 * x * x;
        let ln_sqrt2x = (std::f64::consts::SQRT_2 * x).ln();
        let mut terms = Vec::with_capacity(n);
        for (j, c) in self.constant.iter().enumerate() {
            let power = (n - 1 - j) as f64;
            let poly = if power == 0.0 { 0.0 } else { power * ln_sqrt2x };
            let (ln_p, ln_q) = ln_gamma_pq((j as f64 + 1.0) / 2.0, half_x2);
            // ln(1 + (-1)^j P(a, x^2/2)): 1 - P is Q for odd j.
            let inc = if j % 2 == 0 { ln_p.exp().ln_1p() } else { ln_q };
            terms.push(half_x2 + c + poly + inc);
        }
        log_sum_exp(&terms)
    }
}

/// Evaluates the bound at explicit parameters.
pub fn spb_at(params: &SpbParams) -> Result<f64> {
    let SpbParams { n, theta1, a, .. } = *params;
    check_n(n)?;
    if theta1 >= PI / 2.0 {
        return Err(Error::Domain(format!(
            "cone half-angle {theta1} is not below pi/2; the rate is too low for this form of the bound"
        )));
    }
    let nf = n as f64;
    let terms = FnTerms::new(n);
    let sqrt_n_a = nf.sqrt() * a;
    let ln_lead = (nf - 1.0).ln() - 0.5 * nf * a * a - 0.5 * (2.0 * PI).ln();
    let integral = adaptive_simpson(
        |phi: f64| {
            let s = phi.sin();
            let x = sqrt_n_a * phi.cos().max(0.0);
            (ln_lead + (nf - 2.0) * s.ln() + terms.ln_f(x)).exp()
        },
        theta1,
        PI / 2.0,
        OUTER_PANELS,
        OUTER_REL_TOL,
        1e-300,
    )?;
    Ok(integral + q_function(sqrt_n_a))
}

/// Sphere-packing lower bound on the CER of a length-`n`, rate-`rc` code on a
/// channel with SNR `gamma` (linear).
pub fn spb_cer(n: usize, rc: f64, gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::Domain(format!("SNR must be nonnegative, got {gamma}")));
    }
    let params = SpbParams {
        n,
        rcn: rc * LN_2,
        theta1: solve_theta1(n, rc)?,
        a: (2.0 * gamma).sqrt(),
    };
    spb_at(&params)
}

/// Largest SNR at which the sphere-packing bound still forces a CER of at
/// least `1 - eta`.
pub fn gamma_eta_e(n: usize, rc: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Domain(format!("eta must lie in (0, 1), got {eta}")));
    }
    let theta1 = solve_theta1(n, rc)?;
    let target = 1.0 - eta;
    let f = |g_db: f64| {
        let params = SpbParams {
            n,
            rcn: rc * LN_2,
            theta1,
            a: (2.0 * 10f64.powf(g_db / 10.0)).sqrt(),
        };
        match spb_at(&params) {
            Ok(v) => v - target,
            Err(_) => f64::NAN,
        }
    };
    let g_db = bisect(f, -60.0, 30.0, 1e-9)?;
    Ok(10f64.powf(g_db / 10.0))
}
