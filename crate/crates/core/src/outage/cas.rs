use std::cell::RefCell;
use std::f64::consts::LN_2;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{check_alpha, CASGridConfig, MCEstimate, OutageQuery};
use crate::channels::{exponential, GainVector, PowerAllocation, SeededStream};
use crate::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Products of lengths above this go through the FFT.
const DIRECT_CONV_LIMIT: usize = 1 << 17;

/// `sum_k log2(1 + H_k P_k)`.
pub fn bob_sum_rate(h: &GainVector, p: &PowerAllocation) -> f64 {
    h.values()
        .iter()
        .zip(p.values())
        .map(|(h, p)| (h * p).ln_1p())
        .sum::<f64>()
        / LN_2
}

/// `P[log2(1 + G P) >= t]` for one exponential Eve gain with mean `alpha_e`.
fn single_tail(t: f64, p_alpha: f64) -> f64 {
    (-(t * LN_2).exp_m1() / p_alpha).exp()
}

#[derive(Debug, Clone)]
enum Kind {
    /// No active channel: Eve's sum rate is identically zero.
    Silent,
    Single {
        p_alpha: f64,
    },
    Grid {
        offset: f64,
        cum: Vec<f64>,
        mass: Vec<f64>,
    },
}

/// Distribution of Eve's sum rate for a fixed power vector, built once and
/// queried for any threshold up to `t_cap`.
///
/// Each active channel's rate `X_k = log2(1 + G_k P_k)` is discretised into
/// cells of width `h` with exact masses placed at the cell midpoints; the
/// masses are convolved and, for queries, each atom of the sum is spread
/// uniformly over one cell.
#[derive(Debug, Clone)]
pub struct CasEngine {
    t_cap: f64,
    step: f64,
    kind: Kind,
}

impl CasEngine {
    pub fn new(p: &PowerAllocation, alpha_e: f64, t_cap: f64, cfg: &CASGridConfig) -> Result<Self> {
        check_alpha(alpha_e)?;
        cfg.validate()?;
        let active: Vec<f64> = p.values().iter().copied().filter(|&p| p > 0.0).collect();
        let step = cfg.grid_step;
        let t_cap = t_cap.max(0.0);
        let kind = match active.len() {
            0 => Kind::Silent,
            1 => Kind::Single {
                p_alpha: active[0] * alpha_e,
            },
            k => {
                let offset = 0.5 * k as f64;
                // Sum atom n sits at (n + k/2) h and covers [n, n + 1) in units
                // of u = t/h - k/2 + 1/2.
                let u_max = t_cap / step - offset + 0.5;
                let len = if u_max < 0.0 { 1 } else { u_max.floor() as usize + 2 };
                let uniform = active.iter().all(|&p| p == active[0]);
                let cells: Vec<Vec<f64>> = if uniform {
                    vec![channel_cells(active[0] * alpha_e, step, len, cfg)?]
                } else {
                    active
                        .iter()
                        .map(|&p| channel_cells(p * alpha_e, step, len, cfg))
                        .collect::<Result<_>>()?
                };
                let mut mass = if uniform {
                    convolve_power(&cells[0], k, len)
                } else {
                    let mut acc = cells[0].clone();
                    for c in &cells[1..] {
                        acc = convolve_truncated(&acc, c, len);
                    }
                    acc
                };
                mass.resize(len, 0.0);
                let mut cum = Vec::with_capacity(len + 1);
                let mut run = 0.0;
                cum.push(0.0);
                for m in &mass {
                    run += m;
                    cum.push(run);
                }
                Kind::Grid { offset, cum, mass }
            }
        };
        Ok(Self { t_cap, step, kind })
    }

    /// Largest threshold the engine can answer.
    pub fn t_cap(&self) -> f64 {
        self.t_cap
    }

    /// `P[S >= t]` for Eve's sum rate `S`.
    pub fn tail(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(1.0);
        }
        match &self.kind {
            Kind::Silent => Ok(0.0),
            Kind::Single { p_alpha } => Ok(single_tail(t, *p_alpha)),
            Kind::Grid { offset, cum, mass } => {
                if t > self.t_cap * (1.0 + 1e-12) + 1e-15 {
                    return Err(Error::Accuracy(format!(
                        "threshold {t} lies beyond the grid cap {}",
                        self.t_cap
                    )));
                }
                let u = t / self.step - offset + 0.5;
                if u <= 0.0 {
                    return Ok(1.0);
                }
                let i = (u.floor() as usize).min(mass.len() - 1);
                let below = cum[i] + mass[i] * (u - i as f64).min(1.0);
                // Rounding in the running sum may exceed 1 by a few ulps.
                Ok((1.0 - below).clamp(0.0, 1.0))
            }
        }
    }
}

/// Exact per-cell masses of `log2(1 + G P)` for `G ~ Exp(alpha)`, `p_alpha =
/// P * alpha`, truncated to `len` cells or where the survival drops below
/// the cutoff.
fn channel_cells(p_alpha: f64, step: f64, len: usize, cfg: &CASGridConfig) -> Result<Vec<f64>> {
    let x_max = (p_alpha * -cfg.tail_cutoff.ln()).ln_1p() / LN_2;
    let needed = (x_max / step).ceil() as usize + 1;
    let m = needed.min(len);
    if m > cfg.max_cells {
        return Err(Error::Accuracy(format!(
            "grid needs {m} cells per channel, above the limit of {}; raise grid_step",
            cfg.max_cells
        )));
    }
    let scaled = |j: usize| (j as f64 * step * LN_2).exp_m1() / p_alpha;
    let mut out = Vec::with_capacity(m);
    let mut a = scaled(0);
    for j in 0..m {
        let b = scaled(j + 1);
        out.push((-a).exp() * -(a - b).exp_m1());
        a = b;
    }
    Ok(out)
}

fn convolve_truncated(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let full = a.len() + b.len() - 1;
    let out_len = full.min(len);
    if a.len().saturating_mul(b.len()) <= DIRECT_CONV_LIMIT {
        let mut out = vec![0.0; out_len];
        for (i, &x) in a.iter().enumerate() {
            if i >= out_len {
                break;
            }
            for (j, &y) in b.iter().enumerate().take(out_len - i) {
                out[i + j] += x * y;
            }
        }
        return out;
    }
    let n = full.next_power_of_two();
    let mut fa = to_spectrum(a, n);
    let fb = to_spectrum(b, n);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    from_spectrum(fa, out_len)
}

/// `k`-fold self-convolution through one forward and one inverse FFT.
fn convolve_power(a: &[f64], k: usize, len: usize) -> Vec<f64> {
    if k == 1 {
        return a[..a.len().min(len)].to_vec();
    }
    let full = k * (a.len() - 1) + 1;
    if a.len().saturating_mul(a.len()) <= DIRECT_CONV_LIMIT && k <= 4 {
        let mut acc = a.to_vec();
        for _ in 1..k {
            acc = convolve_truncated(&acc, a, len);
        }
        return acc;
    }
    let n = full.next_power_of_two();
    let mut fa = to_spectrum(a, n);
    for x in fa.iter_mut() {
        *x = x.powu(k as u32);
    }
    from_spectrum(fa, full.min(len))
}

fn to_spectrum(a: &[f64], n: usize) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = a.iter().map(|&x| Complex::new(x, 0.0)).collect();
    buf.resize(n, Complex::new(0.0, 0.0));
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n).process(&mut buf));
    buf
}

fn from_spectrum(mut buf: Vec<Complex<f64>>, out_len: usize) -> Vec<f64> {
    let n = buf.len();
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut buf));
    // Round-off leaves tiny negative masses where the true value is ~0.
    buf[..out_len].iter().map(|c| (c.re / n as f64).max(0.0)).collect()
}

/// Monte Carlo estimate of the CAS outage probability over Eve's gains.
pub fn cas_outage_mc(q: &OutageQuery, n: usize, stream: SeededStream) -> Result<MCEstimate> {
    let r = q.joint_rate()?;
    if n == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let powers = q.p.values();
    if r == 0.0 && powers.iter().all(|&p| p == 0.0) {
        return Ok(MCEstimate::from_count(0, n));
    }
    let t = bob_sum_rate(&q.h, &q.p) - r;
    let mut rng = stream.rng();
    let mut hits = 0;
    for _ in 0..n {
        let eve: f64 = powers
            .iter()
            .map(|&p| (exponential(&mut rng, q.alpha_e) * p).ln_1p())
            .sum::<f64>()
            / LN_2;
        if eve >= t {
            hits += 1;
        }
    }
    Ok(MCEstimate::from_count(hits, n))
}

/// CAS secrecy-outage probability `P[C_B - S_E <= R]`, evaluated on the grid.
pub fn cas_outage(q: &OutageQuery, cfg: &CASGridConfig) -> Result<f64> {
    let r = q.joint_rate()?;
    if r == 0.0 && q.p.values().iter().all(|&p| p == 0.0) {
        return Ok(0.0);
    }
    let t = bob_sum_rate(&q.h, &q.p) - r;
    if t <= 0.0 {
        return Ok(1.0);
    }
    CasEngine::new(&q.p, q.alpha_e, t, cfg)?.tail(t)
}

/// Largest rate `R` whose CAS outage does not exceed `eps`, to 1e-6 bits.
pub fn cas_rate_at_outage(
    p: &PowerAllocation,
    eps: f64,
    h: &GainVector,
    alpha_e: f64,
    cfg: &CASGridConfig,
) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    if p.len() != h.len() {
        return Err(Error::InvalidInput(format!("{} powers for {} gains", p.len(), h.len())));
    }
    let c_b = bob_sum_rate(h, p);
    if c_b <= 0.0 {
        return Ok(0.0);
    }
    let engine = CasEngine::new(p, alpha_e, c_b, cfg)?;
    rate_at_outage_with(&engine, c_b, eps)
}

/// Largest rate whose outage `P[S_E >= c_b - R]` does not exceed `eps`, to
/// 1e-6 bits, for an engine built for the active powers with `t_cap >= c_b`.
pub fn rate_at_outage_with(engine: &CasEngine, c_b: f64, eps: f64) -> Result<f64> {
    if c_b <= 0.0 {
        return Ok(0.0);
    }
    let outage = |r: f64| engine.tail(c_b - r);
    if outage(0.0)? > eps {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, c_b);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if outage(mid)? <= eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
