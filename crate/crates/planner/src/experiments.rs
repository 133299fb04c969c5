//! Experiment runners. Each returns a [`Table`] whose rows are assembled in a
//! fixed order, so output depends only on the configuration and seed even
//! when grid points run in parallel.

use rayon::prelude::*;

use secrecy_core::alloc::{
    cas_optimize_with_starts, cps_optimize, cps_rate_fixed_power, equal_power, select_uniform_batch, waterfilling,
};
use secrecy_core::channels::{
    db_to_linear, sample_gains, ChannelModel, GainVector, PowerAllocation, RateAllocation, SeededStream, Side,
};
use secrecy_core::codes::ConstellationCapacity;
use secrecy_core::outage::{cas_outage, cas_rate_at_outage, cps_outage, CASGridConfig, OutageQuery};
use secrecy_core::secgap::{
    constrained_secrecy_rate, equivocation_rate, gamma_bar_min_b, secgap_cdf_mc, security_gap_eps,
    security_gap_omega_eps, Scheme,
};

use crate::config::ExperimentConfig;
use crate::output::{Cell, Table};
use crate::PlannerError;

type Result<T> = std::result::Result<T, PlannerError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Table1,
    Table2,
    SecgapCdf,
    Contours,
    Selection,
    Equivocation,
    Outage,
    Optimize,
}

impl Experiment {
    /// Preset used when the config file names none.
    pub fn default_preset(self, scheme: Option<Scheme>) -> Option<&'static str> {
        match self {
            Self::Table1 => Some("table1"),
            Self::Table2 => Some("table2"),
            Self::SecgapCdf => Some("fig4"),
            Self::Contours if scheme == Some(Scheme::Cas) => Some("fig8"),
            Self::Contours => Some("fig6"),
            Self::Selection => Some("fig9"),
            Self::Equivocation => Some("fig5"),
            Self::Outage | Self::Optimize => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Optimal,
    Waterfilling,
    Equal,
}

impl Strategy {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "optimal" => Some(Self::Optimal),
            "waterfilling" => Some(Self::Waterfilling),
            "equal" => Some(Self::Equal),
            _ => None,
        }
    }
}

pub fn run(experiment: Experiment, cfg: &ExperimentConfig) -> Result<Table> {
    match experiment {
        Experiment::Table1 => run_table1(cfg),
        Experiment::Table2 => run_table2(cfg),
        Experiment::SecgapCdf => run_secgap_cdf(cfg),
        Experiment::Contours => {
            let strategy = cfg.raw().strategy.as_deref().unwrap_or("optimal");
            let strategy = Strategy::parse(strategy).ok_or_else(|| {
                cfg.key_error(
                    "strategy",
                    format!("expected optimal, waterfilling or equal, got `{strategy}`"),
                )
            })?;
            run_contours(cfg, cfg.scheme()?, strategy)
        }
        Experiment::Selection => run_selection(cfg),
        Experiment::Equivocation => run_equivocation(cfg),
        Experiment::Outage => run_outage(cfg),
        Experiment::Optimize => run_optimize(cfg),
    }
}

/// `(K, gamma_bar_max_E [dB], S_eps [dB])` with equal Bob gains, so every
/// channel transmits at the same power.
pub fn run_table1(cfg: &ExperimentConfig) -> Result<Table> {
    let (eps, scheme, ge) = (cfg.eps()?, cfg.scheme()?, cfg.gamma_eta_e()?);
    let mut t = Table::new(vec!["K", "gamma_bar_max_e_db", "s_eps_db"]);
    for k in cfg.k_values()? {
        let gd = cfg.gamma_delta_b(k)?;
        let p = PowerAllocation::uniform(k, 1.0)?;
        let r = security_gap_eps(&p, &vec![gd; k], &vec![ge; k], eps, scheme)?;
        t.push(vec![k.into(), r.gamma_bar_max_e_db().into(), r.s_eps_db().into()]);
    }
    Ok(t)
}

/// `(K, gamma_bar_min_B [dB], S_{omega,eps} [dB])` for Rayleigh Bob gains
/// known only in distribution.
pub fn run_table2(cfg: &ExperimentConfig) -> Result<Table> {
    let (eps, omega, scheme, ge) = (cfg.eps()?, cfg.omega()?, cfg.scheme()?, cfg.gamma_eta_e()?);
    let mut t = Table::new(vec!["K", "gamma_bar_min_b_db", "s_omega_eps_db"]);
    for k in cfg.k_values()? {
        let gd = vec![cfg.gamma_delta_b(k)?; k];
        let p = PowerAllocation::uniform(k, 1.0)?;
        let r = security_gap_eps(&p, &gd, &vec![ge; k], eps, scheme)?;
        let r = security_gap_omega_eps(&r, gamma_bar_min_b(&p, &gd, omega, scheme)?)?;
        t.push(vec![
            k.into(),
            r.gamma_bar_min_b_db().expect("set above").into(),
            r.s_omega_eps_db().expect("set above").into(),
        ]);
    }
    Ok(t)
}

/// Empirical CDF of the gap per K (`record = cdf`) followed by its mean
/// (`record = mean`). K uses stream `(seed, K)`.
pub fn run_secgap_cdf(cfg: &ExperimentConfig) -> Result<Table> {
    let (eps, ge, n, seed) = (cfg.eps()?, cfg.gamma_eta_e()?, cfg.n_samples()?, cfg.seed());
    let (alpha_b, p_max) = (cfg.alpha_b()?, cfg.p_max()?);
    let ks = cfg.k_values()?;
    let gds: Vec<f64> = ks.iter().map(|&k| cfg.gamma_delta_b(k)).collect::<Result<_>>()?;
    let runs: Vec<_> = ks
        .par_iter()
        .zip(&gds)
        .map(|(&k, &gd)| {
            let model = ChannelModel::new(k, alpha_b, 1.0, p_max)?;
            secgap_cdf_mc(&model, gd, ge, eps, n, SeededStream::new(seed, k as u64))
        })
        .collect::<std::result::Result<_, _>>()?;
    let mut t = Table::new(vec!["K", "record", "s_eps_db", "cdf"]);
    for (&k, r) in ks.iter().zip(runs) {
        for (s, c) in r.cdf() {
            t.push(vec![k.into(), "cdf".into(), s.into(), c.into()]);
        }
        t.push(vec![k.into(), "mean".into(), r.mean_db.into(), Cell::Empty]);
    }
    Ok(t)
}

/// Eve's mean gain: `alpha_e`, or `alpha_e_p_max / p_max`.
fn eve_mean(cfg: &ExperimentConfig) -> Result<f64> {
    if cfg.raw().alpha_e.is_some() || cfg.raw().alpha_e_db.is_some() {
        return cfg.alpha_e();
    }
    Ok(cfg.alpha_e_p_max()? / cfg.p_max()?)
}

fn grid(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let lo = cfg.need(&cfg.raw().grid_min_db, "grid_min_db")?;
    let hi = cfg.need(&cfg.raw().grid_max_db, "grid_max_db")?;
    let n = cfg.need(&cfg.raw().grid_points, "grid_points")?;
    if n < 2 || hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return Err(cfg.key_error("grid_points", "need at least 2 points and grid_max_db > grid_min_db"));
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

/// Total rate and powers at one gain pair.
fn contour_point(
    h: &GainVector,
    model: &ChannelModel,
    eps: f64,
    scheme: Scheme,
    strategy: Strategy,
    grid_cfg: &CASGridConfig,
) -> secrecy_core::Result<(f64, PowerAllocation)> {
    let fixed = match strategy {
        Strategy::Optimal => None,
        Strategy::Waterfilling => Some(waterfilling(h, model)?),
        Strategy::Equal => Some(equal_power(model)),
    };
    match (scheme, fixed) {
        (Scheme::Cps, Some(p)) => Ok((cps_rate_fixed_power(h, &p, model.alpha_e(), eps)?.total_rate, p)),
        (Scheme::Cps, None) => {
            let s = cps_optimize(h, model, eps)?;
            Ok((s.total_rate, s.p))
        }
        (Scheme::Cas, Some(p)) => Ok((cas_rate_at_outage(&p, eps, h, model.alpha_e(), grid_cfg)?, p)),
        (Scheme::Cas, None) => {
            // The CPS optimum is a feasible CAS start whose CAS rate is at least its CPS rate.
            let cps = cps_optimize(h, model, eps)?;
            let s = cas_optimize_with_starts(h, model, eps, grid_cfg, &[cps.p])?;
            Ok((s.r, s.p))
        }
    }
}

/// Mean secrecy rate `(1/K) sum_k R_k` over a square grid of `H_k P_max` in
/// dB (K = 2). Only the upper triangle is solved; the rest is mirrored.
pub fn run_contours(cfg: &ExperimentConfig, scheme: Scheme, strategy: Strategy) -> Result<Table> {
    let k = cfg.k()?;
    if k != 2 {
        return Err(cfg.key_error("k", format!("contours are defined for K = 2, got {k}")));
    }
    let (eps, p_max, alpha_e) = (cfg.eps()?, cfg.p_max()?, eve_mean(cfg)?);
    let model = ChannelModel::new(2, cfg.alpha_b().unwrap_or(1.0), alpha_e, p_max)?;
    let xs = grid(cfg)?;
    let n = xs.len();
    let grid_cfg = CASGridConfig::default();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let solved: Vec<(f64, Vec<f64>)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let h = GainVector::new(vec![db_to_linear(xs[i]) / p_max, db_to_linear(xs[j]) / p_max])?;
            let (r, p) = contour_point(&h, &model, eps, scheme, strategy, &grid_cfg)?;
            Ok((r, p.values().to_vec()))
        })
        .collect::<secrecy_core::Result<_>>()?;
    let mut at = vec![vec![(0.0, vec![]); n]; n];
    for (&(i, j), (r, p)) in pairs.iter().zip(solved) {
        at[j][i] = (r, vec![p[1], p[0]]);
        at[i][j] = (r, p);
    }
    let mut t = Table::new(vec!["h1_pmax_db", "h2_pmax_db", "mean_rate", "p1_fraction"]);
    for i in 0..n {
        for j in 0..n {
            let (r, p) = &at[i][j];
            let total: f64 = p.iter().sum();
            let frac = if total > 0.0 { p[0] / total } else { 0.0 };
            t.push(vec![xs[i].into(), xs[j].into(), (r / 2.0).into(), frac.into()]);
        }
    }
    Ok(t)
}

/// Uniform power on the best `K'` channels under CAS, per Eve mean gain:
/// a `mean` row with the average of `(1/K) R` over Bob draws, then the sorted
/// per-draw rates as a CDF. Bob draw `d` uses stream `(seed, 0).child(d)`
/// for every `alpha_E`, so the curves share their random numbers.
pub fn run_selection(cfg: &ExperimentConfig) -> Result<Table> {
    let (k, eps, alpha_b, p_max) = (cfg.k()?, cfg.eps()?, cfg.alpha_b()?, cfg.p_max()?);
    let (n, seed) = (cfg.n_samples()?, cfg.seed());
    let alphas = cfg.need(&cfg.raw().alpha_e_db_values, "alpha_e_db_values")?;
    let grid_cfg = CASGridConfig::default();
    let base = ChannelModel::new(k, alpha_b, 1.0, p_max)?;
    let draws: Vec<GainVector> = (0..n)
        .map(|d| sample_gains(&base, Side::Bob, SeededStream::new(seed, 0).child(d as u64)))
        .collect();
    let mut t = Table::new(vec!["record", "alpha_e_db", "mean_rate", "cdf", "k_prime"]);
    for &a_db in &alphas {
        let model = base.with_alpha_e(db_to_linear(a_db))?;
        let mut per: Vec<(f64, usize)> = select_uniform_batch(&draws, &model, eps, &grid_cfg)?
            .into_iter()
            .map(|s| (s.rate / k as f64, s.k_prime))
            .collect();
        let mean = per.iter().map(|x| x.0).sum::<f64>() / n as f64;
        t.push(vec!["mean".into(), a_db.into(), mean.into(), Cell::Empty, Cell::Empty]);
        per.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (i, (r, kp)) in per.into_iter().enumerate() {
            t.push(vec![
                "cdf".into(),
                a_db.into(),
                r.into(),
                ((i + 1) as f64 / n as f64).into(),
                kp.into(),
            ]);
        }
    }
    Ok(t)
}

/// `(gamma_bar_E [dB], K, R_e, C_s)` over a grid of Eve mean SNRs.
pub fn run_equivocation(cfg: &ExperimentConfig) -> Result<Table> {
    let eps = cfg.eps()?;
    let rc = match cfg.raw().code_rate {
        Some(rc) => rc,
        None => cfg.code()?.rc(),
    };
    let lo = cfg.need(&cfg.raw().gamma_e_min_db, "gamma_e_min_db")?;
    let hi = cfg.need(&cfg.raw().gamma_e_max_db, "gamma_e_max_db")?;
    let n = cfg.need(&cfg.raw().gamma_e_points, "gamma_e_points")?;
    if n < 2 || hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return Err(cfg.key_error(
            "gamma_e_points",
            "need at least 2 points and gamma_e_max_db > gamma_e_min_db",
        ));
    }
    let cap = ConstellationCapacity::default_bpsk();
    let mut t = Table::new(vec!["gamma_bar_e_db", "K", "r_e", "c_s"]);
    for i in 0..n {
        let g_db = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let g = db_to_linear(g_db);
        for k in cfg.k_values()? {
            let gd = cfg.gamma_delta_b(k)?;
            let re = equivocation_rate(rc, g, eps, k, cap)?;
            let cs = constrained_secrecy_rate(gd, g, eps, k, cap)?;
            t.push(vec![g_db.into(), k.into(), re.into(), cs.into()]);
        }
    }
    Ok(t)
}

/// One secrecy outage probability: per-channel `rates` for CPS, a joint
/// `rate` for CAS.
pub fn run_outage(cfg: &ExperimentConfig) -> Result<Table> {
    let scheme = cfg.scheme()?;
    let h = GainVector::new(cfg.gains()?)?;
    let p = PowerAllocation::new(cfg.need(&cfg.raw().p, "p")?)?;
    let alpha_e = eve_mean(cfg)?;
    let value = match scheme {
        Scheme::Cps => {
            let r = RateAllocation::per_channel(cfg.need(&cfg.raw().rates, "rates")?)?;
            cps_outage(&OutageQuery::new(p, r, h, alpha_e)?)?
        }
        Scheme::Cas => {
            let r = RateAllocation::joint(cfg.need(&cfg.raw().rate, "rate")?)?;
            cas_outage(&OutageQuery::new(p, r, h, alpha_e)?, &CASGridConfig::default())?
        }
    };
    let mut t = Table::new(vec!["scheme", "outage"]);
    t.push(vec![scheme.as_str().into(), value.into()]);
    Ok(t)
}

/// One optimal allocation: per-channel rows then a `total` row. CPS rows carry
/// each sub-message's rate and outage target; CAS reports the joint rate and
/// achieved outage on the total row only.
pub fn run_optimize(cfg: &ExperimentConfig) -> Result<Table> {
    let scheme = cfg.scheme()?;
    let hv = cfg.gains()?;
    let h = GainVector::new(hv.clone())?;
    let eps = cfg.eps()?;
    let model = ChannelModel::new(hv.len(), cfg.alpha_b().unwrap_or(1.0), eve_mean(cfg)?, cfg.p_max()?)?;
    let mut t = Table::new(vec!["channel", "h", "p", "rate", "outage"]);
    match scheme {
        Scheme::Cps => {
            let s = cps_optimize(&h, &model, eps)?;
            let RateAllocation::PerChannel(rates) = &s.r else {
                unreachable!("CPS solutions carry per-channel rates")
            };
            let mut pbar = vec![0.0; hv.len()];
            if let Some(tg) = &s.targets {
                for (j, &i) in s.active.iter().enumerate() {
                    pbar[i] = tg.pbar[j];
                }
            }
            for (i, (((&h, &p), &r), &o)) in hv.iter().zip(s.p.values()).zip(rates).zip(&pbar).enumerate() {
                t.push(vec![(i + 1).into(), h.into(), p.into(), r.into(), o.into()]);
            }
            let spent = 1.0 - pbar.iter().map(|p| 1.0 - p).product::<f64>();
            t.push(vec![
                "total".into(),
                Cell::Empty,
                s.p.mean().into(),
                s.total_rate.into(),
                spent.into(),
            ]);
        }
        Scheme::Cas => {
            let cps = cps_optimize(&h, &model, eps)?;
            let s = cas_optimize_with_starts(&h, &model, eps, &CASGridConfig::default(), &[cps.p])?;
            for (i, (&h, &p)) in hv.iter().zip(s.p.values()).enumerate() {
                t.push(vec![(i + 1).into(), h.into(), p.into(), Cell::Empty, Cell::Empty]);
            }
            t.push(vec![
                "total".into(),
                Cell::Empty,
                s.p.mean().into(),
                s.r.into(),
                s.achieved_outage.into(),
            ]);
        }
    }
    Ok(t)
}
