//! Secrecy-outage probabilities over Eve's Rayleigh gains.
//!
//! Coding per sub-message (CPS) has a product-form closed expression. Coding
//! across sub-messages (CAS) needs the distribution of Eve's sum rate
//! `S = sum_k log2(1 + G_k P_k)`, which is built numerically on a grid by
//! [`CasEngine`] and cross-checked by [`cas_outage_mc`].

mod cas;
mod constellation;
mod cps;

pub use cas::{bob_sum_rate, cas_outage, cas_outage_mc, cas_rate_at_outage, rate_at_outage_with, CasEngine};
pub use constellation::{constellation_outage_cas_bound, constellation_outage_cps};
pub use cps::{cps_outage, cps_submessage_outage};

use crate::channels::{GainVector, PowerAllocation, RateAllocation};
use crate::{Error, Result};

/// Arguments of `p_s(P, R; H)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageQuery {
    pub p: PowerAllocation,
    pub rates: RateAllocation,
    pub h: GainVector,
    pub alpha_e: f64,
}

impl OutageQuery {
    pub fn new(p: PowerAllocation, rates: RateAllocation, h: GainVector, alpha_e: f64) -> Result<Self> {
        if p.len() != h.len() {
            return Err(Error::InvalidInput(format!(
                "{} powers for {} channel gains",
                p.len(),
                h.len()
            )));
        }
        if let RateAllocation::PerChannel(r) = &rates {
            if r.len() != h.len() {
                return Err(Error::InvalidInput(format!(
                    "{} rates for {} channel gains",
                    r.len(),
                    h.len()
                )));
            }
        }
        check_alpha(alpha_e)?;
        Ok(Self { p, rates, h, alpha_e })
    }

    pub fn k(&self) -> usize {
        self.h.len()
    }

    pub(crate) fn per_channel_rates(&self) -> Result<&[f64]> {
        match &self.rates {
            RateAllocation::PerChannel(r) => Ok(r),
            RateAllocation::Joint(_) => Err(Error::InvalidInput("this evaluator needs one rate per channel".into())),
        }
    }

    pub(crate) fn joint_rate(&self) -> Result<f64> {
        match &self.rates {
            RateAllocation::Joint(r) => Ok(*r),
            RateAllocation::PerChannel(_) => {
                Err(Error::InvalidInput("this evaluator needs a single joint rate".into()))
            }
        }
    }
}

pub(crate) fn check_alpha(alpha_e: f64) -> Result<()> {
    if !(alpha_e > 0.0 && alpha_e.is_finite()) {
        return Err(Error::Domain(format!("alpha_E must be positive, got {alpha_e}")));
    }
    Ok(())
}

/// A Monte Carlo probability with its normal-approximation 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub estimate: f64,
    pub half_width_95: f64,
    pub n_samples: usize,
}

impl MCEstimate {
    pub fn from_count(hits: usize, n: usize) -> Self {
        let p = hits as f64 / n as f64;
        Self {
            estimate: p,
            half_width_95: 1.96 * (p * (1.0 - p) / n as f64).sqrt(),
            n_samples: n,
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        (p - self.estimate).abs() <= self.half_width_95
    }
}

/// Discretisation of the CAS rate-domain grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CASGridConfig {
    /// Cell width in bits.
    pub grid_step: f64,
    /// Per-channel survival probability below which the grid is cut.
    pub tail_cutoff: f64,
    /// Largest per-channel cell count before the grid is declared too fine.
    pub max_cells: usize,
}

impl Default for CASGridConfig {
    fn default() -> Self {
        Self {
            grid_step: 1.0 / 1024.0,
            tail_cutoff: 1e-12,
            max_cells: 1 << 22,
        }
    }
}

impl CASGridConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grid_step > 0.0 && self.grid_step.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "grid_step must be positive, got {}",
                self.grid_step
            )));
        }
        if !(self.tail_cutoff > 0.0 && self.tail_cutoff < 1.0) {
            return Err(Error::InvalidInput(format!(
                "tail_cutoff must lie in (0, 1), got {}",
                self.tail_cutoff
            )));
        }
        if self.max_cells < 2 {
            return Err(Error::InvalidInput("max_cells must be at least 2".into()));
        }
        Ok(())
    }
}
