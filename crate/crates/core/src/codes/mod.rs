//! Finite-length code metrics for BPSK over (block-)fading channels.
//!
//! SNRs here are per coded symbol and linear: a codeword of weight `w` seen
//! at SNR `gamma` is confused with the all-zero word with probability
//! `Q(sqrt(2 gamma w))`.

pub mod capacity;
pub mod spb;
pub mod special;

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

pub use capacity::{bpsk_capacity, bpsk_capacity_inv, ConstellationCapacity};
pub use spb::{gamma_eta_e, solve_theta1, spb_cer, SpbParams};
pub use special::q_function;

use crate::channels::{GainVector, SeededStream};
use crate::numeric::bisect;
use crate::{Error, Result};

/// Number of weight-22 codewords of the extended BCH (128,64) code.
pub const EBCH_128_64_A22: u64 = 243_840;

const EBCH_128_64_SPECTRUM: &str = include_str!("../../data/ebch_128_64.spectrum");
const HAMMING_7_4_SUPPORTS: &str = include_str!("../../data/hamming_7_4.supports");

/// A binary linear block code described by its weight spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSpec {
    n: usize,
    rc: f64,
    spectrum: Vec<(usize, f64)>,
    full_spectrum: bool,
    supports: Option<Vec<Vec<usize>>>,
}

impl CodeSpec {
    /// Builds a code from `(w, A_w)` pairs with strictly ascending `w`.
    /// `full_spectrum` records whether the table covers every nonzero weight.
    pub fn new(n: usize, rc: f64, spectrum: Vec<(usize, f64)>, full_spectrum: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("block length must be positive".into()));
        }
        if !(rc > 0.0 && rc <= 1.0) {
            return Err(Error::InvalidInput(format!("code rate must lie in (0, 1], got {rc}")));
        }
        if spectrum.is_empty() {
            return Err(Error::InvalidInput("weight spectrum is empty".into()));
        }
        let mut prev = 0usize;
        for &(w, a) in &spectrum {
            if w <= prev || w > n {
                return Err(Error::InvalidInput(format!(
                    "spectrum weights must be ascending in [1, {n}], got {w} after {prev}"
                )));
            }
            if !(a >= 1.0 && a.fract() == 0.0) {
                return Err(Error::InvalidInput(format!("A_{w} must be an integer >= 1, got {a}")));
            }
            prev = w;
        }
        Ok(Self {
            n,
            rc,
            spectrum,
            full_spectrum,
            supports: None,
        })
    }

    /// Attaches explicit codeword supports (zero-based bit positions).
    /// Each support must be a set of distinct indices whose size is a weight
    /// listed in the spectrum.
    pub fn with_supports(mut self, supports: Vec<Vec<usize>>) -> Result<Self> {
        for (i, s) in supports.iter().enumerate() {
            let mut sorted = s.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != s.len() {
                return Err(Error::InvalidInput(format!("support {i} repeats a bit index")));
            }
            if let Some(&bad) = s.iter().find(|&&b| b >= self.n) {
                return Err(Error::InvalidInput(format!(
                    "support {i} has index {bad} outside a length-{} code",
                    self.n
                )));
            }
            if self.spectrum.binary_search_by_key(&s.len(), |&(w, _)| w).is_err() {
                return Err(Error::InvalidInput(format!(
                    "support {i} has weight {} which is not in the spectrum",
                    s.len()
                )));
            }
        }
        self.supports = Some(supports);
        Ok(self)
    }

    /// Extended BCH (128,64) with the bundled spectrum table.
    pub fn ebch_128_64() -> Self {
        let spectrum = parse_spectrum(EBCH_128_64_SPECTRUM, "ebch_128_64.spectrum").expect("bundled spectrum parses");
        Self::new(128, 0.5, spectrum, true).expect("bundled spectrum is valid")
    }

    /// Extended BCH (128,64) with only the minimum-weight term.
    pub fn ebch_128_64_truncated() -> Self {
        Self::new(128, 0.5, vec![(22, EBCH_128_64_A22 as f64)], false).expect("valid")
    }

    /// (7,4) Hamming code with all 15 nonzero codeword supports.
    pub fn hamming_7_4() -> Self {
        let supports = parse_supports(HAMMING_7_4_SUPPORTS, "hamming_7_4.supports", 7).expect("bundled supports parse");
        Self::new(7, 4.0 / 7.0, vec![(3, 7.0), (4, 7.0), (7, 1.0)], true)
            .and_then(|c| c.with_supports(supports))
            .expect("valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rc(&self) -> f64 {
        self.rc
    }

    pub fn d_min(&self) -> usize {
        self.spectrum[0].0
    }

    pub fn spectrum(&self) -> &[(usize, f64)] {
        &self.spectrum
    }

    pub fn has_full_spectrum(&self) -> bool {
        self.full_spectrum
    }

    pub fn supports(&self) -> Option<&[Vec<usize>]> {
        self.supports.as_deref()
    }
}

fn parse_error(source_name: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source_name.to_string(),
        line,
        message: message.into(),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

/// Parses a weight-spectrum table: one `w A_w` pair per line, ascending `w`,
/// `#` starts a comment.
pub fn parse_spectrum(text: &str, source_name: &str) -> Result<Vec<(usize, f64)>> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    for (line, l) in content_lines(text) {
        let fields: Vec<&str> = l.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(parse_error(source_name, line, format!("expected `w A_w`, got `{l}`")));
        }
        let w: usize = fields[0]
            .parse()
            .map_err(|_| parse_error(source_name, line, format!("bad weight `{}`", fields[0])))?;
        let a: u128 = fields[1]
            .parse()
            .map_err(|_| parse_error(source_name, line, format!("bad multiplicity `{}`", fields[1])))?;
        if a == 0 {
            return Err(parse_error(source_name, line, "multiplicity must be at least 1"));
        }
        if let Some(&(prev, _)) = out.last() {
            if w <= prev {
                return Err(parse_error(source_name, line, format!("weight {w} not above {prev}")));
            }
        }
        if w == 0 {
            return Err(parse_error(source_name, line, "weight 0 is not a nonzero codeword"));
        }
        out.push((w, a as f64));
    }
    if out.is_empty() {
        return Err(parse_error(source_name, 0, "no spectrum entries"));
    }
    Ok(out)
}

/// Parses a codeword-support list: one codeword per line, space-separated
/// zero-based bit indices below `n`.
pub fn parse_supports(text: &str, source_name: &str, n: usize) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for (line, l) in content_lines(text) {
        let mut s = Vec::new();
        for f in l.split_whitespace() {
            let b: usize = f
                .parse()
                .map_err(|_| parse_error(source_name, line, format!("bad bit index `{f}`")))?;
            if b >= n {
                return Err(parse_error(source_name, line, format!("bit index {b} not below {n}")));
            }
            s.push(b);
        }
        out.push(s);
    }
    Ok(out)
}

pub fn load_spectrum(path: &Path) -> Result<Vec<(usize, f64)>> {
    parse_spectrum(&std::fs::read_to_string(path)?, &path.display().to_string())
}

pub fn load_supports(path: &Path, n: usize) -> Result<Vec<Vec<usize>>> {
    parse_supports(&std::fs::read_to_string(path)?, &path.display().to_string(), n)
}

/// A CER bound: the raw sum and its value clamped to a probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CerBound {
    pub raw: f64,
    pub clamped: f64,
}

impl CerBound {
    fn new(raw: f64) -> Self {
        Self {
            raw,
            clamped: raw.clamp(0.0, 1.0),
        }
    }
}

/// Union bound `sum_w A_w Q(sqrt(2 gamma w))`.
pub fn union_bound_cer(code: &CodeSpec, gamma: f64) -> CerBound {
    CerBound::new(
        code.spectrum
            .iter()
            .map(|&(w, a)| a * q_function((2.0 * gamma * w as f64).sqrt()))
            .sum(),
    )
}

/// Minimum-weight term of the union bound.
pub fn truncated_union_bound_cer(code: &CodeSpec, gamma: f64) -> f64 {
    let (w, a) = code.spectrum[0];
    a * q_function((2.0 * gamma * w as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Full,
    Truncated,
}

/// SNR threshold together with a flag raised when the full-spectrum bound was
/// requested but only a partial spectrum was available.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub gamma: f64,
    pub reduced_fidelity: bool,
}

/// Smallest per-symbol SNR at which the chosen union bound reaches `delta`.
pub fn gamma_delta_b(code: &CodeSpec, delta: f64, bound: BoundKind) -> Result<Threshold> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let reduced_fidelity = bound == BoundKind::Full && !code.full_spectrum;
    let eval = |g: f64| match bound {
        BoundKind::Full => union_bound_cer(code, g).raw,
        BoundKind::Truncated => truncated_union_bound_cer(code, g),
    };
    // The bound is decreasing in gamma; solve on a log scale.
    let (lo_db, hi_db) = (-40.0, 40.0);
    if eval(10f64.powf(hi_db / 10.0)) > delta {
        return Err(Error::SearchRange(format!(
            "bound stays above delta = {delta} up to {hi_db} dB"
        )));
    }
    let g_db = bisect(|x| eval(10f64.powf(x / 10.0)).ln() - delta.ln(), lo_db, hi_db, 1e-10)?;
    Ok(Threshold {
        gamma: 10f64.powf(g_db / 10.0),
        reduced_fidelity,
    })
}

fn per_bit_snr(code: &CodeSpec, gains: &GainVector, p_bits: &[f64]) -> Result<Vec<f64>> {
    if gains.len() != code.n || p_bits.len() != code.n {
        return Err(Error::InvalidInput(format!(
            "need {} per-bit gains and powers, got {} and {}",
            code.n,
            gains.len(),
            p_bits.len()
        )));
    }
    Ok(gains.values().iter().zip(p_bits).map(|(g, p)| g * p).collect())
}

fn require_supports(code: &CodeSpec) -> Result<&[Vec<usize>]> {
    code.supports().ok_or_else(|| {
        Error::Capability(
            "codeword supports are required; load them with load_supports and CodeSpec::with_supports".into(),
        )
    })
}

/// Per-realization union estimate `sum_c Q(sqrt(2 sum_{i in c} gamma_i))`
/// where bit `i` sees SNR `gains[i] * p_bits[i]`.
pub fn per_realization_cer(code: &CodeSpec, gains: &GainVector, p_bits: &[f64]) -> Result<CerBound> {
    let supports = require_supports(code)?;
    let snr = per_bit_snr(code, gains, p_bits)?;
    Ok(per_realization_cer_snr(supports, &snr))
}

/// Same estimate from per-bit SNRs directly.
pub fn per_realization_cer_snr(supports: &[Vec<usize>], snr: &[f64]) -> CerBound {
    CerBound::new(
        supports
            .iter()
            .map(|s| q_function((2.0 * s.iter().map(|&i| snr[i]).sum::<f64>()).sqrt()))
            .sum(),
    )
}

/// Monte Carlo CER of exhaustive ML decoding with BPSK, valid when the
/// supports list every nonzero codeword.
///
/// The all-zero word is sent; bit `i` is received as `a_i + z_i` with
/// `a_i = sqrt(2 gamma_i)` and unit-variance noise, and the decoder errs when
/// some codeword `c` has `sum_{i in c} a_i y_i < 0`.
pub fn exhaustive_ml_cer_mc(
    code: &CodeSpec,
    gains: &GainVector,
    p_bits: &[f64],
    n_trials: usize,
    stream: SeededStream,
) -> Result<f64> {
    let supports = require_supports(code)?;
    let snr = per_bit_snr(code, gains, p_bits)?;
    let amp: Vec<f64> = snr.iter().map(|g| (2.0 * g).sqrt()).collect();
    let mut rng = stream.rng();
    let mut errors = 0usize;
    let mut weighted = vec![0.0; code.n];
    for _ in 0..n_trials {
        for (w, a) in weighted.iter_mut().zip(&amp) {
            let z: f64 = rng.sample(StandardNormal);
            *w = a * (a + z);
        }
        if supports
            .iter()
            .any(|s| s.iter().map(|&i| weighted[i]).sum::<f64>() < 0.0)
        {
            errors += 1;
        }
    }
    Ok(errors as f64 / n_trials as f64)
}
