//! Experiment configuration: flat TOML files layered over named presets.
//!
//! Quantities that are commonly quoted in dB have two keys, `x` (linear) and
//! `x_db`; giving both in one file is an error. A key set in the user file
//! replaces the preset's value for that quantity in either form.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use secrecy_core::channels::db_to_linear;
use secrecy_core::codes::{self, CodeSpec};
use secrecy_core::secgap::Scheme;

use crate::PlannerError;

/// Raw keys as written in a config file or preset. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub preset: Option<String>,
    pub k: Option<usize>,
    pub k_values: Option<Vec<usize>>,
    pub alpha_b: Option<f64>,
    pub alpha_b_db: Option<f64>,
    pub alpha_e: Option<f64>,
    pub alpha_e_db: Option<f64>,
    pub p_max: Option<f64>,
    pub p_max_db: Option<f64>,
    pub alpha_e_p_max: Option<f64>,
    pub alpha_e_p_max_db: Option<f64>,
    pub eps: Option<f64>,
    pub omega: Option<f64>,
    pub delta: Option<f64>,
    pub rho: Option<f64>,
    pub eta: Option<f64>,
    pub gamma_delta_b: Option<f64>,
    pub gamma_delta_b_db: Option<f64>,
    pub gamma_eta_e: Option<f64>,
    pub gamma_eta_e_db: Option<f64>,
    pub code: Option<String>,
    pub code_n: Option<usize>,
    pub code_rate: Option<f64>,
    pub spectrum_file: Option<PathBuf>,
    pub supports_file: Option<PathBuf>,
    pub seed: Option<u64>,
    pub n_samples: Option<usize>,
    pub grid_min_db: Option<f64>,
    pub grid_max_db: Option<f64>,
    pub grid_points: Option<usize>,
    pub alpha_e_db_values: Option<Vec<f64>>,
    pub gamma_e_min_db: Option<f64>,
    pub gamma_e_max_db: Option<f64>,
    pub gamma_e_points: Option<usize>,
    pub h: Option<Vec<f64>>,
    pub h_db: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
    pub rates: Option<Vec<f64>>,
    pub rate: Option<f64>,
    pub scheme: Option<String>,
    pub strategy: Option<String>,
}

pub const PRESET_NAMES: [&str; 7] = ["table1", "table2", "fig4", "fig5", "fig6", "fig8", "fig9"];

fn preset_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "table1" => {
            "k_values = [1, 2, 4, 8, 16, 32, 64, 128]\neps = 0.01\ngamma_delta_b_db = 0.8\ngamma_eta_e_db = -4.8\n"
        }
        "table2" => {
            "k_values = [1, 2, 4, 8, 16, 32, 64, 128]\neps = 0.01\nomega = 0.01\n\
             gamma_delta_b_db = 0.8\ngamma_eta_e_db = -4.8\n"
        }
        "fig4" => {
            "k_values = [4, 8, 16, 32]\neps = 0.01\nalpha_b = 1.0\np_max_db = 0.8\n\
             gamma_delta_b_db = 0.8\ngamma_eta_e_db = -4.8\nn_samples = 10000\nseed = 2015\n"
        }
        "fig5" => {
            "k_values = [1, 4, 8, 16, 32]\neps = 0.01\ngamma_delta_b_db = 0.8\ncode_rate = 0.5\n\
             gamma_e_min_db = -30.0\ngamma_e_max_db = 0.0\ngamma_e_points = 61\n"
        }
        "fig6" => {
            "k = 2\neps = 0.01\np_max = 1.0\nalpha_e_p_max = 0.05\n\
             grid_min_db = -5.0\ngrid_max_db = 5.0\ngrid_points = 21\nscheme = \"cps\"\nstrategy = \"optimal\"\n"
        }
        "fig8" => {
            "k = 2\neps = 0.01\np_max = 1.0\nalpha_e_p_max = 0.05\n\
             grid_min_db = -5.0\ngrid_max_db = 5.0\ngrid_points = 21\nscheme = \"cas\"\nstrategy = \"optimal\"\n"
        }
        "fig9" => {
            "k = 48\neps = 0.01\nalpha_b = 1.0\np_max_db = 3.8\n\
             alpha_e_db_values = [-20.0, -15.0, -10.0, -5.0, 0.0]\nn_samples = 200\nseed = 2015\n"
        }
        _ => return None,
    })
}

/// Line number (1-based) of a byte offset.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Parses one TOML document, reporting the file, line and key on failure.
pub fn parse_raw(text: &str, source: &str) -> Result<RawConfig, PlannerError> {
    toml::from_str::<RawConfig>(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start));
        let key = line.and_then(|l| {
            let src = text.lines().nth(l - 1)?;
            let (k, _) = src.split_once('=')?;
            Some(k.trim().to_string())
        });
        PlannerError::Config {
            source_name: source.to_string(),
            line,
            key,
            message: e.message().to_string(),
        }
    })
}

fn preset_raw(name: &str) -> Result<RawConfig, PlannerError> {
    let text = preset_text(name).ok_or_else(|| PlannerError::Config {
        source_name: "preset".into(),
        line: None,
        key: Some("preset".into()),
        message: format!("unknown preset `{name}`; known presets: {}", PRESET_NAMES.join(", ")),
    })?;
    parse_raw(text, &format!("preset {name}"))
}

/// Resolved configuration: user keys over the preset's.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    raw: RawConfig,
    source_name: String,
}

macro_rules! overlay {
    ($user:ident, $base:ident, $out:ident; $($f:ident),* $(,)?) => {
        $( $out.$f = $user.$f.clone().or_else(|| $base.$f.clone()); )*
    };
}

/// Pairs of keys naming one quantity in linear and dB form.
macro_rules! overlay_pair {
    ($user:ident, $base:ident, $out:ident; $(($lin:ident, $db:ident)),* $(,)?) => {
        $(
            if $user.$lin.is_some() || $user.$db.is_some() {
                $out.$lin = $user.$lin.clone();
                $out.$db = $user.$db.clone();
            } else {
                $out.$lin = $base.$lin.clone();
                $out.$db = $base.$db.clone();
            }
        )*
    };
}

fn overlay(user: &RawConfig, base: &RawConfig) -> RawConfig {
    let mut out = RawConfig::default();
    overlay!(user, base, out;
        preset, k, k_values, eps, omega, delta, rho, eta, code, code_n, code_rate,
        spectrum_file, supports_file, seed, n_samples, grid_min_db, grid_max_db, grid_points,
        alpha_e_db_values, gamma_e_min_db, gamma_e_max_db, gamma_e_points, p, rates, rate,
        scheme, strategy,
    );
    overlay_pair!(user, base, out;
        (alpha_b, alpha_b_db), (alpha_e, alpha_e_db), (p_max, p_max_db),
        (alpha_e_p_max, alpha_e_p_max_db), (gamma_delta_b, gamma_delta_b_db),
        (gamma_eta_e, gamma_eta_e_db), (h, h_db),
    );
    out
}

fn conflicts(raw: &RawConfig) -> Option<(&'static str, &'static str)> {
    let pairs = [
        ("alpha_b", raw.alpha_b.is_some(), "alpha_b_db", raw.alpha_b_db.is_some()),
        ("alpha_e", raw.alpha_e.is_some(), "alpha_e_db", raw.alpha_e_db.is_some()),
        ("p_max", raw.p_max.is_some(), "p_max_db", raw.p_max_db.is_some()),
        (
            "alpha_e_p_max",
            raw.alpha_e_p_max.is_some(),
            "alpha_e_p_max_db",
            raw.alpha_e_p_max_db.is_some(),
        ),
        (
            "gamma_delta_b",
            raw.gamma_delta_b.is_some(),
            "gamma_delta_b_db",
            raw.gamma_delta_b_db.is_some(),
        ),
        (
            "gamma_eta_e",
            raw.gamma_eta_e.is_some(),
            "gamma_eta_e_db",
            raw.gamma_eta_e_db.is_some(),
        ),
        ("h", raw.h.is_some(), "h_db", raw.h_db.is_some()),
    ];
    pairs.into_iter().find(|p| p.1 && p.3).map(|p| (p.0, p.2))
}

impl ExperimentConfig {
    /// Builds a configuration from optional file text. The preset comes from
    /// the file's `preset` key, else `default_preset`.
    pub fn from_text(
        text: Option<&str>,
        source_name: &str,
        default_preset: Option<&str>,
    ) -> Result<Self, PlannerError> {
        let user = match text {
            Some(t) => parse_raw(t, source_name)?,
            None => RawConfig::default(),
        };
        if let Some((a, b)) = conflicts(&user) {
            return Err(PlannerError::Config {
                source_name: source_name.to_string(),
                line: None,
                key: Some(b.to_string()),
                message: format!("`{a}` and `{b}` give the same quantity; keep one"),
            });
        }
        let preset = user.preset.clone().or(default_preset.map(str::to_string));
        let base = match &preset {
            Some(p) => preset_raw(p)?,
            None => RawConfig::default(),
        };
        let raw = overlay(&user, &base);
        let cfg = Self {
            raw,
            source_name: source_name.to_string(),
        };
        cfg.check_files()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, default_preset: Option<&str>) -> Result<Self, PlannerError> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| PlannerError::Io {
                    path: p.to_path_buf(),
                    source: e,
                })?;
                Self::from_text(Some(&text), &p.display().to_string(), default_preset)
            }
            None => Self::from_text(None, "<defaults>", default_preset),
        }
    }

    pub fn raw(&self) -> &RawConfig {
        &self.raw
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.raw.seed = Some(seed);
    }

    pub fn set_scheme(&mut self, scheme: &str) {
        self.raw.scheme = Some(scheme.to_string());
    }

    pub fn set_strategy(&mut self, strategy: &str) {
        self.raw.strategy = Some(strategy.to_string());
    }

    fn check_files(&self) -> Result<(), PlannerError> {
        for (key, p) in [
            ("spectrum_file", &self.raw.spectrum_file),
            ("supports_file", &self.raw.supports_file),
        ] {
            if let Some(p) = p {
                if !p.is_file() {
                    return Err(self.key_error(key, format!("file {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn key_error(&self, key: &str, message: impl Into<String>) -> PlannerError {
        PlannerError::Config {
            source_name: self.source_name.clone(),
            line: None,
            key: Some(key.to_string()),
            message: message.into(),
        }
    }

    fn missing(&self, key: &str) -> PlannerError {
        self.key_error(key, "required for this experiment but not set")
    }

    pub(crate) fn need<T: Clone>(&self, v: &Option<T>, key: &str) -> Result<T, PlannerError> {
        v.clone().ok_or_else(|| self.missing(key))
    }

    fn pair(&self, lin: Option<f64>, db: Option<f64>, key: &str) -> Result<f64, PlannerError> {
        let v = match (lin, db) {
            (Some(v), _) => v,
            (None, Some(d)) => db_to_linear(d),
            (None, None) => return Err(self.key_error(key, format!("set `{key}` or `{key}_db`"))),
        };
        if !(v > 0.0 && v.is_finite()) {
            return Err(self.key_error(key, format!("must be positive, got {v}")));
        }
        Ok(v)
    }

    pub fn alpha_b(&self) -> Result<f64, PlannerError> {
        self.pair(self.raw.alpha_b, self.raw.alpha_b_db, "alpha_b")
    }

    pub fn alpha_e(&self) -> Result<f64, PlannerError> {
        self.pair(self.raw.alpha_e, self.raw.alpha_e_db, "alpha_e")
    }

    pub fn p_max(&self) -> Result<f64, PlannerError> {
        self.pair(self.raw.p_max, self.raw.p_max_db, "p_max")
    }

    pub fn alpha_e_p_max(&self) -> Result<f64, PlannerError> {
        self.pair(self.raw.alpha_e_p_max, self.raw.alpha_e_p_max_db, "alpha_e_p_max")
    }

    pub fn probability(&self, v: Option<f64>, key: &str) -> Result<f64, PlannerError> {
        let v = self.need(&v, key)?;
        if !(v > 0.0 && v < 1.0) {
            return Err(self.key_error(key, format!("must lie in (0, 1), got {v}")));
        }
        Ok(v)
    }

    pub fn eps(&self) -> Result<f64, PlannerError> {
        self.probability(self.raw.eps, "eps")
    }

    pub fn omega(&self) -> Result<f64, PlannerError> {
        self.probability(self.raw.omega, "omega")
    }

    pub fn seed(&self) -> u64 {
        self.raw.seed.unwrap_or(0)
    }

    pub fn k_values(&self) -> Result<Vec<usize>, PlannerError> {
        let ks = match (&self.raw.k_values, self.raw.k) {
            (Some(v), _) => v.clone(),
            (None, Some(k)) => vec![k],
            (None, None) => return Err(self.missing("k_values")),
        };
        if ks.is_empty() || ks.contains(&0) {
            return Err(self.key_error("k_values", "values must be positive and the list nonempty"));
        }
        Ok(ks)
    }

    pub fn k(&self) -> Result<usize, PlannerError> {
        let k = self.need(&self.raw.k, "k")?;
        if k == 0 {
            return Err(self.key_error("k", "must be positive"));
        }
        Ok(k)
    }

    pub fn n_samples(&self) -> Result<usize, PlannerError> {
        let n = self.need(&self.raw.n_samples, "n_samples")?;
        if n == 0 {
            return Err(self.key_error("n_samples", "must be positive"));
        }
        Ok(n)
    }

    pub fn scheme(&self) -> Result<Scheme, PlannerError> {
        match self.raw.scheme.as_deref().unwrap_or("cps") {
            "cps" | "CPS" => Ok(Scheme::Cps),
            "cas" | "CAS" => Ok(Scheme::Cas),
            other => Err(self.key_error("scheme", format!("expected `cps` or `cas`, got `{other}`"))),
        }
    }

    /// Linear Bob gains from `h` or `h_db`.
    pub fn gains(&self) -> Result<Vec<f64>, PlannerError> {
        match (&self.raw.h, &self.raw.h_db) {
            (Some(h), _) => Ok(h.clone()),
            (None, Some(d)) => Ok(d.iter().map(|&x| db_to_linear(x)).collect()),
            (None, None) => Err(self.key_error("h", "set `h` or `h_db`")),
        }
    }

    /// The code named by `code` (default eBCH(128, 64)), with an optional
    /// spectrum file replacing its distance spectrum and an optional support
    /// list.
    pub fn code(&self) -> Result<CodeSpec, PlannerError> {
        let base = match self.raw.code.as_deref().unwrap_or("ebch_128_64") {
            "ebch_128_64" => CodeSpec::ebch_128_64(),
            "hamming_7_4" => CodeSpec::hamming_7_4(),
            other => {
                return Err(self.key_error(
                    "code",
                    format!("expected `ebch_128_64` or `hamming_7_4`, got `{other}`"),
                ))
            }
        };
        let n = self.raw.code_n.unwrap_or(base.n());
        let rc = self.raw.code_rate.unwrap_or(base.rc());
        let mut code = match &self.raw.spectrum_file {
            Some(path) => CodeSpec::new(n, rc, codes::load_spectrum(path)?, true)?,
            None if n != base.n() || rc != base.rc() => CodeSpec::new(n, rc, base.spectrum().to_vec(), false)?,
            None => base,
        };
        if let Some(path) = &self.raw.supports_file {
            code = code.with_supports(codes::load_supports(path, n)?)?;
        }
        Ok(code)
    }

    /// `gamma_delta_B`: given directly, or from the code's union bound at
    /// `delta` (or at the `delta` implied by `rho` for `scheme` and `k`).
    pub fn gamma_delta_b(&self, k: usize) -> Result<f64, PlannerError> {
        if self.raw.gamma_delta_b.is_some() || self.raw.gamma_delta_b_db.is_some() {
            return self.pair(self.raw.gamma_delta_b, self.raw.gamma_delta_b_db, "gamma_delta_b");
        }
        let delta = match (self.raw.delta, self.raw.rho) {
            (Some(d), _) => self.probability(Some(d), "delta")?,
            (None, Some(rho)) => {
                let rho = self.probability(Some(rho), "rho")?;
                secrecy_core::secgap::TargetSpec::new(0.5, 0.5, rho, 0.5, k, self.scheme()?)?.delta()
            }
            (None, None) => return Err(self.key_error("gamma_delta_b", "set `gamma_delta_b(_db)`, `delta` or `rho`")),
        };
        Ok(codes::gamma_delta_b(&self.code()?, delta, codes::BoundKind::Full)?.gamma)
    }

    /// `gamma_eta_E`: given directly, or from the sphere-packing bound of the
    /// code's length and rate at `eta`.
    pub fn gamma_eta_e(&self) -> Result<f64, PlannerError> {
        if self.raw.gamma_eta_e.is_some() || self.raw.gamma_eta_e_db.is_some() {
            return self.pair(self.raw.gamma_eta_e, self.raw.gamma_eta_e_db, "gamma_eta_e");
        }
        let eta = self.probability(self.raw.eta, "eta")?;
        let code = self.code()?;
        Ok(codes::gamma_eta_e(code.n(), code.rc(), eta)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for name in PRESET_NAMES {
            let c = ExperimentConfig::from_text(None, "t", Some(name)).unwrap();
            assert!(c.eps().is_ok(), "{name}");
        }
    }

    #[test]
    fn unknown_key_is_named_with_line() {
        let err = ExperimentConfig::from_text(Some("eps = 0.01\nbogus_key = 3\n"), "x.toml", None).unwrap_err();
        let PlannerError::Config { line, message, key, .. } = &err else {
            panic!("{err}")
        };
        assert_eq!(*line, Some(2));
        assert_eq!(key.as_deref(), Some("bogus_key"));
        assert!(message.contains("bogus_key"));
    }

    #[test]
    fn db_conflict_and_overlay() {
        let err = ExperimentConfig::from_text(Some("p_max = 1.0\np_max_db = 0.0\n"), "x", None).unwrap_err();
        assert!(err.to_string().contains("p_max_db"));
        // A linear user key replaces the preset's dB key.
        let c = ExperimentConfig::from_text(Some("p_max = 2.0\n"), "x", Some("fig9")).unwrap();
        assert_eq!(c.p_max().unwrap(), 2.0);
        let c = ExperimentConfig::from_text(None, "x", Some("fig9")).unwrap();
        assert!((c.p_max().unwrap() - db_to_linear(3.8)).abs() < 1e-15);
        let err = ExperimentConfig::from_text(Some("eps = \"high\"\n"), "x", None).unwrap_err();
        assert!(err.to_string().contains("eps"), "{err}");
        assert!(ExperimentConfig::from_text(Some("preset = \"nope\"\n"), "x", None).is_err());
        assert!(ExperimentConfig::from_text(Some("spectrum_file = \"/no/such/file\"\n"), "x", None).is_err());
    }

    #[test]
    fn thresholds_from_code() {
        let c = ExperimentConfig::from_text(Some("delta = 1e-6\neta = 0.1\n"), "x", None).unwrap();
        let gd = 10.0 * c.gamma_delta_b(1).unwrap().log10();
        let ge = 10.0 * c.gamma_eta_e().unwrap().log10();
        assert!((gd - 0.8).abs() < 0.2 && (ge + 4.8).abs() < 0.1, "{gd} {ge}");
    }
}
