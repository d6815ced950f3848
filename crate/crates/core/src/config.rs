//! `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Unknown and repeated keys are errors. Required keys: `dim`, `N`,
//! `epsilon`, `tau`, `t_final`. Everything else has a default:
//!
//! | key              | default              |
//! |------------------|----------------------|
//! | `L`              | `2 pi`               |
//! | `kappa_mode`     | `adaptive`           |
//! | `kappa`          | `0` (fixed value, or the adaptive floor) |
//! | `safety`         | `1.1`                |
//! | `max_retries`    | `8`                  |
//! | `ic`             | `spinodal(0.05)`     |
//! | `seed`           | `0`                  |
//! | `zero_mean`      | `true`               |
//! | `diag_every`     | `1`                  |
//! | `snapshot_every` | `0` (never)          |
//! | `dealias`        | `false`              |
//! | `divergence_linf`| `1e3`                |
//! | `linear_only`    | `false`              |
//! | `out_dir`        | `out`                |
//! | `tau_list`       | unset (`converge-time`) |
//! | `tau_ref`        | `min(tau_list) / 8`  |
//! | `n_list`         | unset (`converge-space`) |

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::initial::InitialCondition;
use crate::operators::{Nonlinearity, OperatorContext};
use crate::stepper::{KappaPolicy, StepperConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KappaMode {
    Fixed,
    Adaptive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
    pub epsilon: f64,
    pub tau: f64,
    pub t_final: f64,
    pub kappa_mode: KappaMode,
    pub kappa: f64,
    pub safety: f64,
    pub max_retries: usize,
    pub ic: InitialCondition,
    pub seed: u64,
    pub zero_mean: bool,
    pub diag_every: usize,
    pub snapshot_every: usize,
    pub dealias: bool,
    pub divergence_linf: f64,
    pub linear_only: bool,
    pub out_dir: PathBuf,
    pub tau_list: Option<Vec<f64>>,
    pub tau_ref: Option<f64>,
    pub n_list: Option<Vec<usize>>,
}

impl SimConfig {
    /// Config with every optional key at its default.
    pub fn new(dim: usize, n: usize, epsilon: f64, tau: f64, t_final: f64) -> Self {
        SimConfig {
            dim,
            n,
            length: 2.0 * PI,
            epsilon,
            tau,
            t_final,
            kappa_mode: KappaMode::Adaptive,
            kappa: 0.0,
            safety: 1.1,
            max_retries: 8,
            ic: InitialCondition::Spinodal {
                amplitude: 0.05,
                seed: None,
            },
            seed: 0,
            zero_mean: true,
            diag_every: 1,
            snapshot_every: 0,
            dealias: false,
            divergence_linf: 1e3,
            linear_only: false,
            out_dir: PathBuf::from("out"),
            tau_list: None,
            tau_ref: None,
            n_list: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |key: &str, message: String| {
            Err(Error::ConfigValue {
                key: key.to_string(),
                message,
            })
        };
        if !(1..=3).contains(&self.dim) {
            return fail("dim", format!("dim must be 1, 2 or 3, got {}", self.dim));
        }
        if self.n % 2 != 0 {
            return fail("N", "N must be even".into());
        }
        if self.n < 4 {
            return fail("N", format!("N must be at least 4, got {}", self.n));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return fail("L", format!("L must be positive, got {}", self.length));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return fail("epsilon", format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return fail("tau", format!("tau must be positive, got {}", self.tau));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return fail("t_final", format!("t_final must be positive, got {}", self.t_final));
        }
        if steps_for(self.t_final, self.tau).is_none() {
            return fail(
                "tau",
                format!("tau = {} does not divide t_final = {}", self.tau, self.t_final),
            );
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return fail("kappa", format!("kappa must be >= 0, got {}", self.kappa));
        }
        if !(self.safety.is_finite() && self.safety >= 1.0) {
            return fail("safety", format!("safety must be >= 1, got {}", self.safety));
        }
        if self.max_retries < 1 {
            return fail("max_retries", "max_retries must be >= 1".into());
        }
        if self.diag_every < 1 {
            return fail("diag_every", "diag_every must be >= 1".into());
        }
        if !(self.divergence_linf > 0.0) {
            return fail("divergence_linf", "divergence_linf must be positive".into());
        }
        if let Err(e) = self.ic.validate() {
            return fail("ic", e.to_string());
        }
        if let Some(list) = &self.tau_list {
            if list.is_empty() || list.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
                return fail("tau_list", "tau_list entries must be positive".into());
            }
        }
        if let Some(t) = self.tau_ref {
            if !(t.is_finite() && t > 0.0) {
                return fail("tau_ref", format!("tau_ref must be positive, got {t}"));
            }
        }
        if let Some(list) = &self.n_list {
            if list.is_empty() || list.iter().any(|n| !n.is_power_of_two() || *n < 4) {
                return fail("n_list", "n_list entries must be powers of two >= 4".into());
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, self.n, self.length)
    }

    /// Number of steps to reach `t_final`.
    pub fn steps(&self) -> usize {
        steps_for(self.t_final, self.tau).unwrap_or(0)
    }

    pub fn kappa_policy(&self) -> KappaPolicy {
        match self.kappa_mode {
            KappaMode::Fixed => KappaPolicy::Fixed(self.kappa),
            KappaMode::Adaptive => KappaPolicy::Adaptive {
                kappa_min: self.kappa,
                safety: self.safety,
                max_retries: self.max_retries,
            },
        }
    }

    pub fn stepper_config(&self) -> StepperConfig {
        StepperConfig {
            tau: self.tau,
            kappa_policy: self.kappa_policy(),
            divergence_linf: self.divergence_linf,
        }
    }

    pub fn operator_context(&self) -> Result<OperatorContext> {
        let nonlinearity = if self.linear_only {
            Nonlinearity::Disabled
        } else {
            Nonlinearity::DoubleWell
        };
        Ok(OperatorContext::new(self.grid()?, self.epsilon, self.kappa)?
            .with_nonlinearity(nonlinearity)
            .with_dealias(self.dealias))
    }

    pub fn initial_field(&self) -> Result<GridFunction> {
        self.ic.build(self.grid()?, self.seed, self.zero_mean)
    }

    /// Canonical text form; parses back to an equal config.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("dim", self.dim.to_string());
        put("N", self.n.to_string());
        put("L", fmt_f64(self.length));
        put("epsilon", fmt_f64(self.epsilon));
        put("tau", fmt_f64(self.tau));
        put("t_final", fmt_f64(self.t_final));
        put(
            "kappa_mode",
            match self.kappa_mode {
                KappaMode::Fixed => "fixed".into(),
                KappaMode::Adaptive => "adaptive".into(),
            },
        );
        put("kappa", fmt_f64(self.kappa));
        put("safety", fmt_f64(self.safety));
        put("max_retries", self.max_retries.to_string());
        put("ic", self.ic.to_string());
        put("seed", self.seed.to_string());
        put("zero_mean", self.zero_mean.to_string());
        put("diag_every", self.diag_every.to_string());
        put("snapshot_every", self.snapshot_every.to_string());
        put("dealias", self.dealias.to_string());
        put("divergence_linf", fmt_f64(self.divergence_linf));
        put("linear_only", self.linear_only.to_string());
        put("out_dir", self.out_dir.display().to_string());
        if let Some(list) = &self.tau_list {
            put("tau_list", list.iter().map(|t| fmt_f64(*t)).collect::<Vec<_>>().join(", "));
        }
        if let Some(t) = self.tau_ref {
            put("tau_ref", fmt_f64(t));
        }
        if let Some(list) = &self.n_list {
            put("n_list", list.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", "));
        }
        s
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn fingerprint(&self) -> String {
        Sha256::digest(self.to_config_string().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn fmt_f64(v: f64) -> String {
    // shortest repr that round-trips
    format!("{v:?}")
}

/// `t_final / tau` when it is an integer up to rounding.
pub fn steps_for(t_final: f64, tau: f64) -> Option<usize> {
    let ratio = t_final / tau;
    let steps = ratio.round();
    if steps >= 1.0 && (ratio - steps).abs() <= 1e-9 * steps {
        Some(steps as usize)
    } else {
        None
    }
}

pub fn parse_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<SimConfig> {
    let mut dim = None;
    let mut n = None;
    let mut epsilon = None;
    let mut tau = None;
    let mut t_final = None;
    let mut seen: Vec<String> = Vec::new();
    let mut rest: Vec<(usize, String, String)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigParse {
            line: line_no,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(Error::ConfigParse {
                line: line_no,
                message: format!("empty key or value in `{line}`"),
            });
        }
        if seen.contains(&key) {
            return Err(Error::ConfigParse {
                line: line_no,
                message: format!("duplicate key `{key}`"),
            });
        }
        seen.push(key.clone());
        let bad = |what: &str| Error::ConfigParse {
            line: line_no,
            message: format!("`{key}`: expected {what}, got `{value}`"),
        };
        match key.as_str() {
            "dim" => dim = Some(value.parse::<usize>().map_err(|_| bad("an integer"))?),
            "N" => n = Some(value.parse::<usize>().map_err(|_| bad("an integer"))?),
            "epsilon" => epsilon = Some(value.parse::<f64>().map_err(|_| bad("a number"))?),
            "tau" => tau = Some(value.parse::<f64>().map_err(|_| bad("a number"))?),
            "t_final" => t_final = Some(value.parse::<f64>().map_err(|_| bad("a number"))?),
            _ => rest.push((line_no, key, value)),
        }
    }

    let missing = |key: &str| Error::ConfigValue {
        key: key.to_string(),
        message: "required key is missing".into(),
    };
    let mut cfg = SimConfig::new(
        dim.ok_or_else(|| missing("dim"))?,
        n.ok_or_else(|| missing("N"))?,
        epsilon.ok_or_else(|| missing("epsilon"))?,
        tau.ok_or_else(|| missing("tau"))?,
        t_final.ok_or_else(|| missing("t_final"))?,
    );

    for (line, key, value) in rest {
        let bad = |what: &str| Error::ConfigParse {
            line,
            message: format!("`{key}`: expected {what}, got `{value}`"),
        };
        let float = || value.parse::<f64>().map_err(|_| bad("a number"));
        let uint = || value.parse::<usize>().map_err(|_| bad("a non-negative integer"));
        let boolean = || value.parse::<bool>().map_err(|_| bad("true or false"));
        match key.as_str() {
            "L" => cfg.length = float()?,
            "kappa_mode" => {
                cfg.kappa_mode = match value.as_str() {
                    "fixed" => KappaMode::Fixed,
                    "adaptive" => KappaMode::Adaptive,
                    _ => return Err(bad("`fixed` or `adaptive`")),
                }
            }
            "kappa" => cfg.kappa = float()?,
            "safety" => cfg.safety = float()?,
            "max_retries" => cfg.max_retries = uint()?,
            "ic" => {
                cfg.ic = value.parse().map_err(|e: String| Error::ConfigParse {
                    line,
                    message: format!("`ic`: {e}"),
                })?
            }
            "seed" => cfg.seed = value.parse::<u64>().map_err(|_| bad("an unsigned integer"))?,
            "zero_mean" => cfg.zero_mean = boolean()?,
            "diag_every" => cfg.diag_every = uint()?,
            "snapshot_every" => cfg.snapshot_every = uint()?,
            "dealias" => cfg.dealias = boolean()?,
            "divergence_linf" => cfg.divergence_linf = float()?,
            "linear_only" => cfg.linear_only = boolean()?,
            "out_dir" => cfg.out_dir = PathBuf::from(&value),
            "tau_list" => {
                cfg.tau_list = Some(
                    value
                        .split(',')
                        .map(|t| t.trim().parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad("a comma-separated list of numbers"))?,
                )
            }
            "tau_ref" => cfg.tau_ref = Some(float()?),
            "n_list" => {
                cfg.n_list = Some(
                    value
                        .split(',')
                        .map(|t| t.trim().parse::<usize>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad("a comma-separated list of integers"))?,
                )
            }
            _ => {
                return Err(Error::ConfigParse {
                    line,
                    message: format!("unknown key `{key}`"),
                })
            }
        }
    }

    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "dim = 2\nN = 32\nepsilon = 0.5\ntau = 0.1\nt_final = 1.0\n";

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = parse_config_str(MINIMAL).unwrap();
        assert_eq!(cfg, SimConfig::new(2, 32, 0.5, 0.1, 1.0));
        assert_eq!(cfg.length, 2.0 * PI);
        assert_eq!(cfg.safety, 1.1);
        assert_eq!(cfg.kappa_mode, KappaMode::Adaptive);
        assert!(cfg.zero_mean && !cfg.dealias);
        assert_eq!(cfg.steps(), 10);
    }

    #[test]
    fn odd_n_is_named() {
        let err = parse_config_str(&MINIMAL.replace("N = 32", "N = 7")).unwrap_err();
        assert!(err.to_string().contains("N must be even"), "{err}");
    }

    #[test]
    fn comments_and_full_keys() {
        let text = "# demo\n\
            dim = 3   # cube\n\
            N = 16\n\
            L = 6.0\n\
            epsilon = 0.3\n\
            tau = 0.05\n\
            t_final = 2\n\
            kappa_mode = fixed\n\
            kappa = 2\n\
            ic = spinodal(0.05, 42)\n\
            seed = 9\n\
            diag_every = 5\n\
            snapshot_every = 20\n\
            dealias = true\n\
            zero_mean = false\n\
            out_dir = runs/a\n\
            tau_list = 0.02, 0.01\n\
            n_list = 8, 16\n";
        let cfg = parse_config_str(text).unwrap();
        assert_eq!(cfg.dim, 3);
        assert_eq!(cfg.length, 6.0);
        assert_eq!(cfg.kappa_policy(), KappaPolicy::Fixed(2.0));
        assert_eq!(cfg.ic, InitialCondition::Spinodal { amplitude: 0.05, seed: Some(42) });
        assert_eq!(cfg.out_dir, PathBuf::from("runs/a"));
        assert_eq!(cfg.tau_list, Some(vec![0.02, 0.01]));
        assert_eq!(cfg.n_list, Some(vec![8, 16]));
        let again = parse_config_str(&cfg.to_config_string()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.fingerprint(), cfg.fingerprint());
    }

    #[test]
    fn errors_carry_line_or_key() {
        let cases = [
            (format!("{MINIMAL}colour = red\n"), "line 6"),
            (format!("{MINIMAL}kappa = lots\n"), "line 6"),
            (format!("{MINIMAL}dim = 2\n"), "duplicate"),
            (format!("{MINIMAL}no equals sign\n"), "line 6"),
            (MINIMAL.replace("tau = 0.1", "tau = 0.3"), "tau"),
            (MINIMAL.replace("dim = 2\n", ""), "dim"),
            (format!("{MINIMAL}ic = spinodal(0.5)\n"), "ic"),
            (format!("{MINIMAL}safety = 0.5\n"), "safety"),
            (format!("{MINIMAL}n_list = 8, 12\n"), "n_list"),
        ];
        for (text, needle) in cases {
            let err = parse_config_str(&text).unwrap_err();
            assert!(err.to_string().contains(needle), "{needle}: {err}");
        }
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = SimConfig::new(2, 32, 0.5, 0.1, 1.0);
        let mut b = a.clone();
        b.seed = 1;
        assert_eq!(a.fingerprint().len(), 64);
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
