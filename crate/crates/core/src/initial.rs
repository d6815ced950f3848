//! Catalog of initial conditions.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{mass, Grid, GridFunction};
use crate::random::uniform_field;

/// Largest spinodal perturbation amplitude accepted.
pub const MAX_SPINODAL_AMPLITUDE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    /// `u = c`
    Constant(f64),
    /// `u = amplitude * cos(k mu x)`
    SingleMode { k: i64, amplitude: f64 },
    /// `u = 0.4 cos(mu x) + 0.2 cos(2 mu y)`; in 1-D both modes run along x.
    TwoMode,
    /// Node-wise uniform noise in `[-amplitude, amplitude]` drawn from the
    /// counter-based stream; `seed = None` defers to the config's seed.
    Spinodal { amplitude: f64, seed: Option<u64> },
}

impl InitialCondition {
    /// Smooth data satisfies the regularity assumptions of spectral
    /// convergence; white noise does not.
    pub fn is_smooth(&self) -> bool {
        !matches!(self, InitialCondition::Spinodal { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid(msg));
        match *self {
            InitialCondition::Constant(c) if !c.is_finite() => bad(format!("constant must be finite, got {c}")),
            InitialCondition::SingleMode { amplitude, .. } if !amplitude.is_finite() => {
                bad(format!("amplitude must be finite, got {amplitude}"))
            }
            InitialCondition::Spinodal { amplitude, .. }
                if !(0.0..=MAX_SPINODAL_AMPLITUDE).contains(&amplitude) =>
            {
                bad(format!(
                    "spinodal amplitude must be in [0, {MAX_SPINODAL_AMPLITUDE}], got {amplitude}"
                ))
            }
            _ => Ok(()),
        }
    }

    /// Samples the initial field. With `zero_mean`, the mean is subtracted
    /// from every condition except `Constant`, whose content is its mean.
    pub fn build(&self, grid: Grid, default_seed: u64, zero_mean: bool) -> Result<GridFunction> {
        self.validate()?;
        let mu = grid.mu();
        let last = grid.dim() - 1;
        let u = match *self {
            InitialCondition::Constant(c) => return Ok(GridFunction::constant(grid, c)),
            InitialCondition::SingleMode { k, amplitude } => {
                let half = grid.n() as i64 / 2;
                if k.abs() >= half {
                    return Err(Error::invalid(format!(
                        "single_mode wavenumber {k} not resolved on N = {}",
                        grid.n()
                    )));
                }
                GridFunction::from_fn(grid, |x| amplitude * (k as f64 * mu * x[0]).cos())
            }
            InitialCondition::TwoMode => {
                let y = if last == 0 { 0 } else { 1 };
                GridFunction::from_fn(grid, |x| 0.4 * (mu * x[0]).cos() + 0.2 * (2.0 * mu * x[y]).cos())
            }
            InitialCondition::Spinodal { amplitude, seed } => {
                uniform_field(grid, amplitude, seed.unwrap_or(default_seed))
            }
        };
        if zero_mean {
            let mean = mass(&u) / grid.volume();
            Ok(u.map(|v| v - mean))
        } else {
            Ok(u)
        }
    }
}

impl fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialCondition::Constant(c) => write!(f, "constant({c})"),
            InitialCondition::SingleMode { k, amplitude } => write!(f, "single_mode({k}, {amplitude})"),
            InitialCondition::TwoMode => write!(f, "two_mode"),
            InitialCondition::Spinodal { amplitude, seed: None } => write!(f, "spinodal({amplitude})"),
            InitialCondition::Spinodal {
                amplitude,
                seed: Some(s),
            } => write!(f, "spinodal({amplitude}, {s})"),
        }
    }
}

impl FromStr for InitialCondition {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(open) => {
                let close = s
                    .strip_suffix(')')
                    .ok_or_else(|| format!("missing `)` in `{s}`"))?;
                let inner = &close[open + 1..];
                let args: Vec<&str> = if inner.trim().is_empty() {
                    Vec::new()
                } else {
                    inner.split(',').map(str::trim).collect()
                };
                (s[..open].trim(), args)
            }
            None => (s, Vec::new()),
        };
        let num = |i: usize| -> std::result::Result<f64, String> {
            args[i]
                .parse::<f64>()
                .map_err(|_| format!("`{}` is not a number", args[i]))
        };
        let int = |i: usize| -> std::result::Result<i64, String> {
            args[i]
                .parse::<i64>()
                .map_err(|_| format!("`{}` is not an integer", args[i]))
        };
        let arity = |lo: usize, hi: usize| -> std::result::Result<(), String> {
            if (lo..=hi).contains(&args.len()) {
                Ok(())
            } else {
                Err(format!("{name} takes {lo}..={hi} arguments, got {}", args.len()))
            }
        };
        match name {
            "constant" => {
                arity(1, 1)?;
                Ok(InitialCondition::Constant(num(0)?))
            }
            "single_mode" => {
                arity(2, 2)?;
                Ok(InitialCondition::SingleMode {
                    k: int(0)?,
                    amplitude: num(1)?,
                })
            }
            "two_mode" => {
                arity(0, 0)?;
                Ok(InitialCondition::TwoMode)
            }
            "spinodal" => {
                arity(1, 2)?;
                let seed = if args.len() == 2 {
                    Some(args[1].parse::<u64>().map_err(|_| format!("`{}` is not a seed", args[1]))?)
                } else {
                    None
                };
                Ok(InitialCondition::Spinodal {
                    amplitude: num(0)?,
                    seed,
                })
            }
            other => Err(format!("unknown initial condition `{other}`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::random::unit_f64;
    use std::f64::consts::PI;

    #[test]
    fn parses_catalog() {
        assert_eq!("constant(1)".parse(), Ok(InitialCondition::Constant(1.0)));
        assert_eq!(
            "single_mode(2, 0.5)".parse(),
            Ok(InitialCondition::SingleMode { k: 2, amplitude: 0.5 })
        );
        assert_eq!("two_mode".parse(), Ok(InitialCondition::TwoMode));
        assert_eq!("two_mode()".parse(), Ok(InitialCondition::TwoMode));
        assert_eq!(
            " spinodal( 0.05 , 42 ) ".parse(),
            Ok(InitialCondition::Spinodal { amplitude: 0.05, seed: Some(42) })
        );
        assert!("spinodal".parse::<InitialCondition>().is_err());
        assert!("spinodal(0.1, -3)".parse::<InitialCondition>().is_err());
        assert!("gaussian(1)".parse::<InitialCondition>().is_err());
        assert!("constant(1".parse::<InitialCondition>().is_err());
        for ic in ["constant(-0.5)", "single_mode(3, 0.25)", "two_mode", "spinodal(0.05, 42)", "spinodal(0.1)"] {
            let parsed: InitialCondition = ic.parse().unwrap();
            assert_eq!(parsed.to_string().parse::<InitialCondition>().unwrap(), parsed);
        }
    }

    #[test]
    fn spinodal_is_mean_subtracted_noise() {
        let g = make_grid(2, 8, 2.0 * PI).unwrap();
        let ic = InitialCondition::Spinodal { amplitude: 0.05, seed: Some(42) };
        let raw = ic.build(g, 0, false).unwrap();
        for (i, v) in raw.values().iter().enumerate() {
            assert_eq!(*v, 0.05 * (2.0 * unit_f64(42, i as u64) - 1.0));
            assert!(v.abs() <= 0.05);
        }
        let u = ic.build(g, 0, true).unwrap();
        assert!(mass(&u).abs() < 1e-15);
        // default seed only applies when the condition carries none
        let other = InitialCondition::Spinodal { amplitude: 0.05, seed: Some(42) }.build(g, 7, false).unwrap();
        assert_eq!(other, raw);
    }

    /// Computed once with an independent Python SplitMix64.
    #[test]
    fn spinodal_golden_values() {
        let g = make_grid(1, 4, 1.0).unwrap();
        let u = InitialCondition::Spinodal { amplitude: 0.05, seed: Some(42) }
            .build(g, 0, false)
            .unwrap();
        let golden = [
            0.02415648787718233,
            -0.03400896071230799,
            -0.022139886974486135,
            -0.015580928347636247,
        ];
        assert_eq!(u.values(), &golden);
    }

    #[test]
    fn constant_keeps_its_mean() {
        let g = make_grid(2, 8, 2.0 * PI).unwrap();
        let u = InitialCondition::Constant(1.0).build(g, 0, true).unwrap();
        assert_eq!(u.linf(), 1.0);
        assert!((mass(&u) - g.volume()).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_parameters() {
        let g = make_grid(2, 8, 2.0 * PI).unwrap();
        assert!(InitialCondition::Spinodal { amplitude: 0.3, seed: None }.build(g, 0, true).is_err());
        assert!(InitialCondition::SingleMode { k: 4, amplitude: 1.0 }.build(g, 0, true).is_err());
        assert!(InitialCondition::Constant(f64::NAN).validate().is_err());
    }
}
