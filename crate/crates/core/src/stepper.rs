//! Two-stage exponential Runge-Kutta integrator.
//!
//! ```text
//! u1      = phi0(tau L) u^n + tau phi1(tau L) N(u^n)
//! u^{n+1} = phi0(tau L) u^n + tau/2 phi1(tau L) (N(u^n) + N(u1))
//! ```
//!
//! with `L = L_kappa` and `N = N_kappa`. Under [`KappaPolicy::Adaptive`] the
//! stabilization is chosen per step so that `kappa >= (3 M^2 - 1) / 2`, where
//! `M` bounds `|u|` over `u^n`, `u1` and `u^{n+1}`. Since `u1` and `u^{n+1}`
//! are not known beforehand, the step is predicted from `||u^n||_inf`,
//! validated afterwards, and redone with a larger `kappa` if needed.

use rustfft::num_complex::Complex64;

use crate::energy::discrete_energy;
use crate::error::{Error, Result};
use crate::grid::{forward_coeffs, mass, norm, synthesize_real, GridFunction, Norm};
use crate::operators::{nonlinear_spectrum, OperatorContext};
use crate::phi::{phi0, phi1};

/// Relative slack used when comparing energies and residuals.
pub const ENERGY_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KappaPolicy {
    Fixed(f64),
    Adaptive {
        kappa_min: f64,
        safety: f64,
        max_retries: usize,
    },
}

impl KappaPolicy {
    pub fn adaptive(kappa_min: f64) -> Self {
        KappaPolicy::Adaptive {
            kappa_min,
            safety: 1.1,
            max_retries: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub tau: f64,
    pub kappa_policy: KappaPolicy,
    pub divergence_linf: f64,
}

impl StepperConfig {
    pub fn new(tau: f64, kappa_policy: KappaPolicy) -> Self {
        StepperConfig {
            tau,
            kappa_policy,
            divergence_linf: 1e3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::invalid(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.divergence_linf > 0.0) {
            return Err(Error::invalid("divergence threshold must be positive"));
        }
        match self.kappa_policy {
            KappaPolicy::Fixed(k) if !(k.is_finite() && k >= 0.0) => {
                Err(Error::invalid(format!("kappa must be >= 0, got {k}")))
            }
            KappaPolicy::Adaptive {
                kappa_min,
                safety,
                max_retries,
            } => {
                if !(kappa_min.is_finite() && kappa_min >= 0.0) {
                    Err(Error::invalid(format!("kappa_min must be >= 0, got {kappa_min}")))
                } else if !(safety.is_finite() && safety >= 1.0) {
                    Err(Error::invalid(format!("safety must be >= 1, got {safety}")))
                } else if max_retries < 1 {
                    Err(Error::invalid("max_retries must be >= 1"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub u_next: GridFunction,
    pub u_stage: GridFunction,
    pub kappa_used: f64,
    pub energy_before: f64,
    pub energy_stage: f64,
    pub energy_after: f64,
    pub mass_drift: f64,
    pub retries: usize,
}

/// `(3 M^2 - 1) / 2`, the smallest stabilization the energy estimate allows.
pub fn required_kappa(max_abs: f64) -> f64 {
    0.5 * (3.0 * max_abs * max_abs - 1.0)
}

/// `max(kappa_min, safety (3 M^2 - 1) / 2, 0)` with `M` the largest sup
/// norm among `fields`.
pub fn adapt_kappa(fields: &[&GridFunction], kappa_min: f64, safety: f64) -> f64 {
    let m = fields.iter().map(|f| f.linf()).fold(0.0, f64::max);
    kappa_min.max(safety * required_kappa(m)).max(0.0)
}

fn check_bounded(u: &GridFunction, threshold: f64) -> Result<()> {
    let linf = u.linf();
    if linf <= threshold {
        Ok(())
    } else {
        Err(Error::Diverged { linf, threshold })
    }
}

/// First stage `phi0(tau L) u + tau phi1(tau L) N(u)`.
pub fn stage1(ctx: &OperatorContext, u: &GridFunction, tau: f64) -> Result<GridFunction> {
    let coeffs = Propagator::new(ctx, tau)?.stage(&forward_coeffs(u), &nonlinear_spectrum(ctx, u)?);
    Ok(synthesize_real(ctx.grid(), coeffs))
}

/// Per-mode `phi0(tau Lambda)` and `tau phi1(tau Lambda)`.
struct Propagator {
    decay: Vec<f64>,
    weight: Vec<f64>,
}

impl Propagator {
    fn new(ctx: &OperatorContext, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid(format!("tau must be positive, got {tau}")));
        }
        let lam = ctx.big_lambda().values();
        Ok(Propagator {
            decay: lam.iter().map(|&l| phi0(tau * l)).collect(),
            weight: lam.iter().map(|&l| tau * phi1(tau * l)).collect(),
        })
    }

    fn stage(&self, u: &[Complex64], n0: &[Complex64]) -> Vec<Complex64> {
        u.iter()
            .zip(n0)
            .zip(self.decay.iter().zip(&self.weight))
            .map(|((u, n), (d, w))| d * u + w * n)
            .collect()
    }

    fn finish(&self, u: &[Complex64], n0: &[Complex64], n1: &[Complex64]) -> Vec<Complex64> {
        u.iter()
            .zip(n0.iter().zip(n1))
            .zip(self.decay.iter().zip(&self.weight))
            .map(|((u, (a, b)), (d, w))| d * u + 0.5 * w * (a + b))
            .collect()
    }
}

/// One step of the scheme at the context's fixed `kappa`; returns
/// `(u1, u^{n+1})`. `N(u^n)` is transformed once and shared by both stages.
pub fn erk2_update(ctx: &OperatorContext, u: &GridFunction, tau: f64) -> Result<(GridFunction, GridFunction)> {
    let prop = Propagator::new(ctx, tau)?;
    let u_hat = forward_coeffs(u);
    let n0 = nonlinear_spectrum(ctx, u)?;
    let stage = synthesize_real(ctx.grid(), prop.stage(&u_hat, &n0));
    let n1 = nonlinear_spectrum(ctx, &stage)?;
    let next = synthesize_real(ctx.grid(), prop.finish(&u_hat, &n0, &n1));
    Ok((stage, next))
}

/// l2 norms of the residuals of the rearranged scheme
///
/// ```text
/// u1      - u^n + tau phi1 L u^n - tau phi1 N(u^n)
/// u^{n+1} - u^n + tau phi1 L u^n - tau/2 phi1 (N(u^n) + N(u1))
/// ```
pub fn equivalent_form_residual(
    ctx: &OperatorContext,
    u: &GridFunction,
    u_stage: &GridFunction,
    u_next: &GridFunction,
    tau: f64,
) -> Result<(f64, f64)> {
    ctx.grid().ensure_same(u.grid())?;
    let n0 = synthesize_real(ctx.grid(), nonlinear_spectrum(ctx, u)?);
    let n1 = synthesize_real(ctx.grid(), nonlinear_spectrum(ctx, u_stage)?);
    let phi = ctx.phi_multiplier(1, tau)?;
    let lin = crate::operators::apply_multiplier(ctx.big_lambda(), u)?;
    let phi_lin = crate::operators::apply_multiplier(&phi, &lin)?;
    let phi_n0 = crate::operators::apply_multiplier(&phi, &n0)?;
    let phi_n1 = crate::operators::apply_multiplier(&phi, &n1)?;

    let common = u.scaled(-1.0).combine(1.0, &phi_lin, tau)?;
    let r1 = u_stage.combine(1.0, &common, 1.0)?.combine(1.0, &phi_n0, -tau)?;
    let r2 = u_next
        .combine(1.0, &common, 1.0)?
        .combine(1.0, &phi_n0, -0.5 * tau)?
        .combine(1.0, &phi_n1, -0.5 * tau)?;
    Ok((norm(&r1, Norm::L2)?, norm(&r2, Norm::L2)?))
}

/// Advances one trajectory, owning the current operator context.
#[derive(Debug, Clone)]
pub struct Erk2Stepper {
    ctx: OperatorContext,
    cfg: StepperConfig,
}

impl Erk2Stepper {
    pub fn new(ctx: OperatorContext, cfg: StepperConfig) -> Result<Self> {
        cfg.validate()?;
        let ctx = match cfg.kappa_policy {
            KappaPolicy::Fixed(k) if k != ctx.kappa() => ctx.with_kappa(k)?,
            _ => ctx,
        };
        Ok(Erk2Stepper { ctx, cfg })
    }

    pub fn context(&self) -> &OperatorContext {
        &self.ctx
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    fn set_kappa(&mut self, kappa: f64) -> Result<()> {
        if kappa != self.ctx.kappa() {
            self.ctx = self.ctx.with_kappa(kappa)?;
        }
        Ok(())
    }

    pub fn step(&mut self, u: &GridFunction) -> Result<StepResult> {
        self.ctx.grid().ensure_same(u.grid())?;
        let threshold = self.cfg.divergence_linf;
        check_bounded(u, threshold)?;
        let tau = self.cfg.tau;
        let mass_before = mass(u);
        let energy_before = discrete_energy(&self.ctx, u)?.energy;
        let slack = ENERGY_SLACK * (1.0 + energy_before.abs());

        let (kappa_min, safety, max_retries) = match self.cfg.kappa_policy {
            KappaPolicy::Fixed(_) => {
                let (u_stage, u_next) = erk2_update(&self.ctx, u, tau)?;
                check_bounded(&u_stage, threshold)?;
                check_bounded(&u_next, threshold)?;
                return Ok(StepResult {
                    energy_stage: discrete_energy(&self.ctx, &u_stage)?.energy,
                    energy_after: discrete_energy(&self.ctx, &u_next)?.energy,
                    mass_drift: (mass(&u_next) - mass_before).abs(),
                    kappa_used: self.ctx.kappa(),
                    u_stage,
                    u_next,
                    energy_before,
                    retries: 0,
                });
            }
            KappaPolicy::Adaptive {
                kappa_min,
                safety,
                max_retries,
            } => (kappa_min, safety, max_retries),
        };

        let mut kappa = adapt_kappa(&[u], kappa_min, safety);
        let mut retries = 0;
        loop {
            self.set_kappa(kappa)?;
            let (u_stage, u_next) = erk2_update(&self.ctx, u, tau)?;
            check_bounded(&u_stage, threshold)?;
            check_bounded(&u_next, threshold)?;
            let energy_stage = discrete_energy(&self.ctx, &u_stage)?.energy;
            let energy_after = discrete_energy(&self.ctx, &u_next)?.energy;
            let m = u.linf().max(u_stage.linf()).max(u_next.linf());
            let valid = kappa >= required_kappa(m)
                && energy_stage <= energy_before + slack
                && energy_after <= energy_before + slack;
            if valid {
                return Ok(StepResult {
                    mass_drift: (mass(&u_next) - mass_before).abs(),
                    kappa_used: kappa,
                    u_stage,
                    u_next,
                    energy_before,
                    energy_stage,
                    energy_after,
                    retries,
                });
            }
            if retries == max_retries {
                return Err(Error::KappaExhausted {
                    kappa,
                    energy_before,
                    energy_after: energy_after.max(energy_stage),
                    retries,
                });
            }
            let mut next = adapt_kappa(&[u, &u_stage, &u_next], kappa_min, safety);
            if next <= kappa {
                // bound already met; only rounding-level energy growth remains
                next = 2.0 * kappa + 1.0;
            }
            kappa = next;
            retries += 1;
        }
    }
}
