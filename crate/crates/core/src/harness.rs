//! Experiment drivers: simulations with diagnostics, self-convergence
//! studies in time and space, and long-time stability audits.

use std::path::Path;
use std::thread;

use rustfft::num_complex::Complex64;

use crate::config::{steps_for, KappaMode, SimConfig};
use crate::energy::{discrete_energy, fourier_linf_bound, h1_h2_seminorms};
use crate::error::{Error, Result};
use crate::grid::{forward_coeffs, mass, norm, synthesize_real, Grid, GridFunction, Norm};
use crate::io::write_snapshot;
use crate::operators::OperatorContext;
use crate::stepper::{adapt_kappa, Erk2Stepper, KappaPolicy, StepResult, ENERGY_SLACK};

/// Errors below this are treated as roundoff.
pub const ERROR_FLOOR: f64 = 1e-11;

/// Accepted band for observed temporal orders.
pub const TEMPORAL_ORDER_BAND: (f64, f64) = (1.7, 2.3);

/// Largest accepted `error(2N) / error(N)` for smooth data.
pub const SPATIAL_RATIO_MAX: f64 = 0.1;

/// Mass drift tolerance: `|mass_n - mass_0| <= MASS_TOLERANCE (1 + |mass_0|)`.
pub const MASS_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    /// `||grad u||`
    pub h1_seminorm: f64,
    /// `||Lap u||`
    pub h2_seminorm: f64,
    pub linf: f64,
    pub kappa: f64,
    pub retries: usize,
}

impl DiagnosticsRecord {
    pub fn measure(ctx: &OperatorContext, u: &GridFunction, step: usize, t: f64, kappa: f64, retries: usize) -> Result<Self> {
        let energy = discrete_energy(ctx, u)?.energy;
        let (h1, h2) = h1_h2_seminorms(u);
        Ok(DiagnosticsRecord {
            step,
            t,
            mass: mass(u),
            energy,
            h1_seminorm: h1,
            h2_seminorm: h2,
            linf: u.linf(),
            kappa,
            retries,
        })
    }

    pub fn is_finite(&self) -> bool {
        [self.t, self.mass, self.energy, self.h1_seminorm, self.h2_seminorm, self.linf, self.kappa]
            .iter()
            .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub records: Vec<DiagnosticsRecord>,
    pub config_fingerprint: String,
}

impl Trace {
    /// Checks that records are finite and strictly increasing in time.
    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.records.iter().enumerate() {
            if !r.is_finite() {
                return Err(Error::Trace(format!("record {i} (step {}) is not finite", r.step)));
            }
            if i > 0 && !(r.t > self.records[i - 1].t) {
                return Err(Error::Trace(format!("record {i} does not advance time")));
            }
        }
        Ok(())
    }

    /// `max_n |mass_n - mass_0| / (1 + |mass_0|)`.
    pub fn max_relative_mass_drift(&self) -> f64 {
        let Some(first) = self.records.first() else {
            return 0.0;
        };
        let scale = 1.0 + first.mass.abs();
        self.records
            .iter()
            .map(|r| (r.mass - first.mass).abs() / scale)
            .fold(0.0, f64::max)
    }
}

/// What a simulation produced, including a partial trace if it aborted.
#[derive(Debug)]
pub struct RunOutcome {
    pub trace: Trace,
    pub final_field: GridFunction,
    pub steps_completed: usize,
    pub aborted: Option<Error>,
}

impl RunOutcome {
    pub fn into_result(self) -> Result<Trace> {
        match self.aborted {
            Some(e) => Err(e),
            None => Ok(self.trace),
        }
    }
}

/// One completed step, passed to observers.
pub struct StepEvent<'a> {
    pub step: usize,
    pub t: f64,
    pub u_prev: &'a GridFunction,
    pub result: &'a StepResult,
    pub ctx: &'a OperatorContext,
}

fn initial_kappa(cfg: &SimConfig, u0: &GridFunction) -> f64 {
    match cfg.kappa_policy() {
        KappaPolicy::Fixed(k) => k,
        KappaPolicy::Adaptive { kappa_min, safety, .. } => adapt_kappa(&[u0], kappa_min, safety),
    }
}

fn snapshot_path(dir: &Path, step: usize) -> std::path::PathBuf {
    dir.join(format!("snap_{step:08}.chfs"))
}

/// Runs `cfg` from its initial condition to `t_final`.
///
/// Diagnostics are recorded at step 0, every `diag_every` steps and at the
/// final step. With `snapshot_dir` set and `snapshot_every > 0`, fields are
/// written as `snap_<step>.chfs` at step 0 and every `snapshot_every` steps.
pub fn run_simulation(cfg: &SimConfig, snapshot_dir: Option<&Path>) -> Result<RunOutcome> {
    run_simulation_observed(cfg, snapshot_dir, |_| Ok(()))
}

/// [`run_simulation`] with a callback after every step. An observer error
/// aborts the run like a stepper error does.
pub fn run_simulation_observed(
    cfg: &SimConfig,
    snapshot_dir: Option<&Path>,
    mut observer: impl FnMut(&StepEvent<'_>) -> Result<()>,
) -> Result<RunOutcome> {
    cfg.validate()?;
    let steps = cfg.steps();
    let u0 = cfg.initial_field()?;
    let mut stepper = Erk2Stepper::new(cfg.operator_context()?, cfg.stepper_config())?;
    let snapshots = snapshot_dir.filter(|_| cfg.snapshot_every > 0);

    let mut trace = Trace {
        records: vec![DiagnosticsRecord::measure(
            stepper.context(),
            &u0,
            0,
            0.0,
            initial_kappa(cfg, &u0),
            0,
        )?],
        config_fingerprint: cfg.fingerprint(),
    };
    if let Some(dir) = snapshots {
        write_snapshot(&u0, &snapshot_path(dir, 0))?;
    }

    let mut u = u0;
    for n in 1..=steps {
        let t = n as f64 * cfg.tau;
        let result = match stepper.step(&u) {
            Ok(r) => r,
            Err(e) => {
                return Ok(RunOutcome {
                    trace,
                    final_field: u,
                    steps_completed: n - 1,
                    aborted: Some(e),
                })
            }
        };
        let event = StepEvent {
            step: n,
            t,
            u_prev: &u,
            result: &result,
            ctx: stepper.context(),
        };
        if let Err(e) = observer(&event) {
            return Ok(RunOutcome {
                trace,
                final_field: u,
                steps_completed: n - 1,
                aborted: Some(e),
            });
        }
        let kappa = result.kappa_used;
        let retries = result.retries;
        u = result.u_next;
        if n % cfg.diag_every == 0 || n == steps {
            trace
                .records
                .push(DiagnosticsRecord::measure(stepper.context(), &u, n, t, kappa, retries)?);
        }
        if let Some(dir) = snapshots {
            if n % cfg.snapshot_every == 0 {
                write_snapshot(&u, &snapshot_path(dir, n))?;
            }
        }
    }
    Ok(RunOutcome {
        trace,
        final_field: u,
        steps_completed: steps,
        aborted: None,
    })
}

/// Stabilization shared by every level of a convergence study, so that all
/// levels discretize the same split. Adaptive configs are frozen at the
/// value predicted from `u0`.
fn frozen_kappa(cfg: &SimConfig, u0: &GridFunction) -> f64 {
    match cfg.kappa_mode {
        KappaMode::Fixed => cfg.kappa,
        KappaMode::Adaptive => initial_kappa(cfg, u0),
    }
}

/// Final field of `cfg` with no diagnostics.
pub fn final_field(cfg: &SimConfig) -> Result<GridFunction> {
    cfg.validate()?;
    let mut stepper = Erk2Stepper::new(cfg.operator_context()?, cfg.stepper_config())?;
    let mut u = cfg.initial_field()?;
    for _ in 0..cfg.steps() {
        u = stepper.step(&u)?.u_next;
    }
    Ok(u)
}

/// Runs each config on its own thread; results keep the input order.
fn final_fields(cfgs: &[SimConfig]) -> Vec<Result<GridFunction>> {
    thread::scope(|s| {
        let handles: Vec<_> = cfgs.iter().map(|c| s.spawn(move || final_field(c))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::invalid("convergence level panicked"))))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceStatus {
    /// All errors above the floor.
    Resolved,
    /// Some errors reached the roundoff floor; orders involving them are
    /// undefined.
    AtFloor,
    /// Initial data is not smooth; the spatial ratio test does not apply.
    NonSmooth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceLevel {
    /// `tau` or `N`.
    pub parameter: f64,
    /// Discrete l2 error at `t_final`.
    pub error: f64,
    pub linf_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub levels: Vec<ConvergenceLevel>,
    /// `log(e_i / e_{i+1}) / |log(p_i / p_{i+1})|`, `None` when either error is
    /// at the floor.
    pub observed_orders: Vec<Option<f64>>,
    pub status: ConvergenceStatus,
    /// Resolution of the reference run.
    pub reference: f64,
    pub kappa: f64,
}

impl ConvergenceReport {
    fn assemble(levels: Vec<ConvergenceLevel>, reference: f64, kappa: f64, smooth: bool) -> Self {
        let observed_orders = levels
            .windows(2)
            .map(|w| {
                if w[0].error > ERROR_FLOOR && w[1].error > ERROR_FLOOR {
                    Some((w[0].error / w[1].error).ln() / (w[0].parameter / w[1].parameter).ln().abs())
                } else {
                    None
                }
            })
            .collect();
        let status = if !smooth {
            ConvergenceStatus::NonSmooth
        } else if levels.iter().any(|l| l.error <= ERROR_FLOOR) {
            ConvergenceStatus::AtFloor
        } else {
            ConvergenceStatus::Resolved
        };
        ConvergenceReport {
            levels,
            observed_orders,
            status,
            reference,
            kappa,
        }
    }

    /// Every defined order lies in `band`.
    pub fn orders_within(&self, band: (f64, f64)) -> bool {
        self.observed_orders
            .iter()
            .flatten()
            .all(|p| (band.0..=band.1).contains(p))
    }

    /// Spatial ratio test: each doubling shrinks the error by `max_ratio`
    /// unless the finer error is already at the floor. Waived for
    /// non-smooth data.
    pub fn ratios_within(&self, max_ratio: f64) -> bool {
        if self.status == ConvergenceStatus::NonSmooth {
            return true;
        }
        self.levels
            .windows(2)
            .all(|w| w[1].error <= ERROR_FLOOR || w[1].error <= max_ratio * w[0].error)
    }

    /// Finest error divided by the order-2 prediction
    /// `e_{L-1} (tau_L / tau_{L-1})^2`; `None` if fewer than two levels
    /// are above the floor.
    pub fn extrapolation_ratio(&self) -> Option<f64> {
        let n = self.levels.len();
        if n < 2 {
            return None;
        }
        let (a, b) = (&self.levels[n - 2], &self.levels[n - 1]);
        if a.error <= ERROR_FLOOR || b.error <= ERROR_FLOOR {
            return None;
        }
        Some(b.error / (a.error * (b.parameter / a.parameter).powi(2)))
    }
}

fn field_errors(u: &GridFunction, reference: &GridFunction) -> Result<(f64, f64)> {
    let diff = u.combine(1.0, reference, -1.0)?;
    Ok((norm(&diff, Norm::L2)?, diff.linf()))
}

/// Self-convergence in time against a run at `tau_ref`
/// (default `min(tau_list) / 8`).
///
/// `tau_list` must be strictly decreasing, every entry must divide
/// `t_final`, and each entry must be an integer multiple of the next and of
/// `tau_ref`.
pub fn temporal_convergence(base: &SimConfig, tau_list: &[f64], tau_ref: Option<f64>) -> Result<ConvergenceReport> {
    if tau_list.is_empty() {
        return Err(Error::invalid("tau_list is empty"));
    }
    let tau_min = tau_list.iter().copied().fold(f64::INFINITY, f64::min);
    let tau_ref = tau_ref.unwrap_or(tau_min / 8.0);
    if tau_ref > tau_min / 8.0 * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "tau_ref = {tau_ref} must be at most min(tau_list) / 8 = {}",
            tau_min / 8.0
        )));
    }
    for w in tau_list.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::invalid("tau_list must be strictly decreasing"));
        }
        if steps_for(w[0], w[1]).is_none() {
            return Err(Error::invalid(format!("non-nesting tau values {} and {}", w[0], w[1])));
        }
    }
    for &tau in tau_list.iter().chain([&tau_ref]) {
        if steps_for(base.t_final, tau).is_none() {
            return Err(Error::invalid(format!("tau = {tau} does not divide t_final = {}", base.t_final)));
        }
        if steps_for(tau, tau_ref).is_none() {
            return Err(Error::invalid(format!("non-nesting tau values {tau} and {tau_ref}")));
        }
    }

    let u0 = base.initial_field()?;
    let kappa = frozen_kappa(base, &u0);
    let level = |tau: f64| {
        let mut c = base.clone();
        c.tau = tau;
        c.kappa_mode = KappaMode::Fixed;
        c.kappa = kappa;
        c
    };
    let mut cfgs: Vec<SimConfig> = tau_list.iter().map(|&t| level(t)).collect();
    cfgs.push(level(tau_ref));
    let mut fields = final_fields(&cfgs);
    let reference = fields.pop().expect("reference level")?;
    let mut levels = Vec::with_capacity(tau_list.len());
    for (&tau, u) in tau_list.iter().zip(fields) {
        let (error, linf_error) = field_errors(&u?, &reference)?;
        levels.push(ConvergenceLevel {
            parameter: tau,
            error,
            linf_error,
        });
    }
    Ok(ConvergenceReport::assemble(levels, tau_ref, kappa, true))
}

/// Trigonometric interpolation of `u` onto the finer grid `fine` by zero
/// padding. Coarse Nyquist coefficients are split evenly between `+N/2`
/// and `-N/2` on every axis where they sit.
pub fn spectral_interpolate(u: &GridFunction, fine: &Grid) -> Result<GridFunction> {
    let coarse = *u.grid();
    if coarse.dim() != fine.dim() || coarse.length() != fine.length() || fine.n() < coarse.n() {
        return Err(Error::invalid(format!("cannot interpolate {coarse} onto {fine}")));
    }
    if fine.n() == coarse.n() {
        return Ok(u.clone());
    }
    let half = coarse.n() as i64 / 2;
    let dim = coarse.dim();
    let mut out = vec![Complex64::new(0.0, 0.0); fine.len()];
    for (i, c) in forward_coeffs(u).into_iter().enumerate() {
        let k = coarse.wavevector(i);
        let nyquist: Vec<usize> = (0..dim).filter(|&a| k[a] == -half).collect();
        let weight = 0.5f64.powi(nyquist.len() as i32);
        for mask in 0..(1usize << nyquist.len()) {
            let mut target = k;
            for (bit, &axis) in nyquist.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    target[axis] = half;
                }
            }
            let mut idx = [0; 3];
            for a in 0..dim {
                idx[a] = fine.wavenumber_index(target[a]);
            }
            out[fine.linear_index(idx)] += c * weight;
        }
    }
    Ok(synthesize_real(fine, out))
}

/// Spectral convergence against the finest `N` in `n_list`.
///
/// `n_list` must be strictly increasing powers of two. Coarse final fields
/// are interpolated onto the reference grid before comparison. A single
/// entry yields one level compared with itself.
pub fn spatial_convergence(base: &SimConfig, n_list: &[usize]) -> Result<ConvergenceReport> {
    if n_list.is_empty() {
        return Err(Error::invalid("n_list is empty"));
    }
    if let Some(bad) = n_list.iter().find(|n| !n.is_power_of_two() || **n < 4) {
        return Err(Error::invalid(format!("N = {bad} is not a power of two >= 4")));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("n_list must be strictly increasing"));
    }
    let n_ref = *n_list.last().unwrap();
    let with_n = |n: usize| {
        let mut c = base.clone();
        c.n = n;
        c
    };
    let ref_cfg = with_n(n_ref);
    let kappa = frozen_kappa(&ref_cfg, &ref_cfg.initial_field()?);
    let mut cfgs: Vec<SimConfig> = n_list
        .iter()
        .map(|&n| {
            let mut c = with_n(n);
            c.kappa_mode = KappaMode::Fixed;
            c.kappa = kappa;
            c
        })
        .collect();
    if n_list.len() == 1 {
        cfgs.push(cfgs[0].clone());
    }
    let mut fields = final_fields(&cfgs);
    let reference = fields.pop().expect("reference level")?;
    let fine = *reference.grid();
    let coarse_levels: Vec<usize> = if n_list.len() == 1 {
        n_list.to_vec()
    } else {
        n_list[..n_list.len() - 1].to_vec()
    };
    let mut levels = Vec::with_capacity(coarse_levels.len());
    for (&n, u) in coarse_levels.iter().zip(fields) {
        let (error, linf_error) = field_errors(&spectral_interpolate(&u?, &fine)?, &reference)?;
        levels.push(ConvergenceLevel {
            parameter: n as f64,
            error,
            linf_error,
        });
    }
    Ok(ConvergenceReport::assemble(levels, n_ref as f64, kappa, base.ic.is_smooth()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditCheck {
    NonFinite,
    EnergyIncrease,
    H1Bound,
    LinfBound,
    MassDrift,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub record: usize,
    pub step: usize,
    pub check: AuditCheck,
    pub value: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub records_checked: usize,
    pub violations: Vec<Violation>,
    pub h1_limit: f64,
    pub sup_h1: f64,
    pub sup_h2: f64,
    pub sup_linf: f64,
    pub max_mass_drift: f64,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, check: AuditCheck) -> usize {
        self.violations.iter().filter(|v| v.check == check).count()
    }
}

/// Checks every record of `trace`:
///
/// - (a) energy nonincreasing between records, up to `ENERGY_SLACK`
/// - (b) `||grad u||^2 <= 2 E0 / eps^2`
/// - (c) `||u||_inf` below [`fourier_linf_bound`] of the record's mass and
///   seminorms
/// - (d) relative mass drift at most [`MASS_TOLERANCE`]
///
/// and reports the suprema of `||Lap u||` and `||u||_inf`.
pub fn stability_audit(trace: &Trace, epsilon: f64, initial_energy: f64, grid: &Grid) -> AuditReport {
    let h1_sq_limit = 2.0 * initial_energy / (epsilon * epsilon);
    let mut violations = Vec::new();
    let mut flag = |record: usize, step: usize, check: AuditCheck, value: f64, limit: f64| {
        violations.push(Violation {
            record,
            step,
            check,
            value,
            limit,
        })
    };
    let mass0 = trace.records.first().map_or(0.0, |r| r.mass);
    let mass_scale = 1.0 + mass0.abs();
    let (mut sup_h1, mut sup_h2, mut sup_linf, mut max_drift) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);

    for (i, r) in trace.records.iter().enumerate() {
        if !r.is_finite() {
            flag(i, r.step, AuditCheck::NonFinite, f64::NAN, f64::NAN);
            continue;
        }
        sup_h1 = sup_h1.max(r.h1_seminorm);
        sup_h2 = sup_h2.max(r.h2_seminorm);
        sup_linf = sup_linf.max(r.linf);
        if i > 0 {
            let prev = trace.records[i - 1].energy;
            let limit = prev + ENERGY_SLACK * (1.0 + prev.abs());
            if r.energy > limit {
                flag(i, r.step, AuditCheck::EnergyIncrease, r.energy, limit);
            }
        }
        let h1_sq = r.h1_seminorm * r.h1_seminorm;
        let h1_limit = h1_sq_limit * (1.0 + ENERGY_SLACK) + f64::EPSILON;
        if h1_sq > h1_limit {
            flag(i, r.step, AuditCheck::H1Bound, h1_sq, h1_limit);
        }
        let linf_limit = fourier_linf_bound(grid, r.mass, r.h1_seminorm, r.h2_seminorm) * (1.0 + 1e-10) + 1e-14;
        if r.linf > linf_limit {
            flag(i, r.step, AuditCheck::LinfBound, r.linf, linf_limit);
        }
        let drift = (r.mass - mass0).abs() / mass_scale;
        max_drift = max_drift.max(drift);
        if drift > MASS_TOLERANCE {
            flag(i, r.step, AuditCheck::MassDrift, drift, MASS_TOLERANCE);
        }
    }
    AuditReport {
        records_checked: trace.records.len(),
        violations,
        h1_limit: h1_sq_limit.sqrt(),
        sup_h1,
        sup_h2,
        sup_linf,
        max_mass_drift: max_drift,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::InitialCondition;
    use crate::random::uniform_field;

    fn spinodal(n: usize, tau: f64, t_final: f64) -> SimConfig {
        let mut c = SimConfig::new(2, n, 0.5, tau, t_final);
        c.ic = InitialCondition::Spinodal { amplitude: 0.05, seed: Some(42) };
        c
    }

    #[test]
    fn equilibrium_trace_is_flat() {
        let mut c = SimConfig::new(2, 16, 0.5, 0.1, 1.0);
        c.ic = InitialCondition::Constant(1.0);
        let out = run_simulation(&c, None).unwrap();
        assert!(out.aborted.is_none());
        let trace = out.trace;
        assert_eq!(trace.records.len(), 11);
        let vol = c.grid().unwrap().volume();
        for r in &trace.records {
            assert!(r.energy.abs() < 1e-20);
            assert!((r.linf - 1.0).abs() < 1e-13);
            assert!((r.mass - vol).abs() < 1e-10);
        }
        let audit = stability_audit(&trace, 0.5, 0.0, &c.grid().unwrap());
        assert!(audit.passed(), "{:?}", audit.violations);
    }

    #[test]
    fn spinodal_run_dissipates_and_audits_clean() {
        let c = spinodal(32, 0.05, 20.0);
        let trace = run_simulation(&c, None).unwrap().into_result().unwrap();
        trace.validate().unwrap();
        assert_eq!(trace.records.len(), 401);
        assert_eq!(trace.config_fingerprint, c.fingerprint());
        for w in trace.records.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-10 * (1.0 + w[0].energy.abs()));
        }
        assert!(trace.max_relative_mass_drift() <= 1e-10);
        let e0 = trace.records[0].energy;
        let audit = stability_audit(&trace, c.epsilon, e0, &c.grid().unwrap());
        assert!(audit.passed(), "{:?}", audit.violations);
    }

    #[test]
    fn audit_flags_exactly_the_injected_bump() {
        let c = spinodal(16, 0.1, 2.0);
        let mut trace = run_simulation(&c, None).unwrap().into_result().unwrap();
        let e0 = trace.records[0].energy;
        trace.records[7].energy += 1e-3;
        let audit = stability_audit(&trace, c.epsilon, e0, &c.grid().unwrap());
        assert_eq!(audit.violations.len(), 1);
        assert_eq!(audit.violations[0].record, 7);
        assert_eq!(audit.violations[0].check, AuditCheck::EnergyIncrease);
    }

    #[test]
    fn divergence_leaves_partial_trace() {
        let mut c = spinodal(16, 0.1, 1.0);
        c.ic = InitialCondition::Constant(0.5);
        c.divergence_linf = 0.4;
        let out = run_simulation(&c, None).unwrap();
        assert_eq!(out.steps_completed, 0);
        assert_eq!(out.trace.records.len(), 1);
        assert!(matches!(out.aborted, Some(Error::Diverged { .. })));
    }

    #[test]
    fn interpolation_is_exact_for_resolved_modes() {
        let coarse = Grid::new(2, 8, 2.0 * std::f64::consts::PI).unwrap();
        let fine = Grid::new(2, 32, coarse.length()).unwrap();
        let f = |x: [f64; 3]| (3.0 * x[0]).sin() * (2.0 * x[1]).cos() + 0.3 * (4.0 * x[0]).cos();
        let up = spectral_interpolate(&GridFunction::from_fn(coarse, f), &fine).unwrap();
        assert!(up.max_abs_diff(&GridFunction::from_fn(fine, f)).unwrap() < 1e-13);

        // any field is reproduced at its own nodes
        let r = uniform_field(coarse, 1.0, 5);
        let same = spectral_interpolate(&r, &coarse).unwrap();
        assert!(same.max_abs_diff(&r).unwrap() < 1e-14);
    }

    #[test]
    fn temporal_study_rejects_bad_lists() {
        let c = spinodal(16, 0.1, 0.5);
        assert!(temporal_convergence(&c, &[0.1, 0.03], None).is_err());
        assert!(temporal_convergence(&c, &[0.05, 0.1], None).is_err());
        assert!(temporal_convergence(&c, &[0.1], Some(0.05)).is_err());
        assert!(spatial_convergence(&c, &[8, 12]).is_err());
        assert!(spatial_convergence(&c, &[16, 8]).is_err());
    }

    #[test]
    fn single_level_studies() {
        let c = spinodal(16, 0.1, 0.5);
        let t = temporal_convergence(&c, &[0.1], None).unwrap();
        assert_eq!(t.levels.len(), 1);
        assert!(t.observed_orders.is_empty());
        let s = spatial_convergence(&c, &[16]).unwrap();
        assert_eq!(s.levels[0].error, 0.0);
    }

    #[test]
    fn linear_only_is_exact_in_time() {
        let mut c = spinodal(16, 0.1, 0.5);
        c.linear_only = true;
        c.kappa_mode = KappaMode::Fixed;
        c.kappa = 0.3;
        let r = temporal_convergence(&c, &[0.1, 0.05, 0.025], None).unwrap();
        assert!(r.levels.iter().all(|l| l.error < 1e-13), "{:?}", r.levels);
        assert_eq!(r.status, ConvergenceStatus::AtFloor);
        assert!(r.observed_orders.iter().all(Option::is_none));
    }

    #[test]
    fn rough_data_waives_ratio_test() {
        let c = spinodal(8, 0.05, 0.1);
        let r = spatial_convergence(&c, &[8, 16]).unwrap();
        assert_eq!(r.status, ConvergenceStatus::NonSmooth);
        assert!(r.ratios_within(SPATIAL_RATIO_MAX));
    }
}
