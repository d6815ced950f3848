//! Small-scale run of every module invariant, for `chsim selftest`.

use std::f64::consts::PI;

use crate::config::{parse_config_str, SimConfig};
use crate::energy::discrete_energy;
use crate::error::Result;
use crate::grid::{
    forward_dft, inner_product, inverse_dft, mass, naive_dft_oracle, norm, Grid, GridFunction, Norm, ORACLE_MAX_N,
};
use crate::harness::{run_simulation, stability_audit, temporal_convergence, AuditCheck};
use crate::initial::InitialCondition;
use crate::io::{decode_snapshot, encode_snapshot, read_trace_csv, write_trace_csv};
use crate::operators::{
    apply_multiplier, apply_phi, g_operator, gradient, laplacian, spectral_seminorm_sq, GKind, Nonlinearity,
    OperatorContext, SymbolMultiplier,
};
use crate::phi::{inv_phi1, phi1};
use crate::random::{splitmix64, uniform_field, CounterRng};
use crate::stepper::{Erk2Stepper, KappaPolicy, StepperConfig, ENERGY_SLACK};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub module: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = fn(&mut CounterRng) -> Result<(bool, String)>;

const CHECKS: &[(&str, &str, Check)] = &[
    ("spectral_grid", "round trip", round_trip),
    ("spectral_grid", "Parseval", parseval),
    ("spectral_grid", "linearity", linearity),
    ("spectral_grid", "oracle equivalence", oracle),
    ("operator_calculus", "phi bounds", phi_bounds),
    ("operator_calculus", "diffusion estimates and splits", diffusion),
    ("operator_calculus", "Poincare", poincare),
    ("operator_calculus", "commutativity", commutativity),
    ("energy", "product rules", product_rules),
    ("energy", "energy decomposition", energy_decomposition),
    ("erk2_stepper", "mass conservation", mass_conservation),
    ("erk2_stepper", "linear exactness", linear_exactness),
    ("erk2_stepper", "energy monotonicity", energy_monotonicity),
    ("erk2_stepper", "equilibria", equilibria),
    ("erk2_stepper", "semigroup", semigroup),
    ("analysis_harness", "determinism", determinism),
    ("analysis_harness", "reference consistency", reference_consistency),
    ("analysis_harness", "audit completeness", audit_completeness),
    ("cli", "CSV round trip", csv_round_trip),
    ("cli", "snapshot round trip", snapshot_round_trip),
    ("cli", "config round trip", config_round_trip),
    ("cli", "generator golden values", rng_golden),
];

/// Runs every check; failures are reported, never propagated.
pub fn run_selftest() -> Vec<CheckOutcome> {
    let mut rng = CounterRng::new(0x5e1f);
    CHECKS
        .iter()
        .map(|&(module, name, check)| {
            let (passed, detail) = check(&mut rng).unwrap_or_else(|e| (false, format!("error: {e}")));
            CheckOutcome {
                module,
                name,
                passed,
                detail,
            }
        })
        .collect()
}

fn grids() -> Vec<Grid> {
    [(1, 16), (2, 8), (3, 8)]
        .into_iter()
        .map(|(d, n)| Grid::new(d, n, 2.0 * PI).expect("valid grid"))
        .collect()
}

fn random_field(rng: &mut CounterRng, grid: Grid) -> GridFunction {
    uniform_field(grid, rng.uniform(0.1, 2.0), rng.next_u64())
}

fn sq(f: &GridFunction) -> Result<f64> {
    inner_product(f, f)
}

fn grad_sq(ctx: &OperatorContext, f: &GridFunction) -> Result<f64> {
    Ok(-inner_product(&laplacian(ctx, f)?, f)?)
}

fn round_trip(rng: &mut CounterRng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for grid in grids() {
        for _ in 0..10 {
            let f = random_field(rng, grid);
            let back = inverse_dft(&forward_dft(&f))?;
            worst = worst.max(back.max_abs_diff(&f)? / (1.0 + f.linf()));
        }
    }
    Ok((worst <= 1e-13, format!("max scaled error {worst:.2e}")))
}

fn parseval(rng: &mut CounterRng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for grid in grids() {
        for _ in 0..10 {
            let f = random_field(rng, grid);
            let phys = sq(&f)?;
            let spec: f64 = grid.volume() * forward_dft(&f).coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>();
            worst = worst.max((phys - spec).abs() / phys);
        }
    }
    Ok((worst <= 1e-12, format!("max relative defect {worst:.2e}")))
}

fn linearity(rng: &mut CounterRng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for grid in grids() {
        let (f, g) = (random_field(rng, grid), random_field(rng, grid));
        let (a, b) = (rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
        let lhs = forward_dft(&f.combine(a, &g, b)?);
        let (fh, gh) = (forward_dft(&f), forward_dft(&g));
        for ((l, x), y) in lhs.coeffs().iter().zip(fh.coeffs()).zip(gh.coeffs()) {
            worst = worst.max((l - (x * a + y * b)).norm());
        }
    }
    Ok((worst <= 1e-13, format!("max deviation {worst:.2e}")))
}

fn oracle(rng: &mut CounterRng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for dim in 1..=3 {
        for n in (4..=ORACLE_MAX_N).step_by(2) {
            let f = random_field(rng, Grid::new(dim, n, 2.0 * PI)?);
            let (fast, slow) = (forward_dft(&f), naive_dft_oracle(&f)?);
            for (a, b) in fast.coeffs().iter().zip(slow.coeffs()) {
                worst = worst.max((a - b).norm());
            }
        }
    }
    Ok((worst <= 1e-12, format!("max deviation {worst:.2e}")))
}

fn phi_bounds(_: &mut CounterRng) -> Result<(bool, String)> {
    let mut bad = 0;
    for i in 0..1000 {
        let z = 10f64.powf(-12.0 + 18.0 * i as f64 / 999.0);
        let (p, ip) = (phi1(z), inv_phi1(z));
        if !(0.0..=1.0).contains(&p) || !(1.0 <= ip && ip <= 1.0 + z) {
            bad += 1;
        }
        let w = -50.0 + 100.0 * i as f64 / 999.0;
        if inv_phi1(w) < w {
            bad += 1;
        }
    }
    Ok((bad == 0, format!("{bad} violations over 2000 samples")))
}

fn diffusion(rng: &mut CounterRng) -> Result<(bool, String)> {
    let mut bad = 0;
    let mut worst = 0.0f64;
    for grid in grids() {
        for _ in 0..10 {
            let (eps, kappa, tau) = (rng.uniform(0.1, 1.0), rng.uniform(0.0, 3.0), 10.0 * (1.0 - rng.next_f64()));
            let ctx = OperatorContext::new(grid, eps, kappa)?;
            let f = random_field(rng, grid);
            let g1 = sq(&g_operator(&ctx, GKind::G1, tau, &f)?)?;
            let g2 = sq(&g_operator(&ctx, GKind::G2, tau, &f)?)?;
            let g2t = sq(&g_operator(&ctx, GKind::G2Tilde, tau, &f)?)?;
            let lap = laplacian(&ctx, &f)?;
            let lap2 = laplacian(&ctx, &lap)?;
            let half = g_operator(&ctx, GKind::PhiHalf, tau, &lap)?;
            let half2 = g_operator(&ctx, GKind::PhiHalf, tau, &lap2)?;
            let inv_half = sq(&g_operator(&ctx, GKind::PhiInvHalf, tau, &lap)?)?;
            let s = 1.0 + 1e-12;
            let upper = sq(&lap)? + tau * (eps * eps * sq(&lap2)? + kappa * grad_sq(&ctx, &lap)?);
            let inequalities = [
                grad_sq(&ctx, &f)? * s >= tau * g1,
                sq(&lap)? * s >= tau * g2,
                inv_half * s >= tau * g2t,
                sq(&lap)? <= inv_half * s,
                inv_half <= upper * s,
            ];
            bad += inequalities.iter().filter(|ok| !**ok).count();
            let splits = [
                (g1, eps * eps * grad_sq(&ctx, &half)? + kappa * sq(&half)?),
                (g2, eps * eps * sq(&half2)? + kappa * grad_sq(&ctx, &half)?),
                (g2t, eps * eps * sq(&lap2)? + kappa * grad_sq(&ctx, &lap)?),
            ];
            for (a, b) in splits {
                let d = (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
                worst = worst.max(d);
                if d > 1e-10 {
                    bad += 1;
                }
            }
        }
    }
    Ok((bad == 0, format!("{bad} violations, worst split defect {worst:.2e}")))
}

fn poincare(rng: &mut CounterRng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for grid in grids() {
        let ctx = OperatorContext::new(grid, 1.0, 0.0)?;
        for _ in 0..10 {
            let f = random_field(rng, grid);
            let mean = mass(&f) / grid.volume();
            let f = f.map(|v| v - mean);
            let lhs = grad_sq(&ctx, &f)?.sqrt();
            let rhs = norm(&laplacian(&ctx, &f)?, Norm::L2)? / grid.mu();
            worst = worst.max(lhs / rhs);
        }
    }
    Ok((worst <= 1.0 + 1e-12, format!("max ratio {worst:.4}")))
}

fn commutativity(rng: &mut CounterRng) -> Result<(bool, String)> {
    let grid = Grid::new(2, 16, 2.0 * PI)?;
    let ctx = OperatorContext::new(grid, 0.4, 1.3)?;
    let tau = 0.7;
    let symbols: Vec<SymbolMultiplier> = vec![
        ctx.lambda().clone(),
        ctx.big_lambda().clone(),
        ctx.phi_multiplier(0, tau)?,
        ctx.phi_multiplier(1, tau)?,
        crate::operators::g_multiplier(&ctx, GKind::G1, tau)?,
        crate::operators::g_multiplier(&ctx, GKind::PhiInvHalf, tau)?,
    ];
    let f = random_field(rng, grid);
    let mut worst = 0.0f64;
    for (i, a) in symbols.iter().enumerate() {
        for b in &symbols[i + 1..] {
            let ab = apply_multiplier(a, &apply_multiplier(b, &f)?)?;
            let ba = apply_multiplier(b, &apply_multiplier(a, &f)?)?;
            worst = worst.max(ab.max_abs_diff(&ba)? / (1.0 + ab.linf()));
        }
    }
    Ok((worst <= 1e-12, format!("max scaled difference {worst:.2e}")))
}

fn product_rules(rng: &mut CounterRng) -> Result<(bool, String)> {
    let (mut lap_ratio, mut grad_ratio) = (0.0f64, 0.0f64);
    for grid in grids() {
        let ctx = OperatorContext::new(grid, 1.0, 0.0)?;
        for _ in 0..10 {
            let (f, g) = (random_field(rng, grid), random_field(rng, grid));
            let fg = f.product(&g)?;
            let (fi, gi) = (f.linf().powi(2), g.linf().powi(2));
            let lap = |h: &GridFunction| -> Result<f64> { sq(&laplacian(&ctx, h)?) };
            lap_ratio = lap_ratio.max(lap(&fg)? / (8.0 * (gi * lap(&f)? + fi * lap(&g)?)));
            let grad = |h: &GridFunction| grad_sq(&ctx, h);
            grad_ratio = grad_ratio.max(grad(&fg)? / (2.0 * (gi * grad(&f)? + fi * grad(&g)?)));
        }
    }
    Ok((
        lap_ratio <= 1.0 && grad_ratio <= 1.0,
        format!("worst ratios: Laplacian {lap_ratio:.3}, gradient {grad_ratio:.3}"),
    ))
}

fn energy_decomposition(rng: &mut CounterRng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for grid in grids() {
        let ctx = OperatorContext::new(grid, rng.uniform(0.1, 1.0), 0.0)?;
        let u = random_field(rng, grid);
        let r = discrete_energy(&ctx, &u)?;
        let e2 = ctx.epsilon() * ctx.epsilon();
        worst = worst.max((r.energy - (0.5 * e2 * r.gradient_seminorm_sq + r.potential_integral)).abs() / r.energy);
        let grad: f64 = gradient(&ctx, &u)?.iter().map(|c| sq(c).unwrap_or(f64::NAN)).sum();
        let spectral = spectral_seminorm_sq(&forward_dft(&u), ctx.lambda(), 1)?;
        if !(grad <= spectral * (1.0 + 1e-12) && r.potential_integral >= 0.0) {
            return Ok((false, "seminorm or potential inconsistent".into()));
        }
    }
    Ok((worst <= 1e-13, format!("max relative defect {worst:.2e}")))
}

fn spinodal(n: usize, tau: f64, t_final: f64) -> SimConfig {
    let mut c = SimConfig::new(2, n, 0.5, tau, t_final);
    c.ic = InitialCondition::Spinodal {
        amplitude: 0.05,
        seed: Some(42),
    };
    c
}

fn mass_conservation(_: &mut CounterRng) -> Result<(bool, String)> {
    let trace = run_simulation(&spinodal(16, 0.1, 10.0), None)?.into_result()?;
    let drift = trace.max_relative_mass_drift();
    Ok((drift <= 1e-10, format!("max drift {drift:.2e}")))
}

fn linear_exactness(rng: &mut CounterRng) -> Result<(bool, String)> {
    let grid = Grid::new(2, 16, 2.0 * PI)?;
    let ctx = OperatorContext::new(grid, 0.5, 0.8)?.with_nonlinearity(Nonlinearity::Disabled);
    let tau = 0.05;
    let mut s = Erk2Stepper::new(ctx.clone(), StepperConfig::new(tau, KappaPolicy::Fixed(0.8)))?;
    let u0 = random_field(rng, grid);
    let mut u = u0.clone();
    let mut worst = 0.0f64;
    for n in 1..=20 {
        u = s.step(&u)?.u_next;
        let exact = apply_phi(&ctx, 0, n as f64 * tau, &u0)?;
        worst = worst.max(u.max_abs_diff(&exact)? / (n as f64 * u0.linf()));
    }
    Ok((worst <= 1e-14, format!("max error per step {worst:.2e} x ||u0||")))
}

fn energy_monotonicity(_: &mut CounterRng) -> Result<(bool, String)> {
    let mut worst = f64::NEG_INFINITY;
    for tau in [0.01, 0.1, 1.0, 10.0] {
        let cfg = spinodal(16, tau, 50.0 * tau);
        let mut s = Erk2Stepper::new(cfg.operator_context()?, cfg.stepper_config())?;
        let mut u = cfg.initial_field()?;
        for _ in 0..50 {
            let r = s.step(&u)?;
            let slack = ENERGY_SLACK * (1.0 + r.energy_before.abs());
            worst = worst.max((r.energy_stage.max(r.energy_after) - r.energy_before) / slack);
            u = r.u_next;
        }
    }
    Ok((worst <= 1.0, format!("max energy increase {worst:.2e} x slack")))
}

fn equilibria(_: &mut CounterRng) -> Result<(bool, String)> {
    let grid = Grid::new(2, 16, 2.0 * PI)?;
    let mut worst = 0.0f64;
    for c in [0.0, 1.0, -1.0] {
        let mut s = Erk2Stepper::new(
            OperatorContext::new(grid, 0.5, 0.0)?,
            StepperConfig::new(0.5, KappaPolicy::adaptive(0.0)),
        )?;
        let u = GridFunction::constant(grid, c);
        worst = worst.max(s.step(&u)?.u_next.max_abs_diff(&u)?);
    }
    Ok((worst <= 1e-13, format!("max drift {worst:.2e}")))
}

fn semigroup(rng: &mut CounterRng) -> Result<(bool, String)> {
    let grid = Grid::new(2, 16, 2.0 * PI)?;
    let ctx = OperatorContext::new(grid, 0.5, 0.3)?.with_nonlinearity(Nonlinearity::Disabled);
    let f = random_field(rng, grid);
    let (_, once) = crate::stepper::erk2_update(&ctx, &f, 0.4)?;
    let (_, half) = crate::stepper::erk2_update(&ctx, &f, 0.2)?;
    let (_, twice) = crate::stepper::erk2_update(&ctx, &half, 0.2)?;
    let d = once.max_abs_diff(&twice)?;
    Ok((d <= 1e-13, format!("difference {d:.2e}")))
}

fn determinism(_: &mut CounterRng) -> Result<(bool, String)> {
    let cfg = spinodal(16, 0.1, 2.0);
    let a = run_simulation(&cfg, None)?.into_result()?;
    let b = run_simulation(&cfg, None)?.into_result()?;
    let same = a.records.len() == b.records.len()
        && a.records.iter().zip(&b.records).all(|(x, y)| {
            x.energy.to_bits() == y.energy.to_bits()
                && x.mass.to_bits() == y.mass.to_bits()
                && x.linf.to_bits() == y.linf.to_bits()
        });
    Ok((same, format!("{} records compared bitwise", a.records.len())))
}

fn reference_consistency(_: &mut CounterRng) -> Result<(bool, String)> {
    let report = temporal_convergence(&spinodal(16, 0.02, 0.2), &[0.02, 0.01, 0.005], None)?;
    let ratio = report.extrapolation_ratio();
    let ok = ratio.is_some_and(|r| (1.0 / 4.5..=4.5).contains(&r));
    Ok((ok, format!("finest error / order-2 prediction = {:.3}", ratio.unwrap_or(f64::NAN))))
}

fn audit_completeness(_: &mut CounterRng) -> Result<(bool, String)> {
    let cfg = spinodal(16, 0.1, 2.0);
    let mut trace = run_simulation(&cfg, None)?.into_result()?;
    let e0 = trace.records[0].energy;
    let grid = cfg.grid()?;
    let clean = stability_audit(&trace, cfg.epsilon, e0, &grid).violations.len();
    for i in [3, 9, 15] {
        trace.records[i].energy += 1.0;
    }
    trace.records[12].mass += 1e-6;
    let report = stability_audit(&trace, cfg.epsilon, e0, &grid);
    let ok = clean == 0
        && report.records_checked == trace.records.len()
        && report.count(AuditCheck::EnergyIncrease) == 3
        && report.count(AuditCheck::MassDrift) == 1
        && report.violations.len() == 4;
    Ok((ok, format!("clean {clean}, injected 4, flagged {}", report.violations.len())))
}

fn csv_round_trip(_: &mut CounterRng) -> Result<(bool, String)> {
    let trace = run_simulation(&spinodal(8, 0.1, 1.0), None)?.into_result()?;
    let mut buf = Vec::new();
    write_trace_csv(&trace, &mut buf)?;
    let back = read_trace_csv(buf.as_slice())?;
    Ok((back.records == trace.records, format!("{} records", trace.records.len())))
}

fn snapshot_round_trip(rng: &mut CounterRng) -> Result<(bool, String)> {
    let mut ok = true;
    for grid in grids() {
        let f = random_field(rng, grid);
        let back = decode_snapshot(&encode_snapshot(&f))?;
        ok &= back.values().iter().zip(f.values()).all(|(a, b)| a.to_bits() == b.to_bits());
    }
    Ok((ok, "bit-exact on dims 1-3".into()))
}

fn config_round_trip(_: &mut CounterRng) -> Result<(bool, String)> {
    let mut cfg = spinodal(32, 0.05, 1.0);
    cfg.tau_list = Some(vec![0.1, 0.05]);
    let back = parse_config_str(&cfg.to_config_string())?;
    Ok((back == cfg && back.fingerprint() == cfg.fingerprint(), "canonical text parses back".into()))
}

fn rng_golden(_: &mut CounterRng) -> Result<(bool, String)> {
    let ok = splitmix64(0, 0) == 0xE220_A839_7B1D_CDAF && splitmix64(42, 0) == 0xBDD7_3226_2FEB_6E95;
    Ok((ok, "SplitMix64 stream pinned".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_check_passes() {
        for o in run_selftest() {
            assert!(o.passed, "{}/{}: {}", o.module, o.name, o.detail);
        }
    }
}
