//! Double-well potential, discrete Ginzburg-Landau energy and the norm
//! bounds that follow from it.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{forward_dft, mass, Grid, GridFunction};
use crate::operators::{spectral_seminorm_sq, OperatorContext, SymbolMultiplier};

/// `F(u) = (u^2 - 1)^2 / 4`.
pub fn potential(u: f64) -> f64 {
    let w = u * u - 1.0;
    0.25 * w * w
}

/// `f(u) = F'(u) = u^3 - u`.
pub fn potential_derivative(u: f64) -> f64 {
    u * u * u - u
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    /// `E_N(u) = eps^2 / 2 ||grad u||^2 + <F(u), 1>`
    pub energy: f64,
    pub gradient_seminorm_sq: f64,
    pub potential_integral: f64,
}

pub fn discrete_energy(ctx: &OperatorContext, u: &GridFunction) -> Result<EnergyReport> {
    ctx.grid().ensure_same(u.grid())?;
    let gradient_seminorm_sq = spectral_seminorm_sq(&forward_dft(u), ctx.lambda(), 1)?;
    let potential_integral =
        u.grid().cell_volume() * u.values().iter().map(|&v| potential(v)).sum::<f64>();
    let e2 = ctx.epsilon() * ctx.epsilon();
    let report = EnergyReport {
        energy: 0.5 * e2 * gradient_seminorm_sq + potential_integral,
        gradient_seminorm_sq,
        potential_integral,
    };
    debug_assert!(report.potential_integral >= 0.0);
    debug_assert!(report.energy >= 0.5 * e2 * report.gradient_seminorm_sq);
    Ok(report)
}

/// Uniform-in-time bound `sqrt(2 E0) / eps` on `||grad u^n||`.
pub fn h1_bound_from_energy(initial_energy: f64, epsilon: f64) -> Result<f64> {
    if !(initial_energy >= 0.0) {
        return Err(Error::invalid(format!(
            "initial energy must be >= 0, got {initial_energy}"
        )));
    }
    if !(epsilon > 0.0) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok((2.0 * initial_energy).sqrt() / epsilon)
}

/// `(||grad f||, ||Lap f||)` evaluated spectrally.
pub fn h1_h2_seminorms(f: &GridFunction) -> (f64, f64) {
    let lambda = SymbolMultiplier::laplacian_eigenvalues(*f.grid());
    let spec = forward_dft(f);
    let h1 = spectral_seminorm_sq(&spec, &lambda, 1).expect("same grid");
    let h2 = spectral_seminorm_sq(&spec, &lambda, 2).expect("same grid");
    (h1.sqrt(), h2.sqrt())
}

/// Right-hand side of the three-dimensional embedding estimate
/// `||f||_inf^2 <= 3 |Omega|^-2 mass^2 + 3/(8 pi^3) ||grad f|| ||Lap f||`.
///
/// The constant is only reliable for fields with broadband spectra; smooth
/// low-mode fields can exceed it. [`fourier_linf_bound`] is the rigorous
/// alternative used when auditing trajectories.
pub fn sobolev_linf_bound(f: &GridFunction) -> f64 {
    let grid = f.grid();
    let m = mass(f);
    let (h1, h2) = h1_h2_seminorms(f);
    (3.0 * m * m / (grid.volume() * grid.volume()) + 3.0 / (8.0 * PI.powi(3)) * h1 * h2).sqrt()
}

/// Bound on `||f||_inf` from the mass and the two seminorms alone.
///
/// Uses `||f||_inf <= sum_k |fhat_k|` and Cauchy-Schwarz with weights
/// `lambda_k + t lambda_k^2`, `t = (h1 / h2)^2`, summed exactly over the
/// grid's nonzero modes.
pub fn fourier_linf_bound(grid: &Grid, mass: f64, h1: f64, h2: f64) -> f64 {
    let zero_mode = mass.abs() / grid.volume();
    if h1 <= 0.0 || h2 <= 0.0 {
        return zero_mode;
    }
    let t = (h1 / h2).powi(2);
    let lambda = SymbolMultiplier::laplacian_eigenvalues(*grid);
    let weight_sum: f64 = lambda
        .values()
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| 1.0 / (l + t * l * l))
        .sum();
    zero_mode + (weight_sum * (h1 * h1 + t * h2 * h2) / grid.volume()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::random::uniform_field;

    fn ctx(dim: usize, n: usize, eps: f64) -> OperatorContext {
        OperatorContext::new(make_grid(dim, n, 2.0 * PI).unwrap(), eps, 0.0).unwrap()
    }

    #[test]
    fn potential_values() {
        assert_eq!(potential(1.0), 0.0);
        assert_eq!(potential(-1.0), 0.0);
        assert_eq!(potential_derivative(1.0), 0.0);
        assert_eq!(potential_derivative(-1.0), 0.0);
        assert_eq!(potential(0.0), 0.25);
        assert_eq!(potential_derivative(0.0), 0.0);
    }

    #[test]
    fn potential_derivative_matches_central_difference() {
        let delta = 1e-5;
        for u in [-2.0, 0.3, 1.7] {
            let fd = (potential(u + delta) - potential(u - delta)) / (2.0 * delta);
            assert!((fd - potential_derivative(u)).abs() < 1e-8, "u = {u}");
        }
    }

    #[test]
    fn energy_examples() {
        let c = ctx(3, 8, 1.0);
        let g = *c.grid();
        assert_eq!(discrete_energy(&c, &GridFunction::constant(g, 1.0)).unwrap().energy, 0.0);
        let e0 = discrete_energy(&c, &GridFunction::zeros(g)).unwrap().energy;
        assert!((e0 - (2.0 * PI).powi(3) / 4.0).abs() < 1e-12);
        let s = GridFunction::from_fn(g, |x| x[0].sin());
        let e = discrete_energy(&c, &s).unwrap().energy;
        assert!((e - (2.0 * PI).powi(3) * 11.0 / 32.0).abs() < 1e-12 * e);
    }

    #[test]
    fn energy_decomposition_holds() {
        let c = ctx(2, 16, 0.3);
        let u = uniform_field(*c.grid(), 1.2, 5);
        let r = discrete_energy(&c, &u).unwrap();
        let e2 = 0.09;
        assert!((r.energy - (0.5 * e2 * r.gradient_seminorm_sq + r.potential_integral)).abs() < 1e-12);
        assert!(r.energy >= 0.5 * e2 * r.gradient_seminorm_sq);
        assert!(r.potential_integral >= 0.0);
    }

    #[test]
    fn h1_bound_examples() {
        assert_eq!(h1_bound_from_energy(0.0, 0.4).unwrap(), 0.0);
        assert_eq!(h1_bound_from_energy(2.0, 1.0).unwrap(), 2.0);
        assert!((h1_bound_from_energy(0.5, 0.1).unwrap() - 10.0).abs() < 1e-12);
        assert!(h1_bound_from_energy(-1.0, 1.0).is_err());
        assert!(h1_bound_from_energy(1.0, 0.0).is_err());
    }

    #[test]
    fn sobolev_bound_examples() {
        let g = make_grid(3, 8, 2.0 * PI).unwrap();
        let c = GridFunction::constant(g, -0.8);
        let b = sobolev_linf_bound(&c);
        assert!((b - 3f64.sqrt() * 0.8).abs() < 1e-12);
        assert!(b >= c.linf());
        assert_eq!(sobolev_linf_bound(&GridFunction::zeros(g)), 0.0);
    }

    #[test]
    fn fourier_bound_dominates_sup_norm() {
        let g = make_grid(2, 16, 2.0 * PI).unwrap();
        let fields = [
            GridFunction::from_fn(g, |x| x[0].cos()),
            GridFunction::from_fn(g, |x| 0.3 + (x[0] + 2.0 * x[1]).sin() * 0.7),
            GridFunction::from_fn(g, |x| (3.0 * x[0].cos()).tanh()),
            uniform_field(g, 1.0, 77),
            GridFunction::constant(g, 0.5),
        ];
        for f in &fields {
            let (h1, h2) = h1_h2_seminorms(f);
            let b = fourier_linf_bound(&g, mass(f), h1, h2);
            assert!(f.linf() <= b * (1.0 + 1e-12), "{} > {}", f.linf(), b);
        }
    }
}
