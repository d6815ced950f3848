//! Fourier-diagonal operator algebra.
//!
//! Every linear operator here is a per-mode real multiplier applied between
//! a forward and an inverse transform. Even symbols (`lambda`, `Lambda` and
//! functions of them) keep their value on Nyquist modes; first derivatives
//! are odd in `k` and are zeroed on any mode whose component along the
//! differentiated axis is `-N/2`, so they map real fields to real fields.
//!
//! Sign convention: with `f = sum fhat exp(-i mu k.x)` the x-derivative has
//! symbol `-i mu k_x`, and `-Laplacian` has symbol `lambda = mu^2 |k|^2`.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{forward_coeffs, mass, norm, synthesize_real, Grid, GridFunction, Norm, SpectralField};
use crate::phi::{inv_phi1, phi0, phi1};

/// `|u|` beyond which the cubic is considered to have blown up.
pub const DIVERGENCE_LINF: f64 = 1e3;

/// One real value per Fourier mode, stored in spectral layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolMultiplier {
    grid: Grid,
    values: Vec<f64>,
}

impl SymbolMultiplier {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "expected {} multiplier values for {grid}, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(SymbolMultiplier { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        SymbolMultiplier {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Builds a multiplier from a function of the wavevector.
    pub fn from_wavevector(grid: Grid, f: impl Fn([i64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.wavevector(i))).collect();
        SymbolMultiplier { grid, values }
    }

    /// Eigenvalues of `-Laplacian`: `mu^2 |k|^2`.
    pub fn laplacian_eigenvalues(grid: Grid) -> Self {
        let mu2 = grid.mu() * grid.mu();
        Self::from_wavevector(grid, |k| {
            mu2 * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, k: [i64; 3]) -> f64 {
        let mut idx = [0; 3];
        for axis in 0..self.grid.dim() {
            idx[axis] = self.grid.wavenumber_index(k[axis]);
        }
        self.values[self.grid.linear_index(idx)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        SymbolMultiplier {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &SymbolMultiplier, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(SymbolMultiplier {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn scale_in_place(&self, coeffs: &mut [Complex64]) {
        for (c, &m) in coeffs.iter_mut().zip(&self.values) {
            *c *= m;
        }
    }
}

/// `|Omega| sum_k w_k |fhat_k|^2`.
pub fn weighted_spectral_sum(spectrum: &SpectralField, weights: &SymbolMultiplier) -> Result<f64> {
    spectrum.grid().ensure_same(weights.grid())?;
    let sum: f64 = spectrum
        .coeffs()
        .iter()
        .zip(weights.values())
        .map(|(c, w)| w * c.norm_sqr())
        .sum();
    Ok(spectrum.grid().volume() * sum)
}

/// `|Omega| sum_k lambda_k^p |fhat_k|^2`; `p = 1` is `||grad f||^2`,
/// `p = 2` is `||Lap f||^2`, `p = 3` is `||Lap grad f||^2`.
pub fn spectral_seminorm_sq(spectrum: &SpectralField, lambda: &SymbolMultiplier, power: i32) -> Result<f64> {
    spectrum.grid().ensure_same(lambda.grid())?;
    let sum: f64 = spectrum
        .coeffs()
        .iter()
        .zip(lambda.values())
        .map(|(c, l)| l.powi(power) * c.norm_sqr())
        .sum();
    Ok(spectrum.grid().volume() * sum)
}

pub fn apply_multiplier(m: &SymbolMultiplier, f: &GridFunction) -> Result<GridFunction> {
    m.grid.ensure_same(f.grid())?;
    if !m.is_finite() {
        return Err(Error::NonFinite("symbol multiplier"));
    }
    let mut coeffs = forward_coeffs(f);
    m.scale_in_place(&mut coeffs);
    Ok(synthesize_real(&m.grid, coeffs))
}

/// Which nonlinearity `N_kappa` uses. `Disabled` sets `N_kappa = 0`, leaving
/// the pure linear flow `u' + L_kappa u = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Nonlinearity {
    #[default]
    DoubleWell,
    Disabled,
}

/// Grid plus the parameters of the split `u' + L_kappa u = N_kappa(u)`,
/// `L_kappa = eps^2 Lap^2 - kappa Lap`, `N_kappa(u) = Lap(u^3 - u) - kappa Lap u`.
#[derive(Debug, Clone)]
pub struct OperatorContext {
    grid: Grid,
    epsilon: f64,
    kappa: f64,
    lambda: SymbolMultiplier,
    big_lambda: SymbolMultiplier,
    nonlinearity: Nonlinearity,
    dealias: bool,
}

impl OperatorContext {
    pub fn new(grid: Grid, epsilon: f64, kappa: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        check_kappa(kappa)?;
        let lambda = SymbolMultiplier::laplacian_eigenvalues(grid);
        let big_lambda = stabilized_symbol(&lambda, epsilon, kappa);
        Ok(OperatorContext {
            grid,
            epsilon,
            kappa,
            lambda,
            big_lambda,
            nonlinearity: Nonlinearity::default(),
            dealias: false,
        })
    }

    /// Same context with a new `kappa`; `Lambda` is rebuilt.
    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        check_kappa(kappa)?;
        Ok(OperatorContext {
            grid: self.grid,
            epsilon: self.epsilon,
            kappa,
            lambda: self.lambda.clone(),
            big_lambda: stabilized_symbol(&self.lambda, self.epsilon, kappa),
            nonlinearity: self.nonlinearity,
            dealias: self.dealias,
        })
    }

    pub fn with_nonlinearity(mut self, nonlinearity: Nonlinearity) -> Self {
        self.nonlinearity = nonlinearity;
        self
    }

    /// Enables 2/3-rule truncation of the cubic term.
    pub fn with_dealias(mut self, dealias: bool) -> Self {
        self.dealias = dealias;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Eigenvalues of `-Lap`.
    pub fn lambda(&self) -> &SymbolMultiplier {
        &self.lambda
    }

    /// Eigenvalues of `L_kappa`: `eps^2 lambda^2 + kappa lambda`.
    pub fn big_lambda(&self) -> &SymbolMultiplier {
        &self.big_lambda
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        self.nonlinearity
    }

    pub fn dealias(&self) -> bool {
        self.dealias
    }

    /// Per-mode `phi_i(tau Lambda_k)`.
    pub fn phi_multiplier(&self, i: usize, tau: f64) -> Result<SymbolMultiplier> {
        check_tau(tau)?;
        match i {
            0 => Ok(self.big_lambda.map(|l| phi0(tau * l))),
            1 => Ok(self.big_lambda.map(|l| phi1(tau * l))),
            _ => Err(Error::invalid(format!("phi index must be 0 or 1, got {i}"))),
        }
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa.is_finite() && kappa >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("kappa must be >= 0, got {kappa}")))
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("tau must be positive, got {tau}")))
    }
}

fn stabilized_symbol(lambda: &SymbolMultiplier, epsilon: f64, kappa: f64) -> SymbolMultiplier {
    let e2 = epsilon * epsilon;
    lambda.map(|l| e2 * l * l + kappa * l)
}

/// Discrete Laplacian, symbol `-lambda`.
pub fn laplacian(ctx: &OperatorContext, f: &GridFunction) -> Result<GridFunction> {
    apply_multiplier(&ctx.lambda.map(|l| -l), f)
}

fn derivative_symbol(grid: &Grid, k: [i64; 3], axis: usize) -> Complex64 {
    let n = grid.n() as i64;
    if k[axis] == -n / 2 {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(0.0, -grid.mu() * k[axis] as f64)
    }
}

/// Spectral gradient, one component per axis.
pub fn gradient(ctx: &OperatorContext, f: &GridFunction) -> Result<Vec<GridFunction>> {
    ctx.grid.ensure_same(f.grid())?;
    let grid = ctx.grid;
    let base = forward_coeffs(f);
    Ok((0..grid.dim())
        .map(|axis| {
            let coeffs = base
                .iter()
                .enumerate()
                .map(|(i, c)| c * derivative_symbol(&grid, grid.wavevector(i), axis))
                .collect();
            synthesize_real(&grid, coeffs)
        })
        .collect())
}

/// Spectral divergence of a vector field given as one component per axis.
pub fn divergence(ctx: &OperatorContext, components: &[GridFunction]) -> Result<GridFunction> {
    let grid = ctx.grid;
    if components.len() != grid.dim() {
        return Err(Error::invalid(format!(
            "divergence needs {} components, got {}",
            grid.dim(),
            components.len()
        )));
    }
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (axis, comp) in components.iter().enumerate() {
        grid.ensure_same(comp.grid())?;
        for (i, c) in forward_coeffs(comp).into_iter().enumerate() {
            acc[i] += c * derivative_symbol(&grid, grid.wavevector(i), axis);
        }
    }
    Ok(synthesize_real(&grid, acc))
}

/// `(-Lap)^{-1}` on mean-zero fields; the zero mode of the result is 0.
pub fn inv_laplacian(ctx: &OperatorContext, f: &GridFunction) -> Result<GridFunction> {
    let m = mass(f);
    if m.abs() > 1e-10 * (1.0 + norm(f, Norm::L2)?) {
        return Err(Error::MeanNotZero { mass: m });
    }
    apply_multiplier(&ctx.lambda.map(|l| if l == 0.0 { 0.0 } else { 1.0 / l }), f)
}

/// `phi_i(tau L_kappa) f`.
pub fn apply_phi(ctx: &OperatorContext, i: usize, tau: f64, f: &GridFunction) -> Result<GridFunction> {
    apply_multiplier(&ctx.phi_multiplier(i, tau)?, f)
}

/// Mask for the 2/3 rule: keeps modes with `|k_a| < N/3` on every axis.
fn dealias_mask(grid: &Grid) -> SymbolMultiplier {
    let cutoff = grid.n() as f64 / 3.0;
    SymbolMultiplier::from_wavevector(*grid, |k| {
        if k.iter().all(|&ka| (ka.abs() as f64) < cutoff) {
            1.0
        } else {
            0.0
        }
    })
}

/// Spectrum of `N_kappa(u)`, Hermitian-projected.
pub(crate) fn nonlinear_spectrum(ctx: &OperatorContext, u: &GridFunction) -> Result<Vec<Complex64>> {
    ctx.grid.ensure_same(u.grid())?;
    let linf = u.linf();
    if !(linf <= DIVERGENCE_LINF) {
        return Err(Error::Diverged {
            linf,
            threshold: DIVERGENCE_LINF,
        });
    }
    if ctx.nonlinearity == Nonlinearity::Disabled {
        return Ok(vec![Complex64::new(0.0, 0.0); ctx.grid.len()]);
    }
    let mut cubic = forward_coeffs(&u.map(|v| v * v * v));
    if ctx.dealias {
        dealias_mask(&ctx.grid).scale_in_place(&mut cubic);
    }
    let linear = forward_coeffs(u);
    let shift = 1.0 + ctx.kappa;
    let mut out: Vec<Complex64> = cubic
        .iter()
        .zip(&linear)
        .zip(ctx.lambda.values())
        .map(|((c, l), &lam)| -lam * (c - shift * l))
        .collect();
    crate::grid::hermitian_project(&ctx.grid, &mut out);
    Ok(out)
}

/// `N_kappa(u) = Lap(u^3 - u) - kappa Lap u`.
pub fn nonlinear_term(ctx: &OperatorContext, u: &GridFunction) -> Result<GridFunction> {
    let coeffs = nonlinear_spectrum(ctx, u)?;
    Ok(synthesize_real(&ctx.grid, coeffs))
}

/// Diagnostic operators built from `phi_1(tau L_kappa)`, `L_kappa` and `Lap`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GKind {
    /// `sqrt(phi_1(tau Lambda) Lambda lambda)`
    G1,
    /// `sqrt(phi_1(tau Lambda) Lambda lambda^2)`
    G2,
    /// `sqrt(Lambda lambda^2)`
    G2Tilde,
    /// `sqrt(phi_1(tau Lambda))`
    PhiHalf,
    /// `sqrt(tau Lambda / (1 - exp(-tau Lambda)))`
    PhiInvHalf,
}

fn clamped_sqrt(v: f64) -> f64 {
    v.max(0.0).sqrt()
}

pub fn g_multiplier(ctx: &OperatorContext, kind: GKind, tau: f64) -> Result<SymbolMultiplier> {
    check_tau(tau)?;
    let lam = &ctx.lambda;
    let big = &ctx.big_lambda;
    match kind {
        GKind::G1 => big.zip_with(lam, |b, l| clamped_sqrt(phi1(tau * b) * b * l)),
        GKind::G2 => big.zip_with(lam, |b, l| clamped_sqrt(phi1(tau * b) * b * l * l)),
        GKind::G2Tilde => big.zip_with(lam, |b, l| clamped_sqrt(b * l * l)),
        GKind::PhiHalf => Ok(big.map(|b| clamped_sqrt(phi1(tau * b)))),
        GKind::PhiInvHalf => Ok(big.map(|b| clamped_sqrt(inv_phi1(tau * b)))),
    }
}

pub fn g_operator(ctx: &OperatorContext, kind: GKind, tau: f64, f: &GridFunction) -> Result<GridFunction> {
    apply_multiplier(&g_multiplier(ctx, kind, tau)?, f)
}
