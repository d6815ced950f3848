//! Periodic lattices, real grid functions and the discrete Fourier pair.
//!
//! Grid values are stored with the x index varying fastest. Spectral
//! coefficients use the same layout, with storage index `i` on each axis
//! holding wavenumber `i` for `i < N/2` and `i - N` otherwise, so every axis
//! covers `[-N/2, N/2 - 1]`.
//!
//! The transform pair is normalized on the forward side:
//!
//! ```text
//! fhat_k = N^-d  sum_x f(x) exp(+i mu k.x)
//! f(x)   =       sum_k fhat_k exp(-i mu k.x)
//! ```

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;

use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};

/// Imaginary residue (relative to `1 + max|Re|`) above which an inverse
/// transform is treated as a corrupted, non-Hermitian spectrum.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Largest per-axis size accepted by [`naive_dft_oracle`].
pub const ORACLE_MAX_N: usize = 8;

/// Uniform periodic lattice on the box `[0, L)^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dim must be 1, 2 or 3, got {dim}")));
        }
        if n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("N must be even, got {n}")));
        }
        if n < 4 {
            return Err(Error::InvalidGrid(format!("N must be at least 4, got {n}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("L must be positive, got {length}")));
        }
        Ok(Grid { dim, n, length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Mesh size `L / N`.
    pub fn h(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Fundamental wavenumber `2 pi / L`.
    pub fn mu(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Number of lattice points, `N^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Box measure `|Omega| = L^dim`.
    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Quadrature weight `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    /// Per-axis indices of a storage position; inactive axes are 0.
    pub fn multi_index(&self, linear: usize) -> [usize; 3] {
        let mut out = [0; 3];
        let mut rest = linear;
        for slot in out.iter_mut().take(self.dim) {
            *slot = rest % self.n;
            rest /= self.n;
        }
        out
    }

    pub fn linear_index(&self, idx: [usize; 3]) -> usize {
        let mut lin = 0;
        for axis in (0..self.dim).rev() {
            lin = lin * self.n + idx[axis];
        }
        lin
    }

    /// Signed wavenumber held at storage index `i` of one axis.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Storage index of wavenumber `k`, for `k` in `[-N/2, N/2 - 1]`.
    pub fn wavenumber_index(&self, k: i64) -> usize {
        let n = self.n as i64;
        debug_assert!((-n / 2..n / 2).contains(&k));
        k.rem_euclid(n) as usize
    }

    pub fn wavevector(&self, linear: usize) -> [i64; 3] {
        let idx = self.multi_index(linear);
        let mut k = [0; 3];
        for axis in 0..self.dim {
            k[axis] = self.wavenumber(idx[axis]);
        }
        k
    }

    /// Physical coordinates `(p h, q h, r h)` of a storage position.
    pub fn coordinates(&self, linear: usize) -> [f64; 3] {
        let idx = self.multi_index(linear);
        let h = self.h();
        [idx[0] as f64 * h, idx[1] as f64 * h, idx[2] as f64 * h]
    }

    /// Storage position of the mode `-k`.
    pub fn conjugate_index(&self, linear: usize) -> usize {
        let mut idx = self.multi_index(linear);
        for i in idx.iter_mut().take(self.dim) {
            *i = (self.n - *i) % self.n;
        }
        self.linear_index(idx)
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: self.to_string(),
                right: other.to_string(),
            })
        }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{} on L={}", self.n, self.dim, self.length)
    }
}

pub fn make_grid(dim: usize, n: usize, length: f64) -> Result<Grid> {
    Grid::new(dim, n, length)
}

/// Real periodic field sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "expected {} values for {grid}, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid function values"));
        }
        Ok(GridFunction { grid, values })
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        GridFunction { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        GridFunction {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f` at every node; unused coordinates are passed as 0.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.coordinates(i))).collect();
        GridFunction { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(GridFunction {
            grid: self.grid,
            values,
        })
    }

    /// Pointwise product.
    pub fn product(&self, other: &GridFunction) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x * y)
            .collect();
        Ok(GridFunction {
            grid: self.grid,
            values,
        })
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (x, y)| m.max((x - y).abs())))
    }
}

/// Complex Fourier coefficients over the spectral index set.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::invalid(format!(
                "expected {} coefficients for {grid}, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        Ok(SpectralField { grid, coeffs })
    }

    pub fn zeros(grid: Grid) -> Self {
        SpectralField {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    fn index(&self, k: [i64; 3]) -> usize {
        let mut idx = [0; 3];
        for axis in 0..self.grid.dim {
            idx[axis] = self.grid.wavenumber_index(k[axis]);
        }
        self.grid.linear_index(idx)
    }

    /// Coefficient of wavevector `k`; components beyond `dim` are ignored.
    pub fn coeff(&self, k: [i64; 3]) -> Complex64 {
        self.coeffs[self.index(k)]
    }

    pub fn set_coeff(&mut self, k: [i64; 3], value: Complex64) {
        let i = self.index(k);
        self.coeffs[i] = value;
    }

    /// Largest `|c(-k) - conj(c(k))|` over all modes.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| {
                let j = self.grid.conjugate_index(i);
                (self.coeffs[j] - self.coeffs[i].conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Projects onto the Hermitian-symmetric subspace. Self-paired modes
    /// (zero and Nyquist planes) become real.
    pub fn symmetrize(&mut self) {
        hermitian_project(&self.grid, &mut self.coeffs);
    }
}

pub(crate) fn hermitian_project(grid: &Grid, coeffs: &mut [Complex64]) {
    for i in 0..coeffs.len() {
        let j = grid.conjugate_index(i);
        if j < i {
            continue;
        }
        if j == i {
            coeffs[i].im = 0.0;
        } else {
            let avg = 0.5 * (coeffs[i] + coeffs[j].conj());
            coeffs[i] = avg;
            coeffs[j] = avg.conj();
        }
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized multi-axis DFT in place. `Inverse` carries `exp(+i...)`,
/// which is the sign of the forward transform in this crate's convention.
fn transform_axes(grid: &Grid, data: &mut [Complex64], direction: FftDirection) {
    let n = grid.n;
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft(n, direction));
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    // x lines are contiguous.
    fft.process_with_scratch(data, &mut scratch);

    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 1..grid.dim {
        let stride = n.pow(axis as u32);
        let block = stride * n;
        for outer in (0..data.len()).step_by(block) {
            for inner in 0..stride {
                let start = outer + inner;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, value) in line.iter().enumerate() {
                    data[start + j * stride] = *value;
                }
            }
        }
    }
}

pub(crate) fn forward_coeffs(f: &GridFunction) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_axes(&f.grid, &mut data, FftDirection::Inverse);
    let scale = 1.0 / f.grid.len() as f64;
    for c in &mut data {
        *c *= scale;
    }
    data
}

/// Inverse transform of a spectrum already projected to Hermitian symmetry.
pub(crate) fn synthesize_real(grid: &Grid, mut coeffs: Vec<Complex64>) -> GridFunction {
    hermitian_project(grid, &mut coeffs);
    transform_axes(grid, &mut coeffs, FftDirection::Forward);
    GridFunction::from_raw(*grid, coeffs.into_iter().map(|c| c.re).collect())
}

pub fn forward_dft(f: &GridFunction) -> SpectralField {
    SpectralField {
        grid: f.grid,
        coeffs: forward_coeffs(f),
    }
}

/// Inverse transform. Fails if the result carries an imaginary part larger
/// than [`SYMMETRY_TOLERANCE`] relative to the real part.
pub fn inverse_dft(spectrum: &SpectralField) -> Result<GridFunction> {
    let mut data = spectrum.coeffs.clone();
    transform_axes(&spectrum.grid, &mut data, FftDirection::Forward);
    let max_re = data.iter().fold(0.0_f64, |m, c| m.max(c.re.abs()));
    let max_im = data.iter().fold(0.0_f64, |m, c| m.max(c.im.abs()));
    if !(max_re.is_finite() && max_im.is_finite()) {
        return Err(Error::NonFinite("inverse transform"));
    }
    let limit = SYMMETRY_TOLERANCE * (1.0 + max_re);
    if max_im > limit {
        return Err(Error::SymmetryViolation {
            residue: max_im,
            limit,
        });
    }
    Ok(GridFunction::from_raw(
        spectrum.grid,
        data.into_iter().map(|c| c.re).collect(),
    ))
}

/// Direct evaluation of the transform sum. Test oracle; O(N^(2 dim)).
pub fn naive_dft_oracle(f: &GridFunction) -> Result<SpectralField> {
    let grid = f.grid;
    if grid.n > ORACLE_MAX_N {
        return Err(Error::invalid(format!(
            "oracle limited to N <= {ORACLE_MAX_N}, got {}",
            grid.n
        )));
    }
    let mu = grid.mu();
    let scale = 1.0 / grid.len() as f64;
    let coeffs = (0..grid.len())
        .map(|ki| {
            let k = grid.wavevector(ki);
            let mut acc = Complex64::new(0.0, 0.0);
            for (xi, &v) in f.values.iter().enumerate() {
                let x = grid.coordinates(xi);
                let phase = mu * (k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2]);
                acc += v * Complex64::from_polar(1.0, phase);
            }
            acc * scale
        })
        .collect();
    Ok(SpectralField { grid, coeffs })
}

/// Discrete inner product `h^dim sum f g`.
pub fn inner_product(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    f.grid.ensure_same(&g.grid)?;
    let sum: f64 = f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum();
    Ok(f.grid.cell_volume() * sum)
}

/// Spectral form of the inner product, `|Omega| sum fhat conj(ghat)`.
pub fn spectral_inner_product(f: &SpectralField, g: &SpectralField) -> Result<f64> {
    f.grid.ensure_same(&g.grid)?;
    let sum: f64 = f
        .coeffs
        .iter()
        .zip(&g.coeffs)
        .map(|(a, b)| (a * b.conj()).re)
        .sum();
    Ok(f.grid.volume() * sum)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Norm {
    L2,
    Linf,
    /// `l^s` for `1 <= s < inf`.
    Ls(f64),
}

pub fn norm(f: &GridFunction, kind: Norm) -> Result<f64> {
    match kind {
        Norm::L2 => Ok(inner_product(f, f)?.sqrt()),
        Norm::Linf => Ok(f.linf()),
        Norm::Ls(s) => {
            if !(s.is_finite() && s >= 1.0) {
                return Err(Error::invalid(format!("l^s norm needs 1 <= s < inf, got {s}")));
            }
            let sum: f64 = f.values.iter().map(|v| v.abs().powf(s)).sum();
            Ok((f.grid.cell_volume() * sum).powf(1.0 / s))
        }
    }
}

/// Discrete mass `<f, 1>`.
pub fn mass(f: &GridFunction) -> f64 {
    f.grid.cell_volume() * f.values.iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::uniform_field;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn make_grid_examples() {
        let g = make_grid(3, 8, 2.0 * PI).unwrap();
        assert!(close(g.h(), PI / 4.0, 1e-15));
        assert!(close(g.mu(), 1.0, 1e-15));
        let g = make_grid(1, 4, 1.0).unwrap();
        assert_eq!(g.h(), 0.25);
        assert!(close(g.mu(), 2.0 * PI, 1e-15));
        assert!(matches!(make_grid(2, 7, 1.0), Err(Error::InvalidGrid(_))));
        assert!(make_grid(2, 8, 0.0).is_err());
        assert!(make_grid(2, 8, -1.0).is_err());
        assert!(make_grid(4, 8, 1.0).is_err());
        assert!(make_grid(1, 2, 1.0).is_err());
    }

    #[test]
    fn wavenumber_layout() {
        let g = make_grid(1, 8, 1.0).unwrap();
        let ks: Vec<i64> = (0..8).map(|i| g.wavenumber(i)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        for k in -4..4 {
            assert_eq!(g.wavenumber(g.wavenumber_index(k)), k);
        }
        let g3 = make_grid(3, 4, 1.0).unwrap();
        for i in 0..g3.len() {
            assert_eq!(g3.linear_index(g3.multi_index(i)), i);
        }
        // x fastest
        assert_eq!(g3.multi_index(1), [1, 0, 0]);
        assert_eq!(g3.multi_index(4), [0, 1, 0]);
    }

    #[test]
    fn forward_of_constant_and_delta() {
        let g = make_grid(2, 8, 2.0).unwrap();
        let spec = forward_dft(&GridFunction::constant(g, 3.5));
        for (i, c) in spec.coeffs().iter().enumerate() {
            let expect = if i == 0 { 3.5 } else { 0.0 };
            assert!((c - Complex64::new(expect, 0.0)).norm() < 1e-14);
        }
        let mut delta = vec![0.0; g.len()];
        delta[0] = 1.0;
        let spec = forward_dft(&GridFunction::new(g, delta).unwrap());
        let flat = 1.0 / 64.0;
        assert!(spec
            .coeffs()
            .iter()
            .all(|c| (c - Complex64::new(flat, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn forward_matches_oracle_on_small_cube() {
        let g = make_grid(3, 4, 2.0 * PI).unwrap();
        let f = uniform_field(g, 1.0, 7);
        let fast = forward_dft(&f);
        let slow = naive_dft_oracle(&f).unwrap();
        for (a, b) in fast.coeffs().iter().zip(slow.coeffs()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(fast.hermitian_defect() < 1e-15);
    }

    #[test]
    fn oracle_rejects_large_grid() {
        let g = make_grid(1, 16, 1.0).unwrap();
        assert!(naive_dft_oracle(&GridFunction::zeros(g)).is_err());
    }

    #[test]
    fn inverse_examples() {
        let g = make_grid(3, 8, 2.0 * PI).unwrap();
        let f = uniform_field(g, 1.0, 3);
        let back = inverse_dft(&forward_dft(&f)).unwrap();
        assert!(back.max_abs_diff(&f).unwrap() <= 1e-13 * (1.0 + f.linf()));

        let mut spec = SpectralField::zeros(g);
        spec.set_coeff([1, 0, 0], Complex64::new(0.5, 0.0));
        spec.set_coeff([-1, 0, 0], Complex64::new(0.5, 0.0));
        let u = inverse_dft(&spec).unwrap();
        let cos = GridFunction::from_fn(g, |x| x[0].cos());
        assert!(u.max_abs_diff(&cos).unwrap() < 1e-14);

        let zero = inverse_dft(&SpectralField::zeros(g)).unwrap();
        assert_eq!(zero.linf(), 0.0);
    }

    #[test]
    fn inverse_rejects_broken_symmetry() {
        let g = make_grid(1, 8, 1.0).unwrap();
        let mut spec = SpectralField::zeros(g);
        spec.set_coeff([1, 0, 0], Complex64::new(1.0, 0.0));
        assert!(matches!(
            inverse_dft(&spec),
            Err(Error::SymmetryViolation { .. })
        ));
        spec.symmetrize();
        assert!(spec.hermitian_defect() < 1e-16);
        assert!(inverse_dft(&spec).is_ok());
    }

    #[test]
    fn inner_product_examples() {
        let g = make_grid(3, 8, 2.0 * PI).unwrap();
        let one = GridFunction::constant(g, 1.0);
        assert!(close(inner_product(&one, &one).unwrap(), (2.0 * PI).powi(3), 1e-14));

        for n in [4, 6, 8, 16] {
            let g = make_grid(1, n, 3.0).unwrap();
            let mu = g.mu();
            let c = GridFunction::from_fn(g, |x| (mu * x[0]).cos());
            let s = GridFunction::from_fn(g, |x| (mu * x[0]).sin());
            assert!(inner_product(&c, &s).unwrap().abs() < 1e-13);
        }

        let f = uniform_field(g, 1.0, 11);
        let l2 = norm(&f, Norm::L2).unwrap();
        assert!(close(inner_product(&f, &f).unwrap(), l2 * l2, 1e-14));
        let spec = forward_dft(&f);
        assert!(close(spectral_inner_product(&spec, &spec).unwrap(), l2 * l2, 1e-12));

        let other = make_grid(3, 4, 2.0 * PI).unwrap();
        assert!(inner_product(&f, &GridFunction::zeros(other)).is_err());
    }

    #[test]
    fn norm_examples() {
        let g = make_grid(1, 4, 1.0).unwrap();
        let two = GridFunction::constant(g, 2.0);
        assert_eq!(norm(&two, Norm::Linf).unwrap(), 2.0);
        assert!(close(norm(&two, Norm::L2).unwrap(), 2.0, 1e-15));
        let alt = GridFunction::new(g, vec![1.0, -1.0, 1.0, -1.0]).unwrap();
        assert!(close(norm(&alt, Norm::Ls(1.0)).unwrap(), 1.0, 1e-15));
        assert!(norm(&alt, Norm::Ls(0.5)).is_err());
        assert!(norm(&alt, Norm::Ls(f64::INFINITY)).is_err());
        let f = uniform_field(make_grid(2, 8, 1.0).unwrap(), 1.0, 5);
        assert!(close(norm(&f, Norm::Ls(2.0)).unwrap(), norm(&f, Norm::L2).unwrap(), 1e-14));
    }

    #[test]
    fn mass_examples() {
        let g = make_grid(2, 8, 2.0 * PI).unwrap();
        assert!(close(mass(&GridFunction::constant(g, 1.0)), (2.0 * PI).powi(2), 1e-14));
        let s = GridFunction::from_fn(g, |x| x[0].sin());
        assert!(mass(&s).abs() < 1e-13);
        let f = uniform_field(g, 1.0, 9);
        let spectral = g.volume() * forward_dft(&f).coeff([0, 0, 0]).re;
        assert!(close(mass(&f), spectral, 1e-12));
    }

    #[test]
    fn grid_function_rejects_non_finite() {
        let g = make_grid(1, 4, 1.0).unwrap();
        assert!(GridFunction::new(g, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(GridFunction::new(g, vec![0.0; 3]).is_err());
    }
}
