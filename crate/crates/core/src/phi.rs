//! Scalar phi- and S-functions of the exponential integrator.
//!
//! All are evaluated through `expm1`/`tanh`, which keep full relative
//! accuracy as `z -> 0` where the textbook quotients cancel.

use crate::error::{Error, Result};

/// `phi_0(z) = exp(-z)`.
pub fn phi0(z: f64) -> f64 {
    (-z).exp()
}

/// `phi_1(z) = (1 - exp(-z)) / z`, `phi_1(0) = 1`. Defined on all reals.
pub fn phi1(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        -(-z).exp_m1() / z
    }
}

/// `1 / phi_1(z) = z / (1 - exp(-z))`, equal to 1 at 0.
pub fn inv_phi1(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        z / -(-z).exp_m1()
    }
}

/// `S_1(z) = z / (exp(z) - 1)`, `S_1(0) = 1`.
pub fn s1(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        z / z.exp_m1()
    }
}

/// `S_2(z) = z (exp(z) + 1) / (exp(z) - 1) = z / tanh(z / 2)`, `S_2(0) = 2`.
pub fn s2(z: f64) -> f64 {
    if z == 0.0 {
        2.0
    } else {
        z / (0.5 * z).tanh()
    }
}

fn check_nonnegative(z: f64) -> Result<()> {
    if z.is_nan() || z < 0.0 {
        Err(Error::invalid(format!("argument must be >= 0, got {z}")))
    } else {
        Ok(())
    }
}

/// `phi_i(z)` for `i` in `{0, 1}` and `z >= 0`.
pub fn phi(i: usize, z: f64) -> Result<f64> {
    check_nonnegative(z)?;
    match i {
        0 => Ok(phi0(z)),
        1 => Ok(phi1(z)),
        _ => Err(Error::invalid(format!("phi index must be 0 or 1, got {i}"))),
    }
}

/// `S_j(z)` for `j` in `{1, 2}` and `z >= 0`.
pub fn s_fn(j: usize, z: f64) -> Result<f64> {
    check_nonnegative(z)?;
    match j {
        1 => Ok(s1(z)),
        2 => Ok(s2(z)),
        _ => Err(Error::invalid(format!("S index must be 1 or 2, got {j}"))),
    }
}
