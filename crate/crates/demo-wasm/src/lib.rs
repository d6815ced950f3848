//! Browser bindings: an interactive 2-D simulation, the phi- and
//! S-function curves, and the per-mode damping of one step.

use std::f64::consts::PI;

use wasm_bindgen::prelude::*;

use ch_spectral::energy::discrete_energy;
use ch_spectral::grid::{mass, Grid, GridFunction};
use ch_spectral::initial::InitialCondition;
use ch_spectral::operators::OperatorContext;
use ch_spectral::phi::{phi0, phi1, s1, s2};
use ch_spectral::{Erk2Stepper, KappaPolicy, StepperConfig};

/// Spinodal decomposition on a periodic square, advanced on demand.
#[wasm_bindgen]
pub struct Simulation {
    stepper: Erk2Stepper,
    u: GridFunction,
    steps: u32,
    tau: f64,
    kappa: f64,
}

#[wasm_bindgen]
impl Simulation {
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize, epsilon: f64, tau: f64, amplitude: f64, seed: u64) -> Result<Simulation, String> {
        let grid = Grid::new(2, n, 2.0 * PI).map_err(|e| e.to_string())?;
        let u = InitialCondition::Spinodal {
            amplitude,
            seed: Some(seed),
        }
        .build(grid, seed, true)
        .map_err(|e| e.to_string())?;
        let ctx = OperatorContext::new(grid, epsilon, 0.0).map_err(|e| e.to_string())?;
        let stepper = Erk2Stepper::new(ctx, StepperConfig::new(tau, KappaPolicy::adaptive(0.0)))
            .map_err(|e| e.to_string())?;
        Ok(Simulation {
            stepper,
            u,
            steps: 0,
            tau,
            kappa: 0.0,
        })
    }

    /// Advances `count` steps and returns the energy afterwards.
    pub fn advance(&mut self, count: u32) -> Result<f64, String> {
        for _ in 0..count {
            let r = self.stepper.step(&self.u).map_err(|e| e.to_string())?;
            self.kappa = r.kappa_used;
            self.u = r.u_next;
            self.steps += 1;
        }
        Ok(self.energy())
    }

    pub fn n(&self) -> usize {
        self.u.grid().n()
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.tau
    }

    pub fn energy(&self) -> f64 {
        discrete_energy(self.stepper.context(), &self.u).map_or(f64::NAN, |r| r.energy)
    }

    pub fn mass(&self) -> f64 {
        mass(&self.u)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn max_abs(&self) -> f64 {
        self.u.linf()
    }

    pub fn values(&self) -> Vec<f64> {
        self.u.values().to_vec()
    }

    /// RGBA pixels, one per node, row `y` then column `x`: blue for
    /// `u = -1`, white for 0, red for `u = 1`.
    pub fn rgba(&self) -> Vec<u8> {
        let mut px = Vec::with_capacity(4 * self.u.values().len());
        for &v in self.u.values() {
            let s = v.clamp(-1.0, 1.0);
            let fade = |c: f64| (255.0 * (1.0 - c.abs())) as u8;
            let (r, g, b) = if s >= 0.0 { (255, fade(s), fade(s)) } else { (fade(s), fade(s), 255) };
            px.extend_from_slice(&[r, g, b, 255]);
        }
        px
    }
}

/// `samples` rows of `[z, phi0, phi1, S1, S2]` for `z` in `[0, z_max]`,
/// flattened.
#[wasm_bindgen]
pub fn phi_curves(z_max: f64, samples: usize) -> Vec<f64> {
    let samples = samples.max(2);
    let mut out = Vec::with_capacity(5 * samples);
    for i in 0..samples {
        let z = z_max * i as f64 / (samples - 1) as f64;
        out.extend_from_slice(&[z, phi0(z), phi1(z), s1(z), s2(z)]);
    }
    out
}

/// Per-mode factors of one step along `k = 0..=n/2` on a `2 pi` box: rows of
/// `[k, Lambda_k, phi0(tau Lambda_k), tau phi1(tau Lambda_k)]`, flattened.
#[wasm_bindgen]
pub fn mode_damping(n: usize, epsilon: f64, kappa: f64, tau: f64) -> Vec<f64> {
    let half = n / 2;
    let mut out = Vec::with_capacity(4 * (half + 1));
    for k in 0..=half {
        let lam = (k * k) as f64;
        let big = epsilon * epsilon * lam * lam + kappa * lam;
        out.extend_from_slice(&[k as f64, big, phi0(tau * big), tau * phi1(tau * big)]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulation_dissipates_and_keeps_mass() {
        let mut sim = Simulation::new(32, 0.5, 0.1, 0.05, 42).unwrap();
        let e0 = sim.energy();
        let e1 = sim.advance(20).unwrap();
        assert!(e1 <= e0 + 1e-10 * (1.0 + e0));
        assert!(sim.mass().abs() < 1e-12);
        assert!((sim.time() - 2.0).abs() < 1e-12);
        assert_eq!(sim.rgba().len(), 4 * 32 * 32);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Simulation::new(7, 0.5, 0.1, 0.05, 1).is_err());
        assert!(Simulation::new(16, -1.0, 0.1, 0.05, 1).is_err());
        assert!(Simulation::new(16, 0.5, 0.1, 0.5, 1).is_err());
    }

    #[test]
    fn curves_start_at_limits() {
        let c = phi_curves(10.0, 11);
        assert_eq!(c.len(), 55);
        assert_eq!(&c[..5], &[0.0, 1.0, 1.0, 1.0, 2.0]);
        let d = mode_damping(8, 1.0, 0.0, 1.0);
        assert_eq!(d.len(), 20);
        assert!((d[6] - (-1.0f64).exp()).abs() < 1e-15);
    }
}
