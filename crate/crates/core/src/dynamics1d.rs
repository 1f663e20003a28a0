//! Time evolution of the effective 1D cubic-quintic equation
//! i dphi/dt = -phi'' + x^2 phi + pi^2 beta^2 |phi|^4 phi - g_tilde |phi|^2 phi
//! by Strang splitting. Every nonlinear term is a pointwise real potential, so
//! both substeps are exactly unitary and mass is conserved to roundoff.

use crate::error::{Error, Result};
use crate::field::Field1D;
use crate::spectral::{transform_1d, Direction};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Coefficients of the reduced equation. g_tilde absorbs the transverse width:
/// g_tilde = g * int u^4 = g / sqrt(2 pi eps).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params1D {
    pub beta: f64,
    pub g_tilde: f64,
    /// Include the longitudinal x^2 trap. Stationary-profile studies switch it off.
    #[serde(default = "trap_on_default")]
    pub trap_on: bool,
    pub dt: f64,
    pub t_end: f64,
}

fn trap_on_default() -> bool {
    true
}

impl Params1D {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("beta", self.beta),
            ("g_tilde", self.g_tilde),
            ("dt", self.dt),
            ("t_end", self.t_end),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("params guard: {name} must be finite, got {v}")));
            }
        }
        if self.dt <= 0.0 {
            return Err(Error::Config(format!(
                "params guard: dt must be positive, got {}",
                self.dt
            )));
        }
        Ok(())
    }

    /// Number of steps covering t_end; rejects horizons that are not a whole
    /// number of steps so that diagnostics times are reproducible.
    pub fn step_count(&self) -> Result<u64> {
        let raw = self.t_end / self.dt;
        let n = raw.round();
        if n < 1.0 || (raw - n).abs() > 1e-9 * raw.abs().max(1.0) {
            return Err(Error::Config(format!(
                "params guard: t_end = {} is not a positive whole number of dt = {} steps",
                self.t_end, self.dt
            )));
        }
        Ok(n as u64)
    }
}

fn half_phase(phi: &mut Field1D, p: &Params1D, dt: f64) {
    let grid = *phi.grid();
    let b2 = PI * PI * p.beta * p.beta;
    for (j, v) in phi.values_mut().iter_mut().enumerate() {
        let x = grid.x(j);
        let rho = v.norm_sqr();
        let trap = if p.trap_on { x * x } else { 0.0 };
        let potential = trap + b2 * rho * rho - p.g_tilde * rho;
        *v *= Complex64::cis(-0.5 * dt * potential);
    }
}

/// One Strang step of signed size dt: half pointwise phase, full spectral
/// kinetic step exp(-i dt k^2), half phase with the updated density.
pub(crate) fn step_raw(phi: &Field1D, p: &Params1D, dt: f64) -> Field1D {
    let grid = *phi.grid();
    let mut work = phi.clone();
    half_phase(&mut work, p, dt);
    let mut hat = transform_1d(&work, Direction::Forward);
    for (m, v) in hat.values_mut().iter_mut().enumerate() {
        let k = grid.k(m);
        *v *= Complex64::cis(-dt * k * k);
    }
    let mut out = transform_1d(&hat, Direction::Inverse);
    half_phase(&mut out, p, dt);
    out
}

/// One forward step of size p.dt.
pub fn step_1d(phi: &Field1D, p: &Params1D) -> Result<Field1D> {
    p.validate()?;
    Ok(step_raw(phi, p, p.dt))
}

/// -i times the Hamiltonian applied to phi. i*rhs_1d is the variational
/// derivative of the 1D energy, which is what gradient checks and the
/// reduction residual compare against.
pub fn rhs_1d(phi: &Field1D, p: &Params1D) -> Field1D {
    let grid = *phi.grid();
    let mut hat = transform_1d(phi, Direction::Forward);
    for (m, v) in hat.values_mut().iter_mut().enumerate() {
        let k = grid.k(m);
        *v *= k * k;
    }
    let neg_lap = transform_1d(&hat, Direction::Inverse);
    let b2 = PI * PI * p.beta * p.beta;
    let mut out = neg_lap;
    for (j, v) in out.values_mut().iter_mut().enumerate() {
        let x = grid.x(j);
        let phi_j = phi.values()[j];
        let rho = phi_j.norm_sqr();
        let trap = if p.trap_on { x * x } else { 0.0 };
        let h_phi = *v + (trap + b2 * rho * rho - p.g_tilde * rho) * phi_j;
        *v = Complex64::new(0.0, -1.0) * h_phi;
    }
    out
}

/// March phi0 to t_end, invoking the observer at t = 0, every `stride` steps,
/// and at the final time. The observer's step index and time are exact
/// multiples of dt, so output rows are bit-reproducible.
pub fn evolve_1d<F>(phi0: &Field1D, p: &Params1D, stride: u64, mut observer: F) -> Result<Field1D>
where
    F: FnMut(u64, f64, &Field1D) -> Result<()>,
{
    p.validate()?;
    let n = p.step_count()?;
    let stride = stride.max(1);
    let mut phi = phi0.clone();
    observer(0, 0.0, &phi)?;
    for i in 1..=n {
        phi = step_raw(&phi, p, p.dt);
        let t = i as f64 * p.dt;
        if !phi.is_finite() {
            return Err(Error::NonFinite { t, step: i });
        }
        if i % stride == 0 || i == n {
            observer(i, t, &phi)?;
        }
    }
    Ok(phi)
}
