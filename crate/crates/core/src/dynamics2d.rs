//! Time evolution of the planar gauged equation
//! i dpsi/dt = (-i grad + A)^2 psi + V_eps psi - g |psi|^2 psi + W psi
//! with A the divergence-free flux-attachment field of |psi|^2 and W the
//! feedback of the gauge field on the current (see the gauge module).
//!
//! The stepper is classical RK4 in the Laplacian's integrating-factor frame:
//! the stiff exp(-i k^2 t) rotation is applied exactly in Fourier space and
//! the remaining terms, with every nonlocal field recomputed at each stage,
//! go through the standard four-stage tableau. Plain RK4 on the full operator
//! would need dt * k_max^2 inside its stability interval, which the transverse
//! resolution of a tight wave guide puts far out of reach.

use crate::error::{Error, Result};
use crate::field::{Field2D, VectorField2D};
use crate::gauge::{self, GaugeBundle};
use crate::grid::Grid2D;
use crate::spectral::{fft2, gradient_from_hat, ik};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Ring-amplitude abort threshold: one millionth of the peak density.
pub const BOUNDARY_LIMIT: f64 = 1e-3;

/// Coefficients and time grid of the planar system.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params2D {
    pub beta: f64,
    pub g: f64,
    /// Confinement parameter: trap V_eps = x^2 + y^2/eps^2 - 1/eps.
    pub eps: f64,
    pub dt: f64,
    pub t_end: f64,
}

impl Params2D {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("beta", self.beta),
            ("g", self.g),
            ("eps", self.eps),
            ("dt", self.dt),
            ("t_end", self.t_end),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("params guard: {name} must be finite, got {v}")));
            }
        }
        if self.eps <= 0.0 {
            return Err(Error::Config(format!(
                "params guard: eps must be positive, got {}",
                self.eps
            )));
        }
        if self.dt <= 0.0 {
            return Err(Error::Config(format!(
                "params guard: dt must be positive, got {}",
                self.dt
            )));
        }
        if self.dt / self.eps > 0.5 {
            return Err(Error::Config(format!(
                "params guard: dt must resolve the transverse gap, dt/eps = {:.3} > 0.5",
                self.dt / self.eps
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

/// A state of the evolution together with the gauge objects of its density,
/// so diagnostics never recompute them.
#[derive(Debug, Clone)]
pub struct State2D {
    pub t: f64,
    pub psi: Field2D,
    pub bundle: GaugeBundle,
}

impl State2D {
    pub fn new(t: f64, psi: Field2D, p: &Params2D) -> Result<Self> {
        let bundle = gauge::gauge_bundle(&psi.density(), p.beta)?;
        Ok(State2D { t, psi, bundle })
    }
}

/// Trap samples x^2 + y^2/eps^2 - 1/eps. The shift puts the transverse ground
/// level at zero, so trapped states oscillate at O(1) phase rates.
pub(crate) fn potential_values(g: &Grid2D, eps: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(g.len());
    for iy in 0..g.ny() {
        let y = g.y(iy);
        let ty = y * y / (eps * eps) - 1.0 / eps;
        for ix in 0..g.nx() {
            let x = g.x(ix);
            v.push(x * x + ty);
        }
    }
    v
}

fn lawson_factors(g: &Grid2D, dt: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut half = Vec::with_capacity(g.len());
    let mut full = Vec::with_capacity(g.len());
    for my in 0..g.ny() {
        let ky = g.ky(my);
        for mx in 0..g.nx() {
            let kx = g.kx(mx);
            let k2 = kx * kx + ky * ky;
            half.push(Complex64::cis(-0.5 * dt * k2));
            full.push(Complex64::cis(-dt * k2));
        }
    }
    (half, full)
}

/// All terms of -i * H psi except the Laplacian, evaluated in real space from a
/// stage's spectral representation. `tc` short-circuits the gauge solve when
/// the caller already holds t_coulomb for this density.
fn nonlinear_rhs(
    g: &Grid2D,
    psi: &[Complex64],
    psi_hat: &[Complex64],
    p: &Params2D,
    pot: &[f64],
    tc: Option<(&[f64], &[f64])>,
    include_current: bool,
) -> Vec<Complex64> {
    let rho: Vec<f64> = psi.iter().map(|v| v.norm_sqr()).collect();
    let zeros;
    let owned;
    let (tcx, tcy): (&[f64], &[f64]) = match tc {
        Some(fields) => fields,
        None if p.beta == 0.0 => {
            zeros = vec![0.0; g.len()];
            (&zeros, &zeros)
        }
        None => {
            owned = gauge::t_coulomb_from_density(g, &rho, p.beta);
            (&owned.0, &owned.1)
        }
    };
    let (dpsi_x, dpsi_y) = gradient_from_hat(g, psi_hat);
    let dx = dpsi_x.values();
    let dy = dpsi_y.values();

    // Cross term of (-i grad + A)^2 in its symmetric split
    //   -i [ A . grad psi + div(A psi) ]
    // rather than -2i A . grad psi: the two agree in the continuum where
    // div A = 0, but only the split form keeps the discrete operator exactly
    // Hermitian (the spectral product rule and the Nyquist rows of the
    // projection both break the shortcut). This is what makes i*rhs the
    // exact gradient of the energy on the grid.
    let div_a_psi: Option<Vec<Complex64>> = if p.beta != 0.0 {
        let px: Vec<Complex64> = (0..g.len()).map(|i| tcx[i] * psi[i]).collect();
        let py: Vec<Complex64> = (0..g.len()).map(|i| tcy[i] * psi[i]).collect();
        let px_hat = fft2(g, &px, false);
        let py_hat = fft2(g, &py, false);
        let mut div_hat = Vec::with_capacity(g.len());
        for my in 0..g.ny() {
            let iky = ik(my, g.ny(), g.ky(my));
            for mx in 0..g.nx() {
                let ikx = ik(mx, g.nx(), g.kx(mx));
                let idx = my * g.nx() + mx;
                div_hat.push(ikx * px_hat[idx] + iky * py_hat[idx]);
            }
        }
        Some(fft2(g, &div_hat, true))
    } else {
        None
    };

    let w = if include_current && p.beta != 0.0 {
        let mut jx = Vec::with_capacity(g.len());
        let mut jy = Vec::with_capacity(g.len());
        for i in 0..g.len() {
            jx.push((psi[i].conj() * dx[i]).im + tcx[i] * rho[i]);
            jy.push((psi[i].conj() * dy[i]).im + tcy[i] * rho[i]);
        }
        let j = VectorField2D::from_raw(*g, jx, jy);
        Some(gauge::current_potential(&j, p.beta))
    } else {
        None
    };

    let mut out = Vec::with_capacity(g.len());
    for i in 0..g.len() {
        let w_i = w.as_ref().map_or(0.0, |f| f.values()[i]);
        let d_i = div_a_psi.as_ref().map_or(Complex64::ZERO, |f| f[i]);
        let scalar = pot[i] + tcx[i] * tcx[i] + tcy[i] * tcy[i] - p.g * rho[i] + w_i;
        let n = scalar * psi[i]
            - Complex64::new(0.0, 1.0) * (tcx[i] * dx[i] + tcy[i] * dy[i] + d_i);
        out.push(Complex64::new(0.0, -1.0) * n);
    }
    out
}

fn stage_rhs_hat(
    g: &Grid2D,
    stage_hat: &[Complex64],
    p: &Params2D,
    pot: &[f64],
    tc: Option<(&[f64], &[f64])>,
) -> Vec<Complex64> {
    let psi = fft2(g, stage_hat, true);
    let n = nonlinear_rhs(g, &psi, stage_hat, p, pot, tc, true);
    fft2(g, &n, false)
}

/// -i * H psi with every field rebuilt from psi. i*rhs_2d is the variational
/// derivative of the 2D energy, see the gradient-check tests.
pub fn rhs_2d(psi: &Field2D, p: &Params2D) -> Result<Field2D> {
    rhs_2d_with_current(psi, p, true)
}

/// `rhs_2d` with the current-feedback term W switched off; quintic-splitting
/// studies use this to isolate the |T|^2 share of the effective interaction.
pub(crate) fn rhs_2d_with_current(
    psi: &Field2D,
    p: &Params2D,
    include_current: bool,
) -> Result<Field2D> {
    p.validate()?;
    let g = *psi.grid();
    let ratio = psi.boundary_ring_ratio();
    if ratio > BOUNDARY_LIMIT {
        return Err(Error::BoundaryOverflow { t: f64::NAN, ratio, limit: BOUNDARY_LIMIT });
    }
    let pot = potential_values(&g, p.eps);
    let psi_hat = fft2(&g, psi.values(), false);
    let mut out = nonlinear_rhs(&g, psi.values(), &psi_hat, p, &pot, None, include_current);
    let mut lap_hat = psi_hat;
    for my in 0..g.ny() {
        let ky = g.ky(my);
        for mx in 0..g.nx() {
            let kx = g.kx(mx);
            lap_hat[my * g.nx() + mx] *= kx * kx + ky * ky;
        }
    }
    let neg_lap = fft2(&g, &lap_hat, true);
    for (o, l) in out.iter_mut().zip(&neg_lap) {
        *o += Complex64::new(0.0, -1.0) * l;
    }
    Field2D::new(g, out)
}

/// One integrating-factor RK4 step. The first stage reuses the cached gauge
/// fields of the incoming state; the other three rebuild them from the stage
/// density. Returns the advanced state with a fresh bundle.
fn advance(
    state: &State2D,
    p: &Params2D,
    pot: &[f64],
    e_half: &[Complex64],
    e_full: &[Complex64],
) -> Result<State2D> {
    let g = *state.psi.grid();
    let n = g.len();
    let h = p.dt;
    let psi_hat = fft2(&g, state.psi.values(), false);

    let tc0 = (state.bundle.t_coulomb.x(), state.bundle.t_coulomb.y());
    let k1 = nonlinear_rhs(&g, state.psi.values(), &psi_hat, p, pot, Some(tc0), true);
    let k1 = fft2(&g, &k1, false);

    let mut y: Vec<Complex64> = (0..n)
        .map(|i| e_half[i] * (psi_hat[i] + 0.5 * h * k1[i]))
        .collect();
    let k2 = stage_rhs_hat(&g, &y, p, pot, None);

    for i in 0..n {
        y[i] = e_half[i] * psi_hat[i] + 0.5 * h * k2[i];
    }
    let k3 = stage_rhs_hat(&g, &y, p, pot, None);

    for i in 0..n {
        y[i] = e_full[i] * psi_hat[i] + h * e_half[i] * k3[i];
    }
    let k4 = stage_rhs_hat(&g, &y, p, pot, None);

    let out_hat: Vec<Complex64> = (0..n)
        .map(|i| {
            e_full[i] * psi_hat[i]
                + (h / 6.0) * (e_full[i] * k1[i] + 2.0 * e_half[i] * (k2[i] + k3[i]) + k4[i])
        })
        .collect();
    let vals = fft2(&g, &out_hat, true);
    State2D::new(state.t + h, Field2D::new(g, vals)?, p)
}

/// One step of size p.dt from a standalone state.
pub fn step(state: &State2D, p: &Params2D) -> Result<State2D> {
    p.validate()?;
    let g = *state.psi.grid();
    let pot = potential_values(&g, p.eps);
    let (e_half, e_full) = lawson_factors(&g, p.dt);
    let next = advance(state, p, &pot, &e_half, &e_full)?;
    check_state(&next, (next.t / p.dt).round() as u64)?;
    Ok(next)
}

fn check_state(state: &State2D, step: u64) -> Result<()> {
    if !state.psi.is_finite() {
        return Err(Error::NonFinite { t: state.t, step });
    }
    let ratio = state.psi.boundary_ring_ratio();
    if ratio > BOUNDARY_LIMIT {
        return Err(Error::BoundaryOverflow { t: state.t, ratio, limit: BOUNDARY_LIMIT });
    }
    Ok(())
}

/// March psi0 to t_end, invoking the observer on the initial state, every
/// `stride` steps, and at the final time. Observer times are exact multiples
/// of dt, so output rows are bit-reproducible.
pub fn evolve_2d<F>(psi0: &Field2D, p: &Params2D, stride: u64, mut observer: F) -> Result<State2D>
where
    F: FnMut(u64, &State2D) -> Result<()>,
{
    p.validate()?;
    let n = p.step_count()?;
    let stride = stride.max(1);
    let g = *psi0.grid();
    let pot = potential_values(&g, p.eps);
    let (e_half, e_full) = lawson_factors(&g, p.dt);
    let mut state = State2D::new(0.0, psi0.clone(), p)?;
    check_state(&state, 0)?;
    observer(0, &state)?;
    for i in 1..=n {
        state = advance(&state, p, &pot, &e_half, &e_full)?;
        state.t = i as f64 * p.dt;
        check_state(&state, i)?;
        if i % stride == 0 || i == n {
            observer(i, &state)?;
        }
    }
    Ok(state)
}
