//! Unitary discrete Fourier transforms and spectral derivatives.
//!
//! Conventions: forward transform divides by sqrt(n) (so Parseval holds with equality
//! and a constant c maps to a k=0 spike of c*sqrt(n)); mode m of an axis with n points
//! on [-l, l) carries physical wavenumber (pi/l)*m with m folded to [-n/2, n/2).
//! Transforms are plain index DFTs: the phase attached to the x = -l origin cancels in
//! every multiplier round trip used here. Odd multipliers (single derivatives) zero
//! the unpaired Nyquist mode so real fields stay real.

use crate::error::Result;
use crate::field::{Field1D, Field2D, RealField2D, VectorField2D};
use crate::grid::Grid2D;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

static PLANS: OnceLock<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> = OnceLock::new();

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("fft plan cache poisoned");
    map.entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// Unitary 1D transform of a raw buffer.
pub(crate) fn fft1(n: usize, values: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    plan(n, inverse).process(&mut buf);
    let s = 1.0 / (n as f64).sqrt();
    for v in &mut buf {
        *v *= s;
    }
    buf
}

/// Unitary 2D transform, row-major [ny][nx] in and out; axis passes via transpose.
pub(crate) fn fft2(grid: &Grid2D, values: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut buf = values.to_vec();
    plan(nx, inverse).process(&mut buf);
    let mut tr = vec![Complex64::ZERO; buf.len()];
    transpose::transpose(&buf, &mut tr, nx, ny);
    plan(ny, inverse).process(&mut tr);
    transpose::transpose(&tr, &mut buf, ny, nx);
    let s = 1.0 / (buf.len() as f64).sqrt();
    for v in &mut buf {
        *v *= s;
    }
    buf
}

/// Unitary transform between physical samples and spectral coefficients.
pub fn transform_1d(f: &Field1D, dir: Direction) -> Field1D {
    let out = fft1(f.grid().n(), f.values(), dir == Direction::Inverse);
    Field1D::from_raw(*f.grid(), out)
}

/// Unitary transform between physical samples and spectral coefficients.
pub fn transform_2d(f: &Field2D, dir: Direction) -> Field2D {
    let out = fft2(f.grid(), f.values(), dir == Direction::Inverse);
    Field2D::from_raw(*f.grid(), out)
}

/// Derivative multiplier i*k with the Nyquist mode zeroed.
pub(crate) fn ik(m: usize, n: usize, k: f64) -> Complex64 {
    if m == n / 2 {
        Complex64::ZERO
    } else {
        Complex64::new(0.0, k)
    }
}

/// Spectral d/dx of a 1D field.
pub fn gradient_1d(f: &Field1D) -> Field1D {
    let g = f.grid();
    let mut hat = fft1(g.n(), f.values(), false);
    for (m, v) in hat.iter_mut().enumerate() {
        *v *= ik(m, g.n(), g.k(m));
    }
    Field1D::from_raw(*g, fft1(g.n(), &hat, true))
}

/// Spectral gradient of a 2D field: (d/dx, d/dy).
pub fn gradient(f: &Field2D) -> (Field2D, Field2D) {
    let g = f.grid();
    let hat = fft2(g, f.values(), false);
    let (dx, dy) = gradient_from_hat(g, &hat);
    (dx, dy)
}

/// Gradient evaluated from an existing spectrum (saves the forward transform).
pub(crate) fn gradient_from_hat(g: &Grid2D, hat: &[Complex64]) -> (Field2D, Field2D) {
    let (nx, ny) = (g.nx(), g.ny());
    let mut hx = vec![Complex64::ZERO; hat.len()];
    let mut hy = vec![Complex64::ZERO; hat.len()];
    for my in 0..ny {
        let mult_y = ik(my, ny, g.ky(my));
        for mx in 0..nx {
            let idx = my * nx + mx;
            hx[idx] = hat[idx] * ik(mx, nx, g.kx(mx));
            hy[idx] = hat[idx] * mult_y;
        }
    }
    (
        Field2D::from_raw(*g, fft2(g, &hx, true)),
        Field2D::from_raw(*g, fft2(g, &hy, true)),
    )
}

/// Gradient of a real field, returned as a real vector field.
pub fn gradient_real(f: &RealField2D) -> VectorField2D {
    let g = f.grid();
    let cplx: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let hat = fft2(g, &cplx, false);
    let (dx, dy) = gradient_from_hat(g, &hat);
    VectorField2D::from_raw(
        *g,
        dx.values().iter().map(|v| v.re).collect(),
        dy.values().iter().map(|v| v.re).collect(),
    )
}

/// Apply a diagonal spectral multiplier given as a function of (kx, ky, is_nyquist).
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn apply_multiplier_2d(
    g: &Grid2D,
    hat: &mut [Complex64],
    mut mult: impl FnMut(f64, f64, bool) -> Complex64,
) {
    let (nx, ny) = (g.nx(), g.ny());
    for my in 0..ny {
        let ky = g.ky(my);
        let ny_y = my == ny / 2;
        for mx in 0..nx {
            let nyq = ny_y || mx == nx / 2;
            hat[my * nx + mx] *= mult(g.kx(mx), ky, nyq);
        }
    }
}

pub fn round_trip_error_2d(f: &Field2D) -> Result<f64> {
    let back = transform_2d(&transform_2d(f, Direction::Forward), Direction::Inverse);
    let diff: f64 = f
        .values()
        .iter()
        .zip(back.values())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(diff / f.l2_norm().max(f64::MIN_POSITIVE))
}
