//! Gauge objects built from a density or wavefunction.
//!
//! Two realizations of the flux-attachment field coexist on the periodic box:
//!
//! * `compute_a`: the Coulomb-gauge spectral multiplier. Its k = 0 mode is zeroed
//!   (the total flux admits no smooth periodic potential), so curl A = 2*pi*beta*(rho
//!   - mean rho) exactly, and div A = 0 exactly.
//! * `compute_t`: the wave-guide gauge with only an x component, a signed column
//!   integral of the density. In the bulk curl T = 2*pi*beta*rho with no mean
//!   subtraction; the compensating return flux sits on the periodic seam row.
//!
//! The two therefore differ in the bulk by a uniform background field of strength
//! proportional to the box-mean density, which no gauge phase can remove. The solver,
//! the energies, and the currents all use the divergence-free representative of T's
//! gauge class, t_coulomb = t + grad(beta_s): it carries the full attached flux where
//! the mass lives, converges to `compute_a`'s field as the box grows, and makes the
//! gauge change an exact identity of the discrete operators instead of an
//! approximation.

use crate::error::{Error, Result};
use crate::field::{same_grid_2, Field2D, RealField2D, VectorField2D};
use crate::grid::Grid2D;
use crate::spectral::{fft2, gradient_from_hat};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Roundoff negativity allowed in densities before an input error is raised.
pub const DENSITY_CLAMP: f64 = -1e-12;

fn clamped_density(rho: &RealField2D) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(rho.values().len());
    for &v in rho.values() {
        if v < DENSITY_CLAMP {
            return Err(Error::Input(format!(
                "density entry {v:.3e} below the {DENSITY_CLAMP:.1e} roundoff clamp"
            )));
        }
        out.push(v.max(0.0));
    }
    Ok(out)
}

fn real_to_complex(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

fn re_parts(v: &[Complex64]) -> Vec<f64> {
    v.iter().map(|c| c.re).collect()
}

/// Coulomb-gauge field of the attached flux: mode k != 0 of the density maps through
/// 2*pi*beta*i*kperp/|k|^2 with kperp = (ky, -kx); k = 0 and the unpaired Nyquist
/// rows are zeroed. Real and divergence-free by construction.
pub fn compute_a(rho: &RealField2D, beta: f64) -> Result<VectorField2D> {
    let g = *rho.grid();
    let clamped = clamped_density(rho)?;
    let rho_hat = fft2(&g, &real_to_complex(&clamped), false);
    let (ax_hat, ay_hat) = a_hats_from_density_hat(&g, &rho_hat, beta);
    Ok(VectorField2D::from_raw(
        g,
        re_parts(&fft2(&g, &ax_hat, true)),
        re_parts(&fft2(&g, &ay_hat, true)),
    ))
}

pub(crate) fn a_hats_from_density_hat(
    g: &Grid2D,
    rho_hat: &[Complex64],
    beta: f64,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let (nx, ny) = (g.nx(), g.ny());
    let mut ax = vec![Complex64::ZERO; rho_hat.len()];
    let mut ay = vec![Complex64::ZERO; rho_hat.len()];
    for my in 0..ny {
        let ky = g.ky(my);
        for mx in 0..nx {
            if (mx == 0 && my == 0) || mx == nx / 2 || my == ny / 2 {
                continue;
            }
            let kx = g.kx(mx);
            let k2 = kx * kx + ky * ky;
            let idx = my * nx + mx;
            let c = Complex64::new(0.0, 2.0 * PI * beta / k2) * rho_hat[idx];
            ax[idx] = c * ky;
            ay[idx] = -c * kx;
        }
    }
    (ax, ay)
}

/// Signed column integral with the midpoint convention sgn(0) = 0:
/// out_j = dy * (2 * sum_{j' < j} v_j' + v_j - sum_all v).
pub(crate) fn sgn_cumsum(dy: f64, v: &[f64]) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    let mut out = Vec::with_capacity(v.len());
    let mut run = 0.0;
    for &x in v {
        out.push(dy * (2.0 * run + x - total));
        run += x;
    }
    out
}

/// `sgn_cumsum` down every x column of a row-major [ny][nx] field.
pub(crate) fn sgn_cumsum_columns(g: &Grid2D, v: &[f64]) -> Vec<f64> {
    let (nx, ny) = (g.nx(), g.ny());
    let dy = g.dy();
    let mut out = vec![0.0; v.len()];
    for ix in 0..nx {
        let mut total = 0.0;
        for iy in 0..ny {
            total += v[iy * nx + ix];
        }
        let mut run = 0.0;
        for iy in 0..ny {
            let x = v[iy * nx + ix];
            out[iy * nx + ix] = dy * (2.0 * run + x - total);
            run += x;
        }
    }
    out
}

/// Wave-guide gauge: T_y = 0 and T_x(x, y) = -pi*beta * integral sgn(y - y') rho(x, y') dy',
/// evaluated per column by the cumulative-sum rule.
pub fn compute_t(rho: &RealField2D, beta: f64) -> Result<VectorField2D> {
    let g = *rho.grid();
    let clamped = clamped_density(rho)?;
    let mut tx = sgn_cumsum_columns(&g, &clamped);
    for v in &mut tx {
        *v *= -PI * beta;
    }
    Ok(VectorField2D::from_raw(g, tx, vec![0.0; g.len()]))
}

/// Gauge phase connecting the two fields, as the least-squares solution of
/// grad(beta*S) = A - T: mode k != 0 carries -i k.(Ahat - That)/|k|^2, the k = 0 mode
/// and Nyquist rows are zero. Only grad(beta S) and exp(-i beta S) are ever consumed,
/// so the additive constant is immaterial.
pub fn compute_beta_s(a: &VectorField2D, t: &VectorField2D) -> Result<RealField2D> {
    same_grid_2(a.grid(), t.grid())?;
    let g = *a.grid();
    let dx_hat = fft2(
        &g,
        &a.x().iter().zip(t.x()).map(|(p, q)| Complex64::new(p - q, 0.0)).collect::<Vec<_>>(),
        false,
    );
    let dy_hat = fft2(
        &g,
        &a.y().iter().zip(t.y()).map(|(p, q)| Complex64::new(p - q, 0.0)).collect::<Vec<_>>(),
        false,
    );
    let s_hat = beta_s_hat(&g, &dx_hat, &dy_hat);
    Ok(RealField2D::from_raw(g, re_parts(&fft2(&g, &s_hat, true))))
}

fn beta_s_hat(g: &Grid2D, dx_hat: &[Complex64], dy_hat: &[Complex64]) -> Vec<Complex64> {
    let (nx, ny) = (g.nx(), g.ny());
    let mut s = vec![Complex64::ZERO; dx_hat.len()];
    for my in 0..ny {
        let ky = g.ky(my);
        for mx in 0..nx {
            if (mx == 0 && my == 0) || mx == nx / 2 || my == ny / 2 {
                continue;
            }
            let kx = g.kx(mx);
            let k2 = kx * kx + ky * ky;
            let idx = my * nx + mx;
            s[idx] = Complex64::new(0.0, -1.0 / k2) * (kx * dx_hat[idx] + ky * dy_hat[idx]);
        }
    }
    s
}

/// Divergence-free projection with the k = 0 mode and Nyquist rows passed through
/// unchanged. Self-adjoint; used both to build t_coulomb and inside the adjoint
/// chain of the current feedback, so the equation of motion stays the exact
/// variational derivative of the energy.
pub fn leray_project(v: &VectorField2D) -> VectorField2D {
    let g = *v.grid();
    let mut vx_hat = fft2(&g, &real_to_complex(v.x()), false);
    let mut vy_hat = fft2(&g, &real_to_complex(v.y()), false);
    leray_hats(&g, &mut vx_hat, &mut vy_hat);
    VectorField2D::from_raw(
        g,
        re_parts(&fft2(&g, &vx_hat, true)),
        re_parts(&fft2(&g, &vy_hat, true)),
    )
}

pub(crate) fn leray_hats(g: &Grid2D, vx_hat: &mut [Complex64], vy_hat: &mut [Complex64]) {
    let (nx, ny) = (g.nx(), g.ny());
    for my in 0..ny {
        let ky = g.ky(my);
        for mx in 0..nx {
            if (mx == 0 && my == 0) || mx == nx / 2 || my == ny / 2 {
                continue;
            }
            let kx = g.kx(mx);
            let k2 = kx * kx + ky * ky;
            let idx = my * nx + mx;
            let kdotv = (kx * vx_hat[idx] + ky * vy_hat[idx]) / k2;
            vx_hat[idx] -= kx * kdotv;
            vy_hat[idx] -= ky * kdotv;
        }
    }
}

/// Gauge-covariant probability current J = Re[conj(psi) (-i grad + a) psi].
pub fn compute_current(psi: &Field2D, a: &VectorField2D) -> Result<VectorField2D> {
    same_grid_2(psi.grid(), a.grid())?;
    let g = *psi.grid();
    let hat = fft2(&g, psi.values(), false);
    let (dx, dy) = gradient_from_hat(&g, &hat);
    let mut jx = Vec::with_capacity(g.len());
    let mut jy = Vec::with_capacity(g.len());
    for i in 0..g.len() {
        let p = psi.values()[i];
        let rho = p.norm_sqr();
        // Re[conj(psi) * (-i) d psi] = Im[conj(psi) d psi]
        jx.push((p.conj() * dx.values()[i]).im + a.x()[i] * rho);
        jy.push((p.conj() * dy.values()[i]).im + a.y()[i] * rho);
    }
    Ok(VectorField2D::from_raw(g, jx, jy))
}

/// Multiplicative potential fed back by the current: the variational derivative of
/// the gauge kinetic energy through the density dependence of t_coulomb. Equals the
/// nonlocal current term of the equation of motion; in the infinite-box limit its
/// symbol is -4*pi*beta*i*(ky Jx - kx Jy)/|k|^2.
pub fn current_potential(j: &VectorField2D, beta: f64) -> RealField2D {
    let g = *j.grid();
    let mut jx_hat = fft2(&g, &real_to_complex(j.x()), false);
    let mut jy_hat = fft2(&g, &real_to_complex(j.y()), false);
    leray_hats(&g, &mut jx_hat, &mut jy_hat);
    let px = re_parts(&fft2(&g, &jx_hat, true));
    let mut w = sgn_cumsum_columns(&g, &px);
    for v in &mut w {
        *v *= 2.0 * PI * beta;
    }
    RealField2D::from_raw(g, w)
}

/// Spectral curl of a vector field (Nyquist rows dropped to keep the result real).
pub fn curl(v: &VectorField2D) -> RealField2D {
    let g = *v.grid();
    let vx_hat = fft2(&g, &real_to_complex(v.x()), false);
    let vy_hat = fft2(&g, &real_to_complex(v.y()), false);
    let (nx, ny) = (g.nx(), g.ny());
    let mut out = vec![Complex64::ZERO; g.len()];
    for my in 0..ny {
        let ky = g.ky(my);
        for mx in 0..nx {
            if mx == nx / 2 || my == ny / 2 {
                continue;
            }
            let kx = g.kx(mx);
            let idx = my * nx + mx;
            out[idx] = Complex64::new(0.0, 1.0) * (kx * vy_hat[idx] - ky * vx_hat[idx]);
        }
    }
    RealField2D::from_raw(g, re_parts(&fft2(&g, &out, true)))
}

/// Spectral divergence of a vector field.
pub fn divergence(v: &VectorField2D) -> RealField2D {
    let g = *v.grid();
    let vx_hat = fft2(&g, &real_to_complex(v.x()), false);
    let vy_hat = fft2(&g, &real_to_complex(v.y()), false);
    let (nx, ny) = (g.nx(), g.ny());
    let mut out = vec![Complex64::ZERO; g.len()];
    for my in 0..ny {
        let ky = g.ky(my);
        for mx in 0..nx {
            if mx == nx / 2 || my == ny / 2 {
                continue;
            }
            let kx = g.kx(mx);
            let idx = my * nx + mx;
            out[idx] = Complex64::new(0.0, 1.0) * (kx * vx_hat[idx] + ky * vy_hat[idx]);
        }
    }
    RealField2D::from_raw(g, re_parts(&fft2(&g, &out, true)))
}

/// Every gauge object derived from one density.
#[derive(Debug, Clone)]
pub struct GaugeBundle {
    /// Coulomb-gauge multiplier field (zero-mode convention).
    pub a: VectorField2D,
    /// Wave-guide gauge, x component only.
    pub t: VectorField2D,
    /// t + grad(beta_s): divergence-free, gauge-equivalent to t, and the field the
    /// solver couples to. Differs from `a` by a uniform background of scale
    /// 2*pi*beta*(mean density) that vanishes as the box grows.
    pub t_coulomb: VectorField2D,
    /// The connecting phase beta*S.
    pub beta_s: RealField2D,
    /// The density the bundle was built from (after the roundoff clamp).
    pub rho: RealField2D,
}

/// Build all gauge objects from a density in one spectral pass.
pub fn gauge_bundle(rho: &RealField2D, beta: f64) -> Result<GaugeBundle> {
    let g = *rho.grid();
    let clamped = clamped_density(rho)?;
    let rho_field = RealField2D::from_raw(g, clamped.clone());

    if beta == 0.0 {
        return Ok(GaugeBundle {
            a: VectorField2D::zeros(g),
            t: VectorField2D::zeros(g),
            t_coulomb: VectorField2D::zeros(g),
            beta_s: RealField2D::zeros(g),
            rho: rho_field,
        });
    }

    let rho_hat = fft2(&g, &real_to_complex(&clamped), false);
    let (ax_hat, ay_hat) = a_hats_from_density_hat(&g, &rho_hat, beta);
    let a = VectorField2D::from_raw(
        g,
        re_parts(&fft2(&g, &ax_hat, true)),
        re_parts(&fft2(&g, &ay_hat, true)),
    );

    let mut tx = sgn_cumsum_columns(&g, &clamped);
    for v in &mut tx {
        *v *= -PI * beta;
    }
    let tx_hat = fft2(&g, &real_to_complex(&tx), false);
    let t = VectorField2D::from_raw(g, tx, vec![0.0; g.len()]);

    // grad(beta S) in Fourier from (Ahat - That); then t_coulomb = t + grad(beta S).
    let dx_hat: Vec<Complex64> = ax_hat.iter().zip(&tx_hat).map(|(a, t)| a - t).collect();
    let s_hat = beta_s_hat(&g, &dx_hat, &ay_hat);
    let beta_s = RealField2D::from_raw(g, re_parts(&fft2(&g, &s_hat, true)));

    let (nx, ny) = (g.nx(), g.ny());
    let mut tcx_hat = tx_hat;
    let mut tcy_hat = vec![Complex64::ZERO; g.len()];
    for my in 0..ny {
        let ky = g.ky(my);
        for mx in 0..nx {
            if mx == nx / 2 || my == ny / 2 {
                continue;
            }
            let kx = g.kx(mx);
            let idx = my * nx + mx;
            let ik_s = Complex64::new(0.0, 1.0) * s_hat[idx];
            tcx_hat[idx] += kx * ik_s;
            tcy_hat[idx] = ky * ik_s;
        }
    }
    let t_coulomb = VectorField2D::from_raw(
        g,
        re_parts(&fft2(&g, &tcx_hat, true)),
        re_parts(&fft2(&g, &tcy_hat, true)),
    );

    Ok(GaugeBundle { a, t, t_coulomb, beta_s, rho: rho_field })
}

/// The connecting phase alone, four transforms. Same result as `gauge_bundle`'s
/// beta_s field; used where only the phase is needed, e.g. transverse projection.
pub(crate) fn beta_s_from_density(g: &Grid2D, rho: &[f64], beta: f64) -> Vec<f64> {
    let rho_hat = fft2(g, &real_to_complex(rho), false);
    let (ax_hat, ay_hat) = a_hats_from_density_hat(g, &rho_hat, beta);
    let mut tx = sgn_cumsum_columns(g, rho);
    for v in &mut tx {
        *v *= -PI * beta;
    }
    let tx_hat = fft2(g, &real_to_complex(&tx), false);
    let dx_hat: Vec<Complex64> = ax_hat.iter().zip(&tx_hat).map(|(a, t)| a - t).collect();
    let s_hat = beta_s_hat(g, &dx_hat, &ay_hat);
    re_parts(&fft2(g, &s_hat, true))
}

/// Fast path for the time stepper: t_coulomb straight from a density, three
/// transforms. Identical, mode by mode, to the bundle construction because
/// div A = 0 exactly, so the projector never sees A.
pub(crate) fn t_coulomb_from_density(g: &Grid2D, rho: &[f64], beta: f64) -> (Vec<f64>, Vec<f64>) {
    let mut tx = sgn_cumsum_columns(g, rho);
    for v in &mut tx {
        *v *= -PI * beta;
    }
    let mut tx_hat = fft2(g, &real_to_complex(&tx), false);
    let mut ty_hat = vec![Complex64::ZERO; g.len()];
    leray_hats(g, &mut tx_hat, &mut ty_hat);
    (re_parts(&fft2(g, &tx_hat, true)), re_parts(&fft2(g, &ty_hat, true)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field2D;
    use crate::spectral::{apply_multiplier_2d, gradient_real};

    fn gaussian_density(g: Grid2D, cx: f64, cy: f64, sigma: f64) -> RealField2D {
        RealField2D::from_fn(g, |x, y| {
            let r2 = (x - cx).powi(2) + (y - cy).powi(2);
            (-r2 / (2.0 * sigma * sigma)).exp() / (2.0 * PI * sigma * sigma)
        })
    }

    fn rel_l2(a: &[f64], b: &[f64], scale: f64) -> f64 {
        let d: f64 = a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        d / scale
    }

    #[test]
    fn zero_density_and_zero_beta_give_zero_fields() {
        let g = Grid2D::new(32, 32, 4.0, 4.0).unwrap();
        let zero = RealField2D::zeros(g);
        assert_eq!(compute_a(&zero, 2.0).unwrap().l2_norm(), 0.0);
        assert_eq!(compute_t(&zero, 2.0).unwrap().l2_norm(), 0.0);
        let rho = gaussian_density(g, 0.0, 0.0, 0.8);
        assert_eq!(compute_a(&rho, 0.0).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn negative_density_beyond_clamp_is_rejected() {
        let g = Grid2D::new(8, 8, 1.0, 1.0).unwrap();
        let mut rho = RealField2D::zeros(g);
        rho.values_mut()[5] = -1e-11;
        assert!(compute_a(&rho, 1.0).is_err());
        rho.values_mut()[5] = -1e-13;
        assert!(compute_a(&rho, 1.0).is_ok());
    }

    #[test]
    fn flux_attachment_holds_mode_by_mode() {
        // curl(compute_a) equals 2*pi*beta*rho on every mode both operators carry;
        // the comparison removes k = 0 and the unpaired Nyquist rows, which neither
        // the multiplier nor the curl represents.
        let g = Grid2D::new(64, 32, 6.0, 5.0).unwrap();
        let rho = gaussian_density(g, 0.7, -0.4, 0.9);
        let beta = 1.3;
        let a = compute_a(&rho, beta).unwrap();
        let c = curl(&a);
        let mut hat = fft2(&g, &real_to_complex(rho.values()), false);
        apply_multiplier_2d(&g, &mut hat, |kx, ky, nyq| {
            if nyq || (kx == 0.0 && ky == 0.0) {
                Complex64::ZERO
            } else {
                Complex64::new(2.0 * PI * beta, 0.0)
            }
        });
        let want = re_parts(&fft2(&g, &hat, true));
        let scale = 2.0 * PI * beta * rho.l2_norm() / g.cell().sqrt();
        assert!(rel_l2(c.values(), &want, scale) < 1e-12);
        let d = divergence(&a);
        assert!(d.l2_norm() / a.l2_norm() < 1e-12);
    }

    #[test]
    fn t_gauge_is_a_column_rule() {
        // On a separable density |phi(x)|^2 u^2(y), T_x = -pi*beta*f(y)|phi(x)|^2 with
        // f the same cumulative rule applied to u^2 alone.
        let g = Grid2D::new(16, 64, 3.0, 2.0).unwrap();
        let eps = 0.2_f64;
        let phi2: Vec<f64> = (0..g.nx()).map(|ix| (-g.x(ix).powi(2)).exp()).collect();
        let u2: Vec<f64> = (0..g.ny())
            .map(|iy| (-g.y(iy).powi(2) / eps).exp() / (PI * eps).sqrt())
            .collect();
        let mut vals = vec![0.0; g.len()];
        for iy in 0..g.ny() {
            for ix in 0..g.nx() {
                vals[g.idx(iy, ix)] = phi2[ix] * u2[iy];
            }
        }
        let rho = RealField2D::new(g, vals).unwrap();
        let beta = 0.8;
        let t = compute_t(&rho, beta).unwrap();
        let f = sgn_cumsum(g.dy(), &u2);
        let mut err: f64 = 0.0;
        for iy in 0..g.ny() {
            for ix in 0..g.nx() {
                let want = -PI * beta * f[iy] * phi2[ix];
                err = err.max((t.x()[g.idx(iy, ix)] - want).abs());
            }
        }
        assert!(err < 1e-14);
        assert_eq!(t.y(), vec![0.0; g.len()]);
    }

    #[test]
    fn even_density_has_no_t_on_the_axis() {
        // A density exactly even in y on the lattice (unpaired boundary row zeroed)
        // balances the signed column integral at y = 0.
        let g = Grid2D::new(16, 32, 2.0, 2.0).unwrap();
        let base = gaussian_density(g, 0.3, 0.0, 0.6);
        let mut vals = base.values().to_vec();
        let ny = g.ny();
        for ix in 0..g.nx() {
            vals[g.idx(0, ix)] = 0.0;
            for iy in 1..ny / 2 {
                vals[g.idx(ny - iy, ix)] = vals[g.idx(iy, ix)];
            }
        }
        let rho = RealField2D::new(g, vals).unwrap();
        let t = compute_t(&rho, 1.0).unwrap();
        let mid = ny / 2;
        for ix in 0..g.nx() {
            assert!(t.x()[g.idx(mid, ix)].abs() < 1e-13);
        }
    }

    #[test]
    fn beta_s_vanishes_when_gauges_agree() {
        let g = Grid2D::new(16, 16, 2.0, 2.0).unwrap();
        let v = VectorField2D::new(
            g,
            (0..g.len()).map(|i| (i as f64 * 0.1).sin()).collect(),
            vec![0.25; g.len()],
        )
        .unwrap();
        let s = compute_beta_s(&v, &v).unwrap();
        assert!(s.l2_norm() < 1e-14);
    }

    #[test]
    fn bundle_identity_is_exact() {
        // t_coulomb - t - grad(beta_s) = 0 to roundoff, div t_coulomb = 0, and the
        // fast path agrees with the bundle construction.
        let g = Grid2D::new(32, 64, 4.0, 8.0).unwrap();
        let rho = gaussian_density(g, -0.3, 0.3, 0.7);
        let b = gauge_bundle(&rho, 1.1).unwrap();

        let gs = gradient_real(&b.beta_s);
        let mut err: f64 = 0.0;
        for i in 0..g.len() {
            err = err.max((b.t_coulomb.x()[i] - b.t.x()[i] - gs.x()[i]).abs());
            err = err.max((b.t_coulomb.y()[i] - b.t.y()[i] - gs.y()[i]).abs());
        }
        let scale = b.t_coulomb.l2_norm().max(1e-300) / g.cell().sqrt();
        assert!(err / scale < 1e-13, "gauge relation residual {err:.3e}");

        assert!(divergence(&b.t_coulomb).l2_norm() / b.t_coulomb.l2_norm() < 1e-12);

        let (fx, fy) = t_coulomb_from_density(&g, b.rho.values(), 1.1);
        let mut d: f64 = 0.0;
        for i in 0..g.len() {
            d = d.max((fx[i] - b.t_coulomb.x()[i]).abs());
            d = d.max((fy[i] - b.t_coulomb.y()[i]).abs());
        }
        assert!(d / scale < 1e-13, "fast path deviates {d:.3e}");

        // What separates `a` from t_coulomb is the uniform background of the
        // periodized flux: in the bulk, d/dy of (a - t_coulomb)_x is 2*pi*beta*mean(rho).
        let ramp = 2.0 * PI * 1.1 * b.rho.mean();
        let cx = g.nx() / 2;
        let (y_lo, y_hi) = (g.ny() * 7 / 16, g.ny() * 9 / 16);
        let res_at = |iy: usize| b.a.x()[g.idx(iy, cx)] - b.t_coulomb.x()[g.idx(iy, cx)];
        let slope = (res_at(y_hi) - res_at(y_lo)) / (g.y(y_hi) - g.y(y_lo));
        assert!(
            (slope - ramp).abs() < 0.1 * ramp.abs(),
            "background ramp {slope:.4e}, uniform flux predicts {ramp:.4e}"
        );
    }

    #[test]
    fn curl_of_gradients_vanishes() {
        let g = Grid2D::new(32, 32, 3.0, 3.0).unwrap();
        let s = RealField2D::from_fn(g, |x, y| (-(x * x) - 0.5 * y * y).exp());
        let grad = gradient_real(&s);
        assert!(curl(&grad).l2_norm() < 1e-12);
        // and the perpendicular gradient is divergence-free
        let perp = VectorField2D::new(g, grad.y().to_vec(), grad.x().iter().map(|v| -v).collect()).unwrap();
        assert!(divergence(&perp).l2_norm() < 1e-12);
    }

    #[test]
    fn reflection_symmetry_of_a() {
        // Mirroring the density across y = 0 on the lattice flips the x component
        // and mirrors both. Exact for the multiplier, so roundoff tolerance.
        let g = Grid2D::new(32, 32, 4.0, 4.0).unwrap();
        let rho = gaussian_density(g, 0.4, 0.9, 0.7);
        let ny = g.ny();
        let mut mirrored = rho.values().to_vec();
        for iy in 0..ny {
            for ix in 0..g.nx() {
                mirrored[g.idx(iy, ix)] = rho.values()[g.idx((ny - iy) % ny, ix)];
            }
        }
        let refl = RealField2D::new(g, mirrored).unwrap();
        let a = compute_a(&rho, 1.0).unwrap();
        let ar = compute_a(&refl, 1.0).unwrap();
        let mut err: f64 = 0.0;
        for iy in 0..ny {
            let ry = (ny - iy) % ny;
            for ix in 0..g.nx() {
                err = err.max((ar.x()[g.idx(iy, ix)] + a.x()[g.idx(ry, ix)]).abs());
                err = err.max((ar.y()[g.idx(iy, ix)] - a.y()[g.idx(ry, ix)]).abs());
            }
        }
        assert!(err < 1e-12, "reflection asymmetry {err:.3e}");
    }

    #[test]
    fn plane_wave_carries_its_momentum() {
        let g = Grid2D::new(64, 64, 6.0, 6.0).unwrap();
        let k0 = g.kx(2);
        let psi = Field2D::from_fn(g, |x, y| {
            Complex64::new((-(x * x) - y * y).exp(), 0.0) * Complex64::new(0.0, k0 * x).exp()
        });
        let j = compute_current(&psi, &VectorField2D::zeros(g)).unwrap();
        let rho = psi.density();
        let mut err: f64 = 0.0;
        for i in 0..g.len() {
            err = err.max((j.x()[i] - k0 * rho.values()[i]).abs());
        }
        assert!(err < 1e-10);
        // real fields carry no current
        let flat = Field2D::from_fn(g, |x, y| Complex64::new((-(x * x) - y * y).exp(), 0.0));
        let j0 = compute_current(&flat, &VectorField2D::zeros(g)).unwrap();
        assert!(j0.l2_norm() < 1e-12);
    }

    #[test]
    fn current_is_gauge_covariant() {
        // J(psi e^{-i chi}, v + grad chi) = J(psi, v) for a bandlimited phase chi;
        // multiplying by e^{-i chi} raises the gauge field by grad chi. The grid is
        // fine enough that every power of chi in the exponential stays in band.
        let g = Grid2D::new(128, 128, 5.0, 5.0).unwrap();
        let rho = gaussian_density(g, 0.2, -0.3, 0.8);
        let b = gauge_bundle(&rho, 0.9).unwrap();
        let (kp, kq) = (g.kx(1), g.ky(2));
        let psi = Field2D::from_fn(g, |x, y| {
            Complex64::new((-1.2 * (x * x + y * y)).exp(), 0.0)
                * Complex64::new(0.0, kp * x + kq * y).exp()
        });
        let chi = RealField2D::from_fn(g, |x, y| {
            0.8 * (-1.1 * (x - 0.3).powi(2) - 1.3 * (y + 0.4).powi(2)).exp()
        });
        let grad_chi = gradient_real(&chi);
        let j1 = compute_current(&psi, &b.t_coulomb).unwrap();
        let mut shifted = psi.clone();
        for (v, c) in shifted.values_mut().iter_mut().zip(chi.values()) {
            *v *= Complex64::new(0.0, -c).exp();
        }
        let raised = VectorField2D::new(
            g,
            b.t_coulomb.x().iter().zip(grad_chi.x()).map(|(a, d)| a + d).collect(),
            b.t_coulomb.y().iter().zip(grad_chi.y()).map(|(a, d)| a + d).collect(),
        )
        .unwrap();
        let j2 = compute_current(&shifted, &raised).unwrap();
        let scale = j1.l2_norm().max(1e-30) / g.cell().sqrt();
        let mut err: f64 = 0.0;
        for i in 0..g.len() {
            err = err.max((j1.x()[i] - j2.x()[i]).abs().max((j1.y()[i] - j2.y()[i]).abs()));
        }
        assert!(err / scale < 1e-10, "gauge covariance violated: {err:.3e}");
    }

    #[test]
    fn current_potential_matches_its_symbol_in_the_bulk() {
        // For a divergence-free, centered current the potential is the sgn column
        // integral of the x component, doubled and scaled.
        let g = Grid2D::new(32, 64, 3.0, 3.0).unwrap();
        let s = RealField2D::from_fn(g, |x, y| (-(x * x) - y * y).exp());
        let grad = gradient_real(&s);
        // divergence-free field: perpendicular gradient
        let j = VectorField2D::new(g, grad.y().to_vec(), grad.x().iter().map(|v| -v).collect()).unwrap();
        let beta = 0.7;
        let w = current_potential(&j, beta);
        let direct = sgn_cumsum_columns(&g, j.x());
        let mut err: f64 = 0.0;
        for i in 0..g.len() {
            err = err.max((w.values()[i] - 2.0 * PI * beta * direct[i]).abs());
        }
        assert!(err < 1e-12, "{err:.3e}");
    }

    #[test]
    fn leray_is_an_idempotent_self_adjoint_projector() {
        let g = Grid2D::new(16, 32, 2.0, 3.0).unwrap();
        let v = VectorField2D::new(
            g,
            (0..g.len()).map(|i| ((i * 7 % 13) as f64 - 6.0) / 6.0).collect(),
            (0..g.len()).map(|i| ((i * 5 % 11) as f64 - 5.0) / 5.0).collect(),
        )
        .unwrap();
        let w = VectorField2D::new(
            g,
            (0..g.len()).map(|i| ((i * 3 % 17) as f64 - 8.0) / 8.0).collect(),
            (0..g.len()).map(|i| ((i * 11 % 7) as f64 - 3.0) / 3.0).collect(),
        )
        .unwrap();
        let pv = leray_project(&v);
        let ppv = leray_project(&pv);
        let mut err: f64 = 0.0;
        for i in 0..g.len() {
            err = err.max((pv.x()[i] - ppv.x()[i]).abs().max((pv.y()[i] - ppv.y()[i]).abs()));
        }
        assert!(err < 1e-12);
        let pw = leray_project(&w);
        let dot = |a: &VectorField2D, b: &VectorField2D| -> f64 {
            (0..g.len()).map(|i| a.x()[i] * b.x()[i] + a.y()[i] * b.y()[i]).sum::<f64>()
        };
        assert!((dot(&pv, &w) - dot(&v, &pw)).abs() < 1e-10);
    }
}
