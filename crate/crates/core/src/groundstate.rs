//! Ground states by normalized gradient flow (imaginary time): descend the
//! energy along its variational derivative, renormalizing the mass after each
//! step. The step size is clipped each iteration against the largest spectral
//! eigenvalue actually present, so the explicit flow stays monotone.

use crate::dynamics1d::{rhs_1d, Params1D};
use crate::dynamics2d::{potential_values, rhs_2d, Params2D};
use crate::error::{Error, Result};
use crate::field::{Field1D, Field2D};
use crate::grid::{Grid1D, Grid2D};
use crate::observables::{energy_1d, energy_2d};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Imaginary-time flow controls. tol is the relative energy decrease per step
/// under which the flow counts as stalled; five consecutive stalled steps stop
/// it (a single one can be a step-size clip artifact).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    #[serde(default = "default_dtau")]
    pub dtau: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: u64,
}

fn default_dtau() -> f64 {
    1e-3
}

// tol sits at the roundoff floor of the energy sum: the stall streak, not tol
// itself, decides termination there. The Euler-Lagrange residual left behind
// scales like sqrt(tol * |E| / dtau), so a loose tol costs accuracy
// quadratically.
fn default_tol() -> f64 {
    1e-16
}

fn default_max_iters() -> u64 {
    500_000
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { dtau: default_dtau(), tol: default_tol(), max_iters: default_max_iters() }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dtau > 0.0) || !self.dtau.is_finite() {
            return Err(Error::Config(format!(
                "flow guard: dtau must be positive, got {}",
                self.dtau
            )));
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::Config(format!("flow guard: tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("flow guard: max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

const STALL_STREAK: u32 = 5;

fn normalize_1d(phi: &mut Field1D) {
    let n = phi.l2_norm();
    if n > 0.0 {
        let c = Complex64::new(1.0 / n, 0.0);
        for v in phi.values_mut() {
            *v *= c;
        }
    }
}

fn normalize_2d(psi: &mut Field2D) {
    let n = psi.l2_norm();
    if n > 0.0 {
        let c = Complex64::new(1.0 / n, 0.0);
        for v in psi.values_mut() {
            *v *= c;
        }
    }
}

/// H phi, obtained from the equation of motion: rhs = -i H phi.
fn apply_h_1d(phi: &Field1D, p: &Params1D) -> Field1D {
    rhs_1d(phi, p).scaled(Complex64::new(0.0, 1.0))
}

fn apply_h_2d(psi: &Field2D, p: &Params2D) -> Result<Field2D> {
    Ok(rhs_2d(psi, p)?.scaled(Complex64::new(0.0, 1.0)))
}

/// Largest eigenvalue the explicit flow can see on this 1D state: the spectral
/// cutoff plus the pointwise potential extremes.
fn lambda_max_1d(phi: &Field1D, p: &Params1D) -> f64 {
    let grid = *phi.grid();
    let k_max = PI / grid.dx();
    let b2 = PI * PI * p.beta * p.beta;
    let mut pot: f64 = 0.0;
    for (j, v) in phi.values().iter().enumerate() {
        let x = grid.x(j);
        let rho = v.norm_sqr();
        let trap = if p.trap_on { x * x } else { 0.0 };
        pot = pot.max((trap + b2 * rho * rho - p.g_tilde * rho).abs());
    }
    k_max * k_max + pot
}

fn lambda_max_2d(psi: &Field2D, p: &Params2D) -> f64 {
    let g = *psi.grid();
    let kx = PI / g.dx();
    let ky = PI / g.dy();
    let pot = potential_values(&g, p.eps);
    let mut pot_max: f64 = 0.0;
    let mut rho_max: f64 = 0.0;
    for (v, w) in psi.values().iter().zip(&pot) {
        pot_max = pot_max.max(w.abs());
        rho_max = rho_max.max(v.norm_sqr());
    }
    // Generous bound on the gauge terms: |T| <= pi |beta| rho_max 2Ly, which
    // covers |A|^2, the cross term 2|A|k, and the current feedback.
    let a_bound = PI * p.beta.abs() * rho_max * 2.0 * g.ly();
    kx * kx + ky * ky + pot_max + p.g.abs() * rho_max + a_bound * a_bound + 2.0 * a_bound * (kx + ky)
}

struct FlowState {
    energy: f64,
    streak: u32,
}

impl FlowState {
    fn new(energy: f64) -> Self {
        FlowState { energy, streak: 0 }
    }

    /// Record one step's energy; true once the decrease has stalled for
    /// STALL_STREAK consecutive steps.
    fn stalled(&mut self, energy: f64, tol: f64) -> bool {
        debug_assert!(
            energy <= self.energy + 1e-12 * self.energy.abs().max(1.0),
            "flow energy increased: {} -> {}",
            self.energy,
            energy
        );
        let rel = (self.energy - energy) / energy.abs().max(1e-9);
        self.energy = energy;
        if rel < tol {
            self.streak += 1;
        } else {
            self.streak = 0;
        }
        self.streak >= STALL_STREAK
    }
}

fn check_binding_1d(p: &Params1D) -> Result<()> {
    if p.trap_on {
        return Ok(());
    }
    if p.g_tilde <= 0.0 {
        return Err(Error::Config(
            "flow guard: with the trap off and g_tilde <= 0 nothing binds the profile".into(),
        ));
    }
    if p.beta == 0.0 {
        return Err(Error::Config(
            "flow guard: with the trap off the quintic term (beta != 0) must back the cubic attraction".into(),
        ));
    }
    Ok(())
}

/// Minimize the 1D energy at unit mass on the given axis. Returns the profile
/// and its chemical potential mu = <phi, H phi>.
pub fn ground_state_1d(p: &Params1D, grid: Grid1D, cfg: &FlowConfig) -> Result<(Field1D, f64)> {
    p.validate()?;
    cfg.validate()?;
    check_binding_1d(p)?;

    // Trap on: the oscillator scale. Trap off: a wide positive bump; the flow
    // sharpens it into the soliton.
    let width = if p.trap_on { 1.0 } else { 4.0 };
    let mut phi = Field1D::from_fn(grid, |x| {
        Complex64::new((-x * x / (2.0 * width * width)).exp(), 0.0)
    });
    normalize_1d(&mut phi);

    let mut flow = FlowState::new(energy_1d(&phi, p)?);
    for _ in 0..cfg.max_iters {
        let h_phi = apply_h_1d(&phi, p);
        let tau = cfg.dtau.min(0.95 / (2.0 * lambda_max_1d(&phi, p)));
        for (v, h) in phi.values_mut().iter_mut().zip(h_phi.values()) {
            *v -= 2.0 * tau * h;
        }
        normalize_1d(&mut phi);
        if !phi.is_finite() {
            return Err(Error::NonFinite { t: 0.0, step: 0 });
        }
        let e = energy_1d(&phi, p)?;
        if flow.stalled(e, cfg.tol) {
            let mu = mu_1d(&phi, p);
            return Ok((phi, mu));
        }
    }
    Err(Error::NoConvergence { iters: cfg.max_iters, energy: flow.energy })
}

fn mu_1d(phi: &Field1D, p: &Params1D) -> f64 {
    let h_phi = apply_h_1d(phi, p);
    phi.inner(&h_phi).map(|c| c.re).unwrap_or(f64::NAN)
}

fn mu_2d(psi: &Field2D, p: &Params2D) -> Result<f64> {
    let h_psi = apply_h_2d(psi, p)?;
    Ok(psi.inner(&h_psi)?.re)
}

/// Minimize the 2D energy at unit mass on the given box. The flow direction
/// includes the current-feedback term, i.e. it is the exact variational
/// derivative of the energy including the density dependence of the gauge
/// field. Returns the state and mu = <psi, H psi>.
pub fn ground_state_2d(p: &Params2D, grid: Grid2D, cfg: &FlowConfig) -> Result<(Field2D, f64)> {
    p.validate()?;
    cfg.validate()?;

    let eps = p.eps;
    let mut psi = Field2D::from_fn(grid, |x, y| {
        Complex64::new((-x * x / 2.0 - y * y / (2.0 * eps)).exp(), 0.0)
    });
    normalize_2d(&mut psi);

    let dtau = cfg.dtau.min(eps / 4.0);
    let mut flow = FlowState::new(energy_2d(&psi, p)?);
    for _ in 0..cfg.max_iters {
        let h_psi = apply_h_2d(&psi, p)?;
        let tau = dtau.min(0.95 / (2.0 * lambda_max_2d(&psi, p)));
        for (v, h) in psi.values_mut().iter_mut().zip(h_psi.values()) {
            *v -= 2.0 * tau * h;
        }
        normalize_2d(&mut psi);
        if !psi.is_finite() {
            return Err(Error::NonFinite { t: 0.0, step: 0 });
        }
        let e = energy_2d(&psi, p)?;
        if flow.stalled(e, cfg.tol) {
            let mu = mu_2d(&psi, p)?;
            return Ok((psi, mu));
        }
    }
    Err(Error::NoConvergence { iters: cfg.max_iters, energy: flow.energy })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params_1d(beta: f64, g_tilde: f64, trap_on: bool) -> Params1D {
        Params1D { beta, g_tilde, trap_on, dt: 1e-3, t_end: 1.0 }
    }

    #[test]
    fn config_guards_fire() {
        let bad = FlowConfig { dtau: 0.0, ..FlowConfig::default() };
        assert!(bad.validate().is_err());
        let bad = FlowConfig { tol: -1.0, ..FlowConfig::default() };
        assert!(bad.validate().is_err());
        let bad = FlowConfig { max_iters: 0, ..FlowConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn unbound_trap_off_flows_are_rejected() {
        let grid = Grid1D::new(64, 8.0).unwrap();
        let cfg = FlowConfig::default();
        assert!(ground_state_1d(&params_1d(0.5, 0.0, false), grid, &cfg).is_err());
        assert!(ground_state_1d(&params_1d(0.0, 1.0, false), grid, &cfg).is_err());
    }

    #[test]
    fn free_trapped_flow_finds_the_oscillator_ground_state() {
        let grid = Grid1D::new(128, 8.0).unwrap();
        let p = params_1d(0.0, 0.0, true);
        let (phi, mu) = ground_state_1d(&p, grid, &FlowConfig::default()).unwrap();
        let exact = Field1D::from_fn(grid, |x| {
            Complex64::new(PI.powf(-0.25) * (-x * x / 2.0).exp(), 0.0)
        });
        let overlap = phi.inner(&exact).unwrap().norm();
        assert!(overlap > 1.0 - 1e-8, "overlap {overlap}");
        let e = energy_1d(&phi, &p).unwrap();
        assert!((e - 1.0).abs() < 1e-8, "energy {e}");
        assert!((mu - 1.0).abs() < 1e-6, "mu {mu}");
    }

    #[test]
    fn repulsive_quintic_raises_the_trapped_energy() {
        let grid = Grid1D::new(128, 8.0).unwrap();
        let p = params_1d(1.0, 0.0, true);
        let (phi, _) = ground_state_1d(&p, grid, &FlowConfig::default()).unwrap();
        let e = energy_1d(&phi, &p).unwrap();
        assert!(e > 1.0 + 1e-3, "quintic ground energy {e}");
        // And it is still below the energy of the bare oscillator state under
        // the same functional, as a minimizer must be.
        let gaussian = Field1D::from_fn(grid, |x| {
            Complex64::new(PI.powf(-0.25) * (-x * x / 2.0).exp(), 0.0)
        });
        assert!(e < energy_1d(&gaussian, &p).unwrap());
    }

    #[test]
    fn converged_profile_solves_its_eigenproblem() {
        let grid = Grid1D::new(128, 8.0).unwrap();
        let p = params_1d(0.8, 0.4, true);
        let (phi, mu) = ground_state_1d(&p, grid, &FlowConfig::default()).unwrap();
        let h_phi = apply_h_1d(&phi, &p);
        let residual: f64 = h_phi
            .values()
            .iter()
            .zip(phi.values())
            .map(|(h, v)| (h - mu * v).norm_sqr() * grid.dx())
            .sum::<f64>()
            .sqrt();
        assert!(residual < 1e-6, "Euler-Lagrange residual {residual:.3e}");
    }

    /// One RK4 step of the planar system (psi, dpsi) under psi'' = f(psi).
    fn rk4_step(psi: &mut f64, dpsi: &mut f64, h: f64, rhs: impl Fn(f64) -> f64) {
        let (k1, l1) = (*dpsi, rhs(*psi));
        let (k2, l2) = (*dpsi + 0.5 * h * l1, rhs(*psi + 0.5 * h * k1));
        let (k3, l3) = (*dpsi + 0.5 * h * l2, rhs(*psi + 0.5 * h * k2));
        let (k4, l4) = (*dpsi + h * l3, rhs(*psi + h * k3));
        *psi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        *dpsi += h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
    }

    /// Independent stationary-profile oracle: integrate
    /// psi'' = s psi + q psi^5 - g3 psi^3 outward from (a, 0) and bisect on a.
    /// Above the decaying amplitude the trajectory crosses zero; below it the
    /// trajectory stays positive (it either turns back up or oscillates in the
    /// potential well). The bracket starts just above the well floor, where
    /// the orbit is trapped, so tiny amplitudes never enter the picture.
    fn shooting_oracle(s: f64, q: f64, g3: f64, grid: Grid1D) -> Vec<f64> {
        let rhs = |psi: f64| s * psi + q * psi.powi(5) - g3 * psi.powi(3);
        let crosses = |a: f64| -> bool {
            let mut psi = a;
            let mut dpsi = 0.0;
            let h = 1e-3;
            let steps = (grid.l() * 1.2 / h) as usize;
            for _ in 0..steps {
                rk4_step(&mut psi, &mut dpsi, h, rhs);
                if psi < 0.0 {
                    return true;
                }
            }
            false
        };
        // Well floor of U(psi) = -s psi^2/2 + g3 psi^4/4 - q psi^6/6, i.e.
        // the smaller positive root of U'(psi)/psi = 0.
        let disc = g3 * g3 - 4.0 * q * s;
        assert!(disc > 0.0, "no bound profile at these parameters");
        let a_well = ((g3 - disc.sqrt()) / (2.0 * q)).sqrt();
        let mut lo = 1.02 * a_well;
        assert!(!crosses(lo));
        let mut hi = lo;
        loop {
            hi *= 1.15;
            if crosses(hi) {
                break;
            }
            assert!(hi < 100.0 * a_well, "no crossing bracket found");
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if crosses(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let a = 0.5 * (lo + hi);
        // Dense integration sampled on the grid's positive half, mirrored.
        let n = grid.n();
        let mut out = vec![0.0; n];
        let sub = 256;
        let h = grid.dx() / sub as f64;
        let mut psi = a;
        let mut dpsi = 0.0;
        out[n / 2] = psi;
        for j in 1..=n / 2 {
            for _ in 0..sub {
                rk4_step(&mut psi, &mut dpsi, h, rhs);
            }
            if n / 2 + j < n {
                out[n / 2 + j] = psi.max(0.0);
            }
            out[n / 2 - j] = psi.max(0.0);
        }
        out
    }

    #[test]
    fn trap_off_profile_matches_the_shooting_oracle() {
        let grid = Grid1D::new(1024, 52.0).unwrap();
        let p = params_1d(0.3, 1.0, false);
        let cfg = FlowConfig { max_iters: 2_000_000, ..FlowConfig::default() };
        let (phi, mu) = ground_state_1d(&p, grid, &cfg).unwrap();
        assert!(mu < 0.0, "soliton chemical potential {mu}");
        let q = PI * PI * p.beta * p.beta;
        let oracle = shooting_oracle(-mu, q, p.g_tilde, grid);
        let worst = phi
            .values()
            .iter()
            .zip(&oracle)
            .map(|(v, o)| (v.norm() - o).abs())
            .fold(0.0_f64, f64::max);
        assert!(worst < 1e-5, "profile vs oracle {worst:.3e}");
    }

    #[test]
    fn energy_gradients_match_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);

        // 1D check.
        let grid = Grid1D::new(64, 7.0).unwrap();
        let p = params_1d(0.9, 0.7, true);
        let phi = Field1D::from_fn(grid, |x| {
            Complex64::cis(0.4 * x) * (-(x - 0.2) * (x - 0.2) / 2.0).exp()
        });
        let delta = Field1D::from_fn(grid, |x| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                * (-x * x / 3.0).exp()
        });
        let h = 1e-5;
        let mut plus = phi.clone();
        let mut minus = phi.clone();
        for i in 0..grid.n() {
            plus.values_mut()[i] += h * delta.values()[i];
            minus.values_mut()[i] -= h * delta.values()[i];
        }
        let fd = (energy_1d(&plus, &p).unwrap() - energy_1d(&minus, &p).unwrap()) / (2.0 * h);
        let h_phi = apply_h_1d(&phi, &p);
        let pairing = 2.0 * h_phi.inner(&delta).unwrap().re;
        assert!(
            (fd - pairing).abs() / pairing.abs() < 1e-6,
            "1d gradient defect {:.3e}",
            (fd - pairing).abs() / pairing.abs()
        );

        // 2D check, current feedback included. The box must resolve the
        // field-density products spectrally or the pointwise gauge terms in
        // the flow direction pick up aliasing beyond the tolerance.
        let eps = 0.2_f64;
        let g2 = Grid2D::new(64, 64, 8.0, 8.0 * eps.sqrt()).unwrap();
        let p2 = Params2D { beta: 1.1, g: 0.8, eps, dt: 1e-3, t_end: 1.0 };
        let psi = Field2D::from_fn(g2, |x, y| {
            Complex64::cis(0.3 * x - 0.2 * y)
                * ((-x * x / 2.0 - y * y / (2.0 * eps)).exp())
        });
        let delta2 = Field2D::from_fn(g2, |x, y| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                * ((-x * x / 2.5 - y * y / (1.5 * eps)).exp())
        });
        let mut plus = psi.clone();
        let mut minus = psi.clone();
        for i in 0..g2.len() {
            plus.values_mut()[i] += h * delta2.values()[i];
            minus.values_mut()[i] -= h * delta2.values()[i];
        }
        let fd = (energy_2d(&plus, &p2).unwrap() - energy_2d(&minus, &p2).unwrap()) / (2.0 * h);
        let h_psi = apply_h_2d(&psi, &p2).unwrap();
        let pairing = 2.0 * h_psi.inner(&delta2).unwrap().re;
        assert!(
            (fd - pairing).abs() / pairing.abs() < 1e-6,
            "2d gradient defect {:.3e}",
            (fd - pairing).abs() / pairing.abs()
        );
    }

    #[test]
    fn free_2d_flow_finds_the_product_ground_state() {
        let eps = 0.2_f64;
        let grid = Grid2D::new(32, 64, 8.0, 8.0 * eps.sqrt()).unwrap();
        let p = Params2D { beta: 0.0, g: 0.0, eps, dt: 1e-3, t_end: 1.0 };
        let cfg = FlowConfig { tol: 1e-12, ..FlowConfig::default() };
        let (psi, mu) = ground_state_2d(&p, grid, &cfg).unwrap();
        let e = energy_2d(&psi, &p).unwrap();
        assert!((e - 1.0).abs() < 1e-7, "2d ground energy {e}");
        assert!((mu - 1.0).abs() < 1e-5, "2d mu {mu}");
    }
}
