use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

fn check_axis(label: &str, n: usize, l: f64) -> Result<()> {
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::Config(format!(
            "grid guard: {label} point count must be a power of two >= 8, got {n}"
        )));
    }
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::Config(format!(
            "grid guard: {label} half-width must be positive and finite, got {l}"
        )));
    }
    Ok(())
}

/// Physical wavenumber for mode index `m` of an axis with `n` points on [-l, l):
/// k_m = (pi/l) * m with m folded to the symmetric range [-n/2, n/2).
fn wavenumber(m: usize, n: usize, l: f64) -> f64 {
    let m = m as isize;
    let n = n as isize;
    let folded = if m < n / 2 { m } else { m - n };
    std::f64::consts::PI * folded as f64 / l
}

/// Uniform periodic grid on [-l, l) with n points, x_j = -l + j*dx.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n: usize,
    l: f64,
}

impl Grid1D {
    pub fn new(n: usize, l: f64) -> Result<Self> {
        check_axis("x", n, l)?;
        Ok(Grid1D { n, l })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.l / self.n as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.l + j as f64 * self.dx()
    }

    /// Wavenumber of mode index m in transform ordering.
    pub fn k(&self, m: usize) -> f64 {
        wavenumber(m, self.n, self.l)
    }

    /// Index of the unpaired Nyquist mode; odd spectral multipliers zero it to stay real.
    pub fn nyquist(&self) -> usize {
        self.n / 2
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.x(j))
    }
}

/// Uniform periodic box [-lx, lx) x [-ly, ly); samples are row-major [ny][nx],
/// index iy*nx + ix, so x varies fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        check_axis("x", nx, lx)?;
        check_axis("y", ny, ly)?;
        Ok(Grid2D { nx, ny, lx, ly })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 * self.ly / self.ny as f64
    }

    /// Quadrature weight of one cell.
    pub fn cell(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn idx(&self, iy: usize, ix: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn x(&self, ix: usize) -> f64 {
        -self.lx + ix as f64 * self.dx()
    }

    pub fn y(&self, iy: usize) -> f64 {
        -self.ly + iy as f64 * self.dy()
    }

    pub fn kx(&self, mx: usize) -> f64 {
        wavenumber(mx, self.nx, self.lx)
    }

    pub fn ky(&self, my: usize) -> f64 {
        wavenumber(my, self.ny, self.ly)
    }

    pub fn nyquist_x(&self) -> usize {
        self.nx / 2
    }

    pub fn nyquist_y(&self) -> usize {
        self.ny / 2
    }

    /// The x axis as a 1D grid; reduction identifies 1D profiles with this axis.
    pub fn axis_x(&self) -> Grid1D {
        Grid1D { n: self.nx, l: self.lx }
    }

    /// The y axis as a 1D grid.
    pub fn axis_y(&self) -> Grid1D {
        Grid1D { n: self.ny, l: self.ly }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid1D::new(12, 1.0).is_err());
        assert!(Grid1D::new(4, 1.0).is_err());
        assert!(Grid1D::new(16, 0.0).is_err());
        assert!(Grid2D::new(16, 12, 1.0, 1.0).is_err());
    }

    #[test]
    fn wavenumber_ordering() {
        let g = Grid1D::new(8, 2.0).unwrap();
        let k: Vec<f64> = (0..8).map(|m| g.k(m)).collect();
        let pi = std::f64::consts::PI;
        let want = [0.0, 0.5, 1.0, 1.5, -2.0, -1.5, -1.0, -0.5].map(|v| v * pi);
        for (a, b) in k.iter().zip(want.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn axis_views_match() {
        let g = Grid2D::new(16, 32, 3.0, 2.0).unwrap();
        assert_eq!(g.axis_x().n(), 16);
        assert!((g.axis_x().dx() - g.dx()).abs() < 1e-15);
        assert!((g.axis_y().dx() - g.dy()).abs() < 1e-15);
        assert!((g.y(16) - 0.0).abs() < 1e-15);
        assert_eq!(g.idx(1, 2), 18);
    }

    #[test]
    fn zero_mode_exists_once() {
        let g = Grid1D::new(16, 1.5);
        let g = g.unwrap();
        let zeros = (0..16).filter(|&m| g.k(m) == 0.0).count();
        assert_eq!(zeros, 1);
    }
}
