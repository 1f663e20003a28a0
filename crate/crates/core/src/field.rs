use crate::error::{Error, Result};
use crate::grid::{Grid1D, Grid2D};
use num_complex::Complex64;

/// Complex scalar field on a 1D periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field1D {
    grid: Grid1D,
    values: Vec<Complex64>,
}

/// Complex scalar field on a 2D periodic grid, row-major [ny][nx].
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    grid: Grid2D,
    values: Vec<Complex64>,
}

/// Real scalar field on a 2D grid (densities, gauge phases).
#[derive(Debug, Clone, PartialEq)]
pub struct RealField2D {
    grid: Grid2D,
    values: Vec<f64>,
}

/// Pair of real component fields on a shared grid; houses gauge fields and currents.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2D {
    grid: Grid2D,
    x_comp: Vec<f64>,
    y_comp: Vec<f64>,
}

fn all_finite_c(values: &[Complex64]) -> bool {
    values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}

fn all_finite_r(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}

impl Field1D {
    pub fn new(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "field has {} samples, grid has {}",
                values.len(),
                grid.n()
            )));
        }
        if !all_finite_c(&values) {
            return Err(Error::Input("non-finite sample in 1D field".into()));
        }
        Ok(Field1D { grid, values })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Field1D { grid, values: vec![Complex64::ZERO; grid.n()] }
    }

    pub fn from_fn(grid: Grid1D, mut f: impl FnMut(f64) -> Complex64) -> Self {
        let values = grid.xs().map(&mut f).collect();
        Field1D { grid, values }
    }

    pub(crate) fn from_raw(grid: Grid1D, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Field1D { grid, values }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// L2 norm with the grid quadrature weight.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()).sqrt()
    }

    /// Conjugate-linear in self, linear in other.
    pub fn inner(&self, other: &Field1D) -> Result<Complex64> {
        same_grid_1(self.grid(), other.grid())?;
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.dx())
    }

    /// Rectangle-rule integral of the field itself.
    pub fn quadrature(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.grid.dx()
    }

    pub fn scaled(&self, c: Complex64) -> Field1D {
        Field1D {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Peak amplitude of the two boundary samples relative to the global peak.
    pub fn boundary_ring_ratio(&self) -> f64 {
        let peak = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let edge = self.values[0].norm().max(self.values[self.grid.n() - 1].norm());
        edge / peak
    }

    pub fn is_finite(&self) -> bool {
        all_finite_c(&self.values)
    }
}

impl Field2D {
    pub fn new(grid: Grid2D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "field has {} samples, grid has {}",
                values.len(),
                grid.len()
            )));
        }
        if !all_finite_c(&values) {
            return Err(Error::Input("non-finite sample in 2D field".into()));
        }
        Ok(Field2D { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Field2D { grid, values: vec![Complex64::ZERO; grid.len()] }
    }

    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for iy in 0..grid.ny() {
            let y = grid.y(iy);
            for ix in 0..grid.nx() {
                values.push(f(grid.x(ix), y));
            }
        }
        Field2D { grid, values }
    }

    pub(crate) fn from_raw(grid: Grid2D, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field2D { grid, values }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell()).sqrt()
    }

    pub fn inner(&self, other: &Field2D) -> Result<Complex64> {
        same_grid_2(self.grid(), other.grid())?;
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.cell())
    }

    pub fn quadrature(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.grid.cell()
    }

    pub fn scaled(&self, c: Complex64) -> Field2D {
        Field2D {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// |psi|^2 as a real field.
    pub fn density(&self) -> RealField2D {
        RealField2D {
            grid: self.grid,
            values: self.values.iter().map(|v| v.norm_sqr()).collect(),
        }
    }

    /// Peak amplitude on the outermost ring of cells relative to the global peak;
    /// time stepping aborts when this exceeds 1e-3, i.e. one millionth of the
    /// peak density on the ring.
    pub fn boundary_ring_ratio(&self) -> f64 {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let mut peak: f64 = 0.0;
        for v in &self.values {
            peak = peak.max(v.norm_sqr());
        }
        if peak == 0.0 {
            return 0.0;
        }
        let mut edge: f64 = 0.0;
        for ix in 0..nx {
            edge = edge.max(self.values[self.grid.idx(0, ix)].norm_sqr());
            edge = edge.max(self.values[self.grid.idx(ny - 1, ix)].norm_sqr());
        }
        for iy in 0..ny {
            edge = edge.max(self.values[self.grid.idx(iy, 0)].norm_sqr());
            edge = edge.max(self.values[self.grid.idx(iy, nx - 1)].norm_sqr());
        }
        (edge / peak).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        all_finite_c(&self.values)
    }
}

impl RealField2D {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "real field has {} samples, grid has {}",
                values.len(),
                grid.len()
            )));
        }
        if !all_finite_r(&values) {
            return Err(Error::Input("non-finite sample in real field".into()));
        }
        Ok(RealField2D { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        RealField2D { grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for iy in 0..grid.ny() {
            let y = grid.y(iy);
            for ix in 0..grid.nx() {
                values.push(f(grid.x(ix), y));
            }
        }
        RealField2D { grid, values }
    }

    pub(crate) fn from_raw(grid: Grid2D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        RealField2D { grid, values }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell()).sqrt()
    }

    pub fn quadrature(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

impl VectorField2D {
    pub fn new(grid: Grid2D, x_comp: Vec<f64>, y_comp: Vec<f64>) -> Result<Self> {
        if x_comp.len() != grid.len() || y_comp.len() != grid.len() {
            return Err(Error::GridMismatch("vector components must match the grid".into()));
        }
        if !all_finite_r(&x_comp) || !all_finite_r(&y_comp) {
            return Err(Error::Input("non-finite sample in vector field".into()));
        }
        Ok(VectorField2D { grid, x_comp, y_comp })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        VectorField2D {
            grid,
            x_comp: vec![0.0; grid.len()],
            y_comp: vec![0.0; grid.len()],
        }
    }

    pub(crate) fn from_raw(grid: Grid2D, x_comp: Vec<f64>, y_comp: Vec<f64>) -> Self {
        debug_assert_eq!(x_comp.len(), grid.len());
        debug_assert_eq!(y_comp.len(), grid.len());
        VectorField2D { grid, x_comp, y_comp }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn x(&self) -> &[f64] {
        &self.x_comp
    }

    pub fn y(&self) -> &[f64] {
        &self.y_comp
    }

    /// Pointwise |v|^2 as a real field.
    pub fn norm_sqr_field(&self) -> RealField2D {
        RealField2D {
            grid: self.grid,
            values: self
                .x_comp
                .iter()
                .zip(&self.y_comp)
                .map(|(a, b)| a * a + b * b)
                .collect(),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        (self
            .x_comp
            .iter()
            .zip(&self.y_comp)
            .map(|(a, b)| a * a + b * b)
            .sum::<f64>()
            * self.grid.cell())
        .sqrt()
    }
}

pub(crate) fn same_grid_1(a: &Grid1D, b: &Grid1D) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch(format!("{a:?} vs {b:?}")));
    }
    Ok(())
}

pub(crate) fn same_grid_2(a: &Grid2D, b: &Grid2D) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch(format!("{a:?} vs {b:?}")));
    }
    Ok(())
}
