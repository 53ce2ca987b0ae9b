//! Uniform cell-centered rectangular grids, scalar fields on them, and the
//! discrete inner product carrying the cell-area weight.

use crate::error::Error;
use crate::scalar::{kahan_sum, Real};

/// Uniform cell-centered grid on `[0, lx] x [0, ly]` with `nx x ny` cells.
///
/// Cell `(j, k)` (zero-based) is centered at `((j + 1/2) hx, (k + 1/2) hy)`,
/// strictly interior to the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T> {
    nx: usize,
    ny: usize,
    lx: T,
    ly: T,
}

impl<T: Real> Grid<T> {
    pub fn new(nx: usize, ny: usize, lx: T, ly: T) -> Result<Self, Error> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidGrid(format!(
                "cell counts must be positive, got {nx}x{ny}"
            )));
        }
        if !(lx > T::zero()) || !(ly > T::zero()) || !lx.is_finite() || !ly.is_finite() {
            return Err(Error::InvalidGrid(
                "domain lengths must be positive and finite".into(),
            ));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    /// Square grid on `[0, l]^2` with `n x n` cells.
    pub fn square(n: usize, l: T) -> Result<Self, Error> {
        Self::new(n, n, l, l)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> T {
        self.lx
    }

    pub fn ly(&self) -> T {
        self.ly
    }

    pub fn hx(&self) -> T {
        self.lx / T::from_usize(self.nx).unwrap()
    }

    pub fn hy(&self) -> T {
        self.ly / T::from_usize(self.ny).unwrap()
    }

    /// Area weight `hx * hy` of one cell.
    pub fn cell_area(&self) -> T {
        self.hx() * self.hy()
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Flat index of cell `(j, k)`; the x index varies fastest.
    #[inline]
    pub fn idx(&self, j: usize, k: usize) -> usize {
        debug_assert!(j < self.nx && k < self.ny);
        k * self.nx + j
    }

    /// x coordinate of the center of column `j`.
    pub fn node_x(&self, j: usize) -> T {
        (T::from_usize(j).unwrap() + T::of(0.5)) * self.hx()
    }

    /// y coordinate of the center of row `k`.
    pub fn node_y(&self, k: usize) -> T {
        (T::from_usize(k).unwrap() + T::of(0.5)) * self.hy()
    }
}

/// Scalar field of nodal values on a [`Grid`].
///
/// Fields are value-like: operations take fields by reference and return
/// fresh fields, so instances can be shared read-only across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Real> Field<T> {
    /// Field with the same value everywhere.
    pub fn constant(grid: Grid<T>, value: T) -> Self {
        Self {
            grid,
            values: vec![value; grid.n_cells()],
        }
    }

    /// Field sampled from a function of the cell-center coordinates.
    pub fn from_fn(grid: Grid<T>, mut f: impl FnMut(T, T) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.n_cells());
        for k in 0..grid.ny() {
            let y = grid.node_y(k);
            for j in 0..grid.nx() {
                values.push(f(grid.node_x(j), y));
            }
        }
        Self { grid, values }
    }

    /// Wraps raw nodal values (x index fastest), checking length and finiteness.
    pub fn from_values(grid: Grid<T>, values: Vec<T>) -> Result<Self, Error> {
        if values.len() != grid.n_cells() {
            return Err(Error::GridMismatch {
                expected: (grid.nx(), grid.ny()),
                got: (values.len(), 1),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "field values".into(),
            });
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_values_unchecked(grid: Grid<T>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.n_cells());
        Self { grid, values }
    }

    pub fn grid(&self) -> Grid<T> {
        self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> T {
        self.values[self.grid.idx(j, k)]
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values
            .iter()
            .copied()
            .fold(T::neg_infinity(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Compensated sum of all nodal values (no area weight).
    pub fn sum(&self) -> T {
        kahan_sum(self.values.iter().copied())
    }

    /// Mean nodal value.
    pub fn mean(&self) -> T {
        self.sum() / T::from_usize(self.values.len()).unwrap()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self, Error> {
        check_same_grid(self, other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    /// Largest absolute nodal difference to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T, Error> {
        check_same_grid(self, other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max))
    }
}

pub(crate) fn check_same_grid<T: Real>(u: &Field<T>, v: &Field<T>) -> Result<(), Error> {
    if u.grid != v.grid {
        return Err(Error::GridMismatch {
            expected: (u.grid.nx(), u.grid.ny()),
            got: (v.grid.nx(), v.grid.ny()),
        });
    }
    Ok(())
}

/// Discrete inner product `hx*hy * sum_jk u_jk v_jk`.
pub fn inner<T: Real>(u: &Field<T>, v: &Field<T>) -> Result<T, Error> {
    check_same_grid(u, v)?;
    let dot = kahan_sum(u.values.iter().zip(&v.values).map(|(&a, &b)| a * b));
    Ok(u.grid.cell_area() * dot)
}

/// Discrete L2 norm `sqrt(inner(u, u))`.
pub fn norm_l2<T: Real>(u: &Field<T>) -> T {
    inner(u, u).expect("same field").sqrt()
}
