//! Node-centred rectangular grids and scalar fields on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodes at `(x0 + i·dx, y0 + j·dy)` for `0 ≤ i < nx`, `0 ≤ j < ny`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2 {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Grid2 {
    pub fn new(nx: usize, ny: usize, x0: f64, y0: f64, dx: f64, dy: f64) -> Result<Self> {
        let g = Self { nx, ny, x0, y0, dx, dy };
        g.validate()?;
        Ok(g)
    }

    /// `nx × ny` nodes spanning `[x_min, x_max] × [y_min, y_max]` inclusive.
    pub fn spanning(x_min: f64, x_max: f64, y_min: f64, y_max: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::validation("grid needs at least 3 nodes per axis"));
        }
        Self::new(
            nx,
            ny,
            x_min,
            y_min,
            (x_max - x_min) / (nx - 1) as f64,
            (y_max - y_min) / (ny - 1) as f64,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 3 || self.ny < 3 {
            return Err(Error::validation("grid needs at least 3 nodes per axis"));
        }
        if !(self.dx > 0.0 && self.dy > 0.0 && self.dx.is_finite() && self.dy.is_finite()) {
            return Err(Error::validation("grid spacing must be positive"));
        }
        if !(self.x0.is_finite() && self.y0.is_finite()) {
            return Err(Error::validation("grid origin must be finite"));
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.dy
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.nx - 1)
    }

    pub fn y_max(&self) -> f64 {
        self.y(self.ny - 1)
    }

    /// Node coordinates in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).map(move |i| (self.x(i), self.y(j))))
    }

    /// Same node layout within a relative tolerance on origin and spacing.
    pub fn matches(&self, other: &Grid2, rel: f64) -> bool {
        let close = |a: f64, b: f64, scale: f64| (a - b).abs() <= rel * scale;
        let sx = self.dx * self.nx as f64 + self.x0.abs();
        let sy = self.dy * self.ny as f64 + self.y0.abs();
        self.nx == other.nx
            && self.ny == other.ny
            && close(self.x0, other.x0, sx)
            && close(self.y0, other.y0, sy)
            && close(self.dx, other.dx, self.dx)
            && close(self.dy, other.dy, self.dy)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField2 {
    pub grid: Grid2,
    pub values: Vec<f64>,
}

impl ScalarField2 {
    pub fn new(grid: Grid2, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid2, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = grid.nodes().map(|(x, y)| f(x, y)).collect();
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spanning_grid_hits_both_ends() {
        let g = Grid2::spanning(-4.0, 4.0, -4.0, 4.0, 401, 401).unwrap();
        assert!((g.dx - 0.02).abs() < 1e-15);
        assert!((g.x_max() - 4.0).abs() < 1e-12);
        assert_eq!(g.index(3, 2), 2 * 401 + 3);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid2::new(2, 5, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(Grid2::new(5, 5, 0.0, 0.0, 0.0, 1.0).is_err());
        assert!(ScalarField2::new(Grid2::new(3, 3, 0.0, 0.0, 1.0, 1.0).unwrap(), vec![0.0; 8]).is_err());
    }
}
