//! Uniform Cartesian truncation of the plane.

use crate::background::{Point, StringConfiguration};
use thiserror::Error;

/// A node closer than this to a string center forces a shifted grid.
pub const NODE_CENTER_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least 3 nodes per axis, got {0}")]
    TooFewNodes(usize),
    #[error("truncation radius must be positive and finite, got {0}")]
    Radius(f64),
    #[error("string centers reach |p| = {max_center}, beyond half the truncation radius {radius}")]
    CentersTooFar { max_center: f64, radius: f64 },
    #[error("no half-spacing shift keeps every string center off the grid nodes")]
    CenterOnNode,
}

/// `n × n` nodes covering `[-R, R]²`, possibly shifted by half a spacing along
/// one or both axes so that no node sits on a string center. Node `(i, j)` has
/// flat index `j·n + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    radius: f64,
    n: usize,
    spacing: f64,
    offset: Point,
}

impl Grid {
    pub fn new(radius: f64, n: usize, cfg: &StringConfiguration) -> Result<Self, GridError> {
        if n < 3 {
            return Err(GridError::TooFewNodes(n));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GridError::Radius(radius));
        }
        let max_center = cfg.max_center_norm();
        if max_center > 0.5 * radius {
            return Err(GridError::CentersTooFar { max_center, radius });
        }
        let spacing = 2.0 * radius / (n - 1) as f64;
        let half = 0.5 * spacing;
        for offset in [[0.0, 0.0], [0.0, half], [half, 0.0], [half, half]] {
            let grid = Self { radius, n, spacing, offset };
            if cfg.centers().iter().all(|c| grid.distance_to_lattice(c.point()) >= NODE_CENTER_EPS) {
                return Ok(grid);
            }
        }
        Err(GridError::CenterOnNode)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn offset(&self) -> Point {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.radius + i as f64 * self.spacing
    }

    pub fn point(&self, i: usize, j: usize) -> Point {
        [self.coord(i) + self.offset[0], self.coord(j) + self.offset[1]]
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.n - 1 || j == self.n - 1
    }

    /// All nodes as `(i, j, point)` in flat-index order.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize, Point)> + '_ {
        (0..self.n).flat_map(move |j| (0..self.n).map(move |i| (i, j, self.point(i, j))))
    }

    /// Five-point Laplacian of `values` at an interior node.
    #[inline]
    pub fn laplacian_at(&self, values: &[f64], i: usize, j: usize) -> f64 {
        let k = self.index(i, j);
        let n = self.n;
        (values[k - 1] + values[k + 1] + values[k - n] + values[k + n] - 4.0 * values[k])
            / (self.spacing * self.spacing)
    }

    fn distance_to_lattice(&self, p: Point) -> f64 {
        let axis = |x: f64, off: f64| {
            let s = (x - off + self.radius) / self.spacing;
            (s - s.round()).abs() * self.spacing
        };
        axis(p[0], self.offset[0]).hypot(axis(p[1], self.offset[1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifts_off_centers() {
        let cfg = StringConfiguration::new([([-1.0, 0.0], 1), ([1.0, 0.0], 1)]).unwrap();
        let grid = Grid::new(16.0, 257, &cfg).unwrap();
        assert_eq!(grid.spacing(), 0.125);
        assert_eq!(grid.offset(), [0.0, 0.0625]);
        for (_, _, p) in grid.nodes() {
            assert!(cfg.nearest_center(p).unwrap().1 >= 0.06);
        }
        // reflection x -> -x maps nodes onto nodes
        assert_eq!(grid.point(3, 7)[0], -grid.point(253, 7)[0]);
    }

    #[test]
    fn even_grid_needs_no_shift() {
        let cfg = StringConfiguration::coincident([0.0, 0.0], 2);
        let grid = Grid::new(8.0, 64, &cfg).unwrap();
        assert_eq!(grid.offset(), [0.0, 0.0]);
    }

    #[test]
    fn shift_along_x_when_needed() {
        // on the x lattice and half a spacing off the y lattice, plus one on a node
        let cfg = StringConfiguration::new([([0.0, 0.5], 1), ([1.0, 1.0], 1)]).unwrap();
        let grid = Grid::new(4.0, 9, &cfg).unwrap();
        assert_eq!(grid.offset(), [0.5, 0.0]);
    }

    #[test]
    fn rejects_bad_grids() {
        let cfg = StringConfiguration::coincident([3.0, 0.0], 1);
        assert!(matches!(Grid::new(4.0, 33, &cfg), Err(GridError::CentersTooFar { .. })));
        assert!(Grid::new(4.0, 2, &StringConfiguration::empty()).is_err());
        assert!(Grid::new(-1.0, 9, &StringConfiguration::empty()).is_err());
    }

    #[test]
    fn laplacian_of_quadratic_is_exact() {
        let grid = Grid::new(2.0, 17, &StringConfiguration::empty()).unwrap();
        let values: Vec<f64> = grid.nodes().map(|(_, _, p)| p[0] * p[0] + 3.0 * p[1] * p[1]).collect();
        approx::assert_relative_eq!(grid.laplacian_at(&values, 5, 9), 8.0, max_relative = 1e-12);
    }
}
