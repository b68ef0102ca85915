use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// How reads outside the window are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Shifts wrap with period `2W + 1` along every axis.
    #[default]
    Periodic,
    /// Out-of-window reads return the value at the clamped site. Models keep
    /// the rim of the window at its initial value, so the clamped read is the
    /// initial condition.
    Frozen,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Periodic => write!(f, "periodic"),
            Boundary::Frozen => write!(f, "frozen"),
        }
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "periodic" => Ok(Boundary::Periodic),
            "frozen" => Ok(Boundary::Frozen),
            other => Err(Error::Parse(format!("unknown boundary policy '{other}'"))),
        }
    }
}

/// Finite truncation `{-W <= alpha_j <= W}` of `Z^N`.
///
/// Sites are stored in lexicographic order of their coordinates, first axis
/// slowest. A neighbor table for unit shifts is precomputed at construction.
#[derive(Debug, Clone)]
pub struct LatticeWindow {
    dim: usize,
    radius: i64,
    boundary: Boundary,
    buffer: i64,
    side: usize,
    n_sites: usize,
    strides: Vec<usize>,
    /// `neighbors[site * 2N + 2 * axis + k]`, `k = 0` backward, `k = 1` forward.
    neighbors: Vec<usize>,
}

impl PartialEq for LatticeWindow {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.radius == other.radius
            && self.boundary == other.boundary
            && self.buffer == other.buffer
    }
}

impl LatticeWindow {
    pub fn new(dim: usize, radius: i64, boundary: Boundary, buffer: i64) -> Result<Arc<Self>> {
        if dim == 0 {
            return Err(Error::Argument("lattice dimension must be at least 1".into()));
        }
        if radius < 1 {
            return Err(Error::Argument(format!("window radius must be >= 1, got {radius}")));
        }
        if buffer < 0 || buffer >= radius {
            return Err(Error::Argument(format!(
                "buffer must satisfy 0 <= buffer < radius, got buffer {buffer} for radius {radius}"
            )));
        }
        let side = (2 * radius + 1) as usize;
        let n_sites = side
            .checked_pow(dim as u32)
            .filter(|&n| n <= 1 << 28)
            .ok_or_else(|| Error::Argument(format!("window {side}^{dim} is too large")))?;
        let mut strides = vec![1usize; dim];
        for axis in (0..dim.saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * side;
        }

        let mut neighbors = vec![0usize; n_sites * 2 * dim];
        for site in 0..n_sites {
            for axis in 0..dim {
                let k = (site / strides[axis]) % side;
                let (back, fwd) = match boundary {
                    Boundary::Periodic => ((k + side - 1) % side, (k + 1) % side),
                    Boundary::Frozen => (k.saturating_sub(1), (k + 1).min(side - 1)),
                };
                let base = site - k * strides[axis];
                neighbors[site * 2 * dim + 2 * axis] = base + back * strides[axis];
                neighbors[site * 2 * dim + 2 * axis + 1] = base + fwd * strides[axis];
            }
        }

        Ok(Arc::new(Self {
            dim,
            radius,
            boundary,
            buffer,
            side,
            n_sites,
            strides,
            neighbors,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn buffer(&self) -> i64 {
        self.buffer
    }

    /// Sites per axis, `2W + 1`.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Largest cube radius for which diagnostics are meaningful.
    pub fn max_diagnostic_radius(&self) -> i64 {
        self.radius - self.buffer
    }

    pub fn contains(&self, coords: &[i64]) -> bool {
        coords.len() == self.dim && coords.iter().all(|c| c.abs() <= self.radius)
    }

    /// Index of an in-window site.
    pub fn index(&self, coords: &[i64]) -> Result<usize> {
        if !self.contains(coords) {
            return Err(Error::Domain(format!(
                "site {coords:?} is outside the window of radius {}",
                self.radius
            )));
        }
        Ok(coords
            .iter()
            .zip(&self.strides)
            .map(|(c, s)| (c + self.radius) as usize * s)
            .sum())
    }

    /// Index of an arbitrary lattice point after applying the boundary policy.
    pub fn resolve(&self, coords: &[i64]) -> usize {
        let side = self.side as i64;
        coords
            .iter()
            .zip(&self.strides)
            .map(|(&c, s)| {
                let k = match self.boundary {
                    Boundary::Periodic => (c + self.radius).rem_euclid(side),
                    Boundary::Frozen => (c + self.radius).clamp(0, side - 1),
                };
                k as usize * s
            })
            .sum()
    }

    pub fn coords(&self, site: usize) -> Vec<i64> {
        self.strides
            .iter()
            .map(|s| ((site / s) % self.side) as i64 - self.radius)
            .collect()
    }

    /// Coordinate of `site` along `axis`.
    pub fn coord(&self, site: usize, axis: usize) -> i64 {
        ((site / self.strides[axis]) % self.side) as i64 - self.radius
    }

    #[inline]
    pub fn forward(&self, site: usize, axis: usize) -> usize {
        self.neighbors[site * 2 * self.dim + 2 * axis + 1]
    }

    #[inline]
    pub fn backward(&self, site: usize, axis: usize) -> usize {
        self.neighbors[site * 2 * self.dim + 2 * axis]
    }

    /// Neighbor at `site + offset * e_axis` under the boundary policy.
    pub fn offset(&self, site: usize, axis: usize, offset: i64) -> usize {
        let mut coords = self.coords(site);
        coords[axis] += offset;
        self.resolve(&coords)
    }

    /// True for sites with some `|alpha_j| = W`.
    pub fn is_rim(&self, site: usize) -> bool {
        (0..self.dim).any(|axis| self.coord(site, axis).abs() == self.radius)
    }

    pub fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.dim {
            return Err(Error::Argument(format!(
                "axis {axis} out of range for dimension {}",
                self.dim
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let w = LatticeWindow::new(3, 2, Boundary::Periodic, 0).unwrap();
        assert_eq!(w.n_sites(), 125);
        for site in 0..w.n_sites() {
            assert_eq!(w.index(&w.coords(site)).unwrap(), site);
        }
        assert_eq!(w.coords(0), vec![-2, -2, -2]);
        assert_eq!(w.coords(1), vec![-2, -2, -1]);
    }

    #[test]
    fn periodic_neighbors_wrap() {
        let w = LatticeWindow::new(1, 2, Boundary::Periodic, 0).unwrap();
        let last = w.index(&[2]).unwrap();
        assert_eq!(w.coords(w.forward(last, 0)), vec![-2]);
        assert_eq!(w.coords(w.backward(0, 0)), vec![2]);
    }

    #[test]
    fn frozen_neighbors_clamp() {
        let w = LatticeWindow::new(2, 3, Boundary::Frozen, 0).unwrap();
        let corner = w.index(&[3, -3]).unwrap();
        assert_eq!(w.forward(corner, 0), corner);
        assert_eq!(w.backward(corner, 1), corner);
        assert_eq!(w.coords(w.backward(corner, 0)), vec![2, -3]);
        assert_eq!(w.resolve(&[7, -9]), corner);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(LatticeWindow::new(0, 3, Boundary::Periodic, 0).is_err());
        assert!(LatticeWindow::new(1, 0, Boundary::Periodic, 0).is_err());
        assert!(LatticeWindow::new(1, 4, Boundary::Periodic, 4).is_err());
        let w = LatticeWindow::new(2, 4, Boundary::Periodic, 0).unwrap();
        assert!(w.check_axis(2).is_err());
        assert!(w.index(&[5, 0]).is_err());
    }
}
