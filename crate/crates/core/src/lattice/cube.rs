//! Cubes `C(r)`, `C*(r)`, their common boundary, outer normals and the
//! discrete Stokes identities.

use super::field::Field;
use super::window::LatticeWindow;
use crate::error::{Error, Result};

/// `C(r) = {-r <= a_j <= r - 1}` or `C*(r) = {-r + 1 <= a_j <= r}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubeKind {
    C,
    CStar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CubeSpec {
    pub radius: i64,
    pub kind: CubeKind,
}

impl CubeSpec {
    pub fn star(radius: i64) -> Self {
        Self {
            radius,
            kind: CubeKind::CStar,
        }
    }

    pub fn plain(radius: i64) -> Self {
        Self {
            radius,
            kind: CubeKind::C,
        }
    }

    fn range(&self) -> (i64, i64) {
        match self.kind {
            CubeKind::C => (-self.radius, self.radius - 1),
            CubeKind::CStar => (-self.radius + 1, self.radius),
        }
    }
}

/// One nonzero component of a boundary normal: `sign * e_axis` at `site`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFace {
    pub site: usize,
    pub axis: usize,
    pub sign: i8,
}

/// `omega_N = N^{3/2} 2^N`, relating boundary size to `r^{N-1}`.
pub fn omega(dim: usize) -> f64 {
    let n = dim as f64;
    n.powf(1.5) * 2f64.powi(dim as i32)
}

fn check_radius(window: &LatticeWindow, radius: i64) -> Result<()> {
    if radius < 1 {
        return Err(Error::Argument(format!("cube radius must be >= 1, got {radius}")));
    }
    if radius > window.radius() {
        return Err(Error::Domain(format!(
            "cube radius {radius} exceeds window radius {}",
            window.radius()
        )));
    }
    Ok(())
}

fn sites_in_box(window: &LatticeWindow, lo: i64, hi: i64, mut keep: impl FnMut(&[i64]) -> bool) -> Vec<usize> {
    let n = window.dim();
    let mut coords = vec![lo; n];
    let mut out = Vec::new();
    loop {
        if keep(&coords) {
            // Coordinates lie in the window once the radius has been checked.
            out.push(window.resolve(&coords));
        }
        let mut axis = n;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            if coords[axis] < hi {
                coords[axis] += 1;
                break;
            }
            coords[axis] = lo;
        }
    }
}

/// Sites of the cube in lexicographic order.
pub fn cube_sites(window: &LatticeWindow, spec: CubeSpec) -> Result<Vec<usize>> {
    check_radius(window, spec.radius)?;
    let (lo, hi) = spec.range();
    Ok(sites_in_box(window, lo, hi, |_| true))
}

/// `dC(r) = dC*(r)`: all sites with `|a_j| <= r` and some `|a_k| = r`.
pub fn boundary_sites(window: &LatticeWindow, radius: i64) -> Result<Vec<usize>> {
    check_radius(window, radius)?;
    Ok(sites_in_box(window, -radius, radius, |a| {
        a.iter().any(|c| c.abs() == radius)
    }))
}

/// Outer normal of `C*(r)` at `alpha`, as an unnormalized integer vector.
pub fn normal_star(alpha: &[i64], radius: i64) -> Vec<i64> {
    let inside = |j: usize| {
        alpha
            .iter()
            .enumerate()
            .all(|(i, &c)| i == j || (-radius + 1..=radius).contains(&c))
    };
    (0..alpha.len())
        .map(|j| {
            if alpha[j] == radius && inside(j) {
                1
            } else if alpha[j] == -radius && inside(j) {
                -1
            } else {
                0
            }
        })
        .collect()
}

/// Outer normal of `C(r)` at `alpha`.
pub fn normal(alpha: &[i64], radius: i64) -> Vec<i64> {
    let inside = |j: usize| {
        alpha
            .iter()
            .enumerate()
            .all(|(i, &c)| i == j || (-radius..=radius - 1).contains(&c))
    };
    (0..alpha.len())
        .map(|j| {
            if alpha[j] == radius && inside(j) {
                1
            } else if alpha[j] == -radius && inside(j) {
                -1
            } else {
                0
            }
        })
        .collect()
}

/// Nonzero normal components over the boundary, in lexicographic site order.
pub fn boundary_faces(window: &LatticeWindow, radius: i64, kind: CubeKind) -> Result<Vec<BoundaryFace>> {
    let mut faces = Vec::new();
    for site in boundary_sites(window, radius)? {
        let alpha = window.coords(site);
        let n = match kind {
            CubeKind::CStar => normal_star(&alpha, radius),
            CubeKind::C => normal(&alpha, radius),
        };
        for (axis, &sign) in n.iter().enumerate() {
            if sign != 0 {
                faces.push(BoundaryFace {
                    site,
                    axis,
                    sign: sign as i8,
                });
            }
        }
    }
    Ok(faces)
}

/// `sum_{a in dC} v(a) . n(a)` evaluated from a precomputed face list.
pub fn boundary_flux(v: &Field, faces: &[BoundaryFace]) -> f64 {
    faces
        .iter()
        .map(|face| f64::from(face.sign) * v.get(face.site, face.axis))
        .sum()
}

/// Both sides of the discrete Stokes identity for the chosen cube:
/// `sum_{C*(r)} div v` against `sum_{dC*} v . n*`, or
/// `sum_{C(r)} div* v` against `sum_{dC} v . n`.
pub fn stokes_sum(v: &Field, radius: i64, kind: CubeKind) -> Result<(f64, f64)> {
    let window = v.window();
    let n = window.dim();
    if v.width() != n {
        return Err(Error::Argument(format!(
            "stokes_sum expects a field of width {n}, got {}",
            v.width()
        )));
    }
    let sites = cube_sites(window, CubeSpec { radius, kind })?;
    let mut interior = 0.0;
    for &site in &sites {
        for axis in 0..n {
            interior += match kind {
                CubeKind::CStar => v.get(site, axis) - v.get(window.backward(site, axis), axis),
                CubeKind::C => v.get(window.forward(site, axis), axis) - v.get(site, axis),
            };
        }
    }
    let faces = boundary_faces(window, radius, kind)?;
    Ok((interior, boundary_flux(v, &faces)))
}
