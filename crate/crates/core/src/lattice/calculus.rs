//! Discrete differential operators on window fields.
//!
//! With `T_j u(a) = u(a + e_j)` the backward difference is
//! `d_j u = u - T_j^{-1} u` and the forward difference `d*_j u = T_j u - u`.
//! Every operator reads neighbors through the window's boundary policy.

use super::field::Field;
use crate::error::{Error, Result};

/// Backward (`d_j`) or forward (`d*_j`) difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffKind {
    Backward,
    Forward,
}

/// Returns `T_axis^{direction} u`; `direction` must be `+1` or `-1`.
pub fn shift(field: &Field, axis: usize, direction: i32) -> Result<Field> {
    let window = field.window();
    window.check_axis(axis)?;
    if direction != 1 && direction != -1 {
        return Err(Error::Argument(format!("shift direction must be +1 or -1, got {direction}")));
    }
    let width = field.width();
    let mut out = Field::zeros(window, width);
    for site in 0..window.n_sites() {
        let src = if direction > 0 {
            window.forward(site, axis)
        } else {
            window.backward(site, axis)
        };
        out.site_mut(site).copy_from_slice(field.site(src));
    }
    Ok(out)
}

/// Componentwise difference along `axis`.
pub fn diff(field: &Field, axis: usize, kind: DiffKind) -> Result<Field> {
    let window = field.window();
    window.check_axis(axis)?;
    let width = field.width();
    let mut out = Field::zeros(window, width);
    for site in 0..window.n_sites() {
        for c in 0..width {
            let value = match kind {
                DiffKind::Backward => field.get(site, c) - field.get(window.backward(site, axis), c),
                DiffKind::Forward => field.get(window.forward(site, axis), c) - field.get(site, c),
            };
            out.set(site, c, value);
        }
    }
    Ok(out)
}

/// Gradient of a scalar field: component `j` is the difference along axis `j`.
pub fn grad(field: &Field, kind: DiffKind) -> Result<Field> {
    if field.width() != 1 {
        return Err(Error::Argument(format!(
            "grad expects a scalar field, got width {}",
            field.width()
        )));
    }
    let window = field.window();
    let n = window.dim();
    let mut out = Field::zeros(window, n);
    for site in 0..window.n_sites() {
        for axis in 0..n {
            let value = match kind {
                DiffKind::Backward => field.get(site, 0) - field.get(window.backward(site, axis), 0),
                DiffKind::Forward => field.get(window.forward(site, axis), 0) - field.get(site, 0),
            };
            out.set(site, axis, value);
        }
    }
    Ok(out)
}

/// Divergence of a vector field of width `N`.
pub fn div(field: &Field, kind: DiffKind) -> Result<Field> {
    let window = field.window();
    let n = window.dim();
    if field.width() != n {
        return Err(Error::Argument(format!(
            "div expects a field of width {n}, got width {}",
            field.width()
        )));
    }
    let mut out = Field::zeros(window, 1);
    for site in 0..window.n_sites() {
        let mut acc = 0.0;
        for axis in 0..n {
            acc += match kind {
                DiffKind::Backward => field.get(site, axis) - field.get(window.backward(site, axis), axis),
                DiffKind::Forward => field.get(window.forward(site, axis), axis) - field.get(site, axis),
            };
        }
        out.set(site, 0, acc);
    }
    Ok(out)
}

/// `sum_j [u(a + e_j) + u(a - e_j) - 2 u(a)]`, componentwise.
pub fn laplacian(field: &Field) -> Field {
    let window = field.window();
    let width = field.width();
    let mut out = Field::zeros(window, width);
    for site in 0..window.n_sites() {
        for c in 0..width {
            out.set(site, c, laplacian_at(field, site, c));
        }
    }
    out
}

/// Laplacian stencil at one site; the summation order is fixed so the value
/// is independent of where the site sits in the window.
#[inline]
pub fn laplacian_at(field: &Field, site: usize, component: usize) -> f64 {
    let window = field.window();
    let center = field.get(site, component);
    let mut acc = 0.0;
    for axis in 0..window.dim() {
        acc += field.get(window.forward(site, axis), component)
            + field.get(window.backward(site, axis), component)
            - 2.0 * center;
    }
    acc
}
