//! Concrete lattice models: Frenkel-Kontorova, generalized and multi-range
//! chains, a random-bond bistable lattice and the discrete complex
//! Ginzburg-Landau equation.

mod dcgl;
mod fk;
mod genfk;
mod interaction;
mod multirange;
mod spinglass;

use std::sync::Arc;

pub use dcgl::{DcglModel, DcglOriginalFrame};
pub use fk::{CosinePotential, FkModel, SitePotential};
pub use genfk::GeneralizedFkModel;
pub use interaction::{Interaction, SpringInteraction};
pub use multirange::{MultiRangeFlux, MultiRangeModel};
pub use spinglass::{BondSign, Bonds, EnergySplit, SpinGlassModel};

use crate::eds::State;
use crate::error::{Error, Result};
use crate::lattice::{Boundary, Field, LatticeWindow};

/// Zeroes the time derivative on rim sites of a frozen window.
pub(crate) fn freeze_rim(window: &LatticeWindow, field: &mut Field) {
    if window.boundary() != Boundary::Frozen {
        return;
    }
    for site in 0..window.n_sites() {
        if window.is_rim(site) {
            field.site_mut(site).iter_mut().for_each(|x| *x = 0.0);
        }
    }
}

/// Builds the time derivative from a force field: `du/dt = force` when
/// `lambda == 0`, otherwise `du/dt = v`, `lambda dv/dt = -v + force`.
pub(crate) fn assemble_rhs(
    window: &Arc<LatticeWindow>,
    lambda: f64,
    state: &State,
    mut force: Field,
) -> Result<State> {
    if lambda == 0.0 {
        freeze_rim(window, &mut force);
        return Ok(State::gradient(force));
    }
    let v = state
        .v
        .as_ref()
        .ok_or_else(|| Error::Argument("damped model requires a velocity field".into()))?;
    let mut du = v.clone();
    let mut dv = force;
    for (a, &b) in dv.values_mut().iter_mut().zip(v.values()) {
        *a = (*a - b) / lambda;
    }
    freeze_rim(window, &mut du);
    freeze_rim(window, &mut dv);
    Ok(State::damped(du, dv))
}

/// `du/dt` as seen by the energy functionals.
pub(crate) fn velocity(lambda: f64, state: &State, rhs: &State) -> Field {
    if lambda == 0.0 {
        rhs.u.clone()
    } else {
        state.v.clone().expect("damped state carries a velocity")
    }
}

/// Site-wise `lambda v . dv/dt`, the kinetic part of the energy rate.
pub(crate) fn kinetic_rate(lambda: f64, state: &State, rhs: &State) -> Field {
    let window = state.window();
    match (&state.v, &rhs.v) {
        (Some(v), Some(dv)) if lambda > 0.0 => {
            let mut out = Field::zeros(window, 1);
            for site in 0..window.n_sites() {
                let k: f64 = v.site(site).iter().zip(dv.site(site)).map(|(a, b)| a * b).sum();
                out.set(site, 0, lambda * k);
            }
            out
        }
        _ => Field::zeros(window, 1),
    }
}

/// Checks a damping constant and reports whether the model is damped.
pub(crate) fn check_damping(lambda: f64) -> Result<bool> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Argument(format!("damping must be finite and >= 0, got {lambda}")));
    }
    Ok(lambda > 0.0)
}

/// Spectral bound of `lambda x'' + x' = -k x` rewritten as a first-order system.
pub(crate) fn damped_stiffness(lambda: f64, k: f64) -> f64 {
    if lambda == 0.0 {
        k
    } else {
        1.0 / lambda + (k / lambda).sqrt()
    }
}

/// Squared norm of the per-site vector.
pub(crate) fn site_norm_sq(field: &Field, site: usize) -> f64 {
    field.site(site).iter().map(|x| x * x).sum()
}

/// `d = |du/dt|^2` per site.
pub(crate) fn dissipation(udot: &Field) -> Field {
    let window = udot.window();
    let mut d = Field::zeros(window, 1);
    for site in 0..window.n_sites() {
        d.set(site, 0, site_norm_sq(udot, site));
    }
    d
}

/// Adds the kinetic energy `lambda/2 |v|^2` to `e`.
pub(crate) fn add_kinetic(lambda: f64, state: &State, e: &mut Field) {
    if let Some(v) = state.v.as_ref().filter(|_| lambda > 0.0) {
        for site in 0..e.window().n_sites() {
            let k = 0.5 * lambda * site_norm_sq(v, site);
            e.set(site, 0, e.get(site, 0) + k);
        }
    }
}

/// Keeps the candidate states that are stationary to rounding.
pub(crate) fn stationary_only(
    candidates: Vec<State>,
    rhs: impl Fn(&State) -> Result<State>,
) -> Vec<State> {
    candidates
        .into_iter()
        .filter(|s| {
            rhs(s)
                .map(|r| r.max_magnitude().0 <= 1e-12)
                .unwrap_or(false)
        })
        .collect()
}
