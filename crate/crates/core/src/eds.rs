//! The lattice extended-dissipative-system contract.
//!
//! A model supplies, for every state, per-site energy `e`, dissipation `d`
//! and flux `f` such that
//! - (A1) `e, d >= 0`,
//! - (A3) `d == 0` implies the state is stationary,
//! - (A4) `de/dt = -d + div f` with the backward divergence,
//! - (A5) `|f|^2 <= b(||e||_inf) d` for a non-decreasing modulus `b`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{cube_sites, div, CubeSpec, DiffKind, Field, LatticeWindow};
use crate::models::Interaction;

/// A lattice state: positions `u` and, for damped models, velocities `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Field,
    pub v: Option<Field>,
}

impl State {
    pub fn gradient(u: Field) -> Self {
        Self { u, v: None }
    }

    pub fn damped(u: Field, v: Field) -> Self {
        Self { u, v: Some(v) }
    }

    /// `self + scale * other`.
    pub fn axpy(&self, scale: f64, other: &State) -> Result<State> {
        let u = self.u.axpy(scale, &other.u)?;
        let v = match (&self.v, &other.v) {
            (Some(a), Some(b)) => Some(a.axpy(scale, b)?),
            (None, None) => None,
            _ => return Err(Error::Argument("mixing damped and gradient states".into())),
        };
        Ok(State { u, v })
    }

    pub fn window(&self) -> &Arc<LatticeWindow> {
        self.u.window()
    }

    /// Largest magnitude over all components and the site holding it.
    pub fn max_magnitude(&self) -> (f64, usize) {
        let mut best = (0.0_f64, 0usize);
        for field in std::iter::once(&self.u).chain(self.v.as_ref()) {
            let width = field.width();
            for (i, x) in field.values().iter().enumerate() {
                let m = if x.is_finite() { x.abs() } else { f64::INFINITY };
                if m > best.0 || (m.is_infinite() && best.0.is_finite()) {
                    best = (m, i / width);
                }
            }
        }
        best
    }
}

/// Per-site energy, dissipation (both width 1) and flux (width `N`).
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTriple {
    pub e: Field,
    pub d: Field,
    pub f: Field,
}

impl EnergyTriple {
    /// `||e||_inf` over the window.
    pub fn energy_sup(&self) -> f64 {
        self.e.sup_norm()
    }

    /// Smallest value of `e` and `d`; negative values violate (A1).
    pub fn min_energy_dissipation(&self) -> f64 {
        self.e
            .values()
            .iter()
            .chain(self.d.values())
            .fold(f64::INFINITY, |m, &x| m.min(x))
    }

    pub fn flux_sup_sq(&self) -> f64 {
        let sq = self.f.dot(&self.f).expect("flux has a consistent shape");
        sq.sup_norm()
    }
}

/// Right-hand side of a lattice dynamical system.
pub trait Dynamics: Send + Sync {
    fn window(&self) -> &Arc<LatticeWindow>;

    /// Per-site degrees of freedom `M` of the position field.
    fn state_width(&self) -> usize;

    /// Damped models evolve `(u, v = du/dt)`.
    fn is_damped(&self) -> bool;

    /// Time derivative of the state.
    fn rhs(&self, state: &State) -> Result<State>;

    /// Spectral bound of the linearized right-hand side, used only to warn
    /// about explicit step sizes that are likely unstable.
    fn stiffness_bound(&self) -> Option<f64> {
        None
    }

    fn check_state(&self, state: &State) -> Result<()> {
        if **state.u.window() != **self.window() || state.u.width() != self.state_width() {
            return Err(Error::Argument(format!(
                "state of width {} does not match model width {} on this window",
                state.u.width(),
                self.state_width()
            )));
        }
        match (&state.v, self.is_damped()) {
            (Some(v), true) if v.same_shape(&state.u) => Ok(()),
            (None, false) => Ok(()),
            (Some(_), true) => Err(Error::Argument("velocity shape does not match positions".into())),
            (None, true) => Err(Error::Argument("damped model requires a velocity field".into())),
            (Some(_), false) => Err(Error::Argument("gradient model takes no velocity field".into())),
        }
    }
}

/// The lattice EDS contract on top of the dynamics.
pub trait LatticeEds: Dynamics {
    fn name(&self) -> &'static str;

    /// Model-specific `(e, d, f)`.
    fn triple(&self, state: &State) -> Result<EnergyTriple>;

    /// `de/dt` by the chain rule through the right-hand side; an evaluation
    /// path independent of the flux.
    fn energy_rate(&self, state: &State) -> Result<Field>;

    /// Dissipation modulus `b` of (A5), evaluated at an energy level.
    fn modulus(&self, energy_sup: f64) -> f64;

    /// `beta = b(||e||_inf)` for one state.
    fn beta(&self, triple: &EnergyTriple) -> f64 {
        self.modulus(triple.energy_sup())
    }

    /// Reference equilibria; each satisfies `rhs == 0`.
    fn known_equilibria(&self) -> Vec<State>;
}

/// Evaluates the triple and checks its shapes against the model.
pub fn evaluate_triple(model: &dyn LatticeEds, state: &State) -> Result<EnergyTriple> {
    model.check_state(state)?;
    let triple = model.triple(state)?;
    let n = model.window().dim();
    if triple.e.width() != 1 || triple.d.width() != 1 || triple.f.width() != n {
        return Err(Error::Argument("model returned a malformed triple".into()));
    }
    Ok(triple)
}

/// Site-wise defect `de/dt - (-d + div f)` of the local energy balance.
pub fn balance_defect(model: &dyn LatticeEds, state: &State) -> Result<Field> {
    let triple = evaluate_triple(model, state)?;
    let rate = model.energy_rate(state)?;
    let div_f = div(&triple.f, DiffKind::Backward)?;
    let rhs = div_f.sub(&triple.d)?;
    rate.sub(&rhs)
}

/// `E(R) = sum_{C*(R)} e`.
pub fn windowed_energy(triple: &EnergyTriple, radius: i64) -> Result<f64> {
    let window = triple.e.window();
    if radius > window.max_diagnostic_radius() {
        return Err(Error::Domain(format!(
            "radius {radius} exceeds the diagnostic limit W - buffer = {}",
            window.max_diagnostic_radius()
        )));
    }
    let sites = cube_sites(window, CubeSpec::star(radius))?;
    Ok(triple.e.sum_over(&sites, 0))
}

/// `max_a (|f(a)|^2 - beta d(a))`; nonpositive when (A5) holds with `beta`.
pub fn check_a5(triple: &EnergyTriple, beta: f64) -> f64 {
    let n = triple.f.width();
    (0..triple.d.window().n_sites())
        .map(|site| {
            let f2: f64 = (0..n).map(|j| triple.f.get(site, j).powi(2)).sum();
            f2 - beta * triple.d.get(site, 0)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Grid estimate of the modulus `b = b1 o b2` for a scalar interaction,
/// together with the grid step used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusEstimate {
    pub value: f64,
    /// `b2(y)`: largest separation `|y - x|` with `L(x, y) <= level`.
    pub separation: f64,
    pub resolution: f64,
}

/// Estimates `b(y)` by grid search over one periodicity cell:
/// `b2(y) = sup {|b - a| : L(a, b) <= y}` and
/// `b1(x) = sup {L_1(a, b)^2 : |b - a| <= x}`.
pub fn estimate_b(interaction: &dyn Interaction, level: f64, resolution: f64) -> Result<ModulusEstimate> {
    if interaction.width() != 1 {
        return Err(Error::Argument(
            "grid modulus estimate supports scalar interactions only".into(),
        ));
    }
    if !(level >= 0.0) || !(resolution > 0.0 && resolution < 1.0) {
        return Err(Error::Argument(format!(
            "need level >= 0 and 0 < resolution < 1, got {level}, {resolution}"
        )));
    }
    let n_cell = (1.0 / resolution).round() as usize;
    let h = 1.0 / n_cell as f64;
    let cell = |i: usize| i as f64 * h;

    // b2: grow the search range until the sublevel set is closed off.
    let mut reach = 1.0_f64;
    let separation = loop {
        if reach > 1e6 {
            return Err(Error::GridExhausted(format!(
                "sublevel set {{L <= {level}}} not bounded within separation 1e6"
            )));
        }
        let n_delta = (reach / h).round() as i64;
        let mut best = 0.0_f64;
        let mut touches_edge = false;
        for i in 0..n_cell {
            let a = cell(i);
            for k in -n_delta..=n_delta {
                let delta = k as f64 * h;
                if interaction.value(&[a], &[a + delta]) <= level {
                    best = best.max(delta.abs());
                    if k.abs() == n_delta {
                        touches_edge = true;
                    }
                }
            }
        }
        if !touches_edge {
            break best;
        }
        reach *= 2.0;
    };

    // b1 at the separation bound, endpoints included.
    let n_delta = (separation / h).floor() as i64;
    let mut value = 0.0_f64;
    let mut grad = [0.0];
    for i in 0..n_cell {
        let a = cell(i);
        let mut probe = |delta: f64| {
            interaction.d1(&[a], &[a + delta], &mut grad);
            value = value.max(grad[0] * grad[0]);
        };
        for k in -n_delta..=n_delta {
            probe(k as f64 * h);
        }
        probe(separation);
        probe(-separation);
    }
    Ok(ModulusEstimate {
        value,
        separation,
        resolution: h,
    })
}
