use std::sync::Arc;

use super::{dissipation, freeze_rim, stationary_only, Interaction};
use crate::eds::{estimate_b, Dynamics, EnergyTriple, LatticeEds, State};
use crate::error::{Error, Result};
use crate::lattice::{Field, LatticeWindow};

/// Grid step for the modulus when the interaction has no closed form.
const FALLBACK_RESOLUTION: f64 = 1e-2;

/// Modulus of one interaction: the closed form if available, else the grid
/// estimate.
pub(crate) fn interaction_modulus(interaction: &dyn Interaction, level: f64) -> f64 {
    interaction.modulus(level).unwrap_or_else(|| {
        estimate_b(interaction, level, FALLBACK_RESOLUTION)
            .map(|b| b.value)
            .unwrap_or(f64::INFINITY)
    })
}

/// Chain `u: Z -> R^M` under the gradient dynamics
/// `u'(a) = -L_2(u(a-1), u(a)) - L_1(u(a), u(a+1))`.
#[derive(Clone)]
pub struct GeneralizedFkModel {
    window: Arc<LatticeWindow>,
    interaction: Arc<dyn Interaction>,
}

impl GeneralizedFkModel {
    pub fn new(window: &Arc<LatticeWindow>, interaction: Arc<dyn Interaction>) -> Result<Self> {
        if window.dim() != 1 {
            return Err(Error::Argument(format!(
                "generalized chains are one-dimensional, got dimension {}",
                window.dim()
            )));
        }
        Ok(Self {
            window: Arc::clone(window),
            interaction,
        })
    }

    pub fn interaction(&self) -> &dyn Interaction {
        self.interaction.as_ref()
    }
}

impl Dynamics for GeneralizedFkModel {
    fn window(&self) -> &Arc<LatticeWindow> {
        &self.window
    }

    fn state_width(&self) -> usize {
        self.interaction.width()
    }

    fn is_damped(&self) -> bool {
        false
    }

    fn rhs(&self, state: &State) -> Result<State> {
        self.check_state(state)?;
        let w = &self.window;
        let m = self.state_width();
        let u = &state.u;
        let mut out = Field::zeros(w, m);
        let (mut a, mut b) = (vec![0.0; m], vec![0.0; m]);
        for site in 0..w.n_sites() {
            let prev = w.backward(site, 0);
            let next = w.forward(site, 0);
            self.interaction.d2(u.site(prev), u.site(site), &mut a);
            self.interaction.d1(u.site(site), u.site(next), &mut b);
            for c in 0..m {
                out.set(site, c, -a[c] - b[c]);
            }
        }
        freeze_rim(w, &mut out);
        Ok(State::gradient(out))
    }

    fn stiffness_bound(&self) -> Option<f64> {
        Some(4.0 * self.interaction.curvature_bound())
    }
}

impl LatticeEds for GeneralizedFkModel {
    fn name(&self) -> &'static str {
        "genfk"
    }

    fn triple(&self, state: &State) -> Result<EnergyTriple> {
        let udot = self.rhs(state)?.u;
        let w = &self.window;
        let m = self.state_width();
        let u = &state.u;
        let mut e = Field::zeros(w, 1);
        let mut f = Field::zeros(w, 1);
        let mut g = vec![0.0; m];
        for site in 0..w.n_sites() {
            let prev = w.backward(site, 0);
            let next = w.forward(site, 0);
            e.set(site, 0, self.interaction.value(u.site(prev), u.site(site)));
            self.interaction.d1(u.site(site), u.site(next), &mut g);
            let flux: f64 = g.iter().zip(udot.site(site)).map(|(a, b)| -a * b).sum();
            f.set(site, 0, flux);
        }
        Ok(EnergyTriple {
            e,
            d: dissipation(&udot),
            f,
        })
    }

    fn energy_rate(&self, state: &State) -> Result<Field> {
        let udot = self.rhs(state)?.u;
        let w = &self.window;
        let m = self.state_width();
        let u = &state.u;
        let mut rate = Field::zeros(w, 1);
        let (mut a, mut b) = (vec![0.0; m], vec![0.0; m]);
        for site in 0..w.n_sites() {
            let prev = w.backward(site, 0);
            self.interaction.d1(u.site(prev), u.site(site), &mut a);
            self.interaction.d2(u.site(prev), u.site(site), &mut b);
            let r: f64 = (0..m)
                .map(|c| a[c] * udot.get(prev, c) + b[c] * udot.get(site, c))
                .sum();
            rate.set(site, 0, r);
        }
        Ok(rate)
    }

    /// `|f(a)|^2 <= |L_1(u(a), u(a+1))|^2 d(a)` and `L(u(a), u(a+1)) = e(a+1)`.
    fn modulus(&self, energy_sup: f64) -> f64 {
        interaction_modulus(self.interaction.as_ref(), energy_sup)
    }

    fn known_equilibria(&self) -> Vec<State> {
        let m = self.state_width();
        let candidates = [0.0, 0.5]
            .iter()
            .map(|&c| State::gradient(Field::constant(&self.window, m, c)))
            .collect();
        stationary_only(candidates, |s| self.rhs(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eds::balance_defect;
    use crate::lattice::Boundary;
    use crate::models::SpringInteraction;

    #[test]
    fn rejects_higher_dimensions() {
        let w = LatticeWindow::new(2, 3, Boundary::Periodic, 0).unwrap();
        let l = Arc::new(SpringInteraction::new(1.0, 0.0, 0.0, 1));
        assert!(GeneralizedFkModel::new(&w, l).is_err());
    }

    #[test]
    fn vector_chain_balances() {
        let w = LatticeWindow::new(1, 8, Boundary::Periodic, 0).unwrap();
        let l = Arc::new(SpringInteraction::new(1.1, 0.25, 0.07, 3));
        let model = GeneralizedFkModel::new(&w, l).unwrap();
        let s = State::gradient(Field::random_uniform(&w, 3, -2.0, 2.0, 9));
        assert!(balance_defect(&model, &s).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn zero_is_an_equilibrium() {
        let w = LatticeWindow::new(1, 4, Boundary::Periodic, 0).unwrap();
        let l = Arc::new(SpringInteraction::new(1.0, 0.3, 0.1, 2));
        let model = GeneralizedFkModel::new(&w, l).unwrap();
        let eq = model.known_equilibria();
        assert!(!eq.is_empty());
        for s in eq {
            assert!(model.rhs(&s).unwrap().max_magnitude().0 <= 1e-12);
        }
    }
}
