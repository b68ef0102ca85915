use std::sync::Arc;

use super::genfk::interaction_modulus;
use super::{dissipation, freeze_rim, stationary_only, Interaction};
use crate::eds::{balance_defect, Dynamics, EnergyTriple, LatticeEds, State};
use crate::error::{Error, Result};
use crate::lattice::{Field, LatticeWindow};

/// Flux assignment for chains with interactions beyond nearest neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiRangeFlux {
    /// `f(a) = -sum_g L^g_1(u(a), u(a+g)) u'(a)`: one term per site, pointwise
    /// (A5) with `b = |C| sum_g b^g`, but the balance only telescopes for
    /// `g = 1`.
    Verbatim,
    /// Every bond crossing the cut between `a` and `a+1` contributes the flux
    /// it carries; the balance holds exactly for every distance set.
    CrossingPair,
}

/// Scalar chain `u: Z -> R` with interactions `L^g` at distances `g in C`:
/// `u'(a) = -sum_g [L^g_2(u(a-g), u(a)) + L^g_1(u(a), u(a+g))]`.
#[derive(Clone)]
pub struct MultiRangeModel {
    window: Arc<LatticeWindow>,
    terms: Vec<(i64, Arc<dyn Interaction>)>,
    flux: MultiRangeFlux,
}

impl MultiRangeModel {
    pub fn new(window: &Arc<LatticeWindow>, terms: Vec<(i64, Arc<dyn Interaction>)>) -> Result<Self> {
        if window.dim() != 1 {
            return Err(Error::Argument("multi-range chains are one-dimensional".into()));
        }
        if terms.is_empty() {
            return Err(Error::Argument("distance set is empty".into()));
        }
        let mut seen = Vec::new();
        for (g, l) in &terms {
            if *g == 0 {
                return Err(Error::Argument("distance 0 is not an interaction".into()));
            }
            if seen.contains(g) {
                return Err(Error::Argument(format!("distance {g} listed twice")));
            }
            if g.unsigned_abs() as usize >= window.side() {
                return Err(Error::Argument(format!("distance {g} does not fit the window")));
            }
            if l.width() != 1 {
                return Err(Error::Argument("multi-range interactions must be scalar".into()));
            }
            seen.push(*g);
        }
        Ok(Self {
            window: Arc::clone(window),
            terms,
            flux: MultiRangeFlux::CrossingPair,
        })
    }

    pub fn with_flux(mut self, flux: MultiRangeFlux) -> Self {
        self.flux = flux;
        self
    }

    pub fn flux(&self) -> MultiRangeFlux {
        self.flux
    }

    pub fn distances(&self) -> Vec<i64> {
        self.terms.iter().map(|(g, _)| *g).collect()
    }

    /// Evaluates the balance defect of both flux assignments on `state` and
    /// returns the one with the smaller defect, with both defects.
    pub fn select_flux(&self, state: &State) -> Result<(MultiRangeFlux, f64, f64)> {
        let verbatim = balance_defect(&self.clone().with_flux(MultiRangeFlux::Verbatim), state)?.sup_norm();
        let crossing =
            balance_defect(&self.clone().with_flux(MultiRangeFlux::CrossingPair), state)?.sup_norm();
        let pick = if verbatim <= crossing {
            MultiRangeFlux::Verbatim
        } else {
            MultiRangeFlux::CrossingPair
        };
        Ok((pick, verbatim, crossing))
    }

    fn l1(l: &dyn Interaction, x: f64, y: f64) -> f64 {
        let mut g = [0.0];
        l.d1(&[x], &[y], &mut g);
        g[0]
    }

    fn l2(l: &dyn Interaction, x: f64, y: f64) -> f64 {
        let mut g = [0.0];
        l.d2(&[x], &[y], &mut g);
        g[0]
    }
}

impl Dynamics for MultiRangeModel {
    fn window(&self) -> &Arc<LatticeWindow> {
        &self.window
    }

    fn state_width(&self) -> usize {
        1
    }

    fn is_damped(&self) -> bool {
        false
    }

    fn rhs(&self, state: &State) -> Result<State> {
        self.check_state(state)?;
        let w = &self.window;
        let u = &state.u;
        let mut out = Field::zeros(w, 1);
        for site in 0..w.n_sites() {
            let x = u.get(site, 0);
            let mut acc = 0.0;
            for (g, l) in &self.terms {
                let before = u.get(w.offset(site, 0, -g), 0);
                let after = u.get(w.offset(site, 0, *g), 0);
                acc -= Self::l2(l.as_ref(), before, x) + Self::l1(l.as_ref(), x, after);
            }
            out.set(site, 0, acc);
        }
        freeze_rim(w, &mut out);
        Ok(State::gradient(out))
    }

    fn stiffness_bound(&self) -> Option<f64> {
        Some(4.0 * self.terms.iter().map(|(_, l)| l.curvature_bound()).sum::<f64>())
    }
}

impl LatticeEds for MultiRangeModel {
    fn name(&self) -> &'static str {
        "multirange"
    }

    fn triple(&self, state: &State) -> Result<EnergyTriple> {
        let udot = self.rhs(state)?.u;
        let w = &self.window;
        let u = &state.u;
        let n = w.n_sites();
        let mut e = Field::zeros(w, 1);
        for site in 0..n {
            let x = u.get(site, 0);
            let energy: f64 = self
                .terms
                .iter()
                .map(|(g, l)| l.value(&[u.get(w.offset(site, 0, -g), 0)], &[x]))
                .sum();
            e.set(site, 0, energy);
        }
        // bond[k][a] = -L^g_1(u(a), u(a+g)) u'(a) for the k-th distance.
        let bond: Vec<Vec<f64>> = self
            .terms
            .iter()
            .map(|(g, l)| {
                (0..n)
                    .map(|site| {
                        let after = u.get(w.offset(site, 0, *g), 0);
                        -Self::l1(l.as_ref(), u.get(site, 0), after) * udot.get(site, 0)
                    })
                    .collect()
            })
            .collect();
        let mut f = Field::zeros(w, 1);
        for site in 0..n {
            let mut acc = 0.0;
            for ((g, _), carried) in self.terms.iter().zip(&bond) {
                match self.flux {
                    MultiRangeFlux::Verbatim => acc += carried[site],
                    MultiRangeFlux::CrossingPair if *g > 0 => {
                        for k in 0..*g {
                            acc += carried[w.offset(site, 0, -k)];
                        }
                    }
                    MultiRangeFlux::CrossingPair => {
                        for k in 1..=-g {
                            acc -= carried[w.offset(site, 0, k)];
                        }
                    }
                }
            }
            f.set(site, 0, acc);
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
        let u = &state.u;
        let mut rate = Field::zeros(w, 1);
        for site in 0..w.n_sites() {
            let x = u.get(site, 0);
            let mut acc = 0.0;
            for (g, l) in &self.terms {
                let src = w.offset(site, 0, -g);
                let before = u.get(src, 0);
                acc += Self::l1(l.as_ref(), before, x) * udot.get(src, 0)
                    + Self::l2(l.as_ref(), before, x) * udot.get(site, 0);
            }
            rate.set(site, 0, acc);
        }
        Ok(rate)
    }

    /// `b = |C| sum_g b^g`.
    fn modulus(&self, energy_sup: f64) -> f64 {
        let total: f64 = self
            .terms
            .iter()
            .map(|(_, l)| interaction_modulus(l.as_ref(), energy_sup))
            .sum();
        self.terms.len() as f64 * total
    }

    fn known_equilibria(&self) -> Vec<State> {
        let candidates = [0.0, 0.5]
            .iter()
            .map(|&c| State::gradient(Field::constant(&self.window, 1, c)))
            .collect();
        stationary_only(candidates, |s| self.rhs(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;
    use crate::models::SpringInteraction;

    fn model(distances: &[i64]) -> MultiRangeModel {
        let w = LatticeWindow::new(1, 10, Boundary::Periodic, 0).unwrap();
        let terms = distances
            .iter()
            .enumerate()
            .map(|(i, &g)| {
                let l: Arc<dyn Interaction> =
                    Arc::new(SpringInteraction::new(1.0 + 0.3 * i as f64, 0.1, 0.05, 1));
                (g, l)
            })
            .collect();
        MultiRangeModel::new(&w, terms).unwrap()
    }

    #[test]
    fn nearest_neighbour_fluxes_agree() {
        let m = model(&[1]);
        let s = State::gradient(Field::random_uniform(m.window(), 1, -1.0, 1.0, 2));
        let a = m.clone().with_flux(MultiRangeFlux::Verbatim).triple(&s).unwrap();
        let b = m.triple(&s).unwrap();
        assert!(a.f.max_abs_diff(&b.f) < 1e-15);
    }

    #[test]
    fn crossing_pair_is_selected_for_long_range() {
        let m = model(&[1, 2, -3]);
        let s = State::gradient(Field::random_uniform(m.window(), 1, -1.0, 1.0, 4));
        let (pick, verbatim, crossing) = m.select_flux(&s).unwrap();
        assert_eq!(pick, MultiRangeFlux::CrossingPair);
        assert!(crossing < 1e-12);
        assert!(verbatim > 1e-6);
    }

    #[test]
    fn rejects_bad_distance_sets() {
        let w = LatticeWindow::new(1, 4, Boundary::Periodic, 0).unwrap();
        let l: Arc<dyn Interaction> = Arc::new(SpringInteraction::new(1.0, 0.0, 0.0, 1));
        assert!(MultiRangeModel::new(&w, vec![(0, l.clone())]).is_err());
        assert!(MultiRangeModel::new(&w, vec![(1, l.clone()), (1, l.clone())]).is_err());
        assert!(MultiRangeModel::new(&w, vec![]).is_err());
    }
}
