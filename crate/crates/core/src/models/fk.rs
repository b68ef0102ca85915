use std::sync::Arc;

use super::{
    add_kinetic, assemble_rhs, check_damping, damped_stiffness, dissipation, kinetic_rate,
    stationary_only, velocity,
};
use crate::eds::{Dynamics, EnergyTriple, LatticeEds, State};
use crate::error::{Error, Result};
use crate::lattice::{laplacian_at, Field, LatticeWindow};

/// Periodic on-site potential `V: R^M -> R`, `V >= 0`.
pub trait SitePotential: Send + Sync + std::fmt::Debug {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    /// `sup |V''|`.
    fn curvature_bound(&self) -> f64;
}

/// `V(x) = K sum_j (1 - cos 2 pi x_j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosinePotential {
    pub k: f64,
}

impl CosinePotential {
    pub fn new(k: f64) -> Self {
        assert!(k >= 0.0, "potential amplitude must be nonnegative");
        Self { k }
    }

    /// The amplitude `1 / (4 pi^2)`, for which `V''(0) = 1`.
    pub fn unit_curvature() -> Self {
        Self::new(1.0 / (4.0 * std::f64::consts::PI.powi(2)))
    }
}

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

impl SitePotential for CosinePotential {
    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|&a| self.k * (1.0 - (TWO_PI * a).cos())).sum()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for (o, &a) in out.iter_mut().zip(x) {
            *o = self.k * TWO_PI * (TWO_PI * a).sin();
        }
    }

    fn curvature_bound(&self) -> f64 {
        self.k * TWO_PI * TWO_PI
    }
}

/// The `N`-dimensional Frenkel-Kontorova lattice with `u: Z^N -> R^N`:
/// `lambda u'' + u' = Laplacian u - grad V(u)`.
#[derive(Debug, Clone)]
pub struct FkModel {
    window: Arc<LatticeWindow>,
    lambda: f64,
    potential: Arc<dyn SitePotential>,
}

impl FkModel {
    /// Any `lambda >= 0`; zero selects the gradient dynamics.
    pub fn new(window: &Arc<LatticeWindow>, lambda: f64, potential: Arc<dyn SitePotential>) -> Result<Self> {
        check_damping(lambda)?;
        Ok(Self {
            window: Arc::clone(window),
            lambda,
            potential,
        })
    }

    pub fn gradient(window: &Arc<LatticeWindow>, potential: Arc<dyn SitePotential>) -> Self {
        Self::new(window, 0.0, potential).expect("zero damping is valid")
    }

    pub fn damped(window: &Arc<LatticeWindow>, lambda: f64, potential: Arc<dyn SitePotential>) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::Argument(format!(
                "the damped dynamics needs lambda > 0, got {lambda}"
            )));
        }
        Self::new(window, lambda, potential)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn potential(&self) -> &dyn SitePotential {
        self.potential.as_ref()
    }

    /// `Laplacian u - grad V(u)`.
    pub fn force(&self, u: &Field) -> Field {
        let m = u.width();
        let mut out = Field::zeros(&self.window, m);
        let mut grad = vec![0.0; m];
        for site in 0..self.window.n_sites() {
            self.potential.gradient(u.site(site), &mut grad);
            for c in 0..m {
                out.set(site, c, laplacian_at(u, site, c) - grad[c]);
            }
        }
        out
    }

    /// Initial state with the right shape: zero velocity when damped.
    pub fn state(&self, u: Field) -> State {
        if self.lambda > 0.0 {
            let v = Field::zeros(u.window(), u.width());
            State::damped(u, v)
        } else {
            State::gradient(u)
        }
    }
}

impl Dynamics for FkModel {
    fn window(&self) -> &Arc<LatticeWindow> {
        &self.window
    }

    fn state_width(&self) -> usize {
        self.window.dim()
    }

    fn is_damped(&self) -> bool {
        self.lambda > 0.0
    }

    fn rhs(&self, state: &State) -> Result<State> {
        self.check_state(state)?;
        assemble_rhs(&self.window, self.lambda, state, self.force(&state.u))
    }

    fn stiffness_bound(&self) -> Option<f64> {
        let k = 4.0 * self.window.dim() as f64 + self.potential.curvature_bound();
        Some(damped_stiffness(self.lambda, k))
    }
}

impl LatticeEds for FkModel {
    fn name(&self) -> &'static str {
        "fk"
    }

    fn triple(&self, state: &State) -> Result<EnergyTriple> {
        let rhs = self.rhs(state)?;
        let udot = velocity(self.lambda, state, &rhs);
        let w = &self.window;
        let n = w.dim();
        let u = &state.u;
        let mut e = Field::zeros(w, 1);
        let mut f = Field::zeros(w, n);
        for site in 0..w.n_sites() {
            let mut grad_sq = 0.0;
            for i in 0..n {
                let back = w.backward(site, i);
                let fwd = w.forward(site, i);
                let mut fi = 0.0;
                for j in 0..n {
                    let g = u.get(site, j) - u.get(back, j);
                    grad_sq += g * g;
                    fi += udot.get(site, j) * (u.get(fwd, j) - u.get(site, j));
                }
                f.set(site, i, fi);
            }
            e.set(site, 0, 0.5 * grad_sq + self.potential.value(u.site(site)));
        }
        add_kinetic(self.lambda, state, &mut e);
        Ok(EnergyTriple {
            e,
            d: dissipation(&udot),
            f,
        })
    }

    fn energy_rate(&self, state: &State) -> Result<Field> {
        let rhs = self.rhs(state)?;
        let udot = velocity(self.lambda, state, &rhs);
        let w = &self.window;
        let n = w.dim();
        let u = &state.u;
        let mut rate = kinetic_rate(self.lambda, state, &rhs);
        let mut grad = vec![0.0; n];
        for site in 0..w.n_sites() {
            self.potential.gradient(u.site(site), &mut grad);
            let mut acc: f64 = grad.iter().zip(udot.site(site)).map(|(a, b)| a * b).sum();
            for i in 0..n {
                let back = w.backward(site, i);
                for j in 0..n {
                    acc += (u.get(site, j) - u.get(back, j)) * (udot.get(site, j) - udot.get(back, j));
                }
            }
            rate.set(site, 0, rate.get(site, 0) + acc);
        }
        Ok(rate)
    }

    /// `|f|^2 <= |u'|^2 |grad* u|^2` and `|grad* u(a)|^2 <= sum_i 2 e(a + e_i)`.
    fn modulus(&self, energy_sup: f64) -> f64 {
        2.0 * self.window.dim() as f64 * energy_sup
    }

    fn known_equilibria(&self) -> Vec<State> {
        let n = self.window.dim();
        let candidates = [0.0, 1.0, -1.0]
            .iter()
            .map(|&c| self.state(Field::constant(&self.window, n, c)))
            .collect();
        stationary_only(candidates, |s| self.rhs(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eds::{balance_defect, evaluate_triple};
    use crate::lattice::Boundary;

    fn chain(radius: i64) -> Arc<LatticeWindow> {
        LatticeWindow::new(1, radius, Boundary::Periodic, 0).unwrap()
    }

    #[test]
    fn minimum_has_zero_triple() {
        let w = chain(6);
        let model = FkModel::gradient(&w, Arc::new(CosinePotential::unit_curvature()));
        let s = model.state(Field::constant(&w, 1, 2.0));
        let t = evaluate_triple(&model, &s).unwrap();
        assert!(t.e.sup_norm() < 1e-15 && t.d.sup_norm() < 1e-20 && t.f.sup_norm() < 1e-15);
    }

    #[test]
    fn free_linear_profile_is_stationary() {
        let w = LatticeWindow::new(1, 6, Boundary::Frozen, 0).unwrap();
        let model = FkModel::gradient(&w, Arc::new(CosinePotential::new(0.0)));
        let c = 0.3;
        let s = model.state(Field::from_fn(&w, 1, |a, out| out[0] = c * a[0] as f64));
        let t = evaluate_triple(&model, &s).unwrap();
        for site in 0..w.n_sites() {
            if !w.is_rim(site) {
                assert!((t.e.get(site, 0) - c * c / 2.0).abs() < 1e-15);
                assert_eq!(t.d.get(site, 0), 0.0);
            }
            assert_eq!(t.f.get(site, 0), 0.0);
        }
    }

    #[test]
    fn damped_requires_positive_lambda() {
        let w = chain(4);
        let p = Arc::new(CosinePotential::unit_curvature());
        assert!(FkModel::damped(&w, 0.0, p.clone()).is_err());
        assert!(FkModel::new(&w, -1.0, p).is_err());
    }

    #[test]
    fn damped_minimum_has_zero_energy() {
        let w = LatticeWindow::new(2, 3, Boundary::Periodic, 0).unwrap();
        let model = FkModel::damped(&w, 0.5, Arc::new(CosinePotential::unit_curvature())).unwrap();
        let s = model.state(Field::zeros(&w, 2));
        assert_eq!(evaluate_triple(&model, &s).unwrap().e.sup_norm(), 0.0);
        assert_eq!(model.known_equilibria().len(), 3);
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let w = LatticeWindow::new(2, 3, Boundary::Periodic, 0).unwrap();
        let model = FkModel::gradient(&w, Arc::new(CosinePotential::unit_curvature()));
        assert!(model.rhs(&State::gradient(Field::zeros(&w, 1))).is_err());
    }

    #[test]
    fn balance_holds_damped_three_d() {
        let w = LatticeWindow::new(3, 2, Boundary::Periodic, 0).unwrap();
        let model = FkModel::damped(&w, 0.7, Arc::new(CosinePotential::new(0.2))).unwrap();
        let s = State::damped(
            Field::random_uniform(&w, 3, -1.0, 1.0, 5),
            Field::random_uniform(&w, 3, -1.0, 1.0, 6),
        );
        assert!(balance_defect(&model, &s).unwrap().sup_norm() < 1e-12);
    }
}
