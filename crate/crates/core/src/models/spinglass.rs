use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    add_kinetic, assemble_rhs, check_damping, damped_stiffness, dissipation, kinetic_rate,
    stationary_only, velocity,
};
use crate::eds::{Dynamics, EnergyTriple, LatticeEds, State};
use crate::error::{Error, Result};
use crate::lattice::{Field, LatticeWindow};

/// Bond type: `+` favours equal signs, `-` opposite signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondSign {
    Plus,
    Minus,
}

impl BondSign {
    /// `L(x, y)`: `mu/2 (x - y)^2` or `mu/2 (x + y)^2`.
    #[inline]
    pub fn value(self, mu: f64, x: f64, y: f64) -> f64 {
        let s = self.combine(x, y);
        0.5 * mu * s * s
    }

    /// `L_1(x, y)`; the interactions are symmetric, so `L_2(x, y) = L_1(y, x)`.
    #[inline]
    pub fn d1(self, mu: f64, x: f64, y: f64) -> f64 {
        mu * self.combine(x, y)
    }

    #[inline]
    fn combine(self, x: f64, y: f64) -> f64 {
        match self {
            BondSign::Plus => x - y,
            BondSign::Minus => x + y,
        }
    }
}

/// Symmetric bond assignment: one sign per `(site, +axis)`, read from both
/// ends so that `S(a, -e_j) = S(a - e_j, e_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bonds {
    dim: usize,
    signs: Vec<BondSign>,
}

impl Bonds {
    pub fn all_plus(window: &LatticeWindow) -> Self {
        Self {
            dim: window.dim(),
            signs: vec![BondSign::Plus; window.n_sites() * window.dim()],
        }
    }

    /// Independent signs, `-` with probability `p_minus`, drawn in
    /// lexicographic `(site, axis)` order.
    pub fn random(window: &LatticeWindow, p_minus: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let signs = (0..window.n_sites() * window.dim())
            .map(|_| {
                if rng.gen::<f64>() < p_minus {
                    BondSign::Minus
                } else {
                    BondSign::Plus
                }
            })
            .collect();
        Self {
            dim: window.dim(),
            signs,
        }
    }

    /// `S(a, +e_axis)`.
    #[inline]
    pub fn forward(&self, site: usize, axis: usize) -> BondSign {
        self.signs[site * self.dim + axis]
    }

    /// `S(a, -e_axis)`.
    #[inline]
    pub fn backward(&self, window: &LatticeWindow, site: usize, axis: usize) -> BondSign {
        self.forward(window.backward(site, axis), axis)
    }

    pub fn minus_count(&self) -> usize {
        self.signs.iter().filter(|&&s| s == BondSign::Minus).count()
    }
}

/// How bond energies are attributed to sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergySplit {
    /// Each bond's energy sits on its forward end; the flux is pointwise
    /// bounded by the dissipation.
    Backward,
    /// Half of each bond's energy on either end.
    Symmetric,
}

/// Bistable lattice with random bonds:
/// `lambda u'' + u' = -sum_{+-e_j} L_1^S(u(a), u(a + e)) + u - u^3`.
#[derive(Debug, Clone)]
pub struct SpinGlassModel {
    window: Arc<LatticeWindow>,
    lambda: f64,
    mu: f64,
    bonds: Bonds,
    split: EnergySplit,
}

/// `V(x) = x^4/4 - x^2/2 + 1/4`.
#[inline]
pub(crate) fn double_well(x: f64) -> f64 {
    let s = x * x - 1.0;
    0.25 * s * s
}

#[inline]
pub(crate) fn double_well_slope(x: f64) -> f64 {
    x * x * x - x
}

impl SpinGlassModel {
    pub fn new(window: &Arc<LatticeWindow>, lambda: f64, mu: f64, bonds: Bonds) -> Result<Self> {
        check_damping(lambda)?;
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::Argument(format!("coupling mu must be positive, got {mu}")));
        }
        if bonds.dim != window.dim() || bonds.signs.len() != window.n_sites() * window.dim() {
            return Err(Error::Argument("bond assignment does not match the window".into()));
        }
        Ok(Self {
            window: Arc::clone(window),
            lambda,
            mu,
            bonds,
            split: EnergySplit::Backward,
        })
    }

    pub fn with_split(mut self, split: EnergySplit) -> Self {
        self.split = split;
        self
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn bonds(&self) -> &Bonds {
        &self.bonds
    }

    pub fn state(&self, u: Field) -> State {
        if self.lambda > 0.0 {
            let v = Field::zeros(u.window(), 1);
            State::damped(u, v)
        } else {
            State::gradient(u)
        }
    }

    /// `-sum L_1 + u - u^3`.
    pub fn force(&self, u: &Field) -> Field {
        let w = &self.window;
        let mut out = Field::zeros(w, 1);
        for site in 0..w.n_sites() {
            let x = u.get(site, 0);
            let mut acc = 0.0;
            for axis in 0..w.dim() {
                let fwd = w.forward(site, axis);
                let back = w.backward(site, axis);
                acc += self.bonds.forward(site, axis).d1(self.mu, x, u.get(fwd, 0));
                acc += self.bonds.forward(back, axis).d1(self.mu, x, u.get(back, 0));
            }
            out.set(site, 0, -acc - double_well_slope(x));
        }
        out
    }
}

impl Dynamics for SpinGlassModel {
    fn window(&self) -> &Arc<LatticeWindow> {
        &self.window
    }

    fn state_width(&self) -> usize {
        1
    }

    fn is_damped(&self) -> bool {
        self.lambda > 0.0
    }

    fn rhs(&self, state: &State) -> Result<State> {
        self.check_state(state)?;
        assemble_rhs(&self.window, self.lambda, state, self.force(&state.u))
    }

    fn stiffness_bound(&self) -> Option<f64> {
        let k = 4.0 * self.mu * self.window.dim() as f64 + 2.0;
        Some(damped_stiffness(self.lambda, k))
    }
}

impl LatticeEds for SpinGlassModel {
    fn name(&self) -> &'static str {
        "spinglass"
    }

    fn triple(&self, state: &State) -> Result<EnergyTriple> {
        let rhs = self.rhs(state)?;
        let udot = velocity(self.lambda, state, &rhs);
        let w = &self.window;
        let n = w.dim();
        let u = &state.u;
        let mu = self.mu;
        let mut e = Field::zeros(w, 1);
        let mut f = Field::zeros(w, n);
        for site in 0..w.n_sites() {
            let x = u.get(site, 0);
            let mut bond_energy = 0.0;
            for axis in 0..n {
                let fwd = w.forward(site, axis);
                let back = w.backward(site, axis);
                let ahead = self.bonds.forward(site, axis);
                let behind = self.bonds.forward(back, axis);
                let (y_fwd, y_back) = (u.get(fwd, 0), u.get(back, 0));
                match self.split {
                    EnergySplit::Backward => {
                        bond_energy += behind.value(mu, y_back, x);
                        f.set(site, axis, -ahead.d1(mu, x, y_fwd) * udot.get(site, 0));
                    }
                    EnergySplit::Symmetric => {
                        bond_energy += 0.5 * (ahead.value(mu, x, y_fwd) + behind.value(mu, x, y_back));
                        let flux = 0.5
                            * (ahead.d1(mu, y_fwd, x) * udot.get(fwd, 0)
                                - ahead.d1(mu, x, y_fwd) * udot.get(site, 0));
                        f.set(site, axis, flux);
                    }
                }
            }
            e.set(site, 0, bond_energy + double_well(x));
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
        let u = &state.u;
        let mu = self.mu;
        let mut rate = kinetic_rate(self.lambda, state, &rhs);
        for site in 0..w.n_sites() {
            let x = u.get(site, 0);
            let xd = udot.get(site, 0);
            let mut acc = double_well_slope(x) * xd;
            for axis in 0..w.dim() {
                let fwd = w.forward(site, axis);
                let back = w.backward(site, axis);
                let ahead = self.bonds.forward(site, axis);
                let behind = self.bonds.forward(back, axis);
                let (y_fwd, y_back) = (u.get(fwd, 0), u.get(back, 0));
                let (yd_fwd, yd_back) = (udot.get(fwd, 0), udot.get(back, 0));
                acc += match self.split {
                    EnergySplit::Backward => {
                        behind.d1(mu, y_back, x) * yd_back + behind.d1(mu, x, y_back) * xd
                    }
                    EnergySplit::Symmetric => {
                        0.5 * (ahead.d1(mu, x, y_fwd) * xd
                            + ahead.d1(mu, y_fwd, x) * yd_fwd
                            + behind.d1(mu, x, y_back) * xd
                            + behind.d1(mu, y_back, x) * yd_back)
                    }
                };
            }
            rate.set(site, 0, rate.get(site, 0) + acc);
        }
        Ok(rate)
    }

    /// `L_1^2 = 2 mu L`, and each bond energy is bounded by `||e||` (twice
    /// that under the symmetric split).
    fn modulus(&self, energy_sup: f64) -> f64 {
        let per_bond = match self.split {
            EnergySplit::Backward => energy_sup,
            EnergySplit::Symmetric => 2.0 * energy_sup,
        };
        2.0 * self.mu * self.window.dim() as f64 * per_bond
    }

    fn known_equilibria(&self) -> Vec<State> {
        let candidates = [-1.0, 0.0, 1.0]
            .iter()
            .map(|&c| self.state(Field::constant(&self.window, 1, c)))
            .collect();
        stationary_only(candidates, |s| self.rhs(s))
    }
}
