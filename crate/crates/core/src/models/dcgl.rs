use std::sync::Arc;

use super::{dissipation, freeze_rim, stationary_only};
use crate::eds::{Dynamics, EnergyTriple, LatticeEds, State};
use crate::error::{Error, Result};
use crate::lattice::{laplacian_at, Field, LatticeWindow};

/// Discrete complex Ginzburg-Landau equation in the rotating frame,
/// `v_t = (1 + i lambda)(Laplacian v + v - |v|^2 v)`, with `v` stored as a
/// width-2 real field `(re, im)`.
#[derive(Debug, Clone)]
pub struct DcglModel {
    window: Arc<LatticeWindow>,
    lambda: f64,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Argument(format!("cgl lambda must be positive, got {lambda}")));
    }
    Ok(())
}

impl DcglModel {
    pub fn new(window: &Arc<LatticeWindow>, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self {
            window: Arc::clone(window),
            lambda,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `G = Laplacian v + v - |v|^2 v`.
    pub fn residual(&self, v: &Field) -> Field {
        let w = &self.window;
        let mut g = Field::zeros(w, 2);
        for site in 0..w.n_sites() {
            let (re, im) = (v.get(site, 0), v.get(site, 1));
            let m = 1.0 - (re * re + im * im);
            g.set(site, 0, laplacian_at(v, site, 0) + m * re);
            g.set(site, 1, laplacian_at(v, site, 1) + m * im);
        }
        g
    }

    fn time_derivative(&self, g: &Field) -> Field {
        let mut out = Field::zeros(&self.window, 2);
        for site in 0..self.window.n_sites() {
            let (gr, gi) = (g.get(site, 0), g.get(site, 1));
            out.set(site, 0, gr - self.lambda * gi);
            out.set(site, 1, gi + self.lambda * gr);
        }
        freeze_rim(&self.window, &mut out);
        out
    }
}

impl Dynamics for DcglModel {
    fn window(&self) -> &Arc<LatticeWindow> {
        &self.window
    }

    fn state_width(&self) -> usize {
        2
    }

    fn is_damped(&self) -> bool {
        false
    }

    fn rhs(&self, state: &State) -> Result<State> {
        self.check_state(state)?;
        Ok(State::gradient(self.time_derivative(&self.residual(&state.u))))
    }

    fn stiffness_bound(&self) -> Option<f64> {
        Some((1.0 + self.lambda * self.lambda).sqrt() * (4.0 * self.window.dim() as f64 + 2.0))
    }
}

impl LatticeEds for DcglModel {
    fn name(&self) -> &'static str {
        "dcgl"
    }

    fn triple(&self, state: &State) -> Result<EnergyTriple> {
        self.check_state(state)?;
        let w = &self.window;
        let n = w.dim();
        let v = &state.u;
        let mut g = self.residual(v);
        freeze_rim(w, &mut g);
        let vt = self.time_derivative(&g);
        let mut e = Field::zeros(w, 1);
        let mut f = Field::zeros(w, n);
        for site in 0..w.n_sites() {
            let (re, im) = (v.get(site, 0), v.get(site, 1));
            let mut grad_sq = 0.0;
            for j in 0..n {
                let back = w.backward(site, j);
                let fwd = w.forward(site, j);
                for c in 0..2 {
                    let b = v.get(site, c) - v.get(back, c);
                    grad_sq += b * b;
                }
                let flux = vt.get(site, 0) * (v.get(fwd, 0) - re) + vt.get(site, 1) * (v.get(fwd, 1) - im);
                f.set(site, j, flux);
            }
            let m = 1.0 - (re * re + im * im);
            e.set(site, 0, 0.5 * grad_sq + 0.25 * m * m);
        }
        Ok(EnergyTriple {
            e,
            d: dissipation(&g),
            f,
        })
    }

    fn energy_rate(&self, state: &State) -> Result<Field> {
        let vt = self.rhs(state)?.u;
        let w = &self.window;
        let v = &state.u;
        let mut rate = Field::zeros(w, 1);
        for site in 0..w.n_sites() {
            let (re, im) = (v.get(site, 0), v.get(site, 1));
            let m = 1.0 - (re * re + im * im);
            let mut acc = -m * (re * vt.get(site, 0) + im * vt.get(site, 1));
            for j in 0..w.dim() {
                let back = w.backward(site, j);
                for c in 0..2 {
                    acc += (v.get(site, c) - v.get(back, c)) * (vt.get(site, c) - vt.get(back, c));
                }
            }
            rate.set(site, 0, acc);
        }
        Ok(rate)
    }

    /// `|f|^2 <= |v_t|^2 |grad* v|^2 <= (1 + lambda^2) d 2N ||e||`.
    fn modulus(&self, energy_sup: f64) -> f64 {
        2.0 * self.window.dim() as f64 * (1.0 + self.lambda * self.lambda) * energy_sup
    }

    fn known_equilibria(&self) -> Vec<State> {
        let candidates = [(1.0, 0.0), (0.0, 1.0), (0.0, 0.0)]
            .iter()
            .map(|&(re, im)| {
                State::gradient(Field::from_fn(&self.window, 2, |_, out| {
                    out[0] = re;
                    out[1] = im;
                }))
            })
            .collect();
        stationary_only(candidates, |s| self.rhs(s))
    }
}

/// The untransformed equation
/// `u_t = (1 + i lambda) Laplacian u + u - (1 + i lambda)|u|^2 u`, related to
/// the rotating frame by `v = u e^{i lambda t}`.
#[derive(Debug, Clone)]
pub struct DcglOriginalFrame {
    window: Arc<LatticeWindow>,
    lambda: f64,
}

impl DcglOriginalFrame {
    pub fn new(window: &Arc<LatticeWindow>, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self {
            window: Arc::clone(window),
            lambda,
        })
    }

    /// `v = u e^{i lambda t}`.
    pub fn to_rotating(&self, u: &Field, t: f64) -> Field {
        let (c, s) = ((self.lambda * t).cos(), (self.lambda * t).sin());
        let mut v = u.clone();
        for site in 0..self.window.n_sites() {
            let (re, im) = (u.get(site, 0), u.get(site, 1));
            v.set(site, 0, re * c - im * s);
            v.set(site, 1, re * s + im * c);
        }
        v
    }
}

impl Dynamics for DcglOriginalFrame {
    fn window(&self) -> &Arc<LatticeWindow> {
        &self.window
    }

    fn state_width(&self) -> usize {
        2
    }

    fn is_damped(&self) -> bool {
        false
    }

    fn rhs(&self, state: &State) -> Result<State> {
        self.check_state(state)?;
        let w = &self.window;
        let u = &state.u;
        let mut out = Field::zeros(w, 2);
        for site in 0..w.n_sites() {
            let (re, im) = (u.get(site, 0), u.get(site, 1));
            let m = re * re + im * im;
            // (1 + i lambda)(Laplacian u - |u|^2 u) + u
            let zr = laplacian_at(u, site, 0) - m * re;
            let zi = laplacian_at(u, site, 1) - m * im;
            out.set(site, 0, zr - self.lambda * zi + re);
            out.set(site, 1, zi + self.lambda * zr + im);
        }
        freeze_rim(w, &mut out);
        Ok(State::gradient(out))
    }

    fn stiffness_bound(&self) -> Option<f64> {
        Some((1.0 + self.lambda * self.lambda).sqrt() * (4.0 * self.window.dim() as f64 + 2.0) + 1.0)
    }
}
