//! Fixed-step explicit time integration.

use std::fmt;
use std::str::FromStr;

use crate::eds::{Dynamics, EnergyTriple, LatticeEds, State};
use crate::error::{Error, Result};

/// Values beyond this magnitude abort a run.
pub const BLOW_UP_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Rk4,
    Euler,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Rk4 => "rk4",
            Scheme::Euler => "euler",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Scheme::Rk4),
            "euler" => Ok(Scheme::Euler),
            other => Err(Error::Parse(format!("unknown scheme '{other}' (expected rk4 or euler)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSpec {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    /// Steps between stored samples.
    pub sample_every: usize,
}

impl IntegratorSpec {
    pub fn new(scheme: Scheme, dt: f64, t_end: f64, sample_every: usize) -> Result<Self> {
        let spec = Self {
            scheme,
            dt,
            t_end,
            sample_every,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn rk4(dt: f64, t_end: f64) -> Result<Self> {
        Self::new(Scheme::Rk4, dt, t_end, 1)
    }

    pub fn with_sample_every(mut self, sample_every: usize) -> Result<Self> {
        self.sample_every = sample_every;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Argument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::Argument(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if self.sample_every == 0 {
            return Err(Error::Argument("sample_every must be >= 1".into()));
        }
        let steps = self.t_end / self.dt;
        if (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
            return Err(Error::Argument(format!(
                "t_end = {} is not a whole number of steps of dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Time of step `k`; computed as `k dt` so that it does not drift.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    fn is_sample(&self, k: usize) -> bool {
        k % self.sample_every == 0 || k == self.n_steps()
    }
}

/// Sampled orbit of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub spec: IntegratorSpec,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("a trajectory holds at least the initial sample")
    }

    /// Energy triples of every sample.
    pub fn triples(&self, model: &dyn LatticeEds) -> Result<Vec<EnergyTriple>> {
        self.states.iter().map(|s| model.triple(s)).collect()
    }
}

fn check_finite(state: &State, time: f64) -> Result<()> {
    let (magnitude, site) = state.max_magnitude();
    if !magnitude.is_finite() || magnitude > BLOW_UP_THRESHOLD {
        return Err(Error::BlowUp {
            time,
            site: state.window().coords(site),
            magnitude,
        });
    }
    Ok(())
}

/// One explicit step from `time` to `time + dt`.
pub fn step(model: &dyn Dynamics, state: &State, dt: f64, scheme: Scheme, time: f64) -> Result<State> {
    if !(dt > 0.0) {
        return Err(Error::Argument(format!("dt must be positive, got {dt}")));
    }
    let next = match scheme {
        Scheme::Euler => state.axpy(dt, &model.rhs(state)?)?,
        Scheme::Rk4 => {
            let k1 = model.rhs(state)?;
            let k2 = model.rhs(&state.axpy(0.5 * dt, &k1)?)?;
            let k3 = model.rhs(&state.axpy(0.5 * dt, &k2)?)?;
            let k4 = model.rhs(&state.axpy(dt, &k3)?)?;
            let mut incr = k1;
            let combine = |acc: &mut crate::lattice::Field, a: &crate::lattice::Field, b: &crate::lattice::Field, c: &crate::lattice::Field| {
                for (((x, &p), &q), &r) in acc.values_mut().iter_mut().zip(a.values()).zip(b.values()).zip(c.values()) {
                    *x += 2.0 * p + 2.0 * q + r;
                }
            };
            combine(&mut incr.u, &k2.u, &k3.u, &k4.u);
            if let (Some(acc), Some(a), Some(b), Some(c)) = (incr.v.as_mut(), &k2.v, &k3.v, &k4.v) {
                combine(acc, a, b, c);
            }
            state.axpy(dt / 6.0, &incr)?
        }
    };
    check_finite(&next, time + dt)?;
    Ok(next)
}

/// Warning text when `dt` exceeds the explicit stability ceiling `2 / rho`.
pub fn stiffness_warning(model: &dyn Dynamics, dt: f64) -> Option<String> {
    let rho = model.stiffness_bound()?;
    let ceiling = 2.0 / rho;
    (dt > ceiling).then(|| format!("dt = {dt} exceeds the explicit stability ceiling {ceiling:.4e}"))
}

/// Integrates to `t_end`, calling `observer(k, t, state)` on every sampled
/// step, and returns the final state and any warnings.
pub fn integrate(
    model: &dyn Dynamics,
    initial: &State,
    spec: &IntegratorSpec,
    mut observer: impl FnMut(usize, f64, &State) -> Result<()>,
) -> Result<(State, Vec<String>)> {
    spec.validate()?;
    model.check_state(initial)?;
    check_finite(initial, 0.0)?;
    let warnings: Vec<String> = stiffness_warning(model, spec.dt).into_iter().collect();
    let mut state = initial.clone();
    observer(0, 0.0, &state)?;
    for k in 1..=spec.n_steps() {
        state = step(model, &state, spec.dt, spec.scheme, spec.time(k - 1))?;
        if spec.is_sample(k) {
            observer(k, spec.time(k), &state)?;
        }
    }
    Ok((state, warnings))
}

/// Integrates and stores every sample.
pub fn run(model: &dyn Dynamics, initial: &State, spec: &IntegratorSpec) -> Result<Trajectory> {
    run_with(model, initial, spec, |_, _| Ok(()))
}

/// As [`run`], also passing each stored sample to `hook`.
pub fn run_with(
    model: &dyn Dynamics,
    initial: &State,
    spec: &IntegratorSpec,
    mut hook: impl FnMut(f64, &State) -> Result<()>,
) -> Result<Trajectory> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    let (_, warnings) = integrate(model, initial, spec, |_, t, s| {
        hook(t, s)?;
        times.push(t);
        states.push(s.clone());
        Ok(())
    })?;
    Ok(Trajectory {
        times,
        states,
        spec: *spec,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::lattice::{Boundary, Field, LatticeWindow};
    use crate::models::{CosinePotential, FkModel};

    /// `du/dt = -u` on every site.
    struct Decay(Arc<LatticeWindow>);

    impl Dynamics for Decay {
        fn window(&self) -> &Arc<LatticeWindow> {
            &self.0
        }
        fn state_width(&self) -> usize {
            1
        }
        fn is_damped(&self) -> bool {
            false
        }
        fn rhs(&self, state: &State) -> Result<State> {
            Ok(State::gradient(state.u.map(|x| -x)))
        }
    }

    /// `du/dt = u^2`, which blows up at `t = 1 / u0`.
    struct Riccati(Arc<LatticeWindow>);

    impl Dynamics for Riccati {
        fn window(&self) -> &Arc<LatticeWindow> {
            &self.0
        }
        fn state_width(&self) -> usize {
            1
        }
        fn is_damped(&self) -> bool {
            false
        }
        fn rhs(&self, state: &State) -> Result<State> {
            Ok(State::gradient(state.u.map(|x| x * x)))
        }
    }

    fn point() -> Arc<LatticeWindow> {
        LatticeWindow::new(1, 1, Boundary::Periodic, 0).unwrap()
    }

    #[test]
    fn rk4_single_step_matches_exponential() {
        let w = point();
        let s = State::gradient(Field::constant(&w, 1, 1.0));
        let h: f64 = 0.1;
        let next = step(&Decay(w.clone()), &s, h, Scheme::Rk4, 0.0).unwrap();
        let taylor = 1.0 - h + h * h / 2.0 - h.powi(3) / 6.0 + h.powi(4) / 24.0;
        assert!((next.u.get(0, 0) - taylor).abs() < 1e-15);
        assert!((next.u.get(0, 0) - 0.90483741803596).abs() < 1e-7);

        let spec = IntegratorSpec::rk4(1e-3, 0.1).unwrap();
        let traj = run(&Decay(w), &s, &spec).unwrap();
        assert!((traj.last().u.get(0, 0) - 0.90483741803596).abs() < 1e-10);
    }

    #[test]
    fn euler_single_step() {
        let w = point();
        let s = State::gradient(Field::constant(&w, 1, 1.0));
        let next = step(&Decay(w), &s, 0.1, Scheme::Euler, 0.0).unwrap();
        assert!((next.u.get(0, 0) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn zero_horizon_keeps_only_initial_sample() {
        let w = point();
        let s = State::gradient(Field::constant(&w, 1, 1.0));
        let spec = IntegratorSpec::rk4(0.1, 0.0).unwrap();
        let traj = run(&Decay(w), &s, &spec).unwrap();
        assert_eq!(traj.times, vec![0.0]);
        assert_eq!(traj.states, vec![s]);
    }

    #[test]
    fn samples_include_endpoints() {
        let w = point();
        let s = State::gradient(Field::constant(&w, 1, 1.0));
        let spec = IntegratorSpec::new(Scheme::Rk4, 0.1, 1.0, 3).unwrap();
        let traj = run(&Decay(w), &s, &spec).unwrap();
        let expected: Vec<f64> = [0, 3, 6, 9, 10].iter().map(|&k| k as f64 * 0.1).collect();
        assert_eq!(traj.times, expected);
    }

    #[test]
    fn blow_up_reports_time_and_site() {
        let w = point();
        let s = State::gradient(Field::constant(&w, 1, 1.0));
        let spec = IntegratorSpec::rk4(0.01, 2.0).unwrap();
        match run(&Riccati(w), &s, &spec) {
            Err(Error::BlowUp { time, site, .. }) => {
                assert!(time > 0.9 && time < 1.1, "time {time}");
                assert_eq!(site.len(), 1);
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(IntegratorSpec::rk4(0.0, 1.0).is_err());
        assert!(IntegratorSpec::rk4(0.3, 1.0).is_err());
        assert!(IntegratorSpec::new(Scheme::Euler, 0.1, 1.0, 0).is_err());
        assert_eq!("euler".parse::<Scheme>().unwrap(), Scheme::Euler);
        assert!("leapfrog".parse::<Scheme>().is_err());
    }

    #[test]
    fn stiffness_warning_above_ceiling() {
        let w = LatticeWindow::new(1, 4, Boundary::Periodic, 0).unwrap();
        let model = FkModel::gradient(&w, Arc::new(CosinePotential::unit_curvature()));
        // ceiling 2 / (4 + 1) = 0.4
        assert!(stiffness_warning(&model, 0.5).is_some());
        assert!(stiffness_warning(&model, 0.3).is_none());
    }
}
