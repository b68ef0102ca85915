//! Coarsening of a bistable chain or plane from Bernoulli initial data.
//!
//! The dynamics run in the `+-1` frame of [`SpinGlassModel`] with all bonds
//! positive; statistics and the ordering cone use the `0/1` frame
//! `x = (u + 1) / 2`.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::eds::{Dynamics, State};
use crate::error::{Error, Result};
use crate::integrator::{integrate, IntegratorSpec, Scheme};
use crate::lattice::{Boundary, Field, LatticeWindow};
use crate::models::{Bonds, SpinGlassModel};

/// Cone violations above this abort a run.
pub const CONE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CoarseningConfig {
    pub dim: usize,
    pub radius: i64,
    pub lambda: f64,
    pub mu: f64,
    pub seed: u64,
    pub t_end: f64,
    pub dt: f64,
    pub scheme: Scheme,
    /// Time between droplet snapshots; `t = 0` and `t_end` are always taken.
    pub snapshot_every: f64,
    /// Hysteresis band `(low, high)` in the `0/1` frame.
    pub bands: (f64, f64),
}

impl Default for CoarseningConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            radius: 256,
            lambda: 0.0,
            mu: 1.0,
            seed: 42,
            t_end: 200.0,
            dt: 0.05,
            scheme: Scheme::Rk4,
            snapshot_every: 10.0,
            bands: (0.25, 0.75),
        }
    }
}

impl CoarseningConfig {
    /// Largest curvature of the site potential over the invariant box,
    /// `2 mu N + 2`.
    pub fn curvature_bound(&self) -> f64 {
        2.0 * self.mu * self.dim as f64 + 2.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.dim) {
            return Err(Error::Argument(format!("coarsening runs in 1 or 2 dimensions, got {}", self.dim)));
        }
        if !(self.lambda >= 0.0) || !(self.mu > 0.0) {
            return Err(Error::Argument("need lambda >= 0 and mu > 0".into()));
        }
        let b = self.curvature_bound();
        if 4.0 * self.lambda * b > 1.0 {
            return Err(Error::Argument(format!(
                "overdamping condition 4 lambda B <= 1 fails: lambda = {}, B = {b}",
                self.lambda
            )));
        }
        let (lo, hi) = self.bands;
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return Err(Error::Argument(format!("hysteresis bands must satisfy 0 < low < high < 1, got {:?}", self.bands)));
        }
        let steps = self.snapshot_every / self.dt;
        if !(self.snapshot_every > 0.0) || (steps - steps.round()).abs() > 1e-6 {
            return Err(Error::Argument("snapshot_every must be a positive multiple of dt".into()));
        }
        self.spec().map(|_| ())
    }

    pub fn window(&self) -> Result<Arc<LatticeWindow>> {
        LatticeWindow::new(self.dim, self.radius, Boundary::Periodic, 0)
    }

    pub fn model(&self) -> Result<SpinGlassModel> {
        let w = self.window()?;
        let bonds = Bonds::all_plus(&w);
        SpinGlassModel::new(&w, self.lambda, self.mu, bonds)
    }

    pub fn spec(&self) -> Result<IntegratorSpec> {
        IntegratorSpec::new(self.scheme, self.dt, self.t_end, 1)
    }

    fn snapshot_stride(&self) -> usize {
        ((self.snapshot_every / self.dt).round() as usize).max(1)
    }
}

/// A state in the `0/1` frame.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderingState {
    pub u: Field,
    /// Velocity, present for `lambda > 0`.
    pub v: Option<Field>,
}

impl OrderingState {
    pub fn from_polynomial(state: &State) -> Self {
        Self {
            u: state.u.map(|x| 0.5 * (x + 1.0)),
            v: state.v.as_ref().map(|v| v.map(|x| 0.5 * x)),
        }
    }

    pub fn to_polynomial(&self) -> State {
        let u = self.u.map(|x| 2.0 * x - 1.0);
        match &self.v {
            Some(v) => State::damped(u, v.map(|x| 2.0 * x)),
            None => State::gradient(u),
        }
    }

    /// The swap `u -> 1 - u`, `v -> -v`.
    pub fn reflect(&self) -> Self {
        Self {
            u: self.u.map(|x| 1.0 - x),
            v: self.v.as_ref().map(|v| v.map(|x| -x)),
        }
    }

    /// Largest excursion outside `0 <= u <= 1` and `0 <= 2 lambda v + u <= 1`,
    /// with the offending site.
    pub fn cone_excess(&self, lambda: f64) -> (f64, usize) {
        let mut worst = (0.0, 0);
        for site in 0..self.u.window().n_sites() {
            let x = self.u.get(site, 0);
            let mut excess = (-x).max(x - 1.0);
            if let Some(v) = &self.v {
                let y = 2.0 * lambda * v.get(site, 0) + x;
                excess = excess.max(-y).max(y - 1.0);
            }
            if excess > worst.0 {
                worst = (excess, site);
            }
        }
        worst
    }
}

/// Bernoulli(1/2) phases drawn in lexicographic site order, zero velocity.
pub fn sample_initial(config: &CoarseningConfig) -> Result<OrderingState> {
    config.validate()?;
    let w = config.window()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let values = (0..w.n_sites()).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect();
    let u = Field::from_values(&w, 1, values)?;
    let v = (config.lambda > 0.0).then(|| Field::zeros(&w, 1));
    Ok(OrderingState { u, v })
}

/// Hysteresis labels: 1 above `high`, 0 below `low`, otherwise the previous
/// label (or the nearer phase when there is none).
pub fn phase_labels(u: &Field, previous: Option<&[u8]>, bands: (f64, f64)) -> Vec<u8> {
    (0..u.window().n_sites())
        .map(|site| {
            let x = u.get(site, 0);
            if x > bands.1 {
                1
            } else if x < bands.0 {
                0
            } else {
                previous.map_or(u8::from(x >= 0.5), |p| p[site])
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropletSnapshot {
    pub time: f64,
    pub count: usize,
    pub mean_size: f64,
    pub max_size: usize,
    /// Fraction of sites labelled 1.
    pub phase_fraction: f64,
    pub sizes: Vec<usize>,
}

/// Connected components of equal label under nearest-neighbour adjacency.
pub fn droplet_stats(window: &LatticeWindow, labels: &[u8], time: f64) -> DropletSnapshot {
    let n = window.n_sites();
    assert_eq!(labels.len(), n, "one label per site");
    let mut seen = vec![false; n];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut size = 0;
        while let Some(site) = queue.pop_front() {
            size += 1;
            for axis in 0..window.dim() {
                for next in [window.forward(site, axis), window.backward(site, axis)] {
                    if !seen[next] && labels[next] == labels[start] {
                        seen[next] = true;
                        queue.push_back(next);
                    }
                }
            }
        }
        sizes.push(size);
    }
    let ones = labels.iter().filter(|&&l| l == 1).count();
    DropletSnapshot {
        time,
        count: sizes.len(),
        mean_size: n as f64 / sizes.len() as f64,
        max_size: sizes.iter().copied().max().unwrap_or(0),
        phase_fraction: ones as f64 / n as f64,
        sizes,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropletStats {
    pub snapshots: Vec<DropletSnapshot>,
    /// Label changes per site over the run.
    pub flips: Vec<u32>,
    /// Sites that carried both labels at some point.
    pub visited_both: Vec<bool>,
}

impl DropletStats {
    pub fn flip_fraction(&self) -> f64 {
        self.flips.iter().filter(|&&f| f > 0).count() as f64 / self.flips.len() as f64
    }

    pub fn both_phases_fraction(&self) -> f64 {
        self.visited_both.iter().filter(|&&b| b).count() as f64 / self.visited_both.len() as f64
    }

    /// Final over initial mean droplet size.
    pub fn growth(&self) -> f64 {
        match (self.snapshots.first(), self.snapshots.last()) {
            (Some(a), Some(b)) => b.mean_size / a.mean_size,
            _ => 1.0,
        }
    }

    /// Whether the mean droplet size never drops by more than `allowance`
    /// relative to the running maximum.
    pub fn mean_size_nondecreasing(&self, allowance: f64) -> bool {
        let mut best: f64 = 0.0;
        self.snapshots.iter().all(|s| {
            best = best.max(s.mean_size);
            s.mean_size >= (1.0 - allowance) * best
        })
    }
}

#[derive(Debug, Clone)]
pub struct CoarseningRun {
    /// Snapshot states in the `0/1` frame, at the droplet snapshot times.
    pub snapshots: Vec<(f64, OrderingState)>,
    pub stats: DropletStats,
    pub max_cone_excess: f64,
    pub warnings: Vec<String>,
}

impl CoarseningRun {
    pub fn last(&self) -> &OrderingState {
        &self.snapshots.last().expect("a run has at least one snapshot").1
    }
}

pub fn run_coarsening(config: &CoarseningConfig) -> Result<CoarseningRun> {
    let initial = sample_initial(config)?;
    run_from(config, &initial)
}

/// Runs the coarsening dynamics from an arbitrary state in the ordering cone.
pub fn run_from(config: &CoarseningConfig, initial: &OrderingState) -> Result<CoarseningRun> {
    config.validate()?;
    let model = config.model()?;
    let spec = config.spec()?;
    let stride = config.snapshot_stride();
    let n_steps = spec.n_steps();
    let window = Arc::clone(model.window());
    let mut labels = phase_labels(&initial.u, None, config.bands);
    let mut flips = vec![0u32; labels.len()];
    let mut seen = labels.iter().map(|&l| [l == 0, l == 1]).collect::<Vec<_>>();
    let mut snapshots = Vec::new();
    let mut droplets = Vec::new();
    let mut max_excess: f64 = 0.0;
    let (_, warnings) = integrate(&model, &initial.to_polynomial(), &spec, |k, t, state| {
        let ordered = OrderingState::from_polynomial(state);
        let (excess, site) = ordered.cone_excess(config.lambda);
        max_excess = max_excess.max(excess);
        if excess > CONE_TOLERANCE {
            return Err(Error::OrderViolation {
                site: window.coords(site),
                time: t,
                excess,
            });
        }
        if k > 0 {
            let next = phase_labels(&ordered.u, Some(&labels), config.bands);
            for (site, (&old, &new)) in labels.iter().zip(&next).enumerate() {
                if old != new {
                    flips[site] += 1;
                }
                seen[site][new as usize] = true;
            }
            labels = next;
        }
        if k % stride == 0 || k == n_steps {
            droplets.push(droplet_stats(&window, &labels, t));
            snapshots.push((t, ordered));
        }
        Ok(())
    })?;
    Ok(CoarseningRun {
        snapshots,
        stats: DropletStats {
            snapshots: droplets,
            flips,
            visited_both: seen.iter().map(|s| s[0] && s[1]).collect(),
        },
        max_cone_excess: max_excess,
        warnings,
    })
}

/// Evolves `lower <= upper` side by side and returns the largest order
/// violation, failing with the first violating site and time beyond `tol`.
pub fn verify_ordering(
    config: &CoarseningConfig,
    lower: &OrderingState,
    upper: &OrderingState,
    tol: f64,
) -> Result<f64> {
    config.validate()?;
    let model = config.model()?;
    let spec = config.spec()?;
    let window = Arc::clone(model.window());
    let lambda = config.lambda;
    let gap = |a: &OrderingState, b: &OrderingState| {
        let mut worst = (0.0, 0);
        for site in 0..window.n_sites() {
            let mut g = a.u.get(site, 0) - b.u.get(site, 0);
            if let (Some(va), Some(vb)) = (&a.v, &b.v) {
                let ya = 2.0 * lambda * va.get(site, 0) + a.u.get(site, 0);
                let yb = 2.0 * lambda * vb.get(site, 0) + b.u.get(site, 0);
                g = g.max(ya - yb);
            }
            if g > worst.0 {
                worst = (g, site);
            }
        }
        worst
    };
    let (mut worst, site) = gap(lower, upper);
    if worst > tol {
        return Err(Error::Argument(format!("initial pair is not ordered at site {:?}", window.coords(site))));
    }
    let mut a = lower.to_polynomial();
    let mut b = upper.to_polynomial();
    for k in 1..=spec.n_steps() {
        let t = spec.time(k - 1);
        a = crate::integrator::step(&model, &a, spec.dt, spec.scheme, t)?;
        b = crate::integrator::step(&model, &b, spec.dt, spec.scheme, t)?;
        let (g, site) = gap(&OrderingState::from_polynomial(&a), &OrderingState::from_polynomial(&b));
        if g > tol {
            return Err(Error::OrderViolation {
                site: window.coords(site),
                time: spec.time(k),
                excess: g,
            });
        }
        worst = worst.max(g);
    }
    Ok(worst)
}

/// Summary of one ensemble member.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMember {
    pub seed: u64,
    pub flip_fraction: f64,
    pub both_phases_fraction: f64,
    pub growth: f64,
}

/// Runs one member per seed in parallel; results keep the seed order.
pub fn run_ensemble(config: &CoarseningConfig, seeds: &[u64]) -> Result<Vec<EnsembleMember>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let cfg = CoarseningConfig { seed, ..config.clone() };
            let run = run_coarsening(&cfg)?;
            Ok(EnsembleMember {
                seed,
                flip_fraction: run.stats.flip_fraction(),
                both_phases_fraction: run.stats.both_phases_fraction(),
                growth: run.stats.growth(),
            })
        })
        .collect()
}
