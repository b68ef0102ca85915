//! Flat `section.key = value` configuration files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use latteds::coarsening::CoarseningConfig;
use latteds::eds::{LatticeEds, State};
use latteds::integrator::{IntegratorSpec, Scheme};
use latteds::lattice::{Boundary, Field, LatticeWindow};
use latteds::models::{
    Bonds, CosinePotential, DcglModel, FkModel, GeneralizedFkModel, Interaction, MultiRangeModel,
    SpinGlassModel, SpringInteraction,
};

/// Raw key/value pairs; keys are consumed as they are read so leftovers can
/// be reported as unknown.
struct Entries(BTreeMap<String, String>);

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected 'key = value', got '{raw}'", n + 1))?;
            let key = key.trim().to_string();
            if map.insert(key.clone(), value.trim().to_string()).is_some() {
                bail!("line {}: key '{key}' is set twice", n + 1);
            }
        }
        Ok(Self(map))
    }

    fn take<T: FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.remove(key) {
            Some(v) => v.parse().map_err(|e| anyhow!("{key} = '{v}': {e}")),
            None => Ok(default),
        }
    }

    fn take_required<T: FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let v = self
            .0
            .remove(key)
            .ok_or_else(|| anyhow!("missing required key '{key}'"))?;
        v.parse().map_err(|e| anyhow!("{key} = '{v}': {e}"))
    }

    fn take_list<T: FromStr>(&mut self, key: &str, default: Vec<T>) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.remove(key) {
            Some(v) => parse_list(&v).with_context(|| format!("key '{key}'")),
            None => Ok(default),
        }
    }

    fn finish(self) -> Result<()> {
        if let Some(key) = self.0.keys().next() {
            bail!("unknown configuration key '{key}'");
        }
        Ok(())
    }
}

pub fn parse_list<T: FromStr>(text: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e| anyhow!("bad list entry '{s}': {e}")))
        .collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Fk,
    GenFk,
    MultiRange,
    SpinGlass,
    Dcgl,
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fk" => Ok(Self::Fk),
            "genfk" => Ok(Self::GenFk),
            "multirange" => Ok(Self::MultiRange),
            "spinglass" => Ok(Self::SpinGlass),
            "dcgl" => Ok(Self::Dcgl),
            other => Err(format!(
                "unknown model kind '{other}' (fk, genfk, multirange, spinglass, dcgl)"
            )),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Fk => "fk",
            Self::GenFk => "genfk",
            Self::MultiRange => "multirange",
            Self::SpinGlass => "spinglass",
            Self::Dcgl => "dcgl",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub dim: usize,
    /// Damping; `0` selects the gradient dynamics.
    pub lambda: f64,
    /// Amplitude of the periodic potential.
    pub k: f64,
    pub stiffness: f64,
    pub shift: f64,
    pub mu: f64,
    pub p_minus: f64,
    pub distances: Vec<i64>,
    pub cgl_lambda: f64,
    /// Seed for random bonds.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelSection,
    pub radius: i64,
    pub buffer: i64,
    pub boundary: Boundary,
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub sample_every: usize,
    pub radii: Vec<i64>,
    pub eps: Vec<f64>,
    pub init_kind: String,
    pub init_amplitude: f64,
    pub init_value: f64,
    pub out_dir: String,
    pub seed: u64,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut e = Entries::parse(text)?;
        let kind: ModelKind = e.take_required("model.kind")?;
        let model = ModelSection {
            kind,
            dim: e.take("model.N", 1)?,
            lambda: e.take("model.lambda", 0.0)?,
            k: e.take("model.K", 1.0 / (4.0 * std::f64::consts::PI.powi(2)))?,
            stiffness: e.take("model.stiffness", 1.0)?,
            shift: e.take("model.shift", 0.0)?,
            mu: e.take("model.mu", 1.0)?,
            p_minus: e.take("model.p_minus", 0.5)?,
            distances: e.take_list("model.distances", vec![1])?,
            cgl_lambda: e.take("model.cgl_lambda", 1.0)?,
            seed: e.take("model.seed", 0)?,
        };
        let radius: i64 = e.take_required("window.radius")?;
        let cfg = Self {
            model,
            radius,
            buffer: e.take("window.buffer", 0)?,
            boundary: e.take("window.boundary", Boundary::Periodic)?,
            scheme: e.take("integrator.scheme", Scheme::Rk4)?,
            dt: e.take("integrator.dt", 1e-3)?,
            t_end: e.take("integrator.t_end", 10.0)?,
            sample_every: e.take("integrator.sample_every", 1)?,
            radii: e.take_list("diagnostics.radii", vec![(radius / 4).max(1)])?,
            eps: e.take_list("diagnostics.eps", vec![1e-2, 1e-3])?,
            init_kind: e.take("init.kind", "random".to_string())?,
            init_amplitude: e.take("init.amplitude", 1.0)?,
            init_value: e.take("init.value", 0.0)?,
            out_dir: e.take("output.dir", "out".to_string())?,
            seed: e.take("seed", 0)?,
        };
        e.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let usable = self.radius - self.buffer;
        for &r in &self.radii {
            if r < 1 || r > usable {
                bail!(
                    "diagnostics radius {r} violates 1 <= R <= window.radius - window.buffer = {usable}"
                );
            }
        }
        let r_max = self.radii.iter().copied().max().unwrap_or(0);
        if self.radius < 2 * r_max {
            bail!(
                "window.radius = {} violates the margin rule window.radius >= 2 * max(diagnostics.radii) = {}",
                self.radius,
                2 * r_max
            );
        }
        if !matches!(self.init_kind.as_str(), "random" | "constant") {
            bail!(
                "init.kind must be 'random' or 'constant', got '{}'",
                self.init_kind
            );
        }
        if self.eps.iter().any(|&e| !(e > 0.0)) {
            bail!("diagnostics.eps values must be positive");
        }
        self.spec()?;
        Ok(())
    }

    /// Canonical text with every default made explicit.
    pub fn echo(&self) -> String {
        let m = &self.model;
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("model.kind", m.kind.to_string());
        put("model.N", m.dim.to_string());
        put("model.lambda", format!("{:?}", m.lambda));
        put("model.K", format!("{:?}", m.k));
        put("model.stiffness", format!("{:?}", m.stiffness));
        put("model.shift", format!("{:?}", m.shift));
        put("model.mu", format!("{:?}", m.mu));
        put("model.p_minus", format!("{:?}", m.p_minus));
        put("model.distances", join(&m.distances));
        put("model.cgl_lambda", format!("{:?}", m.cgl_lambda));
        put("model.seed", m.seed.to_string());
        put("window.radius", self.radius.to_string());
        put("window.buffer", self.buffer.to_string());
        put("window.boundary", self.boundary.to_string());
        put("integrator.scheme", self.scheme.to_string());
        put("integrator.dt", format!("{:?}", self.dt));
        put("integrator.t_end", format!("{:?}", self.t_end));
        put("integrator.sample_every", self.sample_every.to_string());
        put("diagnostics.radii", join(&self.radii));
        put(
            "diagnostics.eps",
            self.eps
                .iter()
                .map(|e| format!("{e:?}"))
                .collect::<Vec<_>>()
                .join(","),
        );
        put("init.kind", self.init_kind.clone());
        put("init.amplitude", format!("{:?}", self.init_amplitude));
        put("init.value", format!("{:?}", self.init_value));
        put("output.dir", self.out_dir.clone());
        put("seed", self.seed.to_string());
        s
    }

    pub fn spec(&self) -> Result<IntegratorSpec> {
        Ok(IntegratorSpec::new(
            self.scheme,
            self.dt,
            self.t_end,
            self.sample_every,
        )?)
    }

    pub fn window(&self) -> Result<Arc<LatticeWindow>> {
        Ok(LatticeWindow::new(
            self.model.dim,
            self.radius,
            self.boundary,
            self.buffer,
        )?)
    }

    pub fn build_model(&self) -> Result<Box<dyn LatticeEds>> {
        let m = &self.model;
        let w = self.window()?;
        let spring = || -> Arc<dyn Interaction> {
            Arc::new(SpringInteraction::new(m.stiffness, m.shift, m.k, 1))
        };
        Ok(match m.kind {
            ModelKind::Fk => Box::new(FkModel::new(
                &w,
                m.lambda,
                Arc::new(CosinePotential::new(m.k)),
            )?),
            ModelKind::GenFk => Box::new(GeneralizedFkModel::new(&w, spring())?),
            ModelKind::MultiRange => {
                let terms = m.distances.iter().map(|&g| (g, spring())).collect();
                Box::new(MultiRangeModel::new(&w, terms)?)
            }
            ModelKind::SpinGlass => {
                let bonds = Bonds::random(&w, m.p_minus, m.seed);
                Box::new(SpinGlassModel::new(&w, m.lambda, m.mu, bonds)?)
            }
            ModelKind::Dcgl => Box::new(DcglModel::new(&w, m.cgl_lambda)?),
        })
    }

    pub fn initial_state(&self, model: &dyn LatticeEds) -> Result<State> {
        let w = model.window();
        let width = model.state_width();
        let u = match self.init_kind.as_str() {
            "constant" => Field::constant(w, width, self.init_value),
            _ => {
                let a = self.init_amplitude;
                Field::random_uniform(w, width, -a, a, self.seed)
            }
        };
        Ok(if model.is_damped() {
            State::damped(u, Field::zeros(w, width))
        } else {
            State::gradient(u)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoarsenRunConfig {
    pub run: CoarseningConfig,
    pub out_dir: String,
}

impl CoarsenRunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut e = Entries::parse(text)?;
        let d = CoarseningConfig::default();
        let run = CoarseningConfig {
            dim: e.take("coarsen.N", d.dim)?,
            radius: e.take("window.radius", d.radius)?,
            lambda: e.take("coarsen.lambda", d.lambda)?,
            mu: e.take("coarsen.mu", d.mu)?,
            seed: e.take("seed", d.seed)?,
            t_end: e.take("integrator.t_end", d.t_end)?,
            dt: e.take("integrator.dt", d.dt)?,
            scheme: e.take("integrator.scheme", d.scheme)?,
            snapshot_every: e.take("coarsen.snapshot_every", d.snapshot_every)?,
            bands: (
                e.take("coarsen.band_low", d.bands.0)?,
                e.take("coarsen.band_high", d.bands.1)?,
            ),
        };
        let cfg = Self {
            run,
            out_dir: e.take("output.dir", "out".to_string())?,
        };
        e.finish()?;
        cfg.run.validate()?;
        Ok(cfg)
    }

    pub fn echo(&self) -> String {
        let r = &self.run;
        format!(
            "coarsen.N = {}\nwindow.radius = {}\ncoarsen.lambda = {:?}\ncoarsen.mu = {:?}\nseed = {}\n\
             integrator.t_end = {:?}\nintegrator.dt = {:?}\nintegrator.scheme = {}\n\
             coarsen.snapshot_every = {:?}\ncoarsen.band_low = {:?}\ncoarsen.band_high = {:?}\noutput.dir = {}\n",
            r.dim,
            r.radius,
            r.lambda,
            r.mu,
            r.seed,
            r.t_end,
            r.dt,
            r.scheme,
            r.snapshot_every,
            r.bands.0,
            r.bands.1,
            self.out_dir
        )
    }
}
