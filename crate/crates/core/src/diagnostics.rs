//! Cube-wise energy balance along trajectories and the closed-form flux,
//! dissipation and relaxation bounds.

use std::fmt;
use std::io::Write;

use crate::eds::{check_a5, evaluate_triple, LatticeEds, State};
use crate::error::{Error, Result};
use crate::integrator::{integrate, IntegratorSpec, Trajectory};
use crate::lattice::{boundary_faces, boundary_flux, cube_sites, omega, BoundaryFace, CubeKind, CubeSpec};

/// Relative dead-band for deciding `E(R, T) >= E(R, 0)`.
pub const JT_DEAD_BAND: f64 = 1e-9;

/// Time series for one cube radius.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusSeries {
    pub radius: i64,
    /// `E(R, t)` per sample.
    pub energy: Vec<f64>,
    /// `D(R, t)`, trapezoid in time.
    pub dissipation_cum: Vec<f64>,
    /// `F(R, t)`, trapezoid in time.
    pub flux_cum: Vec<f64>,
    /// `|F - (E(t) - E(0) + D)|`.
    pub residual: Vec<f64>,
    /// `max_{C*(R)} d` per sample.
    pub max_dissipation: Vec<f64>,
}

impl RadiusSeries {
    fn new(radius: i64) -> Self {
        Self {
            radius,
            energy: Vec::new(),
            dissipation_cum: Vec::new(),
            flux_cum: Vec::new(),
            residual: Vec::new(),
            max_dissipation: Vec::new(),
        }
    }

    pub fn final_energy(&self) -> f64 {
        *self.energy.last().expect("ledger has samples")
    }

    pub fn final_dissipation(&self) -> f64 {
        *self.dissipation_cum.last().expect("ledger has samples")
    }

    pub fn final_flux(&self) -> f64 {
        *self.flux_cum.last().expect("ledger has samples")
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual.last().expect("ledger has samples")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsLedger {
    pub dim: usize,
    pub times: Vec<f64>,
    pub series: Vec<RadiusSeries>,
    /// `max_t b(||e(t)||_inf)`.
    pub beta: f64,
    /// `||e(0)||_inf`.
    pub e0: f64,
    /// Worst `max_a (f^2 - beta d) / max(1, ||f||^2)` over samples, with the
    /// per-sample `beta`.
    pub a5_worst: f64,
    pub warnings: Vec<String>,
}

impl DiagnosticsLedger {
    pub fn radii(&self) -> Vec<i64> {
        self.series.iter().map(|s| s.radius).collect()
    }

    pub fn series(&self, radius: i64) -> Result<&RadiusSeries> {
        self.series
            .iter()
            .find(|s| s.radius == radius)
            .ok_or_else(|| Error::Argument(format!("radius {radius} is not in the ledger")))
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("ledger has samples")
    }

    /// Largest balance residual over radii and samples.
    pub fn max_residual(&self) -> f64 {
        self.series
            .iter()
            .flat_map(|s| s.residual.iter().copied())
            .fold(0.0, f64::max)
    }
}

/// Streaming ledger construction from `(t, state)` samples.
pub struct LedgerBuilder<'a> {
    model: &'a dyn LatticeEds,
    sites: Vec<Vec<usize>>,
    faces: Vec<Vec<BoundaryFace>>,
    ledger: DiagnosticsLedger,
    previous: Option<(f64, Vec<f64>, Vec<f64>)>,
}

impl<'a> LedgerBuilder<'a> {
    pub fn new(model: &'a dyn LatticeEds, radii: &[i64]) -> Result<Self> {
        let window = model.window();
        if radii.is_empty() {
            return Err(Error::Argument("no diagnostic radii given".into()));
        }
        let mut sites = Vec::new();
        let mut faces = Vec::new();
        for &r in radii {
            if r > window.max_diagnostic_radius() {
                return Err(Error::Domain(format!(
                    "radius {r} exceeds W - buffer = {}",
                    window.max_diagnostic_radius()
                )));
            }
            sites.push(cube_sites(window, CubeSpec::star(r))?);
            faces.push(boundary_faces(window, r, CubeKind::CStar)?);
        }
        Ok(Self {
            model,
            sites,
            faces,
            ledger: DiagnosticsLedger {
                dim: window.dim(),
                times: Vec::new(),
                series: radii.iter().map(|&r| RadiusSeries::new(r)).collect(),
                beta: 0.0,
                e0: 0.0,
                a5_worst: f64::NEG_INFINITY,
                warnings: Vec::new(),
            },
            previous: None,
        })
    }

    pub fn push(&mut self, t: f64, state: &State) -> Result<()> {
        let triple = evaluate_triple(self.model, state)?;
        let beta = self.model.beta(&triple);
        let ledger = &mut self.ledger;
        if let Some(&last) = ledger.times.last() {
            if !(t > last) {
                return Err(Error::Argument(format!("sample time {t} does not increase past {last}")));
            }
        } else {
            ledger.e0 = triple.energy_sup();
        }
        ledger.beta = ledger.beta.max(beta);
        let scale = triple.flux_sup_sq().max(1.0);
        ledger.a5_worst = ledger.a5_worst.max(check_a5(&triple, beta) / scale);
        ledger.times.push(t);

        let mut d_now = Vec::with_capacity(self.sites.len());
        let mut f_now = Vec::with_capacity(self.sites.len());
        for (k, series) in ledger.series.iter_mut().enumerate() {
            let sites = &self.sites[k];
            let energy = triple.e.sum_over(sites, 0);
            let dissipation = triple.d.sum_over(sites, 0);
            let max_d = sites.iter().map(|&s| triple.d.get(s, 0)).fold(0.0, f64::max);
            let flux = boundary_flux(&triple.f, &self.faces[k]);
            let (d_cum, f_cum) = match &self.previous {
                None => (0.0, 0.0),
                Some((t0, d0, f0)) => {
                    let h = 0.5 * (t - t0);
                    (
                        series.final_dissipation() + h * (d0[k] + dissipation),
                        series.final_flux() + h * (f0[k] + flux),
                    )
                }
            };
            let e_initial = series.energy.first().copied().unwrap_or(energy);
            series.energy.push(energy);
            series.dissipation_cum.push(d_cum);
            series.flux_cum.push(f_cum);
            series.residual.push((f_cum - (energy - e_initial + d_cum)).abs());
            series.max_dissipation.push(max_d);
            d_now.push(dissipation);
            f_now.push(flux);
        }
        self.previous = Some((t, d_now, f_now));
        Ok(())
    }

    pub fn warn(&mut self, message: String) {
        self.ledger.warnings.push(message);
    }

    pub fn finish(self) -> Result<DiagnosticsLedger> {
        if self.ledger.times.is_empty() {
            return Err(Error::Argument("ledger has no samples".into()));
        }
        Ok(self.ledger)
    }
}

fn sparse_sampling_warning(spec: &IntegratorSpec) -> Option<String> {
    let gap = spec.sample_every as f64 * spec.dt;
    (spec.t_end > 0.0 && gap > spec.t_end / 10.0).then(|| {
        format!(
            "sampling interval {gap} exceeds t_end / 10 = {}; time quadrature is coarse",
            spec.t_end / 10.0
        )
    })
}

/// Ledger of a stored trajectory.
pub fn accumulate(model: &dyn LatticeEds, trajectory: &Trajectory, radii: &[i64]) -> Result<DiagnosticsLedger> {
    let mut builder = LedgerBuilder::new(model, radii)?;
    for (t, state) in trajectory.times.iter().zip(&trajectory.states) {
        builder.push(*t, state)?;
    }
    if let Some(w) = sparse_sampling_warning(&trajectory.spec) {
        builder.warn(w);
    }
    for w in &trajectory.warnings {
        builder.warn(w.clone());
    }
    builder.finish()
}

/// Integrates and builds the ledger on the fly without storing states.
pub fn run_ledger(
    model: &dyn LatticeEds,
    initial: &State,
    spec: &IntegratorSpec,
    radii: &[i64],
) -> Result<(State, DiagnosticsLedger)> {
    let mut builder = LedgerBuilder::new(model, radii)?;
    let (last, warnings) = integrate(model, initial, spec, |_, t, s| builder.push(t, s))?;
    if let Some(w) = sparse_sampling_warning(spec) {
        builder.warn(w);
    }
    for w in warnings {
        builder.warn(w);
    }
    Ok((last, builder.finish()?))
}

fn check_bound_inputs(dim: usize, radius: f64, t: f64, beta: f64, e0: f64) -> Result<()> {
    if dim == 0 || !(radius >= 1.0) || !(t > 0.0) || !(beta >= 0.0) || !(e0 >= 0.0) {
        return Err(Error::Argument(format!(
            "bound inputs need N >= 1, R >= 1, T > 0, beta >= 0, e0 >= 0; got N = {dim}, R = {radius}, T = {t}, beta = {beta}, e0 = {e0}"
        )));
    }
    Ok(())
}

/// The general `N >= 2` flux bound
/// `(N-1)(1+1/R)^{N-2} w_N R^{N-2} beta T + 2^N sqrt(w_N N) R^{N-1} sqrt(e0 beta T)`.
pub fn flux_bound_general(dim: usize, radius: i64, t: f64, beta: f64, e0: f64) -> Result<f64> {
    let r = radius as f64;
    check_bound_inputs(dim, r, t, beta, e0)?;
    if dim < 2 {
        return Err(Error::Argument("the general flux bound needs N >= 2".into()));
    }
    let n = dim as f64;
    let w = omega(dim);
    let k = dim as i32;
    Ok((n - 1.0) * (1.0 + 1.0 / r).powi(k - 2) * w * r.powi(k - 2) * beta * t
        + 2f64.powi(k) * (w * n).sqrt() * r.powi(k - 1) * (e0 * beta * t).sqrt())
}

/// Closed-form bound on `F(R, T)`: `2 sqrt(beta e0 T)` for `N = 1`, the
/// logarithmic bound for `N = 2` (inapplicable unless
/// `64 R^2 e0 <= w_2 beta T`), and [`flux_bound_general`] for `N >= 3`.
pub fn flux_bound(dim: usize, radius: i64, t: f64, beta: f64, e0: f64) -> Result<f64> {
    let r = radius as f64;
    check_bound_inputs(dim, r, t, beta, e0)?;
    match dim {
        1 => Ok(2.0 * (beta * e0 * t).sqrt()),
        2 => {
            let w = omega(2);
            let lhs = 64.0 * r * r * e0;
            if lhs > w * beta * t {
                return Err(Error::Inapplicable(format!(
                    "64 R^2 e0 = {lhs} exceeds w_2 beta T = {}",
                    w * beta * t
                )));
            }
            if e0 == 0.0 {
                return Ok(0.0);
            }
            let log = (w * beta * t / lhs).ln();
            Ok(if log > 0.0 { 12.0 * w * beta * t / log } else { f64::INFINITY })
        }
        _ => flux_bound_general(dim, radius, t, beta, e0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    FluxN1,
    FluxN2,
    FluxN3,
    Dissipation,
    Relaxation,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundKind::FluxN1 => "flux-N1",
            BoundKind::FluxN2 => "flux-N2",
            BoundKind::FluxN3 => "flux-N3",
            BoundKind::Dissipation => "dissipation",
            BoundKind::Relaxation => "relaxation",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub dim: usize,
    pub radius: i64,
    pub t: f64,
    pub beta: f64,
    pub e0: f64,
    pub eps: Option<f64>,
    pub bound: f64,
    pub observed: f64,
    pub satisfied: bool,
}

/// Quadrature slack for comparing integrated quantities against bounds.
fn slack(series: &RadiusSeries) -> f64 {
    series.final_residual() + 1e-9
}

/// Flux bounds at the final time for every ledger radius. For `N = 2` the
/// logarithmic form is used where applicable and the general form otherwise.
pub fn flux_reports(ledger: &DiagnosticsLedger) -> Result<Vec<BoundReport>> {
    let t = ledger.final_time();
    let mut out = Vec::new();
    for series in &ledger.series {
        let (kind, bound) = match ledger.dim {
            1 => (BoundKind::FluxN1, flux_bound(1, series.radius, t, ledger.beta, ledger.e0)?),
            2 => match flux_bound(2, series.radius, t, ledger.beta, ledger.e0) {
                Ok(b) => (BoundKind::FluxN2, b),
                Err(Error::Inapplicable(_)) => (
                    BoundKind::FluxN3,
                    flux_bound_general(2, series.radius, t, ledger.beta, ledger.e0)?,
                ),
                Err(e) => return Err(e),
            },
            n => (BoundKind::FluxN3, flux_bound(n, series.radius, t, ledger.beta, ledger.e0)?),
        };
        let observed = series.final_flux().abs();
        out.push(BoundReport {
            kind,
            dim: ledger.dim,
            radius: series.radius,
            t,
            beta: ledger.beta,
            e0: ledger.e0,
            eps: None,
            bound,
            observed,
            satisfied: observed <= bound + slack(series),
        });
    }
    Ok(out)
}

/// `D(R, T) / sqrt(T)` against `factor * sqrt(beta e0)` at every sampled time
/// in `times`.
pub fn dissipation_reports(
    ledger: &DiagnosticsLedger,
    radius: i64,
    times: &[f64],
    factor: f64,
) -> Result<Vec<BoundReport>> {
    let series = ledger.series(radius)?;
    times
        .iter()
        .map(|&t| {
            let k = ledger
                .times
                .iter()
                .position(|&s| (s - t).abs() <= 1e-9 * t.max(1.0))
                .ok_or_else(|| Error::Argument(format!("time {t} is not a ledger sample")))?;
            let observed = series.dissipation_cum[k] / t.sqrt();
            let bound = factor * (ledger.beta * ledger.e0).sqrt();
            Ok(BoundReport {
                kind: BoundKind::Dissipation,
                dim: ledger.dim,
                radius,
                t,
                beta: ledger.beta,
                e0: ledger.e0,
                eps: None,
                bound,
                observed,
                satisfied: observed <= bound,
            })
        })
        .collect()
}

/// Largest `(1 / (w_N beta T)) sum_{r<R} F(r, T)^2 / r^{N-1} - D(R, T)` over
/// ledger radii at the final time; nonpositive when the flux-dissipation
/// chain holds. Requires radii `1..R_max`.
pub fn dissipation_chain_excess(ledger: &DiagnosticsLedger) -> Result<f64> {
    check_consecutive(ledger)?;
    let t = ledger.final_time();
    let scale = 1.0 / (omega(ledger.dim) * ledger.beta * t);
    let mut partial = 0.0;
    let mut worst = f64::NEG_INFINITY;
    for series in &ledger.series {
        worst = worst.max(scale * partial - series.final_dissipation());
        let r = series.radius as f64;
        partial += series.final_flux().powi(2) / r.powi(ledger.dim as i32 - 1);
    }
    Ok(worst)
}

fn check_consecutive(ledger: &DiagnosticsLedger) -> Result<()> {
    let consecutive = ledger
        .series
        .iter()
        .enumerate()
        .all(|(i, s)| s.radius == i as i64 + 1);
    if !consecutive {
        return Err(Error::Argument("ledger radii must be 1, 2, ..., R_max".into()));
    }
    Ok(())
}

/// Radii whose windowed energy did not decrease over `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JtReport {
    pub t: f64,
    pub members: Vec<i64>,
    /// Smallest `R_0` such that no radius in `[R_0, R_max]` is a member;
    /// `None` when `R_max` itself is a member.
    pub tail_start: Option<i64>,
    /// For `N = 2`: `(K, sum_{r in J_T, r <= K} 1/r)` for every ledger radius.
    pub partial_sums: Vec<(i64, f64)>,
    /// `D(R_max, T) == 0`.
    pub stationary: bool,
}

pub fn jt_report(ledger: &DiagnosticsLedger) -> Result<JtReport> {
    check_consecutive(ledger)?;
    let mut members = Vec::new();
    for s in &ledger.series {
        let e0 = s.energy[0];
        if s.final_energy() >= e0 - JT_DEAD_BAND * e0.abs().max(1.0) {
            members.push(s.radius);
        }
    }
    let r_max = ledger.series.last().map(|s| s.radius).unwrap_or(0);
    let tail_start = match members.last() {
        Some(&last) if last == r_max => None,
        Some(&last) => Some(last + 1),
        None => Some(1),
    };
    let mut partial_sums = Vec::new();
    if ledger.dim == 2 {
        let mut acc = 0.0;
        for s in &ledger.series {
            if members.contains(&s.radius) {
                acc += 1.0 / s.radius as f64;
            }
            partial_sums.push((s.radius, acc));
        }
    }
    let stationary = ledger.series.last().map(|s| s.final_dissipation() == 0.0).unwrap_or(true);
    Ok(JtReport {
        t: ledger.final_time(),
        members,
        tail_start,
        partial_sums,
        stationary,
    })
}

/// Upper bounds on the first time `t_{eps,r}` at which `d < eps` on all of
/// `C*(r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationBound {
    /// First time the energy inequality
    /// `F(r, T) + e0 2^N r^N >= eps 2^N r^N T` fails with `F` replaced by
    /// its closed-form bound.
    pub exact: f64,
    /// The coarser closed form stated alongside, when it exists.
    pub simplified: Option<f64>,
}

/// Largest root of `A x^2 - B x - C`, squared.
fn quadratic_root_squared(a: f64, b: f64, c: f64) -> f64 {
    let x = (b + (b * b + 4.0 * a * c).sqrt()) / (2.0 * a);
    x * x
}

pub fn relaxation_bound(dim: usize, radius: i64, eps: f64, beta: f64, e0: f64) -> Result<RelaxationBound> {
    let r = radius as f64;
    check_bound_inputs(dim, r, 1.0, beta, e0)?;
    if !(eps > 0.0) {
        return Err(Error::Argument(format!("eps must be positive, got {eps}")));
    }
    let n = dim as f64;
    let k = dim as i32;
    let volume = 2f64.powi(k) * r.powi(k);
    let w = omega(dim);
    match dim {
        1 => {
            let a = 2.0 * eps * r;
            let b = 2.0 * (beta * e0).sqrt();
            let c = 2.0 * r * e0;
            Ok(RelaxationBound {
                exact: quadratic_root_squared(a, b, c),
                simplified: Some(e0 * beta / (eps * eps * r * r)),
            })
        }
        2 => {
            let holds = |t: f64| -> Result<bool> {
                let general = flux_bound_general(2, radius, t, beta, e0)?;
                let f = match flux_bound(2, radius, t, beta, e0) {
                    Ok(b) => b.min(general),
                    Err(Error::Inapplicable(_)) => general,
                    Err(e) => return Err(e),
                };
                Ok(f + e0 * volume >= eps * volume * t)
            };
            let mut lo = 1e-12;
            let mut hi = lo;
            loop {
                if !holds(hi)? {
                    break;
                }
                lo = hi;
                hi *= 2.0;
                if !hi.is_finite() || hi > 1e300 {
                    return Err(Error::Unbounded(format!(
                        "no finite relaxation bound for N = 2, r = {radius}, eps = {eps}"
                    )));
                }
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if holds(mid)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let simplified = (w * beta * r * r > 0.0).then(|| {
                let a = 32.0 * e0 * r * r / (w * beta) * (2.0 * w * beta / (eps * r * r)).exp();
                a.max(e0 / (2.0 * eps))
            });
            Ok(RelaxationBound {
                exact: hi,
                simplified,
            })
        }
        _ => {
            let growth = (n - 1.0) * (1.0 + 1.0 / r).powi(k - 2) * w * r.powi(k - 2) * beta;
            let a = eps * volume - growth;
            if a <= 0.0 {
                return Err(Error::Unbounded(format!(
                    "eps = {eps} is at or below the threshold {} for N = {dim}, r = {radius}",
                    growth / volume
                )));
            }
            let b = 2f64.powi(k) * (w * n).sqrt() * r.powi(k - 1) * (e0 * beta).sqrt();
            let c = volume * e0;
            let threshold = n * w * beta / (4.0 * r * r);
            let simplified = (eps > threshold)
                .then(|| n * w * e0 * beta / (r * r * (threshold - eps).powi(2)));
            Ok(RelaxationBound {
                exact: quadratic_root_squared(a, b, c),
                simplified,
            })
        }
    }
}

/// First sampled time with `max_{C*(r)} d < eps`.
pub fn entry_time(ledger: &DiagnosticsLedger, radius: i64, eps: f64) -> Result<Option<f64>> {
    let series = ledger.series(radius)?;
    Ok(series
        .max_dissipation
        .iter()
        .position(|&d| d < eps)
        .map(|k| ledger.times[k]))
}

pub fn relaxation_report(ledger: &DiagnosticsLedger, radius: i64, eps: f64) -> Result<BoundReport> {
    let bound = relaxation_bound(ledger.dim, radius, eps, ledger.beta, ledger.e0)?.exact;
    let observed = entry_time(ledger, radius, eps)?.unwrap_or(f64::INFINITY);
    let t = ledger.final_time();
    // A run that never entered only refutes the bound if it outlasted it.
    let satisfied = observed <= bound || (observed.is_infinite() && t <= bound);
    Ok(BoundReport {
        kind: BoundKind::Relaxation,
        dim: ledger.dim,
        radius,
        t,
        beta: ledger.beta,
        e0: ledger.e0,
        eps: Some(eps),
        bound,
        observed,
        satisfied,
    })
}

/// Fraction of samples with `max_{C*(R)} d < eps`.
pub fn equilibrium_time_fraction(ledger: &DiagnosticsLedger, radius: i64, eps: f64) -> Result<f64> {
    let series = ledger.series(radius)?;
    let near = series.max_dissipation.iter().filter(|&&d| d < eps).count();
    Ok(near as f64 / series.max_dissipation.len() as f64)
}

/// `energy_flux.csv`: `t,R,E,D_cum,F_cum,residual`.
pub fn write_energy_flux_csv<W: Write>(ledger: &DiagnosticsLedger, mut out: W) -> Result<()> {
    writeln!(out, "t,R,E,D_cum,F_cum,residual")?;
    for (k, t) in ledger.times.iter().enumerate() {
        for s in &ledger.series {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                t, s.radius, s.energy[k], s.dissipation_cum[k], s.flux_cum[k], s.residual[k]
            )?;
        }
    }
    Ok(())
}

/// `bounds.csv`: `kind,N,R,T,beta,e0,eps,bound,observed,satisfied`.
pub fn write_bounds_csv<W: Write>(reports: &[BoundReport], mut out: W) -> Result<()> {
    writeln!(out, "kind,N,R,T,beta,e0,eps,bound,observed,satisfied")?;
    for r in reports {
        let eps = r.eps.map(|e| e.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.kind, r.dim, r.radius, r.t, r.beta, r.e0, eps, r.bound, r.observed, r.satisfied
        )?;
    }
    Ok(())
}
