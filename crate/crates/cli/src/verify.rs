//! Invariant suites behind `latteds verify`.

use std::sync::Arc;
use std::time::Instant;

use anyhow::Result;
use clap::ValueEnum;
use latteds::coarsening::{
    run_from, sample_initial, verify_ordering, CoarseningConfig, OrderingState,
};
use latteds::diagnostics::{dissipation_reports, flux_reports, relaxation_report, run_ledger};
use latteds::eds::{balance_defect, check_a5, evaluate_triple, LatticeEds, State};
use latteds::integrator::{IntegratorSpec, Scheme};
use latteds::lattice::{
    boundary_faces, cube_sites, diff, div, grad, laplacian, omega, shift, stokes_sum, Boundary,
    CubeKind, CubeSpec, DiffKind, Field, LatticeWindow,
};
use latteds::models::{
    Bonds, CosinePotential, DcglModel, FkModel, GeneralizedFkModel, Interaction, MultiRangeModel,
    SpinGlassModel, SpringInteraction,
};
use latteds::recurrence::{check_ricatti_bounds, stable_manifold, RecurrenceParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Calculus,
    Balance,
    Bounds,
    Recurrence,
    Coarsen,
    All,
}

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures += 1;
        }
    }
}

/// Runs the suite; returns whether every check passed.
pub fn run(suite: Suite) -> Result<bool> {
    let mut report = Report { failures: 0 };
    let all = suite == Suite::All;
    let start = Instant::now();
    if all || suite == Suite::Calculus {
        calculus(&mut report)?;
    }
    if all || suite == Suite::Balance {
        balance(&mut report)?;
    }
    if all || suite == Suite::Bounds {
        bounds(&mut report)?;
    }
    if all || suite == Suite::Recurrence {
        recurrence(&mut report)?;
    }
    if all || suite == Suite::Coarsen {
        coarsen(&mut report)?;
    }
    println!(
        "{} failure(s) in {:.1} s",
        report.failures,
        start.elapsed().as_secs_f64()
    );
    Ok(report.failures == 0)
}

fn periodic(dim: usize, radius: i64) -> Result<Arc<LatticeWindow>> {
    Ok(LatticeWindow::new(dim, radius, Boundary::Periodic, 0)?)
}

fn calculus(rep: &mut Report) -> Result<()> {
    for dim in 1..=3 {
        let mut stokes = true;
        let mut product = true;
        let mut laplace = true;
        let mut counts = true;
        for r in 1..=6i64 {
            let w = periodic(dim, r)?;
            for trial in 0..20u64 {
                let seed = 100 * (10 * dim as u64 + r as u64) + trial;
                let u = Field::random_integer(&w, 1, 100, seed);
                let v = Field::random_integer(&w, 1, 100, seed ^ 0x5a5a);
                let vec = Field::random_integer(&w, dim, 100, seed ^ 0xa5a5);
                for kind in [CubeKind::CStar, CubeKind::C] {
                    let (lhs, rhs) = stokes_sum(&vec, r, kind)?;
                    stokes &= lhs == rhs;
                }
                let lap = laplacian(&u);
                laplace &= lap == div(&grad(&u, DiffKind::Forward)?, DiffKind::Backward)?;
                laplace &= lap == div(&grad(&u, DiffKind::Backward)?, DiffKind::Forward)?;
                let uv = u.mul(&v)?;
                for axis in 0..dim {
                    let lhs = diff(&uv, axis, DiffKind::Forward)?;
                    let du = diff(&u, axis, DiffKind::Forward)?;
                    let dv = diff(&v, axis, DiffKind::Forward)?;
                    product &= lhs == du.mul(&shift(&v, axis, 1)?)?.add(&u.mul(&dv)?)?;
                    product &= lhs == du.mul(&v)?.add(&shift(&u, axis, 1)?.mul(&dv)?)?;
                }
            }
            let volume = cube_sites(&w, CubeSpec::star(r))?.len() as f64;
            let faces = boundary_faces(&w, r, CubeKind::CStar)?.len() as f64;
            let rf = r as f64;
            counts &= volume == 2f64.powi(dim as i32) * rf.powi(dim as i32);
            counts &= ((faces * (dim as f64).sqrt()) - omega(dim) * rf.powi(dim as i32 - 1)).abs()
                <= 1e-12 * omega(dim) * rf.powi(dim as i32 - 1);
        }
        rep.check(
            &format!("calculus stokes N={dim}"),
            stokes,
            "r = 1..6, exact".into(),
        );
        rep.check(
            &format!("calculus product rules N={dim}"),
            product,
            "r = 1..6, exact".into(),
        );
        rep.check(
            &format!("calculus laplacian factorization N={dim}"),
            laplace,
            "r = 1..6, exact".into(),
        );
        rep.check(
            &format!("calculus cube counts N={dim}"),
            counts,
            "|C*| and |dC*| for r = 1..6".into(),
        );
    }
    Ok(())
}

fn spring(stiffness: f64, shift: f64, amplitude: f64) -> Arc<dyn Interaction> {
    Arc::new(SpringInteraction::new(stiffness, shift, amplitude, 1))
}

/// One state per model family, and whether its flux obeys the pointwise
/// flux-dissipation inequality.
fn zoo() -> Result<Vec<(Box<dyn LatticeEds>, State, bool)>> {
    let mut out: Vec<(Box<dyn LatticeEds>, State, bool)> = Vec::new();
    let cos = Arc::new(CosinePotential::unit_curvature());
    for (dim, lambda) in [(1, 0.0), (2, 0.0), (1, 0.3)] {
        let w = periodic(dim, 4)?;
        let m = FkModel::new(&w, lambda, cos.clone())?;
        let mut s = m.state(Field::random_uniform(&w, dim, -1.0, 1.0, 7));
        if let Some(v) = s.v.as_mut() {
            *v = Field::random_uniform(&w, dim, -0.5, 0.5, 8);
        }
        out.push((Box::new(m), s, true));
    }
    let w = periodic(1, 6)?;
    let g = GeneralizedFkModel::new(&w, spring(1.3, 0.2, 0.05))?;
    out.push((
        Box::new(g),
        State::gradient(Field::random_uniform(&w, 1, -1.0, 1.0, 3)),
        true,
    ));
    let terms = vec![(1, spring(1.0, 0.0, 0.03)), (2, spring(0.4, 0.1, 0.0))];
    let mr = MultiRangeModel::new(&w, terms)?;
    out.push((
        Box::new(mr),
        State::gradient(Field::random_uniform(&w, 1, -1.0, 1.0, 4)),
        false,
    ));
    for (dim, lambda) in [(1, 0.0), (2, 0.05)] {
        let w = periodic(dim, 4)?;
        let m = SpinGlassModel::new(&w, lambda, 1.0, Bonds::random(&w, 0.4, 11))?;
        let mut s = m.state(Field::random_uniform(&w, 1, -1.0, 1.0, 5));
        if let Some(v) = s.v.as_mut() {
            *v = Field::random_uniform(&w, 1, -0.5, 0.5, 6);
        }
        out.push((Box::new(m), s, true));
    }
    let w = periodic(2, 4)?;
    let d = DcglModel::new(&w, 0.7)?;
    out.push((
        Box::new(d),
        State::gradient(Field::random_uniform(&w, 2, -1.0, 1.0, 8)),
        true,
    ));
    Ok(out)
}

fn balance(rep: &mut Report) -> Result<()> {
    for (model, state, pointwise) in zoo()? {
        let t = evaluate_triple(model.as_ref(), &state)?;
        let scale = 1.0 + t.energy_sup() + t.flux_sup_sq().sqrt();
        let defect = balance_defect(model.as_ref(), &state)?.sup_norm();
        rep.check(
            &format!(
                "balance identity {} N={}",
                model.name(),
                model.window().dim()
            ),
            defect <= 1e-10 * scale,
            format!("defect {defect:.3e}"),
        );
        let nonneg = t.d.values().iter().all(|&d| d >= 0.0);
        rep.check(
            &format!(
                "dissipation nonnegative {} N={}",
                model.name(),
                model.window().dim()
            ),
            nonneg,
            String::new(),
        );
        if pointwise {
            let excess = check_a5(&t, model.beta(&t));
            let tol = 1e-12 * t.flux_sup_sq().max(1.0);
            rep.check(
                &format!(
                    "flux-dissipation inequality {} N={}",
                    model.name(),
                    model.window().dim()
                ),
                excess <= tol,
                format!("max excess {excess:.3e}"),
            );
        }
    }
    // The cube-wise ledger residual must shrink fourfold when dt halves.
    let w = periodic(1, 32)?;
    let m = FkModel::gradient(&w, Arc::new(CosinePotential::unit_curvature()));
    let initial = m.state(Field::random_uniform(&w, 1, -1.0, 1.0, 1));
    let mut residuals = Vec::new();
    for dt in [4e-3, 2e-3, 1e-3] {
        let spec = IntegratorSpec::new(Scheme::Rk4, dt, 2.0, 1)?;
        let (_, ledger) = run_ledger(&m, &initial, &spec, &[4, 8])?;
        residuals.push(ledger.max_residual());
    }
    let ratios = [residuals[0] / residuals[1], residuals[1] / residuals[2]];
    rep.check(
        "balance ledger residual order",
        ratios.iter().all(|r| (3.0..=5.0).contains(r)),
        format!("halving ratios {:.3}, {:.3}", ratios[0], ratios[1]),
    );
    Ok(())
}

fn bounds(rep: &mut Report) -> Result<()> {
    let w = periodic(1, 64)?;
    let m = FkModel::gradient(&w, Arc::new(CosinePotential::unit_curvature()));
    let spec = IntegratorSpec::new(Scheme::Rk4, 0.01, 20.0, 10)?;
    for seed in 0..5u64 {
        let initial = m.state(Field::random_uniform(&w, 1, -1.0, 1.0, seed));
        let (_, ledger) = run_ledger(&m, &initial, &spec, &[2, 4, 8, 16, 32])?;
        let flux = flux_reports(&ledger)?;
        rep.check(
            &format!("flux bound N=1 seed {seed}"),
            flux.iter().all(|r| r.satisfied),
            format!(
                "worst observed/bound {:.3}",
                flux.iter()
                    .map(|r| r.observed / r.bound)
                    .fold(0.0, f64::max)
            ),
        );
        let diss = dissipation_reports(&ledger, 8, &[10.0, 20.0], 10.0)?;
        rep.check(
            &format!("dissipation growth N=1 seed {seed}"),
            diss.iter().all(|r| r.satisfied),
            String::new(),
        );
        let mut relax = true;
        for r in [2, 4, 8] {
            for eps in [1e-2, 1e-3] {
                relax &= relaxation_report(&ledger, r, eps)?.satisfied;
            }
        }
        rep.check(
            &format!("relaxation time N=1 seed {seed}"),
            relax,
            String::new(),
        );
    }
    for (dim, radius) in [(2, 16), (3, 8)] {
        let w = periodic(dim, radius)?;
        let m = FkModel::gradient(&w, Arc::new(CosinePotential::unit_curvature()));
        let initial = m.state(Field::random_uniform(&w, dim, -1.0, 1.0, 3));
        let spec = IntegratorSpec::new(Scheme::Rk4, 0.01, 5.0, 10)?;
        let radii: Vec<i64> = (1..=radius / 2).collect();
        let (_, ledger) = run_ledger(&m, &initial, &spec, &radii)?;
        let flux = flux_reports(&ledger)?;
        rep.check(
            &format!("flux bound N={dim}"),
            flux.iter().all(|r| r.satisfied),
            String::new(),
        );
    }
    Ok(())
}

fn recurrence(rep: &mut Report) -> Result<()> {
    let mut worst: f64 = 0.0;
    for (lambda, eps) in [(1.0, 1.0), (4.0, 1.0), (1.0, 4.0)] {
        let p = RecurrenceParams::new(1, lambda, eps)?;
        for r in [1, 5, 20] {
            let g = stable_manifold(r, &p, 1e-12)?.g_s;
            worst = worst.max((g - (lambda / eps as f64).sqrt()).abs());
        }
    }
    rep.check(
        "recurrence N=1 manifold",
        worst <= 1e-8,
        format!("max error {worst:.3e}"),
    );
    for dim in [2, 3, 4] {
        let mut ok = true;
        let mut monotone = true;
        for lambda in [0.25, 1.0, 4.0] {
            for eps in [1e-4, 1e-2, 1.0] {
                let p = RecurrenceParams::new(dim, lambda, eps)?;
                let checks = check_ricatti_bounds(&p, [1, 2, 4, 8, 16, 32], 1e-10)?;
                ok &= checks.iter().all(|c| c.satisfied);
                monotone &= checks.windows(2).all(|c| c[1].g_s <= c[0].g_s + 1e-9);
            }
        }
        rep.check(&format!("recurrence bounds N={dim}"), ok, String::new());
        rep.check(
            &format!("recurrence manifold decreasing N={dim}"),
            monotone,
            String::new(),
        );
    }
    Ok(())
}

fn coarsen(rep: &mut Report) -> Result<()> {
    for dim in [1, 2] {
        let cfg = CoarseningConfig {
            dim,
            radius: 16,
            t_end: 5.0,
            ..CoarseningConfig::default()
        };
        let start = sample_initial(&cfg)?;
        let base = run_from(&cfg, &start)?;
        rep.check(
            &format!("coarsen ordering cone N={dim}"),
            base.max_cone_excess <= 1e-6,
            format!("max excess {:.3e}", base.max_cone_excess),
        );
        let reflected = run_from(&cfg, &start.reflect())?;
        let diff = reflected.last().u.max_abs_diff(&base.last().reflect().u);
        rep.check(
            &format!("coarsen reflection N={dim}"),
            diff <= 1e-8,
            format!("{diff:.3e}"),
        );
        let w = start.u.window().clone();
        let moved = |f: &Field| {
            let mut out = f.clone();
            for site in 0..w.n_sites() {
                out.set(w.offset(site, 0, 3), 0, f.get(site, 0));
            }
            out
        };
        let shifted = OrderingState {
            u: moved(&start.u),
            v: start.v.as_ref().map(moved),
        };
        let translated = run_from(&cfg, &shifted)?;
        let diff = translated.last().u.max_abs_diff(&moved(&base.last().u));
        rep.check(
            &format!("coarsen translation N={dim}"),
            diff <= 1e-8,
            format!("{diff:.3e}"),
        );
        let bottom = OrderingState {
            u: Field::zeros(&w, 1),
            v: start.v.clone(),
        };
        let gap = verify_ordering(&cfg, &bottom, &start, 1e-8)?;
        rep.check(
            &format!("coarsen order preservation N={dim}"),
            gap <= 1e-8,
            format!("{gap:.3e}"),
        );
    }
    Ok(())
}
