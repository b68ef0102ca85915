use std::sync::Arc;

use latteds::diagnostics::run_ledger;
use latteds::eds::{balance_defect, evaluate_triple, LatticeEds, State};
use latteds::integrator::{run, IntegratorSpec};
use latteds::lattice::{Boundary, Field, LatticeWindow};
use latteds::models::{
    Bonds, CosinePotential, DcglModel, DcglOriginalFrame, EnergySplit, FkModel, GeneralizedFkModel, Interaction,
    MultiRangeFlux, MultiRangeModel, SpinGlassModel, SpringInteraction,
};

fn window(dim: usize, radius: i64) -> Arc<LatticeWindow> {
    LatticeWindow::new(dim, radius, Boundary::Periodic, 0).unwrap()
}

fn spring(k: f64, c: f64, a: f64) -> Arc<dyn Interaction> {
    Arc::new(SpringInteraction::new(k, c, a, 1))
}

/// Every model with a random in-range state.
fn zoo() -> Vec<(Box<dyn LatticeEds>, State, bool)> {
    let mut out: Vec<(Box<dyn LatticeEds>, State, bool)> = Vec::new();
    let cos = Arc::new(CosinePotential::unit_curvature());
    for (dim, lambda) in [(1, 0.0), (2, 0.0), (1, 0.3), (2, 0.5)] {
        let w = window(dim, 4);
        let m = FkModel::new(&w, lambda, cos.clone()).unwrap();
        let mut s = m.state(Field::random_uniform(&w, dim, -1.0, 1.0, 7 + dim as u64));
        if let Some(v) = s.v.as_mut() {
            *v = Field::random_uniform(&w, dim, -0.5, 0.5, 99);
        }
        out.push((Box::new(m), s, true));
    }
    let w = window(1, 6);
    let g = GeneralizedFkModel::new(&w, spring(1.3, 0.2, 0.05)).unwrap();
    out.push((Box::new(g), State::gradient(Field::random_uniform(&w, 1, -1.0, 1.0, 3)), true));
    let terms = vec![(1, spring(1.0, 0.0, 0.03)), (2, spring(0.4, 0.1, 0.0)), (-3, spring(0.2, 0.0, 0.01))];
    let mr = MultiRangeModel::new(&w, terms).unwrap();
    out.push((Box::new(mr), State::gradient(Field::random_uniform(&w, 1, -1.0, 1.0, 4)), false));
    let mr = MultiRangeModel::new(&w, vec![(1, spring(1.0, 0.0, 0.03))]).unwrap();
    out.push((Box::new(mr), State::gradient(Field::random_uniform(&w, 1, -1.0, 1.0, 5)), true));
    for (dim, lambda, split) in [(1, 0.0, EnergySplit::Backward), (2, 0.0, EnergySplit::Symmetric), (2, 0.05, EnergySplit::Backward)] {
        let w = window(dim, 4);
        let bonds = Bonds::random(&w, 0.4, 11);
        let m = SpinGlassModel::new(&w, lambda, 1.0, bonds).unwrap().with_split(split);
        let mut s = m.state(Field::random_uniform(&w, 1, -1.0, 1.0, 5));
        if let Some(v) = s.v.as_mut() {
            *v = Field::random_uniform(&w, 1, -0.5, 0.5, 6);
        }
        out.push((Box::new(m), s, split == EnergySplit::Backward));
    }
    let w = window(2, 4);
    let d = DcglModel::new(&w, 0.7).unwrap();
    out.push((Box::new(d), State::gradient(Field::random_uniform(&w, 2, -1.0, 1.0, 8)), true));
    out
}

#[test]
fn energy_rate_matches_central_difference_oracle() {
    let h = 1e-5;
    for (model, state, _) in zoo() {
        let rhs = model.rhs(&state).unwrap();
        let ahead = evaluate_triple(model.as_ref(), &state.axpy(h, &rhs).unwrap()).unwrap();
        let behind = evaluate_triple(model.as_ref(), &state.axpy(-h, &rhs).unwrap()).unwrap();
        let oracle = ahead.e.sub(&behind.e).unwrap().map(|x| x / (2.0 * h));
        let t = evaluate_triple(model.as_ref(), &state).unwrap();
        let w = model.window();
        let mut worst: f64 = 0.0;
        for site in 0..w.n_sites() {
            let mut div = 0.0;
            for axis in 0..w.dim() {
                div += t.f.get(site, axis) - t.f.get(w.backward(site, axis), axis);
            }
            worst = worst.max((oracle.get(site, 0) - (div - t.d.get(site, 0))).abs());
        }
        assert!(worst < 1e-6, "{}: central difference differs by {worst:e}", model.name());
    }
}

#[test]
fn analytic_balance_and_nonnegativity() {
    for (model, state, pointwise) in zoo() {
        let t = evaluate_triple(model.as_ref(), &state).unwrap();
        let scale = t.e.sup_norm().max(t.d.sup_norm()).max(1.0);
        let defect = balance_defect(model.as_ref(), &state).unwrap().sup_norm();
        assert!(defect <= 1e-10 * scale, "{}: defect {defect:e}", model.name());
        assert!(t.e.values().iter().all(|&x| x >= 0.0), "{}: negative energy", model.name());
        assert!(t.d.values().iter().all(|&x| x >= 0.0), "{}: negative dissipation", model.name());
        // Fluxes that read a neighbour's velocity are not pointwise bounded.
        if !pointwise {
            continue;
        }
        let beta = model.beta(&t);
        let a5: f64 = (0..model.window().n_sites())
            .map(|s| t.f.site(s).iter().map(|x| x * x).sum::<f64>() - beta * t.d.get(s, 0))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(a5 <= 1e-12 * t.flux_sup_sq().max(1.0), "{}: flux exceeds modulus by {a5:e}", model.name());
    }
}

#[test]
fn multirange_flux_variants_split_the_axioms() {
    // The one-term-per-site flux obeys the pointwise modulus bound; the
    // crossing-bond flux obeys the balance. Only nearest neighbours get both.
    let w = window(1, 8);
    let terms = vec![(1, spring(1.0, 0.0, 0.03)), (2, spring(0.4, 0.1, 0.0)), (-3, spring(0.2, 0.0, 0.01))];
    let crossing = MultiRangeModel::new(&w, terms).unwrap();
    let verbatim = crossing.clone().with_flux(MultiRangeFlux::Verbatim);
    let s = State::gradient(Field::random_uniform(&w, 1, -1.0, 1.0, 4));
    assert!(balance_defect(&crossing, &s).unwrap().sup_norm() < 1e-12);
    assert!(balance_defect(&verbatim, &s).unwrap().sup_norm() > 1e-6);
    let t = evaluate_triple(&verbatim, &s).unwrap();
    let beta = verbatim.beta(&t);
    for site in 0..w.n_sites() {
        assert!(t.f.get(site, 0).powi(2) <= beta * t.d.get(site, 0) + 1e-12);
    }
    for model in [crossing, verbatim] {
        let model = MultiRangeModel::new(&w, vec![(1, spring(1.0, 0.0, 0.03))]).unwrap().with_flux(model.flux());
        let t = evaluate_triple(&model, &s).unwrap();
        let beta = model.beta(&t);
        assert!(balance_defect(&model, &s).unwrap().sup_norm() < 1e-12);
        for site in 0..w.n_sites() {
            assert!(t.f.get(site, 0).powi(2) <= beta * t.d.get(site, 0) + 1e-12);
        }
    }
}

#[test]
fn known_equilibria_are_stationary() {
    for (model, _, _) in zoo() {
        for eq in model.known_equilibria() {
            assert!(model.rhs(&eq).unwrap().max_magnitude().0 <= 1e-12, "{}", model.name());
            assert!(evaluate_triple(model.as_ref(), &eq).unwrap().d.sup_norm() <= 1e-24);
        }
    }
}

#[test]
fn flux_modulus_holds_along_trajectories() {
    let cos = Arc::new(CosinePotential::unit_curvature());
    let spec = IntegratorSpec::rk4(1e-2, 5.0).unwrap();
    let w = window(1, 24);
    let fk = FkModel::gradient(&w, cos.clone());
    let (_, ledger) = run_ledger(&fk, &fk.state(Field::random_uniform(&w, 1, -2.0, 2.0, 1)), &spec, &[4, 8]).unwrap();
    assert!(ledger.a5_worst <= 1e-12, "fk: {:e}", ledger.a5_worst);
    let w = window(2, 6);
    let sg = SpinGlassModel::new(&w, 0.0, 1.0, Bonds::random(&w, 0.5, 2)).unwrap();
    let (_, ledger) = run_ledger(&sg, &sg.state(Field::random_uniform(&w, 1, -1.0, 1.0, 2)), &spec, &[2, 4]).unwrap();
    assert!(ledger.a5_worst <= 1e-12, "spin glass: {:e}", ledger.a5_worst);
}

#[test]
fn fk_gradient_flow_preserves_order() {
    let w = window(1, 16);
    let fk = FkModel::gradient(&w, Arc::new(CosinePotential::unit_curvature()));
    let spec = IntegratorSpec::rk4(1e-2, 5.0).unwrap().with_sample_every(10).unwrap();
    for seed in 0..5 {
        let lower = Field::random_uniform(&w, 1, -2.0, 2.0, seed);
        let upper = lower.add(&Field::random_uniform(&w, 1, 0.0, 0.5, seed + 100)).unwrap();
        let a = run(&fk, &fk.state(lower), &spec).unwrap();
        let b = run(&fk, &fk.state(upper), &spec).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            let gap = x.u.sub(&y.u).unwrap().values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(gap <= 1e-8, "seed {seed}: order violated by {gap:e}");
        }
    }
}

#[test]
fn spin_glass_keeps_unit_box() {
    for lambda in [0.0, 0.05] {
        let w = window(2, 5);
        let m = SpinGlassModel::new(&w, lambda, 1.0, Bonds::random(&w, 0.5, 9)).unwrap();
        let s = m.state(Field::random_uniform(&w, 1, -1.0, 1.0, 10));
        let traj = run(&m, &s, &IntegratorSpec::rk4(1e-2, 10.0).unwrap()).unwrap();
        let worst = traj.states.iter().map(|s| s.u.sup_norm()).fold(0.0, f64::max);
        assert!(worst <= 1.0 + 1e-9, "lambda {lambda}: |u| reached {worst}");
    }
}

#[test]
fn dcgl_frames_agree() {
    let w = window(1, 6);
    let lambda = 0.9;
    let rot = DcglModel::new(&w, lambda).unwrap();
    let orig = DcglOriginalFrame::new(&w, lambda).unwrap();
    let u0 = State::gradient(Field::random_uniform(&w, 2, -0.8, 0.8, 21));
    let spec = IntegratorSpec::rk4(1e-3, 1.0).unwrap().with_sample_every(100).unwrap();
    let a = run(&orig, &u0, &spec).unwrap();
    let b = run(&rot, &u0, &spec).unwrap();
    for ((t, u), v) in a.times.iter().zip(&a.states).zip(&b.states) {
        let diff = orig.to_rotating(&u.u, *t).max_abs_diff(&v.u);
        assert!(diff < 1e-8, "t = {t}: frames differ by {diff:e}");
    }
}

#[test]
fn rk4_self_convergence_is_fourth_order() {
    let w = window(1, 8);
    let fk = FkModel::gradient(&w, Arc::new(CosinePotential::unit_curvature()));
    let s = fk.state(Field::random_uniform(&w, 1, -1.0, 1.0, 4));
    let end = |dt: f64| run(&fk, &s, &IntegratorSpec::rk4(dt, 2.0).unwrap()).unwrap().last().u.clone();
    let (a, b, c) = (end(0.1), end(0.05), end(0.025));
    let ratio = a.max_abs_diff(&b) / b.max_abs_diff(&c);
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn equilibrium_does_not_drift_and_runs_are_deterministic() {
    let w = window(2, 4);
    let fk = FkModel::gradient(&w, Arc::new(CosinePotential::unit_curvature()));
    let eq = fk.state(Field::constant(&w, 2, 1.0));
    let spec = IntegratorSpec::rk4(1e-2, 100.0).unwrap().with_sample_every(10_000).unwrap();
    let traj = run(&fk, &eq, &spec).unwrap();
    assert!(traj.last().u.max_abs_diff(&eq.u) <= 1e-10);
    let s = fk.state(Field::random_uniform(&w, 2, -1.0, 1.0, 1));
    let spec = IntegratorSpec::rk4(1e-2, 1.0).unwrap();
    assert_eq!(run(&fk, &s, &spec).unwrap(), run(&fk, &s, &spec).unwrap());
}
