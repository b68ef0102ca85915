//! The flux-majorizing recurrence
//! `G_{r+1} = G_r - lambda r^{N-1} + eps G_r^2 / r^{N-1}`,
//! its compactified map `H(s, g)` and the stable manifold `g_s(r)`.

use crate::error::{Error, Result};

/// Step budget for one above/below classification.
pub const DEFAULT_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrenceParams {
    pub dim: usize,
    pub lambda: f64,
    pub eps: f64,
}

impl RecurrenceParams {
    pub fn new(dim: usize, lambda: f64, eps: f64) -> Result<Self> {
        if dim == 0 || !(lambda > 0.0) || !(eps > 0.0) || !lambda.is_finite() || !eps.is_finite() {
            return Err(Error::Argument(format!(
                "recurrence needs N >= 1, lambda > 0, eps > 0; got N = {dim}, lambda = {lambda}, eps = {eps}"
            )));
        }
        Ok(Self { dim, lambda, eps })
    }

    /// `sqrt(lambda / eps)`, the upper fixed point of the limit dynamics.
    pub fn saddle(&self) -> f64 {
        (self.lambda / self.eps).sqrt()
    }

    fn weight(&self, r: f64) -> f64 {
        r.powi(self.dim as i32 - 1)
    }
}

/// One step in `(r, g = G / r^{N-1})` coordinates.
pub fn g_map(g: f64, r: u64, p: &RecurrenceParams) -> f64 {
    let r = r as f64;
    (g - p.lambda + p.eps * g * g) * (r / (r + 1.0)).powi(p.dim as i32 - 1)
}

/// `G_{r0}, G_{r0+1}, ..., G_{r0+steps}`; stops early once a value overflows.
pub fn iterate_big_g(g0: f64, r0: u64, p: &RecurrenceParams, steps: usize) -> Result<Vec<f64>> {
    if r0 < 1 || steps < 1 {
        return Err(Error::Argument("need r0 >= 1 and steps >= 1".into()));
    }
    let mut out = Vec::with_capacity(steps + 1);
    out.push(g0);
    let mut big = g0;
    for k in 0..steps {
        let w = p.weight((r0 + k as u64) as f64);
        big = big - p.lambda * w + p.eps * big * big / w;
        out.push(big);
        if !big.is_finite() {
            break;
        }
    }
    Ok(out)
}

/// Companion `g_r = G_r / r^{N-1}` of a sequence started at `r0`.
pub fn companion(sequence: &[f64], r0: u64, p: &RecurrenceParams) -> Vec<f64> {
    sequence
        .iter()
        .enumerate()
        .map(|(k, big)| big / p.weight((r0 + k as u64) as f64))
        .collect()
}

/// `H(s, g) = (1 / (2 - s), (g - lambda + eps g^2) (1 / (2 - s))^{N-1})`.
pub fn map_h(s: f64, g: f64, p: &RecurrenceParams) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Argument(format!("s must lie in [0, 1], got {s}")));
    }
    let q = 1.0 / (2.0 - s);
    Ok((q, (g - p.lambda + p.eps * g * g) * q.powi(p.dim as i32 - 1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// `g_k -> +infinity`.
    Above,
    /// `g_k` falls below the saddle value and decays.
    Below,
}

/// Classifies the orbit of `g` started at radius `r`.
pub fn classify(g: f64, r: u64, p: &RecurrenceParams, tol: f64, budget: usize) -> Result<Classification> {
    let saddle = p.saddle();
    let above = 10.0 * g.max(saddle);
    let below = saddle - 10.0 * tol;
    let mut x = g;
    for k in 0..budget {
        if !x.is_finite() || x > above {
            return Ok(Classification::Above);
        }
        if x < below {
            return Ok(Classification::Below);
        }
        x = g_map(x, r + k as u64, p);
    }
    Err(Error::Inconclusive {
        lo: g,
        hi: g,
        steps: budget,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldSample {
    pub r: u64,
    /// Bracket midpoint.
    pub g_s: f64,
    /// Final bracket width.
    pub width: f64,
}

pub fn stable_manifold(r: u64, p: &RecurrenceParams, tol: f64) -> Result<ManifoldSample> {
    stable_manifold_with_budget(r, p, tol, DEFAULT_BUDGET)
}

/// Bisection for the height separating orbits that diverge upwards from
/// orbits that decay, at fixed `r`.
pub fn stable_manifold_with_budget(r: u64, p: &RecurrenceParams, tol: f64, budget: usize) -> Result<ManifoldSample> {
    if r < 1 || !(tol > 0.0) {
        return Err(Error::Argument(format!("need r >= 1 and tol > 0, got r = {r}, tol = {tol}")));
    }
    let saddle = p.saddle();
    let mut lo = saddle;
    let mut span = p.lambda / p.eps + 1.0 / p.eps + 1.0;
    let mut hi = saddle + span;
    let wrap = |e: Error, lo: f64, hi: f64| match e {
        Error::Inconclusive { steps, .. } => Error::Inconclusive { lo, hi, steps },
        other => other,
    };
    loop {
        match classify(hi, r, p, tol, budget).map_err(|e| wrap(e, lo, hi))? {
            Classification::Above => break,
            Classification::Below => {
                lo = hi;
                span *= 2.0;
                hi = saddle + span;
                if !hi.is_finite() {
                    return Err(Error::Inconclusive { lo, hi, steps: budget });
                }
            }
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match classify(mid, r, p, tol, budget).map_err(|e| wrap(e, lo, hi))? {
            Classification::Above => hi = mid,
            Classification::Below => lo = mid,
        }
    }
    Ok(ManifoldSample {
        r,
        g_s: 0.5 * (lo + hi),
        width: hi - lo,
    })
}

/// Comparison of the computed manifold against the closed-form bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct RicattiCheck {
    pub r: u64,
    pub g_s: f64,
    /// `G_r = g_s(r) r^{N-1}`.
    pub big_g: f64,
    /// `sqrt(lambda / eps)` for `N = 1`, the all-dimension bound otherwise.
    pub bound: f64,
    /// The logarithmic `N = 2` bound where `r sqrt(lambda eps) <= 1/2`.
    pub bound2: Option<f64>,
    pub skipped: Option<String>,
    pub satisfied: bool,
}

/// `sqrt(lambda/eps)` for `N = 1`, else
/// `(N-1)(1+1/r)^{N-2} r^{N-2} / eps + sqrt(lambda/eps) r^{N-1}`.
pub fn ricatti_bound(r: u64, p: &RecurrenceParams) -> f64 {
    let rf = r as f64;
    if p.dim == 1 {
        return p.saddle();
    }
    let n = p.dim as i32;
    (n - 1) as f64 * (1.0 + 1.0 / rf).powi(n - 2) * rf.powi(n - 2) / p.eps + p.saddle() * rf.powi(n - 1)
}

/// `12 / (-eps log(2 r^2 lambda eps))` for `N = 2` and `r sqrt(lambda eps) <= 1/2`.
pub fn ricatti_bound2(r: u64, p: &RecurrenceParams) -> Result<f64> {
    let rf = r as f64;
    if p.dim != 2 {
        return Err(Error::Inapplicable("the logarithmic bound is for N = 2".into()));
    }
    if rf * (p.lambda * p.eps).sqrt() > 0.5 {
        return Err(Error::Inapplicable(format!(
            "r sqrt(lambda eps) = {} exceeds 1/2",
            rf * (p.lambda * p.eps).sqrt()
        )));
    }
    Ok(12.0 / (-p.eps * (2.0 * rf * rf * p.lambda * p.eps).ln()))
}

pub fn check_ricatti_bounds(
    p: &RecurrenceParams,
    radii: impl IntoIterator<Item = u64>,
    tol: f64,
) -> Result<Vec<RicattiCheck>> {
    radii
        .into_iter()
        .map(|r| {
            let m = stable_manifold(r, p, tol)?;
            let w = (r as f64).powi(p.dim as i32 - 1);
            let big_g = m.g_s * w;
            let slack = (m.width + tol) * w;
            let bound = ricatti_bound(r, p);
            let (bound2, skipped) = match ricatti_bound2(r, p) {
                Ok(b) => (Some(b), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let satisfied = big_g <= bound + slack && bound2.map_or(true, |b| big_g <= b + slack);
            Ok(RicattiCheck {
                r,
                g_s: m.g_s,
                big_g,
                bound,
                bound2,
                skipped,
                satisfied,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GRecurrentCheck {
    /// `sum_{r in J} 1 / r^{N-1}`.
    pub sum: f64,
    /// `(1 + lambda C) / (lambda eps)`.
    pub bound: f64,
    /// `C = max_k G_k^2 / r_k^{N-1}`.
    pub c: f64,
    pub satisfied: bool,
}

/// Runs `G_0 = eps`, `G_k = G_{k-1} + lambda G_{k-1}^2 / r_{k-1}^{N-1}` along
/// the increasing radii `set` and compares `sum 1/r^{N-1}` with its bound.
pub fn grecurrent_check(set: &[u64], dim: usize, lambda: f64, eps: f64) -> Result<GRecurrentCheck> {
    if set.is_empty() || set[0] < 1 || set.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument("radii must be positive and strictly increasing".into()));
    }
    if !(lambda > 0.0) || !(eps > 0.0) || dim == 0 {
        return Err(Error::Argument("need lambda > 0, eps > 0, N >= 1".into()));
    }
    let mut g = eps;
    let mut c: f64 = 0.0;
    let mut sum = 0.0;
    for &r in set {
        let w = (r as f64).powi(dim as i32 - 1);
        c = c.max(g * g / w);
        sum += 1.0 / w;
        g += lambda * g * g / w;
        if !g.is_finite() {
            return Err(Error::Argument("sequence overflowed; the boundedness hypothesis fails".into()));
        }
    }
    let bound = (1.0 + lambda * c) / (lambda * eps);
    Ok(GRecurrentCheck {
        sum,
        bound,
        c,
        satisfied: sum <= bound * (1.0 + 1e-12),
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn unit() -> RecurrenceParams {
        RecurrenceParams::new(1, 1.0, 1.0).unwrap()
    }

    #[test]
    fn fixed_point_sequence() {
        let seq = iterate_big_g(1.0, 1, &unit(), 20).unwrap();
        assert!(seq.iter().all(|&g| g == 1.0));
    }

    #[test]
    fn above_diverges_below_decays() {
        let up = iterate_big_g(2.0, 1, &unit(), 5).unwrap();
        assert_eq!(up[1], 5.0);
        assert!(up.windows(2).all(|w| w[1] > w[0]));
        let down = iterate_big_g(0.5, 1, &unit(), 200).unwrap();
        assert!(down[1] < 0.5);
        // -1 is a neutral fixed point; the orbit stays trapped around it.
        assert!(down[2..].iter().all(|g| (-1.5..0.0).contains(g)));
        assert!((down.last().unwrap() + 1.0).abs() < 0.2);
    }

    #[test]
    fn h_fixed_points_and_origin() {
        let p = RecurrenceParams::new(3, 4.0, 1.0).unwrap();
        assert_eq!(map_h(1.0, 2.0, &p).unwrap(), (1.0, 2.0));
        assert_eq!(map_h(1.0, -2.0, &p).unwrap(), (1.0, -2.0));
        let (s, g) = map_h(0.0, 3.0, &p).unwrap();
        assert_eq!(s, 0.5);
        assert_relative_eq!(g, (3.0 - 4.0 + 9.0) / 4.0);
        assert!(map_h(1.5, 0.0, &p).is_err());
    }

    #[test]
    fn conjugacy_with_h() {
        let p = RecurrenceParams::new(3, 0.7, 0.05).unwrap();
        let seq = iterate_big_g(3.0, 2, &p, 10).unwrap();
        let g = companion(&seq, 2, &p);
        let (mut s, mut h) = (1.0 - 1.0 / 2.0, g[0]);
        for k in 1..g.len() {
            (s, h) = map_h(s, h, &p).unwrap();
            assert_relative_eq!(s, 1.0 - 1.0 / (2 + k) as f64, max_relative = 1e-14);
            assert_relative_eq!(h, g[k], max_relative = 1e-12);
        }
    }

    #[test]
    fn one_dimensional_manifold_is_saddle() {
        for (l, e, want) in [(1.0, 1.0, 1.0), (4.0, 1.0, 2.0), (1.0, 4.0, 0.5)] {
            let p = RecurrenceParams::new(1, l, e).unwrap();
            for r in [1, 5, 20] {
                let m = stable_manifold(r, &p, 1e-8).unwrap();
                assert!((m.g_s - want).abs() <= 1e-8, "{l} {e} {r}: {}", m.g_s);
            }
        }
    }

    #[test]
    fn budget_exhaustion_is_inconclusive() {
        let p = unit();
        assert!(matches!(classify(1.0, 1, &p, 1e-8, 100), Err(Error::Inconclusive { .. })));
    }

    #[test]
    fn all_dimension_bound_example() {
        let p = RecurrenceParams::new(3, 1.0, 0.01).unwrap();
        // 2 (5/4) 4 / 0.01 + 10 * 16
        assert_relative_eq!(ricatti_bound(4, &p), 1160.0, max_relative = 1e-12);
        let check = &check_ricatti_bounds(&p, [4], 1e-6).unwrap()[0];
        assert!(check.satisfied && check.big_g <= 4160.0, "{check:?}");
        assert!(check.skipped.is_some());
    }

    #[test]
    fn logarithmic_bound_example() {
        let p = RecurrenceParams::new(2, 1.0, 1e-4).unwrap();
        let b = ricatti_bound2(10, &p).unwrap();
        assert_relative_eq!(b, 12.0 / (1e-4 * 50f64.ln()), max_relative = 1e-12);
        assert!((b - 3.067e4).abs() < 5.0);
        let check = &check_ricatti_bounds(&p, [10], 1e-6).unwrap()[0];
        assert!(check.satisfied, "{check:?}");
        assert!(ricatti_bound2(5000, &p).is_err());
    }

    #[test]
    fn manifold_decreases_in_r() {
        for dim in [2, 3] {
            let p = RecurrenceParams::new(dim, 1.0, 0.01).unwrap();
            let g: Vec<f64> = (1..=12).map(|r| stable_manifold(r, &p, 1e-8).unwrap().g_s).collect();
            assert!(g.windows(2).all(|w| w[1] <= w[0] + 1e-7), "{dim}: {g:?}");
        }
    }

    #[test]
    fn grecurrent_bound_on_dense_set() {
        let set: Vec<u64> = (1..200).collect();
        let check = grecurrent_check(&set, 1, 1e-3, 1e-2).unwrap();
        assert!(check.satisfied, "{check:?}");
        assert!(grecurrent_check(&[3, 2], 1, 1.0, 1.0).is_err());
    }
}
