/// Nearest-neighbour interaction `L(x, y)` on `R^M x R^M` with explicit partial
/// derivatives.
pub trait Interaction: Send + Sync {
    fn width(&self) -> usize;

    fn value(&self, x: &[f64], y: &[f64]) -> f64;

    /// `L_1(x, y)`, written into `out`.
    fn d1(&self, x: &[f64], y: &[f64], out: &mut [f64]);

    /// `L_2(x, y)`, written into `out`.
    fn d2(&self, x: &[f64], y: &[f64], out: &mut [f64]);

    /// A closed-form non-decreasing `b` with `|L_1(x, y)|^2 <= b(L(x, y))`,
    /// when one is known.
    fn modulus(&self, _level: f64) -> Option<f64> {
        None
    }

    /// Bound on the second derivatives, for step-size warnings.
    fn curvature_bound(&self) -> f64;
}

/// `L(x, y) = k/2 |y - x - c|^2 + A sum_j (1 - cos 2 pi x_j)`, componentwise
/// shift `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpringInteraction {
    pub stiffness: f64,
    pub shift: f64,
    pub amplitude: f64,
    pub width: usize,
}

impl SpringInteraction {
    pub fn new(stiffness: f64, shift: f64, amplitude: f64, width: usize) -> Self {
        assert!(stiffness > 0.0, "spring stiffness must be positive");
        assert!(amplitude >= 0.0, "potential amplitude must be nonnegative");
        assert!(width >= 1);
        Self {
            stiffness,
            shift,
            amplitude,
            width,
        }
    }
}

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

impl Interaction for SpringInteraction {
    fn width(&self) -> usize {
        self.width
    }

    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .map(|(&a, &b)| {
                let s = b - a - self.shift;
                0.5 * self.stiffness * s * s + self.amplitude * (1.0 - (TWO_PI * a).cos())
            })
            .sum()
    }

    fn d1(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        for ((o, &a), &b) in out.iter_mut().zip(x).zip(y) {
            *o = -self.stiffness * (b - a - self.shift) + TWO_PI * self.amplitude * (TWO_PI * a).sin();
        }
    }

    fn d2(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        for ((o, &a), &b) in out.iter_mut().zip(x).zip(y) {
            *o = self.stiffness * (b - a - self.shift);
        }
    }

    // L <= y bounds |y - x - c| by sqrt(2y/k), so |L_1| <= sqrt(2ky) + 2 pi A sqrt(M).
    fn modulus(&self, level: f64) -> Option<f64> {
        let level = level.max(0.0);
        let b = (2.0 * self.stiffness * level).sqrt()
            + TWO_PI * self.amplitude * (self.width as f64).sqrt();
        Some(b * b)
    }

    fn curvature_bound(&self) -> f64 {
        self.stiffness + TWO_PI * TWO_PI * self.amplitude
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn numeric_partials(l: &SpringInteraction, x: f64, y: f64) -> (f64, f64) {
        let h = 1e-6;
        let d1 = (l.value(&[x + h], &[y]) - l.value(&[x - h], &[y])) / (2.0 * h);
        let d2 = (l.value(&[x], &[y + h]) - l.value(&[x], &[y - h])) / (2.0 * h);
        (d1, d2)
    }

    proptest! {
        #[test]
        fn partials_match_finite_differences(x in -3.0..3.0f64, y in -3.0..3.0f64) {
            let l = SpringInteraction::new(1.3, 0.2, 0.05, 1);
            let (n1, n2) = numeric_partials(&l, x, y);
            let mut a = [0.0];
            let mut b = [0.0];
            l.d1(&[x], &[y], &mut a);
            l.d2(&[x], &[y], &mut b);
            prop_assert!((a[0] - n1).abs() < 1e-6);
            prop_assert!((b[0] - n2).abs() < 1e-6);
        }

        #[test]
        fn integer_periodic_and_nonnegative(x in -3.0..3.0f64, y in -3.0..3.0f64, k in -4i32..4) {
            let l = SpringInteraction::new(0.7, 0.4, 0.1, 1);
            let shifted = l.value(&[x + k as f64], &[y + k as f64]);
            prop_assert!((shifted - l.value(&[x], &[y])).abs() < 1e-9);
            prop_assert!(l.value(&[x], &[y]) >= 0.0);
        }

        #[test]
        fn closed_form_modulus_dominates(x in -3.0..3.0f64, y in -3.0..3.0f64) {
            let l = SpringInteraction::new(0.9, -0.3, 0.08, 2);
            let (xs, ys) = ([x, 0.5 * y], [y, x - 1.0]);
            let mut g = [0.0; 2];
            l.d1(&xs, &ys, &mut g);
            let g2 = g[0] * g[0] + g[1] * g[1];
            prop_assert!(g2 <= l.modulus(l.value(&xs, &ys)).unwrap() * (1.0 + 1e-12) + 1e-12);
        }
    }
}
