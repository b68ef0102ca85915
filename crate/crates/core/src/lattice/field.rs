use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::window::LatticeWindow;
use crate::error::{Error, Result};

/// A map from window sites to real vectors of fixed width.
///
/// Values are stored site-major: component `c` of site `s` lives at
/// `values[s * width + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    window: Arc<LatticeWindow>,
    width: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(window: &Arc<LatticeWindow>, width: usize) -> Self {
        Self::constant(window, width, 0.0)
    }

    pub fn constant(window: &Arc<LatticeWindow>, width: usize, value: f64) -> Self {
        assert!(width >= 1, "field width must be at least 1");
        Self {
            window: Arc::clone(window),
            width,
            values: vec![value; window.n_sites() * width],
        }
    }

    pub fn from_values(window: &Arc<LatticeWindow>, width: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || values.len() != window.n_sites() * width {
            return Err(Error::Argument(format!(
                "expected {} values of width {width}, got {}",
                window.n_sites() * width,
                values.len()
            )));
        }
        Ok(Self {
            window: Arc::clone(window),
            width,
            values,
        })
    }

    /// Builds a field by evaluating `f(coords, out)` at every site.
    pub fn from_fn(
        window: &Arc<LatticeWindow>,
        width: usize,
        mut f: impl FnMut(&[i64], &mut [f64]),
    ) -> Self {
        let mut field = Self::zeros(window, width);
        for site in 0..window.n_sites() {
            let coords = window.coords(site);
            f(&coords, field.site_mut(site));
        }
        field
    }

    /// Independent uniform values in `[lo, hi)` drawn in lexicographic site order.
    pub fn random_uniform(
        window: &Arc<LatticeWindow>,
        width: usize,
        lo: f64,
        hi: f64,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..window.n_sites() * width)
            .map(|_| rng.gen_range(lo..hi))
            .collect();
        Self {
            window: Arc::clone(window),
            width,
            values,
        }
    }

    /// Integer-valued random field in `[-bound, bound]`; arithmetic on such
    /// fields is exact in `f64` as long as intermediate magnitudes stay
    /// below `2^53`.
    pub fn random_integer(window: &Arc<LatticeWindow>, width: usize, bound: i64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..window.n_sites() * width)
            .map(|_| rng.gen_range(-bound..=bound) as f64)
            .collect();
        Self {
            window: Arc::clone(window),
            width,
            values,
        }
    }

    pub fn window(&self) -> &Arc<LatticeWindow> {
        &self.window
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn site(&self, site: usize) -> &[f64] {
        &self.values[site * self.width..(site + 1) * self.width]
    }

    #[inline]
    pub fn site_mut(&mut self, site: usize) -> &mut [f64] {
        &mut self.values[site * self.width..(site + 1) * self.width]
    }

    #[inline]
    pub fn get(&self, site: usize, component: usize) -> f64 {
        self.values[site * self.width + component]
    }

    #[inline]
    pub fn set(&mut self, site: usize, component: usize, value: f64) {
        self.values[site * self.width + component] = value;
    }

    /// Value at lattice coordinates, resolved through the boundary policy.
    pub fn at(&self, coords: &[i64], component: usize) -> f64 {
        self.get(self.window.resolve(coords), component)
    }

    pub fn same_shape(&self, other: &Field) -> bool {
        self.width == other.width && *self.window == *other.window
    }

    fn check_shape(&self, other: &Field) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::Argument(format!(
                "field shapes differ: width {} vs {}",
                self.width, other.width
            )));
        }
        Ok(())
    }

    pub fn component(&self, component: usize) -> Field {
        let values = self
            .values
            .chunks(self.width)
            .map(|chunk| chunk[component])
            .collect();
        Field {
            window: Arc::clone(&self.window),
            width: 1,
            values,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            window: Arc::clone(&self.window),
            width: self.width,
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.check_shape(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.check_shape(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    /// Pointwise product of two fields of equal width.
    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.check_shape(other)?;
        Ok(self.zip_with(other, |a, b| a * b))
    }

    /// Multiplies every component by a scalar field.
    pub fn scale_by(&self, scalar: &Field) -> Result<Field> {
        if scalar.width != 1 || *scalar.window != *self.window {
            return Err(Error::Argument("scale_by expects a scalar field on the same window".into()));
        }
        let mut out = self.clone();
        for site in 0..self.window.n_sites() {
            let s = scalar.values[site];
            out.site_mut(site).iter_mut().for_each(|x| *x *= s);
        }
        Ok(out)
    }

    /// Site-wise inner product, a scalar field.
    pub fn dot(&self, other: &Field) -> Result<Field> {
        self.check_shape(other)?;
        let values = self
            .values
            .chunks(self.width)
            .zip(other.values.chunks(self.width))
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum())
            .collect();
        Ok(Field {
            window: Arc::clone(&self.window),
            width: 1,
            values,
        })
    }

    /// `self + scale * other`, the update used by the explicit integrators.
    pub fn axpy(&self, scale: f64, other: &Field) -> Result<Field> {
        self.check_shape(other)?;
        Ok(self.zip_with(other, |a, b| a + scale * b))
    }

    fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        Field {
            window: Arc::clone(&self.window),
            width: self.width,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    /// Sum of component `component` over the listed sites, in list order.
    pub fn sum_over(&self, sites: &[usize], component: usize) -> f64 {
        sites.iter().map(|&s| self.get(s, component)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;

    #[test]
    fn random_fields_are_reproducible() {
        let w = LatticeWindow::new(2, 3, Boundary::Periodic, 0).unwrap();
        let a = Field::random_uniform(&w, 2, -1.0, 1.0, 7);
        let b = Field::random_uniform(&w, 2, -1.0, 1.0, 7);
        assert_eq!(a, b);
        let c = Field::random_integer(&w, 1, 5, 7);
        assert!(c.values().iter().all(|x| x.fract() == 0.0 && x.abs() <= 5.0));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let w = LatticeWindow::new(1, 3, Boundary::Periodic, 0).unwrap();
        let a = Field::zeros(&w, 1);
        let b = Field::zeros(&w, 2);
        assert!(a.add(&b).is_err());
        assert!(Field::from_values(&w, 1, vec![0.0; 3]).is_err());
    }

    #[test]
    fn dot_and_scale() {
        let w = LatticeWindow::new(1, 1, Boundary::Periodic, 0).unwrap();
        let a = Field::from_values(&w, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let d = a.dot(&a).unwrap();
        assert_eq!(d.values(), &[5.0, 25.0, 61.0]);
        let s = a.scale_by(&d).unwrap();
        assert_eq!(s.site(1), &[75.0, 100.0]);
    }
}
