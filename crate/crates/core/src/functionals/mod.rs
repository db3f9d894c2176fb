//! Translation-invariant scores `ξ(x, X)` of a point relative to a configuration.
//!
//! Every functional follows the convention `ξ(x, X) := ξ(x, X ∪ {x})` when
//! `x ∉ X`. Batch evaluation over all points of a configuration goes through
//! [`Functional::values`], which shares index structures between points.

mod components;
mod knn;
mod quantization;
mod rsa;
mod stabilization;
mod voronoi_length;

pub use components::{component_sizes, ComponentGraph, ComponentReciprocal};
pub use knn::{knn_edges, KnnLength};
pub(crate) use quantization::{affine_eval, table_eval};
pub use quantization::{ClipBox, Density, Quantization, QuantizationValue};
pub use rsa::{rsa_pack, rsa_radius, Rsa};
pub use stabilization::{linear_grid, stabilization_probe, Battery, StabilizationProbe};
pub use voronoi_length::{voronoi_finite_edges, VoronoiLength};

use std::fmt;

use crate::error::Result;
use crate::geometry::{Point, PointConfiguration, Window};
use crate::scalar::Scalar;

/// A score `ξ(x, X)`.
pub trait Functional<T: Scalar>: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Whether every point needs an arrival mark.
    fn requires_marks(&self) -> bool {
        false
    }

    /// `ξ(x, X)` for every point of `X`, in order.
    fn values(&self, cfg: &PointConfiguration<T>) -> Result<Vec<T>>;

    /// `ξ(x, X ∪ {x})`; when `x` is inserted it carries `mark` (or mark zero
    /// in a marked configuration).
    fn value_with_mark(
        &self,
        x: &Point<T>,
        mark: Option<T>,
        cfg: &PointConfiguration<T>,
    ) -> Result<T> {
        let (c, i) = cfg.with_point(x, mark)?;
        Ok(self.values(&c)?[i])
    }

    fn value(&self, x: &Point<T>, cfg: &PointConfiguration<T>) -> Result<T> {
        self.value_with_mark(x, None, cfg)
    }

    /// False only for scores that depend on absolute position.
    fn translation_invariant(&self) -> bool {
        true
    }

    /// True when the configuration is too small for a meaningful value; the
    /// value is then zero.
    fn degenerate(&self, _cfg: &PointConfiguration<T>) -> bool {
        false
    }
}

/// `ξ ≡ 1`: the empirical measure becomes the counting measure.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Count;

impl<T: Scalar> Functional<T> for Count {
    fn name(&self) -> &'static str {
        "count"
    }

    fn values(&self, cfg: &PointConfiguration<T>) -> Result<Vec<T>> {
        Ok(vec![T::one(); cfg.len()])
    }

    fn value_with_mark(
        &self,
        _x: &Point<T>,
        _mark: Option<T>,
        _cfg: &PointConfiguration<T>,
    ) -> Result<T> {
        Ok(T::one())
    }
}

/// Closed set of functionals selectable at run time.
#[derive(Clone, Debug)]
pub enum AnyFunctional<T> {
    Count(Count),
    Rsa(Rsa),
    KnnLength(KnnLength),
    Components(ComponentReciprocal<T>),
    VoronoiLength(VoronoiLength),
    Quantization(Quantization<T>),
}

macro_rules! dispatch {
    ($self:ident, $f:ident => $e:expr) => {
        match $self {
            AnyFunctional::Count($f) => $e,
            AnyFunctional::Rsa($f) => $e,
            AnyFunctional::KnnLength($f) => $e,
            AnyFunctional::Components($f) => $e,
            AnyFunctional::VoronoiLength($f) => $e,
            AnyFunctional::Quantization($f) => $e,
        }
    };
}

impl<T: Scalar> AnyFunctional<T> {
    /// Adapts the functional to samples on `window` of volume `lambda`:
    /// distortion cells are clipped to the window and the target density is
    /// rescaled by `lambda`. Other functionals are returned unchanged.
    pub fn for_window(&self, window: &Window<T>, lambda: f64) -> Result<Self> {
        Ok(match self {
            AnyFunctional::Quantization(q) => AnyFunctional::Quantization(
                q.clone()
                    .with_clip(ClipBox::from_window(window))
                    .with_density(q.density().clone(), lambda)?,
            ),
            other => other.clone(),
        })
    }

    /// Weights of the empirical measure: `ξ(x, X)` for every point, except
    /// that the distortion against a non-uniform density is `h(x)·ξ̂(x)`.
    pub fn atom_weights(&self, cfg: &PointConfiguration<T>) -> Result<Vec<f64>> {
        match self {
            AnyFunctional::Quantization(q) => q.atom_weights(cfg),
            f => Ok(f.values(cfg)?.into_iter().map(|v| v.as_f64()).collect()),
        }
    }
}

impl<T: Scalar> Functional<T> for AnyFunctional<T> {
    fn name(&self) -> &'static str {
        dispatch!(self, f => Functional::<T>::name(f))
    }
    fn requires_marks(&self) -> bool {
        dispatch!(self, f => Functional::<T>::requires_marks(f))
    }
    fn values(&self, cfg: &PointConfiguration<T>) -> Result<Vec<T>> {
        dispatch!(self, f => f.values(cfg))
    }
    fn value_with_mark(
        &self,
        x: &Point<T>,
        mark: Option<T>,
        cfg: &PointConfiguration<T>,
    ) -> Result<T> {
        dispatch!(self, f => f.value_with_mark(x, mark, cfg))
    }
    fn translation_invariant(&self) -> bool {
        dispatch!(self, f => Functional::<T>::translation_invariant(f))
    }
    fn degenerate(&self, cfg: &PointConfiguration<T>) -> bool {
        dispatch!(self, f => f.degenerate(cfg))
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// `n` uniform points in `[-l, l]^d`, with uniform marks when `marked`.
    pub fn uniform_config(
        seed: u64,
        d: usize,
        n: usize,
        l: f64,
        marked: bool,
    ) -> PointConfiguration<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = (0..n)
            .map(|_| {
                let c: Vec<f64> = (0..d).map(|_| rng.random_range(-l..l)).collect();
                Point::new(&c).unwrap()
            })
            .collect();
        let cfg = PointConfiguration::from_points(d, pts).unwrap();
        if marked {
            let m = (0..n).map(|_| rng.random::<f64>()).collect();
            cfg.with_marks(m).unwrap()
        } else {
            cfg
        }
    }

    /// Checks `ξ(x, X) = ξ(x + z, X + z)` on random shifts.
    pub fn check_translation<F: Functional<f64>>(
        f: &F,
        cfg: &PointConfiguration<f64>,
        seed: u64,
        tol: f64,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = f.values(cfg).unwrap();
        for _ in 0..3 {
            let c: Vec<f64> = (0..cfg.dim())
                .map(|_| rng.random_range(-50.0..50.0))
                .collect();
            let z = Point::new(&c).unwrap();
            let moved = f.values(&cfg.translate(&z)).unwrap();
            for (a, b) in base.iter().zip(&moved) {
                assert!(
                    (a - b).abs() <= tol * a.abs().max(1.0),
                    "{} not translation invariant: {a} vs {b}",
                    f.name()
                );
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_is_one_everywhere() {
        let cfg = testing::uniform_config(1, 2, 10, 1.0, false);
        assert_eq!(Count.values(&cfg).unwrap(), vec![1.0; 10]);
        assert_eq!(Count.value(&Point::xy(5.0, 5.0), &cfg).unwrap(), 1.0);
    }

    #[test]
    fn dispatch_forwards() {
        let cfg = testing::uniform_config(2, 1, 20, 5.0, false);
        let f = AnyFunctional::KnnLength(KnnLength::new(1).unwrap());
        assert_eq!(
            f.values(&cfg).unwrap(),
            KnnLength::new(1).unwrap().values(&cfg).unwrap()
        );
        assert_eq!(Functional::<f64>::name(&f), "knn_length");
    }
}
