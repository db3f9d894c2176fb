use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::potentials::{within, DecayBound, Potential};
use crate::scalar::Scalar;

/// Hard spheres of radius `r`: insertion forbidden within distance `2r`.
#[derive(Clone, Debug, PartialEq)]
pub struct HardCore<T> {
    radius: T,
}

impl<T: Scalar> HardCore<T> {
    pub fn new(radius: T) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!(
                "hard-core radius must be positive, got {radius}"
            )));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    /// Exclusion distance `2r`.
    pub fn range(&self) -> T {
        self.radius + self.radius
    }

    fn blocked(&self, x: &Point<T>, points: &[Point<T>], r: T) -> bool {
        let d2 = self.range() * self.range();
        within(x, points, r).any(|p| p.dist2(x) < d2)
    }
}

impl<T: Scalar> Potential<T> for HardCore<T> {
    fn name(&self) -> &'static str {
        "hardcore"
    }

    fn add_one(&self, x: &Point<T>, points: &[Point<T>]) -> T {
        if self.blocked(x, points, self.range()) {
            T::infinity()
        } else {
            T::zero()
        }
    }

    fn add_one_lower(&self, x: &Point<T>, points: &[Point<T>], r: T) -> T {
        if self.blocked(x, points, r.min(self.range())) {
            T::infinity()
        } else {
            T::zero()
        }
    }

    fn add_one_upper(&self, x: &Point<T>, points: &[Point<T>], r: T) -> T {
        if r >= self.range() {
            self.add_one(x, points)
        } else {
            T::infinity()
        }
    }

    fn psi(&self, r: T) -> T {
        if r >= self.range() {
            T::zero()
        } else {
            T::one()
        }
    }

    fn interaction_scale(&self) -> T {
        self.range()
    }

    fn localization_radius(&self, v: T) -> T {
        if v >= T::one() {
            T::zero()
        } else {
            self.range()
        }
    }

    fn decay_bound(&self) -> DecayBound {
        DecayBound::finite_range(self.range().as_f64())
    }
}
