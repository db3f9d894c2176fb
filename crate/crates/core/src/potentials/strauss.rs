use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::potentials::{within, DecayBound, Potential};
use crate::scalar::Scalar;

/// Strauss interaction: `Δ(x, X) = β·#{y ∈ X : |y − x| < r0}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Strauss<T> {
    beta: T,
    r0: T,
}

impl<T: Scalar> Strauss<T> {
    pub fn new(beta: T, r0: T) -> Result<Self> {
        if !(beta >= T::zero()) || !beta.is_finite() {
            return Err(Error::InvalidInput(format!(
                "Strauss beta must be finite and non-negative, got {beta}"
            )));
        }
        if !(r0 > T::zero()) || !r0.is_finite() {
            return Err(Error::InvalidInput(format!(
                "Strauss r0 must be positive, got {r0}"
            )));
        }
        Ok(Self { beta, r0 })
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn r0(&self) -> T {
        self.r0
    }

    fn close(&self, x: &Point<T>, points: &[Point<T>], r: T) -> T {
        let r02 = self.r0 * self.r0;
        let n = within(x, points, r).filter(|p| p.dist2(x) < r02).count();
        self.beta * T::from_usize_lossy(n)
    }
}

impl<T: Scalar> Potential<T> for Strauss<T> {
    fn name(&self) -> &'static str {
        "strauss"
    }

    fn add_one(&self, x: &Point<T>, points: &[Point<T>]) -> T {
        self.close(x, points, self.r0)
    }

    fn add_one_lower(&self, x: &Point<T>, points: &[Point<T>], r: T) -> T {
        self.close(x, points, r.min(self.r0))
    }

    fn add_one_upper(&self, x: &Point<T>, points: &[Point<T>], r: T) -> T {
        if r >= self.r0 || self.beta == T::zero() {
            self.close(x, points, self.r0)
        } else {
            T::infinity()
        }
    }

    fn psi(&self, r: T) -> T {
        if r >= self.r0 || self.beta == T::zero() {
            T::zero()
        } else {
            T::one()
        }
    }

    fn interaction_scale(&self) -> T {
        self.r0
    }

    fn localization_radius(&self, v: T) -> T {
        if self.beta == T::zero() || v >= T::one() {
            T::zero()
        } else {
            self.r0
        }
    }

    fn decay_bound(&self) -> DecayBound {
        if self.beta == T::zero() {
            DecayBound::finite_range(0.0)
        } else {
            DecayBound::finite_range(self.r0.as_f64())
        }
    }

    fn is_trivial(&self) -> bool {
        self.beta == T::zero()
    }
}
