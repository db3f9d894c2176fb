//! Energy functionals through their add-one potentials.
//!
//! Every potential provides the exact add-one potential `Δ(x, X)`, a pair of
//! localized envelopes `Δ_[r] ≤ Δ ≤ Δ^[r]` that only look at `X ∩ B_r(x)`,
//! and the localization function `ψ` bounding the envelope gap
//! `exp(−Δ_[r]) − exp(−Δ^[r]) ≤ ψ(r)`.
//!
//! Values lie in `[0, +∞]`; `+∞` encodes a forbidden insertion. Envelopes are
//! valid whenever `X` itself has finite energy, which is always the case for
//! configurations produced by the samplers.

mod area;
mod hardcore;
mod pair;
mod strauss;
mod truncated;

pub use area::AreaInteraction;
pub use hardcore::HardCore;
pub use pair::PairPotential;
pub use strauss::Strauss;
pub use truncated::TruncatedPoisson;

use crate::geometry::{Point, PointConfiguration};
use crate::scalar::Scalar;

/// Constants of an exponential bound `ψ(r) ≤ min(1, prefactor·exp(−rate·r))`.
///
/// Finite-range potentials have `ψ = 1` below their range, so a prefactor
/// above one is needed for the bound to hold for every `r > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayBound {
    pub prefactor: f64,
    pub rate: f64,
}

impl DecayBound {
    pub fn eval(&self, r: f64) -> f64 {
        if self.prefactor == 0.0 {
            return 0.0;
        }
        (self.prefactor * (-self.rate * r).exp()).min(1.0)
    }

    /// Bound for a potential whose ψ vanishes from `range` on.
    pub fn finite_range(range: f64) -> Self {
        if range <= 0.0 {
            return Self {
                prefactor: 0.0,
                rate: f64::INFINITY,
            };
        }
        Self {
            prefactor: std::f64::consts::E,
            rate: 1.0 / range,
        }
    }
}

/// A ψ-localized energy functional with non-negative add-one potential.
pub trait Potential<T: Scalar>: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &'static str;

    /// Exact `Δ(x, X)`. `points` must not contain `x`.
    fn add_one(&self, x: &Point<T>, points: &[Point<T>]) -> T;

    /// `Δ_[r](x, X ∩ B_r(x))`. Points of `points` outside the closed ball are ignored.
    fn add_one_lower(&self, x: &Point<T>, points: &[Point<T>], r: T) -> T;

    /// `Δ^[r](x, X ∩ B_r(x))`. Points of `points` outside the closed ball are ignored.
    fn add_one_upper(&self, x: &Point<T>, points: &[Point<T>], r: T) -> T;

    /// Localization function: non-increasing, right-continuous, values in `[0, 1]`.
    fn psi(&self, r: T) -> T;

    /// Radius beyond which ψ vanishes, or a nominal interaction length for
    /// infinite-range potentials.
    fn interaction_scale(&self) -> T;

    /// `inf{r ≥ 0 : ψ(r) ≤ v}`; with `v` uniform this has distribution function `1 − ψ`.
    fn localization_radius(&self, v: T) -> T;

    fn decay_bound(&self) -> DecayBound;

    /// True when Ψ ≡ 0.
    fn is_trivial(&self) -> bool {
        false
    }
}

pub(crate) fn within<'a, T: Scalar>(
    x: &'a Point<T>,
    points: &'a [Point<T>],
    r: T,
) -> impl Iterator<Item = &'a Point<T>> + 'a {
    let r2 = r * r;
    points.iter().filter(move |p| p.dist2(x) <= r2)
}

/// `Δ(x, X)` for a configuration.
pub fn add_one<T: Scalar, P: Potential<T> + ?Sized>(
    p: &P,
    x: &Point<T>,
    cfg: &PointConfiguration<T>,
) -> T {
    p.add_one(x, cfg.points())
}

/// `Δ({x, y}, X) = Δ(x, X ∪ {y}) + Δ(y, X)`, infinite if either term is.
pub fn pair_add_one<T: Scalar, P: Potential<T> + ?Sized>(
    p: &P,
    x: &Point<T>,
    y: &Point<T>,
    points: &[Point<T>],
) -> T {
    let dy = p.add_one(y, points);
    if dy.is_infinite() {
        return T::infinity();
    }
    let mut with_y = Vec::with_capacity(points.len() + 1);
    with_y.extend_from_slice(points);
    with_y.push(*y);
    let dx = p.add_one(x, &with_y);
    if dx.is_infinite() {
        return T::infinity();
    }
    dx + dy
}

/// Ψ ≡ 0: the Poisson process itself.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NoInteraction;

impl<T: Scalar> Potential<T> for NoInteraction {
    fn name(&self) -> &'static str {
        "poisson"
    }
    fn add_one(&self, _: &Point<T>, _: &[Point<T>]) -> T {
        T::zero()
    }
    fn add_one_lower(&self, _: &Point<T>, _: &[Point<T>], _: T) -> T {
        T::zero()
    }
    fn add_one_upper(&self, _: &Point<T>, _: &[Point<T>], _: T) -> T {
        T::zero()
    }
    fn psi(&self, _: T) -> T {
        T::zero()
    }
    fn interaction_scale(&self) -> T {
        T::zero()
    }
    fn localization_radius(&self, _: T) -> T {
        T::zero()
    }
    fn decay_bound(&self) -> DecayBound {
        DecayBound::finite_range(0.0)
    }
    fn is_trivial(&self) -> bool {
        true
    }
}

/// Closed set of supported potentials, convenient for configuration-driven code.
#[derive(Clone, Debug)]
pub enum AnyPotential<T> {
    Poisson(NoInteraction),
    Strauss(Strauss<T>),
    HardCore(HardCore<T>),
    Area(AreaInteraction<T>),
    Pair(PairPotential<T>),
    TruncatedPoisson(TruncatedPoisson<T>),
}

macro_rules! dispatch {
    ($self:ident, $p:ident => $e:expr) => {
        match $self {
            AnyPotential::Poisson($p) => $e,
            AnyPotential::Strauss($p) => $e,
            AnyPotential::HardCore($p) => $e,
            AnyPotential::Area($p) => $e,
            AnyPotential::Pair($p) => $e,
            AnyPotential::TruncatedPoisson($p) => $e,
        }
    };
}

impl<T: Scalar> Potential<T> for AnyPotential<T> {
    fn name(&self) -> &'static str {
        dispatch!(self, p => Potential::<T>::name(p))
    }
    fn add_one(&self, x: &Point<T>, points: &[Point<T>]) -> T {
        dispatch!(self, p => p.add_one(x, points))
    }
    fn add_one_lower(&self, x: &Point<T>, points: &[Point<T>], r: T) -> T {
        dispatch!(self, p => p.add_one_lower(x, points, r))
    }
    fn add_one_upper(&self, x: &Point<T>, points: &[Point<T>], r: T) -> T {
        dispatch!(self, p => p.add_one_upper(x, points, r))
    }
    fn psi(&self, r: T) -> T {
        dispatch!(self, p => p.psi(r))
    }
    fn interaction_scale(&self) -> T {
        dispatch!(self, p => Potential::<T>::interaction_scale(p))
    }
    fn localization_radius(&self, v: T) -> T {
        dispatch!(self, p => p.localization_radius(v))
    }
    fn decay_bound(&self) -> DecayBound {
        dispatch!(self, p => Potential::<T>::decay_bound(p))
    }
    fn is_trivial(&self) -> bool {
        dispatch!(self, p => Potential::<T>::is_trivial(p))
    }
}
