use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use crate::error::{Error, Result};
use crate::geometry::{Point, PointConfiguration, Window, MAX_DIM};
use crate::potentials::Potential;
use crate::scalar::Scalar;

/// Proposal budget of the rejection oracle.
pub const REJECTION_MAX_PROPOSALS: u64 = 10_000_000;

fn uniform_point<T: Scalar, R: Rng>(w: &Window<T>, rng: &mut R) -> Point<T> {
    let mut u = [T::zero(); MAX_DIM];
    for ui in u.iter_mut().take(w.dim()) {
        *ui = T::lit(rng.random::<f64>());
    }
    w.from_unit(&u[..w.dim()])
}

/// `Ψ(X)` as the sum of add-one potentials along the given insertion order;
/// stops at the first infinite term.
pub fn total_energy<T: Scalar, P: Potential<T> + ?Sized>(potential: &P, points: &[Point<T>]) -> T {
    let mut e = T::zero();
    for k in 0..points.len() {
        let d = potential.add_one(&points[k], &points[..k]);
        if d.is_infinite() {
            return T::infinity();
        }
        e = e + d;
    }
    e
}

/// Exact finite-volume Gibbs sample: Poisson proposals accepted with
/// probability `exp(−Ψ(X))`.
pub fn rejection_oracle<T: Scalar, P: Potential<T> + ?Sized, R: Rng>(
    window: &Window<T>,
    tau: T,
    potential: &P,
    rng: &mut R,
) -> Result<PointConfiguration<T>> {
    rejection_oracle_with_budget(window, tau, potential, REJECTION_MAX_PROPOSALS, rng)
}

/// As [`rejection_oracle`] with an explicit proposal budget.
pub fn rejection_oracle_with_budget<T: Scalar, P: Potential<T> + ?Sized, R: Rng>(
    window: &Window<T>,
    tau: T,
    potential: &P,
    max_proposals: u64,
    rng: &mut R,
) -> Result<PointConfiguration<T>> {
    let mean = tau.as_f64() * window.volume().as_f64();
    let pois = if mean > 0.0 {
        Some(Poisson::new(mean).map_err(|e| Error::InvalidInput(e.to_string()))?)
    } else {
        None
    };
    for _ in 0..max_proposals {
        let n = pois.as_ref().map_or(0, |p| p.sample(rng) as usize);
        let pts: Vec<Point<T>> = (0..n).map(|_| uniform_point(window, rng)).collect();
        let e = total_energy(potential, &pts);
        let u: f64 = rng.random();
        if u < (-e.as_f64()).exp() {
            return PointConfiguration::from_points(window.dim(), pts);
        }
    }
    Err(Error::InfeasibleOracle {
        proposals: max_proposals,
        accepted: 0,
    })
}

/// Forward birth-death dynamics from the empty configuration: births
/// proposed at rate `τ·vol` and kept with probability `exp(−Δ)`, unit death
/// rate per point. Approximate; used for cross-checks only.
pub fn forward_dynamics_oracle<T: Scalar, P: Potential<T> + ?Sized, R: Rng>(
    window: &Window<T>,
    tau: T,
    potential: &P,
    burn_in: T,
    rng: &mut R,
) -> Result<PointConfiguration<T>> {
    if !(burn_in > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "burn-in must be positive, got {burn_in}"
        )));
    }
    let birth_rate = tau.as_f64() * window.volume().as_f64();
    let end = burn_in.as_f64();
    let mut t = 0.0;
    let mut pts: Vec<Point<T>> = Vec::new();
    loop {
        let total = birth_rate + pts.len() as f64;
        if total <= 0.0 {
            break;
        }
        let e: f64 = Exp1.sample(rng);
        t += e / total;
        if t > end {
            break;
        }
        if rng.random::<f64>() * total < birth_rate {
            let x = uniform_point(window, rng);
            let d = potential.add_one(&x, &pts);
            if rng.random::<f64>() < (-d.as_f64()).exp() {
                pts.push(x);
            }
        } else {
            let k = rng.random_range(0..pts.len());
            pts.swap_remove(k);
        }
    }
    PointConfiguration::from_points(window.dim(), pts)
}
