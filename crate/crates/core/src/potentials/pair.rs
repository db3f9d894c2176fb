use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::potentials::{within, DecayBound, Potential};
use crate::scalar::Scalar;

type PairFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Pairwise interaction `Ψ(X) = Σ_{i<j} φ(|x_i − x_j|)` with a hard core:
/// `φ(s) = +∞` for `s ≤ r0` and `0 ≤ φ(s) ≤ A·exp(−a·s)` beyond.
///
/// The envelopes at radius `r` use the ball of radius `k·r0`, `k = ⌊r/r0⌋`,
/// and bound the unseen remainder by `T_k = A·Σ_{j≥k} N(j)·exp(−a·j·r0)`,
/// where `N(j) = 2^d((j+3/2)^d − max(j−1/2, 0)^d)` bounds the number of
/// `r0`-separated points in the shell `[j·r0, (j+1)·r0)`.
#[derive(Clone)]
pub struct PairPotential<T> {
    amplitude: T,
    rate: T,
    r0: T,
    phi: Option<PairFn>,
    /// `tails[d-1][k] = T_k`; zero beyond the table.
    tails: [Vec<f64>; 3],
}

impl<T: fmt::Debug> fmt::Debug for PairPotential<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PairPotential")
            .field("amplitude", &self.amplitude)
            .field("rate", &self.rate)
            .field("r0", &self.r0)
            .field("custom_phi", &self.phi.is_some())
            .finish()
    }
}

fn shell_count(k: usize, d: usize) -> f64 {
    let k = k as f64;
    2f64.powi(d as i32) * ((k + 1.5).powi(d as i32) - (k - 0.5).max(0.0).powi(d as i32))
}

fn tail_table(amp: f64, rate: f64, r0: f64, d: usize) -> Vec<f64> {
    let mut terms = Vec::new();
    let mut k = 0usize;
    loop {
        let t = amp * shell_count(k, d) * (-rate * k as f64 * r0).exp();
        terms.push(t);
        k += 1;
        let tiny = t < 1e-300 || (k > 8 && t < 1e-18 * terms[0].max(1e-300));
        if tiny || k >= 4_000_000 {
            break;
        }
    }
    let mut tails = vec![0.0; terms.len()];
    let mut acc = 0.0;
    for i in (0..terms.len()).rev() {
        acc += terms[i];
        tails[i] = acc;
    }
    tails
}

impl<T: Scalar> PairPotential<T> {
    /// `φ(s) = A·exp(−a·s)` for `s > r0`.
    pub fn exponential(amplitude: T, rate: T, r0: T) -> Result<Self> {
        Self::build(amplitude, rate, r0, None)
    }

    /// Custom `φ`, checked to be infinite on `[0, r0]` and to satisfy
    /// `0 ≤ φ(s) ≤ A·exp(−a·s)` on a grid beyond `r0`.
    pub fn with_function(
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        amplitude: T,
        rate: T,
        r0: T,
    ) -> Result<Self> {
        let r0f = r0.as_f64();
        for s in [0.0, 0.5 * r0f, r0f] {
            if phi(s) != f64::INFINITY {
                return Err(Error::NonHardCore(format!(
                    "phi({s}) = {} is finite",
                    phi(s)
                )));
            }
        }
        let (a, rt) = (amplitude.as_f64(), rate.as_f64());
        let span = 50.0 / rt.max(1e-9);
        for i in 1..=2000 {
            let s = r0f + span * i as f64 / 2000.0;
            let v = phi(s);
            if !(v >= 0.0) || v > a * (-rt * s).exp() * (1.0 + 1e-12) {
                return Err(Error::InvalidInput(format!(
                    "phi({s}) = {v} outside [0, A·exp(−a·s)]"
                )));
            }
        }
        Self::build(amplitude, rate, r0, Some(Arc::new(phi)))
    }

    fn build(amplitude: T, rate: T, r0: T, phi: Option<PairFn>) -> Result<Self> {
        if !(r0 > T::zero()) || !r0.is_finite() {
            return Err(Error::NonHardCore(format!(
                "hard-core distance r0 must be positive, got {r0}"
            )));
        }
        if !(amplitude >= T::zero()) || !amplitude.is_finite() {
            return Err(Error::InvalidInput(format!(
                "pair amplitude A must be non-negative, got {amplitude}"
            )));
        }
        if !(rate > T::zero()) || !rate.is_finite() {
            return Err(Error::InvalidInput(format!(
                "pair decay rate a must be positive, got {rate}"
            )));
        }
        let (a, rt, r) = (amplitude.as_f64(), rate.as_f64(), r0.as_f64());
        let tails = [
            tail_table(a, rt, r, 1),
            tail_table(a, rt, r, 2),
            tail_table(a, rt, r, 3),
        ];
        Ok(Self {
            amplitude,
            rate,
            r0,
            phi,
            tails,
        })
    }

    pub fn amplitude(&self) -> T {
        self.amplitude
    }

    pub fn rate(&self) -> T {
        self.rate
    }

    pub fn r0(&self) -> T {
        self.r0
    }

    pub fn phi(&self, s: T) -> T {
        if s <= self.r0 {
            return T::infinity();
        }
        match &self.phi {
            Some(f) => T::lit(f(s.as_f64())),
            None => self.amplitude * (-self.rate * s).exp(),
        }
    }

    fn shell_index(&self, r: T) -> usize {
        (r / self.r0).floor().to_usize().unwrap_or(usize::MAX)
    }

    /// `T_k` for the dimension of the points; ψ uses the worst dimension.
    fn tail(&self, k: usize, d: usize) -> f64 {
        self.tails[d - 1].get(k).copied().unwrap_or(0.0)
    }

    fn psi_k(&self, k: usize) -> f64 {
        let t = (1..=3).map(|d| self.tail(k, d)).fold(0.0, f64::max);
        -(-t).exp_m1()
    }

    /// Sum of φ over points within `rad`; infinite if any lies within `r0`.
    fn partial(&self, x: &Point<T>, points: &[Point<T>], rad: T, probe: T) -> T {
        let r02 = self.r0 * self.r0;
        let mut s = T::zero();
        let rad2 = rad * rad;
        for p in within(x, points, probe) {
            let d2 = p.dist2(x);
            if d2 <= r02 {
                return T::infinity();
            }
            if d2 <= rad2 {
                s = s + self.phi(d2.sqrt());
            }
        }
        s
    }
}

impl<T: Scalar> Potential<T> for PairPotential<T> {
    fn name(&self) -> &'static str {
        "pair"
    }

    fn add_one(&self, x: &Point<T>, points: &[Point<T>]) -> T {
        self.partial(x, points, T::infinity(), T::infinity())
    }

    fn add_one_lower(&self, x: &Point<T>, points: &[Point<T>], r: T) -> T {
        let k = self.shell_index(r);
        self.partial(x, points, T::from_usize_lossy(k) * self.r0, r)
    }

    fn add_one_upper(&self, x: &Point<T>, points: &[Point<T>], r: T) -> T {
        let lo = self.add_one_lower(x, points, r);
        if lo.is_infinite() {
            return lo;
        }
        let k = self.shell_index(r);
        if k == 0 {
            // nothing is known about points within r0
            return T::infinity();
        }
        lo + T::lit(self.tail(k, x.dim()))
    }

    fn psi(&self, r: T) -> T {
        let k = self.shell_index(r);
        if k == 0 {
            return T::one();
        }
        T::lit(self.psi_k(k))
    }

    fn interaction_scale(&self) -> T {
        self.localization_radius(T::lit(1e-3)).max(self.r0)
    }

    fn localization_radius(&self, v: T) -> T {
        let v = v.as_f64();
        if v >= 1.0 {
            return T::zero();
        }
        let len = self.tails.iter().map(Vec::len).max().unwrap_or(0);
        // smallest k ≥ 1 with ψ_k ≤ v; ψ_k is non-increasing
        let (mut lo, mut hi) = (1usize, len.max(1));
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.psi_k(mid) <= v {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        T::from_usize_lossy(lo) * self.r0
    }

    fn decay_bound(&self) -> DecayBound {
        let rate = 0.5 * self.rate.as_f64();
        let r0 = self.r0.as_f64();
        let len = self.tails.iter().map(Vec::len).max().unwrap_or(0);
        let mut pref: f64 = (rate * r0).exp();
        for k in 1..len {
            pref = pref.max(self.psi_k(k) * (rate * (k + 1) as f64 * r0).exp());
        }
        DecayBound {
            prefactor: pref,
            rate,
        }
    }

    fn is_trivial(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::testing::*;

    #[test]
    fn examples() {
        let p = PairPotential::exponential(2.0, 1.5, 0.5).unwrap();
        let x = Point::xy(0.0, 0.0);
        assert_eq!(p.add_one(&x, &[]), 0.0);
        assert!(p.add_one(&x, &[Point::xy(0.3f64, 0.0)]).is_infinite());
        let v = p.add_one(&x, &[Point::xy(1.2, 0.0)]);
        assert!((v - 2.0 * (-1.5f64 * 1.2).exp()).abs() < 1e-15);
    }

    #[test]
    fn rejects_soft_core() {
        assert!(matches!(
            PairPotential::<f64>::exponential(1.0, 1.0, 0.0),
            Err(Error::NonHardCore(_))
        ));
        let soft = PairPotential::<f64>::with_function(|s| (-s).exp(), 1.0, 1.0, 0.5);
        assert!(matches!(soft, Err(Error::NonHardCore(_))));
        let ok = PairPotential::<f64>::with_function(
            |s| {
                if s <= 0.5 {
                    f64::INFINITY
                } else {
                    0.5 * (-2.0 * s).exp()
                }
            },
            1.0,
            2.0,
            0.5,
        );
        assert!(ok.is_ok());
    }

    #[test]
    fn psi_is_a_right_continuous_step_function() {
        let p = PairPotential::exponential(0.01, 4.0, 0.5).unwrap();
        assert_eq!(p.psi(0.49), 1.0);
        let at = p.psi(1.0);
        assert_eq!(p.psi(1.2), at);
        assert!(p.psi(1.5) < at);
        let eta = p.localization_radius(0.2);
        assert!(p.psi(eta) <= 0.2);
        assert!(p.psi(eta - 0.5) > 0.2);
    }

    #[test]
    fn localization_properties() {
        let p = PairPotential::exponential(1.0, 2.0, 0.5).unwrap();
        for d in 1..=3 {
            check_localization(&p, d, 3000, 0.5, d as u64);
            check_pair_symmetry(&p, d, 300, 0.5, 40 + d as u64, 1e-9);
        }
    }
}
