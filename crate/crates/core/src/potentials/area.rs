use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::{ball_volume, Point};
use crate::potentials::{within, DecayBound, Potential};
use crate::scalar::Scalar;

/// Number of quasi-Monte Carlo nodes used for uncovered volumes in d = 3.
pub const QMC_NODES_3D: usize = 1 << 14;

/// Area interaction: `Δ(x, X) = γ·vol(B_r(x) \ ∪_{y∈X} B_r(y))`, γ ≥ 0.
///
/// The uncovered volume is exact in d = 1 and d = 2 (circular arcs) and uses a
/// fixed Halton node set in d = 3, so results are reproducible bit for bit.
#[derive(Clone, Debug, PartialEq)]
pub struct AreaInteraction<T> {
    gamma: T,
    radius: T,
}

impl<T: Scalar> AreaInteraction<T> {
    pub fn new(gamma: T, radius: T) -> Result<Self> {
        if !(gamma >= T::zero()) || !gamma.is_finite() {
            return Err(Error::InvalidInput(format!(
                "area-interaction gamma must be finite and non-negative, got {gamma}"
            )));
        }
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!(
                "area-interaction radius must be positive, got {radius}"
            )));
        }
        Ok(Self { gamma, radius })
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn range(&self) -> T {
        self.radius + self.radius
    }

    /// `vol(B_r(x) \ ∪ B_r(y))` over the given points within `reach` of `x`.
    pub fn uncovered_volume(&self, x: &Point<T>, points: &[Point<T>], reach: T) -> T {
        let r = self.radius.as_f64();
        let rel: Vec<[f64; 3]> = within(x, points, reach.min(self.range()))
            .map(|p| {
                let mut c = [0.0; 3];
                for (i, ci) in c.iter_mut().enumerate().take(x.dim()) {
                    *ci = (p.coord(i) - x.coord(i)).as_f64();
                }
                c
            })
            .collect();
        let v = match x.dim() {
            1 => uncovered_1d(r, &rel),
            2 => uncovered_2d(r, &rel),
            _ => uncovered_3d(r, &rel),
        };
        T::lit(v)
    }

    fn full(&self, d: usize) -> T {
        self.gamma * ball_volume(d, self.radius)
    }
}

fn uncovered_1d(r: f64, centres: &[[f64; 3]]) -> f64 {
    let mut iv: Vec<(f64, f64)> = centres
        .iter()
        .map(|c| ((c[0] - r).max(-r), (c[0] + r).min(r)))
        .filter(|(a, b)| b > a)
        .collect();
    iv.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut covered = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (a, b) in iv {
        match cur {
            Some((ca, cb)) if a <= cb => cur = Some((ca, cb.max(b))),
            Some((ca, cb)) => {
                covered += cb - ca;
                cur = Some((a, b));
            }
            None => cur = Some((a, b)),
        }
    }
    if let Some((ca, cb)) = cur {
        covered += cb - ca;
    }
    (2.0 * r - covered).max(0.0)
}

/// Green's theorem over the boundary of `D_0 \ ∪ D_i`, all disks of radius `r`,
/// `D_0` centred at the origin.
fn uncovered_2d(r: f64, centres: &[[f64; 3]]) -> f64 {
    let mut disks: Vec<[f64; 2]> = vec![[0.0, 0.0]];
    for c in centres {
        let p = [c[0], c[1]];
        if p == [0.0, 0.0] {
            return 0.0;
        }
        if !disks.contains(&p) {
            disks.push(p);
        }
    }
    let inside = |q: [f64; 2], c: [f64; 2]| {
        let dx = q[0] - c[0];
        let dy = q[1] - c[1];
        dx * dx + dy * dy < r * r
    };
    let tau = 2.0 * PI;
    let mut area = 0.0;
    for (a, ca) in disks.iter().enumerate() {
        let mut angles = Vec::new();
        for (b, cb) in disks.iter().enumerate() {
            if a == b {
                continue;
            }
            let dx = cb[0] - ca[0];
            let dy = cb[1] - ca[1];
            let d = (dx * dx + dy * dy).sqrt();
            if d < 2.0 * r {
                let base = dy.atan2(dx);
                let half = (d / (2.0 * r)).acos();
                angles.push((base - half).rem_euclid(tau));
                angles.push((base + half).rem_euclid(tau));
            }
        }
        angles.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let arcs: Vec<(f64, f64)> = if angles.is_empty() {
            vec![(0.0, tau)]
        } else {
            let n = angles.len();
            (0..n)
                .map(|i| {
                    let t1 = angles[i];
                    let t2 = if i + 1 < n {
                        angles[i + 1]
                    } else {
                        angles[0] + tau
                    };
                    (t1, t2)
                })
                .collect()
        };
        for (t1, t2) in arcs {
            if t2 - t1 <= 0.0 {
                continue;
            }
            let mid = 0.5 * (t1 + t2);
            let q = [ca[0] + r * mid.cos(), ca[1] + r * mid.sin()];
            let keep = if a == 0 {
                disks[1..].iter().all(|c| !inside(q, *c))
            } else {
                inside(q, disks[0])
                    && disks[1..]
                        .iter()
                        .enumerate()
                        .all(|(j, c)| j + 1 == a || !inside(q, *c))
            };
            if keep {
                let contrib = 0.5
                    * (r * r * (t2 - t1) + r * ca[0] * (t2.sin() - t1.sin())
                        - r * ca[1] * (t2.cos() - t1.cos()));
                area += if a == 0 { contrib } else { -contrib };
            }
        }
    }
    area.clamp(0.0, PI * r * r)
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut out = 0.0;
    while i > 0 {
        f /= base as f64;
        out += f * (i % base) as f64;
        i /= base;
    }
    out
}

/// Halton nodes (bases 2, 3, 5) mapped volume-preservingly into the unit ball.
fn ball_nodes() -> &'static [[f64; 3]] {
    static NODES: OnceLock<Vec<[f64; 3]>> = OnceLock::new();
    NODES.get_or_init(|| {
        (1..=QMC_NODES_3D)
            .map(|i| {
                let rad = radical_inverse(i, 2).cbrt();
                let z = 1.0 - 2.0 * radical_inverse(i, 3);
                let phi = 2.0 * PI * radical_inverse(i, 5);
                let s = (1.0 - z * z).max(0.0).sqrt();
                [rad * s * phi.cos(), rad * s * phi.sin(), rad * z]
            })
            .collect()
    })
}

fn uncovered_3d(r: f64, centres: &[[f64; 3]]) -> f64 {
    let full = 4.0 / 3.0 * PI * r * r * r;
    if centres.is_empty() {
        return full;
    }
    if centres.iter().any(|c| *c == [0.0; 3]) {
        return 0.0;
    }
    let r2 = r * r;
    let free = ball_nodes()
        .iter()
        .filter(|n| {
            let q = [n[0] * r, n[1] * r, n[2] * r];
            centres.iter().all(|c| {
                let d = [q[0] - c[0], q[1] - c[1], q[2] - c[2]];
                d[0] * d[0] + d[1] * d[1] + d[2] * d[2] >= r2
            })
        })
        .count();
    full * free as f64 / QMC_NODES_3D as f64
}

impl<T: Scalar> Potential<T> for AreaInteraction<T> {
    fn name(&self) -> &'static str {
        "area"
    }

    fn add_one(&self, x: &Point<T>, points: &[Point<T>]) -> T {
        if self.gamma == T::zero() {
            return T::zero();
        }
        self.gamma * self.uncovered_volume(x, points, self.range())
    }

    fn add_one_lower(&self, x: &Point<T>, points: &[Point<T>], r: T) -> T {
        if r >= self.range() {
            self.add_one(x, points)
        } else {
            T::zero()
        }
    }

    fn add_one_upper(&self, x: &Point<T>, points: &[Point<T>], r: T) -> T {
        if self.gamma == T::zero() {
            return T::zero();
        }
        self.gamma * self.uncovered_volume(x, points, r)
    }

    fn psi(&self, r: T) -> T {
        if r >= self.range() {
            T::zero()
        } else {
            // envelope gap is at most 1 − exp(−γ ω_d r^d); dimension-free bound uses d = 1..3 max
            T::one() - (-self.max_full()).exp()
        }
    }

    fn interaction_scale(&self) -> T {
        self.range()
    }

    fn localization_radius(&self, v: T) -> T {
        if v >= self.psi(T::zero()) {
            T::zero()
        } else {
            self.range()
        }
    }

    fn decay_bound(&self) -> DecayBound {
        if self.gamma == T::zero() {
            DecayBound::finite_range(0.0)
        } else {
            DecayBound::finite_range(self.range().as_f64())
        }
    }

    fn is_trivial(&self) -> bool {
        self.gamma == T::zero()
    }
}

impl<T: Scalar> AreaInteraction<T> {
    /// `γ·ω_d r^d` maximised over the supported dimensions; ψ has no access
    /// to the dimension, and a larger ψ is always valid.
    fn max_full(&self) -> T {
        (1..=3).map(|d| self.full(d)).fold(T::zero(), T::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::testing::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn examples_2d() {
        let a = AreaInteraction::new(0.7, 0.5).unwrap();
        let x = Point::xy(0.0, 0.0);
        let iso = a.add_one(&x, &[Point::xy(1.2, 0.0)]);
        assert!((iso - 0.7 * PI * 0.25).abs() < 1e-12);
        assert_eq!(a.add_one(&x, &[Point::xy(0.0, 0.0)]), 0.0);
        let tangent = a.add_one(&x, &[Point::xy(1.0, 0.0)]);
        assert!((tangent - 0.7 * PI * 0.25).abs() < 1e-12);
    }

    #[test]
    fn two_disk_lens_matches_closed_form() {
        let r: f64 = 1.0;
        for &d in &[0.1, 0.5, 1.0, 1.7, 1.99] {
            let lens =
                2.0 * r * r * (d / (2.0 * r)).acos() - 0.5 * d * (4.0 * r * r - d * d).sqrt();
            let got = uncovered_2d(r, &[[d, 0.0, 0.0]]);
            assert!((got - (PI - lens)).abs() < 1e-12, "d={d}: {got}");
        }
    }

    #[test]
    fn one_dimensional_union() {
        assert!((uncovered_1d(1.0, &[[0.5, 0.0, 0.0], [-1.8, 0.0, 0.0]]) - 0.3).abs() < 1e-12);
        assert_eq!(uncovered_1d(1.0, &[[0.5, 0.0, 0.0], [-1.5, 0.0, 0.0]]), 0.0);
        assert_eq!(uncovered_1d(1.0, &[]), 2.0);
    }

    fn grid_uncovered_2d(r: f64, c: &[[f64; 3]], n: usize) -> f64 {
        let h = 2.0 * r / n as f64;
        let mut free = 0usize;
        for i in 0..n {
            for j in 0..n {
                let q = [-r + (i as f64 + 0.5) * h, -r + (j as f64 + 0.5) * h];
                if q[0] * q[0] + q[1] * q[1] < r * r
                    && c.iter()
                        .all(|p| (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2) >= r * r)
                {
                    free += 1;
                }
            }
        }
        free as f64 * h * h
    }

    #[test]
    fn arc_decomposition_matches_grid_integration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let n = rng.random_range(1..7);
            let c: Vec<[f64; 3]> = (0..n)
                .map(|_| {
                    [
                        rng.random_range(-2.0..2.0),
                        rng.random_range(-2.0..2.0),
                        0.0,
                    ]
                })
                .collect();
            let exact = uncovered_2d(1.0, &c);
            let grid = grid_uncovered_2d(1.0, &c, 1500);
            assert!((exact - grid).abs() < 5e-3, "{exact} vs {grid} for {c:?}");
        }
    }

    #[test]
    fn qmc_volume_is_accurate_in_3d() {
        let full = uncovered_3d(1.0, &[]);
        assert!((full - 4.0 / 3.0 * PI).abs() < 1e-12);
        // two unit balls at distance d overlap in π(4r+d)(2r−d)²/12
        for &d in &[0.5, 1.0, 1.5] {
            let overlap = PI * (4.0 + d) * (2.0 - d) * (2.0 - d) / 12.0;
            let got = uncovered_3d(1.0, &[[d, 0.0, 0.0]]);
            let want = full - overlap;
            assert!((got - want).abs() <= 1e-3 * full, "d={d}: {got} vs {want}");
        }
    }

    #[test]
    fn localization_properties() {
        for d in 1..=3 {
            let trials = if d == 3 { 150 } else { 2000 };
            check_localization(
                &AreaInteraction::new(0.6, 0.5).unwrap(),
                d,
                trials,
                0.0,
                d as u64,
            );
            check_pair_symmetry(
                &AreaInteraction::new(0.6, 0.5).unwrap(),
                d,
                trials / 10,
                0.0,
                30 + d as u64,
                if d == 3 { 2e-3 } else { 1e-9 },
            );
        }
    }
}
