use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::potentials::{within, DecayBound, Potential};
use crate::scalar::Scalar;

/// Truncated Poisson process: no closed ball of radius `r` may hold more
/// than `k` points. `Δ(x, X) = +∞` iff some such ball contains `x` and at
/// least `k` points of `X`.
///
/// Ball placements are searched over the centres of minimal enclosing balls
/// of at most `d + 1` points of `(X ∩ B_{2r}(x)) ∪ {x}`, which contains the
/// enclosing-ball centre of every feasible subset.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedPoisson<T> {
    radius: T,
    k: usize,
}

const REL_TOL: f64 = 1e-12;

impl<T: Scalar> TruncatedPoisson<T> {
    pub fn new(radius: T, k: usize) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!(
                "truncation radius must be positive, got {radius}"
            )));
        }
        if k == 0 {
            return Err(Error::InvalidInput(
                "truncation count k must be at least 1".into(),
            ));
        }
        Ok(Self { radius, k })
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn range(&self) -> T {
        self.radius + self.radius
    }

    fn violated(&self, x: &Point<T>, points: &[Point<T>], reach: T) -> bool {
        let d = x.dim();
        let rel: Vec<[f64; 3]> = within(x, points, reach.min(self.range()))
            .map(|p| {
                let mut c = [0.0; 3];
                for (i, ci) in c.iter_mut().enumerate().take(d) {
                    *ci = (p.coord(i) - x.coord(i)).as_f64();
                }
                c
            })
            .collect();
        max_depth_with_origin(&rel, self.radius.as_f64(), d, self.k) >= self.k
    }
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Circumcentre of a triangle, in its plane.
pub(crate) fn circumcenter3(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> Option<[f64; 3]> {
    let u = sub(b, a);
    let v = sub(c, a);
    let w = cross(&u, &v);
    let ww = dot(&w, &w);
    if ww <= 1e-24 * dot(&u, &u) * dot(&v, &v) {
        return None;
    }
    let t1 = [u[0] * dot(&v, &v), u[1] * dot(&v, &v), u[2] * dot(&v, &v)];
    let t2 = [v[0] * dot(&u, &u), v[1] * dot(&u, &u), v[2] * dot(&u, &u)];
    let num = cross(&sub(&t2, &t1), &w);
    Some([
        a[0] + num[0] / (2.0 * ww),
        a[1] + num[1] / (2.0 * ww),
        a[2] + num[2] / (2.0 * ww),
    ])
}

/// Centre of the sphere through four points.
pub(crate) fn circumcenter4(
    a: &[f64; 3],
    b: &[f64; 3],
    c: &[f64; 3],
    e: &[f64; 3],
) -> Option<[f64; 3]> {
    let u = sub(b, a);
    let v = sub(c, a);
    let w = sub(e, a);
    let det = dot(&u, &cross(&v, &w));
    if det.abs() <= 1e-14 * (dot(&u, &u) * dot(&v, &v) * dot(&w, &w)).sqrt() {
        return None;
    }
    let (uu, vv, ww) = (dot(&u, &u), dot(&v, &v), dot(&w, &w));
    let vw = cross(&v, &w);
    let wu = cross(&w, &u);
    let uv = cross(&u, &v);
    let mut o = [0.0; 3];
    for i in 0..3 {
        o[i] = a[i] + (uu * vw[i] + vv * wu[i] + ww * uv[i]) / (2.0 * det);
    }
    Some(o)
}

/// Largest number of the points `rel` (origin excluded) that fit with the
/// origin in a closed ball of radius `r`; stops early once `stop` is reached.
pub(crate) fn max_depth_with_origin(rel: &[[f64; 3]], r: f64, d: usize, stop: usize) -> usize {
    if rel.len() < stop {
        return rel.len().min(depth_search(rel, r, d, usize::MAX));
    }
    depth_search(rel, r, d, stop)
}

fn depth_search(rel: &[[f64; 3]], r: f64, d: usize, stop: usize) -> usize {
    let r2 = (r * (1.0 + REL_TOL)).powi(2);
    let mut all = Vec::with_capacity(rel.len() + 1);
    all.push([0.0; 3]);
    all.extend_from_slice(rel);
    let n = all.len();
    let mut best = 0usize;
    let mut consider = |c: [f64; 3]| -> bool {
        if dot(&c, &c) > r2 {
            return false;
        }
        let cnt = rel
            .iter()
            .filter(|p| dot(&sub(p, &c), &sub(p, &c)) <= r2)
            .count();
        best = best.max(cnt);
        best >= stop
    };
    for i in 0..n {
        if consider(all[i]) {
            return best;
        }
        for j in i + 1..n {
            let m = [
                0.5 * (all[i][0] + all[j][0]),
                0.5 * (all[i][1] + all[j][1]),
                0.5 * (all[i][2] + all[j][2]),
            ];
            if consider(m) {
                return best;
            }
            if d < 2 {
                continue;
            }
            for l in j + 1..n {
                if let Some(c) = circumcenter3(&all[i], &all[j], &all[l]) {
                    if dot(&sub(&all[i], &c), &sub(&all[i], &c)) <= r2 && consider(c) {
                        return best;
                    }
                }
                if d < 3 {
                    continue;
                }
                for q in l + 1..n {
                    if let Some(c) = circumcenter4(&all[i], &all[j], &all[l], &all[q]) {
                        if dot(&sub(&all[i], &c), &sub(&all[i], &c)) <= r2 && consider(c) {
                            return best;
                        }
                    }
                }
            }
        }
    }
    best
}

impl<T: Scalar> Potential<T> for TruncatedPoisson<T> {
    fn name(&self) -> &'static str {
        "truncated_poisson"
    }

    fn add_one(&self, x: &Point<T>, points: &[Point<T>]) -> T {
        if self.violated(x, points, self.range()) {
            T::infinity()
        } else {
            T::zero()
        }
    }

    fn add_one_lower(&self, x: &Point<T>, points: &[Point<T>], r: T) -> T {
        if self.violated(x, points, r) {
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
