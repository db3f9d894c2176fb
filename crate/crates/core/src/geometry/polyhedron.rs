//! Convex polyhedra by half-space clipping, used for Voronoi cells in ℝ³.

use crate::error::{Error, Result};
use crate::geometry::grid::GridIndex;
use crate::scalar::Scalar;

pub(crate) type V3 = [f64; 3];

fn dot(a: &V3, b: &V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: &V3, b: &V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &V3, b: &V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Planar convex face on `n·y = c` (`n` unit, pointing outwards), vertices
/// counter-clockwise seen from outside.
#[derive(Clone, Debug)]
pub(crate) struct Face {
    pub n: V3,
    pub c: f64,
    pub v: Vec<V3>,
    /// True for faces of the initial box.
    pub boundary: bool,
}

#[derive(Clone, Debug)]
pub(crate) struct Polyhedron {
    pub faces: Vec<Face>,
}

impl Polyhedron {
    /// Axis-aligned cube of half-width `h` centred at `center`.
    pub fn cube(center: V3, h: f64) -> Self {
        let mut faces = Vec::with_capacity(6);
        for axis in 0..3 {
            for s in [-1.0, 1.0] {
                let mut n = [0.0; 3];
                n[axis] = s;
                let c = s * center[axis] + h;
                let (u, w) = ((axis + 1) % 3, (axis + 2) % 3);
                let mut v = Vec::with_capacity(4);
                for (a, b) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
                    let mut p = center;
                    p[axis] += s * h;
                    p[u] += a * h;
                    p[w] += b * h;
                    v.push(p);
                }
                if s < 0.0 {
                    v.reverse();
                }
                faces.push(Face {
                    n,
                    c,
                    v,
                    boundary: true,
                });
            }
        }
        Self { faces }
    }

    pub fn max_dist2(&self) -> f64 {
        self.faces
            .iter()
            .flat_map(|f| f.v.iter())
            .map(|p| dot(p, p))
            .fold(0.0, f64::max)
    }

    /// Keeps `{y : n·y ≤ c}`; `n` need not be normalised.
    pub fn clip(&mut self, n: V3, c: f64, eps: f64) {
        let len = dot(&n, &n).sqrt();
        let (n, c) = ([n[0] / len, n[1] / len, n[2] / len], c / len);
        let f = |p: &V3| dot(&n, p) - c;
        if self.faces.iter().all(|fc| fc.v.iter().all(|p| f(p) <= eps)) {
            return;
        }
        let mut cut: Vec<V3> = Vec::new();
        let mut faces = Vec::with_capacity(self.faces.len() + 1);
        for fc in &self.faces {
            let m = fc.v.len();
            let mut out = Vec::with_capacity(m + 1);
            for i in 0..m {
                let (a, b) = (fc.v[i], fc.v[(i + 1) % m]);
                let (fa, fb) = (f(&a), f(&b));
                if fa <= eps {
                    out.push(a);
                    if fa >= -eps {
                        cut.push(a);
                    }
                }
                if (fa < -eps && fb > eps) || (fa > eps && fb < -eps) {
                    let t = fa / (fa - fb);
                    let p = [
                        a[0] + t * (b[0] - a[0]),
                        a[1] + t * (b[1] - a[1]),
                        a[2] + t * (b[2] - a[2]),
                    ];
                    out.push(p);
                    cut.push(p);
                }
            }
            if out.len() >= 3 {
                faces.push(Face {
                    n: fc.n,
                    c: fc.c,
                    v: out,
                    boundary: fc.boundary,
                });
            }
        }
        let cap = order_on_plane(dedup(cut, eps), &n);
        let coplanar = faces
            .iter()
            .any(|fc: &Face| dot(&fc.n, &n) > 1.0 - 1e-12 && (fc.c - c).abs() <= eps);
        if cap.len() >= 3 && !coplanar {
            faces.push(Face {
                n,
                c,
                v: cap,
                boundary: false,
            });
        }
        self.faces = faces;
    }

    #[cfg(test)]
    pub fn volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let a: f64 = (1..f.v.len() - 1)
                    .map(|i| {
                        dot(
                            &cross(&sub(&f.v[i], &f.v[0]), &sub(&f.v[i + 1], &f.v[0])),
                            &f.n,
                        ) * 0.5
                    })
                    .sum();
                a * f.c / 3.0
            })
            .sum()
    }
}

fn dedup(pts: Vec<V3>, eps: f64) -> Vec<V3> {
    let mut out: Vec<V3> = Vec::with_capacity(pts.len());
    let tol2 = (10.0 * eps).powi(2);
    for p in pts {
        if !out.iter().any(|q| {
            let d = sub(&p, q);
            dot(&d, &d) <= tol2
        }) {
            out.push(p);
        }
    }
    out
}

/// Sorts coplanar points counter-clockwise around their centroid, seen from the side `n` points to.
fn order_on_plane(pts: Vec<V3>, n: &V3) -> Vec<V3> {
    if pts.len() < 3 {
        return pts;
    }
    let k = pts.len() as f64;
    let g = pts.iter().fold([0.0; 3], |s, p| {
        [s[0] + p[0] / k, s[1] + p[1] / k, s[2] + p[2] / k]
    });
    let helper = if n[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let e1 = {
        let c = cross(n, &helper);
        let l = dot(&c, &c).sqrt();
        [c[0] / l, c[1] / l, c[2] / l]
    };
    let e2 = cross(n, &e1);
    let mut keyed: Vec<(f64, V3)> = pts
        .into_iter()
        .map(|p| {
            let d = sub(&p, &g);
            (dot(&d, &e2).atan2(dot(&d, &e1)), p)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    keyed.into_iter().map(|(_, p)| p).collect()
}

/// Voronoi cell of indexed point `site_idx` intersected with `poly` (given
/// relative to the site), found by clipping with neighbours in growing shells.
pub(crate) fn cell_polyhedron<T: Scalar>(
    index: &GridIndex<T>,
    site_idx: usize,
    mut poly: Polyhedron,
    eps: f64,
) -> Result<Polyhedron> {
    let pts = index.points();
    let site = pts[site_idx];
    let rel = |k: usize| -> V3 {
        [
            (pts[k].coord(0) - site.coord(0)).as_f64(),
            (pts[k].coord(1) - site.coord(1)).as_f64(),
            (pts[k].coord(2) - site.coord(2)).as_f64(),
        ]
    };
    let mut inner = -1.0f64;
    let mut outer = index.cell_size().as_f64();
    let mut cand: Vec<(f64, usize)> = Vec::new();
    loop {
        cand.clear();
        let mut reached = 0usize;
        index.for_each_within(&site, T::lit(outer), |k| {
            reached += 1;
            if k != site_idx {
                let p = rel(k);
                let d2 = dot(&p, &p);
                if inner < 0.0 || d2 > inner * inner {
                    cand.push((d2, k));
                }
            }
        });
        cand.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        for &(d2, k) in &cand {
            if d2 == 0.0 {
                return Err(Error::DegenerateSite(format!(
                    "point {k} coincides with site {site_idx}"
                )));
            }
            if d2 > 4.0 * poly.max_dist2() {
                break;
            }
            poly.clip(rel(k), 0.5 * d2, eps);
        }
        let rmax = poly.max_dist2().sqrt();
        if 2.0 * rmax <= outer || reached == index.len() {
            return Ok(poly);
        }
        inner = outer;
        outer = (2.0 * outer).max(2.0 * rmax);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, PointConfiguration};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cube_volume_and_half_cut() {
        let mut c = Polyhedron::cube([0.0; 3], 1.0);
        assert!((c.volume() - 8.0).abs() < 1e-12);
        c.clip([1.0, 0.0, 0.0], 0.0, 1e-12);
        assert!((c.volume() - 4.0).abs() < 1e-12);
        assert_eq!(c.faces.len(), 6);
        // corner cut: removes a tetrahedron of volume 1/6
        c.clip([1.0, 1.0, 1.0], 1.0, 1e-12);
        assert!(
            (c.volume() - (4.0 - 1.0 / 6.0)).abs() < 1e-12,
            "{}",
            c.volume()
        );
        c.clip([0.0, 0.0, 1.0], 5.0, 1e-12);
        assert!((c.volume() - (4.0 - 1.0 / 6.0)).abs() < 1e-12);
    }

    #[test]
    fn cells_tile_the_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Point<f64>> = (0..60)
            .map(|_| {
                Point::xyz(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        let cfg = PointConfiguration::from_points(3, pts).unwrap();
        let index = GridIndex::new(cfg.points().to_vec(), 0.5).unwrap();
        let mut total = 0.0;
        for i in 0..cfg.len() {
            let s = cfg.point(i);
            let cube = Polyhedron::cube([-s.coord(0), -s.coord(1), -s.coord(2)], 1.0);
            let cell = cell_polyhedron(&index, i, cube, 1e-12).unwrap();
            total += cell.volume();
        }
        assert!((total - 8.0).abs() < 1e-9, "{total}");
    }

    #[test]
    fn lattice_cell_is_a_unit_cube() {
        let mut pts = Vec::new();
        for a in -2..=2 {
            for b in -2..=2 {
                for c in -2..=2 {
                    pts.push(Point::xyz(a as f64, b as f64, c as f64));
                }
            }
        }
        let centre = pts
            .iter()
            .position(|p| *p == Point::xyz(0.0, 0.0, 0.0))
            .unwrap();
        let index = GridIndex::new(pts, 1.0).unwrap();
        let cell =
            cell_polyhedron(&index, centre, Polyhedron::cube([0.0; 3], 100.0), 1e-12).unwrap();
        assert!((cell.volume() - 1.0).abs() < 1e-12);
        assert_eq!(cell.faces.len(), 6);
        assert!(cell.faces.iter().all(|f| !f.boundary));
    }
}
