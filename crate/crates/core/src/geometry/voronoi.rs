//! Planar Voronoi cells by half-plane intersection.

use crate::error::{Error, Result};
use crate::geometry::grid::GridIndex;
use crate::geometry::point::{Point, PointConfiguration};
use crate::geometry::window::Window;
use crate::scalar::Scalar;

/// Which constraint produced a polygon edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeSource {
    /// Bisector with the configuration point of this index.
    Neighbor(usize),
    /// Window or bounding-box side.
    Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellEdge<T> {
    pub from: Point<T>,
    pub to: Point<T>,
    pub source: EdgeSource,
}

impl<T: Scalar> CellEdge<T> {
    pub fn length(&self) -> T {
        self.from.dist(&self.to)
    }
}

/// Voronoi cell of `site`. For unclipped cells `edges` holds only the finite
/// edges and `bounded` tells whether the true cell is bounded; for cells
/// clipped to a window it is the full clipped polygon.
#[derive(Clone, Debug, PartialEq)]
pub struct VoronoiCell<T> {
    pub site: Point<T>,
    pub vertices: Vec<Point<T>>,
    pub edges: Vec<CellEdge<T>>,
    pub bounded: bool,
}

impl<T: Scalar> VoronoiCell<T> {
    /// Sum of the lengths of the retained edges.
    pub fn perimeter(&self) -> T {
        self.edges.iter().map(|e| e.length()).sum()
    }

    /// Shoelace area; meaningful for bounded or clipped cells.
    pub fn area(&self) -> T {
        polygon_area(&self.vertices)
    }
}

pub(crate) fn polygon_area<T: Scalar>(v: &[Point<T>]) -> T {
    let n = v.len();
    if n < 3 {
        return T::zero();
    }
    let mut s = T::zero();
    for i in 0..n {
        let a = &v[i];
        let b = &v[(i + 1) % n];
        s = s + a.coord(0) * b.coord(1) - b.coord(0) * a.coord(1);
    }
    (s / T::lit(2.0)).abs()
}

/// Convex polygon in site-relative coordinates. Edge i runs v[i] → v[i+1]
/// and lies on the line `n·y = c` stored in `line[i]`; new vertices are
/// computed by intersecting supporting lines, which keeps them accurate even
/// when the enclosing box is huge.
#[derive(Clone, Debug)]
pub(crate) struct Polygon<T> {
    pub v: Vec<[T; 2]>,
    pub lab: Vec<EdgeSource>,
    line: Vec<([T; 2], T)>,
}

fn intersect<T: Scalar>(a: &([T; 2], T), b: &([T; 2], T)) -> Option<[T; 2]> {
    let (n1, c1) = a;
    let (n2, c2) = b;
    let det = n1[0] * n2[1] - n1[1] * n2[0];
    let scale = (n1[0].abs() + n1[1].abs()) * (n2[0].abs() + n2[1].abs());
    if det.abs() <= T::lit(1e-14) * scale {
        return None;
    }
    Some([
        (*c1 * n2[1] - *c2 * n1[1]) / det,
        (n1[0] * *c2 - n2[0] * *c1) / det,
    ])
}

impl<T: Scalar> Polygon<T> {
    /// Axis-aligned square `[cx−h, cx+h]×[cy−h, cy+h]` (relative coordinates).
    pub fn square(cx: T, cy: T, half: T) -> Self {
        let o = T::one();
        let z = T::zero();
        Self {
            v: vec![
                [cx - half, cy - half],
                [cx + half, cy - half],
                [cx + half, cy + half],
                [cx - half, cy + half],
            ],
            lab: vec![EdgeSource::Boundary; 4],
            line: vec![
                ([z, -o], -(cy - half)),
                ([o, z], cx + half),
                ([z, o], cy + half),
                ([-o, z], -(cx - half)),
            ],
        }
    }

    pub fn max_dist2(&self) -> T {
        self.v
            .iter()
            .map(|p| p[0] * p[0] + p[1] * p[1])
            .fold(T::zero(), T::max)
    }

    /// Keeps the part closer to the origin (the site) than to `p`.
    pub fn clip(&mut self, p: &[T; 2], label: EdgeSource, eps2: T) {
        let half = T::lit(0.5);
        let cut = (*p, (p[0] * p[0] + p[1] * p[1]) * half);
        let f = |q: &[T; 2]| q[0] * cut.0[0] + q[1] * cut.0[1] - cut.1;
        let n = self.v.len();
        if n == 0 {
            return;
        }
        let vals: Vec<T> = self.v.iter().map(f).collect();
        if vals.iter().all(|&x| x <= T::zero()) {
            return;
        }
        let mut out_v = Vec::with_capacity(n + 1);
        let mut out_l = Vec::with_capacity(n + 1);
        let mut out_line = Vec::with_capacity(n + 1);
        for i in 0..n {
            let j = (i + 1) % n;
            let (cur, nxt) = (self.v[i], self.v[j]);
            let (dc, dn) = (vals[i], vals[j]);
            let cin = dc <= T::zero();
            let nin = dn <= T::zero();
            if cin {
                out_v.push(cur);
                out_l.push(self.lab[i]);
                out_line.push(self.line[i]);
            }
            if cin != nin {
                let q = intersect(&self.line[i], &cut).unwrap_or_else(|| {
                    let t = dc / (dc - dn);
                    [
                        cur[0] + (nxt[0] - cur[0]) * t,
                        cur[1] + (nxt[1] - cur[1]) * t,
                    ]
                });
                out_v.push(q);
                if cin {
                    out_l.push(label);
                    out_line.push(cut);
                } else {
                    out_l.push(self.lab[i]);
                    out_line.push(self.line[i]);
                }
            }
        }
        self.v = out_v;
        self.lab = out_l;
        self.line = out_line;
        self.drop_short_edges(eps2);
    }

    fn drop_short_edges(&mut self, eps2: T) {
        let mut i = 0;
        while self.v.len() > 1 && i < self.v.len() {
            let j = (i + 1) % self.v.len();
            let dx = self.v[j][0] - self.v[i][0];
            let dy = self.v[j][1] - self.v[i][1];
            if dx * dx + dy * dy <= eps2 {
                // edge i collapses: edge i+1 now starts at v[i]
                self.v.remove(j);
                self.lab.remove(i);
                self.line.remove(i);
                if j < i {
                    i = i.saturating_sub(1);
                }
            } else {
                i += 1;
            }
        }
        if self.v.len() < 3 {
            self.v.clear();
            self.lab.clear();
            self.line.clear();
        }
    }

    fn shifted(&self, s: &Point<T>) -> Vec<Point<T>> {
        self.v
            .iter()
            .map(|p| Point::xy(p[0] + s.coord(0), p[1] + s.coord(1)))
            .collect()
    }
}

/// Cell of point `site_idx`, intersected with `poly` (given relative to the site).
///
/// Neighbours are added in growing distance shells; clipping stops once the
/// shell radius exceeds twice the farthest cell vertex.
pub(crate) fn cell_polygon<T: Scalar>(
    index: &GridIndex<T>,
    site_idx: usize,
    mut poly: Polygon<T>,
    eps: T,
) -> Result<Polygon<T>> {
    let pts = index.points();
    let site = pts[site_idx];
    let eps2 = eps * eps;
    let two = T::lit(2.0);
    let mut inner = -T::one();
    let mut outer = index.cell_size();
    let mut cand: Vec<(T, usize)> = Vec::new();
    loop {
        cand.clear();
        let mut reached = 0usize;
        index.for_each_within(&site, outer, |k| {
            reached += 1;
            if k != site_idx {
                let d2 = pts[k].dist2(&site);
                if inner < T::zero() || d2 > inner * inner {
                    cand.push((d2, k));
                }
            }
        });
        cand.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        for &(d2, k) in &cand {
            if d2 == T::zero() {
                return Err(Error::DegenerateSite(format!(
                    "point {k} coincides with site {site_idx} at {site:?}"
                )));
            }
            // bisector beyond every vertex cannot cut
            if d2 > T::lit(4.0) * poly.max_dist2() {
                break;
            }
            let p = [
                pts[k].coord(0) - site.coord(0),
                pts[k].coord(1) - site.coord(1),
            ];
            poly.clip(&p, EdgeSource::Neighbor(k), eps2);
        }
        let rmax = poly.max_dist2().sqrt();
        if two * rmax <= outer || reached == index.len() {
            return Ok(poly);
        }
        inner = outer;
        outer = (outer * two).max(two * rmax);
    }
}

fn require_2d<T: Scalar>(x: &Point<T>) -> Result<()> {
    if x.dim() != 2 {
        return Err(Error::UnsupportedDimension(x.dim()));
    }
    Ok(())
}

/// Batch Voronoi computations over one configuration.
pub struct Voronoi2d<T> {
    index: GridIndex<T>,
    box_half: T,
    eps: T,
}

impl<T: Scalar> Voronoi2d<T> {
    pub fn new(points: &PointConfiguration<T>) -> Result<Self> {
        if points.dim() != 2 {
            return Err(Error::UnsupportedDimension(points.dim()));
        }
        let n = points.len().max(1);
        let mut lo = [T::infinity(); 2];
        let mut hi = [T::neg_infinity(); 2];
        for p in points.iter() {
            for i in 0..2 {
                lo[i] = lo[i].min(p.coord(i));
                hi[i] = hi[i].max(p.coord(i));
            }
        }
        let extent = if points.is_empty() {
            T::one()
        } else {
            (hi[0] - lo[0]).max(hi[1] - lo[1])
        };
        // typical spacing as the grid cell
        let cell = (extent * extent / T::from_usize_lossy(n))
            .sqrt()
            .max(extent * T::lit(1e-9))
            .max(T::lit(1e-12));
        let index = GridIndex::new(points.points().to_vec(), cell)?;
        let box_half = T::lit(1e4) * (extent + T::one());
        let eps = T::lit(1e-12) * (extent + T::one());
        Ok(Self {
            index,
            box_half,
            eps,
        })
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn points(&self) -> &[Point<T>] {
        self.index.points()
    }

    /// Unclipped cell of point `i`; only finite edges are kept.
    pub fn cell(&self, i: usize) -> Result<VoronoiCell<T>> {
        let site = self.index.points()[i];
        let poly = Polygon::square(T::zero(), T::zero(), self.box_half);
        let poly = cell_polygon(&self.index, i, poly, self.eps)?;
        let n = poly.v.len();
        let abs = poly.shifted(&site);
        let is_nb = |k: usize| matches!(poly.lab[k % n], EdgeSource::Neighbor(_));
        let bounded = n >= 3 && (0..n).all(is_nb);
        let mut edges = Vec::new();
        let mut vertices = Vec::new();
        for k in 0..n {
            let finite = is_nb(k) && is_nb(k + n - 1) && is_nb(k + 1);
            if finite {
                let from = abs[k];
                let to = abs[(k + 1) % n];
                edges.push(CellEdge {
                    from,
                    to,
                    source: poly.lab[k],
                });
            }
            if is_nb(k) && is_nb(k + n - 1) {
                vertices.push(abs[k]);
            }
        }
        Ok(VoronoiCell {
            site,
            vertices,
            edges,
            bounded,
        })
    }

    /// Cell of point `i` clipped to `window`.
    pub fn clipped_cell(&self, i: usize, window: &Window<T>) -> Result<VoronoiCell<T>> {
        let site = self.index.points()[i];
        let poly = self.clipped_polygon(i, window)?;
        let n = poly.v.len();
        let abs = poly.shifted(&site);
        let edges = (0..n)
            .map(|k| CellEdge {
                from: abs[k],
                to: abs[(k + 1) % n],
                source: poly.lab[k],
            })
            .collect();
        Ok(VoronoiCell {
            site,
            vertices: abs,
            edges,
            bounded: true,
        })
    }

    /// Unclipped cell in site-relative coordinates; edges labelled
    /// `Boundary` come from the enclosing box and mark an unbounded cell.
    pub(crate) fn unclipped_polygon(&self, i: usize) -> Result<Polygon<T>> {
        cell_polygon(
            &self.index,
            i,
            Polygon::square(T::zero(), T::zero(), self.box_half),
            self.eps,
        )
    }

    /// Clipped cell in site-relative coordinates.
    pub(crate) fn clipped_polygon(&self, i: usize, window: &Window<T>) -> Result<Polygon<T>> {
        self.polygon_in_box(i, [T::zero(), T::zero()], window.half_width())
    }

    /// Cell intersected with the square of half-width `half` centred at
    /// `center`, in site-relative coordinates.
    pub(crate) fn polygon_in_box(&self, i: usize, center: [T; 2], half: T) -> Result<Polygon<T>> {
        let s = self.index.points()[i];
        let sq = Polygon::square(center[0] - s.coord(0), center[1] - s.coord(1), half);
        cell_polygon(&self.index, i, sq, self.eps)
    }
}

/// Voronoi cell of `x` with respect to `X` (which must contain `x`).
pub fn voronoi_cell_2d<T: Scalar>(
    x: &Point<T>,
    points: &PointConfiguration<T>,
) -> Result<VoronoiCell<T>> {
    require_2d(x)?;
    let i = points
        .position_of(x)
        .ok_or_else(|| Error::InvalidInput("site must belong to the configuration".into()))?;
    Voronoi2d::new(points)?.cell(i)
}

/// Voronoi cell of `x` in `X`, clipped to `window`.
pub fn clipped_voronoi_cell_2d<T: Scalar>(
    x: &Point<T>,
    points: &PointConfiguration<T>,
    window: &Window<T>,
) -> Result<VoronoiCell<T>> {
    require_2d(x)?;
    let i = points
        .position_of(x)
        .ok_or_else(|| Error::InvalidInput("site must belong to the configuration".into()))?;
    Voronoi2d::new(points)?.clipped_cell(i, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cross() -> PointConfiguration<f64> {
        PointConfiguration::from_points(
            2,
            vec![
                Point::xy(0.0, 0.0),
                Point::xy(1.0, 0.0),
                Point::xy(-1.0, 0.0),
                Point::xy(0.0, 1.0),
                Point::xy(0.0, -1.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn cross_gives_unit_square() {
        let cell = voronoi_cell_2d(&Point::xy(0.0, 0.0), &cross()).unwrap();
        assert!(cell.bounded);
        assert_eq!(cell.edges.len(), 4);
        assert!((cell.perimeter() - 4.0).abs() < 1e-12, "{cell:?}");
        assert!((cell.area() - 1.0).abs() < 1e-12);
        for v in &cell.vertices {
            assert!(
                (v.coord(0).abs() - 0.5).abs() < 1e-12 && (v.coord(1).abs() - 0.5).abs() < 1e-12
            );
        }
    }

    #[test]
    fn lone_point_is_unbounded_without_finite_edges() {
        let x = PointConfiguration::from_points(2, vec![Point::xy(0.3, 0.2)]).unwrap();
        let cell = voronoi_cell_2d(&Point::xy(0.3, 0.2), &x).unwrap();
        assert!(!cell.bounded);
        assert!(cell.edges.is_empty());
    }

    #[test]
    fn outer_cross_cells_have_no_finite_edges_but_two_rays() {
        // (1,0) has neighbours only on one side: its cell is unbounded
        let cell = voronoi_cell_2d(&Point::xy(1.0, 0.0), &cross()).unwrap();
        assert!(!cell.bounded);
        // its finite part is the single square edge x = 1/2 shared with the origin
        assert_eq!(cell.edges.len(), 1);
        assert!((cell.perimeter() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn duplicate_site_is_degenerate() {
        let x = PointConfiguration::from_points(
            2,
            vec![
                Point::xy(0.0, 0.0),
                Point::xy(0.0, 0.0),
                Point::xy(1.0, 1.0),
            ],
        )
        .unwrap();
        assert!(matches!(
            voronoi_cell_2d(&Point::xy(0.0, 0.0), &x),
            Err(Error::DegenerateSite(_))
        ));
    }

    #[test]
    fn non_planar_input_rejected() {
        let x = PointConfiguration::from_points(1, vec![Point::x(0.0f64)]).unwrap();
        assert!(matches!(
            voronoi_cell_2d(&Point::x(0.0), &x),
            Err(Error::UnsupportedDimension(1))
        ));
    }

    #[test]
    fn clipped_cells_tile_the_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = Window::new(1.5f64, 2).unwrap();
        for trial in 0..20 {
            let n = if trial == 0 { 20 } else { 5 + trial * 7 };
            let pts: Vec<_> = (0..n)
                .map(|_| Point::xy(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)))
                .collect();
            let cfg = PointConfiguration::from_points(2, pts).unwrap();
            let vor = Voronoi2d::new(&cfg).unwrap();
            let total: f64 = (0..n)
                .map(|i| vor.clipped_cell(i, &w).unwrap().area())
                .sum();
            assert!(
                (total - w.volume()).abs() <= 1e-9 * w.volume(),
                "trial {trial}: {total}"
            );
        }
    }

    #[test]
    fn cells_contain_their_sites_and_respect_bisectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<_> = (0..60)
            .map(|_| Point::xy(rng.random_range(0.0..4.0), rng.random_range(0.0..4.0)))
            .collect();
        let cfg = PointConfiguration::from_points(2, pts.clone()).unwrap();
        let vor = Voronoi2d::new(&cfg).unwrap();
        for i in 0..pts.len() {
            let cell = vor.cell(i).unwrap();
            for v in &cell.vertices {
                let di = v.dist(&pts[i]);
                for p in &pts {
                    assert!(v.dist(p) >= di - 1e-9);
                }
            }
        }
    }
}
