use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geometry::point::{Point, PointConfiguration, MAX_DIM};
use crate::scalar::Scalar;

/// Uniform bucket grid over the bounding box of a point set.
///
/// Built once, then immutable; all queries are exact (candidate cells are
/// followed by a distance filter).
#[derive(Clone, Debug)]
pub struct GridIndex<T> {
    cell_size: T,
    dim: usize,
    lo: [T; MAX_DIM],
    shape: [usize; MAX_DIM],
    starts: Vec<u32>,
    entries: Vec<u32>,
    points: Vec<Point<T>>,
}

const CELLS_PER_POINT: usize = 4;

impl<T: Scalar> GridIndex<T> {
    /// Indexes `points`. The cell size is grown if the bounding box would
    /// otherwise need more than a few cells per point.
    pub fn new(points: Vec<Point<T>>, cell_size: T) -> Result<Self> {
        if !(cell_size > T::zero()) || !cell_size.is_finite() {
            return Err(Error::InvalidInput(format!(
                "cell size must be positive, got {cell_size}"
            )));
        }
        let dim = points.first().map_or(1, |p| p.dim());
        let mut lo = [T::zero(); MAX_DIM];
        let mut hi = [T::zero(); MAX_DIM];
        for (k, p) in points.iter().enumerate() {
            if p.dim() != dim {
                return Err(Error::InvalidInput("mixed dimensions in index".into()));
            }
            for i in 0..dim {
                let c = p.coord(i);
                if !c.is_finite() {
                    return Err(Error::InvalidInput(format!("non-finite coordinate {p:?}")));
                }
                if k == 0 || c < lo[i] {
                    lo[i] = c;
                }
                if k == 0 || c > hi[i] {
                    hi[i] = c;
                }
            }
        }
        if points.is_empty() {
            return Ok(Self {
                cell_size,
                dim,
                lo,
                shape: [0; MAX_DIM],
                starts: vec![0],
                entries: Vec::new(),
                points,
            });
        }

        let max_cells = CELLS_PER_POINT * points.len() + 64;
        let mut cell = cell_size;
        let shape = loop {
            let mut shape = [1usize; MAX_DIM];
            let mut total = 1usize;
            for i in 0..dim {
                let n = ((hi[i] - lo[i]) / cell)
                    .floor()
                    .to_usize()
                    .unwrap_or(usize::MAX / 4)
                    + 1;
                shape[i] = n;
                total = total.saturating_mul(n);
            }
            if total <= max_cells {
                break shape;
            }
            cell = cell * T::lit(2.0);
        };

        let ncells: usize = shape.iter().product();
        let mut counts = vec![0u32; ncells + 1];
        let mut cell_of = Vec::with_capacity(points.len());
        let mut index = Self {
            cell_size: cell,
            dim,
            lo,
            shape,
            starts: Vec::new(),
            entries: Vec::new(),
            points: Vec::new(),
        };
        for p in &points {
            let c = index.flat(&index.cell_coords(p));
            counts[c + 1] += 1;
            cell_of.push(c);
        }
        for i in 0..ncells {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut entries = vec![0u32; points.len()];
        for (k, &c) in cell_of.iter().enumerate() {
            entries[fill[c] as usize] = k as u32;
            fill[c] += 1;
        }
        index.starts = counts;
        index.entries = entries;
        index.points = points;
        Ok(index)
    }

    pub fn cell_size(&self) -> T {
        self.cell_size
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point<T>] {
        &self.points
    }

    /// Number of non-empty buckets.
    pub fn bucket_count(&self) -> usize {
        self.starts.windows(2).filter(|w| w[1] > w[0]).count()
    }

    /// Sizes of the non-empty buckets.
    pub fn bucket_sizes(&self) -> Vec<usize> {
        self.starts
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| (w[1] - w[0]) as usize)
            .collect()
    }

    fn cell_coords(&self, p: &Point<T>) -> [usize; MAX_DIM] {
        let mut c = [0usize; MAX_DIM];
        for i in 0..self.dim {
            c[i] = self.axis_cell(i, p.coord(i));
        }
        c
    }

    fn axis_cell(&self, axis: usize, x: T) -> usize {
        let f = ((x - self.lo[axis]) / self.cell_size).floor();
        if f <= T::zero() {
            0
        } else {
            f.to_usize().unwrap_or(usize::MAX).min(self.shape[axis] - 1)
        }
    }

    fn flat(&self, c: &[usize; MAX_DIM]) -> usize {
        (c[2] * self.shape[1] + c[1]) * self.shape[0] + c[0]
    }

    /// Calls `visit(index)` for every indexed point within closed distance `radius` of `center`.
    pub fn for_each_within(&self, center: &Point<T>, radius: T, mut visit: impl FnMut(usize)) {
        if self.points.is_empty() || radius < T::zero() {
            return;
        }
        let mut lo = [0usize; MAX_DIM];
        let mut hi = [0usize; MAX_DIM];
        for i in 0..self.dim {
            let a = center.coord(i) - radius;
            let b = center.coord(i) + radius;
            let top = self.lo[i] + self.cell_size * T::from_usize_lossy(self.shape[i]);
            if b < self.lo[i] || a > top {
                return;
            }
            lo[i] = self.axis_cell(i, a);
            hi[i] = self.axis_cell(i, b);
        }
        let r2 = radius * radius;
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                let row = (z * self.shape[1] + y) * self.shape[0];
                let s = self.starts[row + lo[0]] as usize;
                let e = self.starts[row + hi[0] + 1] as usize;
                for &k in &self.entries[s..e] {
                    let k = k as usize;
                    if self.points[k].dist2(center) <= r2 {
                        visit(k);
                    }
                }
            }
        }
    }

    /// Indices of points within closed distance `radius`, ascending.
    pub fn range_indices(&self, center: &Point<T>, radius: T) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_within(center, radius, |k| out.push(k));
        out.sort_unstable();
        out
    }

    /// Points within closed distance `radius` of `center`.
    pub fn range_query(&self, center: &Point<T>, radius: T) -> PointConfiguration<T> {
        let pts = self
            .range_indices(center, radius)
            .into_iter()
            .map(|k| self.points[k])
            .collect();
        PointConfiguration::from_points(center.dim(), pts).expect("indexed points are valid")
    }

    fn bbox_diameter(&self) -> T {
        let mut s = T::zero();
        for i in 0..self.dim {
            let ext = self.cell_size * T::from_usize_lossy(self.shape[i]);
            s = s + ext * ext;
        }
        s.sqrt()
    }

    fn knn_impl(&self, x: &Point<T>, k: usize, skip: impl Fn(usize) -> bool) -> Result<Vec<usize>> {
        let available = (0..self.points.len()).filter(|&i| !skip(i)).count();
        if available < k {
            return Err(Error::InsufficientPoints {
                needed: k,
                found: available,
            });
        }
        if k == 0 {
            return Ok(Vec::new());
        }
        // distance from x to the grid box, so the first radius can reach it
        let mut gap2 = T::zero();
        for i in 0..self.dim {
            let top = self.lo[i] + self.cell_size * T::from_usize_lossy(self.shape[i]);
            let g = (self.lo[i] - x.coord(i))
                .max(x.coord(i) - top)
                .max(T::zero());
            gap2 = gap2 + g * g;
        }
        let limit = gap2.sqrt() + self.bbox_diameter() + self.cell_size;
        let mut radius = gap2.sqrt() + self.cell_size;
        loop {
            let mut cand: Vec<(T, usize)> = Vec::new();
            self.for_each_within(x, radius, |i| {
                if !skip(i) {
                    cand.push((self.points[i].dist2(x), i));
                }
            });
            if cand.len() >= k || radius > limit {
                cand.sort_by(|a, b| self.neighbor_order(a, b));
                cand.truncate(k);
                if cand.len() == k {
                    return Ok(cand.into_iter().map(|(_, i)| i).collect());
                }
            }
            radius = radius * T::lit(2.0);
        }
    }

    fn neighbor_order(&self, a: &(T, usize), b: &(T, usize)) -> Ordering {
        a.0.partial_cmp(&b.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| self.points[a.1].lex_cmp(&self.points[b.1]))
            .then_with(|| a.1.cmp(&b.1))
    }

    /// The `k` nearest indexed points to `x`, excluding points with exactly
    /// the coordinates of `x`. Ties are broken lexicographically.
    pub fn knn_query(&self, x: &Point<T>, k: usize) -> Result<Vec<usize>> {
        self.knn_impl(x, k, |i| self.points[i] == *x)
    }

    /// The `k` nearest neighbours of indexed point `i` (excluding `i` itself).
    pub fn knn_of(&self, i: usize, k: usize) -> Result<Vec<usize>> {
        let x = self.points[i];
        self.knn_impl(&x, k, |j| j == i)
    }
}

/// Builds a [`GridIndex`] over a configuration.
pub fn build_index<T: Scalar>(
    points: &PointConfiguration<T>,
    cell_size: T,
) -> Result<GridIndex<T>> {
    GridIndex::new(points.points().to_vec(), cell_size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(dim: usize, pts: Vec<Point<f64>>) -> PointConfiguration<f64> {
        PointConfiguration::from_points(dim, pts).unwrap()
    }

    #[test]
    fn empty_and_single_bucket() {
        let idx = build_index(&PointConfiguration::<f64>::empty(2), 1.0).unwrap();
        assert_eq!(idx.bucket_count(), 0);
        let idx = build_index(
            &cfg(
                2,
                vec![
                    Point::xy(0.1, 0.1),
                    Point::xy(0.2, 0.3),
                    Point::xy(0.4, 0.05),
                ],
            ),
            1.0,
        )
        .unwrap();
        assert_eq!(idx.bucket_count(), 1);
        assert_eq!(idx.bucket_sizes(), vec![3]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(GridIndex::new(vec![Point::xy(f64::NAN, 0.0)], 1.0).is_err());
        assert!(GridIndex::new(vec![Point::xy(0.0, 0.0)], 0.0).is_err());
    }

    #[test]
    fn whole_window_range_and_radius_zero() {
        let pts: Vec<_> = (0..50)
            .map(|i| Point::xy(i as f64 * 0.37 % 5.0, i as f64 * 0.11))
            .collect();
        let idx = GridIndex::new(pts.clone(), 0.5).unwrap();
        assert_eq!(idx.range_indices(&Point::xy(2.5, 2.5), 100.0).len(), 50);
        assert_eq!(idx.range_indices(&pts[7], 0.0), vec![7]);
    }

    #[test]
    fn knn_small_examples() {
        let idx =
            GridIndex::new(vec![Point::x(0.0f64), Point::x(1.0), Point::x(3.0)], 1.0).unwrap();
        let a = idx.knn_query(&Point::x(0.0), 1).unwrap();
        assert_eq!(a, vec![1]);
        let b = idx.knn_query(&Point::x(3.0), 2).unwrap();
        assert_eq!(b, vec![1, 0]);
        assert!(matches!(
            idx.knn_query(&Point::x(3.0), 3),
            Err(Error::InsufficientPoints { .. })
        ));
    }

    #[test]
    fn knn_ties_are_lexicographic() {
        let idx = GridIndex::new(
            vec![
                Point::xy(0.0f64, 1.0),
                Point::xy(1.0, 0.0),
                Point::xy(-1.0, 0.0),
                Point::xy(0.0, -1.0),
            ],
            0.5,
        )
        .unwrap();
        let order = idx.knn_query(&Point::xy(0.0, 0.0), 4).unwrap();
        assert_eq!(order, vec![2, 3, 0, 1]);
    }

    fn brute_range(pts: &[Point<f64>], c: &Point<f64>, r: f64) -> Vec<usize> {
        (0..pts.len()).filter(|&i| pts[i].dist(c) <= r).collect()
    }

    fn brute_knn(pts: &[Point<f64>], i: usize, k: usize) -> Vec<usize> {
        let mut v: Vec<usize> = (0..pts.len()).filter(|&j| j != i).collect();
        v.sort_by(|&a, &b| {
            pts[a]
                .dist2(&pts[i])
                .partial_cmp(&pts[b].dist2(&pts[i]))
                .unwrap()
                .then(pts[a].lex_cmp(&pts[b]))
                .then(a.cmp(&b))
        });
        v.truncate(k);
        v
    }

    #[test]
    fn agrees_with_linear_scan_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in 1..=3 {
            let pts: Vec<Point<f64>> = (0..1000)
                .map(|_| {
                    let c: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
                    Point::new(&c).unwrap()
                })
                .collect();
            let idx = GridIndex::new(pts.clone(), 0.7).unwrap();
            for q in 0..60 {
                let c = pts[q * 13 % pts.len()];
                let r = rng.random_range(0.0..3.0);
                assert_eq!(idx.range_indices(&c, r), brute_range(&pts, &c, r));
                let k = 1 + q % 7;
                assert_eq!(
                    idx.knn_of(q * 13 % pts.len(), k).unwrap(),
                    brute_knn(&pts, q * 13 % pts.len(), k)
                );
            }
        }
    }

    #[test]
    fn sparse_points_do_not_blow_up_the_grid() {
        let idx = GridIndex::new(vec![Point::xy(0.0f64, 0.0), Point::xy(1e6, 1e6)], 1e-3).unwrap();
        assert_eq!(idx.range_indices(&Point::xy(1e6, 1e6), 1.0), vec![1]);
        assert_eq!(idx.knn_query(&Point::xy(0.0, 0.0), 1).unwrap(), vec![1]);
    }
}
