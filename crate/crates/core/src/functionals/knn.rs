use crate::error::{Error, Result};
use crate::functionals::Functional;
use crate::geometry::{GridIndex, PointConfiguration};
use crate::scalar::Scalar;

/// Undirected edges `{i, j}` (`i < j`) of the k-nearest-neighbour graph:
/// `j` is among the `k` nearest of `i` or `i` among the `k` nearest of `j`.
/// Sorted ascending. Needs at least `k + 1` points.
pub fn knn_edges<T: Scalar>(cfg: &PointConfiguration<T>, k: usize) -> Result<Vec<(usize, usize)>> {
    let n = cfg.len();
    if n < k + 1 {
        return Err(Error::InsufficientPoints {
            needed: k + 1,
            found: n,
        });
    }
    let index = GridIndex::new(cfg.points().to_vec(), typical_spacing(cfg, k))?;
    let mut edges = Vec::with_capacity(n * k);
    for i in 0..n {
        for j in index.knn_of(i, k)? {
            edges.push((i.min(j), i.max(j)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(edges)
}

/// Grid cell giving about `k + 1` points per cell.
pub(crate) fn typical_spacing<T: Scalar>(cfg: &PointConfiguration<T>, k: usize) -> T {
    let d = cfg.dim();
    let mut lo = [T::infinity(); 3];
    let mut hi = [T::neg_infinity(); 3];
    for p in cfg.iter() {
        for i in 0..d {
            lo[i] = lo[i].min(p.coord(i));
            hi[i] = hi[i].max(p.coord(i));
        }
    }
    let mut vol = T::one();
    let mut ext = T::zero();
    for i in 0..d {
        let e = (hi[i] - lo[i]).max(T::zero());
        ext = ext.max(e);
        vol = vol * e.max(T::lit(1e-9));
    }
    let per = vol * T::from_usize_lossy(k + 1) / T::from_usize_lossy(cfg.len().max(1));
    per.powf(T::one() / T::from_usize_lossy(d))
        .max(ext * T::lit(1e-6))
        .max(T::lit(1e-9))
}

/// Half the total length of k-NN graph edges incident to the point, so that
/// the values sum to the total edge length of the graph.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KnnLength {
    k: usize,
}

impl KnnLength {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

impl<T: Scalar> Functional<T> for KnnLength {
    fn name(&self) -> &'static str {
        "knn_length"
    }

    fn values(&self, cfg: &PointConfiguration<T>) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); cfg.len()];
        if self.degenerate(cfg) {
            return Ok(out);
        }
        let half = T::lit(0.5);
        for (i, j) in knn_edges(cfg, self.k)? {
            let l = cfg.point(i).dist(cfg.point(j)) * half;
            out[i] = out[i] + l;
            out[j] = out[j] + l;
        }
        Ok(out)
    }

    fn degenerate(&self, cfg: &PointConfiguration<T>) -> bool {
        cfg.len() < self.k + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::testing::{check_translation, uniform_config};
    use crate::geometry::Point;

    fn brute_edges(cfg: &PointConfiguration<f64>, k: usize) -> Vec<(usize, usize)> {
        let p = cfg.points();
        let mut e = Vec::new();
        for i in 0..p.len() {
            let mut others: Vec<usize> = (0..p.len()).filter(|&j| j != i).collect();
            others.sort_by(|&a, &b| {
                p[a].dist2(&p[i])
                    .partial_cmp(&p[b].dist2(&p[i]))
                    .unwrap()
                    .then(p[a].lex_cmp(&p[b]))
                    .then(a.cmp(&b))
            });
            for &j in &others[..k] {
                e.push((i.min(j), i.max(j)));
            }
        }
        e.sort_unstable();
        e.dedup();
        e
    }

    #[test]
    fn line_example() {
        let cfg =
            PointConfiguration::from_points(1, vec![Point::x(0.0), Point::x(1.0), Point::x(3.0)])
                .unwrap();
        let f = KnnLength::new(1).unwrap();
        let v = f.values(&cfg).unwrap();
        assert_eq!(v, vec![0.5, 1.5, 1.0]);
        assert_eq!(v.iter().sum::<f64>(), 3.0);
        assert_eq!(f.value(&Point::x(1.0), &cfg).unwrap(), 1.5);
    }

    #[test]
    fn two_points_share_the_edge() {
        let cfg =
            PointConfiguration::from_points(2, vec![Point::xy(0.0, 0.0), Point::xy(3.0, 4.0)])
                .unwrap();
        assert_eq!(
            KnnLength::new(1).unwrap().values(&cfg).unwrap(),
            vec![2.5, 2.5]
        );
    }

    #[test]
    fn too_few_points_is_degenerate_zero() {
        let f = KnnLength::new(2).unwrap();
        let cfg = PointConfiguration::from_points(1, vec![Point::x(0.0), Point::x(1.0)]).unwrap();
        assert!(f.degenerate(&cfg));
        assert_eq!(f.values(&cfg).unwrap(), vec![0.0, 0.0]);
        let one = PointConfiguration::from_points(1, vec![Point::x(0.0)]).unwrap();
        assert_eq!(KnnLength::new(1).unwrap().values(&one).unwrap(), vec![0.0]);
        assert!(KnnLength::new(0).is_err());
    }

    #[test]
    fn total_length_matches_all_pairs_construction() {
        for (d, k) in [(1, 1), (2, 1), (2, 3), (3, 2)] {
            let cfg = uniform_config(40 + d as u64, d, 1000, 10.0, false);
            let e = knn_edges(&cfg, k).unwrap();
            assert_eq!(e, brute_edges(&cfg, k), "d={d} k={k}");
            let total: f64 = e
                .iter()
                .map(|&(i, j)| cfg.point(i).dist(cfg.point(j)))
                .sum();
            let v: f64 = KnnLength::new(k)
                .unwrap()
                .values(&cfg)
                .unwrap()
                .iter()
                .sum();
            assert!((v - total).abs() < 1e-9 * total);
        }
    }

    #[test]
    fn translation_invariant() {
        check_translation(
            &KnnLength::new(2).unwrap(),
            &uniform_config(5, 2, 200, 5.0, false),
            6,
            1e-12,
        );
    }
}
