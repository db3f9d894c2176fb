use petgraph::unionfind::UnionFind;

use crate::error::{Error, Result};
use crate::functionals::knn::knn_edges;
use crate::functionals::Functional;
use crate::geometry::{GridIndex, PointConfiguration};
use crate::scalar::Scalar;

/// Graph whose connected components are counted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ComponentGraph<T> {
    /// Symmetrized k-nearest-neighbour graph.
    Knn(usize),
    /// Edge iff the distance is at most `radius`.
    Percolation { radius: T },
}

/// Size of the component of every point.
pub fn component_sizes<T: Scalar>(
    cfg: &PointConfiguration<T>,
    graph: ComponentGraph<T>,
) -> Result<Vec<usize>> {
    let n = cfg.len();
    let mut uf = UnionFind::<usize>::new(n);
    match graph {
        ComponentGraph::Knn(k) => {
            if n > k {
                for (i, j) in knn_edges(cfg, k)? {
                    uf.union(i, j);
                }
            } else {
                // every point sees all others
                for i in 1..n {
                    uf.union(0, i);
                }
            }
        }
        ComponentGraph::Percolation { radius } => {
            if n > 0 {
                let index = GridIndex::new(cfg.points().to_vec(), radius)?;
                for i in 0..n {
                    index.for_each_within(cfg.point(i), radius, |j| {
                        if j > i {
                            uf.union(i, j);
                        }
                    });
                }
            }
        }
    }
    let labels = uf.into_labeling();
    let mut size = vec![0usize; n];
    for &l in &labels {
        size[l] += 1;
    }
    Ok(labels.iter().map(|&l| size[l]).collect())
}

/// `1 / |component of x|`; the values sum to the number of components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComponentReciprocal<T> {
    graph: ComponentGraph<T>,
}

impl<T: Scalar> ComponentReciprocal<T> {
    pub fn knn(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        Ok(Self {
            graph: ComponentGraph::Knn(k),
        })
    }

    pub fn percolation(radius: T) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!(
                "percolation radius must be positive, got {radius}"
            )));
        }
        Ok(Self {
            graph: ComponentGraph::Percolation { radius },
        })
    }

    pub fn graph(&self) -> ComponentGraph<T> {
        self.graph
    }

    /// Largest component size over the number of points; a large value
    /// signals supercritical percolation.
    pub fn largest_cluster_fraction(&self, cfg: &PointConfiguration<T>) -> Result<f64> {
        if cfg.is_empty() {
            return Ok(0.0);
        }
        let s = component_sizes(cfg, self.graph)?;
        Ok(*s.iter().max().unwrap() as f64 / cfg.len() as f64)
    }
}

impl<T: Scalar> Functional<T> for ComponentReciprocal<T> {
    fn name(&self) -> &'static str {
        match self.graph {
            ComponentGraph::Knn(_) => "knn_components",
            ComponentGraph::Percolation { .. } => "percolation_components",
        }
    }

    fn values(&self, cfg: &PointConfiguration<T>) -> Result<Vec<T>> {
        Ok(component_sizes(cfg, self.graph)?
            .into_iter()
            .map(|s| T::one() / T::from_usize_lossy(s))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::testing::{check_translation, uniform_config};
    use crate::geometry::Point;

    /// Components by depth-first search over brute-force adjacency.
    fn brute_count(cfg: &PointConfiguration<f64>, adj: impl Fn(usize, usize) -> bool) -> usize {
        let n = cfg.len();
        let mut seen = vec![false; n];
        let mut count = 0;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(i) = stack.pop() {
                for j in 0..n {
                    if !seen[j] && adj(i, j) {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        count
    }

    fn total(f: &ComponentReciprocal<f64>, cfg: &PointConfiguration<f64>) -> f64 {
        f.values(cfg).unwrap().iter().sum()
    }

    #[test]
    fn percolation_line_example() {
        let cfg =
            PointConfiguration::from_points(1, vec![Point::x(0.0), Point::x(0.5), Point::x(2.0)])
                .unwrap();
        let f = ComponentReciprocal::percolation(1.0).unwrap();
        assert_eq!(f.values(&cfg).unwrap(), vec![0.5, 0.5, 1.0]);
        assert_eq!(total(&f, &cfg), 2.0);
    }

    #[test]
    fn singleton_and_empty() {
        let one = PointConfiguration::from_points(2, vec![Point::xy(1.0, 1.0)]).unwrap();
        for f in [
            ComponentReciprocal::percolation(1.0).unwrap(),
            ComponentReciprocal::knn(1).unwrap(),
        ] {
            assert_eq!(f.values(&one).unwrap(), vec![1.0]);
            assert!(f.values(&PointConfiguration::empty(2)).unwrap().is_empty());
        }
    }

    #[test]
    fn counts_match_brute_force() {
        for d in 1..=3 {
            let cfg = uniform_config(60 + d as u64, d, 1000, [400.0, 14.0, 5.0][d - 1], false);
            let perc = ComponentReciprocal::percolation(1.0).unwrap();
            let expect = brute_count(&cfg, |i, j| cfg.point(i).dist(cfg.point(j)) <= 1.0);
            assert_eq!(
                total(&perc, &cfg).round() as usize,
                expect,
                "percolation d={d}"
            );

            let edges = knn_edges(&cfg, 1).unwrap();
            let expect = brute_count(&cfg, |i, j| {
                edges.binary_search(&(i.min(j), i.max(j))).is_ok()
            });
            let knn = ComponentReciprocal::knn(1).unwrap();
            assert_eq!(total(&knn, &cfg).round() as usize, expect, "knn d={d}");
            assert!(expect > 1);
        }
    }

    #[test]
    fn nearest_neighbour_graph_has_no_singletons() {
        let cfg = uniform_config(7, 2, 500, 10.0, false);
        let s = component_sizes(&cfg, ComponentGraph::Knn(1)).unwrap();
        assert!(s.iter().all(|&s| s >= 2));
    }

    #[test]
    fn cluster_fraction() {
        let cfg = PointConfiguration::from_points(
            1,
            vec![Point::x(0.0), Point::x(0.5), Point::x(2.0), Point::x(9.0)],
        )
        .unwrap();
        let f = ComponentReciprocal::percolation(1.0).unwrap();
        assert_eq!(f.largest_cluster_fraction(&cfg).unwrap(), 0.5);
    }

    #[test]
    fn translation_invariant() {
        let cfg = uniform_config(8, 2, 300, 10.0, false);
        check_translation(
            &ComponentReciprocal::percolation(1.0).unwrap(),
            &cfg,
            9,
            0.0,
        );
        check_translation(&ComponentReciprocal::knn(1).unwrap(), &cfg, 9, 0.0);
    }
}
