use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functionals::Functional;
use crate::geometry::{CellEdge, EdgeSource, Point, PointConfiguration, Voronoi2d};
use crate::scalar::Scalar;

/// Finite edges of every Voronoi cell, keyed by the unordered site pair.
/// Each shared edge appears once, taken from the lower-index site.
pub fn voronoi_finite_edges<T: Scalar>(
    cfg: &PointConfiguration<T>,
) -> Result<Vec<((usize, usize), CellEdge<T>)>> {
    let vor = Voronoi2d::new(cfg)?;
    let mut out = Vec::new();
    for i in 0..cfg.len() {
        for e in vor.cell(i)?.edges {
            if let EdgeSource::Neighbor(j) = e.source {
                if i < j {
                    out.push(((i, j), e));
                }
            }
        }
    }
    Ok(out)
}

/// Half the total length of the finite edges of the planar Voronoi cell.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VoronoiLength;

fn half_perimeter<T: Scalar>(vor: &Voronoi2d<T>, i: usize) -> Result<T> {
    Ok(vor.cell(i)?.perimeter() * T::lit(0.5))
}

impl<T: Scalar> Functional<T> for VoronoiLength {
    fn name(&self) -> &'static str {
        "voronoi_length"
    }

    fn values(&self, cfg: &PointConfiguration<T>) -> Result<Vec<T>> {
        if cfg.dim() != 2 {
            return Err(Error::UnsupportedDimension(cfg.dim()));
        }
        let vor = Voronoi2d::new(cfg)?;
        (0..cfg.len())
            .into_par_iter()
            .map(|i| half_perimeter(&vor, i))
            .collect()
    }

    fn value_with_mark(
        &self,
        x: &Point<T>,
        mark: Option<T>,
        cfg: &PointConfiguration<T>,
    ) -> Result<T> {
        if cfg.dim() != 2 {
            return Err(Error::UnsupportedDimension(cfg.dim()));
        }
        let (c, i) = cfg.with_point(x, mark)?;
        half_perimeter(&Voronoi2d::new(&c)?, i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::testing::{check_translation, uniform_config};

    #[test]
    fn cross_configuration() {
        let cfg = PointConfiguration::from_points(
            2,
            vec![
                Point::xy(0.0, 0.0),
                Point::xy(1.0, 0.0),
                Point::xy(-1.0, 0.0),
                Point::xy(0.0, 1.0),
                Point::xy(0.0, -1.0),
            ],
        )
        .unwrap();
        let v: f64 = VoronoiLength.value(&Point::xy(0.0, 0.0), &cfg).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lone_point_has_no_finite_edges() {
        let cfg = PointConfiguration::from_points(2, vec![Point::xy(0.4, 0.2)]).unwrap();
        assert_eq!(VoronoiLength.values(&cfg).unwrap(), vec![0.0]);
    }

    #[test]
    fn wrong_dimension() {
        let cfg = PointConfiguration::from_points(1, vec![Point::x(0.0)]).unwrap();
        assert_eq!(
            VoronoiLength.values(&cfg),
            Err(Error::UnsupportedDimension(1))
        );
    }

    #[test]
    fn each_shared_edge_counted_once() {
        let cfg = uniform_config(21, 2, 100, 5.0, false);
        let vor = Voronoi2d::new(&cfg).unwrap();
        // every finite edge seen from site i is seen from its neighbour j with equal length
        let mut lengths = std::collections::BTreeMap::new();
        for i in 0..cfg.len() {
            for e in vor.cell(i).unwrap().edges {
                let EdgeSource::Neighbor(j) = e.source else {
                    panic!("boundary edge in unclipped cell")
                };
                lengths
                    .entry((i.min(j), i.max(j)))
                    .or_insert_with(Vec::new)
                    .push(e.length());
            }
        }
        let mut direct = 0.0;
        for l in lengths.values() {
            assert_eq!(l.len(), 2, "finite edge seen from one side only");
            assert!((l[0] - l[1]).abs() < 1e-9, "{l:?}");
            direct += l[0];
        }
        let sum: f64 = VoronoiLength.values(&cfg).unwrap().iter().sum();
        assert!((sum - direct).abs() < 1e-9 * direct, "{sum} vs {direct}");
        let once: f64 = voronoi_finite_edges(&cfg)
            .unwrap()
            .iter()
            .map(|(_, e)| e.length())
            .sum();
        assert!((once - direct).abs() < 1e-9 * direct);
    }

    #[test]
    fn translation_invariant() {
        check_translation(
            &VoronoiLength,
            &uniform_config(22, 2, 200, 5.0, false),
            23,
            1e-9,
        );
    }
}
