use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::functionals::Functional;
use crate::geometry::{ball_volume, GridIndex, Point, PointConfiguration};
use crate::scalar::Scalar;

/// Radius `r_d` of the unit-volume ball in ℝ^d.
pub fn rsa_radius(d: usize) -> f64 {
    (1.0 / ball_volume(d, 1.0f64)).powf(1.0 / d as f64)
}

/// Random sequential adsorption of unit-volume balls: points arrive in
/// increasing mark order (ties broken by coordinates) and a ball is packed iff
/// it overlaps no previously packed ball. Returns 1 for packed points.
pub fn rsa_pack<T: Scalar>(cfg: &PointConfiguration<T>) -> Result<Vec<T>> {
    let marks = cfg.marks().ok_or(Error::MarksRequired)?;
    let n = cfg.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let pts = cfg.points();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        marks[a]
            .partial_cmp(&marks[b])
            .unwrap_or(Ordering::Equal)
            .then_with(|| pts[a].lex_cmp(&pts[b]))
            .then(a.cmp(&b))
    });
    let reach = T::lit(2.0 * rsa_radius(cfg.dim()));
    let index = GridIndex::new(pts.to_vec(), reach)?;
    let mut packed = vec![false; n];
    let reach2 = reach * reach;
    for &i in &order {
        let mut blocked = false;
        index.for_each_within(&pts[i], reach, |j| {
            if packed[j] && pts[j].dist2(&pts[i]) < reach2 {
                blocked = true;
            }
        });
        packed[i] = !blocked;
    }
    Ok(packed
        .into_iter()
        .map(|p| if p { T::one() } else { T::zero() })
        .collect())
}

/// RSA packing status as a functional; requires arrival marks.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Rsa;

impl<T: Scalar> Functional<T> for Rsa {
    fn name(&self) -> &'static str {
        "rsa"
    }

    fn requires_marks(&self) -> bool {
        true
    }

    fn values(&self, cfg: &PointConfiguration<T>) -> Result<Vec<T>> {
        rsa_pack(cfg)
    }

    fn value_with_mark(
        &self,
        x: &Point<T>,
        mark: Option<T>,
        cfg: &PointConfiguration<T>,
    ) -> Result<T> {
        if cfg.is_empty() {
            return Ok(T::one());
        }
        if cfg.marks().is_none() || (cfg.position_of(x).is_none() && mark.is_none()) {
            return Err(Error::MarksRequired);
        }
        let (c, i) = cfg.with_point(x, mark)?;
        Ok(rsa_pack(&c)?[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::testing::{check_translation, uniform_config};

    fn naive(cfg: &PointConfiguration<f64>) -> Vec<f64> {
        let m = cfg.marks().unwrap();
        let p = cfg.points();
        let mut order: Vec<usize> = (0..p.len()).collect();
        order.sort_by(|&a, &b| m[a].partial_cmp(&m[b]).unwrap().then(p[a].lex_cmp(&p[b])));
        let reach = 2.0 * rsa_radius(cfg.dim());
        let mut packed: Vec<usize> = Vec::new();
        let mut out = vec![0.0; p.len()];
        for i in order {
            if packed.iter().all(|&j| p[j].dist(&p[i]) >= reach) {
                packed.push(i);
                out[i] = 1.0;
            }
        }
        out
    }

    #[test]
    fn unit_volume_radius() {
        assert!((rsa_radius(1) - 0.5).abs() < 1e-15);
        for d in 1..=3 {
            assert!((ball_volume(d, rsa_radius(d)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn line_example() {
        let cfg =
            PointConfiguration::from_points(1, vec![Point::x(0.0), Point::x(0.8), Point::x(1.6)])
                .unwrap()
                .with_marks(vec![0.1, 0.2, 0.3])
                .unwrap();
        assert_eq!(rsa_pack(&cfg).unwrap(), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn single_point_packs_and_marks_are_required() {
        let cfg = PointConfiguration::from_points(2, vec![Point::xy(0.3, 0.1)]).unwrap();
        assert_eq!(rsa_pack(&cfg), Err(Error::MarksRequired));
        let cfg = cfg.with_marks(vec![0.7]).unwrap();
        assert_eq!(rsa_pack(&cfg).unwrap(), vec![1.0]);
        let empty = PointConfiguration::<f64>::empty(2);
        assert_eq!(
            Rsa.value_with_mark(&Point::xy(0.0, 0.0), Some(0.5), &empty)
                .unwrap(),
            1.0
        );
    }

    #[test]
    fn ties_in_marks_use_coordinates() {
        let cfg = PointConfiguration::from_points(1, vec![Point::x(0.5), Point::x(0.0)])
            .unwrap()
            .with_marks(vec![0.3, 0.3])
            .unwrap();
        assert_eq!(rsa_pack(&cfg).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn matches_naive_sequential_oracle() {
        for d in 1..=3 {
            let cfg = uniform_config(10 + d as u64, d, 1000, 12.0, true);
            let fast = rsa_pack(&cfg).unwrap();
            assert_eq!(fast, naive(&cfg), "d={d}");
            assert!(fast.iter().sum::<f64>() > 10.0);
        }
    }

    #[test]
    fn translation_invariant() {
        check_translation(&Rsa, &uniform_config(3, 2, 300, 8.0, true), 4, 0.0);
    }

    #[test]
    fn inserted_point_arrives_with_its_mark() {
        let cfg = PointConfiguration::from_points(1, vec![Point::x(0.5)])
            .unwrap()
            .with_marks(vec![0.5])
            .unwrap();
        let x = Point::x(0.0);
        assert_eq!(Rsa.value_with_mark(&x, Some(0.1), &cfg).unwrap(), 1.0);
        assert_eq!(Rsa.value_with_mark(&x, Some(0.9), &cfg).unwrap(), 0.0);
        assert_eq!(
            Rsa.value_with_mark(&x, None, &cfg),
            Err(Error::MarksRequired)
        );
    }
}
