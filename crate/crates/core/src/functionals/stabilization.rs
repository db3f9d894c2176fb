use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::Functional;
use crate::geometry::{Point, PointConfiguration};
use crate::scalar::Scalar;

/// Adversarial insertions used to certify stabilization. For a candidate
/// radius `R` every set is placed strictly outside `B_R(x)`:
///
/// * single points at `R⁺` in each of `directions` directions (26 in 3D,
///   2 in 1D) and at `far_factor` times the largest grid radius;
/// * dense shells (point spacing at most `shell_spacing`) at `R⁺` and at
///   every larger grid radius.
///
/// Inserted points carry mark zero, so they arrive first.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Battery<T> {
    pub shell_spacing: T,
    pub directions: usize,
    pub shells: bool,
    pub singles: bool,
    pub far_factor: T,
}

impl<T: Scalar> Battery<T> {
    pub fn new(shell_spacing: T) -> Self {
        Self {
            shell_spacing,
            directions: 8,
            shells: true,
            singles: true,
            far_factor: T::lit(4.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilizationProbe<T> {
    #[serde(skip)]
    pub x: Point<T>,
    pub radii: Vec<T>,
    /// Smallest grid radius passing every battery check.
    pub stabilized_at: Option<T>,
}

/// `step, 2·step, …` up to and including `max`.
pub fn linear_grid<T: Scalar>(step: T, max: T) -> Vec<T> {
    let n = (max / step + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
    (1..=n).map(|k| step * T::from_usize_lossy(k)).collect()
}

/// Unit directions at refinement `level`; each level contains the previous one.
fn directions<T: Scalar>(d: usize, level: usize, base: usize) -> Vec<Point<T>> {
    match d {
        1 => vec![Point::x(-T::one()), Point::x(T::one())],
        2 => {
            let m = base << level;
            (0..m)
                .map(|k| {
                    let a = T::lit(std::f64::consts::TAU * k as f64 / m as f64);
                    Point::xy(a.cos(), a.sin())
                })
                .collect()
        }
        _ => {
            // cube-sphere: grid on each face of [-1,1]^3, projected radially
            let n = 1usize << level;
            let mut out: Vec<[i64; 3]> = Vec::new();
            for axis in 0..3 {
                for s in [-1i64, 1] {
                    for i in 0..=n {
                        for j in 0..=n {
                            let mut p = [0i64; 3];
                            p[axis] = s * n as i64;
                            p[(axis + 1) % 3] = 2 * i as i64 - n as i64;
                            p[(axis + 2) % 3] = 2 * j as i64 - n as i64;
                            out.push(p);
                        }
                    }
                }
            }
            out.sort_unstable();
            out.dedup();
            out.into_iter()
                .map(|p| {
                    let v = [p[0] as f64, p[1] as f64, p[2] as f64];
                    let l = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                    Point::xyz(T::lit(v[0] / l), T::lit(v[1] / l), T::lit(v[2] / l))
                })
                .collect()
        }
    }
}

/// Shell of radius `rho` with spacing at most `spacing`; nested under
/// halving `spacing` or doubling `base`.
fn shell<T: Scalar>(d: usize, rho: T, spacing: T, base: usize) -> Vec<Point<T>> {
    let rho_f = rho.as_f64();
    let sp = spacing.as_f64().max(1e-12);
    let level = match d {
        1 => 0,
        2 => {
            let need = std::f64::consts::TAU * rho_f / sp / base as f64;
            need.max(1.0).log2().ceil().max(0.0) as usize
        }
        _ => {
            let need = std::f64::consts::FRAC_PI_2 * rho_f / sp;
            need.max(1.0).log2().ceil().max(0.0) as usize
        }
    };
    directions(d, level.min(20), base)
}

/// Finds the smallest radius in `radii` (increasing) at which
/// `ξ(x, X ∩ B_R(x))` is unchanged by every battery insertion outside `B_R(x)`.
pub fn stabilization_probe<T: Scalar, F: Functional<T> + ?Sized>(
    f: &F,
    x: &Point<T>,
    cfg: &PointConfiguration<T>,
    radii: &[T],
    battery: &Battery<T>,
) -> Result<StabilizationProbe<T>> {
    if radii.windows(2).any(|w| !(w[0] < w[1])) || radii.first().is_some_and(|r| !(*r >= T::zero()))
    {
        return Err(Error::InvalidInput(
            "radii must be non-negative and strictly increasing".into(),
        ));
    }
    let d = cfg.dim();
    let mark = cfg.position_of(x).and_then(|i| cfg.mark(i));
    let (full, _) = cfg.with_point(x, mark)?;
    let rmax = radii.last().copied().unwrap_or(T::zero());
    let far = battery.far_factor * rmax.max(T::one());
    let insert_mark = cfg.marks().map(|_| T::zero());
    let tol = T::lit(1e-9);
    let single_dirs = match d {
        1 => directions(1, 0, 2),
        2 => directions(2, 0, battery.directions.max(1)),
        _ => directions(3, 1, 0),
    };

    let same = |a: T, b: T| (a - b).abs() <= tol * a.abs().max(T::one());
    let mut found = None;
    'radius: for (ri, &r) in radii.iter().enumerate() {
        let r2 = r * r;
        let local = full.filter(|p| p.dist2(x) <= r2);
        let base = f.value_with_mark(x, mark, &local)?;
        let eval = |extra: &[Point<T>]| -> Result<T> {
            let mut y = local.clone();
            for p in extra {
                y.push(*p, insert_mark)?;
            }
            f.value_with_mark(x, mark, &y)
        };
        let just_out = r + tol * r.max(T::one());
        if battery.singles {
            for u in &single_dirs {
                for rho in [just_out, far.max(just_out)] {
                    if !same(base, eval(&[x.add(&u.scale(rho))])?) {
                        continue 'radius;
                    }
                }
            }
        }
        if battery.shells {
            let mut rhos = vec![just_out];
            rhos.extend(radii[ri + 1..].iter().copied());
            for rho in rhos {
                let pts: Vec<Point<T>> =
                    shell(d, rho, battery.shell_spacing, battery.directions.max(1))
                        .into_iter()
                        .map(|u| x.add(&u.scale(rho)))
                        .collect();
                if !same(base, eval(&pts)?) {
                    continue 'radius;
                }
            }
        }
        found = Some(r);
        break;
    }
    Ok(StabilizationProbe {
        x: *x,
        radii: radii.to_vec(),
        stabilized_at: found,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::testing::uniform_config;
    use crate::functionals::{rsa_radius, ComponentReciprocal, Count, KnnLength, Rsa};
    use proptest::prelude::*;

    fn line(xs: &[f64]) -> PointConfiguration<f64> {
        PointConfiguration::from_points(1, xs.iter().map(|&x| Point::x(x)).collect()).unwrap()
    }

    #[test]
    fn grid_and_shells() {
        let g = linear_grid(0.1f64, 0.5);
        assert_eq!(g.len(), 5);
        assert!((g[4] - 0.5).abs() < 1e-15);
        let s: Vec<Point<f64>> = shell(2, 1.0, 0.1, 8);
        assert!(s.len() >= 63);
        let s3: Vec<Point<f64>> = shell(3, 1.0, 0.5, 8);
        assert!(s3.len() >= 26);
        for p in &s3 {
            assert!((p.norm() - 1.0).abs() < 1e-12);
        }
        // nested refinement
        let coarse: Vec<Point<f64>> = directions(3, 1, 0);
        let fine: Vec<Point<f64>> = directions(3, 2, 0);
        for p in &coarse {
            assert!(fine.iter().any(|q| q.dist(p) < 1e-12));
        }
    }

    #[test]
    fn count_stabilizes_immediately() {
        let cfg = uniform_config(1, 2, 30, 3.0, false);
        let p = stabilization_probe(
            &Count,
            cfg.point(0),
            &cfg,
            &linear_grid(0.5, 3.0),
            &Battery::new(0.5),
        )
        .unwrap();
        assert_eq!(p.stabilized_at, Some(0.5));
    }

    #[test]
    fn nearest_neighbour_length_on_the_line() {
        // x = 0 keeps the edge to -0.4 only once no insertion can come
        // closer to -0.4 than 0 is, i.e. from R = 0.8 on
        let cfg = line(&[-0.4, 0.0, 0.3, 5.0]);
        let f = KnnLength::new(1).unwrap();
        let p = stabilization_probe(
            &f,
            &Point::x(0.0),
            &cfg,
            &linear_grid(0.1, 6.0),
            &Battery::new(0.05),
        )
        .unwrap();
        let r = p.stabilized_at.unwrap();
        assert!((r - 0.8).abs() < 1e-9, "{r}");
    }

    #[test]
    fn one_sided_neighbourhood_never_stabilizes() {
        // {0, 0.3, 5}: a point just left of B_R always becomes 0's partner
        let cfg = line(&[0.0, 0.3, 5.0]);
        let f = KnnLength::new(1).unwrap();
        let p = stabilization_probe(
            &f,
            &Point::x(0.0),
            &cfg,
            &linear_grid(0.1, 6.0),
            &Battery::new(0.05),
        )
        .unwrap();
        assert_eq!(p.stabilized_at, None);
    }

    #[test]
    fn isolated_earliest_rsa_point() {
        let cfg =
            PointConfiguration::from_points(2, vec![Point::xy(0.0, 0.0), Point::xy(5.0, 5.0)])
                .unwrap()
                .with_marks(vec![0.01, 0.5])
                .unwrap();
        let grid = linear_grid(0.1, 3.0);
        let p = stabilization_probe(&Rsa, &Point::xy(0.0, 0.0), &cfg, &grid, &Battery::new(0.1))
            .unwrap();
        let two_r = 2.0 * rsa_radius(2);
        let expect = grid.iter().copied().find(|&g| g >= two_r).unwrap();
        assert_eq!(p.stabilized_at, Some(expect));
    }

    #[test]
    fn percolation_cluster_radius() {
        let cfg = uniform_config(5, 2, 40, 6.0, false);
        let f = ComponentReciprocal::percolation(1.0).unwrap();
        let x = *cfg.point(0);
        // cluster of x by breadth-first search
        let mut member = vec![false; cfg.len()];
        member[0] = true;
        let mut stack = vec![0];
        while let Some(i) = stack.pop() {
            for j in 0..cfg.len() {
                if !member[j] && cfg.point(i).dist(cfg.point(j)) <= 1.0 {
                    member[j] = true;
                    stack.push(j);
                }
            }
        }
        let radius = (0..cfg.len())
            .filter(|&j| member[j])
            .map(|j| cfg.point(j).dist(&x))
            .fold(0.0, f64::max);
        let grid = linear_grid(0.05, 15.0);
        let p = stabilization_probe(&f, &x, &cfg, &grid, &Battery::new(0.1)).unwrap();
        let s = p.stabilized_at.unwrap();
        assert!(
            s >= radius && s <= radius + 1.0 + 0.05 + 1e-9,
            "s={s} cluster radius={radius}"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn larger_battery_never_stabilizes_earlier(seed in 0u64..1000, d in 1usize..=2) {
            let cfg = uniform_config(seed, d, 25, 3.0, false);
            let f = KnnLength::new(1).unwrap();
            let grid = linear_grid(0.25, 4.0);
            let small = Battery { shell_spacing: 1.0, directions: 4, shells: false, singles: true, far_factor: 4.0 };
            let mid = Battery { shells: true, ..small };
            let big = Battery { shell_spacing: 0.5, directions: 8, ..mid };
            let key = |b: &Battery<f64>| {
                stabilization_probe(&f, cfg.point(0), &cfg, &grid, b).unwrap().stabilized_at.unwrap_or(f64::INFINITY)
            };
            let (a, b, c) = (key(&small), key(&mid), key(&big));
            prop_assert!(a <= b && b <= c, "{a} {b} {c}");
        }
    }
}
