use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{affine_eval, table_eval, AnyFunctional, Density};
use crate::geometry::{Point, PointConfiguration, Window};
use crate::stats::pairwise_sum;

/// Weighted point masses rescaled into the unit cube `Q_1 = [-1/2, 1/2]^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    pub dim: usize,
    pub lambda: f64,
    pub locations: Vec<Point<f64>>,
    pub weights: Vec<f64>,
}

impl EmpiricalMeasure {
    /// Atoms `(x / λ^{1/d}, w_x)`; every point must lie in `Q_λ`.
    pub fn from_weights(
        cfg: &PointConfiguration<f64>,
        weights: Vec<f64>,
        lambda: f64,
    ) -> Result<Self> {
        let d = cfg.dim();
        let window = Window::from_volume(lambda, d)?;
        if weights.len() != cfg.len() {
            return Err(Error::InvalidInput("one weight per point required".into()));
        }
        if let Some(p) = cfg.iter().find(|p| !window.contains(p)) {
            return Err(Error::InvalidInput(format!(
                "point {p:?} lies outside the window of volume {lambda}"
            )));
        }
        let s = lambda.powf(-1.0 / d as f64);
        Ok(Self {
            dim: d,
            lambda,
            locations: cfg.iter().map(|p| p.scale(s)).collect(),
            weights,
        })
    }

    pub fn total_mass(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// `μ = Σ_{x ∈ X} ξ(x, X) δ_{x/λ^{1/d}}` for `X ⊆ Q_λ`.
pub fn build_measure(
    cfg: &PointConfiguration<f64>,
    f: &AnyFunctional<f64>,
    lambda: f64,
) -> Result<EmpiricalMeasure> {
    let weights = if cfg.is_empty() {
        Vec::new()
    } else {
        f.atom_weights(cfg)?
    };
    EmpiricalMeasure::from_weights(cfg, weights, lambda)
}

/// `⟨f, μ⟩`.
pub fn integrate(mu: &EmpiricalMeasure, f: &TestFunction) -> f64 {
    let terms: Vec<f64> = mu
        .locations
        .iter()
        .zip(&mu.weights)
        .map(|(p, w)| f.eval(p.coords()) * w)
        .collect();
    pairwise_sum(&terms)
}

/// Bounded test functions on `Q_1` whose integrals are known exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TestFunction {
    Constant {
        value: f64,
    },
    /// Indicator of `{u_axis < 0}` (`lower`) or `{u_axis ≥ 0}`.
    HalfIndicator {
        axis: usize,
        lower: bool,
    },
    /// `intercept + slope·u`.
    Affine {
        intercept: f64,
        slope: Vec<f64>,
    },
    /// Multilinear interpolation of nodal values on a regular grid spanning
    /// the cube (`shape[i] ≥ 2` nodes along axis `i`, first axis fastest).
    Table {
        shape: Vec<usize>,
        values: Vec<f64>,
    },
}

impl TestFunction {
    pub fn one() -> Self {
        TestFunction::Constant { value: 1.0 }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            TestFunction::Constant { value } if !value.is_finite() => Err(Error::InvalidInput(
                "constant test function must be finite".into(),
            )),
            TestFunction::HalfIndicator { axis, .. } if *axis >= d => Err(Error::InvalidInput(
                format!("half-indicator axis {axis} out of range for d = {d}"),
            )),
            TestFunction::Affine { intercept, slope } => Density::Affine {
                intercept: *intercept,
                slope: slope.clone(),
            }
            .validate(d),
            TestFunction::Table { shape, values } => Density::Table {
                shape: shape.clone(),
                values: values.clone(),
            }
            .validate(d),
            _ => Ok(()),
        }
    }

    /// Short identifier used in output tables.
    pub fn id(&self) -> String {
        match self {
            TestFunction::Constant { value } => format!("const_{value}"),
            TestFunction::HalfIndicator { axis, lower } => {
                format!("half_{}_{axis}", if *lower { "lower" } else { "upper" })
            }
            TestFunction::Affine { intercept, slope } => {
                let s: Vec<String> = slope.iter().map(|v| v.to_string()).collect();
                format!("affine_{intercept}_{}", s.join("_"))
            }
            TestFunction::Table { shape, .. } => {
                let s: Vec<String> = shape.iter().map(|v| v.to_string()).collect();
                format!("table_{}", s.join("x"))
            }
        }
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        match self {
            TestFunction::Constant { value } => *value,
            TestFunction::HalfIndicator { axis, lower } => {
                if (u[*axis] < 0.0) == *lower {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction::Affine { intercept, slope } => affine_eval(*intercept, slope, u),
            TestFunction::Table { shape, values } => table_eval(shape, values, u),
        }
    }

    /// Interior points of `(-1/2, 1/2)` along `axis` where the function is
    /// not polynomial.
    fn breaks(&self, axis: usize) -> Vec<f64> {
        match self {
            TestFunction::HalfIndicator { axis: a, .. } if *a == axis => vec![0.0],
            TestFunction::Table { shape, .. } => {
                let n = shape[axis];
                (1..n - 1)
                    .map(|k| k as f64 / (n - 1) as f64 - 0.5)
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    /// The test function equal to a target density.
    pub fn from_density(h: &Density) -> Self {
        match h {
            Density::Uniform => TestFunction::one(),
            Density::Affine { intercept, slope } => TestFunction::Affine {
                intercept: *intercept,
                slope: slope.clone(),
            },
            Density::Table { shape, values } => TestFunction::Table {
                shape: shape.clone(),
                values: values.clone(),
            },
        }
    }
}

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// `∫_{Q_1} Π f_i` for up to four test functions. Between breakpoints each
/// factor has degree at most one per axis, so the product has degree at most
/// four and tensor Gauss rules with three nodes per axis are exact.
pub fn integral_of_product(fs: &[&TestFunction], d: usize) -> f64 {
    assert!(
        fs.len() <= 4,
        "exactness holds for products of at most four factors"
    );
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            let mut b = vec![-0.5, 0.5];
            for f in fs {
                b.extend(f.breaks(a));
            }
            b.sort_by(|x, y| x.partial_cmp(y).unwrap());
            b.dedup();
            b
        })
        .collect();
    // per axis: nodes and weights over every sub-interval
    let rules: Vec<Vec<(f64, f64)>> = axes
        .iter()
        .map(|b| {
            b.windows(2)
                .flat_map(|w| {
                    let (m, h) = ((w[0] + w[1]) / 2.0, (w[1] - w[0]) / 2.0);
                    GAUSS3.iter().map(move |(x, wt)| (m + h * x, h * wt))
                })
                .collect()
        })
        .collect();
    let total: usize = rules.iter().map(|r| r.len()).product();
    let mut terms = Vec::with_capacity(total);
    let mut u = [0.0; 3];
    for k in 0..total {
        let mut z = k;
        let mut w = 1.0;
        for a in 0..d {
            let (x, wt) = rules[a][z % rules[a].len()];
            z /= rules[a].len();
            u[a] = x;
            w *= wt;
        }
        terms.push(w * fs.iter().map(|f| f.eval(&u[..d])).product::<f64>());
    }
    pairwise_sum(&terms)
}

/// `∫_{Q_1} f`.
pub fn integral(f: &TestFunction, d: usize) -> f64 {
    integral_of_product(&[f], d)
}

/// `∫_{Q_1} f²`.
pub fn integral_sq(f: &TestFunction, d: usize) -> f64 {
    integral_of_product(&[f, f], d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{Count, KnnLength};
    use crate::geometry::Point;
    use proptest::prelude::*;

    fn cfg2(pts: &[(f64, f64)]) -> PointConfiguration<f64> {
        PointConfiguration::from_points(2, pts.iter().map(|&(a, b)| Point::xy(a, b)).collect())
            .unwrap()
    }

    #[test]
    fn counting_measure() {
        let cfg = cfg2(&[(-4.0, 1.0), (3.0, -2.0), (0.5, 0.5)]);
        let mu = build_measure(&cfg, &AnyFunctional::Count(Count), 100.0).unwrap();
        assert_eq!(mu.total_mass(), 3.0);
        assert_eq!(integrate(&mu, &TestFunction::one()), 3.0);
        // left half keeps the atom at x = -4
        let left = TestFunction::HalfIndicator {
            axis: 0,
            lower: true,
        };
        assert_eq!(integrate(&mu, &left), 1.0);
        assert!((mu.locations[0].coord(0) + 0.4).abs() < 1e-15);
    }

    #[test]
    fn empty_and_unit_volume() {
        let e = build_measure(
            &PointConfiguration::empty(2),
            &AnyFunctional::Count(Count),
            10.0,
        )
        .unwrap();
        assert!(e.is_empty());
        assert_eq!(integrate(&e, &TestFunction::one()), 0.0);
        let cfg = cfg2(&[(0.1, -0.2)]);
        let mu = build_measure(&cfg, &AnyFunctional::Count(Count), 1.0).unwrap();
        assert_eq!(mu.locations[0], Point::xy(0.1, -0.2));
    }

    #[test]
    fn rejects_points_outside_the_window() {
        let cfg = cfg2(&[(6.0, 0.0)]);
        assert!(build_measure(&cfg, &AnyFunctional::Count(Count), 100.0).is_err());
    }

    #[test]
    fn knn_weights() {
        let cfg =
            PointConfiguration::from_points(1, vec![Point::x(0.0), Point::x(1.0), Point::x(3.0)])
                .unwrap();
        let mu = build_measure(
            &cfg,
            &AnyFunctional::KnnLength(KnnLength::new(1).unwrap()),
            10.0,
        )
        .unwrap();
        // half of every incident edge
        assert_eq!(mu.weights, vec![0.5, 1.5, 1.0]);
    }

    #[test]
    fn exact_integrals() {
        let one = TestFunction::one();
        let half = TestFunction::HalfIndicator {
            axis: 1,
            lower: false,
        };
        let aff = TestFunction::Affine {
            intercept: 1.0,
            slope: vec![2.0, 0.0],
        };
        for d in 1..=3 {
            assert!((integral(&one, d) - 1.0).abs() < 1e-14);
            assert!((integral(&aff_d(d), d) - 1.0).abs() < 1e-14);
        }
        assert!((integral(&half, 2) - 0.5).abs() < 1e-14);
        assert!((integral_sq(&half, 2) - 0.5).abs() < 1e-14);
        // ∫(1 + 2u)² du over [-1/2, 1/2] = 1 + 4/12
        assert!((integral_sq(&aff, 2) - (1.0 + 1.0 / 3.0)).abs() < 1e-14);
        // ∫ 1{u0<0}·(1 + 2 u0) = 1/2 − 1/4
        let left = TestFunction::HalfIndicator {
            axis: 0,
            lower: true,
        };
        assert!((integral_of_product(&[&left, &aff], 2) - 0.25).abs() < 1e-14);
        let lower = TestFunction::HalfIndicator {
            axis: 0,
            lower: true,
        };
        let upper = TestFunction::HalfIndicator {
            axis: 0,
            lower: false,
        };
        assert_eq!(integral_of_product(&[&lower, &upper], 2), 0.0);
    }

    fn aff_d(d: usize) -> TestFunction {
        TestFunction::Affine {
            intercept: 1.0,
            slope: vec![0.7; d],
        }
    }

    #[test]
    fn table_integral_matches_fine_midpoint_rule() {
        let t = TestFunction::Table {
            shape: vec![3, 4],
            values: vec![0.0, 1.0, 3.0, 2.0, -1.0, 0.5, 4.0, 2.0, 1.0, 0.0, 1.0, 5.0],
        };
        t.validate(2).unwrap();
        let m = 1200;
        let mut s = 0.0;
        let mut s2 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let v = t.eval(&[
                    (i as f64 + 0.5) / m as f64 - 0.5,
                    (j as f64 + 0.5) / m as f64 - 0.5,
                ]);
                s += v;
                s2 += v * v;
            }
        }
        let n = (m * m) as f64;
        assert!((integral(&t, 2) - s / n).abs() < 1e-6);
        assert!((integral_sq(&t, 2) - s2 / n).abs() < 1e-5);
    }

    #[test]
    fn validation() {
        assert!(TestFunction::HalfIndicator {
            axis: 2,
            lower: true
        }
        .validate(2)
        .is_err());
        assert!(TestFunction::Affine {
            intercept: 0.0,
            slope: vec![1.0]
        }
        .validate(2)
        .is_err());
        assert_eq!(
            TestFunction::HalfIndicator {
                axis: 0,
                lower: true
            }
            .id(),
            "half_lower_0"
        );
    }

    proptest! {
        #[test]
        fn integrate_is_linear(seed in 0u64..500, a in -3.0f64..3.0, b in -3.0f64..3.0) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Point<f64>> = (0..50).map(|_| Point::xy(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0))).collect();
            let cfg = PointConfiguration::from_points(2, pts).unwrap();
            let mu = build_measure(&cfg, &AnyFunctional::KnnLength(KnnLength::new(1).unwrap()), 100.0).unwrap();
            let f = TestFunction::Affine { intercept: 0.3, slope: vec![1.0, -2.0] };
            let g = TestFunction::HalfIndicator { axis: 1, lower: true };
            let combo: f64 = mu.locations.iter().zip(&mu.weights)
                .map(|(p, w)| (a * f.eval(p.coords()) + b * g.eval(p.coords())) * w).sum();
            let lin = a * integrate(&mu, &f) + b * integrate(&mu, &g);
            prop_assert!((combo - lin).abs() <= 1e-12 * (1.0 + combo.abs()));
        }
    }
}
