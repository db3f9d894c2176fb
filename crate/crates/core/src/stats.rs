//! Statistics shared by the diagnostics, estimators and experiments.
//!
//! Sums use pairwise summation so results do not depend on accumulation
//! order beyond the order of the input slice.

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / (xs.len() - 1) as f64
}

/// Standard error of the mean.
pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Unbiased sample covariance.
pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 2 {
        return f64::NAN;
    }
    let (mx, my) = (mean(xs), mean(ys));
    let p: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .collect();
    pairwise_sum(&p) / (xs.len() - 1) as f64
}

/// Mean, variance, skewness and excess kurtosis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

pub fn moments(xs: &[f64]) -> Moments {
    let n = xs.len();
    let m = mean(xs);
    let var = variance(xs);
    let c: Vec<f64> = xs.iter().map(|x| x - m).collect();
    let m2 = pairwise_sum(&c.iter().map(|d| d * d).collect::<Vec<_>>()) / n as f64;
    let m3 = pairwise_sum(&c.iter().map(|d| d * d * d).collect::<Vec<_>>()) / n as f64;
    let m4 = pairwise_sum(&c.iter().map(|d| d * d * d * d).collect::<Vec<_>>()) / n as f64;
    let (skewness, excess_kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };
    Moments {
        n,
        mean: m,
        variance: var,
        skewness,
        excess_kurtosis,
    }
}

/// Empirical p-th absolute moment.
pub fn abs_moment(xs: &[f64], p: f64) -> f64 {
    mean(&xs.iter().map(|x| x.abs().powf(p)).collect::<Vec<_>>())
}

/// Straight-line fit `y = intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
    pub r_squared: f64,
    pub n: usize,
}

/// Weighted least squares with weights proportional to inverse variances.
/// Standard errors use the residual scale, as for ordinary least squares.
pub fn weighted_fit(x: &[f64], y: &[f64], w: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n || w.len() != n {
        return Err(Error::InsufficientData(format!(
            "linear fit needs two or more points, got {n}"
        )));
    }
    let sw = pairwise_sum(w);
    let mx = pairwise_sum(&x.iter().zip(w).map(|(a, b)| a * b).collect::<Vec<_>>()) / sw;
    let my = pairwise_sum(&y.iter().zip(w).map(|(a, b)| a * b).collect::<Vec<_>>()) / sw;
    let sxx = pairwise_sum(
        &(0..n)
            .map(|i| w[i] * (x[i] - mx).powi(2))
            .collect::<Vec<_>>(),
    );
    let sxy = pairwise_sum(
        &(0..n)
            .map(|i| w[i] * (x[i] - mx) * (y[i] - my))
            .collect::<Vec<_>>(),
    );
    let syy = pairwise_sum(
        &(0..n)
            .map(|i| w[i] * (y[i] - my).powi(2))
            .collect::<Vec<_>>(),
    );
    if sxx <= 0.0 {
        return Err(Error::InsufficientData(
            "linear fit needs distinct x values".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = pairwise_sum(
        &(0..n)
            .map(|i| w[i] * (y[i] - intercept - slope * x[i]).powi(2))
            .collect::<Vec<_>>(),
    );
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let (slope_se, intercept_se) = if n > 2 {
        // normalise weights to mean one so the residual scale is comparable to OLS
        let s2 = sse / (n - 2) as f64 * n as f64 / sw;
        let sxx_n = sxx * n as f64 / sw;
        let se_b = (s2 / sxx_n).sqrt();
        (se_b, (s2 * (1.0 / n as f64 + mx * mx / sxx_n)).sqrt())
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_se,
        intercept_se,
        r_squared,
        n,
    })
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    weighted_fit(x, y, &vec![1.0; x.len()])
}

/// Log-linear fit of an empirical survival function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailFit {
    /// Slope of `log P[D ≥ s]` against `s`; negative for exponential tails.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Number of survival points entering the fit.
    pub points: usize,
    pub samples: usize,
}

impl TailFit {
    /// Fitted survival at `s`.
    pub fn survival(&self, s: f64) -> f64 {
        (self.intercept + self.slope * s).exp().min(1.0)
    }

    /// Radius at which the fitted survival drops to `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        if self.slope >= 0.0 {
            return f64::INFINITY;
        }
        ((p.ln() - self.intercept) / self.slope).max(0.0)
    }
}

/// Weighted fit of `log S(s)` over the upper half of the support
/// `[max/2, max]`, on a grid of `bins` radii, with weights `n·S/(1 − S)`
/// (inverse delta-method variances of the log survival).
pub fn survival_tail_fit(values: &[f64], bins: usize) -> Result<TailFit> {
    let n = values.len();
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let max = v.last().copied().unwrap_or(0.0);
    if n < 10 || max <= 0.0 {
        return Err(Error::InsufficientData(format!(
            "tail fit needs positive data, got {n} values with max {max}"
        )));
    }
    let (mut xs, mut ys, mut ws) = (Vec::new(), Vec::new(), Vec::new());
    for b in 0..bins {
        let s = 0.5 * max + 0.5 * max * b as f64 / bins as f64;
        let ge = v.len() - v.partition_point(|&x| x < s);
        if ge < 3 {
            continue;
        }
        let sv = ge as f64 / n as f64;
        xs.push(s);
        ys.push(sv.ln());
        ws.push(n as f64 * sv / (1.0 - sv).max(1.0 / n as f64));
    }
    let fit = weighted_fit(&xs, &ys, &ws)?;
    Ok(TailFit {
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        points: xs.len(),
        samples: n,
    })
}

/// Pearson chi-square goodness of fit against a Poisson law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Cells with expected count below 5 are pooled (the upper tail into one cell).
pub fn chi_square_poisson(counts: &[u64], mean: f64) -> Result<ChiSquare> {
    let n = counts.len() as f64;
    let max = counts.iter().copied().max().unwrap_or(0) as usize;
    let pmf = |k: usize| {
        statrs::distribution::Discrete::pmf(
            &statrs::distribution::Poisson::new(mean).unwrap(),
            k as u64,
        )
    };
    let mut observed = vec![0f64; max + 2];
    for &c in counts {
        observed[c as usize] += 1.0;
    }
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    let mut cum = 0.0;
    for k in 0..=max {
        let p = pmf(k);
        cum += p;
        o += observed[k];
        e += n * p;
        if e >= 5.0 && n * (1.0 - cum) >= 5.0 {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    e += n * (1.0 - cum).max(0.0);
    if let Some(last) = cells.last_mut() {
        if e < 5.0 {
            last.0 += o;
            last.1 += e;
        } else {
            cells.push((o, e));
        }
    } else {
        cells.push((o, e));
    }
    if cells.len() < 2 {
        return Err(Error::InsufficientData(
            "chi-square needs at least two cells".into(),
        ));
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len() - 1;
    let p_value = 1.0 - ChiSquared::new(dof as f64).unwrap().cdf(statistic);
    Ok(ChiSquare {
        statistic,
        dof,
        p_value,
    })
}

/// Anderson–Darling normality test with mean and variance estimated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AndersonDarling {
    pub a2: f64,
    /// Stephens' small-sample modification `A²(1 + 0.75/n + 2.25/n²)`.
    pub a2_star: f64,
    pub n: usize,
}

impl AndersonDarling {
    /// Critical value of `A*²` at level 0.01 (Stephens, unknown mean and variance).
    pub const CRITICAL_1PCT: f64 = 1.035;

    pub fn passes_at_1pct(&self) -> bool {
        self.a2_star < Self::CRITICAL_1PCT
    }
}

fn standardized_sorted(xs: &[f64]) -> Vec<f64> {
    let m = mean(xs);
    let s = variance(xs).sqrt();
    let mut z: Vec<f64> = xs.iter().map(|x| (x - m) / s).collect();
    z.sort_by(|a, b| a.partial_cmp(b).unwrap());
    z
}

pub fn anderson_darling(xs: &[f64]) -> Result<AndersonDarling> {
    let n = xs.len();
    if n < 8 {
        return Err(Error::InsufficientData(format!(
            "Anderson–Darling needs at least 8 samples, got {n}"
        )));
    }
    let z = standardized_sorted(xs);
    if !z.iter().all(|v| v.is_finite()) {
        return Err(Error::InsufficientData(
            "degenerate sample (zero variance)".into(),
        ));
    }
    let norm = Normal::new(0.0, 1.0).unwrap();
    let nf = n as f64;
    let terms: Vec<f64> = (0..n)
        .map(|i| {
            let fi = norm.cdf(z[i]).clamp(1e-300, 1.0 - 1e-16);
            let fj = norm.cdf(z[n - 1 - i]).clamp(1e-300, 1.0 - 1e-16);
            (2.0 * i as f64 + 1.0) * (fi.ln() + (1.0 - fj).ln())
        })
        .collect();
    let a2 = -nf - pairwise_sum(&terms) / nf;
    let a2_star = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    Ok(AndersonDarling { a2, a2_star, n })
}

/// Kolmogorov distance between the standardized sample and N(0, 1).
pub fn ks_distance_normal(xs: &[f64]) -> f64 {
    let z = standardized_sorted(xs);
    let norm = Normal::new(0.0, 1.0).unwrap();
    let n = z.len() as f64;
    z.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = norm.cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Bootstrap standard error of a statistic.
pub fn bootstrap_se<R: Rng>(
    xs: &[f64],
    reps: usize,
    rng: &mut R,
    stat: impl Fn(&[f64]) -> f64,
) -> f64 {
    let n = xs.len();
    let mut buf = vec![0.0; n];
    let vals: Vec<f64> = (0..reps)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = xs[rng.random_range(0..n)];
            }
            stat(&buf)
        })
        .collect();
    variance(&vals).sqrt()
}

/// Total-variation distance between two empirical count distributions.
pub fn total_variation(a: &[u64], b: &[u64]) -> f64 {
    let max = a.iter().chain(b).copied().max().unwrap_or(0) as usize;
    let mut pa = vec![0.0; max + 1];
    let mut pb = vec![0.0; max + 1];
    for &x in a {
        pa[x as usize] += 1.0 / a.len() as f64;
    }
    for &x in b {
        pb[x as usize] += 1.0 / b.len() as f64;
    }
    0.5 * pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).sum::<f64>()
}
