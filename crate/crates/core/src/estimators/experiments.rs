use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::measure::{build_measure, integral_of_product, integrate, TestFunction};
use crate::functionals::{AnyFunctional, ComponentGraph, Functional};
use crate::geometry::Window;
use crate::potentials::Potential;
use crate::rng::{Purpose, StreamFactory};
use crate::sampler::{perfect_sample, SamplerOptions};
use crate::stats::{
    anderson_darling, bootstrap_se, covariance, ks_distance_normal, linear_fit, mean, moments,
    pairwise_sum, variance,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// `λ^{-1}⟨f, μ_λ⟩` against `τ E(τ) ∫f`.
    Wlln,
    /// `λ^{-1} Var⟨f, μ_λ⟩` against `τ V(τ) ∫f²`.
    Variance,
    /// Normality of the centred statistics and their covariances.
    Clt,
}

/// What is sampled and which test functions are integrated.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSetup {
    pub dim: usize,
    pub tau: f64,
    /// Volumes `λ` of the windows `Q_λ`, increasing.
    pub lambdas: Vec<f64>,
    pub reps: usize,
    pub test_functions: Vec<TestFunction>,
    pub sampler: SamplerOptions<f64>,
    /// Bootstrap resamples for the standard error of the Kolmogorov distance.
    pub bootstrap: usize,
}

impl ExperimentSetup {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidInput(format!(
                "intensity must be positive, got {}",
                self.tau
            )));
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidInput(
                "λ grid must be non-empty and positive".into(),
            ));
        }
        if self.lambdas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(
                "λ grid must be strictly increasing".into(),
            ));
        }
        if self.reps < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 replications, got {}",
                self.reps
            )));
        }
        if self.test_functions.is_empty() {
            return Err(Error::InvalidInput(
                "at least one test function is required".into(),
            ));
        }
        for f in &self.test_functions {
            f.validate(self.dim)?;
        }
        self.sampler.validate()
    }
}

/// Limit constants the statistics are compared against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Targets {
    pub e: Option<f64>,
    pub v: Option<f64>,
}

/// One output row per `(λ, f)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub lambda: f64,
    pub f_id: String,
    pub n_reps: usize,
    /// Mean of `⟨f, μ_λ⟩`.
    pub mean: f64,
    /// Sample variance of `⟨f, μ_λ⟩`.
    pub variance: f64,
    /// `λ^{-1}·mean` for the law of large numbers, `λ^{-1}·variance` otherwise.
    pub normalized_stat: f64,
    pub target: Option<f64>,
    /// Standard error of `normalized_stat`.
    pub std_error: f64,
    /// Anderson–Darling `A*²` of the standardized samples.
    pub ad_stat: Option<f64>,
    pub ks_dist: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalityRow {
    pub lambda: f64,
    pub f_id: String,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub ad_stat: f64,
    pub ad_passes: bool,
    pub ks_dist: f64,
    pub ks_bootstrap_se: f64,
}

/// Raw `Var⟨f, μ_λ⟩` regressed on `λ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarianceFit {
    pub f_id: String,
    pub slope: f64,
    /// Propagated from the standard errors of the per-λ variances, which are
    /// independent; residual-based errors are unreliable with few λ values.
    pub slope_se: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Slope target `τ V ∫f²` when `V` is known.
    pub target: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CovarianceCheck {
    pub lambda: f64,
    pub f1: String,
    pub f2: String,
    /// `λ^{-1} Cov(⟨f₁, μ⟩, ⟨f₂, μ⟩)`.
    pub normalized_cov: f64,
    pub std_error: f64,
    /// `τ V ∫f₁f₂`.
    pub target: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KsTrend {
    pub f_id: String,
    /// Each step up the λ grid raises the distance by at most two
    /// combined bootstrap standard errors.
    pub non_increasing: bool,
}

/// Empirical `p`-th moments of the atom weights.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentRow {
    pub lambda: f64,
    pub p: u32,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaSummary {
    pub lambda: f64,
    pub mean_points: f64,
    /// Mean largest-cluster fraction, for percolation functionals.
    pub largest_cluster_fraction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub functional: String,
    pub potential: String,
    pub targets: Targets,
    pub rows: Vec<ExperimentRow>,
    pub normality: Vec<NormalityRow>,
    pub variance_fits: Vec<VarianceFit>,
    pub covariances: Vec<CovarianceCheck>,
    pub ks_trend: Vec<KsTrend>,
    pub moments: Vec<MomentRow>,
    pub summaries: Vec<LambdaSummary>,
    pub warnings: Vec<String>,
}

struct RepResult {
    integrals: Vec<f64>,
    points: usize,
    moment_sums: [f64; 4],
    cluster: Option<f64>,
}

/// Standard error of the least-squares slope through `(x_i, y_i)` when the
/// `y_i` are independent with standard errors `se_i`.
fn ols_slope_se(x: &[f64], se: &[f64]) -> f64 {
    let xm = mean(x);
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    x.iter()
        .zip(se)
        .map(|(v, s)| ((v - xm) / sxx * s).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Standard error of the sample variance from the fourth central moment.
fn variance_se(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = mean(xs);
    let m4 = pairwise_sum(&xs.iter().map(|x| (x - m).powi(4)).collect::<Vec<_>>()) / n;
    let s2 = variance(xs);
    ((m4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
}

/// Standard error of the sample covariance.
fn covariance_se(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let p: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .collect();
    (variance(&p) / xs.len() as f64).sqrt()
}

/// Statistics of one functional collected across the λ grid.
struct Accumulator {
    f: AnyFunctional<f64>,
    targets: Targets,
    h: TestFunction,
    percolation: bool,
    rows: Vec<ExperimentRow>,
    normality: Vec<NormalityRow>,
    covariances: Vec<CovarianceCheck>,
    moments: Vec<MomentRow>,
    summaries: Vec<LambdaSummary>,
    warnings: Vec<String>,
    raw_var: Vec<Vec<f64>>,
    raw_var_se: Vec<Vec<f64>>,
}

fn evaluate(
    f: &AnyFunctional<f64>,
    cfg: &crate::geometry::PointConfiguration<f64>,
    lambda: f64,
    tfs: &[TestFunction],
    percolation: bool,
) -> Result<RepResult> {
    let mu = build_measure(cfg, f, lambda)?;
    let mut moment_sums = [0.0; 4];
    for (p, s) in moment_sums.iter_mut().enumerate() {
        *s = pairwise_sum(
            &mu.weights
                .iter()
                .map(|w| w.abs().powi(p as i32 + 1))
                .collect::<Vec<_>>(),
        );
    }
    let cluster = match (f, percolation) {
        (AnyFunctional::Components(c), true) => Some(c.largest_cluster_fraction(cfg)?),
        _ => None,
    };
    Ok(RepResult {
        integrals: tfs.iter().map(|t| integrate(&mu, t)).collect(),
        points: cfg.len(),
        moment_sums,
        cluster,
    })
}

impl Accumulator {
    fn absorb(
        &mut self,
        kind: ExperimentKind,
        setup: &ExperimentSetup,
        lambda: f64,
        reps: &[RepResult],
        child: &StreamFactory,
        slot: u64,
    ) {
        let d = setup.dim;
        let tfs = &setup.test_functions;
        let ids: Vec<String> = tfs.iter().map(|t| t.id()).collect();
        let h = &self.h;
        let tau = setup.tau;
        let atoms: usize = reps.iter().map(|r| r.points).sum();
        self.summaries.push(LambdaSummary {
            lambda,
            mean_points: atoms as f64 / reps.len() as f64,
            largest_cluster_fraction: self.percolation.then(|| {
                mean(
                    &reps
                        .iter()
                        .map(|r| r.cluster.unwrap_or(0.0))
                        .collect::<Vec<_>>(),
                )
            }),
        });
        for p in 0..4 {
            let s = pairwise_sum(&reps.iter().map(|r| r.moment_sums[p]).collect::<Vec<_>>());
            let value = if atoms > 0 {
                s / atoms as f64
            } else {
                f64::NAN
            };
            self.moments.push(MomentRow {
                lambda,
                p: p as u32 + 1,
                value,
            });
        }

        let samples: Vec<Vec<f64>> = (0..tfs.len())
            .map(|j| reps.iter().map(|r| r.integrals[j]).collect())
            .collect();
        for (j, xs) in samples.iter().enumerate() {
            let m = moments(xs);
            let ad = anderson_darling(xs).ok();
            let ks = ad.map(|_| ks_distance_normal(xs));
            self.raw_var[j].push(m.variance);
            self.raw_var_se[j].push(variance_se(xs));
            let (stat, se, target) = match kind {
                ExperimentKind::Wlln => (
                    m.mean / lambda,
                    (m.variance / xs.len() as f64).sqrt() / lambda,
                    self.targets
                        .e
                        .map(|e| tau * e * integral_of_product(&[&tfs[j], h], d)),
                ),
                ExperimentKind::Variance | ExperimentKind::Clt => (
                    m.variance / lambda,
                    variance_se(xs) / lambda,
                    self.targets
                        .v
                        .map(|v| tau * v * integral_of_product(&[&tfs[j], &tfs[j], h, h], d)),
                ),
            };
            self.rows.push(ExperimentRow {
                lambda,
                f_id: ids[j].clone(),
                n_reps: xs.len(),
                mean: m.mean,
                variance: m.variance,
                normalized_stat: stat,
                target,
                std_error: se,
                ad_stat: ad.map(|a| a.a2_star),
                ks_dist: ks,
            });
            if kind == ExperimentKind::Clt {
                let Some(ad) = ad else {
                    self.warnings.push(format!(
                        "λ = {lambda}, {}: degenerate sample, no normality test",
                        ids[j]
                    ));
                    continue;
                };
                let mut rng = child.stream(slot * 1024 + j as u64, Purpose::Bootstrap);
                let ks_se = bootstrap_se(xs, setup.bootstrap, &mut rng, ks_distance_normal);
                if !ad.passes_at_1pct() {
                    self.warnings.push(format!(
                        "λ = {lambda}, {}: Anderson–Darling rejects normality at 1%",
                        ids[j]
                    ));
                }
                self.normality.push(NormalityRow {
                    lambda,
                    f_id: ids[j].clone(),
                    mean: m.mean,
                    variance: m.variance,
                    skewness: m.skewness,
                    excess_kurtosis: m.excess_kurtosis,
                    ad_stat: ad.a2_star,
                    ad_passes: ad.passes_at_1pct(),
                    ks_dist: ks.unwrap_or(f64::NAN),
                    ks_bootstrap_se: ks_se,
                });
            }
        }
        if kind == ExperimentKind::Clt {
            for i in 0..tfs.len() {
                for j in i + 1..tfs.len() {
                    self.covariances.push(CovarianceCheck {
                        lambda,
                        f1: ids[i].clone(),
                        f2: ids[j].clone(),
                        normalized_cov: covariance(&samples[i], &samples[j]) / lambda,
                        std_error: covariance_se(&samples[i], &samples[j]) / lambda,
                        target: self
                            .targets
                            .v
                            .map(|v| tau * v * integral_of_product(&[&tfs[i], &tfs[j], h, h], d)),
                    });
                }
            }
        }
    }

    fn finish(
        mut self,
        kind: ExperimentKind,
        setup: &ExperimentSetup,
        potential: String,
    ) -> ExperimentReport {
        let d = setup.dim;
        let tfs = &setup.test_functions;
        let ids: Vec<String> = tfs.iter().map(|t| t.id()).collect();
        let mut variance_fits = Vec::new();
        if setup.lambdas.len() >= 2 {
            for (j, vars) in self.raw_var.iter().enumerate() {
                if let Ok(fit) = linear_fit(&setup.lambdas, vars) {
                    variance_fits.push(VarianceFit {
                        f_id: ids[j].clone(),
                        slope: fit.slope,
                        slope_se: ols_slope_se(&setup.lambdas, &self.raw_var_se[j]),
                        intercept: fit.intercept,
                        r_squared: fit.r_squared,
                        target: self.targets.v.map(|v| {
                            setup.tau
                                * v
                                * integral_of_product(&[&tfs[j], &tfs[j], &self.h, &self.h], d)
                        }),
                    });
                }
            }
        }
        let ks_trend = if kind == ExperimentKind::Clt {
            ids.iter()
                .map(|id| {
                    let seq: Vec<&NormalityRow> =
                        self.normality.iter().filter(|r| &r.f_id == id).collect();
                    let ok = seq.windows(2).all(|w| {
                        let se =
                            (w[0].ks_bootstrap_se.powi(2) + w[1].ks_bootstrap_se.powi(2)).sqrt();
                        w[1].ks_dist <= w[0].ks_dist + 2.0 * se
                    });
                    KsTrend {
                        f_id: id.clone(),
                        non_increasing: ok,
                    }
                })
                .collect()
        } else {
            Vec::new()
        };
        for s in &self.summaries {
            if let Some(c) = s.largest_cluster_fraction {
                if c > 0.5 {
                    self.warnings.push(format!(
                        "λ = {}: largest cluster holds {c:.2} of the points; percolation may be supercritical",
                        s.lambda
                    ));
                }
            }
        }
        ExperimentReport {
            kind,
            functional: self.f.name().to_string(),
            potential,
            targets: self.targets,
            rows: self.rows,
            normality: self.normality,
            variance_fits,
            covariances: self.covariances,
            ks_trend,
            moments: self.moments,
            summaries: self.summaries,
            warnings: self.warnings,
        }
    }
}

/// Runs the replications on every window of the grid and tabulates the
/// statistics. Results depend only on the seed, not on the thread count.
pub fn run_experiment<P: Potential<f64> + ?Sized>(
    kind: ExperimentKind,
    potential: &P,
    f: &AnyFunctional<f64>,
    setup: &ExperimentSetup,
    targets: Targets,
    streams: &StreamFactory,
) -> Result<ExperimentReport> {
    let mut r = run_experiments(kind, potential, &[(f.clone(), targets)], setup, streams)?;
    Ok(r.remove(0))
}

/// As [`run_experiment`] for several functionals evaluated on the same samples.
pub fn run_experiments<P: Potential<f64> + ?Sized>(
    kind: ExperimentKind,
    potential: &P,
    functionals: &[(AnyFunctional<f64>, Targets)],
    setup: &ExperimentSetup,
    streams: &StreamFactory,
) -> Result<Vec<ExperimentReport>> {
    setup.validate()?;
    if functionals.is_empty() {
        return Err(Error::InvalidInput(
            "at least one functional is required".into(),
        ));
    }
    let tfs = &setup.test_functions;
    let with_marks = functionals.iter().any(|(f, _)| f.requires_marks());
    let opts = SamplerOptions {
        with_marks,
        ..setup.sampler
    };
    let mut acc: Vec<Accumulator> = functionals
        .iter()
        .map(|(f, targets)| Accumulator {
            f: f.clone(),
            targets: *targets,
            h: match f {
                AnyFunctional::Quantization(q) => TestFunction::from_density(q.density()),
                _ => TestFunction::one(),
            },
            percolation: matches!(f, AnyFunctional::Components(c) if matches!(c.graph(), ComponentGraph::Percolation { .. })),
            rows: Vec::new(),
            normality: Vec::new(),
            covariances: Vec::new(),
            moments: Vec::new(),
            summaries: Vec::new(),
            warnings: Vec::new(),
            raw_var: vec![Vec::new(); tfs.len()],
            raw_var_se: vec![Vec::new(); tfs.len()],
        })
        .collect();

    for &lambda in &setup.lambdas {
        let window = Window::from_volume(lambda, setup.dim)?;
        let fws: Vec<AnyFunctional<f64>> = acc
            .iter()
            .map(|a| a.f.for_window(&window, lambda))
            .collect::<Result<_>>()?;
        let child = streams.child(lambda.to_bits());
        let per_rep: Vec<Vec<RepResult>> = (0..setup.reps as u64)
            .into_par_iter()
            .map(|rep| -> Result<Vec<RepResult>> {
                let cfg = perfect_sample(&window, setup.tau, potential, &child, rep, &opts)?
                    .configuration;
                fws.iter()
                    .zip(&acc)
                    .map(|(f, a)| evaluate(f, &cfg, lambda, tfs, a.percolation))
                    .collect()
            })
            .collect::<Result<_>>()?;
        let mut by_functional: Vec<Vec<RepResult>> = (0..acc.len())
            .map(|_| Vec::with_capacity(per_rep.len()))
            .collect();
        for rep in per_rep {
            for (k, r) in rep.into_iter().enumerate() {
                by_functional[k].push(r);
            }
        }
        for (k, (a, reps)) in acc.iter_mut().zip(&by_functional).enumerate() {
            a.absorb(kind, setup, lambda, reps, &child, k as u64);
        }
    }
    Ok(acc
        .into_iter()
        .map(|a| a.finish(kind, setup, potential.name().to_string()))
        .collect())
}

/// Writes the rows as CSV with a header line.
pub fn write_rows<W: Write>(rows: &[ExperimentRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    }
    w.flush()
        .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    Ok(())
}
