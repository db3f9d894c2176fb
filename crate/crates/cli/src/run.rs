//! Dispatch of a validated config to the sampler and estimators, and
//! emission of the artifacts.
//!
//! Every artifact except `run_report.json` depends only on the config and
//! the seed; timings and thread counts live in the run report alone.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use gibbs_geom::estimators::{
    estimate_e, estimate_v, quantization_bound, run_experiments, write_rows, ExperimentKind,
    ExperimentSetup, ProbeOptions, Targets, VOptions,
};
use gibbs_geom::functionals::{linear_grid, stabilization_probe, AnyFunctional, Battery, Functional};
use gibbs_geom::geometry::io::write_csv;
use gibbs_geom::geometry::Window;
use gibbs_geom::potentials::{AnyPotential, Potential};
use gibbs_geom::rng::StreamFactory;
use gibbs_geom::sampler::{
    clan_diagnostics, estimate_margin, perfect_sample, poisson_like_diagnostics,
    rejection_oracle_with_budget, SampleReport, SamplerOptions, SamplingMode,
};
use gibbs_geom::rng::Purpose;
use gibbs_geom::stats::total_variation;
use gibbs_geom::stats::survival_tail_fit;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{FunctionalSpec, MarginSpec, Mode, Quantity, RunConfig};
use crate::RunError;

/// Stream labels keeping the randomness of distinct phases apart.
const MARGIN_STREAM: u64 = 0x4d41_5247;
const SAMPLE_STREAM: u64 = 0x5341_4d50;
const ESTIMATE_STREAM: u64 = 0x4553_5449;
const EXPERIMENT_STREAM: u64 = 0x4558_5045;
const DIAGNOSE_STREAM: u64 = 0x4449_4147;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

/// Provenance of one invocation, written to `run_report.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub mode: Mode,
    pub config_hash: String,
    pub seed: u64,
    pub threads: usize,
    pub wall_clock_seconds: f64,
    pub phases: Vec<Phase>,
    pub warnings: Vec<String>,
    pub artifacts: Vec<String>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    out: PathBuf,
    hash: String,
    streams: StreamFactory,
    potential: AnyPotential<f64>,
    functionals: Vec<AnyFunctional<f64>>,
    phases: Vec<Phase>,
    warnings: Vec<String>,
    artifacts: Vec<String>,
}

impl Ctx<'_> {
    fn timed<R>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<R, RunError>) -> Result<R, RunError> {
        let t = Instant::now();
        let r = f(self);
        self.phases.push(Phase {
            name: name.into(),
            seconds: t.elapsed().as_secs_f64(),
        });
        r
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, RunError> {
        let path = self.out.join(name);
        let f = File::create(&path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        self.artifacts.push(name.into());
        Ok(BufWriter::new(f))
    }

    fn write_json<S: Serialize>(&mut self, name: &str, body: &S) -> Result<(), RunError> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, body).map_err(|e| RunError::Io(e.to_string()))?;
        writeln!(w).and_then(|_| w.flush()).map_err(|e| RunError::Io(e.to_string()))
    }

    fn write_table<S: Serialize>(&mut self, name: &str, rows: &[S]) -> Result<(), RunError> {
        let w = self.create(name)?;
        let mut c = csv::Writer::from_writer(w);
        for r in rows {
            c.serialize(r).map_err(|e| RunError::Io(e.to_string()))?;
        }
        c.flush().map_err(|e| RunError::Io(e.to_string()))
    }

    /// Sampler options with the margin resolved.
    fn sampler(&mut self) -> Result<(SamplerOptions<f64>, Option<f64>), RunError> {
        let s = self.cfg.sampler;
        let mut opts = SamplerOptions {
            t0: s.t0,
            t_max: s.t_max,
            mode: SamplingMode::FiniteVolume,
            with_marks: self.functionals.iter().any(|f| f.requires_marks()),
        };
        let margin = match s.margin {
            None => None,
            Some(MarginSpec::Fixed(m)) => Some(m),
            Some(MarginSpec::Auto { p_tail }) => {
                let streams = self.streams.child(MARGIN_STREAM);
                let (cfg, pot) = (self.cfg, self.potential.clone());
                let m = self.timed("margin", |_| {
                    Ok(estimate_margin(cfg.dimension, cfg.intensity, &pot, &streams, p_tail, cfg.sampler.t_max)?)
                })?;
                Some(m.margin)
            }
        };
        if let Some(margin) = margin {
            opts.mode = SamplingMode::Thermodynamic { margin };
        }
        Ok((opts, margin))
    }
}

/// Runs `cfg` in `mode`, writing artifacts into `out_dir` (created if needed)
/// on a pool of `threads` workers.
pub fn run(cfg: &RunConfig, mode: Mode, out_dir: &Path, threads: usize) -> Result<RunReport, RunError> {
    let start = Instant::now();
    std::fs::create_dir_all(out_dir)
        .map_err(|e| RunError::Io(format!("{}: {e}", out_dir.display())))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| RunError::Io(e.to_string()))?;
    let mut ctx = Ctx {
        cfg,
        out: out_dir.to_path_buf(),
        hash: cfg.hash(),
        streams: StreamFactory::new(cfg.seed),
        potential: cfg.potential.build()?,
        functionals: cfg
            .functionals
            .iter()
            .map(FunctionalSpec::build)
            .collect::<gibbs_geom::Result<_>>()?,
        phases: Vec::new(),
        warnings: Vec::new(),
        artifacts: Vec::new(),
    };
    if cfg.mode.is_some_and(|m| m != mode) {
        ctx.warnings.push(format!(
            "config declares mode {} but {mode} was requested",
            cfg.mode.unwrap()
        ));
    }
    let result = pool.install(|| match mode {
        Mode::Sample => sample(&mut ctx),
        Mode::Estimate => estimate(&mut ctx),
        Mode::Experiment => experiment(&mut ctx),
        Mode::Diagnose => diagnose(&mut ctx),
    });
    let mut report = RunReport {
        mode,
        config_hash: ctx.hash.clone(),
        seed: cfg.seed,
        threads,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        phases: std::mem::take(&mut ctx.phases),
        warnings: std::mem::take(&mut ctx.warnings),
        artifacts: std::mem::take(&mut ctx.artifacts),
    };
    if let Err(e) = &result {
        report.warnings.push(format!("run failed: {e}"));
    }
    report.artifacts.push("run_report.json".into());
    ctx.write_json("run_report.json", &report)?;
    result.map(|_| report)
}

fn lambda_warning(ctx: &mut Ctx<'_>) -> f64 {
    if ctx.cfg.lambdas.len() > 1 {
        ctx.warnings
            .push("only the first λ of the grid is used in this mode".into());
    }
    ctx.cfg.lambdas[0]
}

fn draw_samples(
    ctx: &mut Ctx<'_>,
    window: &Window<f64>,
    opts: &SamplerOptions<f64>,
    label: u64,
) -> Result<Vec<SampleReport<f64>>, RunError> {
    let streams = ctx.streams.child(label);
    let (tau, pot, reps) = (ctx.cfg.intensity, ctx.potential.clone(), ctx.cfg.reps as u64);
    let samples = ctx.timed("sampling", |_| {
        Ok((0..reps)
            .into_par_iter()
            .map(|rep| perfect_sample(window, tau, &pot, &streams, rep, opts))
            .collect::<gibbs_geom::Result<Vec<_>>>()?)
    })?;
    let contacts: usize = samples.iter().map(|s| s.boundary_contacts).sum();
    if contacts > 0 {
        ctx.warnings.push(format!(
            "{contacts} clans reached the simulation boundary; a larger margin would reduce truncation bias"
        ));
    }
    Ok(samples)
}

#[derive(Serialize)]
struct SampleRow {
    rep: usize,
    points: usize,
    horizon_used: f64,
    extension_count: usize,
    max_clan_diameter: f64,
    max_clan_size: usize,
    boundary_contacts: usize,
    trajectory_points: usize,
}

#[derive(Serialize)]
struct SampleSummary<'a> {
    config_hash: &'a str,
    seed: u64,
    lambda: f64,
    window_half_width: f64,
    margin: Option<f64>,
    samples: &'a [SampleReport<f64>],
}

fn sample(ctx: &mut Ctx<'_>) -> Result<(), RunError> {
    let lambda = lambda_warning(ctx);
    let window = Window::from_volume(lambda, ctx.cfg.dimension)?;
    let (opts, margin) = ctx.sampler()?;
    let samples = draw_samples(ctx, &window, &opts, SAMPLE_STREAM)?;
    let w = ctx.create("points.csv")?;
    write_csv(&samples[0].configuration, w)?;
    let rows: Vec<SampleRow> = samples
        .iter()
        .enumerate()
        .map(|(rep, s)| SampleRow {
            rep,
            points: s.configuration.len(),
            horizon_used: s.horizon_used,
            extension_count: s.extension_count,
            max_clan_diameter: s.max_clan_diameter,
            max_clan_size: s.max_clan_size,
            boundary_contacts: s.boundary_contacts,
            trajectory_points: s.trajectory_points,
        })
        .collect();
    ctx.write_table("samples.csv", &rows)?;
    let hash = ctx.hash.clone();
    ctx.write_json(
        "report.json",
        &SampleSummary {
            config_hash: &hash,
            seed: ctx.cfg.seed,
            lambda,
            window_half_width: window.half_width(),
            margin,
            samples: &samples,
        },
    )
}

#[derive(Serialize)]
struct EstimateRow {
    functional: String,
    quantity: Quantity,
    value: f64,
    std_error: f64,
    replications: usize,
    truncation_radius: f64,
    tail_bound: Option<f64>,
    stabilization_radius: Option<f64>,
}

#[derive(Serialize)]
struct EstimateSummary {
    config_hash: String,
    seed: u64,
    margin: Option<f64>,
    functionals: Vec<serde_json::Value>,
}

fn probe_options(ctx: &Ctx<'_>, sampler: SamplerOptions<f64>) -> ProbeOptions {
    let d = ctx.cfg.dimension;
    let scale = ctx
        .potential
        .interaction_scale()
        .max(ctx.cfg.intensity.powf(-1.0 / d as f64));
    // Truncating the probe window biases long-range scores such as k-NN
    // lengths; gaps on the line decay slowest, so it gets a wider window.
    let spacings = if d == 1 { 12.0 } else { 6.0 };
    let e = &ctx.cfg.estimate;
    ProbeOptions::new(
        d,
        e.probe_half_width.unwrap_or(spacings * scale),
        e.reps.unwrap_or(ctx.cfg.reps),
        sampler,
    )
}

fn v_options(ctx: &Ctx<'_>, probe: ProbeOptions) -> VOptions {
    let scale = ctx.potential.interaction_scale();
    let e = &ctx.cfg.estimate;
    VOptions {
        probe,
        r_max: e.r_max.unwrap_or((6.0 * scale).max(4.0)),
        shells: e.shells,
        cutoff: e.cutoff,
    }
}

fn estimate(ctx: &mut Ctx<'_>) -> Result<(), RunError> {
    let (sampler, margin) = ctx.sampler()?;
    let probe = probe_options(ctx, sampler);
    let vopts = v_options(ctx, probe.clone());
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let (tau, pot) = (ctx.cfg.intensity, ctx.potential.clone());
    for (i, (spec, f)) in ctx.cfg.functionals.iter().zip(ctx.functionals.clone()).enumerate() {
        let label = spec.label();
        let mut entry = serde_json::Map::new();
        entry.insert("functional".into(), serde_json::to_value(spec).unwrap());
        for &q in &ctx.cfg.estimate.quantities {
            let streams = ctx.streams.child(ESTIMATE_STREAM).child((i as u64) << 8 | q as u64);
            let (json, est) = match q {
                Quantity::E => {
                    let e = ctx.timed(&format!("estimate_e:{label}"), |_| {
                        Ok(estimate_e(&pot, &f, tau, &streams, &probe)?)
                    })?;
                    (serde_json::to_value(&e), e)
                }
                Quantity::V => {
                    let v = ctx.timed(&format!("estimate_v:{label}"), |_| {
                        Ok(estimate_v(&pot, &f, tau, &streams, &vopts)?)
                    })?;
                    let shells = v.correlation.clone();
                    ctx.write_table(&format!("shells_{label}.csv"), &shells)?;
                    (serde_json::to_value(&v), v.estimate)
                }
                Quantity::QuantizationBound => {
                    let FunctionalSpec::Quantization { r, h, .. } = spec else {
                        ctx.warnings.push(format!(
                            "quantization_bound skipped for {label}: not a quantization functional"
                        ));
                        continue;
                    };
                    let b = ctx.timed(&format!("quantization_bound:{label}"), |_| {
                        Ok(quantization_bound(&pot, *r, h, tau, &streams, &probe)?)
                    })?;
                    let mut m = b.mean_distortion.clone();
                    m.value = b.bound;
                    m.std_error = b.bound_se;
                    (serde_json::to_value(&b), m)
                }
            };
            for w in &est.warnings {
                ctx.warnings.push(format!("{label} {q:?}: {w}"));
            }
            let key = serde_json::to_value(q).unwrap();
            entry.insert(key.as_str().unwrap().into(), json.map_err(|e| RunError::Io(e.to_string()))?);
            rows.push(EstimateRow {
                functional: label.clone(),
                quantity: q,
                value: est.value,
                std_error: est.std_error,
                replications: est.replications,
                truncation_radius: est.truncation_radius,
                tail_bound: est.tail_bound,
                stabilization_radius: est.stabilization_radius,
            });
        }
        summaries.push(serde_json::Value::Object(entry));
    }
    ctx.write_table("estimates.csv", &rows)?;
    let summary = EstimateSummary {
        config_hash: ctx.hash.clone(),
        seed: ctx.cfg.seed,
        margin,
        functionals: summaries,
    };
    ctx.write_json("report.json", &summary)
}

#[derive(Serialize)]
struct ExperimentSummary<'a> {
    config_hash: &'a str,
    seed: u64,
    margin: Option<f64>,
    reports: &'a [gibbs_geom::estimators::ExperimentReport],
}

fn experiment(ctx: &mut Ctx<'_>) -> Result<(), RunError> {
    let (sampler, margin) = ctx.sampler()?;
    let spec = ctx.cfg.experiment.clone();
    let need = match spec.kind {
        ExperimentKind::Wlln => Quantity::E,
        ExperimentKind::Variance | ExperimentKind::Clt => Quantity::V,
    };
    let probe = probe_options(ctx, sampler);
    let vopts = v_options(ctx, probe.clone());
    let (tau, pot) = (ctx.cfg.intensity, ctx.potential.clone());
    let mut inputs = Vec::new();
    for (i, (fs, f)) in ctx.cfg.functionals.iter().zip(ctx.functionals.clone()).enumerate() {
        let mut t = Targets { e: spec.e, v: spec.v };
        let missing = match need {
            Quantity::E => t.e.is_none(),
            _ => t.v.is_none(),
        };
        if spec.estimate_targets && missing {
            let streams = ctx.streams.child(ESTIMATE_STREAM).child((i as u64) << 8 | need as u64);
            let label = fs.label();
            ctx.timed(&format!("targets:{label}"), |c| {
                match need {
                    Quantity::E => {
                        let e = estimate_e(&pot, &f, tau, &streams, &probe)?;
                        c.warnings.extend(e.warnings.iter().map(|w| format!("{label} E: {w}")));
                        t.e = Some(e.value);
                    }
                    _ => {
                        let v = estimate_v(&pot, &f, tau, &streams, &vopts)?;
                        c.warnings.extend(v.estimate.warnings.iter().map(|w| format!("{label} V: {w}")));
                        t.v = Some(v.estimate.value);
                        t.e.get_or_insert(v.e);
                    }
                }
                Ok(())
            })?;
        }
        inputs.push((f, t));
    }
    let setup = ExperimentSetup {
        dim: ctx.cfg.dimension,
        tau,
        lambdas: ctx.cfg.lambdas.clone(),
        reps: ctx.cfg.reps,
        test_functions: ctx.cfg.test_functions.clone(),
        sampler,
        bootstrap: spec.bootstrap,
    };
    let streams = ctx.streams.child(EXPERIMENT_STREAM);
    let reports = ctx.timed("experiment", |_| {
        Ok(run_experiments(spec.kind, &pot, &inputs, &setup, &streams)?)
    })?;
    let labels: Vec<String> = ctx.cfg.functionals.iter().map(FunctionalSpec::label).collect();
    for (label, rep) in labels.iter().zip(&reports) {
        let w = ctx.create(&format!("experiment_{label}.csv"))?;
        write_rows(&rep.rows, w)?;
        match spec.kind {
            ExperimentKind::Clt => {
                ctx.write_table(&format!("normality_{label}.csv"), &rep.normality)?;
                for n in rep.normality.iter().filter(|n| !n.ad_passes) {
                    ctx.warnings.push(format!(
                        "{label} at λ = {}: {} fails Anderson–Darling at 1% (A*² = {:.3})",
                        n.lambda, n.f_id, n.ad_stat
                    ));
                }
                for k in rep.ks_trend.iter().filter(|k| !k.non_increasing) {
                    ctx.warnings.push(format!(
                        "{label}: Kolmogorov distance of {} increases along the λ grid",
                        k.f_id
                    ));
                }
            }
            ExperimentKind::Variance => {
                ctx.write_table(&format!("variance_fit_{label}.csv"), &rep.variance_fits)?;
            }
            ExperimentKind::Wlln => {}
        }
        ctx.warnings.extend(rep.warnings.iter().map(|w| format!("{label}: {w}")));
    }
    let hash = ctx.hash.clone();
    ctx.write_json(
        "report.json",
        &ExperimentSummary {
            config_hash: &hash,
            seed: ctx.cfg.seed,
            margin,
            reports: &reports,
        },
    )
}

#[derive(Clone, Copy, Serialize)]
struct FitSummary {
    slope: f64,
    intercept: f64,
    r_squared: f64,
    points: usize,
}

#[derive(Serialize)]
struct StabilizationSummary {
    probed: usize,
    unstabilized: usize,
    mean_radius: f64,
    max_radius: f64,
    fit: Option<FitSummary>,
}

#[derive(Serialize)]
struct OracleComparison {
    samples: usize,
    perfect_mean_count: f64,
    oracle_mean_count: f64,
    total_variation: f64,
}

#[derive(Serialize)]
struct DiagnoseSummary<'a> {
    config_hash: &'a str,
    seed: u64,
    lambda: f64,
    margin: Option<f64>,
    clans: Option<gibbs_geom::sampler::ClanDiagnostics>,
    clan_fit: Option<FitSummary>,
    poisson_like: gibbs_geom::sampler::PoissonLikeReport,
    empty_ball_fit: Option<FitSummary>,
    stabilization: StabilizationSummary,
    oracle: Option<OracleComparison>,
}

fn diagnose(ctx: &mut Ctx<'_>) -> Result<(), RunError> {
    let lambda = lambda_warning(ctx);
    let d = ctx.cfg.dimension;
    let window = Window::from_volume(lambda, d)?;
    let (opts, margin) = ctx.sampler()?;
    let samples = draw_samples(ctx, &window, &opts, DIAGNOSE_STREAM)?;
    let spec = ctx.cfg.diagnose.clone();
    let tau = ctx.cfg.intensity;

    let (clans, clan_fit) = match clan_diagnostics(&samples) {
        Ok(c) => {
            let fit = c.fit.map(|f| FitSummary {
                slope: f.slope,
                intercept: f.intercept,
                r_squared: f.r_squared,
                points: f.points,
            });
            (Some(c), fit)
        }
        Err(e) => {
            ctx.warnings.push(format!("clan diagnostics skipped: {e}"));
            (None, None)
        }
    };

    let spacing = tau.powf(-1.0 / d as f64);
    let radii = spec
        .radii
        .clone()
        .unwrap_or_else(|| (1..=8).map(|k| 0.25 * spacing * k as f64).collect());
    let poisson_like = poisson_like_diagnostics(&samples, &window, tau, &radii, spec.cells_per_side)?;
    let empty_ball_fit = poisson_like.empty_ball_fit.map(|f| FitSummary {
        slope: f.slope,
        intercept: f.intercept,
        r_squared: f.r_squared,
        points: f.n,
    });
    let rows = poisson_like.empty_ball.clone();

    let f = ctx.functionals[0].clone();
    let scale = ctx.potential.interaction_scale().max(spacing);
    let step = spec.stabilization_step.unwrap_or(0.1 * scale);
    // Probed points lie in the central half of the window, so larger radii
    // would reach past the data.
    let inner = Window::new(window.half_width() / 2.0, d)?;
    let max = spec
        .stabilization_max
        .unwrap_or((10.0 * scale).min(inner.half_width()));
    let grid = linear_grid(step, max);
    let battery = Battery::new(step);
    let per = spec.stabilization_points;
    let radii_found: Vec<Option<f64>> = ctx.timed("stabilization", |_| {
        let found = samples
            .par_iter()
            .map(|s| {
                let f = f.for_window(&window, lambda)?;
                let mut out = Vec::new();
                for p in s.configuration.iter().filter(|p| inner.contains(p)).take(per) {
                    out.push(stabilization_probe(&f, p, &s.configuration, &grid, &battery)?.stabilized_at);
                }
                Ok(out)
            })
            .collect::<gibbs_geom::Result<Vec<_>>>()?;
        Ok(found.into_iter().flatten().collect())
    })?;
    let stable: Vec<f64> = radii_found.iter().flatten().copied().collect();
    let unstabilized = radii_found.len() - stable.len();
    if unstabilized > 0 {
        ctx.warnings.push(format!(
            "{unstabilized} of {} probed points did not stabilize within radius {max}",
            radii_found.len()
        ));
    }
    // Unstabilized probes enter as right-censored values.
    let censored: Vec<f64> = radii_found
        .iter()
        .map(|r| r.unwrap_or(f64::INFINITY))
        .collect();
    let stab_fit = match survival_tail_fit(&censored, 20) {
        Ok(t) => Some(FitSummary {
            slope: t.slope,
            intercept: t.intercept,
            r_squared: t.r_squared,
            points: t.points,
        }),
        Err(e) => {
            ctx.warnings.push(format!("stabilization tail fit skipped: {e}"));
            None
        }
    };
    let stabilization = StabilizationSummary {
        probed: radii_found.len(),
        unstabilized,
        mean_radius: if stable.is_empty() { 0.0 } else { gibbs_geom::stats::mean(&stable) },
        max_radius: stable.iter().copied().fold(0.0, f64::max),
        fit: stab_fit,
    };
    let oracle = if spec.oracle_samples > 0 {
        Some(oracle_comparison(ctx, &window, &samples, opts)?)
    } else {
        None
    };
    ctx.write_table("empty_ball.csv", &rows)?;
    let hash = ctx.hash.clone();
    ctx.write_json(
        "report.json",
        &DiagnoseSummary {
            config_hash: &hash,
            seed: ctx.cfg.seed,
            lambda,
            margin,
            clans,
            clan_fit,
            poisson_like,
            empty_ball_fit,
            stabilization,
            oracle,
        },
    )
}

/// Count distribution of the perfect samples against the rejection oracle
/// on the same window.
fn oracle_comparison(
    ctx: &mut Ctx<'_>,
    window: &Window<f64>,
    samples: &[SampleReport<f64>],
    opts: SamplerOptions<f64>,
) -> Result<OracleComparison, RunError> {
    if opts.mode != SamplingMode::FiniteVolume {
        ctx.warnings.push(
            "oracle comparison targets the finite-volume law; use sampler.mode = finite_volume".into(),
        );
    }
    let spec = &ctx.cfg.diagnose;
    let (n, budget, tau) = (spec.oracle_samples as u64, spec.oracle_budget, ctx.cfg.intensity);
    let pot = ctx.potential.clone();
    let streams = ctx.streams.child(DIAGNOSE_STREAM);
    let oracle: Vec<u64> = ctx.timed("oracle", |_| {
        Ok((0..n)
            .into_par_iter()
            .map(|rep| {
                let mut rng = streams.stream(rep, Purpose::Oracle);
                rejection_oracle_with_budget(window, tau, &pot, budget, &mut rng)
                    .map(|c| c.len() as u64)
            })
            .collect::<gibbs_geom::Result<Vec<_>>>()?)
    })?;
    let perfect: Vec<u64> = samples.iter().map(|s| s.configuration.len() as u64).collect();
    let mean = |v: &[u64]| v.iter().sum::<u64>() as f64 / v.len() as f64;
    Ok(OracleComparison {
        samples: oracle.len(),
        perfect_mean_count: mean(&perfect),
        oracle_mean_count: mean(&oracle),
        total_variation: total_variation(&perfect, &oracle),
    })
}
