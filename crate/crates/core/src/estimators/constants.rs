use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{
    linear_grid, stabilization_probe, AnyFunctional, Battery, Density, Functional, Quantization,
};
use crate::geometry::{ball_volume, Point, PointConfiguration, Window};
use crate::potentials::{pair_add_one, Potential};
use crate::rng::{Purpose, StreamFactory};
use crate::sampler::{perfect_sample, SamplerOptions};
use crate::stats::{linear_fit, mean, std_error, LinearFit};

/// Monte Carlo estimate of a limit constant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantEstimate {
    pub value: f64,
    pub std_error: f64,
    pub replications: usize,
    /// Half-width of the probe window (for E) or radial cutoff (for V).
    pub truncation_radius: f64,
    /// Bound on the neglected part of the radial integral, when a decaying
    /// correlation tail could be fitted.
    pub tail_bound: Option<f64>,
    pub interaction_scale: f64,
    /// Largest stabilization radius of `ξ` at the origin over the checked
    /// replications; `None` when some check did not stabilize.
    pub stabilization_radius: Option<f64>,
    /// Mean insertion weight `exp(−Δ(0, X))`; times `τ` it is the intensity.
    pub mean_insertion_weight: f64,
    pub warnings: Vec<String>,
}

/// Sampling set-up shared by the insertion estimators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeOptions {
    pub dim: usize,
    /// Half-width `ρ` of the cube sampled around the origin.
    pub half_width: f64,
    pub reps: usize,
    pub sampler: SamplerOptions<f64>,
    /// Replications on which the stabilization radius at 0 is probed.
    pub stabilization_checks: usize,
}

impl ProbeOptions {
    pub fn new(dim: usize, half_width: f64, reps: usize, sampler: SamplerOptions<f64>) -> Self {
        Self {
            dim,
            half_width,
            reps,
            sampler,
            stabilization_checks: 10,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        if !(self.half_width > 0.0) || !self.half_width.is_finite() {
            return Err(Error::InvalidInput(format!(
                "probe half-width must be positive, got {}",
                self.half_width
            )));
        }
        if self.reps < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 replications, got {}",
                self.reps
            )));
        }
        self.sampler.validate()
    }
}

fn check_inputs(f: &AnyFunctional<f64>, tau: f64, opts: &ProbeOptions) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidInput(format!(
            "intensity must be positive, got {tau}"
        )));
    }
    opts.validate()?;
    if !f.translation_invariant() {
        return Err(Error::InvalidInput(format!(
            "{} is not translation invariant; limit constants need the uniform density",
            f.name()
        )));
    }
    Ok(())
}

/// One perfect sample around the origin plus the arrival mark of the origin.
struct Probe {
    cfg: PointConfiguration<f64>,
    mark0: Option<f64>,
    /// `exp(−Δ(0, X))`.
    weight: f64,
}

#[allow(clippy::too_many_arguments)]
fn probe_sample<P: Potential<f64> + ?Sized>(
    window: &Window<f64>,
    tau: f64,
    potential: &P,
    f: &AnyFunctional<f64>,
    streams: &StreamFactory,
    rep: u64,
    sampler: &SamplerOptions<f64>,
    rng: &mut impl Rng,
) -> Result<Probe> {
    let opts = SamplerOptions {
        with_marks: f.requires_marks(),
        ..*sampler
    };
    let cfg = perfect_sample(window, tau, potential, streams, rep, &opts)?.configuration;
    let mark0 = f.requires_marks().then(|| rng.random::<f64>());
    let weight = (-potential.add_one(&Point::origin(window.dim()), cfg.points())).exp();
    Ok(Probe { cfg, mark0, weight })
}

/// Largest stabilization radius at the origin over the first `checks`
/// samples admitting the origin, probing radii up to half the window.
fn stabilization_radius(
    f: &AnyFunctional<f64>,
    probes: &[Probe],
    half_width: f64,
    checks: usize,
) -> Result<Option<f64>> {
    let step = half_width / 20.0;
    let grid = linear_grid(step, half_width / 2.0);
    let battery = Battery::new(step);
    let chosen: Vec<&Probe> = probes
        .iter()
        .filter(|p| p.weight > 0.0)
        .take(checks)
        .collect();
    let radii: Vec<Option<f64>> = chosen
        .par_iter()
        .map(|p| -> Result<Option<f64>> {
            let o = Point::origin(p.cfg.dim());
            let (cfg, _) = p.cfg.with_point(&o, p.mark0)?;
            Ok(stabilization_probe(f, &o, &cfg, &grid, &battery)?.stabilized_at)
        })
        .collect::<Result<_>>()?;
    Ok(radii
        .into_iter()
        .try_fold(0.0f64, |m, r| r.map(|r| m.max(r))))
}

fn probe_warnings(stab: Option<f64>, half_width: f64, scale: f64) -> Vec<String> {
    let mut w = Vec::new();
    match stab {
        None => w.push(
            "ξ did not stabilize within half the probe window on some checked samples".to_string(),
        ),
        Some(r) if r >= half_width / 2.0 => w.push(format!(
            "stabilization radius {r} reaches half the probe window"
        )),
        _ => {}
    }
    if scale * 4.0 > half_width {
        w.push(format!(
            "probe half-width {half_width} is small against the interaction scale {scale}"
        ));
    }
    w
}

/// `E(τ) = E[ξ(0, P^Ψ) exp(−Δ(0, P^Ψ))]`, estimated by inserting the origin
/// into perfect samples on the probe window.
pub fn estimate_e<P: Potential<f64> + ?Sized>(
    potential: &P,
    f: &AnyFunctional<f64>,
    tau: f64,
    streams: &StreamFactory,
    opts: &ProbeOptions,
) -> Result<ConstantEstimate> {
    check_inputs(f, tau, opts)?;
    let window = Window::new(opts.half_width, opts.dim)?;
    let f = f.for_window(&window, 1.0)?;
    let origin = Point::origin(opts.dim);
    let samples: Vec<(Probe, f64)> = (0..opts.reps as u64)
        .into_par_iter()
        .map(|rep| -> Result<(Probe, f64)> {
            let mut rng = streams.stream(rep, Purpose::Insertion);
            let p = probe_sample(
                &window,
                tau,
                potential,
                &f,
                streams,
                rep,
                &opts.sampler,
                &mut rng,
            )?;
            let v = if p.weight > 0.0 {
                f.value_with_mark(&origin, p.mark0, &p.cfg)? * p.weight
            } else {
                0.0
            };
            Ok((p, v))
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let weights: Vec<f64> = samples.iter().map(|s| s.0.weight).collect();
    let probes: Vec<Probe> = samples.into_iter().map(|s| s.0).collect();
    let stab = stabilization_radius(&f, &probes, opts.half_width, opts.stabilization_checks)?;
    let scale = potential.interaction_scale();
    Ok(ConstantEstimate {
        value: mean(&values),
        std_error: std_error(&values),
        replications: opts.reps,
        truncation_radius: opts.half_width,
        tail_bound: None,
        interaction_scale: scale,
        stabilization_radius: stab,
        mean_insertion_weight: mean(&weights),
        warnings: probe_warnings(stab, opts.half_width, scale),
    })
}

/// Radial grid for the two-point correlation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VOptions {
    /// Samples are drawn on the cube of half-width `probe.half_width + r_max`.
    pub probe: ProbeOptions,
    pub r_max: f64,
    /// Equal-width spherical shells covering `[0, r_max]`.
    pub shells: usize,
    /// Fixed cutoff; when absent it is read off the fitted correlation tail.
    pub cutoff: Option<f64>,
}

/// `σ[0, x]` averaged over the shell `inner ≤ |x| < outer` by evaluating it
/// at the mid radius in a random direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShellCorrelation {
    pub inner: f64,
    pub outer: f64,
    pub value: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VEstimate {
    pub estimate: ConstantEstimate,
    /// `σ[0] = E[ξ² exp(−Δ)]`.
    pub sigma0: f64,
    pub sigma0_se: f64,
    /// `E(τ)` from the same samples.
    pub e: f64,
    pub e_se: f64,
    pub correlation: Vec<ShellCorrelation>,
    /// Fit of `ln |σ[0, x]|` against `|x|` over the significant tail shells.
    #[serde(skip)]
    pub tail_fit: Option<LinearFit>,
}

/// Per-replication insertion terms.
struct VSample {
    /// `ξ(0)² exp(−Δ(0))`.
    a: f64,
    /// `ξ(0) exp(−Δ(0))`.
    b: f64,
    /// `ξ(0, X ∪ {x}) ξ(x, X ∪ {0}) exp(−Δ({0, x}))` per shell.
    pair: Vec<f64>,
}

fn random_direction(d: usize, rng: &mut impl Rng) -> Point<f64> {
    loop {
        let c: Vec<f64> = (0..d)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let n = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 1e-12 {
            let u: Vec<f64> = c.iter().map(|v| v / n).collect();
            return Point::new(&u).expect("finite direction");
        }
    }
}

/// `∫_R^∞ s^m e^{−c s} ds` for integer `m ≥ 0`, `c > 0`.
fn exp_moment_tail(m: usize, c: f64, r: f64) -> f64 {
    let x = c * r;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=m {
        term *= x / k as f64;
        sum += term;
    }
    let fact: f64 = (1..=m).map(|k| k as f64).product();
    fact * (-x).exp() * sum / c.powi(m as i32 + 1)
}

/// `V(τ) = σ[0] + τ ∫ σ[0, x] dx`, with the two-point correlation
/// `σ[0, x] = E[ξ(0, P ∪ {x}) ξ(x, P ∪ {0}) exp(−Δ({0, x}, P))] − E(τ)²`
/// integrated shell by shell up to the cutoff.
pub fn estimate_v<P: Potential<f64> + ?Sized>(
    potential: &P,
    f: &AnyFunctional<f64>,
    tau: f64,
    streams: &StreamFactory,
    opts: &VOptions,
) -> Result<VEstimate> {
    check_inputs(f, tau, &opts.probe)?;
    if !(opts.r_max > 0.0) || opts.shells == 0 {
        return Err(Error::InvalidInput(
            "the radial grid needs r_max > 0 and at least one shell".into(),
        ));
    }
    if let Some(c) = opts.cutoff {
        if !(c > 0.0 && c <= opts.r_max) {
            return Err(Error::InvalidInput(format!(
                "cutoff {c} must lie in (0, r_max]"
            )));
        }
    }
    let d = opts.probe.dim;
    let half = opts.probe.half_width + opts.r_max;
    let window = Window::new(half, d)?;
    let f = f.for_window(&window, 1.0)?;
    let origin = Point::origin(d);
    let h = opts.r_max / opts.shells as f64;
    let mids: Vec<f64> = (0..opts.shells).map(|k| (k as f64 + 0.5) * h).collect();

    let samples: Vec<(Probe, VSample)> = (0..opts.probe.reps as u64)
        .into_par_iter()
        .map(|rep| -> Result<(Probe, VSample)> {
            let mut rng = streams.stream(rep, Purpose::Insertion);
            let p = probe_sample(
                &window,
                tau,
                potential,
                &f,
                streams,
                rep,
                &opts.probe.sampler,
                &mut rng,
            )?;
            let u = random_direction(d, &mut rng);
            let mut s = VSample {
                a: 0.0,
                b: 0.0,
                pair: vec![0.0; mids.len()],
            };
            if p.weight > 0.0 {
                let xi0 = f.value_with_mark(&origin, p.mark0, &p.cfg)?;
                s.a = xi0 * xi0 * p.weight;
                s.b = xi0 * p.weight;
            }
            let (with0, _) = p.cfg.with_point(&origin, p.mark0)?;
            for (k, &m) in mids.iter().enumerate() {
                let x = u.scale(m);
                let mark_x = f.requires_marks().then(|| rng.random::<f64>());
                let w = (-pair_add_one(potential, &x, &origin, p.cfg.points())).exp();
                if w > 0.0 {
                    let (both, _) = with0.with_point(&x, mark_x)?;
                    let a = f.value_with_mark(&origin, p.mark0, &both)?;
                    let b = f.value_with_mark(&x, mark_x, &both)?;
                    s.pair[k] = a * b * w;
                }
            }
            Ok((p, s))
        })
        .collect::<Result<_>>()?;

    let n = samples.len();
    let a: Vec<f64> = samples.iter().map(|s| s.1.a).collect();
    let b: Vec<f64> = samples.iter().map(|s| s.1.b).collect();
    let (sigma0, e) = (mean(&a), mean(&b));
    let correlation: Vec<ShellCorrelation> = (0..mids.len())
        .map(|k| {
            let pk: Vec<f64> = samples.iter().map(|s| s.1.pair[k]).collect();
            // delta method for mean(pair) − mean(b)²
            let z: Vec<f64> = pk.iter().zip(&b).map(|(p, b)| p - 2.0 * e * b).collect();
            ShellCorrelation {
                inner: k as f64 * h,
                outer: (k + 1) as f64 * h,
                value: mean(&pk) - e * e,
                std_error: std_error(&z),
            }
        })
        .collect();

    let scale = potential.interaction_scale();
    let mut warnings = Vec::new();
    let tail_fit = fit_tail(&correlation, scale);
    let amplitude = |fit: &LinearFit, s: f64| (fit.intercept + fit.slope * s).exp();
    let kc = match (opts.cutoff, &tail_fit) {
        (Some(c), _) => ((c / h).ceil() as usize).clamp(1, mids.len()),
        (None, Some(fit)) if sigma0 > 0.0 => {
            let s = ((1e-4 * sigma0).ln() - fit.intercept) / fit.slope;
            ((s / h).ceil().max(1.0) as usize).min(mids.len())
        }
        _ => {
            warnings.push(
                "no decaying correlation tail could be fitted; integrating up to r_max".to_string(),
            );
            mids.len()
        }
    };
    let cutoff = kc as f64 * h;
    let shell_volume = |k: usize| ball_volume(d, (k + 1) as f64 * h) - ball_volume(d, k as f64 * h);
    let weights: Vec<f64> = (0..kc).map(shell_volume).collect();
    let total_w: f64 = weights.iter().sum();
    let per_rep: Vec<f64> = samples
        .iter()
        .map(|(_, s)| {
            let pair: f64 = weights.iter().zip(&s.pair).map(|(w, p)| w * p).sum();
            s.a + tau * pair - 2.0 * tau * total_w * e * s.b
        })
        .collect();
    let integral: f64 = weights
        .iter()
        .zip(&correlation)
        .map(|(w, c)| w * c.value)
        .sum();
    let value = sigma0 + tau * integral;
    let se = std_error(&per_rep);
    let surface = d as f64 * ball_volume(d, 1.0);
    let tail_bound = tail_fit.filter(|fit| fit.slope < 0.0).map(|fit| {
        tau * surface * amplitude(&fit, 0.0) * exp_moment_tail(d - 1, -fit.slope, cutoff)
    });
    if value < -3.0 * se {
        warnings.push(format!(
            "negative variance estimate {value} (SE {se}): too few replications"
        ));
    }
    let probes: Vec<Probe> = samples.into_iter().map(|s| s.0).collect();
    let stab = stabilization_radius(
        &f,
        &probes,
        opts.probe.half_width,
        opts.probe.stabilization_checks,
    )?;
    warnings.extend(probe_warnings(stab, opts.probe.half_width, scale));
    let weights0: Vec<f64> = probes.iter().map(|p| p.weight).collect();
    Ok(VEstimate {
        estimate: ConstantEstimate {
            value,
            std_error: se,
            replications: n,
            truncation_radius: cutoff,
            tail_bound,
            interaction_scale: scale,
            stabilization_radius: stab,
            mean_insertion_weight: mean(&weights0),
            warnings,
        },
        sigma0,
        sigma0_se: std_error(&a),
        e,
        e_se: std_error(&b),
        correlation,
        tail_fit,
    })
}

/// Fits `ln |σ|` linearly in the radius over shells beyond the interaction
/// scale whose correlation is more than two standard errors from zero.
fn fit_tail(c: &[ShellCorrelation], scale: f64) -> Option<LinearFit> {
    let pts: Vec<(f64, f64)> = c
        .iter()
        .filter(|s| s.inner >= scale && s.value.abs() > 2.0 * s.std_error && s.value != 0.0)
        .map(|s| ((s.inner + s.outer) / 2.0, s.value.abs().ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    linear_fit(&x, &y).ok().filter(|f| f.slope < 0.0)
}

/// Empirical upper bound on the quantization coefficient next to the
/// Poisson values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantizationBound {
    pub r: f64,
    pub dim: usize,
    /// `E[M^Ψ(τ)]`, the mean cell distortion weighted by the insertion weight.
    pub mean_distortion: ConstantEstimate,
    /// `‖h‖_{d/(d+r)}`.
    pub density_norm: f64,
    /// `τ E[M^Ψ(τ)] / ‖h‖_{d/(d+r)}`.
    pub bound: f64,
    pub bound_se: f64,
    /// `Γ(1 + r/d) ω_d^{−r/d}`.
    pub poisson_bound: f64,
    /// The Poisson value at the realized intensity `τ E[exp(−Δ)]`.
    pub poisson_matched: f64,
    /// `below`, `above` or `inconclusive` (within two standard errors) for
    /// `τ E[M^Ψ]` against `poisson_matched`.
    pub comparison: String,
}

/// `Γ(1 + r/d) ω_d^{−r/d}`, the Poisson value of `τ^{r/d}·τ E[M^0(τ)]`.
pub fn poisson_quantization_constant(d: usize, r: f64) -> f64 {
    let rd = r / d as f64;
    statrs::function::gamma::gamma(1.0 + rd) * ball_volume(d, 1.0f64).powf(-rd)
}

/// Estimates `E[M^Ψ(τ)]` by insertion and reports the resulting bound.
pub fn quantization_bound<P: Potential<f64> + ?Sized>(
    potential: &P,
    r: f64,
    density: &Density,
    tau: f64,
    streams: &StreamFactory,
    opts: &ProbeOptions,
) -> Result<QuantizationBound> {
    density.validate(opts.dim)?;
    let f = AnyFunctional::Quantization(Quantization::new(r)?);
    let m = estimate_e(potential, &f, tau, streams, opts)?;
    let d = opts.dim;
    let norm = density.lp_norm(d, d as f64 / (d as f64 + r));
    let poisson = poisson_quantization_constant(d, r);
    let realized = tau * m.mean_insertion_weight;
    let matched = realized.powf(-r / d as f64) * poisson;
    let (v, se) = (tau * m.value, tau * m.std_error);
    let comparison = if (v - matched).abs() <= 2.0 * se {
        "inconclusive"
    } else if v < matched {
        "below"
    } else {
        "above"
    };
    Ok(QuantizationBound {
        r,
        dim: d,
        bound: v / norm,
        bound_se: se / norm,
        mean_distortion: m,
        density_norm: norm,
        poisson_bound: poisson,
        poisson_matched: matched,
        comparison: comparison.into(),
    })
}
