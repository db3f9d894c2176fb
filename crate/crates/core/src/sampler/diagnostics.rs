use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ball_volume, Point, Window};
use crate::sampler::perfect::SampleReport;
use crate::scalar::Scalar;
use crate::stats::{linear_fit, mean, survival_tail_fit, variance, LinearFit, TailFit};

/// Summary of clan diameters over many samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClanDiagnostics {
    pub clans: usize,
    pub mean_diameter: f64,
    pub max_diameter: f64,
    /// Log-survival fit over the upper half of the support; absent when every
    /// clan is a single point.
    #[serde(skip)]
    pub fit: Option<TailFit>,
}

/// Pools the clan diameters of `reports` and fits their tail.
pub fn clan_diagnostics<T: Scalar>(reports: &[SampleReport<T>]) -> Result<ClanDiagnostics> {
    let d: Vec<f64> = reports
        .iter()
        .flat_map(|r| r.clan_diameters.iter().copied())
        .collect();
    if d.len() < 1000 {
        return Err(Error::InsufficientData(format!(
            "need at least 1000 clans, got {}",
            d.len()
        )));
    }
    let max = d.iter().copied().fold(0.0, f64::max);
    let fit = if max > 0.0 {
        Some(survival_tail_fit(&d, 20)?)
    } else {
        None
    };
    Ok(ClanDiagnostics {
        clans: d.len(),
        mean_diameter: mean(&d),
        max_diameter: max,
        fit,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmptyBallPoint {
    pub r: f64,
    pub probability: f64,
    pub std_error: f64,
    /// `exp(−τ ω_d r^d)`, the void probability of the dominating Poisson process.
    pub poisson: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoissonLikeReport {
    pub samples: usize,
    /// Mean and variance of per-cell counts, Gibbs sample vs free snapshot.
    pub cell_mean: f64,
    pub cell_variance: f64,
    pub free_cell_mean: f64,
    pub free_cell_variance: f64,
    pub empty_ball: Vec<EmptyBallPoint>,
    /// Fit of `log P[empty ball]` against `r^d`.
    #[serde(skip)]
    pub empty_ball_fit: Option<LinearFit>,
}

/// Domination check and empty-ball curve.
///
/// Panics if some sample is not contained in its own free snapshot, which
/// would be a sampler bug.
pub fn poisson_like_diagnostics<T: Scalar>(
    reports: &[SampleReport<T>],
    window: &Window<T>,
    tau: f64,
    radii: &[f64],
    cells_per_side: usize,
) -> Result<PoissonLikeReport> {
    if reports.is_empty() {
        return Err(Error::InsufficientData("no samples".into()));
    }
    let d = window.dim();
    let h = window.half_width().as_f64();
    let k = cells_per_side.max(1);
    let cell_of = |p: &Point<T>| -> usize {
        let mut idx = 0;
        for i in 0..d {
            let c = (((p.coord(i).as_f64() + h) / (2.0 * h)) * k as f64)
                .floor()
                .clamp(0.0, (k - 1) as f64) as usize;
            idx = idx * k + c;
        }
        idx
    };
    let ncell = k.pow(d as u32);
    let mut counts = Vec::new();
    let mut free_counts = Vec::new();
    for r in reports {
        for p in r.configuration.iter() {
            assert!(
                r.free_configuration.position_of(p).is_some(),
                "pathwise domination violated: {p:?} is not in the free snapshot"
            );
        }
        let mut c = vec![0f64; ncell];
        let mut f = vec![0f64; ncell];
        for p in r.configuration.iter() {
            c[cell_of(p)] += 1.0;
        }
        for p in r.free_configuration.iter() {
            f[cell_of(p)] += 1.0;
        }
        for (a, b) in c.iter().zip(&f) {
            assert!(a <= b);
        }
        counts.extend(c);
        free_counts.extend(f);
    }

    let rmax = radii.iter().copied().fold(0.0, f64::max);
    let grid = [-0.5 * h, 0.0, 0.5 * h];
    let mut probes: Vec<Point<T>> = Vec::new();
    for a in 0..3usize.pow(d as u32) {
        let mut c = [T::zero(); 3];
        let mut z = a;
        for ci in c.iter_mut().take(d) {
            *ci = T::lit(grid[z % 3]);
            z /= 3;
        }
        let p = Point::new(&c[..d])?;
        if window.distance_to_boundary(&p).as_f64() >= rmax {
            probes.push(p);
        }
    }
    if probes.is_empty() {
        probes.push(Point::origin(d));
    }
    let mut empty_ball = Vec::new();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &r in radii {
        let mut hits = Vec::new();
        for rep in reports {
            for c in &probes {
                let r2 = T::lit(r * r);
                let empty = rep.configuration.iter().all(|p| p.dist2(c) > r2);
                hits.push(if empty { 1.0 } else { 0.0 });
            }
        }
        let p = mean(&hits);
        let se = (p * (1.0 - p) / hits.len() as f64).sqrt();
        empty_ball.push(EmptyBallPoint {
            r,
            probability: p,
            std_error: se,
            poisson: (-tau * ball_volume(d, r)).exp(),
        });
        if p > 0.0 && p * hits.len() as f64 >= 5.0 {
            xs.push(r.powi(d as i32));
            ys.push(p.ln());
        }
    }
    Ok(PoissonLikeReport {
        samples: reports.len(),
        cell_mean: mean(&counts),
        cell_variance: variance(&counts),
        free_cell_mean: mean(&free_counts),
        free_cell_variance: variance(&free_counts),
        empty_ball,
        empty_ball_fit: linear_fit(&xs, &ys).ok(),
    })
}
