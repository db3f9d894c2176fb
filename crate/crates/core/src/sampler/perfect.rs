use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{PointConfiguration, Window};
use crate::potentials::Potential;
use crate::rng::{Purpose, StreamFactory};
use crate::sampler::resolve::Resolver;
use crate::sampler::trajectory::{Status, Trajectory};
use crate::scalar::Scalar;
use crate::stats::{survival_tail_fit, TailFit};

/// Finite-volume sampling targets the Gibbs law on the window itself; the
/// thermodynamic mode simulates on an enlarged window and keeps the points
/// of the target window, approximating the infinite-volume process.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SamplingMode<T> {
    FiniteVolume,
    Thermodynamic { margin: T },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerOptions<T> {
    pub t0: T,
    pub t_max: T,
    pub mode: SamplingMode<T>,
    /// Attach i.i.d. uniform arrival marks (needed by RSA).
    pub with_marks: bool,
}

impl<T: Scalar> Default for SamplerOptions<T> {
    fn default() -> Self {
        Self {
            t0: T::lit(5.0),
            t_max: T::lit(640.0),
            mode: SamplingMode::FiniteVolume,
            with_marks: false,
        }
    }
}

impl<T: Scalar> SamplerOptions<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.t0 > T::zero()) || !(self.t_max >= self.t0) {
            return Err(Error::InvalidInput(format!(
                "need 0 < t0 <= t_max, got t0 = {}, t_max = {}",
                self.t0, self.t_max
            )));
        }
        if let SamplingMode::Thermodynamic { margin } = self.mode {
            if !(margin >= T::zero()) || !margin.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "margin must be finite and non-negative, got {margin}"
                )));
            }
        }
        Ok(())
    }
}

/// One perfect sample plus the bookkeeping of how it was obtained.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleReport<T> {
    /// Accepted points alive at time 0 inside the target window.
    #[serde(skip)]
    pub configuration: PointConfiguration<T>,
    /// All free-process points alive at time 0 inside the target window;
    /// the sample is a subset of it.
    #[serde(skip)]
    pub free_configuration: PointConfiguration<T>,
    pub horizon_used: f64,
    pub extension_count: usize,
    pub max_clan_diameter: f64,
    pub max_clan_size: usize,
    /// Clan diameter of every free point alive at time 0 in the target window.
    #[serde(skip)]
    pub clan_diameters: Vec<f64>,
    pub margin: f64,
    /// Emitted-window roots whose clans come within the interaction scale of
    /// the simulation window's boundary.
    pub boundary_contacts: usize,
    pub trajectory_points: usize,
}

/// Perfect sample of the Gibbs process on `window` via backward ancestor clans.
///
/// Starts with horizon `t0` and doubles it, reusing all randomness, until
/// every point alive at time 0 is resolved; beyond `t_max` a clan explosion
/// is reported.
pub fn perfect_sample<T: Scalar, P: Potential<T> + ?Sized>(
    window: &Window<T>,
    tau: T,
    potential: &P,
    streams: &StreamFactory,
    rep: u64,
    opts: &SamplerOptions<T>,
) -> Result<SampleReport<T>> {
    opts.validate()?;
    if !(tau > T::zero()) || !tau.is_finite() {
        return Err(Error::InvalidInput(format!(
            "intensity must be positive, got {tau}"
        )));
    }
    let margin = match opts.mode {
        SamplingMode::FiniteVolume => T::zero(),
        SamplingMode::Thermodynamic { margin } => margin,
    };
    let sim_window = window.enlarged(margin);
    let mut traj = Trajectory::sample(
        sim_window,
        tau,
        opts.t0,
        potential,
        streams.stream(rep, Purpose::Trajectory),
    );
    let mut resolver = Resolver::new();
    let roots: Vec<usize> = traj
        .alive_at(T::zero())
        .into_iter()
        .filter(|&i| window.contains(&traj.births()[i].position))
        .collect();
    let mut extensions = 0;
    loop {
        resolver.resolve(&traj, potential, &roots)?;
        let open = roots
            .iter()
            .filter(|&&i| resolver.status(i) == Some(Status::Undetermined))
            .count();
        if open == 0 {
            break;
        }
        if traj.horizon() >= opts.t_max {
            return Err(Error::ClanExplosion(format!(
                "{open} points still undetermined at horizon {} (t_max {})",
                traj.horizon(),
                opts.t_max
            )));
        }
        let dt = traj.horizon().min(opts.t_max - traj.horizon());
        traj.extend_backward(dt, potential);
        extensions += 1;
    }

    let dim = window.dim();
    let mut pts = Vec::new();
    let mut free = Vec::new();
    let mut diameters = Vec::with_capacity(roots.len());
    let mut max_size = 0;
    let mut contacts = 0;
    let mut stamp = Vec::new();
    let scale = potential.interaction_scale();
    for &i in &roots {
        let p = traj.births()[i];
        free.push(p.position);
        if resolver.status(i) == Some(Status::Accepted) {
            pts.push(p.position);
        }
        let clan = resolver.clan(&traj, i, &mut stamp);
        diameters.push(clan.diameter.as_f64());
        max_size = max_size.max(clan.members.len());
        if margin > T::zero()
            && clan
                .members
                .iter()
                .any(|&m| sim_window.distance_to_boundary(&traj.births()[m].position) < scale)
        {
            contacts += 1;
        }
    }
    let mut configuration = PointConfiguration::from_points(dim, pts)?;
    if opts.with_marks {
        let mut rng = streams.stream(rep, Purpose::Marks);
        let marks = (0..configuration.len())
            .map(|_| T::lit(rng.random::<f64>()))
            .collect();
        configuration = configuration.with_marks(marks)?;
    }
    Ok(SampleReport {
        configuration,
        free_configuration: PointConfiguration::from_points(dim, free)?,
        horizon_used: traj.horizon().as_f64(),
        extension_count: extensions,
        max_clan_diameter: diameters.iter().copied().fold(0.0, f64::max),
        max_clan_size: max_size,
        clan_diameters: diameters,
        margin: margin.as_f64(),
        boundary_contacts: contacts,
        trajectory_points: traj.births().len(),
    })
}

/// Boundary margin for the thermodynamic mode, fitted from pilot clans.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MarginEstimate {
    pub margin: f64,
    /// Log-survival fit of pilot clan diameters, when one was possible.
    #[serde(skip)]
    pub fit: Option<TailFit>,
    /// Fitted probability that a clan is wider than the margin.
    pub tail_probability: f64,
    pub pilot_clans: usize,
}

/// Radius where the fitted clan-diameter survival drops below `p_tail`
/// (default use: 1e−4), plus the interaction scale. Pilot samples are
/// finite-volume on a cube of side `max(12·scale, 4)`; only clans rooted in
/// its central half enter the fit.
pub fn estimate_margin<T: Scalar, P: Potential<T> + ?Sized>(
    dim: usize,
    tau: T,
    potential: &P,
    streams: &StreamFactory,
    p_tail: f64,
    t_max: T,
) -> Result<MarginEstimate> {
    let scale = potential.interaction_scale().as_f64();
    if potential.is_trivial() || scale == 0.0 {
        return Ok(MarginEstimate {
            margin: 0.0,
            fit: None,
            tail_probability: 0.0,
            pilot_clans: 0,
        });
    }
    let half = (6.0 * scale).max(2.0);
    let pilot = Window::new(T::lit(half), dim)?;
    let inner = Window::new(T::lit(half / 2.0), dim)?;
    let opts = SamplerOptions {
        t0: T::lit(5.0),
        t_max,
        mode: SamplingMode::FiniteVolume,
        with_marks: false,
    };
    let child = streams.child(0x5049_4c4f_54);
    let mut diam = Vec::new();
    let mut rep = 0;
    while diam.len() < 2000 && rep < 400 {
        let r = perfect_sample(&pilot, tau, potential, &child, rep, &opts)?;
        for (k, p) in r.free_configuration.iter().enumerate() {
            if inner.contains(p) {
                diam.push(r.clan_diameters[k]);
            }
        }
        rep += 1;
    }
    let fit = survival_tail_fit(&diam, 20).ok().filter(|f| f.slope < 0.0);
    let (margin, tail) = match fit {
        Some(f) => {
            let q = f.quantile(p_tail).min(40.0 * scale);
            (q + scale, f.survival(q))
        }
        None => {
            let max = diam.iter().copied().fold(0.0, f64::max);
            (max + scale, 0.0)
        }
    };
    Ok(MarginEstimate {
        margin,
        fit,
        tail_probability: tail,
        pilot_clans: diam.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{HardCore, NoInteraction};
    use crate::sampler::trajectory::Trajectory;

    #[test]
    fn poisson_sample_is_the_free_snapshot() {
        let w = Window::new(2.0, 2).unwrap();
        let f = StreamFactory::new(4);
        let r = perfect_sample(&w, 2.0, &NoInteraction, &f, 0, &SamplerOptions::default()).unwrap();
        let t = Trajectory::sample(
            w,
            2.0,
            5.0,
            &NoInteraction,
            f.stream(0, Purpose::Trajectory),
        );
        let snap: Vec<_> = t
            .alive_at(0.0)
            .into_iter()
            .map(|i| t.births()[i].position)
            .collect();
        assert_eq!(r.configuration.points(), &snap[..]);
        assert_eq!(r.extension_count, 0);
        assert_eq!(r.max_clan_diameter, 0.0);
    }

    #[test]
    fn hard_core_samples_are_feasible_and_dominated() {
        let w = Window::new(3.0, 2).unwrap();
        let hc = HardCore::new(0.2).unwrap();
        let f = StreamFactory::new(8);
        for rep in 0..30 {
            let r = perfect_sample(&w, 1.0, &hc, &f, rep, &SamplerOptions::default()).unwrap();
            let p = r.configuration.points();
            for i in 0..p.len() {
                assert!(r.free_configuration.position_of(&p[i]).is_some());
                for j in i + 1..p.len() {
                    assert!(p[i].dist(&p[j]) >= 0.4);
                }
            }
        }
    }

    #[test]
    fn identical_seeds_give_identical_reports() {
        let w = Window::new(2.0, 2).unwrap();
        let hc = HardCore::new(0.2).unwrap();
        let f = StreamFactory::new(99);
        let opts = SamplerOptions {
            with_marks: true,
            ..SamplerOptions::default()
        };
        let a = perfect_sample(&w, 1.5, &hc, &f, 3, &opts).unwrap();
        let b = perfect_sample(&w, 1.5, &hc, &f, 3, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.configuration.marks().is_some());
    }

    #[test]
    fn explosion_is_reported() {
        let w = Window::new(3.0, 2).unwrap();
        let hc = HardCore::new(0.5).unwrap();
        let opts = SamplerOptions {
            t0: 1.0,
            t_max: 2.0,
            ..SamplerOptions::default()
        };
        let r = perfect_sample(&w, 8.0, &hc, &StreamFactory::new(1), 0, &opts);
        assert!(matches!(r, Err(Error::ClanExplosion(_))));
    }

    #[test]
    fn thermodynamic_mode_emits_only_target_points() {
        let w = Window::new(2.0, 2).unwrap();
        let hc = HardCore::new(0.15).unwrap();
        let f = StreamFactory::new(5);
        let m = estimate_margin(2, 1.0, &hc, &f, 1e-4, 640.0).unwrap();
        assert!(m.margin >= 0.3, "{m:?}");
        let opts = SamplerOptions {
            mode: SamplingMode::Thermodynamic { margin: m.margin },
            ..SamplerOptions::default()
        };
        let r = perfect_sample(&w, 1.0, &hc, &f, 0, &opts).unwrap();
        assert!(r.configuration.iter().all(|p| w.contains(p)));
        assert_eq!(r.margin, m.margin);
    }
}
