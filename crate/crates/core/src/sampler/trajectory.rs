use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use crate::geometry::{Point, Window, MAX_DIM};
use crate::potentials::Potential;
use crate::scalar::Scalar;

/// Resolution status of a birth of the free process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Accepted,
    Rejected,
    Undetermined,
}

/// A birth of the free birth-and-death process.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaceTimePoint<T> {
    pub position: Point<T>,
    pub birth: T,
    pub death: T,
    /// Localization mark, distributed with CDF `1 − ψ`.
    pub eta: T,
    /// Acceptance uniform in `[0, 1)`.
    pub u: T,
    pub status: Status,
}

impl<T: Scalar> SpaceTimePoint<T> {
    pub fn alive_at(&self, t: T) -> bool {
        self.birth < t && t < self.death
    }
}

/// Buckets of (time slab, spatial cell) for "alive at `t` within `r` of `x`" queries.
#[derive(Clone, Debug)]
pub(crate) struct SpaceTimeIndex<T> {
    cell: T,
    dim: usize,
    buckets: HashMap<(i64, [i64; MAX_DIM]), Vec<u32>>,
}

impl<T: Scalar> SpaceTimeIndex<T> {
    pub fn new(cell: T, dim: usize) -> Self {
        Self {
            cell,
            dim,
            buckets: HashMap::new(),
        }
    }

    fn cell_of(&self, x: &Point<T>) -> [i64; MAX_DIM] {
        let mut c = [0i64; MAX_DIM];
        for (i, ci) in c.iter_mut().enumerate().take(self.dim) {
            *ci = (x.coord(i) / self.cell).floor().to_i64().unwrap_or(0);
        }
        c
    }

    fn slab(t: T) -> i64 {
        t.floor().to_i64().unwrap_or(i64::MIN / 2)
    }

    pub fn insert(&mut self, idx: usize, p: &SpaceTimePoint<T>) {
        let c = self.cell_of(&p.position);
        for s in Self::slab(p.birth)..=Self::slab(p.death) {
            self.buckets.entry((s, c)).or_default().push(idx as u32);
        }
    }

    /// Indices of points alive at `t` within closed distance `r` of `x`,
    /// sorted increasingly.
    pub fn alive_within(
        &self,
        pts: &[SpaceTimePoint<T>],
        x: &Point<T>,
        r: T,
        t: T,
        out: &mut Vec<u32>,
    ) {
        out.clear();
        let slab = Self::slab(t);
        let r2 = r * r;
        let mut lo = [0i64; MAX_DIM];
        let mut hi = [0i64; MAX_DIM];
        for i in 0..self.dim {
            lo[i] = ((x.coord(i) - r) / self.cell)
                .floor()
                .to_i64()
                .unwrap_or(i64::MIN / 2);
            hi[i] = ((x.coord(i) + r) / self.cell)
                .floor()
                .to_i64()
                .unwrap_or(i64::MAX / 2);
        }
        let span: i64 = (0..self.dim).map(|i| hi[i] - lo[i] + 1).product();
        let mut visit = |ids: &Vec<u32>| {
            for &k in ids {
                let p = &pts[k as usize];
                if p.alive_at(t) && p.position.dist2(x) <= r2 {
                    out.push(k);
                }
            }
        };
        if span as usize > self.buckets.len() {
            for ((s, c), ids) in &self.buckets {
                if *s == slab && (0..self.dim).all(|i| c[i] >= lo[i] && c[i] <= hi[i]) {
                    visit(ids);
                }
            }
        } else {
            let mut c = lo;
            'outer: loop {
                if let Some(ids) = self.buckets.get(&(slab, c)) {
                    visit(ids);
                }
                for i in 0..self.dim {
                    if c[i] < hi[i] {
                        c[i] += 1;
                        continue 'outer;
                    }
                    c[i] = lo[i];
                }
                break;
            }
        }
        out.sort_unstable();
    }
}

/// Realization of the free process on `window × [−horizon, 0]`, plus the
/// random stream that produced it so the horizon can be pushed back.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    window: Window<T>,
    tau: T,
    horizon: T,
    births: Vec<SpaceTimePoint<T>>,
    rng: ChaCha8Rng,
    pub(crate) index: SpaceTimeIndex<T>,
}

fn poisson_count<R: Rng>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .map(|p| p.sample(rng) as u64)
        .unwrap_or(0)
}

fn exp1<R: Rng>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

fn draw_position<T: Scalar, R: Rng>(window: &Window<T>, rng: &mut R) -> Point<T> {
    let mut u = [T::zero(); MAX_DIM];
    for ui in u.iter_mut().take(window.dim()) {
        *ui = T::lit(rng.random::<f64>());
    }
    window.from_unit(&u[..window.dim()])
}

fn draw_marks<T: Scalar, P: Potential<T> + ?Sized, R: Rng>(potential: &P, rng: &mut R) -> (T, T) {
    // V uniform on (0, 1] so η = inf{r : ψ(r) ≤ V} stays finite
    let v = T::lit(1.0 - rng.random::<f64>());
    let u = T::lit(rng.random::<f64>());
    (potential.localization_radius(v), u)
}

/// Index cell matched to the interaction scale (at least 1/512 of the window side).
fn index_cell<T: Scalar, P: Potential<T> + ?Sized>(window: &Window<T>, potential: &P) -> T {
    let s = potential.interaction_scale();
    let floor = window.side() / T::lit(512.0);
    if s > T::zero() {
        s.max(floor)
    } else {
        (window.side() / T::lit(16.0)).max(floor)
    }
}

impl<T: Scalar> Trajectory<T> {
    /// Stationary free birth-and-death process with birth intensity `tau`
    /// and unit-mean exponential lifetimes.
    pub fn sample<P: Potential<T> + ?Sized>(
        window: Window<T>,
        tau: T,
        horizon: T,
        potential: &P,
        mut rng: ChaCha8Rng,
    ) -> Self {
        let vol = window.volume().as_f64();
        let h = horizon.max(T::zero());
        let mut births = Vec::new();
        let n0 = poisson_count(tau.as_f64() * vol, &mut rng);
        for _ in 0..n0 {
            let position = draw_position(&window, &mut rng);
            let age = T::lit(exp1(&mut rng));
            let residual = T::lit(exp1(&mut rng));
            let (eta, u) = draw_marks(potential, &mut rng);
            births.push(SpaceTimePoint {
                position,
                birth: -h - age,
                death: -h + residual,
                eta,
                u,
                status: Status::Undetermined,
            });
        }
        let n1 = poisson_count(tau.as_f64() * vol * h.as_f64(), &mut rng);
        for _ in 0..n1 {
            let position = draw_position(&window, &mut rng);
            let birth = -h * T::lit(rng.random::<f64>());
            let life = T::lit(exp1(&mut rng));
            let (eta, u) = draw_marks(potential, &mut rng);
            births.push(SpaceTimePoint {
                position,
                birth,
                death: birth + life,
                eta,
                u,
                status: Status::Undetermined,
            });
        }
        let mut index = SpaceTimeIndex::new(index_cell(&window, potential), window.dim());
        for (i, p) in births.iter().enumerate() {
            index.insert(i, p);
        }
        Self {
            window,
            tau,
            horizon: h,
            births,
            rng,
            index,
        }
    }

    /// Pushes the horizon back by `dt`. The new points are exactly those
    /// dying in `(−T−dt, −T)`; existing points are left untouched.
    pub fn extend_backward<P: Potential<T> + ?Sized>(&mut self, dt: T, potential: &P) {
        if !(dt > T::zero()) {
            return;
        }
        let start = self.births.len();
        let t_old = self.horizon;
        let n = poisson_count(
            self.tau.as_f64() * self.window.volume().as_f64() * dt.as_f64(),
            &mut self.rng,
        );
        for _ in 0..n {
            let position = draw_position(&self.window, &mut self.rng);
            let death = -t_old - dt * T::lit(self.rng.random::<f64>());
            let life = T::lit(exp1(&mut self.rng));
            let (eta, u) = draw_marks(potential, &mut self.rng);
            self.births.push(SpaceTimePoint {
                position,
                birth: death - life,
                death,
                eta,
                u,
                status: Status::Undetermined,
            });
        }
        for i in start..self.births.len() {
            let p = self.births[i];
            self.index.insert(i, &p);
        }
        self.horizon = t_old + dt;
    }

    pub fn window(&self) -> &Window<T> {
        &self.window
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn births(&self) -> &[SpaceTimePoint<T>] {
        &self.births
    }

    pub(crate) fn births_mut(&mut self) -> &mut [SpaceTimePoint<T>] {
        &mut self.births
    }

    /// Indices of the points alive at time `t`.
    pub fn alive_at(&self, t: T) -> Vec<usize> {
        (0..self.births.len())
            .filter(|&i| self.births[i].alive_at(t))
            .collect()
    }

    /// Points alive at `t` with time in `[−horizon, 0]`, i.e. the restriction
    /// of the process to the realized time span.
    pub fn restricted_to(&self, t_from: T) -> Vec<SpaceTimePoint<T>> {
        self.births
            .iter()
            .copied()
            .filter(|p| p.death > t_from)
            .collect()
    }
}

/// Free process on `window × [−horizon, 0]`.
pub fn sample_free_trajectory<T: Scalar, P: Potential<T> + ?Sized>(
    window: Window<T>,
    tau: T,
    horizon: T,
    potential: &P,
    rng: ChaCha8Rng,
) -> Trajectory<T> {
    Trajectory::sample(window, tau, horizon, potential, rng)
}

/// Pushes the horizon of `traj` back by `dt`.
pub fn extend_backward<T: Scalar, P: Potential<T> + ?Sized>(
    traj: &mut Trajectory<T>,
    dt: T,
    potential: &P,
) {
    traj.extend_backward(dt, potential)
}
