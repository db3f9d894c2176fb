use quadrature::double_exponential::integrate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::knn::typical_spacing;
use crate::functionals::Functional;
use crate::geometry::polyhedron::{cell_polyhedron, Polyhedron, V3};
use crate::geometry::{GridIndex, Point, PointConfiguration, Voronoi2d, Window};
use crate::scalar::Scalar;

/// Relative accuracy requested from the planar and linear integrals.
const TOL: f64 = 1e-12;

/// Target density `h` on the unit cube `[-1/2, 1/2]^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Density {
    Uniform,
    /// `h(u) = intercept + slope·u`.
    Affine {
        intercept: f64,
        slope: Vec<f64>,
    },
    /// Values on a regular grid of nodes spanning the cube (`shape[i] ≥ 2`
    /// nodes along axis `i`, first axis fastest), interpolated multilinearly.
    Table {
        shape: Vec<usize>,
        values: Vec<f64>,
    },
}

impl Density {
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            Density::Uniform => Ok(()),
            Density::Affine { intercept, slope } => {
                if slope.len() != d
                    || !intercept.is_finite()
                    || slope.iter().any(|s| !s.is_finite())
                {
                    return Err(Error::InvalidInput(format!(
                        "affine density needs {d} finite slopes"
                    )));
                }
                Ok(())
            }
            Density::Table { shape, values } => {
                if shape.len() != d || shape.iter().any(|&n| n < 2) {
                    return Err(Error::InvalidInput(format!(
                        "density table needs {d} axes of at least 2 nodes"
                    )));
                }
                if shape.iter().product::<usize>() != values.len()
                    || values.iter().any(|v| !v.is_finite())
                {
                    return Err(Error::InvalidInput(
                        "density table size does not match its shape".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, Density::Uniform)
    }

    /// `h(u)`; arguments outside the cube are clamped onto it.
    pub fn eval(&self, u: &[f64]) -> f64 {
        match self {
            Density::Uniform => 1.0,
            Density::Affine { intercept, slope } => affine_eval(*intercept, slope, u),
            Density::Table { shape, values } => table_eval(shape, values, u),
        }
    }

    /// `(∫ max(h, 0)^p)^{1/p}` over the unit cube by the midpoint rule.
    pub fn lp_norm(&self, d: usize, p: f64) -> f64 {
        if self.is_uniform() {
            return 1.0;
        }
        let m: usize = match d {
            1 => 100_000,
            2 => 1000,
            _ => 100,
        };
        let cells = m.pow(d as u32);
        let mut s = 0.0;
        let mut u = [0.0; 3];
        for k in 0..cells {
            let mut z = k;
            for ui in u.iter_mut().take(d) {
                *ui = ((z % m) as f64 + 0.5) / m as f64 - 0.5;
                z /= m;
            }
            s += self.eval(&u[..d]).max(0.0).powf(p);
        }
        (s / cells as f64).powf(1.0 / p)
    }
}

pub(crate) fn affine_eval(intercept: f64, slope: &[f64], u: &[f64]) -> f64 {
    intercept + slope.iter().zip(u).map(|(a, b)| a * b).sum::<f64>()
}

/// Multilinear interpolation on a node grid spanning `[-1/2, 1/2]^d`.
pub(crate) fn table_eval(shape: &[usize], values: &[f64], u: &[f64]) -> f64 {
    let d = shape.len();
    let mut base = [0usize; 3];
    let mut frac = [0.0f64; 3];
    for i in 0..d {
        let g = (u[i].clamp(-0.5, 0.5) + 0.5) * (shape[i] - 1) as f64;
        let j = (g.floor() as usize).min(shape[i] - 2);
        base[i] = j;
        frac[i] = g - j as f64;
    }
    let mut out = 0.0;
    for corner in 0..(1usize << d) {
        let mut w = 1.0;
        let mut idx = 0;
        let mut stride = 1;
        for i in 0..d {
            let bit = (corner >> i) & 1;
            w *= if bit == 1 { frac[i] } else { 1.0 - frac[i] };
            idx += (base[i] + bit) * stride;
            stride *= shape[i];
        }
        if w > 0.0 {
            out += w * values[idx];
        }
    }
    out
}

/// Axis-aligned clipping box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClipBox<T> {
    pub center: Point<T>,
    pub half_width: T,
}

impl<T: Scalar> ClipBox<T> {
    pub fn new(center: Point<T>, half_width: T) -> Self {
        Self { center, half_width }
    }

    pub fn from_window(w: &Window<T>) -> Self {
        Self {
            center: Point::origin(w.dim()),
            half_width: w.half_width(),
        }
    }

    pub fn translate(&self, z: &Point<T>) -> Self {
        Self {
            center: self.center.add(z),
            half_width: self.half_width,
        }
    }
}

/// `ξ`, the density-weighted `ξ̂` and their difference `δ = ξ̂ − ξ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuantizationValue {
    pub xi: f64,
    pub xi_hat: f64,
    pub delta: f64,
}

/// Distortion `∫_{C(x,X)} |y − x|^r dy` of the Voronoi cell (clipped to a box
/// when one is set), optionally weighted by `h(λ^{-1/d} y) / h(λ^{-1/d} x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Quantization<T> {
    r: f64,
    clip: Option<ClipBox<T>>,
    density: Density,
    lambda: f64,
    floor: f64,
}

/// Cell geometry relative to its site.
enum Cell {
    Interval(f64, f64),
    Polygon(Vec<[f64; 2]>),
    Polyhedron(Polyhedron),
}

enum Prepared<T> {
    Line(Vec<usize>, Vec<usize>),
    Plane(Voronoi2d<T>),
    Space(GridIndex<T>, f64),
}

impl<T: Scalar> Quantization<T> {
    pub fn new(r: f64) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::InvalidInput(format!(
                "distortion exponent must be non-negative, got {r}"
            )));
        }
        Ok(Self {
            r,
            clip: None,
            density: Density::Uniform,
            lambda: 1.0,
            floor: 0.0,
        })
    }

    pub fn with_clip(mut self, clip: ClipBox<T>) -> Self {
        self.clip = Some(clip);
        self
    }

    /// Weights by `h` evaluated after rescaling positions by `λ^{-1/d}`.
    pub fn with_density(mut self, density: Density, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidInput(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        self.density = density;
        self.lambda = lambda;
        Ok(self)
    }

    /// Replaces `h` by `max(h, floor)`.
    pub fn with_floor(mut self, floor: f64) -> Result<Self> {
        if !(floor >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "density floor must be non-negative, got {floor}"
            )));
        }
        self.floor = floor;
        Ok(self)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn clip(&self) -> Option<&ClipBox<T>> {
        self.clip.as_ref()
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `max(h, floor)` at the rescaled position `λ^{-1/d} x`.
    pub fn site_density(&self, x: &Point<T>) -> f64 {
        let y: Vec<f64> = x.coords().iter().map(|c| c.as_f64()).collect();
        self.h(&y, self.lambda.powf(-1.0 / y.len() as f64))
    }

    /// Atom weights `h(x)·ξ̂(x)` of the distortion measure against `h`; equal
    /// to `ξ` for the uniform density.
    pub fn atom_weights(&self, cfg: &PointConfiguration<T>) -> Result<Vec<f64>> {
        let v = self.decompose_all(cfg)?;
        if self.density.is_uniform() {
            return Ok(v.into_iter().map(|q| q.xi).collect());
        }
        Ok(v.iter()
            .zip(cfg.iter())
            .map(|(q, p)| q.xi_hat * self.site_density(p))
            .collect())
    }

    /// A copy with the clip box shifted by `z`.
    pub fn translated(&self, z: &Point<T>) -> Self {
        let mut q = self.clone();
        q.clip = self.clip.map(|c| c.translate(z));
        q
    }

    /// `ξ`, `ξ̂` and `δ` for every point.
    pub fn decompose_all(&self, cfg: &PointConfiguration<T>) -> Result<Vec<QuantizationValue>> {
        let prep = self.prepare(cfg)?;
        (0..cfg.len())
            .into_par_iter()
            .map(|i| self.decompose_at(cfg, &prep, i))
            .collect()
    }

    /// `ξ`, `ξ̂` and `δ` at `x` (inserted into `X` when absent).
    pub fn decompose(
        &self,
        x: &Point<T>,
        cfg: &PointConfiguration<T>,
    ) -> Result<QuantizationValue> {
        let (c, i) = cfg.with_point(x, None)?;
        let prep = self.prepare(&c)?;
        self.decompose_at(&c, &prep, i)
    }

    fn prepare(&self, cfg: &PointConfiguration<T>) -> Result<Prepared<T>> {
        if let Some(c) = &self.clip {
            if c.center.dim() != cfg.dim() {
                return Err(Error::InvalidInput(
                    "clip box dimension differs from the configuration".into(),
                ));
            }
        }
        self.density.validate(cfg.dim())?;
        Ok(match cfg.dim() {
            1 => {
                let mut order: Vec<usize> = (0..cfg.len()).collect();
                order.sort_by(|&a, &b| cfg.point(a).lex_cmp(cfg.point(b)).then(a.cmp(&b)));
                let mut rank = vec![0; cfg.len()];
                for (k, &i) in order.iter().enumerate() {
                    rank[i] = k;
                }
                Prepared::Line(order, rank)
            }
            2 => Prepared::Plane(Voronoi2d::new(cfg)?),
            3 => {
                let cell = if cfg.is_empty() {
                    T::one()
                } else {
                    typical_spacing(cfg, 1)
                };
                let index = GridIndex::new(cfg.points().to_vec(), cell)?;
                let mut ext = 0.0f64;
                for p in cfg.iter() {
                    for i in 0..3 {
                        ext = ext.max(p.coord(i).as_f64().abs());
                    }
                }
                Prepared::Space(index, ext)
            }
            d => return Err(Error::UnsupportedDimension(d)),
        })
    }

    fn cell(&self, cfg: &PointConfiguration<T>, prep: &Prepared<T>, i: usize) -> Result<Cell> {
        let site = cfg.point(i);
        let rel_box = |k: usize| -> Option<(f64, f64)> {
            self.clip.map(|c| {
                (
                    (c.center.coord(k) - site.coord(k)).as_f64(),
                    c.half_width.as_f64(),
                )
            })
        };
        match prep {
            Prepared::Line(order, rank) => {
                let x = site.coord(0).as_f64();
                let k = rank[i];
                let mut lo = f64::NEG_INFINITY;
                let mut hi = f64::INFINITY;
                if k > 0 {
                    let l = cfg.point(order[k - 1]).coord(0).as_f64();
                    if l == x {
                        return Err(Error::DegenerateSite(format!("duplicate point at {x}")));
                    }
                    lo = 0.5 * (l - x);
                }
                if k + 1 < order.len() {
                    let r = cfg.point(order[k + 1]).coord(0).as_f64();
                    if r == x {
                        return Err(Error::DegenerateSite(format!("duplicate point at {x}")));
                    }
                    hi = 0.5 * (r - x);
                }
                if let Some((c, h)) = rel_box(0) {
                    lo = lo.max(c - h);
                    hi = hi.min(c + h);
                }
                if !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::InvalidInput(
                        "unbounded Voronoi cell; set a clip box".into(),
                    ));
                }
                Ok(Cell::Interval(lo, hi.max(lo)))
            }
            Prepared::Plane(vor) => {
                let poly = match &self.clip {
                    Some(c) => {
                        vor.polygon_in_box(i, [c.center.coord(0), c.center.coord(1)], c.half_width)?
                    }
                    None => {
                        let p = vor.unclipped_polygon(i)?;
                        if p.lab
                            .iter()
                            .any(|l| matches!(l, crate::geometry::EdgeSource::Boundary))
                        {
                            return Err(Error::InvalidInput(
                                "unbounded Voronoi cell; set a clip box".into(),
                            ));
                        }
                        p
                    }
                };
                Ok(Cell::Polygon(
                    poly.v
                        .iter()
                        .map(|v| [v[0].as_f64(), v[1].as_f64()])
                        .collect(),
                ))
            }
            Prepared::Space(index, ext) => {
                let eps = 1e-12 * (ext + 1.0);
                let cube = match (rel_box(0), rel_box(1), rel_box(2)) {
                    (Some((a, h)), Some((b, _)), Some((c, _))) => Polyhedron::cube([a, b, c], h),
                    _ => Polyhedron::cube([0.0; 3], 1e4 * (2.0 * ext + 1.0)),
                };
                let poly = cell_polyhedron(index, i, cube, eps)?;
                if self.clip.is_none() && poly.faces.iter().any(|f| f.boundary) {
                    return Err(Error::InvalidInput(
                        "unbounded Voronoi cell; set a clip box".into(),
                    ));
                }
                Ok(Cell::Polyhedron(poly))
            }
        }
    }

    fn decompose_at(
        &self,
        cfg: &PointConfiguration<T>,
        prep: &Prepared<T>,
        i: usize,
    ) -> Result<QuantizationValue> {
        let cell = self.cell(cfg, prep, i)?;
        let xi = unweighted(&cell, self.r);
        if self.density.is_uniform() {
            return Ok(QuantizationValue {
                xi,
                xi_hat: xi,
                delta: 0.0,
            });
        }
        let d = cfg.dim();
        let site: Vec<f64> = cfg.point(i).coords().iter().map(|c| c.as_f64()).collect();
        let s = self.lambda.powf(-1.0 / d as f64);
        let hx = self.h(&site, s);
        if hx <= 0.0 {
            return Err(Error::DensityFloor {
                value: hx,
                location: format!("{site:?}"),
            });
        }
        let w = |rel: &[f64]| {
            let mut y = [0.0; 3];
            for k in 0..d {
                y[k] = site[k] + rel[k];
            }
            self.h(&y[..d], s) / hx
        };
        let xi_hat = weighted(&cell, self.r, &w);
        Ok(QuantizationValue {
            xi,
            xi_hat,
            delta: xi_hat - xi,
        })
    }

    fn h(&self, y: &[f64], s: f64) -> f64 {
        let mut u = [0.0; 3];
        for (k, v) in y.iter().enumerate() {
            u[k] = v * s;
        }
        self.density.eval(&u[..y.len()]).max(self.floor)
    }
}

/// `∫_0^1 g`, split at `t0` when it lies inside, to relative accuracy `TOL` of `scale`.
fn integrate_split(g: impl Fn(f64) -> f64, t0: f64, scale: f64) -> f64 {
    let target = (TOL * scale).max(1e-300);
    if t0 > 0.0 && t0 < 1.0 {
        integrate(&g, 0.0, t0, target).integral + integrate(&g, t0, 1.0, target).integral
    } else {
        integrate(&g, 0.0, 1.0, target).integral
    }
}

fn norm2(p: &[f64; 2]) -> f64 {
    (p[0] * p[0] + p[1] * p[1]).sqrt()
}

/// Antiderivative of `|s|^r` vanishing at zero.
fn power_primitive(s: f64, r: f64) -> f64 {
    s.signum() * s.abs().powf(r + 1.0) / (r + 1.0)
}

fn unweighted(cell: &Cell, r: f64) -> f64 {
    match cell {
        Cell::Interval(lo, hi) => power_primitive(*hi, r) - power_primitive(*lo, r),
        Cell::Polygon(v) => {
            let n = v.len();
            let mut total = 0.0;
            for k in 0..n {
                let (a, b) = (v[k], v[(k + 1) % n]);
                let cr = a[0] * b[1] - a[1] * b[0];
                if cr == 0.0 {
                    continue;
                }
                let e = [b[0] - a[0], b[1] - a[1]];
                let t0 = -(a[0] * e[0] + a[1] * e[1]) / (e[0] * e[0] + e[1] * e[1]);
                let scale = norm2(&a).max(norm2(&b)).powf(r);
                let seg = integrate_split(
                    |t| norm2(&[a[0] + t * e[0], a[1] + t * e[1]]).powf(r),
                    t0,
                    scale,
                );
                total += cr * seg / (r + 2.0);
            }
            total
        }
        Cell::Polyhedron(p) => {
            polyhedron_integral(p, r, |pt, _| len3(pt).powf(r) / (r + 3.0), 1e-8)
        }
    }
}

fn weighted(cell: &Cell, r: f64, w: &dyn Fn(&[f64]) -> f64) -> f64 {
    match cell {
        Cell::Interval(lo, hi) => {
            let g = |s: f64| s.abs().powf(r) * w(&[s]);
            let scale = lo.abs().max(hi.abs()).powf(r) * (hi - lo);
            let target = (TOL * scale).max(1e-300);
            let mut total = 0.0;
            if *lo < 0.0 {
                total += integrate(g, *lo, hi.min(0.0), target).integral;
            }
            if *hi > 0.0 {
                total += integrate(g, lo.max(0.0), *hi, target).integral;
            }
            total
        }
        Cell::Polygon(v) => {
            let n = v.len();
            let mut total = 0.0;
            for k in 0..n {
                let (a, b) = (v[k], v[(k + 1) % n]);
                let cr = a[0] * b[1] - a[1] * b[0];
                if cr == 0.0 {
                    continue;
                }
                let e = [b[0] - a[0], b[1] - a[1]];
                let t0 = -(a[0] * e[0] + a[1] * e[1]) / (e[0] * e[0] + e[1] * e[1]);
                let scale = norm2(&a).max(norm2(&b)).powf(r);
                let seg = integrate_split(
                    |t| {
                        let p = [a[0] + t * e[0], a[1] + t * e[1]];
                        let pr = norm2(&p).powf(r);
                        let inner = |tau: f64| tau.powf(r + 1.0) * w(&[tau * p[0], tau * p[1]]);
                        pr * integrate(inner, 0.0, 1.0, 1e-13).integral
                    },
                    t0,
                    scale,
                );
                total += cr * seg;
            }
            total
        }
        Cell::Polyhedron(p) => polyhedron_integral(
            p,
            r,
            |pt, _| {
                let inner =
                    |tau: f64| tau.powf(r + 2.0) * w(&[tau * pt[0], tau * pt[1], tau * pt[2]]);
                len3(pt).powf(r) * integrate(inner, 0.0, 1.0, 1e-11).integral
            },
            1e-6,
        ),
    }
}

fn len3(p: &V3) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

/// `Σ_faces c_f ∫_{face} g(p) dA`: the cone decomposition of a polyhedral
/// integral from the origin. Each face is fanned from the foot of the
/// perpendicular so that `|p|` is smallest at a triangle apex, where the
/// collapsed-square map puts its Jacobian zero.
fn polyhedron_integral(poly: &Polyhedron, r: f64, g: impl Fn(&V3, f64) -> f64, tol: f64) -> f64 {
    let mut total = 0.0;
    for f in &poly.faces {
        if f.c == 0.0 {
            continue;
        }
        let foot = [f.n[0] * f.c, f.n[1] * f.c, f.n[2] * f.c];
        let m = f.v.len();
        let mut face_total = 0.0;
        for k in 0..m {
            let (b, c) = (f.v[k], f.v[(k + 1) % m]);
            let ab = [b[0] - foot[0], b[1] - foot[1], b[2] - foot[2]];
            let ac = [c[0] - foot[0], c[1] - foot[1], c[2] - foot[2]];
            let cr = [
                ab[1] * ac[2] - ab[2] * ac[1],
                ab[2] * ac[0] - ab[0] * ac[2],
                ab[0] * ac[1] - ab[1] * ac[0],
            ];
            let area2 = cr[0] * f.n[0] + cr[1] * f.n[1] + cr[2] * f.n[2];
            if area2 == 0.0 {
                continue;
            }
            let scale = len3(&b).max(len3(&c)).powf(r);
            let outer = |u: f64| {
                let inner = |v: f64| {
                    let p = [
                        foot[0] + u * (ab[0] + v * (ac[0] - ab[0])),
                        foot[1] + u * (ab[1] + v * (ac[1] - ab[1])),
                        foot[2] + u * (ab[2] + v * (ac[2] - ab[2])),
                    ];
                    g(&p, u)
                };
                u * integrate(inner, 0.0, 1.0, tol * scale).integral
            };
            face_total += area2 * integrate(outer, 0.0, 1.0, tol * scale).integral;
        }
        total += f.c * face_total;
    }
    total
}

impl<T: Scalar> Functional<T> for Quantization<T> {
    fn name(&self) -> &'static str {
        "quantization"
    }

    /// `ξ̂`, which equals `ξ` for the uniform density.
    fn values(&self, cfg: &PointConfiguration<T>) -> Result<Vec<T>> {
        Ok(self
            .decompose_all(cfg)?
            .into_iter()
            .map(|v| T::lit(v.xi_hat))
            .collect())
    }

    fn value_with_mark(
        &self,
        x: &Point<T>,
        mark: Option<T>,
        cfg: &PointConfiguration<T>,
    ) -> Result<T> {
        let (c, i) = cfg.with_point(x, mark)?;
        let prep = self.prepare(&c)?;
        Ok(T::lit(self.decompose_at(&c, &prep, i)?.xi_hat))
    }

    fn translation_invariant(&self) -> bool {
        self.density.is_uniform()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::testing::uniform_config;

    fn q(r: f64, half: f64, d: usize) -> Quantization<f64> {
        Quantization::new(r)
            .unwrap()
            .with_clip(ClipBox::new(Point::origin(d), half))
    }

    fn line(xs: &[f64]) -> PointConfiguration<f64> {
        PointConfiguration::from_points(1, xs.iter().map(|&x| Point::x(x)).collect()).unwrap()
    }

    #[test]
    fn line_closed_form() {
        // cell of 0 is [-0.5, 1.5]: a = 0.5, b = 1.5
        let cfg = line(&[-1.0, 0.0, 3.0]);
        let v = q(1.0, 100.0, 1).value(&Point::x(0.0), &cfg).unwrap();
        assert!((v - (0.25 + 2.25) / 2.0).abs() < 1e-15);
        // unclipped end cell is unbounded
        assert!(Quantization::<f64>::new(1.0).unwrap().values(&cfg).is_err());
    }

    #[test]
    fn unit_square_second_moment() {
        let mut pts = vec![Point::xy(0.0, 0.0)];
        for (a, b) in [
            (1.0, 0.0),
            (-1.0, 0.0),
            (0.0, 1.0),
            (0.0, -1.0),
            (1.0, 1.0),
            (-1.0, -1.0),
            (1.0, -1.0),
            (-1.0, 1.0),
        ] {
            pts.push(Point::xy(a, b));
        }
        let cfg = PointConfiguration::from_points(2, pts).unwrap();
        let f = Quantization::new(2.0).unwrap();
        let v: f64 = f.value(&Point::xy(0.0, 0.0), &cfg).unwrap();
        assert!((v - 1.0 / 6.0).abs() < 1e-12, "{v}");
        let v1 = Quantization::new(1.0)
            .unwrap()
            .value(&Point::xy(0.0, 0.0), &cfg)
            .unwrap();
        // ∫ over the unit square of |y|: (√2 + ln(1+√2)) / 6
        let exact = (2f64.sqrt() + (1.0 + 2f64.sqrt()).ln()) / 6.0;
        assert!((v1 - exact).abs() < 1e-10 * exact, "{v1} vs {exact}");
    }

    #[test]
    fn unit_cube_second_moment() {
        let mut pts = Vec::new();
        for a in -1..=1 {
            for b in -1..=1 {
                for c in -1..=1 {
                    pts.push(Point::xyz(a as f64, b as f64, c as f64));
                }
            }
        }
        let cfg = PointConfiguration::from_points(3, pts).unwrap();
        let v = Quantization::new(2.0)
            .unwrap()
            .value(&Point::xyz(0.0, 0.0, 0.0), &cfg)
            .unwrap();
        // ∫ (x² + y² + z²) over the unit cube = 3 · 1/12
        assert!((v - 0.25).abs() < 1e-6, "{v}");
    }

    fn grid_oracle_2d(
        cfg: &PointConfiguration<f64>,
        i: usize,
        half: f64,
        r: f64,
        w: impl Fn(f64, f64) -> f64,
    ) -> f64 {
        // 1000 rows, 1000 midpoints per row over the exact row section of the cell
        let vor = Voronoi2d::new(cfg).unwrap();
        let poly = vor.polygon_in_box(i, [0.0, 0.0], half).unwrap();
        let s = cfg.point(i);
        let (ymin, ymax) = poly
            .v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |a, v| {
                (a.0.min(v[1]), a.1.max(v[1]))
            });
        let m = 1000;
        let hy = (ymax - ymin) / m as f64;
        let mut total = 0.0;
        for row in 0..m {
            let y = ymin + (row as f64 + 0.5) * hy;
            let mut xl = f64::INFINITY;
            let mut xr = f64::NEG_INFINITY;
            let n = poly.v.len();
            for k in 0..n {
                let (a, b) = (poly.v[k], poly.v[(k + 1) % n]);
                if (a[1] - y) * (b[1] - y) <= 0.0 && a[1] != b[1] {
                    let x = a[0] + (y - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                    xl = xl.min(x);
                    xr = xr.max(x);
                }
            }
            if xr <= xl {
                continue;
            }
            // the row section really is the nearest-site region
            for xe in [xl + 1e-7, xr - 1e-7] {
                let p = Point::xy(xe + s.coord(0), y + s.coord(1));
                let nearest = (0..cfg.len())
                    .min_by(|&a, &b| {
                        cfg.point(a)
                            .dist2(&p)
                            .partial_cmp(&cfg.point(b).dist2(&p))
                            .unwrap()
                    })
                    .unwrap();
                assert!(nearest == i || (cfg.point(nearest).dist(&p) - s.dist(&p)).abs() < 1e-6);
            }
            let hx = (xr - xl) / m as f64;
            for c in 0..m {
                let x = xl + (c as f64 + 0.5) * hx;
                total +=
                    (x * x + y * y).sqrt().powf(r) * w(x + s.coord(0), y + s.coord(1)) * hx * hy;
            }
        }
        total
    }

    #[test]
    fn planar_cells_match_grid_integration() {
        let cfg = uniform_config(31, 2, 40, 2.0, false);
        let half = 2.0;
        for &r in &[1.0, 2.0, 0.5] {
            let f = q(r, half, 2);
            let vals = f.values(&cfg).unwrap();
            for i in [0usize, 7, 13] {
                let oracle = grid_oracle_2d(&cfg, i, half, r, |_, _| 1.0);
                assert!(
                    (vals[i] - oracle).abs() <= 1e-4 * oracle,
                    "r={r} i={i}: {} vs {oracle}",
                    vals[i]
                );
            }
        }
    }

    #[test]
    fn weighted_planar_cells_match_grid_integration() {
        let cfg = uniform_config(32, 2, 40, 2.0, false);
        let lambda = 16.0;
        let dens = Density::Affine {
            intercept: 1.0,
            slope: vec![0.8, -0.5],
        };
        let f = q(1.0, 2.0, 2).with_density(dens.clone(), lambda).unwrap();
        let vals = f.decompose_all(&cfg).unwrap();
        for i in [1usize, 9] {
            let s = cfg.point(i);
            let hx = dens.eval(&[s.coord(0) / 4.0, s.coord(1) / 4.0]);
            let oracle = grid_oracle_2d(&cfg, i, 2.0, 1.0, |x, y| {
                dens.eval(&[x / 4.0, y / 4.0]) / hx
            });
            assert!(
                (vals[i].xi_hat - oracle).abs() <= 1e-4 * oracle,
                "{} vs {oracle}",
                vals[i].xi_hat
            );
            assert!((vals[i].delta - (vals[i].xi_hat - vals[i].xi)).abs() < 1e-15);
            assert!(vals[i].delta != 0.0);
        }
    }

    #[test]
    fn weighted_line_cell() {
        // cell [-0.5, 1.5] around 0, h(u) = 1 + u, λ = 1: ∫ |s| (1 + s) ds
        let cfg = line(&[-1.0, 0.0, 3.0]);
        let f = q(1.0, 100.0, 1)
            .with_density(
                Density::Affine {
                    intercept: 1.0,
                    slope: vec![1.0],
                },
                1.0,
            )
            .unwrap();
        let v = f.decompose(&Point::x(0.0), &cfg).unwrap();
        // ∫_{-0.5}^0 -s(1+s) ds + ∫_0^{1.5} s(1+s) ds
        let exact = (0.125 - 0.125 / 3.0) + (1.125 + 3.375 / 3.0);
        assert!((v.xi_hat - exact).abs() < 1e-9, "{} vs {exact}", v.xi_hat);
        assert!((v.xi - 1.25).abs() < 1e-15);
    }

    #[test]
    fn constant_density_has_zero_perturbation() {
        let cfg = uniform_config(33, 2, 30, 1.0, false);
        let flat = Density::Table {
            shape: vec![2, 2],
            values: vec![3.0; 4],
        };
        let f = q(1.0, 1.0, 2).with_density(flat, 9.0).unwrap();
        let plain = q(1.0, 1.0, 2).decompose_all(&cfg).unwrap();
        for (a, b) in f.decompose_all(&cfg).unwrap().iter().zip(&plain) {
            assert!((a.xi_hat - b.xi).abs() < 1e-9 * b.xi, "{a:?} {b:?}");
            assert_eq!(b.delta, 0.0);
        }
    }

    #[test]
    fn density_floor() {
        let cfg = line(&[0.0, 0.2]);
        let zero_left = Density::Affine {
            intercept: 0.0,
            slope: vec![1.0],
        };
        let f = q(1.0, 0.5, 1).with_density(zero_left.clone(), 1.0).unwrap();
        assert!(matches!(
            f.decompose(&Point::x(0.0), &cfg),
            Err(Error::DensityFloor { .. })
        ));
        let f = f.with_floor(0.01).unwrap();
        assert!(f.decompose(&Point::x(0.0), &cfg).is_ok());
    }

    #[test]
    fn zeroth_moment_partitions_the_window() {
        for d in 1..=3 {
            let half = 1.5;
            let cfg = uniform_config(34 + d as u64, d, 60, half, false);
            let f = q(0.0, half, d);
            let total: f64 = f.values(&cfg).unwrap().iter().sum();
            let vol = (2.0 * half).powi(d as i32);
            assert!((total - vol).abs() < 1e-6 * vol, "d={d}: {total} vs {vol}");
        }
    }

    #[test]
    fn space_cells_match_monte_carlo_free_grid() {
        // r = 1 in 3D against a midpoint grid over the clip box with nearest-site membership
        let cfg = uniform_config(36, 3, 12, 1.0, false);
        let f = q(1.0, 1.0, 3);
        let vals = f.values(&cfg).unwrap();
        let m = 100;
        let h = 2.0 / m as f64;
        let mut grid = vec![0.0; cfg.len()];
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let p = Point::xyz(
                        -1.0 + (a as f64 + 0.5) * h,
                        -1.0 + (b as f64 + 0.5) * h,
                        -1.0 + (c as f64 + 0.5) * h,
                    );
                    let k = (0..cfg.len())
                        .min_by(|&i, &j| {
                            cfg.point(i)
                                .dist2(&p)
                                .partial_cmp(&cfg.point(j).dist2(&p))
                                .unwrap()
                        })
                        .unwrap();
                    grid[k] += cfg.point(k).dist(&p) * h * h * h;
                }
            }
        }
        for (v, g) in vals.iter().zip(&grid) {
            assert!((v - g).abs() < 2e-2 * g, "{v} vs {g}");
        }
    }

    #[test]
    fn table_density_interpolates() {
        let t = Density::Table {
            shape: vec![2, 3],
            values: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
        };
        t.validate(2).unwrap();
        assert_eq!(t.eval(&[-0.5, -0.5]), 0.0);
        assert_eq!(t.eval(&[0.5, 0.5]), 5.0);
        assert!((t.eval(&[0.0, 0.0]) - 2.5).abs() < 1e-12);
        assert!(Density::Table {
            shape: vec![2],
            values: vec![1.0]
        }
        .validate(1)
        .is_err());
        let a = Density::Affine {
            intercept: 1.0,
            slope: vec![1.0],
        };
        // ∫ (1+u)^2 over [-1/2, 1/2] = 1 + 1/12
        assert!((a.lp_norm(1, 2.0) - (13.0f64 / 12.0).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn translation_with_the_box() {
        let cfg = uniform_config(37, 2, 50, 2.0, false);
        let f = q(1.0, 2.0, 2);
        let z = Point::xy(13.25, -7.5);
        let a = f.values(&cfg).unwrap();
        let b = f.translated(&z).values(&cfg.translate(&z)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10 * x.abs().max(1e-3));
        }
    }
}
