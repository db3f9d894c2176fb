use crate::error::{Error, Result};
use crate::geometry::point::{Point, MAX_DIM};
use crate::scalar::Scalar;

/// Origin-centred cube `[-h, h]^d`; `Q_λ` has `h = λ^{1/d}/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window<T> {
    half_width: T,
    dim: usize,
}

impl<T: Scalar> Window<T> {
    pub fn new(half_width: T, dim: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::InvalidInput(format!(
                "window half-width must be positive, got {half_width}"
            )));
        }
        Ok(Self { half_width, dim })
    }

    /// The cube of volume `lambda`.
    pub fn from_volume(lambda: T, dim: usize) -> Result<Self> {
        if !(lambda > T::zero()) {
            return Err(Error::InvalidInput(format!(
                "window volume must be positive, got {lambda}"
            )));
        }
        let side = lambda.powf(T::one() / T::from_usize_lossy(dim));
        Self::new(side / T::lit(2.0), dim)
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> T {
        self.half_width + self.half_width
    }

    pub fn volume(&self) -> T {
        self.side().powi(self.dim as i32)
    }

    /// Length of the main diagonal.
    pub fn diameter(&self) -> T {
        self.side() * T::from_usize_lossy(self.dim).sqrt()
    }

    pub fn contains(&self, p: &Point<T>) -> bool {
        p.coords().iter().all(|c| c.abs() <= self.half_width)
    }

    /// Same centre, half-width grown by `margin`.
    pub fn enlarged(&self, margin: T) -> Self {
        Self {
            half_width: self.half_width + margin.max(T::zero()),
            dim: self.dim,
        }
    }

    /// Distance from `p` (inside) to the nearest face.
    pub fn distance_to_boundary(&self, p: &Point<T>) -> T {
        p.coords()
            .iter()
            .map(|c| self.half_width - c.abs())
            .fold(T::infinity(), T::min)
    }

    /// Maps a point of the unit cube `[0,1)^d` into the window.
    pub fn from_unit(&self, u: &[T]) -> Point<T> {
        let mut c = [T::zero(); MAX_DIM];
        for i in 0..self.dim {
            c[i] = (u[i] - T::lit(0.5)) * self.side();
        }
        Point::from_slice_unchecked(&c[..self.dim])
    }
}

/// Volume of the radius-`r` ball in ℝ^d: `ω_d r^d`, `ω_d = π^{d/2}/Γ(d/2+1)`.
pub fn ball_volume<T: Scalar>(d: usize, r: T) -> T {
    assert!(d >= 1, "dimension must be at least 1");
    T::lit(unit_ball_volume(d)) * r.powi(d as i32)
}

pub(crate) fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => {
            let half = d as f64 / 2.0;
            std::f64::consts::PI.powf(half) / statrs::function::gamma::gamma(half + 1.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volume_examples() {
        assert_eq!(ball_volume(1, 1.0f64), 2.0);
        assert!((ball_volume(2, 1.0f64) - std::f64::consts::PI).abs() < 1e-15);
        assert!((ball_volume(3, 2.0f64) - 32.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
        assert!((ball_volume(3, 2.0f64) - 33.5103).abs() < 1e-4);
    }

    #[test]
    fn ball_volume_scales_as_r_to_the_d() {
        for d in 1..=6 {
            for &r in &[0.1f64, 0.7, 1.0, 2.5, 13.0] {
                let lhs = ball_volume(d, 1.0f64) * r.powi(d as i32);
                assert!(
                    (lhs - ball_volume(d, r)).abs() <= 1e-12 * lhs.max(1.0),
                    "d={d} r={r}"
                );
            }
        }
        // Gamma route agrees with the closed forms
        let g3 = std::f64::consts::PI.powf(1.5) / statrs::function::gamma::gamma(2.5);
        assert!((g3 - unit_ball_volume(3)).abs() < 1e-12);
    }

    #[test]
    fn window_volume_and_containment() {
        let w = Window::from_volume(1000.0f64, 1).unwrap();
        assert!((w.volume() - 1000.0).abs() < 1e-9);
        assert!((w.half_width() - 500.0).abs() < 1e-12);
        let w2 = Window::from_volume(16.0f64, 2).unwrap();
        assert!((w2.half_width() - 2.0).abs() < 1e-12);
        assert!(w2.contains(&Point::xy(2.0, -2.0)));
        assert!(!w2.contains(&Point::xy(2.0001, 0.0)));
        assert!(Window::from_volume(-1.0f64, 2).is_err());
        assert!(Window::new(1.0f64, 4).is_err());
    }
}
