use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 3;

/// A point of ℝ^d, d ∈ {1, 2, 3}.
///
/// Coordinates beyond `dim` are kept at zero, so distances can always be
/// computed over the full backing array.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point<T> {
    coords: [T; MAX_DIM],
    dim: u8,
}

impl<T: Scalar> Point<T> {
    pub fn new(coords: &[T]) -> Result<Self> {
        let dim = coords.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite coordinate in {coords:?}"
            )));
        }
        Ok(Self::from_slice_unchecked(coords))
    }

    pub(crate) fn from_slice_unchecked(coords: &[T]) -> Self {
        let mut c = [T::zero(); MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Self {
            coords: c,
            dim: coords.len() as u8,
        }
    }

    pub fn origin(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} out of range");
        Self {
            coords: [T::zero(); MAX_DIM],
            dim: dim as u8,
        }
    }

    /// Convenience constructors; they do not validate finiteness.
    pub fn x(x: T) -> Self {
        Self::from_slice_unchecked(&[x])
    }

    pub fn xy(x: T, y: T) -> Self {
        Self::from_slice_unchecked(&[x, y])
    }

    pub fn xyz(x: T, y: T, z: T) -> Self {
        Self::from_slice_unchecked(&[x, y, z])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[T] {
        &self.coords[..self.dim as usize]
    }

    #[inline]
    pub fn coord(&self, i: usize) -> T {
        self.coords[i]
    }

    #[inline]
    pub fn dist2(&self, other: &Self) -> T {
        let a = &self.coords;
        let b = &other.coords;
        let d0 = a[0] - b[0];
        let d1 = a[1] - b[1];
        let d2 = a[2] - b[2];
        d0 * d0 + d1 * d1 + d2 * d2
    }

    #[inline]
    pub fn dist(&self, other: &Self) -> T {
        self.dist2(other).sqrt()
    }

    #[inline]
    pub fn norm2(&self) -> T {
        self.dist2(&Self::origin(self.dim()))
    }

    #[inline]
    pub fn norm(&self) -> T {
        self.norm2().sqrt()
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> T {
        let a = &self.coords;
        let b = &other.coords;
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut c = self.coords;
        for (ci, oi) in c.iter_mut().zip(other.coords.iter()) {
            *ci = *ci + *oi;
        }
        Self {
            coords: c,
            dim: self.dim,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut c = self.coords;
        for (ci, oi) in c.iter_mut().zip(other.coords.iter()) {
            *ci = *ci - *oi;
        }
        Self {
            coords: c,
            dim: self.dim,
        }
    }

    pub fn scale(&self, s: T) -> Self {
        let mut c = self.coords;
        for ci in c.iter_mut() {
            *ci = *ci * s;
        }
        Self {
            coords: c,
            dim: self.dim,
        }
    }

    /// Lexicographic order on coordinates; the deterministic tie-breaker.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        for i in 0..self.dim() {
            match self.coords[i].partial_cmp(&other.coords[i]) {
                Some(Ordering::Equal) | None => continue,
                Some(o) => return o,
            }
        }
        Ordering::Equal
    }

    pub fn cast<U: Scalar>(&self) -> Point<U> {
        let mut c = [U::zero(); MAX_DIM];
        for (ci, v) in c.iter_mut().zip(self.coords.iter()) {
            *ci = U::lit(v.as_f64());
        }
        Point {
            coords: c,
            dim: self.dim,
        }
    }
}

/// Finite set of points with optional per-point marks (arrival times).
#[derive(Clone, Debug, PartialEq)]
pub struct PointConfiguration<T> {
    dim: usize,
    points: Vec<Point<T>>,
    marks: Option<Vec<T>>,
}

impl<T: Scalar> PointConfiguration<T> {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            points: Vec::new(),
            marks: None,
        }
    }

    pub fn from_points(dim: usize, points: Vec<Point<T>>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        for p in &points {
            if p.dim() != dim {
                return Err(Error::InvalidInput(format!(
                    "point of dimension {} in a {dim}-dimensional configuration",
                    p.dim()
                )));
            }
            if p.coords().iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite coordinate {p:?}")));
            }
        }
        Ok(Self {
            dim,
            points,
            marks: None,
        })
    }

    pub fn with_marks(mut self, marks: Vec<T>) -> Result<Self> {
        if marks.len() != self.points.len() {
            return Err(Error::InvalidInput(format!(
                "{} marks for {} points",
                marks.len(),
                self.points.len()
            )));
        }
        self.marks = Some(marks);
        Ok(self)
    }

    pub fn without_marks(mut self) -> Self {
        self.marks = None;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point<T>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point<T> {
        &self.points[i]
    }

    pub fn marks(&self) -> Option<&[T]> {
        self.marks.as_deref()
    }

    pub fn mark(&self, i: usize) -> Option<T> {
        self.marks.as_ref().map(|m| m[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Point<T>> {
        self.points.iter()
    }

    /// Appends a point. Marked configurations need `mark`; unmarked ones ignore it.
    pub fn push(&mut self, p: Point<T>, mark: Option<T>) -> Result<()> {
        if p.dim() != self.dim {
            return Err(Error::InvalidInput("dimension mismatch on push".into()));
        }
        match (&mut self.marks, mark) {
            (Some(m), Some(v)) => m.push(v),
            (Some(_), None) => return Err(Error::MarksRequired),
            (None, _) => {}
        }
        self.points.push(p);
        Ok(())
    }

    /// Index of a point with exactly these coordinates, if present.
    pub fn position_of(&self, x: &Point<T>) -> Option<usize> {
        self.points.iter().position(|p| p == x)
    }

    /// `X ∪ {x}`; returns the configuration and the index of `x` in it.
    /// If `x` is already present the configuration is returned unchanged.
    pub fn with_point(&self, x: &Point<T>, mark: Option<T>) -> Result<(Self, usize)> {
        if let Some(i) = self.position_of(x) {
            return Ok((self.clone(), i));
        }
        let mut out = self.clone();
        let mark = match (&self.marks, mark) {
            (Some(_), None) => Some(T::zero()),
            (_, m) => m,
        };
        out.push(*x, mark)?;
        Ok((out, self.len()))
    }

    pub fn translate(&self, z: &Point<T>) -> Self {
        Self {
            dim: self.dim,
            points: self.points.iter().map(|p| p.add(z)).collect(),
            marks: self.marks.clone(),
        }
    }

    /// Sub-configuration selected by a predicate on points, marks carried along.
    pub fn filter(&self, mut keep: impl FnMut(&Point<T>) -> bool) -> Self {
        let mut points = Vec::new();
        let mut marks = self.marks.as_ref().map(|_| Vec::new());
        for (i, p) in self.points.iter().enumerate() {
            if keep(p) {
                points.push(*p);
                if let (Some(out), Some(m)) = (marks.as_mut(), self.marks.as_ref()) {
                    out.push(m[i]);
                }
            }
        }
        Self {
            dim: self.dim,
            points,
            marks,
        }
    }

    /// `X ∩ B_r(c)` (closed ball).
    pub fn restrict_ball(&self, c: &Point<T>, r: T) -> Self {
        let r2 = r * r;
        self.filter(|p| p.dist2(c) <= r2)
    }

    pub fn extend(&mut self, other: &Self) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::InvalidInput("dimension mismatch on extend".into()));
        }
        match (&mut self.marks, &other.marks) {
            (Some(a), Some(b)) => a.extend_from_slice(b),
            (Some(_), None) => return Err(Error::MarksRequired),
            (None, _) => {}
        }
        self.points.extend_from_slice(&other.points);
        Ok(())
    }
}
