//! Dense vectors and the Adam state triple.
//!
//! Every operation the recursion needs is component-wise; the norms are the
//! ones the convergence analysis is phrased in: the Euclidean norm on each
//! block, the max-of-blocks norm on the state, and the weighted "triple" norm
//! `max{‖m‖, ‖v‖, A‖w‖}`.

use std::fmt;
use std::ops::Index;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VectorError {
    #[error("vectors must have at least one coordinate")]
    Empty,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite coordinate {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("negative coordinate {value} at index {index} in a non-negative vector")]
    Negative { index: usize, value: f64 },
}

pub type Result<T> = std::result::Result<T, VectorError>;

fn check_finite(coords: &[f64]) -> Result<()> {
    if coords.is_empty() {
        return Err(VectorError::Empty);
    }
    match coords.iter().position(|c| !c.is_finite()) {
        Some(index) => Err(VectorError::NonFinite {
            index,
            value: coords[index],
        }),
        None => Ok(()),
    }
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(VectorError::DimensionMismatch { expected, found })
    }
}

/// A weight vector in ℝᴺ with finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_finite(&coords)?;
        Ok(Point(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        Point(vec![0.0; dim])
    }

    /// Wraps raw coordinates produced by arithmetic that may have overflowed.
    /// Callers validate with [`Point::ensure_finite`] where it matters.
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn ensure_finite(self) -> Result<Self> {
        check_finite(&self.0)?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn dot(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        euclid_norm(self)
    }

    pub fn inf_norm(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |acc, c| acc.max(c.abs()))
    }

    pub fn sub(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim(), other.dim());
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim(), other.dim());
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, factor: f64) -> Point {
        Point(self.0.iter().map(|c| c * factor).collect())
    }

    /// `self + factor * other`
    pub fn axpy(&self, factor: f64, other: &Point) -> Point {
        debug_assert_eq!(self.dim(), other.dim());
        Point(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + factor * b)
                .collect(),
        )
    }

    pub fn distance(&self, other: &Point) -> f64 {
        euclid_norm(&self.sub(other))
    }
}

impl Index<usize> for Point {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c:?}")?;
        }
        write!(f, "]")
    }
}

/// A vector in [0, ∞)ᴺ; the second-moment block of the state.
#[derive(Debug, Clone, PartialEq)]
pub struct NonnegPoint(Point);

impl NonnegPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_finite(&coords)?;
        if let Some(index) = coords.iter().position(|&c| c < 0.0) {
            return Err(VectorError::Negative {
                index,
                value: coords[index],
            });
        }
        Ok(NonnegPoint(Point(coords)))
    }

    pub fn zeros(dim: usize) -> Self {
        NonnegPoint(Point::zeros(dim))
    }

    /// Projects onto the non-negative orthant.
    pub fn clamp_from(p: &Point) -> Self {
        NonnegPoint(Point(p.0.iter().map(|&c| c.max(0.0)).collect()))
    }

    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        NonnegPoint(Point(coords))
    }

    pub fn as_point(&self) -> &Point {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

impl Index<usize> for NonnegPoint {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// The iterate `x = (m, v, w)` of the dynamical system.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Point,
    pub v: NonnegPoint,
    pub w: Point,
}

impl AdamState {
    pub fn new(m: Point, v: NonnegPoint, w: Point) -> Result<Self> {
        check_dims(w.dim(), m.dim())?;
        check_dims(w.dim(), v.dim())?;
        Ok(AdamState { m, v, w })
    }

    /// `(0, 0, w)`, the start prescribed for both phases.
    pub fn at_rest(w: Point) -> Self {
        let dim = w.dim();
        AdamState {
            m: Point::zeros(dim),
            v: NonnegPoint::zeros(dim),
            w,
        }
    }

    pub fn dim(&self) -> usize {
        self.w.dim()
    }

    /// Componentwise difference, returned as raw blocks (the v-block of a
    /// difference may be negative, so it is not a state).
    pub fn diff(&self, other: &AdamState) -> (Point, Point, Point) {
        (
            self.m.sub(&other.m),
            self.v.as_point().sub(other.v.as_point()),
            self.w.sub(&other.w),
        )
    }

    /// `max{‖m − m'‖, ‖v − v'‖, A‖w − w'‖}`
    pub fn triple_distance(&self, other: &AdamState, a: f64) -> f64 {
        let (dm, dv, dw) = self.diff(other);
        dm.norm().max(dv.norm()).max(a * dw.norm())
    }

    pub fn inf_distance(&self, other: &AdamState) -> f64 {
        self.triple_distance(other, 1.0)
    }
}

/// `p²`, component-wise.
pub fn cw_square(p: &Point) -> NonnegPoint {
    NonnegPoint::from_raw(p.as_slice().iter().map(|c| c * c).collect())
}

/// `num / √(den + ε)`, component-wise.
pub fn cw_div_sqrt_shift(num: &Point, den: &NonnegPoint, eps: f64) -> Point {
    debug_assert!(eps > 0.0);
    debug_assert_eq!(num.dim(), den.dim());
    Point::from_raw(
        num.as_slice()
            .iter()
            .zip(den.as_slice())
            .map(|(n, d)| n / (d + eps).sqrt())
            .collect(),
    )
}

pub fn euclid_norm(p: &Point) -> f64 {
    p.as_slice().iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// `‖x‖∞ = max{‖m‖, ‖v‖, ‖w‖}`
pub fn state_inf_norm(x: &AdamState) -> f64 {
    triple_norm(x, 1.0)
}

/// `⫴x⫴ = max{‖m‖, ‖v‖, A‖w‖}` for `A ≥ 1`.
pub fn triple_norm(x: &AdamState, a: f64) -> f64 {
    debug_assert!(a >= 1.0);
    x.m.norm().max(x.v.norm()).max(a * x.w.norm())
}
