use crate::minnorm::{min_norm_point, HullSpec, DEFAULT_TOL};
use crate::vector::Point;

use super::{linf_active_set, Objective, ObjectiveError};

fn check_dim(dim: usize) -> Result<(), ObjectiveError> {
    if dim == 0 {
        Err(ObjectiveError::InvalidSpec("dim must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// `C(w) = ‖w‖₂² / N`. Smooth, minimized at 0, with `μ = δ = 2/N` exactly.
#[derive(Debug, Clone)]
pub struct SqL2Scaled {
    dim: usize,
}

impl SqL2Scaled {
    pub fn new(dim: usize) -> Result<Self, ObjectiveError> {
        check_dim(dim)?;
        Ok(SqL2Scaled { dim })
    }
}

impl Objective for SqL2Scaled {
    fn name(&self) -> &str {
        "sq_l2_scaled"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, w: &Point) -> f64 {
        w.dot(w) / self.dim as f64
    }

    fn clarke_selection(&self, w: &Point) -> Result<Point, ObjectiveError> {
        crate::vector::check_dims(self.dim, w.dim())?;
        Ok(w.scale(2.0 / self.dim as f64))
    }

    fn minimizer(&self) -> Option<Point> {
        Some(Point::zeros(self.dim))
    }
}

/// `C(w) = ‖w‖∞²`, nonsmooth wherever two coordinates tie in absolute value.
#[derive(Debug, Clone)]
pub struct SqLinf {
    dim: usize,
}

impl SqLinf {
    pub fn new(dim: usize) -> Result<Self, ObjectiveError> {
        check_dim(dim)?;
        Ok(SqLinf { dim })
    }
}

/// Least-norm element of `co{ scale · sign(w_i) e_i : i active }`.
pub(crate) fn linf_selection(w: &Point, scale: f64) -> Result<Point, ObjectiveError> {
    let active = linf_active_set(w);
    let dim = w.dim();
    let vertex = |i: usize| {
        let mut g = vec![0.0; dim];
        g[i] = scale * w[i].signum();
        Point::from_raw(g)
    };
    if active.len() == 1 {
        return Ok(vertex(active[0]));
    }
    let hull = HullSpec::new(active.into_iter().map(vertex).collect())?;
    Ok(min_norm_point(&hull, DEFAULT_TOL)?.point)
}

impl Objective for SqLinf {
    fn name(&self) -> &str {
        "sq_linf"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, w: &Point) -> f64 {
        let r = w.inf_norm();
        r * r
    }

    fn clarke_selection(&self, w: &Point) -> Result<Point, ObjectiveError> {
        crate::vector::check_dims(self.dim, w.dim())?;
        let r = w.inf_norm();
        if r == 0.0 {
            return Ok(Point::zeros(self.dim));
        }
        linf_selection(w, 2.0 * r)
    }

    fn is_smooth_at(&self, w: &Point) -> bool {
        w.inf_norm() == 0.0 || linf_active_set(w).len() == 1
    }

    fn minimizer(&self) -> Option<Point> {
        Some(Point::zeros(self.dim))
    }
}
