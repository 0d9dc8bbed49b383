//! Minimum-norm point of the convex hull of finitely many vectors.
//!
//! At a nonsmooth point the Clarke generalized gradient is the convex hull of
//! the limiting gradients, and the algorithm steps along its element closest
//! to the origin. The hulls met here are tiny (a handful of vertices), so an
//! exact active-set method is used: Wolfe's minimum-norm-point algorithm,
//! which keeps a "corral" of affinely independent vertices, jumps to the
//! affine minimizer of the corral, and backs off along the segment towards it
//! whenever that minimizer leaves the simplex.

use thiserror::Error;

use crate::vector::{Point, VectorError};

pub const DEFAULT_TOL: f64 = 1e-10;

/// Vertices whose convex hull is searched.
#[derive(Debug, Clone, PartialEq)]
pub struct HullSpec {
    vertices: Vec<Point>,
}

impl HullSpec {
    pub fn new(vertices: Vec<Point>) -> Result<Self, MinNormError> {
        let first = vertices.first().ok_or(MinNormError::EmptyHull)?;
        let dim = first.dim();
        for v in &vertices {
            if v.dim() != dim {
                return Err(VectorError::DimensionMismatch {
                    expected: dim,
                    found: v.dim(),
                }
                .into());
            }
        }
        Ok(HullSpec { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].dim()
    }

    /// `10 · vertices · dim + 1000`
    pub fn default_iteration_cap(&self) -> usize {
        10 * self.vertices.len() * self.dim() + 1000
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinNormResult {
    pub point: Point,
    /// One convex weight per vertex, in vertex order.
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MinNormError {
    #[error("hull has no vertices")]
    EmptyHull,
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error("no certified minimum-norm point after {iterations} iterations (certificate residual {residual:e})")]
    NotConverged {
        iterations: usize,
        best: Box<MinNormResult>,
        residual: f64,
    },
}

/// Largest violation of the first-order optimality condition
/// `⟨p, q − p⟩ ≥ −tol·(1 + ‖p‖‖q‖)` over the vertices `q`, expressed in units
/// of `1 + ‖p‖‖q‖`. The point is optimal iff this is ≤ tol.
pub fn certificate_residual(hull: &HullSpec, p: &Point) -> f64 {
    let pp = p.dot(p);
    let pn = pp.sqrt();
    hull.vertices
        .iter()
        .map(|q| (pp - p.dot(q)) / (1.0 + pn * q.norm()))
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn min_norm_point(hull: &HullSpec, tol: f64) -> Result<MinNormResult, MinNormError> {
    min_norm_point_with_cap(hull, tol, hull.default_iteration_cap())
}

pub fn min_norm_point_with_cap(
    hull: &HullSpec,
    tol: f64,
    max_iterations: usize,
) -> Result<MinNormResult, MinNormError> {
    assert!(tol > 0.0, "tolerance must be positive");
    let verts = &hull.vertices;
    let n = verts.len();

    let start = (0..n)
        .min_by(|&a, &b| verts[a].dot(&verts[a]).total_cmp(&verts[b].dot(&verts[b])))
        .expect("hull is nonempty");
    let mut corral: Vec<usize> = vec![start];
    let mut weights: Vec<f64> = vec![1.0];
    let mut x = verts[start].clone();

    let finish = |corral: &[usize], weights: &[f64]| -> MinNormResult {
        let mut coefficients = vec![0.0; n];
        for (&i, &lam) in corral.iter().zip(weights) {
            coefficients[i] += lam;
        }
        let total: f64 = coefficients.iter().sum();
        coefficients.iter_mut().for_each(|c| *c /= total);
        let point = combine(verts, &coefficients);
        MinNormResult {
            point,
            coefficients,
        }
    };

    for _ in 0..max_iterations {
        // major cycle: is x optimal? otherwise bring in the most violating vertex
        let xx = x.dot(&x);
        let xn = xx.sqrt();
        let (entering, violation) = (0..n)
            .map(|j| (j, (xx - x.dot(&verts[j])) / (1.0 + xn * verts[j].norm())))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("hull is nonempty");
        if violation <= tol || corral.contains(&entering) {
            let result = finish(&corral, &weights);
            let residual = certificate_residual(hull, &result.point);
            if residual <= tol {
                return Ok(result);
            }
            return Err(MinNormError::NotConverged {
                iterations: max_iterations,
                best: Box::new(result),
                residual,
            });
        }
        corral.push(entering);
        weights.push(0.0);

        // minor cycles: move towards the affine minimizer of the corral
        loop {
            let Some(affine) = affine_minimizer(verts, &corral) else {
                // numerically dependent corral: drop the newcomer and stop here
                corral.pop();
                weights.pop();
                let result = finish(&corral, &weights);
                let residual = certificate_residual(hull, &result.point);
                if residual <= tol {
                    return Ok(result);
                }
                return Err(MinNormError::NotConverged {
                    iterations: max_iterations,
                    best: Box::new(result),
                    residual,
                });
            };
            if affine.iter().all(|&a| a > 0.0) {
                weights = affine;
                x = combine_subset(verts, &corral, &weights);
                break;
            }
            let mut step = 1.0_f64;
            for (lam, mu) in weights.iter().zip(&affine) {
                if *mu <= 0.0 && lam - mu > 0.0 {
                    step = step.min(lam / (lam - mu));
                }
            }
            for (lam, mu) in weights.iter_mut().zip(&affine) {
                *lam = (1.0 - step) * *lam + step * mu;
            }
            let mut k = 0;
            while k < corral.len() {
                if weights[k] <= 1e-15 {
                    corral.remove(k);
                    weights.remove(k);
                } else {
                    k += 1;
                }
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            x = combine_subset(verts, &corral, &weights);
            if corral.len() == 1 {
                break;
            }
        }
    }

    let result = finish(&corral, &weights);
    let residual = certificate_residual(hull, &result.point);
    Err(MinNormError::NotConverged {
        iterations: max_iterations,
        best: Box::new(result),
        residual,
    })
}

/// `‖min-norm point‖ ≤ tol`, i.e. the origin is (numerically) in the hull.
pub fn hull_contains_origin(hull: &HullSpec, tol: f64) -> Result<bool, MinNormError> {
    let res = min_norm_point(hull, DEFAULT_TOL.min(tol))?;
    Ok(res.point.norm() <= tol)
}

fn combine(verts: &[Point], coefficients: &[f64]) -> Point {
    let mut acc = vec![0.0; verts[0].dim()];
    for (v, &c) in verts.iter().zip(coefficients) {
        if c != 0.0 {
            for (a, x) in acc.iter_mut().zip(v.as_slice()) {
                *a += c * x;
            }
        }
    }
    Point::from_raw(acc)
}

fn combine_subset(verts: &[Point], idx: &[usize], weights: &[f64]) -> Point {
    let mut acc = vec![0.0; verts[0].dim()];
    for (&i, &c) in idx.iter().zip(weights) {
        for (a, x) in acc.iter_mut().zip(verts[i].as_slice()) {
            *a += c * x;
        }
    }
    Point::from_raw(acc)
}

/// Weights `μ` (summing to one) of the point of least norm in the affine hull
/// of the selected vertices; solves the bordered Gram system
/// `[G 1; 1ᵀ 0] [μ; ρ] = [0; 1]`. `None` when the system is singular.
fn affine_minimizer(verts: &[Point], idx: &[usize]) -> Option<Vec<f64>> {
    let k = idx.len();
    if k == 1 {
        return Some(vec![1.0]);
    }
    if k == 2 {
        // closed form keeps symmetric pairs exactly symmetric
        let p = &verts[idx[0]];
        let q = &verts[idx[1]];
        let d = q.sub(p);
        let dd = d.dot(&d);
        if dd == 0.0 {
            return None;
        }
        let t = -p.dot(&d) / dd;
        return Some(vec![1.0 - t, t]);
    }
    let size = k + 1;
    let mut a = vec![vec![0.0; size + 1]; size];
    let mut scale = 0.0_f64;
    for r in 0..k {
        for c in 0..k {
            let g = verts[idx[r]].dot(&verts[idx[c]]);
            a[r][c] = g;
            scale = scale.max(g.abs());
        }
        a[r][k] = 1.0;
        a[k][r] = 1.0;
    }
    a[k][size] = 1.0;
    let scale = scale.max(1.0);

    for col in 0..size {
        let pivot = (col..size).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-13 * scale {
            return None;
        }
        a.swap(col, pivot);
        for row in 0..size {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for c in col..=size {
                        a[row][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    let mu: Vec<f64> = (0..k).map(|r| a[r][size] / a[r][r]).collect();
    if mu.iter().all(|m| m.is_finite()) {
        Some(mu)
    } else {
        None
    }
}
