//! Convex polytopes in `R^n` and the maps built on them.
//!
//! Points are plain coordinate vectors. A [`Polytope`] is stored by its
//! vertices; its affine hull, facets and radii are derived on construction.
//! Incidence decisions use an absolute tolerance of [`INCIDENCE_TOL`]
//! (scaled by the polytope diameter when it exceeds 1).

mod polytope;
mod radial;
mod squash;

pub use polytope::{Facet, Polytope};
pub use radial::{radial_project, radial_project_directional};
pub use squash::{polytope_distance, SquashMap, SquashPrecondition};

use crate::error::{Error, Result};

pub const INCIDENCE_TOL: f64 = 1e-9;
pub const ORTHONORMAL_TOL: f64 = 1e-12;

pub type Point = Vec<f64>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Point {
    a.iter().map(|x| x * s).collect()
}

pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn centroid(points: &[Point]) -> Point {
    let n = points[0].len();
    let mut c = vec![0.0; n];
    for p in points {
        for (ci, pi) in c.iter_mut().zip(p) {
            *ci += pi;
        }
    }
    scale(&c, 1.0 / points.len() as f64)
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs().partial_cmp(&m[j][c].abs()).unwrap())
            .unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            if f != 0.0 {
                for k in c..n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    d
}

/// Solves a small dense square system; `None` when singular.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = a.len();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())
            .unwrap();
        if a[p][c].abs() < 1e-14 {
            return None;
        }
        a.swap(p, c);
        b.swap(p, c);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                if f != 0.0 {
                    for k in c..n {
                        a[r][k] -= f * a[c][k];
                    }
                    b[r] -= f * b[c];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Gram-Schmidt on `vectors`, keeping those with residual above `tol`.
pub fn orthonormalize(vectors: &[Point], tol: f64) -> Vec<Point> {
    let mut basis: Vec<Point> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                w = axpy(&w, -c, b);
            }
        }
        let n = norm(&w);
        if n > tol {
            basis.push(scale(&w, 1.0 / n));
        }
    }
    basis
}

/// Direction of a d-plane through the origin, given by an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneDir {
    basis: Vec<Point>,
    ambient: usize,
}

impl PlaneDir {
    pub fn new(basis: Vec<Point>, ambient: usize) -> Result<Self> {
        for (i, a) in basis.iter().enumerate() {
            if a.len() != ambient {
                return Err(Error::DimensionMismatch(format!(
                    "basis vector has length {}, ambient {ambient}",
                    a.len()
                )));
            }
            for (j, b) in basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot(a, b) - want).abs() > ORTHONORMAL_TOL {
                    return Err(Error::precondition("plane basis is not orthonormal"));
                }
            }
        }
        Ok(PlaneDir { basis, ambient })
    }

    /// Orthonormalizes an arbitrary spanning set.
    pub fn spanned_by(vectors: &[Point], ambient: usize) -> Self {
        PlaneDir { basis: orthonormalize(vectors, 1e-12), ambient }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn basis(&self) -> &[Point] {
        &self.basis
    }

    /// Orthogonal projection onto the plane.
    pub fn project(&self, v: &[f64]) -> Point {
        let mut out = vec![0.0; self.ambient];
        for b in &self.basis {
            let c = dot(v, b);
            for (o, bi) in out.iter_mut().zip(b) {
                *o += c * bi;
            }
        }
        out
    }

    /// Projection onto the orthogonal complement.
    pub fn project_perp(&self, v: &[f64]) -> Point {
        sub(v, &self.project(v))
    }
}

/// Volumes of unit balls, `omega[k]` for `k <= n`.
#[derive(Debug, Clone)]
pub struct BallConstants {
    omega: Vec<f64>,
}

impl BallConstants {
    pub fn new(n: usize) -> Self {
        let mut omega = vec![1.0, 2.0];
        for k in 2..=n.max(1) {
            let v = omega[k - 2] * 2.0 * std::f64::consts::PI / k as f64;
            omega.push(v);
        }
        omega.truncate(n.max(1) + 1);
        BallConstants { omega }
    }

    pub fn omega(&self, k: usize) -> f64 {
        self.omega[k]
    }
}

/// Volume of the unit k-ball.
pub fn omega(k: usize) -> f64 {
    BallConstants::new(k).omega(k)
}

/// Symmetric Hausdorff distance between finite point samples.
pub fn hausdorff_distance(a: &[Point], b: &[Point]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::precondition("hausdorff distance of an empty set"));
    }
    let one_sided = |x: &[Point], y: &[Point]| {
        x.iter()
            .map(|p| y.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(one_sided(a, b).max(one_sided(b, a)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_constants() {
        let b = BallConstants::new(4);
        assert!((b.omega(1) - 2.0).abs() < 1e-12);
        assert!((b.omega(2) - std::f64::consts::PI).abs() < 1e-12);
        assert!((b.omega(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(b.omega(0), 1.0);
    }

    #[test]
    fn hausdorff_examples() {
        let a = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(hausdorff_distance(&[vec![0.0, 0.0]], &[vec![3.0, 4.0]]).unwrap(), 5.0);
        assert_eq!(hausdorff_distance(&a, &[vec![0.0, 0.0]]).unwrap(), 1.0);
        assert!(hausdorff_distance(&[], &a).is_err());
    }

    #[test]
    fn plane_projection() {
        let p = PlaneDir::new(vec![vec![1.0, 0.0, 0.0]], 3).unwrap();
        assert_eq!(p.project(&[2.0, 3.0, 4.0]), vec![2.0, 0.0, 0.0]);
        assert_eq!(p.project_perp(&[2.0, 3.0, 4.0]), vec![0.0, 3.0, 4.0]);
        assert!(PlaneDir::new(vec![vec![1.0, 1.0]], 2).is_err());
    }

    #[test]
    fn determinant_and_solve() {
        assert!((det(vec![vec![2.0, 1.0], vec![1.0, 3.0]]) - 5.0).abs() < 1e-12);
        let x = solve(vec![vec![2.0, 1.0], vec![1.0, 3.0]], vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
        assert!(solve(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 1.0]).is_none());
    }
}
