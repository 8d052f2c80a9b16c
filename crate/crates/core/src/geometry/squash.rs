use super::{axpy, dist, norm, sub, PlaneDir, Point, Polytope};
use crate::error::{Error, Result};

/// The inequality of the squash-map hypotheses that failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SquashPrecondition {
    /// `0 < eps < 1/2`
    EpsRange,
    /// `0 < delta < 1/2`
    DeltaRange,
    /// `A ⊆ U(x, r)`
    InsideBall,
    /// `A + B(0, delta r) ⊆ U(x, r)`
    MarginInsideBall,
    /// `A ⊆ P + B(0, eps r)`
    NearPlane,
    /// plane direction and polytope live in different ambient spaces
    Ambient,
}

impl std::fmt::Display for SquashPrecondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SquashPrecondition::EpsRange => "0 < eps < 1/2",
            SquashPrecondition::DeltaRange => "0 < delta < 1/2",
            SquashPrecondition::InsideBall => "A inside U(x,r)",
            SquashPrecondition::MarginInsideBall => "A + B(0,delta r) inside U(x,r)",
            SquashPrecondition::NearPlane => "A inside P + B(0,eps r)",
            SquashPrecondition::Ambient => "ambient dimensions agree",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
struct FaceTree {
    poly: Polytope,
    children: Vec<FaceTree>,
}

impl FaceTree {
    fn new(poly: Polytope) -> Self {
        let children = if poly.dim() >= 2 { poly.facet_polytopes().into_iter().map(FaceTree::new).collect() } else { vec![] };
        FaceTree { poly, children }
    }

    fn distance(&self, z: &[f64]) -> f64 {
        let p = &self.poly;
        match p.dim() {
            0 => dist(z, &p.vertices()[0]),
            1 => {
                let a = &p.vertices()[0];
                let u = sub(&p.vertices()[1], a);
                let t = (super::dot(&sub(z, a), &u) / super::dot(&u, &u)).clamp(0.0, 1.0);
                dist(z, &axpy(a, t, &u))
            }
            _ => {
                if p.max_slack(z) <= 0.0 {
                    p.hull_distance(z)
                } else {
                    self.children.iter().map(|c| c.distance(z)).fold(f64::INFINITY, f64::min)
                }
            }
        }
    }
}

/// Distance from `z` to a convex polytope.
pub fn polytope_distance(p: &Polytope, z: &[f64]) -> f64 {
    FaceTree::new(p.clone()).distance(z)
}

/// The map `z ↦ z − η(dist(z,A)/r) P⊥(z − x)` that flattens a polytope `A`
/// lying close to the plane `x + P` onto that plane, and is the identity
/// outside `U(x, r)`.
#[derive(Debug, Clone)]
pub struct SquashMap {
    tree: FaceTree,
    x: Point,
    r: f64,
    plane: PlaneDir,
    eps: f64,
    delta: f64,
}

impl SquashMap {
    pub fn violations(a: &Polytope, x: &[f64], r: f64, plane: &PlaneDir, eps: f64, delta: f64) -> Vec<SquashPrecondition> {
        let mut out = Vec::new();
        if !(eps > 0.0 && eps < 0.5) {
            out.push(SquashPrecondition::EpsRange);
        }
        if !(delta > 0.0 && delta < 0.5) {
            out.push(SquashPrecondition::DeltaRange);
        }
        if plane.ambient() != a.ambient() || x.len() != a.ambient() {
            out.push(SquashPrecondition::Ambient);
            return out;
        }
        let far = a.vertices().iter().map(|v| dist(v, x)).fold(0.0, f64::max);
        if far >= r {
            out.push(SquashPrecondition::InsideBall);
        }
        if far + delta * r >= r {
            out.push(SquashPrecondition::MarginInsideBall);
        }
        let off = a.vertices().iter().map(|v| norm(&plane.project_perp(&sub(v, x)))).fold(0.0, f64::max);
        if off > eps * r {
            out.push(SquashPrecondition::NearPlane);
        }
        out
    }

    pub fn new(a: Polytope, x: Point, r: f64, plane: PlaneDir, eps: f64, delta: f64) -> Result<Self> {
        let v = Self::violations(&a, &x, r, &plane, eps, delta);
        if let Some(first) = v.first() {
            let all: Vec<String> = v.iter().map(|p| p.to_string()).collect();
            return Err(Error::precondition(format!("squash map needs {first} (failed: {})", all.join("; "))));
        }
        Ok(SquashMap { tree: FaceTree::new(a), x, r, plane, eps, delta })
    }

    pub fn lipschitz_bound(&self) -> f64 {
        3.0 + self.eps / self.delta
    }

    pub fn eta(&self, t: f64) -> f64 {
        if t <= 0.0 {
            1.0
        } else if t <= self.delta {
            1.0 - t / self.delta
        } else {
            0.0
        }
    }

    pub fn distance_to_set(&self, z: &[f64]) -> f64 {
        self.tree.distance(z)
    }

    pub fn apply(&self, z: &[f64]) -> Point {
        let e = self.eta(self.distance_to_set(z) / self.r);
        if e == 0.0 {
            return z.to_vec();
        }
        let perp = self.plane.project_perp(&sub(z, &self.x));
        axpy(z, -e, &perp)
    }

    pub fn set(&self) -> &Polytope {
        &self.tree.poly
    }

    pub fn center(&self) -> &[f64] {
        &self.x
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn plane(&self) -> &PlaneDir {
        &self.plane
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn setup() -> SquashMap {
        let a = Polytope::new(vec![vec![-0.3, 0.02], vec![0.3, -0.01]], 1).unwrap();
        let plane = PlaneDir::new(vec![vec![1.0, 0.0]], 2).unwrap();
        SquashMap::new(a, vec![0.0, 0.0], 1.0, plane, 0.05, 0.2).unwrap()
    }

    #[test]
    fn identity_far_away_and_projection_on_set() {
        let s = setup();
        assert_eq!(s.apply(&[0.0, 0.5]), vec![0.0, 0.5]);
        let z = vec![0.0, 0.005];
        let w = s.apply(&z);
        assert!(w[1].abs() < 1e-15 && (w[0] - z[0]).abs() < 1e-15);
    }

    #[test]
    fn reports_failed_inequality() {
        let a = Polytope::new(vec![vec![-0.3, 0.2], vec![0.3, 0.2]], 1).unwrap();
        let plane = PlaneDir::new(vec![vec![1.0, 0.0]], 2).unwrap();
        let v = SquashMap::violations(&a, &[0.0, 0.0], 1.0, &plane, 0.05, 0.2);
        assert_eq!(v, vec![SquashPrecondition::NearPlane]);
        let v = SquashMap::violations(&a, &[0.0, 0.0], 0.4, &plane, 0.6, 0.2);
        assert!(v.contains(&SquashPrecondition::EpsRange) && v.contains(&SquashPrecondition::MarginInsideBall));
    }

    #[test]
    fn sampled_lipschitz() {
        let s = setup();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut worst: f64 = 0.0;
        for _ in 0..20000 {
            let z: Vec<f64> = (0..2).map(|_| rng.gen_range(-0.6..0.6)).collect();
            let w: Vec<f64> = z.iter().map(|c| c + rng.gen_range(-0.05..0.05)).collect();
            let d = dist(&z, &w);
            if d > 0.0 {
                worst = worst.max(dist(&s.apply(&z), &s.apply(&w)) / d);
            }
        }
        assert!(worst <= s.lipschitz_bound() + 1e-9, "{worst}");
    }

    #[test]
    fn distance_to_square() {
        let sq = Polytope::aabb(&[0.0, 0.0, 0.0], &[1.0, 1.0, 0.0]).unwrap();
        assert!((polytope_distance(&sq, &[0.5, 0.5, 2.0]) - 2.0).abs() < 1e-12);
        assert!((polytope_distance(&sq, &[2.0, 0.5, 0.0]) - 1.0).abs() < 1e-12);
        assert!((polytope_distance(&sq, &[2.0, 2.0, 1.0]) - 3f64.sqrt()).abs() < 1e-12);
    }
}
