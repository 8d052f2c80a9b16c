use super::{axpy, dot, norm, sub, Point, Polytope};
use crate::error::{Error, Result};

/// Ray parameter `t*` at which `x + t u` leaves `delta`, with `x` interior.
pub fn exit_parameter(delta: &Polytope, x: &[f64], u: &[f64]) -> Result<f64> {
    let xl = delta.to_local(x);
    let ul: Vec<f64> = {
        let tip = delta.to_local(&axpy(x, 1.0, u));
        sub(&tip, &xl)
    };
    if norm(&ul) <= 1e-15 {
        return Err(Error::precondition("ray direction is zero within the hull"));
    }
    let mut best = f64::INFINITY;
    for (a, b) in delta.local_facet_data() {
        let au = dot(&a, &ul);
        if au > 1e-15 {
            best = best.min((b - dot(&a, &xl)) / au);
        }
    }
    if !best.is_finite() {
        return Err(Error::Degenerate("ray does not leave the polytope".into()));
    }
    Ok(best)
}

fn check_center(delta: &Polytope, x: &[f64]) -> Result<()> {
    if x.len() != delta.ambient() {
        return Err(Error::DimensionMismatch(format!("point of length {}, ambient {}", x.len(), delta.ambient())));
    }
    if !delta.contains_interior(x, 1e-12) {
        return Err(Error::NotInterior(format!("{x:?}")));
    }
    Ok(())
}

/// Boundary point on the ray from interior `x` through `y`.
pub fn radial_project(delta: &Polytope, x: &[f64], y: &[f64]) -> Result<Point> {
    check_center(delta, x)?;
    if y.len() != x.len() {
        return Err(Error::DimensionMismatch("point lengths differ".into()));
    }
    let u = sub(y, x);
    if norm(&u) <= 1e-15 {
        return Err(Error::precondition("y coincides with the projection center"));
    }
    if delta.hull_distance(y) > delta.tolerance() {
        return Err(Error::precondition("y is not in the affine hull"));
    }
    let t = exit_parameter(delta, x, &u)?;
    Ok(axpy(x, t, &u))
}

/// Boundary point on the ray from interior `x` along direction `u`.
pub fn radial_project_directional(delta: &Polytope, x: &[f64], u: &[f64]) -> Result<Point> {
    check_center(delta, x)?;
    let t = exit_parameter(delta, x, u)?;
    Ok(axpy(x, t, u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::dist;

    #[test]
    fn examples() {
        let sq = Polytope::aabb(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let p = radial_project(&sq, &[0.5, 0.5], &[0.75, 0.5]).unwrap();
        assert!(dist(&p, &[1.0, 0.5]) < 1e-12);
        let p = radial_project(&sq, &[0.5, 0.5], &[0.6, 0.6]).unwrap();
        assert!(dist(&p, &[1.0, 1.0]) < 1e-12);
        let cube = Polytope::aabb(&[0.0; 3], &[1.0; 3]).unwrap();
        let p = radial_project(&cube, &[0.5; 3], &[0.5, 0.5, 0.9]).unwrap();
        assert!(dist(&p, &[0.5, 0.5, 1.0]) < 1e-12);
    }

    #[test]
    fn errors() {
        let sq = Polytope::aabb(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(matches!(radial_project(&sq, &[0.0, 0.5], &[0.5, 0.5]), Err(Error::NotInterior(_))));
        assert!(matches!(radial_project(&sq, &[0.5, 0.5], &[0.5, 0.5]), Err(Error::Precondition(_))));
    }

    #[test]
    fn idempotent_on_boundary() {
        let sq = Polytope::aabb(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let x = [0.3, 0.6];
        for k in 0..50 {
            let th = k as f64 * 0.13;
            let y = [x[0] + 0.1 * th.cos(), x[1] + 0.1 * th.sin()];
            let p = radial_project(&sq, &x, &y).unwrap();
            let q = radial_project(&sq, &x, &p).unwrap();
            assert!(dist(&p, &q) < 1e-9);
            assert!(sq.max_slack(&p).abs() < 1e-10);
        }
    }
}
