use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::polygon::{ConvexPolygon, P2};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{Point, Polytope};
use crate::rng;

pub const PILOT_DRAWS: usize = 32;

/// A weighted `d`-dimensional piece of a load (for `d = 1`, a segment).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub vertices: Vec<Point>,
    pub weight: f64,
}

impl Piece {
    pub fn segment(a: Point, b: Point, weight: f64) -> Self {
        Piece { vertices: vec![a, b], weight }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterSelection {
    pub cell: usize,
    pub center: Point,
    /// Draws after the pilot, the accepted one included.
    pub draws_used: usize,
    /// Acceptance threshold on the projected measure.
    pub ratio_bound: f64,
    /// Projected measure of the load from the accepted center.
    pub measure: f64,
    pub pilot_mean: f64,
    pub ball_center: Point,
    pub ball_radius: f64,
}

/// Number of post-pilot draws before selection gives up.
pub fn draw_limit(beta: f64) -> usize {
    10 * (1.0 / (1.0 - beta)).ceil() as usize
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::precondition(format!("beta must lie in (0,1), got {beta}")));
    }
    Ok(())
}

/// Ball `B(x0, r0)` with `r0 = inradius / 4`, so that `B(x0, 2 r0)` lies in
/// the cell and `r0 >= rotundity * circumradius / 4`.
pub(crate) fn center_ball(poly: &ConvexPolygon) -> Result<(P2, f64)> {
    let (c, rho) = poly.inball();
    let r0 = rho / 4.0;
    if !(r0 > 0.0) || poly.edge_distance(c) < 2.0 * r0 * (1.0 - 1e-12) {
        return Err(Error::Degenerate("cell has no interior ball".into()));
    }
    Ok((c, r0))
}

pub(crate) fn uniform_in_disk(rng: &mut ChaCha8Rng, c: P2, r: f64) -> P2 {
    let rad = r * rng.gen::<f64>().sqrt();
    let th = std::f64::consts::TAU * rng.gen::<f64>();
    [c[0] + rad * th.cos(), c[1] + rad * th.sin()]
}

/// Projected measure of weighted segments from `x`, infinite when a segment
/// meets `x`.
pub(crate) fn projected_measure(poly: &ConvexPolygon, x: P2, segs: &[(P2, P2, f64)]) -> f64 {
    let mut total = 0.0;
    for &(a, b, w) in segs {
        match poly.arc(x, a, b) {
            Ok(arc) => total += w * arc.length,
            Err(_) => return f64::INFINITY,
        }
    }
    total
}

/// Pilot-mean Markov acceptance with an arbitrary projected-measure oracle.
pub(crate) fn select_with(
    poly: &ConvexPolygon,
    cell: usize,
    beta: f64,
    rng: &mut ChaCha8Rng,
    empty: bool,
    measure: impl Fn(P2) -> f64,
) -> Result<CenterSelection> {
    check_beta(beta)?;
    let (c, r0) = center_ball(poly)?;
    select_in_ball(&c, r0, cell, beta, rng, empty, |x| measure([x[0], x[1]]))
}

/// Uniform point of the ball `B(c, r)`; planar balls use polar sampling.
pub(crate) fn uniform_in_ball(rng: &mut ChaCha8Rng, c: &[f64], r: f64) -> Point {
    if c.len() == 2 {
        return uniform_in_disk(rng, [c[0], c[1]], r).to_vec();
    }
    loop {
        let v: Point = (0..c.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if v.iter().map(|a| a * a).sum::<f64>() <= 1.0 {
            return c.iter().zip(&v).map(|(a, b)| a + r * b).collect();
        }
    }
}

pub(crate) fn select_in_ball(
    c: &[f64],
    r0: f64,
    cell: usize,
    beta: f64,
    rng: &mut ChaCha8Rng,
    empty: bool,
    measure: impl Fn(&[f64]) -> f64,
) -> Result<CenterSelection> {
    check_beta(beta)?;
    let make = |x: Point, draws: usize, bound: f64, m: f64, mean: f64| CenterSelection {
        cell,
        center: x,
        draws_used: draws,
        ratio_bound: bound,
        measure: m,
        pilot_mean: mean,
        ball_center: c.to_vec(),
        ball_radius: r0,
    };
    if empty {
        let x = uniform_in_ball(rng, c, r0);
        return Ok(make(x, 1, 0.0, 0.0, 0.0));
    }
    let pilot: Vec<f64> = (0..PILOT_DRAWS).map(|_| measure(&uniform_in_ball(rng, c, r0))).collect();
    let finite: Vec<f64> = pilot.iter().copied().filter(|m| m.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::CenterSelection(0));
    }
    let mean = finite.iter().sum::<f64>() / finite.len() as f64;
    let bound = mean / beta;
    let limit = draw_limit(beta);
    for draw in 1..=limit {
        let x = uniform_in_ball(rng, c, r0);
        let m = measure(&x);
        if m <= bound {
            return Ok(make(x, draw, bound, m, mean));
        }
    }
    Err(Error::CenterSelection(limit))
}

fn load_segments(delta: &Polytope, load: &[Piece]) -> Result<Vec<(P2, P2, f64)>> {
    load.iter()
        .map(|p| {
            if p.vertices.len() != 2 || p.vertices.iter().any(|v| v.len() != 2) {
                return Err(Error::Unsupported("loads must be planar segments".into()));
            }
            if !(p.weight >= 0.0 && p.weight.is_finite()) {
                return Err(Error::precondition("load weights must be finite and nonnegative"));
            }
            for v in &p.vertices {
                if !delta.contains(v) {
                    return Err(Error::precondition(format!("load vertex {v:?} lies outside the cell")));
                }
            }
            Ok(([p.vertices[0][0], p.vertices[0][1]], [p.vertices[1][0], p.vertices[1][1]], p.weight))
        })
        .collect()
}

/// Rejection-samples a projection center for `delta` whose projected load is
/// at most the pilot mean over `beta`.
pub fn select_center(delta: &Polytope, load: &[Piece], beta: f64, seed: u64) -> Result<CenterSelection> {
    let poly = ConvexPolygon::from_polytope(delta)?;
    let segs = load_segments(delta, load)?;
    let total: f64 = segs.iter().map(|(a, b, w)| w * super::polygon::len([b[0] - a[0], b[1] - a[1]])).sum();
    let mut rng = rng::stream(seed, &[STAGE_SELECT, delta.id]);
    select_with(&poly, delta.id as usize, beta, &mut rng, total == 0.0, |x| projected_measure(&poly, x, &segs))
}

pub(crate) const STAGE_SELECT: u64 = 0x5e1ec7;

/// Statistics of the projected measure over random centers for one load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadStats {
    pub load_measure: f64,
    /// Fitted constant: `beta` times the `(1 - beta)`-quantile of the ratios,
    /// times `R^(2d)`.
    pub c_hat: f64,
    pub quantile: f64,
    pub mean_ratio: f64,
    pub max_ratio: f64,
    /// Fraction of centers above `c_hat / beta * R^(-2d) * H(E)`.
    pub violation_fraction: f64,
    /// Fraction of centers above the mean ratio over `beta`.
    pub markov_fraction: f64,
    /// Projected measure over load measure, per sampled center.
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub beta: f64,
    pub trials: usize,
    pub circumradius: f64,
    pub ball_radius: f64,
    pub loads: Vec<LoadStats>,
    pub c_hat: f64,
    pub worst_violation_fraction: f64,
    pub worst_markov_fraction: f64,
}

/// Samples `trials` centers in the prescribed ball for every load in
/// `family` and measures the projected loads exactly.
pub fn verify_projection_bound(
    delta: &Polytope,
    family: &[Vec<Piece>],
    beta: f64,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<ProjectionReport> {
    check_beta(beta)?;
    if trials < 100 {
        return Err(Error::precondition(format!("at least 100 trials are needed, got {trials}")));
    }
    let poly = ConvexPolygon::from_polytope(delta)?;
    let (c, r0) = center_ball(&poly)?;
    let big_r = delta.circumradius();
    let loads: Vec<Vec<(P2, P2, f64)>> = family.iter().map(|l| load_segments(delta, l)).collect::<Result<_>>()?;
    let stats = exec.map_range(loads.len(), |li| {
        let segs = &loads[li];
        let hd: f64 = segs.iter().map(|(a, b, w)| w * super::polygon::len([b[0] - a[0], b[1] - a[1]])).sum();
        let mut rng = rng::stream(seed, &[STAGE_SELECT + 1, li as u64]);
        let ratios: Vec<f64> = (0..trials)
            .map(|_| {
                let x = uniform_in_disk(&mut rng, c, r0);
                if hd == 0.0 {
                    0.0
                } else {
                    projected_measure(&poly, x, segs) / hd
                }
            })
            .collect();
        let mut sorted = ratios.clone();
        sorted.sort_by(f64::total_cmp);
        let idx = (((1.0 - beta) * trials as f64).ceil() as usize).clamp(1, trials) - 1;
        let quantile = sorted[idx];
        let finite: Vec<f64> = ratios.iter().copied().filter(|r| r.is_finite()).collect();
        let mean = finite.iter().sum::<f64>() / finite.len().max(1) as f64;
        let frac = |t: f64| ratios.iter().filter(|&&r| r > t).count() as f64 / trials as f64;
        LoadStats {
            load_measure: hd,
            c_hat: beta * quantile * big_r.powi(2),
            quantile,
            mean_ratio: mean,
            max_ratio: sorted[trials - 1],
            violation_fraction: frac(quantile),
            markov_fraction: frac(mean / beta),
            ratios,
        }
    });
    Ok(ProjectionReport {
        beta,
        trials,
        circumradius: big_r,
        ball_radius: r0,
        c_hat: stats.iter().map(|s| s.c_hat).fold(0.0, f64::max),
        worst_violation_fraction: stats.iter().map(|s| s.violation_fraction).fold(0.0, f64::max),
        worst_markov_fraction: stats.iter().map(|s| s.markov_fraction).fold(0.0, f64::max),
        loads: stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Polytope {
        Polytope::aabb(&[0.0, 0.0], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn empty_load_takes_first_draw() {
        let s = select_center(&unit(), &[], 0.75, 3).unwrap();
        assert_eq!(s.draws_used, 1);
        let d = crate::geometry::dist(&s.center, &s.ball_center);
        assert!(d <= s.ball_radius);
        assert!((s.ball_radius - 0.125).abs() < 1e-9);
    }

    #[test]
    fn accepted_center_respects_bound() {
        let load = vec![Piece::segment(vec![0.1, 0.5], vec![0.9, 0.5], 1.0)];
        for seed in 0..20 {
            let s = select_center(&unit(), &load, 0.75, seed).unwrap();
            assert!(s.measure <= s.ratio_bound);
            assert!(s.draws_used <= draw_limit(0.75));
        }
    }

    #[test]
    fn empty_family_member_has_zero_ratios() {
        let r = verify_projection_bound(&unit(), &[vec![]], 0.75, 100, 1, Exec::Sequential).unwrap();
        assert!(r.loads[0].ratios.iter().all(|&x| x == 0.0));
    }
}
