//! The anisotropic functional `Φ_{F,λ}(E) = ∫_{E_rec} F(x, Tan(E,x)) dH^d + λ(E_irr) H^d(E_irr)`
//! on polyhedral sets, plus density ratios.
//!
//! The rectifiable part is a list of interior-disjoint convex pieces; the
//! purely unrectifiable part is carried only as a mass and an opaque tag.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{self, dot, norm, sub, PlaneDir, Point, Polytope};

type IntegrandFn = dyn Fn(&[f64], &PlaneDir) -> f64 + Send + Sync;
type SetFn = dyn Fn(&str) -> f64 + Send + Sync;

/// A positive bounded integrand `F(x, T)`.
#[derive(Clone)]
pub struct Integrand {
    name: String,
    upper_bound: f64,
    eval: Arc<IntegrandFn>,
}

impl fmt::Debug for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Integrand({}, b={})", self.name, self.upper_bound)
    }
}

fn parse_params(spec: &str) -> Result<Vec<(String, f64)>> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got '{kv}'")))?;
            let v: f64 = v.trim().parse().map_err(|_| Error::Parse(format!("bad number in '{kv}'")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn take(params: &[(String, f64)], key: &str, default: Option<f64>) -> Result<f64> {
    params
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| *v)
        .or(default)
        .ok_or_else(|| Error::Parse(format!("missing parameter '{key}'")))
}

fn check_keys(params: &[(String, f64)], allowed: &[&str]) -> Result<()> {
    match params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        Some((k, _)) => Err(Error::Parse(format!("unknown parameter '{k}'"))),
        None => Ok(()),
    }
}

impl Integrand {
    pub fn new(name: impl Into<String>, upper_bound: f64, eval: impl Fn(&[f64], &PlaneDir) -> f64 + Send + Sync + 'static) -> Self {
        Integrand { name: name.into(), upper_bound, eval: Arc::new(eval) }
    }

    pub fn constant(c: f64) -> Self {
        Integrand::new(format!("const:{c}"), c, move |_, _| c)
    }

    /// `base + slope * x[axis]`, bounded by `max`.
    pub fn linear(axis: usize, base: f64, slope: f64, max: f64) -> Self {
        Integrand::new(format!("linear:axis={axis},base={base},slope={slope}"), max, move |x, _| base + slope * x[axis])
    }

    /// `a + (b - a) |P_T e_axis|`: depends on the tangent plane only.
    pub fn aniso(axis: usize, a: f64, b: f64) -> Self {
        Integrand::new(format!("aniso:axis={axis},a={a},b={b}"), a.max(b), move |x, t| {
            let mut e = vec![0.0; x.len()];
            e[axis] = 1.0;
            a + (b - a) * norm(&t.project(&e))
        })
    }

    /// Registry: `const:c`, `linear:axis=i,base=b[,slope=s][,max=m]`,
    /// `aniso:axis=i,a=..,b=..`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        match kind {
            "const" => {
                let c: f64 = rest.trim().parse().map_err(|_| Error::Parse(format!("bad constant integrand '{spec}'")))?;
                Ok(Integrand::constant(c))
            }
            "linear" => {
                let p = parse_params(rest)?;
                check_keys(&p, &["axis", "base", "slope", "max"])?;
                let axis = take(&p, "axis", None)?;
                if axis < 0.0 || axis.fract() != 0.0 {
                    return Err(Error::Parse(format!("bad axis in '{spec}'")));
                }
                Ok(Integrand::linear(axis as usize, take(&p, "base", Some(1.0))?, take(&p, "slope", Some(1.0))?, take(&p, "max", Some(1e6))?))
            }
            "aniso" => {
                let p = parse_params(rest)?;
                check_keys(&p, &["axis", "a", "b"])?;
                Ok(Integrand::aniso(take(&p, "axis", Some(0.0))? as usize, take(&p, "a", Some(1.0))?, take(&p, "b", Some(2.0))?))
            }
            _ => Err(Error::Parse(format!("unknown integrand '{spec}'"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn upper_bound(&self) -> f64 {
        self.upper_bound
    }

    /// Evaluates and checks `0 < F <= b`.
    pub fn eval(&self, x: &[f64], t: &PlaneDir) -> Result<f64> {
        let v = (self.eval)(x, t);
        if !(v > 0.0 && v <= self.upper_bound) {
            return Err(Error::IntegrandRange(format!("{} = {v} at {x:?} (bound {})", self.name, self.upper_bound)));
        }
        Ok(v)
    }

    /// Pointwise multiple `s F`.
    pub fn scaled(&self, s: f64) -> Integrand {
        let inner = self.eval.clone();
        Integrand::new(format!("{}*{s}", self.name), self.upper_bound * s, move |x, t| s * inner(x, t))
    }
}

/// A set function `λ` on tags of unrectifiable parts.
#[derive(Clone)]
pub struct SetFunction {
    name: String,
    upper_bound: f64,
    eval: Arc<SetFn>,
}

impl fmt::Debug for SetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SetFunction({}, b={})", self.name, self.upper_bound)
    }
}

impl SetFunction {
    pub fn new(name: impl Into<String>, upper_bound: f64, eval: impl Fn(&str) -> f64 + Send + Sync + 'static) -> Self {
        SetFunction { name: name.into(), upper_bound, eval: Arc::new(eval) }
    }

    pub fn constant(c: f64) -> Self {
        SetFunction::new(format!("const:{c}"), c, move |_| c)
    }

    /// Registry: `const:c`.
    pub fn parse(spec: &str) -> Result<Self> {
        match spec.split_once(':') {
            Some(("const", c)) => {
                let c: f64 = c.trim().parse().map_err(|_| Error::Parse(format!("bad constant '{spec}'")))?;
                Ok(SetFunction::constant(c))
            }
            _ => Err(Error::Parse(format!("unknown set function '{spec}'"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, tag: &str) -> Result<f64> {
        let v = (self.eval)(tag);
        if !(0.0..=self.upper_bound).contains(&v) {
            return Err(Error::IntegrandRange(format!("{}({tag}) = {v} outside [0, {}]", self.name, self.upper_bound)));
        }
        Ok(v)
    }
}

/// `E = E_rec ⊔ E_irr` with `E_rec` a union of interior-disjoint convex pieces.
#[derive(Debug, Clone)]
pub struct PolyhedralSet {
    pieces: Vec<Polytope>,
    pub irr_mass: f64,
    pub irr_tag: String,
}

const OVERLAP_TOL: f64 = 1e-9;

impl PolyhedralSet {
    pub fn new(pieces: Vec<Polytope>, irr_mass: f64, irr_tag: impl Into<String>) -> Result<Self> {
        if let Some(p) = pieces.first() {
            let d = p.dim();
            if let Some(q) = pieces.iter().find(|q| q.dim() != d || q.ambient() != p.ambient()) {
                return Err(Error::DimensionMismatch(format!("pieces of dimension {d} and {}", q.dim())));
            }
        }
        if !(irr_mass >= 0.0 && irr_mass.is_finite()) {
            return Err(Error::precondition("unrectifiable mass must be finite and nonnegative"));
        }
        for (i, a) in pieces.iter().enumerate() {
            for (j, b) in pieces.iter().enumerate().skip(i + 1) {
                if let Some(c) = a.intersect(b) {
                    let m = c.measure();
                    if m >= OVERLAP_TOL {
                        return Err(Error::precondition(format!("pieces {i} and {j} overlap in measure {m}")));
                    }
                }
            }
        }
        Ok(PolyhedralSet { pieces, irr_mass, irr_tag: irr_tag.into() })
    }

    pub fn rectifiable(pieces: Vec<Polytope>) -> Result<Self> {
        Self::new(pieces, 0.0, "")
    }

    pub fn pieces(&self) -> &[Polytope] {
        &self.pieces
    }

    pub fn dim(&self) -> Option<usize> {
        self.pieces.first().map(|p| p.dim())
    }

    /// `H^d(E_rec) + H^d(E_irr)`.
    pub fn measure(&self) -> f64 {
        self.pieces.iter().map(|p| p.measure()).sum::<f64>() + self.irr_mass
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        xs[i] = 0.5 * (1.0 - x);
        ws[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}

/// Collapsed tensor rule on a `d`-simplex, weights summing to its measure.
pub fn simplex_rule(simplex: &[Point], order: usize) -> (Vec<Point>, Vec<f64>) {
    let d = simplex.len() - 1;
    let (xs, ws) = gauss_legendre(order.max(1));
    let edges: Vec<Point> = simplex[1..].iter().map(|v| sub(v, &simplex[0])).collect();
    let gram: Vec<Vec<f64>> = edges.iter().map(|a| edges.iter().map(|b| dot(a, b)).collect()).collect();
    let vol_factor = geometry::det(gram).max(0.0).sqrt();
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    let total = xs.len().pow(d as u32);
    for flat in 0..total {
        let mut idx = flat;
        let mut bary = vec![0.0; d];
        let mut rest = 1.0;
        let mut w = vol_factor;
        for (i, b) in bary.iter_mut().enumerate() {
            let j = idx % xs.len();
            idx /= xs.len();
            let u = xs[j];
            *b = rest * u;
            w *= ws[j];
            if i + 1 < d {
                w *= (1.0 - u).powi((d - i - 1) as i32);
            }
            rest *= 1.0 - u;
        }
        let mut p = simplex[0].clone();
        for (b, e) in bary.iter().zip(&edges) {
            for (pi, ei) in p.iter_mut().zip(e) {
                *pi += b * ei;
            }
        }
        pts.push(p);
        wts.push(w);
    }
    (pts, wts)
}

fn integrate_piece(p: &Polytope, f: &Integrand, order: usize) -> Result<f64> {
    if p.dim() == 0 {
        return f.eval(&p.vertices()[0], &p.tangent());
    }
    let t = p.tangent();
    let mut total = 0.0;
    for s in p.simplices() {
        let (pts, wts) = simplex_rule(&s, order);
        for (x, w) in pts.iter().zip(&wts) {
            total += w * f.eval(x, &t)?;
        }
    }
    Ok(total)
}

/// Default rule size: exact for polynomials of degree ≤ 5 on triangles.
pub const DEFAULT_ORDER: usize = 4;

/// `Φ_{F,λ}(E)`.
pub fn phi(e: &PolyhedralSet, f: &Integrand, lambda: &SetFunction, order: usize) -> Result<f64> {
    phi_with(e, f, lambda, order, Exec::default())
}

pub fn phi_with(e: &PolyhedralSet, f: &Integrand, lambda: &SetFunction, order: usize, exec: Exec) -> Result<f64> {
    let parts = exec.map_slice(&e.pieces, |p| integrate_piece(p, f, order));
    let mut total = 0.0;
    for v in parts {
        total += v?;
    }
    if e.irr_mass > 0.0 {
        total += lambda.eval(&e.irr_tag)? * e.irr_mass;
    }
    Ok(total)
}

/// Number of sides of the polygon standing in for a disk.
pub const DISK_SIDES: usize = 64;

/// Regular polygon with the area of the disk of radius `r`, centred at
/// `c` in the plane spanned by the orthonormal pair `u`, `v`.
fn disk_polygon(c: &[f64], u: &[f64], v: &[f64], r: f64) -> Result<Polytope> {
    let n = DISK_SIDES as f64;
    let big = r * (2.0 * PI / (n * (2.0 * PI / n).sin())).sqrt();
    let pts: Vec<Point> = (0..DISK_SIDES)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / n;
            c.iter().zip(u).zip(v).map(|((ci, ui), vi)| ci + big * (a.cos() * ui + a.sin() * vi)).collect()
        })
        .collect();
    Polytope::new(pts, 2)
}

/// The part of a piece inside `B(x, r)`: exact for segments, a 64-gon clip
/// for planar pieces.
fn ball_part(p: &Polytope, x: &[f64], r: f64) -> Result<Option<Polytope>> {
    let origin = p.hull_origin().to_vec();
    let t = p.tangent();
    let foot: Point = {
        let proj = t.project(&sub(x, &origin));
        origin.iter().zip(&proj).map(|(a, b)| a + b).collect()
    };
    let h = geometry::dist(x, &foot);
    if h >= r {
        return Ok(None);
    }
    let rho = (r * r - h * h).sqrt();
    match p.dim() {
        1 => {
            let u = &t.basis()[0];
            let ends = [geometry::axpy(&foot, -rho, u), geometry::axpy(&foot, rho, u)];
            let seg = Polytope::new(ends.to_vec(), 1)?;
            Ok(seg.intersect(p))
        }
        2 => {
            let b = t.basis();
            Ok(disk_polygon(&foot, &b[0], &b[1], rho)?.intersect(p))
        }
        d => Err(Error::Unsupported(format!("ball clipping for {d}-dimensional pieces"))),
    }
}

/// `Φ_F(E ∩ B(x,r)) / (ω_d r^d F(x, Tan(E,x)))` for `x` interior to one piece.
pub fn density_ratio(e: &PolyhedralSet, f: &Integrand, lambda: &SetFunction, x: &[f64], r: f64) -> Result<f64> {
    let _ = lambda;
    if !(r > 0.0) {
        return Err(Error::precondition("radius must be positive"));
    }
    let host: Vec<usize> = (0..e.pieces.len())
        .filter(|&i| {
            let p = &e.pieces[i];
            p.hull_distance(x) <= p.tolerance() && p.contains(x)
        })
        .collect();
    let [i] = host[..] else {
        return Err(Error::precondition(format!("point lies in {} pieces", host.len())));
    };
    let p = &e.pieces[i];
    let slack = p.max_slack(x);
    if slack > -p.tolerance() {
        return Err(Error::precondition("point is on a piece boundary"));
    }
    let d = p.dim();
    let mut num = 0.0;
    for q in &e.pieces {
        if let Some(part) = ball_part(q, x, r)? {
            num += integrate_piece(&part, f, DEFAULT_ORDER)?;
        }
    }
    let den = geometry::omega(d) * r.powi(d as i32) * f.eval(x, &p.tangent())?;
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_square() -> PolyhedralSet {
        PolyhedralSet::rectifiable(vec![Polytope::aabb(&[0.0, 0.0], &[1.0, 1.0]).unwrap()]).unwrap()
    }

    #[test]
    fn gauss_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(4);
        for k in 0..8 {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            assert_abs_diff_eq!(s, 1.0 / (k as f64 + 1.0), epsilon = 1e-14);
        }
    }

    #[test]
    fn simplex_rule_weights() {
        let tri = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 1.0]];
        let (p, w) = simplex_rule(&tri, 4);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        // ∫ x^2 y over the triangle = 2/15
        let s: f64 = p.iter().zip(&w).map(|(p, w)| w * p[0] * p[0] * p[1]).sum();
        assert_abs_diff_eq!(s, 2.0 / 15.0, epsilon = 1e-14);
        let tet = vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let (_, w) = simplex_rule(&tet, 3);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0 / 6.0, epsilon = 1e-14);
    }

    #[test]
    fn examples() {
        let e = unit_square();
        let one = SetFunction::constant(1.0);
        assert_abs_diff_eq!(phi(&e, &Integrand::constant(1.0), &one, 4).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(phi(&e, &Integrand::constant(2.0), &one, 4).unwrap(), 2.0, epsilon = 1e-12);
        let lin = Integrand::parse("linear:axis=0,base=1").unwrap();
        assert_abs_diff_eq!(phi(&e, &lin, &one, 4).unwrap(), 1.5, epsilon = 1e-12);
        let with_irr = PolyhedralSet::new(e.pieces().to_vec(), 0.25, "dust").unwrap();
        assert_abs_diff_eq!(phi(&with_irr, &Integrand::constant(1.0), &one, 4).unwrap(), 1.25, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let a = Polytope::aabb(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let b = Polytope::aabb(&[0.5, 0.0], &[1.5, 1.0]).unwrap();
        assert!(PolyhedralSet::rectifiable(vec![a.clone(), b]).is_err());
        let c = Polytope::aabb(&[1.0, 0.0], &[2.0, 1.0]).unwrap();
        assert!(PolyhedralSet::rectifiable(vec![a, c]).is_ok());
        let bad = Integrand::linear(0, -1.0, 1.0, 10.0);
        assert!(matches!(phi(&unit_square(), &bad, &SetFunction::constant(1.0), 4), Err(Error::IntegrandRange(_))));
        assert!(Integrand::parse("linear:axis=0,bogus=2").is_err());
    }

    #[test]
    fn density_limits() {
        let e = unit_square();
        let one = SetFunction::constant(1.0);
        let x = [0.3, 0.6];
        for f in [Integrand::constant(1.0), Integrand::constant(5.0), Integrand::parse("linear:axis=0,base=1").unwrap()] {
            let mut prev = f64::INFINITY;
            for j in 3..=8 {
                let r = 0.5f64.powi(j);
                let q = density_ratio(&e, &f, &one, &x, r).unwrap();
                let gap = (q - 1.0).abs();
                assert!(gap <= prev + 1e-12);
                prev = gap;
            }
            assert!(prev < 1e-3);
        }
        assert!(density_ratio(&e, &Integrand::constant(1.0), &one, &[0.0, 0.5], 0.1).is_err());
    }

    #[test]
    fn segment_density() {
        let seg = Polytope::new(vec![vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 1.0]], 1).unwrap();
        let e = PolyhedralSet::rectifiable(vec![seg]).unwrap();
        let q = density_ratio(&e, &Integrand::aniso(0, 1.0, 2.0), &SetFunction::constant(1.0), &[0.5, 0.5, 0.5], 0.01).unwrap();
        assert_abs_diff_eq!(q, 1.0, epsilon = 1e-12);
    }
}
