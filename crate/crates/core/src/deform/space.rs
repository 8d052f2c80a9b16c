//! Deformation of 2-chains in R^3 onto the 2-skeleton of a cubical grid.
//!
//! Triangles are cut along every grid plane. Pieces inside a cube are pushed
//! to its faces by central projection from a selected center, one pyramid
//! per face, and each face is resolved from the net multiplicity of what
//! landed on it; collapsed faces are emptied by a planar projection from a
//! point off every piece. The identity is checked plane by plane on a
//! trapezoidal decomposition.

use std::collections::BTreeMap;

use rand::Rng;

use super::center::{select_in_ball, uniform_in_ball, CenterSelection, STAGE_SELECT};
use super::{DeformOptions, DeformPlan, DeformationCertificate, FaceDecision, FaceResolution, PLChain, Prism};
use crate::chain::Chain;
use crate::coeff::CoeffGroup;
use crate::complex::{CellComplex, GridKey};
use crate::error::{Error, Result};
use crate::geometry::{PlaneDir, Point, Polytope, SquashMap};
use crate::rng;

const STAGE_SQUASH: u64 = 0x5c0a54;
const COVER_TOL: f64 = 1e-6;
const SQUASH_SAMPLES: usize = 64;
/// Residual mass allowed in the identity, relative to `max(mass_in, h^2)`.
const IDENTITY_TOL: f64 = 1e-8;

type P3 = [f64; 3];
type P2 = [f64; 2];

fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add(a: P3, b: P3) -> P3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale(a: P3, s: f64) -> P3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn dot(a: P3, b: P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: P3, b: P3) -> P3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: P3) -> f64 {
    dot(a, a).sqrt()
}

fn p3(v: &[f64]) -> P3 {
    [v[0], v[1], v[2]]
}

fn unit(a: usize) -> P3 {
    let mut e = [0.0; 3];
    e[a] = 1.0;
    e
}

/// Vector area of a closed loop.
fn area_vector(v: &[P3]) -> P3 {
    let mut s = [0.0; 3];
    for i in 1..v.len().saturating_sub(1) {
        s = add(s, cross(sub(v[i], v[0]), sub(v[i + 1], v[0])));
    }
    scale(s, 0.5)
}

fn area(v: &[P3]) -> f64 {
    norm(area_vector(v))
}

fn centroid(v: &[P3]) -> P3 {
    let s = v.iter().fold([0.0; 3], |acc, p| add(acc, *p));
    scale(s, 1.0 / v.len() as f64)
}

fn dedup(mut v: Vec<P3>, tol: f64) -> Vec<P3> {
    v.dedup_by(|a, b| norm(sub(*a, *b)) <= tol);
    while v.len() > 1 && norm(sub(v[0], v[v.len() - 1])) <= tol {
        v.pop();
    }
    v
}

/// Part of the loop `v` with `n·z <= c` (`n` a unit vector); points within
/// `tol` of the plane count as inside. Two-point loops are segments.
fn clip(v: &[P3], n: P3, c: f64, tol: f64) -> Vec<P3> {
    let m = v.len();
    let side = |p: P3| {
        let d = dot(n, p) - c;
        if d.abs() <= tol {
            0.0
        } else {
            d
        }
    };
    let mut out: Vec<P3> = Vec::with_capacity(m + 2);
    for i in 0..m {
        let (a, b) = (v[i], v[(i + 1) % m]);
        let (da, db) = (side(a), side(b));
        if da <= 0.0 {
            out.push(a);
        }
        if da * db < 0.0 {
            out.push(add(a, scale(sub(b, a), da / (da - db))));
        }
    }
    dedup(out, tol)
}

fn keep(v: &[P3], dim: usize, tol: f64, h: f64) -> bool {
    match dim {
        1 => v.len() == 2 && norm(sub(v[1], v[0])) > tol,
        _ => v.len() >= 3 && area(v) > tol * h,
    }
}

fn seg_point_distance(p: P3, a: P3, b: P3) -> f64 {
    let d = sub(b, a);
    let dd = dot(d, d);
    let t = if dd == 0.0 { 0.0 } else { (dot(sub(p, a), d) / dd).clamp(0.0, 1.0) };
    norm(sub(p, add(a, scale(d, t))))
}

/// Distance from `x` to a convex polygon (or segment).
fn point_polygon_distance(x: P3, v: &[P3]) -> f64 {
    let a = area_vector(v);
    let an = norm(a);
    if v.len() >= 3 && an > 0.0 {
        let n = scale(a, 1.0 / an);
        let d = dot(n, sub(x, v[0]));
        let p = sub(x, scale(n, d));
        let m = v.len();
        if (0..m).all(|i| dot(cross(sub(v[(i + 1) % m], v[i]), sub(p, v[i])), n) >= 0.0) {
            return d.abs();
        }
    }
    let m = v.len();
    (0..m).map(|i| seg_point_distance(x, v[i], v[(i + 1) % m])).fold(f64::INFINITY, f64::min)
}

/// An axis-aligned box; `axes` are its directions of positive extent.
#[derive(Debug, Clone)]
struct BoxCell {
    lo: P3,
    hi: P3,
    axes: Vec<usize>,
}

impl BoxCell {
    fn bound(&self, a: usize, s: f64) -> f64 {
        if s > 0.0 {
            self.hi[a]
        } else {
            self.lo[a]
        }
    }

    fn reach(&self, x: P3, a: usize, s: f64) -> f64 {
        s * (self.bound(a, s) - x[a])
    }

    /// For each facet `(axis, side)`, the half-spaces `n·z <= c` of the
    /// rays from `x` leaving through it.
    fn pyramids(&self, x: P3) -> Vec<(usize, f64, Vec<(P3, f64)>)> {
        let mut out = Vec::new();
        for &a in &self.axes {
            for s in [-1.0, 1.0] {
                let da = self.reach(x, a, s);
                let mut hs = vec![(scale(unit(a), -s), -s * x[a])];
                for &b in self.axes.iter().filter(|&&b| b != a) {
                    for t in [-1.0, 1.0] {
                        let db = self.reach(x, b, t);
                        let n = sub(scale(unit(b), t * da), scale(unit(a), s * db));
                        let l = norm(n);
                        hs.push((scale(n, 1.0 / l), dot(n, x) / l));
                    }
                }
                out.push((a, s, hs));
            }
        }
        out
    }

    fn project(&self, x: P3, z: P3, a: usize, s: f64) -> Option<P3> {
        let u = sub(z, x);
        let den = s * u[a];
        if den <= 0.0 {
            return None;
        }
        let mut y = add(x, scale(u, self.reach(x, a, s) / den));
        y[a] = self.bound(a, s);
        for b in 0..3 {
            y[b] = y[b].clamp(self.lo[b], self.hi[b]);
        }
        Some(y)
    }

    /// Pieces of `v` by exit facet, each with its central image from `x`.
    fn push(&self, x: P3, v: &[P3], dim: usize, tol: f64, h: f64) -> Vec<(Vec<P3>, Vec<P3>)> {
        let mut out = Vec::new();
        for (a, s, hs) in self.pyramids(x) {
            let mut part = v.to_vec();
            for (n, c) in &hs {
                part = clip(&part, *n, *c, tol);
                if part.len() < dim + 1 {
                    break;
                }
            }
            if !keep(&part, dim, tol, h) {
                continue;
            }
            let image: Option<Vec<P3>> = part.iter().map(|z| self.project(x, *z, a, s)).collect();
            if let Some(image) = image {
                out.push((part, image));
            }
        }
        out
    }
}

/// Swept quadrilateral of the segment `p -> q` moving to `p' -> q'`.
fn sweep(p: P3, q: P3, pi: P3, qi: P3) -> Vec<P3> {
    vec![p, pi, qi, q]
}

/// Volume of the solid swept by `part` onto `image`.
fn prism_volume(part: &[P3], image: &[P3]) -> f64 {
    let flux = |v: &[P3]| if v.len() >= 3 { dot(v[0], area_vector(v)) } else { 0.0 };
    let m = part.len();
    let mut total = flux(image) - flux(part);
    for i in 0..m {
        let j = (i + 1) % m;
        total -= flux(&sweep(part[i], part[j], image[i], image[j]));
    }
    (total / 3.0).abs()
}

#[derive(Debug, Clone, Copy)]
struct Trap {
    x0: f64,
    x1: f64,
    /// Bottom edge at `x0`, `x1`.
    lo: [f64; 2],
    /// Top edge at `x0`, `x1`.
    hi: [f64; 2],
    net: i64,
    count: i64,
}

impl Trap {
    fn area(&self) -> f64 {
        (self.x1 - self.x0) * ((self.hi[0] - self.lo[0]) + (self.hi[1] - self.lo[1])) / 2.0
    }

    fn mid(&self) -> P2 {
        [(self.x0 + self.x1) / 2.0, (self.lo[0] + self.lo[1] + self.hi[0] + self.hi[1]) / 4.0]
    }
}

fn signed_area2(v: &[P2]) -> f64 {
    let m = v.len();
    (0..m).map(|i| v[i][0] * v[(i + 1) % m][1] - v[(i + 1) % m][0] * v[i][1]).sum::<f64>() / 2.0
}

/// Decomposes the plane into trapezoids of constant net multiplicity and
/// covering count. Loops must be simple; only regions met by some loop are
/// returned.
fn trapezoids(group: CoeffGroup, loops: &[(Vec<P2>, i64)], tol: f64) -> Result<Vec<Trap>> {
    struct E {
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
        dg: i64,
        dc: i64,
    }
    let at = |e: &E, x: f64| e.y0 + (e.y1 - e.y0) * (x - e.x0) / (e.x1 - e.x0);
    let mut edges: Vec<E> = Vec::new();
    let mut xs: Vec<f64> = Vec::new();
    for (v, g) in loops {
        let a = signed_area2(v);
        if a.abs() <= tol * tol {
            continue;
        }
        let sigma = if a > 0.0 { 1 } else { -1 };
        let m = v.len();
        for i in 0..m {
            let (p, q) = (v[i], v[(i + 1) % m]);
            xs.push(p[0]);
            if (q[0] - p[0]).abs() <= tol {
                continue;
            }
            let right = q[0] > p[0];
            let (l, r) = if right { (p, q) } else { (q, p) };
            edges.push(E {
                x0: l[0],
                y0: l[1],
                x1: r[0],
                y1: r[1],
                dg: if right { *g } else { group.neg(*g) },
                dc: if right { sigma } else { -sigma },
            });
        }
    }
    for i in 0..edges.len() {
        for j in i + 1..edges.len() {
            let (e, f) = (&edges[i], &edges[j]);
            let (lo, hi) = (e.x0.max(f.x0), e.x1.min(f.x1));
            if hi - lo <= tol {
                continue;
            }
            let (a, b) = (at(e, lo) - at(f, lo), at(e, hi) - at(f, hi));
            if a * b < 0.0 {
                xs.push(lo + (hi - lo) * a / (a - b));
            }
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() <= tol);
    let mut out = Vec::new();
    for w in xs.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let xm = (x0 + x1) / 2.0;
        let mut act: Vec<(f64, f64, f64, i64, i64)> = edges
            .iter()
            .filter(|e| e.x0 <= x0 + tol && e.x1 >= x1 - tol)
            .map(|e| (at(e, xm), at(e, x0), at(e, x1), e.dg, e.dc))
            .collect();
        act.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (mut net, mut count) = (0i64, 0i64);
        for i in 0..act.len() {
            net = group.add(net, act[i].3)?;
            count += act[i].4;
            if i + 1 < act.len() && (net != 0 || count != 0) {
                out.push(Trap { x0, x1, lo: [act[i].1, act[i].2], hi: [act[i + 1].1, act[i + 1].2], net, count });
            }
        }
    }
    Ok(out)
}

/// A formal sum of oriented planar polygons in space.
struct PlaneSum {
    group: CoeffGroup,
    tol: f64,
    planes: Vec<(P3, f64, Vec<(Vec<P3>, i64)>)>,
}

impl PlaneSum {
    fn new(group: CoeffGroup, tol: f64) -> Self {
        PlaneSum { group, tol, planes: Vec::new() }
    }

    fn add(&mut self, v: &[P3], g: i64) {
        let g = self.group.canon(g);
        let a = area_vector(v);
        let an = norm(a);
        if g == 0 || an <= self.tol * self.tol {
            return;
        }
        let mut n = scale(a, 1.0 / an);
        if let Some(i) = (0..3).find(|&i| n[i].abs() > 1e-9) {
            if n[i] < 0.0 {
                n = scale(n, -1.0);
            }
        }
        let c = dot(n, centroid(v));
        let tol = self.tol;
        match self.planes.iter_mut().find(|(m, o, _)| norm(sub(*m, n)) <= 1e-7 && (o - c).abs() <= 10.0 * tol) {
            Some((_, _, list)) => list.push((v.to_vec(), g)),
            None => self.planes.push((n, c, vec![(v.to_vec(), g)])),
        }
    }

    /// `(mass, size)` of the net chain.
    fn measure(&self) -> Result<(f64, f64)> {
        let (mut mass, mut size) = (0.0, 0.0);
        for (n, _, list) in &self.planes {
            let k = (0..3).min_by(|&i, &j| n[i].abs().total_cmp(&n[j].abs())).unwrap();
            let u = cross(unit(k), *n);
            let u = scale(u, 1.0 / norm(u));
            let w = cross(*n, u);
            let loops: Vec<(Vec<P2>, i64)> =
                list.iter().map(|(v, g)| (v.iter().map(|z| [dot(u, *z), dot(w, *z)]).collect(), *g)).collect();
            for t in trapezoids(self.group, &loops, self.tol)? {
                if t.net != 0 {
                    mass += self.group.norm_of(t.net) * t.area();
                    size += t.area();
                }
            }
        }
        Ok((mass, size))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Loc {
    Cube(usize),
    Face(usize),
    Edge,
}

struct Grid3<'a> {
    k: &'a CellComplex,
    h: f64,
    lo: [i64; 3],
    hi: [i64; 3],
    tol: f64,
}

impl<'a> Grid3<'a> {
    fn new(k: &'a CellComplex) -> Result<Self> {
        let spec = k
            .grid_spec()
            .ok_or_else(|| Error::Unsupported("deformation needs a dyadic grid complex".into()))?;
        if k.ambient() != 3 {
            return Err(Error::Unsupported(format!("spatial deformation on a grid in R^{}", k.ambient())));
        }
        let (lo, hi) = spec.integer_box()?;
        let extent = spec.bbox[0].iter().chain(spec.bbox[1].iter()).fold(1.0f64, |m, x| m.max(x.abs()));
        Ok(Grid3 { k, h: spec.side(), lo: [lo[0], lo[1], lo[2]], hi: [hi[0], hi[1], hi[2]], tol: 1e-9 * extent })
    }

    fn line(&self, v: f64) -> Option<i64> {
        let r = (v / self.h).round();
        ((v - r * self.h).abs() <= self.tol).then_some(r as i64)
    }

    fn floor(&self, v: f64, axis: usize) -> i64 {
        ((v / self.h).floor() as i64).clamp(self.lo[axis], self.hi[axis] - 1)
    }

    fn inside(&self, p: P3) -> bool {
        (0..3).all(|i| p[i] >= self.lo[i] as f64 * self.h - self.tol && p[i] <= self.hi[i] as f64 * self.h + self.tol)
    }

    fn id(&self, anchor: [i64; 3], axes: Vec<usize>) -> usize {
        self.k.cell_id(&GridKey { anchor: anchor.to_vec(), axes }).expect("cell inside the grid")
    }

    fn key(&self, dim: usize, id: usize) -> &GridKey {
        self.k.cell(dim, id).grid.as_ref().expect("grid cell")
    }

    fn cell_box(&self, dim: usize, id: usize) -> BoxCell {
        let key = self.key(dim, id);
        let lo = [0, 1, 2].map(|i| key.anchor[i] as f64 * self.h);
        let mut hi = lo;
        for &a in &key.axes {
            hi[a] += self.h;
        }
        BoxCell { lo, hi, axes: key.axes.clone() }
    }

    /// Cuts a polygon (`dim = 2`) or segment (`dim = 1`) along every grid
    /// plane it crosses.
    fn cut(&self, v: Vec<P3>, dim: usize) -> Vec<Vec<P3>> {
        let mut parts = vec![v];
        for ax in 0..3 {
            let mut next = Vec::new();
            for p in parts {
                let lo = p.iter().map(|z| z[ax]).fold(f64::INFINITY, f64::min);
                let hi = p.iter().map(|z| z[ax]).fold(f64::NEG_INFINITY, f64::max);
                let mut rest = p;
                let mut m = (lo / self.h).ceil() as i64;
                while (m as f64) * self.h < hi - self.tol {
                    let c = m as f64 * self.h;
                    m += 1;
                    if c <= lo + self.tol {
                        continue;
                    }
                    let below = clip(&rest, unit(ax), c, self.tol);
                    if keep(&below, dim, self.tol, self.h) {
                        next.push(below);
                    }
                    rest = clip(&rest, scale(unit(ax), -1.0), -c, self.tol);
                }
                if keep(&rest, dim, self.tol, self.h) {
                    next.push(rest);
                }
            }
            parts = next;
        }
        parts
    }

    fn locate(&self, v: &[P3]) -> Loc {
        let c = centroid(v);
        let flat: Vec<(usize, i64)> = (0..3)
            .filter_map(|ax| {
                let line = self.line(c[ax])?;
                v.iter().all(|z| (z[ax] - line as f64 * self.h).abs() <= self.tol).then_some((ax, line))
            })
            .collect();
        let mut anchor = [0, 1, 2].map(|ax| self.floor(c[ax], ax));
        match flat[..] {
            [] => Loc::Cube(self.id(anchor, vec![0, 1, 2])),
            [(ax, line)] => {
                if line < self.lo[ax] || line > self.hi[ax] {
                    return Loc::Edge;
                }
                anchor[ax] = line;
                Loc::Face(self.id(anchor, (0..3).filter(|&b| b != ax).collect()))
            }
            _ => Loc::Edge,
        }
    }

    fn face_axes(&self, face: usize) -> (usize, [usize; 2]) {
        let key = self.key(2, face);
        let flat = (0..3).find(|a| !key.axes.contains(a)).unwrap();
        (flat, [key.axes[0], key.axes[1]])
    }

    /// Corner loop of a face, positively oriented in its frame.
    fn face_loop(&self, face: usize) -> Vec<P3> {
        let b = self.cell_box(2, face);
        let (_, [u, w]) = self.face_axes(face);
        let mut p1 = b.lo;
        p1[u] = b.hi[u];
        let mut p3 = b.lo;
        p3[w] = b.hi[w];
        vec![b.lo, p1, b.hi, p3]
    }
}

fn squash_cube(here: &[(Vec<P3>, i64)], all: &[Vec<P3>], tol: f64, seed: u64, cell: usize) -> Option<f64> {
    let (a, _) = here.iter().max_by(|x, y| area(&x.0).total_cmp(&area(&y.0)))?;
    let (eps, delta) = (0.25, 0.25);
    let m = centroid(a);
    let an = area_vector(a);
    let n = scale(an, 1.0 / norm(an));
    let e1 = sub(a[1], a[0]);
    let e1 = scale(e1, 1.0 / norm(e1));
    let e2 = cross(n, e1);
    let coplanar = |p: &Vec<P3>| p.iter().all(|z| dot(n, sub(*z, m)).abs() <= tol);
    let mut shrink = 0.5;
    for _ in 0..6 {
        let verts: Vec<P3> = a.iter().map(|v| add(m, scale(sub(*v, m), shrink))).collect();
        let rho = verts.iter().map(|v| norm(sub(*v, m))).fold(0.0, f64::max);
        let r = 1.05 * rho / (1.0 - delta);
        let reach = delta * r;
        let clear = all.iter().all(|p| coplanar(p) || point_polygon_distance(m, p) - rho > reach * (1.0 + 1e-9));
        if clear {
            let mut corners: Vec<Point> = Vec::new();
            let k = verts.len();
            for i in 0..k {
                let (p, q, s) = (verts[(i + k - 1) % k], verts[i], verts[(i + 1) % k]);
                if norm(cross(sub(q, p), sub(s, q))) > 1e-9 * rho * rho {
                    corners.push(q.to_vec());
                }
            }
            let set = Polytope::new(corners, 2).ok()?;
            let plane = PlaneDir::spanned_by(&[e1.to_vec(), e2.to_vec()], 3);
            let map = SquashMap::new(set, m.to_vec(), r, plane, eps, delta).ok()?;
            let mut rng = rng::stream(seed, &[STAGE_SQUASH, cell as u64]);
            let mut lip: f64 = 0.0;
            for _ in 0..SQUASH_SAMPLES {
                let z = uniform_in_ball(&mut rng, &m, r);
                let dir = uniform_in_ball(&mut rng, &[0.0; 3], 1.0);
                let dn = crate::geometry::norm(&dir);
                if dn == 0.0 {
                    continue;
                }
                let step = r * 10f64.powf(-3.0 * rng.gen::<f64>()) / dn;
                let w: Point = z.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
                let num = crate::geometry::dist(&map.apply(&z), &map.apply(&w));
                lip = lip.max(num / crate::geometry::dist(&z, &w));
            }
            return Some(lip);
        }
        shrink /= 2.0;
    }
    None
}

/// Projected area of the load from `x`, infinite when `x` meets a piece.
fn projected_area(bx: &BoxCell, x: P3, load: &[(Vec<P3>, f64)], tol: f64, h: f64) -> f64 {
    let mut total = 0.0;
    for (v, w) in load {
        if point_polygon_distance(x, v) <= 10.0 * tol {
            return f64::INFINITY;
        }
        total += w * bx.push(x, v, 2, tol, h).iter().map(|(_, im)| area(im)).sum::<f64>();
    }
    total
}

struct CubeOut {
    selection: CenterSelection,
    images: Vec<(Vec<P3>, i64)>,
    prisms: Vec<Prism>,
    squash: Option<f64>,
}

struct FaceOut {
    decision: FaceDecision,
    mass: f64,
}

fn resolve_face(grid: &Grid3, group: CoeffGroup, face: usize, pieces: &[(Vec<P3>, i64)]) -> Result<FaceOut> {
    let (flat, [u, w]) = grid.face_axes(face);
    let to2 = |z: &P3| [z[u], z[w]];
    let mut loops: Vec<(Vec<P2>, i64)> = pieces.iter().map(|(v, g)| (v.iter().map(to2).collect(), *g)).collect();
    loops.push((grid.face_loop(face).iter().map(to2).collect(), 0));
    let traps = trapezoids(group, &loops, grid.tol)?;
    let cell = grid.h * grid.h;
    let covered: f64 = traps.iter().filter(|t| t.net != 0).map(Trap::area).sum();
    let mass: f64 = traps.iter().map(|t| group.norm_of(t.net) * t.area()).sum();
    let resolution = if covered <= 1e-12 * cell {
        FaceResolution::Empty
    } else if covered >= (1.0 - COVER_TOL) * cell {
        let mut tally: BTreeMap<i64, f64> = BTreeMap::new();
        for t in traps.iter().filter(|t| t.net != 0) {
            *tally.entry(t.net).or_default() += t.area();
        }
        let (&best, &measure) = tally.iter().max_by(|x, y| x.1.total_cmp(y.1)).unwrap();
        if covered - measure > COVER_TOL * cell {
            let detail = tally.iter().map(|(g, m)| format!("{}: {m:.3e}", group.elem(*g))).collect::<Vec<_>>().join(", ");
            return Err(Error::OrientationConflict { cell: face, detail });
        }
        FaceResolution::Covered { coef: best }
    } else {
        let free = traps
            .iter()
            .filter(|t| t.count == 1)
            .max_by(|a, b| a.area().total_cmp(&b.area()))
            .ok_or_else(|| Error::Degenerate(format!("face {face} has no point off its pieces")))?;
        let m = free.mid();
        let mut p = [0.0; 3];
        p[flat] = grid.cell_box(2, face).lo[flat];
        p[u] = m[0];
        p[w] = m[1];
        FaceResolution::Collapsed { point: p.to_vec() }
    };
    Ok(FaceOut { decision: FaceDecision { face, resolution }, mass })
}

pub(crate) fn deform_space(s: &PLChain, k: &CellComplex, opts: &DeformOptions) -> Result<(Chain, DeformationCertificate)> {
    super::center::check_beta(opts.beta)?;
    let grid = Grid3::new(k)?;
    let group = s.group();
    let (tol, h) = (grid.tol, grid.h);
    let tris: Vec<(Vec<P3>, i64)> =
        s.simplices().iter().map(|sx| (sx.vertices.iter().map(|v| p3(v)).collect(), sx.coef)).collect();
    for (v, _) in &tris {
        if let Some(p) = v.iter().find(|p| !grid.inside(**p)) {
            return Err(Error::precondition(format!("vertex {p:?} leaves the grid box")));
        }
    }

    // (i) cut along grid planes
    let mut interior: BTreeMap<usize, Vec<(Vec<P3>, i64)>> = BTreeMap::new();
    let mut on_faces: BTreeMap<usize, Vec<(Vec<P3>, i64)>> = BTreeMap::new();
    let mut all_pieces: Vec<Vec<P3>> = Vec::new();
    for (v, g) in &tris {
        for part in grid.cut(v.clone(), 2) {
            match grid.locate(&part) {
                Loc::Cube(c) => interior.entry(c).or_default().push((part.clone(), *g)),
                Loc::Face(f) => on_faces.entry(f).or_default().push((part.clone(), *g)),
                Loc::Edge => {}
            }
            all_pieces.push(part);
        }
    }
    if all_pieces.len() > opts.piece_limit {
        return Err(Error::CellLimit { count: all_pieces.len(), limit: opts.piece_limit });
    }

    // (ii) squash check and radial descent, per cube
    let work: Vec<(usize, Vec<(Vec<P3>, i64)>)> = interior.into_iter().collect();
    let outs: Vec<Result<CubeOut>> = opts.exec.map_slice(&work, |(cell, pieces)| {
        let cell = *cell;
        let bx = grid.cell_box(3, cell);
        let squash = if opts.squash { squash_cube(pieces, &all_pieces, tol, opts.seed, cell) } else { None };
        let load: Vec<(Vec<P3>, f64)> = pieces.iter().map(|(v, g)| (v.clone(), group.norm_of(*g))).collect();
        let mut rng = rng::stream(opts.seed, &[STAGE_SELECT, cell as u64]);
        let center = centroid(&[bx.lo, bx.hi]);
        let selection =
            select_in_ball(&center, h / 8.0, cell, opts.beta, &mut rng, false, |x| projected_area(&bx, p3(x), &load, tol, h))?;
        let x = p3(&selection.center);
        let mut out = CubeOut { selection, images: Vec::new(), prisms: Vec::new(), squash };
        for (v, g) in pieces {
            for (part, image) in bx.push(x, v, 2, tol, h) {
                let mut vertices: Vec<Point> = part.iter().map(|z| z.to_vec()).collect();
                vertices.extend(image.iter().map(|z| z.to_vec()));
                out.prisms.push(Prism { vertices, coef: *g, stage: 1 });
                out.images.push((image, *g));
            }
        }
        Ok(out)
    });
    let mut centers: BTreeMap<usize, P3> = BTreeMap::new();
    let mut selections = Vec::new();
    let mut prisms = Vec::new();
    let (mut squash_lip, mut squash_maps) = (0.0f64, 0);
    for o in outs {
        let o = o?;
        centers.insert(o.selection.cell, p3(&o.selection.center));
        selections.push(o.selection);
        for (image, g) in o.images {
            match grid.locate(&image) {
                Loc::Face(f) => on_faces.entry(f).or_default().push((image, g)),
                Loc::Edge => {}
                Loc::Cube(_) => return Err(Error::Degenerate("projected piece is off the 2-skeleton".into())),
            }
        }
        prisms.extend(o.prisms);
        if let Some(l) = o.squash {
            squash_lip = squash_lip.max(l);
            squash_maps += 1;
        }
    }

    // boundary segments through the descent
    let bd = s.boundary()?;
    let mut transport: Vec<Prism> = Vec::new();
    let mut face_segments: BTreeMap<usize, Vec<(Vec<P3>, i64)>> = BTreeMap::new();
    let quad = |part: &[P3], image: &[P3], g: i64, stage: usize| Prism {
        vertices: sweep(part[0], part[1], image[0], image[1]).iter().map(|z| z.to_vec()).collect(),
        coef: g,
        stage,
    };
    for seg in bd.simplices() {
        let v = vec![p3(&seg.vertices[0]), p3(&seg.vertices[1])];
        for part in grid.cut(v, 1) {
            match grid.locate(&part) {
                Loc::Cube(c) => {
                    if !centers.contains_key(&c) {
                        let bx = grid.cell_box(3, c);
                        let mut rng = rng::stream(opts.seed, &[STAGE_SELECT, c as u64]);
                        let sel = select_in_ball(&centroid(&[bx.lo, bx.hi]), h / 8.0, c, opts.beta, &mut rng, true, |_| 0.0)?;
                        centers.insert(c, p3(&sel.center));
                        selections.push(sel);
                    }
                    let bx = grid.cell_box(3, c);
                    for (p, im) in bx.push(centers[&c], &part, 1, tol, h) {
                        transport.push(quad(&p, &im, seg.coef, 1));
                        if let Loc::Face(f) = grid.locate(&im) {
                            face_segments.entry(f).or_default().push((im, seg.coef));
                        }
                    }
                }
                Loc::Face(f) => face_segments.entry(f).or_default().push((part, seg.coef)),
                Loc::Edge => {}
            }
        }
    }

    // (iii) resolve every face that carries pieces
    let faces: Vec<(usize, Vec<(Vec<P3>, i64)>)> = on_faces.into_iter().collect();
    let resolved: Vec<Result<FaceOut>> = opts.exec.map_slice(&faces, |(f, pieces)| resolve_face(&grid, group, *f, pieces));
    let mut decisions = Vec::with_capacity(resolved.len());
    let mut emitted: Vec<(usize, i64)> = Vec::new();
    let mut after_descent = 0.0;
    for r in resolved {
        let r = r?;
        after_descent += r.mass;
        match &r.decision.resolution {
            FaceResolution::Covered { coef } => emitted.push((r.decision.face, *coef)),
            FaceResolution::Collapsed { point } => {
                let bx = grid.cell_box(2, r.decision.face);
                for (part, g) in face_segments.get(&r.decision.face).into_iter().flatten() {
                    for (p, im) in bx.push(p3(point), part, 1, tol, h) {
                        transport.push(quad(&p, &im, *g, 2));
                    }
                }
            }
            FaceResolution::Empty => {}
        }
        decisions.push(r.decision);
    }
    let out = Chain::from_terms(group, 2, emitted.iter().copied())?;

    // homotopy identity: out - S - ∂H - B = 0
    let mut id = PlaneSum::new(group, tol);
    let mut input = PlaneSum::new(group, tol);
    for &(f, g) in &emitted {
        id.add(&grid.face_loop(f), g);
    }
    for (v, g) in &tris {
        id.add(v, group.neg(*g));
        input.add(v, *g);
    }
    let mut homotopy_mass = 0.0;
    for pr in &prisms {
        let m = pr.vertices.len() / 2;
        let part: Vec<P3> = pr.vertices[..m].iter().map(|z| p3(z)).collect();
        let image: Vec<P3> = pr.vertices[m..].iter().map(|z| p3(z)).collect();
        let g = pr.coef;
        id.add(&image, group.neg(g));
        id.add(&part, g);
        for i in 0..m {
            let j = (i + 1) % m;
            id.add(&sweep(part[i], part[j], image[i], image[j]), g);
        }
        homotopy_mass += group.norm_of(g) * prism_volume(&part, &image);
    }
    for t in &transport {
        let v: Vec<P3> = t.vertices.iter().map(|z| p3(z)).collect();
        id.add(&v, group.neg(t.coef));
    }
    let (residual, _) = id.measure()?;
    let (mass_in, size_in) = input.measure()?;
    let mass_out = out.mass(k);
    let size_out = out.size(k);
    let ratio = |m: f64| if mass_in > 0.0 { m / mass_in } else { 0.0 };
    let (rot, mesh) = k.rotundity_stats()?;
    selections.sort_by_key(|s| s.cell);
    let collapsed = decisions.iter().filter(|d| matches!(d.resolution, FaceResolution::Collapsed { .. })).count();
    let cert = DeformationCertificate {
        mass_in,
        mass_out,
        size_in,
        size_out,
        stage_ratios: vec![ratio(mass_in), ratio(after_descent), ratio(mass_out)],
        homotopy: prisms,
        homotopy_mass,
        boundary_transport: Vec::new(),
        transport_faces: transport,
        grid_mesh: mesh,
        rotundity: rot,
        squash_lipschitz: squash_lip,
        squash_maps,
        identity_holds: residual <= IDENTITY_TOL * mass_in.max(h * h),
        identity_residual: residual,
        covered_cells: emitted.len(),
        collapsed_cells: collapsed,
        plan: DeformPlan { beta: opts.beta, seed: opts.seed, centers: selections, edges: Vec::new(), faces: decisions },
    };
    Ok((out, cert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::GridSpec;

    fn grid(level: u32) -> CellComplex {
        CellComplex::dyadic_grid(&GridSpec::unit(3, level)).unwrap()
    }

    fn tri(chain: &mut PLChain, a: P3, b: P3, c: P3) {
        chain.push(vec![a.to_vec(), b.to_vec(), c.to_vec()], 1).unwrap();
    }

    #[test]
    fn trapezoids_of_overlapping_squares() {
        let g = CoeffGroup::integers();
        let a = vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]];
        let b = vec![[1.0, 1.0], [1.0, 3.0], [3.0, 3.0], [3.0, 1.0]];
        let t = trapezoids(g, &[(a, 1), (b, 1)], 1e-12).unwrap();
        let zero: f64 = t.iter().filter(|t| t.net == 0).map(Trap::area).sum();
        let two: f64 = t.iter().filter(|t| t.net == 2).map(Trap::area).sum();
        assert!((zero - 1.0).abs() < 1e-12 && two.abs() < 1e-12);
        let covered: f64 = t.iter().filter(|t| t.count == 2).map(Trap::area).sum();
        assert!((covered - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prism_volume_of_a_unit_slab() {
        let part = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
        let image = part.map(|p| [p[0], p[1], 2.0]);
        assert!((prism_volume(&part, &image) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn face_square_is_fixed() {
        let k = grid(1);
        let mut s = PLChain::new(CoeffGroup::integers(), 3, 2);
        tri(&mut s, [0.0, 0.0, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.5]);
        tri(&mut s, [0.0, 0.0, 0.5], [0.5, 0.5, 0.5], [0.0, 0.5, 0.5]);
        let (out, cert) = deform_space(&s, &k, &DeformOptions::new(0.75, 3)).unwrap();
        assert_eq!(out.len(), 1);
        assert!(cert.homotopy.is_empty());
        assert!(cert.identity_holds, "residual {}", cert.identity_residual);
        assert!((cert.mass_in - 0.25).abs() < 1e-12);
    }

    #[test]
    fn tilted_disk_with_boundary() {
        let k = grid(2);
        let mut s = PLChain::new(CoeffGroup::integers(), 3, 2);
        let c = [0.5, 0.45, 0.5];
        let ring: Vec<P3> = (0..8)
            .map(|i| {
                let t = i as f64 * std::f64::consts::TAU / 8.0;
                [0.5 + 0.3 * t.cos(), 0.45 + 0.3 * t.sin(), 0.5 + 0.1 * t.cos() + 0.07 * t.sin()]
            })
            .collect();
        for i in 0..8 {
            tri(&mut s, c, ring[i], ring[(i + 1) % 8]);
        }
        let (out, cert) = deform_space(&s, &k, &DeformOptions::new(0.75, 5)).unwrap();
        assert!(cert.identity_holds, "residual {}", cert.identity_residual);
        assert!(!out.is_zero() || cert.collapsed_cells > 0);
        assert!(cert.squash_lipschitz <= 4.0 + 1e-9);
    }

    #[test]
    fn closed_surface_stays_closed() {
        let k = grid(2);
        let mut s = PLChain::new(CoeffGroup::integers(), 3, 2);
        let v = [[0.21, 0.23, 0.27], [0.83, 0.3, 0.31], [0.4, 0.79, 0.35], [0.45, 0.42, 0.86]];
        for (a, b, c) in [(0, 2, 1), (0, 1, 3), (1, 2, 3), (0, 3, 2)] {
            tri(&mut s, v[a], v[b], v[c]);
        }
        assert!(s.boundary().unwrap().is_empty());
        for seed in 0..4 {
            let (out, cert) = deform_space(&s, &k, &DeformOptions::new(0.75, seed)).unwrap();
            assert!(out.boundary(&k).unwrap().is_zero(), "seed {seed}");
            assert!(cert.identity_holds, "seed {seed}: residual {}", cert.identity_residual);
        }
    }
}
