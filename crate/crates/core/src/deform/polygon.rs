//! Radial projection inside a convex polygon of the plane.

use crate::error::{Error, Result};
use crate::geometry::Polytope;

pub(crate) type P2 = [f64; 2];

fn cross(a: P2, b: P2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn len(a: P2) -> f64 {
    a[0].hypot(a[1])
}

/// Image of a segment under radial projection: a path on the boundary.
#[derive(Debug, Clone)]
pub(crate) struct Arc {
    /// Boundary points from the image of the first endpoint to the image of
    /// the second, corners included.
    pub path: Vec<P2>,
    pub length: f64,
}

#[derive(Debug)]
pub(crate) enum ArcError {
    /// The segment passes through the projection center.
    ThroughCenter,
}

#[derive(Debug, Clone)]
pub(crate) struct ConvexPolygon {
    v: Vec<P2>,
    /// Outward unit normal and offset of edge `i` (from `v[i]` to `v[i+1]`).
    edges: Vec<(P2, f64)>,
    cum: Vec<f64>,
    perimeter: f64,
    ball: (P2, f64),
}

impl ConvexPolygon {
    /// Vertices in counter-clockwise order; `inradius` with its center.
    pub fn new(v: Vec<P2>, ball: (P2, f64)) -> Self {
        let m = v.len();
        let mut edges = Vec::with_capacity(m);
        let mut cum = vec![0.0];
        for i in 0..m {
            let (a, b) = (v[i], v[(i + 1) % m]);
            let d = sub(b, a);
            let l = len(d);
            let nrm = [d[1] / l, -d[0] / l];
            edges.push((nrm, nrm[0] * a[0] + nrm[1] * a[1]));
            cum.push(cum[i] + l);
        }
        let perimeter = cum[m];
        ConvexPolygon { v, edges, cum, perimeter, ball }
    }

    pub fn rect(lo: P2, hi: P2) -> Self {
        let c = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
        let r = ((hi[0] - lo[0]).min(hi[1] - lo[1])) / 2.0;
        ConvexPolygon::new(vec![lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]], (c, r))
    }

    pub fn from_polytope(p: &Polytope) -> Result<Self> {
        if p.ambient() != 2 || p.dim() != 2 {
            return Err(Error::Unsupported(format!(
                "radial projection of segments needs a polygon in the plane, got a {}-polytope in R^{}",
                p.dim(),
                p.ambient()
            )));
        }
        let mut v: Vec<P2> = p.ordered_polygon().iter().map(|q| [q[0], q[1]]).collect();
        let area: f64 = (0..v.len()).map(|i| cross(v[i], v[(i + 1) % v.len()])).sum();
        if area < 0.0 {
            v.reverse();
        }
        let (c, r) = p.inball()?;
        Ok(ConvexPolygon::new(v, ([c[0], c[1]], r)))
    }

    /// Inscribed ball `(center, radius)`.
    pub fn inball(&self) -> (P2, f64) {
        self.ball
    }

    pub fn edge_distance(&self, x: P2) -> f64 {
        self.edges.iter().map(|(n, b)| b - (n[0] * x[0] + n[1] * x[1])).fold(f64::INFINITY, f64::min)
    }

    /// Exit point of the ray from `x` through `y`, its edge and the ray
    /// parameter.
    pub fn exit(&self, x: P2, y: P2) -> Option<(P2, usize, f64)> {
        let w = sub(y, x);
        let mut best = (f64::INFINITY, usize::MAX);
        for (i, (n, b)) in self.edges.iter().enumerate() {
            let nw = n[0] * w[0] + n[1] * w[1];
            if nw > 0.0 {
                let t = (b - (n[0] * x[0] + n[1] * x[1])) / nw;
                if t < best.0 {
                    best = (t, i);
                }
            }
        }
        if !best.0.is_finite() {
            return None;
        }
        let (t, i) = best;
        let mut p = [x[0] + t * w[0], x[1] + t * w[1]];
        let (n, b) = self.edges[i];
        // snap onto axis-parallel edges
        for ax in 0..2 {
            if n[1 - ax] == 0.0 && n[ax].abs() == 1.0 {
                p[ax] = b * n[ax];
            }
        }
        Some((p, i, t))
    }

    /// Perimeter coordinate of a boundary point on edge `i`.
    fn coordinate(&self, p: P2, i: usize) -> f64 {
        let a = self.v[i];
        self.cum[i] + len(sub(p, a)).min(self.cum[i + 1] - self.cum[i])
    }

    fn edge_at(&self, s: f64) -> usize {
        let s = s.rem_euclid(self.perimeter);
        let k = self.cum.partition_point(|&c| c <= s);
        (k.max(1) - 1).min(self.v.len() - 1)
    }

    /// Corners strictly inside the counter-clockwise run `(s, s + l)`.
    fn corners_between(&self, s: f64, l: f64) -> Vec<P2> {
        let m = self.v.len();
        let mut out = Vec::new();
        let mut k = self.edge_at(s);
        let mut walked = self.cum[k + 1] - s.rem_euclid(self.perimeter);
        let mut guard = 0;
        while walked < l && guard <= m {
            k = (k + 1) % m;
            out.push(self.v[k]);
            walked += self.cum[k + 1] - self.cum[k];
            guard += 1;
        }
        out
    }

    /// Radial projection from `x` of the oriented segment `a -> b`.
    pub fn arc(&self, x: P2, a: P2, b: P2) -> std::result::Result<Arc, ArcError> {
        let (da, db) = (sub(a, x), sub(b, x));
        let (la, lb) = (len(da), len(db));
        if la == 0.0 || lb == 0.0 {
            return Err(ArcError::ThroughCenter);
        }
        let c = cross(da, db) / (la * lb);
        let dotp = (da[0] * db[0] + da[1] * db[1]) / (la * lb);
        let (pa, ia, _) = self.exit(x, a).ok_or(ArcError::ThroughCenter)?;
        let (pb, ib, _) = self.exit(x, b).ok_or(ArcError::ThroughCenter)?;
        if c.abs() < 1e-13 {
            if dotp < 0.0 {
                return Err(ArcError::ThroughCenter);
            }
            return Ok(Arc { path: vec![pa, pb], length: 0.0 });
        }
        if self.segment_distance(x, a, b) <= 1e-12 * la.max(lb) {
            return Err(ArcError::ThroughCenter);
        }
        let (sa, sb) = (self.coordinate(pa, ia), self.coordinate(pb, ib));
        let ccw = c > 0.0;
        let (s0, s1) = if ccw { (sa, sb) } else { (sb, sa) };
        let mut l = (s1 - s0).rem_euclid(self.perimeter);
        if l > self.perimeter * (1.0 - 1e-12) {
            l = 0.0;
        }
        let mut path = vec![if ccw { pa } else { pb }];
        path.extend(self.corners_between(s0, l));
        path.push(if ccw { pb } else { pa });
        if !ccw {
            path.reverse();
        }
        Ok(Arc { path, length: l })
    }

    fn segment_distance(&self, x: P2, a: P2, b: P2) -> f64 {
        let d = sub(b, a);
        let t = (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1])).clamp(0.0, 1.0);
        len(sub(x, [a[0] + t * d[0], a[1] + t * d[1]]))
    }

    /// Differential of the projection from `x` at `y` applied to `v`.
    pub fn differential(&self, x: P2, y: P2, v: P2) -> Option<P2> {
        let (_, i, t) = self.exit(x, y)?;
        let n = self.edges[i].0;
        let w = sub(y, x);
        let nw = n[0] * w[0] + n[1] * w[1];
        let nv = n[0] * v[0] + n[1] * v[1];
        Some([t * (v[0] - nv / nw * w[0]), t * (v[1] - nv / nw * w[1])])
    }
}
