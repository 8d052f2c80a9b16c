//! Canonical form of planar 1-chains.
//!
//! Segments are grouped by supporting line, split at every endpoint on that
//! line and summed in group arithmetic, so two representations of the same
//! chain produce the same list of net segments.

use serde::{Deserialize, Serialize};

use crate::coeff::CoeffGroup;
use crate::error::Result;
use crate::geometry::Point;

const ANGLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
    pub coef: i64,
}

impl Segment {
    pub fn length(&self) -> f64 {
        crate::geometry::dist(&self.a, &self.b)
    }
}

struct Rec {
    theta: f64,
    offset: f64,
    u: [f64; 2],
    ta: f64,
    tb: f64,
    g: i64,
}

/// A formal sum of oriented planar segments.
#[derive(Debug, Clone)]
pub struct SegmentSum {
    group: CoeffGroup,
    tol: f64,
    segs: Vec<([f64; 2], [f64; 2], i64)>,
}

impl SegmentSum {
    pub fn new(group: CoeffGroup, tol: f64) -> Self {
        SegmentSum { group, tol, segs: Vec::new() }
    }

    pub fn add(&mut self, a: &[f64], b: &[f64], g: i64) {
        let g = self.group.canon(g);
        if g != 0 {
            self.segs.push(([a[0], a[1]], [b[0], b[1]], g));
        }
    }

    pub fn add_scaled(&mut self, other: &SegmentSum, k: i64) -> Result<()> {
        for (a, b, g) in &other.segs {
            let v = self.group.mul_int(k, *g)?;
            self.add(a, b, v);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.segs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segs.is_empty()
    }

    /// Net segments: maximal intervals of constant nonzero coefficient.
    pub fn canonical(&self) -> Result<Vec<Segment>> {
        let tol = self.tol;
        let mut recs = Vec::with_capacity(self.segs.len());
        for &(a, b, g) in &self.segs {
            let d = [b[0] - a[0], b[1] - a[1]];
            let l = d[0].hypot(d[1]);
            if l <= tol {
                continue;
            }
            let mut u = [d[0] / l, d[1] / l];
            let mut theta = u[1].atan2(u[0]);
            if theta < 0.0 {
                theta += std::f64::consts::PI;
                u = [-u[0], -u[1]];
            }
            if theta >= std::f64::consts::PI - ANGLE_TOL {
                theta -= std::f64::consts::PI;
                u = [-u[0], -u[1]];
            }
            let offset = u[0] * a[1] - u[1] * a[0];
            recs.push(Rec { theta, offset, u, ta: u[0] * a[0] + u[1] * a[1], tb: u[0] * b[0] + u[1] * b[1], g });
        }
        recs.sort_by(|x, y| x.theta.total_cmp(&y.theta));
        let mut out = Vec::new();
        let mut i = 0;
        while i < recs.len() {
            let mut j = i + 1;
            while j < recs.len() && recs[j].theta - recs[j - 1].theta <= ANGLE_TOL {
                j += 1;
            }
            let bundle = &mut recs[i..j];
            bundle.sort_by(|x, y| x.offset.total_cmp(&y.offset));
            let mut s = 0;
            while s < bundle.len() {
                let mut e = s + 1;
                while e < bundle.len() && bundle[e].offset - bundle[e - 1].offset <= tol {
                    e += 1;
                }
                self.resolve_line(&bundle[s..e], &mut out)?;
                s = e;
            }
            i = j;
        }
        Ok(out)
    }

    fn resolve_line(&self, line: &[Rec], out: &mut Vec<Segment>) -> Result<()> {
        let tol = self.tol;
        let u = line[0].u;
        let o = line[0].offset;
        // re-express endpoints along the reference direction
        let param = |r: &Rec, t: f64| -> f64 {
            let p = [t * r.u[0] - r.offset * r.u[1], t * r.u[1] + r.offset * r.u[0]];
            p[0] * u[0] + p[1] * u[1]
        };
        let mut cuts: Vec<f64> = line.iter().flat_map(|r| [param(r, r.ta), param(r, r.tb)]).collect();
        cuts.sort_by(f64::total_cmp);
        let mut merged: Vec<f64> = Vec::with_capacity(cuts.len());
        for c in cuts {
            if merged.last().is_none_or(|&m| c - m > tol) {
                merged.push(c);
            }
        }
        let locate = |t: f64| -> usize {
            let k = merged.partition_point(|&m| m < t - tol);
            k.min(merged.len() - 1)
        };
        let mut diff = vec![0i64; merged.len() + 1];
        for r in line {
            let (ta, tb) = (param(r, r.ta), param(r, r.tb));
            let (lo, hi, g) = if ta <= tb { (ta, tb, r.g) } else { (tb, ta, self.group.neg(r.g)) };
            let (il, ih) = (locate(lo), locate(hi));
            if il == ih {
                continue;
            }
            diff[il] = self.group.add(diff[il], g)?;
            diff[ih] = self.group.add(diff[ih], self.group.neg(g))?;
        }
        let at = |t: f64| -> Point { vec![t * u[0] - o * u[1], t * u[1] + o * u[0]] };
        let mut run = 0i64;
        let mut open: Option<(usize, i64)> = None;
        for k in 0..merged.len() {
            run = self.group.add(run, diff[k])?;
            let cur = if k + 1 < merged.len() { run } else { 0 };
            if let Some((s, c)) = open {
                if c != cur {
                    out.push(Segment { a: at(merged[s]), b: at(merged[k]), coef: c });
                    open = None;
                }
            }
            if open.is_none() && cur != 0 {
                open = Some((k, cur));
            }
        }
        Ok(())
    }

    /// Sum of `|g|` times length over the canonical form.
    pub fn mass(&self) -> Result<f64> {
        Ok(self.canonical()?.iter().map(|s| self.group.norm_of(s.coef) * s.length()).sum())
    }

    /// Length of the set carrying a nonzero net coefficient.
    pub fn size(&self) -> Result<f64> {
        Ok(self.canonical()?.iter().map(Segment::length).sum())
    }
}
