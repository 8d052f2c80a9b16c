use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coeff::CoeffGroup;
use crate::error::{Error, Result};
use crate::geometry::{dist, Point};

/// Face keys are vertex coordinates snapped to this grid.
pub const FACE_KEY_TOL: f64 = 1e-9;

/// One simplex of a PL chain with its coefficient (canonical in the group).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PLSimplex {
    pub vertices: Vec<Point>,
    pub coef: i64,
}

/// A polyhedral chain given by oriented simplices in general position,
/// independent of any grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PLChain {
    group: CoeffGroup,
    n: usize,
    d: usize,
    simplices: Vec<PLSimplex>,
}

fn face_key(p: &[f64]) -> Vec<i64> {
    p.iter().map(|x| (x / FACE_KEY_TOL).round() as i64).collect()
}

impl PLChain {
    pub fn new(group: CoeffGroup, n: usize, d: usize) -> Self {
        PLChain { group, n, d, simplices: Vec::new() }
    }

    /// Adds a simplex with `d + 1` vertices; zero coefficients are dropped.
    pub fn push(&mut self, vertices: Vec<Point>, coef: i64) -> Result<()> {
        if vertices.len() != self.d + 1 {
            return Err(Error::DimensionMismatch(format!(
                "a {}-simplex needs {} vertices, got {}",
                self.d,
                self.d + 1,
                vertices.len()
            )));
        }
        if let Some(v) = vertices.iter().find(|v| v.len() != self.n) {
            return Err(Error::DimensionMismatch(format!("vertex of length {} in R^{}", v.len(), self.n)));
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::precondition("non-finite vertex coordinate"));
        }
        let coef = self.group.canon(coef);
        if coef != 0 {
            self.simplices.push(PLSimplex { vertices, coef });
        }
        Ok(())
    }

    /// The polygonal path through `points`, closed back to the start when
    /// `closed` is set.
    pub fn polyline(group: CoeffGroup, points: &[Point], closed: bool, coef: i64) -> Result<Self> {
        let n = points.first().map_or(2, |p| p.len());
        let mut c = PLChain::new(group, n, 1);
        let m = points.len();
        let edges = if closed { m } else { m.saturating_sub(1) };
        for i in 0..edges {
            let a = points[i].clone();
            let b = points[(i + 1) % m].clone();
            if dist(&a, &b) > 0.0 {
                c.push(vec![a, b], coef)?;
            }
        }
        Ok(c)
    }

    pub fn group(&self) -> CoeffGroup {
        self.group
    }

    pub fn ambient(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn simplices(&self) -> &[PLSimplex] {
        &self.simplices
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    /// Sum of `|g| H^d(simplex)` over the given representation; an upper bound
    /// for the mass.
    pub fn weighted_measure(&self) -> f64 {
        self.simplices.iter().map(|s| self.group.norm_of(s.coef) * simplex_measure(&s.vertices)).sum()
    }

    /// Boundary by face matching with snapped face keys.
    pub fn boundary(&self) -> Result<PLChain> {
        if self.d == 0 {
            return Ok(PLChain::new(self.group, self.n, 0));
        }
        let mut acc: BTreeMap<Vec<Vec<i64>>, (Vec<Point>, i64)> = BTreeMap::new();
        for s in &self.simplices {
            for i in 0..=self.d {
                let mut face: Vec<Point> = s.vertices.clone();
                face.remove(i);
                let sign = if i % 2 == 0 { 1 } else { -1 };
                let mut keyed: Vec<(Vec<i64>, Point)> = face.into_iter().map(|p| (face_key(&p), p)).collect();
                let parity = sort_parity(&mut keyed);
                let key: Vec<Vec<i64>> = keyed.iter().map(|(k, _)| k.clone()).collect();
                if (1..key.len()).any(|j| key[j] == key[j - 1]) {
                    continue;
                }
                let v = self.group.mul_int(sign * parity, s.coef)?;
                let pts: Vec<Point> = keyed.into_iter().map(|(_, p)| p).collect();
                let e = acc.entry(key).or_insert((pts, 0));
                e.1 = self.group.add(e.1, v)?;
            }
        }
        let mut out = PLChain::new(self.group, self.n, self.d - 1);
        for (_, (pts, c)) in acc {
            out.push(pts, c)?;
        }
        Ok(out)
    }
}

/// Sorts by key and returns the permutation sign.
fn sort_parity(items: &mut [(Vec<i64>, Point)]) -> i64 {
    let mut sign = 1;
    for i in 1..items.len() {
        let mut j = i;
        while j > 0 && items[j - 1].0 > items[j].0 {
            items.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    sign
}

pub(crate) fn simplex_measure(v: &[Point]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => 1.0,
        2 => dist(&v[0], &v[1]),
        _ => {
            let e: Vec<Point> = v[1..].iter().map(|p| crate::geometry::sub(p, &v[0])).collect();
            let gram: Vec<Vec<f64>> =
                e.iter().map(|a| e.iter().map(|b| crate::geometry::dot(a, b)).collect()).collect();
            let k = e.len();
            let fact: f64 = (1..=k).map(|i| i as f64).product();
            crate::geometry::det(gram).max(0.0).sqrt() / fact
        }
    }
}
