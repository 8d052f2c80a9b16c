//! Polyhedral chains over a coefficient group on a fixed cell complex.
//!
//! A [`Chain`] is a sparse map from `d`-cell ids to canonical group values;
//! zero coefficients are never stored, so equality is structural. Because the
//! cells of a complex are interior-disjoint, mass and size are attained by the
//! stored representation.

use crate::coeff::CoeffGroup;
use crate::complex::{relative_orientation, Cell, CellComplex, ComplexKind, Triangulation};
use crate::error::{Error, Result};
use crate::geometry::{self, Point, Polytope};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    group: CoeffGroup,
    dim: usize,
    coeffs: BTreeMap<usize, i64>,
}

impl Chain {
    pub fn zero(group: CoeffGroup, dim: usize) -> Self {
        Chain { group, dim, coeffs: BTreeMap::new() }
    }

    /// Sums the given terms, validating ids against `k`.
    pub fn from_pairs(
        k: &CellComplex,
        group: CoeffGroup,
        dim: usize,
        pairs: impl IntoIterator<Item = (usize, i64)>,
    ) -> Result<Self> {
        let mut c = Chain::zero(group, dim);
        for (id, v) in pairs {
            if id >= k.count(dim) {
                return Err(Error::InvalidCell(format!("{dim}-cell {id} (complex has {})", k.count(dim))));
            }
            c.add_term(id, v)?;
        }
        Ok(c)
    }

    /// Terms without validation against a complex.
    pub fn from_terms(group: CoeffGroup, dim: usize, pairs: impl IntoIterator<Item = (usize, i64)>) -> Result<Self> {
        let mut c = Chain::zero(group, dim);
        for (id, v) in pairs {
            c.add_term(id, v)?;
        }
        Ok(c)
    }

    pub fn cell(group: CoeffGroup, dim: usize, id: usize, v: i64) -> Self {
        Chain::from_terms(group, dim, [(id, v)]).expect("single term")
    }

    pub fn group(&self) -> CoeffGroup {
        self.group
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, id: usize) -> i64 {
        self.coeffs.get(&id).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.coeffs.iter().map(|(k, v)| (*k, *v))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn support(&self) -> BTreeSet<usize> {
        self.coeffs.keys().copied().collect()
    }

    pub fn add_term(&mut self, id: usize, v: i64) -> Result<()> {
        let cur = self.get(id);
        let next = self.group.add(cur, self.group.canon(v))?;
        if next == 0 {
            self.coeffs.remove(&id);
        } else {
            self.coeffs.insert(id, next);
        }
        Ok(())
    }

    fn compatible(&self, other: &Chain) -> Result<()> {
        if self.group != other.group {
            return Err(Error::GroupMismatch(self.group.short_name(), other.group.short_name()));
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!("{}-chain and {}-chain", self.dim, other.dim)));
        }
        Ok(())
    }

    pub fn add(&self, other: &Chain) -> Result<Chain> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (id, v) in other.iter() {
            out.add_term(id, v)?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Chain) -> Result<Chain> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Chain {
        Chain {
            group: self.group,
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|(k, v)| (*k, self.group.neg(*v))).filter(|(_, v)| *v != 0).collect(),
        }
    }

    pub fn scale(&self, k: i64) -> Result<Chain> {
        let mut out = Chain::zero(self.group, self.dim);
        for (id, v) in self.iter() {
            out.add_term(id, self.group.mul_int(k, v)?)?;
        }
        Ok(out)
    }

    pub fn validate(&self, k: &CellComplex) -> Result<()> {
        match self.coeffs.keys().next_back() {
            Some(&id) if id >= k.count(self.dim) => Err(Error::InvalidCell(format!("{}-cell {id}", self.dim))),
            _ => Ok(()),
        }
    }

    pub fn boundary(&self, k: &CellComplex) -> Result<Chain> {
        if self.dim == 0 {
            return Err(Error::DimensionMismatch("boundary of a 0-chain".into()));
        }
        self.validate(k)?;
        let mut out = Chain::zero(self.group, self.dim - 1);
        for (id, v) in self.iter() {
            for &(f, s) in k.faces(self.dim, id) {
                out.add_term(f, self.group.mul_int(s as i64, v)?)?;
            }
        }
        Ok(out)
    }

    pub fn mass(&self, k: &CellComplex) -> f64 {
        self.iter().map(|(id, v)| self.group.norm_of(v) * k.measure(self.dim, id)).sum()
    }

    pub fn size(&self, k: &CellComplex) -> f64 {
        self.iter().map(|(id, _)| k.measure(self.dim, id)).sum()
    }

    /// `mass(S) + mass(∂S)` (just the mass for 0-chains).
    pub fn n_norm(&self, k: &CellComplex) -> Result<f64> {
        if self.dim == 0 {
            return Ok(self.mass(k));
        }
        Ok(self.mass(k) + self.boundary(k)?.mass(k))
    }

    pub fn restrict(&self, cells: &BTreeSet<usize>) -> Chain {
        self.restrict_by(|id| cells.contains(&id))
    }

    pub fn restrict_by(&self, keep: impl Fn(usize) -> bool) -> Chain {
        Chain {
            group: self.group,
            dim: self.dim,
            coeffs: self.coeffs.iter().filter(|(k, _)| keep(**k)).map(|(k, v)| (*k, *v)).collect(),
        }
    }

    /// Dense integer coefficient vector of length `len`.
    pub fn to_vector(&self, len: usize) -> Vec<i128> {
        let mut v = vec![0i128; len];
        for (id, c) in self.iter() {
            v[id] = c as i128;
        }
        v
    }

    pub fn from_vector(group: CoeffGroup, dim: usize, v: &[i128]) -> Result<Chain> {
        let mut out = Chain::zero(group, dim);
        for (id, c) in v.iter().enumerate() {
            if *c != 0 {
                let c = match group.modulus() {
                    Some(q) => c.rem_euclid(q as i128) as i64,
                    None => i64::try_from(*c).map_err(|_| Error::Overflow)?,
                };
                out.add_term(id, c)?;
            }
        }
        Ok(out)
    }

    /// Same chain over the simplicial subdivision.
    pub fn subdivide(&self, t: &Triangulation) -> Result<Chain> {
        let mut out = Chain::zero(self.group, self.dim);
        for (id, v) in self.iter() {
            let pieces = t
                .subdivision
                .get(self.dim)
                .and_then(|l| l.get(id))
                .ok_or_else(|| Error::InvalidCell(format!("{}-cell {id}", self.dim)))?;
            for &(s, sign) in pieces {
                out.add_term(s, self.group.mul_int(sign as i64, v)?)?;
            }
        }
        Ok(out)
    }

    /// Pushforward along a vertex map `K -> K'` that is affine on every cell
    /// and carries each cell into a cell. Cells with degenerate image are
    /// dropped; a cell mapped onto a cell contributes with the orientation
    /// sign of the map.
    pub fn pushforward_cellular(&self, k: &CellComplex, target: &CellComplex, vertex_map: &[usize]) -> Result<Chain> {
        self.validate(k)?;
        if vertex_map.len() != k.count(0) || vertex_map.iter().any(|&v| v >= target.count(0)) {
            return Err(Error::NotCellular("vertex map has the wrong length or range".into()));
        }
        let mut out = Chain::zero(self.group, self.dim);
        for (id, v) in self.iter() {
            if let Some((tid, sign)) = cellular_image(k, target, vertex_map, self.dim, id)? {
                out.add_term(tid, self.group.mul_int(sign as i64, v)?)?;
            }
        }
        Ok(out)
    }
}

fn frame_anchor(k: &CellComplex, dim: usize, id: usize) -> Option<(usize, Vec<usize>)> {
    let cell = k.cell(dim, id);
    let tol = 1e-9 * cell.frame.iter().map(|f| geometry::norm(f)).fold(1.0, f64::max);
    for &p0 in &cell.vertices {
        let mut ends = Vec::with_capacity(dim);
        for f in &cell.frame {
            let target = geometry::add(k.vertex(p0), f);
            match cell.vertices.iter().find(|&&w| geometry::dist(k.vertex(w), &target) <= tol) {
                Some(&w) => ends.push(w),
                None => break,
            }
        }
        if ends.len() == dim {
            return Some((p0, ends));
        }
    }
    None
}

/// Image of one cell under a vertex map: `Some((target cell, sign))` when
/// the image is a cell of the same dimension, `None` when degenerate.
fn cellular_image(
    k: &CellComplex,
    target: &CellComplex,
    vmap: &[usize],
    dim: usize,
    id: usize,
) -> Result<Option<(usize, i32)>> {
    let cell = k.cell(dim, id);
    let image: BTreeSet<usize> = cell.vertices.iter().map(|&v| vmap[v]).collect();
    if dim == 0 {
        let w = *image.iter().next().unwrap();
        let tid = (0..target.count(0)).find(|&t| target.cell(0, t).vertices[0] == w).unwrap();
        return Ok(Some((tid, 1)));
    }
    let (p0, ends) = frame_anchor(k, dim, id)
        .ok_or_else(|| Error::NotCellular(format!("{dim}-cell {id} has no vertex frame")))?;
    let q0 = target.vertex(vmap[p0]).clone();
    let img_frame: Vec<Point> = ends.iter().map(|&e| geometry::sub(target.vertex(vmap[e]), &q0)).collect();
    // affine consistency on every vertex
    let gram: Vec<Vec<f64>> =
        cell.frame.iter().map(|a| cell.frame.iter().map(|b| geometry::dot(a, b)).collect()).collect();
    let scale = img_frame.iter().map(|f| geometry::norm(f)).fold(1.0, f64::max);
    for &v in &cell.vertices {
        let d = geometry::sub(k.vertex(v), k.vertex(p0));
        let rhs: Vec<f64> = cell.frame.iter().map(|f| geometry::dot(f, &d)).collect();
        let c = geometry::solve(gram.clone(), rhs).ok_or_else(|| Error::NotCellular("degenerate source cell".into()))?;
        let mut want = q0.clone();
        for (ci, f) in c.iter().zip(&img_frame) {
            want = geometry::axpy(&want, *ci, f);
        }
        if geometry::dist(&want, target.vertex(vmap[v])) > 1e-9 * scale {
            return Err(Error::NotCellular(format!("vertex map is not affine on {dim}-cell {id}")));
        }
    }
    let rank = geometry::orthonormalize(&img_frame, 1e-12 * scale).len();
    // the image must lie in some cell of the target
    let carrier = (0..target.levels()).find_map(|kk| {
        (0..target.count(kk)).find(|&t| {
            let vs = &target.cell(kk, t).vertices;
            image.iter().all(|w| vs.contains(w)) && (kk != dim || vs.len() == image.len())
        }).map(|t| (kk, t))
    });
    let Some((kk, t)) = carrier else {
        return Err(Error::NotCellular(format!("image of {dim}-cell {id} is not inside a cell")));
    };
    if rank < dim {
        return Ok(None);
    }
    if kk != dim || target.cell(kk, t).vertices.len() != image.len() {
        return Err(Error::NotCellular(format!("image of {dim}-cell {id} is not a {dim}-cell")));
    }
    let sign = relative_orientation(&img_frame, &target.cell(dim, t).frame);
    Ok(Some((t, sign)))
}

/// Real values at the vertices of a complex, affine on each simplex of its
/// simplicial subdivision (cube centers take the mean of the cube's vertices).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PLFunction {
    pub values: Vec<f64>,
}

impl PLFunction {
    pub fn new(k: &CellComplex, values: Vec<f64>) -> Result<Self> {
        if values.len() != k.count(0) {
            return Err(Error::DimensionMismatch(format!("{} values for {} vertices", values.len(), k.count(0))));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::precondition("function values must be finite"));
        }
        Ok(PLFunction { values })
    }

    pub fn from_fn(k: &CellComplex, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..k.count(0)).map(|i| f(k.vertex(k.cell(0, i).vertices[0]))).collect();
        Self::new(k, values)
    }

    /// Values at the vertices of the subdivision.
    pub fn on_triangulation(&self, k: &CellComplex, t: &Triangulation) -> Vec<f64> {
        let mut out = vec![0.0; t.complex.count(0)];
        for i in 0..k.count(0) {
            out[k.cell(0, i).vertices[0]] = self.values[i];
        }
        for (dim, centers) in t.center.iter().enumerate().skip(2) {
            for (id, &c) in centers.iter().enumerate() {
                let vs = &k.cell(dim, id).vertices;
                out[c] = vs.iter().map(|&v| out[v]).sum::<f64>() / vs.len() as f64;
            }
        }
        out
    }
}

/// Gradient of the affine interpolant on a cell with an affinely
/// independent vertex frame (within the cell's plane).
fn simplex_gradient(k: &CellComplex, values: &[f64], dim: usize, id: usize) -> Point {
    let cell = k.cell(dim, id);
    let n = k.ambient();
    if dim == 0 {
        return vec![0.0; n];
    }
    let v0 = cell.vertices[0];
    let frame: Vec<Point> = cell.vertices[1..].iter().map(|&v| geometry::sub(k.vertex(v), k.vertex(v0))).collect();
    let gram: Vec<Vec<f64>> = frame.iter().map(|a| frame.iter().map(|b| geometry::dot(a, b)).collect()).collect();
    let rhs: Vec<f64> = cell.vertices[1..].iter().map(|&v| values[v] - values[v0]).collect();
    let c = geometry::solve(gram, rhs).unwrap_or_else(|| vec![0.0; frame.len()]);
    let mut g = vec![0.0; n];
    for (ci, f) in c.iter().zip(&frame) {
        g = geometry::axpy(&g, *ci, f);
    }
    g
}

/// Lipschitz constant of the interpolant: the largest gradient norm over
/// the simplices of a simplicial complex.
pub fn pl_lipschitz(k: &CellComplex, values: &[f64]) -> f64 {
    (1..k.levels())
        .flat_map(|d| (0..k.count(d)).map(move |i| (d, i)))
        .map(|(d, i)| geometry::norm(&simplex_gradient(k, values, d, i)))
        .fold(0.0, f64::max)
}

/// `dim`-volume of the convex hull of `pts`; zero when the hull is thinner.
fn convex_measure(pts: &[Point], dim: usize) -> f64 {
    match dim {
        0 => 1.0,
        1 => {
            let mut m: f64 = 0.0;
            for (i, a) in pts.iter().enumerate() {
                for b in &pts[i + 1..] {
                    m = m.max(geometry::dist(a, b));
                }
            }
            m
        }
        _ => match Polytope::hull(pts) {
            Ok(p) if p.dim() == dim => p.measure(),
            _ => 0.0,
        },
    }
}

/// Which side of the level set a refined cell comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Below,
    Above,
    Level,
}

/// A chain cut along a level set of a PL function.
#[derive(Debug, Clone)]
pub struct Slice {
    pub level: f64,
    /// Subdivision cut by `{f = level}`.
    pub refined: CellComplex,
    /// For each refined cell, the simplex it came from (of the same
    /// dimension, or one higher for [`Part::Level`]) and the part.
    pub provenance: Vec<Vec<(usize, Part)>>,
    /// `S ⌊ {f < s}` on the refined complex.
    pub lower: Chain,
    /// `B^s = ∂(S ⌊ {f < s}) − (∂S) ⌊ {f < s}`.
    pub defect: Chain,
}

/// Precomputed data for slicing one chain at many levels.
#[derive(Debug, Clone)]
pub struct Slicer {
    tri: Triangulation,
    values: Vec<f64>,
    chain: Chain,
    boundary: Option<Chain>,
}

impl Slicer {
    pub fn new(s: &Chain, k: &CellComplex, f: &PLFunction) -> Result<Self> {
        s.validate(k)?;
        if f.values.len() != k.count(0) {
            return Err(Error::DimensionMismatch("function and complex disagree".into()));
        }
        let tri = k.triangulate()?;
        let values = f.on_triangulation(k, &tri);
        let chain = s.subdivide(&tri)?;
        let boundary = if s.dim() > 0 { Some(chain.boundary(&tri.complex)?) } else { None };
        Ok(Slicer { tri, values, chain, boundary })
    }

    pub fn triangulation(&self) -> &Triangulation {
        &self.tri
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lipschitz(&self) -> f64 {
        pl_lipschitz(&self.tri.complex, &self.values)
    }

    pub fn is_degenerate(&self, s: f64) -> bool {
        let tol = 1e-12 * s.abs().max(1.0);
        self.values.iter().any(|v| (v - s).abs() <= tol)
    }

    pub fn slice(&self, s: f64) -> Result<Slice> {
        if !s.is_finite() || self.is_degenerate(s) {
            return Err(Error::DegenerateLevel(s));
        }
        let t = &self.tri.complex;
        let fv = &self.values;
        let top = t.levels();
        let below_v = |v: usize| fv[v] < s;
        // per simplex: part ids
        let mut below: Vec<Vec<Option<usize>>> = Vec::with_capacity(top);
        let mut above: Vec<Vec<Option<usize>>> = Vec::with_capacity(top);
        let mut level: Vec<Vec<Option<usize>>> = Vec::with_capacity(top);
        let mut provenance: Vec<Vec<(usize, Part)>> = vec![Vec::new(); top];
        let mut coords: Vec<Point> = Vec::new();
        let mut cells: Vec<Vec<Cell>> = vec![Vec::new(); top];
        let mut orient: Vec<Vec<i32>> = Vec::with_capacity(top);
        let crossing = |dim: usize, id: usize| -> bool {
            let vs = &t.cell(dim, id).vertices;
            dim > 0 && vs.iter().any(|&v| below_v(v)) && vs.iter().any(|&v| !below_v(v))
        };
        // vertices: v_< / v_>, then e_=
        let mut bel0 = vec![None; t.count(0)];
        let mut abo0 = vec![None; t.count(0)];
        for v in 0..t.count(0) {
            let id = coords.len();
            coords.push(t.vertex(t.cell(0, v).vertices[0]).clone());
            cells[0].push(Cell { vertices: vec![id], frame: vec![], measure: 1.0, grid: None });
            if below_v(t.cell(0, v).vertices[0]) {
                bel0[v] = Some(id);
                provenance[0].push((v, Part::Below));
            } else {
                abo0[v] = Some(id);
                provenance[0].push((v, Part::Above));
            }
        }
        below.push(bel0);
        above.push(abo0);
        let mut lev_edges = vec![None; t.count(1.min(top - 1))];
        if top > 1 {
            for e in 0..t.count(1) {
                if crossing(1, e) {
                    let vs = &t.cell(1, e).vertices;
                    let (a, b) = (vs[0], vs[1]);
                    let lam = (s - fv[a]) / (fv[b] - fv[a]);
                    let p = geometry::axpy(t.vertex(a), lam, &geometry::sub(t.vertex(b), t.vertex(a)));
                    let id = coords.len();
                    coords.push(p);
                    cells[0].push(Cell { vertices: vec![id], frame: vec![], measure: 1.0, grid: None });
                    provenance[0].push((e, Part::Level));
                    lev_edges[e] = Some(id);
                }
            }
        }
        level.push(Vec::new());
        if top > 1 {
            level.push(lev_edges);
        }
        orient.push(vec![1; t.count(0)]);
        // crossing-edge vertices of a simplex
        let level_points = |dim: usize, id: usize, lev1: &Vec<Option<usize>>| -> Vec<usize> {
            let vs = &t.cell(dim, id).vertices;
            let mut out = Vec::new();
            for i in 0..vs.len() {
                for j in i + 1..vs.len() {
                    if below_v(vs[i]) != below_v(vs[j]) {
                        let e = t.simplex_id(&[vs[i], vs[j]]).expect("edge of simplex");
                        out.push(lev1[e].expect("crossing edge"));
                    }
                }
            }
            out
        };
        let polytope_measure = |coords: &Vec<Point>, vs: &[usize], dim: usize| -> f64 {
            let pts: Vec<Point> = vs.iter().map(|&v| coords[v].clone()).collect();
            convex_measure(&pts, dim)
        };
        for dim in 1..top {
            let mut bel = vec![None; t.count(dim)];
            let mut abo = vec![None; t.count(dim)];
            let mut ori = vec![1; t.count(dim)];
            for id in 0..t.count(dim) {
                let cell = t.cell(dim, id);
                let lp = if crossing(dim, id) { level_points(dim, id, &level[1]) } else { Vec::new() };
                let grad = simplex_gradient(t, fv, dim, id);
                if dim == 1 && crossing(1, id) {
                    ori[id] = if geometry::dot(&grad, &cell.frame[0]) > 0.0 { 1 } else { -1 };
                }
                for (part, side) in [(Part::Below, true), (Part::Above, false)] {
                    let own: Vec<usize> = cell.vertices.iter().filter(|&&v| below_v(v) == side).copied().collect();
                    if own.is_empty() {
                        continue;
                    }
                    let mut vs: Vec<usize> = own
                        .iter()
                        .map(|&v| {
                            let vid = t.simplex_id(&[v]).unwrap();
                            if side { below[0][vid].unwrap() } else { above[0][vid].unwrap() }
                        })
                        .collect();
                    vs.extend(lp.iter().copied());
                    let measure = if lp.is_empty() { cell.measure } else { polytope_measure(&coords, &vs, dim) };
                    let nid = cells[dim].len();
                    cells[dim].push(Cell { vertices: vs, frame: cell.frame.clone(), measure, grid: None });
                    provenance[dim].push((id, part));
                    if side {
                        bel[id] = Some(nid);
                    } else {
                        abo[id] = Some(nid);
                    }
                }
            }
            below.push(bel);
            above.push(abo);
            orient.push(ori);
            // level cells of (dim+1)-simplices live in dimension dim
            if dim + 1 < top {
                let mut lev = vec![None; t.count(dim + 1)];
                for id in 0..t.count(dim + 1) {
                    if !crossing(dim + 1, id) {
                        continue;
                    }
                    let cell = t.cell(dim + 1, id);
                    let vs = level_points(dim + 1, id, &level[1]);
                    let grad = simplex_gradient(t, fv, dim + 1, id);
                    let gn = geometry::norm(&grad);
                    let gdir = geometry::scale(&grad, 1.0 / gn);
                    let proj: Vec<Point> = cell
                        .frame
                        .iter()
                        .map(|f| geometry::axpy(f, -geometry::dot(f, &gdir), &gdir))
                        .collect();
                    let mut frame = geometry::orthonormalize(&proj, 1e-12);
                    frame.truncate(dim);
                    let mut full = vec![gdir.clone()];
                    full.extend(frame.iter().cloned());
                    if relative_orientation(&full, &cell.frame) < 0 {
                        frame[0] = geometry::scale(&frame[0], -1.0);
                    }
                    let measure = polytope_measure(&coords, &vs, dim);
                    let nid = cells[dim].len();
                    cells[dim].push(Cell { vertices: vs, frame, measure, grid: None });
                    provenance[dim].push((id, Part::Level));
                    lev[id] = Some(nid);
                }
                level.push(lev);
            }
        }
        // incidences
        let mut faces: Vec<Vec<Vec<(usize, i32)>>> = vec![Vec::new(); top];
        for dim in 1..top {
            let mut fl = vec![Vec::new(); cells[dim].len()];
            for (nid, &(sid, part)) in provenance[dim].iter().enumerate() {
                let mut out = Vec::new();
                match part {
                    Part::Below | Part::Above => {
                        let pick = if part == Part::Below { &below[dim - 1] } else { &above[dim - 1] };
                        for &(rho, sg) in t.faces(dim, sid) {
                            if let Some(r) = pick[rho] {
                                out.push((r, sg));
                            }
                        }
                        if let Some(l) = level[dim][sid] {
                            let o = orient[dim][sid];
                            out.push((l, if part == Part::Below { o } else { -o }));
                        }
                    }
                    Part::Level => {
                        // sid is a (dim+1)-simplex
                        let o_tau = orient.get(dim + 1).map_or(1, |v| v[sid]);
                        for &(rho, sg) in t.faces(dim + 1, sid) {
                            if let Some(r) = level[dim][rho] {
                                out.push((r, -o_tau * sg * orient[dim][rho]));
                            }
                        }
                    }
                }
                fl[nid] = out;
            }
            faces[dim] = fl;
        }
        let refined = CellComplex::from_parts(coords, cells, faces, ComplexKind::Polyhedral);
        let d = self.chain.dim();
        let group = self.chain.group();
        let mut lower = Chain::zero(group, d);
        for (id, v) in self.chain.iter() {
            if let Some(b) = below[d][id] {
                lower.add_term(b, v)?;
            }
        }
        let defect = match &self.boundary {
            None => Chain::zero(group, 0),
            Some(bd) => {
                let mut restricted = Chain::zero(group, d - 1);
                for (id, v) in bd.iter() {
                    if let Some(b) = below[d - 1][id] {
                        restricted.add_term(b, v)?;
                    }
                }
                lower.boundary(&refined)?.sub(&restricted)?
            }
        };
        Ok(Slice { level: s, refined, provenance, lower, defect })
    }

    /// `S ⌊ {f < s}` mass, nudging degenerate levels.
    pub fn mass_below(&self, s: f64, nudge: f64) -> Result<f64> {
        let s = self.nondegenerate(s, nudge);
        let sl = self.slice(s)?;
        Ok(sl.lower.mass(&sl.refined))
    }

    /// `lim mass(S ⌊ {f < t})` as `t -> s` from the side of `dir`. Between
    /// vertex values the mass below is a polynomial of degree at most 3, so
    /// three off-level samples extrapolate the limit.
    pub fn mass_below_limit(&self, s: f64, dir: f64) -> Result<f64> {
        if !self.is_degenerate(s) {
            return self.mass_below(s, dir);
        }
        let gap = self
            .values
            .iter()
            .map(|v| (v - s) * dir.signum())
            .filter(|d| *d > 1e-12 * s.abs().max(1.0))
            .fold(1.0f64, f64::min);
        let eps = 1e-3 * gap;
        let m = |i: f64| -> Result<f64> {
            let sl = self.slice(s + dir.signum() * i * eps)?;
            Ok(sl.lower.mass(&sl.refined))
        };
        Ok(3.0 * m(1.0)? - 3.0 * m(2.0)? + m(3.0)?)
    }

    /// Moves `s` off vertex values, trying the direction of `nudge` first.
    fn nondegenerate(&self, s: f64, nudge: f64) -> f64 {
        let mut t = s;
        let mut k = 1.0;
        while self.is_degenerate(t) && k < 1e6 {
            t = s + nudge * k;
            if !self.is_degenerate(t) {
                break;
            }
            t = s - nudge * k;
            k *= 2.0;
        }
        t
    }
}

/// Cuts `s` along `{f = level}`.
pub fn slice(s: &Chain, k: &CellComplex, f: &PLFunction, level: f64) -> Result<Slice> {
    Slicer::new(s, k, f)?.slice(level)
}

/// Outcome of a coarea-inequality check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoareaReport {
    pub a: f64,
    pub b: f64,
    pub samples: usize,
    /// Trapezoid estimate of `∫_a^b mass(B^s) ds`.
    pub integral: f64,
    pub lipschitz: f64,
    /// `c = 2 Lip(f) / √π`.
    pub constant: f64,
    /// `mass(S ⌊ {a < f < b})`.
    pub band_mass: f64,
    pub bound: f64,
    pub ratio: f64,
    pub holds: bool,
    pub levels: Vec<(f64, f64)>,
}

/// Compares `∫_a^b mass(B^s) ds` against `2 Lip(f)/√π · mass(S⌊{a<f<b})`.
/// Sample levels that pass through vertex values are nudged by `1e-9 (b-a)`.
pub fn coarea_check(s: &Chain, k: &CellComplex, f: &PLFunction, a: f64, b: f64, num_samples: usize) -> Result<CoareaReport> {
    if !(b > a) {
        return Err(Error::precondition("coarea check needs b > a"));
    }
    if num_samples < 2 {
        return Err(Error::precondition("coarea check needs at least two samples"));
    }
    let slicer = Slicer::new(s, k, f)?;
    let nudge = 1e-9 * (b - a);
    let mut levels = Vec::with_capacity(num_samples);
    for i in 0..num_samples {
        let s0 = a + (b - a) * i as f64 / (num_samples - 1) as f64;
        let lv = slicer.nondegenerate(s0, if i + 1 == num_samples { -nudge } else { nudge });
        let sl = slicer.slice(lv)?;
        levels.push((s0, sl.defect.mass(&sl.refined)));
    }
    let h = (b - a) / (num_samples - 1) as f64;
    let integral = levels.windows(2).map(|w| 0.5 * h * (w[0].1 + w[1].1)).sum::<f64>();
    let lipschitz = slicer.lipschitz();
    let constant = 2.0 * lipschitz / std::f64::consts::PI.sqrt();
    let band_mass = (slicer.mass_below_limit(b, -1.0)? - slicer.mass_below_limit(a, 1.0)?).max(0.0);
    let bound = constant * band_mass;
    let ratio = if bound > 0.0 { integral / bound } else if integral > 0.0 { f64::INFINITY } else { 0.0 };
    let holds = integral <= bound + 1e-9 * (1.0 + bound);
    Ok(CoareaReport { a, b, samples: num_samples, integral, lipschitz, constant, band_mass, bound, ratio, holds, levels })
}

/// Vertex map of the reflection `x_axis ↦ lo + hi − x_axis` of a grid.
pub fn grid_reflection(k: &CellComplex, axis: usize) -> Result<Vec<usize>> {
    let spec = k.grid_spec().ok_or_else(|| Error::Unsupported("reflection needs a grid complex".into()))?;
    let (lo, hi) = (spec.bbox[0][axis], spec.bbox[1][axis]);
    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    let s = (spec.level as f64).exp2();
    let key = |p: &[f64]| -> Vec<i64> { p.iter().map(|x| (x * s * 2.0).round() as i64).collect() };
    for v in 0..k.count(0) {
        index.insert(key(k.vertex(v)), v);
    }
    (0..k.count(0))
        .map(|v| {
            let mut p = k.vertex(v).clone();
            p[axis] = lo + hi - p[axis];
            index.get(&key(&p)).copied().ok_or_else(|| Error::NotCellular("reflected vertex missing".into()))
        })
        .collect()
}
