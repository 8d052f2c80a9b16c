//! Finite cell complexes: uniform dyadic cubical grids, their simplicial
//! subdivisions, and general simplicial complexes.
//!
//! Cells are graded by dimension and carry dense ids per dimension. Every
//! `k`-cell stores an orientation frame (`k` tangent vectors); boundary
//! incidence follows the outward-normal-first convention, which for a cube
//! `[a; J]` with axes `J = (j_0 < ... < j_{k-1})` gives
//!
//! ```text
//! ∂[a; J] = Σ_i (-1)^i ([a + e_{j_i}; J \ j_i] - [a; J \ j_i])
//! ```
//!
//! and for an oriented simplex `[v_0 .. v_k]` the usual alternating sum.

use crate::error::{Error, Result};
use crate::geometry::{self, Point, Polytope};
use crate::intmat::IMat;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeSet, HashMap};

pub const DEFAULT_CELL_LIMIT: usize = 1_000_000;

/// Position of a cube in a dyadic grid: integer anchor (lowest corner) and
/// the sorted set of axes it spans.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridKey {
    pub anchor: Vec<i64>,
    pub axes: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Cell {
    /// Vertex ids; for simplices in orientation order.
    pub vertices: Vec<usize>,
    pub frame: Vec<Point>,
    pub measure: f64,
    pub grid: Option<GridKey>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComplexKind {
    Cubical,
    Simplicial,
    Polyhedral,
}

/// Box and level of a uniform dyadic grid (side length `2^-level`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub bbox: [Vec<f64>; 2],
    pub level: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, level: u32) -> Self {
        GridSpec { bbox: [lo, hi], level, n: None }
    }

    pub fn unit(n: usize, level: u32) -> Self {
        GridSpec::new(vec![0.0; n], vec![1.0; n], level)
    }

    pub fn ambient(&self) -> usize {
        self.bbox[0].len()
    }

    pub fn side(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    /// Integer corner coordinates at the grid level.
    pub fn integer_box(&self) -> Result<(Vec<i64>, Vec<i64>)> {
        let n = self.ambient();
        if self.bbox[1].len() != n || n == 0 {
            return Err(Error::DimensionMismatch("bbox corners must have equal nonzero length".into()));
        }
        if let Some(m) = self.n {
            if m != n {
                return Err(Error::DimensionMismatch(format!("n = {m} but bbox has dimension {n}")));
            }
        }
        if self.level > 40 {
            return Err(Error::precondition("grid level above 40"));
        }
        let s = (self.level as f64).exp2();
        let conv = |x: f64| -> Result<i64> {
            let y = x * s;
            if !y.is_finite() || y.fract() != 0.0 || y.abs() > 1e15 {
                return Err(Error::precondition(format!("bbox coordinate {x} is not dyadic at level {}", self.level)));
            }
            Ok(y as i64)
        };
        let lo = self.bbox[0].iter().map(|x| conv(*x)).collect::<Result<Vec<_>>>()?;
        let hi = self.bbox[1].iter().map(|x| conv(*x)).collect::<Result<Vec<_>>>()?;
        if lo.iter().zip(&hi).any(|(a, b)| b <= a) {
            return Err(Error::precondition("bbox is empty"));
        }
        Ok((lo, hi))
    }

    /// Number of `j`-cells of the grid.
    pub fn cell_count(&self, j: usize) -> Result<usize> {
        let (lo, hi) = self.integer_box()?;
        let sides: Vec<u128> = lo.iter().zip(&hi).map(|(a, b)| (b - a) as u128).collect();
        let n = sides.len();
        let mut total: u128 = 0;
        let mut axes: Vec<usize> = (0..j).collect();
        if j > n {
            return Ok(0);
        }
        loop {
            let mut c: u128 = 1;
            for (i, s) in sides.iter().enumerate() {
                c = c.saturating_mul(if axes.contains(&i) { *s } else { s + 1 });
            }
            total = total.saturating_add(c);
            if !next_combination(&mut axes, n) {
                break;
            }
        }
        Ok(total.min(usize::MAX as u128) as usize)
    }
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Sign of the permutation taking `from` to `to` (same elements).
fn perm_sign(from: &[usize], to: &[usize]) -> i32 {
    let mut p: Vec<usize> = from.iter().map(|v| to.iter().position(|w| w == v).expect("same set")).collect();
    let mut sign = 1;
    for i in 0..p.len() {
        while p[i] != i {
            let j = p[i];
            p.swap(i, j);
            sign = -sign;
        }
    }
    sign
}

fn simplex_frame(coords: &[Point], verts: &[usize]) -> Vec<Point> {
    verts[1..].iter().map(|&v| geometry::sub(&coords[v], &coords[verts[0]])).collect()
}

fn gram_measure(frame: &[Point]) -> f64 {
    let k = frame.len();
    if k == 0 {
        return 1.0;
    }
    let g: Vec<Vec<f64>> = frame.iter().map(|a| frame.iter().map(|b| geometry::dot(a, b)).collect()).collect();
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    geometry::det(g).max(0.0).sqrt() / fact
}

/// Sign of the orientation of `frame` relative to `reference` (both span
/// the same `k`-plane); `0` if degenerate.
pub fn relative_orientation(frame: &[Point], reference: &[Point]) -> i32 {
    if frame.len() != reference.len() {
        return 0;
    }
    if frame.is_empty() {
        return 1;
    }
    let m: Vec<Vec<f64>> = frame.iter().map(|a| reference.iter().map(|b| geometry::dot(a, b)).collect()).collect();
    let d = geometry::det(m);
    let scale: f64 = frame.iter().map(|v| geometry::norm(v)).product::<f64>()
        * reference.iter().map(|v| geometry::norm(v)).product::<f64>();
    if d.abs() <= 1e-12 * scale {
        0
    } else if d > 0.0 {
        1
    } else {
        -1
    }
}

/// Sparse integer matrix stored by columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub columns: Vec<Vec<(usize, i64)>>,
}

impl SparseMatrix {
    pub fn to_dense(&self) -> IMat {
        let mut m = vec![vec![0i128; self.cols]; self.rows];
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in col {
                m[i][j] += v as i128;
            }
        }
        m
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(|c| c.len()).sum()
    }

    /// Product `self * other`.
    pub fn mul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch("matrix product shapes".into()));
        }
        let columns = other
            .columns
            .iter()
            .map(|col| {
                let mut acc: HashMap<usize, i64> = HashMap::new();
                for &(k, b) in col {
                    for &(i, a) in &self.columns[k] {
                        *acc.entry(i).or_insert(0) += a * b;
                    }
                }
                let mut v: Vec<(usize, i64)> = acc.into_iter().filter(|(_, x)| *x != 0).collect();
                v.sort_unstable();
                v
            })
            .collect();
        Ok(SparseMatrix { rows: self.rows, cols: other.cols, columns })
    }
}

/// A set of cells of a complex, by dimension (ids of the ambient complex).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Subcomplex {
    pub cells: Vec<BTreeSet<usize>>,
}

impl Subcomplex {
    pub fn empty(dims: usize) -> Self {
        Subcomplex { cells: vec![BTreeSet::new(); dims] }
    }

    pub fn contains(&self, k: usize, id: usize) -> bool {
        self.cells.get(k).is_some_and(|s| s.contains(&id))
    }

    pub fn is_subset_of(&self, other: &Subcomplex) -> bool {
        self.cells.iter().enumerate().all(|(k, s)| s.iter().all(|id| other.contains(k, *id)))
    }

    pub fn union(&self, other: &Subcomplex) -> Subcomplex {
        let dims = self.cells.len().max(other.cells.len());
        let mut cells = vec![BTreeSet::new(); dims];
        for (k, c) in cells.iter_mut().enumerate() {
            if let Some(s) = self.cells.get(k) {
                c.extend(s.iter().copied());
            }
            if let Some(s) = other.cells.get(k) {
                c.extend(s.iter().copied());
            }
        }
        Subcomplex { cells }
    }

    pub fn count(&self) -> usize {
        self.cells.iter().map(|s| s.len()).sum()
    }

    pub fn dim(&self) -> Option<usize> {
        (0..self.cells.len()).rev().find(|&k| !self.cells[k].is_empty())
    }
}

/// Cells added when closing a seed set under faces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosureReport {
    pub added: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct CellComplex {
    n: usize,
    kind: ComplexKind,
    coords: Vec<Point>,
    cells: Vec<Vec<Cell>>,
    faces: Vec<Vec<Vec<(usize, i32)>>>,
    grid: Option<GridSpec>,
    grid_index: Vec<HashMap<GridKey, usize>>,
    simplex_index: Vec<HashMap<Vec<usize>, usize>>,
}

impl CellComplex {
    /// Full cubical complex of the dyadic grid, with the default cell limit.
    pub fn dyadic_grid(spec: &GridSpec) -> Result<Self> {
        Self::dyadic_grid_with_limit(spec, DEFAULT_CELL_LIMIT)
    }

    pub fn dyadic_grid_with_limit(spec: &GridSpec, limit: usize) -> Result<Self> {
        let (lo, hi) = spec.integer_box()?;
        let n = lo.len();
        let mut count = 0usize;
        for j in 0..=n {
            count = count.saturating_add(spec.cell_count(j)?);
        }
        if count > limit {
            return Err(Error::CellLimit { count, limit });
        }
        let h = spec.side();
        let mut cells: Vec<Vec<Cell>> = vec![Vec::new(); n + 1];
        let mut grid_index: Vec<HashMap<GridKey, usize>> = vec![HashMap::new(); n + 1];
        let mut coords = Vec::new();
        for k in 0..=n {
            let mut axes: Vec<usize> = (0..k).collect();
            let mut keys = Vec::new();
            loop {
                let ranges: Vec<(i64, i64)> =
                    (0..n).map(|i| if axes.contains(&i) { (lo[i], hi[i] - 1) } else { (lo[i], hi[i]) }).collect();
                let mut a: Vec<i64> = ranges.iter().map(|r| r.0).collect();
                'outer: loop {
                    keys.push(GridKey { anchor: a.clone(), axes: axes.clone() });
                    for i in (0..n).rev() {
                        if a[i] < ranges[i].1 {
                            a[i] += 1;
                            for (j, aj) in a.iter_mut().enumerate().skip(i + 1) {
                                *aj = ranges[j].0;
                            }
                            continue 'outer;
                        }
                    }
                    break;
                }
                if k == 0 || !next_combination(&mut axes, n) {
                    break;
                }
            }
            keys.sort();
            for key in keys {
                let id = cells[k].len();
                if k == 0 {
                    coords.push(key.anchor.iter().map(|&x| x as f64 * h).collect());
                }
                let frame: Vec<Point> = key
                    .axes
                    .iter()
                    .map(|&ax| (0..n).map(|i| if i == ax { h } else { 0.0 }).collect())
                    .collect();
                grid_index[k].insert(key.clone(), id);
                cells[k].push(Cell { vertices: vec![], frame, measure: h.powi(k as i32), grid: Some(key) });
            }
        }
        // vertices of each cube
        for k in 0..=n {
            for id in 0..cells[k].len() {
                let key = cells[k][id].grid.clone().unwrap();
                let mut verts = Vec::with_capacity(1 << k);
                for mask in 0..(1usize << k) {
                    let mut a = key.anchor.clone();
                    for (b, &ax) in key.axes.iter().enumerate() {
                        if mask >> b & 1 == 1 {
                            a[ax] += 1;
                        }
                    }
                    verts.push(grid_index[0][&GridKey { anchor: a, axes: vec![] }]);
                }
                verts.sort_unstable();
                cells[k][id].vertices = verts;
            }
        }
        let mut faces: Vec<Vec<Vec<(usize, i32)>>> = vec![Vec::new(); n + 1];
        for k in 1..=n {
            faces[k] = cells[k]
                .iter()
                .map(|c| {
                    let key = c.grid.as_ref().unwrap();
                    let mut out = Vec::with_capacity(2 * k);
                    for (i, &ax) in key.axes.iter().enumerate() {
                        let sign = if i % 2 == 0 { 1 } else { -1 };
                        let mut rest = key.axes.clone();
                        rest.remove(i);
                        let mut up = key.anchor.clone();
                        up[ax] += 1;
                        let hi_face = grid_index[k - 1][&GridKey { anchor: up, axes: rest.clone() }];
                        let lo_face = grid_index[k - 1][&GridKey { anchor: key.anchor.clone(), axes: rest }];
                        out.push((hi_face, sign));
                        out.push((lo_face, -sign));
                    }
                    out
                })
                .collect();
        }
        Ok(CellComplex {
            n,
            kind: ComplexKind::Cubical,
            coords,
            cells,
            faces,
            grid: Some(spec.clone()),
            grid_index,
            simplex_index: Vec::new(),
        })
    }

    /// Simplicial complex generated by oriented top simplices (closure taken).
    pub fn from_simplices(coords: Vec<Point>, simplices: &[Vec<usize>]) -> Result<Self> {
        let n = coords.first().map(|c| c.len()).unwrap_or(0);
        if coords.iter().any(|c| c.len() != n || c.iter().any(|x| !x.is_finite())) {
            return Err(Error::DimensionMismatch("vertex coordinates".into()));
        }
        let mut b = SimplicialBuilder::new(coords);
        for s in simplices {
            if s.iter().any(|&v| v >= b.coords.len()) {
                return Err(Error::InvalidCell(format!("simplex {s:?} references a missing vertex")));
            }
            if s.iter().collect::<BTreeSet<_>>().len() != s.len() {
                return Err(Error::InvalidCell(format!("simplex {s:?} repeats a vertex")));
            }
            let k = s.len() - 1;
            if gram_measure(&simplex_frame(&b.coords, s)) <= 0.0 && k > 0 {
                return Err(Error::Degenerate(format!("simplex {s:?} is degenerate")));
            }
            b.insert(s.clone());
        }
        for v in 0..b.coords.len() {
            b.insert(vec![v]);
        }
        Ok(b.finish(ComplexKind::Simplicial))
    }

    pub(crate) fn from_parts(
        coords: Vec<Point>,
        cells: Vec<Vec<Cell>>,
        faces: Vec<Vec<Vec<(usize, i32)>>>,
        kind: ComplexKind,
    ) -> Self {
        let n = coords.first().map(|c| c.len()).unwrap_or(0);
        CellComplex { n, kind, coords, cells, faces, grid: None, grid_index: Vec::new(), simplex_index: Vec::new() }
    }

    pub fn ambient(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> ComplexKind {
        self.kind
    }

    /// Top dimension (the number of cell levels minus one).
    pub fn dim(&self) -> usize {
        (0..self.cells.len()).rev().find(|&k| !self.cells[k].is_empty()).unwrap_or(0)
    }

    pub fn levels(&self) -> usize {
        self.cells.len()
    }

    pub fn grid_spec(&self) -> Option<&GridSpec> {
        self.grid.as_ref()
    }

    pub fn count(&self, k: usize) -> usize {
        self.cells.get(k).map_or(0, |c| c.len())
    }

    pub fn counts(&self) -> Vec<usize> {
        self.cells.iter().map(|c| c.len()).collect()
    }

    pub fn total_cells(&self) -> usize {
        self.cells.iter().map(|c| c.len()).sum()
    }

    pub fn cell(&self, k: usize, id: usize) -> &Cell {
        &self.cells[k][id]
    }

    pub fn cells(&self, k: usize) -> &[Cell] {
        self.cells.get(k).map_or(&[], |c| c.as_slice())
    }

    pub fn vertex(&self, id: usize) -> &Point {
        &self.coords[id]
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    pub fn measure(&self, k: usize, id: usize) -> f64 {
        self.cells[k][id].measure
    }

    /// Signed faces of a `k`-cell.
    pub fn faces(&self, k: usize, id: usize) -> &[(usize, i32)] {
        if k == 0 {
            &[]
        } else {
            &self.faces[k][id]
        }
    }

    /// Cofaces `(id, sign)` of every `(k-1)`-cell among the `k`-cells.
    pub fn cofaces(&self, k: usize) -> Vec<Vec<(usize, i32)>> {
        let mut out = vec![Vec::new(); self.count(k.saturating_sub(1))];
        if k == 0 {
            return out;
        }
        for (id, fs) in self.faces[k].iter().enumerate() {
            for &(f, s) in fs {
                out[f].push((id, s));
            }
        }
        out
    }

    pub fn cell_id(&self, key: &GridKey) -> Option<usize> {
        self.grid_index.get(key.axes.len())?.get(key).copied()
    }

    /// Id of a simplex given by any ordering of its vertices.
    pub fn simplex_id(&self, vertices: &[usize]) -> Option<usize> {
        let mut key = vertices.to_vec();
        key.sort_unstable();
        self.simplex_index.get(vertices.len().checked_sub(1)?)?.get(&key).copied()
    }

    pub fn centroid(&self, k: usize, id: usize) -> Point {
        let pts: Vec<Point> = self.cells[k][id].vertices.iter().map(|&v| self.coords[v].clone()).collect();
        geometry::centroid(&pts)
    }

    pub fn polytope(&self, k: usize, id: usize) -> Polytope {
        let pts: Vec<Point> = self.cells[k][id].vertices.iter().map(|&v| self.coords[v].clone()).collect();
        let mut p = Polytope::hull(&pts).expect("cells are valid polytopes");
        p.id = id as u64;
        p
    }

    pub fn boundary_matrix(&self, k: usize) -> Result<SparseMatrix> {
        if k == 0 || k >= self.cells.len() {
            return Err(Error::DimensionMismatch(format!("boundary matrix in degree {k} (complex has dimension {})", self.dim())));
        }
        Ok(SparseMatrix {
            rows: self.count(k - 1),
            cols: self.count(k),
            columns: self.faces[k].iter().map(|f| f.iter().map(|&(i, s)| (i, s as i64)).collect()).collect(),
        })
    }

    /// Boundary matrix restricted to the given row and column cell sets,
    /// reindexed in ascending id order.
    pub fn boundary_submatrix(&self, k: usize, rows: &BTreeSet<usize>, cols: &BTreeSet<usize>) -> IMat {
        let row_pos: HashMap<usize, usize> = rows.iter().enumerate().map(|(i, r)| (*r, i)).collect();
        let mut m = vec![vec![0i128; cols.len()]; rows.len()];
        if k == 0 {
            return m;
        }
        for (j, c) in cols.iter().enumerate() {
            for &(f, s) in &self.faces[k][*c] {
                if let Some(&i) = row_pos.get(&f) {
                    m[i][j] += s as i128;
                }
            }
        }
        m
    }

    pub fn full_subcomplex(&self) -> Subcomplex {
        Subcomplex { cells: self.cells.iter().map(|c| (0..c.len()).collect()).collect() }
    }

    pub fn empty_subcomplex(&self) -> Subcomplex {
        Subcomplex::empty(self.cells.len())
    }

    /// Closes `seeds` (pairs `(dim, id)`) under taking faces.
    pub fn closure(&self, seeds: &[(usize, usize)]) -> Result<(Subcomplex, ClosureReport)> {
        let mut sub = self.empty_subcomplex();
        let mut requested = BTreeSet::new();
        for &(k, id) in seeds {
            if k >= self.cells.len() || id >= self.cells[k].len() {
                return Err(Error::InvalidCell(format!("({k}, {id})")));
            }
            requested.insert((k, id));
            sub.cells[k].insert(id);
        }
        for k in (1..self.cells.len()).rev() {
            let ids: Vec<usize> = sub.cells[k].iter().copied().collect();
            for id in ids {
                for &(f, _) in &self.faces[k][id] {
                    sub.cells[k - 1].insert(f);
                }
            }
        }
        let mut added = Vec::new();
        for (k, s) in sub.cells.iter().enumerate() {
            for &id in s {
                if !requested.contains(&(k, id)) {
                    added.push((k, id));
                }
            }
        }
        Ok((sub, ClosureReport { added }))
    }

    pub fn is_closed(&self, sub: &Subcomplex) -> bool {
        (1..sub.cells.len().min(self.cells.len()))
            .all(|k| sub.cells[k].iter().all(|&id| self.faces[k][id].iter().all(|(f, _)| sub.cells[k - 1].contains(f))))
    }

    pub fn skeleton_subcomplex(&self, d: usize) -> Subcomplex {
        let mut s = self.full_subcomplex();
        for k in d + 1..s.cells.len() {
            s.cells[k].clear();
        }
        s
    }

    /// New complex made of the cells of `sub` (closure taken), together
    /// with the id map `new id -> old id` per dimension.
    pub fn extract(&self, sub: &Subcomplex) -> Result<(CellComplex, Vec<Vec<usize>>, ClosureReport)> {
        let seeds: Vec<(usize, usize)> =
            sub.cells.iter().enumerate().flat_map(|(k, s)| s.iter().map(move |&id| (k, id))).collect();
        let (closed, report) = self.closure(&seeds)?;
        let top = closed.dim().unwrap_or(0);
        let old_ids: Vec<Vec<usize>> = (0..=top).map(|k| closed.cells[k].iter().copied().collect()).collect();
        let new_of: Vec<HashMap<usize, usize>> =
            old_ids.iter().map(|ids| ids.iter().enumerate().map(|(i, o)| (*o, i)).collect()).collect();
        let coords: Vec<Point> = old_ids[0].iter().map(|&v| self.coords[v].clone()).collect();
        let mut cells = Vec::new();
        let mut faces = vec![Vec::new()];
        for k in 0..=top {
            let mut level = Vec::new();
            for &o in &old_ids[k] {
                let mut c = self.cells[k][o].clone();
                c.vertices = c.vertices.iter().map(|v| new_of[0][v]).collect();
                level.push(c);
            }
            cells.push(level);
            if k > 0 {
                faces.push(
                    old_ids[k]
                        .iter()
                        .map(|&o| self.faces[k][o].iter().map(|&(f, s)| (new_of[k - 1][&f], s)).collect())
                        .collect(),
                );
            }
        }
        let mut out = CellComplex::from_parts(coords, cells, faces, self.kind);
        if self.kind != ComplexKind::Cubical || self.grid.is_none() {
            out.grid = None;
        } else {
            out.grid_index = (0..=top)
                .map(|k| out.cells[k].iter().enumerate().filter_map(|(i, c)| c.grid.clone().map(|g| (g, i))).collect())
                .collect();
        }
        if self.kind == ComplexKind::Simplicial {
            out.simplex_index = SimplicialBuilder::index_of(&out.cells);
        }
        Ok((out, old_ids, report))
    }

    pub fn skeleton(&self, d: usize) -> CellComplex {
        let (k, _, _) = self.extract(&self.skeleton_subcomplex(d)).expect("skeleton is closed");
        let mut k = k;
        k.grid = if d >= self.n { self.grid.clone() } else { None };
        k
    }

    /// `(R(K), 𝔯(K))`: minimum cell rotundity and maximum cell circumradius.
    pub fn rotundity_stats(&self) -> Result<(f64, f64)> {
        let mut rot = f64::INFINITY;
        let mut circ: f64 = 0.0;
        let mut cache: HashMap<(usize, u64), (f64, f64)> = HashMap::new();
        for k in 0..self.cells.len() {
            for (id, c) in self.cells[k].iter().enumerate() {
                let shape = c.grid.as_ref().map(|_| (k, c.measure.to_bits()));
                let (r, cr) = match shape.and_then(|s| cache.get(&s)) {
                    Some(v) => *v,
                    None => {
                        let p = self.polytope(k, id);
                        let v = (p.rotundity()?, p.circumradius());
                        if let Some(s) = shape {
                            cache.insert(s, v);
                        }
                        v
                    }
                };
                rot = rot.min(r);
                circ = circ.max(cr);
            }
        }
        if !rot.is_finite() {
            return Err(Error::precondition("empty complex"));
        }
        Ok((rot, circ))
    }

    /// Checks `∂∂ = 0` exactly in every degree.
    pub fn check_boundary_squared(&self) -> bool {
        (2..self.cells.len()).all(|k| {
            let a = self.boundary_matrix(k - 1).unwrap();
            let b = self.boundary_matrix(k).unwrap();
            a.mul(&b).unwrap().nnz() == 0
        })
    }

    /// Euler characteristic `Σ (-1)^k #cells_k`.
    pub fn euler_characteristic(&self) -> i64 {
        self.cells.iter().enumerate().map(|(k, c)| if k % 2 == 0 { c.len() as i64 } else { -(c.len() as i64) }).sum()
    }

    /// Simplicial subdivision of a cubical complex by coning from cell
    /// centers. Returns the complex and, for every cube of every dimension,
    /// its subdivision chain `(simplex id, sign)`.
    pub fn triangulate(&self) -> Result<Triangulation> {
        if self.kind == ComplexKind::Simplicial {
            let sub = self
                .cells
                .iter()
                .map(|level| (0..level.len()).map(|i| vec![(i, 1)]).collect())
                .collect();
            return Ok(Triangulation { complex: self.clone(), subdivision: sub, center: vec![Vec::new(); self.cells.len()] });
        }
        let mut coords = self.coords.clone();
        let mut center: Vec<Vec<usize>> = Vec::with_capacity(self.cells.len());
        for k in 0..self.cells.len() {
            let mut ids = Vec::with_capacity(self.cells[k].len());
            for id in 0..self.cells[k].len() {
                if k == 0 {
                    ids.push(self.cells[0][id].vertices[0]);
                } else if k == 1 {
                    ids.push(usize::MAX);
                } else {
                    ids.push(coords.len());
                    coords.push(self.centroid(k, id));
                }
            }
            center.push(ids);
        }
        // oriented simplices of each cell, built bottom-up
        let mut pieces: Vec<Vec<Vec<Vec<usize>>>> = Vec::with_capacity(self.cells.len());
        for k in 0..self.cells.len() {
            let mut level = Vec::with_capacity(self.cells[k].len());
            for id in 0..self.cells[k].len() {
                let simplices: Vec<Vec<usize>> = match k {
                    0 => vec![vec![self.cells[0][id].vertices[0]]],
                    1 => {
                        let f = &self.faces[1][id];
                        let head = f.iter().find(|x| x.1 > 0).unwrap().0;
                        let tail = f.iter().find(|x| x.1 < 0).unwrap().0;
                        vec![vec![self.cells[0][tail].vertices[0], self.cells[0][head].vertices[0]]]
                    }
                    _ => {
                        let c = center[k][id];
                        let mut out = Vec::new();
                        for &(f, sign) in &self.faces[k][id] {
                            for s in &pieces[k - 1][f] {
                                let mut t = Vec::with_capacity(k + 1);
                                t.push(c);
                                t.extend(s.iter().copied());
                                if sign < 0 {
                                    t.swap(1, 2);
                                }
                                out.push(t);
                            }
                        }
                        out
                    }
                };
                level.push(simplices);
            }
            pieces.push(level);
        }
        let mut b = SimplicialBuilder::new(coords);
        for level in &pieces {
            for cell in level {
                for s in cell {
                    b.insert(s.clone());
                }
            }
        }
        let complex = b.finish(ComplexKind::Simplicial);
        let mut subdivision = Vec::with_capacity(self.cells.len());
        for k in 0..self.cells.len() {
            let mut level = Vec::with_capacity(self.cells[k].len());
            for id in 0..self.cells[k].len() {
                let mut chain = Vec::new();
                for s in &pieces[k][id] {
                    let sid = complex.simplex_id(s).expect("inserted");
                    let stored = &complex.cells[k][sid].vertices;
                    let sign = perm_sign(s, stored);
                    let rel = relative_orientation(&simplex_frame(&complex.coords, s), &self.cells[k][id].frame);
                    debug_assert_eq!(rel, 1, "cone orientation");
                    chain.push((sid, sign * rel));
                }
                level.push(chain);
            }
            subdivision.push(level);
        }
        Ok(Triangulation { complex, subdivision, center })
    }

    /// SHA-256 of a canonical description (coordinates and cell vertex lists).
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("n={};", self.n).as_bytes());
        for c in &self.coords {
            for x in c {
                h.update(format!("{:.16e},", x).as_bytes());
            }
            h.update(b";");
        }
        for (k, level) in self.cells.iter().enumerate() {
            h.update(format!("k={k}:").as_bytes());
            for c in level {
                for v in &c.vertices {
                    h.update(format!("{v},").as_bytes());
                }
                h.update(b";");
            }
            if k > 0 {
                for f in &self.faces[k] {
                    for (i, s) in f {
                        h.update(format!("{i}:{s},").as_bytes());
                    }
                    h.update(b";");
                }
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Locates the top-dimensional grid cube containing `p` (ties broken
    /// towards lower anchors). Grid complexes only.
    pub fn locate_cube(&self, p: &[f64]) -> Option<usize> {
        let spec = self.grid.as_ref()?;
        let (lo, hi) = spec.integer_box().ok()?;
        let s = (spec.level as f64).exp2();
        let anchor: Vec<i64> = p
            .iter()
            .enumerate()
            .map(|(i, x)| ((x * s).floor() as i64).clamp(lo[i], hi[i] - 1))
            .collect();
        self.cell_id(&GridKey { anchor, axes: (0..self.n).collect() })
    }
}

/// Simplicial subdivision of a cubical complex.
#[derive(Debug, Clone)]
pub struct Triangulation {
    pub complex: CellComplex,
    /// `subdivision[k][cube] = [(simplex, sign)]`.
    pub subdivision: Vec<Vec<Vec<(usize, i32)>>>,
    /// Vertex id of the center of each cube of dimension ≥ 2
    /// (`usize::MAX` for edges; the vertex itself for 0-cells).
    pub center: Vec<Vec<usize>>,
}

struct SimplicialBuilder {
    coords: Vec<Point>,
    levels: Vec<Vec<Vec<usize>>>,
    index: Vec<HashMap<Vec<usize>, usize>>,
}

impl SimplicialBuilder {
    fn new(coords: Vec<Point>) -> Self {
        SimplicialBuilder { coords, levels: Vec::new(), index: Vec::new() }
    }

    fn insert(&mut self, s: Vec<usize>) -> usize {
        let k = s.len() - 1;
        while self.levels.len() <= k {
            self.levels.push(Vec::new());
            self.index.push(HashMap::new());
        }
        let mut key = s.clone();
        key.sort_unstable();
        if let Some(&id) = self.index[k].get(&key) {
            return id;
        }
        if k > 0 {
            for i in 0..=k {
                let mut f = s.clone();
                f.remove(i);
                self.insert(f);
            }
        }
        let id = self.levels[k].len();
        self.levels[k].push(s);
        self.index[k].insert(key, id);
        id
    }

    fn index_of(cells: &[Vec<Cell>]) -> Vec<HashMap<Vec<usize>, usize>> {
        cells
            .iter()
            .map(|level| {
                level
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        let mut k = c.vertices.clone();
                        k.sort_unstable();
                        (k, i)
                    })
                    .collect()
            })
            .collect()
    }

    fn finish(self, kind: ComplexKind) -> CellComplex {
        let SimplicialBuilder { coords, levels, index } = self;
        let mut cells = Vec::with_capacity(levels.len());
        let mut faces = vec![Vec::new()];
        for (k, level) in levels.iter().enumerate() {
            cells.push(
                level
                    .iter()
                    .map(|s| {
                        let frame = simplex_frame(&coords, s);
                        let measure = gram_measure(&frame);
                        Cell { vertices: s.clone(), frame, measure, grid: None }
                    })
                    .collect(),
            );
            if k > 0 {
                faces.push(
                    level
                        .iter()
                        .map(|s| {
                            (0..=k)
                                .map(|i| {
                                    let mut f = s.clone();
                                    f.remove(i);
                                    let mut key = f.clone();
                                    key.sort_unstable();
                                    let fid = index[k - 1][&key];
                                    let sign = if i % 2 == 0 { 1 } else { -1 } * perm_sign(&f, &levels[k - 1][fid]);
                                    (fid, sign)
                                })
                                .collect()
                        })
                        .collect(),
                );
            }
        }
        let mut out = CellComplex::from_parts(coords, cells, faces, kind);
        out.simplex_index = index;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        let k = CellComplex::dyadic_grid(&GridSpec::unit(2, 0)).unwrap();
        assert_eq!(k.counts(), vec![4, 4, 1]);
        let k = CellComplex::dyadic_grid(&GridSpec::unit(2, 1)).unwrap();
        assert_eq!(k.counts(), vec![9, 12, 4]);
        let k = CellComplex::dyadic_grid(&GridSpec::unit(3, 0)).unwrap();
        assert_eq!(k.counts(), vec![8, 12, 6, 1]);
    }

    #[test]
    fn square_boundary_is_ccw_cycle() {
        let k = CellComplex::dyadic_grid(&GridSpec::unit(2, 0)).unwrap();
        let b = k.boundary_matrix(2).unwrap();
        assert_eq!(b.columns[0].len(), 4);
        let b1 = k.boundary_matrix(1).unwrap();
        assert_eq!(b1.mul(&b).unwrap().nnz(), 0);
        // walking the boundary counter-clockwise: each edge direction times sign
        let mut total = vec![0.0, 0.0];
        let mut signed_area = 0.0;
        for &(e, s) in &b.columns[0] {
            let f = k.faces(1, e);
            let head = k.vertex(k.cell(0, f.iter().find(|x| x.1 > 0).unwrap().0).vertices[0]).clone();
            let tail = k.vertex(k.cell(0, f.iter().find(|x| x.1 < 0).unwrap().0).vertices[0]).clone();
            let (a, c) = if s > 0 { (tail, head) } else { (head, tail) };
            total[0] += c[0] - a[0];
            total[1] += c[1] - a[1];
            signed_area += a[0] * c[1] - a[1] * c[0];
        }
        assert_eq!(total, vec![0.0, 0.0]);
        assert!((signed_area / 2.0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cube_incidence_matches_geometry() {
        let k = CellComplex::dyadic_grid(&GridSpec::unit(3, 1)).unwrap();
        for d in 1..=3 {
            for id in 0..k.count(d) {
                let c = k.centroid(d, id);
                for &(f, s) in k.faces(d, id) {
                    let fc = k.centroid(d - 1, f);
                    let mut frame = vec![geometry::sub(&fc, &c)];
                    frame.extend(k.cell(d - 1, f).frame.iter().cloned());
                    assert_eq!(relative_orientation(&frame, &k.cell(d, id).frame), s);
                }
            }
        }
    }

    #[test]
    fn closure_and_skeleton() {
        let k = CellComplex::dyadic_grid(&GridSpec::unit(2, 1)).unwrap();
        let s = k.skeleton(1);
        assert_eq!(s.counts(), vec![9, 12]);
        assert_eq!(k.skeleton(0).counts(), vec![9]);
        let (sub, rep) = k.closure(&[(2, 0)]).unwrap();
        assert_eq!(sub.count(), 9);
        assert_eq!(rep.added.len(), 8);
        let (ext, _, _) = k.extract(&sub).unwrap();
        assert_eq!(ext.counts(), vec![4, 4, 1]);
        assert!(ext.check_boundary_squared());
    }

    #[test]
    fn rotundity_of_grids() {
        let k = CellComplex::dyadic_grid(&GridSpec::unit(2, 2)).unwrap();
        let (r, c) = k.rotundity_stats().unwrap();
        assert!((r - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((c - 2f64.sqrt() * 0.125).abs() < 1e-12);
    }

    #[test]
    fn triangulation_counts_and_measure() {
        let k = CellComplex::dyadic_grid(&GridSpec::unit(2, 0)).unwrap();
        let t = k.triangulate().unwrap();
        assert_eq!(t.complex.count(2), 4);
        let area: f64 = t.subdivision[2][0].iter().map(|(s, _)| t.complex.measure(2, *s)).sum();
        assert!((area - 1.0).abs() < 1e-12);
        assert!(t.complex.check_boundary_squared());
        let k3 = CellComplex::dyadic_grid(&GridSpec::unit(3, 0)).unwrap();
        let t3 = k3.triangulate().unwrap();
        assert_eq!(t3.complex.count(3), 24);
        let vol: f64 = (0..24).map(|s| t3.complex.measure(3, s)).sum();
        assert!((vol - 1.0).abs() < 1e-12);
        assert!(t3.complex.check_boundary_squared());
        let e = CellComplex::dyadic_grid(&GridSpec::unit(1, 0)).unwrap().triangulate().unwrap();
        assert_eq!(e.complex.counts(), vec![2, 1]);
    }

    #[test]
    fn cell_limit() {
        let r = CellComplex::dyadic_grid_with_limit(&GridSpec::unit(2, 4), 100);
        assert!(matches!(r, Err(Error::CellLimit { .. })));
    }

    #[test]
    fn simplicial_from_list() {
        let coords = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![5.0, 0.0], vec![6.0, 0.0]];
        let k = CellComplex::from_simplices(coords, &[vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(k.counts(), vec![4, 2]);
        assert_eq!(k.euler_characteristic(), 2);
    }
}
