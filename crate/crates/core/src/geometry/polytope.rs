use super::{axpy, centroid, det, dist, dot, norm, orthonormalize, scale, sub, Point, INCIDENCE_TOL};
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpOutcome, Relation};

/// A facet inequality `normal . z <= offset` in ambient coordinates. The
/// normal is a unit vector lying in the direction space of the affine hull.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub normal: Point,
    pub offset: f64,
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone)]
struct LocalFacet {
    normal: Vec<f64>,
    offset: f64,
    vertices: Vec<usize>,
}

/// A convex polytope given by its extreme points, of intrinsic dimension
/// `dim` inside `R^n`.
#[derive(Debug, Clone)]
pub struct Polytope {
    vertices: Vec<Point>,
    dim: usize,
    pub id: u64,
    origin: Point,
    basis: Vec<Point>,
    local: Vec<Vec<f64>>,
    facets: Vec<LocalFacet>,
    edges: Vec<(usize, usize)>,
    tol: f64,
}

fn diameter(points: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            d = d.max(dist(p, q));
        }
    }
    d
}

fn for_each_combination(m: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > m {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + m - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        if idx[i] == i + m - k {
            return;
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn rank(vectors: &[Vec<f64>], tol: f64) -> usize {
    orthonormalize(vectors, tol).len()
}

/// Facets of the convex hull of `pts` (local coordinates, full dimension `d`).
fn hull_facets(pts: &[Vec<f64>], d: usize, tol: f64) -> Vec<LocalFacet> {
    let m = pts.len();
    if d == 0 {
        return Vec::new();
    }
    if d == 1 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in pts {
            lo = lo.min(p[0]);
            hi = hi.max(p[0]);
        }
        let at = |v: f64| (0..m).filter(|&i| (pts[i][0] - v).abs() <= tol).collect::<Vec<_>>();
        return vec![
            LocalFacet { normal: vec![-1.0], offset: -lo, vertices: at(lo) },
            LocalFacet { normal: vec![1.0], offset: hi, vertices: at(hi) },
        ];
    }
    let mut out: Vec<LocalFacet> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for_each_combination(m, d, |combo| {
        let p0 = &pts[combo[0]];
        let rows: Vec<Vec<f64>> = combo[1..].iter().map(|&i| sub(&pts[i], p0)).collect();
        let mut n = vec![0.0; d];
        for (j, nj) in n.iter_mut().enumerate() {
            let minor: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| *v).collect())
                .collect();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            *nj = sign * det(minor);
        }
        let len = norm(&n);
        if len <= 1e-14 {
            return;
        }
        let mut n = scale(&n, 1.0 / len);
        let mut off = dot(&n, p0);
        let s: Vec<f64> = pts.iter().map(|p| dot(&n, p) - off).collect();
        if s.iter().all(|v| *v <= tol) {
        } else if s.iter().all(|v| *v >= -tol) {
            n = scale(&n, -1.0);
            off = -off;
        } else {
            return;
        }
        let on: Vec<usize> = (0..m).filter(|&i| s[i].abs() <= tol).collect();
        if on.len() == m {
            return;
        }
        if seen.insert(on.clone()) {
            out.push(LocalFacet { normal: n, offset: off, vertices: on });
        }
    });
    out
}

impl Polytope {
    /// Builds a polytope from its extreme points; rejects non-extreme or
    /// duplicated vertices and a hull dimension different from `dim`.
    pub fn new(vertices: Vec<Point>, dim: usize) -> Result<Self> {
        let p = Self::build(vertices, Some(dim))?;
        for i in 0..p.vertices.len() {
            if !p.is_extreme(i) {
                return Err(Error::Degenerate(format!("vertex {i} is not an extreme point")));
            }
        }
        Ok(p)
    }

    /// Convex hull of a finite point set; non-extreme points are dropped and
    /// near-duplicates (within the incidence tolerance) merged.
    pub fn hull(points: &[Point]) -> Result<Self> {
        let mut uniq: Vec<Point> = Vec::new();
        let tol = INCIDENCE_TOL * diameter(points).max(1.0);
        for p in points {
            if !uniq.iter().any(|q| dist(p, q) <= tol) {
                uniq.push(p.clone());
            }
        }
        let p = Self::build(uniq, None)?;
        let keep: Vec<Point> =
            (0..p.vertices.len()).filter(|&i| p.is_extreme(i)).map(|i| p.vertices[i].clone()).collect();
        if keep.len() == p.vertices.len() {
            return Ok(p);
        }
        Self::build(keep, Some(p.dim))
    }

    /// Axis-aligned box `[lo, hi]`; degenerate axes lower the dimension.
    pub fn aabb(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let n = lo.len();
        let mut pts = vec![Vec::new()];
        for i in 0..n {
            let mut next = Vec::new();
            for p in &pts {
                let mut a: Vec<f64> = p.clone();
                a.push(lo[i]);
                next.push(a);
                if hi[i] != lo[i] {
                    let mut b: Vec<f64> = p.clone();
                    b.push(hi[i]);
                    next.push(b);
                }
            }
            pts = next;
        }
        let dim = (0..n).filter(|&i| hi[i] != lo[i]).count();
        Self::new(pts, dim)
    }

    pub fn simplex(vertices: Vec<Point>) -> Result<Self> {
        let d = vertices.len().saturating_sub(1);
        Self::new(vertices, d)
    }

    fn build(vertices: Vec<Point>, dim: Option<usize>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::Degenerate("no vertices".into()));
        }
        let n = vertices[0].len();
        if vertices.iter().any(|v| v.len() != n || v.iter().any(|x| !x.is_finite())) {
            return Err(Error::Degenerate("vertices must be finite and of equal length".into()));
        }
        let tol = INCIDENCE_TOL * diameter(&vertices).max(1.0);
        for (i, a) in vertices.iter().enumerate() {
            if vertices[i + 1..].iter().any(|b| dist(a, b) <= tol) {
                return Err(Error::Degenerate("duplicate vertices".into()));
            }
        }
        let origin = vertices[0].clone();
        let diffs: Vec<Point> = vertices[1..].iter().map(|v| sub(v, &origin)).collect();
        let basis = orthonormalize(&diffs, tol);
        if let Some(d) = dim {
            if basis.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "affine hull has dimension {}, expected {d}",
                    basis.len()
                )));
            }
        }
        let d = basis.len();
        let local: Vec<Vec<f64>> =
            vertices.iter().map(|v| basis.iter().map(|b| dot(&sub(v, &origin), b)).collect()).collect();
        let facets = hull_facets(&local, d, tol);
        let mut p = Polytope { vertices, dim: d, id: 0, origin, basis, local, facets, edges: Vec::new(), tol };
        p.edges = p.compute_edges();
        Ok(p)
    }

    fn is_extreme(&self, i: usize) -> bool {
        if self.dim == 0 {
            return true;
        }
        let normals: Vec<Vec<f64>> =
            self.facets.iter().filter(|f| f.vertices.contains(&i)).map(|f| f.normal.clone()).collect();
        rank(&normals, 1e-9) == self.dim
    }

    fn compute_edges(&self) -> Vec<(usize, usize)> {
        let m = self.vertices.len();
        if self.dim == 0 {
            return Vec::new();
        }
        if self.dim == 1 {
            return vec![(0, 1)];
        }
        let mut edges = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                let normals: Vec<Vec<f64>> = self
                    .facets
                    .iter()
                    .filter(|f| f.vertices.contains(&i) && f.vertices.contains(&j))
                    .map(|f| f.normal.clone())
                    .collect();
                if rank(&normals, 1e-9) == self.dim - 1 {
                    edges.push((i, j));
                }
            }
        }
        edges
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient(&self) -> usize {
        self.origin.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// Orthonormal basis of the direction space of the affine hull.
    pub fn hull_basis(&self) -> &[Point] {
        &self.basis
    }

    pub fn hull_origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn tangent(&self) -> super::PlaneDir {
        super::PlaneDir::spanned_by(&self.basis, self.ambient())
    }

    pub fn centroid(&self) -> Point {
        centroid(&self.vertices)
    }

    pub fn to_local(&self, p: &[f64]) -> Vec<f64> {
        let d = sub(p, &self.origin);
        self.basis.iter().map(|b| dot(&d, b)).collect()
    }

    pub fn from_local(&self, c: &[f64]) -> Point {
        let mut p = self.origin.clone();
        for (ci, b) in c.iter().zip(&self.basis) {
            p = axpy(&p, *ci, b);
        }
        p
    }

    /// Distance from `p` to the affine hull.
    pub fn hull_distance(&self, p: &[f64]) -> f64 {
        dist(p, &self.from_local(&self.to_local(p)))
    }

    pub fn facets(&self) -> Vec<Facet> {
        self.facets
            .iter()
            .map(|f| {
                let mut normal = vec![0.0; self.ambient()];
                for (c, b) in f.normal.iter().zip(&self.basis) {
                    normal = axpy(&normal, *c, b);
                }
                let offset = f.offset + dot(&normal, &self.origin);
                Facet { normal, offset, vertices: f.vertices.clone() }
            })
            .collect()
    }

    /// Facet polytopes (dimension `dim - 1`).
    pub fn facet_polytopes(&self) -> Vec<Polytope> {
        self.facets
            .iter()
            .map(|f| {
                let pts: Vec<Point> = f.vertices.iter().map(|&i| self.vertices[i].clone()).collect();
                Polytope::hull(&pts).expect("facet of a valid polytope")
            })
            .collect()
    }

    /// Largest facet slack `normal . p - offset`; negative inside.
    pub fn max_slack(&self, p: &[f64]) -> f64 {
        let l = self.to_local(p);
        self.facets.iter().map(|f| dot(&f.normal, &l) - f.offset).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.hull_distance(p) <= self.tol && (self.dim == 0 || self.max_slack(p) <= self.tol)
    }

    /// Relative interior test with margin `tol`.
    pub fn contains_interior(&self, p: &[f64], tol: f64) -> bool {
        self.dim > 0 && self.hull_distance(p) <= self.tol && self.max_slack(p) < -tol
    }

    pub(crate) fn local_facet_data(&self) -> Vec<(Vec<f64>, f64)> {
        self.facets.iter().map(|f| (f.normal.clone(), f.offset)).collect()
    }

    /// Vertices of a polygon in counter-clockwise order of the hull frame.
    pub fn ordered_polygon(&self) -> Vec<Point> {
        assert_eq!(self.dim, 2, "ordered_polygon needs a 2-polytope");
        let c = centroid(&self.local);
        let mut idx: Vec<usize> = (0..self.vertices.len()).collect();
        idx.sort_by(|&a, &b| {
            let ta = (self.local[a][1] - c[1]).atan2(self.local[a][0] - c[0]);
            let tb = (self.local[b][1] - c[1]).atan2(self.local[b][0] - c[0]);
            ta.partial_cmp(&tb).unwrap()
        });
        idx.into_iter().map(|i| self.vertices[i].clone()).collect()
    }

    /// d-dimensional volume (counting measure for points).
    pub fn measure(&self) -> f64 {
        match self.dim {
            0 => 1.0,
            1 => self.facets[1].offset + self.facets[0].offset,
            2 => {
                let c = centroid(&self.local);
                let mut idx: Vec<usize> = (0..self.local.len()).collect();
                idx.sort_by(|&a, &b| {
                    let ta = (self.local[a][1] - c[1]).atan2(self.local[a][0] - c[0]);
                    let tb = (self.local[b][1] - c[1]).atan2(self.local[b][0] - c[0]);
                    ta.partial_cmp(&tb).unwrap()
                });
                let mut area = 0.0;
                for k in 0..idx.len() {
                    let p = &self.local[idx[k]];
                    let q = &self.local[idx[(k + 1) % idx.len()]];
                    area += p[0] * q[1] - p[1] * q[0];
                }
                area.abs() / 2.0
            }
            d => {
                let c = centroid(&self.local);
                let facets = self.facet_polytopes();
                self.facets
                    .iter()
                    .zip(&facets)
                    .map(|(f, fp)| (f.offset - dot(&f.normal, &c)) * fp.measure() / d as f64)
                    .sum()
            }
        }
    }

    /// Decomposition into interior-disjoint d-simplices (vertex lists).
    pub fn simplices(&self) -> Vec<Vec<Point>> {
        match self.dim {
            0 => vec![vec![self.vertices[0].clone()]],
            1 => {
                let lo = self.facets[0].vertices[0];
                let hi = self.facets[1].vertices[0];
                vec![vec![self.vertices[lo].clone(), self.vertices[hi].clone()]]
            }
            2 => {
                let poly = self.ordered_polygon();
                (1..poly.len() - 1).map(|i| vec![poly[0].clone(), poly[i].clone(), poly[i + 1].clone()]).collect()
            }
            _ => {
                let c = self.centroid();
                let mut out = Vec::new();
                for f in self.facet_polytopes() {
                    for s in f.simplices() {
                        let mut t = vec![c.clone()];
                        t.extend(s);
                        out.push(t);
                    }
                }
                out
            }
        }
    }

    /// Smallest enclosing ball within the affine hull: `(center, radius)`.
    pub fn circumball(&self) -> (Point, f64) {
        let m = self.local.len();
        let d = self.dim;
        if d == 0 {
            return (self.vertices[0].clone(), 0.0);
        }
        let mut best: Option<(Vec<f64>, f64)> = None;
        for k in 1..=(d + 1).min(m) {
            for_each_combination(m, k, |combo| {
                let p0 = &self.local[combo[0]];
                let diffs: Vec<Vec<f64>> = combo[1..].iter().map(|&i| sub(&self.local[i], p0)).collect();
                let g: Vec<Vec<f64>> =
                    diffs.iter().map(|a| diffs.iter().map(|b| 2.0 * dot(a, b)).collect()).collect();
                let rhs: Vec<f64> = diffs.iter().map(|a| dot(a, a)).collect();
                let lambda = if diffs.is_empty() { Some(vec![]) } else { super::solve(g, rhs) };
                let Some(lambda) = lambda else { return };
                let mut c = p0.clone();
                for (l, a) in lambda.iter().zip(&diffs) {
                    c = axpy(&c, *l, a);
                }
                let r = dist(&c, p0);
                if let Some((_, br)) = &best {
                    if r >= *br {
                        return;
                    }
                }
                if self.local.iter().all(|p| dist(p, &c) <= r + self.tol) {
                    best = Some((c, r));
                }
            });
        }
        let (c, r) = best.expect("some subset ball encloses all points");
        (self.from_local(&c), r)
    }

    pub fn circumradius(&self) -> f64 {
        self.circumball().1
    }

    /// Largest inscribed ball within the affine hull, by linear programming
    /// over the facet inequalities: `(center, radius)`.
    pub fn inball(&self) -> Result<(Point, f64)> {
        let d = self.dim;
        if d == 0 {
            return Ok((self.vertices[0].clone(), 0.0));
        }
        // variables: c+ (d), c- (d), r
        let mut lp = LinearProgram::<f64>::new(2 * d + 1);
        lp.objective[2 * d] = -1.0;
        let shift = centroid(&self.local);
        for f in &self.facets {
            let mut coeffs = Vec::with_capacity(2 * d + 1);
            for (i, a) in f.normal.iter().enumerate() {
                coeffs.push((i, *a));
                coeffs.push((d + i, -*a));
            }
            coeffs.push((2 * d, 1.0));
            lp.add(coeffs, Relation::Le, f.offset - dot(&f.normal, &shift));
        }
        match lp.solve() {
            LpOutcome::Optimal { x, .. } => {
                let c: Vec<f64> = (0..d).map(|i| x[i] - x[d + i] + shift[i]).collect();
                Ok((self.from_local(&c), x[2 * d]))
            }
            _ => Err(Error::Degenerate("inradius program failed".into())),
        }
    }

    pub fn inradius(&self) -> Result<f64> {
        Ok(self.inball()?.1)
    }

    /// Inradius over circumradius, in `(0, 1]`; a point has rotundity 1.
    pub fn rotundity(&self) -> Result<f64> {
        if self.dim == 0 {
            return Ok(1.0);
        }
        Ok(self.inradius()? / self.circumradius())
    }

    /// Intersection with `{ z : normal . z <= offset }`. Results of lower
    /// dimension than `self` are reported as empty.
    pub fn clip(&self, normal: &[f64], offset: f64) -> Option<Polytope> {
        let s: Vec<f64> = self.vertices.iter().map(|v| dot(normal, v) - offset).collect();
        if s.iter().all(|v| *v <= self.tol) {
            return Some(self.clone());
        }
        if !s.iter().any(|v| *v < -self.tol) {
            return None;
        }
        let mut pts: Vec<Point> =
            (0..self.vertices.len()).filter(|&i| s[i] <= self.tol).map(|i| self.vertices[i].clone()).collect();
        for &(i, j) in &self.edges {
            let (a, b) = if s[i] < s[j] { (i, j) } else { (j, i) };
            if s[a] < -self.tol && s[b] > self.tol {
                let t = s[a] / (s[a] - s[b]);
                pts.push(axpy(&self.vertices[a], t, &sub(&self.vertices[b], &self.vertices[a])));
            }
        }
        match Polytope::hull(&pts) {
            Ok(p) if p.dim == self.dim => Some(p),
            _ => None,
        }
    }

    /// Intersection with another polytope, clipping by its facets. Returns
    /// `None` when the intersection has lower dimension than `self`.
    pub fn intersect(&self, other: &Polytope) -> Option<Polytope> {
        if self.dim != other.dim || self.vertices.iter().any(|v| other.hull_distance(v) > self.tol) {
            return None;
        }
        let mut cur = self.clone();
        for f in other.facets() {
            cur = cur.clip(&f.normal, f.offset)?;
        }
        Some(cur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Polytope {
        Polytope::aabb(&[0.0, 0.0], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn measure_examples() {
        assert!((square().measure() - 1.0).abs() < 1e-15);
        let seg = Polytope::new(vec![vec![0.0, 0.0], vec![3.0, 4.0]], 1).unwrap();
        assert!((seg.measure() - 5.0).abs() < 1e-15);
        let tri = Polytope::simplex(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((tri.measure() - 0.5).abs() < 1e-15);
        let cube = Polytope::aabb(&[0.0; 3], &[1.0, 2.0, 3.0]).unwrap();
        assert!((cube.measure() - 6.0).abs() < 1e-12);
        let tet = Polytope::simplex(vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert!((tet.measure() - 1.0 / 6.0).abs() < 1e-14);
        let hyper = Polytope::aabb(&[0.0; 4], &[1.0; 4]).unwrap();
        assert!((hyper.measure() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn square_in_space_has_area_one() {
        let p = Polytope::new(
            vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0], vec![1.0, 1.0, 1.0]],
            2,
        )
        .unwrap();
        assert!((p.measure() - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            Polytope::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]], 1),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            Polytope::new(vec![vec![0.0, 0.0], vec![1.0, 0.0]], 2),
            Err(Error::DimensionMismatch(_))
        ));
        let with_interior =
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![0.5, 0.5]];
        assert!(Polytope::new(with_interior.clone(), 2).is_err());
        assert_eq!(Polytope::hull(&with_interior).unwrap().vertices().len(), 4);
    }

    #[test]
    fn radii_and_rotundity() {
        let sq = square();
        assert!((sq.inradius().unwrap() - 0.5).abs() < 1e-12);
        assert!((sq.circumradius() - 2f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((sq.rotundity().unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        let seg = Polytope::new(vec![vec![0.0, 0.0], vec![3.0, 4.0]], 1).unwrap();
        assert!((seg.rotundity().unwrap() - 1.0).abs() < 1e-12);
        let cube = Polytope::aabb(&[0.0; 3], &[1.0; 3]).unwrap();
        assert!((cube.rotundity().unwrap() - 1.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn clip_examples() {
        let sq = square();
        let half = sq.clip(&[1.0, 0.0], 0.5).unwrap();
        assert!((half.measure() - 0.5).abs() < 1e-15);
        assert_eq!(half.vertices().len(), 4);
        assert!((sq.clip(&[1.0, 0.0], 2.0).unwrap().measure() - 1.0).abs() < 1e-15);
        assert!(sq.clip(&[1.0, 0.0], -1.0).is_none());
        assert!(sq.clip(&[1.0, 0.0], 0.0).is_none());
    }

    #[test]
    fn simplices_partition_measure() {
        let cube = Polytope::aabb(&[0.0; 3], &[1.0; 3]).unwrap();
        let total: f64 = cube.simplices().iter().map(|s| Polytope::simplex(s.clone()).unwrap().measure()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn clip_partitions_measure(nx in -1.0f64..1.0, ny in -1.0f64..1.0, nz in -1.0f64..1.0, off in -1.0f64..2.0) {
            prop_assume!(nx.abs() + ny.abs() + nz.abs() > 1e-3);
            let cube = Polytope::aabb(&[0.0; 3], &[1.0; 3]).unwrap();
            let n = vec![nx, ny, nz];
            let a = cube.clip(&n, off).map(|p| p.measure()).unwrap_or(0.0);
            let b = cube.clip(&scale(&n, -1.0), -off).map(|p| p.measure()).unwrap_or(0.0);
            prop_assert!((a + b - 1.0).abs() < 1e-9);
        }

        #[test]
        fn clip_partitions_polygon(theta in 0.0f64..6.28, off in -0.5f64..1.5) {
            let sq = Polytope::aabb(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
            let n = vec![theta.cos(), theta.sin()];
            let a = sq.clip(&n, off).map(|p| p.measure()).unwrap_or(0.0);
            let b = sq.clip(&scale(&n, -1.0), -off).map(|p| p.measure()).unwrap_or(0.0);
            prop_assert!((a + b - 1.0).abs() < 1e-9);
        }
    }
}
