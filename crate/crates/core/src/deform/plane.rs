//! Deformation of planar 1-chains onto the 1-skeleton of a square grid.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use super::canon::{Segment, SegmentSum};
use super::center::{center_ball, projected_measure, select_with, uniform_in_disk, CenterSelection, STAGE_SELECT};
use super::polygon::{len, ConvexPolygon, P2};
use super::{
    CellRatio, DeformOptions, DeformPlan, DeformationCertificate, EdgeDecision, EdgeResolution, PLChain, PointTransport,
    Prism, WeightedPoint,
};
use crate::chain::Chain;
use crate::coeff::CoeffGroup;
use crate::complex::{CellComplex, GridKey};
use crate::error::{Error, Result};
use crate::geometry::{PlaneDir, Polytope, SquashMap};
use crate::rng;

const STAGE_SQUASH: u64 = 0x5c0a54;
const COVER_TOL: f64 = 1e-6;
const SQUASH_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy)]
struct Seg {
    a: P2,
    b: P2,
    g: i64,
}

#[derive(Debug, Clone, Copy)]
struct EdgePiece {
    edge: usize,
    u0: f64,
    u1: f64,
    g: i64,
}

/// Where a point of the plane sits relative to the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Site {
    Vertex,
    Edge { edge: usize, u: f64 },
    Cell(usize),
}

pub(crate) struct Grid2<'a> {
    k: &'a CellComplex,
    h: f64,
    lo: [i64; 2],
    hi: [i64; 2],
    tol: f64,
}

impl<'a> Grid2<'a> {
    pub fn new(k: &'a CellComplex) -> Result<Self> {
        let spec = k
            .grid_spec()
            .ok_or_else(|| Error::Unsupported("deformation needs a dyadic grid complex".into()))?;
        if k.ambient() != 2 {
            return Err(Error::Unsupported(format!("planar deformation on a grid in R^{}", k.ambient())));
        }
        let (lo, hi) = spec.integer_box()?;
        let h = spec.side();
        let extent = spec.bbox[0].iter().chain(spec.bbox[1].iter()).fold(1.0f64, |m, x| m.max(x.abs()));
        Ok(Grid2 { k, h, lo: [lo[0], lo[1]], hi: [hi[0], hi[1]], tol: 1e-9 * extent })
    }

    fn line(&self, v: f64) -> Option<i64> {
        let s = v / self.h;
        let r = s.round();
        ((s - r).abs() <= 1e-9).then_some(r as i64)
    }

    fn floor(&self, v: f64, axis: usize) -> i64 {
        ((v / self.h).floor() as i64).clamp(self.lo[axis], self.hi[axis] - 1)
    }

    fn inside(&self, p: P2) -> bool {
        (0..2).all(|i| {
            p[i] >= self.lo[i] as f64 * self.h - self.tol && p[i] <= self.hi[i] as f64 * self.h + self.tol
        })
    }

    fn cell_id(&self, ix: i64, iy: i64) -> usize {
        self.k.cell_id(&GridKey { anchor: vec![ix, iy], axes: vec![0, 1] }).expect("anchor inside the grid")
    }

    fn edge_id(&self, anchor: [i64; 2], axis: usize) -> usize {
        self.k.cell_id(&GridKey { anchor: anchor.to_vec(), axes: vec![axis] }).expect("edge inside the grid")
    }

    fn cell_anchor(&self, id: usize) -> [i64; 2] {
        let a = &self.k.cell(2, id).grid.as_ref().unwrap().anchor;
        [a[0], a[1]]
    }

    fn square(&self, id: usize) -> ConvexPolygon {
        let a = self.cell_anchor(id);
        let lo = [a[0] as f64 * self.h, a[1] as f64 * self.h];
        ConvexPolygon::rect(lo, [(a[0] + 1) as f64 * self.h, (a[1] + 1) as f64 * self.h])
    }

    /// Endpoints of grid edge `id` in its positive orientation.
    fn edge_points(&self, id: usize) -> (P2, P2) {
        let key = self.k.cell(1, id).grid.as_ref().unwrap();
        let a = [key.anchor[0] as f64 * self.h, key.anchor[1] as f64 * self.h];
        let mut b = a;
        b[key.axes[0]] += self.h;
        (a, b)
    }

    fn site(&self, p: P2) -> Site {
        match (self.line(p[0]), self.line(p[1])) {
            (Some(_), Some(_)) => Site::Vertex,
            (Some(x), None) => {
                let y = self.floor(p[1], 1);
                Site::Edge { edge: self.edge_id([x, y], 1), u: p[1] / self.h - y as f64 }
            }
            (None, Some(y)) => {
                let x = self.floor(p[0], 0);
                Site::Edge { edge: self.edge_id([x, y], 0), u: p[0] / self.h - x as f64 }
            }
            (None, None) => Site::Cell(self.cell_id(self.floor(p[0], 0), self.floor(p[1], 1))),
        }
    }

    /// The grid edge carrying the segment `p -> q`, if it lies on a grid line.
    fn on_skeleton(&self, p: P2, q: P2, g: i64) -> Option<EdgePiece> {
        let m = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
        for ax in 0..2 {
            if let Some(line) = self.line(m[ax]) {
                if (p[ax] - q[ax]).abs() <= self.tol {
                    let along = 1 - ax;
                    let mut anchor = [0; 2];
                    anchor[ax] = line;
                    anchor[along] = self.floor(m[along], along);
                    let base = anchor[along] as f64;
                    return Some(EdgePiece {
                        edge: self.edge_id(anchor, along),
                        u0: p[along] / self.h - base,
                        u1: q[along] / self.h - base,
                        g,
                    });
                }
            }
        }
        None
    }

    /// Splits a segment at every grid line it crosses.
    fn clip(&self, a: P2, b: P2) -> Vec<(P2, P2)> {
        let mut cuts: Vec<(f64, usize, f64)> = Vec::new();
        for ax in 0..2 {
            let (p, q) = (a[ax], b[ax]);
            if (q - p).abs() <= self.tol {
                continue;
            }
            let (lo, hi) = (p.min(q), p.max(q));
            let mut m = (lo / self.h).floor() as i64;
            while (m as f64) * self.h <= hi {
                let c = m as f64 * self.h;
                if c > lo + self.tol && c < hi - self.tol {
                    cuts.push(((c - p) / (q - p), ax, c));
                }
                m += 1;
            }
        }
        cuts.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut pts = vec![a];
        let mut i = 0;
        while i < cuts.len() {
            let t = cuts[i].0;
            let mut p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let mut j = i;
            while j < cuts.len() && cuts[j].0 - t <= 1e-12 {
                p[cuts[j].1] = cuts[j].2;
                j += 1;
            }
            pts.push(p);
            i = j;
        }
        pts.push(b);
        pts.windows(2).filter(|w| len([w[1][0] - w[0][0], w[1][1] - w[0][1]]) > self.tol).map(|w| (w[0], w[1])).collect()
    }
}

fn seg_point_distance(p: P2, a: P2, b: P2) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let dd = d[0] * d[0] + d[1] * d[1];
    let t = if dd == 0.0 { 0.0 } else { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / dd).clamp(0.0, 1.0) };
    len([p[0] - a[0] - t * d[0], p[1] - a[1] - t * d[1]])
}

fn seg_distance(a: P2, b: P2, c: P2, d: P2) -> f64 {
    let orient = |p: P2, q: P2, r: P2| (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return 0.0;
    }
    seg_point_distance(c, a, b).min(seg_point_distance(d, a, b)).min(seg_point_distance(a, c, d)).min(seg_point_distance(b, c, d))
}

/// Builds a squash map around the middle of the longest piece of a cell,
/// small enough that no other piece is moved, and samples its Lipschitz
/// ratio. The map fixes every piece, so the stage acts as the identity on
/// polyhedral input.
fn squash_cell(here: &[Seg], all: &[(P2, P2)], tol: f64, seed: u64, cell: usize) -> Option<f64> {
    let a = here.iter().max_by(|x, y| len(sub(x.b, x.a)).total_cmp(&len(sub(y.b, y.a))))?;
    let (eps, delta) = (0.25, 0.25);
    let dir = sub(a.b, a.a);
    let l = len(dir);
    let mid = [(a.a[0] + a.b[0]) / 2.0, (a.a[1] + a.b[1]) / 2.0];
    let collinear = |p: P2, q: P2| {
        let off = |z: P2| ((z[0] - a.a[0]) * dir[1] - (z[1] - a.a[1]) * dir[0]).abs() / l;
        off(p) <= tol && off(q) <= tol
    };
    let mut shrink = 0.5;
    for _ in 0..6 {
        let half = [dir[0] * shrink / 2.0, dir[1] * shrink / 2.0];
        let (p, q) = ([mid[0] - half[0], mid[1] - half[1]], [mid[0] + half[0], mid[1] + half[1]]);
        let r = 1.05 * (shrink * l / 2.0) / (1.0 - delta);
        let reach = delta * r;
        let clear = all.iter().all(|&(c, d)| collinear(c, d) || seg_distance(p, q, c, d) > reach * (1.0 + 1e-9));
        if clear {
            let set = Polytope::new(vec![p.to_vec(), q.to_vec()], 1).ok()?;
            let plane = PlaneDir::spanned_by(&[dir.to_vec()], 2);
            let map = SquashMap::new(set, mid.to_vec(), r, plane, eps, delta).ok()?;
            let mut rng = rng::stream(seed, &[STAGE_SQUASH, cell as u64]);
            let mut lip: f64 = 0.0;
            for _ in 0..SQUASH_SAMPLES {
                let z = uniform_in_disk(&mut rng, mid, r);
                let scale = r * 10f64.powf(-3.0 * rng.gen::<f64>());
                let th = std::f64::consts::TAU * rng.gen::<f64>();
                let w = [z[0] + scale * th.cos(), z[1] + scale * th.sin()];
                let (fz, fw) = (map.apply(&z), map.apply(&w));
                let num = crate::geometry::dist(&fz, &fw);
                lip = lip.max(num / len(sub(w, z)));
            }
            return Some(lip);
        }
        shrink /= 2.0;
    }
    None
}

fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

struct CellOut {
    cell: usize,
    selection: CenterSelection,
    pieces: Vec<EdgePiece>,
    arcs: Vec<Seg>,
    prisms: Vec<Prism>,
    squash: Option<f64>,
}

/// Net multiplicity intervals of the pieces on one edge, in edge units.
fn net_intervals(group: CoeffGroup, pieces: &[EdgePiece], tol: f64) -> Result<Vec<(f64, f64, i64)>> {
    let mut cuts: Vec<f64> = vec![0.0, 1.0];
    for p in pieces {
        cuts.push(p.u0.clamp(0.0, 1.0));
        cuts.push(p.u1.clamp(0.0, 1.0));
    }
    cuts.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::new();
    for c in cuts {
        if merged.last().is_none_or(|&m| c - m > tol) {
            merged.push(c);
        }
    }
    let locate = |t: f64| merged.partition_point(|&m| m < t - tol).min(merged.len() - 1);
    let mut diff = vec![0i64; merged.len() + 1];
    for p in pieces {
        let (lo, hi, g) = if p.u0 <= p.u1 { (p.u0, p.u1, p.g) } else { (p.u1, p.u0, group.neg(p.g)) };
        let (i, j) = (locate(lo.clamp(0.0, 1.0)), locate(hi.clamp(0.0, 1.0)));
        if i != j {
            diff[i] = group.add(diff[i], g)?;
            diff[j] = group.add(diff[j], group.neg(g))?;
        }
    }
    let mut out = Vec::new();
    let mut run = 0;
    for k in 0..merged.len() - 1 {
        run = group.add(run, diff[k])?;
        out.push((merged[k], merged[k + 1], run));
    }
    Ok(out)
}

fn resolve_edge(group: CoeffGroup, edge: usize, net: &[(f64, f64, i64)]) -> Result<EdgeResolution> {
    let covered: f64 = net.iter().filter(|x| x.2 != 0).map(|x| x.1 - x.0).sum();
    if covered == 0.0 {
        return Ok(EdgeResolution::Empty);
    }
    if covered >= 1.0 - COVER_TOL {
        let mut tally: BTreeMap<i64, f64> = BTreeMap::new();
        for &(a, b, g) in net.iter().filter(|x| x.2 != 0) {
            *tally.entry(g).or_default() += b - a;
        }
        let (&best, &measure) = tally.iter().max_by(|x, y| x.1.total_cmp(y.1)).unwrap();
        if covered - measure > COVER_TOL {
            let detail = tally.iter().map(|(g, m)| format!("{}: {m:.3e}", group.elem(*g))).collect::<Vec<_>>().join(", ");
            return Err(Error::OrientationConflict { cell: edge, detail });
        }
        return Ok(EdgeResolution::Covered { coef: best });
    }
    let mut gaps: Vec<(f64, f64)> = Vec::new();
    for &(a, b, g) in net {
        if g == 0 {
            match gaps.last_mut() {
                Some(last) if (last.1 - a).abs() <= 1e-15 => last.1 = b,
                _ => gaps.push((a, b)),
            }
        }
    }
    let (a, b) = gaps.into_iter().max_by(|x, y| (x.1 - x.0).total_cmp(&(y.1 - y.0))).unwrap();
    Ok(EdgeResolution::Collapsed { split: (a + b) / 2.0 })
}

fn stream_for(opts: &DeformOptions, cell: usize) -> rand_chacha::ChaCha8Rng {
    rng::stream(opts.seed, &[STAGE_SELECT, cell as u64])
}

pub(crate) fn deform_plane(
    s: &PLChain,
    k: &CellComplex,
    opts: &DeformOptions,
) -> Result<(Chain, DeformationCertificate)> {
    super::center::check_beta(opts.beta)?;
    let grid = Grid2::new(k)?;
    let group = s.group();
    let tol = grid.tol;
    let segs: Vec<Seg> = s
        .simplices()
        .iter()
        .map(|sx| Seg { a: [sx.vertices[0][0], sx.vertices[0][1]], b: [sx.vertices[1][0], sx.vertices[1][1]], g: sx.coef })
        .collect();
    for sg in &segs {
        if !grid.inside(sg.a) || !grid.inside(sg.b) {
            return Err(Error::precondition(format!("segment {:?} -> {:?} leaves the grid box", sg.a, sg.b)));
        }
    }

    // (i) clip to grid cells
    let mut interior: BTreeMap<usize, Vec<Seg>> = BTreeMap::new();
    let mut skeleton: Vec<EdgePiece> = Vec::new();
    let mut all_pieces: Vec<(P2, P2)> = Vec::new();
    let mut after_descent = SegmentSum::new(group, tol);
    for sg in &segs {
        for (p, q) in grid.clip(sg.a, sg.b) {
            all_pieces.push((p, q));
            if let Some(e) = grid.on_skeleton(p, q, sg.g) {
                skeleton.push(e);
                after_descent.add(&p, &q, sg.g);
            } else {
                let m = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
                let id = grid.cell_id(grid.floor(m[0], 0), grid.floor(m[1], 1));
                interior.entry(id).or_default().push(Seg { a: p, b: q, g: sg.g });
            }
        }
    }
    let count = all_pieces.len();
    if count > opts.piece_limit {
        return Err(Error::CellLimit { count, limit: opts.piece_limit });
    }

    // (ii) squash check and radial descent, per cell
    let work: Vec<(usize, Vec<Seg>)> = interior.into_iter().collect();
    let outs: Vec<Result<CellOut>> = opts.exec.map_slice(&work, |(cell, pieces)| {
        let cell = *cell;
        let poly = grid.square(cell);
        let squash = if opts.squash { squash_cell(pieces, &all_pieces, tol, opts.seed, cell) } else { None };
        let load: Vec<(P2, P2, f64)> = pieces.iter().map(|p| (p.a, p.b, group.norm_of(p.g))).collect();
        let mut rng = stream_for(opts, cell);
        let selection = select_with(&poly, cell, opts.beta, &mut rng, false, |x| projected_measure(&poly, x, &load))?;
        let x = [selection.center[0], selection.center[1]];
        let mut out = CellOut { cell, selection, pieces: Vec::new(), arcs: Vec::new(), prisms: Vec::new(), squash };
        for p in pieces {
            let arc = poly.arc(x, p.a, p.b).map_err(|_| Error::Degenerate("accepted center lies on a piece".into()))?;
            for w in arc.path.windows(2) {
                if len(sub(w[1], w[0])) <= tol {
                    continue;
                }
                let e = grid.on_skeleton(w[0], w[1], p.g).ok_or_else(|| {
                    Error::Degenerate(format!("projected piece {:?} -> {:?} is off the skeleton", w[0], w[1]))
                })?;
                out.pieces.push(e);
                out.arcs.push(Seg { a: w[0], b: w[1], g: p.g });
            }
            let mut loop_pts = vec![p.a.to_vec(), p.b.to_vec()];
            loop_pts.extend(arc.path.iter().rev().map(|q| q.to_vec()));
            out.prisms.push(Prism { vertices: loop_pts, coef: group.neg(p.g), stage: 1 });
        }
        Ok(out)
    });
    let outs: Vec<CellOut> = outs.into_iter().collect::<Result<_>>()?;
    let mut centers: BTreeMap<usize, (P2, ConvexPolygon)> = BTreeMap::new();
    let mut selections = Vec::with_capacity(outs.len());
    let mut prisms = Vec::new();
    let mut squash_lip: f64 = 0.0;
    let mut squash_maps = 0;
    for o in outs {
        let poly = grid.square(o.cell);
        centers.insert(o.cell, ([o.selection.center[0], o.selection.center[1]], poly));
        selections.push(o.selection);
        skeleton.extend(o.pieces);
        for a in o.arcs {
            after_descent.add(&a.a, &a.b, a.g);
        }
        prisms.extend(o.prisms);
        if let Some(l) = o.squash {
            squash_lip = squash_lip.max(l);
            squash_maps += 1;
        }
    }

    // boundary points through the descent
    let bd = s.boundary()?;
    let mut tracks: Vec<(Vec<P2>, i64)> = Vec::new();
    for v in bd.simplices() {
        let p = [v.vertices[0][0], v.vertices[0][1]];
        let mut path = vec![p];
        if let Site::Cell(c) = grid.site(p) {
            if !centers.contains_key(&c) {
                let poly = grid.square(c);
                let mut rng = stream_for(opts, c);
                let sel = select_with(&poly, c, opts.beta, &mut rng, true, |_| 0.0)?;
                centers.insert(c, ([sel.center[0], sel.center[1]], poly));
                selections.push(sel);
            }
            let (x, poly) = &centers[&c];
            let (q, _, _) = poly.exit(*x, p).ok_or_else(|| Error::Degenerate("boundary point at a center".into()))?;
            path.push(q);
        }
        tracks.push((path, v.coef));
    }

    // (iii) resolve every edge that carries pieces
    let mut by_edge: BTreeMap<usize, Vec<EdgePiece>> = BTreeMap::new();
    for p in skeleton {
        by_edge.entry(p.edge).or_default().push(p);
    }
    let utol = tol / grid.h;
    let mut decisions = Vec::with_capacity(by_edge.len());
    let mut emitted: Vec<(usize, i64)> = Vec::new();
    let mut resolution: BTreeMap<usize, EdgeResolution> = BTreeMap::new();
    for (&edge, pieces) in &by_edge {
        let net = net_intervals(group, pieces, utol)?;
        let r = resolve_edge(group, edge, &net)?;
        if let EdgeResolution::Covered { coef } = r {
            emitted.push((edge, coef));
        }
        resolution.insert(edge, r);
        decisions.push(EdgeDecision { edge, resolution: r });
    }
    for (path, _) in tracks.iter_mut() {
        let p = *path.last().unwrap();
        if let Site::Edge { edge, u } = grid.site(p) {
            if let Some(EdgeResolution::Collapsed { split }) = resolution.get(&edge) {
                let (a, b) = grid.edge_points(edge);
                path.push(if u < *split { a } else { b });
            }
        }
    }
    let out = Chain::from_terms(group, 1, emitted.iter().copied())?;

    // homotopy identity on the common refinement
    let mut id = SegmentSum::new(group, tol);
    for &(e, g) in &emitted {
        let (a, b) = grid.edge_points(e);
        id.add(&a, &b, g);
    }
    let mut input = SegmentSum::new(group, tol);
    for sg in &segs {
        id.add(&sg.b, &sg.a, sg.g);
        input.add(&sg.a, &sg.b, sg.g);
    }
    for pr in &prisms {
        let m = pr.vertices.len();
        for i in 0..m {
            id.add(&pr.vertices[i], &pr.vertices[(i + 1) % m], group.neg(pr.coef));
        }
    }
    let mut transport = Vec::new();
    for (path, g) in &tracks {
        for w in path.windows(2) {
            if len(sub(w[1], w[0])) > 0.0 {
                id.add(&w[1], &w[0], *g);
                transport.push(Segment { a: w[0].to_vec(), b: w[1].to_vec(), coef: *g });
            }
        }
    }
    let residual = id.canonical()?;
    let residual_mass: f64 = residual.iter().map(|r| group.norm_of(r.coef) * r.length()).sum();

    let mass_in = input.mass()?;
    let size_in = input.size()?;
    let mass_out = out.mass(k);
    let size_out = out.size(k);
    let ratio = |m: f64| if mass_in > 0.0 { m / mass_in } else { 0.0 };
    let (rot, mesh) = k.rotundity_stats()?;
    let homotopy_mass = prisms.iter().map(|p| group.norm_of(p.coef) * p.area().abs()).sum();
    selections.sort_by_key(|s| s.cell);
    let cert = DeformationCertificate {
        mass_in,
        mass_out,
        size_in,
        size_out,
        stage_ratios: vec![ratio(mass_in), ratio(after_descent.mass()?), ratio(mass_out)],
        homotopy: prisms,
        homotopy_mass,
        boundary_transport: transport,
        transport_faces: Vec::new(),
        grid_mesh: mesh,
        rotundity: rot,
        squash_lipschitz: squash_lip,
        squash_maps,
        identity_holds: residual.is_empty(),
        identity_residual: residual_mass,
        covered_cells: emitted.len(),
        collapsed_cells: resolution.values().filter(|r| matches!(r, EdgeResolution::Collapsed { .. })).count(),
        plan: DeformPlan { beta: opts.beta, seed: opts.seed, centers: selections, edges: decisions, faces: Vec::new() },
    };
    Ok((out, cert))
}

/// Moves weighted points through the stage maps of `plan`; cells without a
/// recorded center get one selected against the points they contain.
pub(crate) fn transport_plane(
    points: &[WeightedPoint],
    k: &CellComplex,
    plan: &DeformPlan,
    opts: &DeformOptions,
) -> Result<(PointTransport, DeformPlan)> {
    let grid = Grid2::new(k)?;
    for p in points {
        if p.x.len() != 2 || !grid.inside([p.x[0], p.x[1]]) {
            return Err(Error::precondition(format!("point {:?} is outside the grid box", p.x)));
        }
    }
    let mut plan = plan.clone();
    let sites: Vec<Site> = points.iter().map(|p| grid.site([p.x[0], p.x[1]])).collect();
    let known: BTreeSet<usize> = plan.centers.iter().map(|c| c.cell).collect();
    let mut missing: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, s) in sites.iter().enumerate() {
        if let Site::Cell(c) = s {
            if !known.contains(c) {
                missing.entry(*c).or_default().push(i);
            }
        }
    }
    let work: Vec<(usize, Vec<usize>)> = missing.into_iter().collect();
    let fresh: Vec<Result<CenterSelection>> = opts.exec.map_slice(&work, |(cell, idx)| {
        let poly = grid.square(*cell);
        let mut rng = rng::stream(plan.seed, &[STAGE_SELECT, *cell as u64]);
        let empty = idx.iter().all(|&i| points[i].weight == 0.0);
        select_with(&poly, *cell, plan.beta, &mut rng, empty, |x| {
            idx.iter().map(|&i| point_image(&poly, x, &points[i]).map_or(f64::INFINITY, |q| q.weight)).sum()
        })
    });
    for f in fresh {
        plan.centers.push(f?);
    }
    plan.centers.sort_by_key(|c| c.cell);
    let centers: BTreeMap<usize, P2> = plan.centers.iter().map(|c| (c.cell, [c.center[0], c.center[1]])).collect();
    let edges: BTreeMap<usize, EdgeResolution> = plan.edges.iter().map(|d| (d.edge, d.resolution)).collect();
    let moved: Vec<WeightedPoint> = opts.exec.map_range(points.len(), |i| {
        let mut p = points[i].clone();
        if let Site::Cell(c) = sites[i] {
            let poly = grid.square(c);
            p = point_image(&poly, centers[&c], &p).unwrap_or_else(|| {
                let (q, _, _) = poly.exit(centers[&c], [centers[&c][0] + 1.0, centers[&c][1]]).unwrap();
                WeightedPoint { x: q.to_vec(), weight: p.weight, tangent: p.tangent.clone() }
            });
        }
        if let Site::Edge { edge, u } = grid.site([p.x[0], p.x[1]]) {
            if let Some(EdgeResolution::Collapsed { split }) = edges.get(&edge) {
                let (a, b) = grid.edge_points(edge);
                let end = if u < *split { a } else { b };
                p = WeightedPoint { x: end.to_vec(), weight: 0.0, tangent: p.tangent.as_ref().map(|_| vec![0.0, 0.0]) };
            }
        }
        p
    });
    let mut cells: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();
    for (i, s) in sites.iter().enumerate() {
        let key = match *s {
            Site::Vertex => {
                let id = k.cell_id(&GridKey {
                    anchor: vec![grid.line(points[i].x[0]).unwrap(), grid.line(points[i].x[1]).unwrap()],
                    axes: vec![],
                });
                (0, id.unwrap_or(usize::MAX))
            }
            Site::Edge { edge, .. } => (1, edge),
            Site::Cell(c) => (2, c),
        };
        let e = cells.entry(key).or_default();
        e.0 += points[i].weight;
        e.1 += moved[i].weight;
    }
    let report = PointTransport {
        weight_in: points.iter().map(|p| p.weight).sum(),
        weight_out: moved.iter().map(|p| p.weight).sum(),
        cells: cells
            .into_iter()
            .map(|((dim, cell), (a, b))| CellRatio { dim, cell, weight_in: a, weight_out: b })
            .collect(),
        points: moved,
    };
    Ok((report, plan))
}

/// Radial image of a weighted point; the weight follows the stretch of its
/// tangent. `None` when the point is the center.
fn point_image(poly: &ConvexPolygon, x: P2, p: &WeightedPoint) -> Option<WeightedPoint> {
    let y = [p.x[0], p.x[1]];
    if len(sub(y, x)) == 0.0 {
        return None;
    }
    let (q, _, _) = poly.exit(x, y)?;
    match &p.tangent {
        Some(t) if len([t[0], t[1]]) > 0.0 => {
            let tv = [t[0], t[1]];
            let d = poly.differential(x, y, tv)?;
            let stretch = len(d) / len(tv);
            let nd = len(d);
            let tangent = if nd > 0.0 { vec![d[0] / nd, d[1] / nd] } else { vec![0.0, 0.0] };
            Some(WeightedPoint { x: q.to_vec(), weight: p.weight * stretch, tangent: Some(tangent) })
        }
        _ => Some(WeightedPoint { x: q.to_vec(), weight: p.weight, tangent: p.tangent.clone() }),
    }
}

/// Ball used by center selection for a grid cell.
pub(crate) fn cell_ball(k: &CellComplex, cell: usize) -> Result<(P2, f64)> {
    let grid = Grid2::new(k)?;
    center_ball(&grid.square(cell))
}
