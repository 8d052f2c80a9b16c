//! Named verification suites.
//!
//! Each suite draws its random instances from counter-keyed streams, checks
//! one inequality or equality per instance and reports counts plus one row
//! per instance (for CSV and bar charts).

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{coarea_check, Chain, PLFunction};
use crate::coeff::{CoeffGroup, GroupKind, NormSpec};
use crate::complex::{CellComplex, GridKey, GridSpec, Subcomplex};
use crate::deform::{select_center, verify_projection_bound, Piece};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{dist, PlaneDir, Point, Polytope, SquashMap};
use crate::plateau::{compare_infima, min_spanning_set, size_difference_check, Condition, PlateauProblem};
use crate::plateau::{SolveOptions, SpanRoute};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Suite {
    #[serde(rename = "le-MS")]
    MassSize,
    #[serde(rename = "projrec")]
    Projection,
    #[serde(rename = "squash")]
    Squash,
    #[serde(rename = "coarea")]
    Coarea,
    #[serde(rename = "scequ")]
    SizeSpanning,
    #[serde(rename = "hequ")]
    Routes,
    #[serde(rename = "sizediff")]
    SizeDifference,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::MassSize,
        Suite::Projection,
        Suite::Squash,
        Suite::Coarea,
        Suite::SizeSpanning,
        Suite::Routes,
        Suite::SizeDifference,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::MassSize => "le-MS",
            Suite::Projection => "projrec",
            Suite::Squash => "squash",
            Suite::Coarea => "coarea",
            Suite::SizeSpanning => "scequ",
            Suite::Routes => "hequ",
            Suite::SizeDifference => "sizediff",
        }
    }

    /// Instances per run when `trials` is not given.
    pub fn default_trials(self) -> usize {
        match self {
            Suite::MassSize => 1000,
            Suite::Projection => 1000,
            Suite::Squash => 100_000,
            Suite::Coarea => 20,
            Suite::SizeSpanning => 25,
            Suite::Routes => 20,
            Suite::SizeDifference => 50,
        }
    }

    fn key(self) -> u64 {
        Suite::ALL.iter().position(|&s| s == self).unwrap() as u64 + 0x5017e
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Suite::ALL
            .into_iter()
            .find(|x| x.name().to_ascii_lowercase() == lower)
            .ok_or_else(|| {
                let names: Vec<&str> = Suite::ALL.iter().map(|x| x.name()).collect();
                Error::Parse(format!("unknown suite `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub trials: Option<usize>,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { trials: None, seed: 1, exec: Exec::Parallel }
    }
}

/// One checked instance: `value` must not exceed `bound` (or equal it, for
/// equality checks the two sides are stored).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    pub value: f64,
    pub bound: f64,
    pub ok: bool,
}

impl Row {
    fn le(label: impl Into<String>, value: f64, bound: f64, tol: f64) -> Self {
        Row { label: label.into(), value, bound, ok: value <= bound + tol }
    }

    fn eq(label: impl Into<String>, value: f64, bound: f64, tol: f64) -> Self {
        Row { label: label.into(), value, bound, ok: (value - bound).abs() <= tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub trials: usize,
    pub checks: usize,
    pub violations: usize,
    pub passed: bool,
    /// Suite-level aggregates (fractions, fitted constants).
    pub summary: Vec<(String, f64)>,
    pub rows: Vec<Row>,
    pub elapsed_ms: f64,
}

impl SuiteReport {
    fn new(suite: Suite, opts: &VerifyOptions, trials: usize, rows: Vec<Row>, summary: Vec<(String, f64)>) -> Self {
        let violations = rows.iter().filter(|r| !r.ok).count();
        SuiteReport {
            suite,
            seed: opts.seed,
            trials,
            checks: rows.len(),
            violations,
            passed: violations == 0,
            summary,
            rows,
            elapsed_ms: 0.0,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{:<9} {}  {} checks, {} violations ({} trials, seed {})",
            self.suite.name(),
            if self.passed { "pass" } else { "FAIL" },
            self.checks,
            self.violations,
            self.trials,
            self.seed
        )
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("suite,label,value,bound,ok\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                self.suite.name(),
                r.label,
                crate::io::fmt_f64(r.value),
                crate::io::fmt_f64(r.bound),
                r.ok
            ));
        }
        s
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    let start = std::time::Instant::now();
    let trials = opts.trials.unwrap_or(suite.default_trials());
    if trials == 0 {
        return Err(Error::precondition("at least one trial is needed"));
    }
    let mut report = match suite {
        Suite::MassSize => mass_size(opts, trials),
        Suite::Projection => projection(opts, trials),
        Suite::Squash => squash(opts, trials),
        Suite::Coarea => coarea(opts, trials),
        Suite::SizeSpanning => size_spanning(opts, trials),
        Suite::Routes => routes(opts, trials),
        Suite::SizeDifference => size_difference(opts, trials),
    }?;
    report.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

fn stream(opts: &VerifyOptions, suite: Suite, keys: &[u64]) -> ChaCha8Rng {
    let mut all = vec![suite.key()];
    all.extend_from_slice(keys);
    rng::stream(opts.seed, &all)
}

fn grid(n: usize, level: u32) -> Result<CellComplex> {
    CellComplex::dyadic_grid(&GridSpec::unit(n, level))
}

fn random_chain(rng: &mut ChaCha8Rng, k: &CellComplex, g: CoeffGroup, dim: usize, density: f64, range: i64) -> Result<Chain> {
    let mut terms = Vec::new();
    for id in 0..k.count(dim) {
        if rng.gen_bool(density) {
            terms.push((id, rng.gen_range(-range..=range)));
        }
    }
    Chain::from_terms(g, dim, terms)
}

// ----------------------------------------------------------------- le-MS

fn mass_size(opts: &VerifyOptions, trials: usize) -> Result<SuiteReport> {
    let groups = [
        CoeffGroup::integers(),
        CoeffGroup::mod_q(3)?,
        CoeffGroup::new(GroupKind::ModQ(4), NormSpec::Uniform(2.5))?,
    ];
    let complexes = [grid(2, 1)?, grid(2, 2)?, grid(2, 3)?, grid(3, 1)?];
    let rows = opts.exec.map_range(trials, |i| -> Result<Row> {
        let mut rng = stream(opts, Suite::MassSize, &[i as u64]);
        let g = groups[i % groups.len()];
        let k = &complexes[rng.gen_range(0..complexes.len())];
        let dim = rng.gen_range(0..=k.dim());
        let density = rng.gen_range(0.05..0.9);
        let s = random_chain(&mut rng, k, g, dim, density, 7)?;
        let a = g.min_positive_norm();
        let lhs = a * s.size(k);
        let mass = s.mass(k);
        Ok(Row::le(format!("{}:{}-chain:{}", g.short_name(), dim, i), lhs, mass, 1e-12))
    });
    let rows: Vec<Row> = rows.into_iter().collect::<Result<_>>()?;
    Ok(SuiteReport::new(Suite::MassSize, opts, trials, rows, vec![]))
}

// --------------------------------------------------------------- projrec

/// Loads per run; `trials` is the number of centers per load and of
/// selection runs.
const PROJECTION_LOADS: usize = 20;
const BETA: f64 = 0.75;

fn random_load(rng: &mut ChaCha8Rng) -> Vec<Piece> {
    let m = rng.gen_range(1..=5);
    (0..m)
        .map(|_| {
            let a = vec![rng.gen::<f64>(), rng.gen::<f64>()];
            let b = vec![rng.gen::<f64>(), rng.gen::<f64>()];
            Piece::segment(a, b, rng.gen_range(0.5..2.0))
        })
        .collect()
}

fn projection(opts: &VerifyOptions, trials: usize) -> Result<SuiteReport> {
    let trials = trials.max(100);
    let sq = Polytope::aabb(&[0.0, 0.0], &[1.0, 1.0])?;
    let mut rng = stream(opts, Suite::Projection, &[0]);
    let family: Vec<Vec<Piece>> = (0..PROJECTION_LOADS).map(|_| random_load(&mut rng)).collect();
    let report = verify_projection_bound(&sq, &family, BETA, trials, opts.seed, opts.exec)?;
    let mut rows: Vec<Row> = report
        .loads
        .iter()
        .enumerate()
        .map(|(i, l)| Row::le(format!("load-{i}:violation-fraction"), l.violation_fraction, BETA + 0.05, 0.0))
        .collect();
    let diameter = vec![Piece::segment(vec![0.0, 0.3], vec![1.0, 0.7], 1.0)];
    let draws = opts.exec.map_range(trials, |t| {
        select_center(&sq, &diameter, BETA, opts.seed.wrapping_mul(1_000_003).wrapping_add(t as u64)).map(|s| s.draws_used)
    });
    let fast = draws.iter().filter(|d| matches!(d, Ok(n) if *n <= 50)).count();
    let failed = draws.iter().filter(|d| d.is_err()).count();
    let frac = fast as f64 / trials as f64;
    rows.push(Row { label: "selection-within-50-draws".into(), value: frac, bound: 0.99, ok: frac >= 0.99 });
    let summary = vec![
        ("c_hat".into(), report.c_hat),
        ("worst_violation_fraction".into(), report.worst_violation_fraction),
        ("worst_markov_fraction".into(), report.worst_markov_fraction),
        ("selection_failures".into(), failed as f64),
        ("selection_fast_fraction".into(), frac),
    ];
    Ok(SuiteReport::new(Suite::Projection, opts, trials, rows, summary))
}

// ---------------------------------------------------------------- squash

const SQUASH_PARAMS: [f64; 3] = [0.1, 0.2, 0.4];
const SQUASH_CHUNK: usize = 1000;

/// A thin triangle within `eps r` of the horizontal line through the origin
/// and inside `U(0, (1 - delta) r)`, `r = 1`.
fn squash_set(rng: &mut ChaCha8Rng, eps: f64, delta: f64) -> Result<Polytope> {
    let reach = (1.0 - delta) * 0.95;
    let pts: Vec<Point> = (0..3)
        .map(|_| {
            let v = rng.gen_range(-0.9 * eps..0.9 * eps);
            let umax = (reach * reach - v * v).sqrt();
            vec![rng.gen_range(-umax..umax), v]
        })
        .collect();
    Polytope::hull(&pts)
}

fn squash(opts: &VerifyOptions, trials: usize) -> Result<SuiteReport> {
    let plane = PlaneDir::new(vec![vec![1.0, 0.0]], 2)?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (ci, &eps) in SQUASH_PARAMS.iter().enumerate() {
        for (di, &delta) in SQUASH_PARAMS.iter().enumerate() {
            let combo = (ci * 3 + di) as u64;
            let mut rng = stream(opts, Suite::Squash, &[combo]);
            let a = squash_set(&mut rng, eps, delta)?;
            let map = SquashMap::new(a, vec![0.0, 0.0], 1.0, plane.clone(), eps, delta)?;
            let chunks = trials.div_ceil(SQUASH_CHUNK);
            let worst = opts.exec.map_range(chunks, |c| {
                let mut rng = stream(opts, Suite::Squash, &[combo, c as u64 + 1]);
                let n = SQUASH_CHUNK.min(trials - c * SQUASH_CHUNK);
                let mut worst = 0.0f64;
                for _ in 0..n {
                    let z = uniform_disk(&mut rng, 1.1);
                    let w = if rng.gen_bool(0.1) {
                        uniform_disk(&mut rng, 1.1)
                    } else {
                        let rho = 10f64.powf(rng.gen_range(-5.0..-0.5));
                        let th = rng.gen_range(0.0..std::f64::consts::TAU);
                        vec![z[0] + rho * th.cos(), z[1] + rho * th.sin()]
                    };
                    let d = dist(&z, &w);
                    if d > 0.0 {
                        worst = worst.max(dist(&map.apply(&z), &map.apply(&w)) / d);
                    }
                }
                worst
            });
            let worst = worst.into_iter().fold(0.0, f64::max);
            let bound = map.lipschitz_bound();
            rows.push(Row::le(format!("eps={eps}:delta={delta}"), worst, bound, 1e-9));
            summary.push((format!("max_ratio(eps={eps},delta={delta})"), worst));
        }
    }
    Ok(SuiteReport::new(Suite::Squash, opts, trials, rows, summary))
}

fn uniform_disk(rng: &mut ChaCha8Rng, r: f64) -> Point {
    let rad = r * rng.gen::<f64>().sqrt();
    let th = rng.gen_range(0.0..std::f64::consts::TAU);
    vec![rad * th.cos(), rad * th.sin()]
}

// ---------------------------------------------------------------- coarea

const COAREA_SAMPLES: usize = 257;

fn coarea(opts: &VerifyOptions, trials: usize) -> Result<SuiteReport> {
    let z = CoeffGroup::integers();
    let k0 = grid(2, 0)?;
    let face = Chain::cell(z, 2, 0, 1);
    let fx = PLFunction::from_fn(&k0, |p| p[0])?;
    let axis = coarea_check(&face, &k0, &fx, 0.0, 1.0, COAREA_SAMPLES)?;
    let mut rows = vec![
        Row::eq("axis-family:integral", axis.integral, 1.0, 1e-9),
        Row::le("axis-family:bound", axis.integral, axis.bound, 1e-9),
    ];
    let complexes = [grid(2, 2)?, grid(2, 3)?];
    let random = opts.exec.map_range(trials, |i| -> Result<Row> {
        let mut rng = stream(opts, Suite::Coarea, &[i as u64]);
        let k = &complexes[i % 2];
        let density = rng.gen_range(0.1..0.6);
        let s = random_chain(&mut rng, k, z, 1, density, 3)?;
        let p = [rng.gen::<f64>(), rng.gen::<f64>()];
        let f = PLFunction::from_fn(k, |x| (x[0] - p[0]).hypot(x[1] - p[1]))?;
        let lo = f.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = f.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let r = coarea_check(&s, k, &f, lo, hi, COAREA_SAMPLES)?;
        Ok(Row { label: format!("distance-chain-{i}"), value: r.integral, bound: r.bound, ok: r.holds })
    });
    for r in random {
        rows.push(r?);
    }
    let summary = vec![("axis_integral".into(), axis.integral), ("axis_bound".into(), axis.bound)];
    Ok(SuiteReport::new(Suite::Coarea, opts, trials, rows, summary))
}

// ---------------------------------------------------------------- scequ

pub(crate) fn grid_vertex(k: &CellComplex, anchor: &[i64]) -> Result<usize> {
    k.cell_id(&GridKey { anchor: anchor.to_vec(), axes: vec![] })
        .ok_or_else(|| Error::InvalidCell(format!("no vertex at {anchor:?}")))
}

/// Shortest path length between two vertices along the edges.
fn edge_geodesic(k: &CellComplex, from: usize, to: usize) -> f64 {
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k.count(0)];
    for e in 0..k.count(1) {
        let f = k.faces(1, e);
        let (a, b) = (f[0].0, f[1].0);
        let w = k.measure(1, e);
        adj[a].push((b, w));
        adj[b].push((a, w));
    }
    // Edge lengths are dyadic, so integer keys at a fine scale order exactly.
    let scale = 2f64.powi(40);
    let mut best = vec![u64::MAX; k.count(0)];
    let mut heap = BinaryHeap::new();
    best[from] = 0;
    heap.push(Reverse((0u64, from)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > best[v] {
            continue;
        }
        for &(u, w) in &adj[v] {
            let nd = d + (w * scale).round() as u64;
            if nd < best[u] {
                best[u] = nd;
                heap.push(Reverse((nd, u)));
            }
        }
    }
    best[to] as f64 / scale
}

fn two_point(k: &CellComplex, g: CoeffGroup, p: usize, q: usize) -> Result<PlateauProblem> {
    let t = Chain::from_terms(g, 0, [(q, 1), (p, -1)])?;
    let (b, _) = k.closure(&[(0, p), (0, q)])?;
    Ok(PlateauProblem::new(1, g, Condition::Subgroup { b, generators: vec![t] }))
}

fn bottom_loop(k: &CellComplex, g: CoeffGroup, faces: &[Vec<i64>]) -> Result<Chain> {
    let mut s = Chain::zero(g, 2);
    for a in faces {
        let id = k
            .cell_id(&GridKey { anchor: a.clone(), axes: vec![0, 1] })
            .ok_or_else(|| Error::InvalidCell(format!("no face at {a:?}")))?;
        s.add_term(id, 1)?;
    }
    s.boundary(k)
}

fn size_spanning(opts: &VerifyOptions, trials: usize) -> Result<SuiteReport> {
    let solve = SolveOptions::default();
    let mut rows = Vec::new();
    let mut cases = Vec::new();
    for level in [2u32, 3] {
        for g in [CoeffGroup::integers(), CoeffGroup::z2()] {
            for t in 0..trials {
                cases.push((level, g, t));
            }
        }
    }
    let k2 = grid(2, 2)?;
    let k3 = grid(2, 3)?;
    let results = opts.exec.map_range(cases.len(), |ci| -> Result<Vec<Row>> {
        let (level, g, t) = cases[ci];
        let k = if level == 2 { &k2 } else { &k3 };
        let mut rng = stream(opts, Suite::SizeSpanning, &[level as u64, g.modulus().unwrap_or(0), t as u64]);
        let m = 1i64 << level;
        let (p, q) = loop {
            let p = [rng.gen_range(0..=m), rng.gen_range(0..=m)];
            let q = [rng.gen_range(0..=m), rng.gen_range(0..=m)];
            if p != q {
                break (p, q);
            }
        };
        let (pi, qi) = (grid_vertex(k, &p)?, grid_vertex(k, &q)?);
        let c = compare_infima(k, &two_point(k, g, pi, qi)?, &solve)?;
        let geo = edge_geodesic(k, pi, qi);
        let label = format!("L{level}:{}:{p:?}-{q:?}", g.short_name());
        Ok(vec![
            Row::eq(format!("{label}:chain=geodesic"), c.size_side.value, geo, 1e-9),
            Row::eq(format!("{label}:set=geodesic"), c.set_side.value, geo, 1e-9),
            Row { label: format!("{label}:optimal"), value: c.both_optimal as u8 as f64, bound: 1.0, ok: c.both_optimal && c.chain_below_set },
        ])
    });
    for r in results {
        rows.extend(r?);
    }
    let z2 = CoeffGroup::z2();
    let cube = grid(3, 0)?;
    let t = bottom_loop(&cube, z2, &[vec![0, 0, 0]])?;
    let c = compare_infima(&cube, &PlateauProblem::new(2, z2, Condition::CycleBoundary(t)), &solve)?;
    rows.push(Row::eq("cube:chain", c.size_side.value, 1.0, 1e-9));
    rows.push(Row::eq("cube:set", c.set_side.value, 1.0, 1e-9));
    let slab = CellComplex::dyadic_grid(&GridSpec::new(vec![0.0; 3], vec![2.0, 2.0, 1.0], 0))?;
    let t = bottom_loop(&slab, z2, &[vec![0, 0, 0], vec![1, 0, 0]])?;
    let c = compare_infima(&slab, &PlateauProblem::new(2, z2, Condition::CycleBoundary(t)), &solve)?;
    rows.push(Row::eq("slab:chain", c.size_side.value, 2.0, 1e-9));
    rows.push(Row::eq("slab:set", c.set_side.value, 2.0, 1e-9));
    Ok(SuiteReport::new(Suite::SizeSpanning, opts, trials, rows, vec![]))
}

// ------------------------------------------------------------------ hequ

/// A random instance: two-point boundaries for `d = 1`, boundaries of random
/// face sets for `d = 2`.
fn route_instance(rng: &mut ChaCha8Rng, k1: &CellComplex, k2: &CellComplex, i: usize) -> Result<(usize, PlateauProblem)> {
    let g = if rng.gen_bool(0.5) { CoeffGroup::integers() } else { CoeffGroup::z2() };
    if i % 2 == 0 {
        let n = k2.count(0);
        let p = rng.gen_range(0..n);
        let q = loop {
            let q = rng.gen_range(0..n);
            if q != p {
                break q;
            }
        };
        Ok((2, two_point(k2, g, p, q)?))
    } else {
        let mut faces: Vec<usize> = (0..k1.count(2)).collect();
        faces.shuffle(rng);
        let m = rng.gen_range(1..=3);
        let s = Chain::from_terms(g, 2, faces[..m].iter().map(|&f| (f, 1)))?;
        let t = s.boundary(k1)?;
        let seeds: Vec<(usize, usize)> = t.iter().map(|(id, _)| (1, id)).collect();
        let (b, _) = k1.closure(&seeds)?;
        Ok((1, PlateauProblem::new(2, g, Condition::Subgroup { b, generators: vec![t] })))
    }
}

fn cells_of(s: &Option<Subcomplex>) -> Vec<BTreeSet<usize>> {
    s.as_ref().map(|e| e.cells.clone()).unwrap_or_default()
}

fn routes(opts: &VerifyOptions, trials: usize) -> Result<SuiteReport> {
    let k1 = grid(2, 1)?;
    let k2 = grid(2, 2)?;
    let results = opts.exec.map_range(trials, |i| -> Result<Row> {
        let mut rng = stream(opts, Suite::Routes, &[i as u64]);
        let (level, p) = route_instance(&mut rng, &k1, &k2, i)?;
        let k = if level == 1 { &k1 } else { &k2 };
        let abs = min_spanning_set(k, &p, &SolveOptions { route: SpanRoute::Absolute, ..Default::default() })?;
        let cl = min_spanning_set(k, &p, &SolveOptions { route: SpanRoute::ChainLevel, ..Default::default() })?;
        let same = abs.value == cl.value && cells_of(&abs.set) == cells_of(&cl.set) && abs.proven_optimal == cl.proven_optimal;
        Ok(Row { label: format!("instance-{i}:d={}:{}", p.d, p.group.short_name()), value: abs.value, bound: cl.value, ok: same })
    });
    let rows: Vec<Row> = results.into_iter().collect::<Result<_>>()?;
    Ok(SuiteReport::new(Suite::Routes, opts, trials, rows, vec![]))
}

// -------------------------------------------------------------- sizediff

fn size_difference(opts: &VerifyOptions, trials: usize) -> Result<SuiteReport> {
    let k = grid(2, 2)?;
    let solve = SolveOptions::default();
    let results = opts.exec.map_range(trials, |i| -> Result<Row> {
        let mut rng = stream(opts, Suite::SizeDifference, &[i as u64]);
        let g = if i % 3 == 2 { CoeffGroup::integers() } else { CoeffGroup::z2() };
        let d = 1 + i % 2;
        let a = random_chain(&mut rng, &k, g, d, 0.15, 1)?;
        let r = random_chain(&mut rng, &k, g, d, 0.15, 1)?;
        let t = a.boundary(&k)?;
        let t_prime = t.sub(&r.boundary(&k)?)?;
        let s = size_difference_check(&k, &t, &t_prime, &r, &solve)?;
        Ok(Row {
            label: format!("triple-{i}:d={d}:{}", g.short_name()),
            value: (s.inf_t - s.inf_t_prime).abs(),
            bound: s.size_r,
            ok: s.holds,
        })
    });
    let rows: Vec<Row> = results.into_iter().collect::<Result<_>>()?;
    Ok(SuiteReport::new(Suite::SizeDifference, opts, trials, rows, vec![]))
}
