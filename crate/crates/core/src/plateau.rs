//! Both sides of the size / spanning-set infimum comparison on a complex.
//!
//! - [`min_size_chain`]: `inf { size(S) : ∂S = T }` over chains of the complex.
//! - [`min_spanning_set`]: `inf { H^d(E ∖ B) : E ⊇ B spans L }` (or `Φ`) over
//!   subcomplexes generated by `d`-cells.
//! - [`min_size_relative`]: chains whose boundary lies in `B` in a prescribed
//!   class of `H_{d-1}(B)`.
//!
//! Spanning is monotone in `E`, so minimal spanning sets are found either by
//! depth-first enumeration with monotone pruning or by cut generation: a
//! covering program over cells whose cuts come from maximal non-spanning
//! sets. Non-spanning sets are grown with mod-`p` certificates
//! `y` (`y ⋅ ∂σ = 0` on the set, `y ⋅ z ≠ 0`), which also certify
//! non-spanning over `Z` and `Z/m` for `p | m`.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::coeff::{CoeffGroup, GroupKind};
use crate::complex::{CellComplex, Subcomplex};
use crate::error::{Error, Result};
use crate::functional::{self, Integrand, PolyhedralSet, SetFunction};
use crate::homology;
use crate::lp::{solve_ilp, IlpStatus, LinearProgram, LpOutcome, Relation};
use crate::program::{Arith, Block, ChainProgram, Objective};

#[derive(Debug, Clone)]
pub enum Condition {
    /// `∂S = T` for a `(d-1)`-cycle `T`.
    CycleBoundary(Chain),
    /// `[∂S] = sigma` in `H_{d-1}(B)`, coordinates in the generator basis.
    HomClass { b: Subcomplex, sigma: Vec<i128> },
    /// `E ⊇ B` kills the listed cycles of `B`.
    Subgroup { b: Subcomplex, generators: Vec<Chain> },
}

#[derive(Debug, Clone)]
pub enum PlateauObjective {
    Size,
    Mass,
    Phi { integrand: Integrand, lambda: SetFunction },
}

#[derive(Debug, Clone)]
pub struct PlateauProblem {
    pub d: usize,
    pub group: CoeffGroup,
    pub condition: Condition,
    pub objective: PlateauObjective,
    /// Score `E ∖ B` only.
    pub exclude_b: bool,
}

impl PlateauProblem {
    pub fn new(d: usize, group: CoeffGroup, condition: Condition) -> Self {
        PlateauProblem { d, group, condition, objective: PlateauObjective::Size, exclude_b: true }
    }
}

/// How spanning is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpanRoute {
    /// Classes in `H_{d-1}(E)` through the lattice quotient.
    #[default]
    Absolute,
    /// Solving `∂S = z` with `S` supported in `E`.
    ChainLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchStrategy {
    #[default]
    Auto,
    Cuts,
    Enumerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    pub route: SpanRoute,
    pub strategy: SearchStrategy,
    /// Monotone and bound pruning during enumeration.
    pub prune: bool,
    /// `Auto` enumerates up to this many free cells.
    pub enumerate_below: usize,
    /// Hard cap for enumeration.
    pub enumerate_limit: usize,
    pub iteration_limit: usize,
    pub node_limit: usize,
    pub arith: Arith,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            route: SpanRoute::Absolute,
            strategy: SearchStrategy::Auto,
            prune: true,
            enumerate_below: 12,
            enumerate_limit: 24,
            iteration_limit: 20_000,
            node_limit: 200_000,
            arith: Arith::Auto,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub value: f64,
    pub chain: Option<Chain>,
    /// The spanning subcomplex, for set-side solves.
    pub set: Option<Subcomplex>,
    pub method: String,
    pub nodes: usize,
    pub oracle_calls: usize,
    pub proven_optimal: bool,
    pub lower_bound: Option<f64>,
    /// Score of `E ∖ B` (relative solves).
    pub excluded_value: Option<f64>,
    pub runtime_ms: f64,
}

/// Boundary data shared by the solvers.
struct Data {
    b: Subcomplex,
    generators: Vec<Chain>,
}

fn cycle_in(k: &CellComplex, z: &Chain, b: &Subcomplex) -> Result<()> {
    if z.iter().any(|(id, _)| !b.contains(z.dim(), id)) {
        return Err(Error::precondition("generator is not supported in B"));
    }
    if z.dim() > 0 && !z.boundary(k)?.is_zero() {
        return Err(Error::precondition("generator is not a cycle"));
    }
    Ok(())
}

fn problem_data(k: &CellComplex, p: &PlateauProblem) -> Result<Data> {
    if p.d == 0 || p.d > k.dim() {
        return Err(Error::DimensionMismatch(format!("d = {} on a {}-dimensional complex", p.d, k.dim())));
    }
    match &p.condition {
        Condition::CycleBoundary(t) => {
            if t.dim() + 1 != p.d {
                return Err(Error::DimensionMismatch(format!("boundary of dimension {} for d = {}", t.dim(), p.d)));
            }
            t.validate(k)?;
            if t.group() != p.group {
                return Err(Error::GroupMismatch(t.group().short_name(), p.group.short_name()));
            }
            let seeds: Vec<(usize, usize)> = t.iter().map(|(id, _)| (t.dim(), id)).collect();
            let (b, _) = k.closure(&seeds)?;
            cycle_in(k, t, &b)?;
            Ok(Data { b, generators: vec![t.clone()] })
        }
        Condition::Subgroup { b, generators } => {
            if !k.is_closed(b) {
                return Err(Error::precondition("B is not a subcomplex"));
            }
            for z in generators {
                if z.dim() + 1 != p.d {
                    return Err(Error::DimensionMismatch(format!("generator of dimension {} for d = {}", z.dim(), p.d)));
                }
                if z.group() != p.group {
                    return Err(Error::GroupMismatch(z.group().short_name(), p.group.short_name()));
                }
                z.validate(k)?;
                cycle_in(k, z, b)?;
            }
            Ok(Data { b: b.clone(), generators: generators.iter().filter(|z| !z.is_zero()).cloned().collect() })
        }
        Condition::HomClass { b, sigma } => {
            let z = class_representative(k, b, p.d - 1, p.group, sigma)?;
            Ok(Data { b: b.clone(), generators: if z.is_zero() { vec![] } else { vec![z] } })
        }
    }
}

/// A cycle of `B` representing the class with coordinates `sigma`.
pub fn class_representative(k: &CellComplex, b: &Subcomplex, dim: usize, group: CoeffGroup, sigma: &[i128]) -> Result<Chain> {
    let h = homology::homology_of(k, b, &k.empty_subcomplex(), dim, group, false)?;
    if sigma.len() != h.rank() {
        return Err(Error::precondition(format!("class has {} coordinates, H_{dim}(B) has {} generators", sigma.len(), h.rank())));
    }
    let mut z = Chain::zero(group, dim);
    for ((c, gen), ord) in sigma.iter().zip(&h.basis_cycles).zip(h.orders()) {
        if *ord != 0 && !(0..*ord).contains(c) {
            return Err(Error::precondition(format!("coordinate {c} outside 0..{ord}")));
        }
        let c = i64::try_from(*c).map_err(|_| Error::Overflow)?;
        z = z.add(&gen.scale(c)?)?;
    }
    Ok(z)
}

fn cell_weights(k: &CellComplex, d: usize, cells: &[usize], objective: &PlateauObjective) -> Result<Vec<f64>> {
    cells
        .iter()
        .map(|&c| match objective {
            PlateauObjective::Size | PlateauObjective::Mass => Ok(k.measure(d, c)),
            PlateauObjective::Phi { integrand, lambda } => {
                let set = PolyhedralSet::rectifiable(vec![k.polytope(d, c)])?;
                functional::phi(&set, integrand, lambda, functional::DEFAULT_ORDER)
            }
        })
        .collect()
}

/// The spanning test restricted to `E = closure(B ∪ fixed ∪ chosen)`.
struct Spanning<'a> {
    k: &'a CellComplex,
    d: usize,
    group: CoeffGroup,
    b: &'a Subcomplex,
    generators: &'a [Chain],
    route: SpanRoute,
    candidates: Vec<usize>,
    fixed: Vec<usize>,
    calls: usize,
}

impl Spanning<'_> {
    fn set_of(&self, chosen: &[bool]) -> Result<Subcomplex> {
        let mut seeds: Vec<(usize, usize)> = self.fixed.iter().map(|&c| (self.d, c)).collect();
        seeds.extend(self.candidates.iter().zip(chosen).filter(|(_, on)| **on).map(|(c, _)| (self.d, *c)));
        let (e, _) = self.k.closure(&seeds)?;
        Ok(e.union(self.b))
    }

    fn spans(&mut self, chosen: &[bool]) -> Result<bool> {
        self.calls += 1;
        if self.generators.is_empty() {
            return Ok(true);
        }
        let e = self.set_of(chosen)?;
        match self.route {
            SpanRoute::Absolute => homology::spans(self.k, &e, self.b, self.generators, self.group, false),
            SpanRoute::ChainLevel => {
                for z in self.generators {
                    if !homology::is_boundary(self.k, z, &e)?.0 {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    fn columns(&self, cells: impl Iterator<Item = usize>) -> Vec<Vec<(usize, i64)>> {
        cells.map(|c| self.k.faces(self.d, c).iter().map(|&(f, s)| (f, s as i64)).collect()).collect()
    }

    fn certificate_prime(&self) -> Option<i64> {
        match self.group.kind() {
            GroupKind::Integers => Some(2_147_483_647),
            GroupKind::ModQ(q) => (2..=q).find(|p| q % p == 0).map(|p| p as i64),
        }
    }

    /// A non-spanning superset of `chosen` certified mod `p`, if one exists.
    /// With `score`, prefers the cut of least score; otherwise the largest set.
    fn certified_growth(&self, chosen: &[bool], score: Option<&[f64]>) -> Option<Vec<bool>> {
        let p = self.certificate_prime()?;
        let rows = self.k.count(self.d - 1);
        let cols = self.columns(self.candidates.iter().copied());
        let mut current = chosen.to_vec();
        let mut certified = false;
        loop {
            let active = self.fixed.iter().copied().chain(self.candidates.iter().zip(&current).filter(|(_, on)| **on).map(|(c, _)| *c));
            let kernel = left_kernel_mod_p(&self.columns(active), rows, p);
            let mut best: Option<(Vec<bool>, f64)> = None;
            for z in self.generators {
                let zv: Vec<(usize, i64)> = z.iter().collect();
                for y in &kernel {
                    if dot_mod(y, &zv, p) == 0 {
                        continue;
                    }
                    let next: Vec<bool> = cols.iter().map(|col| dot_mod(y, col, p) == 0).collect();
                    let cost = match score {
                        Some(x) => next.iter().zip(x).filter(|(on, _)| !**on).map(|(_, v)| v.max(0.0)).sum::<f64>(),
                        None => -(next.iter().filter(|v| **v).count() as f64),
                    };
                    if best.as_ref().map_or(true, |(_, c)| cost < *c) {
                        best = Some((next, cost));
                    }
                }
                if best.is_some() {
                    break;
                }
            }
            let Some((next, _)) = best else { return certified.then_some(current) };
            certified = true;
            if next == current {
                return Some(current);
            }
            current = next;
        }
    }

    /// A maximal non-spanning superset of `chosen` (which must not span).
    /// Cells of high `score` are tried first.
    fn grow(&mut self, chosen: &[bool], score: Option<&[f64]>) -> Result<Vec<bool>> {
        if let Some(s) = self.certified_growth(chosen, score) {
            return Ok(s);
        }
        let mut cur = chosen.to_vec();
        let mut rest: Vec<usize> = (0..cur.len()).filter(|&i| !cur[i]).collect();
        if let Some(x) = score {
            rest.sort_by(|&a, &b| x[b].total_cmp(&x[a]));
        }
        self.grow_chunk(&mut cur, &rest)?;
        Ok(cur)
    }

    fn grow_chunk(&mut self, cur: &mut [bool], chunk: &[usize]) -> Result<()> {
        if chunk.is_empty() {
            return Ok(());
        }
        for &i in chunk {
            cur[i] = true;
        }
        if !self.spans(cur)? {
            return Ok(());
        }
        for &i in chunk {
            cur[i] = false;
        }
        if chunk.len() == 1 {
            return Ok(());
        }
        let (a, b) = chunk.split_at(chunk.len() / 2);
        self.grow_chunk(cur, a)?;
        self.grow_chunk(cur, b)
    }
}

fn dot_mod(y: &[i64], col: &[(usize, i64)], p: i64) -> i64 {
    let mut s: i128 = 0;
    for &(r, c) in col {
        s += y[r] as i128 * c.rem_euclid(p) as i128;
    }
    (s % p as i128) as i64
}

fn inv_mod(a: i64, p: i64) -> i64 {
    let (mut t, mut nt, mut r, mut nr) = (0i64, 1i64, p, a.rem_euclid(p));
    while nr != 0 {
        let q = r / nr;
        (t, nt) = (nt, t - q * nt);
        (r, nr) = (nr, r - q * nr);
    }
    t.rem_euclid(p)
}

/// Basis of `{ y ∈ F_p^rows : y ⋅ col = 0 for every column }`.
fn left_kernel_mod_p(cols: &[Vec<(usize, i64)>], rows: usize, p: i64) -> Vec<Vec<i64>> {
    let mut a: Vec<Vec<i64>> = cols
        .iter()
        .map(|c| {
            let mut r = vec![0i64; rows];
            for &(i, v) in c {
                r[i] = (r[i] + v).rem_euclid(p);
            }
            r
        })
        .collect();
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..rows {
        let Some(piv) = (row..a.len()).find(|&i| a[i][col] != 0) else { continue };
        a.swap(row, piv);
        let inv = inv_mod(a[row][col], p);
        for v in a[row].iter_mut() {
            *v = ((*v as i128 * inv as i128) % p as i128) as i64;
        }
        for i in 0..a.len() {
            if i != row && a[i][col] != 0 {
                let f = a[i][col];
                for j in 0..rows {
                    let v = (a[i][j] as i128 - f as i128 * a[row][j] as i128).rem_euclid(p as i128);
                    a[i][j] = v as i64;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == a.len() {
            break;
        }
    }
    let pivot_set: BTreeSet<usize> = pivots.iter().copied().collect();
    (0..rows)
        .filter(|c| !pivot_set.contains(c))
        .map(|f| {
            let mut y = vec![0i64; rows];
            y[f] = 1;
            for (r, &pc) in pivots.iter().enumerate() {
                y[pc] = (p - a[r][f]) % p;
            }
            y
        })
        .collect()
}

struct SearchOutcome {
    chosen: Vec<bool>,
    proven: bool,
    nodes: usize,
    lower_bound: f64,
    method: &'static str,
}

const EPS: f64 = 1e-12;

/// Threshold sets of the relaxed solution tried per separation round.
const SEPARATION_LEVELS: usize = 8;

fn minimize_monotone(oracle: &mut Spanning, weights: &[f64], opts: &SolveOptions) -> Result<SearchOutcome> {
    let n = weights.len();
    let forced: Vec<bool> = weights.iter().map(|w| *w <= 0.0).collect();
    if !oracle.spans(&vec![true; n])? {
        return Err(Error::Infeasible("the full complex does not span".into()));
    }
    let free = forced.iter().filter(|f| !**f).count();
    let enumerate = match opts.strategy {
        SearchStrategy::Enumerate => {
            if free > opts.enumerate_limit {
                return Err(Error::CellLimit { count: free, limit: opts.enumerate_limit });
            }
            true
        }
        SearchStrategy::Cuts => false,
        SearchStrategy::Auto => free <= opts.enumerate_below,
    };
    if enumerate {
        let mut st = Enum { oracle, weights, best: f64::INFINITY, best_set: vec![true; n], nodes: 0, prune: opts.prune };
        let mut chosen = forced.clone();
        st.dfs(0, &mut chosen, 0.0)?;
        return Ok(SearchOutcome {
            chosen: st.best_set,
            proven: true,
            nodes: st.nodes,
            lower_bound: st.best,
            method: if opts.prune { "enumerate-pruned" } else { "enumerate" },
        });
    }
    let mut cuts: Vec<Vec<usize>> = Vec::new();
    let mut nodes = 0;
    let mut lower = 0.0f64;
    let mut incumbent = (vec![true; n], weight_of(weights, &vec![true; n]));
    let unit = weight_unit(weights);
    let closes = |upper: f64, lower: f64| {
        let lower = match unit {
            Some(u) => (lower / u - 1e-6).ceil() * u,
            None => lower,
        };
        upper <= lower + 1e-9 * lower.abs().max(1.0)
    };
    let mut rounds = 0;
    while rounds < opts.iteration_limit {
        rounds += 1;
        let Some((x, value)) = cover_relaxed(weights, &forced, &cuts) else { break };
        lower = lower.max(value);
        let mut order: Vec<usize> = (0..n).filter(|&i| !forced[i]).collect();
        order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(weights[a].total_cmp(&weights[b])));
        let prefix = |m: usize| {
            let mut c = forced.clone();
            for &i in &order[..m] {
                c[i] = true;
            }
            c
        };
        let (mut lo, mut hi) = (0usize, order.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if oracle.spans(&prefix(mid))? {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let span_w = weight_of(weights, &prefix(lo));
        if span_w < incumbent.1 || closes(span_w, lower) || rounds % 16 == 1 {
            let mut span = prefix(lo);
            for &i in order[..lo].iter().rev() {
                span[i] = false;
                if !oracle.spans(&span)? {
                    span[i] = true;
                }
            }
            let w = weight_of(weights, &span);
            if w < incumbent.1 {
                incumbent = (span, w);
            }
        }
        if closes(incumbent.1, lower) {
            return Ok(SearchOutcome { chosen: incumbent.0, proven: true, nodes, lower_bound: lower, method: "cuts" });
        }
        if lo == 0 {
            break;
        }
        // separate at several thresholds of `x`
        let mut ends: Vec<usize> = (1..lo).filter(|&m| x[order[m]] < x[order[m - 1]] - 1e-9).collect();
        ends.push(lo - 1);
        let step = ends.len().div_ceil(SEPARATION_LEVELS);
        let mut added = 0;
        for &m in ends.iter().rev().step_by(step) {
            let grown = oracle.grow(&prefix(m), Some(&x))?;
            let cut: Vec<usize> = (0..n).filter(|&i| !grown[i]).collect();
            if cut.is_empty() {
                return Err(Error::Infeasible("no spanning set".into()));
            }
            if cut.iter().map(|&i| x[i]).sum::<f64>() < 1.0 - 1e-7 && !cuts.contains(&cut) {
                cuts.push(cut);
                added += 1;
            }
        }
        if added == 0 {
            break;
        }
    }
    while rounds < opts.iteration_limit {
        rounds += 1;
        let (chosen, bound, used) = cover(weights, &forced, &cuts, opts.node_limit)?;
        nodes += used;
        lower = lower.max(bound);
        if closes(incumbent.1, lower) {
            return Ok(SearchOutcome { chosen: incumbent.0, proven: true, nodes, lower_bound: lower, method: "cuts" });
        }
        if oracle.spans(&chosen)? {
            return Ok(SearchOutcome { chosen, proven: true, nodes, lower_bound: bound, method: "cuts" });
        }
        let grown = oracle.grow(&chosen, None)?;
        let cut: Vec<usize> = (0..n).filter(|&i| !grown[i]).collect();
        if cut.is_empty() {
            return Err(Error::Infeasible("no spanning set".into()));
        }
        cuts.push(cut);
    }
    Err(Error::CellLimit { count: cuts.len(), limit: opts.iteration_limit })
}

/// Largest `u` such that every weight is an integer multiple of `u`, for
/// dyadic weights.
fn weight_unit(weights: &[f64]) -> Option<f64> {
    let k = (0..=60).find(|&k| weights.iter().all(|w| {
        let v = w * (1u64 << k) as f64;
        v.fract() == 0.0 && v.abs() < (1u64 << 53) as f64
    }))?;
    let g = weights.iter().fold(0u64, |g, w| num_integer::gcd(g, (w.abs() * (1u64 << k) as f64) as u64));
    (g > 0).then(|| g as f64 / (1u64 << k) as f64)
}

/// LP relaxation of [`cover`]: values in `[0,1]` and the optimum.
fn cover_relaxed(weights: &[f64], forced: &[bool], cuts: &[Vec<usize>]) -> Option<(Vec<f64>, f64)> {
    let n = weights.len();
    let mut lp: LinearProgram<f64> = LinearProgram::new(n);
    for (i, w) in weights.iter().enumerate() {
        lp.objective[i] = *w;
        let rel = if forced[i] { Relation::Eq } else { Relation::Le };
        lp.add(vec![(i, 1.0)], rel, 1.0);
    }
    for c in cuts {
        lp.add(c.iter().map(|&i| (i, 1.0)).collect(), Relation::Ge, 1.0);
    }
    match lp.solve() {
        LpOutcome::Optimal { x, value } => Some((x, value)),
        _ => None,
    }
}

/// Minimum-weight set meeting every cut; forced cells are always in.
fn cover(weights: &[f64], forced: &[bool], cuts: &[Vec<usize>], node_limit: usize) -> Result<(Vec<bool>, f64, usize)> {
    let n = weights.len();
    let mut chosen = forced.to_vec();
    let open: Vec<&Vec<usize>> = cuts.iter().filter(|c| !c.iter().any(|&i| forced[i])).collect();
    if open.is_empty() {
        return Ok((chosen, 0.0, 0));
    }
    let mut lp: LinearProgram<f64> = LinearProgram::new(n);
    for (i, w) in weights.iter().enumerate() {
        lp.objective[i] = *w;
    }
    for c in &open {
        lp.add(c.iter().map(|&i| (i, 1.0)).collect(), Relation::Ge, 1.0);
    }
    let out = solve_ilp(&lp, &vec![true; n], node_limit);
    match out.status {
        IlpStatus::Optimal => {}
        IlpStatus::NodeLimit => return Err(Error::CellLimit { count: out.nodes, limit: node_limit }),
        _ => return Err(Error::Infeasible("covering program".into())),
    }
    let x = out.x.expect("optimal solution");
    for (i, v) in x.iter().enumerate() {
        if *v > 0.5 {
            chosen[i] = true;
        }
    }
    let value = weights.iter().zip(&chosen).filter(|(_, c)| **c).map(|(w, _)| w).sum();
    Ok((chosen, value, out.nodes))
}

struct Enum<'a, 'b> {
    oracle: &'a mut Spanning<'b>,
    weights: &'a [f64],
    best: f64,
    best_set: Vec<bool>,
    nodes: usize,
    prune: bool,
}

impl Enum<'_, '_> {
    fn record(&mut self, chosen: &[bool], w: f64) {
        if w < self.best - EPS {
            self.best = w;
            self.best_set = chosen.to_vec();
        }
    }

    fn dfs(&mut self, i: usize, chosen: &mut Vec<bool>, w: f64) -> Result<()> {
        self.nodes += 1;
        let n = chosen.len();
        if self.prune {
            if w >= self.best - EPS {
                return Ok(());
            }
            if self.oracle.spans(chosen)? {
                self.record(chosen, w);
                return Ok(());
            }
            let mut all = chosen.clone();
            for v in all.iter_mut().skip(i) {
                *v = true;
            }
            if !self.oracle.spans(&all)? {
                return Ok(());
            }
        }
        let Some(j) = (i..n).find(|&j| !chosen[j]) else {
            if !self.prune && self.oracle.spans(chosen)? {
                self.record(chosen, w);
            }
            return Ok(());
        };
        chosen[j] = true;
        self.dfs(j + 1, chosen, w + self.weights[j])?;
        chosen[j] = false;
        self.dfs(j + 1, chosen, w)
    }
}

fn weight_of(weights: &[f64], chosen: &[bool]) -> f64 {
    weights.iter().zip(chosen).filter(|(_, c)| **c).map(|(w, _)| w).sum()
}

/// `inf { H^d(E ∖ B) : E ⊇ B spans }` (or `Φ`, or `H^d(E)` without
/// `exclude_b`).
pub fn min_spanning_set(k: &CellComplex, p: &PlateauProblem, opts: &SolveOptions) -> Result<SolveReport> {
    let start = Instant::now();
    let data = problem_data(k, p)?;
    let d = p.d;
    let b_cells: BTreeSet<usize> = data.b.cells.get(d).cloned().unwrap_or_default();
    let candidates: Vec<usize> = (0..k.count(d)).filter(|c| !b_cells.contains(c)).collect();
    let weights = cell_weights(k, d, &candidates, &p.objective)?;
    let base = if p.exclude_b { 0.0 } else { cell_weights(k, d, &b_cells.iter().copied().collect::<Vec<_>>(), &p.objective)?.iter().sum() };
    let mut oracle = Spanning {
        k,
        d,
        group: p.group,
        b: &data.b,
        generators: &data.generators,
        route: opts.route,
        candidates: candidates.clone(),
        fixed: b_cells.iter().copied().collect(),
        calls: 0,
    };
    let out = minimize_monotone(&mut oracle, &weights, opts)?;
    let e = oracle.set_of(&out.chosen)?;
    // independent recheck through the other route
    let recheck = match opts.route {
        SpanRoute::Absolute => data.generators.iter().map(|z| homology::is_boundary(k, z, &e).map(|r| r.0)).collect::<Result<Vec<_>>>()?.into_iter().all(|v| v),
        SpanRoute::ChainLevel => homology::spans(k, &e, &data.b, &data.generators, p.group, false)?,
    };
    if !recheck {
        return Err(Error::precondition("spanning witness failed the independent recheck"));
    }
    let chain = match &p.condition {
        Condition::CycleBoundary(t) => homology::is_boundary(k, t, &e)?.1,
        _ => None,
    };
    let value = base + weight_of(&weights, &out.chosen);
    Ok(SolveReport {
        value,
        chain,
        set: Some(e),
        method: format!("{}/{:?}", out.method, opts.route),
        nodes: out.nodes,
        oracle_calls: oracle.calls,
        proven_optimal: out.proven,
        lower_bound: Some(base + out.lower_bound),
        excluded_value: Some(weight_of(&weights, &out.chosen)),
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

fn support_chain(k: &CellComplex, t: &Chain, candidates: &[usize], chosen: &[bool], d: usize) -> Result<Chain> {
    let seeds: Vec<(usize, usize)> = candidates.iter().zip(chosen).filter(|(_, c)| **c).map(|(c, _)| (d, *c)).collect();
    let (e, _) = k.closure(&seeds)?;
    let (ok, s) = homology::is_boundary(k, t, &e)?;
    if !ok {
        return Err(Error::precondition("support lost feasibility"));
    }
    Ok(s.expect("witness"))
}

/// `inf { size(S) : ∂S = T }` (or mass) over `d`-chains of the complex.
pub fn min_size_chain(k: &CellComplex, p: &PlateauProblem, opts: &SolveOptions) -> Result<SolveReport> {
    let start = Instant::now();
    let Condition::CycleBoundary(t) = &p.condition else {
        return Err(Error::precondition("min_size_chain needs a boundary condition"));
    };
    problem_data(k, p)?;
    let d = p.d;
    let group = p.group;
    if t.is_zero() {
        return Ok(SolveReport {
            value: 0.0,
            chain: Some(Chain::zero(group, d)),
            set: None,
            method: "trivial".into(),
            nodes: 0,
            oracle_calls: 0,
            proven_optimal: true,
            lower_bound: Some(0.0),
            excluded_value: None,
            runtime_ms: 0.0,
        });
    }
    let measure = |s: &Chain| match p.objective {
        PlateauObjective::Mass => s.mass(k),
        _ => s.size(k),
    };
    let use_program = matches!(p.objective, PlateauObjective::Mass);
    let (s, method, nodes, calls, bound) = if use_program {
        let n = k.count(d);
        let block = Block {
            weights: (0..n).map(|c| k.measure(d, c)).collect(),
            columns: (0..n).map(|c| k.faces(d, c).iter().map(|&(f, s)| (f, s as i64)).collect()).collect(),
        };
        let objective = if matches!(p.objective, PlateauObjective::Mass) { Objective::Mass } else { Objective::Size };
        let program = ChainProgram { group, rhs: (0..k.count(d - 1)).map(|r| t.get(r)).collect(), blocks: vec![block], objective, coef_box: None };
        let sol = program.solve(false, opts.node_limit, opts.arith);
        match sol.status {
            IlpStatus::Optimal => {}
            IlpStatus::NodeLimit => return Err(Error::CellLimit { count: sol.nodes, limit: opts.node_limit }),
            _ => return Err(Error::Infeasible("T is not a boundary on the complex".into())),
        }
        let vals = &sol.values.expect("optimal")[0];
        let s = Chain::from_terms(group, d, vals.iter().enumerate().filter(|(_, v)| **v != 0).map(|(i, v)| (i, *v)))?;
        (s, "branch-bound", sol.nodes, 0, sol.root_bound)
    } else {
        let candidates: Vec<usize> = (0..k.count(d)).collect();
        let weights: Vec<f64> = candidates.iter().map(|&c| k.measure(d, c)).collect();
        let data = problem_data(k, p)?;
        let mut oracle = Spanning {
            k,
            d,
            group,
            b: &data.b,
            generators: &data.generators,
            route: SpanRoute::ChainLevel,
            candidates: candidates.clone(),
            fixed: vec![],
            calls: 0,
        };
        let mut o = *opts;
        o.strategy = SearchStrategy::Cuts;
        let out = minimize_monotone(&mut oracle, &weights, &o)?;
        let s = support_chain(k, t, &candidates, &out.chosen, d)?;
        (s, "support-cuts", out.nodes, oracle.calls, Some(out.lower_bound))
    };
    if s.boundary(k)? != *t {
        return Err(Error::precondition("chain witness failed the boundary check"));
    }
    Ok(SolveReport {
        value: measure(&s),
        chain: Some(s),
        set: None,
        method: method.into(),
        nodes,
        oracle_calls: calls,
        proven_optimal: true,
        lower_bound: bound,
        excluded_value: None,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// `inf { size(S) : spt ∂S ⊆ B, [∂S] = sigma }`; also reports the
/// `H^d(E ∖ B)` score, which coincides since `d`-cells of `B` are free.
pub fn min_size_relative(k: &CellComplex, p: &PlateauProblem, opts: &SolveOptions) -> Result<SolveReport> {
    let start = Instant::now();
    let Condition::HomClass { b, sigma } = &p.condition else {
        return Err(Error::precondition("min_size_relative needs a class condition"));
    };
    let data = problem_data(k, p)?;
    let d = p.d;
    let group = p.group;
    let b_cells: BTreeSet<usize> = b.cells.get(d).cloned().unwrap_or_default();
    let candidates: Vec<usize> = (0..k.count(d)).filter(|c| !b_cells.contains(c)).collect();
    let weights: Vec<f64> = candidates.iter().map(|&c| k.measure(d, c)).collect();
    let (chosen, nodes, calls, bound) = if data.generators.is_empty() {
        (vec![false; candidates.len()], 0, 0, 0.0)
    } else {
        let mut oracle = Spanning {
            k,
            d,
            group,
            b,
            generators: &data.generators,
            route: SpanRoute::ChainLevel,
            candidates: candidates.clone(),
            fixed: b_cells.iter().copied().collect(),
            calls: 0,
        };
        let out = minimize_monotone(&mut oracle, &weights, opts)?;
        (out.chosen, out.nodes, oracle.calls, out.lower_bound)
    };
    // S = S' minus its part on B: same class, support off B
    let z = data.generators.first().cloned().unwrap_or_else(|| Chain::zero(group, d - 1));
    let s = if z.is_zero() {
        Chain::zero(group, d)
    } else {
        let mut seeds: Vec<(usize, usize)> = candidates.iter().zip(&chosen).filter(|(_, c)| **c).map(|(c, _)| (d, *c)).collect();
        seeds.extend(b_cells.iter().map(|&c| (d, c)));
        let (e, _) = k.closure(&seeds)?;
        let full = homology::is_boundary(k, &z, &e)?.1.ok_or_else(|| Error::precondition("support lost feasibility"))?;
        full.restrict_by(|c| !b_cells.contains(&c))
    };
    let bs = s.boundary(k)?;
    if bs.iter().any(|(id, _)| !b.contains(d - 1, id)) {
        return Err(Error::precondition("relative witness has boundary outside B"));
    }
    let h = homology::homology_of(k, b, &k.empty_subcomplex(), d - 1, group, false)?;
    if h.classify(&bs)?.coords != *sigma {
        return Err(Error::precondition("relative witness is in the wrong class"));
    }
    let value = s.size(k);
    Ok(SolveReport {
        value,
        chain: Some(s),
        set: None,
        method: "support-cuts".into(),
        nodes,
        oracle_calls: calls,
        proven_optimal: true,
        lower_bound: Some(bound),
        excluded_value: Some(weight_of(&weights, &chosen)),
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub size_side: SolveReport,
    pub set_side: SolveReport,
    pub both_optimal: bool,
    pub equal: bool,
    /// `[min, max]` of the two values.
    pub interval: (f64, f64),
    /// `size(S) ≤ H^d(E)` for the chain carried by the spanning set.
    pub chain_below_set: bool,
}

/// Solves both sides on the same data.
pub fn compare_infima(k: &CellComplex, p: &PlateauProblem, opts: &SolveOptions) -> Result<Comparison> {
    let t = match &p.condition {
        Condition::CycleBoundary(t) => t.clone(),
        Condition::Subgroup { generators, .. } => match generators.iter().filter(|z| !z.is_zero()).collect::<Vec<_>>()[..] {
            [] => Chain::zero(p.group, p.d - 1),
            [z] => z.clone(),
            _ => return Err(Error::Unsupported("comparison with several generators".into())),
        },
        Condition::HomClass { .. } => return Err(Error::Unsupported("comparison for class conditions; use min_size_relative".into())),
    };
    let chain_problem = PlateauProblem { condition: Condition::CycleBoundary(t.clone()), objective: PlateauObjective::Size, ..p.clone() };
    let size_side = min_size_chain(k, &chain_problem, opts)?;
    let set_problem = PlateauProblem { objective: PlateauObjective::Size, exclude_b: true, ..p.clone() };
    let set_side = min_spanning_set(k, &set_problem, opts)?;
    let carried = match &set_side.set {
        Some(e) if !t.is_zero() => homology::is_boundary(k, &t, e)?.1,
        _ => Some(Chain::zero(p.group, p.d)),
    };
    let h_e = set_side.set.as_ref().map_or(0.0, |e| e.cells.get(p.d).map_or(0.0, |s| s.iter().map(|&c| k.measure(p.d, c)).sum()));
    let chain_below_set = carried.is_some_and(|s| s.size(k) <= h_e + 1e-9);
    let both_optimal = size_side.proven_optimal && set_side.proven_optimal;
    let (a, b) = (size_side.value, set_side.value);
    Ok(Comparison { equal: (a - b).abs() <= 1e-9, both_optimal, interval: (a.min(b), a.max(b)), chain_below_set, size_side, set_side })
}

#[derive(Debug, Clone)]
pub struct SizeDifference {
    pub inf_t: f64,
    pub inf_t_prime: f64,
    pub size_r: f64,
    pub holds: bool,
}

/// `|inf{size S: ∂S=T} − inf{size S: ∂S=T'}| ≤ size(R)` for `∂R = T − T'`.
pub fn size_difference_check(k: &CellComplex, t: &Chain, t_prime: &Chain, r: &Chain, opts: &SolveOptions) -> Result<SizeDifference> {
    let d = r.dim();
    if r.boundary(k)? != t.sub(t_prime)? {
        return Err(Error::precondition("∂R ≠ T − T'"));
    }
    let solve = |c: &Chain| min_size_chain(k, &PlateauProblem::new(d, c.group(), Condition::CycleBoundary(c.clone())), opts).map(|r| r.value);
    let inf_t = solve(t)?;
    let inf_t_prime = solve(t_prime)?;
    let size_r = r.size(k);
    Ok(SizeDifference { inf_t, inf_t_prime, size_r, holds: (inf_t - inf_t_prime).abs() <= size_r + 1e-9 })
}
