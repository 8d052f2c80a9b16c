//! Flat norm, minimal fillings and flat distance.
//!
//! `F(T) = min { mass(Q) + mass(R) : T = Q + ∂R }` over chains of the
//! complex. Three solvers: the LP relaxation (exact rationals, integrality
//! checked per instance), branch-and-bound to an integral optimum, and a
//! depth-first search over the coefficients of `R` for finite groups.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::coeff::CoeffGroup;
use crate::complex::{CellComplex, Subcomplex};
use crate::error::{Error, Result};
use crate::homology;
use crate::lp::IlpStatus;
use crate::program::{Arith, Block, ChainProgram, Objective, ProgramSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlatNormMethod {
    Lp,
    Exhaustive,
    #[serde(rename = "branch-bound")]
    BranchBound,
}

impl std::str::FromStr for FlatNormMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lp" => Ok(Self::Lp),
            "exhaustive" => Ok(Self::Exhaustive),
            "branch-bound" | "bb" => Ok(Self::BranchBound),
            _ => Err(Error::Parse(format!("unknown flat norm method '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlatNormOptions {
    pub method: FlatNormMethod,
    /// Search budget for `Exhaustive`, in bits: `#values^#cells <= 2^limit`.
    pub cell_limit: u32,
    pub node_limit: usize,
    /// Coefficient range `|r| <= coef_box` searched by `Exhaustive` over `Z`.
    pub coef_box: i64,
    pub arith: Arith,
}

impl Default for FlatNormOptions {
    fn default() -> Self {
        FlatNormOptions { method: FlatNormMethod::BranchBound, cell_limit: 24, node_limit: 200_000, coef_box: 3, arith: Arith::Auto }
    }
}

impl FlatNormOptions {
    pub fn with_method(method: FlatNormMethod) -> Self {
        FlatNormOptions { method, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatNormResult {
    /// The flat norm, or the LP bound when `lower_bound_only`.
    pub value: f64,
    pub witness_q: Chain,
    pub witness_r: Chain,
    pub method: FlatNormMethod,
    /// `value` is a relaxation bound; the witnesses give an upper bound.
    pub lower_bound_only: bool,
    /// LP relaxation value, when an LP was solved.
    pub relaxation: Option<f64>,
    pub nodes: usize,
}

impl FlatNormResult {
    /// `mass(Q) + mass(R)` of the witnesses.
    pub fn witness_mass(&self, k: &CellComplex) -> f64 {
        self.witness_q.mass(k) + self.witness_r.mass(k)
    }
}

fn check_chain(k: &CellComplex, t: &Chain) -> Result<()> {
    t.validate(k)?;
    if t.dim() + 1 > k.dim() {
        return Err(Error::DimensionMismatch(format!("flat norm of a {}-chain needs (d+1)-cells; complex has dimension {}", t.dim(), k.dim())));
    }
    Ok(())
}

fn verify(k: &CellComplex, t: &Chain, q: &Chain, r: &Chain) -> Result<()> {
    if q.add(&r.boundary(k)?)? != *t {
        return Err(Error::precondition("flat norm witness failed the decomposition check"));
    }
    Ok(())
}

fn flat_program(k: &CellComplex, t: &Chain, objective: Objective) -> ChainProgram {
    let d = t.dim();
    let nd = k.count(d);
    let q = Block { weights: (0..nd).map(|s| k.measure(d, s)).collect(), columns: (0..nd).map(|s| vec![(s, 1)]).collect() };
    let nr = k.count(d + 1);
    let r = Block {
        weights: (0..nr).map(|s| k.measure(d + 1, s)).collect(),
        columns: (0..nr).map(|s| k.faces(d + 1, s).iter().map(|&(f, c)| (f, c as i64)).collect()).collect(),
    };
    ChainProgram { group: t.group(), rhs: (0..nd).map(|s| t.get(s)).collect(), blocks: vec![q, r], objective, coef_box: None }
}

fn chains_from(group: CoeffGroup, d: usize, values: &[Vec<i64>]) -> Result<(Chain, Chain)> {
    let q = Chain::from_terms(group, d, values[0].iter().enumerate().filter(|(_, v)| **v != 0).map(|(i, v)| (i, *v)))?;
    let r = Chain::from_terms(group, d + 1, values[1].iter().enumerate().filter(|(_, v)| **v != 0).map(|(i, v)| (i, *v)))?;
    Ok((q, r))
}

fn node_limit_error(sol: &ProgramSolution, limit: usize) -> Error {
    Error::CellLimit { count: sol.nodes, limit }
}

/// The flat norm of `t` on `k`.
pub fn flat_norm(k: &CellComplex, t: &Chain, opts: &FlatNormOptions) -> Result<FlatNormResult> {
    check_chain(k, t)?;
    let group = t.group();
    let d = t.dim();
    if t.is_zero() {
        return Ok(FlatNormResult {
            value: 0.0,
            witness_q: Chain::zero(group, d),
            witness_r: Chain::zero(group, d + 1),
            method: opts.method,
            lower_bound_only: false,
            relaxation: Some(0.0),
            nodes: 0,
        });
    }
    let result = match opts.method {
        FlatNormMethod::Exhaustive => exhaustive(k, t, opts)?,
        FlatNormMethod::Lp => {
            let sol = flat_program(k, t, Objective::Mass).solve(true, 1, opts.arith);
            let bound = sol.root_bound.ok_or_else(|| Error::Infeasible("flat norm LP has no optimum".into()))?;
            match &sol.values {
                Some(values) => {
                    let (q, r) = chains_from(group, d, values)?;
                    FlatNormResult {
                        value: q.mass(k) + r.mass(k),
                        witness_q: q,
                        witness_r: r,
                        method: opts.method,
                        lower_bound_only: false,
                        relaxation: Some(bound),
                        nodes: 1,
                    }
                }
                None => FlatNormResult {
                    value: bound,
                    witness_q: t.clone(),
                    witness_r: Chain::zero(group, d + 1),
                    method: opts.method,
                    lower_bound_only: true,
                    relaxation: Some(bound),
                    nodes: 1,
                },
            }
        }
        FlatNormMethod::BranchBound => {
            let sol = flat_program(k, t, Objective::Mass).solve(false, opts.node_limit, opts.arith);
            match sol.status {
                IlpStatus::Optimal => {}
                IlpStatus::NodeLimit => return Err(node_limit_error(&sol, opts.node_limit)),
                _ => return Err(Error::Infeasible("flat norm program".into())),
            }
            let (q, r) = chains_from(group, d, sol.values.as_ref().expect("optimal solution"))?;
            FlatNormResult {
                value: q.mass(k) + r.mass(k),
                witness_q: q,
                witness_r: r,
                method: opts.method,
                lower_bound_only: false,
                relaxation: sol.root_bound,
                nodes: sol.nodes,
            }
        }
    };
    verify(k, t, &result.witness_q, &result.witness_r)?;
    Ok(result)
}

fn exhaustive(k: &CellComplex, t: &Chain, opts: &FlatNormOptions) -> Result<FlatNormResult> {
    let group = t.group();
    let d = t.dim();
    let domain: Vec<i64> = match group.modulus() {
        Some(q) => (0..q as i64).collect(),
        None => {
            let b = opts.coef_box;
            std::iter::once(0).chain((1..=b).flat_map(|v| [v, -v])).collect()
        }
    };
    let nr = k.count(d + 1);
    let bits = (domain.len() as f64).log2() * nr as f64;
    if bits > opts.cell_limit as f64 + 1e-9 {
        return Err(Error::CellLimit { count: nr, limit: (opts.cell_limit as f64 / (domain.len() as f64).log2()).floor() as usize });
    }
    let nd = k.count(d);
    let mut last: Vec<Option<usize>> = vec![None; nd];
    let cols: Vec<Vec<(usize, i64)>> = (0..nr).map(|j| k.faces(d + 1, j).iter().map(|&(f, c)| (f, c as i64)).collect()).collect();
    for (j, col) in cols.iter().enumerate() {
        for &(f, _) in col {
            last[f] = Some(j);
        }
    }
    let mut closes: Vec<Vec<usize>> = vec![Vec::new(); nr];
    let mut fixed = 0.0;
    for (f, l) in last.iter().enumerate() {
        match l {
            Some(j) => closes[*j].push(f),
            None => fixed += group.norm_of(t.get(f)) * k.measure(d, f),
        }
    }
    let mut s = Search {
        group,
        k,
        d,
        domain: &domain,
        cols: &cols,
        closes: &closes,
        q: (0..nd).map(|f| t.get(f)).collect(),
        r: vec![0; nr],
        best: f64::INFINITY,
        best_r: vec![0; nr],
        nodes: 0,
    };
    s.dfs(0, 0.0, fixed);
    let r = Chain::from_terms(group, d + 1, s.best_r.iter().enumerate().filter(|(_, v)| **v != 0).map(|(i, v)| (i, *v)))?;
    let q = t.sub(&r.boundary(k)?)?;
    Ok(FlatNormResult {
        value: q.mass(k) + r.mass(k),
        witness_q: q,
        witness_r: r,
        method: FlatNormMethod::Exhaustive,
        lower_bound_only: false,
        relaxation: None,
        nodes: s.nodes,
    })
}

struct Search<'a> {
    group: CoeffGroup,
    k: &'a CellComplex,
    d: usize,
    domain: &'a [i64],
    cols: &'a [Vec<(usize, i64)>],
    closes: &'a [Vec<usize>],
    q: Vec<i64>,
    r: Vec<i64>,
    best: f64,
    best_r: Vec<i64>,
    nodes: usize,
}

impl Search<'_> {
    fn dfs(&mut self, j: usize, cost_r: f64, cost_q: f64) {
        self.nodes += 1;
        if cost_r + cost_q >= self.best - 1e-12 {
            return;
        }
        if j == self.cols.len() {
            self.best = cost_r + cost_q;
            self.best_r.clone_from(&self.r);
            return;
        }
        let g = self.group;
        let vol = self.k.measure(self.d + 1, j);
        for &v in self.domain {
            for &(f, c) in &self.cols[j] {
                self.q[f] = g.canon(self.q[f] - c * v);
            }
            self.r[j] = v;
            let closed: f64 = self.closes[j].iter().map(|&f| g.norm_of(self.q[f]) * self.k.measure(self.d, f)).sum();
            self.dfs(j + 1, cost_r + g.norm_of(v) * vol, cost_q + closed);
            for &(f, c) in &self.cols[j] {
                self.q[f] = g.canon(self.q[f] + c * v);
            }
        }
        self.r[j] = 0;
    }
}

/// A minimal-mass filling `β` of a cycle inside a region.
#[derive(Debug, Clone, PartialEq)]
pub struct FillResult {
    pub beta: Chain,
    pub mass: f64,
    pub flat_norm: f64,
    /// `mass(β) / F(σ)` (`1` when both vanish).
    pub ratio: f64,
}

/// Minimal-mass `β` supported in `region` with `∂β = sigma`.
pub fn fill(k: &CellComplex, sigma: &Chain, region: &Subcomplex, opts: &FlatNormOptions) -> Result<FillResult> {
    check_chain(k, sigma)?;
    let group = sigma.group();
    let d = sigma.dim();
    let (ok, _) = homology::is_boundary(k, sigma, region)?;
    if !ok {
        return Err(Error::Infeasible("cycle does not bound in the region".into()));
    }
    if sigma.is_zero() {
        return Ok(FillResult { beta: Chain::zero(group, d + 1), mass: 0.0, flat_norm: 0.0, ratio: 1.0 });
    }
    let cells: Vec<usize> = region.cells.get(d + 1).cloned().unwrap_or_default().into_iter().collect();
    let block = Block {
        weights: cells.iter().map(|&c| k.measure(d + 1, c)).collect(),
        columns: cells.iter().map(|&c| k.faces(d + 1, c).iter().map(|&(f, s)| (f, s as i64)).collect()).collect(),
    };
    let program = ChainProgram {
        group,
        rhs: (0..k.count(d)).map(|s| sigma.get(s)).collect(),
        blocks: vec![block],
        objective: Objective::Mass,
        coef_box: None,
    };
    let sol = program.solve(false, opts.node_limit, opts.arith);
    match sol.status {
        IlpStatus::Optimal => {}
        IlpStatus::NodeLimit => return Err(node_limit_error(&sol, opts.node_limit)),
        _ => return Err(Error::Infeasible("filling program".into())),
    }
    let values = &sol.values.as_ref().expect("optimal solution")[0];
    let beta = Chain::from_terms(group, d + 1, cells.iter().zip(values).filter(|(_, v)| **v != 0).map(|(c, v)| (*c, *v)))?;
    if beta.boundary(k)? != *sigma {
        return Err(Error::precondition("filling failed the boundary check"));
    }
    let mass = beta.mass(k);
    let f = flat_norm(k, sigma, opts)?.value;
    let ratio = if f > 0.0 { mass / f } else { 1.0 };
    Ok(FillResult { beta, mass, flat_norm: f, ratio })
}

/// `F(A - B)`.
pub fn flat_distance(k: &CellComplex, a: &Chain, b: &Chain, opts: &FlatNormOptions) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!("{}-chain vs {}-chain", a.dim(), b.dim())));
    }
    Ok(flat_norm(k, &a.sub(b)?, opts)?.value)
}

/// Region made of the closure of the given top cells.
pub fn region_of(k: &CellComplex, dim: usize, cells: &BTreeSet<usize>) -> Result<Subcomplex> {
    let seeds: Vec<(usize, usize)> = cells.iter().map(|&c| (dim, c)).collect();
    Ok(k.closure(&seeds)?.0)
}
