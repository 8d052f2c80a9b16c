//! Linear and integer programs over `f64` or exact `BigRational`.
//!
//! Exact programs run on a dense two-phase simplex with a depth-first
//! branch-and-bound on top. Pivoting uses Dantzig's rule and switches to
//! Bland's rule after a run of degenerate pivots, which rules out cycling.
//! Float programs go to the sparse bounded-variable solver of `microlp`
//! (single-variable rows become bounds), falling back to the dense tableau if
//! it reports a numerical failure.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(v: f64) -> Self;
    fn from_i64(v: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn is_zero_tol(&self) -> bool;
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool;
    fn floor(&self) -> Self;
    fn ceil(&self) -> Self;
    fn is_integral(&self) -> bool;
    /// Exact arithmetic stays on the dense tableau.
    const EXACT: bool;
}

const F64_EPS: f64 = 1e-9;

impl Scalar for f64 {
    const EXACT: bool = false;
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_zero_tol(&self) -> bool {
        self.abs() <= F64_EPS
    }
    fn is_pos(&self) -> bool {
        *self > F64_EPS
    }
    fn is_neg(&self) -> bool {
        *self < -F64_EPS
    }
    fn floor(&self) -> Self {
        (self + F64_EPS).floor()
    }
    fn ceil(&self) -> Self {
        (self - F64_EPS).ceil()
    }
    fn is_integral(&self) -> bool {
        (self - self.round()).abs() <= 1e-7
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).expect("finite value")
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_zero_tol(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_pos(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_neg(&self) -> bool {
        Signed::is_negative(self)
    }
    fn floor(&self) -> Self {
        BigRational::floor(self)
    }
    fn ceil(&self) -> Self {
        BigRational::ceil(self)
    }
    fn is_integral(&self) -> bool {
        BigRational::is_integer(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint<S> {
    pub coeffs: Vec<(usize, S)>,
    pub rel: Relation,
    pub rhs: S,
}

/// `minimize c.x` subject to the constraints and `x >= 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram<S> {
    pub n_vars: usize,
    pub objective: Vec<S>,
    pub constraints: Vec<Constraint<S>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<S> {
    Optimal { x: Vec<S>, value: S },
    Infeasible,
    Unbounded,
}

impl<S: Scalar> LinearProgram<S> {
    pub fn new(n_vars: usize) -> Self {
        LinearProgram { n_vars, objective: vec![S::zero(); n_vars], constraints: Vec::new() }
    }

    pub fn add(&mut self, coeffs: Vec<(usize, S)>, rel: Relation, rhs: S) {
        self.constraints.push(Constraint { coeffs, rel, rhs });
    }

    pub fn solve(&self) -> LpOutcome<S> {
        if !S::EXACT {
            if let Some(out) = sparse::solve_lp(self) {
                return out;
            }
        }
        self.solve_dense()
    }

    fn solve_dense(&self) -> LpOutcome<S> {
        Tableau::build(self).run()
    }
}

struct Tableau<S> {
    rows: Vec<Vec<S>>,
    rhs: Vec<S>,
    basis: Vec<usize>,
    n_struct: usize,
    n_total: usize,
    first_art: usize,
    cost: Vec<S>,
}

impl<S: Scalar> Tableau<S> {
    fn build(lp: &LinearProgram<S>) -> Self {
        let m = lp.constraints.len();
        let n = lp.n_vars;
        let n_slack = lp.constraints.iter().filter(|c| c.rel != Relation::Eq).count();
        let first_art = n + n_slack;
        let n_total = first_art + m;
        let mut rows = vec![vec![S::zero(); n_total]; m];
        let mut rhs = vec![S::zero(); m];
        let mut basis = vec![0; m];
        let mut slack = n;
        for (i, c) in lp.constraints.iter().enumerate() {
            let flip = c.rhs.is_neg();
            for (j, a) in &c.coeffs {
                let v = rows[i][*j].clone() + a.clone();
                rows[i][*j] = v;
            }
            match c.rel {
                Relation::Le => {
                    rows[i][slack] = S::one();
                    slack += 1;
                }
                Relation::Ge => {
                    rows[i][slack] = -S::one();
                    slack += 1;
                }
                Relation::Eq => {}
            }
            rhs[i] = c.rhs.clone();
            if flip {
                for v in rows[i].iter_mut() {
                    *v = -v.clone();
                }
                rhs[i] = -rhs[i].clone();
            }
            rows[i][first_art + i] = S::one();
            basis[i] = first_art + i;
        }
        let mut cost = vec![S::zero(); n_total];
        cost[..n].clone_from_slice(&lp.objective);
        Tableau { rows, rhs, basis, n_struct: n, n_total, first_art, cost }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero_tol() {
                *v = v.clone() / p.clone();
            }
        }
        self.rhs[r] = self.rhs[r].clone() / p;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c].clone();
            if f.is_zero_tol() {
                continue;
            }
            for (j, pv) in pivot_row.iter().enumerate() {
                if !pv.is_zero_tol() {
                    let v = self.rows[i][j].clone() - f.clone() * pv.clone();
                    self.rows[i][j] = v;
                }
            }
            self.rows[i][c] = S::zero();
            self.rhs[i] = self.rhs[i].clone() - f * pivot_rhs.clone();
        }
        self.basis[r] = c;
    }

    /// Reduced costs for `cost` restricted to columns `< limit`.
    fn reduced(&self, cost: &[S], limit: usize) -> Vec<S> {
        let mut red: Vec<S> = cost[..limit].to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b].clone();
            if cb.is_zero_tol() {
                continue;
            }
            for (j, r) in red.iter_mut().enumerate() {
                let a = &self.rows[i][j];
                if !a.is_zero_tol() {
                    *r = r.clone() - cb.clone() * a.clone();
                }
            }
        }
        red
    }

    /// Runs simplex iterations; returns false on unboundedness.
    fn optimize(&mut self, cost: &[S], limit: usize) -> bool {
        let mut degenerate_run = 0usize;
        loop {
            let red = self.reduced(cost, limit);
            let bland = degenerate_run > 50;
            let mut enter = None;
            for (j, r) in red.iter().enumerate() {
                if self.basis.contains(&j) || !r.is_neg() {
                    continue;
                }
                match enter {
                    None => enter = Some(j),
                    Some(k) if !bland && *r < red[k] => enter = Some(j),
                    _ => {}
                }
                if bland {
                    break;
                }
            }
            let Some(c) = enter else { return true };
            let mut leave: Option<(usize, S)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if !a.is_pos() {
                    continue;
                }
                let ratio = self.rhs[i].clone() / a.clone();
                match &leave {
                    None => leave = Some((i, ratio)),
                    Some((k, best)) => {
                        if ratio < *best || (!(ratio > *best) && self.basis[i] < self.basis[*k]) {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
            let Some((r, ratio)) = leave else { return false };
            if ratio.is_zero_tol() {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, c);
        }
    }

    fn run(mut self) -> LpOutcome<S> {
        // phase 1: minimize the sum of artificials
        let mut art_cost = vec![S::zero(); self.n_total];
        for c in art_cost.iter_mut().skip(self.first_art) {
            *c = S::one();
        }
        self.optimize(&art_cost, self.n_total);
        let infeas: S = self
            .basis
            .iter()
            .zip(&self.rhs)
            .filter(|(b, _)| **b >= self.first_art)
            .fold(S::zero(), |acc, (_, v)| acc + v.clone());
        if infeas.is_pos() {
            return LpOutcome::Infeasible;
        }
        // drive remaining artificials out of the basis; drop redundant rows
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= self.first_art {
                let col = (0..self.first_art).find(|&j| !self.rows[i][j].is_zero_tol());
                match col {
                    Some(j) => self.pivot(i, j),
                    None => {
                        self.rows.remove(i);
                        self.rhs.remove(i);
                        self.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        let cost = self.cost.clone();
        if !self.optimize(&cost, self.first_art) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![S::zero(); self.n_struct];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                x[b] = self.rhs[i].clone();
            }
        }
        let value = x
            .iter()
            .zip(&self.cost)
            .fold(S::zero(), |acc, (xi, ci)| acc + xi.clone() * ci.clone());
        LpOutcome::Optimal { x, value }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IlpStatus {
    Optimal,
    Infeasible,
    NodeLimit,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct IlpOutcome<S> {
    pub status: IlpStatus,
    pub x: Option<Vec<S>>,
    pub value: Option<S>,
    /// Value of the root relaxation, a lower bound on the optimum.
    pub root_bound: Option<S>,
    /// Whether the root relaxation already had an integral optimum.
    pub root_integral: bool,
    pub nodes: usize,
}

/// Depth-first branch-and-bound; branches on the lowest-index fractional
/// integer variable, floor side first.
pub fn solve_ilp<S: Scalar>(lp: &LinearProgram<S>, integer: &[bool], node_limit: usize) -> IlpOutcome<S> {
    if !S::EXACT {
        if let Some(out) = sparse::solve_mip(lp, integer, node_limit) {
            return out;
        }
    }
    let mut best: Option<(Vec<S>, S)> = None;
    let mut nodes = 0usize;
    let mut root_bound = None;
    let mut root_integral = false;
    let mut stack: Vec<Vec<Constraint<S>>> = vec![Vec::new()];
    let mut hit_limit = false;
    while let Some(extra) = stack.pop() {
        if nodes >= node_limit {
            hit_limit = true;
            break;
        }
        nodes += 1;
        let mut sub = lp.clone();
        sub.constraints.extend(extra.iter().cloned());
        let (x, value) = match sub.solve_dense() {
            LpOutcome::Optimal { x, value } => (x, value),
            LpOutcome::Infeasible => continue,
            LpOutcome::Unbounded => {
                return IlpOutcome {
                    status: IlpStatus::Unbounded,
                    x: None,
                    value: None,
                    root_bound,
                    root_integral,
                    nodes,
                }
            }
        };
        let frac = (0..lp.n_vars).find(|&j| integer[j] && !x[j].is_integral());
        if nodes == 1 {
            root_bound = Some(value.clone());
            root_integral = frac.is_none();
        }
        if let Some((_, bv)) = &best {
            if !(value < *bv) || (value.clone() - bv.clone()).is_zero_tol() {
                continue;
            }
        }
        match frac {
            None => best = Some((x, value)),
            Some(j) => {
                let mut up = extra.clone();
                up.push(Constraint { coeffs: vec![(j, S::one())], rel: Relation::Ge, rhs: x[j].ceil() });
                let mut down = extra;
                down.push(Constraint { coeffs: vec![(j, S::one())], rel: Relation::Le, rhs: x[j].floor() });
                stack.push(up);
                stack.push(down);
            }
        }
    }
    let status = match (&best, hit_limit) {
        (_, true) => IlpStatus::NodeLimit,
        (Some(_), false) => IlpStatus::Optimal,
        (None, false) => IlpStatus::Infeasible,
    };
    let (x, value) = match best {
        Some((x, v)) => (Some(x), Some(v)),
        None => (None, None),
    };
    IlpOutcome { status, x, value, root_bound, root_integral, nodes }
}

mod sparse {
    use std::collections::BTreeMap;

    use microlp::{ComparisonOp, OptimizationDirection, Problem, SolutionStatus, SolveOptions, SolveOutcome, Variable};

    use super::{IlpOutcome, IlpStatus, LinearProgram, LpOutcome, Relation, Scalar};

    const BOUND_TOL: f64 = 1e-9;

    struct Model {
        problem: Problem,
        vars: Vec<Variable>,
    }

    /// `None` when the bounds alone are contradictory.
    fn build<S: Scalar>(lp: &LinearProgram<S>, integer: Option<&[bool]>) -> Option<Model> {
        let n = lp.n_vars;
        let mut lo = vec![0.0f64; n];
        let mut hi = vec![f64::INFINITY; n];
        let mut rows = Vec::new();
        for c in &lp.constraints {
            let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
            for (j, a) in &c.coeffs {
                *merged.entry(*j).or_default() += a.to_f64();
            }
            merged.retain(|_, a| *a != 0.0);
            let rhs = c.rhs.to_f64();
            match merged.len() {
                0 => {
                    let ok = match c.rel {
                        Relation::Le => 0.0 <= rhs + BOUND_TOL,
                        Relation::Ge => 0.0 >= rhs - BOUND_TOL,
                        Relation::Eq => rhs.abs() <= BOUND_TOL,
                    };
                    if !ok {
                        return None;
                    }
                }
                1 => {
                    let (&j, &a) = merged.iter().next().unwrap();
                    let b = rhs / a;
                    match (c.rel, a > 0.0) {
                        (Relation::Le, true) | (Relation::Ge, false) => hi[j] = hi[j].min(b),
                        (Relation::Ge, true) | (Relation::Le, false) => lo[j] = lo[j].max(b),
                        (Relation::Eq, _) => {
                            lo[j] = lo[j].max(b);
                            hi[j] = hi[j].min(b);
                        }
                    }
                }
                _ => rows.push((merged, c.rel, rhs)),
            }
        }
        let mut problem = Problem::new(OptimizationDirection::Minimize);
        let mut vars = Vec::with_capacity(n);
        for j in 0..n {
            let cost = lp.objective[j].to_f64();
            let is_int = integer.is_some_and(|m| m[j]);
            if is_int {
                let l = (lo[j] - BOUND_TOL).ceil();
                let h = (hi[j] + BOUND_TOL).floor();
                if l > h {
                    return None;
                }
                let h = if h >= i32::MAX as f64 { i32::MAX } else { h as i32 };
                vars.push(problem.add_integer_var(cost, (l as i32, h)));
            } else {
                if lo[j] > hi[j] + BOUND_TOL {
                    return None;
                }
                vars.push(problem.add_var(cost, (lo[j], hi[j].max(lo[j]))));
            }
        }
        for (m, rel, rhs) in rows {
            let op = match rel {
                Relation::Le => ComparisonOp::Le,
                Relation::Ge => ComparisonOp::Ge,
                Relation::Eq => ComparisonOp::Eq,
            };
            let terms: Vec<(Variable, f64)> = m.into_iter().map(|(j, a)| (vars[j], a)).collect();
            problem.add_constraint(terms.as_slice(), op, rhs);
        }
        Some(Model { problem, vars })
    }

    fn objective<S: Scalar>(lp: &LinearProgram<S>, x: &[S]) -> S {
        x.iter().zip(&lp.objective).fold(S::zero(), |acc, (a, c)| acc + a.clone() * c.clone())
    }

    /// `None` asks the caller to fall back to the dense tableau.
    pub(super) fn solve_lp<S: Scalar>(lp: &LinearProgram<S>) -> Option<LpOutcome<S>> {
        let Some(model) = build(lp, None) else { return Some(LpOutcome::Infeasible) };
        match model.problem.solve() {
            Ok(SolveOutcome::Solution(sol)) => {
                let x: Vec<S> = model.vars.iter().map(|&v| S::from_f64(sol.var_value(v))).collect();
                let value = objective(lp, &x);
                Some(LpOutcome::Optimal { x, value })
            }
            Ok(SolveOutcome::Interrupted(_)) => None,
            Err(microlp::Error::Infeasible) => Some(LpOutcome::Infeasible),
            Err(microlp::Error::Unbounded) => Some(LpOutcome::Unbounded),
            Err(_) => None,
        }
    }

    pub(super) fn solve_mip<S: Scalar>(lp: &LinearProgram<S>, integer: &[bool], node_limit: usize) -> Option<IlpOutcome<S>> {
        let empty = |status| IlpOutcome { status, x: None, value: None, root_bound: None, root_integral: false, nodes: 1 };
        let (x, value) = match solve_lp(lp)? {
            LpOutcome::Optimal { x, value } => (x, value),
            LpOutcome::Infeasible => return Some(empty(IlpStatus::Infeasible)),
            LpOutcome::Unbounded => return Some(empty(IlpStatus::Unbounded)),
        };
        let root_integral = (0..lp.n_vars).all(|j| !integer[j] || x[j].is_integral());
        if root_integral {
            let x: Vec<S> = x.iter().zip(integer).map(|(v, &i)| if i { S::from_f64(v.to_f64().round()) } else { v.clone() }).collect();
            let value = objective(lp, &x);
            return Some(IlpOutcome {
                status: IlpStatus::Optimal,
                x: Some(x),
                value: Some(value.clone()),
                root_bound: Some(value),
                root_integral,
                nodes: 1,
            });
        }
        let Some(model) = build(lp, Some(integer)) else { return Some(empty(IlpStatus::Infeasible)) };
        let mut opts = SolveOptions::default();
        opts.node_limit = Some(node_limit as u64);
        let root_bound = Some(value);
        match model.problem.solve_with(opts) {
            Ok(SolveOutcome::Solution(sol)) => {
                let nodes = sol.stats().nodes_solved as usize + 1;
                let x: Vec<S> = model
                    .vars
                    .iter()
                    .zip(integer)
                    .map(|(&v, &i)| {
                        let a = sol.var_value(v);
                        S::from_f64(if i { a.round() } else { a })
                    })
                    .collect();
                let value = objective(lp, &x);
                let status = if sol.status() == SolutionStatus::Optimal { IlpStatus::Optimal } else { IlpStatus::NodeLimit };
                Some(IlpOutcome { status, x: Some(x), value: Some(value), root_bound, root_integral, nodes })
            }
            Ok(SolveOutcome::Interrupted(i)) => Some(IlpOutcome {
                status: IlpStatus::NodeLimit,
                x: None,
                value: None,
                root_bound,
                root_integral,
                nodes: i.stats().nodes_solved as usize + 1,
            }),
            Err(microlp::Error::Infeasible) => Some(IlpOutcome { root_bound, ..empty(IlpStatus::Infeasible) }),
            Err(microlp::Error::Unbounded) => Some(IlpOutcome { root_bound, ..empty(IlpStatus::Unbounded) }),
            Err(_) => None,
        }
    }
}

pub fn rational(v: f64) -> BigRational {
    <BigRational as Scalar>::from_f64(v)
}

pub fn rational_int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn small_lp_exact() {
        // min -x - y  s.t. x + 2y <= 4, 3x + y <= 6
        let mut lp = LinearProgram::<BigRational>::new(2);
        lp.objective = vec![q(-1, 1), q(-1, 1)];
        lp.add(vec![(0, q(1, 1)), (1, q(2, 1))], Relation::Le, q(4, 1));
        lp.add(vec![(0, q(3, 1)), (1, q(1, 1))], Relation::Le, q(6, 1));
        match lp.solve() {
            LpOutcome::Optimal { x, value } => {
                assert_eq!(x, vec![q(8, 5), q(6, 5)]);
                assert_eq!(value, q(-14, 5));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + y s.t. x + y = 3, x >= 1, y >= 1.5
        let mut lp = LinearProgram::<f64>::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.add(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 3.0);
        lp.add(vec![(0, 1.0)], Relation::Ge, 1.0);
        lp.add(vec![(1, 1.0)], Relation::Ge, 1.5);
        match lp.solve() {
            LpOutcome::Optimal { value, .. } => assert!((value - 3.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::<f64>::new(1);
        lp.add(vec![(0, 1.0)], Relation::Le, -1.0);
        assert_eq!(lp.solve(), LpOutcome::Infeasible);
        let mut lp = LinearProgram::<f64>::new(1);
        lp.objective = vec![-1.0];
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn negative_rhs_equality() {
        // x - y = -2, min x + y => x = 0, y = 2
        let mut lp = LinearProgram::<BigRational>::new(2);
        lp.objective = vec![q(1, 1), q(1, 1)];
        lp.add(vec![(0, q(1, 1)), (1, q(-1, 1))], Relation::Eq, q(-2, 1));
        match lp.solve() {
            LpOutcome::Optimal { x, .. } => assert_eq!(x, vec![q(0, 1), q(2, 1)]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn knapsack_ilp() {
        // max 5a + 4b + 3c s.t. 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8
        let mut lp = LinearProgram::<BigRational>::new(3);
        lp.objective = vec![q(-5, 1), q(-4, 1), q(-3, 1)];
        lp.add(vec![(0, q(2, 1)), (1, q(3, 1)), (2, q(1, 1))], Relation::Le, q(5, 1));
        lp.add(vec![(0, q(4, 1)), (1, q(1, 1)), (2, q(2, 1))], Relation::Le, q(11, 1));
        lp.add(vec![(0, q(3, 1)), (1, q(4, 1)), (2, q(2, 1))], Relation::Le, q(8, 1));
        let out = solve_ilp(&lp, &[true, true, true], 10_000);
        assert_eq!(out.status, IlpStatus::Optimal);
        assert_eq!(out.value.unwrap(), q(-13, 1));
    }

    #[test]
    fn ilp_gap_needs_branching() {
        // min -x s.t. 2x <= 3, x integer => x = 1
        let mut lp = LinearProgram::<BigRational>::new(1);
        lp.objective = vec![q(-1, 1)];
        lp.add(vec![(0, q(2, 1))], Relation::Le, q(3, 1));
        let out = solve_ilp(&lp, &[true], 100);
        assert_eq!(out.value.unwrap(), q(-1, 1));
        assert!(!out.root_integral);
        assert_eq!(out.root_bound.unwrap(), q(-3, 2));
    }
}
