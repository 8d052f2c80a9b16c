//! Integer programs over chains: unknown chains on cell lists with a linear
//! (boundary-type) constraint `Σ A_j x_j = t` in the coefficient group and a
//! mass or size objective.
//!
//! Over `Z/2` each row is encoded by its parity polytope, whose relaxation is
//! much tighter than a lifted congruence. Other groups split `x = p - n` and
//! lift congruences with free integer multipliers.

use num_rational::BigRational;

use crate::coeff::{CoeffGroup, GroupKind, NormSpec};
use crate::lp::{solve_ilp, IlpStatus, LinearProgram, LpOutcome, Relation, Scalar};

const PARITY_ROW_LIMIT: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Objective {
    Mass,
    Size,
}

/// Arithmetic used by the simplex core.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arith {
    /// Exact rationals for small programs, floats above a size threshold.
    #[default]
    Auto,
    Exact,
    Float,
}

/// One unknown chain: per cell, a weight and the `(row, coefficient)` entries
/// of its column.
#[derive(Debug, Clone, Default)]
pub(crate) struct Block {
    pub weights: Vec<f64>,
    pub columns: Vec<Vec<(usize, i64)>>,
}

#[derive(Debug, Clone)]
pub(crate) struct ChainProgram {
    pub group: CoeffGroup,
    pub rhs: Vec<i64>,
    pub blocks: Vec<Block>,
    pub objective: Objective,
    /// Coefficient bound for `Z` (needed when an indicator is required).
    pub coef_box: Option<i64>,
}

#[derive(Debug, Clone)]
pub(crate) struct ProgramSolution {
    pub status: IlpStatus,
    pub values: Option<Vec<Vec<i64>>>,
    pub root_bound: Option<f64>,
    pub nodes: usize,
}

enum Layout {
    Parity,
    Split { offsets: Vec<usize> },
}

struct Built<S> {
    lp: LinearProgram<S>,
    integer: Vec<bool>,
    layout: Layout,
}

const DEFAULT_BOX: i64 = 3;

/// `Auto` keeps exact rationals only for toy programs (cells times columns).
const EXACT_AUTO_LIMIT: usize = 400;

impl ChainProgram {
    fn n_cells(&self) -> usize {
        self.blocks.iter().map(|b| b.weights.len()).sum()
    }

    fn rows(&self) -> usize {
        self.rhs.len()
    }

    fn row_members(&self) -> Vec<Vec<(usize, i64)>> {
        let mut rows = vec![Vec::new(); self.rows()];
        let mut v = 0;
        for b in &self.blocks {
            for col in &b.columns {
                for &(r, c) in col {
                    rows[r].push((v, c));
                }
                v += 1;
            }
        }
        rows
    }

    fn weight_of(&self, v: usize) -> f64 {
        let mut v = v;
        for b in &self.blocks {
            if v < b.weights.len() {
                return b.weights[v];
            }
            v -= b.weights.len();
        }
        unreachable!()
    }

    fn unit_cost(&self) -> f64 {
        match (self.objective, self.group.norm_spec()) {
            (Objective::Size, _) => 1.0,
            (Objective::Mass, NormSpec::Uniform(c)) => c,
            (Objective::Mass, NormSpec::Standard) => 1.0,
        }
    }

    fn build<S: Scalar>(&self) -> Built<S> {
        let n = self.n_cells();
        let members = self.row_members();
        let unit = self.unit_cost();
        if self.group.kind() == GroupKind::ModQ(2) {
            let odd: Vec<Vec<usize>> =
                members.iter().map(|m| m.iter().filter(|(_, c)| c.rem_euclid(2) == 1).map(|(v, _)| *v).collect()).collect();
            if odd.iter().all(|o| o.len() <= PARITY_ROW_LIMIT) {
                let mut lp = LinearProgram::new(n);
                for v in 0..n {
                    lp.objective[v] = S::from_f64(self.weight_of(v) * unit);
                    lp.add(vec![(v, S::one())], Relation::Le, S::one());
                }
                for (r, vars) in odd.iter().enumerate() {
                    let t = self.rhs[r].rem_euclid(2) as usize;
                    parity_rows(&mut lp, vars, t);
                }
                return Built { lp, integer: vec![true; n], layout: Layout::Parity };
            }
        }
        let q = self.group.modulus();
        let need_indicator = self.objective == Objective::Size || matches!(self.group.norm_spec(), NormSpec::Uniform(_));
        let bound = match q {
            Some(m) => Some((m / 2) as i64),
            None => self.coef_box.or(need_indicator.then_some(DEFAULT_BOX)),
        };
        let per = if need_indicator { 3 } else { 2 };
        let n_mult = if q.is_some() { self.rows() } else { 0 };
        let total = per * n + n_mult;
        let mut lp = LinearProgram::new(total);
        for v in 0..n {
            let (p, m) = (per * v, per * v + 1);
            let w = self.weight_of(v) * unit;
            if need_indicator {
                let z = per * v + 2;
                lp.objective[z] = S::from_f64(w);
                let big = S::from_i64(bound.expect("indicator needs a bound"));
                lp.add(vec![(p, S::one()), (z, -big.clone())], Relation::Le, S::zero());
                lp.add(vec![(m, S::one()), (z, -big)], Relation::Le, S::zero());
                lp.add(vec![(z, S::one())], Relation::Le, S::one());
            } else {
                lp.objective[p] = S::from_f64(w);
                lp.objective[m] = S::from_f64(w);
                if let Some(b) = bound {
                    lp.add(vec![(p, S::one())], Relation::Le, S::from_i64(b));
                    lp.add(vec![(m, S::one())], Relation::Le, S::from_i64(b));
                }
            }
        }
        for (r, m) in members.iter().enumerate() {
            let mut coeffs: Vec<(usize, S)> = Vec::new();
            for &(v, c) in m {
                coeffs.push((per * v, S::from_i64(c)));
                coeffs.push((per * v + 1, S::from_i64(-c)));
            }
            let mut rhs = self.rhs[r];
            if let Some(q) = q {
                // multiplier w ∈ [-W, W] stored as w + W ≥ 0
                let q = q as i64;
                let reach: i64 = m.iter().map(|(_, c)| c.abs()).sum::<i64>() * bound.unwrap_or(0);
                let big = (reach + q) / q + 1;
                let w = per * n + r;
                coeffs.push((w, S::from_i64(-q)));
                lp.add(vec![(w, S::one())], Relation::Le, S::from_i64(2 * big));
                rhs = rhs.rem_euclid(q) - q * big;
            }
            lp.add(coeffs, Relation::Eq, S::from_i64(rhs));
        }
        let offsets = (0..n).map(|v| per * v).collect();
        Built { lp, integer: vec![true; total], layout: Layout::Split { offsets } }
    }

    /// Objective value of an assignment, from group norms.
    #[cfg(test)]
    pub fn evaluate(&self, values: &[Vec<i64>]) -> f64 {
        let mut total = 0.0;
        for (b, vals) in self.blocks.iter().zip(values) {
            for (w, v) in b.weights.iter().zip(vals) {
                let g = self.group.canon(*v);
                if g != 0 {
                    total += w * match self.objective {
                        Objective::Size => 1.0,
                        Objective::Mass => self.group.norm_of(g),
                    };
                }
            }
        }
        total
    }

    fn extract<S: Scalar>(&self, layout: &Layout, x: &[S]) -> Vec<Vec<i64>> {
        let round = |s: &S| s.to_f64().round() as i64;
        let mut flat = Vec::with_capacity(self.n_cells());
        match layout {
            Layout::Parity => flat.extend(x[..self.n_cells()].iter().map(round)),
            Layout::Split { offsets } => {
                for &o in offsets {
                    flat.push(self.group.canon(round(&x[o]) - round(&x[o + 1])));
                }
            }
        }
        let mut out = Vec::new();
        let mut it = flat.into_iter();
        for b in &self.blocks {
            out.push(it.by_ref().take(b.weights.len()).collect());
        }
        out
    }

    fn exact_small(&self, arith: Arith) -> bool {
        match arith {
            Arith::Exact => true,
            Arith::Float => false,
            Arith::Auto => self.n_cells() * (self.rows() + self.n_cells()) <= EXACT_AUTO_LIMIT,
        }
    }

    pub fn solve(&self, relax_only: bool, node_limit: usize, arith: Arith) -> ProgramSolution {
        if self.exact_small(arith) {
            self.solve_with::<BigRational>(relax_only, node_limit)
        } else {
            self.solve_with::<f64>(relax_only, node_limit)
        }
    }

    fn solve_with<S: Scalar>(&self, relax_only: bool, node_limit: usize) -> ProgramSolution {
        let built: Built<S> = self.build();
        if relax_only {
            return match built.lp.solve() {
                LpOutcome::Optimal { x, value } => {
                    let integral = x.iter().all(|v| v.is_integral());
                    let values = integral.then(|| self.extract(&built.layout, &x));
                    ProgramSolution {
                        status: IlpStatus::Optimal,
                        values,
                        root_bound: Some(value.to_f64()),
                        nodes: 1,
                    }
                }
                LpOutcome::Infeasible => ProgramSolution::empty(IlpStatus::Infeasible),
                LpOutcome::Unbounded => ProgramSolution::empty(IlpStatus::Unbounded),
            };
        }
        let out = solve_ilp(&built.lp, &built.integer, node_limit);
        let values = out.x.as_ref().map(|x| self.extract(&built.layout, x));
        ProgramSolution {
            status: out.status,
            values,
            root_bound: out.root_bound.map(|b| b.to_f64()),
            nodes: out.nodes,
        }
    }
}

impl ProgramSolution {
    fn empty(status: IlpStatus) -> Self {
        ProgramSolution { status, values: None, root_bound: None, nodes: 1 }
    }
}

/// Facets of the parity polytope `{x ∈ [0,1]^V : Σx ≡ t mod 2}`.
fn parity_rows<S: Scalar>(lp: &mut LinearProgram<S>, vars: &[usize], t: usize) {
    let k = vars.len();
    if k == 0 {
        if t == 1 {
            // 0 >= 1
            lp.add(vec![], Relation::Ge, S::one());
        }
        return;
    }
    for mask in 0u32..(1u32 << k) {
        let size = mask.count_ones() as usize;
        if size % 2 == t {
            continue;
        }
        let coeffs: Vec<(usize, S)> = vars
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, if mask >> i & 1 == 1 { S::one() } else { -S::one() }))
            .collect();
        lp.add(coeffs, Relation::Le, S::from_i64(size as i64 - 1));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // path graph 0-1-2 with edges e0=(0,1), e1=(1,2) plus a long edge e2=(0,2)
    fn path_program(group: CoeffGroup, objective: Objective) -> ChainProgram {
        let columns = vec![vec![(0, -1), (1, 1)], vec![(1, -1), (2, 1)], vec![(0, -1), (2, 1)]];
        ChainProgram {
            group,
            rhs: vec![-1, 0, 1],
            blocks: vec![Block { weights: vec![1.0, 1.0, 3.0], columns }],
            objective,
            coef_box: None,
        }
    }

    #[test]
    fn shortest_route_all_groups() {
        for g in [CoeffGroup::integers(), CoeffGroup::z2(), CoeffGroup::mod_q(3).unwrap()] {
            for obj in [Objective::Mass, Objective::Size] {
                for arith in [Arith::Exact, Arith::Float] {
                    let p = path_program(g, obj);
                    let s = p.solve(false, 1000, arith);
                    assert_eq!(s.status, IlpStatus::Optimal);
                    assert_eq!(s.values.as_ref().map(|v| p.evaluate(v)), Some(2.0), "{g} {obj:?}");
                    let v = &s.values.unwrap()[0];
                    assert_eq!(g.canon(v[2]), 0);
                }
            }
        }
    }

    #[test]
    fn infeasible_parity() {
        let p = ChainProgram {
            group: CoeffGroup::z2(),
            rhs: vec![1],
            blocks: vec![Block { weights: vec![1.0], columns: vec![vec![]] }],
            objective: Objective::Mass,
            coef_box: None,
        };
        assert_eq!(p.solve(false, 10, Arith::Exact).status, IlpStatus::Infeasible);
    }
}
