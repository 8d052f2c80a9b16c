//! Cellular homology over `Z` and `Z/q` through Smith normal form.
//!
//! On a finite complex every homology theory of interest here agrees with
//! cellular homology, so Čech-type spanning conditions are decided by the
//! computations below. Homology is computed as a lattice quotient
//! `L1 / L2` with `L1` the relative cycles and `L2` the relative boundaries
//! (plus `q Z^n` for `Z/q`), which gives generators and class coordinates
//! along with the group structure.
//!
//! For `Z/q` coefficients the group is reported as a `Z/q`-module:
//! `free_rank` counts summands isomorphic to `Z/q` and `torsion` lists the
//! orders of proper cyclic summands.

use crate::chain::Chain;
use crate::coeff::CoeffGroup;
use crate::complex::{CellComplex, Subcomplex};
use crate::error::{Error, Result};
use crate::intmat::{self, LatticeQuotient};
use std::collections::BTreeSet;

/// Coordinates of a class in the generator basis of a [`HomologyGroup`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassVector {
    pub coords: Vec<i128>,
    /// Order of each coordinate (`0` = infinite).
    pub orders: Vec<i128>,
}

impl ClassVector {
    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| *c == 0)
    }
}

#[derive(Debug, Clone)]
pub struct HomologyGroup {
    pub dim: usize,
    pub group: CoeffGroup,
    pub free_rank: usize,
    pub torsion: Vec<i128>,
    pub basis_cycles: Vec<Chain>,
    pub reduced: bool,
    orders: Vec<i128>,
    cells: Vec<usize>,
    quotient: LatticeQuotient,
    space: Subcomplex,
    rel: Subcomplex,
}

impl HomologyGroup {
    /// Order of each generator (`0` = infinite).
    pub fn orders(&self) -> &[i128] {
        &self.orders
    }

    pub fn is_trivial(&self) -> bool {
        self.orders.is_empty()
    }

    /// Number of generators.
    pub fn rank(&self) -> usize {
        self.orders.len()
    }

    /// Class of a (relative) cycle.
    pub fn classify(&self, z: &Chain) -> Result<ClassVector> {
        if z.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!("{}-chain in degree {}", z.dim(), self.dim)));
        }
        if z.group() != self.group {
            return Err(Error::GroupMismatch(z.group().short_name(), self.group.short_name()));
        }
        for (id, _) in z.iter() {
            if !self.space.contains(self.dim, id) {
                return Err(Error::precondition(format!("{}-cell {id} is outside the complex", self.dim)));
            }
        }
        let x: Vec<i128> = self.cells.iter().map(|&c| z.get(c) as i128).collect();
        let coords = self
            .quotient
            .classify(&x)?
            .ok_or_else(|| Error::precondition("chain is not a cycle relative to the subcomplex"))?;
        Ok(ClassVector { coords, orders: self.orders.clone() })
    }

    pub fn space(&self) -> &Subcomplex {
        &self.space
    }

    pub fn relative_to(&self) -> &Subcomplex {
        &self.rel
    }
}

fn ids(sub: &Subcomplex, rel: &Subcomplex, k: usize) -> BTreeSet<usize> {
    sub.cells.get(k).map_or_else(BTreeSet::new, |s| s.iter().filter(|&&c| !rel.contains(k, c)).copied().collect())
}

/// `H_k(X, B; G)` for subcomplexes `B ⊆ X` of `K`. With `reduced` and empty
/// `B`, degree 0 uses the augmented complex.
pub fn homology_of(
    k_cx: &CellComplex,
    x: &Subcomplex,
    b: &Subcomplex,
    k: usize,
    group: CoeffGroup,
    reduced: bool,
) -> Result<HomologyGroup> {
    if !k_cx.is_closed(x) {
        return Err(Error::precondition("X is not a subcomplex"));
    }
    if !k_cx.is_closed(b) || !b.is_subset_of(x) {
        return Err(Error::precondition("B is not a subcomplex of X"));
    }
    let reduced = reduced && b.count() == 0;
    let cols = ids(x, b, k);
    let higher = ids(x, b, k + 1);
    let a: intmat::IMat = if k == 0 {
        if reduced {
            vec![vec![1; cols.len()]]
        } else {
            Vec::new()
        }
    } else {
        k_cx.boundary_submatrix(k, &ids(x, b, k - 1), &cols)
    };
    let bm = k_cx.boundary_submatrix(k + 1, &cols, &higher);
    let q = group.modulus();
    let quotient = LatticeQuotient::new(&a, cols.len(), &bm, higher.len(), q)?;
    let cells: Vec<usize> = cols.iter().copied().collect();
    let mut basis_cycles = Vec::new();
    for g in &quotient.generators {
        basis_cycles.push(Chain::from_terms(
            group,
            k,
            cells.iter().zip(g).filter(|(_, v)| **v != 0).map(|(c, v)| Ok((*c, i64::try_from(*v).map_err(|_| Error::Overflow)?))).collect::<Result<Vec<_>>>()?,
        )?);
    }
    let orders = quotient.orders.clone();
    let (free_rank, torsion) = match q {
        None => (orders.iter().filter(|d| **d == 0).count(), orders.iter().filter(|d| **d > 1).copied().collect()),
        Some(q) => {
            let q = q as i128;
            (orders.iter().filter(|d| **d == q).count(), orders.iter().filter(|d| **d > 1 && **d < q).copied().collect())
        }
    };
    Ok(HomologyGroup {
        dim: k,
        group,
        free_rank,
        torsion,
        basis_cycles,
        reduced,
        orders,
        cells,
        quotient,
        space: x.clone(),
        rel: b.clone(),
    })
}

/// `H_k(K; G)`.
pub fn homology(k_cx: &CellComplex, k: usize, group: CoeffGroup) -> Result<HomologyGroup> {
    homology_of(k_cx, &k_cx.full_subcomplex(), &k_cx.empty_subcomplex(), k, group, false)
}

/// `H_k(X, B; G)` with `X` the whole complex.
pub fn relative_homology(k_cx: &CellComplex, b: &Subcomplex, k: usize, group: CoeffGroup) -> Result<HomologyGroup> {
    homology_of(k_cx, &k_cx.full_subcomplex(), b, k, group, false)
}

/// Matrix of the inclusion-induced map `H_k(B) -> H_k(E)` (columns are the
/// images of the generators of `H_k(B)`).
#[derive(Debug, Clone)]
pub struct InducedMap {
    pub source: HomologyGroup,
    pub target: HomologyGroup,
    pub matrix: Vec<Vec<i128>>,
}

pub fn induced_map(
    k_cx: &CellComplex,
    b: &Subcomplex,
    e: &Subcomplex,
    k: usize,
    group: CoeffGroup,
    reduced: bool,
) -> Result<InducedMap> {
    if !b.is_subset_of(e) {
        return Err(Error::precondition("B is not contained in E"));
    }
    let empty = k_cx.empty_subcomplex();
    let source = homology_of(k_cx, b, &empty, k, group, reduced)?;
    let target = homology_of(k_cx, e, &empty, k, group, reduced)?;
    let mut matrix = vec![vec![0i128; source.rank()]; target.rank()];
    for (j, z) in source.basis_cycles.iter().enumerate() {
        let c = target.classify(z)?;
        for (i, v) in c.coords.iter().enumerate() {
            matrix[i][j] = *v;
        }
    }
    Ok(InducedMap { source, target, matrix })
}

fn check_in(k_cx: &CellComplex, z: &Chain, sub: &Subcomplex, what: &str) -> Result<()> {
    if z.iter().any(|(id, _)| !sub.contains(z.dim(), id)) {
        return Err(Error::precondition(format!("chain is not supported in {what}")));
    }
    if z.dim() > 0 && !z.boundary(k_cx)?.is_zero() {
        return Err(Error::precondition("chain is not a cycle"));
    }
    Ok(())
}

/// Whether every cycle of `l` (cycles in `B`) bounds in `E`, i.e. whether
/// `E` spans the subgroup generated by `l`.
pub fn spans(k_cx: &CellComplex, e: &Subcomplex, b: &Subcomplex, l: &[Chain], group: CoeffGroup, reduced: bool) -> Result<bool> {
    if !b.is_subset_of(e) {
        return Err(Error::precondition("B is not contained in E"));
    }
    let Some(first) = l.iter().find(|z| !z.is_zero()) else { return Ok(true) };
    let k = first.dim();
    for z in l {
        if z.dim() != k {
            return Err(Error::DimensionMismatch("generators of mixed degree".into()));
        }
        check_in(k_cx, z, b, "B")?;
    }
    let h = homology_of(k_cx, e, &k_cx.empty_subcomplex(), k, group, reduced)?;
    for z in l {
        if !h.classify(z)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Solves `∂S = T` with `S` supported in `within`; returns the witness.
pub fn is_boundary(k_cx: &CellComplex, t: &Chain, within: &Subcomplex) -> Result<(bool, Option<Chain>)> {
    if t.dim() > 0 && !t.boundary(k_cx)?.is_zero() {
        return Err(Error::precondition("chain is not a cycle"));
    }
    if t.is_zero() {
        return Ok((true, Some(Chain::zero(t.group(), t.dim() + 1))));
    }
    let k = t.dim();
    if t.iter().any(|(id, _)| !within.contains(k, id)) {
        return Ok((false, None));
    }
    let rows: BTreeSet<usize> = within.cells.get(k).cloned().unwrap_or_default();
    let cols: BTreeSet<usize> = within.cells.get(k + 1).cloned().unwrap_or_default();
    let a = k_cx.boundary_submatrix(k + 1, &rows, &cols);
    let snf = intmat::snf(&a, cols.len())?;
    let rhs: Vec<i128> = rows.iter().map(|&r| t.get(r) as i128).collect();
    match intmat::solve(&snf, &rhs, t.group().modulus())? {
        None => Ok((false, None)),
        Some(y) => {
            let mut s = Chain::zero(t.group(), k + 1);
            for (c, v) in cols.iter().zip(&y) {
                if *v != 0 {
                    s.add_term(*c, i64::try_from(*v).map_err(|_| Error::Overflow)?)?;
                }
            }
            if s.boundary(k_cx)? != *t {
                return Err(Error::precondition("boundary witness failed verification"));
            }
            Ok((true, Some(s)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{GridKey, GridSpec};

    fn annulus() -> (CellComplex, Subcomplex) {
        let k = CellComplex::dyadic_grid(&GridSpec::unit(2, 2)).unwrap();
        let seeds: Vec<(usize, usize)> = (0..k.count(2))
            .filter(|&f| {
                let a = &k.cell(2, f).grid.as_ref().unwrap().anchor;
                !(a[0] >= 1 && a[0] <= 2 && a[1] >= 1 && a[1] <= 2)
            })
            .map(|f| (2, f))
            .collect();
        let (sub, _) = k.closure(&seeds).unwrap();
        (k, sub)
    }

    #[test]
    fn contractible_square() {
        let k = CellComplex::dyadic_grid(&GridSpec::unit(2, 1)).unwrap();
        let h0 = homology(&k, 0, CoeffGroup::integers()).unwrap();
        assert_eq!((h0.free_rank, h0.torsion.len()), (1, 0));
        assert!(homology(&k, 1, CoeffGroup::integers()).unwrap().is_trivial());
    }

    #[test]
    fn annulus_has_one_loop() {
        let (k, a) = annulus();
        let (ka, _, _) = k.extract(&a).unwrap();
        for g in [CoeffGroup::integers(), CoeffGroup::z2()] {
            let h = homology(&ka, 1, g).unwrap();
            assert_eq!(h.free_rank, 1);
            assert!(h.basis_cycles[0].boundary(&ka).unwrap().is_zero());
        }
    }

    #[test]
    fn relative_square() {
        let k = CellComplex::dyadic_grid(&GridSpec::unit(2, 0)).unwrap();
        let b = k.skeleton_subcomplex(1);
        let h = relative_homology(&k, &b, 2, CoeffGroup::integers()).unwrap();
        assert_eq!(h.free_rank, 1);
        let full = k.full_subcomplex();
        for d in 1..=2 {
            assert!(relative_homology(&k, &full, d, CoeffGroup::integers()).unwrap().is_trivial());
        }
    }

    #[test]
    fn two_points_span() {
        let k = CellComplex::dyadic_grid(&GridSpec::unit(2, 1)).unwrap();
        let p = k.cell_id(&GridKey { anchor: vec![0, 0], axes: vec![] }).unwrap();
        let q = k.cell_id(&GridKey { anchor: vec![2, 2], axes: vec![] }).unwrap();
        let g = CoeffGroup::integers();
        let (b, _) = k.closure(&[(0, p), (0, q)]).unwrap();
        let l = vec![Chain::from_pairs(&k, g, 0, [(p, 1), (q, -1)]).unwrap()];
        assert!(spans(&k, &k.full_subcomplex(), &b, &l, g, true).unwrap());
        assert!(!spans(&k, &b, &b, &l, g, true).unwrap());
        assert!(spans(&k, &b, &b, &[Chain::zero(g, 0)], g, true).unwrap());
    }

    #[test]
    fn face_boundary_bounds() {
        let k = CellComplex::dyadic_grid(&GridSpec::unit(2, 0)).unwrap();
        let g = CoeffGroup::integers();
        let t = Chain::cell(g, 2, 0, 1).boundary(&k).unwrap();
        let (ok, w) = is_boundary(&k, &t, &k.full_subcomplex()).unwrap();
        assert!(ok);
        assert_eq!(w.unwrap(), Chain::cell(g, 2, 0, 1));
        let (ok, _) = is_boundary(&k, &t, &k.skeleton_subcomplex(1)).unwrap();
        assert!(!ok);
        assert!(is_boundary(&k, &Chain::zero(g, 1), &k.full_subcomplex()).unwrap().0);
    }

    #[test]
    fn euler_characteristic_identity() {
        let (k, a) = annulus();
        let (ka, _, _) = k.extract(&a).unwrap();
        let chi: i64 = (0..=2).map(|d| {
            let r = homology(&ka, d, CoeffGroup::integers()).unwrap().free_rank as i64;
            if d % 2 == 0 { r } else { -r }
        }).sum();
        assert_eq!(chi, ka.euler_characteristic());
    }

    #[test]
    fn torsion_of_projective_plane() {
        // minimal 6-vertex triangulation of RP^2
        let tris = [
            [0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 5], [0, 5, 1],
            [1, 2, 4], [2, 3, 5], [3, 4, 1], [4, 5, 2], [5, 1, 3],
        ];
        let coords: Vec<Vec<f64>> = (0..6).map(|i| {
            let t = i as f64;
            vec![t.cos(), t.sin(), (2.0 * t).cos(), (3.0 * t).sin(), t * t * 0.1]
        }).collect();
        let k = CellComplex::from_simplices(coords, &tris.iter().map(|t| t.to_vec()).collect::<Vec<_>>()).unwrap();
        let h1 = homology(&k, 1, CoeffGroup::integers()).unwrap();
        assert_eq!(h1.free_rank, 0);
        assert_eq!(h1.torsion, vec![2]);
        let h1z2 = homology(&k, 1, CoeffGroup::z2()).unwrap();
        assert_eq!(h1z2.free_rank, 1);
        assert_eq!(homology(&k, 2, CoeffGroup::z2()).unwrap().free_rank, 1);
        assert!(homology(&k, 2, CoeffGroup::integers()).unwrap().is_trivial());
        let h1z4 = homology(&k, 1, CoeffGroup::mod_q(4).unwrap()).unwrap();
        assert_eq!(h1z4.torsion, vec![2]);
    }
}
