//! Integer matrices: Smith normal form with unimodular transforms, linear
//! solves over `Z` and `Z/q`, and finitely generated lattice quotients.
//!
//! The elimination runs in `i128` with checked arithmetic and restarts in
//! arbitrary precision when an intermediate value overflows. Results are
//! returned in `i128`; a result that does not fit is reported as
//! [`Error::Overflow`].

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type IMat = Vec<Vec<i128>>;

trait SnfInt: Clone + PartialEq + std::fmt::Debug {
    fn from_i128(v: i128) -> Self;
    fn to_i128(&self) -> Option<i128>;
    fn is_zero(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn abs_lt(&self, other: &Self) -> bool;
    fn is_unit(&self) -> bool;
    fn sub_mul(&self, q: &Self, b: &Self) -> Option<Self>;
    fn neg(&self) -> Option<Self>;
    fn div_floor(&self, b: &Self) -> Self;
    fn divides(&self, b: &Self) -> bool;
}

impl SnfInt for i128 {
    fn from_i128(v: i128) -> Self {
        v
    }
    fn to_i128(&self) -> Option<i128> {
        Some(*self)
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn is_negative(&self) -> bool {
        *self < 0
    }
    fn abs_lt(&self, other: &Self) -> bool {
        self.unsigned_abs() < other.unsigned_abs()
    }
    fn is_unit(&self) -> bool {
        *self == 1 || *self == -1
    }
    fn sub_mul(&self, q: &Self, b: &Self) -> Option<Self> {
        self.checked_sub(q.checked_mul(*b)?)
    }
    fn neg(&self) -> Option<Self> {
        self.checked_neg()
    }
    fn div_floor(&self, b: &Self) -> Self {
        Integer::div_floor(self, b)
    }
    fn divides(&self, b: &Self) -> bool {
        if *self == 0 {
            *b == 0
        } else {
            b % self == 0
        }
    }
}

impl SnfInt for BigInt {
    fn from_i128(v: i128) -> Self {
        BigInt::from(v)
    }
    fn to_i128(&self) -> Option<i128> {
        ToPrimitive::to_i128(self)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn abs_lt(&self, other: &Self) -> bool {
        self.magnitude() < other.magnitude()
    }
    fn is_unit(&self) -> bool {
        self.magnitude().is_one()
    }
    fn sub_mul(&self, q: &Self, b: &Self) -> Option<Self> {
        Some(self - q * b)
    }
    fn neg(&self) -> Option<Self> {
        Some(-self)
    }
    fn div_floor(&self, b: &Self) -> Self {
        Integer::div_floor(self, b)
    }
    fn divides(&self, b: &Self) -> bool {
        if Zero::is_zero(self) {
            Zero::is_zero(b)
        } else {
            Zero::is_zero(&(b % self))
        }
    }
}

/// `u * a * v = d` with `d` diagonal, `d[i] | d[i+1]`, nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct Snf {
    pub rows: usize,
    pub cols: usize,
    pub u: IMat,
    pub u_inv: IMat,
    pub v: IMat,
    pub v_inv: IMat,
    pub diag: Vec<i128>,
    pub rank: usize,
}

struct Work<T> {
    a: Vec<Vec<T>>,
    u: Vec<Vec<T>>,
    u_inv: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    v_inv: Vec<Vec<T>>,
}

fn identity<T: SnfInt>(n: usize) -> Vec<Vec<T>> {
    (0..n).map(|i| (0..n).map(|j| T::from_i128((i == j) as i128)).collect()).collect()
}

impl<T: SnfInt> Work<T> {
    // row_i -= q * row_t
    fn row_op(&mut self, i: usize, t: usize, q: &T) -> Option<()> {
        for c in 0..self.a[0].len() {
            let v = self.a[i][c].sub_mul(q, &self.a[t][c])?;
            self.a[i][c] = v;
        }
        for c in 0..self.u.len() {
            let v = self.u[i][c].sub_mul(q, &self.u[t][c])?;
            self.u[i][c] = v;
        }
        let nq = q.neg()?;
        for r in 0..self.u_inv.len() {
            let v = self.u_inv[r][t].sub_mul(&nq, &self.u_inv[r][i])?;
            self.u_inv[r][t] = v;
        }
        Some(())
    }

    // col_j -= q * col_t
    fn col_op(&mut self, j: usize, t: usize, q: &T) -> Option<()> {
        for r in 0..self.a.len() {
            let v = self.a[r][j].sub_mul(q, &self.a[r][t])?;
            self.a[r][j] = v;
        }
        for r in 0..self.v.len() {
            let v = self.v[r][j].sub_mul(q, &self.v[r][t])?;
            self.v[r][j] = v;
        }
        let nq = q.neg()?;
        for c in 0..self.v_inv.len() {
            let v = self.v_inv[t][c].sub_mul(&nq, &self.v_inv[j][c])?;
            self.v_inv[t][c] = v;
        }
        Some(())
    }

    fn swap_rows(&mut self, i: usize, t: usize) {
        if i != t {
            self.a.swap(i, t);
            self.u.swap(i, t);
            for row in self.u_inv.iter_mut() {
                row.swap(i, t);
            }
        }
    }

    fn swap_cols(&mut self, j: usize, t: usize) {
        if j != t {
            for row in self.a.iter_mut() {
                row.swap(j, t);
            }
            for row in self.v.iter_mut() {
                row.swap(j, t);
            }
            self.v_inv.swap(j, t);
        }
    }

    fn negate_row(&mut self, t: usize) -> Option<()> {
        for c in 0..self.a[0].len() {
            self.a[t][c] = self.a[t][c].neg()?;
        }
        for c in 0..self.u.len() {
            self.u[t][c] = self.u[t][c].neg()?;
        }
        for r in 0..self.u_inv.len() {
            self.u_inv[r][t] = self.u_inv[r][t].neg()?;
        }
        Some(())
    }

    fn pivot_in(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize)> = None;
        for i in t..self.a.len() {
            for j in t..self.a[0].len() {
                let x = &self.a[i][j];
                if x.is_zero() {
                    continue;
                }
                if x.is_unit() {
                    return Some((i, j));
                }
                match best {
                    Some((bi, bj)) if !x.abs_lt(&self.a[bi][bj]) => {}
                    _ => best = Some((i, j)),
                }
            }
        }
        best
    }

    fn run(&mut self) -> Option<usize> {
        let (m, n) = (self.a.len(), if self.a.is_empty() { 0 } else { self.a[0].len() });
        let mut t = 0;
        while t < m.min(n) {
            let Some((pi, pj)) = self.pivot_in(t) else { break };
            self.swap_rows(pi, t);
            self.swap_cols(pj, t);
            loop {
                let mut dirty = false;
                for i in t + 1..m {
                    if !self.a[i][t].is_zero() {
                        let q = self.a[i][t].div_floor(&self.a[t][t]);
                        self.row_op(i, t, &q)?;
                        if !self.a[i][t].is_zero() {
                            dirty = true;
                        }
                    }
                }
                for j in t + 1..n {
                    if !self.a[t][j].is_zero() {
                        let q = self.a[t][j].div_floor(&self.a[t][t]);
                        self.col_op(j, t, &q)?;
                        if !self.a[t][j].is_zero() {
                            dirty = true;
                        }
                    }
                }
                if dirty {
                    let mut best = (t, t);
                    for i in t + 1..m {
                        if !self.a[i][t].is_zero() && self.a[i][t].abs_lt(&self.a[best.0][best.1]) {
                            best = (i, t);
                        }
                    }
                    for j in t + 1..n {
                        if !self.a[t][j].is_zero() && self.a[t][j].abs_lt(&self.a[best.0][best.1]) {
                            best = (t, j);
                        }
                    }
                    self.swap_rows(best.0, t);
                    self.swap_cols(best.1, t);
                    continue;
                }
                let bad = (t + 1..m).find(|&i| (t + 1..n).any(|j| !self.a[t][t].divides(&self.a[i][j])));
                match bad {
                    Some(i) => {
                        let minus_one = T::from_i128(-1);
                        self.row_op(t, i, &minus_one)?;
                    }
                    None => break,
                }
            }
            if self.a[t][t].is_negative() {
                self.negate_row(t)?;
            }
            t += 1;
        }
        Some(t)
    }
}

fn snf_generic<T: SnfInt>(a: &IMat, cols: usize) -> Option<Snf> {
    let m = a.len();
    let conv = |x: &IMat| -> Vec<Vec<T>> { x.iter().map(|r| r.iter().map(|v| T::from_i128(*v)).collect()).collect() };
    let mut w = Work { a: conv(a), u: identity(m), u_inv: identity(m), v: identity(cols), v_inv: identity(cols) };
    let rank = if m == 0 || cols == 0 { 0 } else { w.run()? };
    let back = |x: &Vec<Vec<T>>| -> Option<IMat> { x.iter().map(|r| r.iter().map(|v| v.to_i128()).collect()).collect() };
    let diag = (0..m.min(cols)).map(|i| w.a[i][i].to_i128()).collect::<Option<Vec<_>>>()?;
    Some(Snf { rows: m, cols, u: back(&w.u)?, u_inv: back(&w.u_inv)?, v: back(&w.v)?, v_inv: back(&w.v_inv)?, diag, rank })
}

/// Smith normal form of an `m x cols` matrix (rows may be empty).
pub fn snf(a: &IMat, cols: usize) -> Result<Snf> {
    if a.iter().any(|r| r.len() != cols) {
        return Err(Error::DimensionMismatch("ragged matrix".into()));
    }
    if let Some(s) = snf_generic::<i128>(a, cols) {
        return Ok(s);
    }
    snf_generic::<BigInt>(a, cols).ok_or(Error::Overflow)
}

pub fn mat_vec(a: &IMat, x: &[i128]) -> Result<Vec<i128>> {
    a.iter()
        .map(|r| {
            r.iter().zip(x).try_fold(0i128, |acc, (p, q)| acc.checked_add(p.checked_mul(*q)?)).ok_or(Error::Overflow)
        })
        .collect()
}

fn modinv(a: i128, m: i128) -> Option<i128> {
    let e = Integer::extended_gcd(&a.rem_euclid(m), &m);
    if e.gcd != 1 {
        return None;
    }
    Some(e.x.rem_euclid(m))
}

/// Solves `a y = t` over `Z` (`q = None`) or `Z/q`; `None` when unsolvable.
pub fn solve(s: &Snf, t: &[i128], q: Option<u64>) -> Result<Option<Vec<i128>>> {
    let z = mat_vec(&s.u, t)?;
    let mut w = vec![0i128; s.cols];
    match q {
        None => {
            for (i, zi) in z.iter().enumerate() {
                if i < s.rank {
                    if zi % s.diag[i] != 0 {
                        return Ok(None);
                    }
                    w[i] = zi / s.diag[i];
                } else if *zi != 0 {
                    return Ok(None);
                }
            }
            Ok(Some(mat_vec(&s.v, &w)?))
        }
        Some(q) => {
            let q = q as i128;
            for (i, zi) in z.iter().enumerate() {
                let zi = zi.rem_euclid(q);
                if i < s.rank {
                    let d = s.diag[i].rem_euclid(q);
                    let g = Integer::gcd(&d, &q);
                    if zi % g != 0 {
                        return Ok(None);
                    }
                    let qq = q / g;
                    w[i] = if qq == 1 { 0 } else { (zi / g) * modinv(d / g, qq).expect("coprime") % qq };
                } else if zi != 0 {
                    return Ok(None);
                }
            }
            let mut y = Vec::with_capacity(s.cols);
            for row in &s.v {
                let mut acc = 0i128;
                for (a, b) in row.iter().zip(&w) {
                    acc = (acc + a.rem_euclid(q) * b) % q;
                }
                y.push(acc);
            }
            Ok(Some(y))
        }
    }
}

/// The quotient `L1 / L2` where `L1 = {x : a x = 0}` (or `a x = 0 mod q`)
/// and `L2` is spanned by the columns of `b` (plus `q Z^n` modulo `q`).
#[derive(Debug, Clone)]
pub struct LatticeQuotient {
    n: usize,
    a: IMat,
    q: Option<u64>,
    kernel: Snf,
    coord: Snf,
    summands: Vec<usize>,
    /// Order of each cyclic summand; `0` means infinite.
    pub orders: Vec<i128>,
    /// Representatives in `Z^n` of the summand generators.
    pub generators: Vec<Vec<i128>>,
}

impl LatticeQuotient {
    /// `a` is `m x n`, `b` is `n x p` (row-major).
    pub fn new(a: &IMat, n: usize, b: &IMat, p: usize, q: Option<u64>) -> Result<Self> {
        let m = a.len();
        let ext_cols = n + if q.is_some() { m } else { 0 };
        let mut ext: IMat = a.clone();
        if let Some(q) = q {
            for (i, row) in ext.iter_mut().enumerate() {
                row.extend((0..m).map(|j| if i == j { q as i128 } else { 0 }));
            }
        }
        let kernel = snf(&ext, ext_cols)?;
        let r = kernel.rank;
        let kdim = ext_cols - r;
        let mut this = LatticeQuotient {
            n,
            a: a.clone(),
            q,
            kernel,
            coord: Snf { rows: 0, cols: 0, u: vec![], u_inv: vec![], v: vec![], v_inv: vec![], diag: vec![], rank: 0 },
            summands: vec![],
            orders: vec![],
            generators: vec![],
        };
        let mut cols: Vec<Vec<i128>> = (0..p).map(|j| (0..n).map(|i| b[i][j]).collect()).collect();
        if let Some(q) = q {
            for i in 0..n {
                let mut e = vec![0; n];
                e[i] = q as i128;
                cols.push(e);
            }
        }
        let mut c: IMat = vec![Vec::with_capacity(cols.len()); kdim];
        for col in &cols {
            let coords = this.kernel_coords(col)?.ok_or_else(|| Error::precondition("boundary column is not a cycle"))?;
            for (row, v) in c.iter_mut().zip(coords) {
                row.push(v);
            }
        }
        let coord = snf(&c, cols.len())?;
        for i in 0..kdim {
            let d = if i < coord.rank { coord.diag[i] } else { 0 };
            if d != 1 {
                this.summands.push(i);
                this.orders.push(d);
                let cvec: Vec<i128> = (0..kdim).map(|k| coord.u_inv[k][i]).collect();
                let mut g = vec![0i128; n];
                for (k, ck) in cvec.iter().enumerate() {
                    if *ck == 0 {
                        continue;
                    }
                    for (row, gi) in g.iter_mut().enumerate() {
                        let v = this.kernel.v[row][r + k].checked_mul(*ck).ok_or(Error::Overflow)?;
                        *gi = gi.checked_add(v).ok_or(Error::Overflow)?;
                    }
                }
                if let Some(q) = q {
                    for gi in g.iter_mut() {
                        *gi = gi.rem_euclid(q as i128);
                    }
                }
                this.generators.push(g);
            }
        }
        this.coord = coord;
        Ok(this)
    }

    pub fn ambient(&self) -> usize {
        self.n
    }

    pub fn free_rank(&self) -> usize {
        self.orders.iter().filter(|d| **d == 0).count()
    }

    /// Coordinates in the kernel basis; `None` if `x` is not in `L1`.
    fn kernel_coords(&self, x: &[i128]) -> Result<Option<Vec<i128>>> {
        let ax = mat_vec(&self.a, x)?;
        let mut w = x.to_vec();
        match self.q {
            None => {
                if ax.iter().any(|v| *v != 0) {
                    return Ok(None);
                }
            }
            Some(q) => {
                let q = q as i128;
                if ax.iter().any(|v| v % q != 0) {
                    return Ok(None);
                }
                w.extend(ax.iter().map(|v| -v / q));
            }
        }
        let full = mat_vec(&self.kernel.v_inv, &w)?;
        Ok(Some(full[self.kernel.rank..].to_vec()))
    }

    /// Class of `x` as coordinates per summand (reduced modulo finite orders);
    /// `None` when `x` is not in `L1`.
    pub fn classify(&self, x: &[i128]) -> Result<Option<Vec<i128>>> {
        let Some(c) = self.kernel_coords(x)? else { return Ok(None) };
        let y = mat_vec(&self.coord.u, &c)?;
        Ok(Some(
            self.summands
                .iter()
                .zip(&self.orders)
                .map(|(&i, &d)| if d == 0 { y[i] } else { y[i].rem_euclid(d) })
                .collect(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(a: &IMat, cols: usize) {
        let s = snf(a, cols).unwrap();
        let m = a.len();
        let mul = |x: &IMat, y: &IMat, inner: usize, c: usize| -> IMat {
            (0..x.len()).map(|i| (0..c).map(|j| (0..inner).map(|k| x[i][k] * y[k][j]).sum()).collect()).collect()
        };
        let uav = mul(&mul(&s.u, a, m, cols), &s.v, cols, cols);
        for i in 0..m {
            for j in 0..cols {
                let want = if i == j && i < s.diag.len() { s.diag[i] } else { 0 };
                assert_eq!(uav[i][j], want);
            }
        }
        let id_m = mul(&s.u, &s.u_inv, m, m);
        let id_n = mul(&s.v, &s.v_inv, cols, cols);
        for i in 0..m {
            for j in 0..m {
                assert_eq!(id_m[i][j], (i == j) as i128);
            }
        }
        for i in 0..cols {
            for j in 0..cols {
                assert_eq!(id_n[i][j], (i == j) as i128);
            }
        }
        for w in s.diag[..s.rank].windows(2) {
            assert_eq!(w[1] % w[0], 0);
        }
    }

    #[test]
    fn snf_small() {
        let a = vec![vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]];
        check(&a, 3);
        let s = snf(&a, 3).unwrap();
        assert_eq!(s.diag, vec![2, 6, 12]);
        check(&vec![vec![6, 4], vec![4, 6], vec![0, 0]], 2);
        check(&vec![], 3);
    }

    #[test]
    fn solve_over_z_and_mod() {
        let a = vec![vec![2, 0], vec![0, 3]];
        let s = snf(&a, 2).unwrap();
        assert_eq!(solve(&s, &[4, 9], None).unwrap(), Some(vec![2, 3]));
        assert_eq!(solve(&s, &[1, 0], None).unwrap(), None);
        let y = solve(&s, &[1, 0], Some(5)).unwrap().unwrap();
        assert_eq!((2 * y[0]).rem_euclid(5), 1);
        assert_eq!(solve(&s, &[1, 0], Some(4)).unwrap(), None);
    }

    #[test]
    fn quotient_of_circle() {
        // boundary of a triangle: vertices 3, edges 3
        let d1 = vec![vec![-1, 0, 1], vec![1, -1, 0], vec![0, 1, -1]];
        let h = LatticeQuotient::new(&d1, 3, &vec![vec![]; 3], 0, None).unwrap();
        assert_eq!(h.orders, vec![0]);
        let g = &h.generators[0];
        assert!(mat_vec(&d1, g).unwrap().iter().all(|v| *v == 0));
        let h2 = LatticeQuotient::new(&d1, 3, &vec![vec![]; 3], 0, Some(2)).unwrap();
        assert_eq!(h2.orders, vec![2]);
        // H_0 over Z of the triangle
        let h0 = LatticeQuotient::new(&vec![], 3, &d1, 3, None).unwrap();
        assert_eq!(h0.orders, vec![0]);
        let c = h0.classify(&[1, 0, 0]).unwrap().unwrap();
        assert_eq!(c, h0.classify(&[0, 0, 1]).unwrap().unwrap());
    }

    #[test]
    fn torsion_detected() {
        // Z^1 / 2Z
        let h = LatticeQuotient::new(&vec![], 1, &vec![vec![2]], 1, None).unwrap();
        assert_eq!(h.orders, vec![2]);
        assert_eq!(h.classify(&[3]).unwrap().unwrap(), vec![1]);
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn snf_identity(a in proptest::collection::vec(proptest::collection::vec(-20i128..20, 4), 0..5)) {
            check(&a, 4);
        }
    }
}
