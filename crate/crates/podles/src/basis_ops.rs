//! Truncated weight-basis indexing and sparse banded (anti)linear operator
//! arithmetic on the spinor and auxiliary Hilbert spaces.
//!
//! Operators are stored column-major: for each input basis vector, the list
//! of (output index, complex entry) pairs, sorted by output index with exact
//! zeros dropped.  That makes "this identity holds with residual exactly 0"
//! the same statement as "the difference operator has no entries".

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt::Write as _;
use core::ops::Range;

use num_complex::Complex;
use num_traits::Zero;

use crate::qarith::{cmp_total, HalfInt, Scalar};

/// Complex scalar over a [`Scalar`] real type.
pub type C<R> = Complex<R>;

/// One basis vector label: level l, weight m, and the sign component.
///
/// For `Single` bases sigma is fixed to +1; for spinor bases sigma = -1/+1
/// are the two line-bundle summands; for the auxiliary space sigma is the
/// +- copy label.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct BasisPoint {
    pub l: HalfInt,
    pub m: HalfInt,
    pub sigma: i8,
}

pub type SpinorIndex = BasisPoint;
pub type HatIndex = BasisPoint;

impl BasisPoint {
    pub const fn new(l2: i32, m2: i32, sigma: i8) -> Self {
        Self { l: HalfInt::new(l2), m: HalfInt::new(m2), sigma }
    }
}

/// The three truncated basis families used by the crate.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BasisFamily {
    /// One irreducible module M_N: l = |N|, |N|+1, ..., lmax; |m| <= l.
    Single { n2: i32, lmax2: i32 },
    /// Spinor space M_{-N} + M_{+N}: as `Single` doubled by sigma, where
    /// the sigma component carries winding sigma*N.
    Spinor { n2: i32, lmax2: i32 },
    /// Auxiliary quantum-group space: l in [lmin, lmax] stepping by 1/2,
    /// n = l + m in [0, nmax], both sign copies.
    Hat { lmin2: i32, lmax2: i32, nmax: i32 },
}

/// An interned truncated basis: ordered labels, reverse lookup, and the
/// index range of each l-level.
pub struct Basis {
    pub family: BasisFamily,
    points: Vec<BasisPoint>,
    lookup: BTreeMap<(i32, i32, i8), u32>,
    levels: BTreeMap<i32, (u32, u32)>,
}

fn intern(family: BasisFamily, points: Vec<BasisPoint>) -> Arc<Basis> {
    let mut lookup = BTreeMap::new();
    let mut levels: BTreeMap<i32, (u32, u32)> = BTreeMap::new();
    for (idx, p) in points.iter().enumerate() {
        let idx = idx as u32;
        lookup.insert((p.l.twice, p.m.twice, p.sigma), idx);
        levels
            .entry(p.l.twice)
            .and_modify(|(_, end)| *end = idx + 1)
            .or_insert((idx, idx + 1));
    }
    Arc::new(Basis { family, points, lookup, levels })
}

impl Basis {
    /// Spinor basis for winding +-N/2 (`n2` = 2N), levels up to `lmax2`.
    pub fn spinor(n2: i32, lmax2: i32) -> Arc<Basis> {
        assert!(n2 >= 1, "spinor winding must be positive, got n2={n2}");
        assert!(lmax2 >= n2 && (lmax2 - n2) % 2 == 0, "lmax2 must match winding parity");
        let mut points = Vec::new();
        let mut l2 = n2;
        while l2 <= lmax2 {
            let mut m2 = -l2;
            while m2 <= l2 {
                points.push(BasisPoint::new(l2, m2, -1));
                points.push(BasisPoint::new(l2, m2, 1));
                m2 += 2;
            }
            l2 += 2;
        }
        intern(BasisFamily::Spinor { n2, lmax2 }, points)
    }

    /// Single module M_N (`n2` = 2N, any sign), levels |N| to `lmax2`/2.
    pub fn single(n2: i32, lmax2: i32) -> Arc<Basis> {
        let a2 = n2.abs();
        assert!(lmax2 >= a2 && (lmax2 - a2) % 2 == 0, "lmax2 must match |N| parity");
        let mut points = Vec::new();
        let mut l2 = a2;
        while l2 <= lmax2 {
            let mut m2 = -l2;
            while m2 <= l2 {
                points.push(BasisPoint::new(l2, m2, 1));
                m2 += 2;
            }
            l2 += 2;
        }
        intern(BasisFamily::Single { n2, lmax2 }, points)
    }

    /// Auxiliary basis |l,m>_+- with l in [lmin2, lmax2]/2 (step 1/2) and
    /// n = l+m in [0, nmax].
    pub fn hat(lmin2: i32, lmax2: i32, nmax: i32) -> Arc<Basis> {
        assert!(lmin2 <= lmax2 && nmax >= 0);
        let mut points = Vec::new();
        for l2 in lmin2..=lmax2 {
            for n in 0..=nmax {
                let m2 = 2 * n - l2;
                points.push(BasisPoint::new(l2, m2, -1));
                points.push(BasisPoint::new(l2, m2, 1));
            }
        }
        intern(BasisFamily::Hat { lmin2, lmax2, nmax }, points)
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn point(&self, idx: u32) -> BasisPoint {
        self.points[idx as usize]
    }

    pub fn index_of(&self, p: BasisPoint) -> Option<u32> {
        self.lookup.get(&(p.l.twice, p.m.twice, p.sigma)).copied()
    }

    /// Column index range of one l-level, if present.
    pub fn level_range(&self, l2: i32) -> Option<Range<usize>> {
        self.levels.get(&l2).map(|&(a, b)| a as usize..b as usize)
    }

    /// All levels in increasing l order with their index ranges.
    pub fn levels(&self) -> impl Iterator<Item = (i32, Range<usize>)> + '_ {
        self.levels.iter().map(|(&l2, &(a, b))| (l2, a as usize..b as usize))
    }

    pub fn lmax2(&self) -> i32 {
        match self.family {
            BasisFamily::Single { lmax2, .. }
            | BasisFamily::Spinor { lmax2, .. }
            | BasisFamily::Hat { lmax2, .. } => lmax2,
        }
    }

    pub fn lmin2(&self) -> i32 {
        match self.family {
            BasisFamily::Single { n2, .. } => n2.abs(),
            BasisFamily::Spinor { n2, .. } => n2,
            BasisFamily::Hat { lmin2, .. } => lmin2,
        }
    }
}

pub fn same_basis(a: &Arc<Basis>, b: &Arc<Basis>) -> bool {
    Arc::ptr_eq(a, b) || a.family == b.family
}

fn re_only<R: Scalar>(v: R) -> C<R> {
    let z = R::from_i64(0, v.prec());
    Complex::new(v, z)
}

fn abs_sq<R: Scalar>(v: &C<R>) -> R {
    v.re.clone() * v.re.clone() + v.im.clone() * v.im.clone()
}

/// Sparse banded linear operator between two interned bases.
#[derive(Clone)]
pub struct BandedOperator<R: Scalar> {
    dom: Arc<Basis>,
    cod: Arc<Basis>,
    cols: Vec<Vec<(u32, C<R>)>>,
    band2: i32,
}

/// Accumulates (row, col, value) triplets and assembles an operator with
/// sorted columns, merged duplicates, and exact zeros dropped.
pub struct OpBuilder<R: Scalar> {
    dom: Arc<Basis>,
    cod: Arc<Basis>,
    tri: Vec<(u32, u32, C<R>)>,
}

impl<R: Scalar> OpBuilder<R> {
    pub fn new(cod: Arc<Basis>, dom: Arc<Basis>) -> Self {
        Self { dom, cod, tri: Vec::new() }
    }

    pub fn push(&mut self, row: u32, col: u32, v: C<R>) {
        debug_assert!((row as usize) < self.cod.dim() && (col as usize) < self.dom.dim());
        self.tri.push((row, col, v));
    }

    pub fn push_real(&mut self, row: u32, col: u32, v: R) {
        self.push(row, col, re_only(v));
    }

    pub fn build(self) -> BandedOperator<R> {
        let mut cols: Vec<BTreeMap<u32, C<R>>> = Vec::new();
        cols.resize_with(self.dom.dim(), BTreeMap::new);
        for (row, col, v) in self.tri {
            match cols[col as usize].remove(&row) {
                Some(prev) => {
                    let sum = prev + v;
                    cols[col as usize].insert(row, sum);
                }
                None => {
                    cols[col as usize].insert(row, v);
                }
            }
        }
        let cols: Vec<Vec<(u32, C<R>)>> = cols
            .into_iter()
            .map(|m| m.into_iter().filter(|(_, v)| !v.is_zero()).collect())
            .collect();
        let band2 = band_of(&self.dom, &self.cod, &cols);
        BandedOperator { dom: self.dom, cod: self.cod, cols, band2 }
    }
}

fn band_of<R: Scalar>(dom: &Basis, cod: &Basis, cols: &[Vec<(u32, C<R>)>]) -> i32 {
    let mut band2 = 0;
    for (j, col) in cols.iter().enumerate() {
        let lj = dom.point(j as u32).l.twice;
        for (i, _) in col {
            let li = cod.point(*i).l.twice;
            band2 = band2.max((li - lj).abs());
        }
    }
    band2
}

impl<R: Scalar> BandedOperator<R> {
    pub fn zero(cod: Arc<Basis>, dom: Arc<Basis>) -> Self {
        let cols = (0..dom.dim()).map(|_| Vec::new()).collect();
        BandedOperator { dom, cod, cols, band2: 0 }
    }

    pub fn identity(basis: &Arc<Basis>, prec: R::Prec) -> Self {
        let mut b = OpBuilder::new(basis.clone(), basis.clone());
        for j in 0..basis.dim() as u32 {
            b.push_real(j, j, R::from_i64(1, prec));
        }
        b.build()
    }

    /// Diagonal operator from a per-point function.
    pub fn diagonal(basis: &Arc<Basis>, f: impl Fn(BasisPoint) -> C<R>) -> Self {
        let mut b = OpBuilder::new(basis.clone(), basis.clone());
        for j in 0..basis.dim() as u32 {
            let v = f(basis.point(j));
            b.push(j, j, v);
        }
        b.build()
    }

    pub fn dom(&self) -> &Arc<Basis> {
        &self.dom
    }

    pub fn cod(&self) -> &Arc<Basis> {
        &self.cod
    }

    /// Max |l_out - l_in| (in twice units) over stored entries.
    pub fn band2(&self) -> i32 {
        self.band2
    }

    pub fn is_zero_op(&self) -> bool {
        self.cols.iter().all(Vec::is_empty)
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    pub fn entry(&self, row: u32, col: u32) -> Option<&C<R>> {
        let col = &self.cols[col as usize];
        col.binary_search_by_key(&row, |(i, _)| *i).ok().map(|k| &col[k].1)
    }

    pub fn iter_entries(&self) -> impl Iterator<Item = (u32, u32, &C<R>)> + '_ {
        self.cols
            .iter()
            .enumerate()
            .flat_map(|(j, col)| col.iter().map(move |(i, v)| (*i, j as u32, v)))
    }

    pub fn max_abs(&self) -> R {
        let mut best = R::zero();
        for (_, _, v) in self.iter_entries() {
            let a = abs_sq(v).sqrt();
            if cmp_total(&a, &best).is_gt() {
                best = a;
            }
        }
        best
    }

    pub fn trace(&self) -> C<R> {
        assert!(same_basis(&self.dom, &self.cod), "trace needs dom == cod");
        let mut acc = C::<R>::zero();
        for (j, col) in self.cols.iter().enumerate() {
            if let Ok(k) = col.binary_search_by_key(&(j as u32), |(i, _)| *i) {
                acc = acc + col[k].1.clone();
            }
        }
        acc
    }

    /// Sum of diagonal entries over each l-level (dom == cod).
    pub fn level_diagonal_sums(&self) -> Vec<(i32, C<R>)> {
        assert!(same_basis(&self.dom, &self.cod));
        let mut out = Vec::new();
        for (l2, range) in self.dom.levels() {
            let mut acc = C::<R>::zero();
            for j in range {
                if let Ok(k) = self.cols[j].binary_search_by_key(&(j as u32), |(i, _)| *i) {
                    acc = acc + self.cols[j][k].1.clone();
                }
            }
            out.push((l2, acc));
        }
        out
    }

    /// Spectral norm of the sub-block with input restricted to level l:
    /// the largest singular value over all output rows.
    ///
    /// Shift-type operators (every pair of columns with disjoint row
    /// support, true for all fixed-(m,sigma)-shift operators here) reduce
    /// exactly to the largest column 2-norm; the general case solves the
    /// dense Hermitian Gram eigenproblem by cyclic Jacobi.
    pub fn block_norm(&self, l: HalfInt) -> R {
        let range = self.dom.level_range(l.twice).expect("level inside truncation");
        let cols: Vec<&[(u32, C<R>)]> = range.map(|j| self.cols[j].as_slice()).collect();
        let mut rows: Vec<u32> = cols.iter().flat_map(|c| c.iter().map(|(i, _)| *i)).collect();
        rows.sort_unstable();
        let disjoint = rows.windows(2).all(|w| w[0] != w[1]);
        if disjoint {
            let mut best = R::zero();
            for col in &cols {
                let mut acc = R::zero();
                for (_, v) in col.iter() {
                    acc = acc + abs_sq(v);
                }
                let norm = acc.sqrt();
                if cmp_total(&norm, &best).is_gt() {
                    best = norm;
                }
            }
            return best;
        }
        let n = cols.len();
        let mut gram: Vec<Vec<C<R>>> = (0..n).map(|_| (0..n).map(|_| C::<R>::zero()).collect()).collect();
        for a in 0..n {
            for b in a..n {
                let dot = sparse_dot_conj(cols[a], cols[b]);
                gram[b][a] = dot.conj();
                gram[a][b] = dot;
            }
        }
        hermitian_max_eigenvalue(&mut gram).sqrt()
    }

    /// (l2, block norm) for every level of the domain.
    pub fn block_norms(&self) -> Vec<(i32, R)> {
        self.dom
            .levels()
            .map(|(l2, _)| (l2, self.block_norm(HalfInt::new(l2))))
            .collect()
    }

    pub fn sup_block_norm(&self) -> R {
        let mut best = R::zero();
        for (_, v) in self.block_norms() {
            if cmp_total(&v, &best).is_gt() {
                best = v;
            }
        }
        best
    }

    /// Text dump, one entry per line:
    /// `l2_in m2_in s_in l2_out m2_out s_out re im`, sorted lexicographically.
    pub fn dump_text(&self) -> String {
        let mut lines: Vec<(i32, i32, i8, i32, i32, i8, f64, f64)> = self
            .iter_entries()
            .map(|(i, j, v)| {
                let pi = self.cod.point(i);
                let pj = self.dom.point(j);
                (
                    pj.l.twice, pj.m.twice, pj.sigma,
                    pi.l.twice, pi.m.twice, pi.sigma,
                    v.re.to_f64(), v.im.to_f64(),
                )
            })
            .collect();
        lines.sort_by(|a, b| {
            (a.0, a.1, a.2, a.3, a.4, a.5)
                .cmp(&(b.0, b.1, b.2, b.3, b.4, b.5))
        });
        let mut out = String::new();
        for (l2i, m2i, si, l2o, m2o, so, re, im) in lines {
            let si = if si > 0 { "+1" } else { "-1" };
            let so = if so > 0 { "+1" } else { "-1" };
            let _ = writeln!(out, "{l2i} {m2i} {si} {l2o} {m2o} {so} {re:.16e} {im:.16e}");
        }
        out
    }
}

fn sparse_dot_conj<R: Scalar>(a: &[(u32, C<R>)], b: &[(u32, C<R>)]) -> C<R> {
    let mut acc = C::<R>::zero();
    let (mut ia, mut ib) = (0, 0);
    while ia < a.len() && ib < b.len() {
        match a[ia].0.cmp(&b[ib].0) {
            core::cmp::Ordering::Less => ia += 1,
            core::cmp::Ordering::Greater => ib += 1,
            core::cmp::Ordering::Equal => {
                acc = acc + a[ia].1.conj() * b[ib].1.clone();
                ia += 1;
                ib += 1;
            }
        }
    }
    acc
}

/// Largest eigenvalue of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Explicit and deterministic; the matrices here are Gram matrices of one
/// l-level, at most a few hundred square.
pub fn hermitian_max_eigenvalue<R: Scalar>(g: &mut [Vec<C<R>>]) -> R {
    let n = g.len();
    if n == 0 {
        return R::zero();
    }
    let prec = g[0][0].re.prec();
    let eps = R::eps(prec);
    let one = R::from_i64(1, prec);
    let two = R::from_i64(2, prec);
    for _sweep in 0..40 {
        let mut off = R::zero();
        let mut diag = R::zero();
        for p in 0..n {
            diag = diag + g[p][p].re.clone() * g[p][p].re.clone();
            for q in (p + 1)..n {
                off = off + abs_sq(&g[p][q]);
            }
        }
        if cmp_total(&off, &(eps.clone() * eps.clone() * (diag + R::from_i64(1, prec)))).is_le() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = g[p][q].clone();
                let mag2 = abs_sq(&apq);
                if mag2.is_zero() {
                    continue;
                }
                let mag = mag2.sqrt();
                let phase = C::new(apq.re.clone() / mag.clone(), apq.im.clone() / mag.clone());
                let app = g[p][p].re.clone();
                let aqq = g[q][q].re.clone();
                let tau = (aqq - app) / (two.clone() * mag.clone());
                let tt = {
                    let root = (one.clone() + tau.clone() * tau.clone()).sqrt();
                    if cmp_total(&tau, &R::zero()).is_ge() {
                        one.clone() / (tau.clone() + root)
                    } else {
                        -(one.clone() / (-tau.clone() + root))
                    }
                };
                let c = one.clone() / (one.clone() + tt.clone() * tt.clone()).sqrt();
                let s = tt * c.clone();
                // G <- U* G U with U = [[c, s*phase], [-s*conj(phase), c]]
                // on the (p, q) plane, which zeroes the (p, q) entry.
                let sp = C::new(s.clone(), R::zero()) * phase;
                for k in 0..n {
                    let gkp = g[k][p].clone();
                    let gkq = g[k][q].clone();
                    g[k][p] = C::new(c.clone(), R::zero()) * gkp.clone() - sp.conj() * gkq.clone();
                    g[k][q] = sp.clone() * gkp + C::new(c.clone(), R::zero()) * gkq;
                }
                for k in 0..n {
                    let gpk = g[p][k].clone();
                    let gqk = g[q][k].clone();
                    g[p][k] = C::new(c.clone(), R::zero()) * gpk.clone() - sp.clone() * gqk.clone();
                    g[q][k] = sp.conj() * gpk + C::new(c.clone(), R::zero()) * gqk;
                }
            }
        }
    }
    let mut best = g[0][0].re.clone();
    for p in 1..n {
        if cmp_total(&g[p][p].re, &best).is_gt() {
            best = g[p][p].re.clone();
        }
    }
    best
}

pub fn compose<R: Scalar>(a: &BandedOperator<R>, b: &BandedOperator<R>) -> BandedOperator<R> {
    assert!(same_basis(&b.cod, &a.dom), "basis family mismatch in compose");
    let mut cols: Vec<Vec<(u32, C<R>)>> = Vec::with_capacity(b.dom.dim());
    for bcol in &b.cols {
        let mut acc: BTreeMap<u32, C<R>> = BTreeMap::new();
        for (k, bkj) in bcol {
            for (i, aik) in &a.cols[*k as usize] {
                let term = aik.clone() * bkj.clone();
                match acc.remove(i) {
                    Some(prev) => {
                        acc.insert(*i, prev + term);
                    }
                    None => {
                        acc.insert(*i, term);
                    }
                }
            }
        }
        cols.push(acc.into_iter().filter(|(_, v)| !v.is_zero()).collect());
    }
    let band2 = band_of(&b.dom, &a.cod, &cols);
    BandedOperator { dom: b.dom.clone(), cod: a.cod.clone(), cols, band2 }
}

pub fn add<R: Scalar>(a: &BandedOperator<R>, b: &BandedOperator<R>) -> BandedOperator<R> {
    assert!(same_basis(&a.dom, &b.dom) && same_basis(&a.cod, &b.cod));
    let mut cols = Vec::with_capacity(a.cols.len());
    for (ca, cb) in a.cols.iter().zip(&b.cols) {
        let mut merged: Vec<(u32, C<R>)> = Vec::with_capacity(ca.len() + cb.len());
        let (mut ia, mut ib) = (0, 0);
        while ia < ca.len() || ib < cb.len() {
            let take_a = ib == cb.len() || (ia < ca.len() && ca[ia].0 < cb[ib].0);
            let take_b = ia == ca.len() || (ib < cb.len() && cb[ib].0 < ca[ia].0);
            if take_a {
                merged.push(ca[ia].clone());
                ia += 1;
            } else if take_b {
                merged.push(cb[ib].clone());
                ib += 1;
            } else {
                let sum = ca[ia].1.clone() + cb[ib].1.clone();
                if !sum.is_zero() {
                    merged.push((ca[ia].0, sum));
                }
                ia += 1;
                ib += 1;
            }
        }
        cols.push(merged);
    }
    let band2 = band_of(&a.dom, &a.cod, &cols);
    BandedOperator { dom: a.dom.clone(), cod: a.cod.clone(), cols, band2 }
}

pub fn scale<R: Scalar>(a: &BandedOperator<R>, factor: &C<R>) -> BandedOperator<R> {
    let cols: Vec<Vec<(u32, C<R>)>> = a
        .cols
        .iter()
        .map(|col| {
            col.iter()
                .map(|(i, v)| (*i, v.clone() * factor.clone()))
                .filter(|(_, v)| !v.is_zero())
                .collect()
        })
        .collect();
    let band2 = band_of(&a.dom, &a.cod, &cols);
    BandedOperator { dom: a.dom.clone(), cod: a.cod.clone(), cols, band2 }
}

pub fn scale_real<R: Scalar>(a: &BandedOperator<R>, factor: &R) -> BandedOperator<R> {
    scale(a, &re_only(factor.clone()))
}

pub fn neg<R: Scalar>(a: &BandedOperator<R>) -> BandedOperator<R> {
    let cols: Vec<Vec<(u32, C<R>)>> = a
        .cols
        .iter()
        .map(|col| col.iter().map(|(i, v)| (*i, -v.clone())).collect())
        .collect();
    BandedOperator { dom: a.dom.clone(), cod: a.cod.clone(), cols, band2: a.band2 }
}

pub fn sub<R: Scalar>(a: &BandedOperator<R>, b: &BandedOperator<R>) -> BandedOperator<R> {
    add(a, &neg(b))
}

/// Conjugate transpose.
pub fn adjoint<R: Scalar>(a: &BandedOperator<R>) -> BandedOperator<R> {
    let mut b = OpBuilder::new(a.dom.clone(), a.cod.clone());
    for (i, j, v) in a.iter_entries() {
        b.push(j, i, v.conj());
    }
    b.build()
}

/// Plain transpose (no conjugation).
pub fn transpose<R: Scalar>(a: &BandedOperator<R>) -> BandedOperator<R> {
    let mut b = OpBuilder::new(a.dom.clone(), a.cod.clone());
    for (i, j, v) in a.iter_entries() {
        b.push(j, i, v.clone());
    }
    b.build()
}

/// Entrywise complex conjugate.
pub fn conj_entries<R: Scalar>(a: &BandedOperator<R>) -> BandedOperator<R> {
    let cols: Vec<Vec<(u32, C<R>)>> = a
        .cols
        .iter()
        .map(|col| col.iter().map(|(i, v)| (*i, v.conj())).collect())
        .collect();
    BandedOperator { dom: a.dom.clone(), cod: a.cod.clone(), cols, band2: a.band2 }
}

pub fn commutator<R: Scalar>(a: &BandedOperator<R>, b: &BandedOperator<R>) -> BandedOperator<R> {
    sub(&compose(a, b), &compose(b, a))
}

pub fn anticommutator<R: Scalar>(a: &BandedOperator<R>, b: &BandedOperator<R>) -> BandedOperator<R> {
    add(&compose(a, b), &compose(b, a))
}

/// Zeroes all rows and columns with l > lmax - guard (each side against its
/// own basis truncation).
pub fn interior_restrict<R: Scalar>(a: &BandedOperator<R>, guard: i32) -> BandedOperator<R> {
    assert!(guard >= 0);
    let dom_hi = a.dom.lmax2() - 2 * guard;
    let cod_hi = a.cod.lmax2() - 2 * guard;
    let cols: Vec<Vec<(u32, C<R>)>> = a
        .cols
        .iter()
        .enumerate()
        .map(|(j, col)| {
            if a.dom.point(j as u32).l.twice > dom_hi {
                return Vec::new();
            }
            col.iter()
                .filter(|(i, _)| a.cod.point(*i).l.twice <= cod_hi)
                .cloned()
                .collect()
        })
        .collect();
    let band2 = band_of(&a.dom, &a.cod, &cols);
    BandedOperator { dom: a.dom.clone(), cod: a.cod.clone(), cols, band2 }
}

/// Spectral norm of the level-l input block of `a` (free-function form).
pub fn block_norm<R: Scalar>(a: &BandedOperator<R>, l: HalfInt) -> R {
    a.block_norm(l)
}

/// Level-diagonal operator (one value per l) with an exact difference-first
/// commutator, so `[diag, A]` entries are (value_out - value_in) * entry.
pub struct LevelDiag<R: Scalar> {
    basis: Arc<Basis>,
    values: BTreeMap<i32, R>,
}

impl<R: Scalar> LevelDiag<R> {
    pub fn new(basis: &Arc<Basis>, f: impl Fn(i32) -> R) -> Self {
        let values = basis.levels().map(|(l2, _)| (l2, f(l2))).collect();
        Self { basis: basis.clone(), values }
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn value(&self, l2: i32) -> &R {
        &self.values[&l2]
    }

    pub fn to_operator(&self) -> BandedOperator<R> {
        BandedOperator::diagonal(&self.basis, |p| re_only(self.values[&p.l.twice].clone()))
    }

    /// `[diag, a]` computed difference-first: each entry of `a` is scaled by
    /// (value at output level - value at input level).  With integer-valued
    /// diagonals the level difference is exact, which is what makes the
    /// one-parameter-group derivation checks bit-exact.
    pub fn commutator_with(&self, a: &BandedOperator<R>) -> BandedOperator<R> {
        assert!(same_basis(&self.basis, &a.dom) && same_basis(&self.basis, &a.cod));
        let cols: Vec<Vec<(u32, C<R>)>> = a
            .cols
            .iter()
            .enumerate()
            .map(|(j, col)| {
                let dj = &self.values[&a.dom.point(j as u32).l.twice];
                col.iter()
                    .map(|(i, v)| {
                        let di = &self.values[&a.cod.point(*i).l.twice];
                        let w = di.clone() - dj.clone();
                        (*i, v.clone() * re_only(w))
                    })
                    .filter(|(_, v)| !v.is_zero())
                    .collect()
            })
            .collect();
        let band2 = band_of(&a.dom, &a.cod, &cols);
        BandedOperator { dom: a.dom.clone(), cod: a.cod.clone(), cols, band2 }
    }
}

/// Antilinear operator in the canonical form v -> L * conj(v).
pub struct AntilinearOperator<R: Scalar> {
    pub linear_part: BandedOperator<R>,
}

impl<R: Scalar> AntilinearOperator<R> {
    pub fn new(linear_part: BandedOperator<R>) -> Self {
        Self { linear_part }
    }

    /// Composition of two antilinears is linear: L1 * conj(L2).
    pub fn compose_antilinear(&self, other: &AntilinearOperator<R>) -> BandedOperator<R> {
        compose(&self.linear_part, &conj_entries(&other.linear_part))
    }

    /// J applied twice, as a linear operator.
    pub fn square(&self) -> BandedOperator<R> {
        self.compose_antilinear(self)
    }

    /// Inverse of an antiunitary: the linear part transposes.
    pub fn inverse(&self) -> AntilinearOperator<R> {
        AntilinearOperator::new(transpose(&self.linear_part))
    }

    /// Conjugation J b J^-1 (a linear operator): L * conj(b) * L^*.
    pub fn conjugate(&self, b: &BandedOperator<R>) -> BandedOperator<R> {
        compose(
            &compose(&self.linear_part, &conj_entries(b)),
            &adjoint(&self.linear_part),
        )
    }

    /// J then b (linear after antilinear): antilinear with part b * L.
    pub fn then(&self, b: &BandedOperator<R>) -> AntilinearOperator<R> {
        AntilinearOperator::new(compose(b, &self.linear_part))
    }

    /// b then J: antilinear with part L * conj(b).
    pub fn after(&self, b: &BandedOperator<R>) -> AntilinearOperator<R> {
        AntilinearOperator::new(compose(&self.linear_part, &conj_entries(b)))
    }
}
