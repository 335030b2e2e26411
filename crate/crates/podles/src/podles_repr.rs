//! Coefficient formulas and matrix builders for the irreducible integrable
//! representations of the deformed sphere algebras and for the quantum
//! group U_q(su(2)) acting on them.
//!
//! Every matrix element is produced by [`alpha_coeff`], which factors as an
//! (l, m)-dependent prefactor times one of the two level profiles
//! [`alpha_n`] and [`beta_n`].  Invalid target indices yield zero rather
//! than an error, matching the vanishing conventions of the representation
//! formulas.

use alloc::sync::Arc;

use crate::basis_ops::{
    add, compose, scale_real, BandedOperator, Basis, BasisFamily, BasisPoint, LevelDiag, OpBuilder,
};
use crate::qarith::{assert_q_range, cmp_total, HalfInt, QTable, Scalar};
use crate::spin_geometry::DiracSchedule;
use crate::word_algebra::{AlgebraElement, Gen};

/// The single configuration record of a model run: deformation parameters
/// (q, t), truncation cutoff, working precision, and Dirac eigenvalue
/// schedule.  Immutable after construction; all builders read from it.
#[derive(Clone)]
pub struct ModelContext<R: Scalar> {
    t: R,
    lmax: HalfInt,
    prec_bits: u32,
    dirac: DiracSchedule,
    table: QTable<R>,
}

impl<R: Scalar> ModelContext<R> {
    pub fn new(q: R, t: R, lmax: HalfInt, dirac: DiracSchedule) -> Self {
        assert_q_range(&q);
        let prec = q.prec();
        let zero = R::from_i64(0, prec);
        let one = R::from_i64(1, prec);
        assert!(
            cmp_total(&t, &zero).is_ge() && cmp_total(&t, &one).is_le(),
            "t must lie in [0,1], got {}",
            t.to_f64()
        );
        assert!(
            lmax.twice >= 5,
            "lmax must be at least 5/2 so identities have an interior, got {lmax}"
        );
        dirac.validate();
        let prec_bits = R::bits(prec);
        let table_span = 4 * lmax.twice as usize + 32;
        Self { t, lmax, prec_bits, dirac, table: QTable::new(q, table_span) }
    }

    pub fn q(&self) -> &R {
        &self.table.q
    }

    pub fn t(&self) -> &R {
        &self.t
    }

    pub fn lmax(&self) -> HalfInt {
        self.lmax
    }

    pub fn prec_bits(&self) -> u32 {
        self.prec_bits
    }

    pub fn dirac(&self) -> &DiracSchedule {
        &self.dirac
    }

    pub fn prec(&self) -> R::Prec {
        self.table.prec
    }

    /// q^(e2/2), memoized.
    pub fn qpow2(&self, e2: i32) -> R {
        self.table.qpow2(e2)
    }

    /// The q-integer [tw/2], memoized.
    pub fn qnum2(&self, tw: i32) -> R {
        self.table.qnum2(tw)
    }

    /// [tw/2]^(1/2), memoized.
    pub fn qnum2_sqrt(&self, tw: i32) -> R {
        self.table.qnum2_sqrt(tw)
    }

    pub fn zero(&self) -> R {
        self.table.zero()
    }

    pub fn one(&self) -> R {
        self.table.one.clone()
    }

    pub fn from_f64(&self, v: f64) -> R {
        R::from_f64(v, self.prec())
    }

    pub fn from_i64(&self, v: i64) -> R {
        R::from_i64(v, self.prec())
    }
}

/// Index set of one coefficient request: which generator (`i`), which level
/// shift (`nu`), the source vector (l, m), and the winding N of the module.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct CoeffQuery {
    pub i: i8,
    pub nu: i8,
    pub l: HalfInt,
    pub m: HalfInt,
    pub n: HalfInt,
}

/// Level profile multiplying the nu = 0 prefactors.
///
/// The sign convention takes sign(0) = +1, which is harmless because the
/// epsilon term carries a factor [2|N|] = 0 when N = 0.
pub fn beta_n<R: Scalar>(l: HalfInt, n: HalfInt, ctx: &ModelContext<R>) -> R {
    let (l2, n2) = (l.twice, n.twice);
    let a2 = n2.abs();
    assert!(l2 >= a2, "beta_n needs l >= |N|, got l={l}, N={n}");
    let q = ctx.q().clone();
    let qinv = ctx.qpow2(-2);
    let t = ctx.t().clone();
    let qeps = ctx.qpow2(if n2 >= 0 { 2 } else { -2 });
    let eps_term = ctx.qnum2(2 * a2) * (qinv.clone() + q.clone() - qeps * t.clone());
    let eps_term = if n2 >= 0 { eps_term } else { -eps_term };
    let bracket_gap =
        ctx.qnum2(a2) * ctx.qnum2(a2 + 2) - ctx.qnum2(l2) * ctx.qnum2(l2 + 2);
    let t_term = t * (q.clone() - qinv) * bracket_gap;
    (eps_term + t_term) / (q * ctx.qnum2(2 * l2 + 4))
}

/// Level profile multiplying the nu = +-1 prefactors; always nonnegative
/// and zero exactly at l = |N|.
pub fn alpha_n<R: Scalar>(l: HalfInt, n: HalfInt, ctx: &ModelContext<R>) -> R {
    let (l2, n2) = (l.twice, n.twice);
    assert!(
        l2 >= n2.abs() && l2 >= 1,
        "alpha_n needs l >= max(|N|, 1/2), got l={l}, N={n}"
    );
    let one = ctx.one();
    let t = ctx.t().clone();
    let ratio = ctx.qnum2(l2) / ctx.qnum2(2 * l2);
    let shift = t.clone() - one.clone() + ctx.qpow2(2 * n2);
    let inner = (one - t)
        + ctx.qpow2(-2 * n2) * ratio.clone() * ratio * shift.clone() * shift;
    let pref = ctx.qnum2_sqrt(4)
        * ctx.qnum2_sqrt(l2 + n2)
        * ctx.qnum2_sqrt(l2 - n2)
        * ctx.qnum2_sqrt(2 * l2)
        / (ctx.qnum2_sqrt(2 * l2 + 2) * ctx.qnum2(l2));
    pref * inner.sqrt()
}

/// The (l, m)-dependent bracket prefactor of one coefficient, excluding the
/// level profile.  These are the factors that stay uniformly bounded over
/// the whole truncation, which is what keeps the generator matrices bounded.
///
/// Preconditions: the target index (l + nu, m + i) must be valid and l + nu
/// must stay >= |N| of the intended module, as enforced by [`alpha_coeff`];
/// outside that range some brackets vanish or leave the table domain.
pub fn coeff_prefactor<R: Scalar>(i: i8, nu: i8, l: HalfInt, m: HalfInt, ctx: &ModelContext<R>) -> R {
    let (l2, m2) = (l.twice, m.twice);
    match (nu, i) {
        (1, 1) => {
            ctx.qpow2(m2 - l2) * ctx.qnum2_sqrt(l2 + m2 + 2) * ctx.qnum2_sqrt(l2 + m2 + 4)
                / (ctx.qnum2_sqrt(2 * l2 + 2) * ctx.qnum2_sqrt(2 * l2 + 4))
        }
        (0, 1) => {
            -(ctx.qpow2(m2 + 4)
                * ctx.qnum2_sqrt(l2 - m2)
                * ctx.qnum2_sqrt(l2 + m2 + 2)
                * ctx.qnum2_sqrt(4)
                / ctx.qnum2(2 * l2))
        }
        (-1, 1) => {
            -(ctx.qpow2(l2 + m2 + 2) * ctx.qnum2_sqrt(l2 - m2 - 2) * ctx.qnum2_sqrt(l2 - m2)
                / (ctx.qnum2_sqrt(2 * l2 - 2) * ctx.qnum2_sqrt(2 * l2)))
        }
        (1, 0) => {
            ctx.qpow2(m2)
                * ctx.qnum2_sqrt(l2 - m2 + 2)
                * ctx.qnum2_sqrt(l2 + m2 + 2)
                * ctx.qnum2_sqrt(4)
                / (ctx.qnum2_sqrt(2 * l2 + 2) * ctx.qnum2_sqrt(2 * l2 + 4))
        }
        (0, 0) => {
            (ctx.qnum2(l2 - m2 + 2) * ctx.qnum2(l2 + m2)
                - ctx.qpow2(4) * ctx.qnum2(l2 - m2) * ctx.qnum2(l2 + m2 + 2))
                / ctx.qnum2(2 * l2)
        }
        (-1, 0) => {
            ctx.qpow2(m2)
                * ctx.qnum2_sqrt(l2 - m2)
                * ctx.qnum2_sqrt(l2 + m2)
                * ctx.qnum2_sqrt(4)
                / (ctx.qnum2_sqrt(2 * l2 - 2) * ctx.qnum2_sqrt(2 * l2))
        }
        (1, -1) => {
            ctx.qpow2(l2 + m2) * ctx.qnum2_sqrt(l2 - m2 + 2) * ctx.qnum2_sqrt(l2 - m2 + 4)
                / (ctx.qnum2_sqrt(2 * l2 + 2) * ctx.qnum2_sqrt(2 * l2 + 4))
        }
        (0, -1) => {
            ctx.qpow2(m2)
                * ctx.qnum2_sqrt(l2 - m2 + 2)
                * ctx.qnum2_sqrt(l2 + m2)
                * ctx.qnum2_sqrt(4)
                / ctx.qnum2(2 * l2)
        }
        (-1, -1) => {
            -(ctx.qpow2(m2 - l2 - 2) * ctx.qnum2_sqrt(l2 + m2 - 2) * ctx.qnum2_sqrt(l2 + m2)
                / (ctx.qnum2_sqrt(2 * l2 - 2) * ctx.qnum2_sqrt(2 * l2)))
        }
        _ => panic!("coefficient indices must lie in -1..=1, got i={i}, nu={nu}"),
    }
}

/// One matrix element of the generator action: the coefficient of the
/// target vector (l + nu, m + i) in x_i applied to (l, m) inside the
/// winding-N module.  Returns zero for every invalid target, including the
/// l = 0 fixed point of the winding-zero module.
pub fn alpha_coeff<R: Scalar>(qry: CoeffQuery, ctx: &ModelContext<R>) -> R {
    let CoeffQuery { i, nu, l, m, n } = qry;
    assert!((-1..=1).contains(&i) && (-1..=1).contains(&nu));
    let (l2, m2, n2) = (l.twice, m.twice, n.twice);
    assert!(m2.abs() <= l2, "weight outside level, got l={l}, m={m}");
    assert!((l2 - m2) % 2 == 0, "m must carry the parity of l");
    assert!(l2 >= n2.abs(), "level below winding, got l={l}, N={n}");
    let lt2 = l2 + 2 * i32::from(nu);
    let mt2 = m2 + 2 * i32::from(i);
    if lt2 < n2.abs() || mt2.abs() > lt2 {
        return ctx.zero();
    }
    if l2 == 0 && nu == 0 {
        return ctx.zero();
    }
    let profile = match nu {
        1 => alpha_n(HalfInt::new(l2 + 2), n, ctx),
        -1 => alpha_n(l, n, ctx),
        _ => beta_n(l, n, ctx),
    };
    coeff_prefactor(i, nu, l, m, ctx) * profile
}

/// Winding used per basis point: the family winding on a single module,
/// and sigma times the family winding on the doubled spinor space.
fn winding_at(basis: &Basis, p: BasisPoint) -> HalfInt {
    match basis.family {
        BasisFamily::Single { n2, .. } => HalfInt::new(n2),
        BasisFamily::Spinor { n2, .. } => HalfInt::new(i32::from(p.sigma) * n2),
        BasisFamily::Hat { .. } => {
            panic!("generator matrices act on module bases, not the auxiliary space")
        }
    }
}

pub(crate) fn build_xi_with<R: Scalar>(
    i: i8,
    basis: &Arc<Basis>,
    n_override: Option<HalfInt>,
    ctx: &ModelContext<R>,
) -> BandedOperator<R> {
    let mut bld = OpBuilder::new(basis.clone(), basis.clone());
    for col in 0..basis.dim() as u32 {
        let p = basis.point(col);
        let n = n_override.unwrap_or_else(|| winding_at(basis, p));
        for nu in [-1i8, 0, 1] {
            let target = BasisPoint {
                l: HalfInt::new(p.l.twice + 2 * i32::from(nu)),
                m: HalfInt::new(p.m.twice + 2 * i32::from(i)),
                sigma: p.sigma,
            };
            let Some(row) = basis.index_of(target) else { continue };
            let v = alpha_coeff(CoeffQuery { i, nu, l: p.l, m: p.m, n }, ctx);
            if !v.is_zero() {
                bld.push_real(row, col, v);
            }
        }
    }
    bld.build()
}

/// Matrix of the generator x_i on a truncated module basis.  On the spinor
/// family each sigma component carries winding sigma * N; band 2 in l.twice.
pub fn build_xi<R: Scalar>(i: i8, basis: &Arc<Basis>, ctx: &ModelContext<R>) -> BandedOperator<R> {
    build_xi_with(i, basis, None, ctx)
}

/// Quantum group generator selector for [`build_uq`].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum UqGen {
    K,
    KInv,
    E,
    F,
}

/// Matrix of a U_q(su(2)) generator on a module or spinor basis: k acts
/// diagonally by q^m, f raises m, e lowers m, all block-diagonal in l and
/// independent of sigma.
pub fn build_uq<R: Scalar>(
    gen: UqGen,
    basis: &Arc<Basis>,
    ctx: &ModelContext<R>,
) -> BandedOperator<R> {
    assert!(
        !matches!(basis.family, BasisFamily::Hat { .. }),
        "quantum group generators act on module bases; the auxiliary space has its own operators"
    );
    let mut bld = OpBuilder::new(basis.clone(), basis.clone());
    for col in 0..basis.dim() as u32 {
        let p = basis.point(col);
        let (l2, m2) = (p.l.twice, p.m.twice);
        match gen {
            UqGen::K => bld.push_real(col, col, ctx.qpow2(m2)),
            UqGen::KInv => bld.push_real(col, col, ctx.qpow2(-m2)),
            UqGen::F => {
                let target = BasisPoint { l: p.l, m: HalfInt::new(m2 + 2), sigma: p.sigma };
                if let Some(row) = basis.index_of(target) {
                    let v = ctx.qnum2_sqrt(l2 - m2) * ctx.qnum2_sqrt(l2 + m2 + 2);
                    if !v.is_zero() {
                        bld.push_real(row, col, v);
                    }
                }
            }
            UqGen::E => {
                let target = BasisPoint { l: p.l, m: HalfInt::new(m2 - 2), sigma: p.sigma };
                if let Some(row) = basis.index_of(target) {
                    let v = ctx.qnum2_sqrt(l2 - m2 + 2) * ctx.qnum2_sqrt(l2 + m2);
                    if !v.is_zero() {
                        bld.push_real(row, col, v);
                    }
                }
            }
        }
    }
    bld.build()
}

/// Closed-form Casimir level values q^(2l+1) + q^(-2l-1), bit-identical on
/// every vector of one level.
pub fn casimir_diag<R: Scalar>(basis: &Arc<Basis>, ctx: &ModelContext<R>) -> LevelDiag<R> {
    LevelDiag::new(basis, |l2| ctx.qpow2(2 * l2 + 2) + ctx.qpow2(-2 * l2 - 2))
}

/// The Casimir element as a diagonal operator; cross-checked in tests
/// against the assembly q k^2 + q^-1 k^-2 + (q - q^-1)^2 ef.
pub fn casimir<R: Scalar>(basis: &Arc<Basis>, ctx: &ModelContext<R>) -> BandedOperator<R> {
    casimir_diag(basis, ctx).to_operator()
}

/// Left action of a quantum group generator on an algebra generator,
/// returned as an algebra element: k scales x_i by q^i, f and e move along
/// the weight chain x_-1, x_0, x_1 with weight sqrt([2]).
pub fn left_action<R: Scalar>(h: UqGen, x: Gen, ctx: &ModelContext<R>) -> AlgebraElement<R> {
    let root2 = ctx.qnum2_sqrt(4);
    let i = x.weight();
    match h {
        UqGen::K => AlgebraElement::generator(x, ctx.prec()).scaled_real(&ctx.qpow2(2 * i32::from(i))),
        UqGen::KInv => {
            AlgebraElement::generator(x, ctx.prec()).scaled_real(&ctx.qpow2(-2 * i32::from(i)))
        }
        UqGen::F => match x {
            Gen::Xm1 => AlgebraElement::generator(Gen::X0, ctx.prec()).scaled_real(&root2),
            Gen::X0 => AlgebraElement::generator(Gen::Xp1, ctx.prec()).scaled_real(&root2),
            Gen::Xp1 => AlgebraElement::zero(),
        },
        UqGen::E => match x {
            Gen::Xm1 => AlgebraElement::zero(),
            Gen::X0 => AlgebraElement::generator(Gen::Xm1, ctx.prec()).scaled_real(&root2),
            Gen::Xp1 => AlgebraElement::generator(Gen::X0, ctx.prec()).scaled_real(&root2),
        },
    }
}

/// The Casimir assembled from generator matrices, used as an independent
/// cross-check of [`casimir`].
pub fn casimir_from_generators<R: Scalar>(
    basis: &Arc<Basis>,
    ctx: &ModelContext<R>,
) -> BandedOperator<R> {
    let k = build_uq(UqGen::K, basis, ctx);
    let kinv = build_uq(UqGen::KInv, basis, ctx);
    let e = build_uq(UqGen::E, basis, ctx);
    let f = build_uq(UqGen::F, basis, ctx);
    let q = ctx.q().clone();
    let qinv = ctx.qpow2(-2);
    let gap = q.clone() - qinv.clone();
    let ef = compose(&e, &f);
    add(
        &add(
            &scale_real(&compose(&k, &k), &q),
            &scale_real(&compose(&kinv, &kinv), &qinv),
        ),
        &scale_real(&ef, &(gap.clone() * gap)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis_ops::{adjoint, commutator, scale, sub};
    use crate::qarith::SoftFloat;
    use num_complex::Complex;

    fn ctx_f64(q: f64, t: f64, lmax2: i32) -> ModelContext<f64> {
        ModelContext::new(q, t, HalfInt::new(lmax2), DiracSchedule::default())
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn beta_frozen_values() {
        let ctx = ctx_f64(0.5, 0.0, 9);
        let v = beta_n(HalfInt::HALF, HalfInt::HALF, &ctx);
        assert!(rel_close(v, 20.0 / 21.0, 1e-15), "{v}");
        let w = beta_n(HalfInt::HALF, -HalfInt::HALF, &ctx);
        assert_eq!(w, -v);
        let ctx = ctx_f64(0.5, 0.7, 9);
        let v = beta_n(HalfInt::new(3), HalfInt::HALF, &ctx);
        assert!(rel_close(v, 0.71906158357771261, 1e-15), "{v}");
    }

    #[test]
    fn beta_vanishes_at_winding_zero_t_zero() {
        let ctx = ctx_f64(0.7, 0.0, 9);
        for l2 in [0, 2, 4] {
            assert_eq!(beta_n(HalfInt::new(l2), HalfInt::ZERO, &ctx), 0.0);
        }
    }

    #[test]
    fn alpha_frozen_values() {
        for (t, want) in [(0.0, 1.0), (0.5, 0.74535599249992990), (1.0, 0.47140452079103168)] {
            let ctx = ctx_f64(0.5, t, 9);
            let v = alpha_n(HalfInt::HALF, HalfInt::ZERO, &ctx);
            assert!(rel_close(v, want, 1e-15), "t={t}: {v} vs {want}");
        }
        let ctx = ctx_f64(0.5, 1.0, 9);
        let v = alpha_n(HalfInt::new(3), HalfInt::HALF, &ctx);
        assert!(rel_close(v, 0.23669053416557543900, 1e-15), "{v}");
        let ctx = ctx_f64(0.5, 0.0, 9);
        let v = alpha_n(HalfInt::new(3), HalfInt::HALF, &ctx);
        assert!(rel_close(v, 1.0910894511799619063, 1e-15), "{v}");
    }

    #[test]
    fn alpha_vanishes_at_lowest_level() {
        let ctx = ctx_f64(0.6, 0.4, 9);
        assert_eq!(alpha_n(HalfInt::HALF, HalfInt::HALF, &ctx), 0.0);
        assert_eq!(alpha_n(HalfInt::ONE, HalfInt::ONE, &ctx), 0.0);
        assert_eq!(alpha_n(HalfInt::ONE, -HalfInt::ONE, &ctx), 0.0);
    }

    #[test]
    fn alpha_matches_t1_closed_form() {
        let ctx = ctx_f64(0.6, 1.0, 13);
        for n2 in [1i32, 2] {
            for l2 in (n2 + 2..=11).step_by(2) {
                let direct = alpha_n(HalfInt::new(l2), HalfInt::new(n2), &ctx);
                let closed = ctx.qnum2_sqrt(4)
                    * ctx.qnum2_sqrt(l2 + n2)
                    * ctx.qnum2_sqrt(l2 - n2)
                    * ctx.qpow2(n2)
                    / (ctx.qnum2_sqrt(2 * l2) * ctx.qnum2_sqrt(2 * l2 + 2));
                assert!(rel_close(direct, closed, 1e-14), "l2={l2} n2={n2}: {direct} vs {closed}");
            }
        }
    }

    #[test]
    fn alpha_approaches_flat_limit_monotonically() {
        let ctx = ctx_f64(0.5, 0.0, 81);
        let limit = 1.25_f64.sqrt();
        let v = alpha_n(HalfInt::new(81), HalfInt::HALF, &ctx);
        assert!(rel_close(v, limit, 1e-12), "{v} vs {limit}");
        // The gap shrinks strictly until it reaches rounding level, after
        // which it must stay pinned there.
        let floor = 1e-13;
        let mut last = f64::INFINITY;
        let mut strict_steps = 0;
        for l2 in (3..=61).step_by(2) {
            let gap = (alpha_n(HalfInt::new(l2), HalfInt::HALF, &ctx) - limit).abs();
            if last > floor && gap > floor {
                assert!(gap < last, "approach not monotone at l2={l2}");
                strict_steps += 1;
            } else {
                assert!(gap <= floor, "gap rebounded above noise at l2={l2}: {gap}");
            }
            last = gap;
        }
        assert!(strict_steps >= 5, "too few resolvable steps: {strict_steps}");
    }

    #[test]
    fn coeff_conventions_force_zeros() {
        let ctx = ctx_f64(0.5, 0.3, 9);
        for i in [-1i8, 0, 1] {
            for s in [-1i32, 1] {
                let q = CoeffQuery {
                    i,
                    nu: -1,
                    l: HalfInt::HALF,
                    m: HalfInt::new(s),
                    n: HalfInt::new(s),
                };
                assert_eq!(alpha_coeff(q, &ctx), 0.0);
            }
            let q = CoeffQuery { i, nu: 0, l: HalfInt::ZERO, m: HalfInt::ZERO, n: HalfInt::ZERO };
            assert_eq!(alpha_coeff(q, &ctx), 0.0);
            let q = CoeffQuery { i, nu: -1, l: HalfInt::ZERO, m: HalfInt::ZERO, n: HalfInt::ZERO };
            assert_eq!(alpha_coeff(q, &ctx), 0.0);
        }
        // Weight outside the target level.
        let q = CoeffQuery { i: 1, nu: 0, l: HalfInt::new(3), m: HalfInt::new(3), n: HalfInt::HALF };
        assert_eq!(alpha_coeff(q, &ctx), 0.0);
    }

    #[test]
    fn coeff_frozen_values() {
        let ctx = ctx_f64(0.4, 0.3, 9);
        let v = alpha_coeff(
            CoeffQuery { i: 0, nu: 0, l: HalfInt::new(3), m: HalfInt::new(1), n: HalfInt::HALF },
            &ctx,
        );
        assert!(rel_close(v, 0.39043211932090583, 1e-15), "{v}");
        let v = alpha_coeff(
            CoeffQuery { i: 0, nu: -1, l: HalfInt::new(3), m: HalfInt::new(-1), n: HalfInt::HALF },
            &ctx,
        );
        assert!(rel_close(v, 0.86782433293934115, 1e-15), "{v}");
        let ctx = ctx_f64(0.5, 1.0, 9);
        let v = alpha_coeff(
            CoeffQuery { i: 1, nu: 1, l: HalfInt::HALF, m: HalfInt::HALF, n: HalfInt::HALF },
            &ctx,
        );
        assert!(rel_close(v, 0.23669053416557543900, 1e-14), "{v}");
    }

    #[test]
    fn raising_coefficient_weight_reflection() {
        // The bracket factor of the (nu, i) = (+1, 0) coefficient is
        // symmetric under m -> -m; the full coefficient carries q^(2m).
        let ctx = ctx_f64(0.45, 0.6, 13);
        for l2 in [2, 4, 8] {
            for m2 in (0..=l2).step_by(2) {
                let plus = alpha_coeff(
                    CoeffQuery {
                        i: 0,
                        nu: 1,
                        l: HalfInt::new(l2),
                        m: HalfInt::new(m2),
                        n: HalfInt::ONE,
                    },
                    &ctx,
                );
                let minus = alpha_coeff(
                    CoeffQuery {
                        i: 0,
                        nu: 1,
                        l: HalfInt::new(l2),
                        m: HalfInt::new(-m2),
                        n: HalfInt::ONE,
                    },
                    &ctx,
                );
                assert!(
                    rel_close(plus, ctx.qpow2(2 * m2) * minus, 1e-13),
                    "l2={l2} m2={m2}"
                );
            }
        }
    }

    #[test]
    fn prefactors_stay_uniformly_bounded() {
        for q in [0.3, 0.5, 0.8] {
            let ctx = ctx_f64(q, 0.5, 41);
            let mut sup: f64 = 0.0;
            for l2 in 1..=41 {
                for m2 in (-l2..=l2).step_by(2) {
                    for i in [-1i8, 0, 1] {
                        for nu in [-1i8, 0, 1] {
                            let lt2 = l2 + 2 * i32::from(nu);
                            let mt2 = m2 + 2 * i32::from(i);
                            if lt2 < 0 || mt2.abs() > lt2 || (l2 == 0 && nu == 0) {
                                continue;
                            }
                            let v = coeff_prefactor(i, nu, HalfInt::new(l2), HalfInt::new(m2), &ctx);
                            assert!(v.is_finite(), "q={q} l2={l2} m2={m2} i={i} nu={nu}");
                            sup = sup.max(v.abs());
                        }
                    }
                }
            }
            // The sup is attained either by the lowering prefactor at
            // m = l, where it equals 1/q, or at the bottom level l = 1/2
            // by the weight-preserving lowering prefactor, where it
            // equals sqrt(1 + q^2).  Nothing exceeds the larger of the two.
            let bound = (1.0 / q).max((1.0 + q * q).sqrt());
            assert!(sup <= bound * (1.0 + 1e-12), "prefactor sup {sup} at q={q}");
            assert!(sup >= bound * (1.0 - 1e-12), "prefactor sup {sup} at q={q}");
        }
    }

    #[test]
    fn star_relation_between_raising_and_lowering() {
        let ctx = ctx_f64(0.5, 0.3, 9);
        let basis = Basis::spinor(1, 9);
        let xm = build_xi(-1, &basis, &ctx);
        let xp = build_xi(1, &basis, &ctx);
        let rhs = scale(
            &adjoint(&xp),
            &Complex::new(-ctx.qpow2(-2), 0.0),
        );
        let diff = sub(&xm, &rhs).max_abs();
        assert!(diff <= 1e-13, "{diff}");
        assert_eq!(xm.band2(), 2);
    }

    #[test]
    fn uq_generator_matrices() {
        let ctx = ctx_f64(0.5, 0.0, 9);
        let basis = Basis::spinor(1, 9);
        let e = build_uq(UqGen::E, &basis, &ctx);
        let f = build_uq(UqGen::F, &basis, &ctx);
        let k = build_uq(UqGen::K, &basis, &ctx);
        // f* = e holds entrywise because both sides read the same brackets.
        assert!(sub(&adjoint(&f), &e).is_zero_op());
        // k on the highest weight vector of the lowest level.
        let idx = basis.index_of(BasisPoint::new(1, 1, 1)).unwrap();
        assert_eq!(k.entry(idx, idx), Some(&Complex::new(0.5_f64.sqrt(), 0.0)));
        // e annihilates lowest weight vectors.
        let low = basis.index_of(BasisPoint::new(3, -3, -1)).unwrap();
        for row in 0..basis.dim() as u32 {
            assert_eq!(e.entry(row, low), None);
        }
    }

    #[test]
    fn casimir_closed_form_and_assembly_agree() {
        let ctx = ctx_f64(0.5, 0.2, 9);
        let basis = Basis::spinor(1, 9);
        let closed = casimir(&basis, &ctx);
        let idx = basis.index_of(BasisPoint::new(1, -1, -1)).unwrap();
        assert_eq!(closed.entry(idx, idx), Some(&Complex::new(4.25, 0.0)));
        let assembled = casimir_from_generators(&basis, &ctx);
        let err = sub(&assembled, &closed).max_abs() / closed.max_abs();
        assert!(err <= 1e-12, "{err}");
        // Block-diagonal scalar commutes with every generator exactly.
        let diag = casimir_diag(&basis, &ctx);
        for gen in [UqGen::K, UqGen::KInv, UqGen::E, UqGen::F] {
            let g = build_uq(gen, &basis, &ctx);
            assert!(diag.commutator_with(&g).is_zero_op());
            assert!(commutator(&closed, &g).is_zero_op());
        }
    }

    #[test]
    fn left_action_structure_constants() {
        let ctx = ctx_f64(0.5, 0.0, 9);
        let root2 = ctx.qnum2_sqrt(4);
        let f_low = left_action(UqGen::F, Gen::Xm1, &ctx);
        assert_eq!(f_low, AlgebraElement::generator(Gen::X0, ()).scaled_real(&root2));
        assert!(left_action::<f64>(UqGen::F, Gen::Xp1, &ctx).is_zero());
        assert!(left_action::<f64>(UqGen::E, Gen::Xm1, &ctx).is_zero());
        let e_up = left_action(UqGen::E, Gen::Xp1, &ctx);
        assert_eq!(e_up, AlgebraElement::generator(Gen::X0, ()).scaled_real(&root2));
        let k_mid = left_action(UqGen::K, Gen::X0, &ctx);
        assert_eq!(k_mid, AlgebraElement::generator(Gen::X0, ()));
        let k_low = left_action(UqGen::K, Gen::Xm1, &ctx);
        assert_eq!(k_low, AlgebraElement::generator(Gen::Xm1, ()).scaled_real(&2.0));
    }

    #[test]
    fn soft_float_tier_matches_f64() {
        let prec = <SoftFloat as Scalar>::prec_from_bits(96);
        let q = SoftFloat::from_f64(0.5, prec);
        let t = SoftFloat::from_f64(0.25, prec);
        let ctx = ModelContext::new(q, t, HalfInt::new(9), DiracSchedule::default());
        let ctx64 = ctx_f64(0.5, 0.25, 9);
        for (l2, m2, n2, i, nu) in
            [(3, 1, 1, 0i8, 0i8), (3, -1, 1, 1, 1), (5, 3, 1, -1, -1), (5, 1, -1, 0, 1)]
        {
            let qry = |l: HalfInt, m: HalfInt, n: HalfInt| CoeffQuery { i, nu, l, m, n };
            let soft = alpha_coeff(
                qry(HalfInt::new(l2), HalfInt::new(m2), HalfInt::new(n2)),
                &ctx,
            )
            .to_f64();
            let hard = alpha_coeff(
                qry(HalfInt::new(l2), HalfInt::new(m2), HalfInt::new(n2)),
                &ctx64,
            );
            assert!(rel_close(soft, hard, 1e-13), "{soft} vs {hard}");
        }
    }

    #[test]
    #[should_panic(expected = "q must lie in (0,1)")]
    fn context_rejects_q_out_of_range() {
        ctx_f64(1.5, 0.0, 9);
    }

    #[test]
    #[should_panic(expected = "t must lie in [0,1]")]
    fn context_rejects_t_out_of_range() {
        ctx_f64(0.5, 1.5, 9);
    }

    #[test]
    #[should_panic(expected = "lmax must be at least")]
    fn context_rejects_small_truncation() {
        ctx_f64(0.5, 0.0, 3);
    }

    #[test]
    fn x0_matrix_is_symmetric_under_adjoint() {
        let ctx = ctx_f64(0.6, 0.4, 11);
        let basis = Basis::spinor(1, 11);
        let x0 = build_xi(0, &basis, &ctx);
        let gap = sub(&adjoint(&x0), &x0).max_abs();
        assert!(gap <= 1e-13, "{gap}");
    }
}
