//! The doubled spinor representation, its level-chopped approximants, and
//! the equivariant Dirac machinery: D, |D|, F, the grading, and the two
//! antiunitaries J and J0.

use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex;

use crate::basis_ops::{
    AntilinearOperator, BandedOperator, Basis, BasisFamily, BasisPoint, LevelDiag, OpBuilder, C,
};
use crate::podles_repr::{build_xi, build_xi_with, ModelContext};
use crate::qarith::{HalfInt, Scalar};

/// Dirac eigenvalue profile d_l: the linear schedule c1 l + c2 (default
/// c1 = 1, c2 = 1/2, which makes every d_l the exact half-integer l + 1/2),
/// or an explicit per-level table for experiments.
#[derive(Clone, PartialEq, Debug)]
pub enum DiracSchedule {
    Linear { c1: f64, c2: f64 },
    Custom { values: Vec<(i32, f64)> },
}

impl Default for DiracSchedule {
    fn default() -> Self {
        DiracSchedule::Linear { c1: 1.0, c2: 0.5 }
    }
}

impl DiracSchedule {
    pub fn validate(&self) {
        match self {
            DiracSchedule::Linear { c1, c2 } => {
                assert!(
                    *c1 != 0.0 && c1.is_finite() && c2.is_finite(),
                    "linear Dirac schedule needs a nonzero finite slope"
                );
            }
            DiracSchedule::Custom { values } => {
                assert!(!values.is_empty(), "custom Dirac schedule must list levels");
            }
        }
    }

    /// d_l at level l = l2/2, evaluated as (c1 l2 + 2 c2) / 2 so the
    /// default schedule lands on exact half-integers.
    pub fn eigenvalue<R: Scalar>(&self, l2: i32, prec: R::Prec) -> R {
        match self {
            DiracSchedule::Linear { c1, c2 } => {
                (R::from_f64(*c1, prec) * R::from_i64(i64::from(l2), prec)
                    + R::from_f64(2.0 * *c2, prec))
                    / R::from_i64(2, prec)
            }
            DiracSchedule::Custom { values } => values
                .iter()
                .find(|(k, _)| *k == l2)
                .map(|(_, d)| R::from_f64(*d, prec))
                .expect("custom Dirac schedule must cover every level"),
        }
    }

    /// True for the unit-slope linear schedule, where level differences of
    /// |D| are exact integers and derivation checks can demand bit-zero.
    pub fn is_unit_linear(&self) -> bool {
        matches!(self, DiracSchedule::Linear { c1, .. } if *c1 == 1.0)
    }
}

/// Everything the checks need about one built model: the representation,
/// the approximants, and the Dirac operator family.  Immutable after
/// construction.
pub struct SpinGeometry<R: Scalar> {
    pub ctx: ModelContext<R>,
    pub n: HalfInt,
    pub basis: Arc<Basis>,
    pub pi_x: [BandedOperator<R>; 3],
    pub z: [BandedOperator<R>; 3],
    pub lq: BandedOperator<R>,
    pub lq_diag: LevelDiag<R>,
    pub d: BandedOperator<R>,
    pub abs_d: BandedOperator<R>,
    pub abs_d_diag: LevelDiag<R>,
    pub f: BandedOperator<R>,
    pub gamma: BandedOperator<R>,
    pub j: AntilinearOperator<R>,
    pub j0: AntilinearOperator<R>,
    pub invertible: bool,
}

impl<R: Scalar> SpinGeometry<R> {
    /// Builds the default geometry with winding 1/2.
    pub fn build(ctx: ModelContext<R>) -> Self {
        Self::build_with_n(ctx, HalfInt::HALF)
    }

    /// Builds the doubled geometry for a general positive winding N.
    pub fn build_with_n(ctx: ModelContext<R>, n: HalfInt) -> Self {
        assert!(n.twice >= 1, "spinor winding must be positive, got N={n}");
        assert!(
            (ctx.lmax().twice - n.twice) % 2 == 0,
            "lmax parity must match the winding parity"
        );
        let basis = Basis::spinor(n.twice, ctx.lmax().twice);
        let pi_x = build_spin_rep(&ctx, n, &basis);
        let z = build_zi(&ctx, &basis);
        let lq_diag = build_lq_diag(&ctx, &basis);
        let lq = lq_diag.to_operator();
        let parts = build_dirac(&ctx, &basis);
        let j = build_j(&ctx, n, &basis);
        let j0 = build_j0(&ctx, n, &basis);
        Self {
            ctx,
            n,
            basis,
            pi_x,
            z,
            lq,
            lq_diag,
            d: parts.d,
            abs_d: parts.abs_d,
            abs_d_diag: parts.abs_d_diag,
            f: parts.f,
            gamma: parts.gamma,
            j,
            j0,
            invertible: parts.invertible,
        }
    }

    /// Generator matrix by weight index i in {-1, 0, 1}.
    pub fn xi(&self, i: i8) -> &BandedOperator<R> {
        &self.pi_x[(i + 1) as usize]
    }

    /// Approximant matrix by weight index i in {-1, 0, 1}.
    pub fn zi(&self, i: i8) -> &BandedOperator<R> {
        &self.z[(i + 1) as usize]
    }

    /// The derivation [|D|, a], computed difference-first so that the
    /// unit-slope schedule gives exact integer level gaps.
    pub fn delta(&self, a: &BandedOperator<R>) -> BandedOperator<R> {
        self.abs_d_diag.commutator_with(a)
    }
}

/// The three generator matrices of the doubled representation; each sigma
/// component carries winding sigma N.
pub fn build_spin_rep<R: Scalar>(
    ctx: &ModelContext<R>,
    n: HalfInt,
    basis: &Arc<Basis>,
) -> [BandedOperator<R>; 3] {
    match basis.family {
        BasisFamily::Spinor { n2, .. } => assert_eq!(n2, n.twice, "basis winding mismatch"),
        _ => panic!("spin representation needs a spinor basis"),
    }
    [build_xi(-1, basis, ctx), build_xi(0, basis, ctx), build_xi(1, basis, ctx)]
}

/// The approximants z_i: winding-zero coefficient formulas applied on the
/// spinor basis, acting identically on both sigma components.
pub fn build_zi<R: Scalar>(ctx: &ModelContext<R>, basis: &Arc<Basis>) -> [BandedOperator<R>; 3] {
    let n0 = Some(HalfInt::ZERO);
    [
        build_xi_with(-1, basis, n0, ctx),
        build_xi_with(0, basis, n0, ctx),
        build_xi_with(1, basis, n0, ctx),
    ]
}

/// Level profile q^l of the compact smoothing operator.
pub fn build_lq_diag<R: Scalar>(ctx: &ModelContext<R>, basis: &Arc<Basis>) -> LevelDiag<R> {
    LevelDiag::new(basis, |l2| ctx.qpow2(l2))
}

pub fn build_lq<R: Scalar>(ctx: &ModelContext<R>, basis: &Arc<Basis>) -> BandedOperator<R> {
    build_lq_diag(ctx, basis).to_operator()
}

/// Output of [`build_dirac`]: the operator, its modulus, the phase, the
/// grading, and whether the schedule avoided a kernel.
pub struct DiracParts<R: Scalar> {
    pub d: BandedOperator<R>,
    pub abs_d: BandedOperator<R>,
    pub abs_d_diag: LevelDiag<R>,
    pub f: BandedOperator<R>,
    pub gamma: BandedOperator<R>,
    pub invertible: bool,
}

/// The equivariant Dirac machinery: D swaps the sigma components with
/// weight d_l, gamma is the sigma grading, F is the sigma swap signed by
/// d_l, and |D| is diagonal.  D = F |D| holds bit for bit.
pub fn build_dirac<R: Scalar>(ctx: &ModelContext<R>, basis: &Arc<Basis>) -> DiracParts<R> {
    let prec = ctx.prec();
    let sched = ctx.dirac().clone();
    sched.validate();
    let zero = ctx.zero();
    let mut invertible = true;
    for (l2, _) in basis.levels() {
        if sched.eigenvalue::<R>(l2, prec) == zero {
            invertible = false;
        }
    }
    let abs_d_diag = LevelDiag::new(basis, |l2| sched.eigenvalue::<R>(l2, prec).abs());
    let abs_d = abs_d_diag.to_operator();
    let mut d_bld = OpBuilder::new(basis.clone(), basis.clone());
    let mut f_bld = OpBuilder::new(basis.clone(), basis.clone());
    for col in 0..basis.dim() as u32 {
        let p = basis.point(col);
        let row = basis
            .index_of(BasisPoint { l: p.l, m: p.m, sigma: -p.sigma })
            .expect("sigma partner always present");
        let dval: R = sched.eigenvalue(p.l.twice, prec);
        let sign = if dval < zero { -ctx.one() } else { ctx.one() };
        d_bld.push_real(row, col, dval);
        f_bld.push_real(row, col, sign);
    }
    let gamma = BandedOperator::diagonal(basis, |p| {
        Complex::new(R::from_i64(i64::from(p.sigma), prec), R::from_i64(0, prec))
    });
    DiracParts { d: d_bld.build(), abs_d, abs_d_diag, f: f_bld.build(), gamma, invertible }
}

fn reflection_phase<R: Scalar>(ctx: &ModelContext<R>, m2: i32, n2: i32) -> R {
    if (m2 + n2) / 2 % 2 == 0 {
        ctx.one()
    } else {
        -ctx.one()
    }
}

/// The real structure: antiunitary with J v^l_(m,s) = (-1)^(m+N)
/// v^l_(-m,-s), squaring to (-1)^(2N).
pub fn build_j<R: Scalar>(
    ctx: &ModelContext<R>,
    n: HalfInt,
    basis: &Arc<Basis>,
) -> AntilinearOperator<R> {
    let mut bld = OpBuilder::new(basis.clone(), basis.clone());
    for col in 0..basis.dim() as u32 {
        let p = basis.point(col);
        let row = basis
            .index_of(BasisPoint { l: p.l, m: -p.m, sigma: -p.sigma })
            .expect("reflected point always present");
        bld.push_real(row, col, reflection_phase(ctx, p.m.twice, n.twice));
    }
    AntilinearOperator::new(bld.build())
}

/// The sigma-preserving antiunitary with the same reflection phase,
/// used by the commutant identities of the approximants.
pub fn build_j0<R: Scalar>(
    ctx: &ModelContext<R>,
    n: HalfInt,
    basis: &Arc<Basis>,
) -> AntilinearOperator<R> {
    let mut bld = OpBuilder::new(basis.clone(), basis.clone());
    for col in 0..basis.dim() as u32 {
        let p = basis.point(col);
        let row = basis
            .index_of(BasisPoint { l: p.l, m: -p.m, sigma: p.sigma })
            .expect("reflected point always present");
        bld.push_real(row, col, reflection_phase(ctx, p.m.twice, n.twice));
    }
    AntilinearOperator::new(bld.build())
}

/// The constant 2x2 intertwiner diagonalizing each Dirac block, rows and
/// columns ordered (sigma = -1, sigma = +1).
pub fn w0<R: Scalar>(prec: R::Prec) -> [[C<R>; 2]; 2] {
    let s = R::from_f64(0.5, prec).sqrt();
    let zero = R::from_i64(0, prec);
    [
        [Complex::new(s.clone(), zero.clone()), Complex::new(s.clone(), zero.clone())],
        [Complex::new(zero.clone(), -s.clone()), Complex::new(zero, s)],
    ]
}

/// Dirac matrix assembled from per-level conjugations W_l^* diag(d_l, -d_l)
/// W_l.  This is the hook for experimenting with level-dependent W_l; the
/// constant [`w0`] reproduces the swap form of [`build_dirac`] up to
/// roundoff.
pub fn dirac_from_w<R: Scalar>(
    ctx: &ModelContext<R>,
    basis: &Arc<Basis>,
    w_of_level: &dyn Fn(i32) -> [[C<R>; 2]; 2],
) -> BandedOperator<R> {
    let prec = ctx.prec();
    let sched = ctx.dirac().clone();
    let mut bld = OpBuilder::new(basis.clone(), basis.clone());
    for col in 0..basis.dim() as u32 {
        let p = basis.point(col);
        if p.sigma != -1 {
            continue;
        }
        let partner = basis
            .index_of(BasisPoint { l: p.l, m: p.m, sigma: 1 })
            .expect("sigma partner always present");
        let idx = [col, partner];
        let w = w_of_level(p.l.twice);
        let dval: R = sched.eigenvalue(p.l.twice, prec);
        let diag = [
            Complex::new(dval.clone(), R::from_i64(0, prec)),
            Complex::new(-dval, R::from_i64(0, prec)),
        ];
        for a in 0..2 {
            for b in 0..2 {
                let mut acc = C::<R>::new(R::from_i64(0, prec), R::from_i64(0, prec));
                for (k, dk) in diag.iter().enumerate() {
                    acc = acc + w[k][a].conj() * dk.clone() * w[k][b].clone();
                }
                if !num_traits::Zero::is_zero(&acc) {
                    bld.push(idx[a], idx[b], acc);
                }
            }
        }
    }
    bld.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis_ops::{add, commutator, compose, scale, sub};
    use crate::podles_repr::{alpha_coeff, build_uq, CoeffQuery, UqGen};

    fn geometry(q: f64, t: f64, lmax2: i32) -> SpinGeometry<f64> {
        let ctx = ModelContext::new(q, t, HalfInt::new(lmax2), DiracSchedule::default());
        SpinGeometry::build(ctx)
    }

    #[test]
    fn grading_phase_and_modulus_identities() {
        let g = geometry(0.5, 0.3, 9);
        let id = BandedOperator::<f64>::identity(&g.basis, ());
        assert!(sub(&compose(&g.gamma, &g.gamma), &id).is_zero_op());
        assert!(sub(&crate::basis_ops::adjoint(&g.gamma), &g.gamma).is_zero_op());
        assert!(sub(&compose(&g.f, &g.f), &id).is_zero_op());
        assert!(sub(&g.d, &compose(&g.f, &g.abs_d)).is_zero_op());
        assert!(add(&compose(&g.gamma, &g.d), &compose(&g.d, &g.gamma)).is_zero_op());
        assert!(g.invertible);
    }

    #[test]
    fn dirac_spectrum_under_default_schedule() {
        let g = geometry(0.5, 0.0, 9);
        for (l2, range) in g.basis.levels() {
            let want = (l2 + 1) as f64 / 2.0;
            assert_eq!(*g.abs_d_diag.value(l2), want);
            assert_eq!(range.len(), 2 * (l2 as usize + 1));
        }
        // D^2 = |D|^2 exactly, so the eigenvalues come in +- pairs.
        assert!(sub(&compose(&g.d, &g.d), &compose(&g.abs_d, &g.abs_d)).is_zero_op());
    }

    #[test]
    fn real_structure_squares_and_commutes() {
        let g = geometry(0.5, 0.3, 9);
        let minus_id = scale(
            &BandedOperator::<f64>::identity(&g.basis, ()),
            &Complex::new(-1.0, 0.0),
        );
        assert!(sub(&g.j.square(), &minus_id).is_zero_op());
        assert!(sub(&g.j0.square(), &minus_id).is_zero_op());
        // J D = D J: compare linear parts of both antilinear compositions.
        let jd = g.j.after(&g.d).linear_part;
        let dj = g.j.then(&g.d).linear_part;
        assert!(sub(&jd, &dj).is_zero_op());
        // J gamma = -gamma J.
        let jg = g.j.after(&g.gamma).linear_part;
        let gj = g.j.then(&g.gamma).linear_part;
        assert!(add(&jg, &gj).is_zero_op());
    }

    #[test]
    fn dirac_commutes_with_quantum_group_action() {
        let g = geometry(0.6, 0.4, 9);
        for gen in [UqGen::K, UqGen::KInv, UqGen::E, UqGen::F] {
            let op = build_uq(gen, &g.basis, &g.ctx);
            assert!(commutator(&g.d, &op).is_zero_op());
        }
    }

    #[test]
    fn real_structure_equivariance() {
        // J X J^-1 = k S(X)* k^-1 for the quantum group generators, with
        // S(k)* = k^-1, S(f)* = -q e, S(e)* = -q^-1 f.
        let g = geometry(0.5, 0.3, 9);
        let k = build_uq(UqGen::K, &g.basis, &g.ctx);
        let kinv = build_uq(UqGen::KInv, &g.basis, &g.ctx);
        let e = build_uq(UqGen::E, &g.basis, &g.ctx);
        let f = build_uq(UqGen::F, &g.basis, &g.ctx);
        let sandwich = |x: &BandedOperator<f64>| compose(&k, &compose(x, &kinv));
        let cases = [
            (g.j.conjugate(&k), sandwich(&kinv)),
            (
                g.j.conjugate(&f),
                scale(&sandwich(&e), &Complex::new(-g.ctx.q().clone(), 0.0)),
            ),
            (
                g.j.conjugate(&e),
                scale(&sandwich(&f), &Complex::new(-g.ctx.qpow2(-2), 0.0)),
            ),
        ];
        for (lhs, rhs) in &cases {
            let scalefac = rhs.max_abs().max(1.0);
            let gap = sub(lhs, rhs).max_abs() / scalefac;
            assert!(gap <= 1e-12, "{gap}");
        }
    }

    #[test]
    fn approximants_commute_with_phase_exactly() {
        let g = geometry(0.5, 0.7, 9);
        for i in [-1i8, 0, 1] {
            assert!(commutator(g.zi(i), &g.f).is_zero_op());
            assert!(commutator(g.zi(i), &g.gamma).is_zero_op());
        }
        // The full representation commutes with the grading too.
        for i in [-1i8, 0, 1] {
            assert!(commutator(g.xi(i), &g.gamma).is_zero_op());
        }
    }

    #[test]
    fn reflected_approximant_conjugation_formula() {
        // J0 z_i J0^-1 acts with the winding-zero coefficients at
        // reflected weight, scaled by (-1)^i.
        let g = geometry(0.45, 0.35, 9);
        for i in [-1i8, 0, 1] {
            let lhs = g.j0.conjugate(g.zi(i));
            let mut bld = OpBuilder::new(g.basis.clone(), g.basis.clone());
            for col in 0..g.basis.dim() as u32 {
                let p = g.basis.point(col);
                for nu in [-1i8, 0, 1] {
                    let target = BasisPoint {
                        l: HalfInt::new(p.l.twice + 2 * i32::from(nu)),
                        m: HalfInt::new(p.m.twice - 2 * i32::from(i)),
                        sigma: p.sigma,
                    };
                    let Some(row) = g.basis.index_of(target) else { continue };
                    let v = alpha_coeff(
                        CoeffQuery { i, nu, l: p.l, m: -p.m, n: HalfInt::ZERO },
                        &g.ctx,
                    );
                    let v = if i32::from(i) % 2 == 0 { v } else { -v };
                    if v != 0.0 {
                        bld.push_real(row, col, v);
                    }
                }
            }
            let rhs = bld.build();
            let gap = sub(&lhs, &rhs).max_abs();
            assert!(gap <= 1e-14, "i={i}: {gap}");
        }
    }

    #[test]
    fn smoothing_profile_is_diagonal_geometric() {
        let g = geometry(0.5, 0.0, 9);
        for (l2, _) in g.basis.levels() {
            let got = g.lq.block_norm(HalfInt::new(l2));
            let want = g.ctx.qpow2(l2);
            assert!((got - want).abs() <= 1e-15 * want);
        }
        assert!(commutator(&g.lq, &g.gamma).is_zero_op());
        assert!(commutator(&g.lq, &g.f).is_zero_op());
        assert!(commutator(&g.lq, &g.d).is_zero_op());
    }

    #[test]
    fn block_diagonalization_hook_matches_swap_form() {
        let g = geometry(0.5, 0.25, 9);
        let via_w = dirac_from_w(&g.ctx, &g.basis, &|_| w0::<f64>(()));
        let gap = sub(&via_w, &g.d).max_abs();
        assert!(gap <= 1e-14, "{gap}");
    }

    #[test]
    fn custom_schedules_flag_missing_inverses() {
        let ctx = ModelContext::new(
            0.5,
            0.0,
            HalfInt::new(5),
            DiracSchedule::Custom {
                values: alloc::vec![(1, 0.0), (3, 2.0), (5, 3.0)],
            },
        );
        let parts = build_dirac(&ctx, &Basis::spinor(1, 5));
        assert!(!parts.invertible);
        let shifted = ModelContext::new(
            0.5,
            0.0,
            HalfInt::new(5),
            DiracSchedule::Linear { c1: 1.0, c2: -0.5 },
        );
        let parts = build_dirac(&shifted, &Basis::spinor(1, 5));
        assert!(!parts.invertible);
        // A negative level flips the phase sign but keeps D = F |D|.
        assert!(sub(&parts.d, &compose(&parts.f, &parts.abs_d)).is_zero_op());
    }

    #[test]
    #[should_panic(expected = "custom Dirac schedule must cover every level")]
    fn custom_schedule_must_cover_levels() {
        let ctx = ModelContext::new(
            0.5,
            0.0,
            HalfInt::new(5),
            DiracSchedule::Custom { values: alloc::vec![(1, 1.0)] },
        );
        build_dirac(&ctx, &Basis::spinor(1, 5));
    }

    #[test]
    fn general_winding_variant_builds() {
        let ctx = ModelContext::new(0.5, 0.5, HalfInt::new(10), DiracSchedule::default());
        let g = SpinGeometry::build_with_n(ctx, HalfInt::ONE);
        assert_eq!(g.basis.lmin2(), 2);
        for i in [-1i8, 0, 1] {
            assert!(g.xi(i).band2() <= 2);
            assert!(commutator(g.xi(i), &g.gamma).is_zero_op());
        }
        // J squares to +1 for integer winding.
        let id = BandedOperator::<f64>::identity(&g.basis, ());
        assert!(sub(&g.j.square(), &id).is_zero_op());
    }
}
