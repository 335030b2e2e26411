//! Embedding of the sphere representation into the quantum SU(2) space:
//! the two shift operators alpha and beta, the induced images phi(x_i),
//! the extension and restriction maps between the two truncations, and
//! the compressed images phi_tilde.

use alloc::sync::Arc;

use crate::basis_ops::{
    add, adjoint, compose, scale_real, sub, BandedOperator, Basis, BasisFamily, BasisPoint,
    OpBuilder,
};
use crate::podles_repr::ModelContext;
use crate::qarith::Scalar;
use crate::spin_geometry::{build_dirac, DiracParts, SpinGeometry};
use crate::word_algebra::{evaluate_in, AlgebraElement, Gen};

/// Truncation box for the auxiliary space: l in [lmin, lmax] stepping by
/// 1/2, and n = l + m in [0, nmax].  The level axis is unbounded below in
/// the untruncated space, so lmin is a genuine third cutoff.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct HatParams {
    pub lmin2: i32,
    pub lmax2: i32,
    pub nmax: i32,
}

impl HatParams {
    /// A box that contains the given spinor truncation with enough margin
    /// for words of moderate length: eight half-levels above and twelve
    /// below, and the weight cutoff aligned with the top level.
    pub fn for_spinor(spin: &Arc<Basis>) -> Self {
        let lmax2 = spin.lmax2() + 8;
        Self { lmin2: spin.lmin2() - 12, lmax2, nmax: lmax2 }
    }

    pub fn basis(&self) -> Arc<Basis> {
        Basis::hat(self.lmin2, self.lmax2, self.nmax)
    }
}

fn hat_bounds(basis: &Arc<Basis>) -> (i32, i32, i32) {
    match basis.family {
        BasisFamily::Hat { lmin2, lmax2, nmax } => (lmin2, lmax2, nmax),
        _ => panic!("operation needs the auxiliary quantum SU(2) basis"),
    }
}

/// Zeroes rows and columns within `guard` levels of the three truncation
/// walls (top and bottom of the level range, top of the weight range).
/// The n = 0 wall is genuine, not a truncation artifact, and is kept.
pub fn hat_interior_restrict<R: Scalar>(
    a: &BandedOperator<R>,
    guard: i32,
) -> BandedOperator<R> {
    let (lmin2, lmax2, nmax) = hat_bounds(a.dom());
    let keep = |p: &BasisPoint| {
        let n = (p.l.twice + p.m.twice) / 2;
        p.l.twice <= lmax2 - 2 * guard && p.l.twice >= lmin2 + 2 * guard && n <= nmax - guard
    };
    let mut bld = OpBuilder::new(a.cod().clone(), a.dom().clone());
    for (row, col, v) in a.iter_entries() {
        if keep(&a.cod().point(row)) && keep(&a.dom().point(col)) {
            bld.push(row, col, v.clone());
        }
    }
    bld.build()
}

/// The two shift operators: alpha raises l, m, and n = l + m by a half,
/// a half, and one with weight sqrt(1 - q^(2(n+1))); beta raises l and
/// lowers m with weight q^n, keeping n fixed.  Both act identically on
/// the two sign copies.
pub fn build_alpha_beta<R: Scalar>(
    hat: &Arc<Basis>,
    ctx: &ModelContext<R>,
) -> (BandedOperator<R>, BandedOperator<R>) {
    hat_bounds(hat);
    let one = ctx.one();
    let mut a_bld = OpBuilder::new(hat.clone(), hat.clone());
    let mut b_bld = OpBuilder::new(hat.clone(), hat.clone());
    for col in 0..hat.dim() as u32 {
        let p = hat.point(col);
        let n = (p.l.twice + p.m.twice) / 2;
        let up = BasisPoint::new(p.l.twice + 1, p.m.twice + 1, p.sigma);
        if let Some(row) = hat.index_of(up) {
            a_bld.push_real(row, col, (one.clone() - ctx.qpow2(4 * n + 4)).sqrt());
        }
        let side = BasisPoint::new(p.l.twice + 1, p.m.twice - 1, p.sigma);
        if let Some(row) = hat.index_of(side) {
            b_bld.push_real(row, col, ctx.qpow2(2 * n));
        }
    }
    (a_bld.build(), b_bld.build())
}

fn phi_from_parts<R: Scalar>(
    g: Gen,
    alpha: &BandedOperator<R>,
    beta: &BandedOperator<R>,
    ctx: &ModelContext<R>,
) -> BandedOperator<R> {
    let t = ctx.t().clone();
    let one_p_q2 = ctx.one() + ctx.qpow2(4);
    let sqrt_1mt = (ctx.one() - t.clone()).sqrt();
    match g {
        Gen::Xp1 => {
            let bstar = adjoint(beta);
            let skew = sub(
                &compose(alpha, alpha),
                &scale_real(&compose(&bstar, &bstar), ctx.q()),
            );
            let mixed = compose(&bstar, alpha);
            scale_real(
                &sub(&scale_real(&skew, &sqrt_1mt), &scale_real(&mixed, &t)),
                &one_p_q2.sqrt(),
            )
        }
        Gen::X0 => {
            let astar = adjoint(alpha);
            let bstar = adjoint(beta);
            let sym = add(&compose(alpha, beta), &compose(&bstar, &astar));
            let core = sub(
                &scale_real(&sym, &sqrt_1mt),
                &scale_real(&compose(beta, &bstar), &t),
            );
            let id = BandedOperator::identity(alpha.dom(), ctx.prec());
            add(&scale_real(&core, &one_p_q2), &scale_real(&id, &t))
        }
        Gen::Xm1 => scale_real(
            &adjoint(&phi_from_parts(Gen::Xp1, alpha, beta, ctx)),
            &-ctx.qpow2(-2),
        ),
    }
}

/// Image of one sphere generator under the quantum SU(2) embedding.
pub fn build_phi<R: Scalar>(
    g: Gen,
    hat: &Arc<Basis>,
    ctx: &ModelContext<R>,
) -> BandedOperator<R> {
    let (alpha, beta) = build_alpha_beta(hat, ctx);
    phi_from_parts(g, &alpha, &beta, ctx)
}

/// The restriction P (auxiliary space onto the spinor space, killing
/// labels outside it) and the isometric extension Q in the opposite
/// direction.  PQ is the identity exactly.
pub fn build_pq<R: Scalar>(
    hat: &Arc<Basis>,
    geom: &SpinGeometry<R>,
) -> (BandedOperator<R>, BandedOperator<R>) {
    let (lmin2, lmax2, nmax) = hat_bounds(hat);
    let spin = &geom.basis;
    assert!(
        lmax2 >= spin.lmax2() && nmax >= spin.lmax2() && lmin2 <= spin.lmin2(),
        "auxiliary truncation must contain the spinor truncation"
    );
    let one = geom.ctx.one();
    let mut p_bld = OpBuilder::new(spin.clone(), hat.clone());
    let mut q_bld = OpBuilder::new(hat.clone(), spin.clone());
    for i in 0..spin.dim() as u32 {
        let j = hat
            .index_of(spin.point(i))
            .expect("contained truncation covers every spinor label");
        p_bld.push_real(i, j, one.clone());
        q_bld.push_real(j, i, one.clone());
    }
    (p_bld.build(), q_bld.build())
}

/// Everything built once on the auxiliary space: the shifts, the three
/// generator images, the restriction pair, and the Dirac family with the
/// same sign-swap convention as on the spinor space.
pub struct HatModel<R: Scalar> {
    pub hat: Arc<Basis>,
    pub alpha: BandedOperator<R>,
    pub beta: BandedOperator<R>,
    pub phi_x: [BandedOperator<R>; 3],
    pub p: BandedOperator<R>,
    pub q_map: BandedOperator<R>,
    pub dirac: DiracParts<R>,
}

pub fn build_hat_model<R: Scalar>(geom: &SpinGeometry<R>, params: HatParams) -> HatModel<R> {
    let hat = params.basis();
    let ctx = &geom.ctx;
    let (alpha, beta) = build_alpha_beta(&hat, ctx);
    let phi_x = [
        phi_from_parts(Gen::Xm1, &alpha, &beta, ctx),
        phi_from_parts(Gen::X0, &alpha, &beta, ctx),
        phi_from_parts(Gen::Xp1, &alpha, &beta, ctx),
    ];
    let (p, q_map) = build_pq(&hat, geom);
    let dirac = build_dirac(ctx, &hat);
    HatModel { hat, alpha, beta, phi_x, p, q_map, dirac }
}

impl<R: Scalar> HatModel<R> {
    /// The compressed image P phi(a) Q on the spinor space.
    pub fn phi_tilde(&self, a: &AlgebraElement<R>, ctx: &ModelContext<R>) -> BandedOperator<R> {
        let big = evaluate_in(a, &self.phi_x, ctx);
        compose(&self.p, &compose(&big, &self.q_map))
    }
}

/// One-shot compressed image; builds the model parts afresh.
pub fn phi_tilde<R: Scalar>(
    a: &AlgebraElement<R>,
    hat: &Arc<Basis>,
    geom: &SpinGeometry<R>,
) -> BandedOperator<R> {
    let ctx = &geom.ctx;
    let (alpha, beta) = build_alpha_beta(hat, ctx);
    let gens = [
        phi_from_parts(Gen::Xm1, &alpha, &beta, ctx),
        phi_from_parts(Gen::X0, &alpha, &beta, ctx),
        phi_from_parts(Gen::Xp1, &alpha, &beta, ctx),
    ];
    let big = evaluate_in(a, &gens, ctx);
    let (p, q) = build_pq(hat, geom);
    compose(&p, &compose(&big, &q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis_ops::{commutator, scale, C, LevelDiag};
    use crate::qarith::HalfInt;
    use crate::spin_geometry::DiracSchedule;
    use crate::word_algebra::{basis_monomial, sphere_relations};
    use num_complex::Complex;

    fn ctx_f64(q: f64, t: f64, lmax2: i32) -> ModelContext<f64> {
        ModelContext::new(q, t, HalfInt::new(lmax2), DiracSchedule::default())
    }

    fn hat_only(q: f64, t: f64, lmin2: i32, lmax2: i32, nmax: i32) -> (ModelContext<f64>, Arc<Basis>) {
        let ctx = ctx_f64(q, t, lmax2.max(5));
        (ctx, Basis::hat(lmin2, lmax2, nmax))
    }

    fn entry_at(
        op: &BandedOperator<f64>,
        row: (i32, i32, i8),
        col: (i32, i32, i8),
    ) -> Complex<f64> {
        let r = op.cod().index_of(BasisPoint::new(row.0, row.1, row.2)).unwrap();
        let c = op.dom().index_of(BasisPoint::new(col.0, col.1, col.2)).unwrap();
        op.entry(r, c).cloned().unwrap_or(Complex::new(0.0, 0.0))
    }

    #[test]
    fn shift_weights_are_exact_powers() {
        let (ctx, hat) = hat_only(0.5, 0.0, -4, 8, 8);
        let (alpha, beta) = build_alpha_beta(&hat, &ctx);
        for col in 0..hat.dim() as u32 {
            let p = hat.point(col);
            let n = (p.l.twice + p.m.twice) / 2;
            if hat.index_of(BasisPoint::new(p.l.twice + 1, p.m.twice - 1, p.sigma)).is_some() {
                let b = entry_at(&beta, (p.l.twice + 1, p.m.twice - 1, p.sigma), (p.l.twice, p.m.twice, p.sigma));
                assert_eq!(b.re, ctx.qpow2(2 * n), "beta weight at n={n}");
                assert_eq!(b.im, 0.0);
            }
            if hat
                .index_of(BasisPoint::new(p.l.twice + 1, p.m.twice + 1, p.sigma))
                .is_some()
            {
                let a = entry_at(&alpha, (p.l.twice + 1, p.m.twice + 1, p.sigma), (p.l.twice, p.m.twice, p.sigma));
                assert_eq!(a.re, (1.0 - ctx.qpow2(4 * n + 4)).sqrt());
            }
        }
        assert_eq!(alpha.band2(), 1);
        assert_eq!(beta.band2(), 1);
    }

    #[test]
    fn quantum_su2_relations_hold() {
        for q in [0.3, 0.5, 0.8] {
            let (ctx, hat) = hat_only(q, 0.0, -4, 12, 12);
            let (alpha, beta) = build_alpha_beta(&hat, &ctx);
            let astar = adjoint(&alpha);
            let bstar = adjoint(&beta);
            let id = BandedOperator::identity(&hat, ());
            let unit1 = sub(
                &add(
                    &compose(&astar, &alpha),
                    &scale_real(&compose(&bstar, &beta), &ctx.qpow2(4)),
                ),
                &id,
            );
            let unit2 = sub(&add(&compose(&alpha, &astar), &compose(&beta, &bstar)), &id);
            let swap = sub(&compose(&beta, &bstar), &compose(&bstar, &beta));
            for (rel, name) in [(&unit1, "unit1"), (&unit2, "unit2"), (&swap, "swap")] {
                let r = hat_interior_restrict(rel, 1).max_abs();
                assert!(r <= 1e-14, "{name} residual {r} at q={q}");
            }
            let braid = sub(
                &compose(&beta, &alpha),
                &scale_real(&compose(&alpha, &beta), &q),
            );
            if q == 0.5 {
                // Scaling by one half is exact, so the exchange relation
                // holds bit for bit, truncation included.
                assert!(braid.is_zero_op());
            } else {
                assert!(braid.max_abs() <= 1e-15, "braid at q={q}");
            }
            let braid2 = sub(
                &compose(&bstar, &alpha),
                &scale_real(&compose(&alpha, &bstar), &q),
            );
            assert!(hat_interior_restrict(&braid2, 1).max_abs() <= 1e-15);
        }
    }

    #[test]
    fn phi_entry_oracles() {
        let (ctx, hat) = hat_only(0.5, 0.3, -4, 10, 10);
        let phi0 = build_phi(Gen::X0, &hat, &ctx);
        // phi(x0) on the n = 1 state at level 1.
        let up = entry_at(&phi0, (4, 0, 1), (2, 0, 1));
        let diag = entry_at(&phi0, (2, 0, 1), (2, 0, 1));
        let down = entry_at(&phi0, (0, 0, 1), (2, 0, 1));
        assert!((up.re - 0.50630786706311408).abs() < 1e-15, "{}", up.re);
        assert!((diag.re - 0.20625).abs() < 1e-16, "{}", diag.re);
        assert!((down.re - 0.90571104663683991).abs() < 1e-15, "{}", down.re);
        let phi1 = build_phi(Gen::Xp1, &hat, &ctx);
        // phi(x1) on the n = 0 state at level 1/2.
        let up = entry_at(&phi1, (3, 1, -1), (1, -1, -1));
        let mid = entry_at(&phi1, (1, 1, -1), (1, -1, -1));
        let down = entry_at(&phi1, (-1, 1, -1), (1, -1, -1));
        assert!((up.re - 0.78436877487569583).abs() < 1e-15, "{}", up.re);
        assert!((mid.re - -0.14523687548277813).abs() < 1e-15, "{}", mid.re);
        assert!((down.re - -0.46770717334674267).abs() < 1e-15, "{}", down.re);
    }

    #[test]
    fn phi_x0_lowering_entries_match_closed_form() {
        let (ctx, hat) = hat_only(0.6, 0.4, -4, 12, 12);
        let phi0 = build_phi(Gen::X0, &hat, &ctx);
        let scalefac = (1.0 + ctx.qpow2(4)) * (1.0 - ctx.t()).sqrt();
        for col in 0..hat.dim() as u32 {
            let p = hat.point(col);
            let n = (p.l.twice + p.m.twice) / 2;
            if n < 1 || hat.index_of(BasisPoint::new(p.l.twice - 2, p.m.twice, p.sigma)).is_none()
            {
                continue;
            }
            let got = entry_at(&phi0, (p.l.twice - 2, p.m.twice, p.sigma), (p.l.twice, p.m.twice, p.sigma));
            let want = scalefac * ctx.qpow2(2 * n - 2) * (1.0 - ctx.qpow2(4 * n)).sqrt();
            assert!((got.re - want).abs() <= 1e-15 * want.max(1.0), "n={n}");
        }
    }

    #[test]
    fn flat_sphere_image_is_diagonal() {
        let (ctx, hat) = hat_only(0.5, 1.0, -4, 10, 10);
        let phi0 = build_phi(Gen::X0, &hat, &ctx);
        let shifted = sub(&phi0, &BandedOperator::identity(&hat, ()));
        assert_eq!(shifted.band2(), 0);
        for col in 0..hat.dim() as u32 {
            let p = hat.point(col);
            // The bottom truncation wall cuts the round trip through the
            // level below, so skip that boundary column.
            if p.l.twice == hat.lmin2() {
                continue;
            }
            let n = (p.l.twice + p.m.twice) / 2;
            let got = entry_at(&shifted, (p.l.twice, p.m.twice, p.sigma), (p.l.twice, p.m.twice, p.sigma));
            let want = -(1.0 + ctx.qpow2(4)) * ctx.qpow2(4 * n);
            assert!((got.re - want).abs() <= 1e-16, "n={n}");
        }
    }

    #[test]
    fn phi_respects_sphere_relations() {
        for (q, t) in [(0.5, 0.0), (0.5, 0.7), (0.8, 1.0)] {
            let (ctx, hat) = hat_only(q, t, -6, 14, 14);
            let (alpha, beta) = build_alpha_beta(&hat, &ctx);
            let gens = [
                phi_from_parts(Gen::Xm1, &alpha, &beta, &ctx),
                phi_from_parts(Gen::X0, &alpha, &beta, &ctx),
                phi_from_parts(Gen::Xp1, &alpha, &beta, &ctx),
            ];
            for (k, rel) in sphere_relations(&ctx).iter().enumerate() {
                let r = hat_interior_restrict(&evaluate_in(rel, &gens, &ctx), 2).max_abs();
                assert!(r <= 1e-12, "relation {k} residual {r} at q={q} t={t}");
            }
        }
    }

    #[test]
    fn restriction_extension_identities() {
        let ctx = ctx_f64(0.5, 0.3, 9);
        let geom = SpinGeometry::build(ctx);
        let params = HatParams::for_spinor(&geom.basis);
        let model = build_hat_model(&geom, params);
        let pq = compose(&model.p, &model.q_map);
        assert!(sub(&pq, &BandedOperator::identity(&geom.basis, ())).is_zero_op());
        let qp = compose(&model.q_map, &model.p);
        assert!(sub(&compose(&qp, &qp), &qp).is_zero_op());
        assert!(sub(&adjoint(&qp), &qp).is_zero_op());
        // Compressing the auxiliary Dirac operator recovers the spinor one
        // bit for bit, since both use the same eigenvalue schedule.
        let compressed = compose(&model.p, &compose(&model.dirac.d, &model.q_map));
        assert!(sub(&compressed, &geom.d).is_zero_op());
    }

    #[test]
    #[should_panic(expected = "auxiliary truncation must contain the spinor truncation")]
    fn mismatched_truncations_are_rejected() {
        let ctx = ctx_f64(0.5, 0.3, 11);
        let geom = SpinGeometry::build(ctx);
        let hat = Basis::hat(-2, 9, 9);
        let _ = build_pq(&hat, &geom);
    }

    #[test]
    fn dirac_ladder_identities() {
        let (ctx, hat) = hat_only(0.5, 0.2, 0, 12, 12);
        let parts = build_dirac(&ctx, &hat);
        let abs_diag = LevelDiag::new(&hat, |l2| ctx.dirac().eigenvalue::<f64>(l2, ()));
        let (alpha, beta) = build_alpha_beta(&hat, &ctx);
        for op in [&alpha, &beta] {
            // [F', a] = 0 exactly once every level sign is positive.
            assert!(commutator(&parts.f, op).is_zero_op());
            // [|D'|, a] = a/2, difference-first so the half is exact.
            let ladder = abs_diag.commutator_with(op);
            assert!(sub(&ladder, &scale_real(op, &0.5)).is_zero_op());
            // [D', a] = a F'/2 via the same difference-first route.
            let lhs = compose(&parts.f, &ladder);
            let rhs = scale_real(&compose(op, &parts.f), &0.5);
            assert!(sub(&lhs, &rhs).is_zero_op());
            // The straight commutator agrees to rounding.
            let raw = commutator(&parts.d, op);
            assert!(sub(&raw, &rhs).max_abs() <= 1e-13);
        }
    }

    #[test]
    fn compressed_identity_and_approximation_decay() {
        let ctx = ctx_f64(0.5, 0.3, 31);
        let geom = SpinGeometry::build(ctx);
        let model = build_hat_model(&geom, HatParams::for_spinor(&geom.basis));
        let one = AlgebraElement::one(());
        assert!(sub(
            &model.phi_tilde(&one, &geom.ctx),
            &BandedOperator::identity(&geom.basis, ())
        )
        .is_zero_op());
        let x0 = AlgebraElement::generator(Gen::X0, ());
        let diff = sub(&geom.pi_x[1], &model.phi_tilde(&x0, &geom.ctx));
        let mut last = f64::INFINITY;
        for l2 in (13..=27).step_by(2) {
            let norm = diff.block_norm(HalfInt::new(l2));
            assert!(norm > 0.0 && norm <= 0.35 * last, "l2={l2}: {norm} vs {last}");
            last = norm;
        }
    }

    #[test]
    fn compressed_powers_have_weighted_diagonal_bound() {
        let ctx = ctx_f64(0.5, 0.3, 21);
        let geom = SpinGeometry::build(ctx);
        let model = build_hat_model(&geom, HatParams::for_spinor(&geom.basis));
        for j in 1..=3u32 {
            let a = basis_monomial(j, 0, &geom.ctx);
            let op = model.phi_tilde(&a, &geom.ctx);
            let cap = 4.0f64.powi(j as i32);
            for idx in 0..geom.basis.dim() as u32 {
                let p = geom.basis.point(idx);
                let v = op.entry(idx, idx).cloned().unwrap_or(Complex::new(0.0, 0.0));
                let bound = cap * geom.ctx.qpow2(p.l.twice + p.m.twice);
                assert!(
                    (v.re * v.re + v.im * v.im).sqrt() <= bound * (1.0 + 1e-12),
                    "j={j} l2={} m2={}",
                    p.l.twice,
                    p.m.twice
                );
            }
        }
    }

    #[test]
    fn embedding_defect_decays_rapidly() {
        let ctx = ctx_f64(0.5, 0.3, 31);
        let geom = SpinGeometry::build(ctx);
        let model = build_hat_model(&geom, HatParams::for_spinor(&geom.basis));
        for i in [-1i8, 0, 1] {
            let defect = sub(
                &compose(geom.xi(i), &model.p),
                &compose(&model.p, &model.phi_x[(i + 1) as usize]),
            );
            // Mask the columns the spinor truncation cannot see, then ask
            // for l^10-weighted block norms to fall over the window.
            let mut bld = OpBuilder::new(defect.cod().clone(), defect.dom().clone());
            for (row, col, v) in defect.iter_entries() {
                if defect.dom().point(col).l.twice <= geom.basis.lmax2() - 4 {
                    bld.push(row, col, v.clone());
                }
            }
            let masked = bld.build();
            let mut last = f64::INFINITY;
            for l2 in (15..=27).step_by(2) {
                let l = l2 as f64 / 2.0;
                let weighted = masked.block_norm(HalfInt::new(l2)) * l.powi(10);
                assert!(weighted < last, "i={i} l2={l2}: {weighted} vs {last}");
                last = weighted;
            }
        }
    }

    #[test]
    fn flat_case_defect_still_decays() {
        let ctx = ctx_f64(0.5, 1.0, 41);
        let geom = SpinGeometry::build(ctx);
        let model = build_hat_model(&geom, HatParams::for_spinor(&geom.basis));
        let defect = sub(
            &compose(&geom.pi_x[1], &model.p),
            &compose(&model.p, &model.phi_x[1]),
        );
        let mut bld = OpBuilder::new(defect.cod().clone(), defect.dom().clone());
        for (row, col, v) in defect.iter_entries() {
            if defect.dom().point(col).l.twice <= geom.basis.lmax2() - 4 {
                bld.push(row, col, v.clone());
            }
        }
        let masked = bld.build();
        // The flat-sphere rate is one power of q per level, so the
        // l^10-weighted norms only turn over past l = 14.
        let mut last = f64::INFINITY;
        for l2 in (29..=37).step_by(2) {
            let l = l2 as f64 / 2.0;
            let weighted = masked.block_norm(HalfInt::new(l2)) * l.powi(10);
            assert!(weighted < last, "l2={l2}: {weighted} vs {last}");
            last = weighted;
        }
        let x1 = AlgebraElement::generator(Gen::Xp1, ());
        let diff = sub(&geom.pi_x[2], &model.phi_tilde(&x1, &geom.ctx));
        let mut last = f64::INFINITY;
        for l2 in (17..=37).step_by(2) {
            let norm = diff.block_norm(HalfInt::new(l2));
            assert!(norm > 0.0 && norm <= 0.65 * last, "l2={l2}: {norm} vs {last}");
            last = norm;
        }
    }

    #[test]
    fn compressed_image_matches_one_shot_helper() {
        let ctx = ctx_f64(0.4, 0.6, 9);
        let geom = SpinGeometry::build(ctx);
        let params = HatParams::for_spinor(&geom.basis);
        let model = build_hat_model(&geom, params);
        let a = basis_monomial(1, 1, &geom.ctx);
        let via_model = model.phi_tilde(&a, &geom.ctx);
        let via_free = phi_tilde(&a, &params.basis(), &geom);
        assert!(sub(&via_model, &via_free).is_zero_op());
        let minus_q = scale(&adjoint(&model.phi_x[2]), &C::new(-geom.ctx.qpow2(-2), 0.0));
        assert!(sub(&model.phi_x[0], &minus_q).is_zero_op());
    }
}
