//! Verification suite over a built geometry: algebraic identity checks
//! with guard bands, block-norm decay fits, the index pairing through the
//! charged projection, zeta values with their residue extractors, and the
//! local cocycle tests.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;

use crate::basis_ops::{
    add, adjoint, anticommutator, commutator, compose, interior_restrict, scale_real, sub,
    BandedOperator, BasisPoint, LevelDiag, OpBuilder, C,
};
use crate::podles_repr::{alpha_coeff, build_uq, left_action, CoeffQuery, ModelContext, UqGen};
use crate::qarith::{HalfInt, Scalar};
use crate::spin_geometry::{DiracSchedule, SpinGeometry};
use crate::su2_embedding::{build_hat_model, HatModel, HatParams};
use crate::word_algebra::{represent, star, AlgebraElement, Gen};

/// How a check's outcome is judged.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CheckMode {
    /// The residual must be exactly zero in floating point.
    Exact,
    /// The relative residual on the guarded interior must stay below the
    /// configured tolerance.
    Residual,
    /// A log-linear fit of block norms must land in a slope band.
    DecayFit,
}

impl CheckMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckMode::Exact => "exact",
            CheckMode::Residual => "residual",
            CheckMode::DecayFit => "decay",
        }
    }
}

/// Outcome of a single verification check.
#[derive(Clone, Debug)]
pub struct CheckReport {
    pub id: String,
    pub mode: CheckMode,
    pub pass: bool,
    /// Relative residual, or the band deviation for decay fits.
    pub residual: f64,
    /// Fitted slope in natural-log units per unit of l, when applicable.
    pub slope: Option<f64>,
    /// Coefficient of determination of the fit, when applicable.
    pub r2: Option<f64>,
    /// Band center (or cap) the slope is compared against.
    pub expected: Option<f64>,
    pub tol: f64,
    pub ms: u64,
}

impl CheckReport {
    fn residual_mode(id: &str, residual: f64, tol: f64) -> Self {
        CheckReport {
            id: id.to_string(),
            mode: CheckMode::Residual,
            pass: residual.is_finite() && residual <= tol,
            residual,
            slope: None,
            r2: None,
            expected: None,
            tol,
            ms: 0,
        }
    }

    fn exact_mode(id: &str, residual: f64) -> Self {
        CheckReport {
            id: id.to_string(),
            mode: CheckMode::Exact,
            pass: residual == 0.0,
            residual,
            slope: None,
            r2: None,
            expected: None,
            tol: 0.0,
            ms: 0,
        }
    }
}

/// Settings shared by the verification entry points.
#[derive(Clone, Copy, Debug)]
pub struct SuiteConfig {
    /// Levels stripped from the top of the truncation before a residual is
    /// measured; raised per check to the word degree when that is larger.
    pub guard: i32,
    /// Relative tolerance for residual-mode checks.
    pub tolerance: f64,
    /// Wall-clock source in milliseconds for the timing fields; reports
    /// carry ms = 0 when absent.
    pub clock: Option<fn() -> u64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { guard: 2, tolerance: 1e-10, clock: None }
    }
}

fn now(clock: Option<fn() -> u64>) -> u64 {
    clock.map_or(0, |f| f())
}

fn with_ms(mut rep: CheckReport, started: u64, clock: Option<fn() -> u64>) -> CheckReport {
    rep.ms = now(clock).saturating_sub(started);
    rep
}

fn guard_for(suite: &SuiteConfig, degree: i32) -> i32 {
    suite.guard.max(degree).max(0)
}

fn exact_residual<R: Scalar>(diff: &BandedOperator<R>) -> f64 {
    if diff.is_zero_op() {
        0.0
    } else {
        diff.max_abs().to_f64()
    }
}

/// Relative residual of lhs against rhs with the top `guard` levels cut on
/// both sides, scaled by the larger interior magnitude (at least one).
fn relative_residual<R: Scalar>(
    lhs: &BandedOperator<R>,
    rhs: &BandedOperator<R>,
    guard: i32,
) -> f64 {
    let diff = interior_restrict(&sub(lhs, rhs), guard);
    if diff.is_zero_op() {
        return 0.0;
    }
    let scale = interior_restrict(lhs, guard)
        .max_abs()
        .to_f64()
        .max(interior_restrict(rhs, guard).max_abs().to_f64())
        .max(1.0);
    diff.max_abs().to_f64() / scale
}

fn level_shift_component<R: Scalar>(a: &BandedOperator<R>, step2: i32) -> BandedOperator<R> {
    let mut bld = OpBuilder::new(a.cod().clone(), a.dom().clone());
    for (row, col, v) in a.iter_entries() {
        let rise = a.cod().point(row).l.twice - a.dom().point(col).l.twice;
        if rise == step2 {
            bld.push(row, col, v.clone());
        }
    }
    bld.build()
}

/// Matrix unit at the bottom of the spinor tower, summed over both sigma
/// components: it sends the level-1/2 vector at m_col to the one at
/// m_row and kills everything else.
fn bottom_level_unit<R: Scalar>(
    geom: &SpinGeometry<R>,
    m2_row: i32,
    m2_col: i32,
) -> BandedOperator<R> {
    let ctx = &geom.ctx;
    let mut bld = OpBuilder::new(geom.basis.clone(), geom.basis.clone());
    for sigma in [-1i8, 1] {
        let at = |m2: i32| {
            geom.basis
                .index_of(BasisPoint { l: HalfInt::new(1), m: HalfInt::new(m2), sigma })
                .expect("bottom level present")
        };
        bld.push_real(at(m2_row), at(m2_col), ctx.one());
    }
    bld.build()
}

/// Runs the algebraic identity checks on a built geometry, in a fixed
/// order.  Exact-mode checks demand bitwise zeros; residual-mode checks
/// measure a relative interior residual against the suite tolerance.
pub fn run_algebraic_checks<R: Scalar>(
    geom: &SpinGeometry<R>,
    suite: &SuiteConfig,
) -> Vec<CheckReport> {
    let ctx = &geom.ctx;
    let prec = ctx.prec();
    let clock = suite.clock;
    let tol = suite.tolerance;
    let mut out = Vec::new();
    let identity = BandedOperator::identity(&geom.basis, prec);

    // Defining sphere relations, one operator side against the other.
    let t_el = AlgebraElement::constant_real(ctx.t().clone());
    let x0 = AlgebraElement::generator(Gen::X0, prec);
    let xp1 = AlgebraElement::generator(Gen::Xp1, prec);
    let xm1 = AlgebraElement::generator(Gen::Xm1, prec);
    let x0t = x0.sub(&t_el);
    let two_br = ctx.qnum2(4);
    let flat = AlgebraElement::constant_real(
        two_br.clone() * two_br.clone() * (ctx.one() - ctx.t().clone()),
    );
    let q2x0_t = x0.scaled_real(&ctx.qpow2(4)).add(&t_el);
    let q2inv_x0_t = x0.scaled_real(&ctx.qpow2(-4)).add(&t_el);
    let sides = [
        ("sphere.rel1", xm1.mul(&x0t), x0t.mul(&xm1).scaled_real(&ctx.qpow2(4))),
        ("sphere.rel2", xp1.mul(&x0t), x0t.mul(&xp1).scaled_real(&ctx.qpow2(-4))),
        (
            "sphere.rel3",
            q2x0_t.mul(&x0t).sub(&xm1.mul(&xp1).scaled_real(&two_br)),
            flat.clone(),
        ),
        (
            "sphere.rel4",
            q2inv_x0_t.mul(&x0t).sub(&xp1.mul(&xm1).scaled_real(&two_br)),
            flat,
        ),
    ];
    for (id, lhs, rhs) in &sides {
        let t0 = now(clock);
        let r = relative_residual(
            &represent(lhs, geom),
            &represent(rhs, geom),
            guard_for(suite, 2),
        );
        out.push(with_ms(CheckReport::residual_mode(id, r, tol), t0, clock));
    }

    // The involution against the operator adjoint.
    let t0 = now(clock);
    let mut worst = 0.0f64;
    for g in [Gen::Xm1, Gen::X0, Gen::Xp1] {
        let el = AlgebraElement::generator(g, prec);
        let lhs = adjoint(&represent(&el, geom));
        let rhs = represent(&star(&el, ctx), geom);
        worst = worst.max(relative_residual(&lhs, &rhs, guard_for(suite, 1)));
    }
    out.push(with_ms(CheckReport::residual_mode("sphere.star", worst, tol), t0, clock));

    // Quantum group relations among k, e, f.
    let t0 = now(clock);
    let k = build_uq(UqGen::K, &geom.basis, ctx);
    let kinv = build_uq(UqGen::KInv, &geom.basis, ctx);
    let e = build_uq(UqGen::E, &geom.basis, ctx);
    let f = build_uq(UqGen::F, &geom.basis, ctx);
    let ef_scale = (ctx.qpow2(-2) - ctx.qpow2(2)).recip();
    let uq_pairs = [
        (compose(&k, &kinv), identity.clone()),
        (compose(&k, &compose(&e, &kinv)), scale_real(&e, &ctx.qpow2(-2))),
        (compose(&k, &compose(&f, &kinv)), scale_real(&f, &ctx.qpow2(2))),
        (
            commutator(&e, &f),
            scale_real(&sub(&compose(&k, &k), &compose(&kinv, &kinv)), &ef_scale),
        ),
    ];
    let mut worst = 0.0f64;
    for (lhs, rhs) in &uq_pairs {
        worst = worst.max(relative_residual(lhs, rhs, guard_for(suite, 0)));
    }
    out.push(with_ms(CheckReport::residual_mode("uq.rel", worst, tol), t0, clock));

    // Crossed-product relations through the coproduct.
    let t0 = now(clock);
    let mut worst = 0.0f64;
    for g in [Gen::Xm1, Gen::X0, Gen::Xp1] {
        let px = geom.xi(g.weight());
        let act = |h: UqGen| represent(&left_action(h, g, ctx), geom);
        let cases = [
            (compose(&k, px), compose(&act(UqGen::K), &k)),
            (
                compose(&f, px),
                add(&compose(&act(UqGen::F), &k), &compose(&act(UqGen::KInv), &f)),
            ),
            (
                compose(&e, px),
                add(&compose(&act(UqGen::E), &k), &compose(&act(UqGen::KInv), &e)),
            ),
        ];
        for (lhs, rhs) in &cases {
            worst = worst.max(relative_residual(lhs, rhs, guard_for(suite, 1)));
        }
    }
    out.push(with_ms(CheckReport::residual_mode("crossed", worst, tol), t0, clock));

    // Approximant relations with their corrections at the bottom level,
    // where the shift coefficients are clamped.  The raising-first
    // products keep the bare constant; the lowering-first products pick
    // up an extra q^-1 (exchange) or q^-2 (quadratic) on top of it.
    // The corrections are specific to the unit winding, and for higher
    // windings the approximants lose entries at the bottom wall of the
    // truncation, so both families of checks stay restricted to n2 = 1.
    if geom.n.twice == 1 {
        let t_id = scale_real(&identity, ctx.t());
        let z0t = sub(geom.zi(0), &t_id);
        let q2z0_t = add(&scale_real(geom.zi(0), &ctx.qpow2(4)), &t_id);
        let q2inv_z0_t = add(&scale_real(geom.zi(0), &ctx.qpow2(-4)), &t_id);
        let flat_id = scale_real(
            &identity,
            &(two_br.clone() * two_br.clone() * (ctx.one() - ctx.t().clone())),
        );
        let half_br = ctx.qnum2(1);
        let corr = (ctx.one() + ctx.qpow2(4))
            * (ctx.one() - ctx.t().clone()
                + half_br.clone() * half_br * ctx.t().clone() * ctx.t().clone());
        let proj = |m2: i32| {
            BandedOperator::diagonal(&geom.basis, |p| {
                if p.l.twice == 1 && p.m.twice == m2 {
                    Complex::new(ctx.one(), ctx.zero())
                } else {
                    Complex::new(ctx.zero(), ctx.zero())
                }
            })
        };
        // The exchange relations pick up a rank-two correction where the
        // lowering coefficients are clamped at the bottom level: the limit
        // of the clamped two-step products is the same constant as in the
        // quadratic corrections, divided by sqrt(1 + q^2).
        let bottom_unit = |m2_row: i32, m2_col: i32| bottom_level_unit(geom, m2_row, m2_col);
        let root = (ctx.one() + ctx.qpow2(4)).sqrt();
        let exch_defect = -(corr.clone() / root);
        let exch_defect_up = exch_defect.clone() * ctx.qpow2(-2);
        let z_cases = [
            (
                "z.rel1",
                compose(geom.zi(-1), &z0t),
                add(
                    &scale_real(&compose(&z0t, geom.zi(-1)), &ctx.qpow2(4)),
                    &scale_real(&bottom_unit(-1, 1), &exch_defect),
                ),
            ),
            (
                "z.rel2",
                compose(geom.zi(1), &z0t),
                add(
                    &scale_real(&compose(&z0t, geom.zi(1)), &ctx.qpow2(-4)),
                    &scale_real(&bottom_unit(1, -1), &exch_defect_up),
                ),
            ),
            (
                "z.rel3",
                sub(
                    &compose(&q2z0_t, &z0t),
                    &scale_real(&compose(geom.zi(-1), geom.zi(1)), &two_br),
                ),
                sub(&flat_id, &scale_real(&proj(-1), &corr)),
            ),
            (
                "z.rel4",
                sub(
                    &compose(&q2inv_z0_t, &z0t),
                    &scale_real(&compose(geom.zi(1), geom.zi(-1)), &two_br),
                ),
                sub(&flat_id, &scale_real(&proj(1), &(corr.clone() * ctx.qpow2(-4)))),
            ),
        ];
        for (id, lhs, rhs) in &z_cases {
            let t0 = now(clock);
            let r = relative_residual(lhs, rhs, guard_for(suite, 2));
            out.push(with_ms(CheckReport::residual_mode(id, r, tol), t0, clock));
        }
    }

    // Equivariance of the Dirac operator, bitwise.
    let t0 = now(clock);
    let mut worst = 0.0f64;
    for op in [&k, &kinv, &e, &f] {
        worst = worst.max(exact_residual(&commutator(&geom.d, op)));
    }
    out.push(with_ms(CheckReport::exact_mode("equiv.D", worst), t0, clock));

    // Equivariance of the real structure through the antipode twist.
    let t0 = now(clock);
    let sandwich = |x: &BandedOperator<R>| compose(&k, &compose(x, &kinv));
    let j_cases = [
        (geom.j.conjugate(&k), sandwich(&kinv)),
        (geom.j.conjugate(&f), scale_real(&sandwich(&e), &-ctx.q().clone())),
        (geom.j.conjugate(&e), scale_real(&sandwich(&f), &-ctx.qpow2(-2))),
    ];
    let mut worst = 0.0f64;
    for (lhs, rhs) in &j_cases {
        worst = worst.max(relative_residual(lhs, rhs, 0));
    }
    out.push(with_ms(CheckReport::residual_mode("equiv.J", worst, tol), t0, clock));

    // The real even structure identities, all bitwise.
    let t0 = now(clock);
    let j2_sign = ctx.from_i64(if geom.n.twice % 2 == 0 { 1 } else { -1 });
    let signed_id = scale_real(&identity, &j2_sign);
    let jd = geom.j.after(&geom.d).linear_part;
    let dj = geom.j.then(&geom.d).linear_part;
    let jg = geom.j.after(&geom.gamma).linear_part;
    let gj = geom.j.then(&geom.gamma).linear_part;
    let real_even_diffs = [
        sub(&compose(&geom.gamma, &geom.gamma), &identity),
        sub(&adjoint(&geom.gamma), &geom.gamma),
        sub(&compose(&geom.f, &geom.f), &identity),
        sub(&geom.d, &compose(&geom.f, &geom.abs_d)),
        anticommutator(&geom.gamma, &geom.d),
        sub(&compose(&geom.d, &geom.d), &compose(&geom.abs_d, &geom.abs_d)),
        sub(&geom.j.square(), &signed_id),
        sub(&geom.j0.square(), &signed_id),
        sub(&jd, &dj),
        add(&jg, &gj),
    ];
    let mut worst = 0.0f64;
    for d in &real_even_diffs {
        worst = worst.max(exact_residual(d));
    }
    out.push(with_ms(CheckReport::exact_mode("real.even", worst), t0, clock));

    // Approximants against the reflected approximants.  Away from the
    // bottom level the two families commute; at the bottom the clamped
    // coefficients leave finite-rank commutators with closed forms in
    // the square of the bottom middle coefficient.
    if geom.n.twice == 1 {
        let t0 = now(clock);
        let half_br = ctx.qnum2(1);
        let alpha_sq = ctx.one() - ctx.t().clone()
            + half_br.clone() * half_br * ctx.t().clone() * ctx.t().clone();
        let root = (ctx.one() + ctx.qpow2(4)).sqrt();
        let signed_proj = sub(
            &bottom_level_unit(geom, 1, 1),
            &bottom_level_unit(geom, -1, -1),
        );
        let mut worst = 0.0f64;
        for j in [-1i8, 0, 1] {
            let w = geom.j0.conjugate(geom.zi(j));
            for i in [-1i8, 0, 1] {
                let defect = match (i, j) {
                    (-1, -1) => scale_real(&signed_proj, &(alpha_sq.clone() * ctx.qpow2(-2))),
                    (1, 1) => scale_real(&signed_proj, &-(alpha_sq.clone() * ctx.qpow2(2))),
                    (-1, 0) => scale_real(
                        &bottom_level_unit(geom, -1, 1),
                        &-(alpha_sq.clone() * root.clone() * ctx.qpow2(-2)),
                    ),
                    (0, -1) => scale_real(
                        &bottom_level_unit(geom, 1, -1),
                        &-(alpha_sq.clone() * root.clone() * ctx.qpow2(-2)),
                    ),
                    (0, 1) => scale_real(
                        &bottom_level_unit(geom, -1, 1),
                        &-(alpha_sq.clone() * root.clone()),
                    ),
                    (1, 0) => scale_real(
                        &bottom_level_unit(geom, 1, -1),
                        &-(alpha_sq.clone() * root.clone()),
                    ),
                    _ => BandedOperator::zero(geom.basis.clone(), geom.basis.clone()),
                };
                let lhs = compose(geom.zi(i), &w);
                let rhs = add(&compose(&w, geom.zi(i)), &defect);
                worst = worst.max(relative_residual(&lhs, &rhs, guard_for(suite, 2)));
            }
        }
        out.push(with_ms(CheckReport::residual_mode("commutant.J0z", worst, tol), t0, clock));
    }

    // The modulus derivation acts as the level-shift grading.
    let t0 = now(clock);
    let report = match ctx.dirac() {
        DiracSchedule::Linear { c1, .. } => {
            let slope = *c1;
            let exact = ctx.dirac().is_unit_linear();
            let mut worst = 0.0f64;
            for i in [-1i8, 0, 1] {
                let px = geom.xi(i);
                let lhs = geom.delta(px);
                let rhs = add(
                    &scale_real(&level_shift_component(px, 2), &ctx.from_f64(slope)),
                    &scale_real(&level_shift_component(px, -2), &ctx.from_f64(-slope)),
                );
                if exact {
                    worst = worst.max(exact_residual(&sub(&lhs, &rhs)));
                } else {
                    worst = worst.max(relative_residual(&lhs, &rhs, guard_for(suite, 1)));
                }
            }
            if exact {
                CheckReport::exact_mode("regular.delta", worst)
            } else {
                CheckReport::residual_mode("regular.delta", worst, tol)
            }
        }
        DiracSchedule::Custom { .. } => {
            let mut worst = 0.0f64;
            for i in [-1i8, 0, 1] {
                let px = geom.xi(i);
                worst = worst.max(relative_residual(
                    &geom.delta(px),
                    &commutator(&geom.abs_d, px),
                    guard_for(suite, 1),
                ));
            }
            CheckReport::residual_mode("regular.delta", worst, tol)
        }
    };
    out.push(with_ms(report, t0, clock));

    out
}

/// One labeled block-norm series measured on a built geometry; `points`
/// pairs the doubled level with the raw (unweighted) block norm.
#[derive(Clone, Debug)]
pub struct DecaySeries {
    pub check_id: &'static str,
    pub series: String,
    pub points: Vec<(i32, f64)>,
}

fn basis_block_norms<R: Scalar>(op: &BandedOperator<R>) -> Vec<(i32, f64)> {
    op.block_norms().into_iter().map(|(l2, v)| (l2, v.to_f64())).collect()
}

fn series_appr_xz<R: Scalar>(geom: &SpinGeometry<R>) -> Vec<DecaySeries> {
    [-1i8, 0, 1]
        .iter()
        .map(|&i| DecaySeries {
            check_id: "appr.xz",
            series: format!("i={i}"),
            points: basis_block_norms(&sub(geom.xi(i), geom.zi(i))),
        })
        .collect()
}

fn series_bdd_dx<R: Scalar>(geom: &SpinGeometry<R>) -> Vec<DecaySeries> {
    [-1i8, 0, 1]
        .iter()
        .map(|&i| DecaySeries {
            check_id: "bdd.Dx",
            series: format!("i={i}"),
            points: basis_block_norms(&commutator(&geom.d, geom.xi(i))),
        })
        .collect()
}

fn series_fredholm<R: Scalar>(geom: &SpinGeometry<R>) -> Vec<DecaySeries> {
    [-1i8, 0, 1]
        .iter()
        .map(|&i| DecaySeries {
            check_id: "fredholm.Fx",
            series: format!("i={i}"),
            points: basis_block_norms(&commutator(&geom.f, geom.xi(i))),
        })
        .collect()
}

fn series_first_order<R: Scalar>(geom: &SpinGeometry<R>) -> Vec<DecaySeries> {
    let mut out = Vec::new();
    for i in [-1i8, 0, 1] {
        let dxi = commutator(&geom.d, geom.xi(i));
        for j in [-1i8, 0, 1] {
            let w = geom.j.conjugate(geom.xi(j));
            out.push(DecaySeries {
                check_id: "first.order",
                series: format!("i={i} j={j}"),
                points: basis_block_norms(&commutator(&dxi, &w)),
            });
        }
    }
    out
}

fn series_commutant<R: Scalar>(geom: &SpinGeometry<R>) -> Vec<DecaySeries> {
    let mut out = Vec::new();
    for i in [-1i8, 0, 1] {
        for j in [-1i8, 0, 1] {
            let w = geom.j.conjugate(geom.xi(j));
            out.push(DecaySeries {
                check_id: "commutant",
                series: format!("i={i} j={j}"),
                points: basis_block_norms(&commutator(geom.xi(i), &w)),
            });
        }
    }
    out
}

fn series_coeff_pm<R: Scalar>(geom: &SpinGeometry<R>) -> Vec<DecaySeries> {
    let ctx = &geom.ctx;
    let mut points = Vec::new();
    for (l2, _) in geom.basis.levels() {
        let mut worst = 0.0f64;
        let mut m2 = -l2;
        while m2 <= l2 {
            for i in [-1i8, 0, 1] {
                let q = |n2: i32| CoeffQuery {
                    i,
                    nu: 1,
                    l: HalfInt::new(l2),
                    m: HalfInt::new(m2),
                    n: HalfInt::new(n2),
                };
                let gap = alpha_coeff(q(1), ctx) - alpha_coeff(q(-1), ctx);
                worst = worst.max(gap.abs().to_f64());
            }
            m2 += 2;
        }
        points.push((l2, worst));
    }
    vec![DecaySeries { check_id: "coeff.pm", series: "nu=+1".to_string(), points }]
}

fn series_smooth_phi<R: Scalar>(geom: &SpinGeometry<R>) -> Vec<DecaySeries> {
    let model = build_hat_model(geom, HatParams::for_spinor(&geom.basis));
    let prec = geom.ctx.prec();
    [Gen::Xm1, Gen::X0, Gen::Xp1]
        .iter()
        .map(|&g| {
            let el = AlgebraElement::generator(g, prec);
            let pt = model.phi_tilde(&el, &geom.ctx);
            DecaySeries {
                check_id: "smooth.phi",
                series: format!("i={}", g.weight()),
                points: basis_block_norms(&sub(geom.xi(g.weight()), &pt)),
            }
        })
        .collect()
}

/// All decay series measured by [`run_decay_checks`], for export.
pub fn collect_decay_series<R: Scalar>(geom: &SpinGeometry<R>) -> Vec<DecaySeries> {
    let mut out = series_appr_xz(geom);
    out.extend(series_bdd_dx(geom));
    out.extend(series_first_order(geom));
    out.extend(series_commutant(geom));
    out.extend(series_fredholm(geom));
    out.extend(series_coeff_pm(geom));
    out.extend(series_smooth_phi(geom));
    out
}

/// Least-squares slope of ln(norm) against l.  Points with nonpositive or
/// nonfinite norms are dropped; fewer than four usable points is an error.
/// Returns (slope, r_squared).
pub fn estimate_decay_slope(points: &[(f64, f64)]) -> Result<(f64, f64), String> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, v)| *v > 0.0 && v.is_finite())
        .map(|(l, v)| (*l, libm::log(*v)))
        .collect();
    if usable.len() < 4 {
        return Err(format!("need at least 4 positive norms, got {}", usable.len()));
    }
    let n = usable.len() as f64;
    let (mut sx, mut sy) = (0.0f64, 0.0f64);
    for (x, y) in &usable {
        sx += x;
        sy += y;
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy, mut syy) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in &usable {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err("all points share one abscissa".to_string());
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok((slope, r2))
}

fn window_points(points: &[(i32, f64)], lo_l: f64, hi_l: f64, floor: f64) -> Vec<(f64, f64)> {
    points
        .iter()
        .filter_map(|&(l2, v)| {
            let l = f64::from(l2) / 2.0;
            (l >= lo_l && l <= hi_l && v.is_finite() && v > floor).then_some((l, v))
        })
        .collect()
}

enum SlopeBand {
    /// |slope - expected| <= frac * |expected|, with an r-squared floor.
    Centered { expected: f64, frac: f64, min_r2: f64 },
    /// slope <= frac * unit: growth along l is forbidden, decay is fine,
    /// so no fit quality gate.
    Bounded { frac: f64, unit: f64 },
    /// slope <= cap, with an r-squared floor; deviation in units of `unit`.
    Cap { cap: f64, unit: f64, min_r2: f64 },
}

fn judge_slopes(
    id: &'static str,
    series: &[DecaySeries],
    band: &SlopeBand,
    lo_l: f64,
    hi_l: f64,
    floor: f64,
) -> Option<CheckReport> {
    let mut worst_res = f64::NEG_INFINITY;
    let mut worst_slope = 0.0f64;
    let mut min_r2 = f64::INFINITY;
    let mut any = false;
    for s in series {
        let pts = window_points(&s.points, lo_l, hi_l, floor);
        if pts.len() < 8 {
            continue;
        }
        let Ok((slope, r2)) = estimate_decay_slope(&pts) else { continue };
        any = true;
        let res = match band {
            SlopeBand::Centered { expected, .. } => {
                libm::fabs(slope - expected) / libm::fabs(*expected)
            }
            SlopeBand::Bounded { unit, .. } => slope / unit,
            SlopeBand::Cap { cap, unit, .. } => (slope - cap) / unit,
        };
        if res > worst_res {
            worst_res = res;
            worst_slope = slope;
        }
        min_r2 = min_r2.min(r2);
    }
    if !any {
        return None;
    }
    let (expected, tol, r2_floor) = match band {
        SlopeBand::Centered { expected, frac, min_r2 } => (*expected, *frac, Some(*min_r2)),
        SlopeBand::Bounded { frac, .. } => (0.0, *frac, None),
        SlopeBand::Cap { cap, min_r2, .. } => (*cap, 0.0, Some(*min_r2)),
    };
    let r2_ok = r2_floor.map_or(true, |m| min_r2 > m);
    Some(CheckReport {
        id: id.to_string(),
        mode: CheckMode::DecayFit,
        pass: worst_res.is_finite() && worst_res <= tol && r2_ok,
        residual: worst_res,
        slope: Some(worst_slope),
        r2: r2_floor.map(|_| min_r2),
        expected: Some(expected),
        tol,
        ms: 0,
    })
}

fn judge_monotone(
    id: &'static str,
    series: &[DecaySeries],
    lo_l: f64,
    hi_l: f64,
    floor: f64,
    weight_pow: f64,
) -> Option<CheckReport> {
    let mut worst = f64::NEG_INFINITY;
    let mut any = false;
    for s in series {
        let pts = window_points(&s.points, lo_l, hi_l, floor);
        if pts.len() < 4 {
            continue;
        }
        any = true;
        let weighted: Vec<f64> =
            pts.iter().map(|(l, v)| v * libm::pow(*l, weight_pow)).collect();
        for k in 1..weighted.len() {
            let ratio = if weighted[k - 1] > 0.0 {
                weighted[k] / weighted[k - 1]
            } else {
                f64::INFINITY
            };
            worst = worst.max(ratio - 1.0);
        }
    }
    if !any {
        return None;
    }
    Some(CheckReport {
        id: id.to_string(),
        mode: CheckMode::DecayFit,
        pass: worst < 0.0,
        residual: worst,
        slope: None,
        r2: None,
        expected: None,
        tol: 0.0,
        ms: 0,
    })
}

/// Runs the block-norm decay checks.  Fits use levels with l >= 8 up to
/// the guarded top of the truncation; a check whose window holds fewer
/// than eight levels (four for the weighted monotonicity check) is
/// omitted rather than judged on too little data.  Points below 100 ulps
/// of the arithmetic are treated as noise and dropped before fitting.
pub fn run_decay_checks<R: Scalar>(
    geom: &SpinGeometry<R>,
    suite: &SuiteConfig,
) -> Vec<CheckReport> {
    let clock = suite.clock;
    let q = geom.ctx.q().to_f64();
    let lnq = libm::log(q);
    let t_is_flat = (geom.ctx.t().to_f64() - 1.0).abs() <= 1e-12;
    let lo_l = 8.0;
    let hi_l = f64::from(geom.basis.lmax2() - 2 * suite.guard.max(0)) / 2.0;
    let floor = R::eps(geom.ctx.prec()).to_f64() * 100.0;
    let fast = if t_is_flat { lnq } else { 2.0 * lnq };
    let cap = if t_is_flat { 0.95 * lnq } else { 1.9 * lnq };
    let unit = libm::fabs(lnq);
    let mut out = Vec::new();

    let t0 = now(clock);
    if let Some(rep) = judge_slopes(
        "appr.xz",
        &series_appr_xz(geom),
        &SlopeBand::Centered { expected: fast, frac: 0.05, min_r2: 0.99 },
        lo_l,
        hi_l,
        floor,
    ) {
        out.push(with_ms(rep, t0, clock));
    }

    let t0 = now(clock);
    if let Some(rep) = judge_slopes(
        "bdd.Dx",
        &series_bdd_dx(geom),
        &SlopeBand::Bounded { frac: 0.05, unit },
        lo_l,
        hi_l,
        floor,
    ) {
        out.push(with_ms(rep, t0, clock));
    }

    let t0 = now(clock);
    if let Some(rep) = judge_slopes(
        "first.order",
        &series_first_order(geom),
        &SlopeBand::Cap { cap, unit, min_r2: 0.98 },
        lo_l,
        hi_l,
        floor,
    ) {
        out.push(with_ms(rep, t0, clock));
    }

    let t0 = now(clock);
    if let Some(rep) = judge_slopes(
        "commutant",
        &series_commutant(geom),
        &SlopeBand::Cap { cap, unit, min_r2: 0.98 },
        lo_l,
        hi_l,
        floor,
    ) {
        out.push(with_ms(rep, t0, clock));
    }

    // The l^10-weighted sign-commutator norms peak near 10/ln(1/q) levels
    // at the flat parameter (single power of q) and near half that away
    // from it, so the monotone window starts past the flat-case peak.
    let mono_lo = if t_is_flat { 16.0 } else { 12.0 };
    let t0 = now(clock);
    if let Some(rep) =
        judge_monotone("fredholm.Fx", &series_fredholm(geom), mono_lo, hi_l.min(28.0), floor, 10.0)
    {
        out.push(with_ms(rep, t0, clock));
    }

    let t0 = now(clock);
    if let Some(rep) = judge_slopes(
        "coeff.pm",
        &series_coeff_pm(geom),
        &SlopeBand::Cap { cap: 0.95 * lnq, unit, min_r2: 0.98 },
        lo_l,
        hi_l,
        floor,
    ) {
        out.push(with_ms(rep, t0, clock));
    }

    let t0 = now(clock);
    if let Some(rep) = judge_slopes(
        "smooth.phi",
        &series_smooth_phi(geom),
        &SlopeBand::Cap { cap, unit, min_r2: 0.98 },
        lo_l,
        hi_l,
        floor,
    ) {
        out.push(with_ms(rep, t0, clock));
    }

    out
}

/// The charged projection as a 2x2 matrix of algebra elements, normalized
/// so that the matrix trace composed with the circle evaluation is the
/// constant 1.
pub fn projection_p<R: Scalar>(ctx: &ModelContext<R>) -> [[AlgebraElement<R>; 2]; 2] {
    let prec = ctx.prec();
    let t = ctx.t().clone();
    let q2 = ctx.qpow2(4);
    let w = ctx.one() + q2.clone();
    let norm = ((ctx.from_i64(2) - t.clone()) * w.clone()).recip();
    let root = w.clone().sqrt();
    let shift = AlgebraElement::constant_real(w - t);
    let x0 = AlgebraElement::generator(Gen::X0, prec);
    let p00 = x0.add(&shift).scaled_real(&norm);
    let p01 = AlgebraElement::generator(Gen::Xp1, prec)
        .scaled_real(&-(root.clone() * norm.clone()));
    let p10 = AlgebraElement::generator(Gen::Xm1, prec)
        .scaled_real(&(ctx.q().clone() * root * norm.clone()));
    let p11 = x0.scaled_real(&-q2).add(&shift).scaled_real(&norm);
    [[p00, p01], [p10, p11]]
}

/// How the index pairing is evaluated.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum IndexMethod {
    /// Closed-form level sums of the pairing series.
    Series,
    /// Conditional trace of the grading against the conjugated phase.
    Trace,
}

fn tail_bound(value: f64, terms: &[f64]) -> Result<(f64, f64), String> {
    let k = terms.len();
    if k < 2 {
        return Err("truncation too small to estimate a tail".to_string());
    }
    let prev = libm::fabs(terms[k - 2]);
    let last = libm::fabs(terms[k - 1]);
    if last == 0.0 {
        return Ok((value, 0.0));
    }
    if prev <= last {
        return Err("per-level terms are not contracting".to_string());
    }
    let r = last / prev;
    Ok((value, last * r / (1.0 - r)))
}

fn chern_series<R: Scalar>(geom: &SpinGeometry<R>) -> Result<(f64, f64), String> {
    let ctx = &geom.ctx;
    let n2 = geom.n.twice;
    let lmax2 = geom.basis.lmax2();
    let gap = ctx.one() - ctx.qpow2(4);
    let pref = ctx.qpow2(-4) * gap.clone() * gap * ctx.qnum2(2 * n2);
    let mut total = ctx.zero();
    let mut terms: Vec<f64> = Vec::new();
    let mut l2 = n2;
    while l2 <= lmax2 {
        let mut s = ctx.zero();
        let mut m2 = -l2;
        while m2 <= l2 {
            s = s + ctx.qnum2(l2 - m2 + 2) * ctx.qnum2(l2 + m2)
                / (ctx.qnum2(2 * l2) * ctx.qnum2(2 * l2 + 4));
            m2 += 2;
        }
        let term = pref.clone() * s;
        total = total + term.clone();
        terms.push(term.to_f64());
        l2 += 2;
    }
    tail_bound(total.to_f64(), &terms)
}

fn chern_trace<R: Scalar>(geom: &SpinGeometry<R>) -> Result<(f64, f64), String> {
    let p = projection_p(&geom.ctx);
    let mut value = Complex::new(0.0f64, 0.0f64);
    let mut level: BTreeMap<i32, f64> = BTreeMap::new();
    for diag in [&p[0][0], &p[1][1]] {
        let repp = represent(diag, geom);
        let op = compose(&geom.gamma, &compose(&geom.f, &commutator(&geom.f, &repp)));
        for (l2, s) in op.level_diagonal_sums() {
            let c = Complex::new(s.re.to_f64(), s.im.to_f64()) * 0.5;
            value += c;
            *level.entry(l2).or_insert(0.0) += c.re;
        }
    }
    if libm::fabs(value.im) > 1e-8 {
        return Err("pairing trace has a nonreal part".to_string());
    }
    let terms: Vec<f64> = level.values().copied().collect();
    tail_bound(value.re, &terms)
}

/// Pairing of the charged projection with the Fredholm module, together
/// with an estimated truncation bound from the last two level terms.
pub fn chern_pairing<R: Scalar>(
    geom: &SpinGeometry<R>,
    method: IndexMethod,
) -> Result<(f64, f64), String> {
    match method {
        IndexMethod::Series => chern_series(geom),
        IndexMethod::Trace => chern_trace(geom),
    }
}

fn cpow(base: f64, w: Complex<f64>) -> Complex<f64> {
    let ln = libm::log(base);
    let mag = libm::exp(w.re * ln);
    Complex::new(mag * libm::cos(w.im * ln), mag * libm::sin(w.im * ln))
}

fn euler_maclaurin_tail(a0: f64, z: Complex<f64>) -> Complex<f64> {
    let two = Complex::new(2.0, 0.0);
    let one = Complex::new(1.0, 0.0);
    cpow(a0, two - z) / (z - two)
        + cpow(a0, one - z) * 0.5
        + (z - one) * cpow(a0, -z) / 12.0
}

/// Truncated zeta value: the level sums of the represented element
/// weighted by the Dirac eigenvalue to the power -z.  For scalar elements
/// under the unit linear schedule the missing tail is restored by an
/// Euler-Maclaurin estimate whenever Re z > 2.
pub fn zeta_partial<R: Scalar>(
    a: &AlgebraElement<R>,
    z: Complex<f64>,
    geom: &SpinGeometry<R>,
) -> Complex<f64> {
    let op = represent(a, geom);
    let mut acc = Complex::new(0.0f64, 0.0f64);
    for (l2, s) in op.level_diagonal_sums() {
        let d = geom.abs_d_diag.value(l2).to_f64();
        if d <= 0.0 {
            continue;
        }
        acc += Complex::new(s.re.to_f64(), s.im.to_f64()) * cpow(d, -z);
    }
    if let Some(c) = a.as_scalar() {
        if z.re > 2.0 && geom.ctx.dirac().is_unit_linear() {
            let a0 = f64::from(geom.basis.lmax2() + 3) / 2.0;
            let tail = euler_maclaurin_tail(a0, z) * 4.0;
            acc += Complex::new(c.re.to_f64(), c.im.to_f64()) * tail;
        }
    }
    acc
}

fn aitken_limit(xs: &[f64]) -> Result<f64, String> {
    let mut v: Vec<f64> = xs.to_vec();
    if v.is_empty() {
        return Err("no data for sequence acceleration".to_string());
    }
    while v.len() >= 3 {
        let mut w = Vec::with_capacity(v.len() - 2);
        for k in 0..v.len() - 2 {
            let (a, b, c) = (v[k], v[k + 1], v[k + 2]);
            let denom = (c - b) - (b - a);
            let accel = if denom == 0.0 { c } else { c - (c - b) * (c - b) / denom };
            w.push(if accel.is_finite() { accel } else { c });
        }
        v = w;
    }
    Ok(*v.last().expect("nonempty by construction"))
}

fn neville_to_zero(pts: &[(f64, f64)]) -> Result<f64, String> {
    let n = pts.len();
    if n == 0 {
        return Err("no data for extrapolation".to_string());
    }
    let xs: Vec<f64> = pts.iter().map(|(x, _)| *x).collect();
    let mut val: Vec<f64> = pts.iter().map(|(_, y)| *y).collect();
    for stage in 1..n {
        for k in 0..n - stage {
            val[k] = (xs[k] * val[k + 1] - xs[k + stage] * val[k]) / (xs[k] - xs[k + stage]);
        }
    }
    Ok(val[0])
}

/// Residue of the zeta function of `op` at the given pole (1 or 2), from
/// the level-diagonal sums.  The top `damaged_levels` levels are dropped
/// to clear truncation damage; level sums must be real.
pub fn residue_of_operator<R: Scalar>(
    pole: u32,
    op: &BandedOperator<R>,
    damaged_levels: i32,
    geom: &SpinGeometry<R>,
) -> Result<f64, String> {
    if pole != 1 && pole != 2 {
        return Err(format!("only the poles at 1 and 2 are implemented, got {pole}"));
    }
    let hi = geom.basis.lmax2() - 2 * damaged_levels.max(0);
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for (l2, s) in op.level_diagonal_sums() {
        if l2 > hi {
            continue;
        }
        let re = s.re.to_f64();
        let im = s.im.to_f64();
        if libm::fabs(im) > 1e-10 * libm::fabs(re).max(1.0) {
            return Err(format!("level sums are not real at l2={l2}"));
        }
        let d = geom.abs_d_diag.value(l2).to_f64();
        pts.push((d, re));
    }
    if pts.len() < 4 {
        return Err(format!("need at least 4 usable levels, got {}", pts.len()));
    }
    match pole {
        1 => {
            let tail: Vec<f64> =
                pts[pts.len().saturating_sub(8)..].iter().map(|(_, c)| *c).collect();
            aitken_limit(&tail)
        }
        _ => {
            let tail: Vec<(f64, f64)> = pts[pts.len().saturating_sub(5)..]
                .iter()
                .map(|(d, c)| (1.0 / d, c / d))
                .collect();
            neville_to_zero(&tail)
        }
    }
}

/// Residue of the zeta function of an algebra element at the given pole.
pub fn residue_at<R: Scalar>(
    pole: u32,
    a: &AlgebraElement<R>,
    geom: &SpinGeometry<R>,
) -> Result<f64, String> {
    let op = represent(a, geom);
    residue_of_operator(pole, &op, a.max_word_len() as i32, geom)
}

/// Residue at the pole 1 for the compressed k-th power of beta beta*, an
/// operator outside the sphere algebra with the closed form 2/(1-q^(2k)).
pub fn beta_monomial_residue<R: Scalar>(k: u32, geom: &SpinGeometry<R>) -> Result<f64, String> {
    if k == 0 {
        return Err("the beta-monomial power must be at least 1".to_string());
    }
    let model = build_hat_model(geom, HatParams::for_spinor(&geom.basis));
    let bb = compose(&model.beta, &adjoint(&model.beta));
    let mut pow = bb.clone();
    for _ in 1..k {
        pow = compose(&pow, &bb);
    }
    let op = compose(&model.p, &compose(&pow, &model.q_map));
    residue_of_operator(1, &op, 0, geom)
}

/// Value of the quadratic local cocycle on a triple of elements: the
/// trace of grading * smoothed a0 * delta(smoothed a1) * delta(smoothed
/// a2) * |D|^-2.  Vanishes identically because every factor except the
/// grading is diagonal in the spin label with equal blocks.
pub fn local_cocycle_value<R: Scalar>(
    geom: &SpinGeometry<R>,
    model: &HatModel<R>,
    a0: &AlgebraElement<R>,
    a1: &AlgebraElement<R>,
    a2: &AlgebraElement<R>,
) -> C<R> {
    assert!(geom.invertible, "local cocycle needs an invertible Dirac operator");
    let ctx = &geom.ctx;
    let t0 = model.phi_tilde(a0, ctx);
    let d1 = geom.delta(&model.phi_tilde(a1, ctx));
    let d2 = geom.delta(&model.phi_tilde(a2, ctx));
    let dinv2 = LevelDiag::new(&geom.basis, |l2| {
        let d = geom.abs_d_diag.value(l2).clone();
        (d.clone() * d).recip()
    })
    .to_operator();
    compose(&geom.gamma, &compose(&t0, &compose(&d1, &compose(&d2, &dinv2)))).trace()
}

/// Deterministic sample of monomial words over the three generators.
pub fn random_words<R: Scalar>(
    count: usize,
    max_len: usize,
    seed: u64,
    prec: R::Prec,
) -> Vec<AlgebraElement<R>> {
    assert!(max_len >= 1, "words need at least one letter");
    let mut state = seed;
    let mut next = move || -> u64 {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        state >> 33
    };
    let one = Complex::new(R::from_i64(1, prec), R::from_i64(0, prec));
    (0..count)
        .map(|_| {
            let len = 1 + (next() as usize % max_len);
            let word: Vec<Gen> = (0..len)
                .map(|_| match next() % 3 {
                    0 => Gen::Xm1,
                    1 => Gen::X0,
                    _ => Gen::Xp1,
                })
                .collect();
            AlgebraElement::monomial(word, one.clone())
        })
        .collect()
}

fn cabs(z: Complex<f64>) -> f64 {
    libm::hypot(z.re, z.im)
}

/// Local index checks: the quadratic cocycle over all generator triples
/// (expected to vanish below 1e-12) and the degree-zero pairing, which
/// must agree with the Fredholm character trace on the sampled words.
pub fn check_local_index<R: Scalar>(
    geom: &SpinGeometry<R>,
    model: &HatModel<R>,
    sample: &[AlgebraElement<R>],
    suite: &SuiteConfig,
) -> Vec<CheckReport> {
    let clock = suite.clock;
    let prec = geom.ctx.prec();
    let mut out = Vec::new();

    let t0 = now(clock);
    let gens = [Gen::Xm1, Gen::X0, Gen::Xp1].map(|g| AlgebraElement::generator(g, prec));
    let mut worst = 0.0f64;
    for a in &gens {
        for b in &gens {
            for c in &gens {
                let v = local_cocycle_value(geom, model, a, b, c);
                worst = worst.max(cabs(Complex::new(v.re.to_f64(), v.im.to_f64())));
            }
        }
    }
    out.push(with_ms(CheckReport::residual_mode("local.phi2", worst, 1e-12), t0, clock));

    let t0 = now(clock);
    let mut worst = 0.0f64;
    for a in sample {
        let repa = represent(a, geom);
        let lhs = compose(&geom.gamma, &repa).trace();
        let rhs = compose(&geom.gamma, &compose(&geom.f, &commutator(&geom.f, &repa))).trace();
        let lhs = Complex::new(lhs.re.to_f64(), lhs.im.to_f64());
        let rhs = Complex::new(rhs.re.to_f64(), rhs.im.to_f64()) * 0.5;
        let scale = cabs(lhs).max(1.0);
        worst = worst.max(cabs(lhs - rhs) / scale);
    }
    out.push(with_ms(CheckReport::residual_mode("local.phi0", worst, 1e-12), t0, clock));

    out
}
