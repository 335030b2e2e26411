//! q-number arithmetic, half-integer indices, and the two scalar tiers
//! (binary64 and arbitrary-precision software floats).
//!
//! Every matrix element in the crate is a rational expression in q-integers
//! `[n] = (q^-n - q^n)/(q^-1 - q)` and half-integer powers of q.  To keep
//! identities reproducible bit for bit, all powers are evaluated by one
//! shared iterative product chain, and [`QTable`] memoizes exactly those
//! chains, so a table lookup and a from-scratch evaluation agree exactly.

use alloc::string::String;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Rem, Sub};

use alloc::vec::Vec;
use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use num_traits::{Num, One, Zero};

/// A half-integer stored as twice its value, so that l = 3/2 is `twice: 3`.
///
/// All public APIs take and return half-integers in this encoding; it keeps
/// level indexing exact and avoids decimal parsing ambiguity at the CLI.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct HalfInt {
    pub twice: i32,
}

impl HalfInt {
    pub const fn new(twice: i32) -> Self {
        Self { twice }
    }

    /// The half-integer equal to the ordinary integer `n`.
    pub const fn from_int(n: i32) -> Self {
        Self { twice: 2 * n }
    }

    pub const ZERO: Self = Self { twice: 0 };
    pub const HALF: Self = Self { twice: 1 };
    pub const ONE: Self = Self { twice: 2 };

    pub fn as_f64(self) -> f64 {
        f64::from(self.twice) / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }

    pub const fn abs(self) -> Self {
        Self { twice: self.twice.abs() }
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: Self) -> Self {
        Self { twice: self.twice + rhs.twice }
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: Self) -> Self {
        Self { twice: self.twice - rhs.twice }
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> Self {
        Self { twice: -self.twice }
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

/// Real scalar abstraction over the two precision tiers.
///
/// Implementations: `f64` (binary64 fast path) and [`SoftFloat`] (software
/// float with a configurable mantissa, default 192 bits for decay fits).
/// The associated `Prec` value travels with every constructor so a build
/// never mixes precisions.
pub trait Scalar:
    Num + Clone + PartialOrd + Neg<Output = Self> + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    type Prec: Copy + PartialEq + fmt::Debug + Send + Sync + 'static;

    /// Precision handle for a requested mantissa bit count.
    fn prec_from_bits(bits: u32) -> Self::Prec;

    /// Mantissa bit count used for reporting.
    fn bits(prec: Self::Prec) -> u32;

    fn prec(&self) -> Self::Prec;

    fn from_f64(v: f64, prec: Self::Prec) -> Self;

    fn from_i64(v: i64, prec: Self::Prec) -> Self;

    fn to_f64(&self) -> f64;

    /// Square root; a negative radicand is an indexing bug and aborts.
    fn sqrt(&self) -> Self;

    fn abs(&self) -> Self;

    fn is_finite_scalar(&self) -> bool;

    /// Unit roundoff at the given precision, used for convergence cutoffs.
    fn eps(prec: Self::Prec) -> Self;

    fn recip(&self) -> Self {
        Self::from_i64(1, self.prec()) / self.clone()
    }

    /// Integer power by binary exponentiation; `powi(1)` returns the value
    /// unchanged and negative exponents go through `recip`.
    fn powi(&self, e: i32) -> Self {
        assert!(e > i32::MIN, "exponent out of range");
        if e < 0 {
            return self.powi(-e).recip();
        }
        let mut result = Self::from_i64(1, self.prec());
        let mut base = self.clone();
        let mut k = e as u32;
        while k > 0 {
            if k & 1 == 1 {
                result = result * base.clone();
            }
            k >>= 1;
            if k > 0 {
                base = base.clone() * base;
            }
        }
        result
    }
}

impl Scalar for f64 {
    type Prec = ();

    fn prec_from_bits(bits: u32) -> Self::Prec {
        assert!(bits == 53 || bits == 64, "binary64 tier supports only prec 64");
    }

    fn bits(_: Self::Prec) -> u32 {
        64
    }

    fn prec(&self) -> Self::Prec {}

    fn from_f64(v: f64, _: Self::Prec) -> Self {
        v
    }

    fn from_i64(v: i64, _: Self::Prec) -> Self {
        v as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn sqrt(&self) -> Self {
        assert!(*self >= 0.0, "negative radicand: {self}");
        libm::sqrt(*self)
    }

    fn abs(&self) -> Self {
        libm::fabs(*self)
    }

    fn is_finite_scalar(&self) -> bool {
        self.is_finite()
    }

    fn eps(_: Self::Prec) -> Self {
        f64::EPSILON
    }
}

type Fb = FBig<HalfEven, 2>;

/// Software float with a fixed mantissa width in bits.
///
/// Wraps a binary `FBig` and normalizes the precision of every arithmetic
/// result to the wider operand, so mixed expressions never silently lose
/// precision and constants (`zero()`, `one()`) adopt the partner's width.
#[derive(Clone, Debug, PartialEq, PartialOrd)]
pub struct SoftFloat(Fb);

fn set_prec(v: Fb, p: usize) -> Fb {
    if p != 0 && v.precision() != p {
        v.with_precision(p).value()
    } else {
        v
    }
}

fn join_prec(a: usize, b: usize) -> usize {
    if a == 0 {
        b
    } else if b == 0 {
        a
    } else {
        a.max(b)
    }
}

impl fmt::Display for SoftFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.to_f64())
    }
}

impl Add for SoftFloat {
    type Output = SoftFloat;
    fn add(self, rhs: Self) -> Self {
        let p = join_prec(self.0.precision(), rhs.0.precision());
        SoftFloat(set_prec(self.0 + rhs.0, p))
    }
}

impl Sub for SoftFloat {
    type Output = SoftFloat;
    fn sub(self, rhs: Self) -> Self {
        let p = join_prec(self.0.precision(), rhs.0.precision());
        SoftFloat(set_prec(self.0 - rhs.0, p))
    }
}

impl Mul for SoftFloat {
    type Output = SoftFloat;
    fn mul(self, rhs: Self) -> Self {
        let p = join_prec(self.0.precision(), rhs.0.precision());
        SoftFloat(set_prec(self.0 * rhs.0, p))
    }
}

impl Div for SoftFloat {
    type Output = SoftFloat;
    fn div(self, rhs: Self) -> Self {
        let mut p = join_prec(self.0.precision(), rhs.0.precision());
        if p == 0 {
            p = 64;
        }
        let lhs = set_prec(self.0, p);
        let rhs = set_prec(rhs.0, p);
        SoftFloat(set_prec(lhs / rhs, p))
    }
}

impl Rem for SoftFloat {
    type Output = SoftFloat;
    fn rem(self, rhs: Self) -> Self {
        let mut p = join_prec(self.0.precision(), rhs.0.precision());
        if p == 0 {
            p = 64;
        }
        let lhs = set_prec(self.0, p);
        let rhs = set_prec(rhs.0, p);
        SoftFloat(set_prec(lhs % rhs, p))
    }
}

impl Neg for SoftFloat {
    type Output = SoftFloat;
    fn neg(self) -> Self {
        SoftFloat(-self.0)
    }
}

impl Zero for SoftFloat {
    fn zero() -> Self {
        SoftFloat(Fb::ZERO)
    }

    fn is_zero(&self) -> bool {
        self.0 == Fb::ZERO
    }
}

impl One for SoftFloat {
    fn one() -> Self {
        SoftFloat(Fb::ONE)
    }
}

/// Error for `Num::from_str_radix` on [`SoftFloat`]; only radix 10 via the
/// f64 grammar is accepted (the trait obligation is otherwise unused here).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoftFloatParseError(String);

impl Num for SoftFloat {
    type FromStrRadixErr = SoftFloatParseError;

    fn from_str_radix(src: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        if radix != 10 {
            return Err(SoftFloatParseError(String::from("only radix 10 supported")));
        }
        src.parse::<f64>()
            .map(|v| SoftFloat::from_f64(v, 64))
            .map_err(|_| SoftFloatParseError(String::from(src)))
    }
}

impl Scalar for SoftFloat {
    type Prec = u32;

    fn prec_from_bits(bits: u32) -> Self::Prec {
        assert!(bits >= 8, "software float needs at least 8 mantissa bits");
        bits
    }

    fn bits(prec: Self::Prec) -> u32 {
        prec
    }

    fn prec(&self) -> Self::Prec {
        self.0.precision() as u32
    }

    fn from_f64(v: f64, prec: Self::Prec) -> Self {
        let raw = Fb::try_from(v).expect("finite value required");
        SoftFloat(raw.with_precision(prec as usize).value())
    }

    fn from_i64(v: i64, prec: Self::Prec) -> Self {
        let raw = Fb::try_from(v as f64).expect("finite value required");
        debug_assert!(v.abs() < (1 << 53));
        SoftFloat(raw.with_precision(prec as usize).value())
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }

    fn sqrt(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        assert!(
            self.0 > Fb::ZERO,
            "negative radicand: {}",
            self.to_f64()
        );
        SoftFloat(self.0.context().sqrt(self.0.repr()).value())
    }

    fn abs(&self) -> Self {
        if self.0 < Fb::ZERO {
            SoftFloat(-self.0.clone())
        } else {
            self.clone()
        }
    }

    fn is_finite_scalar(&self) -> bool {
        true
    }

    fn eps(prec: Self::Prec) -> Self {
        SoftFloat::from_f64(0.5, prec).powi(prec.saturating_sub(1) as i32)
    }
}

pub(crate) fn assert_q_range<R: Scalar>(q: &R) {
    let zero = R::from_i64(0, q.prec());
    let one = R::from_i64(1, q.prec());
    assert!(
        *q > zero && *q < one,
        "q must lie in (0,1), got {}",
        q.to_f64()
    );
}

/// q to the half-integer power `e2/2`, evaluated as one iterative product
/// chain.  [`QTable`] stores exactly these chains, which is what makes table
/// lookups and direct evaluations bitwise identical.
pub(crate) fn qpow_half2<R: Scalar>(q: &R, e2: i32) -> R {
    let one = R::from_i64(1, q.prec());
    if e2 == 0 {
        return one;
    }
    let up = e2 > 0;
    let step = if up {
        q.clone()
    } else {
        one.clone() / q.clone()
    };
    let (mut acc, whole) = if e2 % 2 == 0 {
        (one, e2.abs() / 2)
    } else {
        let s = q.sqrt();
        let s = if up { s } else { one / s };
        (s, (e2.abs() - 1) / 2)
    };
    for _ in 0..whole {
        acc = acc * step.clone();
    }
    acc
}

/// The q-integer `[n] = (q^-n - q^n)/(q^-1 - q)`, with `n` half-integer.
///
/// Both numerator terms are positive for n > 0 (no cancellation), `[1]` is
/// exactly 1, and `[-n]` is the exact negation of `[n]`.
pub fn qnum<R: Scalar>(n: HalfInt, q: &R) -> R {
    assert_q_range(q);
    if n.twice == 0 {
        return R::from_i64(0, q.prec());
    }
    let num = qpow_half2(q, -n.twice) - qpow_half2(q, n.twice);
    let den = qpow_half2(q, -2) - q.clone();
    num / den
}

/// `[n]^(1/2)` for n >= 0; a negative bracket signals an indexing bug.
pub fn qnum_halfpow<R: Scalar>(n: HalfInt, q: &R) -> R {
    assert!(n.twice >= 0, "qnum_halfpow needs n >= 0, got {n}");
    qnum(n, q).sqrt()
}

/// Memoized chains of q-powers and q-integers for one context.
///
/// Indexed by "twice" values: `qpow2(e2)` is q^(e2/2) and `qnum2(tw)` is
/// `[tw/2]`.  Entries equal the free-function results bit for bit; out of
/// range arguments fall back to direct evaluation.
#[derive(Clone)]
pub(crate) struct QTable<R: Scalar> {
    pub q: R,
    pub one: R,
    pub prec: R::Prec,
    pos: Vec<R>,
    neg: Vec<R>,
    br: Vec<R>,
    brs: Vec<R>,
}

impl<R: Scalar> QTable<R> {
    pub fn new(q: R, max2: usize) -> Self {
        assert_q_range(&q);
        let prec = q.prec();
        let one = R::from_i64(1, prec);
        let qinv = one.clone() / q.clone();
        let sq = q.sqrt();
        let sqinv = one.clone() / sq.clone();

        let mut pos = Vec::with_capacity(max2 + 1);
        let mut neg = Vec::with_capacity(max2 + 1);
        pos.push(one.clone());
        neg.push(one.clone());
        if max2 >= 1 {
            pos.push(sq);
            neg.push(sqinv);
        }
        for e2 in 2..=max2 {
            let p = pos[e2 - 2].clone() * q.clone();
            let n = neg[e2 - 2].clone() * qinv.clone();
            pos.push(p);
            neg.push(n);
        }

        let den = neg.get(2).cloned().unwrap_or_else(|| qpow_half2(&q, -2)) - q.clone();
        let zero = R::from_i64(0, prec);
        let mut br = Vec::with_capacity(max2 + 1);
        let mut brs = Vec::with_capacity(max2 + 1);
        for tw in 0..=max2 {
            let v = if tw == 0 {
                zero.clone()
            } else {
                (neg[tw].clone() - pos[tw].clone()) / den.clone()
            };
            brs.push(v.sqrt());
            br.push(v);
        }

        Self { q, one, prec, pos, neg, br, brs }
    }

    /// q^(e2/2).
    pub fn qpow2(&self, e2: i32) -> R {
        let idx = e2.unsigned_abs() as usize;
        let table = if e2 >= 0 { &self.pos } else { &self.neg };
        match table.get(idx) {
            Some(v) => v.clone(),
            None => qpow_half2(&self.q, e2),
        }
    }

    /// `[tw/2]`, any sign of tw.
    pub fn qnum2(&self, tw: i32) -> R {
        let idx = tw.unsigned_abs() as usize;
        let v = match self.br.get(idx) {
            Some(v) => v.clone(),
            None => qnum(HalfInt::new(tw.abs()), &self.q),
        };
        if tw < 0 {
            -v
        } else {
            v
        }
    }

    /// `[tw/2]^(1/2)` for tw >= 0.
    pub fn qnum2_sqrt(&self, tw: i32) -> R {
        assert!(tw >= 0, "square root of a negative-index bracket");
        match self.brs.get(tw as usize) {
            Some(v) => v.clone(),
            None => qnum(HalfInt::new(tw), &self.q).sqrt(),
        }
    }

    pub fn zero(&self) -> R {
        R::from_i64(0, self.prec)
    }
}

/// Total order helper for scalars known to be finite (no NaN in the crate's
/// invariants); used by norm maxima.
pub(crate) fn cmp_total<R: Scalar>(a: &R, b: &R) -> Ordering {
    a.partial_cmp(b).expect("non-finite scalar escaped")
}
