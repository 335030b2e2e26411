//! Formal *-algebra of words in the three sphere generators, evaluation
//! through matrix representations, and the classical-point morphism onto
//! Laurent polynomials on the circle.
//!
//! Elements are free linear combinations of words; the sphere relations are
//! never imposed here, they are verified downstream as matrix identities.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;
use num_traits::Zero;

use crate::basis_ops::{add as op_add, compose, scale as op_scale, BandedOperator, C};
use crate::podles_repr::ModelContext;
use crate::qarith::Scalar;
use crate::spin_geometry::SpinGeometry;

/// One of the three algebra generators.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Gen {
    Xm1,
    X0,
    Xp1,
}

impl Gen {
    pub const ALL: [Gen; 3] = [Gen::Xm1, Gen::X0, Gen::Xp1];

    /// Weight under the diagonal quantum group generator.
    pub fn weight(self) -> i8 {
        match self {
            Gen::Xm1 => -1,
            Gen::X0 => 0,
            Gen::Xp1 => 1,
        }
    }

    /// Position in generator triples ordered x_-1, x_0, x_1.
    pub fn index(self) -> usize {
        (self.weight() + 1) as usize
    }
}

/// A product of generators, leftmost factor first.
pub type Word = Vec<Gen>;

/// Element of the free *-algebra: finitely many words with complex
/// coefficients in canonical form (sorted words, no zero coefficients).
#[derive(Clone, PartialEq, Debug)]
pub struct AlgebraElement<R: Scalar> {
    terms: BTreeMap<Word, C<R>>,
}

impl<R: Scalar> AlgebraElement<R> {
    pub fn zero() -> Self {
        Self { terms: BTreeMap::new() }
    }

    pub fn one(prec: R::Prec) -> Self {
        Self::monomial(Vec::new(), re(R::from_i64(1, prec)))
    }

    pub fn generator(g: Gen, prec: R::Prec) -> Self {
        Self::monomial(vec![g], re(R::from_i64(1, prec)))
    }

    pub fn constant(c: C<R>) -> Self {
        Self::monomial(Vec::new(), c)
    }

    pub fn constant_real(r: R) -> Self {
        Self::constant(re(r))
    }

    pub fn monomial(word: Word, coeff: C<R>) -> Self {
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(word, coeff);
        }
        Self { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn max_word_len(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &C<R>)> {
        self.terms.iter()
    }

    pub fn coeff(&self, word: &[Gen]) -> Option<&C<R>> {
        self.terms.get(word)
    }

    /// Some(c) when the element is the scalar c (at most the empty word).
    pub fn as_scalar(&self) -> Option<C<R>> {
        match self.terms.len() {
            0 => Some(C::zero()),
            1 => self.terms.get(&Vec::new()).cloned(),
            _ => None,
        }
    }

    pub fn max_coeff_abs(&self) -> f64 {
        self.terms
            .values()
            .map(|c| (c.re.to_f64().powi(2) + c.im.to_f64().powi(2)).sqrt())
            .fold(0.0, f64::max)
    }

    fn insert_add(&mut self, word: Word, coeff: C<R>) {
        match self.terms.remove(&word) {
            Some(prev) => {
                let sum = prev + coeff;
                if !sum.is_zero() {
                    self.terms.insert(word, sum);
                }
            }
            None => {
                if !coeff.is_zero() {
                    self.terms.insert(word, coeff);
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.insert_add(w.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        Self { terms: self.terms.iter().map(|(w, c)| (w.clone(), -c.clone())).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (wa, ca) in &self.terms {
            for (wb, cb) in &other.terms {
                let mut word = Vec::with_capacity(wa.len() + wb.len());
                word.extend_from_slice(wa);
                word.extend_from_slice(wb);
                out.insert_add(word, ca.clone() * cb.clone());
            }
        }
        out
    }

    pub fn scaled(&self, factor: &C<R>) -> Self {
        let mut out = Self::zero();
        for (w, c) in &self.terms {
            out.insert_add(w.clone(), c.clone() * factor.clone());
        }
        out
    }

    pub fn scaled_real(&self, factor: &R) -> Self {
        self.scaled(&re(factor.clone()))
    }

    /// Nonnegative integer power by repeated multiplication.
    pub fn pow(&self, e: u32, prec: R::Prec) -> Self {
        let mut out = Self::one(prec);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }
}

fn re<R: Scalar>(v: R) -> C<R> {
    let z = R::from_i64(0, v.prec());
    Complex::new(v, z)
}

/// The antimultiplicative, antilinear involution fixed by x_0* = x_0,
/// x_-1* = -q^-1 x_1, x_1* = -q x_-1.
pub fn star<R: Scalar>(a: &AlgebraElement<R>, ctx: &ModelContext<R>) -> AlgebraElement<R> {
    let minus_q = -ctx.q().clone();
    let minus_qinv = -ctx.qpow2(-2);
    let mut out = AlgebraElement::zero();
    for (word, coeff) in a.terms() {
        let mut image = Vec::with_capacity(word.len());
        let mut factor = ctx.one();
        for g in word.iter().rev() {
            let (target, fac) = match g {
                Gen::X0 => (Gen::X0, ctx.one()),
                Gen::Xp1 => (Gen::Xm1, minus_q.clone()),
                Gen::Xm1 => (Gen::Xp1, minus_qinv.clone()),
            };
            image.push(target);
            factor = factor * fac;
        }
        out.insert_add(image, coeff.conj() * re(factor));
    }
    out
}

/// Evaluates an element through any triple of generator matrices living on
/// one shared basis (word products in matrix form, summed with coefficients).
pub fn evaluate_in<R: Scalar>(
    a: &AlgebraElement<R>,
    gens: &[BandedOperator<R>; 3],
    ctx: &ModelContext<R>,
) -> BandedOperator<R> {
    let basis = gens[0].dom().clone();
    let mut acc = BandedOperator::zero(basis.clone(), basis.clone());
    for (word, coeff) in a.terms() {
        let word_op = match word.split_last() {
            None => BandedOperator::identity(&basis, ctx.prec()),
            Some((last, front)) => {
                let mut op = gens[last.index()].clone();
                for g in front.iter().rev() {
                    op = compose(&gens[g.index()], &op);
                }
                op
            }
        };
        acc = op_add(&acc, &op_scale(&word_op, coeff));
    }
    acc
}

/// Evaluates an element in the spinor representation of a built geometry.
pub fn represent<R: Scalar>(a: &AlgebraElement<R>, geom: &SpinGeometry<R>) -> BandedOperator<R> {
    evaluate_in(a, &geom.pi_x, &geom.ctx)
}

/// The four defining sphere relations as elements that must evaluate to
/// zero: two exchange relations with x_0 - t and two quadratic relations
/// with the scalar [2]^2 (1 - t).
pub fn sphere_relations<R: Scalar>(ctx: &ModelContext<R>) -> [AlgebraElement<R>; 4] {
    let prec = ctx.prec();
    let t = ctx.t().clone();
    let q2 = ctx.qpow2(4);
    let q2inv = ctx.qpow2(-4);
    let two = ctx.qnum2(4);
    let xm1 = AlgebraElement::generator(Gen::Xm1, prec);
    let x0 = AlgebraElement::generator(Gen::X0, prec);
    let xp1 = AlgebraElement::generator(Gen::Xp1, prec);
    let x0t = x0.sub(&AlgebraElement::constant_real(t.clone()));
    let flat = AlgebraElement::constant_real(
        two.clone() * two.clone() * (ctx.one() - t.clone()),
    );
    let rel1 = xm1.mul(&x0t).sub(&x0t.mul(&xm1).scaled_real(&q2));
    let rel2 = xp1.mul(&x0t).sub(&x0t.mul(&xp1).scaled_real(&q2inv));
    let q2x0_t = x0.scaled_real(&q2).add(&AlgebraElement::constant_real(t.clone()));
    let rel3 = q2x0_t
        .mul(&x0t)
        .sub(&xm1.mul(&xp1).scaled_real(&two))
        .sub(&flat);
    let q2inv_x0_t = x0.scaled_real(&q2inv).add(&AlgebraElement::constant_real(t));
    let rel4 = q2inv_x0_t
        .mul(&x0t)
        .sub(&xp1.mul(&xm1).scaled_real(&two))
        .sub(&flat);
    [rel1, rel2, rel3, rel4]
}

/// The zeta-check monomials (x_0 - t)^j x_1^k, where a negative k means
/// star(x_1)^|k|.
pub fn basis_monomial<R: Scalar>(j: u32, k: i32, ctx: &ModelContext<R>) -> AlgebraElement<R> {
    let prec = ctx.prec();
    let x0t = AlgebraElement::generator(Gen::X0, prec)
        .sub(&AlgebraElement::constant_real(ctx.t().clone()));
    let x1 = AlgebraElement::generator(Gen::Xp1, prec);
    let tail = if k >= 0 {
        x1.pow(k as u32, prec)
    } else {
        star(&x1, ctx).pow(k.unsigned_abs(), prec)
    };
    x0t.pow(j, prec).mul(&tail)
}

/// Finitely supported Laurent polynomial in the circle variable.
#[derive(Clone, PartialEq, Debug)]
pub struct LaurentPoly<R: Scalar> {
    coeffs: BTreeMap<i32, C<R>>,
}

impl<R: Scalar> LaurentPoly<R> {
    pub fn zero() -> Self {
        Self { coeffs: BTreeMap::new() }
    }

    pub fn monomial(k: i32, c: C<R>) -> Self {
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(k, c);
        }
        Self { coeffs }
    }

    pub fn constant(c: C<R>) -> Self {
        Self::monomial(0, c)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, k: i32) -> Option<&C<R>> {
        self.coeffs.get(&k)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&i32, &C<R>)> {
        self.coeffs.iter()
    }

    pub fn max_coeff_abs(&self) -> f64 {
        self.coeffs
            .values()
            .map(|c| (c.re.to_f64().powi(2) + c.im.to_f64().powi(2)).sqrt())
            .fold(0.0, f64::max)
    }

    fn insert_add(&mut self, k: i32, c: C<R>) {
        match self.coeffs.remove(&k) {
            Some(prev) => {
                let sum = prev + c;
                if !sum.is_zero() {
                    self.coeffs.insert(k, sum);
                }
            }
            None => {
                if !c.is_zero() {
                    self.coeffs.insert(k, c);
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&k, c) in &other.coeffs {
            out.insert_add(k, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&k, c) in &other.coeffs {
            out.insert_add(k, -c.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (&ka, ca) in &self.coeffs {
            for (&kb, cb) in &other.coeffs {
                out.insert_add(ka + kb, ca.clone() * cb.clone());
            }
        }
        out
    }

    /// Complex conjugate on the circle: inverts powers, conjugates
    /// coefficients.
    pub fn conj(&self) -> Self {
        Self { coeffs: self.coeffs.iter().map(|(&k, c)| (-k, c.conj())).collect() }
    }
}

/// The classical-point morphism: x_0 goes to the constant t, x_1 to
/// sqrt((1+q^2)(1-t)) times the circle variable, x_-1 to -q^-1 times the
/// same magnitude on the inverse variable.  At t = 1 the images collapse to
/// the single classical point x_0 = 1.
pub fn sigma_t<R: Scalar>(a: &AlgebraElement<R>, ctx: &ModelContext<R>) -> LaurentPoly<R> {
    let s = ((ctx.one() + ctx.qpow2(4)) * (ctx.one() - ctx.t().clone())).sqrt();
    let sm = -(ctx.qpow2(-2) * s.clone());
    let mut out = LaurentPoly::zero();
    for (word, coeff) in a.terms() {
        let mut power = 0i32;
        let mut factor = ctx.one();
        for g in word {
            power += i32::from(g.weight());
            factor = factor
                * match g {
                    Gen::X0 => ctx.t().clone(),
                    Gen::Xp1 => s.clone(),
                    Gen::Xm1 => sm.clone(),
                };
        }
        out.insert_add(power, coeff.clone() * re(factor));
    }
    out
}

/// The normalized circle integral used by the index pairing at the
/// classical points: only the constant term survives, scaled by 4.
pub fn circle_integral<R: Scalar>(p: &LaurentPoly<R>) -> C<R> {
    match p.coeff(0) {
        Some(c) => {
            let four = R::from_i64(4, c.re.prec());
            Complex::new(c.re.clone() * four.clone(), c.im.clone() * four)
        }
        None => C::zero(),
    }
}

#[derive(Clone, PartialEq, Debug)]
enum Tok {
    Ident(String),
    Number(f64),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<Tok>, String> {
    let mut toks = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut pos = 0;
    while pos < chars.len() {
        let c = chars[pos];
        if c.is_whitespace() {
            pos += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = pos;
            while pos < chars.len() && (chars[pos].is_ascii_alphanumeric() || chars[pos] == '_') {
                pos += 1;
            }
            toks.push(Tok::Ident(chars[start..pos].iter().collect()));
        } else if c.is_ascii_digit() || c == '.' {
            let start = pos;
            while pos < chars.len() && (chars[pos].is_ascii_digit() || chars[pos] == '.') {
                pos += 1;
            }
            if pos < chars.len() && (chars[pos] == 'e' || chars[pos] == 'E') {
                let mut ahead = pos + 1;
                if ahead < chars.len() && (chars[ahead] == '+' || chars[ahead] == '-') {
                    ahead += 1;
                }
                if ahead < chars.len() && chars[ahead].is_ascii_digit() {
                    pos = ahead;
                    while pos < chars.len() && chars[pos].is_ascii_digit() {
                        pos += 1;
                    }
                }
            }
            let text: String = chars[start..pos].iter().collect();
            let value = text.parse::<f64>().map_err(|_| format!("bad number literal `{text}`"))?;
            toks.push(Tok::Number(value));
        } else {
            let tok = match c {
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '^' => Tok::Caret,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                other => return Err(format!("unexpected character `{other}`")),
            };
            toks.push(tok);
            pos += 1;
        }
    }
    Ok(toks)
}

struct Parser<'a, R: Scalar> {
    toks: Vec<Tok>,
    pos: usize,
    ctx: &'a ModelContext<R>,
}

impl<'a, R: Scalar> Parser<'a, R> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<(), String> {
        match self.bump() {
            Some(t) if t == tok => Ok(()),
            Some(t) => Err(format!("expected {tok:?}, found {t:?}")),
            None => Err(format!("expected {tok:?}, found end of input")),
        }
    }

    fn expr(&mut self) -> Result<AlgebraElement<R>, String> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    acc = acc.add(&self.term()?);
                }
                Some(Tok::Minus) => {
                    self.bump();
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<AlgebraElement<R>, String> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    acc = acc.mul(&self.power()?);
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let rhs = self.power()?;
                    let scalar = rhs
                        .as_scalar()
                        .ok_or_else(|| "division is only defined by scalars".to_string())?;
                    if scalar.is_zero() {
                        return Err("division by zero".to_string());
                    }
                    acc = acc.scaled(&recip(&scalar));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<AlgebraElement<R>, String> {
        let base = self.unary()?;
        if !matches!(self.peek(), Some(Tok::Caret)) {
            return Ok(base);
        }
        self.bump();
        let negative = matches!(self.peek(), Some(Tok::Minus));
        if negative {
            self.bump();
        }
        let e = match self.bump() {
            Some(Tok::Number(v)) if v.fract() == 0.0 && v >= 0.0 => v as u32,
            other => return Err(format!("exponent must be an integer literal, found {other:?}")),
        };
        if negative {
            let scalar = base
                .as_scalar()
                .ok_or_else(|| "negative powers are only defined for scalars".to_string())?;
            if scalar.is_zero() {
                return Err("division by zero".to_string());
            }
            let mut acc = C::new(R::from_i64(1, self.ctx.prec()), R::from_i64(0, self.ctx.prec()));
            let r = recip(&scalar);
            for _ in 0..e {
                acc = acc * r.clone();
            }
            Ok(AlgebraElement::constant(acc))
        } else {
            Ok(base.pow(e, self.ctx.prec()))
        }
    }

    fn unary(&mut self) -> Result<AlgebraElement<R>, String> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.bump();
            return Ok(self.unary()?.neg());
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<AlgebraElement<R>, String> {
        let prec = self.ctx.prec();
        match self.bump() {
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Some(Tok::Number(v)) => Ok(AlgebraElement::constant_real(R::from_f64(v, prec))),
            Some(Tok::Ident(name)) => match name.as_str() {
                "xm1" => Ok(AlgebraElement::generator(Gen::Xm1, prec)),
                "x0" => Ok(AlgebraElement::generator(Gen::X0, prec)),
                "xp1" => Ok(AlgebraElement::generator(Gen::Xp1, prec)),
                "q" => Ok(AlgebraElement::constant_real(self.ctx.q().clone())),
                "t" => Ok(AlgebraElement::constant_real(self.ctx.t().clone())),
                "i" => Ok(AlgebraElement::constant(C::new(
                    R::from_i64(0, prec),
                    R::from_i64(1, prec),
                ))),
                "star" => {
                    self.expect(Tok::LParen)?;
                    let inner = self.expr()?;
                    self.expect(Tok::RParen)?;
                    Ok(star(&inner, self.ctx))
                }
                other => Err(format!(
                    "unknown identifier `{other}` (expected xm1, x0, xp1, q, t, i, star)"
                )),
            },
            Some(t) => Err(format!("unexpected token {t:?}")),
            None => Err("unexpected end of input".to_string()),
        }
    }
}

fn recip<R: Scalar>(c: &C<R>) -> C<R> {
    let norm = c.re.clone() * c.re.clone() + c.im.clone() * c.im.clone();
    Complex::new(c.re.clone() / norm.clone(), -(c.im.clone() / norm))
}

/// Parses the element grammar used on the command line: identifiers xm1,
/// x0, xp1 and the constants q, t, i; operators `+ - * / ^`; `star(...)`
/// for the involution; parentheses; decimal literals.
pub fn parse_element<R: Scalar>(
    src: &str,
    ctx: &ModelContext<R>,
) -> Result<AlgebraElement<R>, String> {
    let toks = tokenize(src)?;
    let mut parser = Parser { toks, pos: 0, ctx };
    let out = parser.expr()?;
    if parser.pos != parser.toks.len() {
        return Err(format!("trailing input after position {}", parser.pos));
    }
    Ok(out)
}
