//! Arithmetic of the stage algebras: truncated Weil algebras R[e]/(e^{k+1})
//! and Grassmann algebras on anticommuting generators, generic over the
//! coefficient ring so the same code serves exact rationals, floats, and
//! symbolic coefficients.

mod literal;

pub use literal::{parse_grassmann, parse_weil};

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::expr::{Bindings, Chart, ExprError, ScalarExpr};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AlgebraError {
    #[error("order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },
    #[error("generator count mismatch: {left} vs {right}")]
    GeneratorMismatch { left: usize, right: usize },
    #[error("generator count {0} outside supported range 1..=12")]
    QOutOfRange(usize),
    #[error("generator index {index} outside 1..={q}")]
    GeneratorIndex { index: usize, q: usize },
    #[error("empty coefficient vector")]
    EmptyCoefficients,
    #[error("element is not scalar where a scalar is required: {0}")]
    NotScalar(String),
    #[error("element is not nilpotent: unit component is nonzero")]
    NotNilpotent,
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Coefficient ring for stage-algebra elements.
pub trait Coeff: Clone + PartialEq + std::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn is_zero(&self) -> bool;
}

impl Coeff for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        <BigRational as One>::one()
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

impl Coeff for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}

/// Symbolic coefficients build raw trees; only the identities that are exact
/// under floating evaluation (x+0, x*1, x*0) are folded, so evaluating a
/// combined element bit-matches combining evaluated elements.
impl Coeff for ScalarExpr {
    fn zero() -> Self {
        ScalarExpr::zero()
    }
    fn one() -> Self {
        ScalarExpr::one()
    }
    fn add(&self, rhs: &Self) -> Self {
        if ScalarExpr::is_zero(self) {
            return rhs.clone();
        }
        if ScalarExpr::is_zero(rhs) {
            return self.clone();
        }
        self.clone() + rhs.clone()
    }
    fn neg(&self) -> Self {
        if ScalarExpr::is_zero(self) {
            return self.clone();
        }
        -self.clone()
    }
    fn mul(&self, rhs: &Self) -> Self {
        if ScalarExpr::is_zero(self) || ScalarExpr::is_zero(rhs) {
            return ScalarExpr::zero();
        }
        if self.is_one() {
            return rhs.clone();
        }
        if rhs.is_one() {
            return self.clone();
        }
        self.clone() * rhs.clone()
    }
    fn is_zero(&self) -> bool {
        ScalarExpr::is_zero(self)
    }
}

/// Element of R[e]/(e^{k+1}): coefficients (c0, ..., ck), truncated products.
#[derive(Debug, Clone, PartialEq)]
pub struct WeilElement<C> {
    coeffs: Vec<C>,
}

impl<C: Coeff> WeilElement<C> {
    pub fn new(coeffs: Vec<C>) -> Result<WeilElement<C>, AlgebraError> {
        if coeffs.is_empty() {
            return Err(AlgebraError::EmptyCoefficients);
        }
        Ok(WeilElement { coeffs })
    }

    pub fn zero(order: usize) -> WeilElement<C> {
        WeilElement { coeffs: vec![C::zero(); order + 1] }
    }

    pub fn one(order: usize) -> WeilElement<C> {
        let mut w = WeilElement::zero(order);
        w.coeffs[0] = C::one();
        w
    }

    pub fn constant(order: usize, c: C) -> WeilElement<C> {
        let mut w = WeilElement::zero(order);
        w.coeffs[0] = c;
        w
    }

    /// The nilpotent generator e; requires order >= 1.
    pub fn eps(order: usize) -> WeilElement<C> {
        assert!(order >= 1, "eps needs order >= 1");
        let mut w = WeilElement::zero(order);
        w.coeffs[1] = C::one();
        w
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, i: usize) -> &C {
        &self.coeffs[i]
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(C::is_zero)
    }

    /// Nilpotent means no unit component.
    pub fn is_nilpotent(&self) -> bool {
        self.coeffs[0].is_zero()
    }

    fn check_order(&self, rhs: &WeilElement<C>) -> Result<(), AlgebraError> {
        if self.order() != rhs.order() {
            return Err(AlgebraError::OrderMismatch { left: self.order(), right: rhs.order() });
        }
        Ok(())
    }

    pub fn add(&self, rhs: &WeilElement<C>) -> Result<WeilElement<C>, AlgebraError> {
        self.check_order(rhs)?;
        Ok(WeilElement {
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a.add(b))
                .collect(),
        })
    }

    pub fn neg(&self) -> WeilElement<C> {
        WeilElement { coeffs: self.coeffs.iter().map(C::neg).collect() }
    }

    pub fn sub(&self, rhs: &WeilElement<C>) -> Result<WeilElement<C>, AlgebraError> {
        self.add(&rhs.neg())
    }

    /// Cauchy product truncated above degree k (e^{k+1} = 0).
    pub fn mul(&self, rhs: &WeilElement<C>) -> Result<WeilElement<C>, AlgebraError> {
        self.check_order(rhs)?;
        let k = self.order();
        let mut coeffs = vec![C::zero(); k + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if i + j > k {
                    break;
                }
                coeffs[i + j] = coeffs[i + j].add(&a.mul(b));
            }
        }
        Ok(WeilElement { coeffs })
    }

    pub fn scale(&self, c: &C) -> WeilElement<C> {
        WeilElement { coeffs: self.coeffs.iter().map(|a| a.mul(c)).collect() }
    }

    pub fn map<D: Coeff>(&self, f: impl Fn(&C) -> D) -> WeilElement<D> {
        WeilElement { coeffs: self.coeffs.iter().map(f).collect() }
    }
}

/// Truncated Weil product; the module-level name mirrors the operation table.
pub fn weil_mul<C: Coeff>(
    a: &WeilElement<C>,
    b: &WeilElement<C>,
) -> Result<WeilElement<C>, AlgebraError> {
    a.mul(b)
}

impl std::fmt::Display for WeilElement<ScalarExpr> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write_graded(f, self.coeffs.iter().enumerate().map(|(i, c)| (weil_label(i), c)))
    }
}

fn weil_label(power: usize) -> String {
    match power {
        0 => "1".to_string(),
        1 => "e".to_string(),
        n => format!("e^{n}"),
    }
}

fn write_graded<'a>(
    f: &mut std::fmt::Formatter<'_>,
    terms: impl Iterator<Item = (String, &'a ScalarExpr)>,
) -> std::fmt::Result {
    let mut first = true;
    for (label, coeff) in terms {
        if ScalarExpr::is_zero(coeff) {
            continue;
        }
        if !first {
            write!(f, " + ")?;
        }
        first = false;
        if label == "1" {
            write!(f, "{coeff}")?;
        } else if coeff.is_one() {
            write!(f, "{label}")?;
        } else {
            write!(f, "({coeff})*{label}")?;
        }
    }
    if first {
        write!(f, "0")?;
    }
    Ok(())
}

/// Parity classification of a Grassmann element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Parity {
    Even,
    Odd,
    Nonhomogeneous,
}

impl Parity {
    /// 0 for even, 1 for odd; homogeneous elements only.
    pub fn value(self) -> Option<u8> {
        match self {
            Parity::Even => Some(0),
            Parity::Odd => Some(1),
            Parity::Nonhomogeneous => None,
        }
    }
}

/// Element of the Grassmann algebra on `q` generators. Keys are bitmasks over
/// generator indices; a set bit i means the generator ξ_{i+1} occurs. The
/// bitmask encoding is exactly the ordered normal form i1 < i2 < ... < ik.
#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannElement<C> {
    q: usize,
    terms: BTreeMap<u32, C>,
}

pub const MAX_GENERATORS: usize = 12;

fn check_q(q: usize) -> Result<(), AlgebraError> {
    if q == 0 || q > MAX_GENERATORS {
        return Err(AlgebraError::QOutOfRange(q));
    }
    Ok(())
}

/// Sign of merging two disjoint ascending index sets: parity of the number of
/// transpositions needed to sort the concatenation (a, b).
pub fn merge_sign(a: u32, b: u32) -> i32 {
    let mut inversions = 0u32;
    let mut bits = b;
    while bits != 0 {
        let j = bits.trailing_zeros();
        inversions += (a >> (j + 1)).count_ones();
        bits &= bits - 1;
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

impl<C: Coeff> GrassmannElement<C> {
    pub fn zero(q: usize) -> GrassmannElement<C> {
        GrassmannElement { q, terms: BTreeMap::new() }
    }

    pub fn unit(q: usize) -> GrassmannElement<C> {
        let mut e = GrassmannElement::zero(q);
        e.terms.insert(0, C::one());
        e
    }

    pub fn scalar(q: usize, c: C) -> GrassmannElement<C> {
        let mut e = GrassmannElement::zero(q);
        e.set_term(0, c);
        e
    }

    /// The generator ξ_index (1-based).
    pub fn generator(q: usize, index: usize) -> Result<GrassmannElement<C>, AlgebraError> {
        check_q(q)?;
        if index == 0 || index > q {
            return Err(AlgebraError::GeneratorIndex { index, q });
        }
        let mut e = GrassmannElement::zero(q);
        e.terms.insert(1 << (index - 1), C::one());
        Ok(e)
    }

    pub fn from_terms(
        q: usize,
        terms: impl IntoIterator<Item = (u32, C)>,
    ) -> Result<GrassmannElement<C>, AlgebraError> {
        check_q(q)?;
        let mut e: GrassmannElement<C> = GrassmannElement::zero(q);
        for (mask, c) in terms {
            if mask >= (1u32 << q) {
                return Err(AlgebraError::GeneratorIndex {
                    index: 32 - mask.leading_zeros() as usize,
                    q,
                });
            }
            let combined = match e.terms.remove(&mask) {
                Some(existing) => existing.add(&c),
                None => c,
            };
            e.set_term(mask, combined);
        }
        Ok(e)
    }

    fn set_term(&mut self, mask: u32, c: C) {
        if c.is_zero() {
            self.terms.remove(&mask);
        } else {
            self.terms.insert(mask, c);
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &C)> {
        self.terms.iter().map(|(m, c)| (*m, c))
    }

    pub fn coeff(&self, mask: u32) -> C {
        self.terms.get(&mask).cloned().unwrap_or_else(C::zero)
    }

    /// The unit-component coefficient, f(x, 0) in function form.
    pub fn body(&self) -> C {
        self.coeff(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_nilpotent(&self) -> bool {
        !self.terms.contains_key(&0)
    }

    fn check_q_match(&self, rhs: &GrassmannElement<C>) -> Result<(), AlgebraError> {
        if self.q != rhs.q {
            return Err(AlgebraError::GeneratorMismatch { left: self.q, right: rhs.q });
        }
        Ok(())
    }

    pub fn add(&self, rhs: &GrassmannElement<C>) -> Result<GrassmannElement<C>, AlgebraError> {
        self.check_q_match(rhs)?;
        let mut out = self.clone();
        for (mask, c) in &rhs.terms {
            let combined = match out.terms.remove(mask) {
                Some(existing) => existing.add(c),
                None => c.clone(),
            };
            out.set_term(*mask, combined);
        }
        Ok(out)
    }

    pub fn neg(&self) -> GrassmannElement<C> {
        GrassmannElement {
            q: self.q,
            terms: self.terms.iter().map(|(m, c)| (*m, c.neg())).collect(),
        }
    }

    pub fn sub(&self, rhs: &GrassmannElement<C>) -> Result<GrassmannElement<C>, AlgebraError> {
        self.add(&rhs.neg())
    }

    /// Bilinear product: ξ_I ξ_J = sign(I, J) ξ_{I ∪ J} when disjoint, else 0.
    pub fn mul(&self, rhs: &GrassmannElement<C>) -> Result<GrassmannElement<C>, AlgebraError> {
        self.check_q_match(rhs)?;
        let mut out: GrassmannElement<C> = GrassmannElement::zero(self.q);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                if ma & mb != 0 {
                    continue;
                }
                let mask = ma | mb;
                let mut term = ca.mul(cb);
                if merge_sign(*ma, *mb) < 0 {
                    term = term.neg();
                }
                let combined = match out.terms.remove(&mask) {
                    Some(existing) => existing.add(&term),
                    None => term,
                };
                out.set_term(mask, combined);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &C) -> GrassmannElement<C> {
        let mut out = GrassmannElement::zero(self.q);
        for (mask, a) in &self.terms {
            out.set_term(*mask, a.mul(c));
        }
        out
    }

    pub fn parity(&self) -> Parity {
        let mut even = false;
        let mut odd = false;
        for mask in self.terms.keys() {
            if mask.count_ones() % 2 == 0 {
                even = true;
            } else {
                odd = true;
            }
        }
        match (even, odd) {
            (_, false) => Parity::Even,
            (false, true) => Parity::Odd,
            (true, true) => Parity::Nonhomogeneous,
        }
    }

    pub fn even_part(&self) -> GrassmannElement<C> {
        GrassmannElement {
            q: self.q,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.count_ones() % 2 == 0)
                .map(|(m, c)| (*m, c.clone()))
                .collect(),
        }
    }

    pub fn odd_part(&self) -> GrassmannElement<C> {
        GrassmannElement {
            q: self.q,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.count_ones() % 2 == 1)
                .map(|(m, c)| (*m, c.clone()))
                .collect(),
        }
    }

    pub fn map<D: Coeff>(&self, f: impl Fn(&C) -> D) -> GrassmannElement<D> {
        let mut out = GrassmannElement::zero(self.q);
        for (mask, c) in &self.terms {
            out.set_term(*mask, f(c));
        }
        out
    }
}

/// Grassmann product; module-level name mirroring the operation table.
pub fn grassmann_mul<C: Coeff>(
    a: &GrassmannElement<C>,
    b: &GrassmannElement<C>,
) -> Result<GrassmannElement<C>, AlgebraError> {
    a.mul(b)
}

/// Parity of an element (free-function form).
pub fn parity<C: Coeff>(a: &GrassmannElement<C>) -> Parity {
    a.parity()
}

/// Human-readable label for a basis monomial, e.g. `g1^g3`.
pub fn monomial_label(mask: u32) -> String {
    if mask == 0 {
        return "1".to_string();
    }
    let mut parts = Vec::new();
    let mut bits = mask;
    while bits != 0 {
        let i = bits.trailing_zeros();
        parts.push(format!("g{}", i + 1));
        bits &= bits - 1;
    }
    parts.join("^")
}

impl std::fmt::Display for GrassmannElement<ScalarExpr> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write_graded(f, self.terms.iter().map(|(m, c)| (monomial_label(*m), c)))
    }
}

/// Basis monomials spanning the center of Λ(ξ1..ξq), computed by brute-force
/// commutation against every basis monomial.
pub fn center(q: usize) -> Result<Vec<u32>, AlgebraError> {
    check_q(q)?;
    let n = 1u32 << q;
    let mut central = Vec::new();
    for m in 0..n {
        let mut ok = true;
        for b in 0..n {
            if m & b != 0 {
                continue; // both products vanish
            }
            if merge_sign(m, b) != merge_sign(b, m) {
                ok = false;
                break;
            }
        }
        if ok {
            central.push(m);
        }
    }
    Ok(central)
}

/// The computed center next to the even subalgebra Λ0, flagging where they
/// disagree (q = 1 and odd q have central monomials beyond Λ0).
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CenterReport {
    pub q: usize,
    pub center_monomials: Vec<String>,
    pub lambda0_monomials: Vec<String>,
    pub extra_beyond_lambda0: Vec<String>,
    pub equals_lambda0: bool,
}

pub fn center_report(q: usize) -> Result<CenterReport, AlgebraError> {
    let central = center(q)?;
    let lambda0: Vec<u32> = (0..(1u32 << q)).filter(|m| m.count_ones() % 2 == 0).collect();
    let extra: Vec<u32> = central.iter().copied().filter(|m| !lambda0.contains(m)).collect();
    Ok(CenterReport {
        q,
        equals_lambda0: extra.is_empty() && central.len() == lambda0.len(),
        center_monomials: central.iter().map(|m| monomial_label(*m)).collect(),
        lambda0_monomials: lambda0.iter().map(|m| monomial_label(*m)).collect(),
        extra_beyond_lambda0: extra.iter().map(|m| monomial_label(*m)).collect(),
    })
}

/// A Λ-valued function on a chart: Grassmann element with expression
/// coefficients, evaluable pointwise.
#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannFunction {
    chart: Chart,
    element: GrassmannElement<ScalarExpr>,
}

impl GrassmannFunction {
    pub fn new(
        chart: Chart,
        element: GrassmannElement<ScalarExpr>,
    ) -> Result<GrassmannFunction, AlgebraError> {
        check_q(element.q())?;
        Ok(GrassmannFunction { chart, element })
    }

    pub fn from_components(
        chart: Chart,
        q: usize,
        components: impl IntoIterator<Item = (u32, ScalarExpr)>,
    ) -> Result<GrassmannFunction, AlgebraError> {
        let element = GrassmannElement::from_terms(q, components)?;
        GrassmannFunction::new(chart, element)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn q(&self) -> usize {
        self.element.q()
    }

    pub fn element(&self) -> &GrassmannElement<ScalarExpr> {
        &self.element
    }

    /// The body f(x, 0): the empty-subset component.
    pub fn body(&self) -> ScalarExpr {
        self.element.body()
    }

    /// Pointwise evaluation to a numeric Grassmann element.
    pub fn eval(
        &self,
        coords: &Bindings,
        params: &Bindings,
    ) -> Result<GrassmannElement<f64>, AlgebraError> {
        let mut out = GrassmannElement::zero(self.q());
        for (mask, coeff) in self.element.terms() {
            out.set_term(mask, coeff.eval(coords, params)?);
        }
        Ok(out)
    }

    pub fn even_part(&self) -> GrassmannFunction {
        GrassmannFunction { chart: self.chart.clone(), element: self.element.even_part() }
    }

    pub fn odd_part(&self) -> GrassmannFunction {
        GrassmannFunction { chart: self.chart.clone(), element: self.element.odd_part() }
    }

    /// Function product; coefficients stay as raw trees so that evaluating the
    /// product bit-matches multiplying the evaluations.
    pub fn mul(&self, rhs: &GrassmannFunction) -> Result<GrassmannFunction, AlgebraError> {
        Ok(GrassmannFunction {
            chart: self.chart.clone(),
            element: self.element.mul(&rhs.element)?,
        })
    }

    pub fn add(&self, rhs: &GrassmannFunction) -> Result<GrassmannFunction, AlgebraError> {
        Ok(GrassmannFunction {
            chart: self.chart.clone(),
            element: self.element.add(&rhs.element)?,
        })
    }

    /// Simplify every coefficient.
    pub fn simplified(&self) -> Result<GrassmannFunction, AlgebraError> {
        let mut out = GrassmannElement::zero(self.q());
        for (mask, coeff) in self.element.terms() {
            out.set_term(mask, crate::expr::simplify(coeff)?);
        }
        Ok(GrassmannFunction { chart: self.chart.clone(), element: out })
    }
}
