//! Spectra of algebras as morphism sets, the Θ map, ghost ideals, and
//! geometricity verdicts at stage R and at Weil/Grassmann stages.
//!
//! "All morphisms C -> A" is not computable; this module constructs the
//! documented point families — grid evaluations χ, the Weil projection π,
//! real solutions of quotient relations, jet points χ + v e + ..., and the
//! Grassmann points χ_{v,a} — and states every verdict relative to the
//! enumerated family. Kernels are re-verified after computation: an element
//! lands in the reported kernel exactly when every enumerated point
//! annihilates it, which is the executable content of the kernel-equality
//! lemmas.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::algebra::{AlgebraError, GrassmannElement, GrassmannFunction, WeilElement};
use crate::expr::{simplify, Bindings, Chart, ExprError, Primitive, ScalarExpr};
use crate::stage::{jet_eval, stage_point_family, StageError, WeilStagePoint};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpectrumError {
    #[error("unsupported presentation: {0}")]
    Unsupported(String),
    #[error("relation must be a polynomial in a single declared generator: {0}")]
    RelationNotUnivariate(String),
    #[error("quotient algebras support at most 3 generators, got {0}")]
    TooManyGenerators(usize),
    #[error("relation is identically zero")]
    ZeroRelation,
    #[error("root search bound exceeded (coefficients too large)")]
    RootSearchBound,
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Stage(#[from] StageError),
}

/// Deterministic interior lattice over a chart, `density` points per axis.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SampleGrid {
    chart: Chart,
    density: usize,
}

impl SampleGrid {
    pub fn new(chart: Chart, density: usize) -> SampleGrid {
        SampleGrid { chart, density: density.max(1) }
    }

    pub fn len(&self) -> usize {
        self.density.pow(self.chart.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn density(&self) -> usize {
        self.density
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn point(&self, mut idx: usize) -> Bindings {
        let mut out = Bindings::new();
        for i in 0..self.chart.dim() {
            let step = idx % self.density;
            idx /= self.density;
            let (lo, hi) = self.chart.range(i);
            let x = lo + (step as f64 + 1.0) * (hi - lo) / (self.density as f64 + 1.0);
            out.insert(self.chart.name(i).to_string(), x);
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = Bindings> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }
}

/// The coordinate algebra of smooth expressions on a chart, with its sample
/// grid as the computable stand-in for its real spectrum.
#[derive(Debug, Clone)]
pub struct CoordinateAlgebra {
    pub chart: Chart,
    pub grid_density: usize,
    pub params: Bindings,
    /// Probe elements used by kernel checks; the coordinates themselves are
    /// always included.
    pub probes: Vec<ScalarExpr>,
}

impl CoordinateAlgebra {
    pub fn new(chart: Chart, grid_density: usize) -> CoordinateAlgebra {
        CoordinateAlgebra { chart, grid_density, params: Bindings::new(), probes: Vec::new() }
    }

    pub fn with_params(mut self, params: Bindings) -> CoordinateAlgebra {
        self.params = params;
        self
    }

    pub fn with_probes(mut self, probes: Vec<ScalarExpr>) -> CoordinateAlgebra {
        self.probes = probes;
        self
    }

    pub fn grid(&self) -> SampleGrid {
        SampleGrid::new(self.chart.clone(), self.grid_density)
    }

    fn probe_set(&self) -> Vec<ScalarExpr> {
        let mut out: Vec<ScalarExpr> = self
            .chart
            .names()
            .iter()
            .map(|n| ScalarExpr::symbol(*n))
            .collect();
        out.extend(self.probes.iter().cloned());
        out
    }
}

/// A quotient R[x1..xn]/(p1, ..., pn) with one univariate relation per
/// generator (separable systems); real points are the cartesian products of
/// the per-generator real roots.
#[derive(Debug, Clone)]
pub struct QuotientAlgebra {
    generators: Vec<String>,
    relations: Vec<UnivariateRelation>,
}

#[derive(Debug, Clone)]
struct UnivariateRelation {
    generator: usize,
    /// Dense ascending coefficients of the relation polynomial.
    coeffs: Vec<BigRational>,
}

/// A real root together with its multiplicity in the relation.
#[derive(Debug, Clone, PartialEq)]
pub struct RealRoot {
    pub value: RootValue,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RootValue {
    Exact(BigRational),
    Approx(f64),
}

impl RootValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            RootValue::Exact(q) => crate::expr::rational_to_f64(q),
            RootValue::Approx(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            RootValue::Exact(q) => Some(q),
            RootValue::Approx(_) => None,
        }
    }
}

impl std::fmt::Display for RootValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RootValue::Exact(q) => {
                if q.denom().is_one() {
                    write!(f, "{}", q.numer())
                } else {
                    write!(f, "{}/{}", q.numer(), q.denom())
                }
            }
            RootValue::Approx(x) => write!(f, "{x}"),
        }
    }
}

impl QuotientAlgebra {
    /// Parse relation expressions over the generator symbols. Each relation
    /// must be a univariate polynomial in exactly one generator, and each
    /// generator must be constrained by exactly one relation.
    pub fn new(
        generators: Vec<String>,
        relation_exprs: &[ScalarExpr],
    ) -> Result<QuotientAlgebra, SpectrumError> {
        if generators.is_empty() || generators.len() > 3 {
            return Err(SpectrumError::TooManyGenerators(generators.len()));
        }
        if relation_exprs.len() != generators.len() {
            return Err(SpectrumError::Unsupported(format!(
                "need exactly one relation per generator ({} generators, {} relations)",
                generators.len(),
                relation_exprs.len()
            )));
        }
        let mut relations = Vec::new();
        let mut used = vec![false; generators.len()];
        for expr in relation_exprs {
            let symbols = expr.symbols();
            if symbols.len() != 1 {
                return Err(SpectrumError::RelationNotUnivariate(expr.to_string()));
            }
            let generator = generators
                .iter()
                .position(|g| *g == symbols[0])
                .ok_or_else(|| SpectrumError::RelationNotUnivariate(expr.to_string()))?;
            if used[generator] {
                return Err(SpectrumError::Unsupported(format!(
                    "generator `{}` constrained twice",
                    generators[generator]
                )));
            }
            used[generator] = true;
            let coeffs = to_univariate(expr, &generators[generator])
                .ok_or_else(|| SpectrumError::RelationNotUnivariate(expr.to_string()))?;
            if coeffs.iter().all(Zero::is_zero) {
                return Err(SpectrumError::ZeroRelation);
            }
            if coeffs.len() < 2 {
                return Err(SpectrumError::Unsupported(
                    "relation is a nonzero constant; the quotient is trivial".into(),
                ));
            }
            relations.push(UnivariateRelation { generator, coeffs });
        }
        relations.sort_by_key(|r| r.generator);
        Ok(QuotientAlgebra { generators, relations })
    }

    pub fn generators(&self) -> &[String] {
        &self.generators
    }

    /// Degree of the relation constraining generator `i`.
    fn degree(&self, i: usize) -> usize {
        self.relations[i].coeffs.len() - 1
    }

    /// Real roots (with multiplicity) per generator.
    pub fn roots(&self) -> Result<Vec<Vec<RealRoot>>, SpectrumError> {
        self.relations.iter().map(|r| real_roots(&r.coeffs)).collect()
    }

    /// All real points: cartesian products of per-generator roots.
    pub fn points(&self) -> Result<Vec<Vec<RootValue>>, SpectrumError> {
        let roots = self.roots()?;
        let mut points: Vec<Vec<RootValue>> = vec![Vec::new()];
        for generator_roots in &roots {
            let mut next = Vec::new();
            for partial in &points {
                for root in generator_roots {
                    let mut extended = partial.clone();
                    extended.push(root.value.clone());
                    next.push(extended);
                }
            }
            points = next;
        }
        if roots.iter().any(|r| r.is_empty()) {
            points.clear();
        }
        Ok(points)
    }

    /// Basis monomials of the quotient: exponent tuples below the per-
    /// generator relation degrees.
    fn basis(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = vec![Vec::new()];
        for i in 0..self.generators.len() {
            let degree = self.degree(i);
            let mut next = Vec::new();
            for partial in &out {
                for e in 0..degree {
                    let mut extended = partial.clone();
                    extended.push(e);
                    next.push(extended);
                }
            }
            out = next;
        }
        out
    }

    fn monomial_label(&self, exponents: &[usize]) -> String {
        let parts: Vec<String> = exponents
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, &e)| {
                if e == 1 {
                    self.generators[i].clone()
                } else {
                    format!("{}^{}", self.generators[i], e)
                }
            })
            .collect();
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }

    fn vector_label(&self, basis: &[Vec<usize>], coeffs: &[BigRational]) -> String {
        let mut parts = Vec::new();
        for (exponents, c) in basis.iter().zip(coeffs) {
            if c.is_zero() {
                continue;
            }
            let mono = self.monomial_label(exponents);
            let coeff = if c.is_one() && mono != "1" {
                String::new()
            } else {
                format!("{c}")
            };
            parts.push(match (coeff.is_empty(), mono.as_str()) {
                (true, m) => m.to_string(),
                (false, "1") => coeff,
                (false, m) => format!("{coeff}*{m}"),
            });
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

/// Convert an expression to dense ascending univariate coefficients.
fn to_univariate(e: &ScalarExpr, var: &str) -> Option<Vec<BigRational>> {
    fn add(a: Vec<BigRational>, b: Vec<BigRational>) -> Vec<BigRational> {
        let n = a.len().max(b.len());
        let mut out = vec![BigRational::zero(); n];
        for (i, c) in a.into_iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in b.into_iter().enumerate() {
            out[i] += c;
        }
        out
    }
    fn mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }
    match e {
        ScalarExpr::Rational(q) => Some(vec![q.clone()]),
        ScalarExpr::Symbol(s) if s == var => Some(vec![BigRational::zero(), BigRational::one()]),
        ScalarExpr::Symbol(_) | ScalarExpr::Pi | ScalarExpr::Apply(_, _) => None,
        ScalarExpr::Add(a, b) => Some(add(to_univariate(a, var)?, to_univariate(b, var)?)),
        ScalarExpr::Mul(a, b) => Some(mul(&to_univariate(a, var)?, &to_univariate(b, var)?)),
        ScalarExpr::Neg(a) => Some(to_univariate(a, var)?.into_iter().map(|c| -c).collect()),
        ScalarExpr::Div(a, b) => {
            let den = to_univariate(b, var)?;
            if den.len() != 1 || den[0].is_zero() {
                return None;
            }
            Some(to_univariate(a, var)?.into_iter().map(|c| c / &den[0]).collect())
        }
        ScalarExpr::Pow(a, n) => {
            if *n < 0 {
                return None;
            }
            let base = to_univariate(a, var)?;
            let mut acc = vec![BigRational::one()];
            for _ in 0..*n {
                acc = mul(&acc, &base);
            }
            Some(acc)
        }
    }
}

fn trim_poly(coeffs: &mut Vec<BigRational>) {
    while coeffs.len() > 1 && coeffs.last().map(Zero::is_zero).unwrap_or(false) {
        coeffs.pop();
    }
}

fn poly_eval(coeffs: &[BigRational], x: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Exact division by (x - r); panics if r is not a root (callers check).
fn synthetic_divide(coeffs: &[BigRational], r: &BigRational) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); coeffs.len() - 1];
    let mut carry = BigRational::zero();
    for i in (0..coeffs.len()).rev() {
        let value = &coeffs[i] + &carry;
        if i == 0 {
            debug_assert!(value.is_zero(), "synthetic division by a non-root");
        } else {
            out[i - 1] = value.clone();
            carry = value * r;
        }
    }
    out
}

const DIVISOR_BOUND: u64 = 1_000_000;

fn small_divisors(n: &BigInt) -> Result<Vec<u64>, SpectrumError> {
    let magnitude = n.magnitude().to_u64().ok_or(SpectrumError::RootSearchBound)?;
    if magnitude == 0 {
        return Ok(vec![1]);
    }
    if magnitude > DIVISOR_BOUND {
        return Err(SpectrumError::RootSearchBound);
    }
    let mut out = Vec::new();
    let mut d = 1u64;
    while d * d <= magnitude {
        if magnitude % d == 0 {
            out.push(d);
            out.push(magnitude / d);
        }
        d += 1;
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// All real roots with multiplicity: exhaustive rational-root extraction,
/// then closed forms for what remains (degree <= 2).
pub fn real_roots(coeffs: &[BigRational]) -> Result<Vec<RealRoot>, SpectrumError> {
    let mut poly = coeffs.to_vec();
    trim_poly(&mut poly);
    if poly.iter().all(Zero::is_zero) {
        return Err(SpectrumError::ZeroRelation);
    }
    let mut roots: Vec<(BigRational, usize)> = Vec::new();

    // Strip powers of x.
    let mut zero_multiplicity = 0;
    while poly.len() > 1 && poly[0].is_zero() {
        poly.remove(0);
        zero_multiplicity += 1;
    }
    if zero_multiplicity > 0 {
        roots.push((BigRational::zero(), zero_multiplicity));
    }

    // Clear denominators for the rational root theorem.
    if poly.len() > 1 {
        let mut lcm = BigInt::one();
        for c in &poly {
            let d = c.denom();
            lcm = &lcm / num_integer_gcd(&lcm, d) * d;
        }
        let integer_poly: Vec<BigInt> =
            poly.iter().map(|c| (c * BigRational::from_integer(lcm.clone())).to_integer()).collect();
        let p_divs = small_divisors(&integer_poly[0])?;
        let q_divs = small_divisors(integer_poly.last().expect("nonempty"))?;
        let mut candidates = Vec::new();
        for &p in &p_divs {
            for &q in &q_divs {
                let candidate = BigRational::new(BigInt::from(p), BigInt::from(q));
                candidates.push(candidate.clone());
                candidates.push(-candidate);
            }
        }
        candidates.sort();
        candidates.dedup();
        for candidate in candidates {
            let mut multiplicity = 0;
            while poly.len() > 1 && poly_eval(&poly, &candidate).is_zero() {
                poly = synthetic_divide(&poly, &candidate);
                multiplicity += 1;
            }
            if multiplicity > 0 {
                roots.push((candidate, multiplicity));
            }
        }
    }

    let mut out: Vec<RealRoot> = roots
        .into_iter()
        .map(|(r, multiplicity)| RealRoot { value: RootValue::Exact(r), multiplicity })
        .collect();

    // Irrational remainder: closed forms up to degree 2.
    match poly.len() - 1 {
        0 => {}
        1 => {
            // Linear remainder would have had a rational root already.
            let r = -&poly[0] / &poly[1];
            out.push(RealRoot { value: RootValue::Exact(r), multiplicity: 1 });
        }
        2 => {
            let a = crate::expr::rational_to_f64(&poly[2]);
            let b = crate::expr::rational_to_f64(&poly[1]);
            let c = crate::expr::rational_to_f64(&poly[0]);
            let disc = b * b - 4.0 * a * c;
            if disc > 0.0 {
                let sqrt_disc = disc.sqrt();
                out.push(RealRoot {
                    value: RootValue::Approx((-b + sqrt_disc) / (2.0 * a)),
                    multiplicity: 1,
                });
                out.push(RealRoot {
                    value: RootValue::Approx((-b - sqrt_disc) / (2.0 * a)),
                    multiplicity: 1,
                });
            } else if disc == 0.0 {
                out.push(RealRoot { value: RootValue::Approx(-b / (2.0 * a)), multiplicity: 2 });
            }
            // disc < 0: no real roots from this factor.
        }
        d => {
            return Err(SpectrumError::Unsupported(format!(
                "irreducible factor of degree {d} after rational-root extraction"
            )))
        }
    }
    out.sort_by(|a, b| a.value.to_f64().partial_cmp(&b.value.to_f64()).expect("finite"));
    Ok(out)
}

fn num_integer_gcd(a: &BigInt, b: &BigInt) -> BigInt {
    let mut a = a.abs();
    let mut b = b.abs();
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    if a.is_zero() {
        BigInt::one()
    } else {
        a
    }
}

/// The Grassmann-valued function algebra C∞(chart, Λ_q).
#[derive(Debug, Clone)]
pub struct GrassmannFunctionAlgebra {
    pub chart: Chart,
    pub q: usize,
    pub grid_density: usize,
    pub params: Bindings,
}

/// A concrete commutative algebra presentation.
#[derive(Debug, Clone)]
pub enum AlgebraPresentation {
    Coordinate(CoordinateAlgebra),
    Weil { order: usize },
    Quotient(QuotientAlgebra),
    GrassmannFunctions(GrassmannFunctionAlgebra),
}

impl AlgebraPresentation {
    pub fn describe(&self) -> String {
        match self {
            AlgebraPresentation::Coordinate(c) => format!(
                "coordinate algebra on ({}) [grid {}^{}]",
                c.chart.names().join(", "),
                c.grid_density,
                c.chart.dim()
            ),
            AlgebraPresentation::Weil { order } => format!("Weil algebra R[e]/(e^{})", order + 1),
            AlgebraPresentation::Quotient(q) => {
                format!("quotient algebra on ({})", q.generators().join(", "))
            }
            AlgebraPresentation::GrassmannFunctions(g) => format!(
                "Grassmann-valued functions on ({}) with {} generators",
                g.chart.names().join(", "),
                g.q
            ),
        }
    }
}

/// A point of a spectrum, in report form.
#[derive(Debug, Clone, PartialEq)]
pub enum PointMorphism {
    /// Evaluation at a chart point.
    GridPoint(Bindings),
    /// The unique projection π of a Weil algebra, π(x + y e + ...) = x.
    WeilProjection { order: usize },
    /// Values assigned to the quotient generators.
    QuotientPoint(Vec<RootValue>),
}

impl std::fmt::Display for PointMorphism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PointMorphism::GridPoint(b) => {
                let parts: Vec<String> =
                    b.iter().map(|(k, v)| format!("{k}={v:.6}")).collect();
                write!(f, "χ({})", parts.join(", "))
            }
            PointMorphism::WeilProjection { .. } => write!(f, "π"),
            PointMorphism::QuotientPoint(values) => {
                let parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                write!(f, "x -> ({})", parts.join(", "))
            }
        }
    }
}

/// The real spectrum of a presentation: either a lazily enumerated grid or
/// an explicit finite point list.
#[derive(Debug, Clone)]
pub enum RealSpectrum {
    Grid(SampleGrid),
    Points(Vec<PointMorphism>),
}

impl RealSpectrum {
    pub fn count(&self) -> usize {
        match self {
            RealSpectrum::Grid(g) => g.len(),
            RealSpectrum::Points(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    /// Materialized points, capped for reporting.
    pub fn sample_points(&self, cap: usize) -> Vec<PointMorphism> {
        match self {
            RealSpectrum::Grid(g) => {
                g.iter().take(cap).map(PointMorphism::GridPoint).collect()
            }
            RealSpectrum::Points(p) => p.iter().take(cap).cloned().collect(),
        }
    }
}

/// Compute the real spectrum of a presentation.
pub fn real_spectrum(c: &AlgebraPresentation) -> Result<RealSpectrum, SpectrumError> {
    match c {
        AlgebraPresentation::Coordinate(alg) => Ok(RealSpectrum::Grid(alg.grid())),
        AlgebraPresentation::Weil { order } => Ok(RealSpectrum::Points(vec![
            PointMorphism::WeilProjection { order: *order },
        ])),
        AlgebraPresentation::Quotient(alg) => Ok(RealSpectrum::Points(
            alg.points()?.into_iter().map(PointMorphism::QuotientPoint).collect(),
        )),
        AlgebraPresentation::GrassmannFunctions(alg) => {
            Ok(RealSpectrum::Grid(SampleGrid::new(alg.chart.clone(), alg.grid_density)))
        }
    }
}

/// An element of a presented algebra, for Θ evaluation.
#[derive(Debug, Clone)]
pub enum AlgebraElement {
    Scalar(ScalarExpr),
    Weil(WeilElement<ScalarExpr>),
    /// Dense ascending coefficients over the (single) quotient generator.
    QuotientPoly(Vec<BigRational>),
    GrassmannFn(GrassmannFunction),
}

/// A value of Θ(f) at one point.
#[derive(Debug, Clone, PartialEq)]
pub enum ThetaValue {
    Real(f64),
    Exact(BigRational),
    Symbolic(ScalarExpr),
}

impl std::fmt::Display for ThetaValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ThetaValue::Real(v) => write!(f, "{v}"),
            ThetaValue::Exact(q) => write!(f, "{}", ScalarExpr::Rational(q.clone())),
            ThetaValue::Symbolic(e) => write!(f, "{e}"),
        }
    }
}

/// Θ(f): the function f̄ on the spectrum, materialized as point/value pairs
/// (capped at `cap` grid points for lazily enumerated spectra).
#[derive(Debug, Clone)]
pub struct ThetaImage {
    pub pairs: Vec<(PointMorphism, ThetaValue)>,
    pub truncated: bool,
}

pub const THETA_ENUMERATION_CAP: usize = 4096;

pub fn theta_image(
    c: &AlgebraPresentation,
    f: &AlgebraElement,
) -> Result<ThetaImage, SpectrumError> {
    match (c, f) {
        (AlgebraPresentation::Coordinate(alg), AlgebraElement::Scalar(expr)) => {
            let grid = alg.grid();
            let truncated = grid.len() > THETA_ENUMERATION_CAP;
            let mut pairs = Vec::new();
            for point in grid.iter().take(THETA_ENUMERATION_CAP) {
                let value = expr.eval(&point, &alg.params)?;
                pairs.push((PointMorphism::GridPoint(point), ThetaValue::Real(value)));
            }
            Ok(ThetaImage { pairs, truncated })
        }
        (AlgebraPresentation::Weil { order }, AlgebraElement::Weil(w)) => {
            // f̄(π) is the unit coefficient; π(x + y e) = x.
            let value = simplify(w.coeff(0))?;
            Ok(ThetaImage {
                pairs: vec![(
                    PointMorphism::WeilProjection { order: *order },
                    ThetaValue::Symbolic(value),
                )],
                truncated: false,
            })
        }
        (AlgebraPresentation::Quotient(alg), AlgebraElement::QuotientPoly(coeffs)) => {
            if alg.generators().len() != 1 {
                return Err(SpectrumError::Unsupported(
                    "element evaluation on multi-generator quotients".into(),
                ));
            }
            let mut pairs = Vec::new();
            for point in alg.points()? {
                let value = match &point[0] {
                    RootValue::Exact(r) => ThetaValue::Exact(poly_eval(coeffs, r)),
                    RootValue::Approx(x) => {
                        let mut acc = 0.0;
                        for c in coeffs.iter().rev() {
                            acc = acc * x + crate::expr::rational_to_f64(c);
                        }
                        ThetaValue::Real(acc)
                    }
                };
                pairs.push((PointMorphism::QuotientPoint(point), value));
            }
            Ok(ThetaImage { pairs, truncated: false })
        }
        (AlgebraPresentation::GrassmannFunctions(alg), AlgebraElement::GrassmannFn(func)) => {
            // Real points only see the body f(x, 0).
            let grid = SampleGrid::new(alg.chart.clone(), alg.grid_density);
            let truncated = grid.len() > THETA_ENUMERATION_CAP;
            let body = func.body();
            let mut pairs = Vec::new();
            for point in grid.iter().take(THETA_ENUMERATION_CAP) {
                let value = body.eval(&point, &alg.params)?;
                pairs.push((PointMorphism::GridPoint(point), ThetaValue::Real(value)));
            }
            Ok(ThetaImage { pairs, truncated })
        }
        _ => Err(SpectrumError::Unsupported(
            "element type does not match the presentation".into(),
        )),
    }
}

/// Ghost-ideal report: the kernel of Θ relative to the enumerated family.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GhostReport {
    pub algebra: String,
    pub stage: String,
    pub points_enumerated: usize,
    pub kernel_basis: Vec<String>,
    pub geometric: bool,
    pub witness: Option<String>,
    pub notes: Vec<String>,
}

/// Stage at which geometricity is asked.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum StageSpec {
    Real,
    Weil { order: usize },
    GrassmannValues { q: usize },
}

impl StageSpec {
    pub fn label(&self) -> String {
        match self {
            StageSpec::Real => "R".to_string(),
            StageSpec::Weil { order } => format!("W^{order}"),
            StageSpec::GrassmannValues { q } => format!("Λ({q})"),
        }
    }
}

/// Kernel of Θ at stage R.
pub fn ghost_ideal(c: &AlgebraPresentation) -> Result<GhostReport, SpectrumError> {
    is_geometric_at_stage(c, &StageSpec::Real)
}

/// Geometricity verdict of `c` from the viewpoint of `stage`, relative to
/// the documented point families.
pub fn is_geometric_at_stage(
    c: &AlgebraPresentation,
    stage: &StageSpec,
) -> Result<GhostReport, SpectrumError> {
    match (c, stage) {
        (AlgebraPresentation::Weil { order }, StageSpec::Real) => {
            let k = *order;
            let kernel_basis: Vec<String> = (1..=k)
                .map(|i| if i == 1 { "e".to_string() } else { format!("e^{i}") })
                .collect();
            let geometric = kernel_basis.is_empty();
            Ok(GhostReport {
                algebra: c.describe(),
                stage: stage.label(),
                points_enumerated: 1,
                witness: kernel_basis.first().cloned(),
                geometric,
                kernel_basis,
                notes: vec![
                    "spectrum is the single projection π(x + y*e) = x; every nilpotent is a ghost"
                        .to_string(),
                ],
            })
        }
        (AlgebraPresentation::Quotient(alg), StageSpec::Real) => {
            quotient_stage_kernel(c, alg, 0, &stage.label())
        }
        (AlgebraPresentation::Quotient(alg), StageSpec::Weil { order }) => {
            quotient_stage_kernel(c, alg, *order, &stage.label())
        }
        (AlgebraPresentation::Coordinate(alg), StageSpec::Real) => {
            coordinate_kernel(c, alg, 0, &stage.label())
        }
        (AlgebraPresentation::Coordinate(alg), StageSpec::Weil { order }) => {
            coordinate_kernel(c, alg, *order, &stage.label())
        }
        (AlgebraPresentation::Coordinate(alg), StageSpec::GrassmannValues { .. }) => {
            // χ_{v,a}(f) = f(x) + v(f)(x) a carries the same value data as the
            // order-1 jet family.
            coordinate_kernel(c, alg, 1, &stage.label())
        }
        (AlgebraPresentation::GrassmannFunctions(alg), StageSpec::Real) => {
            grassmann_function_kernel(c, alg, stage, false)
        }
        (AlgebraPresentation::GrassmannFunctions(alg), StageSpec::GrassmannValues { .. }) => {
            grassmann_function_kernel(c, alg, stage, true)
        }
        _ => Err(SpectrumError::Unsupported(format!(
            "no constructed point family for {} at stage {}",
            c.describe(),
            stage.label()
        ))),
    }
}

/// Kernel of a coordinate algebra at stage R (order 0) or W^k (order k >= 1),
/// decided on the sample grid over the probe set.
fn coordinate_kernel(
    c: &AlgebraPresentation,
    alg: &CoordinateAlgebra,
    order: usize,
    stage_label: &str,
) -> Result<GhostReport, SpectrumError> {
    let grid = alg.grid();
    let probes = alg.probe_set();
    let mut kernel = Vec::new();
    let mut points_enumerated = grid.len();

    if order == 0 {
        for probe in &probes {
            let simplified = simplify(probe)?;
            if simplified.is_zero() {
                continue;
            }
            let vanishes = grid
                .iter()
                .map(|point| simplified.eval(&point, &alg.params))
                .collect::<Result<Vec<_>, _>>()?
                .iter()
                .all(|v| v.abs() < 1e-12);
            if vanishes {
                kernel.push(simplified.to_string());
            }
        }
    } else {
        let grid_points: Vec<Bindings> = grid.iter().collect();
        let family = stage_point_family(&alg.chart, &grid_points, order);
        points_enumerated = family.len();
        for probe in &probes {
            let simplified = simplify(probe)?;
            if simplified.is_zero() {
                continue;
            }
            let mut vanishes = true;
            for point in &family {
                let jet = jet_eval(&simplified, point, &alg.params)?;
                if jet.coeffs().iter().any(|v| v.abs() >= 1e-12) {
                    vanishes = false;
                    break;
                }
            }
            if vanishes {
                kernel.push(simplified.to_string());
            }
        }
    }

    let geometric = kernel.is_empty();
    Ok(GhostReport {
        algebra: c.describe(),
        stage: stage_label.to_string(),
        points_enumerated,
        witness: kernel.first().cloned(),
        geometric,
        kernel_basis: kernel,
        notes: vec![format!(
            "decision procedure: vanishing on the deterministic {}^{} sample grid over {} probes",
            alg.grid_density,
            alg.chart.dim(),
            probes.len()
        )],
    })
}

/// Exact kernel of a quotient algebra at stage R (order 0) or W^k: rows are
/// the Taylor functionals realizable by the admissible jet family at each
/// real root.
fn quotient_stage_kernel(
    c: &AlgebraPresentation,
    alg: &QuotientAlgebra,
    order: usize,
    stage_label: &str,
) -> Result<GhostReport, SpectrumError> {
    if alg.generators().len() > 1 && order > 0 {
        return Err(SpectrumError::Unsupported(
            "Weil-stage kernels for multi-generator quotients".into(),
        ));
    }
    let basis = alg.basis();
    let roots = alg.roots()?;
    let mut notes = Vec::new();

    // Assemble functional rows. Exact path when every root is rational.
    let all_exact = roots
        .iter()
        .flatten()
        .all(|r| matches!(r.value, RootValue::Exact(_)));

    let mut points_enumerated = 0usize;
    let (kernel_vectors, row_count): (Vec<Vec<BigRational>>, usize) = if alg.generators().len() == 1
    {
        let mut rows_exact: Vec<Vec<BigRational>> = Vec::new();
        let mut rows_float: Vec<Vec<f64>> = Vec::new();
        for root in &roots[0] {
            let derivative_orders = admissible_derivative_orders(order, root.multiplicity);
            points_enumerated += 1;
            for &j in &derivative_orders {
                match (&root.value, all_exact) {
                    (RootValue::Exact(r), true) => {
                        rows_exact.push(
                            basis
                                .iter()
                                .map(|e| taylor_row_exact(e[0], j, r))
                                .collect(),
                        );
                    }
                    _ => {
                        let r = root.value.to_f64();
                        rows_float.push(
                            basis.iter().map(|e| taylor_row_f64(e[0], j, r)).collect(),
                        );
                    }
                }
            }
        }
        if all_exact {
            let count = rows_exact.len();
            (kernel_rational(rows_exact, basis.len()), count)
        } else {
            let count = rows_float.len();
            let kernel = kernel_f64(rows_float, basis.len(), 1e-9);
            notes.push("irrational roots present; kernel computed in floats (tol 1e-9)".into());
            (
                kernel
                    .into_iter()
                    .map(|v| {
                        v.into_iter()
                            .map(|x| {
                                BigRational::from_float(x)
                                    .unwrap_or_else(BigRational::zero)
                            })
                            .collect()
                    })
                    .collect(),
                count,
            )
        }
    } else {
        // Multi-generator, stage R: evaluation rows at the cartesian points.
        let points = alg.points()?;
        points_enumerated = points.len();
        if all_exact {
            let rows: Vec<Vec<BigRational>> = points
                .iter()
                .map(|point| {
                    basis
                        .iter()
                        .map(|exponents| {
                            exponents
                                .iter()
                                .enumerate()
                                .map(|(g, &e)| {
                                    rational_pow(
                                        point[g].as_exact().expect("all exact"),
                                        e,
                                    )
                                })
                                .fold(BigRational::one(), |a, b| a * b)
                        })
                        .collect()
                })
                .collect();
            let count = rows.len();
            (kernel_rational(rows, basis.len()), count)
        } else {
            let rows: Vec<Vec<f64>> = points
                .iter()
                .map(|point| {
                    basis
                        .iter()
                        .map(|exponents| {
                            exponents
                                .iter()
                                .enumerate()
                                .map(|(g, &e)| point[g].to_f64().powi(e as i32))
                                .product()
                        })
                        .collect()
                })
                .collect();
            let count = rows.len();
            let kernel = kernel_f64(rows, basis.len(), 1e-9);
            notes.push("irrational roots present; kernel computed in floats (tol 1e-9)".into());
            (
                kernel
                    .into_iter()
                    .map(|v| {
                        v.into_iter()
                            .map(|x| {
                                BigRational::from_float(x)
                                    .unwrap_or_else(BigRational::zero)
                            })
                            .collect()
                    })
                    .collect(),
                count,
            )
        }
    };

    // Lemma check: every reported kernel vector must be annihilated by every
    // functional row we enumerated; by construction of the null space this
    // holds exactly, and we re-verify it rather than assume it.
    if all_exact && alg.generators().len() == 1 {
        for vector in &kernel_vectors {
            for root in &roots[0] {
                for &j in &admissible_derivative_orders(order, root.multiplicity) {
                    let r = root.value.as_exact().expect("exact");
                    let mut acc = BigRational::zero();
                    for (e, c) in basis.iter().zip(vector) {
                        acc += c * taylor_row_exact(e[0], j, r);
                    }
                    assert!(acc.is_zero(), "kernel vector not annihilated by enumerated point");
                }
            }
        }
        notes.push("kernel re-verified: every enumerated functional annihilates it".into());
    }

    let kernel_basis: Vec<String> = kernel_vectors
        .iter()
        .map(|v| alg.vector_label(&basis, v))
        .collect();
    let geometric = kernel_basis.is_empty();
    notes.push(format!("{row_count} separating functionals enumerated"));
    Ok(GhostReport {
        algebra: c.describe(),
        stage: stage_label.to_string(),
        points_enumerated,
        witness: kernel_basis.first().cloned(),
        geometric,
        kernel_basis,
        notes,
    })
}

/// Derivative orders a jet point at a root of given multiplicity can probe
/// inside W^k: p(x) with an order-m root at r admits jets r + n with lowest
/// e-index above k/m, so Taylor functionals f -> f^(j)(r) are realizable for
/// j*i_min <= k.
fn admissible_derivative_orders(k: usize, multiplicity: usize) -> Vec<usize> {
    if k == 0 || multiplicity <= 1 {
        return vec![0];
    }
    let i_min = k / multiplicity + 1;
    (0..=(k / i_min)).collect()
}

fn taylor_row_exact(exponent: usize, j: usize, r: &BigRational) -> BigRational {
    if j > exponent {
        return BigRational::zero();
    }
    // d^j/dx^j x^t at r = t!/(t-j)! r^{t-j}
    let mut factor = BigRational::one();
    for s in 0..j {
        factor *= BigRational::from_integer(BigInt::from(exponent - s));
    }
    factor * rational_pow(r, exponent - j)
}

fn taylor_row_f64(exponent: usize, j: usize, r: f64) -> f64 {
    if j > exponent {
        return 0.0;
    }
    let mut factor = 1.0;
    for s in 0..j {
        factor *= (exponent - s) as f64;
    }
    factor * r.powi((exponent - j) as i32)
}

fn rational_pow(r: &BigRational, e: usize) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..e {
        acc *= r;
    }
    acc
}

fn grassmann_function_kernel(
    c: &AlgebraPresentation,
    alg: &GrassmannFunctionAlgebra,
    stage: &StageSpec,
    chi_va_family: bool,
) -> Result<GhostReport, SpectrumError> {
    // Both the real points and the χ_{v,a} family see only the body
    // f(x, 0) (plus its directional derivatives); every generator is a ghost.
    let kernel_basis: Vec<String> = (1..=alg.q).map(|i| format!("g{i}")).collect();
    let grid = SampleGrid::new(alg.chart.clone(), alg.grid_density);
    let mut notes = vec![
        "kernel listed by generating set: every function with zero body is invisible".to_string(),
    ];
    if chi_va_family {
        notes.push(
            "family χ_{v,a}(f) = f(x,0) + v(f(·,0))a probes body data only; the full Λ-spectrum \
             is strictly richer"
                .to_string(),
        );
    }
    Ok(GhostReport {
        algebra: c.describe(),
        stage: stage.label(),
        points_enumerated: grid.len(),
        witness: kernel_basis.first().cloned(),
        geometric: false,
        kernel_basis,
        notes,
    })
}

/// Exact null-space basis over the rationals.
fn kernel_rational(rows: Vec<Vec<BigRational>>, cols: usize) -> Vec<Vec<BigRational>> {
    let mut m = rows;
    let mut pivot_cols = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(pivot) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, pivot);
        let lead = m[row][col].clone();
        for c in m[row].iter_mut() {
            *c /= &lead;
        }
        for r in 0..m.len() {
            if r != row && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in 0..cols {
                    let delta = &factor * &m[row][c];
                    m[r][c] -= delta;
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
        if row == m.len() {
            break;
        }
    }
    let mut basis = Vec::new();
    for free in 0..cols {
        if pivot_cols.contains(&free) {
            continue;
        }
        let mut v = vec![BigRational::zero(); cols];
        v[free] = BigRational::one();
        for (r, &pc) in pivot_cols.iter().enumerate() {
            v[pc] = -m[r][free].clone();
        }
        basis.push(v);
    }
    basis
}

/// Null-space basis over floats, pivot tolerance `tol`.
fn kernel_f64(rows: Vec<Vec<f64>>, cols: usize, tol: f64) -> Vec<Vec<f64>> {
    let mut m = rows;
    let mut pivot_cols = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(pivot) = (row..m.len())
            .filter(|&r| m[r][col].abs() > tol)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).expect("finite"))
        else {
            continue;
        };
        m.swap(row, pivot);
        let lead = m[row][col];
        for c in m[row].iter_mut() {
            *c /= lead;
        }
        for r in 0..m.len() {
            if r != row && m[r][col].abs() > 0.0 {
                let factor = m[r][col];
                for c in 0..cols {
                    m[r][c] -= factor * m[row][c];
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
        if row == m.len() {
            break;
        }
    }
    let mut basis = Vec::new();
    for free in 0..cols {
        if pivot_cols.contains(&free) {
            continue;
        }
        let mut v = vec![0.0; cols];
        v[free] = 1.0;
        for (r, &pc) in pivot_cols.iter().enumerate() {
            v[pc] = -m[r][free];
        }
        basis.push(v);
    }
    basis
}

/// A Grassmann stage point χ_{v,a}: evaluation of the body plus the
/// directional derivative paired with a nilpotent element.
#[derive(Debug, Clone)]
pub struct GrassmannStagePoint {
    base: Bindings,
    tangent: Vec<f64>,
    nilpotent: GrassmannElement<f64>,
}

/// Build χ_{v,a}; rejects `a` with a nonzero unit component.
pub fn grassmann_stage_point(
    base: Bindings,
    tangent: Vec<f64>,
    nilpotent: GrassmannElement<f64>,
) -> Result<GrassmannStagePoint, SpectrumError> {
    if !nilpotent.is_nilpotent() {
        return Err(SpectrumError::Algebra(AlgebraError::NotNilpotent));
    }
    Ok(GrassmannStagePoint { base, tangent, nilpotent })
}

impl GrassmannStagePoint {
    /// χ_{v,a}(f) = f(x, 0) + v(f(·, 0)) a. The body is pushed through an
    /// order-1 jet, so multiplicativity against [`crate::algebra::grassmann_mul`]
    /// is bit-exact whenever a² = 0 (e.g. `a` a single generator).
    pub fn apply(
        &self,
        f: &GrassmannFunction,
        params: &Bindings,
    ) -> Result<GrassmannElement<f64>, SpectrumError> {
        let chart = f.chart();
        if self.tangent.len() != chart.dim() {
            return Err(SpectrumError::Unsupported(format!(
                "tangent vector has {} components for a {}-dimensional chart",
                self.tangent.len(),
                chart.dim()
            )));
        }
        let mut direction = Bindings::new();
        for (i, &v) in self.tangent.iter().enumerate() {
            direction.insert(chart.name(i).to_string(), v);
        }
        let point = WeilStagePoint::order_one(self.base.clone(), &direction);
        let jet = jet_eval(&f.body(), &point, params)?;
        let unit = GrassmannElement::scalar(f.q(), *jet.coeff(0));
        let soul = self.nilpotent.scale(jet.coeff(1));
        Ok(unit.add(&soul)?)
    }
}

/// A function set for superposition closure: either a finite generator list
/// or the full expression algebra (closed by construction).
#[derive(Debug, Clone)]
pub enum FunctionSet {
    Finite(Vec<ScalarExpr>),
    All,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScClosureReport {
    pub depth: usize,
    pub initial_size: usize,
    pub added: Vec<String>,
    pub sc_closed: bool,
}

/// Close a generator set under composition with the primitive library up to
/// `depth` rounds, reporting whether the input was already closed.
pub fn sc_closure(set: &FunctionSet, depth: usize) -> Result<ScClosureReport, SpectrumError> {
    let generators = match set {
        FunctionSet::All => {
            return Ok(ScClosureReport {
                depth,
                initial_size: 0,
                added: Vec::new(),
                sc_closed: true,
            })
        }
        FunctionSet::Finite(g) => g,
    };
    let mut closure: std::collections::BTreeSet<ScalarExpr> = generators
        .iter()
        .map(simplify)
        .collect::<Result<_, _>>()?;
    let initial: std::collections::BTreeSet<ScalarExpr> = closure.clone();
    let mut added = Vec::new();
    for _ in 0..depth {
        let mut new_elements = Vec::new();
        for f in &closure {
            for p in Primitive::ALL {
                // Compositions outside a primitive's constant domain (e.g.
                // log(0)) are skipped rather than fatal.
                match simplify(&f.clone().apply(p)) {
                    Ok(composed) => {
                        if !closure.contains(&composed) {
                            new_elements.push(composed);
                        }
                    }
                    Err(ExprError::Domain(_)) => continue,
                    Err(e) => return Err(e.into()),
                }
            }
        }
        if new_elements.is_empty() {
            break;
        }
        for e in new_elements {
            if closure.insert(e.clone()) {
                added.push(e.to_string());
            }
        }
    }
    let sc_closed = closure == initial;
    Ok(ScClosureReport { depth, initial_size: initial.len(), added, sc_closed })
}
