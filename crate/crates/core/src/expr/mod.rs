//! Symbolic scalar expressions over named coordinates.
//!
//! An expression is an immutable tree of exact rational constants, the symbolic
//! constant pi, named symbols (coordinates or parameters), the arithmetic
//! operations `+ * / -` (unary), integer powers, and a fixed library of smooth
//! primitives. Everything downstream (metrics, Christoffel symbols, stage
//! lifts) is built out of these trees, so the operations here are kept pure:
//! differentiation and evaluation never mutate, and [`simplify`] returns a
//! fresh canonical tree.

mod parse;
mod simplify;

pub use parse::parse;
pub use simplify::{simplify, simplify_with_notes};

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Numeric bindings for evaluation, symbol name to value.
pub type Bindings = BTreeMap<String, f64>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("division by a zero denominator")]
    DivisionByZero,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid chart: {0}")]
    InvalidChart(String),
}

/// The fixed library of smooth one-argument primitives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum Primitive {
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Sqrt,
    Atan,
}

impl Primitive {
    pub const ALL: [Primitive; 9] = [
        Primitive::Exp,
        Primitive::Log,
        Primitive::Sin,
        Primitive::Cos,
        Primitive::Tan,
        Primitive::Sinh,
        Primitive::Cosh,
        Primitive::Sqrt,
        Primitive::Atan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Primitive::Exp => "exp",
            Primitive::Log => "log",
            Primitive::Sin => "sin",
            Primitive::Cos => "cos",
            Primitive::Tan => "tan",
            Primitive::Sinh => "sinh",
            Primitive::Cosh => "cosh",
            Primitive::Sqrt => "sqrt",
            Primitive::Atan => "atan",
        }
    }

    pub fn from_name(name: &str) -> Option<Primitive> {
        Primitive::ALL.iter().copied().find(|p| p.name() == name)
    }

    pub fn eval(self, x: f64) -> Result<f64, ExprError> {
        match self {
            Primitive::Exp => Ok(x.exp()),
            Primitive::Log => {
                if x <= 0.0 {
                    Err(ExprError::Domain(format!("log of non-positive value {x}")))
                } else {
                    Ok(x.ln())
                }
            }
            Primitive::Sin => Ok(x.sin()),
            Primitive::Cos => Ok(x.cos()),
            Primitive::Tan => Ok(x.tan()),
            Primitive::Sinh => Ok(x.sinh()),
            Primitive::Cosh => Ok(x.cosh()),
            Primitive::Sqrt => {
                if x < 0.0 {
                    Err(ExprError::Domain(format!("sqrt of negative value {x}")))
                } else {
                    Ok(x.sqrt())
                }
            }
            Primitive::Atan => Ok(x.atan()),
        }
    }
}

/// A symbolic real-valued expression tree.
///
/// Subtraction is represented as `Add(a, Neg(b))`; there is no dedicated node.
/// `Pow` exponents are literal integers, which keeps differentiation and the
/// rational normal form closed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScalarExpr {
    Rational(BigRational),
    Pi,
    Symbol(String),
    Add(Box<ScalarExpr>, Box<ScalarExpr>),
    Mul(Box<ScalarExpr>, Box<ScalarExpr>),
    Div(Box<ScalarExpr>, Box<ScalarExpr>),
    Neg(Box<ScalarExpr>),
    Pow(Box<ScalarExpr>, i32),
    Apply(Primitive, Box<ScalarExpr>),
}

impl ScalarExpr {
    pub fn int(n: i64) -> ScalarExpr {
        ScalarExpr::Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn rational(num: i64, den: i64) -> ScalarExpr {
        ScalarExpr::Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn symbol(name: impl Into<String>) -> ScalarExpr {
        ScalarExpr::Symbol(name.into())
    }

    pub fn zero() -> ScalarExpr {
        ScalarExpr::int(0)
    }

    pub fn one() -> ScalarExpr {
        ScalarExpr::int(1)
    }

    pub fn pow(self, n: i32) -> ScalarExpr {
        ScalarExpr::Pow(Box::new(self), n)
    }

    pub fn apply(self, p: Primitive) -> ScalarExpr {
        ScalarExpr::Apply(p, Box::new(self))
    }

    pub fn sin(self) -> ScalarExpr {
        self.apply(Primitive::Sin)
    }

    pub fn cos(self) -> ScalarExpr {
        self.apply(Primitive::Cos)
    }

    pub fn sqrt(self) -> ScalarExpr {
        self.apply(Primitive::Sqrt)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarExpr::Rational(q) if q.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, ScalarExpr::Rational(q) if q.is_one())
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            ScalarExpr::Rational(q) => Some(q),
            _ => None,
        }
    }

    /// All symbol names appearing in the tree.
    pub fn symbols(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_symbols(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_symbols(&self, out: &mut Vec<String>) {
        match self {
            ScalarExpr::Rational(_) | ScalarExpr::Pi => {}
            ScalarExpr::Symbol(s) => out.push(s.clone()),
            ScalarExpr::Add(a, b) | ScalarExpr::Mul(a, b) | ScalarExpr::Div(a, b) => {
                a.collect_symbols(out);
                b.collect_symbols(out);
            }
            ScalarExpr::Neg(a) | ScalarExpr::Apply(_, a) => a.collect_symbols(out),
            ScalarExpr::Pow(a, _) => a.collect_symbols(out),
        }
    }

    /// Exact partial derivative with respect to `coord`. Every other symbol
    /// (coordinate or parameter) is treated as a constant.
    pub fn differentiate(&self, coord: &str) -> ScalarExpr {
        match self {
            ScalarExpr::Rational(_) | ScalarExpr::Pi => ScalarExpr::zero(),
            ScalarExpr::Symbol(s) => {
                if s == coord {
                    ScalarExpr::one()
                } else {
                    ScalarExpr::zero()
                }
            }
            ScalarExpr::Add(a, b) => a.differentiate(coord) + b.differentiate(coord),
            ScalarExpr::Mul(a, b) => {
                a.differentiate(coord) * (**b).clone() + (**a).clone() * b.differentiate(coord)
            }
            ScalarExpr::Div(a, b) => {
                let num = a.differentiate(coord) * (**b).clone()
                    + -((**a).clone() * b.differentiate(coord));
                ScalarExpr::Div(Box::new(num), Box::new((**b).clone().pow(2)))
            }
            ScalarExpr::Neg(a) => -a.differentiate(coord),
            ScalarExpr::Pow(a, n) => {
                if *n == 0 {
                    ScalarExpr::zero()
                } else {
                    ScalarExpr::int(*n as i64)
                        * (**a).clone().pow(n - 1)
                        * a.differentiate(coord)
                }
            }
            ScalarExpr::Apply(p, u) => {
                let inner = (**u).clone();
                let outer = match p {
                    Primitive::Exp => inner.clone().apply(Primitive::Exp),
                    Primitive::Log => ScalarExpr::Div(Box::new(ScalarExpr::one()), u.clone()),
                    Primitive::Sin => inner.clone().cos(),
                    Primitive::Cos => -inner.clone().sin(),
                    Primitive::Tan => {
                        ScalarExpr::one() + inner.clone().apply(Primitive::Tan).pow(2)
                    }
                    Primitive::Sinh => inner.clone().apply(Primitive::Cosh),
                    Primitive::Cosh => inner.clone().apply(Primitive::Sinh),
                    Primitive::Sqrt => ScalarExpr::Div(
                        Box::new(ScalarExpr::one()),
                        Box::new(ScalarExpr::int(2) * inner.clone().sqrt()),
                    ),
                    Primitive::Atan => ScalarExpr::Div(
                        Box::new(ScalarExpr::one()),
                        Box::new(ScalarExpr::one() + inner.clone().pow(2)),
                    ),
                };
                outer * u.differentiate(coord)
            }
        }
    }

    /// Floating-point evaluation. `coords` is consulted before `params`;
    /// pi is bound automatically.
    pub fn eval(&self, coords: &Bindings, params: &Bindings) -> Result<f64, ExprError> {
        match self {
            ScalarExpr::Rational(q) => Ok(rational_to_f64(q)),
            ScalarExpr::Pi => Ok(std::f64::consts::PI),
            ScalarExpr::Symbol(s) => coords
                .get(s)
                .or_else(|| params.get(s))
                .copied()
                .ok_or_else(|| ExprError::UnboundSymbol(s.clone())),
            ScalarExpr::Add(a, b) => Ok(a.eval(coords, params)? + b.eval(coords, params)?),
            ScalarExpr::Mul(a, b) => Ok(a.eval(coords, params)? * b.eval(coords, params)?),
            ScalarExpr::Div(a, b) => {
                let den = b.eval(coords, params)?;
                if den == 0.0 {
                    return Err(ExprError::Domain("division by zero".into()));
                }
                Ok(a.eval(coords, params)? / den)
            }
            ScalarExpr::Neg(a) => Ok(-a.eval(coords, params)?),
            ScalarExpr::Pow(a, n) => {
                let base = a.eval(coords, params)?;
                if base == 0.0 && *n < 0 {
                    return Err(ExprError::Domain("zero raised to a negative power".into()));
                }
                Ok(base.powi(*n))
            }
            ScalarExpr::Apply(p, u) => p.eval(u.eval(coords, params)?),
        }
    }

    /// Convenience wrapper for a single merged binding map.
    pub fn eval_bound(&self, bindings: &Bindings) -> Result<f64, ExprError> {
        static EMPTY: std::sync::OnceLock<Bindings> = std::sync::OnceLock::new();
        self.eval(bindings, EMPTY.get_or_init(Bindings::new))
    }
}

pub(crate) fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // Fall back through big-integer quotient for values outside f64 range.
        let n = q.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = q.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

impl std::ops::Add for ScalarExpr {
    type Output = ScalarExpr;
    fn add(self, rhs: ScalarExpr) -> ScalarExpr {
        ScalarExpr::Add(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Sub for ScalarExpr {
    type Output = ScalarExpr;
    fn sub(self, rhs: ScalarExpr) -> ScalarExpr {
        ScalarExpr::Add(Box::new(self), Box::new(ScalarExpr::Neg(Box::new(rhs))))
    }
}

impl std::ops::Mul for ScalarExpr {
    type Output = ScalarExpr;
    fn mul(self, rhs: ScalarExpr) -> ScalarExpr {
        ScalarExpr::Mul(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Neg for ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        ScalarExpr::Neg(Box::new(self))
    }
}

/// Operator precedence levels used by the printer. The grammar binds unary
/// minus inside the exponent base, so `-x^2` parses as `(-x)^2`; the printer
/// always parenthesizes composite children of `Neg` and `Pow` to keep
/// `parse(display(e)) == e`.
fn needs_parens_as_factor(e: &ScalarExpr) -> bool {
    matches!(
        e,
        ScalarExpr::Add(_, _) | ScalarExpr::Neg(_) | ScalarExpr::Mul(_, _) | ScalarExpr::Div(_, _)
    ) || matches!(e, ScalarExpr::Rational(q) if q.is_negative())
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarExpr::Rational(q) => {
                if q.denom().is_one() {
                    write!(f, "{}", q.numer())
                } else {
                    write!(f, "{}/{}", q.numer(), q.denom())
                }
            }
            ScalarExpr::Pi => write!(f, "pi"),
            ScalarExpr::Symbol(s) => write!(f, "{s}"),
            ScalarExpr::Add(a, b) => {
                write!(f, "{a}")?;
                match &**b {
                    ScalarExpr::Neg(inner) => {
                        if matches!(&**inner, ScalarExpr::Add(_, _)) {
                            write!(f, " - ({inner})")
                        } else {
                            write!(f, " - {inner}")
                        }
                    }
                    ScalarExpr::Rational(q) if q.is_negative() => {
                        write!(f, " - {}", ScalarExpr::Rational(-q.clone()))
                    }
                    other => {
                        if matches!(other, ScalarExpr::Add(_, _)) {
                            write!(f, " + ({other})")
                        } else {
                            write!(f, " + {other}")
                        }
                    }
                }
            }
            ScalarExpr::Mul(a, b) => {
                if matches!(&**a, ScalarExpr::Add(_, _) | ScalarExpr::Neg(_))
                    || matches!(&**a, ScalarExpr::Rational(q) if q.is_negative())
                {
                    write!(f, "({a})*")?;
                } else {
                    write!(f, "{a}*")?;
                }
                if needs_parens_as_factor(b) {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            ScalarExpr::Div(a, b) => {
                if matches!(&**a, ScalarExpr::Add(_, _) | ScalarExpr::Neg(_))
                    || matches!(&**a, ScalarExpr::Rational(q) if q.is_negative() || !q.denom().is_one())
                {
                    write!(f, "({a})/")?;
                } else {
                    write!(f, "{a}/")?;
                }
                if needs_parens_as_factor(b)
                    || matches!(&**b, ScalarExpr::Rational(q) if !q.denom().is_one())
                {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            ScalarExpr::Neg(a) => {
                if matches!(
                    &**a,
                    ScalarExpr::Add(_, _)
                        | ScalarExpr::Mul(_, _)
                        | ScalarExpr::Div(_, _)
                        | ScalarExpr::Pow(_, _)
                        | ScalarExpr::Neg(_)
                ) {
                    write!(f, "-({a})")
                } else {
                    write!(f, "-{a}")
                }
            }
            ScalarExpr::Pow(a, n) => {
                let base_is_atom = matches!(
                    &**a,
                    ScalarExpr::Symbol(_) | ScalarExpr::Pi | ScalarExpr::Apply(_, _)
                ) || matches!(&**a, ScalarExpr::Rational(q) if !q.is_negative() && q.denom().is_one());
                if base_is_atom {
                    write!(f, "{a}^{n}")
                } else {
                    write!(f, "({a})^{n}")
                }
            }
            ScalarExpr::Apply(p, u) => write!(f, "{}({u})", p.name()),
        }
    }
}

/// An ordered coordinate system with sampling ranges.
///
/// The ranges are metadata for deterministic sample-point generation; they are
/// open intervals chosen to avoid coordinate singularities of the bundled
/// metrics.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Chart {
    coords: Vec<Coordinate>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Coordinate {
    pub name: String,
    pub range: (f64, f64),
}

pub const DEFAULT_COORD_RANGE: (f64, f64) = (0.5, 1.5);

impl Chart {
    pub fn new(names: &[&str]) -> Result<Chart, ExprError> {
        Chart::with_ranges(
            &names
                .iter()
                .map(|n| (n.to_string(), DEFAULT_COORD_RANGE))
                .collect::<Vec<_>>(),
        )
    }

    pub fn with_ranges(coords: &[(String, (f64, f64))]) -> Result<Chart, ExprError> {
        if coords.is_empty() {
            return Err(ExprError::InvalidChart("chart needs at least one coordinate".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (name, range) in coords {
            if name == "pi" || name == "π" {
                return Err(ExprError::InvalidChart("`pi` is reserved".into()));
            }
            if Primitive::from_name(name).is_some() {
                return Err(ExprError::InvalidChart(format!("`{name}` names a primitive")));
            }
            if !seen.insert(name.clone()) {
                return Err(ExprError::InvalidChart(format!("duplicate coordinate `{name}`")));
            }
            if !(range.0 < range.1) {
                return Err(ExprError::InvalidChart(format!("empty range for `{name}`")));
            }
        }
        Ok(Chart {
            coords: coords
                .iter()
                .map(|(name, range)| Coordinate { name: name.clone(), range: *range })
                .collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn names(&self) -> Vec<&str> {
        self.coords.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.coords[i].name
    }

    pub fn range(&self, i: usize) -> (f64, f64) {
        self.coords[i].range
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c.name == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    pub fn coordinates(&self) -> &[Coordinate] {
        &self.coords
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart_trtp() -> Chart {
        Chart::new(&["t", "r", "θ", "φ"]).unwrap()
    }

    #[test]
    fn differentiate_power_rule() {
        // d/dr (1 - 2M/r) = 2M/r^2
        let chart = chart_trtp();
        let e = parse("1 - 2*M/r", &chart, &["M".into()]).unwrap();
        let d = simplify(&e.differentiate("r")).unwrap();
        let expected = simplify(&parse("2*M/r^2", &chart, &["M".into()]).unwrap()).unwrap();
        assert_eq!(d, expected);
    }

    #[test]
    fn differentiate_chain_rule() {
        let chart = chart_trtp();
        let e = parse("sin(θ)^2", &chart, &[]).unwrap();
        let d = simplify(&e.differentiate("θ")).unwrap();
        let expected = simplify(&parse("2*sin(θ)*cos(θ)", &chart, &[]).unwrap()).unwrap();
        assert_eq!(d, expected);
    }

    #[test]
    fn differentiate_independent_coordinate() {
        let chart = chart_trtp();
        let e = parse("r", &chart, &[]).unwrap();
        assert!(simplify(&e.differentiate("t")).unwrap().is_zero());
    }

    #[test]
    fn eval_schwarzschild_factor() {
        let chart = chart_trtp();
        let e = parse("1 - 2*M/r", &chart, &["M".into()]).unwrap();
        let mut coords = Bindings::new();
        coords.insert("r".into(), 4.0);
        let mut params = Bindings::new();
        params.insert("M".into(), 1.0);
        assert_eq!(e.eval(&coords, &params).unwrap(), 0.5);
    }

    #[test]
    fn eval_unit_is_one() {
        let one = ScalarExpr::one();
        assert_eq!(one.eval_bound(&Bindings::new()).unwrap(), 1.0);
    }

    #[test]
    fn eval_unbound_symbol_errors() {
        let e = ScalarExpr::symbol("x");
        assert!(matches!(
            e.eval_bound(&Bindings::new()),
            Err(ExprError::UnboundSymbol(_))
        ));
    }

    #[test]
    fn eval_domain_errors() {
        let log = ScalarExpr::int(-1).apply(Primitive::Log);
        assert!(matches!(log.eval_bound(&Bindings::new()), Err(ExprError::Domain(_))));
        let div = ScalarExpr::Div(Box::new(ScalarExpr::one()), Box::new(ScalarExpr::zero()));
        assert!(matches!(div.eval_bound(&Bindings::new()), Err(ExprError::Domain(_))));
    }

    #[test]
    fn chart_rejects_duplicates_and_reserved_names() {
        assert!(Chart::new(&["x", "x"]).is_err());
        assert!(Chart::new(&["pi"]).is_err());
        assert!(Chart::new(&["sin"]).is_err());
        assert!(Chart::new(&[]).is_err());
    }

    #[test]
    fn display_round_trips_structures() {
        let chart = Chart::new(&["x", "y"]).unwrap();
        let cases = [
            "1 - 2*x/y",
            "sin(x)^2",
            "-(x^2)",
            "(-x)^2",
            "x/(y*x)",
            "x - (y + 1)",
            "2*x*(-3)",
        ];
        for text in cases {
            let e = parse(text, &chart, &[]).unwrap();
            let printed = e.to_string();
            let reparsed = parse(&printed, &chart, &[]).unwrap();
            assert_eq!(e, reparsed, "round trip failed for `{text}` -> `{printed}`");
        }
    }
}
