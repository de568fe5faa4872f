//! Text forms for stage-algebra elements: `"3 + 2*e"` for Weil elements and
//! `"1 + x^2*g1^g2"` for Grassmann elements, where `e` is the nilpotent
//! generator and `gi` the i-th anticommuting generator. Between generators
//! `^` denotes the wedge; that occurrence is rewritten to `*` (the algebra
//! product restricted to generators *is* the wedge) and the result is parsed
//! with the ordinary expression grammar, then interpreted into the algebra.

use num_traits::ToPrimitive;

use crate::expr::{parse, Chart, ScalarExpr};

use super::{AlgebraError, GrassmannElement, WeilElement};

/// Rewrite `^` into `*` wherever it sits between two generator identifiers.
fn rewrite_wedges(text: &str, is_generator: &dyn Fn(&str) -> bool) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '^' {
            // Identify the identifier that follows (skipping spaces).
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_whitespace() {
                j += 1;
            }
            let start = j;
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let ident: String = chars[start..j].iter().collect();
            if !ident.is_empty()
                && !ident.chars().next().unwrap().is_ascii_digit()
                && is_generator(&ident)
            {
                out.push('*');
                i += 1;
                continue;
            }
        }
        out.push(c);
        i += 1;
    }
    out
}

enum Interpreted<T> {
    Scalar(ScalarExpr),
    Element(T),
}

trait StageAlgebra: Sized + Clone {
    fn from_scalar(&self, c: ScalarExpr) -> Self;
    fn add(&self, rhs: &Self) -> Result<Self, AlgebraError>;
    fn mul(&self, rhs: &Self) -> Result<Self, AlgebraError>;
    fn neg(&self) -> Self;
    fn scale(&self, c: &ScalarExpr) -> Self;
}

impl StageAlgebra for WeilElement<ScalarExpr> {
    fn from_scalar(&self, c: ScalarExpr) -> Self {
        WeilElement::constant(self.order(), c)
    }
    fn add(&self, rhs: &Self) -> Result<Self, AlgebraError> {
        WeilElement::add(self, rhs)
    }
    fn mul(&self, rhs: &Self) -> Result<Self, AlgebraError> {
        WeilElement::mul(self, rhs)
    }
    fn neg(&self) -> Self {
        WeilElement::neg(self)
    }
    fn scale(&self, c: &ScalarExpr) -> Self {
        WeilElement::scale(self, c)
    }
}

impl StageAlgebra for GrassmannElement<ScalarExpr> {
    fn from_scalar(&self, c: ScalarExpr) -> Self {
        GrassmannElement::scalar(self.q(), c)
    }
    fn add(&self, rhs: &Self) -> Result<Self, AlgebraError> {
        GrassmannElement::add(self, rhs)
    }
    fn mul(&self, rhs: &Self) -> Result<Self, AlgebraError> {
        GrassmannElement::mul(self, rhs)
    }
    fn neg(&self) -> Self {
        GrassmannElement::neg(self)
    }
    fn scale(&self, c: &ScalarExpr) -> Self {
        GrassmannElement::scale(self, c)
    }
}

fn interpret<T: StageAlgebra>(
    e: &ScalarExpr,
    generator: &dyn Fn(&str) -> Option<T>,
    proto: &T,
) -> Result<Interpreted<T>, AlgebraError> {
    use Interpreted::*;
    Ok(match e {
        ScalarExpr::Rational(_) | ScalarExpr::Pi => Scalar(e.clone()),
        ScalarExpr::Symbol(s) => match generator(s) {
            Some(g) => Element(g),
            None => Scalar(e.clone()),
        },
        ScalarExpr::Add(a, b) => {
            match (interpret(a, generator, proto)?, interpret(b, generator, proto)?) {
                (Scalar(x), Scalar(y)) => Scalar(x + y),
                (x, y) => Element(lift(x, proto).add(&lift(y, proto))?),
            }
        }
        ScalarExpr::Mul(a, b) => {
            match (interpret(a, generator, proto)?, interpret(b, generator, proto)?) {
                (Scalar(x), Scalar(y)) => Scalar(x * y),
                (Scalar(x), Element(y)) => Element(y.scale(&x)),
                (Element(x), Scalar(y)) => Element(x.scale(&y)),
                (Element(x), Element(y)) => Element(x.mul(&y)?),
            }
        }
        ScalarExpr::Div(a, b) => {
            let denom = match interpret(b, generator, proto)? {
                Scalar(y) => y,
                Element(_) => {
                    return Err(AlgebraError::NotScalar(format!(
                        "cannot divide by algebra element `{b}`"
                    )))
                }
            };
            match interpret(a, generator, proto)? {
                Scalar(x) => Scalar(ScalarExpr::Div(Box::new(x), Box::new(denom))),
                Element(x) => Element(x.scale(&ScalarExpr::Div(
                    Box::new(ScalarExpr::one()),
                    Box::new(denom),
                ))),
            }
        }
        ScalarExpr::Neg(a) => match interpret(a, generator, proto)? {
            Scalar(x) => Scalar(-x),
            Element(x) => Element(x.neg()),
        },
        ScalarExpr::Pow(a, n) => match interpret(a, generator, proto)? {
            Scalar(x) => Scalar(x.pow(*n)),
            Element(x) => {
                if *n < 0 {
                    return Err(AlgebraError::NotScalar(format!(
                        "negative power of algebra element `{a}`"
                    )));
                }
                let mut acc = proto.from_scalar(ScalarExpr::one());
                for _ in 0..*n {
                    acc = acc.mul(&x)?;
                }
                Element(acc)
            }
        },
        ScalarExpr::Apply(p, arg) => match interpret(arg, generator, proto)? {
            Scalar(x) => Scalar(x.apply(*p)),
            Element(_) => {
                return Err(AlgebraError::NotScalar(format!(
                    "primitive {} applied to an algebra element",
                    p.name()
                )))
            }
        },
    })
}

fn lift<T: StageAlgebra>(i: Interpreted<T>, proto: &T) -> T {
    match i {
        Interpreted::Scalar(c) => proto.from_scalar(c),
        Interpreted::Element(e) => e,
    }
}

fn finish<T: StageAlgebra>(i: Interpreted<T>, proto: &T) -> T {
    lift(i, proto)
}

/// Parse a Weil element literal like `"3 + 2*e"` of the given order. Scalar
/// symbols must be chart coordinates or listed parameters (`e` is reserved
/// for the generator).
pub fn parse_weil(
    text: &str,
    order: usize,
    chart: &Chart,
    params: &[String],
) -> Result<WeilElement<ScalarExpr>, AlgebraError> {
    let mut extended: Vec<String> = params.to_vec();
    extended.push("e".to_string());
    let tree = parse(text, chart, &extended)?;
    let proto = WeilElement::<ScalarExpr>::zero(order);
    let generator = |name: &str| -> Option<WeilElement<ScalarExpr>> {
        (name == "e" && order >= 1).then(|| WeilElement::eps(order))
    };
    if order == 0 && tree.symbols().iter().any(|s| s == "e") {
        return Err(AlgebraError::NotScalar("order 0 has no generator `e`".into()));
    }
    let interpreted = interpret(&tree, &generator, &proto)?;
    let element = finish(interpreted, &proto);
    simplify_weil(&element)
}

fn simplify_weil(
    w: &WeilElement<ScalarExpr>,
) -> Result<WeilElement<ScalarExpr>, AlgebraError> {
    let mut coeffs = Vec::with_capacity(w.order() + 1);
    for c in w.coeffs() {
        coeffs.push(crate::expr::simplify(c)?);
    }
    Ok(WeilElement::new(coeffs)?)
}

/// Parse a Grassmann element literal like `"1 + x^2*g1^g2"` with `q`
/// generators named `g1..gq`; `^` between generators is the wedge.
pub fn parse_grassmann(
    text: &str,
    q: usize,
    chart: &Chart,
    params: &[String],
) -> Result<GrassmannElement<ScalarExpr>, AlgebraError> {
    super::check_q(q)?;
    let generator_index = |name: &str| -> Option<usize> {
        let rest = name.strip_prefix('g')?;
        let index = rest.parse::<u64>().ok()?.to_usize()?;
        (index >= 1 && index <= q && rest == index.to_string()).then_some(index)
    };
    let rewritten = rewrite_wedges(text, &|name| generator_index(name).is_some());
    let mut extended: Vec<String> = params.to_vec();
    for i in 1..=q {
        extended.push(format!("g{i}"));
    }
    let tree = parse(&rewritten, chart, &extended)?;
    let proto = GrassmannElement::<ScalarExpr>::zero(q);
    let generator = |name: &str| -> Option<GrassmannElement<ScalarExpr>> {
        generator_index(name).map(|i| GrassmannElement::generator(q, i).expect("index checked"))
    };
    let interpreted = interpret(&tree, &generator, &proto)?;
    let element = finish(interpreted, &proto);
    let mut out = GrassmannElement::zero(q);
    for (mask, coeff) in element.terms() {
        out.set_term(mask, crate::expr::simplify(coeff)?);
    }
    Ok(out)
}
