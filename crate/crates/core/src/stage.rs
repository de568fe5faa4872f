//! Stage transport: jet arithmetic over Weil stages, transported metrics,
//! the stage-isomorphism check, and parametrized-point spaces.
//!
//! A Weil stage point sends each coordinate to a truncated jet
//! `x_i + v_{i,1} e + ... + v_{i,k} e^k`; evaluating an expression through
//! jet arithmetic (truncated Taylor arithmetic, the forward mode of
//! differentiation) produces its image in R[e]/(e^{k+1}). Because evaluation
//! recurses through the tree with jet operations at each node, the morphism
//! laws `lift(f+g) = lift(f)+lift(g)` and `lift(fg) = lift(f)·lift(g)` hold
//! bit-exactly, not merely to rounding.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::algebra::{weil_mul, AlgebraError, WeilElement};
use crate::expr::{Bindings, Chart, ExprError, Primitive, ScalarExpr};
use crate::lorentz::{Derivation, Metric};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StageError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("jet order must be >= 1")]
    OrderZero,
    #[error("jet domain error: {0}")]
    Domain(String),
    #[error("map leaves the chart domain: coordinate `{coord}` = {value}")]
    OutOfDomain { coord: String, value: f64 },
    #[error("separation failure: `{left}` and `{right}` agree at every grid sample")]
    SeparationFailure { left: String, right: String },
    #[error("precondition failed: {0}")]
    Precondition(String),
}

/// Numeric jet: a Weil-algebra element with float coefficients.
pub type Jet = WeilElement<f64>;

/// A stage point C -> W^k: a base point of the chart plus order-k jet
/// coefficients per coordinate. Order 1 is the classical
/// `ρ(f) = f(χ) + v(f) e` with v the tangent direction.
#[derive(Debug, Clone, PartialEq)]
pub struct WeilStagePoint {
    base: Bindings,
    velocity: BTreeMap<String, Vec<f64>>,
    order: usize,
}

impl WeilStagePoint {
    pub fn new(
        base: Bindings,
        velocity: BTreeMap<String, Vec<f64>>,
        order: usize,
    ) -> Result<WeilStagePoint, StageError> {
        if order == 0 {
            return Err(StageError::OrderZero);
        }
        for coeffs in velocity.values() {
            if coeffs.len() != order {
                return Err(StageError::Precondition(format!(
                    "velocity data must carry exactly {order} coefficients per coordinate"
                )));
            }
        }
        Ok(WeilStagePoint { base, velocity, order })
    }

    /// Order-1 stage point from a base binding and a direction vector.
    pub fn order_one(base: Bindings, direction: &Bindings) -> WeilStagePoint {
        let velocity = direction
            .iter()
            .map(|(name, &v)| (name.clone(), vec![v]))
            .collect();
        WeilStagePoint { base, velocity, order: 1 }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn base(&self) -> &Bindings {
        &self.base
    }

    /// The jet image of a coordinate under this point.
    pub fn coordinate_jet(&self, name: &str) -> Option<Jet> {
        let value = *self.base.get(name)?;
        let mut coeffs = vec![0.0; self.order + 1];
        coeffs[0] = value;
        if let Some(v) = self.velocity.get(name) {
            coeffs[1..].copy_from_slice(v);
        }
        Some(Jet::new(coeffs).expect("nonempty"))
    }
}

fn constant_jet(order: usize, value: f64) -> Jet {
    Jet::constant(order, value)
}

/// Power-series division c = a/b, requiring the unit part of b nonzero.
pub fn jet_div(a: &Jet, b: &Jet) -> Result<Jet, StageError> {
    let k = a.order();
    if b.order() != k {
        return Err(StageError::Algebra(AlgebraError::OrderMismatch {
            left: k,
            right: b.order(),
        }));
    }
    let b0 = *b.coeff(0);
    if b0 == 0.0 {
        return Err(StageError::Domain("division by a jet with zero unit part".into()));
    }
    let mut c = vec![0.0; k + 1];
    for n in 0..=k {
        let mut acc = *a.coeff(n);
        for m in 0..n {
            acc -= c[m] * b.coeff(n - m);
        }
        c[n] = acc / b0;
    }
    Ok(Jet::new(c).expect("nonempty"))
}

fn jet_powi(base: &Jet, n: i32) -> Result<Jet, StageError> {
    let k = base.order();
    if n == 0 {
        return Ok(constant_jet(k, 1.0));
    }
    let positive = if n > 0 {
        base.clone()
    } else {
        jet_div(&constant_jet(k, 1.0), base)?
    };
    let mut acc = constant_jet(k, 1.0);
    for _ in 0..n.unsigned_abs() {
        acc = weil_mul(&acc, &positive)?;
    }
    Ok(acc)
}

/// First derivative as a series of one lower effective order, kept at the
/// same truncation width (top coefficient unused by integrate).
fn series_derivative(u: &Jet) -> Vec<f64> {
    let k = u.order();
    (0..k).map(|m| (m + 1) as f64 * u.coeff(m + 1)).collect()
}

/// Taylor recurrences for the primitive library. Each case propagates the
/// full order-k jet from the argument jet.
pub fn jet_primitive(p: Primitive, u: &Jet) -> Result<Jet, StageError> {
    let k = u.order();
    let u0 = *u.coeff(0);
    match p {
        Primitive::Exp => {
            let mut y = vec![0.0; k + 1];
            y[0] = u0.exp();
            for n in 1..=k {
                let mut acc = 0.0;
                for m in 1..=n {
                    acc += m as f64 * u.coeff(m) * y[n - m];
                }
                y[n] = acc / n as f64;
            }
            Ok(Jet::new(y).expect("nonempty"))
        }
        Primitive::Log => {
            if u0 <= 0.0 {
                return Err(StageError::Domain(format!("log of non-positive jet value {u0}")));
            }
            let mut y = vec![0.0; k + 1];
            y[0] = u0.ln();
            for n in 1..=k {
                let mut acc = n as f64 * u.coeff(n);
                for m in 1..n {
                    acc -= m as f64 * y[m] * u.coeff(n - m);
                }
                y[n] = acc / (n as f64 * u0);
            }
            Ok(Jet::new(y).expect("nonempty"))
        }
        Primitive::Sin | Primitive::Cos => {
            let mut s = vec![0.0; k + 1];
            let mut c = vec![0.0; k + 1];
            s[0] = u0.sin();
            c[0] = u0.cos();
            for n in 1..=k {
                let mut acc_s = 0.0;
                let mut acc_c = 0.0;
                for m in 1..=n {
                    let du = m as f64 * u.coeff(m);
                    acc_s += du * c[n - m];
                    acc_c -= du * s[n - m];
                }
                s[n] = acc_s / n as f64;
                c[n] = acc_c / n as f64;
            }
            Ok(Jet::new(if p == Primitive::Sin { s } else { c }).expect("nonempty"))
        }
        Primitive::Sinh | Primitive::Cosh => {
            let mut sh = vec![0.0; k + 1];
            let mut ch = vec![0.0; k + 1];
            sh[0] = u0.sinh();
            ch[0] = u0.cosh();
            for n in 1..=k {
                let mut acc_s = 0.0;
                let mut acc_c = 0.0;
                for m in 1..=n {
                    let du = m as f64 * u.coeff(m);
                    acc_s += du * ch[n - m];
                    acc_c += du * sh[n - m];
                }
                sh[n] = acc_s / n as f64;
                ch[n] = acc_c / n as f64;
            }
            Ok(Jet::new(if p == Primitive::Sinh { sh } else { ch }).expect("nonempty"))
        }
        Primitive::Tan => {
            let s = jet_primitive(Primitive::Sin, u)?;
            let c = jet_primitive(Primitive::Cos, u)?;
            jet_div(&s, &c)
        }
        Primitive::Sqrt => {
            if u0 <= 0.0 {
                return Err(StageError::Domain(format!(
                    "sqrt of non-positive jet value {u0}"
                )));
            }
            let mut y = vec![0.0; k + 1];
            y[0] = u0.sqrt();
            for n in 1..=k {
                let mut acc = *u.coeff(n);
                for m in 1..n {
                    acc -= y[m] * y[n - m];
                }
                y[n] = acc / (2.0 * y[0]);
            }
            Ok(Jet::new(y).expect("nonempty"))
        }
        Primitive::Atan => {
            // y' = u'/(1 + u^2): divide series, integrate coefficientwise.
            let w = weil_mul(u, u)?.add(&constant_jet(k, 1.0))?;
            let du = series_derivative(u);
            let mut z = vec![0.0; k.max(1)];
            let w0 = *w.coeff(0);
            for n in 0..k {
                let mut acc = du[n];
                for m in 0..n {
                    acc -= z[m] * w.coeff(n - m);
                }
                z[n] = acc / w0;
            }
            let mut y = vec![0.0; k + 1];
            y[0] = u0.atan();
            for n in 1..=k {
                y[n] = z[n - 1] / n as f64;
            }
            Ok(Jet::new(y).expect("nonempty"))
        }
    }
}

/// Evaluate an expression through jet arithmetic at a stage point.
pub fn jet_eval(
    e: &ScalarExpr,
    point: &WeilStagePoint,
    params: &Bindings,
) -> Result<Jet, StageError> {
    let k = point.order();
    match e {
        ScalarExpr::Rational(q) => Ok(constant_jet(k, crate::expr::rational_to_f64(q))),
        ScalarExpr::Pi => Ok(constant_jet(k, std::f64::consts::PI)),
        ScalarExpr::Symbol(s) => match point.coordinate_jet(s) {
            Some(jet) => Ok(jet),
            None => params
                .get(s)
                .map(|&v| constant_jet(k, v))
                .ok_or_else(|| StageError::Expr(ExprError::UnboundSymbol(s.clone()))),
        },
        ScalarExpr::Add(a, b) => Ok(jet_eval(a, point, params)?.add(&jet_eval(b, point, params)?)?),
        ScalarExpr::Mul(a, b) => {
            Ok(weil_mul(&jet_eval(a, point, params)?, &jet_eval(b, point, params)?)?)
        }
        ScalarExpr::Div(a, b) => {
            jet_div(&jet_eval(a, point, params)?, &jet_eval(b, point, params)?)
        }
        ScalarExpr::Neg(a) => Ok(jet_eval(a, point, params)?.neg()),
        ScalarExpr::Pow(a, n) => jet_powi(&jet_eval(a, point, params)?, *n),
        ScalarExpr::Apply(p, u) => jet_primitive(*p, &jet_eval(u, point, params)?),
    }
}

/// Order-k lift of a scalar: the function sending each stage point to the
/// jet image of `f`.
pub fn lift_to_weil<'a>(
    f: &'a ScalarExpr,
    order: usize,
) -> impl Fn(&WeilStagePoint, &Bindings) -> Result<Jet, StageError> + 'a {
    move |point, params| {
        if point.order() != order {
            return Err(StageError::Precondition(format!(
                "stage point order {} does not match lift order {order}",
                point.order()
            )));
        }
        jet_eval(f, point, params)
    }
}

/// The transported metric at a Weil stage: evaluates the staged bilinear form
/// by lifting the metric components and the derivation components separately
/// and combining them with jet arithmetic.
pub struct StagedMetric<'a> {
    metric: &'a Metric,
    order: usize,
}

pub fn transport_metric(metric: &Metric, order: usize) -> Result<StagedMetric<'_>, StageError> {
    if order == 0 {
        return Err(StageError::OrderZero);
    }
    Ok(StagedMetric { metric, order })
}

impl StagedMetric<'_> {
    pub fn order(&self) -> usize {
        self.order
    }

    /// ḡ(X̄, Ȳ) at a stage point: Σ_ij lift(g_ij)·lift(X^i)·lift(Y^j), with
    /// the same association order as [`Metric::pair_raw`] so the defining
    /// identity ḡ(X̄, Ȳ) = lift(g(X, Y)) holds bit-exactly.
    pub fn pair_at(
        &self,
        x: &Derivation,
        y: &Derivation,
        point: &WeilStagePoint,
        params: &Bindings,
    ) -> Result<Jet, StageError> {
        let n = self.metric.dim();
        let mut acc = constant_jet(self.order, 0.0);
        for i in 0..n {
            for j in 0..n {
                if self.metric.component(i, j).is_zero() {
                    continue;
                }
                let gij = jet_eval(self.metric.component(i, j), point, params)?;
                let xi = jet_eval(x.component(i), point, params)?;
                let yj = jet_eval(y.component(j), point, params)?;
                let term = weil_mul(&weil_mul(&gij, &xi)?, &yj)?;
                acc = acc.add(&term)?;
            }
        }
        Ok(acc)
    }

    /// The right-hand side of the defining identity: the lift of the scalar
    /// g(X, Y) built as one expression tree.
    pub fn lifted_scalar_pair(
        &self,
        x: &Derivation,
        y: &Derivation,
        point: &WeilStagePoint,
        params: &Bindings,
    ) -> Result<Jet, StageError> {
        jet_eval(&self.metric.pair_raw(x, y), point, params)
    }
}

/// A finite sample of a parameter space P (e.g. a discretized circle).
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSamples {
    pub name: String,
    pub values: Vec<f64>,
}

impl ParameterSamples {
    /// m equally spaced samples of the circle [0, 2π).
    pub fn circle(m: usize) -> ParameterSamples {
        let values = (0..m)
            .map(|j| 2.0 * std::f64::consts::PI * j as f64 / m as f64)
            .collect();
        ParameterSamples { name: "p".to_string(), values }
    }
}

/// A parametrized point φ: P -> M, stored as its per-sample coordinate
/// bindings.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametrizedPoint {
    pub label: String,
    pub samples: Vec<Bindings>,
}

/// The finite shadow of M^P: a sampled parameter domain, a family of maps
/// φ: P -> M, and the constant maps over a coordinate grid of M.
#[derive(Debug, Clone)]
pub struct ParametrizedSpace {
    chart: Chart,
    domain: ParameterSamples,
    maps: Vec<ParametrizedPoint>,
    constant_maps: Vec<(Bindings, ParametrizedPoint)>,
}

/// Build M^P data from per-coordinate loop expressions in the parameter.
/// Each map must send every sample into the chart's coordinate ranges.
pub fn parametrized_space(
    chart: &Chart,
    domain: ParameterSamples,
    loops: &[(String, Vec<ScalarExpr>)],
    grid_density: usize,
    params: &Bindings,
) -> Result<ParametrizedSpace, StageError> {
    let mut maps = Vec::new();
    for (label, coord_exprs) in loops {
        if coord_exprs.len() != chart.dim() {
            return Err(StageError::Precondition(format!(
                "map `{label}` must provide {} coordinate expressions",
                chart.dim()
            )));
        }
        let mut samples = Vec::with_capacity(domain.values.len());
        for &p in &domain.values {
            let mut binding = Bindings::new();
            binding.insert(domain.name.clone(), p);
            let mut point = Bindings::new();
            for (i, expr) in coord_exprs.iter().enumerate() {
                let value = expr.eval(&binding, params)?;
                let (lo, hi) = chart.range(i);
                if !(lo <= value && value <= hi) {
                    return Err(StageError::OutOfDomain {
                        coord: chart.name(i).to_string(),
                        value,
                    });
                }
                point.insert(chart.name(i).to_string(), value);
            }
            samples.push(point);
        }
        maps.push(ParametrizedPoint { label: label.clone(), samples });
    }
    // Constant maps over a coordinate grid: the image of M inside M^P.
    let grid = coordinate_grid(chart, grid_density);
    let constant_maps = grid
        .into_iter()
        .map(|m| {
            let point = ParametrizedPoint {
                label: format!("const@{m:?}"),
                samples: vec![m.clone(); domain.values.len()],
            };
            (m, point)
        })
        .collect();
    Ok(ParametrizedSpace { chart: chart.clone(), domain, maps, constant_maps })
}

/// Deterministic interior lattice over the chart ranges, `density` points per
/// axis.
pub fn coordinate_grid(chart: &Chart, density: usize) -> Vec<Bindings> {
    let n = chart.dim();
    let total = density.pow(n as u32);
    let mut out = Vec::with_capacity(total);
    for idx in 0..total {
        let mut point = Bindings::new();
        let mut rest = idx;
        for i in 0..n {
            let step = rest % density;
            rest /= density;
            let (lo, hi) = chart.range(i);
            let x = lo + (step as f64 + 1.0) * (hi - lo) / (density as f64 + 1.0);
            point.insert(chart.name(i).to_string(), x);
        }
        out.push(point);
    }
    out
}

impl ParametrizedSpace {
    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn domain(&self) -> &ParameterSamples {
        &self.domain
    }

    pub fn maps(&self) -> &[ParametrizedPoint] {
        &self.maps
    }

    pub fn constant_maps(&self) -> &[(Bindings, ParametrizedPoint)] {
        &self.constant_maps
    }

    /// The hat lift: f̂(φ) = f ∘ φ, sampled over the parameter domain.
    pub fn hat(
        &self,
        f: &ScalarExpr,
        map: &ParametrizedPoint,
        params: &Bindings,
    ) -> Result<Vec<f64>, StageError> {
        map.samples
            .iter()
            .map(|binding| f.eval(binding, params).map_err(StageError::from))
            .collect()
    }
}

/// Report of the stage-isomorphism check for a coordinate algebra at a Weil
/// stage: Θ^W restricted to the constructed jet-point family is injective on
/// the probe set, satisfies the homomorphism laws, and its kernel coincides
/// with the (trivial) kernel at stage R.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ThetaIsoReport {
    pub order: usize,
    pub geometric_at_r: bool,
    pub injective_on_probes: bool,
    pub homomorphism_exact: bool,
    pub kernel_equals_real_kernel: bool,
    pub isomorphic_onto_image: bool,
    pub probes_checked: usize,
    pub stage_points: usize,
}

/// Check the stage-transport theorem content for a coordinate algebra: with
/// C geometric at stage R, Θ^{W^k} is an isomorphism onto its image and the
/// jet components add no separating power (the kernels agree).
pub fn theta_iso_check(
    chart: &Chart,
    probes: &[ScalarExpr],
    order: usize,
    grid_density: usize,
    params: &Bindings,
    geometric_at_r: bool,
) -> Result<ThetaIsoReport, StageError> {
    if order == 0 {
        return Err(StageError::OrderZero);
    }
    if !geometric_at_r {
        return Err(StageError::Precondition(
            "theorem requires C geometric at stage R".into(),
        ));
    }
    let grid = coordinate_grid(chart, grid_density);
    let points = stage_point_family(chart, &grid, order);

    // Injectivity on probes: no nonzero probe has jet zero at every point.
    let mut injective = true;
    let mut kernel_match = true;
    for probe in probes {
        let simplified = crate::expr::simplify(probe)?;
        let vanishes_r = grid
            .iter()
            .map(|m| simplified.eval(m, params))
            .collect::<Result<Vec<_>, _>>()?
            .iter()
            .all(|v| v.abs() < 1e-12);
        let mut vanishes_w = true;
        for point in &points {
            let jet = jet_eval(&simplified, point, params)?;
            if jet.coeffs().iter().any(|c| c.abs() >= 1e-12) {
                vanishes_w = false;
                break;
            }
        }
        if vanishes_w != vanishes_r {
            kernel_match = false;
        }
        if vanishes_w && !simplified.is_zero() {
            injective = false;
        }
    }

    // Homomorphism laws, exact: addition and multiplication of probe pairs.
    let mut homomorphism_exact = true;
    'outer: for (a, b) in probes.iter().zip(probes.iter().rev()) {
        for point in points.iter().take(8) {
            let ja = jet_eval(a, point, params)?;
            let jb = jet_eval(b, point, params)?;
            let sum = jet_eval(&(a.clone() + b.clone()), point, params)?;
            let product = jet_eval(&(a.clone() * b.clone()), point, params)?;
            if sum != ja.add(&jb)? || product != weil_mul(&ja, &jb)? {
                homomorphism_exact = false;
                break 'outer;
            }
        }
    }

    Ok(ThetaIsoReport {
        order,
        geometric_at_r,
        injective_on_probes: injective,
        homomorphism_exact,
        kernel_equals_real_kernel: kernel_match,
        isomorphic_onto_image: injective && homomorphism_exact && kernel_match,
        probes_checked: probes.len(),
        stage_points: points.len(),
    })
}

/// The documented jet-point family over a grid: for every grid point, one
/// stage point per coordinate direction plus the all-ones direction.
pub fn stage_point_family(
    chart: &Chart,
    grid: &[Bindings],
    order: usize,
) -> Vec<WeilStagePoint> {
    let mut out = Vec::new();
    for base in grid {
        for i in 0..chart.dim() {
            let mut velocity = BTreeMap::new();
            let mut coeffs = vec![0.0; order];
            coeffs[0] = 1.0;
            velocity.insert(chart.name(i).to_string(), coeffs);
            out.push(WeilStagePoint { base: base.clone(), velocity, order });
        }
        let mut mixed = BTreeMap::new();
        for i in 0..chart.dim() {
            let mut coeffs = vec![0.0; order];
            coeffs[0] = 1.0;
            if order >= 2 {
                coeffs[1] = 0.5;
            }
            mixed.insert(chart.name(i).to_string(), coeffs);
        }
        out.push(WeilStagePoint { base: base.clone(), velocity: mixed, order });
    }
    out
}

/// Report of the hat-isomorphism check on a parametrized space.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct HatIsoReport {
    pub injective_on_constants: bool,
    pub restriction_recovers_f: bool,
    pub hat_morphism_max_gap: f64,
    pub collision: Option<(String, String)>,
    pub generators_checked: usize,
    pub grid_points: usize,
}

/// Verify that f -> f̂ is injective on the generator span restricted to the
/// constant maps, that restriction along m -> φ_m recovers f exactly, and
/// that the hat is an algebra morphism on the sampled maps.
pub fn hat_iso_check(
    space: &ParametrizedSpace,
    generators: &[ScalarExpr],
    params: &Bindings,
) -> Result<HatIsoReport, StageError> {
    // Separation: distinct grid points must be told apart by some generator.
    let constants = space.constant_maps();
    let mut injective = true;
    let mut collision = None;
    for (i, (mi, _)) in constants.iter().enumerate() {
        for (mj, _) in constants.iter().skip(i + 1) {
            let separated = generators.iter().try_fold(false, |acc, g| {
                Ok::<bool, StageError>(acc || {
                    let vi = g.eval(mi, params)?;
                    let vj = g.eval(mj, params)?;
                    (vi - vj).abs() > 1e-9
                })
            })?;
            if !separated {
                injective = false;
                collision = Some((format!("{mi:?}"), format!("{mj:?}")));
            }
        }
    }

    // Restriction law: f̂(φ_m)(p) = f(m) exactly, for every sample p.
    let mut restriction_ok = true;
    for g in generators {
        for (m, phi_m) in constants {
            let expected = g.eval(m, params)?;
            let values = space.hat(g, phi_m, params)?;
            if values.iter().any(|&v| v != expected) {
                restriction_ok = false;
            }
        }
    }

    // Morphism law on the sampled (non-constant) maps: (fg)^ = f̂ · ĝ.
    let mut max_gap: f64 = 0.0;
    for map in space.maps() {
        for f in generators {
            for g in generators {
                let fg = space.hat(&(f.clone() * g.clone()), map, params)?;
                let hat_f = space.hat(f, map, params)?;
                let hat_g = space.hat(g, map, params)?;
                for ((fg_v, f_v), g_v) in fg.iter().zip(&hat_f).zip(&hat_g) {
                    max_gap = max_gap.max((fg_v - f_v * g_v).abs());
                }
            }
        }
    }

    Ok(HatIsoReport {
        injective_on_constants: injective,
        restriction_recovers_f: restriction_ok,
        hat_morphism_max_gap: max_gap,
        collision,
        generators_checked: generators.len(),
        grid_points: constants.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn chart_x() -> Chart {
        Chart::new(&["x"]).unwrap()
    }

    fn point_1d(x: f64, v: f64) -> WeilStagePoint {
        let mut base = Bindings::new();
        base.insert("x".into(), x);
        let mut direction = Bindings::new();
        direction.insert("x".into(), v);
        WeilStagePoint::order_one(base, &direction)
    }

    #[test]
    fn square_lift_order_one() {
        // f = x², χ: x = 3, v = 1  ->  9 + 6e
        let chart = chart_x();
        let f = parse("x^2", &chart, &[]).unwrap();
        let jet = jet_eval(&f, &point_1d(3.0, 1.0), &Bindings::new()).unwrap();
        assert_eq!(jet.coeffs(), &[9.0, 6.0]);
    }

    #[test]
    fn sine_lift_order_two() {
        // f = sin(x) at x = 0, v = 1, k = 2  ->  0 + e + 0 e²
        let chart = chart_x();
        let f = parse("sin(x)", &chart, &[]).unwrap();
        let mut base = Bindings::new();
        base.insert("x".into(), 0.0);
        let mut velocity = BTreeMap::new();
        velocity.insert("x".to_string(), vec![1.0, 0.0]);
        let point = WeilStagePoint::new(base, velocity, 2).unwrap();
        let jet = jet_eval(&f, &point, &Bindings::new()).unwrap();
        assert_eq!(jet.coeffs(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn lift_is_multiplicative_bitwise() {
        let chart = Chart::new(&["x", "y"]).unwrap();
        let f = parse("x^2 + sin(y)", &chart, &[]).unwrap();
        let g = parse("exp(x)*y - 3", &chart, &[]).unwrap();
        let mut base = Bindings::new();
        base.insert("x".into(), 0.7);
        base.insert("y".into(), 1.2);
        let mut direction = Bindings::new();
        direction.insert("x".into(), 0.3);
        direction.insert("y".into(), -1.1);
        let point = WeilStagePoint::order_one(base, &direction);
        let params = Bindings::new();
        let jf = jet_eval(&f, &point, &params).unwrap();
        let jg = jet_eval(&g, &point, &params).unwrap();
        let jfg = jet_eval(&(f.clone() * g.clone()), &point, &params).unwrap();
        assert_eq!(jfg, weil_mul(&jf, &jg).unwrap());
        let jsum = jet_eval(&(f + g), &point, &params).unwrap();
        assert_eq!(jsum, jf.add(&jg).unwrap());
    }

    #[test]
    fn jet_primitives_match_derivatives() {
        // For each primitive, the e-coefficient at an order-1 point equals
        // the symbolic derivative evaluated there.
        let chart = chart_x();
        for p in Primitive::ALL {
            let f = parse(&format!("{}(x)", p.name()), &chart, &[]).unwrap();
            let x0 = 0.63;
            let jet = jet_eval(&f, &point_1d(x0, 1.0), &Bindings::new()).unwrap();
            let mut coords = Bindings::new();
            coords.insert("x".into(), x0);
            let exact = f.differentiate("x").eval(&coords, &Bindings::new()).unwrap();
            assert!(
                (jet.coeff(1) - exact).abs() < 1e-12,
                "{} jet derivative mismatch",
                p.name()
            );
        }
    }

    #[test]
    fn jet_division_by_non_unit_errors() {
        let chart = chart_x();
        let f = parse("1/x", &chart, &[]).unwrap();
        let jet = jet_eval(&f, &point_1d(0.0, 1.0), &Bindings::new());
        assert!(matches!(jet, Err(StageError::Domain(_))));
    }

    #[test]
    fn circle_loop_unit_norm() {
        let chart = Chart::with_ranges(&[
            ("x".into(), (-1.5, 1.5)),
            ("y".into(), (-1.5, 1.5)),
        ])
        .unwrap();
        let domain = ParameterSamples::circle(16);
        let p_chart = Chart::new(&["p"]).unwrap();
        let loop_exprs = vec![(
            "unit-circle".to_string(),
            vec![
                parse("cos(p)", &p_chart, &[]).unwrap(),
                parse("sin(p)", &p_chart, &[]).unwrap(),
            ],
        )];
        let space =
            parametrized_space(&chart, domain, &loop_exprs, 3, &Bindings::new()).unwrap();
        let f = parse("x^2 + y^2", &chart, &[]).unwrap();
        let values = space.hat(&f, &space.maps()[0], &Bindings::new()).unwrap();
        for v in values {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn out_of_domain_loop_rejected() {
        let chart = Chart::with_ranges(&[("x".into(), (0.0, 0.5))]).unwrap();
        let p_chart = Chart::new(&["p"]).unwrap();
        let loops = vec![("big".to_string(), vec![parse("1 + p", &p_chart, &[]).unwrap()])];
        let err = parametrized_space(
            &chart,
            ParameterSamples::circle(4),
            &loops,
            2,
            &Bindings::new(),
        )
        .unwrap_err();
        assert!(matches!(err, StageError::OutOfDomain { .. }));
    }

    #[test]
    fn constant_map_restriction_is_exact() {
        let chart = Chart::new(&["x", "y"]).unwrap();
        let space = parametrized_space(
            &chart,
            ParameterSamples::circle(8),
            &[],
            3,
            &Bindings::new(),
        )
        .unwrap();
        let generators = vec![
            parse("x", &chart, &[]).unwrap(),
            parse("y", &chart, &[]).unwrap(),
        ];
        let report = hat_iso_check(&space, &generators, &Bindings::new()).unwrap();
        assert!(report.injective_on_constants);
        assert!(report.restriction_recovers_f);
        assert!(report.hat_morphism_max_gap == 0.0);
    }

    #[test]
    fn theta_iso_on_plane() {
        let chart = Chart::new(&["x", "y"]).unwrap();
        let probes = vec![
            parse("x", &chart, &[]).unwrap(),
            parse("y", &chart, &[]).unwrap(),
            parse("x*y - 1", &chart, &[]).unwrap(),
        ];
        let report =
            theta_iso_check(&chart, &probes, 1, 4, &Bindings::new(), true).unwrap();
        assert!(report.isomorphic_onto_image);
        assert!(report.kernel_equals_real_kernel);
    }

    #[test]
    fn theta_iso_requires_geometric_precondition() {
        let chart = Chart::new(&["x"]).unwrap();
        let err = theta_iso_check(&chart, &[], 1, 4, &Bindings::new(), false).unwrap_err();
        assert!(matches!(err, StageError::Precondition(_)));
    }
}
