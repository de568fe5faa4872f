//! Lorentz modules: free modules of derivations over a coordinate algebra,
//! carrying a symmetric nondegenerate metric. Derivations are represented in
//! the coordinate frame (components against the basis of partial
//! derivatives); the metric's musical isomorphisms and pointwise signature
//! live here too.

use num_traits::One;
use thiserror::Error;

use crate::expr::{simplify, Bindings, Chart, ExprError, ScalarExpr};
use crate::numeric::{self, Sampler, ZeroVerdict};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LorentzError {
    #[error("chart mismatch between operands")]
    ChartMismatch,
    #[error("component count {found} does not match chart dimension {expected}")]
    ComponentCount { expected: usize, found: usize },
    #[error("metric is not symmetric: g[{i}][{j}] != g[{j}][{i}]")]
    NotSymmetric { i: usize, j: usize },
    #[error("metric is degenerate: {0}")]
    Degenerate(String),
    #[error("numerically singular at sample point (|det| = {0:e})")]
    SingularAtPoint(f64),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Threshold below which a numeric determinant counts as singular.
pub const SINGULAR_DET_TOL: f64 = 1e-12;

/// A derivation X = sum_i X^i d/dx^i, acting on scalars via the Leibniz rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivation {
    chart: Chart,
    components: Vec<ScalarExpr>,
}

impl Derivation {
    pub fn new(chart: Chart, components: Vec<ScalarExpr>) -> Result<Derivation, LorentzError> {
        if components.len() != chart.dim() {
            return Err(LorentzError::ComponentCount {
                expected: chart.dim(),
                found: components.len(),
            });
        }
        Ok(Derivation { chart, components })
    }

    /// The coordinate field d/dx^i.
    pub fn coordinate(chart: Chart, i: usize) -> Derivation {
        let mut components = vec![ScalarExpr::zero(); chart.dim()];
        components[i] = ScalarExpr::one();
        Derivation { chart, components }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn components(&self) -> &[ScalarExpr] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &ScalarExpr {
        &self.components[i]
    }

    /// Apply to a scalar: X(f) = sum_i X^i df/dx^i.
    pub fn apply(&self, f: &ScalarExpr) -> ScalarExpr {
        let mut acc = ScalarExpr::zero();
        for (i, xi) in self.components.iter().enumerate() {
            acc = acc + xi.clone() * f.differentiate(self.chart.name(i));
        }
        acc
    }
}

/// Commutator of derivations: [X,Y]^k = sum_i X^i d_i Y^k - Y^i d_i X^k.
pub fn bracket(x: &Derivation, y: &Derivation) -> Result<Derivation, LorentzError> {
    if x.chart != y.chart {
        return Err(LorentzError::ChartMismatch);
    }
    let n = x.chart.dim();
    let mut components = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = ScalarExpr::zero();
        for i in 0..n {
            let name = x.chart.name(i);
            acc = acc + x.components[i].clone() * y.components[k].differentiate(name)
                - y.components[i].clone() * x.components[k].differentiate(name);
        }
        components.push(simplify(&acc)?);
    }
    Ok(Derivation { chart: x.chart.clone(), components })
}

/// A covector in the coordinate frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Covector {
    chart: Chart,
    components: Vec<ScalarExpr>,
}

impl Covector {
    pub fn new(chart: Chart, components: Vec<ScalarExpr>) -> Result<Covector, LorentzError> {
        if components.len() != chart.dim() {
            return Err(LorentzError::ComponentCount {
                expected: chart.dim(),
                found: components.len(),
            });
        }
        Ok(Covector { chart, components })
    }

    pub fn components(&self) -> &[ScalarExpr] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &ScalarExpr {
        &self.components[i]
    }
}

/// Symbolic determinant by Laplace expansion; fine for the rank <= 4 metrics
/// handled here.
pub(crate) fn sym_det(m: &[Vec<ScalarExpr>]) -> Result<ScalarExpr, ExprError> {
    let n = m.len();
    if n == 1 {
        return simplify(&m[0][0]);
    }
    let mut acc = ScalarExpr::zero();
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<ScalarExpr>> = (1..n)
            .map(|i| {
                (0..n)
                    .filter(|&c| c != j)
                    .map(|c| m[i][c].clone())
                    .collect()
            })
            .collect();
        let cofactor = m[0][j].clone() * sym_det(&minor)?;
        acc = if j % 2 == 0 { acc + cofactor } else { acc - cofactor };
    }
    simplify(&acc)
}

/// Symbolic inverse via adjugate over determinant.
pub(crate) fn sym_inverse(
    m: &[Vec<ScalarExpr>],
    det: &ScalarExpr,
) -> Result<Vec<Vec<ScalarExpr>>, ExprError> {
    let n = m.len();
    let mut inv = vec![vec![ScalarExpr::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<ScalarExpr>> = (0..n)
                .filter(|&r| r != j)
                .map(|r| {
                    (0..n)
                        .filter(|&c| c != i)
                        .map(|c| m[r][c].clone())
                        .collect()
                })
                .collect();
            let cof = if minor.is_empty() {
                ScalarExpr::one()
            } else {
                sym_det(&minor)?
            };
            let signed = if (i + j) % 2 == 0 { cof } else { -cof };
            inv[i][j] = simplify(&ScalarExpr::Div(Box::new(signed), Box::new(det.clone())))?;
        }
    }
    Ok(inv)
}

/// Symmetric nondegenerate metric in the coordinate frame, convention
/// (+,-,...,-) for the Lorentz case with the first coordinate timelike.
#[derive(Debug, Clone)]
pub struct Metric {
    chart: Chart,
    components: Vec<Vec<ScalarExpr>>,
    inverse: Vec<Vec<ScalarExpr>>,
    det: ScalarExpr,
    params: Vec<String>,
}

impl Metric {
    /// Validates symmetry structurally (after simplify) and symbolic
    /// nondegeneracy (determinant not identically zero). Pointwise
    /// nondegeneracy and the Lorentz flag are sample checks, see
    /// [`Metric::signature_at`] and [`Metric::lorentz_verdict`].
    pub fn new(
        chart: Chart,
        components: Vec<Vec<ScalarExpr>>,
        params: Vec<String>,
    ) -> Result<Metric, LorentzError> {
        let n = chart.dim();
        if components.len() != n || components.iter().any(|row| row.len() != n) {
            return Err(LorentzError::ComponentCount {
                expected: n,
                found: components.len(),
            });
        }
        let mut simplified = vec![vec![ScalarExpr::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                simplified[i][j] = simplify(&components[i][j])?;
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let gap = simplify(&(simplified[i][j].clone() - simplified[j][i].clone()))?;
                if !gap.is_zero() {
                    return Err(LorentzError::NotSymmetric { i, j });
                }
            }
        }
        let det = sym_det(&simplified)?;
        if det.is_zero() {
            return Err(LorentzError::Degenerate("determinant is identically zero".into()));
        }
        let inverse = sym_inverse(&simplified, &det)?;
        Ok(Metric { chart, components: simplified, inverse, det, params })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn component(&self, i: usize, j: usize) -> &ScalarExpr {
        &self.components[i][j]
    }

    pub fn inverse_component(&self, i: usize, j: usize) -> &ScalarExpr {
        &self.inverse[i][j]
    }

    pub fn det(&self) -> &ScalarExpr {
        &self.det
    }

    /// g(X, Y) as a scalar expression (simplified).
    pub fn pair(&self, x: &Derivation, y: &Derivation) -> Result<ScalarExpr, LorentzError> {
        if x.chart != self.chart || y.chart != self.chart {
            return Err(LorentzError::ChartMismatch);
        }
        Ok(simplify(&self.pair_raw(x, y))?)
    }

    /// g(X, Y) as a raw tree with a fixed summation shape; stage transport
    /// relies on this shape for bit-exact comparisons.
    pub fn pair_raw(&self, x: &Derivation, y: &Derivation) -> ScalarExpr {
        let n = self.dim();
        let mut acc = ScalarExpr::zero();
        for i in 0..n {
            for j in 0..n {
                if self.components[i][j].is_zero() {
                    continue;
                }
                acc = acc
                    + self.components[i][j].clone()
                        * x.components[i].clone()
                        * y.components[j].clone();
            }
        }
        acc
    }

    /// Numeric metric matrix at a point.
    pub fn matrix_at(
        &self,
        coords: &Bindings,
        params: &Bindings,
    ) -> Result<nalgebra::DMatrix<f64>, LorentzError> {
        let n = self.dim();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.components[i][j].eval(coords, params)?;
            }
        }
        Ok(m)
    }

    /// Signs of the eigenvalues of g at a point, sorted descending.
    pub fn signature_at(
        &self,
        coords: &Bindings,
        params: &Bindings,
    ) -> Result<Vec<i8>, LorentzError> {
        let m = self.matrix_at(coords, params)?;
        if m.determinant().abs() < SINGULAR_DET_TOL {
            return Err(LorentzError::SingularAtPoint(m.determinant().abs()));
        }
        let eigen = m.symmetric_eigen();
        let mut signs: Vec<i8> = eigen
            .eigenvalues
            .iter()
            .map(|&v| if v > 0.0 { 1 } else { -1 })
            .collect();
        signs.sort_unstable_by(|a, b| b.cmp(a));
        Ok(signs)
    }

    /// Check the Lorentz signature (+,-,...,-) at `samples` random points.
    pub fn lorentz_verdict(
        &self,
        sampler: &mut Sampler,
        samples: usize,
    ) -> Result<bool, LorentzError> {
        let mut expected = vec![-1i8; self.dim()];
        expected[0] = 1;
        for _ in 0..samples {
            let coords = sampler.draw_point(&self.chart);
            let params = sampler.draw_params();
            if self.signature_at(&coords, &params)? != expected {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Nondegeneracy at sample points: |det g| stays above the singular
    /// threshold everywhere sampled.
    pub fn nondegenerate_verdict(
        &self,
        sampler: &mut Sampler,
        samples: usize,
    ) -> Result<bool, LorentzError> {
        for _ in 0..samples {
            let coords = sampler.draw_point(&self.chart);
            let params = sampler.draw_params();
            let d = self.det.eval(&coords, &params)?;
            if d.abs() < SINGULAR_DET_TOL {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Musical flat: Psi_g(X) = iota_X g, components omega_j = sum_i g_ij X^i.
pub fn flat(g: &Metric, x: &Derivation) -> Result<Covector, LorentzError> {
    if x.chart != *g.chart() {
        return Err(LorentzError::ChartMismatch);
    }
    let n = g.dim();
    let mut components = Vec::with_capacity(n);
    for j in 0..n {
        let mut acc = ScalarExpr::zero();
        for i in 0..n {
            acc = acc + g.component(i, j).clone() * x.components[i].clone();
        }
        components.push(simplify(&acc)?);
    }
    Ok(Covector { chart: x.chart.clone(), components })
}

/// Musical sharp: the inverse of flat, X^i = sum_j g^{ij} omega_j.
pub fn sharp(g: &Metric, omega: &Covector) -> Result<Derivation, LorentzError> {
    if omega.chart != *g.chart() {
        return Err(LorentzError::ChartMismatch);
    }
    let n = g.dim();
    let mut components = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = ScalarExpr::zero();
        for j in 0..n {
            acc = acc + g.inverse_component(i, j).clone() * omega.components[j].clone();
        }
        components.push(simplify(&acc)?);
    }
    Ok(Derivation { chart: omega.chart.clone(), components })
}

/// Residuals of the Lorentz-module morphism condition
/// g'(F(X), F(Y)) = g(X, Y) for the module map given componentwise by the
/// matrix F (columns index the source frame). One verdict per (i, j).
pub fn lorentz_morphism_verdicts(
    g: &Metric,
    g_prime: &Metric,
    f_matrix: &[Vec<ScalarExpr>],
    sampler: &mut Sampler,
    samples: usize,
    tol: f64,
) -> Result<Vec<ZeroVerdict>, LorentzError> {
    let n = g.dim();
    if g_prime.dim() != n || f_matrix.len() != n || f_matrix.iter().any(|r| r.len() != n) {
        return Err(LorentzError::ComponentCount { expected: n, found: f_matrix.len() });
    }
    let mut verdicts = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            // sum_{k,l} g'_{kl} F^k_i F^l_j - g_ij
            let mut acc = ScalarExpr::zero();
            for k in 0..n {
                for l in 0..n {
                    acc = acc
                        + g_prime.component(k, l).clone()
                            * f_matrix[k][i].clone()
                            * f_matrix[l][j].clone();
                }
            }
            let residual = acc - g.component(i, j).clone();
            verdicts.push(numeric::zero_verdict(
                &residual,
                g.chart(),
                sampler,
                samples,
                tol,
            )?);
        }
    }
    Ok(verdicts)
}

/// The identity module map, for the trivial isometry check.
pub fn identity_map(n: usize) -> Vec<Vec<ScalarExpr>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { ScalarExpr::one() } else { ScalarExpr::zero() })
                .collect()
        })
        .collect()
}

/// Convenience constructor: diagonal metric from expressions.
pub fn diagonal_metric(
    chart: Chart,
    diagonal: Vec<ScalarExpr>,
    params: Vec<String>,
) -> Result<Metric, LorentzError> {
    let n = chart.dim();
    if diagonal.len() != n {
        return Err(LorentzError::ComponentCount { expected: n, found: diagonal.len() });
    }
    let mut components = vec![vec![ScalarExpr::zero(); n]; n];
    for (i, d) in diagonal.into_iter().enumerate() {
        components[i][i] = d;
    }
    Metric::new(chart, components, params)
}

/// Minkowski metric diag(1, -1, ..., -1) on the given chart.
pub fn minkowski(chart: Chart) -> Result<Metric, LorentzError> {
    let n = chart.dim();
    let mut diagonal = vec![-ScalarExpr::one(); n];
    diagonal[0] = ScalarExpr::Rational(One::one());
    diagonal_metric(chart, diagonal, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::numeric::DEFAULT_SEED;

    fn mink4() -> Metric {
        minkowski(Chart::new(&["t", "x", "y", "z"]).unwrap()).unwrap()
    }

    #[test]
    fn coordinate_fields_commute() {
        let chart = Chart::new(&["t", "r"]).unwrap();
        let dt = Derivation::coordinate(chart.clone(), 0);
        let dr = Derivation::coordinate(chart, 1);
        let b = bracket(&dr, &dt).unwrap();
        assert!(b.components().iter().all(ScalarExpr::is_zero));
    }

    #[test]
    fn bracket_euler_field() {
        // [x d/dx, d/dx] = -d/dx
        let chart = Chart::new(&["x"]).unwrap();
        let x_dx = Derivation::new(chart.clone(), vec![parse("x", &chart, &[]).unwrap()]).unwrap();
        let dx = Derivation::coordinate(chart.clone(), 0);
        let b = bracket(&x_dx, &dx).unwrap();
        assert_eq!(b.components()[0], simplify(&parse("-1", &chart, &[]).unwrap()).unwrap());
    }

    #[test]
    fn flat_on_minkowski() {
        let g = mink4();
        let dt = Derivation::coordinate(g.chart().clone(), 0);
        let omega = flat(&g, &dt).unwrap();
        let expected = [1i64, 0, 0, 0];
        for (c, e) in omega.components().iter().zip(expected) {
            assert_eq!(c, &ScalarExpr::int(e));
        }
        let dx = Derivation::coordinate(g.chart().clone(), 1);
        let omega = flat(&g, &dx).unwrap();
        assert_eq!(omega.components()[1], ScalarExpr::int(-1));
    }

    #[test]
    fn sharp_inverts_flat_on_minkowski() {
        let g = mink4();
        let omega = Covector::new(
            g.chart().clone(),
            vec![
                ScalarExpr::one(),
                ScalarExpr::zero(),
                ScalarExpr::zero(),
                ScalarExpr::zero(),
            ],
        )
        .unwrap();
        let x = sharp(&g, &omega).unwrap();
        assert_eq!(x.components()[0], ScalarExpr::one());
        assert!(x.components()[1..].iter().all(ScalarExpr::is_zero));
    }

    #[test]
    fn degenerate_metric_rejected() {
        let chart = Chart::new(&["t", "x"]).unwrap();
        let err = diagonal_metric(
            chart,
            vec![ScalarExpr::one(), ScalarExpr::zero()],
            Vec::new(),
        )
        .unwrap_err();
        assert!(matches!(err, LorentzError::Degenerate(_)));
    }

    #[test]
    fn asymmetric_metric_rejected() {
        let chart = Chart::new(&["t", "x"]).unwrap();
        let one = ScalarExpr::one;
        let components = vec![vec![one(), one()], vec![ScalarExpr::zero(), -one()]];
        let err = Metric::new(chart, components, Vec::new()).unwrap_err();
        assert!(matches!(err, LorentzError::NotSymmetric { .. }));
    }

    #[test]
    fn minkowski_signature() {
        let g = mink4();
        let mut sampler = Sampler::new(DEFAULT_SEED);
        let coords = sampler.draw_point(g.chart());
        let signs = g.signature_at(&coords, &Bindings::new()).unwrap();
        assert_eq!(signs, vec![1, -1, -1, -1]);
        assert!(g.lorentz_verdict(&mut sampler, 8).unwrap());
    }

    #[test]
    fn euclidean_signature_not_lorentz() {
        let chart = Chart::new(&["x", "y"]).unwrap();
        let g = diagonal_metric(chart, vec![ScalarExpr::one(), ScalarExpr::one()], Vec::new())
            .unwrap();
        let mut sampler = Sampler::new(DEFAULT_SEED);
        let coords = sampler.draw_point(g.chart());
        assert_eq!(g.signature_at(&coords, &Bindings::new()).unwrap(), vec![1, 1]);
        assert!(!g.lorentz_verdict(&mut sampler, 4).unwrap());
    }

    #[test]
    fn identity_is_isometry() {
        let g = mink4();
        let mut sampler = Sampler::new(DEFAULT_SEED);
        let verdicts =
            lorentz_morphism_verdicts(&g, &g, &identity_map(4), &mut sampler, 10, 1e-9).unwrap();
        assert!(verdicts.iter().all(ZeroVerdict::is_zero));
    }

    #[test]
    fn metric_is_symmetric_bilinear_form() {
        let g = mink4();
        let chart = g.chart().clone();
        let p = |s: &str| parse(s, &chart, &[]).unwrap();
        let x = Derivation::new(chart.clone(), vec![p("t"), p("x*y"), p("1"), p("z^2")]).unwrap();
        let y = Derivation::new(chart.clone(), vec![p("y"), p("t + x"), p("z"), p("2")]).unwrap();
        let gap = simplify(&(g.pair(&x, &y).unwrap() - g.pair(&y, &x).unwrap())).unwrap();
        assert!(gap.is_zero());
    }
}
