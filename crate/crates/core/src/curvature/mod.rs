//! Curvature pipeline: the Levi-Civita connection derived from its two
//! defining axioms (torsion freedom and metric compatibility), the curvature
//! tensor, Ricci, scalar curvature through the musical-isomorphism path, and
//! Einstein-equation verification.
//!
//! Index convention (the defining formulas are index-free; this pins one
//! consistent componentization):
//!
//! ```text
//! R^k_{l i j} = d_i Γ^k_{j l} - d_j Γ^k_{i l} + Γ^k_{i m} Γ^m_{j l} - Γ^k_{j m} Γ^m_{i l}
//! Ric_{i j}   = Σ_k R^k_{i k j}        (trace of U -> R(X, U) Y)
//! ```
//!
//! With this convention the round 2-sphere of radius a has `Ric = (1/a²) g`
//! and the de Sitter static patch has `Ric = (3/α²) g`. Units are G = c = 1.

pub mod oracle;

use thiserror::Error;

use crate::expr::{simplify, Bindings, Chart, ExprError, ScalarExpr};
use crate::lorentz::{sharp, Covector, Derivation, LorentzError, Metric};
use crate::numeric::{eval_at_sample, Sampler, ZeroVerdict};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CurvatureError {
    #[error(transparent)]
    Lorentz(#[from] LorentzError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("connection axiom violated: {0}")]
    AxiomViolation(String),
    #[error("tensor shape mismatch: expected {expected}x{expected}")]
    ShapeMismatch { expected: usize },
}

/// Christoffel symbols Γ^k_{ij} of a Levi-Civita connection, symmetric in
/// (i, j).
#[derive(Debug, Clone)]
pub struct Connection {
    chart: Chart,
    christoffel: Vec<Vec<Vec<ScalarExpr>>>,
}

impl Connection {
    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn christoffel(&self, k: usize, i: usize, j: usize) -> &ScalarExpr {
        &self.christoffel[k][i][j]
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// Covariant derivative of a derivation along a coordinate direction:
    /// (∇_i Y)^k = d_i Y^k + Γ^k_{im} Y^m.
    pub fn covariant_coordinate_derivative(
        &self,
        i: usize,
        y: &Derivation,
    ) -> Result<Derivation, CurvatureError> {
        let n = self.dim();
        let mut components = Vec::with_capacity(n);
        for k in 0..n {
            let mut acc = y.component(k).differentiate(self.chart.name(i));
            for m in 0..n {
                acc = acc + self.christoffel[k][i][m].clone() * y.component(m).clone();
            }
            components.push(simplify(&acc)?);
        }
        Ok(Derivation::new(self.chart.clone(), components).expect("dimension matches"))
    }
}

/// Solve the two connection axioms for the unique Levi-Civita connection:
/// torsion freedom plus metric compatibility collapse (Koszul elimination) to
///
/// ```text
/// Γ^k_{ij} = 1/2 Σ_l g^{kl} (d_i g_{jl} + d_j g_{il} - d_l g_{ij})
/// ```
///
/// Both axioms are re-verified symbolically before the connection is
/// returned.
pub fn levi_civita(g: &Metric) -> Result<Connection, CurvatureError> {
    let n = g.dim();
    let chart = g.chart().clone();
    let mut christoffel = vec![vec![vec![ScalarExpr::zero(); n]; n]; n];
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut acc = ScalarExpr::zero();
                for l in 0..n {
                    if g.inverse_component(k, l).is_zero() {
                        continue;
                    }
                    let term = g.component(j, l).differentiate(chart.name(i))
                        + g.component(i, l).differentiate(chart.name(j))
                        - g.component(i, j).differentiate(chart.name(l));
                    acc = acc + g.inverse_component(k, l).clone() * term;
                }
                let gamma = simplify(&(ScalarExpr::rational(1, 2) * acc))?;
                christoffel[k][i][j] = gamma.clone();
                christoffel[k][j][i] = gamma;
            }
        }
    }
    let conn = Connection { chart, christoffel };
    let axioms = axiom_check(g, &conn)?;
    if !axioms.torsion_free {
        return Err(CurvatureError::AxiomViolation("torsion residual nonzero".into()));
    }
    if !axioms.metric_compatible {
        return Err(CurvatureError::AxiomViolation(
            "metric compatibility residual nonzero".into(),
        ));
    }
    Ok(conn)
}

/// Symbolic re-verification of the two Levi-Civita axioms.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AxiomReport {
    pub torsion_free: bool,
    pub metric_compatible: bool,
}

pub fn axiom_check(g: &Metric, conn: &Connection) -> Result<AxiomReport, CurvatureError> {
    let n = g.dim();
    let chart = g.chart();
    let mut torsion_free = true;
    for k in 0..n {
        for i in 0..n {
            for j in (i + 1)..n {
                let gap = simplify(
                    &(conn.christoffel[k][i][j].clone() - conn.christoffel[k][j][i].clone()),
                )?;
                if !gap.is_zero() {
                    torsion_free = false;
                }
            }
        }
    }
    // d_k g_ij - Γ^l_{ki} g_lj - Γ^l_{kj} g_il = 0
    let mut metric_compatible = true;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut residual = g.component(i, j).differentiate(chart.name(k));
                for l in 0..n {
                    residual = residual
                        - conn.christoffel[l][k][i].clone() * g.component(l, j).clone()
                        - conn.christoffel[l][k][j].clone() * g.component(i, l).clone();
                }
                if !simplify(&residual)?.is_zero() {
                    metric_compatible = false;
                }
            }
        }
    }
    Ok(AxiomReport { torsion_free, metric_compatible })
}

/// Curvature tensor components R^k_{lij}; see the module docs for the index
/// convention.
#[derive(Debug, Clone)]
pub struct RiemannTensor {
    chart: Chart,
    components: Vec<Vec<Vec<Vec<ScalarExpr>>>>,
}

impl RiemannTensor {
    pub fn component(&self, k: usize, l: usize, i: usize, j: usize) -> &ScalarExpr {
        &self.components[k][l][i][j]
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn is_flat(&self) -> bool {
        self.components
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .all(ScalarExpr::is_zero)
    }

    /// R^k_{lij} + R^k_{lji} = 0, checked symbolically.
    pub fn antisymmetry_ok(&self) -> Result<bool, CurvatureError> {
        let n = self.dim();
        for k in 0..n {
            for l in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let gap = simplify(
                            &(self.components[k][l][i][j].clone()
                                + self.components[k][l][j][i].clone()),
                        )?;
                        if !gap.is_zero() {
                            return Ok(false);
                        }
                    }
                }
            }
        }
        Ok(true)
    }

    /// First Bianchi identity R^k_{lij} + R^k_{ijl} + R^k_{jli} = 0.
    pub fn first_bianchi_ok(&self) -> Result<bool, CurvatureError> {
        let n = self.dim();
        for k in 0..n {
            for l in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let cyclic = self.components[k][l][i][j].clone()
                            + self.components[k][i][j][l].clone()
                            + self.components[k][j][l][i].clone();
                        if !simplify(&cyclic)?.is_zero() {
                            return Ok(false);
                        }
                    }
                }
            }
        }
        Ok(true)
    }
}

/// All components are computed independently from the formula (no symmetry
/// shortcuts), so the antisymmetry assertion is a real check on the algebra.
pub fn riemann(g: &Metric, conn: &Connection) -> Result<RiemannTensor, CurvatureError> {
    let n = g.dim();
    let chart = g.chart().clone();
    let mut components = vec![vec![vec![vec![ScalarExpr::zero(); n]; n]; n]; n];
    for k in 0..n {
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = conn.christoffel[k][j][l].differentiate(chart.name(i))
                        - conn.christoffel[k][i][l].differentiate(chart.name(j));
                    for m in 0..n {
                        acc = acc
                            + conn.christoffel[k][i][m].clone()
                                * conn.christoffel[m][j][l].clone()
                            - conn.christoffel[k][j][m].clone()
                                * conn.christoffel[m][i][l].clone();
                    }
                    components[k][l][i][j] = simplify(&acc)?;
                }
            }
        }
    }
    let tensor = RiemannTensor { chart, components };
    if !tensor.antisymmetry_ok()? {
        return Err(CurvatureError::AxiomViolation(
            "curvature tensor not antisymmetric in its last index pair".into(),
        ));
    }
    Ok(tensor)
}

/// Ricci tensor Ric_ij = Σ_k R^k_{ikj}, with symmetry asserted.
#[derive(Debug, Clone)]
pub struct RicciTensor {
    chart: Chart,
    components: Vec<Vec<ScalarExpr>>,
}

impl RicciTensor {
    pub fn component(&self, i: usize, j: usize) -> &ScalarExpr {
        &self.components[i][j]
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().flatten().all(ScalarExpr::is_zero)
    }

    /// ι_X Ric for X = d/dx^j: the covector Ric(d_j, ·).
    pub fn contract_coordinate(&self, j: usize) -> Covector {
        Covector::new(self.chart.clone(), self.components[j].clone()).expect("square tensor")
    }
}

pub fn ricci(riemann: &RiemannTensor) -> Result<RicciTensor, CurvatureError> {
    let n = riemann.dim();
    let mut components = vec![vec![ScalarExpr::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = ScalarExpr::zero();
            for k in 0..n {
                acc = acc + riemann.components[k][i][k][j].clone();
            }
            components[i][j] = simplify(&acc)?;
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = simplify(&(components[i][j].clone() - components[j][i].clone()))?;
            if !gap.is_zero() {
                return Err(CurvatureError::AxiomViolation("Ricci tensor not symmetric".into()));
            }
        }
    }
    Ok(RicciTensor { chart: riemann.chart.clone(), components })
}

/// The endomorphism X -> sharp(ι_X Ric), evaluated on the coordinate frame.
pub fn ricci_endomorphism(
    ric: &RicciTensor,
    g: &Metric,
) -> Result<Vec<Derivation>, CurvatureError> {
    let n = ric.dim();
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        out.push(sharp(g, &ric.contract_coordinate(j))?);
    }
    Ok(out)
}

/// Scalar curvature r = trace of the Ricci endomorphism. Deliberately routed
/// through flat/sharp rather than a direct double contraction; the direct
/// contraction serves as an independent oracle in the test suite.
pub fn scalar_curvature(ric: &RicciTensor, g: &Metric) -> Result<ScalarExpr, CurvatureError> {
    let endo = ricci_endomorphism(ric, g)?;
    let mut acc = ScalarExpr::zero();
    for (j, image) in endo.iter().enumerate() {
        acc = acc + image.component(j).clone();
    }
    Ok(simplify(&acc)?)
}

/// Residual of g(R(X), Y) - Ric(X, Y) for the trace-path identity.
pub fn trace_path_residual(
    ric: &RicciTensor,
    g: &Metric,
    x: &Derivation,
    y: &Derivation,
) -> Result<ScalarExpr, CurvatureError> {
    // R(X) = sharp(iota_X Ric) with iota_X Ric = (sum_i X^i Ric_i.)
    let n = g.dim();
    let mut cov = Vec::with_capacity(n);
    for l in 0..n {
        let mut acc = ScalarExpr::zero();
        for i in 0..n {
            acc = acc + x.component(i).clone() * ric.component(i, l).clone();
        }
        cov.push(simplify(&acc)?);
    }
    let rx = sharp(g, &Covector::new(g.chart().clone(), cov)?)?;
    let lhs = g.pair(&rx, y)?;
    let mut ric_xy = ScalarExpr::zero();
    for i in 0..n {
        for j in 0..n {
            ric_xy = ric_xy
                + ric.component(i, j).clone() * x.component(i).clone() * y.component(j).clone();
        }
    }
    Ok(simplify(&(lhs - ric_xy))?)
}

/// Full pipeline output for one metric.
#[derive(Debug, Clone)]
pub struct CurvatureData {
    pub connection: Connection,
    pub riemann: RiemannTensor,
    pub ricci: RicciTensor,
    pub scalar: ScalarExpr,
}

pub fn curvature_pipeline(g: &Metric) -> Result<CurvatureData, CurvatureError> {
    let connection = levi_civita(g)?;
    let riemann_tensor = riemann(g, &connection)?;
    let ricci_tensor = ricci(&riemann_tensor)?;
    let scalar = scalar_curvature(&ricci_tensor, g)?;
    Ok(CurvatureData { connection, riemann: riemann_tensor, ricci: ricci_tensor, scalar })
}

/// Which of the two Einstein-equation forms to verify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum EinsteinForm {
    /// (i) Ric - 1/2 r g + Λ g = 8π T
    WithSource,
    /// (ii) Ric = Λ g
    Cosmological,
}

#[derive(Debug, Clone)]
pub struct EinsteinVerdict {
    pub form: EinsteinForm,
    pub verdict: ZeroVerdict,
    /// Simplified residual components (raw when `numeric_only`).
    pub residuals: Vec<Vec<ScalarExpr>>,
}

/// Verify Einstein's equations for `g`. `lambda` is the cosmological
/// constant as an expression over the metric parameters; `stress_energy` is
/// an optional matrix of lower-index T components (zero when absent). 8π is
/// kept literal, with pi symbolic.
#[allow(clippy::too_many_arguments)]
pub fn einstein_check(
    g: &Metric,
    lambda: &ScalarExpr,
    stress_energy: Option<&Vec<Vec<ScalarExpr>>>,
    form: EinsteinForm,
    sampler: &mut Sampler,
    samples: usize,
    tol: f64,
    numeric_only: bool,
) -> Result<EinsteinVerdict, CurvatureError> {
    let n = g.dim();
    if let Some(t) = stress_energy {
        if t.len() != n || t.iter().any(|row| row.len() != n) {
            return Err(CurvatureError::ShapeMismatch { expected: n });
        }
    }
    let data = curvature_pipeline(g)?;
    let mut residuals = vec![vec![ScalarExpr::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let ric = data.ricci.component(i, j).clone();
            let gij = g.component(i, j).clone();
            let raw = match form {
                EinsteinForm::WithSource => {
                    let mut r = ric - ScalarExpr::rational(1, 2) * data.scalar.clone() * gij.clone()
                        + lambda.clone() * gij;
                    if let Some(t) = stress_energy {
                        r = r - ScalarExpr::int(8) * ScalarExpr::Pi * t[i][j].clone();
                    }
                    r
                }
                EinsteinForm::Cosmological => ric - lambda.clone() * gij,
            };
            residuals[i][j] = if numeric_only { raw } else { simplify(&raw)? };
        }
    }

    if !numeric_only && residuals.iter().flatten().all(ScalarExpr::is_zero) {
        return Ok(EinsteinVerdict { form, verdict: ZeroVerdict::SymbolicallyZero, residuals });
    }

    let mut max_residual: f64 = 0.0;
    for _ in 0..samples {
        for row in &residuals {
            for r in row {
                if r.is_zero() {
                    continue;
                }
                let (coords, params, value) = eval_at_sample(r, g.chart(), sampler)?;
                if value.abs() > tol {
                    let mut witness = coords;
                    witness.extend(params);
                    return Ok(EinsteinVerdict {
                        form,
                        verdict: ZeroVerdict::Nonzero { witness, value },
                        residuals,
                    });
                }
                max_residual = max_residual.max(value.abs());
            }
        }
    }
    Ok(EinsteinVerdict {
        form,
        verdict: ZeroVerdict::NumericallyZero { tol, samples, max_residual },
        residuals,
    })
}

/// Zero stress-energy tensor of the right shape.
pub fn zero_stress_energy(n: usize) -> Vec<Vec<ScalarExpr>> {
    vec![vec![ScalarExpr::zero(); n]; n]
}

/// Evaluate a stress-energy component matrix at a point (oracle support).
pub fn eval_tensor_at(
    t: &[Vec<ScalarExpr>],
    coords: &Bindings,
    params: &Bindings,
) -> Result<Vec<Vec<f64>>, ExprError> {
    t.iter()
        .map(|row| row.iter().map(|e| e.eval(coords, params)).collect())
        .collect()
}
