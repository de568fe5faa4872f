//! Independent finite-difference curvature pipeline.
//!
//! Everything here goes through `ScalarExpr::eval` only — no symbolic
//! differentiation, no simplification — so it is a genuinely independent
//! route against which the symbolic pipeline is checked. Metric derivatives
//! use second-order central differences; Christoffel derivatives use a
//! fourth-order five-point stencil, which keeps the compounded error of the
//! Riemann/Ricci values near 1e-7.

use nalgebra::DMatrix;

use crate::expr::Bindings;
use crate::lorentz::{LorentzError, Metric};

/// Step for first derivatives of metric components.
const METRIC_STEP: f64 = 5e-6;
/// Step for the five-point stencil over Christoffel values.
const CHRISTOFFEL_STEP: f64 = 1e-3;

pub struct FdPipeline<'a> {
    g: &'a Metric,
    params: Bindings,
}

impl<'a> FdPipeline<'a> {
    pub fn new(g: &'a Metric, params: Bindings) -> FdPipeline<'a> {
        FdPipeline { g, params }
    }

    fn dim(&self) -> usize {
        self.g.dim()
    }

    fn metric_at(&self, coords: &Bindings) -> Result<DMatrix<f64>, LorentzError> {
        self.g.matrix_at(coords, &self.params)
    }

    fn shifted(&self, coords: &Bindings, axis: usize, delta: f64) -> Bindings {
        let mut out = coords.clone();
        let name = self.g.chart().name(axis);
        let x = out[name];
        out.insert(name.to_string(), x + delta);
        out
    }

    /// d_k g_ij by central differences.
    fn metric_derivative(
        &self,
        coords: &Bindings,
        k: usize,
    ) -> Result<DMatrix<f64>, LorentzError> {
        let scale = coords[self.g.chart().name(k)].abs().max(1.0);
        let h = METRIC_STEP * scale;
        let plus = self.metric_at(&self.shifted(coords, k, h))?;
        let minus = self.metric_at(&self.shifted(coords, k, -h))?;
        Ok((plus - minus) / (2.0 * h))
    }

    /// Christoffel symbols at a point via the Koszul formula on
    /// finite-difference metric derivatives. Indexed [k][i][j].
    pub fn christoffel_at(&self, coords: &Bindings) -> Result<Vec<Vec<Vec<f64>>>, LorentzError> {
        let n = self.dim();
        let g = self.metric_at(coords)?;
        let g_inv = g
            .clone()
            .try_inverse()
            .ok_or_else(|| LorentzError::Degenerate("numeric inverse failed".into()))?;
        let dg: Vec<DMatrix<f64>> = (0..n)
            .map(|k| self.metric_derivative(coords, k))
            .collect::<Result<_, _>>()?;
        let mut gamma = vec![vec![vec![0.0; n]; n]; n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for l in 0..n {
                        acc += g_inv[(k, l)]
                            * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                    }
                    gamma[k][i][j] = 0.5 * acc;
                }
            }
        }
        Ok(gamma)
    }

    /// d_a Γ^k_{ij} via a fourth-order stencil over christoffel_at.
    fn christoffel_derivative(
        &self,
        coords: &Bindings,
        axis: usize,
    ) -> Result<Vec<Vec<Vec<f64>>>, LorentzError> {
        let n = self.dim();
        let scale = coords[self.g.chart().name(axis)].abs().max(1.0);
        let h = CHRISTOFFEL_STEP * scale;
        let g2 = self.christoffel_at(&self.shifted(coords, axis, 2.0 * h))?;
        let g1 = self.christoffel_at(&self.shifted(coords, axis, h))?;
        let m1 = self.christoffel_at(&self.shifted(coords, axis, -h))?;
        let m2 = self.christoffel_at(&self.shifted(coords, axis, -2.0 * h))?;
        let mut out = vec![vec![vec![0.0; n]; n]; n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    out[k][i][j] = (-g2[k][i][j] + 8.0 * g1[k][i][j] - 8.0 * m1[k][i][j]
                        + m2[k][i][j])
                        / (12.0 * h);
                }
            }
        }
        Ok(out)
    }

    /// R^k_{lij} at a point, same index convention as the symbolic pipeline.
    pub fn riemann_at(
        &self,
        coords: &Bindings,
    ) -> Result<Vec<Vec<Vec<Vec<f64>>>>, LorentzError> {
        let n = self.dim();
        let gamma = self.christoffel_at(coords)?;
        let dgamma: Vec<Vec<Vec<Vec<f64>>>> = (0..n)
            .map(|a| self.christoffel_derivative(coords, a))
            .collect::<Result<_, _>>()?;
        let mut r = vec![vec![vec![vec![0.0; n]; n]; n]; n];
        for k in 0..n {
            for l in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let mut acc = dgamma[i][k][j][l] - dgamma[j][k][i][l];
                        for m in 0..n {
                            acc += gamma[k][i][m] * gamma[m][j][l]
                                - gamma[k][j][m] * gamma[m][i][l];
                        }
                        r[k][l][i][j] = acc;
                    }
                }
            }
        }
        Ok(r)
    }

    /// Ric_ij = Σ_k R^k_{ikj} at a point.
    pub fn ricci_at(&self, coords: &Bindings) -> Result<DMatrix<f64>, LorentzError> {
        let n = self.dim();
        let r = self.riemann_at(coords)?;
        let mut ric = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += r[k][i][k][j];
                }
                ric[(i, j)] = acc;
            }
        }
        Ok(ric)
    }

    /// r = g^{ij} Ric_ij at a point.
    pub fn scalar_at(&self, coords: &Bindings) -> Result<f64, LorentzError> {
        let g = self.metric_at(coords)?;
        let g_inv = g
            .try_inverse()
            .ok_or_else(|| LorentzError::Degenerate("numeric inverse failed".into()))?;
        let ric = self.ricci_at(coords)?;
        Ok((g_inv * ric).trace())
    }

    /// Residual of Einstein form (ii), Ric - Λ g, at a point.
    pub fn cosmological_residual_at(
        &self,
        coords: &Bindings,
        lambda: f64,
    ) -> Result<DMatrix<f64>, LorentzError> {
        let ric = self.ricci_at(coords)?;
        let g = self.metric_at(coords)?;
        Ok(ric - g * lambda)
    }

    /// Residual of Einstein form (i), Ric - 1/2 r g + Λ g - 8π T, at a point.
    pub fn with_source_residual_at(
        &self,
        coords: &Bindings,
        lambda: f64,
        stress_energy: &DMatrix<f64>,
    ) -> Result<DMatrix<f64>, LorentzError> {
        let ric = self.ricci_at(coords)?;
        let g = self.metric_at(coords)?;
        let r = self.scalar_at(coords)?;
        Ok(ric - g.clone() * (0.5 * r) + g * lambda
            - stress_energy * (8.0 * std::f64::consts::PI))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Chart};
    use crate::lorentz::diagonal_metric;
    use crate::numeric::{relative_gap, Sampler, DEFAULT_SEED};

    #[test]
    fn oracle_matches_flat_space() {
        let g = crate::lorentz::minkowski(Chart::new(&["t", "x"]).unwrap()).unwrap();
        let pipeline = FdPipeline::new(&g, Bindings::new());
        let mut sampler = Sampler::new(DEFAULT_SEED);
        let coords = sampler.draw_point(g.chart());
        let ric = pipeline.ricci_at(&coords).unwrap();
        assert!(ric.amax() < 1e-6);
    }

    #[test]
    fn oracle_two_sphere_scalar() {
        let chart = Chart::with_ranges(&[
            ("θ".into(), (0.6, 2.4)),
            ("φ".into(), (0.1, 6.0)),
        ])
        .unwrap();
        let p = |s: &str| parse(s, &chart, &["a".into()]).unwrap();
        let diagonal = vec![p("a^2"), p("a^2*sin(θ)^2")];
        let g = diagonal_metric(chart, diagonal, vec!["a".into()]).unwrap();
        let mut params = Bindings::new();
        params.insert("a".into(), 1.3);
        let pipeline = FdPipeline::new(&g, params);
        let mut sampler = Sampler::new(DEFAULT_SEED);
        let coords = sampler.draw_point(g.chart());
        // r = 2/a² for the round sphere.
        let expected = 2.0 / (1.3f64 * 1.3);
        let got = pipeline.scalar_at(&coords).unwrap();
        assert!(relative_gap(got, expected) < 1e-6, "got {got}, expected {expected}");
    }
}
