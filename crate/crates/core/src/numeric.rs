//! Deterministic numeric support: seeded sample-point generation, the
//! symbolic/numeric zero verdict, and central finite differences.
//!
//! All randomness flows through [`Sampler`], a ChaCha8 stream with an explicit
//! seed, so every report is reproducible run to run.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::expr::{Bindings, Chart, ExprError, ScalarExpr};

/// Default seed used across the workbench.
pub const DEFAULT_SEED: u64 = 0xE1A5;
/// Absolute tolerance for the numeric-zero fallback verdict.
pub const NUMERIC_ZERO_TOL: f64 = 1e-9;
/// Relative tolerance for finite-difference agreement checks.
pub const FD_REL_TOL: f64 = 1e-6;

/// Seeded point generator over a chart plus parameter ranges.
#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
    param_ranges: BTreeMap<String, (f64, f64)>,
    param_values: Bindings,
}

impl Sampler {
    pub fn new(seed: u64) -> Sampler {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            param_ranges: BTreeMap::new(),
            param_values: Bindings::new(),
        }
    }

    /// Fix a parameter to a concrete value for every drawn point.
    pub fn fix_param(&mut self, name: impl Into<String>, value: f64) {
        self.param_values.insert(name.into(), value);
    }

    /// Let a parameter vary uniformly in a range.
    pub fn range_param(&mut self, name: impl Into<String>, lo: f64, hi: f64) {
        self.param_ranges.insert(name.into(), (lo, hi));
    }

    pub fn params(&self) -> &Bindings {
        &self.param_values
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    /// Draw a coordinate binding uniformly from the chart's ranges.
    pub fn draw_point(&mut self, chart: &Chart) -> Bindings {
        let mut out = Bindings::new();
        for c in chart.coordinates() {
            out.insert(c.name.clone(), self.rng.gen_range(c.range.0..c.range.1));
        }
        out
    }

    /// Draw parameter values: ranged parameters are sampled, fixed ones copied.
    pub fn draw_params(&mut self) -> Bindings {
        let mut out = self.param_values.clone();
        let ranges = self.param_ranges.clone();
        for (name, (lo, hi)) in ranges {
            out.insert(name, self.rng.gen_range(lo..hi));
        }
        out
    }
}

/// Outcome of a zero-equivalence check. The symbolic and numeric verdicts are
/// deliberately distinct: "numerically zero" is a sampled statement at a
/// recorded tolerance, not a proof.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum ZeroVerdict {
    SymbolicallyZero,
    NumericallyZero { tol: f64, samples: usize, max_residual: f64 },
    Nonzero { witness: Bindings, value: f64 },
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        !matches!(self, ZeroVerdict::Nonzero { .. })
    }

    pub fn max_residual(&self) -> f64 {
        match self {
            ZeroVerdict::SymbolicallyZero => 0.0,
            ZeroVerdict::NumericallyZero { max_residual, .. } => *max_residual,
            ZeroVerdict::Nonzero { value, .. } => value.abs(),
        }
    }
}

/// Decide whether `e` vanishes: first symbolically via [`crate::expr::simplify`],
/// then by sampling `samples` points. Points where evaluation hits a domain
/// error (a pole of the expression) are redrawn a bounded number of times.
pub fn zero_verdict(
    e: &ScalarExpr,
    chart: &Chart,
    sampler: &mut Sampler,
    samples: usize,
    tol: f64,
) -> Result<ZeroVerdict, ExprError> {
    let simplified = crate::expr::simplify(e)?;
    if simplified.is_zero() {
        return Ok(ZeroVerdict::SymbolicallyZero);
    }
    let mut max_residual: f64 = 0.0;
    for _ in 0..samples {
        let (coords, params, value) = eval_at_sample(&simplified, chart, sampler)?;
        if value.abs() > tol {
            let mut witness = coords;
            witness.extend(params);
            return Ok(ZeroVerdict::Nonzero { witness, value });
        }
        max_residual = max_residual.max(value.abs());
    }
    Ok(ZeroVerdict::NumericallyZero { tol, samples, max_residual })
}

/// Evaluate at a random sample point, redrawing on domain errors.
pub fn eval_at_sample(
    e: &ScalarExpr,
    chart: &Chart,
    sampler: &mut Sampler,
) -> Result<(Bindings, Bindings, f64), ExprError> {
    const MAX_RETRIES: usize = 16;
    let mut last_err = None;
    for _ in 0..MAX_RETRIES {
        let coords = sampler.draw_point(chart);
        let params = sampler.draw_params();
        match e.eval(&coords, &params) {
            Ok(v) if v.is_finite() => return Ok((coords, params, v)),
            Ok(_) => last_err = Some(ExprError::Domain("non-finite value".into())),
            Err(err @ ExprError::Domain(_)) => last_err = Some(err),
            Err(err) => return Err(err),
        }
    }
    Err(last_err.unwrap_or_else(|| ExprError::Domain("sampling failed".into())))
}

/// Max |a - b| / max(1, |a|, |b|) over sampled points; the denominator floor
/// keeps the measure meaningful when both sides are near zero.
pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1.0_f64.max(a.abs()).max(b.abs())
}

/// Check that two expressions agree within `tol` (relative, floored) at
/// `samples` random points.
pub fn agree_numerically(
    a: &ScalarExpr,
    b: &ScalarExpr,
    chart: &Chart,
    sampler: &mut Sampler,
    samples: usize,
    tol: f64,
) -> Result<Option<(Bindings, f64, f64)>, ExprError> {
    for _ in 0..samples {
        let coords = sampler.draw_point(chart);
        let params = sampler.draw_params();
        let (va, vb) = match (a.eval(&coords, &params), b.eval(&coords, &params)) {
            (Ok(va), Ok(vb)) if va.is_finite() && vb.is_finite() => (va, vb),
            // Domain errors (poles) are skipped: the comparison is only
            // meaningful where both sides are defined.
            (Err(ExprError::Domain(_)), _) | (_, Err(ExprError::Domain(_))) => continue,
            (Ok(_), Ok(_)) => continue,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        if relative_gap(va, vb) > tol {
            let mut witness = coords;
            witness.extend(params);
            return Ok(Some((witness, va, vb)));
        }
    }
    Ok(None)
}

/// Central finite difference of `e` in the coordinate `coord` at a point.
pub fn central_difference(
    e: &ScalarExpr,
    coord: &str,
    coords: &Bindings,
    params: &Bindings,
    step: f64,
) -> Result<f64, ExprError> {
    let x = *coords
        .get(coord)
        .ok_or_else(|| ExprError::UnboundSymbol(coord.to_string()))?;
    let mut plus = coords.clone();
    plus.insert(coord.to_string(), x + step);
    let mut minus = coords.clone();
    minus.insert(coord.to_string(), x - step);
    Ok((e.eval(&plus, params)? - e.eval(&minus, params)?) / (2.0 * step))
}

/// Step size balancing truncation against rounding for central differences.
pub fn fd_step(x: f64) -> f64 {
    let scale = x.abs().max(1.0);
    scale * 6e-6
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn sampler_is_deterministic() {
        let chart = Chart::new(&["x", "y"]).unwrap();
        let mut a = Sampler::new(DEFAULT_SEED);
        let mut b = Sampler::new(DEFAULT_SEED);
        for _ in 0..10 {
            assert_eq!(a.draw_point(&chart), b.draw_point(&chart));
        }
    }

    #[test]
    fn zero_verdict_symbolic() {
        let chart = Chart::new(&["x"]).unwrap();
        let e = parse("x - x", &chart, &[]).unwrap();
        let mut sampler = Sampler::new(DEFAULT_SEED);
        let verdict = zero_verdict(&e, &chart, &mut sampler, 20, NUMERIC_ZERO_TOL).unwrap();
        assert_eq!(verdict, ZeroVerdict::SymbolicallyZero);
    }

    #[test]
    fn zero_verdict_nonzero_with_witness() {
        let chart = Chart::new(&["x"]).unwrap();
        let e = parse("x", &chart, &[]).unwrap();
        let mut sampler = Sampler::new(DEFAULT_SEED);
        let verdict = zero_verdict(&e, &chart, &mut sampler, 20, NUMERIC_ZERO_TOL).unwrap();
        match verdict {
            ZeroVerdict::Nonzero { witness, value } => {
                assert_eq!(witness.get("x").copied(), Some(value));
            }
            other => panic!("expected nonzero, got {other:?}"),
        }
    }

    #[test]
    fn central_difference_matches_symbolic_derivative() {
        let chart = Chart::new(&["x"]).unwrap();
        let e = parse("sin(x)*exp(x)", &chart, &[]).unwrap();
        let d = e.differentiate("x");
        let mut coords = Bindings::new();
        coords.insert("x".into(), 0.7);
        let params = Bindings::new();
        let fd = central_difference(&e, "x", &coords, &params, fd_step(0.7)).unwrap();
        let exact = d.eval(&coords, &params).unwrap();
        assert!(relative_gap(fd, exact) < FD_REL_TOL);
    }
}
