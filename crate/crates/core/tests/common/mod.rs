//! Shared golden-metric constructors for the integration tests.
#![allow(dead_code)]

use eaw_core::expr::{parse, Bindings, Chart, ScalarExpr};
use eaw_core::lorentz::{diagonal_metric, minkowski, Metric};

pub fn minkowski4() -> Metric {
    minkowski(Chart::new(&["t", "x", "y", "z"]).unwrap()).unwrap()
}

/// Schwarzschild in Schwarzschild coordinates, M symbolic; the radial range
/// stays outside the horizon for M = 1.
pub fn schwarzschild() -> (Metric, Bindings) {
    let chart = Chart::with_ranges(&[
        ("t".into(), (0.0, 1.0)),
        ("r".into(), (2.5, 20.0)),
        ("θ".into(), (0.4, 2.7)),
        ("φ".into(), (0.1, 6.2)),
    ])
    .unwrap();
    let params = vec!["M".to_string()];
    let p = |s: &str| parse(s, &chart, &params).unwrap();
    let diagonal = vec![
        p("1 - 2*M/r"),
        p("-(1/(1 - 2*M/r))"),
        p("-(r^2)"),
        p("-(r^2*sin(θ)^2)"),
    ];
    let g = diagonal_metric(chart, diagonal, params).unwrap();
    let mut bindings = Bindings::new();
    bindings.insert("M".into(), 1.0);
    (g, bindings)
}

/// de Sitter static patch with radius parameter α; r < α keeps the sample
/// range inside the horizon for α = 1.
pub fn de_sitter() -> (Metric, Bindings) {
    let chart = Chart::with_ranges(&[
        ("t".into(), (0.0, 1.0)),
        ("r".into(), (0.05, 0.85)),
        ("θ".into(), (0.4, 2.7)),
        ("φ".into(), (0.1, 6.2)),
    ])
    .unwrap();
    let params = vec!["alpha".to_string()];
    let p = |s: &str| parse(s, &chart, &params).unwrap();
    let diagonal = vec![
        p("1 - r^2/alpha^2"),
        p("-(1/(1 - r^2/alpha^2))"),
        p("-(r^2)"),
        p("-(r^2*sin(θ)^2)"),
    ];
    let g = diagonal_metric(chart, diagonal, params).unwrap();
    let mut bindings = Bindings::new();
    bindings.insert("alpha".into(), 1.0);
    (g, bindings)
}

/// Spatially flat dust cosmology in conformal time with scale factor
/// a(η) = η²; the matching stress-energy has the single component
/// T_00 = 3/(2π η²).
pub fn flrw_dust() -> (Metric, Vec<Vec<ScalarExpr>>) {
    let chart = Chart::with_ranges(&[
        ("eta".into(), (0.5, 2.0)),
        ("x".into(), (0.0, 1.0)),
        ("y".into(), (0.0, 1.0)),
        ("z".into(), (0.0, 1.0)),
    ])
    .unwrap();
    let p = |s: &str| parse(s, &chart, &[]).unwrap();
    let diagonal = vec![p("eta^4"), p("-(eta^4)"), p("-(eta^4)"), p("-(eta^4)")];
    let g = diagonal_metric(chart.clone(), diagonal, Vec::new()).unwrap();
    let mut stress_energy = vec![vec![ScalarExpr::zero(); 4]; 4];
    stress_energy[0][0] = p("3/(2*pi*eta^2)");
    (g, stress_energy)
}

/// Round 2-sphere of radius a: the non-Lorentz catalog entry.
pub fn two_sphere() -> (Metric, Bindings) {
    let chart = Chart::with_ranges(&[
        ("θ".into(), (0.4, 2.7)),
        ("φ".into(), (0.1, 6.2)),
    ])
    .unwrap();
    let params = vec!["a".to_string()];
    let p = |s: &str| parse(s, &chart, &params).unwrap();
    let diagonal = vec![p("a^2"), p("a^2*sin(θ)^2")];
    let g = diagonal_metric(chart, diagonal, params).unwrap();
    let mut bindings = Bindings::new();
    bindings.insert("a".into(), 1.0);
    (g, bindings)
}
