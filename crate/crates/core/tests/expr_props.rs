//! Property tests for the expression engine: printer/parser round trips,
//! evaluation morphism laws, simplify soundness against numeric sampling,
//! and symbolic derivatives against central finite differences.

use proptest::prelude::*;

use eaw_core::expr::{parse, simplify, Bindings, Chart, Primitive, ScalarExpr};
use eaw_core::numeric::{central_difference, fd_step, relative_gap, Sampler, DEFAULT_SEED};

fn chart_xyz() -> Chart {
    Chart::new(&["x", "y", "z"]).unwrap()
}

/// Random expression trees over x, y, z with integer constants. Division and
/// negation never take bare literals (the parser folds those), so structural
/// round trips are well-defined.
fn expr_strategy() -> impl Strategy<Value = ScalarExpr> {
    let leaf = prop_oneof![
        (1i64..20).prop_map(ScalarExpr::int),
        prop_oneof![Just("x"), Just("y"), Just("z")].prop_map(ScalarExpr::symbol),
        Just(ScalarExpr::Pi),
    ];
    leaf.prop_recursive(4, 40, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (
                inner.clone(),
                prop_oneof![Just("x"), Just("y"), Just("z")],
                (1i64..5)
            )
                .prop_map(|(a, s, c)| ScalarExpr::Div(
                    Box::new(a),
                    Box::new(ScalarExpr::symbol(s) + ScalarExpr::int(c)),
                )),
            (inner.clone(), -3i32..4).prop_map(|(a, n)| a.pow(n)),
            inner.clone().prop_map(|a| -(a + ScalarExpr::one())),
            inner.clone().prop_map(|a| a.apply(Primitive::Sin)),
            inner.clone().prop_map(|a| a.apply(Primitive::Cos)),
            inner.prop_map(|a| a.apply(Primitive::Atan)),
        ]
    })
}

/// Smooth expressions with eval-safe composition (no division, no log/sqrt),
/// for morphism-law and derivative checks.
fn smooth_strategy() -> impl Strategy<Value = ScalarExpr> {
    let leaf = prop_oneof![
        (1i64..10).prop_map(ScalarExpr::int),
        prop_oneof![Just("x"), Just("y"), Just("z")].prop_map(ScalarExpr::symbol),
    ];
    leaf.prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), 1i32..4).prop_map(|(a, n)| a.pow(n)),
            // Bounded primitives only, so composition towers stay finite.
            inner.clone().prop_map(|a| a.apply(Primitive::Sin)),
            inner.clone().prop_map(|a| a.apply(Primitive::Cos)),
            inner.prop_map(|a| a.apply(Primitive::Atan)),
        ]
    })
}

fn random_bindings(seed: u64) -> Bindings {
    let mut sampler = Sampler::new(seed);
    sampler.draw_point(&chart_xyz())
}

proptest! {
    #[test]
    fn display_parse_round_trip(e in expr_strategy()) {
        let printed = e.to_string();
        let reparsed = parse(&printed, &chart_xyz(), &[]).unwrap();
        prop_assert_eq!(e, reparsed, "printed form `{}`", printed);
    }

    #[test]
    fn simplify_is_idempotent(e in expr_strategy()) {
        // Division by a syntactic zero is a legitimate error; skip those draws.
        let Ok(once) = simplify(&e) else { return Ok(()); };
        let twice = simplify(&once).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn simplified_display_reparses_to_same_normal_form(e in expr_strategy()) {
        let Ok(once) = simplify(&e) else { return Ok(()); };
        let reparsed = parse(&once.to_string(), &chart_xyz(), &[]).unwrap();
        prop_assert_eq!(simplify(&reparsed).unwrap(), once);
    }

    #[test]
    fn eval_is_an_algebra_morphism(f in smooth_strategy(), g in smooth_strategy(), seed in 0u64..1000) {
        let coords = random_bindings(seed);
        let params = Bindings::new();
        let vf = f.eval(&coords, &params).unwrap();
        let vg = g.eval(&coords, &params).unwrap();
        let sum = (f.clone() + g.clone()).eval(&coords, &params).unwrap();
        let product = (f * g).eval(&coords, &params).unwrap();
        prop_assert!(relative_gap(sum, vf + vg) < 1e-12);
        prop_assert!(relative_gap(product, vf * vg) < 1e-12);
    }

    #[test]
    fn simplify_preserves_values(e in smooth_strategy(), seed in 0u64..100) {
        let simplified = simplify(&e).unwrap();
        let mut sampler = Sampler::new(seed);
        for _ in 0..8 {
            let coords = sampler.draw_point(&chart_xyz());
            let params = Bindings::new();
            let before = e.eval(&coords, &params).unwrap();
            let after = simplified.eval(&coords, &params).unwrap();
            prop_assert!(
                relative_gap(before, after) < 1e-9,
                "simplify changed value: {} vs {} for {}",
                before, after, e
            );
        }
    }
}

#[test]
fn eval_of_unit_is_one() {
    assert_eq!(ScalarExpr::one().eval_bound(&Bindings::new()).unwrap(), 1.0);
}

#[test]
fn morphism_laws_over_many_seeded_pairs() {
    // 200 random pairs under the fixed workbench seed.
    let chart = chart_xyz();
    let mut sampler = Sampler::new(DEFAULT_SEED);
    let pool = [
        "x + y*z",
        "sin(x)*cos(y)",
        "x^3 - 2*z",
        "exp(x)*y",
        "atan(z) + x*x",
        "cosh(y) - sinh(x)",
        "(x + 1)^2",
        "x*y*z - 4",
    ];
    let exprs: Vec<ScalarExpr> = pool.iter().map(|s| parse(s, &chart, &[]).unwrap()).collect();
    let mut checked = 0;
    for i in 0..pool.len() {
        for j in 0..pool.len() {
            for _ in 0..4 {
                let coords = sampler.draw_point(&chart);
                let params = Bindings::new();
                let f = &exprs[i];
                let g = &exprs[j];
                let vf = f.eval(&coords, &params).unwrap();
                let vg = g.eval(&coords, &params).unwrap();
                let product = (f.clone() * g.clone()).eval(&coords, &params).unwrap();
                let sum = (f.clone() + g.clone()).eval(&coords, &params).unwrap();
                assert!(relative_gap(product, vf * vg) < 1e-12);
                assert!(relative_gap(sum, vf + vg) < 1e-12);
                checked += 1;
            }
        }
    }
    assert!(checked >= 200);
}

#[test]
fn derivative_matches_finite_differences_for_all_primitives() {
    let chart = Chart::with_ranges(&[("x".into(), (0.3, 1.5))]).unwrap();
    let mut sampler = Sampler::new(DEFAULT_SEED);
    let params = Bindings::new();
    for p in Primitive::ALL {
        let f = parse(&format!("{}(x)", p.name()), &chart, &[]).unwrap();
        let derivative = f.differentiate("x");
        for _ in 0..25 {
            let coords = sampler.draw_point(&chart);
            let x = coords["x"];
            let fd = central_difference(&f, "x", &coords, &params, fd_step(x)).unwrap();
            let exact = derivative.eval(&coords, &params).unwrap();
            assert!(
                relative_gap(fd, exact) < 1e-6,
                "{}: fd {} vs exact {} at x = {}",
                p.name(),
                fd,
                exact,
                x
            );
        }
    }
}

#[test]
fn derivative_matches_finite_differences_for_composites() {
    let chart = Chart::with_ranges(&[
        ("x".into(), (0.4, 1.4)),
        ("y".into(), (0.4, 1.4)),
    ])
    .unwrap();
    let mut sampler = Sampler::new(DEFAULT_SEED);
    let params = Bindings::new();
    let cases = [
        "sin(x*y)^2 + exp(x - y)",
        "sqrt(x^2 + y^2)",
        "log(1 + x*x)*cos(y)",
        "atan(x/y)",
        "tan(x)*sinh(y)",
    ];
    for text in cases {
        let f = parse(text, &chart, &[]).unwrap();
        for coord in ["x", "y"] {
            let derivative = f.differentiate(coord);
            for _ in 0..20 {
                let coords = sampler.draw_point(&chart);
                let x = coords[coord];
                let fd = central_difference(&f, coord, &coords, &params, fd_step(x)).unwrap();
                let exact = derivative.eval(&coords, &params).unwrap();
                assert!(
                    relative_gap(fd, exact) < 1e-6,
                    "{text} d/d{coord}: fd {fd} vs exact {exact}"
                );
            }
        }
    }
}

/// The normal form of r(1 - 2M/r) - r + 2M is trusted only after the value
/// is confirmed zero at 100 random sample points.
#[test]
fn schwarzschild_cancellation_confirmed_numerically_first() {
    let chart = Chart::with_ranges(&[("r".into(), (2.5, 20.0))]).unwrap();
    let e = parse("r*(1 - 2*M/r) - r + 2*M", &chart, &["M".into()]).unwrap();
    let mut sampler = Sampler::new(DEFAULT_SEED);
    sampler.fix_param("M", 1.0);
    for _ in 0..100 {
        let coords = sampler.draw_point(&chart);
        let params = sampler.draw_params();
        let v = e.eval(&coords, &params).unwrap();
        assert!(v.abs() < 1e-12, "not numerically zero at {coords:?}: {v}");
    }
    // Only now assert the symbolic normal form.
    assert!(simplify(&e).unwrap().is_zero());
}
