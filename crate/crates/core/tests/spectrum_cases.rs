//! Spectrum and geometricity cases checked against independent oracles:
//! closed-form root finding, rank/annihilation checks on the reported
//! kernels, and morphism laws for every constructed point family.

use num_rational::BigRational;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use eaw_core::algebra::{grassmann_mul, GrassmannElement, GrassmannFunction};
use eaw_core::expr::{parse, Bindings, Chart, ScalarExpr};
use eaw_core::spectrum::{
    ghost_ideal, grassmann_stage_point, is_geometric_at_stage, real_spectrum, theta_image,
    AlgebraElement, AlgebraPresentation, CoordinateAlgebra, PointMorphism, QuotientAlgebra,
    RootValue, StageSpec, ThetaValue,
};

fn quotient(relation: &str) -> AlgebraPresentation {
    let chart = Chart::new(&["x"]).unwrap();
    let expr = parse(relation, &chart, &[]).unwrap();
    AlgebraPresentation::Quotient(QuotientAlgebra::new(vec!["x".to_string()], &[expr]).unwrap())
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Root-finding oracle: x² - 1 has the two sign points.
#[test]
fn quotient_spectrum_matches_root_oracle() {
    let spectrum = real_spectrum(&quotient("x^2 - 1")).unwrap();
    let mut values: Vec<f64> = spectrum
        .sample_points(8)
        .into_iter()
        .map(|p| match p {
            PointMorphism::QuotientPoint(v) => v[0].to_f64(),
            other => panic!("unexpected point {other:?}"),
        })
        .collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(values, vec![-1.0, 1.0]);
}

/// Kernel oracle: the reported kernel vectors must be annihilated by every
/// point, the non-kernel basis elements must not be, and the kernel dimension
/// must match the rank defect of the evaluation matrix computed by an
/// independent numeric route (nalgebra SVD rank).
#[test]
fn quotient_kernels_match_linear_algebra_oracle() {
    // (relation, expected kernel dimension over basis {1, x})
    let cases = [("x^2", 1usize), ("x^2 - 1", 0), ("x^2 + 1", 2)];
    for (relation, expected_dim) in cases {
        let c = quotient(relation);
        let report = ghost_ideal(&c).unwrap();
        assert_eq!(report.kernel_basis.len(), expected_dim, "{relation}: {report:?}");

        // Independent rank computation on the evaluation matrix.
        let spectrum = real_spectrum(&c).unwrap();
        let points: Vec<f64> = spectrum
            .sample_points(16)
            .into_iter()
            .map(|p| match p {
                PointMorphism::QuotientPoint(v) => v[0].to_f64(),
                other => panic!("unexpected point {other:?}"),
            })
            .collect();
        let rows = points.len();
        let matrix = nalgebra::DMatrix::from_fn(rows.max(1), 2, |r, c| {
            if rows == 0 {
                0.0
            } else {
                points[r].powi(c as i32)
            }
        });
        let rank = matrix.rank(1e-9);
        assert_eq!(2 - rank, expected_dim, "{relation}: rank oracle disagrees");
    }
}

#[test]
fn lemma_equivalence_kernel_iff_annihilated_by_every_point() {
    // For R[x]/(x²): basis {1, x}; the reported kernel is span{x}. Check both
    // directions of the kernel equivalence on all four basis combinations.
    let c = quotient("x^2");
    let report = ghost_ideal(&c).unwrap();
    assert_eq!(report.kernel_basis, vec!["x".to_string()]);
    let spectrum = real_spectrum(&c).unwrap();
    let points = spectrum.sample_points(8);
    // Elements as coefficient vectors (c0 + c1 x).
    for (c0, c1) in [(0i64, 0i64), (0, 1), (1, 0), (1, 1)] {
        let annihilated = points.iter().all(|p| match p {
            PointMorphism::QuotientPoint(v) => {
                (c0 as f64 + c1 as f64 * v[0].to_f64()).abs() < 1e-12
            }
            _ => unreachable!(),
        });
        let in_kernel = c0 == 0; // span{x}
        assert_eq!(annihilated, in_kernel, "element {c0} + {c1} x");
    }
}

#[test]
fn lemma3_direction_on_coordinate_algebras() {
    // R-geometric coordinate algebras stay geometric at W^k, k = 1..3.
    for names in [vec!["x"], vec!["x", "y"], vec!["u", "v", "w"]] {
        let chart = Chart::new(&names).unwrap();
        let c = AlgebraPresentation::Coordinate(CoordinateAlgebra::new(chart, 6));
        let base = ghost_ideal(&c).unwrap();
        assert!(base.geometric);
        for k in 1..=3 {
            let staged = is_geometric_at_stage(&c, &StageSpec::Weil { order: k }).unwrap();
            assert!(staged.geometric, "{names:?} at W^{k}");
            assert!(staged.kernel_basis.is_empty());
        }
    }
}

#[test]
fn weil_point_morphism_laws() {
    // π(ab) = π(a)π(b) and π(a + b) = π(a) + π(b), symbolically: the unit
    // coefficient of a truncated product is the product of unit coefficients.
    let chart = Chart::new(&["u"]).unwrap();
    let params = vec!["x".to_string(), "y".to_string(), "s".to_string(), "t".to_string()];
    let a = eaw_core::algebra::parse_weil("x + y*e", 1, &chart, &params).unwrap();
    let b = eaw_core::algebra::parse_weil("s + t*e", 1, &chart, &params).unwrap();
    let product = eaw_core::algebra::weil_mul(&a, &b).unwrap();
    let pi = |w: &eaw_core::algebra::WeilElement<ScalarExpr>| {
        eaw_core::expr::simplify(w.coeff(0)).unwrap()
    };
    let lhs = pi(&product);
    let rhs = eaw_core::expr::simplify(&(a.coeff(0).clone() * b.coeff(0).clone())).unwrap();
    assert_eq!(lhs, rhs);
    let sum = a.add(&b).unwrap();
    let lhs = pi(&sum);
    let rhs = eaw_core::expr::simplify(&(a.coeff(0).clone() + b.coeff(0).clone())).unwrap();
    assert_eq!(lhs, rhs);
}

#[test]
fn quotient_point_morphism_laws() {
    // Evaluation at a root is multiplicative modulo the relation: reduce
    // p*q mod (x² - 1) by hand and compare evaluations.
    let c = quotient("x^2 - 1");
    let points = match real_spectrum(&c).unwrap() {
        eaw_core::spectrum::RealSpectrum::Points(p) => p,
        _ => unreachable!(),
    };
    let mut rng = StdRng::seed_from_u64(0xE1A5);
    for _ in 0..200 {
        let p = [rat(rng.gen_range(-9i64..10)), rat(rng.gen_range(-9i64..10))];
        let q = [rat(rng.gen_range(-9i64..10)), rat(rng.gen_range(-9i64..10))];
        // (p0 + p1 x)(q0 + q1 x) mod x² = 1: constant p0q0 + p1q1, linear p0q1 + p1q0.
        let product = [&p[0] * &q[0] + &p[1] * &q[1], &p[0] * &q[1] + &p[1] * &q[0]];
        for point in &points {
            let PointMorphism::QuotientPoint(values) = point else { unreachable!() };
            let RootValue::Exact(root) = &values[0] else { unreachable!() };
            let eval = |coeffs: &[BigRational; 2]| (&coeffs[0] + &coeffs[1] * root);
            assert_eq!(eval(&product), eval(&p) * eval(&q));
        }
    }
}

#[test]
fn theta_image_weil_example() {
    let chart = Chart::new(&["u"]).unwrap();
    let w =
        eaw_core::algebra::parse_weil("x + y*e", 1, &chart, &["x".into(), "y".into()]).unwrap();
    let image =
        theta_image(&AlgebraPresentation::Weil { order: 1 }, &AlgebraElement::Weil(w)).unwrap();
    assert_eq!(image.pairs[0].1, ThetaValue::Symbolic(ScalarExpr::symbol("x")));
    //f = 0 has zero image.
    let zero = eaw_core::algebra::WeilElement::<ScalarExpr>::zero(1);
    let image =
        theta_image(&AlgebraPresentation::Weil { order: 1 }, &AlgebraElement::Weil(zero))
            .unwrap();
    assert_eq!(image.pairs[0].1, ThetaValue::Symbolic(ScalarExpr::zero()));
}

/// χ_{v,a} is multiplicative on random function pairs when a is a single
/// generator (a² = 0), bit-exactly.
#[test]
fn grassmann_stage_point_multiplicative_on_random_pairs() {
    let chart = Chart::new(&["x", "y"]).unwrap();
    let mut rng = StdRng::seed_from_u64(0xE1A5);
    let pool = ["x", "y", "x*y", "x^2 - y", "sin(x)", "x*cos(y)", "exp(x)*y", "atan(y)"];
    let q = 3;
    let mut checked = 0;
    while checked < 500 {
        let fs = pool[rng.gen_range(0..pool.len())];
        let gs = pool[rng.gen_range(0..pool.len())];
        let f = GrassmannFunction::from_components(
            chart.clone(),
            q,
            [(0u32, parse(fs, &chart, &[]).unwrap())],
        )
        .unwrap();
        let g = GrassmannFunction::from_components(
            chart.clone(),
            q,
            [(0u32, parse(gs, &chart, &[]).unwrap())],
        )
        .unwrap();
        let mut base = Bindings::new();
        base.insert("x".into(), rng.gen_range(0.5..1.5));
        base.insert("y".into(), rng.gen_range(0.5..1.5));
        let tangent = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let generator_index = rng.gen_range(1..=q);
        let a = GrassmannElement::<f64>::generator(q, generator_index).unwrap();
        let chi = grassmann_stage_point(base, tangent, a).unwrap();
        let params = Bindings::new();
        let lhs = chi.apply(&f.mul(&g).unwrap(), &params).unwrap();
        let rhs = grassmann_mul(&chi.apply(&f, &params).unwrap(), &chi.apply(&g, &params).unwrap())
            .unwrap();
        assert_eq!(lhs, rhs, "f = {fs}, g = {gs}");
        checked += 1;
    }
}

/// Morphism additivity and unitality for χ_{v,a}.
#[test]
fn grassmann_stage_point_additive_and_unital() {
    let chart = Chart::new(&["x"]).unwrap();
    let f = GrassmannFunction::from_components(
        chart.clone(),
        2,
        [(0u32, parse("x^2", &chart, &[]).unwrap())],
    )
    .unwrap();
    let g = GrassmannFunction::from_components(
        chart.clone(),
        2,
        [(0u32, parse("sin(x)", &chart, &[]).unwrap())],
    )
    .unwrap();
    let one = GrassmannFunction::from_components(chart.clone(), 2, [(0u32, ScalarExpr::one())])
        .unwrap();
    let mut base = Bindings::new();
    base.insert("x".into(), 0.8);
    let a = GrassmannElement::<f64>::generator(2, 2).unwrap();
    let chi = grassmann_stage_point(base, vec![1.3], a).unwrap();
    let params = Bindings::new();
    let sum = chi.apply(&f.add(&g).unwrap(), &params).unwrap();
    let parts = chi
        .apply(&f, &params)
        .unwrap()
        .add(&chi.apply(&g, &params).unwrap())
        .unwrap();
    assert_eq!(sum, parts);
    assert_eq!(chi.apply(&one, &params).unwrap(), GrassmannElement::<f64>::unit(2));
}

#[test]
fn grassmann_values_stage_on_coordinate_algebra_is_geometric() {
    let chart = Chart::new(&["x", "y"]).unwrap();
    let c = AlgebraPresentation::Coordinate(CoordinateAlgebra::new(chart, 6));
    let report = is_geometric_at_stage(&c, &StageSpec::GrassmannValues { q: 2 }).unwrap();
    assert!(report.geometric);
}

#[test]
fn multi_generator_quotient_product_points() {
    // R[x, y]/(x² - 1, y² - 4): four points.
    let chart = Chart::new(&["x", "y"]).unwrap();
    let relations = [
        parse("x^2 - 1", &chart, &[]).unwrap(),
        parse("y^2 - 4", &chart, &[]).unwrap(),
    ];
    let alg = QuotientAlgebra::new(vec!["x".into(), "y".into()], &relations).unwrap();
    let c = AlgebraPresentation::Quotient(alg);
    assert_eq!(real_spectrum(&c).unwrap().count(), 4);
    let report = ghost_ideal(&c).unwrap();
    assert!(report.geometric, "{report:?}");
}

#[test]
fn unsupported_relations_are_reported() {
    let chart = Chart::new(&["x", "y"]).unwrap();
    // Mixed-variable relation is outside the separable fragment.
    let mixed = parse("x*y - 1", &chart, &[]).unwrap();
    let err = QuotientAlgebra::new(vec!["x".into(), "y".into()], &[mixed]).unwrap_err();
    assert!(matches!(err, eaw_core::spectrum::SpectrumError::RelationNotUnivariate(_)));
}
