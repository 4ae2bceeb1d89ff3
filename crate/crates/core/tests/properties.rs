//! Cross-module invariants of the triple operators and certificates.

use carre::geometries::GeometrySpec;
use carre::quad::{build_grid, bump, Domain, Rule};
use carre::report::Verdict;
use carre::sampling::{halton_points, random_pairs, random_polynomials};
use carre::triple::{validate_axioms, AxiomTolerances};
use carre::verify::{cd_check, poincare_certificate, residual, stability_spectrum, Hypotheses, ProblemInstance};
use carre::{parse_univariate, MarkovTriple, SmoothFunction, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn catalog() -> Vec<MarkovTriple> {
    let eta = SmoothFunction::parse("0.3*sin(x1) - 0.2*x2^2", 2).unwrap();
    [
        GeometrySpec::EuclideanWeighted { dimension: 2, log_weight: Some(eta) },
        GeometrySpec::OrnsteinUhlenbeck { dimension: 3 },
        GeometrySpec::Heisenberg,
        GeometrySpec::Engel,
        GeometrySpec::Filiform { dimension: 6 },
        GeometrySpec::Grushin { alpha: 1 },
        GeometrySpec::Grushin { alpha: 3 },
    ]
    .iter()
    .map(|s| s.make().unwrap())
    .collect()
}

#[test]
fn gamma_is_symmetric_and_satisfies_cauchy_schwarz() {
    for (s, t) in catalog().iter().enumerate() {
        let n = t.dimension();
        let points = halton_points(&Domain::cube(n, 1.0).unwrap(), 15, s as u64);
        for (f, g) in random_pairs(n, 8, 3, 10 + s as u64) {
            for x in &points {
                let fg = t.gamma(&f, &g, x).unwrap();
                let gf = t.gamma(&g, &f, x).unwrap();
                let ff = t.gamma(&f, &f, x).unwrap();
                let gg = t.gamma(&g, &g, x).unwrap();
                assert!((fg - gf).abs() <= 1e-12 * 1f64.max(fg.abs()), "{}", t.name());
                assert!(fg * fg <= ff * gg * (1.0 + 1e-10) + 1e-12, "{}: {fg} vs {ff} {gg}", t.name());
            }
        }
    }
}

#[test]
fn gamma2_is_symmetric() {
    for (s, t) in catalog().iter().enumerate() {
        let n = t.dimension();
        let points = halton_points(&Domain::cube(n, 1.0).unwrap(), 10, 20 + s as u64);
        for (f, g) in random_pairs(n, 6, 3, 30 + s as u64) {
            for x in &points {
                let a = t.gamma2(&f, &g, x).unwrap();
                let b = t.gamma2(&g, &f, x).unwrap();
                assert!((a - b).abs() <= 1e-9 * 1f64.max(a.abs()), "{}: {a} vs {b}", t.name());
            }
        }
    }
}

#[test]
fn heisenberg_gamma_matches_explicit_fields() {
    let t = GeometrySpec::Heisenberg.make().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = SmoothFunction::parse(&format!("({})*x1^2*x3 + ({})*x2*x3^2 + ({})*x1*x2 + ({})*x3", c[0], c[1], c[2], c[3]), 3)
            .unwrap();
        let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let d1 = 2.0 * c[0] * x[0] * x[2] + c[2] * x[1];
        let d2 = c[1] * x[2] * x[2] + c[2] * x[0];
        let d3 = c[0] * x[0] * x[0] + 2.0 * c[1] * x[1] * x[2] + c[3];
        let xf = d1 - 0.5 * x[1] * d3;
        let yf = d2 + 0.5 * x[0] * d3;
        let g = t.gamma(&f, &f, &x).unwrap();
        assert!((g - (xf * xf + yf * yf)).abs() < 1e-12);
    }
}

#[test]
fn every_builtin_passes_the_axioms() {
    for (s, t) in catalog().iter().enumerate() {
        let n = t.dimension();
        let domain = Domain::cube(n, 1.0).unwrap();
        let pairs = random_pairs(n, 6, 3, 40 + s as u64);
        let points = halton_points(&domain, 30, 50 + s as u64);
        let nodes = if n <= 3 { 8 } else { 6 };
        let grid = build_grid(&domain, &[nodes], Rule::GaussLegendre).unwrap().for_triple(t).unwrap();
        let mut tol = AxiomTolerances::uniform(1e-7);
        tol.integration_pairs = 1;
        let r = validate_axioms(t, &pairs, &points, Some(&grid), tol).unwrap();
        assert!(r.passed, "{}: {:?}", t.name(), r.entries.iter().filter(|e| !e.passed).collect::<Vec<_>>());
    }
}

#[test]
fn filiform_brackets_vanish_except_against_z1() {
    let n = 6;
    let t = GeometrySpec::Filiform { dimension: n }.make().unwrap();
    let z1 = t.frame()[0].clone();
    let mut fields: Vec<VectorField> = t.frame().to_vec();
    while fields.len() < n {
        let next = fields.last().unwrap().bracket(&z1).unwrap();
        fields.push(next);
    }
    let points = halton_points(&Domain::cube(n, 1.5).unwrap(), 20, 60);
    for (i, a) in fields.iter().enumerate().skip(1) {
        for b in fields.iter().skip(i + 1) {
            let c = a.bracket(b).unwrap();
            for x in &points {
                assert!(c.values(x).unwrap().iter().all(|v| v.abs() < 1e-12));
            }
        }
    }
    let last = fields[n - 1].bracket(&z1).unwrap();
    for x in &points {
        assert!(last.values(x).unwrap().iter().all(|v| v.abs() < 1e-12));
        for z in &fields[2..] {
            assert!(z.values(x).unwrap().iter().any(|v| v.abs() > 0.5));
        }
    }
}

fn ibp_residual(t: &MarkovTriple, nodes: usize) -> f64 {
    let domain = Domain::cube(2, 1.0).unwrap();
    let grid = build_grid(&domain, &[nodes], Rule::GaussLegendre).unwrap().for_triple(t).unwrap();
    let f = bump(vec![0.1, -0.2], 0.7);
    let g = SmoothFunction::parse("x1^3 - 2*x1*x2 + sin(x2)", 2).unwrap();
    let a = grid.integrate(|x| t.gamma(&f, &g, x), true).unwrap();
    let b = grid.integrate(|x| Ok(f.value(x)? * t.operator_l(&g, x)?), true).unwrap();
    (a + b).abs()
}

#[test]
fn grid_refinement_reduces_integration_by_parts_residual() {
    let eta = SmoothFunction::parse("0.5*x1 - 0.25*x2^2", 2).unwrap();
    for t in [
        GeometrySpec::EuclideanWeighted { dimension: 2, log_weight: Some(eta) }.make().unwrap(),
        GeometrySpec::Grushin { alpha: 2 }.make().unwrap(),
    ] {
        let r: Vec<f64> = [6, 12, 24, 48].iter().map(|&n| ibp_residual(&t, n)).collect();
        assert!(r.windows(2).all(|w| w[1] < w[0]), "{}: {r:?}", t.name());
        assert!(r[3] < 1e-4 * r[0], "{}: {r:?}", t.name());
    }
}

fn allen_cahn() -> SmoothFunction {
    SmoothFunction::from_expression(parse_univariate("s - s^3", "s").unwrap())
}

fn zero_instance(half: f64, per_axis: usize) -> ProblemInstance {
    let t = GeometrySpec::EuclideanWeighted { dimension: 1, log_weight: None }.make().unwrap();
    let grid =
        build_grid(&Domain::cube(1, half).unwrap(), &[8], Rule::CompositeGaussLegendre { panels: per_axis + 7 }).unwrap();
    ProblemInstance::new(t, SmoothFunction::constant(1, 0.0), allen_cahn(), grid).unwrap()
}

#[test]
fn refining_the_basis_does_not_raise_lambda_min() {
    let sizes = [10, 20, 40, 80];
    let lambdas: Vec<f64> =
        sizes.iter().map(|&k| stability_spectrum(&zero_instance(5.0, k), k, 1e-3).unwrap().lambda_min).collect();
    for w in lambdas.windows(2) {
        assert!(w[1] <= w[0] + 1e-4, "{lambdas:?}");
    }
    let exact = (std::f64::consts::PI / 10.0).powi(2) - 1.0;
    assert!((lambdas[3] - exact).abs() < 2e-2, "{lambdas:?}");
}

#[test]
fn poincare_holds_for_a_verified_stable_solution() {
    let per_axis = 60;
    let t = GeometrySpec::EuclideanWeighted { dimension: 1, log_weight: None }.make().unwrap();
    let grid =
        build_grid(&Domain::cube(1, 8.0).unwrap(), &[8], Rule::CompositeGaussLegendre { panels: per_axis + 7 }).unwrap();
    let p = ProblemInstance::new(t, SmoothFunction::parse("tanh(x1/sqrt(2))", 1).unwrap(), allen_cahn(), grid).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let tests: Vec<SmoothFunction> = (0..10).map(|_| bump(vec![rng.gen_range(-4.0..4.0)], rng.gen_range(0.5..2.5))).collect();
    let points: Vec<Vec<f64>> = (0..=160).map(|i| vec![-8.0 + 0.1 * f64::from(i)]).collect();
    let res = residual(&p, &points, &tests).unwrap();
    assert!(res.max() < 1e-6, "residual {}", res.max());
    let spectrum = stability_spectrum(&p, per_axis, 1e-3).unwrap();
    assert!(spectrum.stable, "lambda_min {}", spectrum.lambda_min);
    let r = poincare_certificate(&p, &tests, None, 1e-4, Hypotheses::verified(res.max(), 1e-6, true)).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
    assert!(r.margin >= -1e-4);
}

#[test]
fn cd_margins_agree_along_both_paths() {
    for (s, t) in catalog().iter().enumerate() {
        let n = t.dimension();
        let points = halton_points(&Domain::cube(n, 1.0).unwrap(), 20, 70 + s as u64);
        let r = cd_check(t, 0.5, &random_polynomials(n, 10, 3, 80 + s as u64), &points, 1e-8).unwrap();
        let agreement = r.details.iter().find(|(k, _)| k == "two-path agreement").unwrap().1;
        assert!(agreement < 1e-8, "{}: {agreement}", t.name());
    }
}
