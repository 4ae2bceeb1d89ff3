use rayon::prelude::*;
use serde::Serialize;

use super::ProblemInstance;
use crate::error::Result;
use crate::function::SmoothFunction;
use crate::report::Witness;

/// Strong and weak residuals of `Lu + F(u) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    /// Sampled `sup |Lu + F(u)|`.
    pub pointwise_sup: f64,
    pub pointwise_witness: Option<Witness>,
    /// `max_φ |∫Γ(u,φ) dμ − ∫F(u)φ dμ| / ‖φ‖_{L²(μ)}`.
    pub weak_sup: f64,
    pub weak_witness: Option<usize>,
    pub points: usize,
    pub test_functions: usize,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        self.pointwise_sup.max(self.weak_sup)
    }
}

/// Pointwise residual on `points` and weak residual against `tests`.
pub fn residual(p: &ProblemInstance, points: &[Vec<f64>], tests: &[SmoothFunction]) -> Result<ResidualReport> {
    let values: Vec<f64> = points
        .par_iter()
        .map(|x| {
            let lu = p.triple.operator_l(&p.u, x)?;
            let (f, _) = p.f_and_derivative(p.u.value(x)?)?;
            Ok((lu + f).abs())
        })
        .collect::<Result<_>>()?;
    let mut report = ResidualReport {
        pointwise_sup: 0.0,
        pointwise_witness: None,
        weak_sup: 0.0,
        weak_witness: None,
        points: points.len(),
        test_functions: tests.len(),
    };
    for (i, v) in values.iter().enumerate() {
        if *v > report.pointwise_sup || (report.pointwise_witness.is_none() && v.is_nan()) {
            report.pointwise_sup = *v;
            report.pointwise_witness =
                Some(Witness { function: 0, label: Some(p.u.label().into()), point_index: i, point: points[i].clone(), value: *v });
        }
    }
    let weighted = p.triple.log_weight().is_some();
    for (k, phi) in tests.iter().enumerate() {
        let lhs = p.grid.integrate(|x| p.triple.gamma(&p.u, phi, x), weighted)?;
        let rhs = p.grid.integrate(|x| Ok(p.f_and_derivative(p.u.value(x)?)?.0 * phi.value(x)?), weighted)?;
        let norm = p.grid.integrate(|x| Ok(phi.value(x)?.powi(2)), weighted)?.sqrt();
        if norm == 0.0 {
            continue;
        }
        let r = (lhs - rhs).abs() / norm;
        if r > report.weak_sup {
            report.weak_sup = r;
            report.weak_witness = Some(k);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometries::GeometrySpec;
    use crate::quad::{build_grid, bump, Domain, Rule};
    use crate::sampling::random_polynomials;

    fn tanh_instance() -> ProblemInstance {
        let t = GeometrySpec::EuclideanWeighted { dimension: 1, log_weight: None }.make().unwrap();
        let grid = build_grid(&Domain::cube(1, 10.0).unwrap(), &[8], Rule::CompositeGaussLegendre { panels: 80 }).unwrap();
        ProblemInstance::new(
            t,
            SmoothFunction::parse("tanh(x1/sqrt(2))", 1).unwrap(),
            SmoothFunction::from_expression(crate::expr::parse_univariate("s - s^3", "s").unwrap()),
            grid,
        )
        .unwrap()
    }

    #[test]
    fn tanh_is_a_solution() {
        let p = tanh_instance();
        let points: Vec<Vec<f64>> = (0..101).map(|i| vec![-5.0 + 0.1 * i as f64]).collect();
        let tests = vec![bump(vec![0.0], 2.0), bump(vec![-4.0], 1.5)];
        let r = residual(&p, &points, &tests).unwrap();
        assert!(r.pointwise_sup < 1e-14, "{r:?}");
        assert!(r.weak_sup < 1e-10, "{r:?}");
    }

    #[test]
    fn constant_root_is_a_solution() {
        let mut p = tanh_instance();
        p.u = SmoothFunction::constant(1, 1.0);
        let r = residual(&p, &[vec![0.0], vec![2.0]], &[bump(vec![0.0], 1.0)]).unwrap();
        assert_eq!(r.max(), 0.0);
    }

    #[test]
    fn grushin_residual_without_nonlinearity_is_the_sublaplacian() {
        let t = GeometrySpec::Grushin { alpha: 1 }.make().unwrap();
        let u = random_polynomials(2, 1, 3, 5).remove(0);
        let grid = build_grid(&Domain::cube(2, 1.0).unwrap(), &[4], Rule::GaussLegendre).unwrap();
        let zero = SmoothFunction::constant(1, 0.0);
        let p = ProblemInstance::new(t.clone(), u.clone(), zero, grid).unwrap();
        let points = vec![vec![0.2, 0.3], vec![-0.7, 0.1], vec![0.9, -0.9]];
        let r = residual(&p, &points, &[]).unwrap();
        let expected = points.iter().map(|x| t.operator_l(&u, x).unwrap().abs()).fold(0.0, f64::max);
        assert_eq!(r.pointwise_sup, expected);
    }
}
