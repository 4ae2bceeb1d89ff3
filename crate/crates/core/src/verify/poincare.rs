use rayon::prelude::*;
use serde::Serialize;

use super::{point_data, regularized, PointData, ProblemInstance};
use crate::error::Result;
use crate::function::SmoothFunction;
use crate::report::{InequalityReport, Verdict, Witness};

/// Evidence for the hypotheses of the geometric Poincaré inequality: `u`
/// solves the equation and is stable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Hypotheses {
    /// Observed residual of `Lu + F(u) = 0`, if measured.
    pub residual: Option<f64>,
    pub residual_tolerance: f64,
    /// Outcome of the stability spectrum, if computed.
    pub stable: Option<bool>,
}

impl Hypotheses {
    pub fn verified(residual: f64, residual_tolerance: f64, stable: bool) -> Self {
        Hypotheses { residual: Some(residual), residual_tolerance, stable: Some(stable) }
    }

    fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self.residual {
            None => out.push("solution hypothesis unverified: residual not measured".to_string()),
            Some(r) if !(r < self.residual_tolerance) => {
                out.push(format!("solution hypothesis unverified: residual {r:e} >= {:e}", self.residual_tolerance))
            }
            _ => {}
        }
        match self.stable {
            None => out.push("stability hypothesis unverified: spectrum not computed".to_string()),
            Some(false) => out.push("stability hypothesis fails: spectrum has a negative eigenvalue".to_string()),
            _ => {}
        }
        out
    }
}

/// For each test function `φ`, compares
/// `LHS = ∫(Γ₂(u) − Γ(Γ(u))/(4(Γ(u)+ε))) φ² dμ` with `RHS = ∫Γ(u)Γ(φ) dμ`.
///
/// `epsilon` defaults to `1e−8 (1 + sup Γ(u))` over the grid nodes. A verdict
/// is only claimed when `hypotheses` are verified; otherwise the values are
/// reported with warnings and the verdict is [`Verdict::Unverified`].
pub fn poincare_certificate(
    p: &ProblemInstance,
    tests: &[SmoothFunction],
    epsilon: Option<f64>,
    tol: f64,
    hypotheses: Hypotheses,
) -> Result<InequalityReport> {
    let nodes = p.grid.nodes();
    let data: Vec<PointData> = nodes.par_iter().map(|x| point_data(&p.triple, &p.u, x)).collect::<Result<_>>()?;
    let sup_gamma = data.iter().map(|d| d.gamma).fold(0.0, f64::max);
    let epsilon = epsilon.unwrap_or(1e-8 * (1.0 + sup_gamma));
    let defect: Vec<f64> = data.iter().map(|d| d.gamma2 - regularized(d, epsilon)).collect();

    let weighted = p.triple.log_weight().is_some();
    let mut left = Vec::with_capacity(tests.len());
    let mut right = Vec::with_capacity(tests.len());
    for phi in tests {
        let phi_sq: Vec<f64> = p.grid.evaluate(|x| Ok(phi.value(x)?.powi(2)))?;
        let gamma_phi: Vec<f64> = p.grid.evaluate(|x| p.triple.gamma(phi, phi, x))?;
        let lhs: Vec<f64> = defect.iter().zip(&phi_sq).map(|(a, b)| a * b).collect();
        let rhs: Vec<f64> = data.iter().zip(&gamma_phi).map(|(d, g)| d.gamma * g).collect();
        left.push(p.grid.sum_values(&lhs, weighted));
        right.push(p.grid.sum_values(&rhs, weighted));
    }

    let mut margin = f64::INFINITY;
    let mut witness = None;
    for (k, (l, r)) in left.iter().zip(&right).enumerate() {
        let m = r - l;
        if m < margin {
            margin = m;
            witness = Some(Witness { function: k, label: Some(tests[k].label().into()), point_index: 0, point: Vec::new(), value: m });
        }
    }
    if tests.is_empty() {
        margin = 0.0;
    }

    let warnings = hypotheses.warnings();
    let verdict = if !warnings.is_empty() {
        Verdict::Unverified
    } else if margin >= -tol {
        Verdict::Holds
    } else {
        Verdict::Violated
    };
    Ok(InequalityReport {
        name: "geometric poincare inequality".into(),
        left,
        right,
        margin,
        tolerance: tol,
        witness,
        verdict,
        warnings,
        details: vec![("epsilon".into(), epsilon), ("sup gamma(u)".into(), sup_gamma)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometries::GeometrySpec;
    use crate::quad::{build_grid, bump, Domain, Rule};

    fn instance(u: &str) -> ProblemInstance {
        let t = GeometrySpec::EuclideanWeighted { dimension: 1, log_weight: None }.make().unwrap();
        let grid = build_grid(&Domain::cube(1, 10.0).unwrap(), &[8], Rule::CompositeGaussLegendre { panels: 80 }).unwrap();
        let f = SmoothFunction::from_expression(crate::expr::parse_univariate("s - s^3", "s").unwrap());
        ProblemInstance::new(t, SmoothFunction::parse(u, 1).unwrap(), f, grid).unwrap()
    }

    #[test]
    fn tanh_certificate_holds() {
        let p = instance("tanh(x1/sqrt(2))");
        let tests = vec![bump(vec![0.0], 3.0), bump(vec![2.0], 1.0)];
        let r = poincare_certificate(&p, &tests, None, 1e-4, Hypotheses::verified(0.0, 1e-6, true)).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert!(r.left.iter().all(|l| l.abs() < 1e-5), "{r:?}");
        assert!(r.right.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn constant_gives_zero_sides() {
        let p = instance("0.5");
        let r = poincare_certificate(&p, &[bump(vec![1.0], 2.0)], Some(1e-6), 1e-9, Hypotheses::verified(0.0, 1e-6, true)).unwrap();
        assert_eq!(r.left, vec![0.0]);
        assert_eq!(r.right, vec![0.0]);
    }

    #[test]
    fn missing_hypotheses_give_no_verdict() {
        let p = instance("tanh(x1/sqrt(2))");
        let r = poincare_certificate(&p, &[bump(vec![0.0], 3.0)], None, 1e-4, Hypotheses::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Unverified);
        assert_eq!(r.warnings.len(), 2);
    }
}
