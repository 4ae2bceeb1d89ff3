use rayon::prelude::*;
use serde::Serialize;

use super::{point_data, regularized, PointData, ProblemInstance};
use crate::error::Result;
use crate::report::Witness;

/// Diagnostics for the rigidity conclusions: `Γ(u) ≡ 0` when `K > 0`, and
/// `Γ₂(u) = Γ(√Γ(u))` when `K = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RigidityReport {
    pub curvature: f64,
    pub epsilon: f64,
    /// Quadrature value of `∫Γ(u) dμ` over the grid box.
    pub energy: f64,
    pub sup_gamma: f64,
    pub mean_gamma: f64,
    /// Sampled `sup |Γ₂(u) − Γ(Γ(u))/(4(Γ(u)+ε))|`.
    pub sup_defect: f64,
    /// Smallest `4Γ(u)Γ₂(u) − Γ(Γ(u)) − 4K Γ(u)²`.
    pub lower_bound_margin: f64,
    pub lower_bound_witness: Option<Witness>,
    /// Largest disagreement between `4Γ(u)(Γ₂(u) − Γ(Γ(u))/(4Γ(u)))` and
    /// `4Γ(u)Γ₂(u) − Γ(Γ(u))` where `Γ(u) > 0`.
    pub two_path_agreement: f64,
    pub status: String,
}

/// Evaluates the diagnostics at `points` and the energy on the grid.
pub fn rigidity_report(p: &ProblemInstance, k: f64, points: &[Vec<f64>], epsilon: Option<f64>, tol: f64) -> Result<RigidityReport> {
    let data: Vec<PointData> = points.par_iter().map(|x| point_data(&p.triple, &p.u, x)).collect::<Result<_>>()?;
    let sup_gamma = data.iter().map(|d| d.gamma).fold(0.0, f64::max);
    let mean_gamma = if data.is_empty() { 0.0 } else { data.iter().map(|d| d.gamma).sum::<f64>() / data.len() as f64 };
    let epsilon = epsilon.unwrap_or(1e-8 * (1.0 + sup_gamma));
    let weighted = p.triple.log_weight().is_some();
    let energy = p.grid.integrate(|x| p.triple.gamma(&p.u, &p.u, x), weighted)?;

    let mut sup_defect = 0.0f64;
    let mut margin = f64::INFINITY;
    let mut witness = None;
    let mut agreement = 0.0f64;
    for (i, d) in data.iter().enumerate() {
        sup_defect = sup_defect.max((d.gamma2 - regularized(d, epsilon)).abs());
        let direct = 4.0 * d.gamma * d.gamma2 - d.gamma_gamma;
        if d.gamma > 0.0 {
            let factored = 4.0 * d.gamma * (d.gamma2 - d.gamma_gamma / (4.0 * d.gamma));
            agreement = agreement.max((factored - direct).abs() / 1f64.max(direct.abs()));
        }
        let m = direct - 4.0 * k * d.gamma * d.gamma;
        if m < margin {
            margin = m;
            witness = Some(Witness { function: 0, label: Some(p.u.label().into()), point_index: i, point: points[i].clone(), value: m });
        }
    }
    if data.is_empty() {
        margin = 0.0;
    }
    let status = if margin >= -tol { "consistent" } else { "hypothesis inconsistent" };
    Ok(RigidityReport {
        curvature: k,
        epsilon,
        energy,
        sup_gamma,
        mean_gamma,
        sup_defect,
        lower_bound_margin: margin,
        lower_bound_witness: witness,
        two_path_agreement: agreement,
        status: status.into(),
    })
}
