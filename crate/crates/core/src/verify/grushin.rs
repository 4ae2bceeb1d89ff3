use rayon::prelude::*;

use super::carnot::record_rows;
use crate::error::{Error, Result};
use crate::fields::apply_jet;
use crate::function::SmoothFunction;
use crate::geometries::GeometryKind;
use crate::jet::point;
use crate::report::{IdentityEntry, IdentityReport};
use crate::triple::MarkovTriple;

fn scaled(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / 1f64.max(lhs.abs()).max(rhs.abs())
}

const FREE: [&str; 6] = [
    "commutation Z1",
    "commutation Z2 (as displayed)",
    "commutation Z2 (with [Z1,Z3]u)",
    "gamma2 (as displayed)",
    "gamma2 (with Z2u [Z1,Z3]u)",
    "gamma2 (unsquared norm)",
];

const GATED: [&str; 3] = ["gradient of equation Z1", "gradient of equation Z2", "gamma(u, Lu) = -F'(u)|Zu|^2"];

/// Grushin identities with `Z₃ = [Z₁, Z₂]`:
///
/// ```text
/// Δ_Z Z₁u = Z₁Δ_Z u − 2Z₃Z₂u
/// Δ_Z Z₂u = Z₂Δ_Z u + 2Z₃Z₁u + [Z₁,Z₃]u
/// Γ₂(u)   = ‖Z²u‖² − 2Z₁uZ₃Z₂u + 2Z₂uZ₃Z₁u + Z₂u[Z₁,Z₃]u
/// ```
///
/// The forms without the `[Z₁,Z₃]` terms (exact for `α = 1`) are reported as
/// well, informationally when `α ≥ 2`. When `nonlinearity` is given and the
/// sampled residual of `Δ_Z u + F(u) = 0` is below `solution_gate`, the
/// identities `ZᵢΔ_Z u = −F'(u)Zᵢu` and `Γ(u, Δ_Z u) = −F'(u)|Zu|²` are checked.
pub fn grushin_gamma2_check(
    triple: &MarkovTriple,
    u: &SmoothFunction,
    nonlinearity: Option<&SmoothFunction>,
    points: &[Vec<f64>],
    tol: f64,
    solution_gate: f64,
) -> Result<IdentityReport> {
    let GeometryKind::Grushin { alpha } = triple.kind() else {
        return Err(Error::WrongGeometry { check: "grushin", required: "a grushin geometry" });
    };
    let frame = triple.frame();
    let z3 = frame[0].bracket(&frame[1])?;
    let z13 = frame[0].bracket(&z3)?;

    let rows: Vec<Result<[f64; 6]>> = points
        .par_iter()
        .map(|x| {
            let p = point(x);
            let local = triple.local(&p, 3)?;
            let uj = u.jet(&p, 3)?;
            let z1u = local.z(0, &uj)?;
            let z2u = local.z(1, &uj)?;
            let lap = local.sub_laplacian(&uj)?;
            let z3c = z3.coefficient_jets(&p, 1)?;
            let z3_z1u = apply_jet(&z3c, &z1u)?.value();
            let z3_z2u = apply_jet(&z3c, &z2u)?.value();
            let z13u = apply_jet(&z13.coefficient_jets(&p, 0)?, &uj.truncate(1)?)?.value();

            let lap_z1u = local.sub_laplacian(&z1u)?.value();
            let lap_z2u = local.sub_laplacian(&z2u)?.value();
            let z1_lap = local.z(0, &lap)?.value();
            let z2_lap = local.z(1, &lap)?.value();

            let hess = [local.z(0, &z1u)?, local.z(0, &z2u)?, local.z(1, &z1u)?, local.z(1, &z2u)?];
            let norm_sq: f64 = hess.iter().map(|h| h.value().powi(2)).sum();
            let gamma2 = local.gamma2(&uj, &uj)?.value();
            let (a, b) = (z1u.value(), z2u.value());
            let displayed = -2.0 * a * z3_z2u + 2.0 * b * z3_z1u;
            Ok([
                scaled(lap_z1u, z1_lap - 2.0 * z3_z2u),
                scaled(lap_z2u, z2_lap + 2.0 * z3_z1u),
                scaled(lap_z2u, z2_lap + 2.0 * z3_z1u + z13u),
                scaled(gamma2, norm_sq + displayed),
                scaled(gamma2, norm_sq + displayed + b * z13u),
                scaled(gamma2, norm_sq.sqrt() + displayed + b * z13u),
            ])
        })
        .collect();
    let mut entries: Vec<IdentityEntry> = FREE.iter().map(|n| IdentityEntry::new(*n, tol)).collect();
    if alpha >= 2 {
        entries[1].informational = true;
        entries[3].informational = true;
    }
    entries[5].informational = true;
    record_rows(&mut entries, &rows, u, points);

    let mut notes = vec![format!("alpha = {alpha}; [Z1,Z3] = alpha(alpha-1) x^(alpha-2) dy")];
    if let Some(f) = nonlinearity {
        let equation: Vec<Result<f64>> =
            points.par_iter().map(|x| Ok((triple.operator_l(u, x)? + f.value(&[u.value(x)?])?).abs())).collect();
        let sup = equation.iter().map(|r| r.as_ref().copied().unwrap_or(f64::NAN)).fold(0.0, f64::max);
        let sup = if equation.iter().any(|r| r.is_err()) { f64::NAN } else { sup };
        if sup < solution_gate {
            let rows: Vec<Result<[f64; 3]>> = points
                .par_iter()
                .map(|x| {
                    let p = point(x);
                    let local = triple.local(&p, 3)?;
                    let uj = u.jet(&p, 3)?;
                    let fj = f.jet(&point(&[uj.value()]), 1)?;
                    let fp = fj.coefficients()[1];
                    let lap = local.sub_laplacian(&uj)?;
                    let zu = local.horizontal_gradient(&uj)?;
                    let z_lap = [local.z(0, &lap)?.value(), local.z(1, &lap)?.value()];
                    let (a, b) = (zu[0].value(), zu[1].value());
                    let gamma = local.gamma(&uj.truncate(2)?, &lap)?.value();
                    Ok([scaled(z_lap[0], -fp * a), scaled(z_lap[1], -fp * b), scaled(gamma, -fp * (a * a + b * b))])
                })
                .collect();
            let mut gated: Vec<IdentityEntry> = GATED.iter().map(|n| IdentityEntry::new(*n, tol)).collect();
            record_rows(&mut gated, &rows, u, points);
            entries.extend(gated);
            notes.push(format!("solution residual {sup:e} below gate {solution_gate:e}"));
        } else {
            notes.push(format!("solution-gated identities skipped: residual {sup:e} not below gate {solution_gate:e}"));
        }
    }
    let mut report = IdentityReport::new("grushin gamma2 identities", entries);
    report.notes = notes;
    Ok(report)
}
