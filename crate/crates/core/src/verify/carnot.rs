use rayon::prelude::*;
use serde::Serialize;

use super::require;
use crate::error::Result;
use crate::fields::VectorField;
use crate::function::SmoothFunction;
use crate::geometries::GeometryKind;
use crate::jet::{point, Jet};
use crate::report::{IdentityEntry, IdentityReport, Witness};
use crate::triple::{LocalFrame, MarkovTriple};

fn scaled(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / 1f64.max(lhs.abs()).max(rhs.abs())
}

/// Horizontal Hessian `Mᵢⱼ = ZᵢZⱼu` from a local frame.
fn hessian(local: &LocalFrame, grad: &[Jet]) -> Result<Vec<Vec<Jet>>> {
    (0..local.frame_len()).map(|i| grad.iter().map(|g| local.z(i, g)).collect()).collect()
}

fn bracket_fields(frame: &[VectorField]) -> Result<(Vec<Vec<VectorField>>, Vec<Vec<VectorField>>)> {
    let m = frame.len();
    let mut single = Vec::with_capacity(m);
    let mut double = Vec::with_capacity(m);
    for i in 0..m {
        let row: Vec<VectorField> = (0..m).map(|j| frame[i].bracket(&frame[j])).collect::<Result<_>>()?;
        double.push(row.iter().map(|b| frame[i].bracket(b)).collect::<Result<Vec<_>>>()?);
        single.push(row);
    }
    Ok((single, double))
}

/// Residuals of
///
/// ```text
/// ½ Δ_Z |Zu|² = ‖Z²u‖² + Σⱼ Zⱼu Zⱼ(Δ_Z u) + 2 Σᵢⱼ Zⱼu [Zᵢ,Zⱼ]Zᵢu + Σᵢⱼ Zⱼu [Zᵢ,[Zᵢ,Zⱼ]]u
/// Γ₂(u)       = ‖Z²u‖² + R(u)
/// ```
///
/// with `R(u) = 2 Σ Zⱼu [Zᵢ,Zⱼ]Zᵢu + Σ Zⱼu [Zᵢ,[Zᵢ,Zⱼ]]u`. Requires `L = Σ Zⱼ²`
/// (a Carnot group or flat unweighted space).
pub fn bochner_carnot_check(triple: &MarkovTriple, u: &SmoothFunction, points: &[Vec<f64>], tol: f64) -> Result<IdentityReport> {
    require(triple.kind().is_carnot(), "bochner", "a carnot group or unweighted euclidean space")?;
    let (single, double) = bracket_fields(triple.frame())?;
    let m = triple.frame().len();
    let rows: Vec<Result<[f64; 3]>> = points
        .par_iter()
        .map(|x| {
            let p = point(x);
            let local = triple.local(&p, 3)?;
            let uj = u.jet(&p, 3)?;
            let grad = local.horizontal_gradient(&uj)?;
            let hess = hessian(&local, &grad)?;
            let norm_sq: f64 = hess.iter().flatten().map(|h| h.value().powi(2)).sum();
            let norm: f64 = norm_sq.sqrt();

            let mut grad_sq = Jet::zero(&p, 2);
            for g in &grad {
                grad_sq = grad_sq.add(&g.mul(g)?)?;
            }
            let lhs = 0.5 * local.sub_laplacian(&grad_sq)?.value();
            let lap = local.sub_laplacian(&uj)?;
            let transport: f64 = (0..m).map(|j| Ok(grad[j].value() * local.z(j, &lap)?.value())).sum::<Result<f64>>()?;

            let mut r = 0.0;
            for i in 0..m {
                let zi_u = &grad[i];
                for j in 0..m {
                    let b = single[i][j].coefficient_jets(&p, 1)?;
                    r += 2.0 * grad[j].value() * crate::fields::apply_jet(&b, &zi_u.truncate(2)?)?.value();
                    let bb = double[i][j].coefficient_jets(&p, 0)?;
                    r += grad[j].value() * crate::fields::apply_jet(&bb, &uj.truncate(1)?)?.value();
                }
            }
            let gamma2 = local.gamma2(&uj, &uj)?.value();
            let bochner = scaled(lhs, norm_sq + transport + r);
            let curvature = scaled(gamma2, norm_sq + r);
            let unsquared = scaled(gamma2, norm + r);
            Ok([bochner, curvature, unsquared])
        })
        .collect();
    let mut entries = vec![
        IdentityEntry::new("bochner formula", tol),
        IdentityEntry::new("gamma2 = |Z^2 u|^2 + R(u)", tol),
        IdentityEntry::new("gamma2 = |Z^2 u| + R(u) (unsquared norm)", tol).informational(),
    ];
    record_rows(&mut entries, &rows, u, points);
    Ok(IdentityReport::new("bochner identity", entries))
}

pub(super) fn record_rows<const K: usize>(
    entries: &mut [IdentityEntry],
    rows: &[Result<[f64; K]>],
    u: &SmoothFunction,
    points: &[Vec<f64>],
) {
    for (j, row) in rows.iter().enumerate() {
        match row {
            Ok(r) => {
                for (k, e) in entries.iter_mut().enumerate() {
                    e.record(r[k], || Witness { function: 0, label: Some(u.label().into()), point_index: j, point: points[j].clone(), value: r[k] });
                }
            }
            Err(_) => entries.iter_mut().for_each(IdentityEntry::skip),
        }
    }
}

/// Per-point quantities of the level-set decomposition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSetSample {
    pub point_index: usize,
    /// `|Zu|`.
    pub horizontal_gradient: f64,
    /// `h = Z₁ν₁ + Z₂ν₂`.
    pub h: f64,
    /// `p = −Z₃u/|Zu|`.
    pub p: f64,
    /// `p + ⟨(Hu)v, ν⟩/|Zu|`.
    pub tangential: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiliformReport {
    pub identity: IdentityReport,
    pub samples: Vec<LevelSetSample>,
    /// Points with `|Zu|` below the floor.
    pub skipped: usize,
}

/// Residual on `{Zu ≠ 0}` of
///
/// ```text
/// ‖Z²u‖² − ⟨(H_Z u)ν, ν⟩ = |Zu|² [h² + (p + ⟨(Hu)v, ν⟩/|Zu|)²]
/// ```
///
/// with `Mᵢⱼ = ZᵢZⱼu`, `H_Z u = M Mᵀ`, `Hu = M`, `ν = Zu/|Zu|`,
/// `v = (Z₂u, −Z₁u)/|Zu|`, `h = Z₁ν₁ + Z₂ν₂`, `p = −Z₃u/|Zu|` and
/// `Z₃ = [Z₂, Z₁]`. The symmetrized Hessian `(M + Mᵀ)/2` is reported alongside.
pub fn filiform_levelset_check(
    triple: &MarkovTriple,
    u: &SmoothFunction,
    points: &[Vec<f64>],
    floor: f64,
    tol: f64,
) -> Result<FiliformReport> {
    require(matches!(triple.kind(), GeometryKind::Filiform { .. }), "filiform", "a filiform geometry")?;
    let z3 = triple.frame()[1].bracket(&triple.frame()[0])?;
    let rows: Vec<Result<Option<([f64; 2], LevelSetSample)>>> = points
        .par_iter()
        .enumerate()
        .map(|(index, x)| {
            let p = point(x);
            let local = triple.local(&p, 3)?;
            let uj = u.jet(&p, 3)?;
            let grad = local.horizontal_gradient(&uj)?;
            let g = (grad[0].value().powi(2) + grad[1].value().powi(2)).sqrt();
            if !(g > floor) {
                return Ok(None);
            }
            let norm = grad[0].mul(&grad[0])?.add(&grad[1].mul(&grad[1])?)?.compose_univariate(&crate::series::Univariate::Sqrt)?;
            let nu_jets = [grad[0].div(&norm)?, grad[1].div(&norm)?];
            let h = local.z(0, &nu_jets[0])?.value() + local.z(1, &nu_jets[1])?.value();
            let z3u = crate::fields::apply_jet(&z3.coefficient_jets(&p, 1)?, &uj.truncate(2)?)?.value();
            let pp = -z3u / g;
            let nu = [grad[0].value() / g, grad[1].value() / g];
            let v = [grad[1].value() / g, -grad[0].value() / g];
            let hess = hessian(&local, &grad)?;
            let raw = [[hess[0][0].value(), hess[0][1].value()], [hess[1][0].value(), hess[1][1].value()]];
            let sym = [[raw[0][0], 0.5 * (raw[0][1] + raw[1][0])], [0.5 * (raw[0][1] + raw[1][0]), raw[1][1]]];
            let side = |mm: [[f64; 2]; 2]| {
                let norm_sq: f64 = mm.iter().flatten().map(|a| a * a).sum();
                // |Mᵀν|² = ⟨M Mᵀ ν, ν⟩
                let mt_nu = [mm[0][0] * nu[0] + mm[1][0] * nu[1], mm[0][1] * nu[0] + mm[1][1] * nu[1]];
                let lhs = norm_sq - mt_nu[0].powi(2) - mt_nu[1].powi(2);
                let mv = [mm[0][0] * v[0] + mm[0][1] * v[1], mm[1][0] * v[0] + mm[1][1] * v[1]];
                let tangential = pp + (nu[0] * mv[0] + nu[1] * mv[1]) / g;
                let rhs = g * g * (h * h + tangential * tangential);
                (scaled(lhs, rhs), tangential)
            };
            let (raw_res, tangential) = side(raw);
            let (sym_res, _) = side(sym);
            Ok(Some(([raw_res, sym_res], LevelSetSample { point_index: index, horizontal_gradient: g, h, p: pp, tangential })))
        })
        .collect();
    let mut entries = vec![
        IdentityEntry::new("level-set identity", tol),
        IdentityEntry::new("level-set identity (symmetrized hessian)", tol).informational(),
    ];
    let mut samples = Vec::new();
    let mut skipped = 0;
    for (j, row) in rows.into_iter().enumerate() {
        match row {
            Ok(Some((r, sample))) => {
                for (k, e) in entries.iter_mut().enumerate() {
                    e.record(r[k], || Witness { function: 0, label: Some(u.label().into()), point_index: j, point: points[j].clone(), value: r[k] });
                }
                samples.push(sample);
            }
            Ok(None) => {
                skipped += 1;
                entries.iter_mut().for_each(IdentityEntry::skip);
            }
            Err(_) => entries.iter_mut().for_each(IdentityEntry::skip),
        }
    }
    let identity = IdentityReport::new("filiform level-set decomposition", entries)
        .with_note(format!("{skipped} points skipped with |Zu| <= {floor:e}"));
    Ok(FiliformReport { identity, samples, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::geometries::GeometrySpec;
    use crate::sampling::random_polynomials;

    fn pts(n: usize, count: usize) -> Vec<Vec<f64>> {
        (0..count).map(|k| (0..n).map(|i| ((k * 7 + i * 3) % 11) as f64 / 5.0 - 1.0).collect()).collect()
    }

    #[test]
    fn heisenberg_bochner() {
        let t = GeometrySpec::Heisenberg.make().unwrap();
        let u = SmoothFunction::parse("x1^2*x2 + x3", 3).unwrap();
        let r = bochner_carnot_check(&t, &u, &pts(3, 20), 1e-8).unwrap();
        assert!(r.passed, "{r:#?}");
        let x = SmoothFunction::parse("x1", 3).unwrap();
        let r = bochner_carnot_check(&t, &x, &pts(3, 5), 1e-12).unwrap();
        assert!(r.passed);
        assert_eq!(t.gamma2(&x, &x, &[0.3, 0.1, 0.2]).unwrap(), 0.0);
    }

    #[test]
    fn engel_random_cubics() {
        let t = GeometrySpec::Engel.make().unwrap();
        for u in random_polynomials(4, 5, 3, 21) {
            let r = bochner_carnot_check(&t, &u, &pts(4, 10), 1e-7).unwrap();
            assert!(r.passed, "{r:#?}");
        }
    }

    #[test]
    fn non_carnot_is_rejected() {
        let t = GeometrySpec::Grushin { alpha: 1 }.make().unwrap();
        let u = SmoothFunction::parse("x1", 2).unwrap();
        assert!(matches!(bochner_carnot_check(&t, &u, &pts(2, 2), 1e-8), Err(Error::WrongGeometry { .. })));
        let ou = GeometrySpec::OrnsteinUhlenbeck { dimension: 2 }.make().unwrap();
        assert!(bochner_carnot_check(&ou, &u, &pts(2, 2), 1e-8).is_err());
    }

    #[test]
    fn affine_level_sets() {
        let t = GeometrySpec::Filiform { dimension: 3 }.make().unwrap();
        let u = SmoothFunction::parse("x1", 3).unwrap();
        let r = filiform_levelset_check(&t, &u, &pts(3, 6), 1e-6, 1e-12).unwrap();
        assert!(r.identity.passed);
        for s in &r.samples {
            assert_eq!(s.h, 0.0);
            assert_eq!(s.p, 0.0);
        }
    }

    #[test]
    fn random_cubic_level_sets() {
        let t = GeometrySpec::Filiform { dimension: 3 }.make().unwrap();
        for u in random_polynomials(3, 5, 3, 4) {
            let r = filiform_levelset_check(&t, &u, &pts(3, 30), 1e-6, 1e-9).unwrap();
            assert!(r.identity.passed, "{:#?}", r.identity);
        }
    }

    #[test]
    fn critical_points_are_skipped() {
        let t = GeometrySpec::Filiform { dimension: 4 }.make().unwrap();
        let u = SmoothFunction::parse("x1^2 + x2^2", 4).unwrap();
        let points = vec![vec![0.0, 0.0, 1.0, 2.0], vec![0.5, 0.5, 0.0, 0.0], vec![0.0, 0.0, -1.0, 0.3]];
        let r = filiform_levelset_check(&t, &u, &points, 1e-6, 1e-9).unwrap();
        assert_eq!(r.skipped, 2);
        assert_eq!(r.samples.len(), 1);
    }
}
