//! Sampled validation of the structural axioms of a carré du champ.

use rayon::prelude::*;

use super::{GeneralOperator, MarkovTriple};
use crate::error::Result;
use crate::function::SmoothFunction;
use crate::quad::{box_bump, QuadratureGrid};
use crate::report::{IdentityEntry, IdentityReport, Witness};
use crate::series::Univariate;

/// Operators whose carré du champ can be validated.
pub trait CarreDuChamp: Sync {
    fn dimension(&self) -> usize;
    fn label(&self) -> String;
    /// `Γ(f, g)` from its closed form.
    fn gamma_at(&self, f: &SmoothFunction, g: &SmoothFunction, x: &[f64]) -> Result<f64>;
    /// `½ [L(fg) − f Lg − g Lf]`.
    fn gamma_polarized(&self, f: &SmoothFunction, g: &SmoothFunction, x: &[f64]) -> Result<f64>;
    fn l_at(&self, f: &SmoothFunction, x: &[f64]) -> Result<f64>;
    /// Whether `∫Γ(f,g) dμ = −∫ g Lf dμ` is expected (and with which weight).
    fn symmetric_measure(&self) -> Option<Option<&SmoothFunction>>;
}

impl CarreDuChamp for MarkovTriple {
    fn dimension(&self) -> usize {
        MarkovTriple::dimension(self)
    }
    fn label(&self) -> String {
        self.name().to_string()
    }
    fn gamma_at(&self, f: &SmoothFunction, g: &SmoothFunction, x: &[f64]) -> Result<f64> {
        self.gamma(f, g, x)
    }
    fn gamma_polarized(&self, f: &SmoothFunction, g: &SmoothFunction, x: &[f64]) -> Result<f64> {
        let p = crate::jet::point(x);
        let local = self.local(&p, 2)?;
        let (fj, gj) = (f.jet(&p, 2)?, g.jet(&p, 2)?);
        let l_fg = local.l(&fj.mul(&gj)?)?.value();
        Ok(0.5 * (l_fg - fj.value() * local.l(&gj)?.value() - gj.value() * local.l(&fj)?.value()))
    }
    fn l_at(&self, f: &SmoothFunction, x: &[f64]) -> Result<f64> {
        self.operator_l(f, x)
    }
    fn symmetric_measure(&self) -> Option<Option<&SmoothFunction>> {
        Some(self.log_weight())
    }
}

impl CarreDuChamp for GeneralOperator {
    fn dimension(&self) -> usize {
        GeneralOperator::dimension(self)
    }
    fn label(&self) -> String {
        self.name().to_string()
    }
    fn gamma_at(&self, f: &SmoothFunction, g: &SmoothFunction, x: &[f64]) -> Result<f64> {
        self.gamma_closed_form(f, g, x)
    }
    fn gamma_polarized(&self, f: &SmoothFunction, g: &SmoothFunction, x: &[f64]) -> Result<f64> {
        self.gamma_from_l(f, g, x)
    }
    fn l_at(&self, f: &SmoothFunction, x: &[f64]) -> Result<f64> {
        self.apply(f, x)
    }
    fn symmetric_measure(&self) -> Option<Option<&SmoothFunction>> {
        None
    }
}

/// Tolerances for [`validate_axioms`].
#[derive(Debug, Clone, Copy)]
pub struct AxiomTolerances {
    /// Pointwise identities (relative residuals).
    pub pointwise: f64,
    /// Integration by parts (relative residual).
    pub integration: f64,
    /// How many sample pairs enter the integration-by-parts check.
    pub integration_pairs: usize,
}

impl AxiomTolerances {
    pub fn uniform(tol: f64) -> Self {
        AxiomTolerances { pointwise: tol, integration: tol, integration_pairs: 3 }
    }
}

const NAMES: [&str; 10] = [
    "symmetry",
    "bilinearity",
    "chain rule (cube)",
    "chain rule (tanh)",
    "chain rule (exp - 1)",
    "product rule",
    "square rule",
    "positivity",
    "polarization",
    "cauchy-schwarz",
];

fn scaled(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / 1f64.max(lhs.abs()).max(rhs.abs())
}

fn residuals<C: CarreDuChamp + ?Sized>(op: &C, f: &SmoothFunction, g: &SmoothFunction, x: &[f64]) -> Result<[f64; 10]> {
    let (a, b) = (0.7, -1.3);
    let fv = f.value(x)?;
    let gv = g.value(x)?;
    let gfg = op.gamma_at(f, g, x)?;
    let ggf = op.gamma_at(g, f, x)?;
    let gff = op.gamma_at(f, f, x)?;
    let ggg = op.gamma_at(g, g, x)?;

    let combo = f.scale(a).add(&g.scale(b))?;
    let bilinear = scaled(op.gamma_at(&combo, g, x)?, a * gfg + b * ggg);

    let cube = scaled(op.gamma_at(&f.compose(Univariate::Powi(3)), g, x)?, 3.0 * fv * fv * gfg);
    let th = fv.tanh();
    let tanh = scaled(op.gamma_at(&f.compose(Univariate::Tanh), g, x)?, (1.0 - th * th) * gfg);
    let expm1 = f.compose(Univariate::Exp).add(&SmoothFunction::constant(f.dimension(), -1.0))?;
    let exp = scaled(op.gamma_at(&expm1, g, x)?, fv.exp() * gfg);

    let product = scaled(op.gamma_at(&f.mul(g)?, f, x)?, fv * ggf + gv * gff);
    let square = scaled(op.gamma_at(&f.mul(f)?, &g.mul(g)?, x)?, 4.0 * fv * gv * gfg);
    let positivity = (-gff).max(-ggg).max(0.0);
    let polarization = scaled(gfg, op.gamma_polarized(f, g, x)?);
    let cs = if gff >= 0.0 && ggg >= 0.0 { (gfg.abs() - (gff * ggg).sqrt()).max(0.0) / 1f64.max(gfg.abs()) } else { 0.0 };
    Ok([scaled(gfg, ggf), bilinear, cube, tanh, exp, product, square, positivity, polarization, cs])
}

/// Checks the structural axioms of `op` on sample pairs at sample points.
///
/// With a grid, `∫Γ(f, gψ) dμ = −∫ gψ Lf dμ` is also checked for the first
/// pairs, `ψ` being a bump vanishing on the boundary of the grid box.
pub fn validate_axioms<C: CarreDuChamp + ?Sized>(
    op: &C,
    pairs: &[(SmoothFunction, SmoothFunction)],
    points: &[Vec<f64>],
    grid: Option<&QuadratureGrid>,
    tol: AxiomTolerances,
) -> Result<IdentityReport> {
    let mut entries: Vec<IdentityEntry> = NAMES.iter().map(|n| IdentityEntry::new(*n, tol.pointwise)).collect();
    let jobs: Vec<(usize, usize)> = (0..pairs.len()).flat_map(|i| (0..points.len()).map(move |j| (i, j))).collect();
    let rows: Vec<Option<[f64; 10]>> = jobs
        .par_iter()
        .map(|&(i, j)| residuals(op, &pairs[i].0, &pairs[i].1, &points[j]).ok())
        .collect();
    for (&(i, j), row) in jobs.iter().zip(&rows) {
        match row {
            Some(r) => {
                for (k, e) in entries.iter_mut().enumerate() {
                    let witness_fn = if k == 7 && op.gamma_at(&pairs[i].0, &pairs[i].0, &points[j]).map_or(false, |v| v >= 0.0) {
                        &pairs[i].1
                    } else {
                        &pairs[i].0
                    };
                    e.record(r[k], || Witness {
                        function: i,
                        label: Some(witness_fn.label().to_string()),
                        point_index: j,
                        point: points[j].clone(),
                        value: r[k],
                    });
                }
            }
            None => entries.iter_mut().for_each(IdentityEntry::skip),
        }
    }

    // Γ(f) ≈ 0 on all samples should force f to be constant
    let mut nondegenerate = IdentityEntry::new("nondegeneracy", tol.pointwise);
    let functions: Vec<&SmoothFunction> = pairs.iter().flat_map(|(f, g)| [f, g]).collect();
    for (k, f) in functions.iter().enumerate() {
        let stats: Vec<Option<(f64, f64)>> =
            points.par_iter().map(|x| Some((op.gamma_at(f, f, x).ok()?, f.value(x).ok()?))).collect();
        if stats.iter().any(Option::is_none) || points.is_empty() {
            nondegenerate.skip();
            continue;
        }
        let stats: Vec<(f64, f64)> = stats.into_iter().flatten().collect();
        let sup_gamma = stats.iter().map(|s| s.0.abs()).fold(0.0, f64::max);
        if sup_gamma >= tol.pointwise {
            nondegenerate.record(0.0, || Witness { function: k / 2, label: Some(f.label().into()), point_index: 0, point: points[0].clone(), value: 0.0 });
            continue;
        }
        let (lo, hi) = stats.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.1), hi.max(s.1)));
        let oscillation = hi - lo;
        nondegenerate.record(oscillation, || Witness { function: k / 2, label: Some(f.label().into()), point_index: 0, point: points[0].clone(), value: oscillation });
    }
    entries.push(nondegenerate);

    let mut notes = Vec::new();
    if let Some(grid) = grid {
        match op.symmetric_measure() {
            Some(eta) => {
                let mut ibp = IdentityEntry::new("integration by parts", tol.integration);
                let psi = box_bump(grid.domain());
                let weighted = eta.is_some();
                for (i, (f, g)) in pairs.iter().take(tol.integration_pairs).enumerate() {
                    let h = g.mul(&psi)?;
                    let lhs = grid.integrate(|x| op.gamma_at(f, &h, x), weighted);
                    let rhs = grid.integrate(|x| Ok(h.value(x)? * op.l_at(f, x)?), weighted);
                    match (lhs, rhs) {
                        (Ok(l), Ok(r)) => {
                            let res = scaled(l, -r);
                            ibp.record(res, || Witness { function: i, label: Some(f.label().into()), point_index: 0, point: Vec::new(), value: l + r });
                        }
                        _ => ibp.skip(),
                    }
                }
                entries.push(ibp);
            }
            None => notes.push("integration by parts not applicable: operator is not symmetric".to_string()),
        }
    }

    let mut report = IdentityReport::new(format!("structural axioms: {}", op.label()), entries);
    report.notes = notes;
    Ok(report)
}
