use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{point_data, PointData};
use crate::error::Result;
use crate::function::SmoothFunction;
use crate::report::{InequalityReport, Verdict, Witness};
use crate::sampling::random_polynomial_source;
use crate::triple::MarkovTriple;

struct Margins {
    m1: f64,
    m2: f64,
    /// `|m₂ − (4Γ(f) m₁ − Γ(Γ(f)))|`.
    agreement: f64,
    data: PointData,
}

fn margins(triple: &MarkovTriple, f: &SmoothFunction, x: &[f64], k: f64) -> Result<Margins> {
    let d = point_data(triple, f, x)?;
    let m1 = d.gamma2 - k * d.gamma;
    let m2 = 4.0 * d.gamma * d.gamma2 - 4.0 * k * d.gamma * d.gamma - d.gamma_gamma;
    let other = 4.0 * d.gamma * m1 - d.gamma_gamma;
    Ok(Margins { m1, m2, agreement: (m2 - other).abs() / 1f64.max(m2.abs()), data: d })
}

/// Samples `m₁ = Γ₂(f) − KΓ(f)` and `m₂ = 4Γ(f)(Γ₂(f) − KΓ(f)) − Γ(Γ(f))`.
///
/// A negative `m₁` refutes `CD(K,∞)`. The verdict is
/// [`Verdict::NoViolationFound`] when both margins stay above `−tol`.
pub fn cd_check(
    triple: &MarkovTriple,
    k: f64,
    functions: &[SmoothFunction],
    points: &[Vec<f64>],
    tol: f64,
) -> Result<InequalityReport> {
    let jobs: Vec<(usize, usize)> = (0..functions.len()).flat_map(|i| (0..points.len()).map(move |j| (i, j))).collect();
    let rows: Vec<Margins> =
        jobs.par_iter().map(|&(i, j)| margins(triple, &functions[i], &points[j], k)).collect::<Result<_>>()?;
    let mut report = InequalityReport {
        name: format!("CD({k},inf)"),
        left: Vec::new(),
        right: Vec::new(),
        margin: f64::INFINITY,
        tolerance: tol,
        witness: None,
        verdict: Verdict::NoViolationFound,
        warnings: Vec::new(),
        details: Vec::new(),
    };
    let (mut min1, mut min2, mut agreement) = (f64::INFINITY, f64::INFINITY, 0.0f64);
    for (&(i, j), r) in jobs.iter().zip(&rows) {
        min1 = min1.min(r.m1);
        min2 = min2.min(r.m2);
        agreement = agreement.max(r.agreement);
        let m = r.m1.min(r.m2);
        if m < report.margin {
            report.margin = m;
            report.left = vec![k * r.data.gamma, r.data.gamma_gamma];
            report.right = vec![r.data.gamma2, 4.0 * r.data.gamma * (r.data.gamma2 - k * r.data.gamma)];
            report.witness = Some(Witness {
                function: i,
                label: Some(functions[i].label().into()),
                point_index: j,
                point: points[j].clone(),
                value: m,
            });
        }
    }
    if jobs.is_empty() {
        report.margin = 0.0;
    }
    if report.margin < -tol {
        report.verdict = Verdict::Violated;
    }
    report.details = vec![("min m1".into(), min1), ("min m2".into(), min2), ("two-path agreement".into(), agreement)];
    Ok(report)
}

/// Random search for a violation of `m₁ ≥ 0` among quadratic and cubic
/// polynomials; stops at the first violating trial.
pub fn cd_random_search(
    triple: &MarkovTriple,
    k: f64,
    trials: usize,
    points: &[Vec<f64>],
    seed: u64,
    tol: f64,
) -> Result<(InequalityReport, usize)> {
    let n = triple.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last = None;
    for trial in 0..trials {
        let degree = 2 + (trial % 2) as u32;
        let source = random_polynomial_source(&mut rng, n, degree, 4);
        let f = SmoothFunction::parse(&source, n).expect("generated polynomial parses");
        let mut report = cd_check(triple, k, std::slice::from_ref(&f), points, tol)?;
        if let Some(w) = &mut report.witness {
            w.function = trial;
        }
        if report.verdict == Verdict::Violated {
            return Ok((report, trial + 1));
        }
        last = Some(report);
    }
    let mut report = last.unwrap_or_else(|| InequalityReport {
        name: format!("CD({k},inf)"),
        left: Vec::new(),
        right: Vec::new(),
        margin: 0.0,
        tolerance: tol,
        witness: None,
        verdict: Verdict::NoViolationFound,
        warnings: Vec::new(),
        details: Vec::new(),
    });
    report.warnings.push(format!("no violation in {trials} random trials"));
    Ok((report, trials))
}
