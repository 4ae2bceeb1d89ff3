//! Execution of the individual checks.

use carre::quad::{bump, CutoffSequence, Domain};
use carre::report::{IdentityReport, Verdict};
use carre::sampling::{halton_points, random_pairs, random_polynomials};
use carre::triple::{validate_axioms, AxiomTolerances};
use carre::verify::{
    bochner_carnot_check, cd_check, cd_random_search, filiform_levelset_check, grushin_gamma2_check, poincare_certificate,
    residual, rigidity_report, stability_spectrum, Hypotheses, ProblemInstance,
};
use carre::{hormander_depth, SmoothFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{cutoff_distance, RunConfig, Setup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Holds,
    NoViolationFound,
    Violated,
    Warning,
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Holds => "holds",
            Status::NoViolationFound => "no violation found",
            Status::Violated => "violated",
            Status::Warning => "warning",
            Status::Error => "error",
        }
    }

    /// Exit status contributed by a single check.
    pub fn code(self) -> u8 {
        match self {
            Status::Holds | Status::NoViolationFound => 0,
            Status::Violated => 2,
            Status::Warning => 3,
            Status::Error => 1,
        }
    }
}

/// Exit status of a run: errors first, then violations, then warnings.
pub fn exit_code(statuses: &[Status]) -> u8 {
    [Status::Error, Status::Violated, Status::Warning]
        .into_iter()
        .find(|s| statuses.contains(s))
        .map_or(0, Status::code)
}

/// One CSV row: a sample point and its margin (negative means failing).
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub point: Vec<f64>,
    pub margin: f64,
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub check: String,
    pub status: Status,
    pub summary: String,
    pub report: Value,
    pub rows: Vec<Row>,
}

type Outcome = carre::Result<(Status, String, Value, Vec<Row>)>;

pub fn run_check(name: &str, config: &RunConfig, setup: &Setup) -> CheckOutcome {
    let result = match name {
        "residual" => check_residual(config, setup),
        "axioms" => check_axioms(config, setup),
        "stability" => check_stability(config, setup),
        "poincare" => check_poincare(config, setup),
        "cd" => check_cd(config, setup),
        "bochner" => check_identities(config, setup, Identity::Bochner),
        "grushin" => check_identities(config, setup, Identity::Grushin),
        "filiform" => check_identities(config, setup, Identity::Filiform),
        "rigidity" => check_rigidity(config, setup),
        "hormander" => check_hormander(config, setup),
        "cutoff" => check_cutoff(config, setup),
        other => unreachable!("unvalidated check {other}"),
    };
    let (status, summary, report, rows) = match result {
        Ok(r) => r,
        Err(e) => (Status::Error, e.to_string(), json!({ "error": e.to_string() }), Vec::new()),
    };
    CheckOutcome { check: name.into(), status, summary, report, rows }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn instance(setup: &Setup) -> carre::Result<ProblemInstance> {
    ProblemInstance::new(
        setup.triple.clone(),
        setup.u.clone().expect("validated problem"),
        setup.nonlinearity.clone().expect("validated problem"),
        setup.grid.clone().expect("validated grid"),
    )
}

/// Random bumps with supports inside `domain`.
fn test_bumps(domain: &Domain, count: usize, seed: u64) -> Vec<SmoothFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = (0..domain.dimension()).map(|i| domain.upper[i] - domain.lower[i]).fold(f64::INFINITY, f64::min);
    (0..count)
        .map(|_| {
            let rho = width * rng.gen_range(0.05..0.25);
            let center = (0..domain.dimension()).map(|i| rng.gen_range(domain.lower[i] + rho..domain.upper[i] - rho)).collect();
            bump(center, rho)
        })
        .collect()
}

fn per_point<F>(points: &[Vec<f64>], margin: F) -> carre::Result<Vec<Row>>
where
    F: Fn(&[Vec<f64>]) -> carre::Result<f64> + Sync,
{
    points
        .par_iter()
        .map(|x| Ok(Row { point: x.clone(), margin: margin(std::slice::from_ref(x))? }))
        .collect()
}

fn identity_margin(report: &IdentityReport, tol: f64) -> f64 {
    let worst = report.entries.iter().filter(|e| !e.informational).map(|e| e.max_residual).fold(0.0, f64::max);
    tol - worst
}

fn check_residual(config: &RunConfig, setup: &Setup) -> Outcome {
    let p = instance(setup)?;
    let tol = config.tolerances.residual;
    let tests = test_bumps(p.grid.domain(), config.samples.tests, config.seed.wrapping_add(3));
    let r = residual(&p, &setup.points, &tests)?;
    let status = if r.max() < tol { Status::Holds } else { Status::Warning };
    let summary = format!("pointwise {:.3e}, weak {:.3e} (tol {tol:e})", r.pointwise_sup, r.weak_sup);
    let rows = per_point(&setup.points, |x| {
        let lu = p.triple.operator_l(&p.u, &x[0])?;
        let (f, _) = p.f_and_derivative(p.u.value(&x[0])?)?;
        Ok(tol - (lu + f).abs())
    })?;
    Ok((status, summary, to_value(&r), rows))
}

fn check_axioms(config: &RunConfig, setup: &Setup) -> Outcome {
    let n = setup.triple.dimension();
    let tol = config.tolerances.axioms;
    let pairs = random_pairs(n, config.samples.functions, config.samples.degree, config.seed.wrapping_add(1));
    let r = validate_axioms(&setup.triple, &pairs, &setup.points, setup.grid.as_ref(), AxiomTolerances::uniform(tol))?;
    let status = if r.passed { Status::Holds } else { Status::Violated };
    let failing: Vec<&str> = r.entries.iter().filter(|e| !e.passed && !e.informational).map(|e| e.name.as_str()).collect();
    let summary = if failing.is_empty() {
        format!("{} axioms, max residual {:.3e}", r.entries.len(), r.max_residual())
    } else {
        format!("failing: {}", failing.join(", "))
    };
    let rows = per_point(&setup.points, |x| {
        Ok(identity_margin(&validate_axioms(&setup.triple, &pairs, x, None, AxiomTolerances::uniform(tol))?, tol))
    })?;
    Ok((status, summary, to_value(&r), rows))
}

fn check_stability(config: &RunConfig, setup: &Setup) -> Outcome {
    let p = instance(setup)?;
    let r = stability_spectrum(&p, config.stability.basis_per_axis, config.tolerances.stability)?;
    let status = if r.stable { Status::Holds } else { Status::Violated };
    let summary = format!("lambda_min {:.6e} over {} bumps ({})", r.lambda_min, r.basis_size, r.verdict);
    Ok((status, summary, to_value(&r), Vec::new()))
}

fn check_poincare(config: &RunConfig, setup: &Setup) -> Outcome {
    let p = instance(setup)?;
    let tests = test_bumps(p.grid.domain(), config.samples.tests, config.seed.wrapping_add(3));
    let res = residual(&p, &setup.points, &tests)?;
    let spectrum = stability_spectrum(&p, config.stability.basis_per_axis, config.tolerances.stability)?;
    let hyp = Hypotheses::verified(res.max(), config.tolerances.residual, spectrum.stable);
    let r = poincare_certificate(&p, &tests, config.poincare.epsilon, config.tolerances.poincare, hyp)?;
    let status = match r.verdict {
        Verdict::Holds | Verdict::NoViolationFound => Status::Holds,
        Verdict::Violated => Status::Violated,
        Verdict::Unverified => Status::Warning,
    };
    let mut summary = format!("margin {:.3e} over {} test functions", r.margin, tests.len());
    for w in &r.warnings {
        summary.push_str("; ");
        summary.push_str(w);
    }
    let report = json!({
        "certificate": to_value(&r),
        "hypotheses": { "residual": to_value(&res), "lambda_min": spectrum.lambda_min, "stable": spectrum.stable },
    });
    Ok((status, summary, report, Vec::new()))
}

fn check_cd(config: &RunConfig, setup: &Setup) -> Outcome {
    let n = setup.triple.dimension();
    let k = config.cd.curvature;
    let tol = config.tolerances.cd;
    let seed = config.seed.wrapping_add(2);
    let (r, functions, trials) = match config.cd.mode.as_str() {
        "search" => {
            let (r, used) = cd_random_search(&setup.triple, k, config.cd.trials, &setup.points, seed, tol)?;
            let witness = r.witness.as_ref().and_then(|w| w.label.as_deref()).and_then(|l| SmoothFunction::parse(l, n).ok());
            (r, witness.into_iter().collect::<Vec<_>>(), Some(used))
        }
        "sample" => {
            let fs = random_polynomials(n, config.samples.functions, config.samples.degree, seed);
            (cd_check(&setup.triple, k, &fs, &setup.points, tol)?, fs, None)
        }
        other => return Err(carre::Error::InvalidParameter(format!("unknown cd mode `{other}`"))),
    };
    let status = if r.verdict == Verdict::Violated { Status::Violated } else { Status::NoViolationFound };
    let mut summary = format!("{}: margin {:.3e}", r.name, r.margin);
    if let Some(t) = trials {
        summary.push_str(&format!(" after {t} trials"));
    }
    if let (Status::Violated, Some(w)) = (status, &r.witness) {
        summary.push_str(&format!("; witness {} at {:?}", w.label.as_deref().unwrap_or("?"), w.point));
    }
    let rows = if functions.is_empty() {
        Vec::new()
    } else {
        per_point(&setup.points, |x| Ok(cd_check(&setup.triple, k, &functions, x, tol)?.margin))?
    };
    let report = json!({ "check": to_value(&r), "trials": trials });
    Ok((status, summary, report, rows))
}

#[derive(Clone, Copy)]
enum Identity {
    Bochner,
    Grushin,
    Filiform,
}

fn check_identities(config: &RunConfig, setup: &Setup, which: Identity) -> Outcome {
    let n = setup.triple.dimension();
    let functions = match &setup.u {
        Some(u) => vec![u.clone()],
        None => random_polynomials(n, config.samples.functions, config.samples.degree, config.seed.wrapping_add(4)),
    };
    let tol = match which {
        Identity::Bochner => config.tolerances.bochner,
        Identity::Grushin => config.tolerances.grushin,
        Identity::Filiform => config.tolerances.filiform,
    };
    let run = |u: &SmoothFunction, points: &[Vec<f64>]| -> carre::Result<(IdentityReport, Value)> {
        Ok(match which {
            Identity::Bochner => {
                let r = bochner_carnot_check(&setup.triple, u, points, tol)?;
                let v = to_value(&r);
                (r, v)
            }
            Identity::Grushin => {
                let r = grushin_gamma2_check(
                    &setup.triple,
                    u,
                    setup.nonlinearity.as_ref(),
                    points,
                    tol,
                    config.grushin.solution_gate,
                )?;
                let v = to_value(&r);
                (r, v)
            }
            Identity::Filiform => {
                let r = filiform_levelset_check(&setup.triple, u, points, config.filiform.floor, tol)?;
                let v = to_value(&r);
                (r.identity, v)
            }
        })
    };
    let mut reports = Vec::with_capacity(functions.len());
    let mut passed = true;
    let mut worst = 0.0f64;
    for u in &functions {
        let (r, v) = run(u, &setup.points)?;
        passed &= r.passed;
        worst = worst.max(tol - identity_margin(&r, tol));
        reports.push(json!({ "function": u.label(), "report": v }));
    }
    let status = if passed { Status::Holds } else { Status::Violated };
    let summary = format!("{} function{}, max residual {worst:.3e} (tol {tol:e})", functions.len(), if functions.len() == 1 { "" } else { "s" });
    let rows = per_point(&setup.points, |x| {
        let mut margin = f64::INFINITY;
        for u in &functions {
            margin = margin.min(identity_margin(&run(u, x)?.0, tol));
        }
        Ok(margin)
    })?;
    Ok((status, summary, Value::Array(reports), rows))
}

fn check_rigidity(config: &RunConfig, setup: &Setup) -> Outcome {
    let p = instance(setup)?;
    let (k, eps, tol) = (config.rigidity.curvature, config.rigidity.epsilon, config.tolerances.rigidity);
    let r = rigidity_report(&p, k, &setup.points, eps, tol)?;
    let status = if r.status == "consistent" { Status::Holds } else { Status::Warning };
    let summary = format!(
        "K = {k}: {}; sup gamma {:.3e}, sup defect {:.3e}, lower-bound margin {:.3e}",
        r.status, r.sup_gamma, r.sup_defect, r.lower_bound_margin
    );
    let epsilon = Some(r.epsilon);
    let rows = per_point(&setup.points, |x| Ok(rigidity_report(&p, k, x, epsilon, tol)?.lower_bound_margin))?;
    Ok((status, summary, to_value(&r), rows))
}

fn check_hormander(config: &RunConfig, setup: &Setup) -> Outcome {
    let h = &config.hormander;
    let r = hormander_depth(setup.triple.frame(), &setup.points, h.max_depth, config.tolerances.hormander)?;
    let ok = match (r.depth, h.expected_depth) {
        (Some(d), Some(e)) => d == e,
        (Some(_), None) => true,
        (None, _) => false,
    };
    let status = if ok { Status::Holds } else { Status::Violated };
    let depth = r.depth.map_or("none".to_string(), |d| d.to_string());
    let mut summary = format!("depth {depth} on {} samples ({})", setup.points.len(), r.scope);
    let mut report = to_value(&r);
    if setup.triple.log_weight().is_some() {
        let mut frame = setup.triple.frame().to_vec();
        frame.push(setup.triple.drift_field());
        let d = hormander_depth(&frame, &setup.points, h.max_depth, config.tolerances.hormander)?;
        let with_drift = d.depth.map_or("none".to_string(), |d| d.to_string());
        summary.push_str(&format!("; with Z0: depth {with_drift}"));
        report["with_drift"] = to_value(&d);
    }
    Ok((status, summary, report, Vec::new()))
}

fn check_cutoff(config: &RunConfig, setup: &Setup) -> Outcome {
    let n = setup.triple.dimension();
    let distance = cutoff_distance(setup.triple.kind()).expect("validated geometry");
    let seq = CutoffSequence::new(distance)?;
    let mut reports = Vec::new();
    let mut ok = true;
    let mut parts = Vec::new();
    for &k in &config.cutoff.k {
        let reach = 1.2 * f64::from(k);
        let mut points = halton_points(&Domain::cube(n, reach)?, config.samples.points, config.seed.wrapping_add(5));
        points.extend((0..=400).map(|i| {
            let mut x = vec![0.0; n];
            x[0] = reach * f64::from(i) / 400.0;
            x
        }));
        let (_, r) = seq.cutoff(&setup.triple, k, &points)?;
        ok &= r.holds && r.fourth_power_holds;
        parts.push(format!("k={k}: sup {:.3e} vs {:.3e}", r.sup_gamma, r.bound));
        reports.push(to_value(&r));
    }
    let status = if ok { Status::Holds } else { Status::Violated };
    Ok((status, parts.join(", "), Value::Array(reports), Vec::new()))
}
