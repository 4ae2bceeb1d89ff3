//! Structured verdicts with worst-case witnesses.

use serde::Serialize;

/// Location of the worst residual or margin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    /// Index of the sample function (or test function, or trial).
    pub function: usize,
    /// Description of the function, when one is available.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub point_index: usize,
    pub point: Vec<f64>,
    /// The residual or margin observed there.
    pub value: f64,
}

/// One identity checked over a sample set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityEntry {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Reported for reference only; does not affect the overall verdict.
    pub informational: bool,
    pub witness: Option<Witness>,
    pub evaluations: usize,
    pub skipped: usize,
}

impl IdentityEntry {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        IdentityEntry {
            name: name.into(),
            max_residual: 0.0,
            tolerance,
            passed: true,
            informational: false,
            witness: None,
            evaluations: 0,
            skipped: 0,
        }
    }

    pub fn informational(mut self) -> Self {
        self.informational = true;
        self
    }

    /// Records one residual; ties keep the earliest witness.
    pub fn record(&mut self, residual: f64, witness: impl FnOnce() -> Witness) {
        self.evaluations += 1;
        let worse = if residual.is_nan() { !self.max_residual.is_nan() } else { residual > self.max_residual };
        if worse || (self.witness.is_none() && residual >= self.max_residual) {
            self.max_residual = residual;
            self.witness = Some(witness());
        }
        self.passed = !self.max_residual.is_nan() && self.max_residual <= self.tolerance;
    }

    pub fn skip(&mut self) {
        self.skipped += 1;
    }

    /// Merges another entry over a later range of samples.
    pub fn merge(&mut self, other: IdentityEntry) {
        self.evaluations += other.evaluations;
        self.skipped += other.skipped;
        let worse = if other.max_residual.is_nan() { !self.max_residual.is_nan() } else { other.max_residual > self.max_residual };
        if worse || (self.witness.is_none() && other.witness.is_some()) {
            self.max_residual = other.max_residual;
            self.witness = other.witness;
        }
        self.passed = !self.max_residual.is_nan() && self.max_residual <= self.tolerance;
    }
}

/// A set of identities checked together.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub name: String,
    pub entries: Vec<IdentityEntry>,
    pub passed: bool,
    pub notes: Vec<String>,
}

impl IdentityReport {
    pub fn new(name: impl Into<String>, entries: Vec<IdentityEntry>) -> Self {
        let passed = entries.iter().all(|e| e.informational || e.passed);
        IdentityReport { name: name.into(), entries, passed, notes: Vec::new() }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn entry(&self, name: &str) -> Option<&IdentityEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Largest residual over the entries that count toward the verdict.
    pub fn max_residual(&self) -> f64 {
        self.entries.iter().filter(|e| !e.informational).map(|e| e.max_residual).fold(0.0, f64::max)
    }
}

/// Outcome of an inequality check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// The inequality holds on every sample and its hypotheses were verified.
    Holds,
    /// No sampled violation; the statement is not proved.
    NoViolationFound,
    /// A concrete counterexample was found.
    Violated,
    /// Values were computed but the hypotheses could not be confirmed.
    Unverified,
}

impl Verdict {
    pub fn is_ok(self) -> bool {
        matches!(self, Verdict::Holds | Verdict::NoViolationFound)
    }
}

/// Left and right sides of an inequality `left ≤ right` (or a margin `≥ 0`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub name: String,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    /// Smallest `right − left` (or smallest margin) observed.
    pub margin: f64,
    pub tolerance: f64,
    pub witness: Option<Witness>,
    pub verdict: Verdict,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<(String, f64)>,
}

/// Stability certificate for a finite test space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub basis: String,
    pub basis_size: usize,
    pub quadrature_nodes: usize,
    /// Smallest eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    pub lambda_min: f64,
    pub tolerance: f64,
    pub stable: bool,
    pub verdict: String,
    /// Coefficients of the eigenvector of `lambda_min` when unstable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(i: usize, v: f64) -> Witness {
        Witness { function: i, label: None, point_index: 0, point: vec![], value: v }
    }

    #[test]
    fn entry_keeps_first_worst_witness() {
        let mut e = IdentityEntry::new("id", 1e-3);
        e.record(1e-4, || w(0, 1e-4));
        e.record(2e-4, || w(1, 2e-4));
        e.record(2e-4, || w(2, 2e-4));
        assert!(e.passed);
        assert_eq!(e.witness.as_ref().unwrap().function, 1);
        e.record(f64::NAN, || w(3, f64::NAN));
        assert!(!e.passed);
        assert_eq!(e.witness.as_ref().unwrap().function, 3);
        assert_eq!(e.evaluations, 4);
    }

    #[test]
    fn informational_entries_do_not_fail_reports() {
        let mut bad = IdentityEntry::new("extra", 0.0).informational();
        bad.record(1.0, || w(0, 1.0));
        let good = IdentityEntry::new("main", 1.0);
        let r = IdentityReport::new("r", vec![good, bad]);
        assert!(r.passed);
        assert_eq!(r.max_residual(), 0.0);
    }

    #[test]
    fn merge_is_order_stable() {
        let mut a = IdentityEntry::new("x", 1.0);
        a.record(0.5, || w(0, 0.5));
        let mut b = IdentityEntry::new("x", 1.0);
        b.record(0.5, || w(1, 0.5));
        a.merge(b);
        assert_eq!(a.witness.unwrap().function, 0);
        assert_eq!(a.evaluations, 2);
    }
}
