//! Vector fields as first-order operators, Lie brackets, and Hörmander
//! bracket-generation checks.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::function::SmoothFunction;
use crate::jet::{Jet, Point};

type FieldFn = dyn Fn(&Point, usize) -> Result<Vec<Jet>> + Send + Sync;

enum FieldRepr {
    Coefficients(Vec<SmoothFunction>),
    Bracket(VectorField, VectorField),
    Derived(Box<FieldFn>),
}

/// `Z = Σᵢ Zⁱ ∂ᵢ` on `ℝⁿ`.
#[derive(Clone)]
pub struct VectorField {
    dimension: usize,
    repr: Arc<FieldRepr>,
    label: Arc<str>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorField({}; n={})", self.label, self.dimension)
    }
}

impl VectorField {
    pub fn new(coefficients: Vec<SmoothFunction>, label: impl Into<String>) -> Result<Self> {
        let dimension = coefficients.len();
        if dimension == 0 {
            return Err(Error::InvalidParameter("vector field needs at least one coefficient".into()));
        }
        for c in &coefficients {
            if c.dimension() != dimension {
                return Err(Error::DimensionMismatch { expected: dimension, found: c.dimension() });
            }
        }
        Ok(VectorField { dimension, repr: Arc::new(FieldRepr::Coefficients(coefficients)), label: Arc::from(label.into()) })
    }

    /// The coordinate field `∂ᵢ` (zero-based `i`).
    pub fn coordinate(dimension: usize, i: usize) -> Self {
        let coefficients =
            (0..dimension).map(|k| SmoothFunction::constant(dimension, if k == i { 1.0 } else { 0.0 })).collect();
        VectorField::new(coefficients, format!("d{}", i + 1)).expect("valid coordinate field")
    }

    /// A field whose coefficient jets are produced by a closure.
    pub fn from_fn<F>(dimension: usize, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&Point, usize) -> Result<Vec<Jet>> + Send + Sync + 'static,
    {
        VectorField { dimension, repr: Arc::new(FieldRepr::Derived(Box::new(f))), label: Arc::from(label.into()) }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Arc::from(label.into());
        self
    }

    /// Jets of all `n` coefficients at `point`.
    pub fn coefficient_jets(&self, point: &Point, order: usize) -> Result<Vec<Jet>> {
        if point.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, found: point.len() });
        }
        match &*self.repr {
            FieldRepr::Coefficients(cs) => cs.iter().map(|c| c.jet(point, order)).collect(),
            FieldRepr::Bracket(a, b) => {
                // each bracket consumes one derivative order of its parents
                let ja = a.coefficient_jets(point, order + 1)?;
                let jb = b.coefficient_jets(point, order + 1)?;
                (0..self.dimension)
                    .map(|i| apply_jet(&ja, &jb[i])?.sub(&apply_jet(&jb, &ja[i])?))
                    .collect()
            }
            FieldRepr::Derived(f) => {
                let jets = f(point, order)?;
                if jets.len() != self.dimension {
                    return Err(Error::DimensionMismatch { expected: self.dimension, found: jets.len() });
                }
                Ok(jets)
            }
        }
    }

    /// The `i`-th coefficient as a smooth function (zero-based).
    pub fn coefficient(&self, i: usize) -> SmoothFunction {
        if let FieldRepr::Coefficients(cs) = &*self.repr {
            return cs[i].clone();
        }
        let field = self.clone();
        SmoothFunction::from_fn(self.dimension, format!("{}[{}]", self.label, i + 1), move |p, r| {
            Ok(field.coefficient_jets(p, r)?.swap_remove(i))
        })
    }

    /// Coefficient values at `x`.
    pub fn values(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.coefficient_jets(&Point::from(x), 0)?.iter().map(Jet::value).collect())
    }

    /// Jet of order `order - 1` of `Zf`, from `f` expanded to `order`.
    pub fn apply(&self, f: &SmoothFunction, point: &Point, order: usize) -> Result<Jet> {
        if order == 0 {
            return Err(Error::OrderExhausted { needed: 1, available: 0 });
        }
        let coeffs = self.coefficient_jets(point, order - 1)?;
        apply_jet(&coeffs, &f.jet(point, order)?)
    }

    /// `Zf` as a smooth function.
    pub fn applied_to(&self, f: &SmoothFunction) -> SmoothFunction {
        let (z, f2) = (self.clone(), f.clone());
        SmoothFunction::from_fn(self.dimension, format!("{}({})", self.label, f.label()), move |p, r| {
            z.apply(&f2, p, r + 1)
        })
    }

    /// The Lie bracket `[self, other]`, with coefficients `A(Bⁱ) − B(Aⁱ)`.
    pub fn bracket(&self, other: &VectorField) -> Result<VectorField> {
        if self.dimension != other.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, found: other.dimension });
        }
        Ok(VectorField {
            dimension: self.dimension,
            repr: Arc::new(FieldRepr::Bracket(self.clone(), other.clone())),
            label: Arc::from(format!("[{},{}]", self.label, other.label)),
        })
    }
}

/// `Σᵢ cᵢ ∂ᵢ f` on jets: `f` of order `r`, coefficients of order `≥ r − 1`;
/// the result has order `r − 1`.
pub fn apply_jet(coefficients: &[Jet], f: &Jet) -> Result<Jet> {
    let r = f.order();
    if r == 0 {
        return Err(Error::OrderExhausted { needed: 1, available: 0 });
    }
    if coefficients.len() != f.dimension() {
        return Err(Error::DimensionMismatch { expected: f.dimension(), found: coefficients.len() });
    }
    let mut acc = Jet::zero(f.point(), r - 1);
    for (i, c) in coefficients.iter().enumerate() {
        if c.coefficients().iter().all(|&v| v == 0.0) {
            continue;
        }
        let c = c.truncate(r - 1)?;
        acc = acc.add(&c.mul(&f.partial(i)?)?)?;
    }
    Ok(acc)
}

/// An iterated bracket of frame elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BracketTree {
    Leaf(usize),
    Bracket(Box<BracketTree>, Box<BracketTree>),
}

impl BracketTree {
    pub fn depth(&self) -> usize {
        match self {
            BracketTree::Leaf(_) => 1,
            BracketTree::Bracket(a, b) => a.depth() + b.depth(),
        }
    }

    pub fn realize(&self, frame: &[VectorField]) -> Result<VectorField> {
        match self {
            BracketTree::Leaf(i) => {
                frame.get(*i).cloned().ok_or(Error::IndexOutOfRange { index: *i, dimension: frame.len() })
            }
            BracketTree::Bracket(a, b) => a.realize(frame)?.bracket(&b.realize(frame)?),
        }
    }
}

impl fmt::Display for BracketTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BracketTree::Leaf(i) => write!(f, "Z{}", i + 1),
            BracketTree::Bracket(a, b) => write!(f, "[{a},{b}]"),
        }
    }
}

/// Outcome of a sampled Hörmander rank check.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct HormanderReport {
    pub dimension: usize,
    pub max_depth: usize,
    pub tolerance: f64,
    /// Smallest depth that spans at every sample, if any.
    pub depth: Option<usize>,
    /// Per-sample spanning depth.
    pub point_depths: Vec<Option<usize>>,
    /// Index of the hardest sample: largest depth (or failure), then lowest
    /// rank, then lowest index.
    pub worst_point: usize,
    /// Rank reached at the worst sample with every bracket up to `max_depth`.
    pub achieved_rank: usize,
    pub brackets_per_depth: Vec<usize>,
    /// The condition is only ever verified on the supplied samples.
    pub scope: &'static str,
}

/// Left-normed brackets `[Z_i, B]` grouped by depth, `1..=max_depth`.
pub fn bracket_trees(frame_len: usize, max_depth: usize) -> Vec<Vec<BracketTree>> {
    let mut levels: Vec<Vec<BracketTree>> = vec![(0..frame_len).map(BracketTree::Leaf).collect()];
    for _ in 1..max_depth {
        let prev = levels.last().expect("non-empty");
        let mut next = Vec::new();
        for i in 0..frame_len {
            for b in prev {
                if *b == BracketTree::Leaf(i) {
                    continue;
                }
                next.push(BracketTree::Bracket(Box::new(BracketTree::Leaf(i)), Box::new(b.clone())));
            }
        }
        levels.push(next);
    }
    levels
}

/// Smallest depth `d ≤ max_depth` whose brackets span `ℝⁿ` at every point.
pub fn hormander_depth(frame: &[VectorField], points: &[Vec<f64>], max_depth: usize, tol: f64) -> Result<HormanderReport> {
    if max_depth == 0 {
        return Err(Error::InvalidParameter("max_depth must be at least 1".into()));
    }
    if points.is_empty() {
        return Err(Error::InvalidParameter("at least one sample point is required".into()));
    }
    let n = frame.first().ok_or_else(|| Error::InvalidParameter("empty frame".into()))?.dimension();
    let levels = bracket_trees(frame.len(), max_depth);
    let fields: Vec<Vec<VectorField>> = levels
        .iter()
        .map(|lvl| lvl.iter().map(|t| t.realize(frame)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    let per_point: Vec<(Option<usize>, usize)> = points
        .par_iter()
        .map(|x| -> Result<(Option<usize>, usize)> {
            let p = Point::from(x.as_slice());
            let mut vectors: Vec<Vec<f64>> = Vec::new();
            let mut rank = 0;
            for (d, lvl) in fields.iter().enumerate() {
                for z in lvl {
                    vectors.push(z.coefficient_jets(&p, 0)?.iter().map(Jet::value).collect());
                }
                rank = numerical_rank(&vectors, n, tol);
                if rank == n {
                    return Ok((Some(d + 1), rank));
                }
            }
            Ok((None, rank))
        })
        .collect::<Result<_>>()?;

    let mut worst = 0;
    for (k, &(d, r)) in per_point.iter().enumerate() {
        let (wd, wr) = per_point[worst];
        let key = |d: Option<usize>| d.unwrap_or(usize::MAX);
        if key(d) > key(wd) || (key(d) == key(wd) && r < wr) {
            worst = k;
        }
    }
    let point_depths: Vec<Option<usize>> = per_point.iter().map(|&(d, _)| d).collect();
    let depth = point_depths.iter().try_fold(0usize, |acc, d| d.map(|d| acc.max(d)));
    Ok(HormanderReport {
        dimension: n,
        max_depth,
        tolerance: tol,
        depth,
        point_depths,
        worst_point: worst,
        achieved_rank: per_point[worst].1,
        brackets_per_depth: levels.iter().map(Vec::len).collect(),
        scope: "verified on samples",
    })
}

/// Rank by pivoted Gram–Schmidt; a pivot counts when its residual norm exceeds
/// `tol` times the largest input norm.
pub fn numerical_rank(vectors: &[Vec<f64>], n: usize, tol: f64) -> usize {
    let scale = vectors.iter().map(|v| norm(v)).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let threshold = tol * scale;
    let mut work: Vec<Vec<f64>> = vectors.to_vec();
    let mut rank = 0;
    while rank < n && !work.is_empty() {
        let (best, best_norm) = work
            .iter()
            .enumerate()
            .map(|(k, v)| (k, norm(v)))
            .fold((0, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if best_norm <= threshold {
            break;
        }
        let q: Vec<f64> = work.swap_remove(best).iter().map(|c| c / best_norm).collect();
        for v in &mut work {
            let dot: f64 = v.iter().zip(&q).map(|(a, b)| a * b).sum();
            for (vi, qi) in v.iter_mut().zip(&q) {
                *vi -= dot * qi;
            }
        }
        rank += 1;
    }
    rank
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::point;
    use approx::assert_abs_diff_eq;

    fn heisenberg() -> (VectorField, VectorField) {
        let c = |s: &str| SmoothFunction::parse(s, 3).unwrap();
        let x = VectorField::new(vec![c("1"), c("0"), c("-x2/2")], "X").unwrap();
        let y = VectorField::new(vec![c("0"), c("1"), c("x1/2")], "Y").unwrap();
        (x, y)
    }

    #[test]
    fn apply_to_coordinate() {
        let (x, _) = heisenberg();
        let t = SmoothFunction::coordinate(3, 2);
        let j = x.apply(&t, &point(&[1.0, 1.0, 0.0]), 1).unwrap();
        assert_abs_diff_eq!(j.value(), -0.5);
        // oracle: central difference along the flow direction
        let h = 1e-6;
        let dir = x.values(&[1.0, 1.0, 0.0]).unwrap();
        let fd = ((0.0 + h * dir[2]) - (0.0 - h * dir[2])) / (2.0 * h);
        assert_abs_diff_eq!(j.value(), fd, epsilon = 1e-9);
    }

    #[test]
    fn constant_is_annihilated() {
        let (x, _) = heisenberg();
        let c = SmoothFunction::constant(3, 4.0);
        let j = x.apply(&c, &point(&[0.3, -0.2, 1.0]), 3).unwrap();
        assert!(j.coefficients().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn heisenberg_bracket_is_vertical() {
        let (x, y) = heisenberg();
        let t = x.bracket(&y).unwrap();
        for k in 0..50 {
            let p = [(k as f64 * 0.37).sin() * 3.0, (k as f64 * 0.11).cos() * 2.0, k as f64 * 0.05];
            let v = t.values(&p).unwrap();
            assert_abs_diff_eq!(v[0], 0.0);
            assert_abs_diff_eq!(v[1], 0.0);
            assert_abs_diff_eq!(v[2], 1.0);
        }
    }

    #[test]
    fn self_bracket_vanishes() {
        let (x, _) = heisenberg();
        let v = x.bracket(&x).unwrap().values(&[0.5, 0.7, 0.9]).unwrap();
        assert!(v.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn grushin_bracket() {
        let z1 = VectorField::coordinate(2, 0);
        let z2 = VectorField::new(
            vec![SmoothFunction::constant(2, 0.0), SmoothFunction::parse("x1^2", 2).unwrap()],
            "Z2",
        )
        .unwrap();
        let z3 = z1.bracket(&z2).unwrap();
        for x in [-1.5, -0.2, 0.0, 0.7, 2.0] {
            let v = z3.values(&[x, 0.3]).unwrap();
            assert_abs_diff_eq!(v[0], 0.0);
            assert_abs_diff_eq!(v[1], 2.0 * x, epsilon = 1e-14);
        }
    }

    #[test]
    fn single_direction_never_spans_the_plane() {
        let d = VectorField::coordinate(2, 0);
        let report = hormander_depth(&[d], &[vec![0.0, 0.0], vec![1.0, 1.0]], 4, 1e-9).unwrap();
        assert_eq!(report.depth, None);
        assert_eq!(report.achieved_rank, 1);
    }

    #[test]
    fn heisenberg_depth_two() {
        let (x, y) = heisenberg();
        let pts: Vec<Vec<f64>> = (0..50).map(|k| vec![k as f64 * 0.1 - 2.5, (k as f64).sin(), (k as f64).cos()]).collect();
        let report = hormander_depth(&[x, y], &pts, 4, 1e-9).unwrap();
        assert_eq!(report.depth, Some(2));
        assert!(report.point_depths.iter().all(|d| *d == Some(2)));
    }

    #[test]
    fn rank_of_dependent_vectors() {
        let v = vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0], vec![0.0, 1.0, 0.0]];
        assert_eq!(numerical_rank(&v, 3, 1e-9), 2);
        assert_eq!(numerical_rank(&[], 3, 1e-9), 0);
    }

    #[test]
    fn jacobi_identity_on_polynomial_fields() {
        let c = |s: &str| SmoothFunction::parse(s, 3).unwrap();
        let a = VectorField::new(vec![c("x2^2"), c("x1*x3"), c("1")], "A").unwrap();
        let b = VectorField::new(vec![c("x3"), c("x1^2 - x2"), c("x1*x2")], "B").unwrap();
        let cc = VectorField::new(vec![c("1 + x1*x2*x3"), c("x3^2"), c("x2")], "C").unwrap();
        let j1 = a.bracket(&b.bracket(&cc).unwrap()).unwrap();
        let j2 = b.bracket(&cc.bracket(&a).unwrap()).unwrap();
        let j3 = cc.bracket(&a.bracket(&b).unwrap()).unwrap();
        for k in 0..20 {
            let p = [(k as f64 * 0.7).sin(), (k as f64 * 1.3).cos(), k as f64 * 0.05 - 0.5];
            let s: Vec<f64> = (0..3)
                .map(|i| j1.values(&p).unwrap()[i] + j2.values(&p).unwrap()[i] + j3.values(&p).unwrap()[i])
                .collect();
            assert!(s.iter().all(|v| v.abs() < 1e-8), "{s:?}");
        }
    }

    #[test]
    fn bracket_tree_depths() {
        let levels = bracket_trees(2, 3);
        assert_eq!(levels[0].len(), 2);
        assert!(levels[2].iter().all(|t| t.depth() == 3));
        assert_eq!(levels[1][0].to_string(), "[Z1,Z2]");
    }
}
