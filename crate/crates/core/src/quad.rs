//! Tensor-product quadrature on boxes, optionally against `e^η dx`, and the
//! cutoff sequence `ξ_k = Φ(d²/k²)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::function::SmoothFunction;
use crate::jet::{Jet, Point};
use crate::report::Witness;
use crate::series::Univariate;
use crate::triple::MarkovTriple;

/// One-dimensional rule, tensorized over the axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum Rule {
    Trapezoid,
    GaussLegendre,
    /// `panels` equal panels per axis, each with its own Gauss–Legendre rule.
    CompositeGaussLegendre { panels: usize },
}

/// An axis-aligned box `Π [lowerᵢ, upperᵢ]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Domain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidParameter("box bounds must be non-empty and of equal length".into()));
        }
        for (a, b) in lower.iter().zip(&upper) {
            if !a.is_finite() || !b.is_finite() || a >= b {
                return Err(Error::InvalidParameter(format!("degenerate box axis [{a}, {b}]")));
            }
        }
        Ok(Domain { lower, upper })
    }

    /// `[−half, half]ⁿ`.
    pub fn cube(n: usize, half: f64) -> Result<Self> {
        Domain::new(vec![-half; n], vec![half; n])
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (a, b))| *a <= *v && *v <= *b)
    }
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; count];
    let mut weights = vec![0.0; count];
    let n = count as f64;
    for i in 0..count.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(count, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(count, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[count - 1 - i] = x;
        weights[i] = w;
        weights[count - 1 - i] = w;
    }
    if count % 2 == 1 {
        nodes[count / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

fn axis_rule(a: f64, b: f64, count: usize, rule: Rule) -> Result<(Vec<f64>, Vec<f64>)> {
    if count < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 nodes per axis, got {count}")));
    }
    Ok(match rule {
        Rule::Trapezoid => {
            let h = (b - a) / (count - 1) as f64;
            let nodes = (0..count).map(|i| a + h * i as f64).collect();
            let weights = (0..count).map(|i| if i == 0 || i == count - 1 { h / 2.0 } else { h }).collect();
            (nodes, weights)
        }
        Rule::GaussLegendre => {
            let (x, w) = gauss_legendre(count);
            let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
            (x.iter().map(|t| mid + half * t).collect(), w.iter().map(|v| v * half).collect())
        }
        Rule::CompositeGaussLegendre { panels } => {
            if panels == 0 {
                return Err(Error::InvalidParameter("composite rule needs at least one panel".into()));
            }
            let (x, w) = gauss_legendre(count);
            let width = (b - a) / panels as f64;
            let mut nodes = Vec::with_capacity(panels * count);
            let mut weights = Vec::with_capacity(panels * count);
            for p in 0..panels {
                let lo = a + width * p as f64;
                let (mid, half) = (lo + width / 2.0, width / 2.0);
                nodes.extend(x.iter().map(|t| mid + half * t));
                weights.extend(w.iter().map(|v| v * half));
            }
            (nodes, weights)
        }
    })
}

/// Tensor-product nodes and weights, with cached `e^η` at the nodes.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    domain: Domain,
    rule: Rule,
    nodes_per_axis: Vec<usize>,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
    density: Option<Vec<f64>>,
    log_weight: Option<SmoothFunction>,
}

/// Builds the tensorized grid. For composite rules `nodes_per_axis` counts
/// nodes per panel.
pub fn build_grid(domain: &Domain, nodes_per_axis: &[usize], rule: Rule) -> Result<QuadratureGrid> {
    let n = domain.dimension();
    let counts: Vec<usize> = match nodes_per_axis.len() {
        1 => vec![nodes_per_axis[0]; n],
        len if len == n => nodes_per_axis.to_vec(),
        len => return Err(Error::DimensionMismatch { expected: n, found: len }),
    };
    let axes: Vec<(Vec<f64>, Vec<f64>)> =
        (0..n).map(|i| axis_rule(domain.lower[i], domain.upper[i], counts[i], rule)).collect::<Result<_>>()?;
    let total: usize = axes.iter().map(|a| a.0.len()).product();
    let mut nodes = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut index = vec![0usize; n];
    for _ in 0..total {
        nodes.push((0..n).map(|i| axes[i].0[index[i]]).collect());
        weights.push((0..n).map(|i| axes[i].1[index[i]]).product());
        for i in (0..n).rev() {
            index[i] += 1;
            if index[i] < axes[i].0.len() {
                break;
            }
            index[i] = 0;
        }
    }
    Ok(QuadratureGrid { domain: domain.clone(), rule, nodes_per_axis: counts, nodes, weights, density: None, log_weight: None })
}

impl QuadratureGrid {
    /// Caches `e^η` at every node.
    pub fn with_log_weight(mut self, eta: &SmoothFunction) -> Result<Self> {
        if eta.dimension() != self.domain.dimension() {
            return Err(Error::DimensionMismatch { expected: self.domain.dimension(), found: eta.dimension() });
        }
        let density: Vec<f64> = self.nodes.par_iter().map(|x| eta.value(x).map(f64::exp)).collect::<Result<_>>()?;
        if let Some(i) = density.iter().position(|d| !d.is_finite()) {
            return Err(Error::NonFinite { point: self.nodes[i].clone() });
        }
        self.density = Some(density);
        self.log_weight = Some(eta.clone());
        Ok(self)
    }

    /// Uses the triple's weight, if it declares one.
    pub fn for_triple(self, triple: &MarkovTriple) -> Result<Self> {
        match triple.log_weight() {
            Some(eta) => self.with_log_weight(eta),
            None => Ok(self),
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn rule(&self) -> Rule {
        self.rule
    }

    pub fn nodes_per_axis(&self) -> &[usize] {
        &self.nodes_per_axis
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `e^η` at each node (all ones when unweighted).
    pub fn density(&self, i: usize) -> f64 {
        self.density.as_ref().map_or(1.0, |d| d[i])
    }

    /// Node weights, multiplied by `e^η` when `weighted`.
    pub fn effective_weights(&self, weighted: bool) -> Vec<f64> {
        (0..self.len()).map(|i| if weighted { self.weights[i] * self.density(i) } else { self.weights[i] }).collect()
    }

    /// Values of `f` at every node, in node order.
    pub fn evaluate<F>(&self, f: F) -> Result<Vec<f64>>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let values: Vec<f64> = self.nodes.par_iter().map(|x| f(x)).collect::<Result<_>>()?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { point: self.nodes[i].clone() });
        }
        Ok(values)
    }

    /// `Σ wᵢ f(xᵢ)` (times `e^η(xᵢ)` when `weighted`), summed pairwise.
    pub fn integrate<F>(&self, f: F, weighted: bool) -> Result<f64>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let values = self.evaluate(f)?;
        Ok(self.sum_values(&values, weighted))
    }

    /// Quadrature sum of precomputed node values.
    pub fn sum_values(&self, values: &[f64], weighted: bool) -> f64 {
        let terms: Vec<f64> = values
            .iter()
            .enumerate()
            .map(|(i, v)| v * self.weights[i] * if weighted { self.density(i) } else { 1.0 })
            .collect();
        pairwise_sum(&terms)
    }

    /// Largest `e^η` over nodes projected onto the faces of the box, or `None`
    /// when unweighted.
    pub fn boundary_density(&self) -> Result<Option<f64>> {
        let Some(eta) = &self.log_weight else { return Ok(None) };
        let n = self.domain.dimension();
        let mut sup: f64 = 0.0;
        for axis in 0..n {
            for bound in [self.domain.lower[axis], self.domain.upper[axis]] {
                let values: Vec<f64> = self
                    .nodes
                    .par_iter()
                    .map(|x| {
                        let mut y = x.clone();
                        y[axis] = bound;
                        eta.value(&y).map(f64::exp)
                    })
                    .collect::<Result<_>>()?;
                sup = values.into_iter().fold(sup, f64::max);
            }
        }
        Ok(Some(sup))
    }
}

/// Pairwise (tree) summation; the result depends only on the input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// `((1 − |x − c|²/ρ²)₊)⁴`, a `C³` bump supported on the ball `B(c, ρ)`.
pub fn bump(center: Vec<f64>, rho: f64) -> SmoothFunction {
    let n = center.len();
    let label = format!("bump(c={center:?}, rho={rho})");
    SmoothFunction::from_fn(n, label, move |p, r| {
        let s: f64 = p.iter().zip(&center).map(|(x, c)| (x - c) * (x - c)).sum::<f64>() / (rho * rho);
        if s >= 1.0 {
            return Ok(Jet::zero(p, r));
        }
        let mut q = Jet::constant(1.0, p, r);
        for (i, c) in center.iter().enumerate() {
            let t = Jet::variable(i, p, r)?.add_constant(-c).scale(1.0 / rho);
            q = q.sub(&t.mul(&t)?)?;
        }
        q.compose_univariate(&Univariate::Powi(4))
    })
}

/// `Πᵢ (1 − tᵢ²)⁴` with `tᵢ` the affine map of axis `i` onto `[−1, 1]`;
/// vanishes to third order on the boundary of `domain`.
pub fn box_bump(domain: &Domain) -> SmoothFunction {
    let d = domain.clone();
    SmoothFunction::from_fn(d.dimension(), "box bump", move |p, r| {
        let mut acc = Jet::constant(1.0, p, r);
        for i in 0..d.dimension() {
            let (mid, half) = ((d.lower[i] + d.upper[i]) / 2.0, (d.upper[i] - d.lower[i]) / 2.0);
            if (p[i] - mid).abs() >= half {
                return Ok(Jet::zero(p, r));
            }
            let t = Jet::variable(i, p, r)?.add_constant(-mid).scale(1.0 / half);
            let factor = t.mul(&t)?.neg().add_constant(1.0).compose_univariate(&Univariate::Powi(4))?;
            acc = acc.mul(&factor)?;
        }
        Ok(acc)
    })
}

/// Distance surrogates for cutoff construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Distance {
    /// `√(|x|² + δ²)`.
    Euclidean { dimension: usize },
    /// `(Σ xᵢ^{2L/dᵢ} + δ^{2L})^{1/(2L)}` with `L = lcm(dᵢ)`.
    HomogeneousNorm { degrees: Vec<u32> },
}

/// Smoothing of the distance surrogates at the origin.
pub const DISTANCE_DELTA: f64 = 1e-6;

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 { a } else { gcd(b, a % b) }
}

impl Distance {
    pub fn dimension(&self) -> usize {
        match self {
            Distance::Euclidean { dimension } => *dimension,
            Distance::HomogeneousNorm { degrees } => degrees.len(),
        }
    }

    pub fn function(&self) -> Result<SmoothFunction> {
        match self {
            Distance::Euclidean { dimension } => {
                let n = *dimension;
                if n == 0 {
                    return Err(Error::InvalidParameter("distance dimension must be positive".into()));
                }
                Ok(SmoothFunction::from_fn(n, "sqrt(|x|^2 + delta^2)", move |p, r| {
                    let mut acc = Jet::constant(DISTANCE_DELTA * DISTANCE_DELTA, p, r);
                    for i in 0..n {
                        let x = Jet::variable(i, p, r)?;
                        acc = acc.add(&x.mul(&x)?)?;
                    }
                    acc.compose_univariate(&Univariate::Sqrt)
                }))
            }
            Distance::HomogeneousNorm { degrees } => {
                if degrees.is_empty() || degrees.contains(&0) {
                    return Err(Error::InvalidParameter("homogeneous degrees must be positive".into()));
                }
                let l = degrees.iter().fold(1, |acc, &d| acc / gcd(acc, d) * d);
                let exponents: Vec<i32> = degrees.iter().map(|d| (2 * l / d) as i32).collect();
                let n = degrees.len();
                let floor = DISTANCE_DELTA.powi(2 * l as i32);
                let outer = Univariate::Powf(1.0 / (2 * l) as f64);
                Ok(SmoothFunction::from_fn(n, format!("homogeneous norm (degrees {degrees:?})"), move |p: &Point, r| {
                    let mut acc = Jet::constant(floor, p, r);
                    for (i, e) in exponents.iter().enumerate() {
                        acc = acc.add(&Jet::variable(i, p, r)?.compose_univariate(&Univariate::Powi(*e))?)?;
                    }
                    acc.compose_univariate(&outer)
                }))
            }
        }
    }
}

/// `S(t) = 35t⁴ − 84t⁵ + 70t⁶ − 20t⁷`.
const SMOOTHSTEP: [f64; 8] = [0.0, 0.0, 0.0, 0.0, 35.0, -84.0, 70.0, -20.0];

/// Taylor coefficients of the profile `Φ(s) = 1 − S(8s − 1)` clamped to `[0, 1]`
/// outside `[1/8, 1/4]`.
fn profile_taylor(s: f64, order: usize) -> Vec<f64> {
    let t = 8.0 * s - 1.0;
    let mut out = vec![0.0; order + 1];
    if t <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    if t >= 1.0 {
        return out;
    }
    let mut scale = 1.0;
    for (j, slot) in out.iter_mut().enumerate() {
        // j-th Taylor coefficient of S at t, then chain rule through t = 8s − 1
        let mut c = 0.0;
        for (k, a) in SMOOTHSTEP.iter().enumerate().skip(j) {
            c += a * binomial(k, j) * t.powi((k - j) as i32);
        }
        *slot = -c * scale;
        scale *= 8.0;
    }
    out[0] += 1.0;
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// The profile `Φ` as a scalar map.
pub fn profile() -> Univariate {
    Univariate::custom("phi", |s, r| Ok(profile_taylor(s, r)))
}

/// `ξ_k = Φ(d²/k²)` for a distance surrogate `d`.
#[derive(Debug, Clone)]
pub struct CutoffSequence {
    distance: Distance,
    d: SmoothFunction,
}

impl CutoffSequence {
    pub fn new(distance: Distance) -> Result<Self> {
        let d = distance.function()?;
        Ok(CutoffSequence { distance, d })
    }

    pub fn distance(&self) -> &SmoothFunction {
        &self.d
    }

    pub fn xi(&self, k: u32) -> Result<SmoothFunction> {
        if k == 0 {
            return Err(Error::InvalidParameter("cutoff index must be positive".into()));
        }
        let inv = 1.0 / f64::from(k).powi(2);
        Ok(self.d.mul(&self.d)?.scale(inv).compose(profile()).with_label(format!("xi_{k}")))
    }

    /// `ξ_k` with its sampled `Γ` bounds on `points`.
    pub fn cutoff(&self, triple: &MarkovTriple, k: u32, points: &[Vec<f64>]) -> Result<(SmoothFunction, CutoffReport)> {
        if triple.dimension() != self.distance.dimension() {
            return Err(Error::DimensionMismatch { expected: triple.dimension(), found: self.distance.dimension() });
        }
        let xi = self.xi(k)?;
        let xi4 = xi.compose(Univariate::Powi(4));
        let kf = f64::from(k);
        let rows: Vec<[f64; 4]> = points
            .par_iter()
            .map(|x| {
                let v = xi.value(x)?;
                let g = triple.gamma(&xi, &xi, x)?;
                let g4 = triple.gamma(&xi4, &xi4, x)?;
                let gd = triple.gamma(&self.d, &self.d, x)?;
                Ok([v, g, g4 - 16.0 * v.powi(4) / kf, gd])
            })
            .collect::<Result<_>>()?;
        let mut report = CutoffReport {
            k,
            samples: points.len(),
            sup_gamma: 0.0,
            bound: 1.0 / kf,
            scaled_constant: 0.0,
            holds: true,
            fourth_power_excess: f64::NEG_INFINITY,
            fourth_power_holds: true,
            min_value: f64::INFINITY,
            max_value: f64::NEG_INFINITY,
            distance_gamma_sup: 0.0,
            witness: None,
        };
        for (i, [v, g, excess, gd]) in rows.iter().copied().enumerate() {
            report.min_value = report.min_value.min(v);
            report.max_value = report.max_value.max(v);
            report.fourth_power_excess = report.fourth_power_excess.max(excess);
            report.distance_gamma_sup = report.distance_gamma_sup.max(gd);
            if g > report.sup_gamma {
                report.sup_gamma = g;
                report.witness = Some(Witness { function: 0, label: Some(xi.label().into()), point_index: i, point: points[i].clone(), value: g });
            }
        }
        report.scaled_constant = report.sup_gamma * kf * kf;
        report.holds = report.sup_gamma <= report.bound + 1e-9;
        report.fourth_power_holds = report.fourth_power_excess <= 1e-9;
        Ok((xi, report))
    }
}

/// Sampled properties of one cutoff `ξ_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffReport {
    pub k: u32,
    pub samples: usize,
    /// Sampled `sup Γ(ξ_k)`.
    pub sup_gamma: f64,
    /// `1/k`.
    pub bound: f64,
    /// `k² · sup Γ(ξ_k)`.
    pub scaled_constant: f64,
    pub holds: bool,
    /// Sampled `sup [Γ(ξ_k⁴) − 16 ξ_k⁴ / k]`.
    pub fourth_power_excess: f64,
    pub fourth_power_holds: bool,
    pub min_value: f64,
    pub max_value: f64,
    /// Sampled `sup Γ(d)` of the distance surrogate.
    pub distance_gamma_sup: f64,
    pub witness: Option<Witness>,
}
