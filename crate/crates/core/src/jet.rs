//! Truncated multivariate Taylor polynomials.
//!
//! A [`Jet`] of order `r` in `n` variables stores the coefficients
//! `∂^α f(p) / α!` for every multi-index `α` with `|α| ≤ r`, in graded
//! lexicographic order: by total degree first, then lexicographically with
//! the exponent of `x1` most significant. For `n = 2, r = 2` the order is
//! `(0,0) (1,0) (0,1) (2,0) (1,1) (0,2)`.
//!
//! Because coefficients are divided by `α!`, the product of two jets is a
//! plain truncated convolution, and composition with a scalar map is a
//! Horner evaluation of its Taylor series.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::series::Univariate;

/// Base point shared by every jet evaluated at the same location.
pub type Point = Arc<[f64]>;

/// Default truncation order.
pub const DEFAULT_ORDER: usize = 4;

/// Multi-index bookkeeping for a fixed `(n, r)`.
pub(crate) struct Layout {
    n: usize,
    order: usize,
    indices: Vec<Box<[u16]>>,
    lookup: HashMap<Box<[u16]>, usize>,
    /// Offsets of the first multi-index of each degree, plus a final sentinel.
    degree_start: Vec<usize>,
    /// `(a, b, c)` with `α_a + α_b = α_c` and `|α_c| ≤ r`.
    products: Vec<(u32, u32, u32)>,
    /// `shift[i][k]` is the index of `α_k + e_i`, for `|α_k| < r`.
    shift: Vec<Vec<u32>>,
    factorials: Vec<f64>,
}

impl Layout {
    fn build(n: usize, order: usize) -> Layout {
        let mut indices: Vec<Box<[u16]>> = Vec::new();
        let mut degree_start = Vec::with_capacity(order + 2);
        for d in 0..=order {
            degree_start.push(indices.len());
            let mut current = vec![0u16; n];
            enumerate_degree(&mut current, 0, d, &mut indices);
        }
        degree_start.push(indices.len());

        let lookup: HashMap<Box<[u16]>, usize> =
            indices.iter().enumerate().map(|(k, a)| (a.clone(), k)).collect();

        let mut products = Vec::new();
        let mut sum = vec![0u16; n];
        for (a, alpha) in indices.iter().enumerate() {
            let da: usize = alpha.iter().map(|&e| e as usize).sum();
            for (b, beta) in indices.iter().enumerate() {
                let db: usize = beta.iter().map(|&e| e as usize).sum();
                if da + db > order {
                    // later betas only get larger degree
                    break;
                }
                for i in 0..n {
                    sum[i] = alpha[i] + beta[i];
                }
                let c = lookup[sum.as_slice()];
                products.push((a as u32, b as u32, c as u32));
            }
        }

        let lower = if order == 0 { 0 } else { degree_start[order] };
        let mut shift = vec![Vec::with_capacity(lower); n];
        for alpha in indices.iter().take(lower) {
            for (i, row) in shift.iter_mut().enumerate() {
                let mut up = alpha.to_vec();
                up[i] += 1;
                row.push(lookup[up.as_slice()] as u32);
            }
        }

        let factorials = indices
            .iter()
            .map(|alpha| alpha.iter().map(|&e| factorial(e as usize)).product())
            .collect();

        Layout { n, order, indices, lookup, degree_start, products, shift, factorials }
    }

    pub(crate) fn len(&self) -> usize {
        self.indices.len()
    }

    /// Number of coefficients of total degree `≤ order`.
    fn prefix_len(&self, order: usize) -> usize {
        self.degree_start[order + 1]
    }
}

fn enumerate_degree(current: &mut Vec<u16>, pos: usize, remaining: usize, out: &mut Vec<Box<[u16]>>) {
    let n = current.len();
    if pos == n - 1 {
        current[pos] = remaining as u16;
        out.push(current.clone().into_boxed_slice());
        current[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e as u16;
        enumerate_degree(current, pos + 1, remaining - e, out);
    }
    current[pos] = 0;
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

pub(crate) fn layout(n: usize, order: usize) -> Arc<Layout> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Layout>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("jet layout cache poisoned");
    guard.entry((n, order)).or_insert_with(|| Arc::new(Layout::build(n, order))).clone()
}

/// Number of coefficients of a jet: `C(n + r, r)`.
pub fn coefficient_count(n: usize, order: usize) -> usize {
    let mut c: u128 = 1;
    for k in 1..=order as u128 {
        c = c * (n as u128 + k) / k;
    }
    c as usize
}

/// Truncated Taylor expansion of a smooth function at a base point.
#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    point: Point,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("order", &self.layout.order)
            .field("point", &&*self.point)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl Jet {
    pub fn zero(point: &Point, order: usize) -> Jet {
        let layout = layout(point.len(), order);
        let coeffs = vec![0.0; layout.len()];
        Jet { layout, point: point.clone(), coeffs }
    }

    pub fn constant(value: f64, point: &Point, order: usize) -> Jet {
        let mut jet = Jet::zero(point, order);
        jet.coeffs[0] = value;
        jet
    }

    /// The coordinate function `x ↦ x[index]` (zero-based index).
    pub fn variable(index: usize, point: &Point, order: usize) -> Result<Jet> {
        let n = point.len();
        if index >= n {
            return Err(Error::IndexOutOfRange { index, dimension: n });
        }
        let mut jet = Jet::constant(point[index], point, order);
        if order >= 1 {
            jet.coeffs[1 + index] = 1.0;
        }
        Ok(jet)
    }

    /// Builds a jet from a coefficient table in graded lexicographic order.
    pub fn from_coefficients(point: &Point, order: usize, coeffs: Vec<f64>) -> Result<Jet> {
        let layout = layout(point.len(), order);
        if coeffs.len() != layout.len() {
            return Err(Error::DimensionMismatch { expected: layout.len(), found: coeffs.len() });
        }
        Ok(Jet { layout, point: point.clone(), coeffs })
    }

    pub fn dimension(&self) -> usize {
        self.layout.n
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn point(&self) -> &Point {
        &self.point
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Multi-indices in storage order.
    pub fn multi_indices(&self) -> impl Iterator<Item = &[u16]> {
        self.layout.indices.iter().map(|a| &**a)
    }

    /// Coefficient `∂^α f / α!`, or zero when `|α|` exceeds the order.
    pub fn coefficient(&self, alpha: &[u16]) -> f64 {
        self.layout.lookup.get(alpha).map_or(0.0, |&k| self.coeffs[k])
    }

    /// Raw derivative `∂^α f` at the base point.
    pub fn derivative(&self, alpha: &[u16]) -> f64 {
        self.layout.lookup.get(alpha).map_or(0.0, |&k| self.coeffs[k] * self.layout.factorials[k])
    }

    pub fn gradient(&self) -> Vec<f64> {
        if self.order() == 0 {
            return vec![0.0; self.dimension()];
        }
        self.coeffs[1..=self.dimension()].to_vec()
    }

    fn compatible(&self, other: &Jet) -> Result<()> {
        if self.layout.n != other.layout.n {
            return Err(Error::DimensionMismatch { expected: self.layout.n, found: other.layout.n });
        }
        if self.layout.order != other.layout.order {
            return Err(Error::IncompatibleJets(format!(
                "orders {} and {}",
                self.layout.order, other.layout.order
            )));
        }
        if !Arc::ptr_eq(&self.point, &other.point) && self.point[..] != other.point[..] {
            return Err(Error::IncompatibleJets("different base points".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Jet) -> Result<Jet> {
        self.compatible(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Jet { coeffs, ..self.clone_shell() })
    }

    pub fn sub(&self, other: &Jet) -> Result<Jet> {
        self.compatible(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Jet { coeffs, ..self.clone_shell() })
    }

    /// Truncated Cauchy product.
    pub fn mul(&self, other: &Jet) -> Result<Jet> {
        self.compatible(other)?;
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for &(a, b, c) in &self.layout.products {
            coeffs[c as usize] += self.coeffs[a as usize] * other.coeffs[b as usize];
        }
        Ok(Jet { coeffs, ..self.clone_shell() })
    }

    pub fn div(&self, other: &Jet) -> Result<Jet> {
        self.mul(&other.compose_univariate(&Univariate::Recip)?)
    }

    pub fn scale(&self, factor: f64) -> Jet {
        Jet { coeffs: self.coeffs.iter().map(|c| c * factor).collect(), ..self.clone_shell() }
    }

    pub fn add_constant(&self, c: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    pub fn neg(&self) -> Jet {
        self.scale(-1.0)
    }

    /// `Σ c_k (self - self(p))^k`, where `taylor[k] = ψ⁽ᵏ⁾(self(p))/k!`.
    pub fn compose(&self, taylor: &[f64]) -> Result<Jet> {
        let r = self.order();
        if taylor.len() < r + 1 {
            return Err(Error::OrderExhausted { needed: r, available: taylor.len().saturating_sub(1) });
        }
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut acc = Jet::constant(taylor[r], &self.point, r);
        for k in (0..r).rev() {
            acc = acc.mul(&h)?;
            acc.coeffs[0] += taylor[k];
        }
        Ok(acc)
    }

    /// `ψ ∘ self` for a smooth scalar map.
    pub fn compose_univariate(&self, psi: &Univariate) -> Result<Jet> {
        let taylor = psi.taylor(self.value(), self.order())?;
        self.compose(&taylor)
    }

    /// `∂_i self` (zero-based `i`); the result has order `r - 1`.
    pub fn partial(&self, i: usize) -> Result<Jet> {
        let n = self.dimension();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, dimension: n });
        }
        let r = self.order();
        if r == 0 {
            return Err(Error::OrderExhausted { needed: 1, available: 0 });
        }
        let lower = layout(n, r - 1);
        let shift = &self.layout.shift[i];
        let coeffs = (0..lower.len())
            .map(|k| {
                let up = shift[k] as usize;
                f64::from(self.layout.indices[up][i]) * self.coeffs[up]
            })
            .collect();
        Ok(Jet { layout: lower, point: self.point.clone(), coeffs })
    }

    /// Drops every coefficient of degree above `order`.
    pub fn truncate(&self, order: usize) -> Result<Jet> {
        if order > self.order() {
            return Err(Error::OrderExhausted { needed: order, available: self.order() });
        }
        if order == self.order() {
            return Ok(self.clone());
        }
        let layout = layout(self.dimension(), order);
        let coeffs = self.coeffs[..self.layout.prefix_len(order)].to_vec();
        Ok(Jet { layout, point: self.point.clone(), coeffs })
    }

    /// Debug serialization: `{"dimension", "order", "point", "coefficients": {"2,0,1": c, ...}}`.
    pub fn to_json(&self) -> Value {
        let mut table = Map::new();
        for (alpha, c) in self.layout.indices.iter().zip(&self.coeffs) {
            let key = alpha.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(",");
            table.insert(key, json!(c));
        }
        json!({
            "dimension": self.dimension(),
            "order": self.order(),
            "point": &*self.point,
            "coefficients": Value::Object(table),
        })
    }

    fn clone_shell(&self) -> Jet {
        Jet { layout: self.layout.clone(), point: self.point.clone(), coeffs: Vec::new() }
    }
}

/// Builds a shared base point.
pub fn point(coords: &[f64]) -> Point {
    Arc::from(coords)
}
