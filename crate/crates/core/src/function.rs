//! Smooth functions that can be expanded into jets at any point.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::jet::{Jet, Point};
use crate::series::Univariate;

/// Anything that can produce a jet at a point.
pub trait JetSource: Send + Sync {
    fn dimension(&self) -> usize;
    fn jet(&self, point: &Point, order: usize) -> Result<Jet>;
}

type JetFn = dyn Fn(&Point, usize) -> Result<Jet> + Send + Sync;

struct FnSource {
    dimension: usize,
    f: Box<JetFn>,
}

impl JetSource for FnSource {
    fn dimension(&self) -> usize {
        self.dimension
    }
    fn jet(&self, point: &Point, order: usize) -> Result<Jet> {
        (self.f)(point, order)
    }
}

impl JetSource for Expression {
    fn dimension(&self) -> usize {
        Expression::dimension(self)
    }
    fn jet(&self, point: &Point, order: usize) -> Result<Jet> {
        self.eval_jet(point, order)
    }
}

/// A cheaply clonable handle to a smooth function `ℝⁿ → ℝ`.
#[derive(Clone)]
pub struct SmoothFunction {
    source: Arc<dyn JetSource>,
    label: Arc<str>,
}

impl fmt::Debug for SmoothFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmoothFunction({}; n={})", self.label, self.dimension())
    }
}

impl SmoothFunction {
    pub fn new(source: impl JetSource + 'static, label: impl Into<String>) -> Self {
        SmoothFunction { source: Arc::new(source), label: Arc::from(label.into()) }
    }

    /// Wraps a jet-producing closure.
    pub fn from_fn<F>(dimension: usize, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&Point, usize) -> Result<Jet> + Send + Sync + 'static,
    {
        SmoothFunction::new(FnSource { dimension, f: Box::new(f) }, label)
    }

    pub fn from_expression(expr: Expression) -> Self {
        let label = expr.source().to_string();
        SmoothFunction::new(expr, label)
    }

    /// Parses `source` over `x1..x{dimension}`.
    pub fn parse(source: &str, dimension: usize) -> Result<Self, Vec<crate::expr::ParseDiagnostic>> {
        crate::expr::parse(source, dimension).map(SmoothFunction::from_expression)
    }

    pub fn constant(dimension: usize, value: f64) -> Self {
        SmoothFunction::from_fn(dimension, value.to_string(), move |p, r| Ok(Jet::constant(value, p, r)))
    }

    /// The coordinate function `x ↦ x[index]` (zero-based).
    pub fn coordinate(dimension: usize, index: usize) -> Self {
        SmoothFunction::from_fn(dimension, format!("x{}", index + 1), move |p, r| Jet::variable(index, p, r))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Arc::from(label.into());
        self
    }

    pub fn dimension(&self) -> usize {
        self.source.dimension()
    }

    /// Jet of order `order` at `point`.
    pub fn jet(&self, point: &Point, order: usize) -> Result<Jet> {
        if point.len() != self.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), found: point.len() });
        }
        self.source.jet(point, order)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.jet(&Point::from(x), 0)?.value())
    }

    fn binary(&self, other: &SmoothFunction, symbol: &str, op: fn(&Jet, &Jet) -> Result<Jet>) -> Result<Self> {
        if self.dimension() != other.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), found: other.dimension() });
        }
        let (a, b) = (self.clone(), other.clone());
        let label = format!("({}) {symbol} ({})", self.label, other.label);
        Ok(SmoothFunction::from_fn(self.dimension(), label, move |p, r| op(&a.jet(p, r)?, &b.jet(p, r)?)))
    }

    pub fn add(&self, other: &SmoothFunction) -> Result<Self> {
        self.binary(other, "+", Jet::add)
    }

    pub fn sub(&self, other: &SmoothFunction) -> Result<Self> {
        self.binary(other, "-", Jet::sub)
    }

    pub fn mul(&self, other: &SmoothFunction) -> Result<Self> {
        self.binary(other, "*", Jet::mul)
    }

    pub fn scale(&self, factor: f64) -> Self {
        let a = self.clone();
        let label = format!("{factor} * ({})", self.label);
        SmoothFunction::from_fn(self.dimension(), label, move |p, r| Ok(a.jet(p, r)?.scale(factor)))
    }

    /// `ψ ∘ self`.
    pub fn compose(&self, psi: Univariate) -> Self {
        let a = self.clone();
        let label = format!("{}({})", psi.name(), self.label);
        SmoothFunction::from_fn(self.dimension(), label, move |p, r| a.jet(p, r)?.compose_univariate(&psi))
    }

    /// Views a one-variable function as a scalar map usable in compositions.
    pub fn as_univariate(&self) -> Result<Univariate> {
        if self.dimension() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: self.dimension() });
        }
        let f = self.clone();
        Ok(Univariate::custom(self.label(), move |x, r| Ok(f.jet(&Point::from(&[x][..]), r)?.coefficients().to_vec())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::point;

    #[test]
    fn combinators() {
        let x = SmoothFunction::coordinate(2, 0);
        let y = SmoothFunction::coordinate(2, 1);
        let f = x.mul(&y).unwrap().add(&SmoothFunction::constant(2, 1.0)).unwrap();
        let j = f.jet(&point(&[2.0, 3.0]), 2).unwrap();
        assert_eq!(j.value(), 7.0);
        assert_eq!(j.gradient(), vec![3.0, 2.0]);
        assert!(x.add(&SmoothFunction::constant(3, 0.0)).is_err());
    }

    #[test]
    fn univariate_view() {
        let f = SmoothFunction::from_expression(crate::expr::parse_univariate("s - s^3", "s").unwrap());
        let psi = f.as_univariate().unwrap();
        let t = psi.taylor(0.5, 3).unwrap();
        assert_eq!(t, vec![0.375, 0.25, -1.5, -1.0]);
    }
}
