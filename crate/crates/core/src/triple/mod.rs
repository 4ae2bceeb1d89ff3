//! Diffusion Markov triples `(ℝⁿ, e^η dx, Γ)` generated by a frame of vector
//! fields, and general second-order operators.
//!
//! For a frame `Z₁..Z_m` and log-weight `η`,
//!
//! ```text
//! Γ(f, g) = Σⱼ Zⱼf · Zⱼg
//! L f     = Σⱼ Zⱼ(Zⱼ f) + Σⱼ (div Zⱼ + Zⱼη) · Zⱼ f
//! Γ₂(f,g) = ½ [ L Γ(f,g) − Γ(f, Lg) − Γ(g, Lf) ]
//! ```
//!
//! with `div Zⱼ = Σᵢ ∂ᵢ Zⱼⁱ`. The drift `Σⱼ (Zⱼη) Zⱼ` is the field `Z₀`.

mod axioms;

use std::fmt;

use crate::error::{Error, Result};
use crate::fields::{apply_jet, VectorField};
use crate::function::SmoothFunction;
use crate::geometries::GeometryKind;
use crate::jet::{Jet, Point};

pub use axioms::{validate_axioms, AxiomTolerances, CarreDuChamp};

/// Frame, weight and dimension of a diffusion triple.
#[derive(Clone)]
pub struct MarkovTriple {
    dimension: usize,
    frame: Vec<VectorField>,
    log_weight: Option<SmoothFunction>,
    kind: GeometryKind,
    name: String,
    conventions: Vec<String>,
}

impl fmt::Debug for MarkovTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MarkovTriple")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("frame", &self.frame)
            .field("log_weight", &self.log_weight)
            .finish()
    }
}

impl MarkovTriple {
    pub fn new(frame: Vec<VectorField>, log_weight: Option<SmoothFunction>) -> Result<Self> {
        let dimension = frame.first().ok_or_else(|| Error::InvalidParameter("frame must be non-empty".into()))?.dimension();
        for z in &frame {
            if z.dimension() != dimension {
                return Err(Error::DimensionMismatch { expected: dimension, found: z.dimension() });
            }
        }
        if let Some(eta) = &log_weight {
            if eta.dimension() != dimension {
                return Err(Error::DimensionMismatch { expected: dimension, found: eta.dimension() });
            }
        }
        Ok(MarkovTriple { dimension, frame, log_weight, kind: GeometryKind::Custom, name: "custom".into(), conventions: Vec::new() })
    }

    pub(crate) fn tagged(mut self, kind: GeometryKind, name: impl Into<String>, conventions: Vec<String>) -> Self {
        self.kind = kind;
        self.name = name.into();
        self.conventions = conventions;
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn frame(&self) -> &[VectorField] {
        &self.frame
    }

    pub fn log_weight(&self) -> Option<&SmoothFunction> {
        self.log_weight.as_ref()
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Coordinate and sign conventions of built-in realizations.
    pub fn conventions(&self) -> &[String] {
        &self.conventions
    }

    /// Frame data expanded at `point` to `order`.
    pub fn local(&self, point: &Point, order: usize) -> Result<LocalFrame> {
        let fields: Vec<Vec<Jet>> = self.frame.iter().map(|z| z.coefficient_jets(point, order)).collect::<Result<_>>()?;
        let drift = if order == 0 {
            Vec::new()
        } else {
            let eta = self.log_weight.as_ref().map(|e| e.jet(point, order)).transpose()?;
            fields
                .iter()
                .map(|coeffs| {
                    let mut div = Jet::zero(point, order - 1);
                    for (i, c) in coeffs.iter().enumerate() {
                        div = div.add(&c.partial(i)?)?;
                    }
                    match &eta {
                        Some(eta) => div.add(&apply_jet(coeffs, eta)?),
                        None => Ok(div),
                    }
                })
                .collect::<Result<_>>()?
        };
        Ok(LocalFrame { order, fields, drift })
    }

    fn local_for(&self, x: &[f64], order: usize) -> Result<(Point, LocalFrame)> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, found: x.len() });
        }
        let p = Point::from(x);
        let local = self.local(&p, order)?;
        Ok((p, local))
    }

    /// `Γ(f, g)(x) = Σⱼ Zⱼf Zⱼg`.
    pub fn gamma(&self, f: &SmoothFunction, g: &SmoothFunction, x: &[f64]) -> Result<f64> {
        let (p, local) = self.local_for(x, 1)?;
        Ok(local.gamma(&f.jet(&p, 1)?, &g.jet(&p, 1)?)?.value())
    }

    /// `Lf(x)`.
    pub fn operator_l(&self, f: &SmoothFunction, x: &[f64]) -> Result<f64> {
        let (p, local) = self.local_for(x, 2)?;
        Ok(local.l(&f.jet(&p, 2)?)?.value())
    }

    /// `Γ₂(f, g)(x)` from its definition through `L` and `Γ`.
    pub fn gamma2(&self, f: &SmoothFunction, g: &SmoothFunction, x: &[f64]) -> Result<f64> {
        let (p, local) = self.local_for(x, 3)?;
        Ok(local.gamma2(&f.jet(&p, 3)?, &g.jet(&p, 3)?)?.value())
    }

    /// `Γ(Γ(u)) / (4 (Γ(u) + ε))`, the regularized `Γ(√(Γ(u) + ε))`.
    pub fn gamma_sqrt_reg(&self, u: &SmoothFunction, x: &[f64], epsilon: f64) -> Result<f64> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        let (p, local) = self.local_for(x, 2)?;
        local.gamma_sqrt_reg(&u.jet(&p, 2)?, epsilon)
    }

    /// `div Zⱼ` as a smooth function.
    pub fn divergence(&self, j: usize) -> SmoothFunction {
        let z = self.frame[j].clone();
        SmoothFunction::from_fn(self.dimension, format!("div {}", z.label()), move |p, r| {
            let coeffs = z.coefficient_jets(p, r + 1)?;
            let mut div = Jet::zero(p, r);
            for (i, c) in coeffs.iter().enumerate() {
                div = div.add(&c.partial(i)?)?;
            }
            Ok(div)
        })
    }

    /// `Z₀ = Σⱼ (Zⱼη) Zⱼ`; the zero field when no weight is declared.
    pub fn drift_field(&self) -> VectorField {
        let triple = self.clone();
        VectorField::from_fn(self.dimension, "Z0", move |p, r| {
            let n = triple.dimension;
            let Some(eta) = &triple.log_weight else {
                return Ok(vec![Jet::zero(p, r); n]);
            };
            let eta = eta.jet(p, r + 1)?;
            let mut out = vec![Jet::zero(p, r); n];
            for z in &triple.frame {
                let coeffs = z.coefficient_jets(p, r)?;
                let z_eta = apply_jet(&coeffs, &eta)?;
                for (o, c) in out.iter_mut().zip(&coeffs) {
                    *o = o.add(&z_eta.mul(c)?)?;
                }
            }
            Ok(out)
        })
    }

    /// The same `L` written as `Σ aᵢₖ ∂ᵢ∂ₖ + Σ bₖ ∂ₖ`, with
    /// `aᵢₖ = Σⱼ Zⱼⁱ Zⱼᵏ` and `bₖ = Σⱼ Zⱼ(Zⱼᵏ) + (div Zⱼ + Zⱼη) Zⱼᵏ`.
    pub fn as_general_operator(&self) -> GeneralOperator {
        let n = self.dimension;
        let mut a = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for k in 0..n {
                let triple = self.clone();
                row.push(SmoothFunction::from_fn(n, format!("a{}{}", i + 1, k + 1), move |p, r| {
                    let mut acc = Jet::zero(p, r);
                    for z in &triple.frame {
                        let c = z.coefficient_jets(p, r)?;
                        acc = acc.add(&c[i].mul(&c[k])?)?;
                    }
                    Ok(acc)
                }));
            }
            a.push(row);
        }
        let b = (0..n)
            .map(|k| {
                let triple = self.clone();
                SmoothFunction::from_fn(n, format!("b{}", k + 1), move |p, r| {
                    let local = triple.local(p, r + 1)?;
                    let mut acc = Jet::zero(p, r);
                    for (coeffs, drift) in local.fields.iter().zip(&local.drift) {
                        let zz = apply_jet(coeffs, &coeffs[k])?;
                        let c = coeffs[k].truncate(r)?;
                        acc = acc.add(&zz)?.add(&drift.mul(&c)?)?;
                    }
                    Ok(acc)
                })
            })
            .collect();
        GeneralOperator { dimension: n, a, b, name: format!("{} (coefficient form)", self.name) }
    }
}

/// Frame coefficient jets and drift terms `div Zⱼ + Zⱼη` at one point.
#[derive(Debug, Clone)]
pub struct LocalFrame {
    order: usize,
    fields: Vec<Vec<Jet>>,
    drift: Vec<Jet>,
}

impl LocalFrame {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn frame_len(&self) -> usize {
        self.fields.len()
    }

    /// Coefficient jets of `Zⱼ`.
    pub fn field(&self, j: usize) -> &[Jet] {
        &self.fields[j]
    }

    /// `Zⱼ f` (order drops by one).
    pub fn z(&self, j: usize, f: &Jet) -> Result<Jet> {
        self.check(f, 1)?;
        apply_jet(&self.fields[j], f)
    }

    /// All `Zⱼ f`.
    pub fn horizontal_gradient(&self, f: &Jet) -> Result<Vec<Jet>> {
        (0..self.fields.len()).map(|j| self.z(j, f)).collect()
    }

    pub fn gamma(&self, f: &Jet, g: &Jet) -> Result<Jet> {
        let r = f.order().min(g.order());
        let (f, g) = (f.truncate(r)?, g.truncate(r)?);
        self.check(&f, 1)?;
        let mut acc = Jet::zero(f.point(), r - 1);
        for j in 0..self.fields.len() {
            acc = acc.add(&self.z(j, &f)?.mul(&self.z(j, &g)?)?)?;
        }
        Ok(acc)
    }

    /// `Σⱼ Zⱼ² f`, without drift.
    pub fn sub_laplacian(&self, f: &Jet) -> Result<Jet> {
        self.check(f, 2)?;
        let mut acc = Jet::zero(f.point(), f.order() - 2);
        for j in 0..self.fields.len() {
            acc = acc.add(&self.z(j, &self.z(j, f)?)?)?;
        }
        Ok(acc)
    }

    pub fn l(&self, f: &Jet) -> Result<Jet> {
        self.check(f, 2)?;
        let r = f.order() - 2;
        let mut acc = self.sub_laplacian(f)?;
        for (j, drift) in self.drift.iter().enumerate() {
            let zf = self.z(j, f)?.truncate(r)?;
            acc = acc.add(&drift.truncate(r)?.mul(&zf)?)?;
        }
        Ok(acc)
    }

    pub fn gamma2(&self, f: &Jet, g: &Jet) -> Result<Jet> {
        let r = f.order().min(g.order());
        let (f, g) = (f.truncate(r)?, g.truncate(r)?);
        self.check(&f, 3)?;
        let l_gamma = self.l(&self.gamma(&f, &g)?)?;
        let cross = self.gamma(&f, &self.l(&g)?)?.add(&self.gamma(&g, &self.l(&f)?)?)?;
        Ok(l_gamma.sub(&cross)?.scale(0.5))
    }

    /// Value of `Γ(Γ(u)) / (4 (Γ(u) + ε))`.
    pub fn gamma_sqrt_reg(&self, u: &Jet, epsilon: f64) -> Result<f64> {
        self.check(u, 2)?;
        let gu = self.gamma(u, u)?;
        let ggu = self.gamma(&gu, &gu)?.value();
        Ok(ggu / (4.0 * (gu.value() + epsilon)))
    }

    fn check(&self, f: &Jet, needed: usize) -> Result<()> {
        if f.order() < needed {
            return Err(Error::OrderExhausted { needed, available: f.order() });
        }
        if self.order + 1 < f.order() {
            return Err(Error::OrderExhausted { needed: f.order() - 1, available: self.order });
        }
        Ok(())
    }
}

/// `Lf = Σ aᵢⱼ ∂ᵢ∂ⱼ f + Σ bᵢ ∂ᵢ f` with `a` stored symmetrized.
#[derive(Clone)]
pub struct GeneralOperator {
    dimension: usize,
    a: Vec<Vec<SmoothFunction>>,
    b: Vec<SmoothFunction>,
    name: String,
}

impl fmt::Debug for GeneralOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GeneralOperator({}; n={})", self.name, self.dimension)
    }
}

impl GeneralOperator {
    pub fn new(a: Vec<Vec<SmoothFunction>>, b: Vec<SmoothFunction>, name: impl Into<String>) -> Result<Self> {
        let n = b.len();
        if a.len() != n || a.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidParameter("coefficient matrix must be n x n with n first-order terms".into()));
        }
        for f in a.iter().flatten().chain(&b) {
            if f.dimension() != n {
                return Err(Error::DimensionMismatch { expected: n, found: f.dimension() });
            }
        }
        let mut sym = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                if i == j {
                    row.push(a[i][i].clone());
                } else {
                    row.push(a[i][j].add(&a[j][i])?.scale(0.5).with_label(format!("a{}{}", i + 1, j + 1)));
                }
            }
            sym.push(row);
        }
        Ok(GeneralOperator { dimension: n, a: sym, b, name: name.into() })
    }

    /// `L_ND f = Σ aᵢⱼ fᵢⱼ`.
    pub fn non_divergence(a: Vec<Vec<SmoothFunction>>) -> Result<Self> {
        let n = a.len();
        GeneralOperator::new(a, (0..n).map(|_| SmoothFunction::constant(n, 0.0)).collect(), "non-divergence form")
    }

    /// `L_D f = Σ (aᵢⱼ fᵢ)ⱼ`, i.e. first-order terms `bᵢ = Σⱼ ∂ⱼ aᵢⱼ`.
    pub fn divergence(a: Vec<Vec<SmoothFunction>>) -> Result<Self> {
        let n = a.len();
        let b = (0..n)
            .map(|i| {
                let row = a[i].clone();
                SmoothFunction::from_fn(n, format!("b{}", i + 1), move |p, r| {
                    let mut acc = Jet::zero(p, r);
                    for (j, aij) in row.iter().enumerate() {
                        acc = acc.add(&aij.jet(p, r + 1)?.partial(j)?)?;
                    }
                    Ok(acc)
                })
            })
            .collect();
        GeneralOperator::new(a, b, "divergence form")
    }

    /// `f_xx − f_yy` on `ℝ²`.
    pub fn dalembert() -> Self {
        let c = |v| SmoothFunction::constant(2, v);
        GeneralOperator::new(vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(-1.0)]], vec![c(0.0), c(0.0)], "d'Alembert")
            .expect("valid operator")
    }

    /// `f_x` on `ℝ`.
    pub fn derivative() -> Self {
        GeneralOperator::new(vec![vec![SmoothFunction::constant(1, 0.0)]], vec![SmoothFunction::constant(1, 1.0)], "derivative")
            .expect("valid operator")
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `L` on a jet of order `r`; the result has order `r − 2`.
    pub fn apply_jet(&self, f: &Jet) -> Result<Jet> {
        let r = f.order();
        if r < 2 {
            return Err(Error::OrderExhausted { needed: 2, available: r });
        }
        let p = f.point();
        let mut acc = Jet::zero(p, r - 2);
        for i in 0..self.dimension {
            let fi = f.partial(i)?;
            for j in 0..self.dimension {
                let aij = self.a[i][j].jet(p, r - 2)?;
                acc = acc.add(&aij.mul(&fi.partial(j)?)?)?;
            }
            let bi = self.b[i].jet(p, r - 2)?;
            acc = acc.add(&bi.mul(&fi.truncate(r - 2)?)?)?;
        }
        Ok(acc)
    }

    pub fn apply(&self, f: &SmoothFunction, x: &[f64]) -> Result<f64> {
        Ok(self.apply_jet(&f.jet(&Point::from(x), 2)?)?.value())
    }

    /// `½ [L(fg) − f Lg − g Lf]`.
    pub fn gamma_from_l(&self, f: &SmoothFunction, g: &SmoothFunction, x: &[f64]) -> Result<f64> {
        let p = Point::from(x);
        let (fj, gj) = (f.jet(&p, 2)?, g.jet(&p, 2)?);
        let l_fg = self.apply_jet(&fj.mul(&gj)?)?.value();
        let lf = self.apply_jet(&fj)?.value();
        let lg = self.apply_jet(&gj)?.value();
        Ok(0.5 * (l_fg - fj.value() * lg - gj.value() * lf))
    }

    /// `Σ aᵢⱼ fᵢ gⱼ`.
    pub fn gamma_closed_form(&self, f: &SmoothFunction, g: &SmoothFunction, x: &[f64]) -> Result<f64> {
        let p = Point::from(x);
        let (df, dg) = (f.jet(&p, 1)?.gradient(), g.jet(&p, 1)?.gradient());
        let mut acc = 0.0;
        for i in 0..self.dimension {
            for j in 0..self.dimension {
                acc += self.a[i][j].value(x)? * df[i] * dg[j];
            }
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometries::GeometrySpec;
    use approx::assert_abs_diff_eq;

    fn f(s: &str, n: usize) -> SmoothFunction {
        SmoothFunction::parse(s, n).unwrap()
    }

    #[test]
    fn heisenberg_gamma_of_radial_square() {
        let t = GeometrySpec::Heisenberg.make().unwrap();
        let g = f("x1^2 + x2^2", 3);
        assert_abs_diff_eq!(t.gamma(&g, &g, &[1.0, 1.0, 0.0]).unwrap(), 8.0, epsilon = 1e-12);
        // oracle: central differences of Xf and Yf
        let h = 1e-5;
        let val = |x: &[f64]| g.value(x).unwrap();
        let dir = |z: &VectorField, x: &[f64]| {
            let v = z.values(x).unwrap();
            let xp: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + h * b).collect();
            let xm: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a - h * b).collect();
            (val(&xp) - val(&xm)) / (2.0 * h)
        };
        let x = [1.0, 1.0, 0.0];
        let fd: f64 = t.frame().iter().map(|z| dir(z, &x).powi(2)).sum();
        assert_abs_diff_eq!(fd, 8.0, epsilon = 1e-6);
    }

    #[test]
    fn gamma_of_constant_and_l_of_constant() {
        for spec in [GeometrySpec::Heisenberg, GeometrySpec::OrnsteinUhlenbeck { dimension: 2 }, GeometrySpec::Grushin { alpha: 2 }] {
            let t = spec.make().unwrap();
            let n = t.dimension();
            let one = SmoothFunction::constant(n, 1.0);
            let g = f("x1^3 + x2", n);
            let x: Vec<f64> = (0..n).map(|i| 0.3 + i as f64 * 0.2).collect();
            assert_eq!(t.gamma(&one, &g, &x).unwrap(), 0.0);
            assert_eq!(t.operator_l(&one, &x).unwrap(), 0.0);
            assert_eq!(t.gamma2(&one, &one, &x).unwrap(), 0.0);
        }
    }

    #[test]
    fn euclidean_laplacian() {
        let t = GeometrySpec::EuclideanWeighted { dimension: 2, log_weight: None }.make().unwrap();
        let g = f("x1^2 + x2^2", 2);
        for x in [[0.0, 0.0], [1.5, -2.0], [3.0, 0.1]] {
            assert_abs_diff_eq!(t.operator_l(&g, &x).unwrap(), 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn ornstein_uhlenbeck_generator() {
        let t = GeometrySpec::OrnsteinUhlenbeck { dimension: 2 }.make().unwrap();
        let x1 = f("x1", 2);
        for x in [[0.5, 1.0], [-2.0, 0.3]] {
            assert_abs_diff_eq!(t.operator_l(&x1, &x).unwrap(), -x[0], epsilon = 1e-12);
        }
        // oracle: Δf − x·∇f by central differences for a non-polynomial f
        let g = f("sin(x1) * x2^2", 2);
        let x = [0.4, -0.7];
        let h = 1e-4;
        let v = |a: f64, b: f64| g.value(&[a, b]).unwrap();
        let lap = (v(x[0] + h, x[1]) + v(x[0] - h, x[1]) + v(x[0], x[1] + h) + v(x[0], x[1] - h) - 4.0 * v(x[0], x[1])) / (h * h);
        let grad = [(v(x[0] + h, x[1]) - v(x[0] - h, x[1])) / (2.0 * h), (v(x[0], x[1] + h) - v(x[0], x[1] - h)) / (2.0 * h)];
        let fd = lap - x[0] * grad[0] - x[1] * grad[1];
        assert_abs_diff_eq!(t.operator_l(&g, &x).unwrap(), fd, epsilon = 1e-6);
    }

    #[test]
    fn flat_and_ou_gamma2() {
        let flat = GeometrySpec::EuclideanWeighted { dimension: 2, log_weight: None }.make().unwrap();
        let ou = GeometrySpec::OrnsteinUhlenbeck { dimension: 2 }.make().unwrap();
        let g = f("x1*x2", 2);
        for x in [[0.0, 0.0], [1.0, -2.0], [0.3, 0.7]] {
            assert_abs_diff_eq!(flat.gamma2(&g, &g, &x).unwrap(), 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(ou.gamma2(&g, &g, &x).unwrap(), 2.0 + x[0] * x[0] + x[1] * x[1], epsilon = 1e-12);
        }
    }

    #[test]
    fn gamma_sqrt_reg_one_dimensional() {
        let t = GeometrySpec::EuclideanWeighted { dimension: 1, log_weight: None }.make().unwrap();
        let u = f("tanh(x1/sqrt(2))", 1);
        let s2 = 2f64.sqrt();
        for x in [-1.0, 0.2, 1.5] {
            let up = (1.0 - (x / s2).tanh().powi(2)) / s2;
            let upp = -(x / s2).tanh() * (1.0 - (x / s2).tanh().powi(2));
            for eps in [1e-2, 1e-6] {
                let expected = upp * upp * up * up / (up * up + eps);
                assert_abs_diff_eq!(t.gamma_sqrt_reg(&u, &[x], eps).unwrap(), expected, epsilon = 1e-12);
            }
        }
        let c = SmoothFunction::constant(1, 3.0);
        assert_eq!(t.gamma_sqrt_reg(&c, &[0.5], 1e-3).unwrap(), 0.0);
        assert!(t.gamma_sqrt_reg(&u, &[0.5], 0.0).is_err());
    }

    #[test]
    fn gamma_sqrt_reg_is_monotone_in_epsilon() {
        let t = GeometrySpec::Heisenberg.make().unwrap();
        let u = f("x1^2*x2 + x3 - x1*x3", 3);
        let x = [0.4, -0.3, 0.8];
        let mut prev = 0.0;
        for eps in [1.0, 1e-2, 1e-4, 1e-8] {
            let v = t.gamma_sqrt_reg(&u, &x, eps).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        let p = Point::from(&x[..]);
        let local = t.local(&p, 2).unwrap();
        let uj = u.jet(&p, 2).unwrap();
        let gu = local.gamma(&uj, &uj).unwrap();
        let limit = local.gamma(&gu, &gu).unwrap().value() / (4.0 * gu.value());
        assert!(prev <= limit);
        assert_abs_diff_eq!(prev, limit, epsilon = 1e-6 * limit.abs().max(1.0));
    }

    #[test]
    fn operator_counterexamples() {
        let dal = GeometrySpec::dalembert_operator();
        let y = f("x2", 2);
        assert_abs_diff_eq!(dal.gamma_from_l(&y, &y, &[0.3, 0.4]).unwrap(), -1.0, epsilon = 1e-12);

        let d = GeneralOperator::derivative();
        let g = f("sin(x1) + x1^3", 1);
        assert_abs_diff_eq!(d.gamma_from_l(&g, &g, &[0.7]).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn divergence_and_nondivergence_share_gamma() {
        let a = vec![vec![f("2 + sin(x1)", 2), f("x1*x2", 2)], vec![f("x1*x2", 2), f("1 + x2^2", 2)]];
        let ld = GeneralOperator::divergence(a.clone()).unwrap();
        let lnd = GeneralOperator::non_divergence(a).unwrap();
        let (p, q) = (f("x1^2 * x2", 2), f("exp(x2) - x1", 2));
        let x = [0.3, -0.8];
        let gd = ld.gamma_from_l(&p, &q, &x).unwrap();
        let gnd = lnd.gamma_from_l(&p, &q, &x).unwrap();
        assert_abs_diff_eq!(gd, gnd, epsilon = 1e-12);
        assert_abs_diff_eq!(gd, ld.gamma_closed_form(&p, &q, &x).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn coefficient_form_reproduces_l() {
        let t = GeometrySpec::Grushin { alpha: 2 }.make().unwrap();
        let g = f("x1^3*x2 + x2^2", 2);
        let op = t.as_general_operator();
        let x = [0.6, -1.1];
        assert_abs_diff_eq!(op.apply(&g, &x).unwrap(), t.operator_l(&g, &x).unwrap(), epsilon = 1e-12);

        let ou = GeometrySpec::OrnsteinUhlenbeck { dimension: 2 }.make().unwrap();
        let op = ou.as_general_operator();
        assert_abs_diff_eq!(op.apply(&g, &x).unwrap(), ou.operator_l(&g, &x).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn drift_field_of_ou_is_radial() {
        let ou = GeometrySpec::OrnsteinUhlenbeck { dimension: 2 }.make().unwrap();
        let v = ou.drift_field().values(&[0.5, -2.0]).unwrap();
        assert_abs_diff_eq!(v[0], -0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(v[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn leibniz_rule_for_fields() {
        let t = GeometrySpec::Engel.make().unwrap();
        let (a, b) = (f("x1*x3 + x2^2", 4), f("sin(x4) + x1", 4));
        let ab = a.mul(&b).unwrap();
        let p = Point::from(&[0.2, -0.5, 0.9, 1.1][..]);
        for z in t.frame() {
            let lhs = z.apply(&ab, &p, 3).unwrap();
            let rhs = a.jet(&p, 2).unwrap().mul(&z.apply(&b, &p, 3).unwrap()).unwrap()
                .add(&b.jet(&p, 2).unwrap().mul(&z.apply(&a, &p, 3).unwrap()).unwrap()).unwrap();
            for (l, r) in lhs.coefficients().iter().zip(rhs.coefficients()) {
                assert!((l - r).abs() < 1e-9);
            }
        }
    }
}
