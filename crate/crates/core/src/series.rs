//! Univariate Taylor coefficients of the scalar maps used in compositions.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type TaylorFn = dyn Fn(f64, usize) -> Result<Vec<f64>> + Send + Sync;

/// A smooth scalar map `ψ: ℝ → ℝ` known through its Taylor coefficients
/// `ψ⁽ᵏ⁾(x)/k!` at any base value `x`.
#[derive(Clone)]
pub enum Univariate {
    Exp,
    Ln,
    Sin,
    Cos,
    Tanh,
    Sqrt,
    Abs,
    /// `1/x`.
    Recip,
    Powi(i32),
    Powf(f64),
    /// Any other map, given as a closure `(x, order) -> [ψ(x), ψ'(x), ψ''(x)/2, ...]`.
    Custom(Arc<str>, Arc<TaylorFn>),
}

impl fmt::Debug for Univariate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Univariate::Powi(k) => write!(f, "Powi({k})"),
            Univariate::Powf(p) => write!(f, "Powf({p})"),
            Univariate::Custom(name, _) => write!(f, "Custom({name})"),
            other => f.write_str(other.name()),
        }
    }
}

impl Univariate {
    pub fn custom<F>(name: &str, taylor: F) -> Self
    where
        F: Fn(f64, usize) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        Univariate::Custom(Arc::from(name), Arc::new(taylor))
    }

    pub fn name(&self) -> &str {
        match self {
            Univariate::Exp => "exp",
            Univariate::Ln => "log",
            Univariate::Sin => "sin",
            Univariate::Cos => "cos",
            Univariate::Tanh => "tanh",
            Univariate::Sqrt => "sqrt",
            Univariate::Abs => "abs",
            Univariate::Recip => "recip",
            Univariate::Powi(_) => "powi",
            Univariate::Powf(_) => "pow",
            Univariate::Custom(name, _) => name,
        }
    }

    /// Taylor coefficients `[ψ(x), ψ'(x), ψ''(x)/2!, ..., ψ⁽ʳ⁾(x)/r!]`.
    pub fn taylor(&self, x: f64, order: usize) -> Result<Vec<f64>> {
        let coeffs = match self {
            Univariate::Exp => {
                let e = x.exp();
                let mut out = Vec::with_capacity(order + 1);
                let mut fact = 1.0;
                for k in 0..=order {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    out.push(e / fact);
                }
                out
            }
            Univariate::Ln => {
                if x <= 0.0 {
                    return Err(Error::Domain { function: "log", value: x });
                }
                let mut out = vec![x.ln()];
                for k in 1..=order {
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    out.push(sign / (k as f64 * x.powi(k as i32)));
                }
                out
            }
            Univariate::Sin | Univariate::Cos => {
                let (s, c) = x.sin_cos();
                // derivatives of sin cycle through sin, cos, -sin, -cos
                let cycle = [s, c, -s, -c];
                let offset = usize::from(matches!(self, Univariate::Cos));
                let mut out = Vec::with_capacity(order + 1);
                let mut fact = 1.0;
                for k in 0..=order {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    out.push(cycle[(k + offset) % 4] / fact);
                }
                out
            }
            Univariate::Tanh => {
                let sinh = Self::hyperbolic(x, order, true);
                let cosh = Self::hyperbolic(x, order, false);
                series_div(&sinh, &cosh)
            }
            Univariate::Sqrt => {
                if x < 0.0 || (x == 0.0 && order > 0) {
                    return Err(Error::Domain { function: "sqrt", value: x });
                }
                if x == 0.0 {
                    vec![0.0]
                } else {
                    binomial_series(x, 0.5, order)
                }
            }
            Univariate::Abs => {
                if x == 0.0 && order > 0 {
                    return Err(Error::NonSmooth { function: "abs", value: x });
                }
                let mut out = vec![0.0; order + 1];
                out[0] = x.abs();
                if order >= 1 {
                    out[1] = x.signum();
                }
                out
            }
            Univariate::Recip => {
                if x == 0.0 {
                    return Err(Error::Domain { function: "recip", value: x });
                }
                binomial_series(x, -1.0, order)
            }
            Univariate::Powi(k) => {
                if *k < 0 && x == 0.0 {
                    return Err(Error::Domain { function: "pow", value: x });
                }
                if *k >= 0 {
                    // exact polynomial expansion, valid at every x
                    let k = *k as usize;
                    let mut out = vec![0.0; order + 1];
                    let mut binom = 1.0;
                    for (j, slot) in out.iter_mut().enumerate().take(k.min(order) + 1) {
                        if j > 0 {
                            binom *= (k + 1 - j) as f64 / j as f64;
                        }
                        *slot = binom * x.powi((k - j) as i32);
                    }
                    out
                } else {
                    binomial_series(x, f64::from(*k), order)
                }
            }
            Univariate::Powf(p) => {
                if p.fract() == 0.0 && p.abs() < f64::from(i32::MAX) {
                    return Univariate::Powi(*p as i32).taylor(x, order);
                }
                if x < 0.0 {
                    return Err(Error::Domain { function: "pow", value: x });
                }
                if x == 0.0 {
                    if order == 0 && *p > 0.0 {
                        vec![0.0]
                    } else {
                        return Err(Error::Domain { function: "pow", value: x });
                    }
                } else {
                    binomial_series(x, *p, order)
                }
            }
            Univariate::Custom(_, f) => {
                let mut out = f(x, order)?;
                if out.len() < order + 1 {
                    return Err(Error::OrderExhausted { needed: order, available: out.len().saturating_sub(1) });
                }
                out.truncate(order + 1);
                out
            }
        };
        let mut coeffs = coeffs;
        coeffs.resize(order + 1, 0.0);
        Ok(coeffs)
    }

    fn hyperbolic(x: f64, order: usize, odd: bool) -> Vec<f64> {
        let (sh, ch) = (x.sinh(), x.cosh());
        let mut out = Vec::with_capacity(order + 1);
        let mut fact = 1.0;
        for k in 0..=order {
            if k > 0 {
                fact *= k as f64;
            }
            let even_k = k % 2 == 0;
            let v = if even_k == odd { sh } else { ch };
            out.push(v / fact);
        }
        out
    }
}

/// `(x + t)^p` expanded in `t`: coefficients `C(p, k) x^(p-k)`.
fn binomial_series(x: f64, p: f64, order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(order + 1);
    let mut binom = 1.0;
    for k in 0..=order {
        if k > 0 {
            binom *= (p - (k - 1) as f64) / k as f64;
        }
        out.push(binom * x.powf(p - k as f64));
    }
    out
}

/// Quotient of two truncated power series in one variable.
pub(crate) fn series_div(num: &[f64], den: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; num.len()];
    for k in 0..num.len() {
        let mut acc = num[k];
        for j in 1..=k {
            acc -= den[j] * out[k - j];
        }
        out[k] = acc / den[0];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exp_series_at_zero() {
        let c = Univariate::Exp.taylor(0.0, 3).unwrap();
        assert_eq!(c, vec![1.0, 1.0, 0.5, 1.0 / 6.0]);
    }

    #[test]
    fn tanh_series_matches_known_expansion() {
        // tanh t = t - t^3/3 + 2t^5/15
        let c = Univariate::Tanh.taylor(0.0, 5).unwrap();
        let expected = [0.0, 1.0, 0.0, -1.0 / 3.0, 0.0, 2.0 / 15.0];
        for (a, b) in c.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn sqrt_of_four() {
        let c = Univariate::Sqrt.taylor(4.0, 2).unwrap();
        assert_abs_diff_eq!(c[0], 2.0);
        assert_abs_diff_eq!(c[1], 0.25);
        assert_abs_diff_eq!(c[2], -1.0 / 64.0);
    }

    #[test]
    fn integer_powers_are_valid_at_negative_base() {
        let c = Univariate::Powf(3.0).taylor(-2.0, 4).unwrap();
        assert_eq!(c, vec![-8.0, 12.0, -6.0, 1.0, 0.0]);
    }

    #[test]
    fn domain_errors() {
        assert!(Univariate::Ln.taylor(0.0, 0).is_err());
        assert!(Univariate::Sqrt.taylor(-1.0, 0).is_err());
        assert!(Univariate::Sqrt.taylor(0.0, 1).is_err());
        assert!(Univariate::Abs.taylor(0.0, 1).is_err());
        assert_eq!(Univariate::Abs.taylor(0.0, 0).unwrap(), vec![0.0]);
        assert!(Univariate::Powf(0.5).taylor(-1.0, 0).is_err());
    }

    #[test]
    fn sin_cos_derivatives_cycle() {
        let x = 0.3_f64;
        let s = Univariate::Sin.taylor(x, 3).unwrap();
        let c = Univariate::Cos.taylor(x, 3).unwrap();
        assert_abs_diff_eq!(s[1], x.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(s[2], -x.sin() / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c[1], -x.sin(), epsilon = 1e-15);
        assert_abs_diff_eq!(c[3], x.sin() / 6.0, epsilon = 1e-15);
    }
}
