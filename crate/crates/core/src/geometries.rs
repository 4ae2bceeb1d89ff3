//! Built-in triples: weighted Euclidean space, Ornstein–Uhlenbeck, the
//! Heisenberg and Engel groups, the model filiform groups `Eₙ` and the
//! Grushin plane.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::VectorField;
use crate::function::SmoothFunction;
use crate::series::Univariate;
use crate::triple::{GeneralOperator, MarkovTriple};

/// Which catalog entry a triple came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeometryKind {
    EuclideanWeighted { dimension: usize, weighted: bool },
    OrnsteinUhlenbeck { dimension: usize },
    Heisenberg,
    Engel,
    Filiform { dimension: usize },
    Grushin { alpha: u32 },
    Custom,
}

impl GeometryKind {
    /// Carnot groups and flat unweighted space: `η = 0` and divergence-free frame.
    pub fn is_carnot(self) -> bool {
        matches!(
            self,
            GeometryKind::Heisenberg
                | GeometryKind::Engel
                | GeometryKind::Filiform { .. }
                | GeometryKind::EuclideanWeighted { weighted: false, .. }
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            GeometryKind::EuclideanWeighted { .. } => "euclidean-weighted",
            GeometryKind::OrnsteinUhlenbeck { .. } => "ornstein-uhlenbeck",
            GeometryKind::Heisenberg => "heisenberg",
            GeometryKind::Engel => "engel",
            GeometryKind::Filiform { .. } => "filiform",
            GeometryKind::Grushin { .. } => "grushin",
            GeometryKind::Custom => "custom",
        }
    }
}

impl fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryKind::EuclideanWeighted { dimension, .. } => write!(f, "euclidean-weighted(n={dimension})"),
            GeometryKind::OrnsteinUhlenbeck { dimension } => write!(f, "ornstein-uhlenbeck(n={dimension})"),
            GeometryKind::Filiform { dimension } => write!(f, "filiform(n={dimension})"),
            GeometryKind::Grushin { alpha } => write!(f, "grushin(alpha={alpha})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Parameters of a catalog triple.
#[derive(Debug, Clone)]
pub enum GeometrySpec {
    /// Frame `∂₁..∂ₙ`, weight `e^η`.
    EuclideanWeighted { dimension: usize, log_weight: Option<SmoothFunction> },
    /// `η = −|x|²/2`.
    OrnsteinUhlenbeck { dimension: usize },
    /// `X = ∂ₓ − (y/2)∂ₜ`, `Y = ∂ᵧ + (x/2)∂ₜ`.
    Heisenberg,
    /// `Z₁ = ∂₁`, `Z₂ = ∂₂ + x₁∂₃ + (x₁²/2)∂₄`.
    Engel,
    /// `Z₁ = ∂₁`, `Z₂ = ∂₂ + Σᵢ₌₃ⁿ x₁^{i−2}/(i−2)! ∂ᵢ`.
    Filiform { dimension: usize },
    /// `Z₁ = ∂ₓ`, `Z₂ = x^α ∂ᵧ`.
    Grushin { alpha: u32 },
    Custom { frame: Vec<VectorField>, log_weight: Option<SmoothFunction> },
}

fn poly(source: &str, n: usize) -> SmoothFunction {
    SmoothFunction::parse(source, n).expect("catalog expression parses")
}

fn field(coefficients: &[&str], label: &str) -> VectorField {
    let n = coefficients.len();
    VectorField::new(coefficients.iter().map(|c| poly(c, n)).collect(), label).expect("catalog field")
}

impl GeometrySpec {
    pub fn make(&self) -> Result<MarkovTriple> {
        match self {
            GeometrySpec::EuclideanWeighted { dimension, log_weight } => {
                let n = positive(*dimension)?;
                let frame = (0..n).map(|i| VectorField::coordinate(n, i)).collect();
                let kind = GeometryKind::EuclideanWeighted { dimension: n, weighted: log_weight.is_some() };
                let mut conventions = vec!["frame d1..dn".to_string()];
                if let Some(eta) = log_weight {
                    conventions.push(format!("log-weight {}", eta.label()));
                }
                Ok(MarkovTriple::new(frame, log_weight.clone())?.tagged(kind, kind.to_string(), conventions))
            }
            GeometrySpec::OrnsteinUhlenbeck { dimension } => {
                let n = positive(*dimension)?;
                let squares: Vec<String> = (1..=n).map(|i| format!("x{i}^2")).collect();
                let eta = poly(&format!("-({})/2", squares.join(" + ")), n).with_label("-|x|^2/2");
                let frame = (0..n).map(|i| VectorField::coordinate(n, i)).collect();
                let kind = GeometryKind::OrnsteinUhlenbeck { dimension: n };
                let conventions = vec!["frame d1..dn".into(), "log-weight -|x|^2/2".into()];
                Ok(MarkovTriple::new(frame, Some(eta))?.tagged(kind, kind.to_string(), conventions))
            }
            GeometrySpec::Heisenberg => {
                let frame = vec![field(&["1", "0", "-x2/2"], "X"), field(&["0", "1", "x1/2"], "Y")];
                let conventions =
                    vec!["coordinates (x, y, t)".into(), "X = dx - (y/2) dt, Y = dy + (x/2) dt, [X,Y] = dt".into()];
                Ok(MarkovTriple::new(frame, None)?.tagged(GeometryKind::Heisenberg, "heisenberg", conventions))
            }
            GeometrySpec::Engel => {
                let frame = vec![field(&["1", "0", "0", "0"], "Z1"), field(&["0", "1", "x1", "x1^2/2"], "Z2")];
                let conventions = vec!["Z1 = d1, Z2 = d2 + x1 d3 + (x1^2/2) d4".into()];
                Ok(MarkovTriple::new(frame, None)?.tagged(GeometryKind::Engel, "engel", conventions))
            }
            GeometrySpec::Filiform { dimension } => {
                let n = *dimension;
                if n < 2 {
                    return Err(Error::InvalidParameter(format!("filiform dimension must be at least 2, got {n}")));
                }
                let z1 = VectorField::coordinate(n, 0).with_label("Z1");
                let mut coefficients = vec![SmoothFunction::constant(n, 0.0), SmoothFunction::constant(n, 1.0)];
                let mut factorial = 1.0;
                for i in 3..=n {
                    factorial *= (i - 2) as f64;
                    coefficients.push(poly(&format!("x1^{} / {factorial}", i - 2), n));
                }
                let z2 = VectorField::new(coefficients, "Z2")?;
                let conventions = vec![
                    "Z1 = d1, Z2 = d2 + sum_{i>=3} x1^(i-2)/(i-2)! di".into(),
                    "Z_{i+1} = [Z_i, Z1] including sign".into(),
                ];
                let kind = GeometryKind::Filiform { dimension: n };
                Ok(MarkovTriple::new(vec![z1, z2], None)?.tagged(kind, kind.to_string(), conventions))
            }
            GeometrySpec::Grushin { alpha } => {
                if *alpha < 1 {
                    return Err(Error::InvalidParameter("grushin alpha must be a positive integer".into()));
                }
                let z1 = VectorField::coordinate(2, 0).with_label("Z1");
                let power = SmoothFunction::coordinate(2, 0).compose(Univariate::Powi(*alpha as i32));
                let z2 = VectorField::new(vec![SmoothFunction::constant(2, 0.0), power], "Z2")?;
                let kind = GeometryKind::Grushin { alpha: *alpha };
                let conventions = vec![
                    format!("Z1 = dx, Z2 = x^{alpha} dy"),
                    "x^alpha replaces |x|^alpha; they differ on x < 0 for odd alpha".into(),
                    "Z3 = [Z1, Z2]".into(),
                ];
                Ok(MarkovTriple::new(vec![z1, z2], None)?.tagged(kind, kind.to_string(), conventions))
            }
            GeometrySpec::Custom { frame, log_weight } => MarkovTriple::new(frame.clone(), log_weight.clone()),
        }
    }

    /// `Lf = f_xx − f_yy`, whose `Γ` is indefinite.
    pub fn dalembert_operator() -> GeneralOperator {
        GeneralOperator::dalembert()
    }
}

fn positive(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::hormander_depth;
    use crate::jet::point;

    fn sample_points(n: usize, count: usize) -> Vec<Vec<f64>> {
        (0..count).map(|k| (0..n).map(|i| ((k * 7 + i * 13) % 17) as f64 / 8.0 - 1.0).collect()).collect()
    }

    #[test]
    fn heisenberg_is_divergence_free_with_depth_two() {
        let t = GeometrySpec::Heisenberg.make().unwrap();
        for j in 0..2 {
            for x in sample_points(3, 10) {
                assert_eq!(t.divergence(j).value(&x).unwrap(), 0.0);
            }
        }
        let report = hormander_depth(t.frame(), &sample_points(3, 20), 4, 1e-9).unwrap();
        assert_eq!(report.depth, Some(2));
    }

    #[test]
    fn filiform_bracket_relations() {
        let t = GeometrySpec::Filiform { dimension: 5 }.make().unwrap();
        let z = t.frame();
        let z3 = z[1].bracket(&z[0]).unwrap();
        let z4 = z3.bracket(&z[0]).unwrap();
        let z5 = z4.bracket(&z[0]).unwrap();
        let zero_brackets = [z3.bracket(&z[1]).unwrap(), z4.bracket(&z[1]).unwrap(), z4.bracket(&z3).unwrap(), z5.bracket(&z[0]).unwrap()];
        for x in sample_points(5, 12) {
            let v3 = z3.values(&x).unwrap();
            assert_eq!(v3[2], -1.0);
            assert_eq!(v3[3], -x[0]);
            assert_eq!(z5.values(&x).unwrap(), vec![0.0, 0.0, 0.0, 0.0, -1.0]);
            for b in &zero_brackets {
                assert!(b.values(&x).unwrap().iter().all(|c| c.abs() < 1e-12));
            }
        }
        let report = hormander_depth(z, &sample_points(5, 20), 6, 1e-9).unwrap();
        assert_eq!(report.depth, Some(4));
    }

    #[test]
    fn grushin_bracket() {
        let t = GeometrySpec::Grushin { alpha: 2 }.make().unwrap();
        let b = t.frame()[0].bracket(&t.frame()[1]).unwrap();
        for x in sample_points(2, 10) {
            let v = b.values(&x).unwrap();
            assert_eq!(v[0], 0.0);
            assert!((v[1] - 2.0 * x[0]).abs() < 1e-14);
        }
        let on_axis = hormander_depth(t.frame(), &[vec![0.0, 0.4]], 4, 1e-9).unwrap();
        assert_eq!(on_axis.depth, Some(3));
        let off_axis = hormander_depth(t.frame(), &[vec![0.5, 0.4]], 4, 1e-9).unwrap();
        assert_eq!(off_axis.depth, Some(1));
    }

    #[test]
    fn grushin_odd_power_keeps_sign() {
        let t = GeometrySpec::Grushin { alpha: 1 }.make().unwrap();
        let v = t.frame()[1].values(&[-0.5, 1.0]).unwrap();
        assert_eq!(v, vec![0.0, -0.5]);
        let j = t.frame()[1].coefficient(1).jet(&point(&[0.0, 0.0]), 3).unwrap();
        assert_eq!(j.gradient(), vec![1.0, 0.0]);
    }

    #[test]
    fn invalid_parameters() {
        assert!(GeometrySpec::Filiform { dimension: 1 }.make().is_err());
        assert!(GeometrySpec::Grushin { alpha: 0 }.make().is_err());
        assert!(GeometrySpec::EuclideanWeighted { dimension: 0, log_weight: None }.make().is_err());
    }

    #[test]
    fn kinds_and_conventions() {
        let t = GeometrySpec::Heisenberg.make().unwrap();
        assert!(t.kind().is_carnot());
        assert!(t.conventions().iter().any(|c| c.contains("[X,Y] = dt")));
        let ou = GeometrySpec::OrnsteinUhlenbeck { dimension: 2 }.make().unwrap();
        assert!(!ou.kind().is_carnot());
        assert_eq!(ou.name(), "ornstein-uhlenbeck(n=2)");
    }
}
