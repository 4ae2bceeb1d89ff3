use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use super::ProblemInstance;
use crate::error::{Error, Result};
use crate::function::SmoothFunction;
use crate::jet::Jet;
use crate::quad::Domain;
use crate::report::SpectrumReport;
use crate::series::Univariate;

/// Number of quadrature nodes per assembly chunk.
const CHUNK: usize = 256;

/// Number of eigenvalues kept in reports.
const REPORTED: usize = 8;

/// Bumps `((1 − Σ((xᵢ − cᵢ)/ρᵢ)²)₊)⁴` centered on an interior lattice.
///
/// With `k` bumps per axis the spacing is `h = (upper − lower)/(k + 7)`, the
/// radius `ρ = 4h` and the centers `lower + 4h + i h`, so every support lies
/// inside the box and support edges fall on the lattice `lower + j h`.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpBasis {
    centers: Vec<Vec<f64>>,
    radius: Vec<f64>,
}

impl BumpBasis {
    pub fn lattice(domain: &Domain, per_axis: usize) -> Result<Self> {
        if per_axis == 0 {
            return Err(Error::InvalidParameter("basis needs at least one bump per axis".into()));
        }
        let n = domain.dimension();
        let h: Vec<f64> = (0..n).map(|i| (domain.upper[i] - domain.lower[i]) / (per_axis + 7) as f64).collect();
        let mut centers = Vec::new();
        let mut index = vec![0usize; n];
        for _ in 0..per_axis.pow(n as u32) {
            centers.push((0..n).map(|i| domain.lower[i] + h[i] * (4 + index[i]) as f64).collect());
            for i in (0..n).rev() {
                index[i] += 1;
                if index[i] < per_axis {
                    break;
                }
                index[i] = 0;
            }
        }
        Ok(BumpBasis { centers, radius: h.iter().map(|h| 4.0 * h).collect() })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn radius(&self) -> &[f64] {
        &self.radius
    }

    /// Value and gradient of bump `i` at `x`, or `None` outside its support.
    pub fn value_gradient(&self, i: usize, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let c = &self.centers[i];
        let s: f64 = x.iter().zip(c).zip(&self.radius).map(|((x, c), r)| ((x - c) / r).powi(2)).sum();
        if s >= 1.0 {
            return None;
        }
        let q = 1.0 - s;
        let grad = x.iter().zip(c).zip(&self.radius).map(|((x, c), r)| -8.0 * q.powi(3) * (x - c) / (r * r)).collect();
        Some((q.powi(4), grad))
    }

    /// Bump `i` as a smooth function.
    pub fn function(&self, i: usize) -> SmoothFunction {
        let (c, r) = (self.centers[i].clone(), self.radius.clone());
        SmoothFunction::from_fn(c.len(), format!("bump {i}"), move |p, order| {
            let s: f64 = p.iter().zip(&c).zip(&r).map(|((x, c), r)| ((x - c) / r).powi(2)).sum();
            if s >= 1.0 {
                return Ok(Jet::zero(p, order));
            }
            let mut q = Jet::constant(1.0, p, order);
            for (k, (c, r)) in c.iter().zip(&r).enumerate() {
                let t = Jet::variable(k, p, order)?.add_constant(-c).scale(1.0 / r);
                q = q.sub(&t.mul(&t)?)?;
            }
            q.compose_univariate(&Univariate::Powi(4))
        })
    }

    /// `Σ cᵢ φᵢ`.
    pub fn combination(&self, coefficients: &[f64]) -> SmoothFunction {
        let basis = self.clone();
        let coefficients = coefficients.to_vec();
        let n = self.radius.len();
        SmoothFunction::from_fn(n, "basis combination", move |p, order| {
            let mut acc = Jet::zero(p, order);
            for (i, c) in coefficients.iter().enumerate() {
                if *c != 0.0 {
                    acc = acc.add(&basis.function(i).jet(p, order)?.scale(*c))?;
                }
            }
            Ok(acc)
        })
    }

    pub fn describe(&self) -> String {
        format!(
            "{} lattice bumps ((1 - |(x-c)/rho|^2)_+)^4, rho = {:?}",
            self.len(),
            self.radius.iter().map(|r| (r * 1e12).round() / 1e12).collect::<Vec<_>>()
        )
    }
}

/// Assembles `A = ∫[Γ(φᵢ,φⱼ) − F'(u)φᵢφⱼ] dμ` and `M = ∫φᵢφⱼ dμ` over the
/// bump basis and solves `A c = λ M c`.
pub fn stability_spectrum(p: &ProblemInstance, per_axis: usize, tol: f64) -> Result<SpectrumReport> {
    let basis = BumpBasis::lattice(p.grid.domain(), per_axis)?;
    let (a, m) = assemble(p, &basis)?;
    let (eigenvalues, vectors) = generalized_eigen(&a, &m)?;
    let lambda_min = eigenvalues[0];
    let stable = lambda_min >= -tol;
    let witness = (!stable).then(|| vectors.column(0).iter().copied().collect());
    Ok(SpectrumReport {
        basis: basis.describe(),
        basis_size: basis.len(),
        quadrature_nodes: p.grid.len(),
        eigenvalues: eigenvalues.iter().take(REPORTED).copied().collect(),
        lambda_min,
        tolerance: tol,
        stable,
        verdict: if stable { "stable within tol".into() } else { "unstable".into() },
        witness,
    })
}

fn assemble(p: &ProblemInstance, basis: &BumpBasis) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let size = basis.len();
    let weighted = p.triple.log_weight().is_some();
    let weights = p.grid.effective_weights(weighted);
    let nodes = p.grid.nodes();
    let chunks: Vec<(DMatrix<f64>, DMatrix<f64>)> = (0..nodes.len().div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut a = DMatrix::zeros(size, size);
            let mut m = DMatrix::zeros(size, size);
            for k in c * CHUNK..((c + 1) * CHUNK).min(nodes.len()) {
                let x = &nodes[k];
                let active: Vec<(usize, f64, Vec<f64>)> =
                    (0..size).filter_map(|i| basis.value_gradient(i, x).map(|(v, g)| (i, v, g))).collect();
                if active.is_empty() {
                    continue;
                }
                let frame: Vec<Vec<f64>> = p.triple.frame().iter().map(|z| z.values(x)).collect::<Result<_>>()?;
                let (_, potential) = p.f_and_derivative(p.u.value(x)?)?;
                let z_phi: Vec<Vec<f64>> = active
                    .iter()
                    .map(|(_, _, g)| frame.iter().map(|z| z.iter().zip(g).map(|(a, b)| a * b).sum()).collect())
                    .collect();
                let w = weights[k];
                for (s, (i, vi, _)) in active.iter().enumerate() {
                    for (t, (j, vj, _)) in active.iter().enumerate() {
                        let gamma: f64 = z_phi[s].iter().zip(&z_phi[t]).map(|(a, b)| a * b).sum();
                        a[(*i, *j)] += w * (gamma - potential * vi * vj);
                        m[(*i, *j)] += w * vi * vj;
                    }
                }
            }
            Ok((a, m))
        })
        .collect::<Result<_>>()?;
    let mut a = DMatrix::zeros(size, size);
    let mut m = DMatrix::zeros(size, size);
    for (ca, cm) in chunks {
        a += ca;
        m += cm;
    }
    if !a.iter().chain(m.iter()).all(|v| v.is_finite()) {
        return Err(Error::NonFinite { point: Vec::new() });
    }
    Ok((a, m))
}

/// Eigenvalues (ascending) and `M`-orthonormal eigenvectors of `A c = λ M c`.
pub(crate) fn generalized_eigen(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("mass matrix of the test basis".into()))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotPositiveDefinite("mass matrix factor is singular".into()))?;
    let c = &l_inv * a * l_inv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let lt_inv = l_inv.transpose();
    let mut vectors = DMatrix::zeros(a.nrows(), order.len());
    for (col, &i) in order.iter().enumerate() {
        let mut v = &lt_inv * eig.eigenvectors.column(i);
        // fix the sign so the largest entry is positive
        let big = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if big < 0.0 {
            v = -v;
        }
        vectors.set_column(col, &v);
    }
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometries::GeometrySpec;
    use crate::quad::{build_grid, Rule};
    use approx::assert_abs_diff_eq;

    #[test]
    fn lattice_supports_stay_inside() {
        let d = Domain::new(vec![-2.0, 0.0], vec![2.0, 1.0]).unwrap();
        let b = BumpBasis::lattice(&d, 5).unwrap();
        assert_eq!(b.len(), 25);
        for c in b.centers() {
            for i in 0..2 {
                assert!(c[i] - b.radius()[i] >= d.lower[i] - 1e-12);
                assert!(c[i] + b.radius()[i] <= d.upper[i] + 1e-12);
            }
        }
    }

    #[test]
    fn closed_form_matches_jets() {
        let d = Domain::cube(2, 1.0).unwrap();
        let b = BumpBasis::lattice(&d, 3).unwrap();
        let x = [-0.1, 0.05];
        for i in 0..b.len() {
            let j = b.function(i).jet(&crate::jet::point(&x), 1).unwrap();
            match b.value_gradient(i, &x) {
                Some((v, g)) => {
                    assert_abs_diff_eq!(v, j.value(), epsilon = 1e-14);
                    assert_abs_diff_eq!(g[0], j.gradient()[0], epsilon = 1e-13);
                    assert_abs_diff_eq!(g[1], j.gradient()[1], epsilon = 1e-13);
                }
                None => assert_eq!(j.value(), 0.0),
            }
        }
    }

    #[test]
    fn generalized_eigen_of_diagonal_pencil() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, -2.0, 8.0]));
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 4.0]));
        let (values, vectors) = generalized_eigen(&a, &m).unwrap();
        assert_abs_diff_eq!(values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(values[1], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(values[2], 3.0, epsilon = 1e-14);
        let v = vectors.column(0);
        assert_abs_diff_eq!((v.transpose() * &m * v)[(0, 0)], 1.0, epsilon = 1e-14);
        let singular = DMatrix::zeros(3, 3);
        assert!(matches!(generalized_eigen(&a, &singular), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn pure_gamma_form_is_nonnegative() {
        let t = GeometrySpec::Heisenberg.make().unwrap();
        let grid = build_grid(&Domain::cube(3, 1.0).unwrap(), &[3], Rule::CompositeGaussLegendre { panels: 10 }).unwrap();
        let u = SmoothFunction::parse("x1*x2 - x3", 3).unwrap();
        let p = ProblemInstance::new(t, u, SmoothFunction::constant(1, 0.0), grid).unwrap();
        let r = stability_spectrum(&p, 3, 1e-9).unwrap();
        assert!(r.stable && r.lambda_min > 0.0, "{r:?}");
        assert!(r.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn zero_solution_is_unstable() {
        let t = GeometrySpec::EuclideanWeighted { dimension: 1, log_weight: None }.make().unwrap();
        let half = 5.0;
        let k = 60;
        let grid = build_grid(&Domain::cube(1, half).unwrap(), &[6], Rule::CompositeGaussLegendre { panels: k + 7 }).unwrap();
        let f = SmoothFunction::from_expression(crate::expr::parse_univariate("s - s^3", "s").unwrap());
        let p = ProblemInstance::new(t, SmoothFunction::constant(1, 0.0), f, grid).unwrap();
        let r = stability_spectrum(&p, k, 1e-6).unwrap();
        let expected = (std::f64::consts::PI / (2.0 * half)).powi(2) - 1.0;
        assert!(!r.stable);
        assert!((r.lambda_min - expected).abs() < 1e-2, "{} vs {expected}", r.lambda_min);
        assert_eq!(r.witness.as_ref().unwrap().len(), k);
    }
}
