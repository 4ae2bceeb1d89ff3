//! Numerical certificates: PDE residuals, stability spectra, the geometric
//! Poincaré inequality, `CD(K,∞)`, Bochner-type identities and rigidity
//! diagnostics.
//!
//! Every check works on finite samples. A violation found is a genuine
//! counterexample (up to quadrature accuracy); absence of violations is
//! evidence only.

mod carnot;
mod curvature;
mod grushin;
mod poincare;
mod residual;
mod rigidity;
mod spectrum;

use crate::error::{Error, Result};
use crate::function::SmoothFunction;
use crate::jet::point;
use crate::quad::QuadratureGrid;
use crate::series::Univariate;
use crate::triple::MarkovTriple;

pub use carnot::{bochner_carnot_check, filiform_levelset_check, FiliformReport, LevelSetSample};
pub use curvature::{cd_check, cd_random_search};
pub use grushin::grushin_gamma2_check;
pub use poincare::{poincare_certificate, Hypotheses};
pub use residual::{residual, ResidualReport};
pub use rigidity::{rigidity_report, RigidityReport};
pub use spectrum::{stability_spectrum, BumpBasis};

/// A solution candidate `u` of `Lu + F(u) = 0` with its quadrature grid.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub triple: MarkovTriple,
    pub u: SmoothFunction,
    /// `F` as a function of one variable.
    pub nonlinearity: SmoothFunction,
    pub grid: QuadratureGrid,
}

impl ProblemInstance {
    pub fn new(triple: MarkovTriple, u: SmoothFunction, nonlinearity: SmoothFunction, grid: QuadratureGrid) -> Result<Self> {
        let n = triple.dimension();
        if u.dimension() != n {
            return Err(Error::DimensionMismatch { expected: n, found: u.dimension() });
        }
        if nonlinearity.dimension() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: nonlinearity.dimension() });
        }
        if grid.domain().dimension() != n {
            return Err(Error::DimensionMismatch { expected: n, found: grid.domain().dimension() });
        }
        Ok(ProblemInstance { triple, u, nonlinearity, grid })
    }

    /// `(F(s), F'(s))`.
    pub fn f_and_derivative(&self, s: f64) -> Result<(f64, f64)> {
        let j = self.nonlinearity.jet(&point(&[s]), 1)?;
        Ok((j.value(), j.coefficients()[1]))
    }

    pub fn nonlinearity_map(&self) -> Result<Univariate> {
        self.nonlinearity.as_univariate()
    }
}

/// Pointwise quantities of `u` used by several certificates.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PointData {
    pub gamma: f64,
    pub gamma2: f64,
    /// `Γ(Γ(u))`.
    pub gamma_gamma: f64,
}

pub(crate) fn point_data(triple: &MarkovTriple, u: &SmoothFunction, x: &[f64]) -> Result<PointData> {
    let p = point(x);
    let local = triple.local(&p, 3)?;
    let uj = u.jet(&p, 3)?;
    let g = local.gamma(&uj, &uj)?;
    Ok(PointData {
        gamma: g.value(),
        gamma2: local.gamma2(&uj, &uj)?.value(),
        gamma_gamma: local.gamma(&g, &g)?.value(),
    })
}

/// `Γ(Γ(u)) / (4(Γ(u) + ε))` from precomputed data.
pub(crate) fn regularized(d: &PointData, epsilon: f64) -> f64 {
    d.gamma_gamma / (4.0 * (d.gamma + epsilon))
}

pub(crate) fn require(ok: bool, check: &'static str, required: &'static str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::WrongGeometry { check, required })
    }
}
