//! Raw parameters (d, β, γ), derived scalars and the symmetry /
//! symmetry-breaking classification of the (β, γ) plane.
//!
//! The admissible cone is γ−2 < β < (d−2)γ/d with γ < d. On it the
//! artificial dimension n = 2(d−γ)/(β+2−γ) exceeds d, the anisotropy
//! α = 1 + (β−γ)/2 is positive, and the Felli-Schneider curve
//! β_FS(γ) = d−2−√((d−γ)²−4(d−1)) separates linear stability of the
//! radial optimizer from instability.

use crate::error::{Result, WlsError};

/// Raw problem parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    pub d: u32,
    pub beta: f64,
    pub gamma: f64,
}

impl ProblemParams {
    pub fn new(d: u32, beta: f64, gamma: f64) -> Self {
        assert!(d >= 1, "dimension must be at least 1");
        Self { d, beta, gamma }
    }

    /// Admissibility condition: γ−2 < β < (d−2)γ/d and γ < d.
    pub fn is_admissible(&self) -> bool {
        let d = self.d as f64;
        self.beta.is_finite()
            && self.gamma.is_finite()
            && self.gamma - 2.0 < self.beta
            && self.beta < (d - 2.0) * self.gamma / d
            && self.gamma < d
    }
}

/// Everything derived from (d, β, γ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    /// Artificial dimension n = 2(d−γ)/(β+2−γ).
    pub n: f64,
    /// Anisotropy α = 1 + (β−γ)/2 of the gradient D_α.
    pub alpha: f64,
    /// ν = d − n, the single weight exponent after the change of variables.
    pub nu: f64,
    /// Critical exponent p⋆ = (d−γ)/(d−2−β).
    pub p_star: f64,
    /// α_FS = √((d−1)/(n−1)).
    pub alpha_fs: f64,
    /// β_FS(γ); `None` when (d−γ)² < 4(d−1) makes it complex.
    pub beta_fs: Option<f64>,
}

/// Classification of a parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Inadmissible,
    Symmetry,
    SymmetryBreaking,
    FsBoundary,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Inadmissible => "inadmissible",
            Region::Symmetry => "symmetry",
            Region::SymmetryBreaking => "symmetry_breaking",
            Region::FsBoundary => "fs_boundary",
        }
    }
}

/// Compute every derived scalar. Works on arbitrary real (β, γ); only the
/// degenerate division β+2−γ = 0 is rejected. Admissibility is checked
/// separately by [`ProblemParams::is_admissible`] / [`classify`].
pub fn derive(p: &ProblemParams) -> Result<DerivedParams> {
    let d = p.d as f64;
    let denom = p.beta + 2.0 - p.gamma;
    if denom == 0.0 {
        return Err(WlsError::DegenerateParameters {
            d: p.d,
            beta: p.beta,
            gamma: p.gamma,
        });
    }
    let n = 2.0 * (d - p.gamma) / denom;
    let alpha = 1.0 + 0.5 * (p.beta - p.gamma);
    let nu = d - n;
    let p_star = (d - p.gamma) / (d - 2.0 - p.beta);
    let alpha_fs = ((d - 1.0) / (n - 1.0)).sqrt();
    let disc = (d - p.gamma) * (d - p.gamma) - 4.0 * (d - 1.0);
    let beta_fs = if disc >= 0.0 {
        Some(d - 2.0 - disc.sqrt())
    } else {
        None
    };
    Ok(DerivedParams {
        n,
        alpha,
        nu,
        p_star,
        alpha_fs,
        beta_fs,
    })
}

/// β_FS(γ) for a given dimension, when real.
pub fn beta_fs(d: u32, gamma: f64) -> Option<f64> {
    let d = d as f64;
    let disc = (d - gamma) * (d - gamma) - 4.0 * (d - 1.0);
    if disc >= 0.0 {
        Some(d - 2.0 - disc.sqrt())
    } else {
        None
    }
}

/// Classify a parameter point.
///
/// `tol` is a relative tolerance on the distance to the Felli-Schneider
/// curve; points with |β − β_FS| ≤ tol·max(1, |β_FS|) are reported as
/// [`Region::FsBoundary`]. The curve itself has measure zero, so exact
/// membership is only ever reported through that band.
pub fn classify(p: &ProblemParams, tol: f64) -> Region {
    if !p.is_admissible() {
        return Region::Inadmissible;
    }
    if p.d == 1 {
        return Region::Symmetry;
    }
    match beta_fs(p.d, p.gamma) {
        Some(bfs) => {
            if (p.beta - bfs).abs() <= tol * bfs.abs().max(1.0) {
                Region::FsBoundary
            } else if p.gamma < 0.0 && p.beta > bfs {
                Region::SymmetryBreaking
            } else {
                Region::Symmetry
            }
        }
        // no real FS curve: only reachable with γ > 0, where breaking is
        // excluded anyway
        None => Region::Symmetry,
    }
}

/// Default relative tolerance for the boundary band.
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-12;

/// Recover (β, γ) from (d, n, α) by inverting n = 2(d−γ)/(β+2−γ) and
/// α = 1 + (β−γ)/2: γ = d − nα, β = γ + 2α − 2.
pub fn params_from_n_alpha(d: u32, n: f64, alpha: f64) -> Result<ProblemParams> {
    if !(n.is_finite() && alpha.is_finite()) || alpha <= 0.0 {
        return Err(WlsError::InvalidParameters(format!(
            "need finite n and alpha > 0, got n={n}, alpha={alpha}"
        )));
    }
    let gamma = d as f64 - n * alpha;
    let beta = gamma + 2.0 * alpha - 2.0;
    Ok(ProblemParams::new(d, beta, gamma))
}
