//! Linear stability of the radial optimizer: the Hessian quadratic form on
//! the first nonradial sector, the radial eigenproblem it reduces to, and
//! the closed form λ₁(α).
//!
//! The quadratic form on ℓ=1 perturbations φ = φ₁(s) Y₁(ω) is
//!
//!   F[φ] = ‖D_α φ‖²_{2,ν} − α²(1 + n/2)‖φ‖²_{2,ν} + (α²/4)∫|φ|² s² |x|^{-ν} dx,
//!
//! and separating the harmonic leaves the radial operator
//!
//!   H = −α²(∂_ss + (n−1) s⁻¹ ∂_s) + (d−1)/s² + (α²/4) s²
//!
//! acting against s^{n-1} ds. Its ground eigenvalue Λ relates to the form by
//! λ₁ = Λ − α²(1 + n/2); the eigenvalue display drops that shift, so both
//! numbers are carried explicitly. The closed-form eigenfunction is
//! s^{1+δ} e^{-s²/4} with δ = λ₁/α², pinned by α²(1+δ)(δ+n−1) = d−1.

use crate::constants::lambda1;
use crate::error::{Result, WlsError};
use crate::functionals::{Candidate, FunctionalCtx, ProfileFn};
use crate::numerics::SymTridiag;
use crate::params::{derive, DerivedParams, ProblemParams};
use crate::quadrature::{tail_s_max, RadialRuleKind};

use std::sync::Arc;

/// Numeric ground eigenvalue paired with the closed-form prediction.
#[derive(Debug, Clone)]
pub struct EigenResult {
    /// Λ − α²(1 + n/2), extrapolated from two grids.
    pub lambda_numeric: f64,
    /// λ₁(α) from the closed form.
    pub lambda_formula: f64,
    /// The shift α²(1 + n/2) between Λ and λ₁.
    pub shift: f64,
    /// Richardson error estimate on `lambda_numeric`.
    pub error_estimate: f64,
    /// Grid of the computed ground mode.
    pub mode_nodes: Vec<f64>,
    /// Ground-mode samples (nodeless, max-normalized).
    pub mode_values: Vec<f64>,
}

/// Stability verdict for a parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

impl Stability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Marginal => "marginal",
        }
    }
}

/// Hessian quadratic form F[φ] for a pure ℓ=1 candidate.
///
/// The candidate must have no radial (ℓ=0) component: those directions are
/// controlled by the orthogonality constraints ∫(1, |x|²) g* φ |x|^{-ν} = 0,
/// which hold automatically for a single nonradial harmonic.
pub fn hessian_form(ctx: &FunctionalCtx, phi: &Candidate) -> Result<f64> {
    let mode = phi.angular.as_ref().ok_or_else(|| {
        WlsError::InvalidParameters("hessian form needs an ℓ=1 angular mode".into())
    })?;
    if mode.ell != 1 {
        return Err(WlsError::InvalidParameters(format!(
            "hessian form is defined for ℓ=1 only, got ℓ={}",
            mode.ell
        )));
    }
    let alpha2 = ctx.dp.alpha * ctx.dp.alpha;
    let sigma_d = ctx.consts.sigma_d;
    let nodes = &ctx.radial.nodes;
    let g1: Vec<f64> = nodes.iter().map(|&s| (mode.profile)(s)).collect();
    let dg1: Vec<f64> = nodes.iter().map(|&s| (mode.deriv)(s)).collect();
    let g0: Vec<f64> = nodes.iter().map(|&s| (phi.radial)(s)).collect();

    let sq = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| x * x).collect() };
    let norm_mode = sigma_d * ctx.radial.integrate_bare(&sq(&g1))?;
    let norm_radial = sigma_d * ctx.radial.integrate_bare(&sq(&g0))?;
    if norm_radial > 1e-10 * norm_mode.max(1e-300) {
        return Err(WlsError::InvalidParameters(format!(
            "candidate has a radial component above tolerance: ‖φ₀‖² = {norm_radial:e}"
        )));
    }

    let df = ctx.d as f64;
    let grad_vals: Vec<f64> = nodes
        .iter()
        .zip(g1.iter().zip(&dg1))
        .map(|(&s, (&v, &dv))| alpha2 * dv * dv + (df - 1.0) * v * v / (s * s))
        .collect();
    let grad = sigma_d * ctx.radial.integrate_bare(&grad_vals)?;
    let moment_vals: Vec<f64> = nodes
        .iter()
        .zip(&g1)
        .map(|(&s, &v)| v * v * s * s)
        .collect();
    let moment = sigma_d * ctx.radial.integrate_bare(&moment_vals)?;
    let n = ctx.dp.n;
    Ok(grad - alpha2 * (1.0 + 0.5 * n) * norm_mode + 0.25 * alpha2 * moment)
}

/// The closed-form ground mode s^{1+δ} e^{-s²/4}, δ = λ₁/α², as an ℓ=1
/// candidate (zero radial part).
pub fn explicit_mode(ctx: &FunctionalCtx) -> Candidate {
    let delta = lambda1(ctx.d, ctx.dp.n, ctx.dp.alpha) / (ctx.dp.alpha * ctx.dp.alpha);
    let zero: ProfileFn = Arc::new(|_| 0.0);
    let zero_d: ProfileFn = Arc::new(|_| 0.0);
    let profile: ProfileFn = Arc::new(move |s: f64| s.powf(1.0 + delta) * (-0.25 * s * s).exp());
    let deriv: ProfileFn = Arc::new(move |s: f64| {
        s.powf(delta) * ((1.0 + delta) - 0.5 * s * s) * (-0.25 * s * s).exp()
    });
    Candidate {
        radial: zero,
        radial_deriv: zero_d,
        angular: Some(crate::functionals::AngularMode {
            ell: 1,
            profile,
            deriv,
        }),
    }
}

/// Ground eigenvalue of the radial instability operator on a graded grid.
///
/// Discretizes H in symmetric (flux) form against s^{n-1} ds on
/// s_j = S_max (j/(J+1))^{3/2} with Dirichlet conditions at both ends, finds
/// the smallest eigenvalue by bisection on the Sturm sequence, repeats at
/// twice the resolution and Richardson-extrapolates. `tol` bounds the
/// admissible extrapolation disagreement on λ.
pub fn radial_eigensolve(
    d: u32,
    dp: &DerivedParams,
    grid_size: usize,
    tol: f64,
) -> Result<EigenResult> {
    if d < 2 {
        return Err(WlsError::InvalidParameters(
            "radial eigensolve needs d >= 2".into(),
        ));
    }
    if grid_size < 64 {
        return Err(WlsError::Accuracy("eigensolver grid too small".into()));
    }
    let (half, _, _) = ground_eigenvalue(d, dp, grid_size / 2)?;
    let (coarse, _, _) = ground_eigenvalue(d, dp, grid_size)?;
    let (fine, nodes, mode) = ground_eigenvalue(d, dp, 2 * grid_size)?;
    // second-order scheme: extrapolate the (grid, 2·grid) pair and estimate
    // the remaining error from the disagreement with the previous pair
    let prev = (4.0 * coarse - half) / 3.0;
    let extrapolated = (4.0 * fine - coarse) / 3.0;
    let error_estimate = (extrapolated - prev)
        .abs()
        .max(f64::EPSILON * extrapolated.abs());
    let shift = dp.alpha * dp.alpha * (1.0 + 0.5 * dp.n);
    let lambda_numeric = extrapolated - shift;
    let lambda_formula = lambda1(d, dp.n, dp.alpha);
    if error_estimate > tol.max(1e-14) {
        return Err(WlsError::GridTooCoarse(format!(
            "Richardson disagreement {error_estimate:e} exceeds tol {tol:e} at grid {grid_size}"
        )));
    }
    // ground state must be nodeless
    let sign_changes = mode
        .windows(2)
        .filter(|w| w[0] * w[1] < 0.0 && w[0].abs() > 1e-9 && w[1].abs() > 1e-9)
        .count();
    if sign_changes > 0 {
        return Err(WlsError::InternalConsistency(format!(
            "computed ground mode has {sign_changes} sign changes"
        )));
    }
    Ok(EigenResult {
        lambda_numeric,
        lambda_formula,
        shift,
        error_estimate,
        mode_nodes: nodes,
        mode_values: mode,
    })
}

/// One discrete solve: returns (Λ, nodes, max-normalized ground mode).
fn ground_eigenvalue(d: u32, dp: &DerivedParams, j: usize) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let (tri, nodes, masses) = discretize_operator(d, dp, j)?;
    let lam = tri.smallest_eigenvalue();
    let w = tri.eigenvector(lam);
    // undo the symmetrizing scaling v = M^{1/2} φ
    let mut mode: Vec<f64> = w
        .iter()
        .zip(&masses)
        .map(|(&wi, &mi)| wi / mi.sqrt())
        .collect();
    let maxv = mode.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    if maxv > 0.0 {
        for v in mode.iter_mut() {
            *v /= maxv;
        }
    }
    Ok((lam, nodes, mode))
}

/// Symmetric finite-volume discretization of H against s^{n-1} ds.
///
/// Exact-resistance face conductances C = α²(2−n)/(s_R^{2−n} − s_L^{2−n})
/// and exact cell integrals of the measure and of both potential terms keep
/// second-order accuracy on the graded grid down to the cusp at the origin.
pub(crate) fn discretize_operator(
    d: u32,
    dp: &DerivedParams,
    j: usize,
) -> Result<(SymTridiag, Vec<f64>, Vec<f64>)> {
    let n = dp.n;
    let alpha2 = dp.alpha * dp.alpha;
    if !(n > 2.0) {
        return Err(WlsError::Domain(format!(
            "eigensolver needs n > 2 (measure exponent), got n = {n}"
        )));
    }
    let s_max = tail_s_max(n);
    let grade = 1.5;
    let nodes: Vec<f64> = (1..=j)
        .map(|k| s_max * (k as f64 / (j + 1) as f64).powf(grade))
        .collect();
    let ghost_right = s_max;

    // faces: midpoints, plus s₁/2 on the left and (s_J + S)/2 on the right
    let mut faces = Vec::with_capacity(j + 1);
    faces.push(0.5 * nodes[0]);
    for w in nodes.windows(2) {
        faces.push(0.5 * (w[0] + w[1]));
    }
    faces.push(0.5 * (nodes[j - 1] + ghost_right));

    let powdiff = |a: f64, b: f64, p: f64| (b.powf(p) - a.powf(p)) / p;
    let df = d as f64;
    let mut masses = Vec::with_capacity(j);
    let mut potential = Vec::with_capacity(j);
    for k in 0..j {
        let (fa, fb) = (faces[k], faces[k + 1]);
        // floor against underflow: for large n the first cells carry
        // 10^{-200}-scale measure and only need to stay positive
        let m = powdiff(fa, fb, n).max(1e-280);
        let hardy = (df - 1.0) * powdiff(fa, fb, n - 2.0);
        let confine = 0.25 * alpha2 * powdiff(fa, fb, n + 2.0);
        masses.push(m);
        potential.push(hardy + confine);
    }

    // conductance between adjacent nodes; the origin face has infinite
    // resistance for n > 2, the right face couples to the Dirichlet ghost
    let conduct = |a: f64, b: f64| alpha2 * (2.0 - n) / (b.powf(2.0 - n) - a.powf(2.0 - n));
    let mut cond = Vec::with_capacity(j);
    for k in 0..j - 1 {
        cond.push(conduct(nodes[k], nodes[k + 1]));
    }
    let c_right = conduct(nodes[j - 1], ghost_right);

    let mut diag = Vec::with_capacity(j);
    let mut off = Vec::with_capacity(j - 1);
    for k in 0..j {
        let left = if k == 0 { 0.0 } else { cond[k - 1] };
        let right = if k == j - 1 { c_right } else { cond[k] };
        diag.push((left + right + potential[k]) / masses[k]);
        if k < j - 1 {
            // sqrt before multiplying: the mass product itself can underflow
            off.push(-cond[k] / (masses[k].sqrt() * masses[k + 1].sqrt()));
        }
    }
    Ok((SymTridiag::new(diag, off), nodes, masses))
}

/// Certify the stability verdict at a parameter point: the sign of the
/// closed form λ₁ must agree with the sign of the quadratic form on the
/// explicit eigenmode; a disagreement is raised, never silently resolved.
pub fn instability_certificate(params: &ProblemParams, tol: f64) -> Result<Stability> {
    if params.d < 2 {
        return Err(WlsError::InvalidParameters(
            "instability certificate needs d >= 2".into(),
        ));
    }
    if !params.is_admissible() {
        return Err(WlsError::InvalidParameters(format!(
            "inadmissible parameters (d={}, beta={}, gamma={})",
            params.d, params.beta, params.gamma
        )));
    }
    let dp = derive(params)?;
    let lam = lambda1(params.d, dp.n, dp.alpha);
    let ctx = FunctionalCtx::new(params.d, dp, 24, 32, RadialRuleKind::AdaptivePanel)?;
    let phi = explicit_mode(&ctx);
    let form = hessian_form(&ctx, &phi)?;
    let mode = phi.angular.as_ref().expect("explicit mode");
    let g1: Vec<f64> = ctx
        .radial
        .nodes
        .iter()
        .map(|&s| (mode.profile)(s))
        .collect();
    let norm = ctx.consts.sigma_d
        * ctx
            .radial
            .integrate_bare(&g1.iter().map(|v| v * v).collect::<Vec<_>>())?;
    let rayleigh = form / norm;
    if (rayleigh - lam).abs() > 1e-5 * lam.abs().max(1.0) {
        return Err(WlsError::InternalConsistency(format!(
            "quadratic form on the explicit mode gives {rayleigh}, closed form gives {lam}"
        )));
    }
    let t = tol.max(0.0);
    if lam.abs() <= t {
        Ok(Stability::Marginal)
    } else if lam < 0.0 {
        Ok(Stability::Unstable)
    } else {
        Ok(Stability::Stable)
    }
}
