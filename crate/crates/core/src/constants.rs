//! Closed-form evaluation of the explicit constants: the normalization
//! c_{n,d} of the Gaussian optimizer, the sharp constants C*_{β,γ} and
//! K*_{n,α}, the entropy y* of the optimizer, the lowest nonradial
//! eigenvalue λ₁(α), the sphere-estimate coefficient δ(d, n) and the
//! hypercontractivity schedule (σ, t*).
//!
//! All Γ evaluations are routed through log-Γ: n/2 can be large and the
//! constants mix huge and tiny factors.

use crate::error::{Result, WlsError};
use crate::numerics::ln_gamma;
use crate::params::DerivedParams;

use std::f64::consts::{E, PI};

/// The closed-form constants attached to one parameter point.
#[derive(Debug, Clone, Copy)]
pub struct ConstantsReport {
    /// Normalization of the Gaussian optimizer: c_{n,d}² = Γ(d/2) / (2^{n/2} π^{d/2} Γ(n/2)).
    pub c_nd: f64,
    /// C*_{β,γ} = log( (2/(ne))^{n/2} Γ(d/2) / (α^{n−1} π^{d/2} Γ(n/2)) ).
    pub c_star: f64,
    /// K*_{n,α} = C*_{β,γ} − log α.
    pub k_star: f64,
    /// y* = 2 log c_{n,d} − n/2, the entropy of the squared optimizer.
    pub y_star: f64,
    /// |S^{d−1}| = 2 π^{d/2} / Γ(d/2).
    pub sigma_d: f64,
}

/// Volume of the unit sphere S^{d−1}.
pub fn sphere_volume(d: u32) -> f64 {
    let d = d as f64;
    2.0 * (0.5 * d * PI.ln() - ln_gamma(0.5 * d)).exp()
}

/// Evaluate every closed-form constant. Requires n > 0.
pub fn evaluate_constants(dp: &DerivedParams, d: u32) -> Result<ConstantsReport> {
    let n = dp.n;
    if !(n > 0.0) {
        return Err(WlsError::Domain(format!(
            "constants need n > 0, got n = {n}"
        )));
    }
    let df = d as f64;
    let ln_c2 =
        ln_gamma(0.5 * df) - 0.5 * n * 2.0_f64.ln() - 0.5 * df * PI.ln() - ln_gamma(0.5 * n);
    let c_nd = (0.5 * ln_c2).exp();
    let c_star = 0.5 * n * (2.0 / (n * E)).ln() - (n - 1.0) * dp.alpha.ln() - 0.5 * df * PI.ln()
        + ln_gamma(0.5 * df)
        - ln_gamma(0.5 * n);
    let k_star = c_star - dp.alpha.ln();
    let y_star = ln_c2 - 0.5 * n;
    Ok(ConstantsReport {
        c_nd,
        c_star,
        k_star,
        y_star,
        sigma_d: sphere_volume(d),
    })
}

/// C* in the alternative closed form −log((σ_d/2) α^{n−1} (ne/2)^{n/2} Γ(n/2)).
///
/// Algebraically identical to [`evaluate_constants`]; evaluated through a
/// different arithmetic route as a cross-check.
pub fn c_star_alternative_form(dp: &DerivedParams, d: u32) -> Result<f64> {
    let n = dp.n;
    if !(n > 0.0) {
        return Err(WlsError::Domain(format!(
            "constants need n > 0, got n = {n}"
        )));
    }
    let ln_half_sigma = (sphere_volume(d) / 2.0).ln();
    Ok(-(ln_half_sigma
        + (n - 1.0) * dp.alpha.ln()
        + 0.5 * n * (0.5 * n * E).ln()
        + ln_gamma(0.5 * n)))
}

/// Lowest nonradial eigenvalue of the Hessian quadratic form,
/// λ₁(α) = (α/2)(√(4(d−1) + α²(n−2)²) − αn).
///
/// Negative exactly when α > α_FS.
pub fn lambda1(d: u32, n: f64, alpha: f64) -> f64 {
    let df = d as f64;
    0.5 * alpha * ((4.0 * (df - 1.0) + alpha * alpha * (n - 2.0) * (n - 2.0)).sqrt() - alpha * n)
}

/// Coefficient δ(d, n) of the quartic term in the sphere integral estimate:
/// (n−d)(4(d+1)(d−2) + (4d−5)(n−d)) / (4(n−1)(n−2)(d+1)²) for d ≥ 3,
/// and 1/12 for d = 2.
pub fn delta_coefficient(d: u32, n: f64) -> f64 {
    if d == 2 {
        return 1.0 / 12.0;
    }
    let df = d as f64;
    let m = n - df;
    m * (4.0 * (df + 1.0) * (df - 2.0) + (4.0 * df - 5.0) * m)
        / (4.0 * (n - 1.0) * (n - 2.0) * (df + 1.0) * (df + 1.0))
}

/// Hypercontractivity schedule for the weighted heat flow.
#[derive(Debug, Clone, Copy)]
pub struct HyperSchedule {
    /// σ = (2/n) e^{1 − 2c/n}, the entropy-production constant.
    pub sigma: f64,
    /// t* = (1/(4σ)) log((r−1)/(q−1)), the waiting time with ‖u(t*)‖_r ≤ ‖u₀‖_q.
    pub t_star: f64,
    /// H^{q,r} = t*^{(n/2)(r−q)/(qr)}.
    pub h_const: f64,
}

/// Compute (σ, t*, H) from the log-Sobolev constant `c` (C* in the symmetry
/// range, any valid upper bound otherwise) and the exponent pair q < r.
pub fn hyper_schedule(n: f64, c: f64, q: f64, r: f64) -> Result<HyperSchedule> {
    if !(r > q && q > 1.0) {
        return Err(WlsError::Ordering(format!(
            "hyper schedule needs r > q > 1, got q={q}, r={r}"
        )));
    }
    if !(n > 0.0) {
        return Err(WlsError::Domain(format!("n must be positive, got {n}")));
    }
    let sigma = 2.0 / n * (1.0 - 2.0 * c / n).exp();
    let t_star = 0.25 / sigma * ((r - 1.0) / (q - 1.0)).ln();
    let h_const = t_star.powf(0.5 * n * (r - q) / (q * r));
    Ok(HyperSchedule {
        sigma,
        t_star,
        h_const,
    })
}
