//! Subcritical interpolation constants and the p → 1 limit that connects
//! them to the logarithmic Sobolev constant.
//!
//! For p ∈ (1, p⋆] the interpolation inequality
//! ‖F‖_{2p,ν} ≤ 𝖪_{α,n,p} ‖D_α F‖^ϑ_{2,ν} ‖F‖^{1−ϑ}_{p+1,ν} holds with
//! ϑ = n(p−1)/(p·b(p)), b(p) = n+2−p(n−2), and in the symmetry range the
//! optimal constant is attained by the profile (1 + (p−1)s²/2)^{1/(1−p)}.
//! All three norms of that profile are Beta integrals, so 𝖪*_{α,n,p} is
//! evaluated here directly from the equality case through log-Γ:
//!
//!   ∫₀^∞ s^{a-1} (1+cs²)^{-m} ds = ½ c^{-a/2} Γ(a/2)Γ(m−a/2)/Γ(m).
//!
//! The f-variable constant is 𝖢*_{β,γ,p} = α^ζ 𝖪*_{α,n,p} with
//! ζ = ϑ/2 + (1−ϑ)/(p+1) − 1/(2p) = (p−1)/(p·b(p)), and
//! C*_{β,γ} = 4 lim_{p→1⁺} (𝖢*_{β,γ,p} − 1)/(p − 1).

use crate::error::{Result, WlsError};
use crate::numerics::{ln_gamma, ln_gamma_ratio, richardson_limit};
use crate::params::{derive, ProblemParams};

/// Constants of the subcritical inequality at one exponent p.
#[derive(Debug, Clone, Copy)]
pub struct CknPoint {
    pub p: f64,
    /// Interpolation exponent ϑ(p) ∈ (0, 1], with ϑ(p⋆) = 1.
    pub theta: f64,
    /// ζ(p) = ϑ/2 + (1−ϑ)/(p+1) − 1/(2p); ζ(1) = 0, ζ'(1) = 1/4.
    pub zeta: f64,
    /// b(p) = n + 2 − p(n−2); b(1) = 4.
    pub b: f64,
    /// 𝖢*_{β,γ,p} = α^ζ 𝖪*_{α,n,p}.
    pub c_star_p: f64,
    /// 𝖪*_{α,n,p}, the α-coordinate constant.
    pub k_star_p: f64,
}

/// log of ∫₀^∞ s^{a-1}(1+cs²)^{-m} ds (the Beta integral), m > a/2.
fn ln_beta_integral(a: f64, c: f64, m: f64) -> f64 {
    -(2.0_f64.ln()) - 0.5 * a * c.ln() + ln_gamma(0.5 * a) + ln_gamma_ratio(m, 0.5 * a)
}

/// Evaluate ϑ, ζ, b and the sharp constants at exponent p.
///
/// Valid as the optimal value only in the symmetry range; the caller pairs
/// the numbers with the region classification.
pub fn ckn_constants(params: &ProblemParams, p: f64) -> Result<CknPoint> {
    if !params.is_admissible() {
        return Err(WlsError::InvalidParameters(format!(
            "inadmissible parameters (d={}, beta={}, gamma={})",
            params.d, params.beta, params.gamma
        )));
    }
    let dp = derive(params)?;
    let n = dp.n;
    let p_star = dp.p_star;
    if !(p > 1.0 && p <= p_star * (1.0 + 1e-12)) {
        return Err(WlsError::Domain(format!(
            "p must lie in (1, p*] = (1, {p_star}], got {p}"
        )));
    }
    let df = params.d as f64;
    let b = n + 2.0 - p * (n - 2.0);
    // ϑ from the scaling relation, in the raw (β, γ) variables
    let theta = (df - params.gamma) * (p - 1.0)
        / (p * ((df + 2.0 + params.beta - 2.0 * params.gamma) - p * (df - 2.0 - params.beta)));
    let zeta = (p - 1.0) / (p * b);

    // equality-case profile (1 + c s²)^{1/(1-p)} with c = (p-1)/2
    let c = 0.5 * (p - 1.0);
    let m = 2.0 * p / (p - 1.0);
    let m2 = (p + 1.0) / (p - 1.0);
    let ln_half_sphere = {
        // log(σ_d), σ_d = 2π^{d/2}/Γ(d/2)
        2.0_f64.ln() + 0.5 * df * std::f64::consts::PI.ln() - ln_gamma(0.5 * df)
    };
    let ln_i1 = ln_half_sphere + ln_beta_integral(n, c, m);
    let ln_i2 = ln_half_sphere + ln_beta_integral(n, c, m2);
    let ln_i3 = ln_half_sphere + 2.0 * dp.alpha.ln() + ln_beta_integral(n + 2.0, c, m);

    let ln_k = ln_i1 / (2.0 * p) - 0.5 * theta * ln_i3 - (1.0 - theta) / (p + 1.0) * ln_i2;
    let k_star_p = ln_k.exp();
    let c_star_p = (zeta * dp.alpha.ln() + ln_k).exp();
    if !(k_star_p.is_finite() && c_star_p.is_finite()) {
        return Err(WlsError::NonFinite(format!(
            "CKN constant evaluation at p = {p}"
        )));
    }
    Ok(CknPoint {
        p,
        theta,
        zeta,
        b,
        c_star_p,
        k_star_p,
    })
}

/// Richardson-extrapolated limit of 4(𝖢*_p − 1)/(p − 1) along a decreasing
/// sequence p_k → 1⁺; equals C*_{β,γ} in the symmetry range.
///
/// The direct quotient is used as stated; its agreement with the logarithmic
/// variant 4 log(𝖢*_p)/(p−1) after extrapolation is checked internally.
pub fn limit_probe(params: &ProblemParams, p_seq: &[f64]) -> Result<f64> {
    if p_seq.len() < 3 {
        return Err(WlsError::NonConvergent(
            "limit probe needs at least 3 exponents".into(),
        ));
    }
    let mut direct = Vec::with_capacity(p_seq.len());
    let mut logvar = Vec::with_capacity(p_seq.len());
    for &p in p_seq {
        let pt = ckn_constants(params, p)?;
        direct.push(4.0 * (pt.c_star_p - 1.0) / (p - 1.0));
        logvar.push(4.0 * pt.c_star_p.ln() / (p - 1.0));
    }
    // the sequences decay geometrically when p_k = 1 + ρ^{-k}
    let ratio = ((p_seq[0] - 1.0) / (p_seq[1] - 1.0)).max(1.5);
    let (lim, est, monotone) = richardson_limit(&direct, ratio)?;
    if !monotone && est > 1e-6 * lim.abs().max(1.0) {
        return Err(WlsError::NonConvergent(format!(
            "limit probe diverges: estimate {est:e} at limit {lim}"
        )));
    }
    let (lim_log, _, _) = richardson_limit(&logvar, ratio)?;
    if (lim - lim_log).abs() > 1e-4 * lim.abs().max(1.0) {
        return Err(WlsError::InternalConsistency(format!(
            "direct and logarithmic limit variants disagree: {lim} vs {lim_log}"
        )));
    }
    Ok(lim)
}

/// Aubin-Talenti type profile 𝗀(x) = (1 + |x|^{2+β−γ})^{-1/(p-1)}.
pub fn aubin_talenti_eval(params: &ProblemParams, p: f64, x_abs: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(WlsError::Domain(format!("need p > 1, got {p}")));
    }
    if x_abs < 0.0 {
        return Err(WlsError::Domain(format!("need |x| >= 0, got {x_abs}")));
    }
    let expo = 2.0 + params.beta - params.gamma;
    Ok((1.0 + x_abs.powf(expo)).powf(-1.0 / (p - 1.0)))
}
