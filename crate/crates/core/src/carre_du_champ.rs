//! The differential operators D_α and L_α, the carré-du-champ functionals
//! K[·] and k[·], the pointwise algebraic identity they satisfy, and the
//! integral estimate on the sphere that closes the symmetry proof.
//!
//! For an azimuthally symmetric pressure p(r, θ),
//!
//!   K[D_α p] = ½ L_α|D_α p|² − D_α p · D_α L_α p − (1/n)(L_α p)²
//!
//! decomposes pointwise as
//!
//!   α⁴(1−1/n) |p_rr − p_r/r − Δ_ω p/(α²(n−1)r²)|²
//!     + (2α²/r²) |p_rθ − p_θ/r|² + k[p]/r⁴,
//!
//! with
//!
//!   k[p] = ½ Δ_ω|∇_ω p|² − ∇_ω p·∇_ω(Δ_ω p) − (Δ_ω p)²/(n−1) − (n−2)α²|∇_ω p|².
//!
//! Derivatives are supplied analytically by test-function factories
//! (monomials × Gaussians × polynomials in cos θ, plus trigonometric modes
//! when d = 2); the identity involves third derivatives where
//! finite-difference noise would mask true residuals, so nothing is
//! differentiated numerically here.

use crate::constants::delta_coefficient;
use crate::error::{Result, WlsError};
use crate::params::DerivedParams;
use crate::quadrature::{sphere_rule, SphereRule};

/// Angular factor of a pressure term.
#[derive(Debug, Clone)]
pub enum AngularFactor {
    One,
    /// Polynomial in x = cos θ (smooth on S^{d-1} for every d ≥ 2).
    CosPoly(Vec<f64>),
    /// cos(kθ) or sin(kθ); meaningful for d = 2 only.
    Fourier {
        k: u32,
        sin: bool,
    },
}

impl AngularFactor {
    /// (T, T_θ, T_θθ, T_θθθ) at θ.
    fn derivs(&self, theta: f64) -> [f64; 4] {
        match self {
            AngularFactor::One => [1.0, 0.0, 0.0, 0.0],
            AngularFactor::CosPoly(c) => {
                let x = theta.cos();
                let sn = theta.sin();
                let (p0, p1, p2, p3) = poly_derivs3(c, x);
                let t = p0;
                let t1 = -sn * p1;
                let t2 = -x * p1 + sn * sn * p2;
                let t3 = sn * p1 + 3.0 * sn * x * p2 - sn * sn * sn * p3;
                [t, t1, t2, t3]
            }
            AngularFactor::Fourier { k, sin } => {
                let kf = *k as f64;
                let a = kf * theta;
                if *sin {
                    [
                        a.sin(),
                        kf * a.cos(),
                        -kf * kf * a.sin(),
                        -kf * kf * kf * a.cos(),
                    ]
                } else {
                    [
                        a.cos(),
                        -kf * a.sin(),
                        -kf * kf * a.cos(),
                        kf * kf * kf * a.sin(),
                    ]
                }
            }
        }
    }
}

fn poly_derivs3(c: &[f64], x: f64) -> (f64, f64, f64, f64) {
    let (mut p0, mut p1, mut p2, mut p3) = (0.0, 0.0, 0.0, 0.0);
    for &ck in c.iter().rev() {
        p3 = p3 * x + 3.0 * p2;
        p2 = p2 * x + 2.0 * p1;
        p1 = p1 * x + p0;
        p0 = p0 * x + ck;
    }
    (p0, p1, p2, p3)
}

/// One separable term coef · r^m e^{-a r²} · T(θ).
#[derive(Debug, Clone)]
pub struct PressureTerm {
    pub coef: f64,
    pub power: f64,
    pub gauss: f64,
    pub angular: AngularFactor,
}

impl PressureTerm {
    /// (R, R', R'', R''') at r for R = r^m e^{-a r²}.
    fn radial_derivs(&self, r: f64) -> [f64; 4] {
        let m = self.power;
        let a = self.gauss;
        let rr = r.powf(m) * (-a * r * r).exp();
        let u = m / r - 2.0 * a * r;
        let du = -m / (r * r) - 2.0 * a;
        let ddu = 2.0 * m / (r * r * r);
        let r1 = u * rr;
        let r2 = (u * u + du) * rr;
        let r3 = (u * u * u + 3.0 * u * du + ddu) * rr;
        [rr, r1, r2, r3]
    }
}

/// Azimuthally symmetric pressure with analytic partial derivatives up to
/// third order.
#[derive(Debug, Clone)]
pub struct PressureField {
    pub d: u32,
    pub terms: Vec<PressureTerm>,
}

/// All partials of p at one point (r, θ).
#[derive(Debug, Clone, Copy, Default)]
pub struct PressureJet {
    pub p: f64,
    pub p_r: f64,
    pub p_rr: f64,
    pub p_rrr: f64,
    pub p_t: f64,
    pub p_tt: f64,
    pub p_ttt: f64,
    pub p_rt: f64,
    pub p_rrt: f64,
    pub p_rtt: f64,
}

impl PressureField {
    pub fn jet(&self, r: f64, theta: f64) -> PressureJet {
        let mut j = PressureJet::default();
        for term in &self.terms {
            let [r0, r1, r2, r3] = term.radial_derivs(r);
            let [t0, t1, t2, t3] = term.angular.derivs(theta);
            let c = term.coef;
            j.p += c * r0 * t0;
            j.p_r += c * r1 * t0;
            j.p_rr += c * r2 * t0;
            j.p_rrr += c * r3 * t0;
            j.p_t += c * r0 * t1;
            j.p_tt += c * r0 * t2;
            j.p_ttt += c * r0 * t3;
            j.p_rt += c * r1 * t1;
            j.p_rrt += c * r2 * t1;
            j.p_rtt += c * r1 * t2;
        }
        j
    }

    /// Spot-check that the supplied derivatives are mutually consistent:
    /// finite differences of lower-order partials against the analytic
    /// higher-order ones, maximum relative mismatch over the sample points.
    pub fn validate_mixed_partials(&self, points: &[(f64, f64)]) -> f64 {
        let mut worst = 0.0_f64;
        let h = 1e-5;
        for &(r, t) in points {
            let jc = self.jet(r, t);
            let jr_p = self.jet(r + h, t);
            let jr_m = self.jet(r - h, t);
            let jt_p = self.jet(r, t + h);
            let jt_m = self.jet(r, t - h);
            let scale = jc.p.abs().max(1.0);
            // ∂_r p_t vs p_rt and ∂_θ p_r vs p_rt
            let fd1 = (jr_p.p_t - jr_m.p_t) / (2.0 * h);
            let fd2 = (jt_p.p_r - jt_m.p_r) / (2.0 * h);
            worst = worst.max((fd1 - jc.p_rt).abs() / scale.max(jc.p_rt.abs()));
            worst = worst.max((fd2 - jc.p_rt).abs() / scale.max(jc.p_rt.abs()));
            // ∂_θ p_rr vs p_rrt, ∂_r p_tt vs p_rtt
            let fd3 = (jt_p.p_rr - jt_m.p_rr) / (2.0 * h);
            let fd4 = (jr_p.p_tt - jr_m.p_tt) / (2.0 * h);
            worst = worst.max((fd3 - jc.p_rrt).abs() / scale.max(jc.p_rrt.abs()));
            worst = worst.max((fd4 - jc.p_rtt).abs() / scale.max(jc.p_rtt.abs()));
        }
        worst
    }
}

/// Which operator to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    DAlpha,
    LAlpha,
    LaplaceBeltrami,
}

/// D_α p at a point: (α p_r, p_θ/r), the radial and angular components.
pub fn d_alpha(field: &PressureField, dp: &DerivedParams, r: f64, theta: f64) -> (f64, f64) {
    let j = field.jet(r, theta);
    (dp.alpha * j.p_r, j.p_t / r)
}

/// Δ_ω p = p_θθ + (d−2) cot θ · p_θ at a point.
pub fn laplace_beltrami(field: &PressureField, r: f64, theta: f64) -> f64 {
    let j = field.jet(r, theta);
    let cot = theta.cos() / theta.sin();
    j.p_tt + (field.d as f64 - 2.0) * cot * j.p_t
}

/// L_α p = α²(p_rr + (n−1) p_r/r) + Δ_ω p / r² at a point.
pub fn l_alpha(field: &PressureField, dp: &DerivedParams, r: f64, theta: f64) -> f64 {
    let j = field.jet(r, theta);
    let cot = theta.cos() / theta.sin();
    let lb = j.p_tt + (field.d as f64 - 2.0) * cot * j.p_t;
    let a2 = dp.alpha * dp.alpha;
    a2 * (j.p_rr + (dp.n - 1.0) * j.p_r / r) + lb / (r * r)
}

/// Apply an operator on a tensor grid; for `DAlpha` the radial component is
/// returned (the angular one is available through [`d_alpha`]).
pub fn apply_operator(
    which: Operator,
    field: &PressureField,
    dp: &DerivedParams,
    r_grid: &[f64],
    theta_grid: &[f64],
) -> Vec<Vec<f64>> {
    r_grid
        .iter()
        .map(|&r| {
            theta_grid
                .iter()
                .map(|&t| match which {
                    Operator::DAlpha => d_alpha(field, dp, r, t).0,
                    Operator::LAlpha => l_alpha(field, dp, r, t),
                    Operator::LaplaceBeltrami => laplace_beltrami(field, r, t),
                })
                .collect()
        })
        .collect()
}

/// Statistics of one decomposition term over the evaluation grid.
#[derive(Debug, Clone, Copy, Default)]
pub struct TermStats {
    pub min: f64,
    pub max_abs: f64,
}

/// Outcome of the pointwise identity check.
#[derive(Debug, Clone, Copy)]
pub struct IdentityReport {
    /// max over the grid of |K_direct − (T₁ + T₂ + T₃)|.
    pub max_residual: f64,
    /// Same, relative to the largest term magnitude on the grid.
    pub max_relative_residual: f64,
    /// α⁴(1−1/n)|p_rr − p_r/r − Δ_ωp/(α²(n−1)r²)|² — nonnegative.
    pub term_radial_hessian: TermStats,
    /// (2α²/r²)|p_rθ − p_θ/r|² — nonnegative.
    pub term_mixed: TermStats,
    /// k[p]/r⁴ — the only sign-indefinite term.
    pub term_angular: TermStats,
}

/// k[p] on the sphere from the third-order jet at (r, θ) (radial part of the
/// jet is ignored). `csc2` guards are unnecessary at interior nodes.
fn small_k(d: u32, dp: &DerivedParams, j: &PressureJet, theta: f64) -> f64 {
    let dm2 = d as f64 - 2.0;
    let sn = theta.sin();
    let cot = theta.cos() / sn;
    let lb = j.p_tt + dm2 * cot * j.p_t;
    let lb_grad_sq = 2.0 * (j.p_tt * j.p_tt + j.p_t * j.p_ttt) + 2.0 * dm2 * cot * j.p_t * j.p_tt;
    let grad_dot_grad_lb = j.p_t * (j.p_ttt + dm2 * (cot * j.p_tt - j.p_t / (sn * sn)));
    let a2 = dp.alpha * dp.alpha;
    0.5 * lb_grad_sq - grad_dot_grad_lb - lb * lb / (dp.n - 1.0) - (dp.n - 2.0) * a2 * j.p_t * j.p_t
}

/// Evaluate K[D_α p] directly and through the pointwise decomposition and
/// report the worst disagreement over a tensor (r, θ) grid.
pub fn k_bulk(
    field: &PressureField,
    dp: &DerivedParams,
    r_count: usize,
    theta_count: usize,
) -> Result<IdentityReport> {
    if field.d < 2 {
        return Err(WlsError::InvalidParameters("k_bulk needs d >= 2".into()));
    }
    let n = dp.n;
    let a2 = dp.alpha * dp.alpha;
    let df = field.d as f64;
    let dm2 = df - 2.0;

    let r_grid: Vec<f64> = (0..r_count)
        .map(|i| 0.2 * (5.0 / 0.2_f64).powf(i as f64 / (r_count - 1) as f64))
        .collect();
    let srule = sphere_rule(field.d, theta_count)?;

    let mut max_res = 0.0_f64;
    let mut scale = 0.0_f64;
    let mut t1_stats = TermStats {
        min: f64::INFINITY,
        max_abs: 0.0,
    };
    let mut t2_stats = t1_stats;
    let mut t3_stats = t1_stats;

    for &r in &r_grid {
        for &theta in &srule.theta_nodes {
            let j = field.jet(r, theta);
            let sn = theta.sin();
            let cot = theta.cos() / sn;
            let r2 = r * r;

            // direct route
            let lb = j.p_tt + dm2 * cot * j.p_t;
            let q = a2 * (j.p_rr + (n - 1.0) * j.p_r / r) + lb / r2;
            let g_r = 2.0 * a2 * j.p_r * j.p_rr + 2.0 * j.p_t * j.p_rt / r2
                - 2.0 * j.p_t * j.p_t / (r2 * r);
            let g_rr = 2.0 * a2 * (j.p_rr * j.p_rr + j.p_r * j.p_rrr)
                + 2.0 * (j.p_rt * j.p_rt + j.p_t * j.p_rrt) / r2
                - 8.0 * j.p_t * j.p_rt / (r2 * r)
                + 6.0 * j.p_t * j.p_t / (r2 * r2);
            let g_t = 2.0 * a2 * j.p_r * j.p_rt + 2.0 * j.p_t * j.p_tt / r2;
            let g_tt = 2.0 * a2 * (j.p_rt * j.p_rt + j.p_r * j.p_rtt)
                + 2.0 * (j.p_tt * j.p_tt + j.p_t * j.p_ttt) / r2;
            let lg = a2 * (g_rr + (n - 1.0) * g_r / r) + (g_tt + dm2 * cot * g_t) / r2;
            let q_r = a2 * (j.p_rrr + (n - 1.0) * (j.p_rr / r - j.p_r / r2))
                + (j.p_rtt + dm2 * cot * j.p_rt) / r2
                - 2.0 * lb / (r2 * r);
            let q_t = a2 * (j.p_rrt + (n - 1.0) * j.p_rt / r)
                + (j.p_ttt + dm2 * (cot * j.p_tt - j.p_t / (sn * sn))) / r2;
            let dp_dot_dq = a2 * j.p_r * q_r + j.p_t * q_t / r2;
            let k_direct = 0.5 * lg - dp_dot_dq - q * q / n;

            // decomposition route
            let t1base = j.p_rr - j.p_r / r - lb / (a2 * (n - 1.0) * r2);
            let t1 = a2 * a2 * (1.0 - 1.0 / n) * t1base * t1base;
            let t2base = j.p_rt - j.p_t / r;
            let t2 = 2.0 * a2 / r2 * t2base * t2base;
            let t3 = small_k(field.d, dp, &j, theta) / (r2 * r2);
            let k_split = t1 + t2 + t3;

            let res = (k_direct - k_split).abs();
            max_res = max_res.max(res);
            // the scale includes the direct route's constituent terms: when
            // the identity degenerates to 0 ≈ 0 (e.g. p = r²) they still
            // carry the magnitude the cancellation happened at
            scale = scale
                .max(t1.abs())
                .max(t2.abs())
                .max(t3.abs())
                .max(k_direct.abs())
                .max((0.5 * lg).abs())
                .max(dp_dot_dq.abs())
                .max(q * q / n);
            t1_stats.min = t1_stats.min.min(t1);
            t1_stats.max_abs = t1_stats.max_abs.max(t1.abs());
            t2_stats.min = t2_stats.min.min(t2);
            t2_stats.max_abs = t2_stats.max_abs.max(t2.abs());
            t3_stats.min = t3_stats.min.min(t3);
            t3_stats.max_abs = t3_stats.max_abs.max(t3.abs());
        }
    }
    Ok(IdentityReport {
        max_residual: max_res,
        max_relative_residual: max_res / scale.max(1e-300),
        term_radial_hessian: t1_stats,
        term_mixed: t2_stats,
        term_angular: t3_stats,
    })
}

/// Log-profile of a positive azimuthal function u = e^q on the sphere.
#[derive(Debug, Clone)]
pub struct SphereLogProfile {
    pub terms: Vec<(f64, AngularFactor)>,
}

impl SphereLogProfile {
    fn derivs(&self, theta: f64) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (c, f) in &self.terms {
            let d = f.derivs(theta);
            for i in 0..4 {
                out[i] += c * d[i];
            }
        }
        out
    }
}

/// Margin of the integral estimate on the sphere:
///
///   ∫ k[p] u dω − (n−2)(α_FS² − α²) ∫ |∇_ω p|² u dω − δ ∫ |∇_ω p|⁴ u dω
///
/// with ∇_ω p = ∇_ω log u and δ from [`delta_coefficient`]. Nonnegative for
/// every positive smooth u when α ≤ α_FS.
pub fn sphere_inequality_margin(
    u: &SphereLogProfile,
    dp: &DerivedParams,
    d: u32,
    rule: &SphereRule,
) -> Result<f64> {
    if d < 2 {
        return Err(WlsError::InvalidParameters(
            "sphere estimate needs d >= 2".into(),
        ));
    }
    let n = dp.n;
    let a2 = dp.alpha * dp.alpha;
    let afs2 = (d as f64 - 1.0) / (n - 1.0);
    let delta = delta_coefficient(d, n);
    let dm2 = d as f64 - 2.0;

    let mut kq = Vec::with_capacity(rule.theta_nodes.len());
    let mut grad2 = Vec::with_capacity(rule.theta_nodes.len());
    let mut grad4 = Vec::with_capacity(rule.theta_nodes.len());
    for &theta in &rule.theta_nodes {
        let [q, q1, q2, q3] = u.derivs(theta);
        let uval = q.exp();
        if !uval.is_finite() || uval <= 0.0 {
            return Err(WlsError::NotPositive(format!(
                "sphere profile exp({q}) is not a positive finite value"
            )));
        }
        let sn = theta.sin();
        let cot = theta.cos() / sn;
        let lb = q2 + dm2 * cot * q1;
        let lb_grad_sq = 2.0 * (q2 * q2 + q1 * q3) + 2.0 * dm2 * cot * q1 * q2;
        let grad_dot = q1 * (q3 + dm2 * (cot * q2 - q1 / (sn * sn)));
        let k = 0.5 * lb_grad_sq - grad_dot - lb * lb / (n - 1.0) - (n - 2.0) * a2 * q1 * q1;
        kq.push(k * uval);
        grad2.push(q1 * q1 * uval);
        grad4.push(q1 * q1 * q1 * q1 * uval);
    }
    let lhs = rule.integrate(&kq)?;
    let mid = rule.integrate(&grad2)?;
    let quart = rule.integrate(&grad4)?;
    Ok(lhs - (n - 2.0) * (afs2 - a2) * mid - delta * quart)
}
