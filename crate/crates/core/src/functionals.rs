//! Norms, entropy, Fisher-type energies, deficit functionals, the
//! Schrödinger-form potential and Euler-Lagrange residuals for candidate
//! functions in the α-coordinates (g-variables).
//!
//! Everything is evaluated against the measure |x|^{-ν} dx = s^{n-1} ds dω,
//! i.e. one radial rule with exponent n−1 plus an azimuthal sphere rule.
//! The f-variable statements are reached through the coordinate map
//! s = r^α with ‖f‖²_{2,γ} = (1/α)‖g‖²_{2,ν} and
//! ‖∇f‖²_{2,β} = (1/α)‖D_α g‖²_{2,ν}.
//!
//! A candidate is g(s, ω) = g₀(s) + g₁(s) Y_ℓ(ω) with Y_ℓ a single zonal
//! spherical harmonic normalized so that ∫ Y_ℓ² dω = |S^{d-1}|; profile
//! derivatives are supplied analytically by the constructors.

use crate::constants::{evaluate_constants, ConstantsReport};
use crate::error::{Result, WlsError};
use crate::numerics::{compensated_sum, derivatives_on_grid};
use crate::params::DerivedParams;
use crate::quadrature::{
    radial_rule, sphere_rule, tail_s_max, RadialRule, RadialRuleKind, SphereRule,
};

use std::f64::consts::E;
use std::sync::Arc;

pub type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Floor below which u log u is evaluated as 0 (Gaussian tails underflow).
const ENTROPY_CLAMP: f64 = 1e-300;

fn xlogx(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        u * u.max(ENTROPY_CLAMP).ln()
    }
}

/// Single angular channel of a candidate.
#[derive(Clone)]
pub struct AngularMode {
    pub ell: u32,
    pub profile: ProfileFn,
    pub deriv: ProfileFn,
}

/// Candidate function in g-variables with analytic radial derivatives.
#[derive(Clone)]
pub struct Candidate {
    pub radial: ProfileFn,
    pub radial_deriv: ProfileFn,
    pub angular: Option<AngularMode>,
}

impl Candidate {
    pub fn radial_only(f: ProfileFn, df: ProfileFn) -> Self {
        Self {
            radial: f,
            radial_deriv: df,
            angular: None,
        }
    }

    /// Rescaled candidate λ^{n/2} g(λ s); the scale-invariant deficit is
    /// unchanged under this map.
    pub fn rescaled(&self, lambda: f64, n: f64) -> Self {
        let amp = lambda.powf(0.5 * n);
        let damp = lambda.powf(0.5 * n + 1.0);
        let f = self.radial.clone();
        let df = self.radial_deriv.clone();
        let radial: ProfileFn = Arc::new(move |s| amp * f(lambda * s));
        let radial_deriv: ProfileFn = Arc::new(move |s| damp * df(lambda * s));
        let angular = self.angular.as_ref().map(|m| {
            let g = m.profile.clone();
            let dg = m.deriv.clone();
            AngularMode {
                ell: m.ell,
                profile: Arc::new(move |s| amp * g(lambda * s)),
                deriv: Arc::new(move |s| damp * dg(lambda * s)),
            }
        });
        Self {
            radial,
            radial_deriv,
            angular,
        }
    }
}

/// Which inequality form a deficit refers to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeficitForm {
    /// Scale-invariant form with constant K.
    ScaleInvariant { k: f64 },
    /// Non-scale-invariant form at parameter σ with constant K.
    Sigma { sigma: f64, k: f64 },
    /// Gaussian form against the probability measure dν_σ.
    Gaussian { sigma: f64 },
}

/// Left/right-hand sides and gap of a chosen inequality form.
#[derive(Debug, Clone, Copy)]
pub struct DeficitReport {
    pub norm_sq: f64,
    pub grad_sq: f64,
    /// ∫ |g|² log(|g|²/‖g‖²) |x|^{-ν} dx.
    pub entropy: f64,
    pub deficit: f64,
    pub form: DeficitForm,
}

/// Shared evaluation context: derived parameters, constants and the two
/// quadrature rules.
pub struct FunctionalCtx {
    pub d: u32,
    pub dp: DerivedParams,
    pub consts: ConstantsReport,
    pub radial: Arc<RadialRule>,
    pub sphere: SphereRule,
}

impl FunctionalCtx {
    pub fn new(
        d: u32,
        dp: DerivedParams,
        radial_count: usize,
        sphere_count: usize,
        kind: RadialRuleKind,
    ) -> Result<Self> {
        if d < 2 {
            return Err(WlsError::InvalidParameters(
                "functional evaluation needs d >= 2".into(),
            ));
        }
        let consts = evaluate_constants(&dp, d)?;
        let radial = Arc::new(radial_rule(dp.n, radial_count, kind)?);
        let sphere = sphere_rule(d, sphere_count)?;
        Ok(Self {
            d,
            dp,
            consts,
            radial,
            sphere,
        })
    }

    /// Default context: 256-node Gauss rule, 64-node sphere rule.
    pub fn with_defaults(d: u32, dp: DerivedParams) -> Result<Self> {
        Self::new(d, dp, 256, 64, RadialRuleKind::GaussTransformed)
    }

    /// The Gaussian optimizer g*(s) = c_{n,d} e^{-s²/4}.
    pub fn gaussian_optimizer(&self) -> Candidate {
        let c = self.consts.c_nd;
        Candidate::radial_only(
            Arc::new(move |s| c * (-0.25 * s * s).exp()),
            Arc::new(move |s| -0.5 * s * c * (-0.25 * s * s).exp()),
        )
    }

    /// The σ-family optimizer g*^{α,σ}(s) = (2σ/α²)^{n/4} c_{n,d} e^{-σ s²/(2α²)}.
    pub fn sigma_optimizer(&self, sigma: f64) -> Candidate {
        let a2 = self.dp.alpha * self.dp.alpha;
        let amp = (2.0 * sigma / a2).powf(0.25 * self.dp.n) * self.consts.c_nd;
        let rate = 0.5 * sigma / a2;
        Candidate::radial_only(
            Arc::new(move |s| amp * (-rate * s * s).exp()),
            Arc::new(move |s| -2.0 * rate * s * amp * (-rate * s * s).exp()),
        )
    }

    pub fn candidate_with_mode(
        &self,
        f: ProfileFn,
        df: ProfileFn,
        ell: u32,
        h: ProfileFn,
        dh: ProfileFn,
    ) -> Candidate {
        Candidate {
            radial: f,
            radial_deriv: df,
            angular: Some(AngularMode {
                ell,
                profile: h,
                deriv: dh,
            }),
        }
    }

    /// Zonal harmonic Y_ℓ sampled at the sphere nodes, normalized so that
    /// ∫ Y_ℓ² dω = σ_d, together with its Laplace-Beltrami eigenvalue
    /// ℓ(ℓ+d−2).
    pub fn harmonic(&self, ell: u32) -> (Vec<f64>, f64) {
        let raw: Vec<f64> = self
            .sphere
            .theta_nodes
            .iter()
            .map(|&t| zonal_harmonic_raw(self.d, ell, t))
            .collect();
        let sq: Vec<f64> = raw.iter().map(|y| y * y).collect();
        let z2 = self.sphere.integrate(&sq).expect("aligned");
        let scale = (self.consts.sigma_d / z2).sqrt();
        let y = raw.iter().map(|v| v * scale).collect();
        let df = self.d as f64;
        (y, ell as f64 * (ell as f64 + df - 2.0))
    }

    fn sample(&self, f: &ProfileFn) -> Vec<f64> {
        self.radial.nodes.iter().map(|&s| f(s)).collect()
    }

    /// (‖g‖²_{2,ν}, ‖D_α g‖²_{2,ν}, ∫|g|² log(|g|²/‖g‖²) |x|^{-ν} dx).
    pub fn norms_and_entropy(&self, c: &Candidate) -> Result<(f64, f64, f64)> {
        let (norm_sq, grad_sq) = self.quadratics(c)?;
        if norm_sq <= 0.0 {
            return Err(WlsError::NotPositive(
                "candidate has vanishing L² norm".into(),
            ));
        }
        let ent_raw = self.entropy_raw(c)?;
        let entropy = ent_raw - norm_sq * norm_sq.ln();
        for (name, v) in [("norm", norm_sq), ("grad", grad_sq), ("entropy", entropy)] {
            if !v.is_finite() {
                return Err(WlsError::NonFinite(format!("{name} integral is {v}")));
            }
        }
        Ok((norm_sq, grad_sq, entropy))
    }

    /// ‖g‖² and ‖D_α g‖² with the exact angular split: the ℓ-mode
    /// contributes α²|g₁'|² + ℓ(ℓ+d−2)|g₁|²/s² of gradient energy.
    fn quadratics(&self, c: &Candidate) -> Result<(f64, f64)> {
        let alpha2 = self.dp.alpha * self.dp.alpha;
        let sigma_d = self.consts.sigma_d;
        let g0 = self.sample(&c.radial);
        let dg0 = self.sample(&c.radial_deriv);
        let mut norm: f64 = self
            .radial
            .integrate_bare(&g0.iter().map(|v| v * v).collect::<Vec<_>>())?;
        let mut grad: f64 = alpha2
            * self
                .radial
                .integrate_bare(&dg0.iter().map(|v| v * v).collect::<Vec<_>>())?;
        if let Some(mode) = &c.angular {
            let (_, eig) = self.harmonic(mode.ell);
            let g1 = self.sample(&mode.profile);
            let dg1 = self.sample(&mode.deriv);
            norm += self
                .radial
                .integrate_bare(&g1.iter().map(|v| v * v).collect::<Vec<_>>())?;
            let ang: Vec<f64> = self
                .radial
                .nodes
                .iter()
                .zip(g1.iter().zip(&dg1))
                .map(|(&s, (&v, &dv))| alpha2 * dv * dv + eig * v * v / (s * s))
                .collect();
            grad += self.radial.integrate_bare(&ang)?;
        }
        Ok((sigma_d * norm, sigma_d * grad))
    }

    /// ∫ |g|² log |g|² |x|^{-ν} dx (no normalization).
    fn entropy_raw(&self, c: &Candidate) -> Result<f64> {
        let g0 = self.sample(&c.radial);
        match &c.angular {
            None => {
                let vals: Vec<f64> = g0.iter().map(|&v| xlogx(v * v)).collect();
                Ok(self.consts.sigma_d * self.radial.integrate_bare(&vals)?)
            }
            Some(mode) => {
                let (y, _) = self.harmonic(mode.ell);
                let g1 = self.sample(&mode.profile);
                let inner: Vec<f64> = g0
                    .iter()
                    .zip(&g1)
                    .map(|(&a, &b)| {
                        let vals: Vec<f64> = y
                            .iter()
                            .map(|&yv| {
                                let g = a + b * yv;
                                xlogx(g * g)
                            })
                            .collect();
                        self.sphere.integrate(&vals).expect("aligned")
                    })
                    .collect();
                self.radial.integrate_bare(&inner)
            }
        }
    }

    /// Weighted L^p norm ‖g‖_{p,ν}.
    pub fn lp_norm(&self, c: &Candidate, p: f64) -> Result<f64> {
        let g0 = self.sample(&c.radial);
        let raw = match &c.angular {
            None => {
                let vals: Vec<f64> = g0.iter().map(|&v| v.abs().powf(p)).collect();
                self.consts.sigma_d * self.radial.integrate_bare(&vals)?
            }
            Some(mode) => {
                let (y, _) = self.harmonic(mode.ell);
                let g1 = self.sample(&mode.profile);
                let inner: Vec<f64> = g0
                    .iter()
                    .zip(&g1)
                    .map(|(&a, &b)| {
                        let vals: Vec<f64> =
                            y.iter().map(|&yv| (a + b * yv).abs().powf(p)).collect();
                        self.sphere.integrate(&vals).expect("aligned")
                    })
                    .collect();
                self.radial.integrate_bare(&inner)?
            }
        };
        Ok(raw.powf(1.0 / p))
    }

    /// Deficit of the chosen inequality form. Nonnegative exactly when the
    /// inequality holds with the chosen constant.
    pub fn deficit(&self, c: &Candidate, form: DeficitForm) -> Result<DeficitReport> {
        let n = self.dp.n;
        match form {
            DeficitForm::ScaleInvariant { k } => {
                let (norm_sq, grad_sq, entropy) = self.norms_and_entropy(c)?;
                let ent_raw = entropy + norm_sq * norm_sq.ln();
                let fval = norm_sq.powf(1.0 - 2.0 / n) * ((2.0 / n) * ent_raw / norm_sq).exp();
                let deficit = grad_sq - (-2.0 * k / n).exp() * fval;
                Ok(DeficitReport {
                    norm_sq,
                    grad_sq,
                    entropy,
                    deficit,
                    form,
                })
            }
            DeficitForm::Sigma { sigma, k } => {
                if sigma <= 0.0 {
                    return Err(WlsError::Domain(format!("sigma must be positive: {sigma}")));
                }
                let (norm_sq, grad_sq, entropy) = self.norms_and_entropy(c)?;
                let rhs = sigma * (0.5 * n * (2.0 * E / (n * sigma)).ln() - k) * norm_sq;
                let deficit = grad_sq - sigma * entropy - rhs;
                Ok(DeficitReport {
                    norm_sq,
                    grad_sq,
                    entropy,
                    deficit,
                    form,
                })
            }
            DeficitForm::Gaussian { sigma } => self.gaussian_form_deficit(c, sigma),
        }
    }

    /// Gaussian form: ∫|D_α v|² dν_σ − σ ∫ v² log(v²/∫v² dν_σ) dν_σ with the
    /// probability measure dν_σ = c²(2σ/α²)^{n/2}|x|^{-ν} e^{-σ|x|²/α²} dx.
    fn gaussian_form_deficit(&self, c: &Candidate, sigma: f64) -> Result<DeficitReport> {
        if sigma <= 0.0 {
            return Err(WlsError::Domain(format!("sigma must be positive: {sigma}")));
        }
        let n = self.dp.n;
        let alpha2 = self.dp.alpha * self.dp.alpha;
        let c2 = self.consts.c_nd * self.consts.c_nd;
        let amp = c2 * (2.0 * sigma / alpha2).powf(0.5 * n);
        let weight: Vec<f64> = self
            .radial
            .nodes
            .iter()
            .map(|&s| amp * (-sigma * s * s / alpha2).exp())
            .collect();
        let g0 = self.sample(&c.radial);
        let dg0 = self.sample(&c.radial_deriv);
        let sigma_d = self.consts.sigma_d;

        let wmul =
            |vals: Vec<f64>| -> Vec<f64> { vals.iter().zip(&weight).map(|(v, w)| v * w).collect() };
        let mut norm = sigma_d
            * self
                .radial
                .integrate_bare(&wmul(g0.iter().map(|v| v * v).collect()))?;
        let mut grad = sigma_d
            * alpha2
            * self
                .radial
                .integrate_bare(&wmul(dg0.iter().map(|v| v * v).collect()))?;
        let ent_raw;
        match &c.angular {
            None => {
                ent_raw = sigma_d
                    * self
                        .radial
                        .integrate_bare(&wmul(g0.iter().map(|&v| xlogx(v * v)).collect()))?;
            }
            Some(mode) => {
                let (y, eig) = self.harmonic(mode.ell);
                let g1 = self.sample(&mode.profile);
                let dg1 = self.sample(&mode.deriv);
                norm += sigma_d
                    * self
                        .radial
                        .integrate_bare(&wmul(g1.iter().map(|v| v * v).collect()))?;
                let ang: Vec<f64> = self
                    .radial
                    .nodes
                    .iter()
                    .zip(g1.iter().zip(&dg1))
                    .map(|(&s, (&v, &dv))| alpha2 * dv * dv + eig * v * v / (s * s))
                    .collect();
                grad += sigma_d * self.radial.integrate_bare(&wmul(ang))?;
                let inner: Vec<f64> = g0
                    .iter()
                    .zip(&g1)
                    .map(|(&a, &b)| {
                        let vals: Vec<f64> = y
                            .iter()
                            .map(|&yv| {
                                let g = a + b * yv;
                                xlogx(g * g)
                            })
                            .collect();
                        self.sphere.integrate(&vals).expect("aligned")
                    })
                    .collect();
                ent_raw = self.radial.integrate_bare(&wmul(inner))?;
            }
        }
        if norm <= 0.0 {
            return Err(WlsError::NotPositive("vanishing ν_σ norm".into()));
        }
        let entropy = ent_raw - norm * norm.ln();
        let deficit = grad - sigma * entropy;
        Ok(DeficitReport {
            norm_sq: norm,
            grad_sq: grad,
            entropy,
            deficit,
            form: DeficitForm::Gaussian { sigma },
        })
    }

    /// Logarithmic Hölder gap per unit norm:
    /// (p/(p−2)) log(‖g‖²_{p,ν}/‖g‖²_{2,ν}) − ∫|g|² log(|g|²/‖g‖²) / ‖g‖²;
    /// nonnegative for every candidate and p > 2, vanishing as p → 2⁺, and
    /// unchanged under g → λg (both sides of the inequality scale
    /// identically, so the gap is reported for the normalized candidate).
    pub fn log_holder_gap(&self, c: &Candidate, p: f64) -> Result<f64> {
        if p <= 2.0 {
            return Err(WlsError::Ordering(format!(
                "log-Hölder gap needs p > 2, got {p}"
            )));
        }
        let (norm_sq, _, entropy) = self.norms_and_entropy(c)?;
        let lp = self.lp_norm(c, p)?;
        if !lp.is_finite() {
            return Err(WlsError::NonFinite("weighted L^p norm".into()));
        }
        Ok(p / (p - 2.0) * (lp * lp / norm_sq).ln() - entropy / norm_sq)
    }
}

/// Zonal harmonic before normalization: Gegenbauer C_ℓ^{(d-2)/2}(cos θ) for
/// d ≥ 3 and cos(ℓθ) for d = 2.
fn zonal_harmonic_raw(d: u32, ell: u32, theta: f64) -> f64 {
    let x = theta.cos();
    if d == 2 {
        return (ell as f64 * theta).cos();
    }
    let lam = 0.5 * (d as f64 - 2.0);
    match ell {
        0 => 1.0,
        1 => 2.0 * lam * x,
        _ => {
            let mut c_prev = 1.0;
            let mut c_cur = 2.0 * lam * x;
            for k in 2..=ell {
                let kf = k as f64;
                let c_next =
                    (2.0 * x * (kf + lam - 1.0) * c_cur - (kf + 2.0 * lam - 2.0) * c_prev) / kf;
                c_prev = c_cur;
                c_cur = c_next;
            }
            c_cur
        }
    }
}

/// Schrödinger-form potential
/// V(x) = −(α²ν(2(d−2)−ν)/4)/|x|² − σν log |x| with d = n + ν.
pub fn potential(dp: &DerivedParams, sigma: f64, x_abs: f64) -> Result<f64> {
    if x_abs <= 0.0 {
        return Err(WlsError::Domain(format!(
            "potential needs |x| > 0, got {x_abs}"
        )));
    }
    if sigma <= 0.0 {
        return Err(WlsError::Domain(format!("sigma must be positive: {sigma}")));
    }
    let d = dp.n + dp.nu;
    let a2 = dp.alpha * dp.alpha;
    let hardy = -0.25 * a2 * dp.nu * (2.0 * (d - 2.0) - dp.nu);
    Ok(hardy / (x_abs * x_abs) - sigma * dp.nu * x_abs.ln())
}

/// Radius of the sphere on which the potential attains its minimum:
/// α √((2(d−2)−ν)/(2σ)).
pub fn potential_min_radius(dp: &DerivedParams, sigma: f64) -> Result<f64> {
    if sigma <= 0.0 {
        return Err(WlsError::Domain(format!("sigma must be positive: {sigma}")));
    }
    let d = dp.n + dp.nu;
    Ok(dp.alpha * ((2.0 * (d - 2.0) - dp.nu) / (2.0 * sigma)).sqrt())
}

/// Euler-Lagrange residual
/// max over interior grid nodes of |−L_α g + g − g log g²| / max |g|, with
/// L_α g = α²(g'' + (n−1) g'/s) evaluated by 4th-order finite differences on
/// a uniform grid of `grid_size` nodes on (0, α·S_tail]; the s = 0 endpoint
/// is excluded.
pub fn el_residual(c: &Candidate, dp: &DerivedParams, grid_size: usize) -> Result<f64> {
    if grid_size < 16 {
        return Err(WlsError::Accuracy("EL residual grid too small".into()));
    }
    let s_max = dp.alpha * tail_s_max(dp.n);
    let h = s_max / grid_size as f64;
    let nodes: Vec<f64> = (1..=grid_size).map(|i| i as f64 * h).collect();
    let g: Vec<f64> = nodes.iter().map(|&s| (c.radial)(s)).collect();
    if let Some(&bad) = g.iter().find(|&&v| v <= 0.0) {
        return Err(WlsError::NotPositive(format!(
            "EL residual needs a strictly positive profile, found {bad}"
        )));
    }
    let (g1, g2) = derivatives_on_grid(&nodes, &g);
    let alpha2 = dp.alpha * dp.alpha;
    let gmax = g.iter().cloned().fold(0.0_f64, f64::max);
    let mut worst = 0.0_f64;
    for i in 0..nodes.len() {
        let s = nodes[i];
        let lg = alpha2 * (g2[i] + (dp.n - 1.0) * g1[i] / s);
        let res = -lg + g[i] - g[i] * (g[i] * g[i]).max(ENTROPY_CLAMP).ln();
        worst = worst.max(res.abs());
    }
    Ok(worst / gmax)
}

/// Compensated total of a slice.
pub fn total(values: &[f64]) -> f64 {
    compensated_sum(values.iter().cloned())
}
