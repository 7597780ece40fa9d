//! High-accuracy integration against the radial measure s^{n-1} ds with a
//! real exponent n, with or without the Gaussian factor e^{-s²/2}, and
//! against azimuthally symmetric measures sin^{d-2}θ dθ on the sphere.
//!
//! Two radial rule kinds:
//!
//! * `GaussTransformed` — the substitution t = s²/2 maps
//!   ∫ f(s) s^{n-1} e^{-s²/2} ds onto a generalized Gauss-Laguerre rule with
//!   exponent n/2 − 1, built from the three-term recurrence by the
//!   Golub-Welsch eigenvalue procedure and polished by Newton steps on the
//!   scaled Laguerre recurrence. Weights are computed in log space so the
//!   Gaussian-free ("bare") weights stay accurate in relative terms at every
//!   node.
//! * `AdaptivePanel` — graded panels on (0, S_max] with a fixed-order
//!   Gauss-Legendre rule per panel. Robust for integrands with power-law
//!   behaviour s^{c} at the origin, where the Laguerre rule converges slowly.

use crate::error::{Result, WlsError};
use crate::numerics::{compensated_dot, ln_gamma, SymTridiag};

use std::f64::consts::{LN_10, PI};
use std::sync::Arc;

/// Default truncation radius: the Gaussian-weighted tail mass beyond
/// √(2(n + 80 log 10)) is below 1e-16 of the total.
pub fn tail_s_max(n: f64) -> f64 {
    (2.0 * (n + 80.0 * LN_10)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialRuleKind {
    GaussTransformed,
    AdaptivePanel,
}

/// Quadrature rule for the radial measure s^{n-1} ds on (0, ∞) or (0, S_max].
#[derive(Debug, Clone)]
pub struct RadialRule {
    pub kind: RadialRuleKind,
    /// The n of the measure; `exponent` = n − 1.
    pub n: f64,
    pub exponent: f64,
    /// Strictly increasing nodes.
    pub nodes: Vec<f64>,
    /// Weights against s^{n-1} e^{-s²/2} ds (the Gaussian-weighted measure).
    pub weights: Vec<f64>,
    /// Weights against the bare measure s^{n-1} ds.
    pub bare_weights: Vec<f64>,
    /// Truncation radius used by the panel kind (and the tail scale of the
    /// Gauss kind).
    pub s_max: f64,
}

impl RadialRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// ∫ f(s) s^{n-1} e^{-s²/2} ds from samples of f at the nodes.
    pub fn integrate_gauss(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.nodes.len() {
            return Err(WlsError::LengthMismatch {
                expected: self.nodes.len(),
                got: values.len(),
            });
        }
        Ok(compensated_dot(&self.weights, values))
    }

    /// ∫ F(s) s^{n-1} ds from samples of F at the nodes. F carries its own
    /// decay; for the Gauss kind the far-node bare weights grow like
    /// e^{+s²/2}, so F must decay at least like a wide Gaussian.
    pub fn integrate_bare(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.nodes.len() {
            return Err(WlsError::LengthMismatch {
                expected: self.nodes.len(),
                got: values.len(),
            });
        }
        Ok(compensated_dot(&self.bare_weights, values))
    }

    /// Sample a function into a field aligned with this rule.
    pub fn sample(self: &Arc<Self>, f: impl Fn(f64) -> f64) -> Result<RadialField> {
        let values: Vec<f64> = self.nodes.iter().map(|&s| f(s)).collect();
        RadialField::new(Arc::clone(self), values)
    }
}

/// Sampled function of the radial variable, aligned with a rule.
#[derive(Debug, Clone)]
pub struct RadialField {
    pub rule: Arc<RadialRule>,
    pub values: Vec<f64>,
}

impl RadialField {
    pub fn new(rule: Arc<RadialRule>, values: Vec<f64>) -> Result<Self> {
        if values.len() != rule.nodes.len() {
            return Err(WlsError::LengthMismatch {
                expected: rule.nodes.len(),
                got: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(WlsError::NonFinite(format!(
                "radial field value {bad} is not finite"
            )));
        }
        Ok(Self { rule, values })
    }

    /// ∫ F(s) s^{n-1} ds for this field.
    pub fn integrate(&self) -> f64 {
        compensated_dot(&self.rule.bare_weights, &self.values)
    }
}

/// Build a radial rule for the measure s^{n-1} ds.
///
/// `count` is the node count for the Gauss kind and the per-panel
/// Gauss-Legendre order for the panel kind; at least 8 in both cases.
pub fn radial_rule(n: f64, count: usize, kind: RadialRuleKind) -> Result<RadialRule> {
    if !(n > 0.0) {
        return Err(WlsError::Domain(format!(
            "radial rule needs n > 0, got {n}"
        )));
    }
    if count < 8 {
        return Err(WlsError::Accuracy(format!(
            "count = {count} is too small to certify the target accuracy (need >= 8)"
        )));
    }
    match kind {
        RadialRuleKind::GaussTransformed => gauss_transformed_rule(n, count),
        RadialRuleKind::AdaptivePanel => adaptive_panel_rule(n, count, tail_s_max(n)),
    }
}

/// Panel rule with an explicit truncation radius (the flow and eigensolver
/// modules scale S_max with α and with the expected spread).
pub fn adaptive_panel_rule(n: f64, count: usize, s_max: f64) -> Result<RadialRule> {
    if count < 8 {
        return Err(WlsError::Accuracy(format!(
            "count = {count} is too small to certify the target accuracy (need >= 8)"
        )));
    }
    let (gl_x, gl_w) = gauss_legendre(count)?;
    let mut breaks = vec![0.0];
    let mut s = s_max * 1e-8;
    while s < 1.0_f64.min(0.5 * s_max) {
        breaks.push(s);
        s *= 2.0;
    }
    let start = *breaks.last().expect("non-empty");
    let outer = ((s_max - start) / 0.75).ceil().max(1.0) as usize;
    let h = (s_max - start) / outer as f64;
    for k in 1..=outer {
        breaks.push(start + h * k as f64);
    }
    let mut nodes = Vec::with_capacity(breaks.len() * count);
    let mut bare = Vec::with_capacity(breaks.len() * count);
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, wgt) in gl_x.iter().zip(&gl_w) {
            let sx = mid + half * x;
            nodes.push(sx);
            bare.push(half * wgt * sx.powf(n - 1.0));
        }
    }
    let weights = nodes
        .iter()
        .zip(&bare)
        .map(|(&s, &w)| w * (-0.5 * s * s).exp())
        .collect();
    Ok(RadialRule {
        kind: RadialRuleKind::AdaptivePanel,
        n,
        exponent: n - 1.0,
        nodes,
        weights,
        bare_weights: bare,
        s_max,
    })
}

fn gauss_transformed_rule(n: f64, count: usize) -> Result<RadialRule> {
    let a = 0.5 * n - 1.0;
    let (t, ln_w) = gauss_laguerre_log(a, count)?;
    let scale = (0.5 * n - 1.0) * 2.0_f64.ln(); // ln 2^{n/2-1}
    let mut nodes = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    let mut bare = Vec::with_capacity(count);
    for i in 0..count {
        nodes.push((2.0 * t[i]).sqrt());
        weights.push((scale + ln_w[i]).exp());
        bare.push((scale + ln_w[i] + t[i]).exp());
    }
    Ok(RadialRule {
        kind: RadialRuleKind::GaussTransformed,
        n,
        exponent: n - 1.0,
        nodes,
        weights,
        bare_weights: bare,
        s_max: tail_s_max(n),
    })
}

/// Generalized Gauss-Laguerre nodes and log-weights for weight t^a e^{-t},
/// a > -1. Nodes from the Jacobi matrix, two Newton polishing steps, weights
/// from w_i = Γ(m+a+1)/m! · t_i / ((m+1)² L_{m+1}^{(a)}(t_i)²) evaluated in
/// log space through the scaled recurrence.
fn gauss_laguerre_log(a: f64, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if a <= -1.0 {
        return Err(WlsError::Domain(format!(
            "Laguerre exponent must exceed -1, got {a}"
        )));
    }
    let diag: Vec<f64> = (0..m).map(|k| 2.0 * k as f64 + a + 1.0).collect();
    let off: Vec<f64> = (1..m).map(|k| (k as f64 * (k as f64 + a)).sqrt()).collect();
    let jacobi = SymTridiag::new(diag, off);
    let mut t = jacobi.eigenvalues()?;

    let ln_norm =
        ln_gamma(m as f64 + a + 1.0) - ln_gamma(m as f64 + 1.0) - 2.0 * ((m as f64 + 1.0).ln());
    let mut ln_w = Vec::with_capacity(m);
    for ti in t.iter_mut() {
        // Newton polish on L_m^{(a)}
        for _ in 0..2 {
            let ev = laguerre_scaled(a, m + 1, *ti);
            // L_m'(t) = (m L_m − (m+a) L_{m−1})/t, same scale as L_m
            let deriv = (m as f64 * ev.vm - (m as f64 + a) * ev.vm1) / *ti;
            if deriv != 0.0 {
                let step = ev.vm / deriv;
                if step.abs() < 0.5 * ti.abs() {
                    *ti -= step;
                }
            }
        }
        let ev = laguerre_scaled(a, m + 1, *ti);
        // ln |L_{m+1}(t_i)|
        let ln_lm1 = ev.vtop.abs().ln() + ev.log_scale;
        ln_w.push(ln_norm + ti.ln() - 2.0 * ln_lm1);
    }
    // pin the zeroth moment to μ₀ = Γ(a+1) exactly; this removes the common
    // log-Γ rounding from every weight
    let wmax = ln_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = ln_w.iter().map(|&lw| (lw - wmax).exp()).sum();
    let correction = ln_gamma(a + 1.0) - (wmax + total.ln());
    for lw in ln_w.iter_mut() {
        *lw += correction;
    }
    Ok((t, ln_w))
}

struct LaguerreEval {
    /// L_{top}(t) scaled by e^{-log_scale}
    vtop: f64,
    /// L_{top-1}(t), same scaling
    vm: f64,
    /// L_{top-2}(t), same scaling
    vm1: f64,
    log_scale: f64,
}

/// Evaluate L_k^{(a)}(t) for k = 0..=top by the three-term recurrence,
/// rescaling to avoid overflow; returns the last three values and the
/// common log-scale.
fn laguerre_scaled(a: f64, top: usize, t: f64) -> LaguerreEval {
    let mut prev = 1.0_f64; // L_0
    let mut cur = 1.0 + a - t; // L_1
    let mut log_scale = 0.0_f64;
    let mut before_prev = 0.0;
    if top == 0 {
        return LaguerreEval {
            vtop: prev,
            vm: 0.0,
            vm1: 0.0,
            log_scale,
        };
    }
    for k in 1..top {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - t) * cur - (kf + a) * prev) / (kf + 1.0);
        before_prev = prev;
        prev = cur;
        cur = next;
        let mag = cur.abs().max(prev.abs());
        if mag > 1e250 {
            let f = 1e-250;
            cur *= f;
            prev *= f;
            before_prev *= f;
            log_scale += 250.0 * LN_10;
        }
    }
    LaguerreEval {
        vtop: cur,
        vm: prev,
        vm1: before_prev,
        log_scale,
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    gauss_jacobi_symmetric(0.0, m)
}

/// Gauss rule for the weight (1-x²)^λ on [-1, 1], λ > -1 (symmetric Jacobi).
pub fn gauss_jacobi_symmetric(lambda: f64, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if lambda <= -1.0 {
        return Err(WlsError::Domain(format!(
            "Jacobi exponent must exceed -1, got {lambda}"
        )));
    }
    let diag = vec![0.0; m];
    let off: Vec<f64> = (1..m)
        .map(|k| {
            let kf = k as f64;
            (kf * (kf + 2.0 * lambda)
                / ((2.0 * kf + 2.0 * lambda + 1.0) * (2.0 * kf + 2.0 * lambda - 1.0)))
                .sqrt()
        })
        .collect();
    let jacobi = SymTridiag::new(diag, off);
    let (x, z) = jacobi.eigen_first_components()?;
    // μ₀ = ∫ (1-x²)^λ dx = √π Γ(λ+1)/Γ(λ+3/2)
    let mu0 = PI.sqrt() * (ln_gamma(lambda + 1.0) - ln_gamma(lambda + 1.5)).exp();
    let w: Vec<f64> = z.iter().map(|&zq| mu0 * zq).collect();
    Ok((x, w))
}

/// Quadrature for azimuthally symmetric functions on S^{d-1}: nodes in the
/// polar angle θ with weights for sin^{d-2}θ dθ times |S^{d-2}|, so the
/// total weight is |S^{d-1}|. For d = 2 the rule is the (spectrally
/// accurate) midpoint rule on [0, 2π).
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub d: u32,
    pub theta_nodes: Vec<f64>,
    /// Unnormalized weights; they sum to |S^{d-1}|.
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// ∫ f dω over S^{d-1} (unnormalized measure) from samples at the nodes.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.theta_nodes.len() {
            return Err(WlsError::LengthMismatch {
                expected: self.theta_nodes.len(),
                got: values.len(),
            });
        }
        Ok(compensated_dot(&self.weights, values))
    }

    /// Mean of f over the sphere (normalized measure).
    pub fn integrate_normalized(&self, values: &[f64]) -> Result<f64> {
        Ok(self.integrate(values)? / self.total_weight())
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.theta_nodes.iter().map(|&t| f(t)).collect()
    }
}

/// Build the sphere rule; `count` is the node count.
pub fn sphere_rule(d: u32, count: usize) -> Result<SphereRule> {
    if d < 2 {
        return Err(WlsError::Domain(format!(
            "sphere rule needs d >= 2, got {d}"
        )));
    }
    if count < 4 {
        return Err(WlsError::Accuracy("sphere rule needs count >= 4".into()));
    }
    if d == 2 {
        let h = 2.0 * PI / count as f64;
        let theta_nodes: Vec<f64> = (0..count).map(|i| (i as f64 + 0.5) * h).collect();
        let weights = vec![h; count];
        return Ok(SphereRule {
            d,
            theta_nodes,
            weights,
        });
    }
    let lambda = 0.5 * (d as f64 - 3.0);
    let (x, wx) = gauss_jacobi_symmetric(lambda, count)?;
    let sigma_prev =
        2.0 * (0.5 * (d as f64 - 1.0) * PI.ln() - ln_gamma(0.5 * (d as f64 - 1.0))).exp();
    // x ascending maps to θ descending; flip to keep θ increasing
    let mut theta_nodes: Vec<f64> = x
        .iter()
        .rev()
        .map(|&xi| xi.clamp(-1.0, 1.0).acos())
        .collect();
    let mut weights: Vec<f64> = wx.iter().rev().map(|&w| w * sigma_prev).collect();
    // guard: exact ascending order
    let mut idx: Vec<usize> = (0..theta_nodes.len()).collect();
    idx.sort_by(|&i, &j| theta_nodes[i].partial_cmp(&theta_nodes[j]).expect("finite"));
    theta_nodes = idx.iter().map(|&i| theta_nodes[i]).collect();
    weights = idx.iter().map(|&i| weights[i]).collect();
    Ok(SphereRule {
        d,
        theta_nodes,
        weights,
    })
}

/// ∫ s^{n-1} e^{-s²/2} ds over (0, ∞) in closed form: 2^{n/2-1} Γ(n/2).
pub fn gaussian_radial_mass(n: f64) -> f64 {
    ((0.5 * n - 1.0) * 2.0_f64.ln() + ln_gamma(0.5 * n)).exp()
}
