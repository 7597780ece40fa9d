//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantities (visible with `cargo test -- --nocapture`).

use wls_core::carre_du_champ::{
    k_bulk, sphere_inequality_margin, AngularFactor, PressureField, PressureTerm, SphereLogProfile,
};
use wls_core::ckn;
use wls_core::constants::{c_star_alternative_form, evaluate_constants, lambda1};
use wls_core::flow::{self, FlowConfig, FlowVariant};
use wls_core::functionals::{el_residual, Candidate, DeficitForm, FunctionalCtx, ProfileFn};
use wls_core::params::{
    beta_fs, classify, derive, params_from_n_alpha, ProblemParams, Region, DEFAULT_BOUNDARY_TOL,
};
use wls_core::quadrature::{sphere_rule, RadialRuleKind};
use wls_core::search::{minimize_deficit, sb_certificate, AnsatzKind, SbCertificate};
use wls_core::spectral::radial_eigensolve;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use std::time::Instant;

fn random_admissible(rng: &mut ChaCha8Rng, dims: &[u32]) -> ProblemParams {
    loop {
        let d = dims[rng.gen_range(0..dims.len())];
        let df = d as f64;
        let gamma = rng.gen_range(-8.0..df - 0.05);
        let lo = gamma - 2.0;
        let hi = (df - 2.0) * gamma / df;
        if hi - lo < 1e-3 {
            continue;
        }
        let beta = lo + rng.gen_range(0.02..0.98) * (hi - lo);
        let p = ProblemParams::new(d, beta, gamma);
        if p.is_admissible() {
            return p;
        }
    }
}

#[test]
fn acceptance_01_region_duality() {
    let start = Instant::now();
    let mut checked = 0usize;
    for d in [2u32, 3, 4] {
        let df = d as f64;
        for i in 0..40 {
            let gamma = -6.0 + (df + 6.0) * (i as f64 + 0.5) / 40.0;
            let lo = gamma - 2.0;
            let hi = (df - 2.0) * gamma / df;
            if hi <= lo {
                continue;
            }
            for j in 0..40 {
                let beta = lo + (hi - lo) * (j as f64 + 0.5) / 40.0;
                let p = ProblemParams::new(d, beta, gamma);
                if !p.is_admissible() {
                    continue;
                }
                if let Some(bfs) = beta_fs(d, gamma) {
                    if (beta - bfs).abs() < 1e-6 {
                        continue;
                    }
                }
                let dp = derive(&p).unwrap();
                let lam = lambda1(d, dp.n, dp.alpha);
                let region = classify(&p, DEFAULT_BOUNDARY_TOL);
                assert_eq!(
                    region == Region::SymmetryBreaking,
                    lam < 0.0,
                    "disagreement at d={d}, beta={beta}, gamma={gamma}: {region:?}, λ₁={lam}"
                );
                checked += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(checked > 3000, "only {checked} admissible grid points");
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!("ACCEPTANCE 1: PASS — {checked} points, 0 disagreements, {elapsed:?}");
}

#[test]
fn acceptance_02_closed_form_cross_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(12_021);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let p = random_admissible(&mut rng, &[2, 3, 4, 5]);
        let dp = derive(&p).unwrap();
        let rep = evaluate_constants(&dp, p.d).unwrap();
        let alt = c_star_alternative_form(&dp, p.d).unwrap();
        let rel = (rep.c_star - alt).abs() / rep.c_star.abs().max(1.0);
        worst = worst.max(rel);
        assert!(
            rel <= 1e-12,
            "routes disagree at (d={}, beta={}, gamma={}): {} vs {}",
            p.d,
            p.beta,
            p.gamma,
            rep.c_star,
            alt
        );
    }
    // the frozen reference point
    let dp = derive(&ProblemParams::new(3, -1.0, -1.0)).unwrap();
    let rep = evaluate_constants(&dp, 3).unwrap();
    let alt = c_star_alternative_form(&dp, 3).unwrap();
    let exact = -(2.0 + (8.0 * std::f64::consts::PI).ln());
    assert!((rep.c_star - exact).abs() < 1e-12 * exact.abs());
    assert!((alt - exact).abs() < 1e-12 * exact.abs());
    println!("ACCEPTANCE 2: PASS — 1000 points, worst relative split {worst:.2e}");
}

#[test]
fn acceptance_03_optimizer_equality_case() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut sets = Vec::new();
    sets.push(ProblemParams::new(3, -1.0, -1.0));
    sets.push(ProblemParams::new(3, -2.5, -1.0));
    while sets.len() < 20 {
        sets.push(random_admissible(&mut rng, &[2, 3, 4]));
    }
    for p in &sets {
        let dp = derive(p).unwrap();
        let ctx = FunctionalCtx::new(p.d, dp, 256, 48, RadialRuleKind::GaussTransformed).unwrap();
        let g = ctx.gaussian_optimizer();
        let (norm, grad, ent) = ctx.norms_and_entropy(&g).unwrap();
        let grad_exact = 0.25 * dp.n * dp.alpha * dp.alpha;
        assert!((norm - 1.0).abs() <= 1e-8, "norm {norm} at {p:?}");
        assert!(
            (grad - grad_exact).abs() <= 1e-8 * grad_exact.max(1.0),
            "grad {grad} vs {grad_exact} at {p:?}"
        );
        assert!(
            (ent - ctx.consts.y_star).abs() <= 1e-8 * ctx.consts.y_star.abs().max(1.0),
            "entropy {ent} vs {} at {p:?}",
            ctx.consts.y_star
        );
        let rep = ctx
            .deficit(
                &g,
                DeficitForm::ScaleInvariant {
                    k: ctx.consts.k_star,
                },
            )
            .unwrap();
        assert!(
            rep.deficit.abs() <= 1e-8,
            "deficit {} at {p:?}",
            rep.deficit
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("ACCEPTANCE 3: PASS — 20 parameter sets, 256-node quadrature, {elapsed:?}");
}

#[test]
fn acceptance_04_spectral_verification() {
    let start = Instant::now();
    let grid = 4096;
    let mut worst = 0.0_f64;
    let mut count = 0usize;
    for &d in &[2u32, 3, 4] {
        for &n in &[4.0, 6.0, 9.0, 16.0, 28.0] {
            for &alpha in &[0.1, 0.2, 0.25, 0.4, 0.6, 0.8, 1.0] {
                let p = params_from_n_alpha(d, n, alpha).unwrap();
                let dp = derive(&p).unwrap();
                let res = radial_eigensolve(d, &dp, grid, 1e-6).unwrap();
                let diff = (res.lambda_numeric - res.lambda_formula).abs();
                worst = worst.max(diff);
                assert!(diff <= 1e-6, "d={d}, n={n}, alpha={alpha}: Δλ = {diff:e}");
                count += 1;
            }
        }
    }
    // the two pinned values
    let dp34 = derive(&ProblemParams::new(3, -1.0, -1.0)).unwrap();
    let res = radial_eigensolve(3, &dp34, grid, 1e-6).unwrap();
    assert!((res.lambda_numeric - (3.0_f64.sqrt() - 2.0)).abs() <= 1e-6);
    let dp316 = derive(&ProblemParams::new(3, -2.5, -1.0)).unwrap();
    let res = radial_eigensolve(3, &dp316, grid, 1e-6).unwrap();
    assert!((res.lambda_numeric - 0.0625).abs() <= 1e-6);
    // λ₁(α_FS) = 0 to 1e-8 (closed form)
    for (d, n) in [(2u32, 5.0), (3, 4.0), (3, 16.0), (4, 11.0)] {
        let afs = ((d as f64 - 1.0) / (n - 1.0)).sqrt();
        assert!(lambda1(d, n, afs).abs() <= 1e-8);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!("ACCEPTANCE 4: PASS — {count} grid points, worst |Δλ| = {worst:.2e}, {elapsed:?}");
}

#[test]
fn acceptance_05_pointwise_identity() {
    let dp = derive(&ProblemParams::new(3, -1.0, -1.0)).unwrap();
    let radial = |m: f64| PressureField {
        d: 3,
        terms: vec![PressureTerm {
            coef: 1.0,
            power: m,
            gauss: 0.0,
            angular: AngularFactor::One,
        }],
    };
    let rep2 = k_bulk(&radial(2.0), &dp, 12, 16).unwrap();
    assert!(rep2.max_residual <= 1e-10, "p=r²: {}", rep2.max_residual);
    let rep3 = k_bulk(&radial(3.0), &dp, 12, 16).unwrap();
    assert!(rep3.max_relative_residual <= 1e-8);
    // exact value 9α⁴(1−1/n) r² at the largest grid radius r = 5
    let exact = 9.0 * dp.alpha.powi(4) * (1.0 - 1.0 / dp.n) * 25.0;
    assert!(
        (rep3.term_radial_hessian.max_abs - exact).abs() <= 1e-9 * exact,
        "cubic closed form: {} vs {exact}",
        rep3.term_radial_hessian.max_abs
    );

    let mut rng = ChaCha8Rng::seed_from_u64(505);
    // p = r² is the 0 ≈ 0 case: only its absolute residual is meaningful
    let mut worst = rep3.max_relative_residual;
    for i in 0..50 {
        let d = 2 + (i % 3) as u32;
        let p = random_admissible(&mut rng, &[d]);
        let dp = derive(&p).unwrap();
        let nterms = rng.gen_range(2..4);
        let mut terms = Vec::new();
        for _ in 0..nterms {
            let angular = if d == 2 && rng.gen_bool(0.4) {
                AngularFactor::Fourier {
                    k: rng.gen_range(1..4),
                    sin: rng.gen_bool(0.5),
                }
            } else {
                let deg = rng.gen_range(1..4usize);
                AngularFactor::CosPoly((0..=deg).map(|_| rng.gen_range(-1.0..1.0)).collect())
            };
            terms.push(PressureTerm {
                coef: rng.gen_range(-1.0..1.0),
                power: rng.gen_range(0..5) as f64,
                gauss: rng.gen_range(0.05..0.6),
                angular,
            });
        }
        let field = PressureField { d, terms };
        let rep = k_bulk(&field, &dp, 10, 16).unwrap();
        worst = worst.max(rep.max_relative_residual);
        assert!(
            rep.max_relative_residual <= 1e-8,
            "sample {i}: {}",
            rep.max_relative_residual
        );
    }
    println!("ACCEPTANCE 5: PASS — 52 pressures, worst relative residual {worst:.2e}");
}

#[test]
fn acceptance_06_sphere_estimate() {
    // the computed reference case
    let p = params_from_n_alpha(2, 4.0, (1.0_f64 / 3.0).sqrt()).unwrap();
    let dp = derive(&p).unwrap();
    let rule = sphere_rule(2, 96).unwrap();
    let u = SphereLogProfile {
        terms: vec![(1.0, AngularFactor::Fourier { k: 1, sin: false })],
    };
    let m = sphere_inequality_margin(&u, &dp, 2, &rule).unwrap();
    assert!((m - 0.3554).abs() <= 1e-3, "reference margin {m}");

    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst = f64::INFINITY;
    for i in 0..200 {
        let d = 2 + (i % 3) as u32;
        let n = rng.gen_range(d as f64 + 0.5..40.0);
        let afs = ((d as f64 - 1.0) / (n - 1.0)).sqrt();
        let alpha = rng.gen_range(0.05..1.0) * afs;
        let pp = params_from_n_alpha(d, n, alpha).unwrap();
        let dpp = derive(&pp).unwrap();
        let rule = sphere_rule(d, 64).unwrap();
        let u = if d == 2 {
            SphereLogProfile {
                terms: vec![
                    (
                        rng.gen_range(-1.0..1.0),
                        AngularFactor::Fourier { k: 1, sin: false },
                    ),
                    (
                        rng.gen_range(-0.5..0.5),
                        AngularFactor::Fourier {
                            k: rng.gen_range(1..4),
                            sin: true,
                        },
                    ),
                ],
            }
        } else {
            SphereLogProfile {
                terms: vec![(
                    rng.gen_range(-1.0..1.0),
                    AngularFactor::CosPoly(vec![
                        0.0,
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-0.5..0.5),
                    ]),
                )],
            }
        };
        let margin = sphere_inequality_margin(&u, &dpp, d, &rule).unwrap();
        worst = worst.min(margin);
        assert!(margin >= -1e-9, "sample {i}: margin {margin}");
    }
    println!("ACCEPTANCE 6: PASS — reference margin {m:.4}, min randomized margin {worst:.2e}");
}

#[test]
fn acceptance_07_flow_rates() {
    let start = Instant::now();
    // eigenmode case at d=3, n=4, α=1, grid 2048, dt=1e-3
    let dp = derive(&ProblemParams::new(3, -1.0, -1.0)).unwrap();
    let alpha = dp.alpha;
    let n = dp.n;
    let cfg = FlowConfig::new(3, dp, FlowVariant::OrnsteinUhlenbeck, 2048, 1e-3, 2.0).unwrap();
    let w0 = cfg.sample(|s| 1.0 + 1e-3 * (s * s - n * alpha));
    let trace = flow::simulate(&cfg, &w0, 2.0).unwrap();
    let diag = flow::decay_diagnostics(&trace, &dp).unwrap();
    let er = diag.entropy_rate.expect("identifiable");
    assert!(
        (er + 4.0 * alpha).abs() <= 0.02 * 4.0 * alpha,
        "entropy rate {er}"
    );
    // mode decay rate fitted from ‖w − 1‖_{L²(μ̂)} = √(‖w‖₂² − 1) along a
    // trace that records the L²(μ̂) norm
    let mode_rate = {
        let cfg2 = FlowConfig::new(3, dp, FlowVariant::OrnsteinUhlenbeck, 2048, 1e-3, 1.0)
            .unwrap()
            .with_lq(vec![2.0]);
        let w0 = cfg2.sample(|s| 1.0 + 1e-3 * (s * s - n * alpha));
        let t0 = flow::simulate(&cfg2, &w0, 1.0).unwrap();
        let (_, l2) = &t0.lq_norms[0];
        let pts: Vec<(f64, f64)> = t0
            .times
            .iter()
            .zip(l2)
            .filter(|(_, &v)| v * v - 1.0 > 1e-18)
            .map(|(&t, &v)| (t, (v * v - 1.0).sqrt().ln()))
            .collect();
        let m = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        -(m * sxy - sx * sy) / (m * sxx - sx * sx)
    };
    assert!(
        (mode_rate - 2.0 * alpha).abs() <= 0.01 * 2.0 * alpha,
        "mode rate {mode_rate}"
    );

    // generic positive data in the symmetry range
    let dps = derive(&ProblemParams::new(3, -2.5, -1.0)).unwrap();
    let a2 = dps.alpha;
    let cfg3 =
        FlowConfig::new(3, dps, FlowVariant::OrnsteinUhlenbeck, 1024, 1e-3, 2.0 / a2).unwrap();
    let raw = cfg3.sample(|s| 1.0 + 0.4 * (1.0 + 0.3 * s).ln() * (-0.1 * s * s).exp());
    let trace3 = flow::simulate(&cfg3, &raw, 2.0 / a2).unwrap();
    let diag3 = flow::decay_diagnostics(&trace3, &dps).unwrap();
    let er3 = diag3.entropy_rate.expect("identifiable");
    let fr3 = diag3.fisher_rate.expect("identifiable");
    assert!(er3 <= -4.0 * a2 * 0.98, "generic entropy rate {er3}");
    assert!(fr3 <= -2.0 * a2 * 0.98, "generic fisher rate {fr3}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "ACCEPTANCE 7: PASS — eigenmode rates ({mode_rate:.4}, {er:.4}), generic ({er3:.4}, {fr3:.4}), {elapsed:?}"
    );
}

#[test]
fn acceptance_08_hypercontractivity() {
    let p = ProblemParams::new(3, -2.5, -1.0);
    let dp = derive(&p).unwrap();
    let c = evaluate_constants(&dp, 3).unwrap().c_star;
    let alpha = dp.alpha;
    let inits: Vec<(&str, Box<dyn Fn(f64) -> f64>)> = vec![
        (
            "gauss",
            Box::new(move |s: f64| (-0.5 * s * s / alpha).exp()),
        ),
        (
            "wide",
            Box::new(move |s: f64| (-0.55 * s * s / alpha).exp() * (1.0 + 0.2 * s * s)),
        ),
        (
            "ring",
            Box::new(move |s: f64| (-(s - 0.8) * (s - 0.8) / alpha).exp()),
        ),
        (
            "bimodal",
            Box::new(move |s: f64| {
                (-0.7 * s * s / alpha).exp() + 0.5 * (-(s - 1.2) * (s - 1.2) * 2.0 / alpha).exp()
            }),
        ),
        (
            "poly",
            Box::new(move |s: f64| (1.0 + s * s) * (-0.6 * s * s / alpha).exp()),
        ),
    ];
    for (name, u0) in inits {
        let rep = flow::hyper_experiment(3, &dp, c, 2.0, 4.0, u0, 768, 1e-3).unwrap();
        assert!(
            rep.t_star_ok,
            "{name}: ‖u(t*)‖_r = {} vs (1+1e-3)‖u₀‖_q = {}",
            rep.norm_r_at_t_star,
            rep.norm_q0 * 1.001
        );
        assert!(rep.nelson_ok, "{name}: smoothing bound violated");
        assert_eq!(rep.samples.len(), 20);
        assert!((rep.p_at_t_star - 4.0).abs() <= 1e-12);
    }
    println!("ACCEPTANCE 8: PASS — 5 initial data, 20 log-spaced times each");
}

#[test]
fn acceptance_09_ckn_limit() {
    let points = [
        ProblemParams::new(3, -2.5, -1.0),
        ProblemParams::new(3, -1.9, -0.5),
        ProblemParams::new(4, -2.2, -1.0),
    ];
    let p_seq: Vec<f64> = (6..=16).map(|k| 1.0 + 0.5_f64.powi(k)).collect();
    let mut worst = 0.0_f64;
    for p in &points {
        let dp = derive(p).unwrap();
        if let Some(bfs) = dp.beta_fs {
            assert!(p.beta <= bfs, "points must be in the symmetry range");
        }
        let c_star = evaluate_constants(&dp, p.d).unwrap().c_star;
        let lim = ckn::limit_probe(p, &p_seq).unwrap();
        let diff = (lim - c_star).abs();
        worst = worst.max(diff);
        assert!(diff <= 1e-4, "limit {lim} vs C* {c_star} at {p:?}");
    }
    // ζ(1) = 0 and ζ'(1) = 1/4 by finite differences
    let h = 1e-6;
    for p in &points {
        let pt = ckn::ckn_constants(p, 1.0 + h).unwrap();
        assert!(pt.zeta.abs() <= 1e-6 * 2.0, "zeta(1+h) = {}", pt.zeta);
        assert!(
            (pt.zeta / h - 0.25).abs() <= 1e-6,
            "zeta'(1) = {}",
            pt.zeta / h
        );
    }
    println!("ACCEPTANCE 9: PASS — 3 points, worst |limit − C*| = {worst:.2e}");
}

#[test]
fn acceptance_10_symmetry_breaking_certificates() {
    let start = Instant::now();
    match sb_certificate(&ProblemParams::new(3, -1.0, -1.0)).unwrap() {
        SbCertificate::CertifiedBreaking { deficit, .. } => {
            assert!(deficit < -1e-6, "deficit {deficit}");
        }
        SbCertificate::NoImprovement => panic!("expected certified breaking at (3,-1,-1)"),
    }
    assert!(matches!(
        sb_certificate(&ProblemParams::new(3, -2.5, -1.0)).unwrap(),
        SbCertificate::NoImprovement
    ));
    // radial searches in the symmetry range never beat the optimizer
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut tested = 0usize;
    let mut points = vec![ProblemParams::new(3, -2.5, -1.0)];
    while points.len() < 4 {
        let p = random_admissible(&mut rng, &[2, 3, 4]);
        if classify(&p, DEFAULT_BOUNDARY_TOL) == Region::Symmetry {
            points.push(p);
        }
    }
    for p in &points {
        for kind in [AnsatzKind::RadialSpline, AnsatzKind::GaussianTimesPoly] {
            let res = minimize_deficit(p, kind, 300, 99).unwrap();
            assert!(
                res.best_deficit >= -1e-7,
                "{kind:?} at {p:?}: {}",
                res.best_deficit
            );
            tested += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!("ACCEPTANCE 10: PASS — certificates + {tested} radial searches, {elapsed:?}");
}

#[test]
fn acceptance_11_el_residual() {
    let sets = [
        (3u32, -1.0, -1.0),
        (3, -2.5, -1.0),
        (2, -1.5, -0.5),
        (4, -2.0, -1.2),
        (3, -1.2, -0.3),
    ];
    let mut worst = 0.0_f64;
    for &(d, beta, gamma) in &sets {
        let p = ProblemParams::new(d, beta, gamma);
        assert!(p.is_admissible(), "test point {p:?} must be admissible");
        let dp = derive(&p).unwrap();
        let amp = (0.5 * (dp.n + 1.0)).exp();
        let a2 = dp.alpha * dp.alpha;
        let c = Candidate::radial_only(
            Arc::new(move |s: f64| amp * (-0.5 * s * s / a2).exp()) as ProfileFn,
            Arc::new(move |s: f64| -s / a2 * amp * (-0.5 * s * s / a2).exp()) as ProfileFn,
        );
        let res = el_residual(&c, &dp, 2048).unwrap();
        worst = worst.max(res);
        assert!(res < 1e-6, "residual {res} at {p:?}");
    }
    println!("ACCEPTANCE 11: PASS — 5 parameter sets, worst residual {worst:.2e}");
}
