//! Command-line front end: scans of the (β, γ) plane, constant evaluation,
//! spectral verification, identity checks, flow and hypercontractivity
//! experiments, the p → 1 limit probe, and the variational deficit search.
//!
//! Every subcommand accepts the parameter point either as `--beta --gamma`
//! or as `--n --alpha` (converted through γ = d − nα, β = γ + 2α − 2), and
//! emits CSV (default) or JSON via `--format`, to stdout or `--out`.
//!
//! Exit codes: 0 success, 2 invalid/inadmissible parameters, 3 internal
//! consistency failure, 4 numerical non-convergence.

mod output;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use wls_core::ckn;
use wls_core::constants::{self, evaluate_constants};
use wls_core::error::WlsError;
use wls_core::flow::{self, FlowConfig, FlowVariant};
use wls_core::functionals::{DeficitForm, FunctionalCtx, ProfileFn};
use wls_core::params::{
    self, classify, derive, params_from_n_alpha, ProblemParams, DEFAULT_BOUNDARY_TOL,
};
use wls_core::quadrature::RadialRuleKind;
use wls_core::search::{self, AnsatzKind};
use wls_core::spectral;

use output::{Format, Sink, Table, Value};

use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "wls", version, about = "weighted logarithmic Sobolev toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ParamArgs {
    /// Ambient dimension d >= 1
    #[arg(long)]
    d: u32,
    /// Weight exponent β (with --gamma)
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["n", "alpha"], requires = "gamma")]
    beta: Option<f64>,
    /// Weight exponent γ (with --beta)
    #[arg(long, allow_hyphen_values = true, requires = "beta")]
    gamma: Option<f64>,
    /// Artificial dimension n (with --alpha)
    #[arg(long, allow_hyphen_values = true, requires = "alpha")]
    n: Option<f64>,
    /// Anisotropy α (with --n)
    #[arg(long, allow_hyphen_values = true, requires = "n")]
    alpha: Option<f64>,
}

impl ParamArgs {
    fn resolve(&self) -> Result<ProblemParams, WlsError> {
        match (self.beta, self.gamma, self.n, self.alpha) {
            (Some(beta), Some(gamma), None, None) => Ok(ProblemParams::new(self.d, beta, gamma)),
            (None, None, Some(n), Some(alpha)) => params_from_n_alpha(self.d, n, alpha),
            _ => Err(WlsError::InvalidParameters(
                "give either --beta --gamma or --n --alpha".into(),
            )),
        }
    }
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// Output path (default: standard output)
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Numerical tolerance where one applies
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Seed for randomized procedures
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Classify a parameter point and report its derived quantities
    Classify {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Evaluate every closed-form constant at a parameter point
    Constants {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Scan a (β, γ) grid and emit one row per point
    Scan {
        /// Ambient dimension d
        #[arg(long)]
        d: u32,
        #[arg(long, allow_hyphen_values = true)]
        beta_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta_max: f64,
        #[arg(long, default_value_t = 40)]
        beta_steps: usize,
        #[arg(long, allow_hyphen_values = true)]
        gamma_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        gamma_max: f64,
        #[arg(long, default_value_t = 40)]
        gamma_steps: usize,
        /// Restrict the emitted columns (comma-separated subset)
        #[arg(long, value_delimiter = ',')]
        columns: Vec<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Solve the radial instability eigenproblem and compare with λ₁(α)
    Eigen {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1024)]
        grid_size: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Evaluate a deficit report for g* or an eigenmode-perturbed candidate
    Deficit {
        #[command(flatten)]
        params: ParamArgs,
        /// Amplitude of the ℓ=1 eigenmode channel (0 keeps g*)
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        epsilon: f64,
        /// Inequality form
        #[arg(long, value_enum, default_value_t = FormArg::Scale)]
        form: FormArg,
        /// σ for the sigma/gaussian forms
        #[arg(long, default_value_t = 0.5)]
        sigma: f64,
        /// Constant K (default: K*)
        #[arg(long, allow_hyphen_values = true)]
        k: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check the pointwise carré-du-champ identity on the analytic test set
    Identity {
        #[command(flatten)]
        params: ParamArgs,
        /// Number of randomized pressures on top of the fixed cases
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Simulate a weighted flow and export its trace
    Flow {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value_t = VariantArg::Ou)]
        variant: VariantArg,
        #[arg(long, default_value_t = 1024)]
        grid: usize,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 2.0)]
        t_end: f64,
        /// Initial datum
        #[arg(long, value_enum, default_value_t = InitArg::Eigenmode)]
        init: InitArg,
        /// Perturbation amplitude for the eigenmode/perturbed data
        #[arg(long, default_value_t = 1e-3, allow_hyphen_values = true)]
        epsilon: f64,
        /// Comma-separated list of L^q norms to record
        #[arg(long, value_delimiter = ',')]
        lq: Vec<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Hypercontractivity experiment along the weighted heat flow
    Hyper {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        #[arg(long, default_value_t = 4.0)]
        r: f64,
        #[arg(long, default_value_t = 768)]
        grid: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Richardson-extrapolated p → 1 limit of the interpolation constants
    CknLimit {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 6)]
        k_min: i32,
        #[arg(long, default_value_t = 16)]
        k_max: i32,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Minimize the deficit over an ansatz family
    Search {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value_t = FamilyArg::Eigenmode)]
        family: FamilyArg,
        #[arg(long, default_value_t = 400)]
        budget: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    Scale,
    Sigma,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Heat,
    Fp,
    Ou,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Stationary,
    Eigenmode,
    Gaussian,
    Perturbed,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    RadialSpline,
    GaussianPoly,
    Eigenmode,
}

impl From<FamilyArg> for AnsatzKind {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::RadialSpline => AnsatzKind::RadialSpline,
            FamilyArg::GaussianPoly => AnsatzKind::GaussianTimesPoly,
            FamilyArg::Eigenmode => AnsatzKind::EigenmodePerturbation,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    if let Some(wls) = err.downcast_ref::<WlsError>() {
        match wls {
            WlsError::InvalidParameters(_)
            | WlsError::DegenerateParameters { .. }
            | WlsError::Domain(_)
            | WlsError::Ordering(_)
            | WlsError::NotPositive(_) => 2,
            WlsError::InternalConsistency(_) => 3,
            WlsError::NonConvergent(_)
            | WlsError::GridTooCoarse(_)
            | WlsError::Accuracy(_)
            | WlsError::SchemeFailure(_) => 4,
            _ => 1,
        }
    } else {
        1
    }
}

/// The shared row shape of `classify` and `scan`.
fn point_row(d: u32, beta: f64, gamma: f64, tol: f64) -> Vec<Value> {
    let p = ProblemParams::new(d, beta, gamma);
    let admissible = p.is_admissible();
    let region = classify(&p, tol);
    let mut row = vec![
        Value::Int(d as i64),
        Value::Num(beta),
        Value::Num(gamma),
        Value::Bool(admissible),
        Value::Str(region.as_str().to_string()),
    ];
    if !admissible {
        row.extend(vec![Value::Empty; 8]);
        return row;
    }
    match derive(&p) {
        Ok(dp) => {
            row.push(Value::Num(dp.n));
            row.push(Value::Num(dp.alpha));
            row.push(Value::Num(dp.nu));
            row.push(Value::Num(dp.alpha_fs));
            row.push(dp.beta_fs.map_or(Value::Empty, Value::Num));
            match evaluate_constants(&dp, d) {
                Ok(rep) => {
                    row.push(Value::Num(rep.c_star));
                    row.push(Value::Num(rep.k_star));
                }
                Err(_) => {
                    row.push(Value::Empty);
                    row.push(Value::Empty);
                }
            }
            if d >= 2 && dp.n > 1.0 {
                row.push(Value::Num(constants::lambda1(d, dp.n, dp.alpha)));
            } else {
                row.push(Value::Empty);
            }
        }
        Err(_) => row.extend(vec![Value::Empty; 8]),
    }
    row
}

const POINT_COLUMNS: [&str; 13] = [
    "d",
    "beta",
    "gamma",
    "admissible",
    "region",
    "n",
    "alpha",
    "nu",
    "alpha_fs",
    "beta_fs",
    "c_star",
    "k_star",
    "lambda1",
];

fn meta(output: &OutputArgs, extra: Vec<(String, Value)>) -> Vec<(String, Value)> {
    let mut m = vec![
        (
            "tool_version".to_string(),
            Value::Str(env!("CARGO_PKG_VERSION").to_string()),
        ),
        ("tol".to_string(), Value::Num(output.tol)),
        ("seed".to_string(), Value::Int(output.seed as i64)),
    ];
    m.extend(extra);
    m
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Classify { params, output } => {
            let p = params.resolve()?;
            let tol = if output.tol > 0.0 {
                DEFAULT_BOUNDARY_TOL.max(output.tol.min(1e-3))
            } else {
                DEFAULT_BOUNDARY_TOL
            };
            let table = Table {
                columns: POINT_COLUMNS.iter().map(|s| s.to_string()).collect(),
                rows: vec![point_row(p.d, p.beta, p.gamma, tol)],
                meta: meta(&output, vec![]),
            };
            emit(&output, table)?;
            if !p.is_admissible() {
                return Err(WlsError::InvalidParameters(format!(
                    "point (d={}, beta={}, gamma={}) is inadmissible",
                    p.d, p.beta, p.gamma
                ))
                .into());
            }
            Ok(())
        }
        Command::Constants { params, output } => {
            let p = params.resolve()?;
            if !p.is_admissible() {
                return Err(WlsError::InvalidParameters(format!(
                    "point (d={}, beta={}, gamma={}) is inadmissible",
                    p.d, p.beta, p.gamma
                ))
                .into());
            }
            let dp = derive(&p)?;
            let rep = evaluate_constants(&dp, p.d)?;
            let alt = constants::c_star_alternative_form(&dp, p.d)?;
            let lam = if p.d >= 2 {
                Some(constants::lambda1(p.d, dp.n, dp.alpha))
            } else {
                None
            };
            let delta = if p.d >= 2 && dp.n > p.d as f64 {
                Some(constants::delta_coefficient(p.d, dp.n))
            } else {
                None
            };
            let table = Table {
                columns: vec![
                    "c_nd".into(),
                    "c_star".into(),
                    "c_star_alt".into(),
                    "k_star".into(),
                    "y_star".into(),
                    "sigma_d".into(),
                    "lambda1".into(),
                    "delta".into(),
                ],
                rows: vec![vec![
                    Value::Num(rep.c_nd),
                    Value::Num(rep.c_star),
                    Value::Num(alt),
                    Value::Num(rep.k_star),
                    Value::Num(rep.y_star),
                    Value::Num(rep.sigma_d),
                    lam.map_or(Value::Empty, Value::Num),
                    delta.map_or(Value::Empty, Value::Num),
                ]],
                meta: meta(&output, vec![]),
            };
            emit(&output, table)
        }
        Command::Scan {
            d,
            beta_min,
            beta_max,
            beta_steps,
            gamma_min,
            gamma_max,
            gamma_steps,
            columns,
            output,
        } => {
            if beta_steps < 2 || gamma_steps < 2 {
                return Err(WlsError::InvalidParameters(
                    "scan needs at least 2 steps per axis".into(),
                )
                .into());
            }
            for v in [beta_min, beta_max, gamma_min, gamma_max] {
                if !v.is_finite() {
                    return Err(
                        WlsError::InvalidParameters("scan ranges must be finite".into()).into(),
                    );
                }
            }
            // γ outer, β inner, row-major
            let points: Vec<(f64, f64)> = (0..gamma_steps)
                .flat_map(|i| {
                    let gamma =
                        gamma_min + (gamma_max - gamma_min) * i as f64 / (gamma_steps - 1) as f64;
                    (0..beta_steps).map(move |j| {
                        let beta =
                            beta_min + (beta_max - beta_min) * j as f64 / (beta_steps - 1) as f64;
                        (gamma, beta)
                    })
                })
                .collect();
            let rows: Vec<Vec<Value>> = points
                .par_iter()
                .map(|&(gamma, beta)| point_row(d, beta, gamma, DEFAULT_BOUNDARY_TOL))
                .collect();
            // optional column selection, preserving the canonical order
            let (columns, rows) = if columns.is_empty() {
                (
                    POINT_COLUMNS.iter().map(|s| s.to_string()).collect(),
                    rows,
                )
            } else {
                for c in &columns {
                    if !POINT_COLUMNS.contains(&c.as_str()) {
                        return Err(WlsError::InvalidParameters(format!(
                            "unknown scan column '{c}'"
                        ))
                        .into());
                    }
                }
                let keep: Vec<usize> = POINT_COLUMNS
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| columns.iter().any(|sel| sel == *c))
                    .map(|(i, _)| i)
                    .collect();
                let cols = keep.iter().map(|&i| POINT_COLUMNS[i].to_string()).collect();
                let rows = rows
                    .into_iter()
                    .map(|row| keep.iter().map(|&i| row[i].clone()).collect())
                    .collect();
                (cols, rows)
            };
            let table = Table {
                columns,
                rows,
                meta: meta(
                    &output,
                    vec![
                        ("d".into(), Value::Int(d as i64)),
                        ("beta_steps".into(), Value::Int(beta_steps as i64)),
                        ("gamma_steps".into(), Value::Int(gamma_steps as i64)),
                    ],
                ),
            };
            emit(&output, table)
        }
        Command::Eigen {
            params,
            grid_size,
            output,
        } => {
            let p = params.resolve()?;
            require_admissible(&p)?;
            let dp = derive(&p)?;
            let res = spectral::radial_eigensolve(p.d, &dp, grid_size, output.tol)?;
            let table = Table {
                columns: vec![
                    "lambda_numeric".into(),
                    "lambda_formula".into(),
                    "abs_diff".into(),
                    "shift".into(),
                    "error_estimate".into(),
                ],
                rows: vec![vec![
                    Value::Num(res.lambda_numeric),
                    Value::Num(res.lambda_formula),
                    Value::Num((res.lambda_numeric - res.lambda_formula).abs()),
                    Value::Num(res.shift),
                    Value::Num(res.error_estimate),
                ]],
                meta: meta(
                    &output,
                    vec![("grid_size".into(), Value::Int(grid_size as i64))],
                ),
            };
            emit(&output, table)
        }
        Command::Deficit {
            params,
            epsilon,
            form,
            sigma,
            k,
            output,
        } => {
            let p = params.resolve()?;
            require_admissible(&p)?;
            let dp = derive(&p)?;
            let ctx = FunctionalCtx::new(p.d, dp, 24, 48, RadialRuleKind::AdaptivePanel)?;
            let kval = k.unwrap_or(ctx.consts.k_star);
            let candidate = if epsilon == 0.0 {
                ctx.gaussian_optimizer()
            } else {
                let g = ctx.gaussian_optimizer();
                let phi = spectral::explicit_mode(&ctx);
                let mode = phi.angular.expect("mode");
                let pr = mode.profile.clone();
                let dr = mode.deriv.clone();
                let profile: ProfileFn = Arc::new(move |s| epsilon * pr(s));
                let deriv: ProfileFn = Arc::new(move |s| epsilon * dr(s));
                ctx.candidate_with_mode(g.radial.clone(), g.radial_deriv.clone(), 1, profile, deriv)
            };
            let form = match form {
                FormArg::Scale => DeficitForm::ScaleInvariant { k: kval },
                FormArg::Sigma => DeficitForm::Sigma { sigma, k: kval },
                FormArg::Gaussian => DeficitForm::Gaussian { sigma },
            };
            let rep = ctx.deficit(&candidate, form)?;
            let table = Table {
                columns: vec![
                    "norm_sq".into(),
                    "grad_sq".into(),
                    "entropy".into(),
                    "deficit".into(),
                    "k".into(),
                    "epsilon".into(),
                ],
                rows: vec![vec![
                    Value::Num(rep.norm_sq),
                    Value::Num(rep.grad_sq),
                    Value::Num(rep.entropy),
                    Value::Num(rep.deficit),
                    Value::Num(kval),
                    Value::Num(epsilon),
                ]],
                meta: meta(&output, vec![]),
            };
            emit(&output, table)
        }
        Command::Identity {
            params,
            samples,
            output,
        } => {
            let p = params.resolve()?;
            require_admissible(&p)?;
            let dp = derive(&p)?;
            run_identity(&p, &dp, samples, output)
        }
        Command::Flow {
            params,
            variant,
            grid,
            dt,
            t_end,
            init,
            epsilon,
            lq,
            output,
        } => {
            let p = params.resolve()?;
            require_admissible(&p)?;
            let dp = derive(&p)?;
            let variant = match variant {
                VariantArg::Heat => FlowVariant::Heat,
                VariantArg::Fp => FlowVariant::FokkerPlanck,
                VariantArg::Ou => FlowVariant::OrnsteinUhlenbeck,
            };
            let cfg = FlowConfig::new(p.d, dp, variant, grid, dt, t_end)?.with_lq(lq.clone());
            let n = dp.n;
            let alpha = dp.alpha;
            let u0: Vec<f64> = match (init, variant) {
                (InitArg::Stationary, FlowVariant::OrnsteinUhlenbeck) => cfg.sample(|_| 1.0),
                (InitArg::Stationary, _) => cfg.sample(|s| cfg.stationary_profile(s)),
                (InitArg::Eigenmode, FlowVariant::OrnsteinUhlenbeck) => {
                    cfg.sample(|s| 1.0 + epsilon * (s * s - n * alpha))
                }
                (InitArg::Eigenmode, _) => cfg
                    .sample(|s| cfg.stationary_profile(s) * (1.0 + epsilon * (s * s - n * alpha))),
                (InitArg::Gaussian, _) => cfg.sample(|s| (-0.5 * s * s / alpha).exp()),
                (InitArg::Perturbed, FlowVariant::OrnsteinUhlenbeck) => cfg.sample(|s| {
                    1.0 + epsilon * (1.0 + (1.0 + 0.3 * s).ln()) * (-0.1 * s * s).exp()
                }),
                (InitArg::Perturbed, _) => cfg
                    .sample(|s| cfg.stationary_profile(s) * (1.0 + epsilon * (1.0 + 0.2 * s * s))),
            };
            let trace = flow::simulate(&cfg, &u0, t_end)?;
            let mut columns = vec![
                "t".to_string(),
                "mass".to_string(),
                "entropy".to_string(),
                "fisher".to_string(),
            ];
            for (q, _) in &trace.lq_norms {
                columns.push(format!("lq_{q}"));
            }
            let mut rows = Vec::with_capacity(trace.times.len());
            for i in 0..trace.times.len() {
                let mut row = vec![
                    Value::Num(trace.times[i]),
                    Value::Num(trace.mass[i]),
                    Value::Num(trace.entropy[i]),
                    Value::Num(trace.fisher[i]),
                ];
                for (_, series) in &trace.lq_norms {
                    row.push(Value::Num(series[i]));
                }
                rows.push(row);
            }
            let diag = flow::decay_diagnostics(&trace, &dp).ok();
            let mut extra = vec![
                ("grid_size".into(), Value::Int(grid as i64)),
                ("dt".into(), Value::Num(dt)),
            ];
            if let Some(diag) = diag {
                extra.push((
                    "entropy_rate".into(),
                    diag.entropy_rate.map_or(Value::Empty, Value::Num),
                ));
                extra.push((
                    "fisher_rate".into(),
                    diag.fisher_rate.map_or(Value::Empty, Value::Num),
                ));
                if let Some(ok) = diag.cia_bound_ok {
                    extra.push(("cia_bound_ok".into(), Value::Bool(ok)));
                }
            }
            let table = Table {
                columns,
                rows,
                meta: meta(&output, extra),
            };
            emit(&output, table)
        }
        Command::Hyper {
            params,
            q,
            r,
            grid,
            output,
        } => {
            let p = params.resolve()?;
            require_admissible(&p)?;
            let dp = derive(&p)?;
            let c = evaluate_constants(&dp, p.d)?.c_star;
            let alpha = dp.alpha;
            let rep = flow::hyper_experiment(
                p.d,
                &dp,
                c,
                q,
                r,
                move |s| (-0.5 * s * s / alpha).exp(),
                grid,
                output.tol.max(1e-6),
            )?;
            let mut rows = Vec::with_capacity(rep.samples.len());
            for s in &rep.samples {
                rows.push(vec![
                    Value::Num(s.t),
                    Value::Num(s.norm_r),
                    Value::Num(s.nelson_bound),
                ]);
            }
            let table = Table {
                columns: vec!["t".into(), "norm_r".into(), "nelson_bound".into()],
                rows,
                meta: meta(
                    &output,
                    vec![
                        ("q".into(), Value::Num(rep.q)),
                        ("r".into(), Value::Num(rep.r)),
                        ("sigma".into(), Value::Num(rep.sigma)),
                        ("t_star".into(), Value::Num(rep.t_star)),
                        ("h_const".into(), Value::Num(rep.h_const)),
                        ("norm_q0".into(), Value::Num(rep.norm_q0)),
                        ("norm_r_at_t_star".into(), Value::Num(rep.norm_r_at_t_star)),
                        ("p_at_t_star".into(), Value::Num(rep.p_at_t_star)),
                        ("t_star_ok".into(), Value::Bool(rep.t_star_ok)),
                        ("nelson_ok".into(), Value::Bool(rep.nelson_ok)),
                    ],
                ),
            };
            emit(&output, table)
        }
        Command::CknLimit {
            params,
            k_min,
            k_max,
            output,
        } => {
            let p = params.resolve()?;
            require_admissible(&p)?;
            let dp = derive(&p)?;
            if k_max <= k_min {
                return Err(WlsError::InvalidParameters("need k_max > k_min".into()).into());
            }
            let p_seq: Vec<f64> = (k_min..=k_max).map(|k| 1.0 + 0.5_f64.powi(k)).collect();
            let mut rows = Vec::new();
            for &pv in &p_seq {
                let pt = ckn::ckn_constants(&p, pv)?;
                rows.push(vec![
                    Value::Num(pv),
                    Value::Num(pt.theta),
                    Value::Num(pt.zeta),
                    Value::Num(pt.c_star_p),
                    Value::Num(4.0 * (pt.c_star_p - 1.0) / (pv - 1.0)),
                ]);
            }
            let limit = ckn::limit_probe(&p, &p_seq)?;
            let c_star = evaluate_constants(&dp, p.d)?.c_star;
            let table = Table {
                columns: vec![
                    "p".into(),
                    "theta".into(),
                    "zeta".into(),
                    "c_star_p".into(),
                    "quotient".into(),
                ],
                rows,
                meta: meta(
                    &output,
                    vec![
                        ("limit".into(), Value::Num(limit)),
                        ("c_star".into(), Value::Num(c_star)),
                        ("abs_diff".into(), Value::Num((limit - c_star).abs())),
                    ],
                ),
            };
            emit(&output, table)
        }
        Command::Search {
            params,
            family,
            budget,
            output,
        } => {
            let p = params.resolve()?;
            require_admissible(&p)?;
            let res = search::minimize_deficit(&p, family.into(), budget, output.seed)?;
            let cert = search::sb_certificate(&p)?;
            let (cert_str, cert_eps, cert_deficit) = match cert {
                search::SbCertificate::CertifiedBreaking { epsilon, deficit } => (
                    "certified_breaking",
                    Value::Num(epsilon),
                    Value::Num(deficit),
                ),
                search::SbCertificate::NoImprovement => {
                    ("no_improvement", Value::Empty, Value::Empty)
                }
            };
            let table = Table {
                columns: vec![
                    "best_deficit".into(),
                    "best_k_upper".into(),
                    "k_gap".into(),
                    "iterations".into(),
                    "converged".into(),
                    "certificate".into(),
                    "cert_epsilon".into(),
                    "cert_deficit".into(),
                ],
                rows: vec![vec![
                    Value::Num(res.best_deficit),
                    Value::Num(res.best_k_upper),
                    Value::Num(res.k_gap),
                    Value::Int(res.iterations as i64),
                    Value::Bool(res.converged),
                    Value::Str(cert_str.into()),
                    cert_eps,
                    cert_deficit,
                ]],
                meta: meta(
                    &output,
                    vec![(
                        "coefficients".into(),
                        Value::Str(format!("{:?}", res.ansatz.coefficients)),
                    )],
                ),
            };
            emit(&output, table)
        }
    }
}

fn require_admissible(p: &ProblemParams) -> Result<(), WlsError> {
    if !p.is_admissible() {
        return Err(WlsError::InvalidParameters(format!(
            "point (d={}, beta={}, gamma={}) is inadmissible",
            p.d, p.beta, p.gamma
        )));
    }
    Ok(())
}

fn run_identity(
    p: &ProblemParams,
    dp: &params::DerivedParams,
    samples: usize,
    output: OutputArgs,
) -> anyhow::Result<()> {
    use wls_core::carre_du_champ::{k_bulk, AngularFactor, PressureField, PressureTerm};
    let radial = |m: f64| PressureField {
        d: p.d,
        terms: vec![PressureTerm {
            coef: 1.0,
            power: m,
            gauss: 0.0,
            angular: AngularFactor::One,
        }],
    };
    let mut cases: Vec<(String, PressureField)> = vec![
        ("r^2".into(), radial(2.0)),
        ("r^3".into(), radial(3.0)),
        (
            "r^2+0.1 r cos".into(),
            PressureField {
                d: p.d,
                terms: vec![
                    PressureTerm {
                        coef: 1.0,
                        power: 2.0,
                        gauss: 0.0,
                        angular: AngularFactor::One,
                    },
                    PressureTerm {
                        coef: 0.1,
                        power: 1.0,
                        gauss: 0.0,
                        angular: AngularFactor::CosPoly(vec![0.0, 1.0]),
                    },
                ],
            },
        ),
    ];
    // deterministic pseudo-random pressures from the seed
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(output.seed);
    for i in 0..samples {
        let nterms = rng.gen_range(2..4);
        let mut terms = Vec::new();
        for _ in 0..nterms {
            let deg = rng.gen_range(1..4usize);
            let coeffs: Vec<f64> = (0..=deg).map(|_| rng.gen_range(-1.0..1.0)).collect();
            terms.push(PressureTerm {
                coef: rng.gen_range(-1.0..1.0),
                power: rng.gen_range(0..5) as f64,
                gauss: rng.gen_range(0.05..0.6),
                angular: AngularFactor::CosPoly(coeffs),
            });
        }
        cases.push((format!("random_{i}"), PressureField { d: p.d, terms }));
    }
    let mut rows = Vec::new();
    for (name, field) in &cases {
        let rep = k_bulk(field, dp, 12, 24)?;
        rows.push(vec![
            Value::Str(name.clone()),
            Value::Num(rep.max_residual),
            Value::Num(rep.max_relative_residual),
            Value::Num(rep.term_radial_hessian.min),
            Value::Num(rep.term_mixed.min),
        ]);
    }
    let table = Table {
        columns: vec![
            "pressure".into(),
            "max_residual".into(),
            "max_relative_residual".into(),
            "radial_hessian_min".into(),
            "mixed_min".into(),
        ],
        rows,
        meta: meta(&output, vec![]),
    };
    emit(&output, table)
}

fn emit(output: &OutputArgs, table: Table) -> anyhow::Result<()> {
    let sink = match &output.out {
        Some(path) => Sink::File(path.clone()),
        None => Sink::Stdout,
    };
    table
        .write(sink, output.format.into())
        .context("writing output")
}
