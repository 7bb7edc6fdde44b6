//! Command-line front end: every computation as a reproducible command
//! emitting CSV or JSON.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::game::{self, SaddleReport, Strategy};
use crate::harmonic;
use crate::stake::{self, StakeMethod, TotVarMode};
use crate::tree::{BoundaryPaymentGraph, RootRewardTree};
use crate::walk::{self, WalkPolicy};

/// Exit codes: 0 ok, 2 input error, 3 numeric failure, 4 strategy
/// contract violation.
#[derive(Debug)]
pub struct CliFailure {
    pub code: i32,
    pub message: String,
}

impl CliFailure {
    fn input(message: impl Into<String>) -> Self {
        CliFailure {
            code: 2,
            message: message.into(),
        }
    }

    fn numeric(message: impl Into<String>) -> Self {
        CliFailure {
            code: 3,
            message: message.into(),
        }
    }

    fn contract(message: impl Into<String>) -> Self {
        CliFailure {
            code: 4,
            message: message.into(),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "staketow",
    version,
    about = "stake-governed tug-of-war toolkit"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct CommonArgs {
    /// Graph input document (JSON).
    #[arg(long)]
    pub graph: PathBuf,
    /// Write output here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ValueMethod {
    Auto,
    FixedPoint,
    Decomposition,
    ClosedForm,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum StakeMethodArg {
    Derivative,
    ClosedForm,
    TotvarExact,
    TotvarMc,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SurfaceKind {
    Val,
    Psi,
    Phi,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum StrategyKind {
    Conforming,
    ZeroStake,
    GoForBroke,
    ScaledStake,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Per-vertex game values h(λ, v) for one or more λ.
    Value {
        #[command(flatten)]
        common: CommonArgs,
        /// λ values (repeatable or comma separated).
        #[arg(long, required = true, value_delimiter = ',')]
        lambda: Vec<f64>,
        #[arg(long, value_enum, default_value = "auto")]
        method: ValueMethod,
        /// Fixed-point tolerance.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Optimal stake proportion at a vertex.
    Stake {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        vertex: String,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, value_enum, default_value = "closed-form")]
        method: StakeMethodArg,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Maximal-slope path decomposition at bias λ.
    Decompose {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        lambda: f64,
    },
    /// Expected total variation of the lazy biased walk.
    Totvar {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        vertex: String,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        /// Monte-Carlo mode (default exact linear solve).
        #[arg(long, default_value_t = false)]
        mc: bool,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Constrained-value surface over first-turn stakes: CSV grid plus a
    /// JSON sidecar with curves and classification.
    Contour {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        surface: SurfaceKind,
        #[arg(long)]
        vertex: String,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 201)]
        resolution: usize,
    },
    /// Saddle classification of the predicted equilibrium stake pair.
    Saddle {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        surface: SurfaceKind,
        #[arg(long)]
        vertex: String,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 201)]
        resolution: usize,
    },
    /// Monte-Carlo gameplay under named strategies.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        vertex: String,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "conforming")]
        mina: StrategyKind,
        #[arg(long, value_enum, default_value = "conforming")]
        maxine: StrategyKind,
        /// Turn at which a deviating strategy deviates.
        #[arg(long, default_value_t = 1)]
        deviate_turn: u32,
        /// Stake multiplier for scaled-stake deviations.
        #[arg(long, default_value_t = 1.5)]
        scale: f64,
        #[arg(long)]
        max_turns: Option<usize>,
        /// Also write the first trajectory's turn-by-turn trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Poisson-game drift and its stationary stake rates.
    Poisson {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        vertex: String,
        #[arg(long)]
        lambda: f64,
        /// Optional stake rates; without them the saddle is reported.
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
    },
}

/// Formats with 12 significant digits, plain decimal where reasonable.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..15).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let trimmed = s.trim_end_matches('0').trim_end_matches('.');
        trimmed.to_string()
    } else {
        format!("{x:.11e}")
    }
}

fn valid_lambda_epsilon(lambda: f64, epsilon: f64) -> Result<(), CliFailure> {
    let lambda_ok = lambda.is_finite() && lambda > 0.0;
    let epsilon_ok = epsilon.is_finite() && epsilon > 0.0 && epsilon <= 1.0;
    if lambda_ok && epsilon_ok {
        Ok(())
    } else {
        Err(CliFailure::input("need lambda > 0 and epsilon in (0, 1]"))
    }
}

fn load_graph(path: &PathBuf) -> Result<BoundaryPaymentGraph<f64>, CliFailure> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliFailure::input(format!("cannot read {}: {e}", path.display())))?;
    BoundaryPaymentGraph::from_json_str(&text).map_err(|e| CliFailure::input(e.to_string()))
}

fn load_tree(path: &PathBuf) -> Result<(BoundaryPaymentGraph<f64>, RootRewardTree), CliFailure> {
    let g = load_graph(path)?;
    let t = RootRewardTree::from_graph(&g).map_err(|e| CliFailure::input(e.to_string()))?;
    Ok((g, t))
}

fn vertex_index(g: &BoundaryPaymentGraph<f64>, id: &str) -> Result<usize, CliFailure> {
    g.index(id)
        .ok_or_else(|| CliFailure::input(format!("unknown vertex {id}")))
}

fn emit(common: &CommonArgs, text: &str) -> Result<(), CliFailure> {
    match &common.output {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliFailure::input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sidecar_path(common: &CommonArgs) -> Option<PathBuf> {
    common.output.as_ref().map(|p| p.with_extension("json"))
}

/// Runs one parsed command. Returns the process exit code.
pub fn run(config: RunConfig) -> Result<(), CliFailure> {
    if let Ok(threads) = std::env::var("STAKETOW_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
    match config.command {
        Command::Value {
            common,
            lambda,
            method,
            tol,
        } => {
            let g = load_graph(&common.graph)?;
            let mut rows = Vec::new();
            for &lam in &lambda {
                if lam.is_nan() || lam <= 0.0 {
                    return Err(CliFailure::input(format!(
                        "lambda must be positive, got {lam}"
                    )));
                }
                let field = match method {
                    ValueMethod::Auto => harmonic::solve_field(&g, lam)
                        .map_err(|e| CliFailure::numeric(e.to_string()))?,
                    ValueMethod::FixedPoint => harmonic::h_fixed_point(&g, lam, tol)
                        .map_err(|e| CliFailure::numeric(e.to_string()))?,
                    ValueMethod::Decomposition => {
                        let d = harmonic::ps_decompose(&g, 1.0 / lam)
                            .map_err(|e| CliFailure::input(e.to_string()))?;
                        harmonic::h_from_decomposition(&g, &d)
                    }
                    ValueMethod::ClosedForm => {
                        let t = RootRewardTree::from_graph(&g)
                            .map_err(|e| CliFailure::input(e.to_string()))?;
                        harmonic::h_closed_form_field(&t, lam)
                    }
                };
                for v in 0..g.vertex_count() {
                    rows.push((g.id(v).to_string(), lam, field.values[v], field.method));
                }
            }
            match common.format {
                OutputFormat::Csv => {
                    let mut out = String::from("vertex,lambda,value,method\n");
                    for (id, lam, value, method) in rows {
                        let _ = writeln!(out, "{id},{},{},{method}", fmt_g(lam), fmt_g(value));
                    }
                    emit(&common, &out)
                }
                OutputFormat::Json => {
                    let items: Vec<_> = rows
                        .iter()
                        .map(|(id, lam, value, method)| {
                            json!({"vertex": id, "lambda": lam, "value": value,
                                   "method": method.to_string()})
                        })
                        .collect();
                    emit(
                        &common,
                        &format!("{}\n", serde_json::to_string_pretty(&items).unwrap()),
                    )
                }
            }
        }
        Command::Stake {
            common,
            vertex,
            lambda,
            epsilon,
            method,
            trials,
            seed,
        } => {
            let (_, t) = load_tree(&common.graph)?;
            let v = t
                .index(&vertex)
                .ok_or_else(|| CliFailure::input(format!("unknown vertex {vertex}")))?;
            if valid_lambda_epsilon(lambda, epsilon).is_err() {
                return Err(CliFailure::input("need lambda > 0 and epsilon in (0, 1]"));
            }
            let result = match method {
                StakeMethodArg::Derivative => stake::stake(&t, epsilon, lambda, v),
                StakeMethodArg::ClosedForm => {
                    stake::stake_closed_form(&t, lambda, v).map(|s| stake::StakeResult {
                        epsilon,
                        lambda,
                        vertex: t.id(v).to_string(),
                        value: epsilon * s,
                        method: StakeMethod::ClosedForm,
                    })
                }
                StakeMethodArg::TotvarExact => {
                    stake::stake_via_totvar(&t, epsilon, lambda, v, TotVarMode::Exact)
                }
                StakeMethodArg::TotvarMc => {
                    let (Some(trials), Some(seed)) = (trials, seed) else {
                        return Err(CliFailure::input("totvar-mc requires --trials and --seed"));
                    };
                    if trials == 0 {
                        return Err(CliFailure::input("trials must be positive"));
                    }
                    stake::stake_via_totvar(
                        &t,
                        epsilon,
                        lambda,
                        v,
                        TotVarMode::MonteCarlo {
                            trials,
                            seed,
                            max_steps: walk::default_max_steps(&t, epsilon),
                        },
                    )
                }
            }
            .map_err(|e| CliFailure::input(e.to_string()))?;
            match common.format {
                OutputFormat::Csv => {
                    let mut out = String::from("vertex,lambda,epsilon,stake,method\n");
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{}",
                        result.vertex,
                        fmt_g(result.lambda),
                        fmt_g(result.epsilon),
                        fmt_g(result.value),
                        result.method
                    );
                    emit(&common, &out)
                }
                OutputFormat::Json => {
                    let item = json!({
                        "vertex": result.vertex, "lambda": result.lambda,
                        "epsilon": result.epsilon, "stake": result.value,
                        "method": result.method.to_string()
                    });
                    emit(
                        &common,
                        &format!("{}\n", serde_json::to_string_pretty(&item).unwrap()),
                    )
                }
            }
        }
        Command::Decompose { common, lambda } => {
            let g = load_graph(&common.graph)?;
            if lambda.is_nan() || lambda <= 0.0 {
                return Err(CliFailure::input("lambda must be positive"));
            }
            let d = harmonic::ps_decompose(&g, 1.0 / lambda)
                .map_err(|e| CliFailure::input(e.to_string()))?;
            match common.format {
                OutputFormat::Csv => {
                    let mut out = String::from("index,from,to,slope,internal\n");
                    for (k, p) in d.paths.iter().enumerate() {
                        let internal: Vec<&str> = p.internal.iter().map(|&u| g.id(u)).collect();
                        let _ = writeln!(
                            out,
                            "{k},{},{},{},{}",
                            g.id(p.from),
                            g.id(p.to),
                            fmt_g(p.rho_slope),
                            internal.join(" ")
                        );
                    }
                    emit(&common, &out)
                }
                OutputFormat::Json => {
                    let items: Vec<_> = d
                        .paths
                        .iter()
                        .map(|p| {
                            json!({
                                "from": g.id(p.from), "to": g.id(p.to),
                                "slope": p.rho_slope,
                                "internal": p.internal.iter().map(|&u| g.id(u)).collect::<Vec<_>>()
                            })
                        })
                        .collect();
                    let doc = json!({"rho": d.rho, "paths": items});
                    emit(
                        &common,
                        &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()),
                    )
                }
            }
        }
        Command::Totvar {
            common,
            vertex,
            lambda,
            epsilon,
            mc,
            trials,
            seed,
        } => {
            let (_, t) = load_tree(&common.graph)?;
            let v = t
                .index(&vertex)
                .ok_or_else(|| CliFailure::input(format!("unknown vertex {vertex}")))?;
            if !t.is_open(v) {
                return Err(CliFailure::input(format!("vertex {vertex} is not open")));
            }
            let theta = WalkPolicy::lexicographic(&t);
            let (value, stderr, mode) = if mc {
                let (Some(trials), Some(seed)) = (trials, seed) else {
                    return Err(CliFailure::input("--mc requires --trials and --seed"));
                };
                if trials == 0 {
                    return Err(CliFailure::input("trials must be positive"));
                }
                let est = walk::mc_expected_totvar(
                    &t,
                    epsilon,
                    lambda,
                    &theta,
                    v,
                    trials,
                    seed,
                    walk::default_max_steps(&t, epsilon),
                );
                (est.mean, est.stderr, "mc")
            } else {
                let w = walk::expected_totvar_exact(&t, epsilon, lambda, &theta, v)
                    .map_err(|e| CliFailure::numeric(e.to_string()))?;
                (w, 0.0, "exact")
            };
            let mut out = String::from("vertex,lambda,epsilon,etotvar,stderr,mode\n");
            let _ = writeln!(
                out,
                "{vertex},{},{},{},{},{mode}",
                fmt_g(lambda),
                fmt_g(epsilon),
                fmt_g(value),
                fmt_g(stderr)
            );
            emit(&common, &out)
        }
        Command::Contour {
            common,
            surface,
            vertex,
            lambda,
            epsilon,
            resolution,
        }
        | Command::Saddle {
            common,
            surface,
            vertex,
            lambda,
            epsilon,
            resolution,
        } => {
            let report = scan_surface(&common, surface, &vertex, lambda, epsilon, resolution)?;
            let mut csv = String::from("a,b,value\n");
            for (i, &a) in report.a_grid.iter().enumerate() {
                for (j, &b) in report.b_grid.iter().enumerate() {
                    let _ = writeln!(
                        csv,
                        "{},{},{}",
                        fmt_g(a),
                        fmt_g(b),
                        fmt_g(report.values[i][j])
                    );
                }
            }
            emit(&common, &csv)?;
            let sidecar = json!({
                "candidate": [report.candidate.0, report.candidate.1],
                "candidate_value": report.candidate_value,
                "classification": report.classification.to_string(),
                "red_curve": report
                    .b_grid
                    .iter()
                    .zip(&report.red_curve)
                    .map(|(&b, set)| json!({
                        "b": b,
                        "a": set.iter().map(|&i| report.a_grid[i]).collect::<Vec<_>>()
                    }))
                    .collect::<Vec<_>>(),
                "blue_curve": report
                    .a_grid
                    .iter()
                    .zip(&report.blue_curve)
                    .map(|(&a, set)| json!({
                        "a": a,
                        "b": set.iter().map(|&j| report.b_grid[j]).collect::<Vec<_>>()
                    }))
                    .collect::<Vec<_>>(),
                "discontinuities": report
                    .discontinuities
                    .iter()
                    .map(|&(a, b)| json!([a, b]))
                    .collect::<Vec<_>>(),
            });
            let sidecar_text = format!("{}\n", serde_json::to_string_pretty(&sidecar).unwrap());
            if let Some(path) = sidecar_path(&common) {
                fs::write(&path, &sidecar_text).map_err(|e| {
                    CliFailure::input(format!("cannot write {}: {e}", path.display()))
                })?;
            } else {
                eprint!("{sidecar_text}");
            }
            println!(
                "classification {} at candidate ({}, {})",
                report.classification,
                fmt_g(report.candidate.0),
                fmt_g(report.candidate.1)
            );
            Ok(())
        }
        Command::Simulate {
            common,
            vertex,
            lambda,
            epsilon,
            trials,
            seed,
            mina,
            maxine,
            deviate_turn,
            scale,
            max_turns,
            trace,
        } => {
            if trials == 0 {
                return Err(CliFailure::input("trials must be positive"));
            }
            if valid_lambda_epsilon(lambda, epsilon).is_err() {
                return Err(CliFailure::input("need lambda > 0 and epsilon in (0, 1]"));
            }
            let (g, t) = load_tree(&common.graph)?;
            let v = vertex_index(&g, &vertex)?;
            if g.is_boundary(v) {
                return Err(CliFailure::input(format!("vertex {vertex} is not open")));
            }
            let max_turns = max_turns.unwrap_or_else(|| walk::default_max_steps(&t, epsilon));
            let mina_conf = game::MinaConforming::lexicographic(&t, epsilon);
            let maxine_conf = game::MaxineConforming { tree: &t, epsilon };
            let zero = game::ZeroStakeMaxine { tree: &t };
            let mina_strategy: Box<dyn Strategy + '_> = match mina {
                StrategyKind::Conforming => {
                    Box::new(game::MinaConforming::lexicographic(&t, epsilon))
                }
                StrategyKind::ZeroStake => {
                    return Err(CliFailure::input("zero-stake is a Maxine strategy"))
                }
                StrategyKind::GoForBroke => Box::new(game::GoForBrokeOnTurn {
                    inner: &mina_conf,
                    turn: deviate_turn,
                    is_maxine: false,
                }),
                StrategyKind::ScaledStake => Box::new(game::ScaleStakeOnTurn {
                    inner: &mina_conf,
                    turn: deviate_turn,
                    factor: scale,
                    is_maxine: false,
                }),
            };
            let maxine_strategy: Box<dyn Strategy + '_> = match maxine {
                StrategyKind::Conforming => Box::new(game::MaxineConforming { tree: &t, epsilon }),
                StrategyKind::ZeroStake => Box::new(zero),
                StrategyKind::GoForBroke => Box::new(game::GoForBrokeOnTurn {
                    inner: &maxine_conf,
                    turn: deviate_turn,
                    is_maxine: true,
                }),
                StrategyKind::ScaledStake => Box::new(game::ScaleStakeOnTurn {
                    inner: &maxine_conf,
                    turn: deviate_turn,
                    factor: scale,
                    is_maxine: true,
                }),
            };
            if let Some(trace_path) = &trace {
                let (_, record) = game::simulate_game(
                    &g,
                    epsilon,
                    lambda,
                    v,
                    mina_strategy.as_ref(),
                    maxine_strategy.as_ref(),
                    seed,
                    max_turns,
                )
                .map_err(|e| CliFailure::contract(e.to_string()))?;
                let mut text = String::from("step,vertex,fortune_ratio,cumulative_totvar\n");
                let _ = writeln!(text, "0,{},{},0", g.id(v), fmt_g(lambda));
                let mut cum = 0.0;
                let mut cur = v;
                for r in &record.turns {
                    let gap: f64 = harmonic::delta(&t, r.fortune_before, cur).map_or(0.0, |x| x);
                    cum += gap;
                    cur = r.counter_after;
                    let _ = writeln!(
                        text,
                        "{},{},{},{}",
                        r.turn,
                        g.id(cur),
                        fmt_g(r.fortune_after),
                        fmt_g(cum)
                    );
                }
                fs::write(trace_path, text).map_err(|e| {
                    CliFailure::input(format!("cannot write {}: {e}", trace_path.display()))
                })?;
            }
            let est = game::mc_mean_payoff(
                &g,
                epsilon,
                lambda,
                v,
                mina_strategy.as_ref(),
                maxine_strategy.as_ref(),
                trials,
                seed,
                max_turns,
            )
            .map_err(|e| CliFailure::contract(e.to_string()))?;
            let mut out = String::from("vertex,lambda,epsilon,trials,seed,mean,stderr\n");
            let _ = writeln!(
                out,
                "{vertex},{},{},{trials},{seed},{},{}",
                fmt_g(lambda),
                fmt_g(epsilon),
                fmt_g(est.mean),
                fmt_g(est.stderr)
            );
            emit(&common, &out)
        }
        Command::Poisson {
            common,
            vertex,
            lambda,
            a,
            b,
        } => {
            let (_, t) = load_tree(&common.graph)?;
            let v = t
                .index(&vertex)
                .ok_or_else(|| CliFailure::input(format!("unknown vertex {vertex}")))?;
            if lambda.is_nan() || lambda <= 0.0 {
                return Err(CliFailure::input("lambda must be positive"));
            }
            let (a0, b0) = game::poisson_saddle(&t, lambda, v)
                .map_err(|e| CliFailure::input(e.to_string()))?;
            let mut out = String::from("vertex,lambda,a,b,phi,a0,b0\n");
            match (a, b) {
                (Some(a), Some(b)) => {
                    let phi = game::poisson_phi(&t, lambda, v, a, b)
                        .map_err(|e| CliFailure::input(e.to_string()))?;
                    let _ = writeln!(
                        out,
                        "{vertex},{},{},{},{},{},{}",
                        fmt_g(lambda),
                        fmt_g(a),
                        fmt_g(b),
                        fmt_g(phi),
                        fmt_g(a0),
                        fmt_g(b0)
                    );
                }
                (None, None) => {
                    let phi = game::poisson_phi(&t, lambda, v, a0, b0)
                        .map_err(|e| CliFailure::input(e.to_string()))?;
                    let _ = writeln!(
                        out,
                        "{vertex},{},{},{},{},{},{}",
                        fmt_g(lambda),
                        fmt_g(a0),
                        fmt_g(b0),
                        fmt_g(phi),
                        fmt_g(a0),
                        fmt_g(b0)
                    );
                }
                _ => return Err(CliFailure::input("provide both --a and --b or neither")),
            }
            emit(&common, &out)
        }
    }
}

fn scan_surface(
    common: &CommonArgs,
    surface: SurfaceKind,
    vertex: &str,
    lambda: f64,
    epsilon: f64,
    resolution: usize,
) -> Result<SaddleReport, CliFailure> {
    if resolution < 11 {
        return Err(CliFailure::input("resolution must be at least 11"));
    }
    if valid_lambda_epsilon(lambda, epsilon).is_err() {
        return Err(CliFailure::input("need lambda > 0 and epsilon in (0, 1]"));
    }
    let g = load_graph(&common.graph)?;
    let v = vertex_index(&g, vertex)?;
    if g.is_boundary(v) {
        return Err(CliFailure::input(format!("vertex {vertex} is not open")));
    }
    let tree = RootRewardTree::from_graph(&g).ok();
    let shave = 1.0 - 1e-9;
    match surface {
        SurfaceKind::Val => {
            let candidate = match &tree {
                Some(t) => {
                    let s = stake::stake(t, 1.0, lambda, v)
                        .map_err(|e| CliFailure::input(e.to_string()))?
                        .value;
                    (lambda * s, s)
                }
                None => (lambda / 2.0, 0.5),
            };
            let f = |a: f64, b: f64| val_constrained_total(&g, epsilon, lambda, v, a, b);
            Ok(game::saddle_scan(
                &f,
                (0.0, lambda / epsilon * shave),
                (0.0, 1.0 / epsilon * shave),
                resolution,
                candidate,
            ))
        }
        SurfaceKind::Psi => {
            let t =
                tree.ok_or_else(|| CliFailure::input("psi surface requires a root-reward tree"))?;
            let s = stake::stake(&t, 1.0, lambda, v)
                .map_err(|e| CliFailure::input(e.to_string()))?
                .value;
            let f = move |a: f64, b: f64| {
                game::psi(&t, epsilon, lambda, v, a, b).map_or(f64::NAN, |x| x)
            };
            Ok(game::saddle_scan(
                &f,
                (lambda * s * 0.5, lambda * s * 1.5),
                (s * 0.5, s * 1.5),
                resolution,
                (lambda * s, s),
            ))
        }
        SurfaceKind::Phi => {
            let t =
                tree.ok_or_else(|| CliFailure::input("phi surface requires a root-reward tree"))?;
            let (a0, b0) = game::poisson_saddle(&t, lambda, v)
                .map_err(|e| CliFailure::input(e.to_string()))?;
            let f = move |a: f64, b: f64| {
                game::poisson_phi(&t, lambda, v, a.max(1e-12), b.max(1e-12)).unwrap()
            };
            Ok(game::saddle_scan(
                &f,
                (a0 * 0.1, a0 * 3.0),
                (b0 * 0.1, b0 * 3.0),
                resolution,
                (a0, b0),
            ))
        }
    }
}

/// The Val surface as a total function for grid scanning.
fn val_constrained_total(
    g: &BoundaryPaymentGraph<f64>,
    epsilon: f64,
    lambda: f64,
    v: usize,
    a: f64,
    b: f64,
) -> f64 {
    game::val_constrained(g, epsilon, lambda, v, a, b).map_or(f64::NAN, |x| x)
}
