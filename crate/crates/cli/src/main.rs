//! `mgf`: simulate linear diffusion on metric graphs with vertex reservoirs,
//! sweep the multiscale rescalings, and evaluate the variational structure
//! along trajectories.

mod csvio;
mod output;
mod runs;
mod scenario;
mod seed;
mod svg;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mgf_core::functionals::edp_report;
use runs::Workspace;
use scenario::RegimeName;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_CHECK_FAILED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "mgf",
    about = "Gradient-flow dynamics on metric graphs with reservoirs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Scenario JSON (falls back to $MGF_SEED_DIR/<path>, or the built-in
    /// triangle scenario when omitted)
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for independent runs (0 = rayon default)
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Override the scenario's relative tolerance
    #[arg(long)]
    rtol: Option<f64>,
    /// Override the scenario's absolute tolerance
    #[arg(long)]
    atol: Option<f64>,
    /// Override the scenario's time horizon
    #[arg(long)]
    t_end: Option<f64>,
    /// Override the number of output grid points
    #[arg(long)]
    grid: Option<usize>,
    /// Hellinger cell weighting: the distance formula taken literally, or
    /// with per-cell width weights
    #[arg(long, value_parser = ["literal", "per-cell"])]
    hellinger_cell_weight: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the scenario's systems and write states/entropy CSVs
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Regime to simulate (defaults to the scenario's first regime)
        #[arg(long)]
        regime: Option<String>,
    },
    /// Reproduce the prelimit-vs-limit Hellinger distance table
    TableHellinger {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Entropy decay curves for every regime and epsilon
    EntropySweep {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Joint fast-edge + combinatorial limit rate study over cell counts
    JointLimit {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate the energy-dissipation functional along a trajectory and
    /// check it vanishes within tolerance
    EdpCheck {
        #[command(flatten)]
        common: CommonArgs,
        /// Regime to check (defaults to unscaled)
        #[arg(long)]
        regime: Option<String>,
        /// Epsilon used for scaled regimes
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        /// Pass threshold: |L| <= tol * (1 + D)
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// Render a CSV (first column = x) as an SVG line chart
    Plot {
        /// Input CSV path
        csv: PathBuf,
        /// Output SVG path
        svg: PathBuf,
        /// Logarithmic y axis
        #[arg(long)]
        logy: bool,
        /// Logarithmic x axis
        #[arg(long)]
        logx: bool,
        /// Chart title
        #[arg(long, default_value = "")]
        title: String,
    },
}

fn parse_regime(name: &str) -> Result<RegimeName> {
    Ok(match name {
        "unscaled" => RegimeName::Unscaled,
        "kirchhoff" => RegimeName::Kirchhoff,
        "fast-edge" => RegimeName::FastEdge,
        "combinatorial" => RegimeName::Combinatorial,
        "joint" => RegimeName::Joint,
        other => bail!("unknown regime {other:?}"),
    })
}

fn build_workspace(common: &CommonArgs) -> Result<Workspace> {
    let (mut scenario, hash) = scenario::load_scenario(common.scenario.as_deref())?;
    if let Some(rtol) = common.rtol {
        scenario.integrator.rtol = rtol;
    }
    if let Some(atol) = common.atol {
        scenario.integrator.atol = atol;
    }
    if let Some(t_end) = common.t_end {
        scenario.t_end = t_end;
    }
    if let Some(grid) = common.grid {
        scenario.grid = grid;
    }
    if let Some(cw) = &common.hellinger_cell_weight {
        scenario.hellinger_cell_weight = match cw.as_str() {
            "per-cell" => scenario::CellWeightName::PerCell,
            _ => scenario::CellWeightName::Literal,
        };
    }
    scenario.validate()?;
    if common.jobs > 0 {
        // ignore failure when a global pool already exists (tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(common.jobs)
            .build_global();
    }
    Workspace::build(scenario, hash)
}

/// Errors from scenario handling are configuration errors; anything from the
/// numerics maps to the numerical exit code.
enum Failure {
    Config(anyhow::Error),
    Numerical(anyhow::Error),
    CheckFailed(String),
}

fn run_simulate(common: &CommonArgs, regime_flag: Option<&str>) -> Result<(), Failure> {
    let ws = build_workspace(common).map_err(Failure::Config)?;
    let regime = match regime_flag {
        Some(name) => parse_regime(name).map_err(Failure::Config)?,
        None => *ws.scenario.regimes.first().unwrap_or(&RegimeName::Unscaled),
    };
    let cfg = ws.config();
    let eps_list: Vec<f64> = if regime == RegimeName::Unscaled {
        vec![1.0]
    } else {
        ws.scenario.epsilons.clone()
    };
    let mut runs = Vec::new();
    for eps in eps_list {
        let start = std::time::Instant::now();
        let sys = ws.prelimit_system(regime, eps, ws.scenario.n).map_err(Failure::Numerical)?;
        let traj = ws.run(&sys, &cfg).map_err(Failure::Numerical)?;
        let curve = ws.entropy_curve(&sys, &traj).map_err(Failure::Numerical)?;
        runs.push((eps, sys, traj, curve, start.elapsed().as_secs_f64()));
    }
    output::write_simulate_outputs(&ws, regime, &common.out, &runs).map_err(Failure::Numerical)?;
    println!(
        "simulate: regime {regime}, {} run(s) written to {}",
        runs.len(),
        common.out.display()
    );
    Ok(())
}

fn run_table(common: &CommonArgs) -> Result<(), Failure> {
    let ws = build_workspace(common).map_err(Failure::Config)?;
    let regimes: Vec<RegimeName> = ws
        .scenario
        .regimes
        .iter()
        .copied()
        .filter(|r| *r != RegimeName::Unscaled)
        .collect();
    if regimes.is_empty() {
        return Err(Failure::Config(anyhow!(
            "table-hellinger needs at least one scaled regime"
        )));
    }
    let entries = runs::hellinger_table(&ws, &regimes, ws.scenario.cell_weight())
        .map_err(Failure::Numerical)?;
    let table =
        output::write_hellinger_outputs(&ws, &common.out, &entries).map_err(Failure::Numerical)?;
    print!("{table}");
    Ok(())
}

fn run_entropy_sweep(common: &CommonArgs) -> Result<(), Failure> {
    let ws = build_workspace(common).map_err(Failure::Config)?;
    let cfg = ws.config();
    std::fs::create_dir_all(&common.out)
        .context("creating output directory")
        .map_err(Failure::Config)?;
    let mut summary = Vec::new();
    for &regime in &ws.scenario.regimes {
        let mut curves: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
        let eps_list: Vec<f64> = if regime == RegimeName::Unscaled {
            vec![1.0]
        } else {
            ws.scenario.epsilons.clone()
        };
        for &eps in &eps_list {
            let sys = ws
                .prelimit_system(regime, eps, ws.scenario.n)
                .map_err(Failure::Numerical)?;
            let traj = ws.run(&sys, &cfg).map_err(Failure::Numerical)?;
            let curve = ws.entropy_curve(&sys, &traj).map_err(Failure::Numerical)?;
            curves.push((format!("eps={eps}"), curve));
        }
        if regime != RegimeName::Unscaled {
            let sys = ws
                .limit_system(regime, ws.scenario.n)
                .map_err(Failure::Numerical)?;
            let traj = ws.run(&sys, &cfg).map_err(Failure::Numerical)?;
            let curve = ws.entropy_curve(&sys, &traj).map_err(Failure::Numerical)?;
            curves.push(("limit".into(), curve));
        }
        let times: Vec<f64> = curves[0].1.iter().map(|p| p.0).collect();
        let path = common.out.join(format!("entropy_sweep_{regime}.csv"));
        output::write_entropy_sweep_csv(&path, &times, &curves).map_err(Failure::Numerical)?;
        for (label, curve) in &curves {
            summary.push(serde_json::json!({
                "regime": regime.to_string(),
                "series": label,
                "final_entropy": curve.last().map(|c| c.1),
                "late_slope": runs::late_entropy_slope(curve),
            }));
        }
        println!("entropy-sweep: wrote {}", path.display());
    }
    std::fs::write(
        common.out.join("entropy_summary.json"),
        serde_json::to_string_pretty(&serde_json::json!({
            "scenario": ws.scenario.name,
            "scenario_hash": ws.hash,
            "series": summary,
        }))
        .map_err(|e| Failure::Numerical(e.into()))?,
    )
    .map_err(|e| Failure::Numerical(e.into()))?;
    Ok(())
}

fn run_joint(common: &CommonArgs) -> Result<(), Failure> {
    let ws = build_workspace(common).map_err(Failure::Config)?;
    let joint = ws
        .scenario
        .joint
        .clone()
        .ok_or_else(|| Failure::Config(anyhow!("scenario has no \"joint\" section")))?;
    let report =
        runs::joint_study(&ws, &joint.n_list, &joint.epsilons).map_err(Failure::Numerical)?;
    output::write_joint_outputs(&ws, &common.out, &report).map_err(Failure::Numerical)?;
    for e in &report.entries {
        println!("n={:<5} eps={:<8} H={:.6e}", e.n, e.eps, e.value);
    }
    println!("fitted log-log slope at smallest eps: {:.4}", report.slope);
    Ok(())
}

fn run_edp_check(
    common: &CommonArgs,
    regime_flag: Option<&str>,
    eps: f64,
    tol: f64,
) -> Result<(), Failure> {
    let ws = build_workspace(common).map_err(Failure::Config)?;
    let regime = match regime_flag {
        Some(name) => parse_regime(name).map_err(Failure::Config)?,
        None => RegimeName::Unscaled,
    };
    let cfg = ws.config();
    let sys = ws
        .prelimit_system(regime, eps, ws.scenario.n)
        .map_err(Failure::Numerical)?;
    let traj = ws.run(&sys, &cfg).map_err(Failure::Numerical)?;
    let report = edp_report(&sys, &traj, ws.clip())
        .map_err(|e| Failure::Numerical(anyhow!("functional evaluation failed: {e}")))?;
    let threshold = tol * (1.0 + report.dissipation);
    let pass = report.l_value.abs() <= threshold;
    std::fs::create_dir_all(&common.out).map_err(|e| Failure::Numerical(e.into()))?;
    let json = serde_json::json!({
        "scenario": ws.scenario.name,
        "scenario_hash": ws.hash,
        "regime": regime.to_string(),
        "eps": eps,
        "l_value": report.l_value,
        "dissipation": report.dissipation,
        "breakdown": {
            "edge_rate": report.breakdown.edge_rate,
            "edge_slope": report.breakdown.edge_slope,
            "jump_rate": report.breakdown.jump_rate,
            "jump_slope": report.breakdown.jump_slope,
        },
        "tolerance": tol,
        "threshold": threshold,
        "pass": pass,
    });
    std::fs::write(
        common.out.join("edp_check.json"),
        serde_json::to_string_pretty(&json).map_err(|e| Failure::Numerical(e.into()))?,
    )
    .map_err(|e| Failure::Numerical(e.into()))?;
    println!(
        "edp-check: L = {:.6e}, D = {:.6e}, |L| <= {threshold:.3e}: {}",
        report.l_value,
        report.dissipation,
        if pass { "PASS" } else { "FAIL" }
    );
    if pass {
        Ok(())
    } else {
        Err(Failure::CheckFailed(format!(
            "energy-dissipation check failed: |L| = {:.3e} > {threshold:.3e}",
            report.l_value.abs()
        )))
    }
}

fn run_plot(
    csv: &PathBuf,
    svg_path: &PathBuf,
    logx: bool,
    logy: bool,
    title: &str,
) -> Result<(), Failure> {
    let parsed = csvio::read_numeric_csv(csv).map_err(Failure::Config)?;
    if parsed.columns.len() < 2 {
        return Err(Failure::Config(anyhow!(
            "CSV needs an x column plus at least one series"
        )));
    }
    let xs = &parsed.data[0];
    let series: Vec<svg::Series> = parsed.columns[1..]
        .iter()
        .zip(parsed.data[1..].iter())
        .map(|(label, ys)| svg::Series {
            label: label.clone(),
            points: xs.iter().copied().zip(ys.iter().copied()).collect(),
        })
        .collect();
    let opts = svg::PlotOptions {
        title: title.to_string(),
        x_label: parsed.columns[0].clone(),
        log_x: logx,
        log_y: logy,
        ..Default::default()
    };
    svg::render(svg_path, &series, &opts).map_err(Failure::Numerical)?;
    println!("plot: wrote {}", svg_path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate { common, regime } => run_simulate(common, regime.as_deref()),
        Command::TableHellinger { common } => run_table(common),
        Command::EntropySweep { common } => run_entropy_sweep(common),
        Command::JointLimit { common } => run_joint(common),
        Command::EdpCheck {
            common,
            regime,
            eps,
            tol,
        } => run_edp_check(common, regime.as_deref(), *eps, *tol),
        Command::Plot {
            csv,
            svg,
            logx,
            logy,
            title,
        } => run_plot(csv, svg, *logx, *logy, title),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e:#}");
            ExitCode::from(EXIT_NUMERICAL)
        }
        Err(Failure::CheckFailed(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(EXIT_CHECK_FAILED)
        }
    }
}
