//! Per-command file emission: states/entropy CSVs, metadata JSON, tables and
//! reports.

use crate::csvio::{format_value, write_csv};
use crate::runs::{late_entropy_slope, HellingerEntry, JointReport, Workspace};
use crate::scenario::RegimeName;
use anyhow::{Context, Result};
use mgf_core::{DiscreteSystem, Trajectory};
use serde_json::json;
use std::path::Path;

/// Values at or below this are reported as under the solver floor in the
/// formatted Hellinger table.
pub const SOLVER_FLOOR: f64 = 1e-9;

pub fn eps_tag(eps: f64) -> String {
    format!("{eps:e}").replace('.', "p")
}

pub fn write_states_csv(
    path: &Path,
    sys: &DiscreteSystem,
    traj: &Trajectory,
) -> Result<()> {
    let mut columns = vec!["t".to_string()];
    columns.extend(sys.layout().slots().iter().map(|s| s.label()));
    let rows: Vec<Vec<f64>> = traj
        .times
        .iter()
        .zip(traj.states.iter())
        .map(|(t, s)| {
            let mut row = Vec::with_capacity(s.len() + 1);
            row.push(*t);
            row.extend_from_slice(s);
            row
        })
        .collect();
    write_csv(path, &columns, &rows)
}

pub fn write_entropy_csv(path: &Path, curve: &[(f64, f64)]) -> Result<()> {
    let rows: Vec<Vec<f64>> = curve.iter().map(|(t, h)| vec![*t, *h]).collect();
    write_csv(path, &["t".to_string(), "entropy".to_string()], &rows)
}

/// Layout table for the metadata JSON: slot index -> label.
fn layout_json(sys: &DiscreteSystem) -> serde_json::Value {
    json!(sys
        .layout()
        .slots()
        .iter()
        .enumerate()
        .map(|(i, s)| json!({"slot": i, "kind": s.label(), "weight": sys.layout().weight(i)}))
        .collect::<Vec<_>>())
}

pub fn write_simulate_outputs(
    ws: &Workspace,
    regime: RegimeName,
    out_dir: &Path,
    runs: &[(f64, DiscreteSystem, Trajectory, Vec<(f64, f64)>, f64)],
) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let mut records = Vec::new();
    for (eps, sys, traj, curve, wall) in runs {
        let tag = eps_tag(*eps);
        let states = format!("states_{regime}_eps{tag}.csv");
        let entropy = format!("entropy_{regime}_eps{tag}.csv");
        write_states_csv(&out_dir.join(&states), sys, traj)?;
        write_entropy_csv(&out_dir.join(&entropy), curve)?;
        records.push(json!({
            "eps": eps,
            "states_csv": states,
            "entropy_csv": entropy,
            "wall_seconds": wall,
            "steps_accepted": traj.stats.steps_accepted,
            "steps_rejected": traj.stats.steps_rejected,
            "factorizations": traj.stats.factorizations,
            "min_component": traj.stats.min_component,
            "final_entropy": curve.last().map(|c| c.1),
            "late_entropy_slope": late_entropy_slope(curve),
            "layout": layout_json(sys),
        }));
    }
    let meta = json!({
        "scenario": ws.scenario.name,
        "scenario_hash": ws.hash,
        "regime": regime.to_string(),
        "normalization_z": ws.measure.z(),
        "n": ws.scenario.n,
        "t_end": ws.scenario.t_end,
        "rtol": ws.scenario.integrator.rtol,
        "atol": ws.scenario.integrator.atol,
        "runs": records,
    });
    std::fs::write(
        out_dir.join(format!("metadata_{regime}.json")),
        serde_json::to_string_pretty(&meta)?,
    )?;
    Ok(())
}

pub fn write_hellinger_outputs(
    ws: &Workspace,
    out_dir: &Path,
    entries: &[HellingerEntry],
) -> Result<String> {
    std::fs::create_dir_all(out_dir)?;
    // raw CSV
    {
        use crate::csvio::CsvWriter;
        let file = std::fs::File::create(out_dir.join("hellinger.csv"))?;
        let mut w = CsvWriter::new(std::io::BufWriter::new(file));
        w.raw_row(&[
            "regime".into(),
            "eps".into(),
            "hellinger".into(),
            "below_floor".into(),
        ])?;
        for e in entries {
            w.raw_row(&[
                e.regime.to_string(),
                format_value(e.eps),
                format_value(e.value),
                (if e.value <= SOLVER_FLOOR { "1" } else { "0" }).into(),
            ])?;
        }
    }

    // formatted table, one row per regime
    let mut eps_list: Vec<f64> = entries.iter().map(|e| e.eps).collect();
    eps_list.sort_by(|a, b| b.total_cmp(a));
    eps_list.dedup();
    let mut table = String::new();
    table.push_str(&format!("{:<16}", "regime"));
    for eps in &eps_list {
        table.push_str(&format!("{:>14}", format!("eps={eps}")));
    }
    table.push('\n');
    let mut regimes: Vec<RegimeName> = Vec::new();
    for e in entries {
        if !regimes.contains(&e.regime) {
            regimes.push(e.regime);
        }
    }
    for regime in regimes {
        table.push_str(&format!("{:<16}", regime.to_string()));
        for eps in &eps_list {
            let cell = entries
                .iter()
                .find(|e| e.regime == regime && e.eps == *eps)
                .map(|e| {
                    if e.value <= SOLVER_FLOOR {
                        "<=1e-9".to_string()
                    } else {
                        format!("{:.3e}", e.value)
                    }
                })
                .unwrap_or_else(|| "-".into());
            table.push_str(&format!("{cell:>14}"));
        }
        table.push('\n');
    }
    std::fs::write(out_dir.join("hellinger_table.txt"), &table)?;

    let meta = json!({
        "scenario": ws.scenario.name,
        "scenario_hash": ws.hash,
        "solver_floor": SOLVER_FLOOR,
        "cell_weight": format!("{:?}", ws.scenario.hellinger_cell_weight),
        "entries": entries.iter().map(|e| json!({
            "regime": e.regime.to_string(),
            "eps": e.eps,
            "hellinger": e.value,
            "below_floor": e.value <= SOLVER_FLOOR,
            "wall_seconds": e.wall_seconds,
        })).collect::<Vec<_>>(),
    });
    std::fs::write(
        out_dir.join("hellinger.json"),
        serde_json::to_string_pretty(&meta)?,
    )?;
    Ok(table)
}

pub fn write_joint_outputs(ws: &Workspace, out_dir: &Path, report: &JointReport) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let rows: Vec<Vec<f64>> = report
        .entries
        .iter()
        .map(|e| vec![e.n as f64, e.eps, e.value])
        .collect();
    write_csv(
        &out_dir.join("joint_hellinger.csv"),
        &["n".to_string(), "eps".to_string(), "hellinger".to_string()],
        &rows,
    )?;
    let meta = json!({
        "scenario": ws.scenario.name,
        "scenario_hash": ws.hash,
        "slope": report.slope,
        "entries": report.entries.iter().map(|e| json!({
            "n": e.n, "eps": e.eps, "hellinger": e.value,
        })).collect::<Vec<_>>(),
    });
    std::fs::write(
        out_dir.join("joint_report.json"),
        serde_json::to_string_pretty(&meta)?,
    )?;
    Ok(())
}

pub fn write_entropy_sweep_csv(
    path: &Path,
    times: &[f64],
    curves: &[(String, Vec<(f64, f64)>)],
) -> Result<()> {
    let mut columns = vec!["t".to_string()];
    columns.extend(curves.iter().map(|(label, _)| label.clone()));
    let rows: Vec<Vec<f64>> = times
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut row = vec![*t];
            row.extend(curves.iter().map(|(_, c)| c[i].1));
            row
        })
        .collect();
    write_csv(path, &columns, &rows)
}
