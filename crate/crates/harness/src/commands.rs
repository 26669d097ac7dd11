//! The `gen-data`, `train`, `hybrid` and `compare` commands.

use std::io::Write;
use std::path::{Path, PathBuf};

use sciopt_core::problems::{read_params, write_params, ProblemTag};
use sciopt_core::solvers::{EpochRecord, RunResult, Termination};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::report::{aligned_table, csv_text, fmt_real, green_report, write_text, GreenReport};
use crate::session::{load_data, pod_for, save_data, Session};

fn out(w: &mut dyn Write, text: &str) -> Result<()> {
    w.write_all(text.as_bytes()).map_err(|e| HarnessError::io("writing output", e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(format!("creating {}", dir.display()), e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenDataSummary {
    pub path: PathBuf,
    pub n_train: usize,
    pub n_test: usize,
    pub d_in: usize,
    pub d_out: usize,
    pub pod_modes: Option<usize>,
    pub pod_energy: Option<f64>,
}

/// Writes `<out_dir>/<problem>.pmld` and prints its sizes.
pub fn cmd_gen_data(cfg: &ExperimentConfig, w: &mut dyn Write) -> Result<GenDataSummary> {
    ensure_dir(&cfg.out_dir)?;
    cfg.echo()?;
    let splits = load_data(cfg)?;
    let path = cfg.out_dir.join(format!("{}.pmld", cfg.problem));
    save_data(&path, cfg, &splits)?;
    let (pod_modes, pod_energy) = if cfg.problem.uses_pod() {
        let pod = pod_for(cfg, &splits.train)?;
        (Some(pod.n), Some(pod.energy_fraction))
    } else {
        (None, None)
    };
    let summary = GenDataSummary {
        path,
        n_train: splits.train.len(),
        n_test: splits.test.len(),
        d_in: splits.train.x.cols(),
        d_out: splits.train.y.cols(),
        pod_modes,
        pod_energy,
    };
    let mut text = format!(
        "wrote {}\nproblem {}: n_train={} n_test={} d_in={} d_out={} precision={}\n",
        summary.path.display(),
        cfg.problem,
        summary.n_train,
        summary.n_test,
        summary.d_in,
        summary.d_out,
        cfg.precision
    );
    if let (Some(n), Some(e)) = (pod_modes, pod_energy) {
        text.push_str(&format!("POD modes {n}, energy fraction {e:.9}\n"));
    }
    out(w, &text)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub records: Vec<EpochRecord>,
    pub termination: Termination,
    pub min_metric: Option<f64>,
    pub calls_at_min: Option<f64>,
    pub final_params: PathBuf,
    pub best_params: PathBuf,
    pub csv: PathBuf,
    pub green: Option<GreenReport>,
}

fn finish(
    session: &Session,
    dir: &Path,
    csv_name: &str,
    csv: &str,
    run: &RunResult,
    records: Vec<EpochRecord>,
    w: &mut dyn Write,
) -> Result<TrainSummary> {
    let cfg = &session.cfg;
    let csv_path = dir.join(csv_name);
    write_text(&csv_path, csv)?;
    let final_params = dir.join("params_final.pmld");
    let best_params = dir.join("params_best.pmld");
    write_params(&final_params, &run.theta, cfg.precision, cfg.seed)?;
    let best_theta = run.best.as_ref().map_or(&run.theta, |b| &b.theta);
    write_params(&best_params, best_theta, cfg.precision, cfg.seed)?;
    let green = if cfg.problem == ProblemTag::Green1d && !session.splits.test.is_empty() {
        // Scored on the parameters as written.
        let stored: Vec<f64> = best_theta.iter().map(|t| cfg.precision.round(*t)).collect();
        let report = green_report(session, &stored)?;
        write_text(&dir.join("kernel_report.txt"), &report.text())?;
        Some(report)
    } else {
        None
    };
    let (min_metric, calls_at_min) = match &run.best {
        Some(b) => (Some(b.metric), Some(b.oracle_calls)),
        None => (None, None),
    };
    let mut text = format!(
        "solver {}: {} epochs, termination {}\n",
        cfg.solver.kind,
        records.len(),
        run.termination
    );
    match (min_metric, calls_at_min) {
        (Some(m), Some(c)) => text.push_str(&format!(
            "minimum {} {} at {} oracle calls\n",
            cfg.train.metric,
            fmt_real(m, cfg.precision),
            fmt_real(c, cfg.precision)
        )),
        _ => text.push_str("minimum metric: none recorded\n"),
    }
    if let Some(g) = &green {
        text.push_str(&format!(
            "kernel relative error {:.3e}; exact-kernel test metric {:.3e} (bound {:.3e})\n",
            g.kernel_rel_fro_error, g.analytic_metric, g.quadrature_bound
        ));
    }
    out(w, &text)?;
    Ok(TrainSummary {
        records,
        termination: run.termination.clone(),
        min_metric,
        calls_at_min,
        final_params,
        best_params,
        csv: csv_path,
        green,
    })
}

/// Trains one model and writes `convergence.csv` plus parameter snapshots.
pub fn cmd_train(cfg: &ExperimentConfig, w: &mut dyn Write) -> Result<TrainSummary> {
    let cfg = ExperimentConfig {
        hybrid: None,
        ..cfg.clone()
    };
    ensure_dir(&cfg.out_dir)?;
    cfg.echo()?;
    let mut session = Session::new(&cfg)?;
    let theta0 = session.theta0.clone();
    let run = session.run(&cfg.solver, &theta0, 0);
    let csv = csv_text(&run.records, cfg.precision, None);
    finish(&session, &cfg.out_dir, "convergence.csv", &csv, &run, run.records.clone(), w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridSummary {
    pub reference: Vec<EpochRecord>,
    pub checkpoint: Vec<f64>,
    pub checkpoint_calls: f64,
    pub train: TrainSummary,
}

/// Warm-starts the configured solver with K epochs of the reference solver.
/// Epoch numbering and the oracle counter run on across the switch.
pub fn cmd_hybrid(cfg: &ExperimentConfig, w: &mut dyn Write) -> Result<HybridSummary> {
    let reference = cfg
        .reference_solver()
        .ok_or_else(|| HarnessError::Missing { key: "hybrid.reference".into() })?;
    ensure_dir(&cfg.out_dir)?;
    cfg.echo()?;
    let mut session = Session::new(cfg)?;
    let theta0 = session.theta0.clone();
    let phase1 = session.run(&reference, &theta0, 0);
    let k = phase1.records.len();
    let checkpoint_calls = session.problem_calls();
    let checkpoint = phase1.theta.clone();
    let ckpt_path = cfg.out_dir.join("params_checkpoint.pmld");
    write_params(&ckpt_path, &checkpoint, cfg.precision, cfg.seed)?;
    session.use_train_loader()?;
    let phase2 = session.run(&cfg.solver, &checkpoint, k);

    let mut csv = csv_text(&phase1.records, cfg.precision, Some(("phase", "reference")));
    let follow = csv_text(&phase2.records, cfg.precision, Some(("phase", "follow")));
    csv.extend(follow.lines().skip(1).map(|l| format!("{l}\n")));
    write_text(&cfg.out_dir.join("reference.csv"), &csv_text(&phase1.records, cfg.precision, None))?;
    write_text(&cfg.out_dir.join("follow.csv"), &csv_text(&phase2.records, cfg.precision, None))?;

    // The best snapshot spans both phases.
    let best = [phase1.best.clone(), phase2.best.clone()]
        .into_iter()
        .flatten()
        .min_by(|a, b| a.metric.total_cmp(&b.metric));
    let mut records = phase1.records.clone();
    records.extend(phase2.records.iter().cloned());
    let combined = RunResult {
        theta: phase2.theta.clone(),
        records: records.clone(),
        termination: phase2.termination.clone(),
        best,
    };
    out(
        w,
        &format!(
            "reference {} for {k} epochs ({} oracle calls), then {}\n",
            reference.kind,
            fmt_real(checkpoint_calls, cfg.precision),
            cfg.solver.kind
        ),
    )?;
    let train = finish(&session, &cfg.out_dir, "hybrid.csv", &csv, &combined, records, w)?;
    Ok(HybridSummary {
        reference: phase1.records,
        checkpoint,
        checkpoint_calls,
        train,
    })
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub solver: String,
    pub min_metric: Option<f64>,
    pub calls_at_min: Option<f64>,
    pub epochs: usize,
    pub termination: String,
}

/// Runs each config in its own subdirectory of `out_dir`; a failing run is
/// reported in its row and the rest continue.
pub fn cmd_compare(cfgs: &[ExperimentConfig], out_dir: &Path, w: &mut dyn Write) -> Result<Vec<CompareRow>> {
    if cfgs.is_empty() {
        return Err(HarnessError::Missing { key: "config".into() });
    }
    ensure_dir(out_dir)?;
    let mut rows = Vec::new();
    let mut combined = String::new();
    let mut sink = std::io::sink();
    for (i, cfg) in cfgs.iter().enumerate() {
        let tag = format!("{i}_{}", cfg.solver.kind);
        let run_cfg = ExperimentConfig {
            out_dir: out_dir.join(&tag),
            ..cfg.clone()
        };
        let row = match cmd_train(&run_cfg, &mut sink) {
            Ok(s) => {
                let csv = csv_text(&s.records, cfg.precision, Some(("run,solver", &format!("{i},{}", cfg.solver.kind))));
                if combined.is_empty() {
                    combined.push_str(&csv);
                } else {
                    combined.extend(csv.lines().skip(1).map(|l| format!("{l}\n")));
                }
                CompareRow {
                    solver: cfg.solver.kind.to_string(),
                    min_metric: s.min_metric,
                    calls_at_min: s.calls_at_min,
                    epochs: s.records.len(),
                    termination: s.termination.as_str().to_string(),
                }
            }
            Err(e) => CompareRow {
                solver: cfg.solver.kind.to_string(),
                min_metric: None,
                calls_at_min: None,
                epochs: 0,
                termination: format!("error: {e}"),
            },
        };
        rows.push(row);
    }
    if combined.is_empty() {
        combined = format!("run,solver,{}\n", crate::report::CSV_HEADER);
    }
    write_text(&out_dir.join("compare.csv"), &combined)?;
    let cells: Vec<Vec<String>> = rows
        .iter()
        .zip(cfgs)
        .enumerate()
        .map(|(i, (r, cfg))| {
            let f = |v: Option<f64>| v.map_or("-".to_string(), |x| fmt_real(x, cfg.precision));
            vec![
                i.to_string(),
                r.solver.clone(),
                f(r.min_metric),
                f(r.calls_at_min),
                r.epochs.to_string(),
                r.termination.clone(),
            ]
        })
        .collect();
    out(
        w,
        &aligned_table(
            &["run", "solver", "min_metric", "oracle_calls_at_min", "epochs", "termination"],
            &cells,
        ),
    )?;
    Ok(rows)
}

/// Reads a parameter snapshot written by `train` or `hybrid`.
pub fn load_params(path: &Path) -> Result<Vec<f64>> {
    Ok(read_params(path)?)
}
