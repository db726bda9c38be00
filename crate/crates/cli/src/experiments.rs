//! Single runs, blow-up studies and convergence sweeps.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use bcfd_core::io::{write_diagnostics_csv, write_field_csv, write_vtk};
use bcfd_core::{
    error_norms, CellField, ErrorNorms, GridRef, RunRecord, Scheme, StaggeredGrid2D, State,
    Termination,
};
use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Mode, RunConfig, SnapshotFormat};
use crate::table::{self, ConvergenceRow};
use crate::AppError;

pub const SUMMARY_FILE: &str = "summary.json";
pub const TABLE_CSV: &str = "convergence.csv";
pub const TABLE_TXT: &str = "convergence.txt";

/// Location of the density maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArgmaxPoint {
    pub t: f64,
    pub i: usize,
    pub j: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub e_rho: f64,
    pub e_c: f64,
    pub e_gradc: f64,
}

impl From<ErrorNorms> for ErrorSummary {
    fn from(e: ErrorNorms) -> Self {
        Self {
            e_rho: e.e_rho,
            e_c: e.e_c,
            e_gradc: e.e_gradc,
        }
    }
}

/// What a single run or blow-up study reports besides its time series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub mode: String,
    pub problem: String,
    pub m: usize,
    pub nx: usize,
    pub ny: usize,
    pub tau: f64,
    pub t_final: f64,
    /// `completed` or `blowup`.
    pub termination: String,
    /// Time of the last computed level, including a level rejected by the
    /// blow-up check.
    pub t_halt: f64,
    pub steps: usize,
    pub peak_u_max: f64,
    pub t_peak: f64,
    pub min_u_min: f64,
    pub initial_mass: f64,
    pub max_relative_mass_drift: f64,
    pub argmax_start: ArgmaxPoint,
    pub argmax_end: ArgmaxPoint,
    pub uniqueness_violations: usize,
    /// Error norms at the final accepted level when an exact solution exists.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub errors: Option<ErrorSummary>,
}

pub struct RunOutput {
    pub summary: RunSummary,
    pub record: RunRecord,
    pub files: Vec<PathBuf>,
}

fn build_grid(cfg: &RunConfig, m: usize) -> Result<GridRef, AppError> {
    Ok(Arc::new(StaggeredGrid2D::build(cfg.family, m, cfg.problem.domain())?))
}

fn argmax_point(grid: &StaggeredGrid2D, t: f64, (i, j): (usize, usize)) -> ArgmaxPoint {
    ArgmaxPoint {
        t,
        i,
        j,
        x: grid.x_axis().centers()[i],
        y: grid.y_axis().centers()[j],
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, AppError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_snapshot(
    dir: &Path,
    state: &State,
    format: SnapshotFormat,
    files: &mut Vec<PathBuf>,
) -> Result<(), AppError> {
    let n = state.n;
    match format {
        SnapshotFormat::Csv => {
            for (name, field) in [("rho", &state.u_curr), ("c", &state.z_curr)] {
                let path = dir.join(format!("{name}_{n:06}.csv"));
                write_field_csv(create(&path)?, field)?;
                files.push(path);
            }
        }
        SnapshotFormat::Vtk => {
            let path = dir.join(format!("snapshot_{n:06}.vtk"));
            let fields: [(&str, &CellField); 2] = [("rho", &state.u_curr), ("c", &state.z_curr)];
            write_vtk(create(&path)?, &format!("t = {:e}", state.t), &fields)?;
            files.push(path);
        }
    }
    Ok(())
}

fn summarize(cfg: &RunConfig, m: usize, grid: &StaggeredGrid2D, record: &RunRecord) -> RunSummary {
    let all = || std::iter::once(&record.initial).chain(&record.steps);
    let accepted: Vec<_> = match record.termination {
        Termination::Completed => all().collect(),
        Termination::BlowUp { .. } => all().take(record.steps.len()).collect(),
    };
    let peak = accepted
        .iter()
        .copied()
        .fold(&record.initial, |best, d| if d.u_max > best.u_max { d } else { best });
    let last = record.steps.last().unwrap_or(&record.initial);
    let end = accepted.last().copied().unwrap_or(&record.initial);
    let errors = cfg
        .problem
        .exact()
        .and_then(|_| error_norms(&record.final_state, &cfg.problem).ok())
        .map(ErrorSummary::from);
    RunSummary {
        mode: cfg.mode.to_string(),
        problem: cfg.problem.name().to_string(),
        m,
        nx: grid.nx(),
        ny: grid.ny(),
        tau: cfg.scheme_config(m).tau,
        t_final: cfg.t_final,
        termination: match record.termination {
            Termination::Completed => "completed".into(),
            Termination::BlowUp { .. } => "blowup".into(),
        },
        t_halt: last.t,
        steps: record.steps.len(),
        peak_u_max: peak.u_max,
        t_peak: peak.t,
        min_u_min: accepted.iter().map(|d| d.u_min).fold(f64::INFINITY, f64::min),
        initial_mass: record.initial_mass(),
        max_relative_mass_drift: record.max_relative_mass_drift(),
        argmax_start: argmax_point(grid, record.initial.t, record.initial.argmax_u),
        argmax_end: argmax_point(grid, end.t, end.argmax_u),
        uniqueness_violations: record.steps.iter().filter(|d| !d.uniqueness_ok).count(),
        errors,
    }
}

/// Executes a `run` or `blowup` configuration and writes its diagnostics,
/// snapshots and summary into `out_dir`.
///
/// Blow-up detection ends the run normally. In blow-up mode the last
/// accepted state is additionally written as a snapshot.
pub fn run_single(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutput, AppError> {
    let m = cfg.m[0];
    let grid = build_grid(cfg, m)?;
    let scheme_cfg = cfg.scheme_config(m);
    let scheme = Scheme::new(&cfg.problem, grid.clone(), scheme_cfg)?;
    fs::create_dir_all(out_dir)?;

    let snapshot_steps: Vec<usize> = cfg
        .outputs
        .snapshot_times
        .iter()
        .map(|t| (t / scheme_cfg.tau).round() as usize)
        .collect();
    let mut files = Vec::new();
    info!(
        "{} '{}' on {}x{} cells, tau = {:e}, {} steps",
        cfg.mode,
        cfg.problem.name(),
        grid.nx(),
        grid.ny(),
        scheme_cfg.tau,
        scheme.n_steps()
    );
    let record = scheme.run_with(|state| {
        if snapshot_steps.contains(&state.n) {
            write_snapshot(out_dir, state, cfg.outputs.snapshot_format, &mut files)
                .map_err(|e| bcfd_core::Error::Io(std::io::Error::other(e.to_string())))?;
        }
        Ok(())
    })?;
    if cfg.mode == Mode::Blowup && !snapshot_steps.contains(&record.final_state.n) {
        write_snapshot(out_dir, &record.final_state, cfg.outputs.snapshot_format, &mut files)?;
    }
    if let Termination::BlowUp { step, t } = record.termination {
        info!("blow-up detected at step {step} (t = {t:e})");
    }

    let diag_path = out_dir.join(&cfg.outputs.diagnostics);
    write_diagnostics_csv(
        create(&diag_path)?,
        std::iter::once(&record.initial).chain(&record.steps),
    )?;
    files.push(diag_path);

    let summary = summarize(cfg, m, &grid, &record);
    let summary_path = out_dir.join(SUMMARY_FILE);
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    fs::write(&summary_path, text)?;
    files.push(summary_path);
    Ok(RunOutput {
        summary,
        record,
        files,
    })
}

/// One run per resolution, in parallel; rows come back in the configured
/// order with orders filled in. Failed runs yield failed rows.
pub fn run_convergence(cfg: &RunConfig) -> Vec<ConvergenceRow> {
    let mut rows: Vec<ConvergenceRow> = cfg
        .m
        .par_iter()
        .map(|&m| match convergence_point(cfg, m) {
            Ok(e) => {
                info!("M = {m}: e_rho = {:e}, e_c = {:e}, e_gradc = {:e}", e.e_rho, e.e_c, e.e_gradc);
                ConvergenceRow::ok(m, [e.e_rho, e.e_c, e.e_gradc])
            }
            Err(e) => {
                log::error!("M = {m}: {e}");
                ConvergenceRow::failed(m, e.to_string())
            }
        })
        .collect();
    table::fill_orders(&mut rows);
    rows
}

fn convergence_point(cfg: &RunConfig, m: usize) -> Result<ErrorNorms, AppError> {
    let grid = build_grid(cfg, m)?;
    let record = Scheme::new(&cfg.problem, grid, cfg.scheme_config(m))?.run()?;
    if let Termination::BlowUp { t, .. } = record.termination {
        return Err(AppError::Run(format!("blow-up detected at t = {t:e}")));
    }
    Ok(error_norms(&record.final_state, &cfg.problem)?)
}

/// Writes `convergence.csv` and `convergence.txt`.
pub fn write_convergence(rows: &[ConvergenceRow], out_dir: &Path) -> Result<Vec<PathBuf>, AppError> {
    fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join(TABLE_CSV);
    table::write_csv(create(&csv_path)?, rows)?;
    let txt_path = out_dir.join(TABLE_TXT);
    fs::write(&txt_path, table::emit_table(rows))?;
    Ok(vec![csv_path, txt_path])
}
