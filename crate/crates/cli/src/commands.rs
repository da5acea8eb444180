use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Instant;

use hankel_mintime::baseline::{solve_min_time_exact, BaselineSolution};
use hankel_mintime::hankel::is_persistently_exciting;
use hankel_mintime::io::{write_atomic, write_data_csv, write_slack_csv, write_trajectory_csv};
use hankel_mintime::linalg::RANK_RTOL;
use hankel_mintime::lpsolve::{write_mps, DenseSimplex};
use hankel_mintime::mintime::assemble_lp;
use hankel_mintime::statespace::ADMISSIBILITY_TOL;
use hankel_mintime::{HankelModel, MinTimeSolution, ModelForm, StateSpaceModel, Strategy};
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::CliError;

/// Slack norm treated as zero when reporting exact arrival.
pub const EXACT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct GenerateReport {
    pub scenario: String,
    pub path: PathBuf,
    pub samples: usize,
    pub window: usize,
    /// `L + n`, the order the data must be persistently exciting of.
    pub pe_order: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub scenario: String,
    pub status: String,
    pub form: String,
    pub theta: f64,
    pub eps_tol: f64,
    pub t_star: Option<usize>,
    /// `t_star` times the sampling period, when the period is known.
    pub tof_s: Option<f64>,
    /// First time whose slack is zero up to the solver's feasibility tolerance.
    pub exact_arrival: Option<usize>,
    pub objective: f64,
    pub wall_time_s: f64,
    pub lp_time_s: f64,
    pub iterations: usize,
    pub phase1_iterations: usize,
    pub num_vars: usize,
    pub num_eq: usize,
    pub num_ub: usize,
    pub nnz: usize,
    pub initial_mismatch: f64,
    pub path_violation: f64,
    /// Whether the stitched trajectory fits the true model, if one is known.
    pub admissible: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselineReport {
    pub scenario: String,
    pub status: String,
    pub t_star: Option<usize>,
    pub tof_s: Option<f64>,
    pub lps_solved: usize,
    pub wall_time_s: f64,
    pub x_i: Vec<f64>,
    pub x_f: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub scenario: String,
    pub agree: bool,
    pub lp: SolveReport,
    pub baseline: BaselineReport,
}

#[derive(Debug, Clone, Serialize)]
struct FailureReport<'a> {
    scenario: String,
    status: &'a str,
    message: String,
}

fn tof(cfg: &ScenarioConfig, t: Option<usize>) -> Option<f64> {
    Some(t? as f64 * cfg.dt()?)
}

fn form(cfg: &ScenarioConfig) -> ModelForm {
    if cfg.run.use_reduction {
        ModelForm::Reduced
    } else {
        ModelForm::Coefficients
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_atomic(path, |f| {
        serde_json::to_writer_pretty(&mut *f, value).map_err(std::io::Error::from)?;
        writeln!(f)?;
        Ok(())
    })?;
    Ok(())
}

/// Records a failed run in `summary` before handing the error back.
fn record_failure(cfg: &ScenarioConfig, summary: &Path, err: CliError) -> CliError {
    let status = match err {
        CliError::Infeasible(_) => "infeasible",
        CliError::SolveFailed(_) => "solve_failed",
        _ => return err,
    };
    let report = FailureReport {
        scenario: cfg.name(),
        status,
        message: err.to_string(),
    };
    if let Err(e) = write_json(summary, &report) {
        log::warn!("could not write {}: {e}", summary.display());
    }
    err
}

pub fn generate(cfg: &ScenarioConfig) -> Result<GenerateReport, CliError> {
    let model = cfg.model()?;
    let data = cfg.generate_data(&model)?;
    let order = cfg.data.window + model.n();
    if order > data.len() || !is_persistently_exciting(data.inputs(), order)? {
        return Err(CliError::Config(format!(
            "generated inputs are not persistently exciting of order L + n = {order}"
        )));
    }
    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    let path = dir.join("data.csv");
    write_atomic(&path, |f| write_data_csv(&data, f))?;
    log::info!("wrote {} samples to {}", data.len(), path.display());
    Ok(GenerateReport {
        scenario: cfg.name(),
        path,
        samples: data.len(),
        window: cfg.data.window,
        pe_order: order,
    })
}

/// Solves the scenario's minimum-time LP without touching the file system.
pub fn solve_scenario(cfg: &ScenarioConfig) -> Result<(MinTimeSolution, SolveReport), CliError> {
    let start = Instant::now();
    let truth = if cfg.has_model() {
        Some(cfg.model()?)
    } else {
        None
    };
    let data = cfg.load_data()?;
    let hankel = HankelModel::new(&data, cfg.data.window)?;
    solve_with(cfg, &hankel, truth.as_ref(), start)
}

fn solve_with(
    cfg: &ScenarioConfig,
    hankel: &HankelModel,
    truth: Option<&StateSpaceModel>,
    start: Instant,
) -> Result<(MinTimeSolution, SolveReport), CliError> {
    let spec = cfg.min_time_spec(hankel.m(), hankel.p())?;
    let form = form(cfg);
    let sol = hankel_mintime::solve_min_time(&spec, hankel, form, &DenseSimplex::default())?;
    let admissible = truth.map(|m| m.is_admissible(&sol.trajectory, ADMISSIBILITY_TOL));
    let report = SolveReport {
        scenario: cfg.name(),
        status: if sol.t_star.is_some() {
            "arrived"
        } else {
            "not_reached"
        }
        .into(),
        form: format!("{form:?}").to_lowercase(),
        theta: spec.theta,
        eps_tol: spec.eps_tol,
        t_star: sol.t_star,
        tof_s: tof(cfg, sol.t_star),
        exact_arrival: sol.first_below(EXACT_TOL),
        objective: sol.objective,
        wall_time_s: start.elapsed().as_secs_f64(),
        lp_time_s: sol.stats.runtime.as_secs_f64(),
        iterations: sol.stats.iterations,
        phase1_iterations: sol.stats.phase1_iterations,
        num_vars: sol.stats.num_vars,
        num_eq: sol.stats.num_eq,
        num_ub: sol.stats.num_ub,
        nnz: sol.stats.nnz,
        initial_mismatch: sol.initial_mismatch(&spec),
        path_violation: sol.path_violation(&spec),
        admissible,
    };
    Ok((sol, report))
}

fn dump_lp(cfg: &ScenarioConfig, hankel: &HankelModel, dir: &Path) -> Result<(), CliError> {
    let spec = cfg.min_time_spec(hankel.m(), hankel.p())?;
    let assembled = assemble_lp(&spec, hankel, form(cfg))?;
    let path = dir.join("problem.mps");
    write_atomic(&path, |f| {
        Ok(write_mps(
            &assembled.problem,
            &cfg.name(),
            std::io::BufWriter::new(f),
        )?)
    })?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn write_solution(dir: &Path, sol: &MinTimeSolution, report: &SolveReport) -> Result<(), CliError> {
    write_atomic(&dir.join("trajectory.csv"), |f| {
        write_trajectory_csv(&sol.trajectory, f)
    })?;
    write_atomic(&dir.join("slack.csv"), |f| {
        write_slack_csv(&sol.eps_schedule, f)
    })?;
    write_json(&dir.join("summary.json"), report)
}

pub fn solve(cfg: &ScenarioConfig) -> Result<SolveReport, CliError> {
    let start = Instant::now();
    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    let truth = if cfg.has_model() {
        Some(cfg.model()?)
    } else {
        None
    };
    let data = cfg.load_data()?;
    let hankel = HankelModel::new(&data, cfg.data.window)?;
    if cfg.run.dump_lp {
        dump_lp(cfg, &hankel, &dir)?;
    }
    let summary = dir.join("summary.json");
    let (sol, report) = solve_with(cfg, &hankel, truth.as_ref(), start)
        .map_err(|e| record_failure(cfg, &summary, e))?;
    write_solution(&dir, &sol, &report)?;
    Ok(report)
}

/// Runs the state-space arrival scan without touching the file system.
pub fn baseline_scenario(
    cfg: &ScenarioConfig,
) -> Result<(BaselineSolution, BaselineReport), CliError> {
    let start = Instant::now();
    let model = cfg.model()?;
    let spec = cfg.baseline_spec(&model)?;
    let sol = solve_min_time_exact(&spec, &DenseSimplex::default(), Strategy::default())?;
    let report = BaselineReport {
        scenario: cfg.name(),
        status: if sol.t_star.is_some() {
            "arrived"
        } else {
            "not_reached"
        }
        .into(),
        t_star: sol.t_star,
        tof_s: tof(cfg, sol.t_star),
        lps_solved: sol.lps_solved,
        wall_time_s: start.elapsed().as_secs_f64(),
        x_i: spec.x_i.iter().copied().collect(),
        x_f: spec.x_f.iter().copied().collect(),
    };
    Ok((sol, report))
}

fn write_baseline(
    dir: &Path,
    model: &StateSpaceModel,
    sol: &BaselineSolution,
    report: &BaselineReport,
) -> Result<(), CliError> {
    if sol.t_star.is_some() {
        let traj = sol.output_trajectory(model)?;
        write_atomic(&dir.join("baseline_trajectory.csv"), |f| {
            write_trajectory_csv(&traj, f)
        })?;
    }
    write_json(&dir.join("baseline_summary.json"), report)
}

pub fn baseline(cfg: &ScenarioConfig) -> Result<BaselineReport, CliError> {
    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    let summary = dir.join("baseline_summary.json");
    let (sol, report) = baseline_scenario(cfg).map_err(|e| record_failure(cfg, &summary, e))?;
    write_baseline(&dir, &cfg.model()?, &sol, &report)?;
    Ok(report)
}

/// Runs both paths side by side. Differing `t_star` is an error after the
/// report is written.
pub fn compare(cfg: &ScenarioConfig) -> Result<CompareReport, CliError> {
    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    let model = cfg.model()?;
    let (lp, base) = thread::scope(|s| {
        let base = s.spawn(|| baseline_scenario(cfg));
        (
            solve_scenario(cfg),
            base.join().expect("baseline thread panicked"),
        )
    });
    let summary = dir.join("compare.json");
    let (sol, lp) = lp.map_err(|e| record_failure(cfg, &summary, e))?;
    let (bsol, base) = base.map_err(|e| record_failure(cfg, &summary, e))?;
    write_solution(&dir, &sol, &lp)?;
    write_baseline(&dir, &model, &bsol, &base)?;
    let report = CompareReport {
        scenario: cfg.name(),
        agree: lp.t_star == base.t_star,
        lp,
        baseline: base,
    };
    write_json(&summary, &report)?;
    if !report.agree {
        return Err(CliError::Disagreement(format!(
            "LP t_star {:?} vs baseline t_star {:?}",
            report.lp.t_star, report.baseline.t_star
        )));
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct LagReport {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub lag: usize,
}

pub fn lag(cfg: &ScenarioConfig) -> Result<LagReport, CliError> {
    let model = cfg.model()?;
    Ok(LagReport {
        n: model.n(),
        m: model.m(),
        p: model.p(),
        lag: model.lag(RANK_RTOL)?,
    })
}
