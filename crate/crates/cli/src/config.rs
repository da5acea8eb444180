//! Scenario files: one TOML document describing the system, the recorded
//! data, the minimum-time problem and where results go.

use std::fs;
use std::path::{Path, PathBuf};

use hankel_mintime::baseline::BaselineSpec;
use hankel_mintime::io::read_data_csv;
use hankel_mintime::statespace::ADMISSIBILITY_TOL;
use hankel_mintime::{
    cwh_model, CwhParams, DataTrajectory, MinTimeSpec, PathConstraint, PolyhedralSet,
    StateSpaceModel, Trajectory,
};
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: Option<String>,
    pub system: SystemConfig,
    pub data: DataConfig,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub run: RunConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Exactly one of the three sources.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub cwh: Option<CwhConfig>,
    pub matrices: Option<MatricesConfig>,
    /// Recorded data only; no model, so no baseline.
    pub data_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CwhConfig {
    pub mu: f64,
    pub r_o: f64,
    pub m_s: f64,
    pub t_max: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatricesConfig {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub d: Option<Vec<Vec<f64>>>,
    /// Sampling period, s. Enables time-of-flight reporting.
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Window length `L`.
    pub window: usize,
    /// Number of samples `M` to generate.
    pub length: Option<usize>,
    #[serde(default = "one")]
    pub bound: f64,
    #[serde(default)]
    pub seed: u64,
    /// State the excitation experiment starts from; zero if absent.
    pub x0: Option<Vec<f64>>,
    /// Use this recorded CSV instead of generating data from the model.
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub k_i: usize,
    pub k_f: usize,
    pub u_i: Vec<f64>,
    pub y_i: Vec<f64>,
    pub target: TargetConfig,
    #[serde(default)]
    pub path: PathConfig,
    pub t0: usize,
    pub t1: usize,
    #[serde(default = "two")]
    pub theta: f64,
    #[serde(default = "default_eps_tol")]
    pub eps_tol: f64,
    #[serde(default)]
    pub rescale_weights: bool,
    /// Baseline target state. Derived from a point target when absent.
    pub x_f: Option<Vec<f64>>,
}

/// Either `y_f` (a point) or the polyhedron `G y <= g, H y = h`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub y_f: Option<Vec<f64>>,
    pub g_mat: Option<Vec<Vec<f64>>>,
    pub g: Option<Vec<f64>>,
    pub h_mat: Option<Vec<Vec<f64>>>,
    pub h: Option<Vec<f64>>,
}

/// Either an input box or general rows `S_u u + S_y y <= s`; empty means no
/// path constraint.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    pub input_lower: Option<Vec<f64>>,
    pub input_upper: Option<Vec<f64>>,
    pub s_u: Option<Vec<Vec<f64>>>,
    pub s_y: Option<Vec<Vec<f64>>>,
    pub s: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub out: Option<PathBuf>,
    #[serde(default = "yes")]
    pub use_reduction: bool,
    pub theta_override: Option<f64>,
    #[serde(default)]
    pub dump_lp: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            out: None,
            use_reduction: true,
            theta_override: None,
            dump_lp: false,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn yes() -> bool {
    true
}

fn default_eps_tol() -> f64 {
    hankel_mintime::mintime::DEFAULT_EPS_TOL
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn matrix(name: &str, rows: &[Vec<f64>], ncols: Option<usize>) -> Result<DMatrix<f64>, CliError> {
    let n = ncols.unwrap_or_else(|| rows.first().map_or(0, Vec::len));
    if let Some(r) = rows.iter().position(|r| r.len() != n) {
        return Err(bad(format!(
            "{name}: row {r} has {} entries, expected {n}",
            rows[r].len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
}

fn vector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg: ScenarioConfig =
            toml::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.system;
        let sources = [s.cwh.is_some(), s.matrices.is_some(), s.data_csv.is_some()];
        if sources.iter().filter(|&&b| b).count() != 1 {
            return Err(bad(
                "[system] needs exactly one of `cwh`, `matrices` or `data_csv`",
            ));
        }
        if s.data_csv.is_some() && self.data.csv.is_some() {
            return Err(bad(
                "data CSV given twice: [system] data_csv and [data] csv",
            ));
        }
        if self.data.window == 0 {
            return Err(bad("[data] window must be >= 1"));
        }
        if self.has_model() && self.data.csv.is_none() && self.data.length.is_none() {
            return Err(bad("[data] length is required to generate data"));
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| "scenario".into())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        match &self.run.out {
            Some(p) => self.resolve(p),
            None => PathBuf::from("out").join(self.name()),
        }
    }

    pub fn has_model(&self) -> bool {
        self.system.cwh.is_some() || self.system.matrices.is_some()
    }

    /// Sampling period when the system declares one.
    pub fn dt(&self) -> Option<f64> {
        self.system
            .cwh
            .map(|c| c.dt)
            .or_else(|| self.system.matrices.as_ref().and_then(|m| m.dt))
    }

    pub fn model(&self) -> Result<StateSpaceModel, CliError> {
        if let Some(c) = self.system.cwh {
            return Ok(cwh_model(&CwhParams {
                mu: c.mu,
                r_o: c.r_o,
                m_s: c.m_s,
                t_max: c.t_max,
                dt: c.dt,
            })?);
        }
        let Some(m) = &self.system.matrices else {
            return Err(bad(
                "this command needs a state-space model ([system] cwh or matrices)",
            ));
        };
        let a = matrix("a", &m.a, None)?;
        let b = matrix("b", &m.b, None)?;
        let c = matrix("c", &m.c, Some(a.ncols()))?;
        let d = match &m.d {
            Some(d) => matrix("d", d, Some(b.ncols()))?,
            None => DMatrix::zeros(c.nrows(), b.ncols()),
        };
        Ok(StateSpaceModel::new(a, b, c, d)?)
    }

    /// Data CSV to read, if the data are recorded rather than generated.
    pub fn data_csv(&self) -> Option<PathBuf> {
        self.system
            .data_csv
            .as_ref()
            .or(self.data.csv.as_ref())
            .map(|p| self.resolve(p))
    }

    pub fn generate_data(&self, model: &StateSpaceModel) -> Result<DataTrajectory, CliError> {
        let len = self
            .data
            .length
            .ok_or_else(|| bad("[data] length is required to generate data"))?;
        if self.data.window > len {
            return Err(bad(format!(
                "window L = {} exceeds data length M = {len}",
                self.data.window
            )));
        }
        let x0 = match &self.data.x0 {
            Some(x) if x.len() == model.n() => vector(x),
            Some(x) => {
                return Err(bad(format!(
                    "[data] x0 has {} entries, the model has {} states",
                    x.len(),
                    model.n()
                )))
            }
            None => DVector::zeros(model.n()),
        };
        Ok(model.generate_excitation_data(&x0, len, self.data.bound, self.data.seed)?)
    }

    /// Recorded data if configured, otherwise data generated from the model.
    pub fn load_data(&self) -> Result<DataTrajectory, CliError> {
        match self.data_csv() {
            Some(path) => {
                let f = fs::File::open(&path)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                let data = read_data_csv(f)?;
                if self.data.window > data.len() {
                    return Err(bad(format!(
                        "window L = {} exceeds data length M = {}",
                        self.data.window,
                        data.len()
                    )));
                }
                Ok(data)
            }
            None => self.generate_data(&self.model()?),
        }
    }

    fn target(&self) -> Result<PolyhedralSet, CliError> {
        let t = &self.problem.target;
        if let Some(y_f) = &t.y_f {
            if t.g_mat.is_some() || t.g.is_some() || t.h_mat.is_some() || t.h.is_some() {
                return Err(bad(
                    "[problem.target]: give either y_f or G/g/H/h, not both",
                ));
            }
            return Ok(PolyhedralSet::point(vector(y_f)));
        }
        let dim = t
            .g_mat
            .iter()
            .chain(t.h_mat.iter())
            .flat_map(|m| m.first())
            .map(Vec::len)
            .next()
            .unwrap_or(0);
        let g_mat = matrix("target.g_mat", t.g_mat.as_deref().unwrap_or(&[]), Some(dim))?;
        let h_mat = matrix("target.h_mat", t.h_mat.as_deref().unwrap_or(&[]), Some(dim))?;
        let g = vector(t.g.as_deref().unwrap_or(&[]));
        let h = vector(t.h.as_deref().unwrap_or(&[]));
        if g.len() != g_mat.nrows() || h.len() != h_mat.nrows() {
            return Err(bad(
                "[problem.target]: right-hand sides must match the matrix rows",
            ));
        }
        Ok(PolyhedralSet { g_mat, g, h_mat, h })
    }

    /// Input box bounds when the path constraint is one.
    pub fn input_box(&self) -> Option<(DVector<f64>, DVector<f64>)> {
        let p = &self.problem.path;
        match (&p.input_lower, &p.input_upper) {
            (Some(l), Some(u)) => Some((vector(l), vector(u))),
            _ => None,
        }
    }

    fn path(&self, m: usize, p: usize) -> Result<PathConstraint, CliError> {
        let c = &self.problem.path;
        let general = c.s_u.is_some() || c.s_y.is_some() || c.s.is_some();
        let boxed = c.input_lower.is_some() || c.input_upper.is_some();
        match (boxed, general) {
            (true, true) => Err(bad(
                "[problem.path]: give either an input box or S_u/S_y/s, not both",
            )),
            (true, false) => {
                let (l, u) = self
                    .input_box()
                    .ok_or_else(|| bad("[problem.path]: input box needs both bounds"))?;
                if l.len() != m || u.len() != m {
                    return Err(bad(format!(
                        "[problem.path]: input bounds must have {m} entries"
                    )));
                }
                Ok(PathConstraint::input_box(&l, &u, p))
            }
            (false, true) => {
                let s_u = matrix("path.s_u", c.s_u.as_deref().unwrap_or(&[]), Some(m))?;
                let s_y = matrix("path.s_y", c.s_y.as_deref().unwrap_or(&[]), Some(p))?;
                let s = vector(c.s.as_deref().unwrap_or(&[]));
                if s_u.nrows() != s.len() || s_y.nrows() != s.len() {
                    return Err(bad(
                        "[problem.path]: S_u, S_y and s must have the same number of rows",
                    ));
                }
                Ok(PathConstraint { s_u, s_y, s })
            }
            (false, false) => Ok(PathConstraint::none(m, p)),
        }
    }

    pub fn min_time_spec(&self, m: usize, p: usize) -> Result<MinTimeSpec, CliError> {
        let pr = &self.problem;
        let spec = MinTimeSpec {
            k_i: pr.k_i,
            k_f: pr.k_f,
            u_i: vector(&pr.u_i),
            y_i: vector(&pr.y_i),
            target: self.target()?,
            path: self.path(m, p)?,
            t0: pr.t0,
            t1: pr.t1,
            theta: self.run.theta_override.unwrap_or(pr.theta),
            window: self.data.window,
            eps_tol: pr.eps_tol,
            rescale_weights: pr.rescale_weights,
        };
        spec.validate().map_err(|e| bad(e.to_string()))?;
        Ok(spec)
    }

    /// State-space version of the problem: start from the state the initial
    /// pair implies at `t = 0`, arrive at `x_f`, inputs in the path box.
    pub fn baseline_spec(&self, model: &StateSpaceModel) -> Result<BaselineSpec, CliError> {
        let spec = self.min_time_spec(model.m(), model.p())?;
        let init = spec.initial_pair()?;
        let scale = 1.0 + hankel_mintime::linalg::sup_norm(init.stacked().as_slice());
        let x_i = model.propagated_initial_state(&init, ADMISSIBILITY_TOL * scale)?;
        let x_f = match &self.problem.x_f {
            Some(x) => vector(x),
            None => self.target_state(model)?,
        };
        let (u_lower, u_upper) = self
            .input_box()
            .ok_or_else(|| bad("the baseline needs an input-box path constraint ([problem.path] input_lower/upper)"))?;
        let spec = BaselineSpec {
            model: model.clone(),
            x_i,
            x_f,
            u_lower,
            u_upper,
            t0: spec.t0,
            t1: spec.t1,
        };
        spec.validate().map_err(|e| bad(e.to_string()))?;
        Ok(spec)
    }

    /// The state at the start of a point-target window held with zero input.
    fn target_state(&self, model: &StateSpaceModel) -> Result<DVector<f64>, CliError> {
        let Some(y_f) = &self.problem.target.y_f else {
            return Err(bad(
                "the baseline needs a point target (y_f) or an explicit x_f",
            ));
        };
        let (p, k_f) = (model.p(), self.problem.k_f);
        if y_f.len() != p * k_f {
            return Err(bad(format!(
                "target y_f must have p K_f = {} entries",
                p * k_f
            )));
        }
        let window = Trajectory::from_stacked(&vec![0.0; model.m() * k_f], y_f, model.m(), p, 0)?;
        let scale = 1.0 + hankel_mintime::linalg::sup_norm(y_f);
        model
            .initial_state_from_io(&window, ADMISSIBILITY_TOL * scale)
            .map_err(|e| {
                bad(format!(
                    "cannot derive the baseline target state from y_f ({e}); set [problem] x_f"
                ))
            })
    }
}
