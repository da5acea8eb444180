//! Minimum-time trajectory optimization for linear time-invariant systems,
//! driven directly by recorded input-output data.
//!
//! The pipeline: build a Hankel data model from one excitation trajectory
//! ([`hankel`]), split the planning horizon into overlapping windows that are
//! each constrained to the model's column space, attach slack variables to
//! the target condition at every candidate arrival time and weight them by a
//! geometric sequence ([`mintime`]), then solve the resulting linear program
//! ([`lpsolve`]). The first time whose slack vanishes is the minimum time.
//! [`baseline`] recomputes the same quantity from a state-space model by
//! scanning arrival times, as an independent check.

pub mod baseline;
pub mod error;
pub mod exec;
pub mod hankel;
pub mod io;
pub mod linalg;
pub mod lpsolve;
pub mod mintime;
pub mod statespace;

pub use error::{Error, Result};
pub use exec::Strategy;
pub use hankel::{DataTrajectory, HankelModel, ReducedModel};
pub use mintime::{
    solve_min_time, MinTimeSolution, MinTimeSpec, ModelForm, PathConstraint, PolyhedralSet,
};
pub use statespace::{cwh_model, CwhParams, StateSpaceModel, Trajectory};
