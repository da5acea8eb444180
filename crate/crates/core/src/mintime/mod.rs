//! Minimum-time trajectory optimization as a single linear program.
//!
//! The planning horizon `t = -K_i .. N-1` is split into `K` overlapping
//! windows of length `L`. Each window must lie in the data model's column
//! space, consecutive windows share `K_i` samples, the first window starts
//! with the given initial pair and every planned sample satisfies the path
//! constraints. For each candidate arrival time `t` in `[T0, T1]` a slack
//! vector `eps_t` measures how far the output window starting at `t` is from
//! the target set; minimizing `sum theta^(t-T0) |eps_t|_1` drives the slack
//! to zero at the earliest reachable time and keeps it there.

mod assemble;
mod layout;
mod problem;
mod solution;

pub use assemble::{
    assemble_lp, exp_weights, AssembledLp, ConstraintFamily, ExpWeights, ModelForm,
    WEIGHT_SPREAD_WARN,
};
pub use layout::{segment_layout, SegmentLayout};
pub use problem::{MinTimeSpec, PathConstraint, PolyhedralSet, DEFAULT_EPS_TOL};
pub use solution::{extract_solution, solve_min_time, MinTimeSolution, SlackEntry, SolverStats};
