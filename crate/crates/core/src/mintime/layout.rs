use std::ops::Range;

use crate::error::{invalid, Result};

use super::MinTimeSpec;

/// Variable indexing of the minimum-time LP.
///
/// Segment `k` (0-based) owns one contiguous block `[u_k, y_k, coef_k]`,
/// where `(u_k, y_k)` is the stacked window `col(u, y)` in the data model's
/// row order and `coef_k` holds `width` coefficient variables (zero in the
/// reduced form). The slack block follows all segments, `q_g + q_h` entries
/// per candidate time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentLayout {
    pub segments: usize,
    pub horizon: usize,
    pub window: usize,
    pub k_i: usize,
    pub m: usize,
    pub p: usize,
    pub width: usize,
    pub t0: usize,
    pub t1: usize,
    pub slack_dim: usize,
}

pub fn segment_layout(spec: &MinTimeSpec, width: usize) -> Result<SegmentLayout> {
    if spec.window <= spec.k_i {
        return Err(invalid(format!(
            "window L = {} must exceed K_i = {}",
            spec.window, spec.k_i
        )));
    }
    let stride = spec.window - spec.k_i;
    let segments = (spec.t1 + spec.k_f).div_ceil(stride).max(1);
    Ok(SegmentLayout {
        segments,
        horizon: segments * stride,
        window: spec.window,
        k_i: spec.k_i,
        m: spec.m(),
        p: spec.p(),
        width,
        t0: spec.t0,
        t1: spec.t1,
        slack_dim: spec.target.q_g() + spec.target.q_h(),
    })
}

impl SegmentLayout {
    /// Samples each segment adds to the horizon, `L - K_i`.
    pub fn stride(&self) -> usize {
        self.window - self.k_i
    }

    fn block(&self) -> usize {
        (self.m + self.p) * self.window + self.width
    }

    fn base(&self, k: usize) -> usize {
        k * self.block()
    }

    pub fn u_range(&self, k: usize) -> Range<usize> {
        let b = self.base(k);
        b..b + self.m * self.window
    }

    pub fn y_range(&self, k: usize) -> Range<usize> {
        let b = self.base(k) + self.m * self.window;
        b..b + self.p * self.window
    }

    /// `col(u_k, y_k)`.
    pub fn window_range(&self, k: usize) -> Range<usize> {
        let b = self.base(k);
        b..b + (self.m + self.p) * self.window
    }

    pub fn coef_range(&self, k: usize) -> Range<usize> {
        let b = self.base(k) + (self.m + self.p) * self.window;
        b..b + self.width
    }

    fn slack_base(&self) -> usize {
        self.segments * self.block()
    }

    pub fn slack_range(&self, t: usize) -> Range<usize> {
        debug_assert!((self.t0..=self.t1).contains(&t));
        let b = self.slack_base() + (t - self.t0) * self.slack_dim;
        b..b + self.slack_dim
    }

    pub fn num_candidates(&self) -> usize {
        self.t1 - self.t0 + 1
    }

    pub fn num_vars(&self) -> usize {
        self.slack_base() + self.num_candidates() * self.slack_dim
    }

    /// Segment and 0-based sample holding time `t` in the stitched
    /// trajectory: the initial window lives in segment 0, later times in the
    /// non-overlapping tail of their segment.
    pub fn locate(&self, t: i64) -> (usize, usize) {
        debug_assert!(t >= -(self.k_i as i64) && t < self.horizon as i64);
        if t < 0 {
            (0, (t + self.k_i as i64) as usize)
        } else {
            let t = t as usize;
            (t / self.stride(), self.k_i + t % self.stride())
        }
    }

    pub fn u_var(&self, t: i64, comp: usize) -> usize {
        let (k, l) = self.locate(t);
        self.u_range(k).start + l * self.m + comp
    }

    pub fn y_var(&self, t: i64, comp: usize) -> usize {
        let (k, l) = self.locate(t);
        self.y_range(k).start + l * self.p + comp
    }

    /// Indices of the reduced coordinates `v_{k,1}` given the model's row
    /// selection.
    pub fn reduced_coordinates(&self, k: usize, row_selection: &[usize]) -> Vec<usize> {
        let b = self.window_range(k).start;
        row_selection.iter().map(|&r| b + r).collect()
    }
}
