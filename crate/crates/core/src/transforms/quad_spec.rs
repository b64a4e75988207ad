use serde::{Deserialize, Serialize};

use crate::numerics::LogRule;
use crate::{Error, Result};

/// Uniform slice grid x_k = -L + k·2L/M, k = 0..M, per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceGrid {
    pub half_width: f64,
    pub points: usize,
}

impl SliceGrid {
    pub fn step(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        -self.half_width + k as f64 * self.step()
    }

    /// Frequency spacing 1/(2L) of the recovered density grid.
    pub fn dt(&self) -> f64 {
        0.5 / self.half_width
    }

    /// Frequencies j/(2L) for j = -M/2 .. M/2 - 1.
    pub fn frequencies(&self) -> Vec<f64> {
        let m = self.points as i64;
        (-m / 2..m / 2).map(|j| j as f64 * self.dt()).collect()
    }
}

/// Log-mapped trapezoid grid used for x-integrals of slices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormGrid {
    pub log_extent: f64,
    pub step: f64,
}

impl NormGrid {
    pub fn rule(&self) -> LogRule {
        LogRule { log_extent: self.log_extent, step: self.step }
    }
}

/// Sampling of the base region in y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YSampler {
    /// Width of one Gauss–Legendre panel in log-radius (cones) or in y (boxes).
    pub panel_width: f64,
    pub nodes_per_panel: usize,
    /// Angular nodes per planar cone piece; also the count of sample heights
    /// used by sup-type norms.
    pub directions: usize,
    /// A radial tail is accepted as negligible below this fraction of the
    /// running integral.
    pub radial_tail_ratio: f64,
    /// Largest |log ρ| explored by unbounded cone integrals.
    pub radial_log_cap: f64,
}

/// Geometric ladder y = y0·2^{-k}, k = 0..=steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ladder {
    pub y0: f64,
    pub steps: usize,
}

impl Ladder {
    pub fn heights(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.y0 * 0.5f64.powi(k as i32)).collect()
    }
}

/// All discretization and tolerance policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadSpec {
    pub slice_grid: SliceGrid,
    pub norm_grid: NormGrid,
    /// Truncation radius for density integrals over unbounded supports.
    pub t_truncation: f64,
    pub y_sampler: YSampler,
    pub tol_rel: f64,
    pub tol_abs: f64,
    /// Largest accepted |F| at the slice grid edge relative to max |F|.
    pub slice_tail_tol: f64,
    pub epsilon_schedule: Vec<f64>,
    /// Evaluate F in closed form when the density has one.
    pub use_closed_form: bool,
    pub ladder: Ladder,
    /// Margin on ray exponents for support verdicts.
    pub support_margin: f64,
    /// Relative widening of estimated weight slopes.
    pub tabulated_slope_margin: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            slice_grid: SliceGrid { half_width: 1024.0, points: 1 << 16 },
            norm_grid: NormGrid { log_extent: 24.0, step: 1.0 / 32.0 },
            t_truncation: 64.0,
            y_sampler: YSampler {
                panel_width: 0.5,
                nodes_per_panel: 16,
                directions: 64,
                radial_tail_ratio: 1e-10,
                radial_log_cap: 60.0,
            },
            tol_rel: 1e-3,
            tol_abs: 1e-6,
            slice_tail_tol: 1e-2,
            epsilon_schedule: vec![0.2, 0.1, 0.05],
            use_closed_form: true,
            ladder: Ladder { y0: 0.05, steps: 8 },
            support_margin: 1e-6,
            tabulated_slope_margin: 0.05,
        }
    }
}

impl QuadSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::BadParameters(format!("quad spec: {m}")));
        let g = &self.slice_grid;
        if !(g.half_width > 0.0) || !g.half_width.is_finite() {
            return bad("slice half-width must be positive");
        }
        if g.points < 16 || !g.points.is_power_of_two() {
            return bad("slice point count must be a power of two, at least 16");
        }
        if !(self.norm_grid.log_extent > 0.0) || !(self.norm_grid.step > 0.0) {
            return bad("norm grid extent and step must be positive");
        }
        let ratio = self.norm_grid.log_extent / self.norm_grid.step;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio < 8.0 {
            return bad("norm grid extent must be an integer multiple (>= 8) of its step");
        }
        if !(self.t_truncation > 0.0) {
            return bad("t truncation must be positive");
        }
        let y = &self.y_sampler;
        if !(y.panel_width > 0.0) || y.nodes_per_panel == 0 || y.directions == 0 {
            return bad("y sampler needs positive panel width, nodes and directions");
        }
        if !(y.radial_tail_ratio > 0.0) || !(y.radial_log_cap > 0.0) {
            return bad("radial tail ratio and log cap must be positive");
        }
        if !(self.tol_rel > 0.0) || !(self.tol_abs > 0.0) || !(self.slice_tail_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.epsilon_schedule.is_empty()
            || self.epsilon_schedule.iter().any(|&e| !(e > 0.0))
            || self.epsilon_schedule.windows(2).any(|w| !(w[1] < w[0]))
        {
            return bad("epsilon schedule must be strictly decreasing and positive");
        }
        if !(self.ladder.y0 > 0.0) {
            return bad("ladder start must be positive");
        }
        if !(self.support_margin >= 0.0) || !(self.tabulated_slope_margin >= 0.0) {
            return bad("margins must be nonnegative");
        }
        Ok(())
    }

    /// Coarsen (scale < 1) or refine (scale > 1) the grids. Point counts
    /// stay powers of two.
    pub fn scaled(&self, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::BadParameters(format!("grid scale {scale} must be positive")));
        }
        let mut q = self.clone();
        let pts = (self.slice_grid.points as f64 * scale).max(16.0);
        q.slice_grid.points = 1usize << (pts.log2().round() as u32);
        let step = self.norm_grid.step / scale;
        let per = (self.norm_grid.log_extent / step).round().max(8.0);
        q.norm_grid.step = self.norm_grid.log_extent / per;
        q.y_sampler.panel_width = self.y_sampler.panel_width / scale.max(1.0);
        q.validate()?;
        Ok(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_round_trips() {
        let q = QuadSpec::default();
        q.validate().unwrap();
        let s = serde_json::to_string(&q).unwrap();
        assert_eq!(serde_json::from_str::<QuadSpec>(&s).unwrap(), q);
        let partial: QuadSpec = serde_json::from_str(r#"{"tol_rel": 0.01}"#).unwrap();
        assert_eq!(partial.tol_rel, 0.01);
        assert_eq!(partial.slice_grid, q.slice_grid);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut q = QuadSpec::default();
        q.slice_grid.points = 1000;
        assert!(q.validate().is_err());
        let mut q = QuadSpec::default();
        q.epsilon_schedule = vec![0.1, 0.2];
        assert!(q.validate().is_err());
        let mut q = QuadSpec::default();
        q.tol_abs = 0.0;
        assert!(q.validate().is_err());
    }

    #[test]
    fn frequencies_match_grid() {
        let g = SliceGrid { half_width: 4.0, points: 16 };
        let f = g.frequencies();
        assert_eq!(f.len(), 16);
        assert_eq!(f[0], -1.0);
        assert_eq!(f[8], 0.0);
        assert_eq!(g.node(0), -4.0);
        assert_eq!(g.step(), 0.5);
    }

    #[test]
    fn scaling_keeps_powers_of_two() {
        let q = QuadSpec::default().scaled(0.25).unwrap();
        assert_eq!(q.slice_grid.points, 1 << 14);
        assert!((q.norm_grid.step - 1.0 / 8.0).abs() < 1e-15);
        assert!(QuadSpec::default().scaled(0.0).is_err());
    }
}
