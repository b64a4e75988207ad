//! Weight families ψ on a base region, their asymptotic slope R_ψ and ball
//! maxima ψ_δ.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cone_geometry::BaseRegion;
use crate::{Error, Result};

/// Largest exponent passed to `exp` before the weight factor saturates.
pub const EXP_CLAMP: f64 = 700.0;

/// Values of ψ on a tensor grid, interpolated multilinearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedGrid {
    /// Sorted coordinates per axis.
    pub axes: Vec<Vec<f64>>,
    /// Row-major values, the last axis varying fastest.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "params", rename_all = "snake_case")]
pub enum WeightKind {
    Zero,
    /// ψ(y) = -(α/4π) log|y|.
    LogPower { alpha: f64 },
    /// ψ(y) = R|y|.
    Linear { r: f64 },
    Tabulated(TabulatedGrid),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightDoc", into = "WeightDoc")]
pub struct WeightFn {
    kind: WeightKind,
    domain: BaseRegion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightDoc {
    #[serde(flatten)]
    pub kind: WeightKind,
    pub domain: BaseRegion,
}

impl TryFrom<WeightDoc> for WeightFn {
    type Error = Error;

    fn try_from(doc: WeightDoc) -> Result<Self> {
        WeightFn::new(doc.kind, doc.domain)
    }
}

impl From<WeightFn> for WeightDoc {
    fn from(w: WeightFn) -> Self {
        WeightDoc { kind: w.kind, domain: w.domain }
    }
}

/// The weight factor e^{-2π s ψ(y)} and whether the exponent was clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightFactor {
    pub value: f64,
    pub saturated: bool,
}

impl TabulatedGrid {
    fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.iter().any(|a| a.len() < 2) {
            return Err(Error::BadParameters("tabulated weight needs at least two nodes per axis".into()));
        }
        if self.axes.iter().any(|a| a.windows(2).any(|w| !(w[0] < w[1]))) {
            return Err(Error::BadParameters("tabulated axes must be strictly increasing".into()));
        }
        let count: usize = self.axes.iter().map(Vec::len).product();
        if count != self.values.len() {
            return Err(Error::BadParameters(format!(
                "tabulated grid has {count} nodes but {} values",
                self.values.len()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadParameters("tabulated values must be finite".into()));
        }
        Ok(())
    }

    /// Build a grid from (point, value) rows that form a full tensor grid.
    pub fn from_rows(rows: &[(Vec<f64>, f64)]) -> Result<Self> {
        let Some((first, _)) = rows.first() else {
            return Err(Error::BadParameters("tabulated weight has no rows".into()));
        };
        let n = first.len();
        let mut axes: Vec<Vec<f64>> = vec![Vec::new(); n];
        for (p, _) in rows {
            if p.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: p.len() });
            }
            for (axis, &c) in axes.iter_mut().zip(p) {
                axis.push(c);
            }
        }
        for axis in &mut axes {
            axis.sort_by(f64::total_cmp);
            axis.dedup();
        }
        let count: usize = axes.iter().map(Vec::len).product();
        let mut values = vec![f64::NAN; count];
        let mut grid = TabulatedGrid { axes, values: Vec::new() };
        for (p, v) in rows {
            let idx = grid.flat_index_of(p).ok_or_else(|| {
                Error::BadParameters(format!("point {p:?} is not a grid node"))
            })?;
            values[idx] = *v;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::BadParameters("tabulated rows do not fill a tensor grid".into()));
        }
        grid.values = values;
        grid.validate()?;
        Ok(grid)
    }

    /// Load CSV rows `y_1, ..., y_n, value` with an optional header line.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(|s| s.trim().parse::<f64>()).collect();
            match parsed {
                Ok(mut v) if v.len() >= 2 => {
                    let value = v.pop().expect("nonempty");
                    rows.push((v, value));
                }
                Err(_) if i == 0 => continue,
                _ => return Err(Error::ConfigParse(format!("bad tabulated weight row {}", i + 1))),
            }
        }
        Self::from_rows(&rows)
    }

    fn flat_index_of(&self, p: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for (axis, &c) in self.axes.iter().zip(p) {
            let k = axis.iter().position(|&a| a == c)?;
            idx = idx * axis.len() + k;
        }
        Some(idx)
    }

    fn value_at(&self, multi: &[usize]) -> f64 {
        let mut idx = 0;
        for (axis, &k) in self.axes.iter().zip(multi) {
            idx = idx * axis.len() + k;
        }
        self.values[idx]
    }

    fn in_hull(&self, y: &[f64]) -> bool {
        y.len() == self.axes.len()
            && self
                .axes
                .iter()
                .zip(y)
                .all(|(a, &v)| a[0] <= v && v <= a[a.len() - 1])
    }

    fn interpolate(&self, y: &[f64]) -> f64 {
        let n = self.axes.len();
        let mut lower = Vec::with_capacity(n);
        let mut frac = Vec::with_capacity(n);
        for (axis, &v) in self.axes.iter().zip(y) {
            let k = axis.partition_point(|&a| a <= v).clamp(1, axis.len() - 1) - 1;
            lower.push(k);
            frac.push((v - axis[k]) / (axis[k + 1] - axis[k]));
        }
        let mut total = 0.0;
        let mut corner = vec![0usize; n];
        for mask in 0..(1usize << n) {
            let mut w = 1.0;
            for d in 0..n {
                let hi = mask >> d & 1 == 1;
                corner[d] = lower[d] + hi as usize;
                w *= if hi { frac[d] } else { 1.0 - frac[d] };
            }
            if w != 0.0 {
                total += w * self.value_at(&corner);
            }
        }
        total
    }

    fn nodes(&self, refine: bool) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = if refine {
            self.axes
                .iter()
                .map(|a| {
                    let mut out = Vec::with_capacity(2 * a.len());
                    for w in a.windows(2) {
                        out.push(w[0]);
                        out.push(0.5 * (w[0] + w[1]));
                    }
                    out.push(a[a.len() - 1]);
                    out
                })
                .collect()
        } else {
            self.axes.clone()
        };
        let mut pts: Vec<Vec<f64>> = vec![Vec::new()];
        for axis in &axes {
            pts = pts
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&c| {
                        let mut q = p.clone();
                        q.push(c);
                        q
                    })
                })
                .collect();
        }
        pts
    }
}

fn radius(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl WeightFn {
    pub fn new(kind: WeightKind, domain: BaseRegion) -> Result<Self> {
        match &kind {
            WeightKind::LogPower { alpha } if !alpha.is_finite() => {
                return Err(Error::BadParameters(format!("log-power exponent {alpha} is not finite")));
            }
            WeightKind::Linear { r } if !(*r >= 0.0 && r.is_finite()) => {
                return Err(Error::BadParameters(format!("linear slope {r} must be finite and nonnegative")));
            }
            WeightKind::Tabulated(grid) => {
                grid.validate()?;
                if grid.axes.len() != domain.dim() {
                    return Err(Error::DimensionMismatch { expected: domain.dim(), got: grid.axes.len() });
                }
            }
            _ => {}
        }
        Ok(WeightFn { kind, domain })
    }

    pub fn zero(domain: BaseRegion) -> Self {
        WeightFn { kind: WeightKind::Zero, domain }
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn domain(&self) -> &BaseRegion {
        &self.domain
    }

    /// ψ(y) for y in the open domain.
    pub fn eval(&self, y: &[f64]) -> Result<f64> {
        if !self.domain.contains(y) {
            return Err(Error::OutOfDomain(y.to_vec()));
        }
        self.eval_unchecked(y)
    }

    /// ψ(y) without the domain check. LogPower still rejects y = 0.
    pub fn eval_unchecked(&self, y: &[f64]) -> Result<f64> {
        Ok(match &self.kind {
            WeightKind::Zero => 0.0,
            WeightKind::LogPower { alpha } => {
                let r = radius(y);
                if r == 0.0 {
                    return Err(Error::OutOfDomain(y.to_vec()));
                }
                -alpha / (4.0 * PI) * r.ln()
            }
            WeightKind::Linear { r } => r * radius(y),
            WeightKind::Tabulated(grid) => {
                if !grid.in_hull(y) {
                    return Err(Error::OutOfDomain(y.to_vec()));
                }
                grid.interpolate(y)
            }
        })
    }

    /// e^{-2π s ψ(y)} with the exponent clamped at ±700.
    pub fn factor(&self, y: &[f64], s: f64) -> Result<WeightFactor> {
        let e = -2.0 * PI * s * self.eval_unchecked(y)?;
        Ok(clamp_exp(e))
    }

    /// The asymptotic slope R_ψ = limsup ψ(y)/|y|.
    pub fn slope(&self) -> f64 {
        match &self.kind {
            WeightKind::Zero | WeightKind::LogPower { .. } => 0.0,
            WeightKind::Linear { r } => *r,
            WeightKind::Tabulated(grid) => {
                let pts = grid.nodes(false);
                let rmax = pts.iter().map(|p| radius(p)).fold(0.0f64, f64::max);
                pts.iter()
                    .filter(|p| radius(p) >= 0.9 * rmax && radius(p) > 0.0)
                    .filter_map(|p| grid.in_hull(p).then(|| grid.interpolate(p) / radius(p)))
                    .fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    /// True when `slope` is a sampled estimate rather than exact.
    pub fn slope_is_estimate(&self) -> bool {
        matches!(self.kind, WeightKind::Tabulated(_))
    }

    /// Slope used by support checks, widened by `margin` (relative) for
    /// estimated slopes.
    pub fn support_slope(&self, margin: f64) -> f64 {
        let s = self.slope();
        if self.slope_is_estimate() {
            s + margin * s.abs()
        } else {
            s
        }
    }

    /// ψ_δ(y0) = max of ψ over the closed ball of radius δ about y0.
    pub fn ball_max(&self, y0: &[f64], delta: f64) -> Result<f64> {
        if !(delta > 0.0) || !self.domain.contains_closed_ball(y0, delta) {
            return Err(Error::BallNotInDomain { center: y0.to_vec(), radius: delta });
        }
        let r0 = radius(y0);
        Ok(match &self.kind {
            WeightKind::Zero => 0.0,
            WeightKind::LogPower { alpha } => {
                let r = if *alpha > 0.0 {
                    r0 - delta
                } else {
                    r0 + delta
                };
                if r <= 0.0 {
                    return Err(Error::BallNotInDomain { center: y0.to_vec(), radius: delta });
                }
                -alpha / (4.0 * PI) * r.ln()
            }
            WeightKind::Linear { r } => r * (r0 + delta),
            WeightKind::Tabulated(grid) => {
                let mut best = self.eval_unchecked(y0)?;
                for p in grid.nodes(true) {
                    let d = p.iter().zip(y0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    if d <= delta {
                        best = best.max(grid.interpolate(&p));
                    }
                }
                best
            }
        })
    }
}

/// e^{x} with the argument clamped to [-700, 700].
pub fn clamp_exp(x: f64) -> WeightFactor {
    if x > EXP_CLAMP {
        WeightFactor { value: EXP_CLAMP.exp(), saturated: true }
    } else if x < -EXP_CLAMP {
        WeightFactor { value: (-EXP_CLAMP).exp(), saturated: true }
    } else {
        WeightFactor { value: x.exp(), saturated: false }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone_geometry::ConeSpec;

    fn half_line() -> BaseRegion {
        BaseRegion::cone(ConeSpec::orthant(1)).unwrap()
    }

    #[test]
    fn eval_examples() {
        let d = half_line();
        assert_eq!(WeightFn::zero(d.clone()).eval(&[3.0]).unwrap(), 0.0);
        let lp = WeightFn::new(WeightKind::LogPower { alpha: -0.5 }, d.clone()).unwrap();
        assert_eq!(lp.eval(&[1.0]).unwrap(), 0.0);
        let lin = WeightFn::new(WeightKind::Linear { r: 2.0 }, d.clone()).unwrap();
        assert_eq!(lin.eval(&[3.0]).unwrap(), 6.0);
        assert!(matches!(lin.eval(&[-1.0]), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn log_power_identity() {
        let lp = WeightFn::new(WeightKind::LogPower { alpha: 0.7 }, half_line()).unwrap();
        for y in [0.01, 0.5, 3.0, 100.0] {
            let v = lp.eval(&[y]).unwrap() + 0.7 / (4.0 * PI) * f64::ln(y);
            assert!(v.abs() < 1e-15);
        }
    }

    #[test]
    fn slopes() {
        let d = half_line();
        assert_eq!(WeightFn::new(WeightKind::LogPower { alpha: 3.0 }, d.clone()).unwrap().slope(), 0.0);
        assert_eq!(WeightFn::new(WeightKind::LogPower { alpha: -0.5 }, d.clone()).unwrap().slope(), 0.0);
        assert_eq!(WeightFn::new(WeightKind::Linear { r: 2.0 }, d.clone()).unwrap().slope(), 2.0);
        assert_eq!(WeightFn::zero(d).slope(), 0.0);
    }

    #[test]
    fn ball_max_examples() {
        let d = half_line();
        let lin = WeightFn::new(WeightKind::Linear { r: 1.0 }, d.clone()).unwrap();
        assert_eq!(lin.ball_max(&[2.0], 0.5).unwrap(), 2.5);
        assert_eq!(WeightFn::zero(d.clone()).ball_max(&[2.0], 0.5).unwrap(), 0.0);
        let lp = WeightFn::new(WeightKind::LogPower { alpha: -0.5 }, d.clone()).unwrap();
        let expected = f64::ln(1.5) / (8.0 * PI);
        assert!((lp.ball_max(&[1.0], 0.5).unwrap() - expected).abs() < 1e-15);
        let lp_pos = WeightFn::new(WeightKind::LogPower { alpha: 0.5 }, d).unwrap();
        let expected = -0.5 / (4.0 * PI) * f64::ln(0.5);
        assert!((lp_pos.ball_max(&[1.0], 0.5).unwrap() - expected).abs() < 1e-15);
        assert!(matches!(lin.ball_max(&[1.0], 2.0), Err(Error::BallNotInDomain { .. })));
    }

    fn tabulated_linear_plus_bump(r: f64) -> WeightFn {
        let domain = BaseRegion::new_box(vec![0.0], vec![100.0]).unwrap();
        let axis: Vec<f64> = (0..=400).map(|i| i as f64 * 0.25).collect();
        let values = axis.iter().map(|y| r * y + 0.5 * (y * 0.3).sin()).collect();
        WeightFn::new(WeightKind::Tabulated(TabulatedGrid { axes: vec![axis], values }), domain).unwrap()
    }

    #[test]
    fn tabulated_slope_tracks_linear_part() {
        let w = tabulated_linear_plus_bump(2.0);
        assert!(w.slope_is_estimate());
        assert!((w.slope() - 2.0).abs() < 0.2, "{}", w.slope());
        assert!(w.support_slope(0.05) > w.slope());
    }

    #[test]
    fn tabulated_ball_max_dominates_center() {
        let w = tabulated_linear_plus_bump(0.0);
        for y in [5.0, 10.3, 40.0] {
            let c = w.eval(&[y]).unwrap();
            assert!(w.ball_max(&[y], 1.0).unwrap() >= c);
            assert!((w.ball_max(&[y], 1e-9).unwrap() - c).abs() < 1e-8);
        }
    }

    #[test]
    fn tabulated_rows_and_csv() {
        let rows = vec![
            (vec![0.0, 0.0], 1.0),
            (vec![0.0, 1.0], 2.0),
            (vec![1.0, 0.0], 3.0),
            (vec![1.0, 1.0], 4.0),
        ];
        let grid = TabulatedGrid::from_rows(&rows).unwrap();
        assert_eq!(grid.values, vec![1.0, 2.0, 3.0, 4.0]);
        assert!((grid.interpolate(&[0.5, 0.5]) - 2.5).abs() < 1e-15);
        assert!(TabulatedGrid::from_rows(&rows[..3]).is_err());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.csv");
        std::fs::write(&path, "y1,y2,psi\n0,0,1\n0,1,2\n1,0,3\n1,1,4\n").unwrap();
        assert_eq!(TabulatedGrid::from_csv(&path).unwrap(), grid);
    }

    #[test]
    fn clamp_flags_saturation() {
        assert!(clamp_exp(800.0).saturated);
        assert!(!clamp_exp(10.0).saturated);
    }

    #[test]
    fn json_shape() {
        let w = WeightFn::new(WeightKind::LogPower { alpha: -0.5 }, half_line()).unwrap();
        let v = serde_json::to_value(&w).unwrap();
        assert_eq!(v["variant"], "log_power");
        assert_eq!(v["params"]["alpha"], -0.5);
        let back: WeightFn = serde_json::from_value(v).unwrap();
        assert_eq!(back, w);
    }
}
