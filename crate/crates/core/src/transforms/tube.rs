use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quad_spec::{QuadSpec, SliceGrid};
use super::synth::synthesize;
use crate::cone_geometry::BaseRegion;
use crate::par;
use crate::spectral_models::SpectralDensity;
use crate::{Error, Result};

/// Samples of one slice x ↦ F(x + iy) on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalSlice {
    pub y: Vec<f64>,
    pub grid: SliceGrid,
    /// Row-major samples on the tensor grid, as (re, im) pairs.
    pub values: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum TubeSource {
    /// The closed-form transform of a density.
    ClosedForm { density: SpectralDensity },
    /// The transform of a density evaluated by quadrature.
    Synthesized { density: SpectralDensity, quad: Box<QuadSpec> },
    /// A constant function on the tube.
    Constant { dim: usize, re: f64, im: f64 },
    /// Sampled slices only.
    External { dim: usize, slices: Vec<ExternalSlice> },
}

/// A holomorphic function on a tube, represented by evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeFunction {
    #[serde(flatten)]
    pub source: TubeSource,
    /// The y-domain of validity. `None` means all of R^n.
    #[serde(default)]
    pub base: Option<BaseRegion>,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl TubeFunction {
    /// The closed-form transform of f on its natural base.
    pub fn closed_form(f: SpectralDensity) -> Self {
        let base = natural_base(&f);
        TubeFunction { source: TubeSource::ClosedForm { density: f }, base, scale: 1.0 }
    }

    pub fn synthesized(f: SpectralDensity, q: QuadSpec) -> Self {
        let base = natural_base(&f);
        TubeFunction { source: TubeSource::Synthesized { density: f, quad: Box::new(q) }, base, scale: 1.0 }
    }

    pub fn constant(dim: usize, value: Complex64, base: Option<BaseRegion>) -> Self {
        TubeFunction { source: TubeSource::Constant { dim, re: value.re, im: value.im }, base, scale: 1.0 }
    }

    pub fn with_base(mut self, base: BaseRegion) -> Self {
        self.base = Some(base);
        self
    }

    pub fn scaled(mut self, c: f64) -> Self {
        self.scale *= c;
        self
    }

    pub fn dim(&self) -> usize {
        match &self.source {
            TubeSource::ClosedForm { density } | TubeSource::Synthesized { density, .. } => density.dim(),
            TubeSource::Constant { dim, .. } | TubeSource::External { dim, .. } => *dim,
        }
    }

    pub fn density(&self) -> Option<&SpectralDensity> {
        match &self.source {
            TubeSource::ClosedForm { density } | TubeSource::Synthesized { density, .. } => Some(density),
            _ => None,
        }
    }

    /// True when F vanishes identically.
    pub fn is_zero(&self) -> bool {
        self.scale == 0.0
            || match &self.source {
                TubeSource::ClosedForm { density } | TubeSource::Synthesized { density, .. } => density.is_zero(),
                TubeSource::Constant { re, im, .. } => *re == 0.0 && *im == 0.0,
                TubeSource::External { slices, .. } => slices
                    .iter()
                    .all(|s| s.values.iter().all(|&(a, b)| a == 0.0 && b == 0.0)),
            }
    }

    /// Whether y is an admissible height.
    pub fn valid_height(&self, y: &[f64]) -> bool {
        if y.len() != self.dim() {
            return false;
        }
        if let Some(b) = &self.base {
            if !b.contains(y) {
                return false;
            }
        }
        self.density().is_none_or(|d| d.admits_height(y))
    }

    fn check_height(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: y.len() });
        }
        if !self.valid_height(y) {
            return Err(Error::NotInBase(y.to_vec()));
        }
        Ok(())
    }

    /// F(z) at a single point.
    pub fn eval(&self, z: &[Complex64], q: &QuadSpec) -> Result<Complex64> {
        let y: Vec<f64> = z.iter().map(|c| c.im).collect();
        self.check_height(&y)?;
        self.eval_unchecked(z, q)
    }

    fn eval_unchecked(&self, z: &[Complex64], q: &QuadSpec) -> Result<Complex64> {
        let v = match &self.source {
            TubeSource::ClosedForm { density } => match density.closed_form(z) {
                Some(r) => r?,
                None => synthesize(density, z, q)?.value,
            },
            TubeSource::Synthesized { density, quad } => synthesize(density, z, quad)?.value,
            TubeSource::Constant { re, im, .. } => Complex64::new(*re, *im),
            TubeSource::External { .. } => {
                return Err(Error::BadParameters("external tube functions are only known on their slices".into()));
            }
        };
        Ok(v * self.scale)
    }

    /// Samples of x ↦ F(x + iy) on the tensor slice grid, row-major.
    pub fn slice(&self, y: &[f64], grid: &SliceGrid, q: &QuadSpec) -> Result<Vec<Complex64>> {
        self.check_height(y)?;
        let n = self.dim();
        if let TubeSource::External { slices, .. } = &self.source {
            let s = slices
                .iter()
                .find(|s| s.y == y && s.grid == *grid)
                .ok_or_else(|| Error::BadParameters(format!("no external slice at y = {y:?} on this grid")))?;
            return Ok(s.values.iter().map(|&(a, b)| Complex64::new(a, b) * self.scale).collect());
        }
        let m = grid.points;
        let total = m.checked_pow(n as u32).ok_or_else(|| Error::BadParameters("slice grid too large".into()))?;
        let vals = par::map_range(total, |idx| {
            let mut z = vec![Complex64::new(0.0, 0.0); n];
            let mut rem = idx;
            for d in (0..n).rev() {
                z[d] = Complex64::new(grid.node(rem % m), y[d]);
                rem /= m;
            }
            self.eval_unchecked(&z, q)
        });
        vals.into_iter().collect()
    }
}

/// The tube over which the transform of f is defined.
fn natural_base(f: &SpectralDensity) -> Option<BaseRegion> {
    match f.kind() {
        crate::spectral_models::DensityKind::TruncatedExponential { cone, .. } => {
            BaseRegion::cone(cone.clone()).ok()
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_tube_rejects_heights_outside_cone() {
        let f = SpectralDensity::truncated_exponential_1d(1.0, 0).unwrap();
        let tf = TubeFunction::closed_form(f);
        let q = QuadSpec::default();
        assert!(tf.eval(&[Complex64::new(0.0, 1.0)], &q).is_ok());
        assert!(matches!(tf.eval(&[Complex64::new(0.0, -0.5)], &q), Err(Error::NotInBase(_))));
    }

    #[test]
    fn scaling_multiplies_values() {
        let f = SpectralDensity::gaussian(vec![0.0], 1.0).unwrap();
        let q = QuadSpec::default();
        let z = [Complex64::new(0.3, 0.2)];
        let a = TubeFunction::closed_form(f.clone()).eval(&z, &q).unwrap();
        let b = TubeFunction::closed_form(f).scaled(10.0).eval(&z, &q).unwrap();
        assert!((b - a * 10.0).norm() < 1e-15);
    }

    #[test]
    fn slice_is_in_grid_order() {
        let f = SpectralDensity::gaussian(vec![0.0], 1.0).unwrap();
        let q = QuadSpec::default();
        let grid = SliceGrid { half_width: 2.0, points: 16 };
        let tf = TubeFunction::closed_form(f.clone());
        let s = tf.slice(&[0.1], &grid, &q).unwrap();
        for (k, v) in s.iter().enumerate() {
            let z = [Complex64::new(grid.node(k), 0.1)];
            assert_eq!(*v, f.closed_form(&z).unwrap().unwrap());
        }
    }

    #[test]
    fn json_round_trip() {
        let f = SpectralDensity::truncated_exponential_1d(1.0, 0).unwrap();
        let tf = TubeFunction::closed_form(f);
        let s = serde_json::to_string(&tf).unwrap();
        let back: TubeFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, tf);
    }
}
