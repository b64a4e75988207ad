//! Parametric spectral densities f(t) with declared supports and, where
//! available, closed-form transforms F(z) = ∫ f(t) e^{2πi t·z} dt.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cone_geometry::{dot, norm, nnls, ConeSpec};
use crate::numerics::determinant;
use crate::transforms::TubeFunction;
use crate::{Error, Result};

fn default_order() -> u32 {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "params", rename_all = "snake_case")]
pub enum DensityKind {
    Zero {
        dim: usize,
    },
    /// f(t) = ∏ u_j^power · e^{-2π w·t} on Γ*, where t = Σ u_j v_j over the
    /// unit generators v_j of Γ*.
    TruncatedExponential {
        cone: ConeSpec,
        w: Vec<f64>,
        #[serde(default)]
        power: u32,
    },
    /// f(t) = exp(-π |t - c|² / σ²).
    Gaussian { center: Vec<f64>, width: f64 },
    /// f(t) = (1 - |t|)_+ in one dimension.
    Triangle,
    /// f(t) = (1 - |u|²)_+^order with u = (t - c) / radius.
    BumpCompact {
        center: Vec<f64>,
        radius: f64,
        #[serde(default = "default_order")]
        order: u32,
    },
}

/// Where a density may be nonzero.
#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    Empty,
    /// The closed dual cone, given in generator form.
    DualCone(ConeSpec),
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    AllSpace,
}

impl Support {
    pub fn contains(&self, t: &[f64]) -> bool {
        match self {
            Support::Empty => false,
            Support::DualCone(c) => c.contains(t, true).unwrap_or(false),
            Support::Box { lo, hi } => t.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| a <= v && v <= b),
            Support::Ball { center, radius } => {
                let d: Vec<f64> = t.iter().zip(center).map(|(a, b)| a - b).collect();
                norm(&d) <= *radius
            }
            Support::AllSpace => true,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Support::Empty => "empty".into(),
            Support::DualCone(c) => format!("dual cone with generators {:?}", c.generators()),
            Support::Box { lo, hi } => format!("box {lo:?}..{hi:?}"),
            Support::Ball { center, radius } => format!("ball centered {center:?} radius {radius}"),
            Support::AllSpace => "all space".into(),
        }
    }
}

/// Data derived for truncated exponentials.
#[derive(Debug, Clone, PartialEq)]
struct DualFrame {
    dual: ConeSpec,
    /// Unit generators v_j of Γ*.
    basis: Vec<Vec<f64>>,
    /// Rows of the inverse of the matrix with columns v_j.
    inverse: Vec<Vec<f64>>,
    det: f64,
    /// w·t >= decay |t| on Γ*.
    decay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityKind", into = "DensityKind")]
pub struct SpectralDensity {
    kind: DensityKind,
    dim: usize,
    frame: Option<DualFrame>,
}

impl TryFrom<DensityKind> for SpectralDensity {
    type Error = Error;

    fn try_from(kind: DensityKind) -> Result<Self> {
        SpectralDensity::new(kind)
    }
}

impl From<SpectralDensity> for DensityKind {
    fn from(d: SpectralDensity) -> Self {
        d.kind
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn sinc_pi(z: Complex64) -> Complex64 {
    let w = z * PI;
    if w.norm() < 1e-4 {
        let w2 = w * w;
        Complex64::new(1.0, 0.0) - w2 / 6.0 + w2 * w2 / 120.0
    } else {
        w.sin() / w
    }
}

impl SpectralDensity {
    pub fn new(kind: DensityKind) -> Result<Self> {
        let (dim, frame) = match &kind {
            DensityKind::Zero { dim } => {
                if *dim == 0 {
                    return Err(Error::BadParameters("dimension must be positive".into()));
                }
                (*dim, None)
            }
            DensityKind::TruncatedExponential { cone, w, .. } => {
                if w.len() != cone.dim() {
                    return Err(Error::DimensionMismatch { expected: cone.dim(), got: w.len() });
                }
                if !cone.contains(w, false)? {
                    return Err(Error::BadParameters(format!("w = {w:?} is not inside the cone")));
                }
                let dual = cone.dual()?;
                if !dual.is_simplicial() {
                    return Err(Error::BadParameters(
                        "truncated exponential needs a pointed cone with simplicial dual".into(),
                    ));
                }
                let basis: Vec<Vec<f64>> = dual
                    .generators()
                    .iter()
                    .map(|g| {
                        let n = norm(g);
                        g.iter().map(|v| v / n).collect()
                    })
                    .collect();
                let n = cone.dim();
                // Matrix with columns v_j, stored by rows.
                let mat: Vec<Vec<f64>> = (0..n).map(|i| basis.iter().map(|v| v[i]).collect()).collect();
                let inverse = nnls::invert(&mat)
                    .ok_or_else(|| Error::BadParameters("dual generators are dependent".into()))?;
                let det = determinant(&mat).abs();
                let decay = basis.iter().map(|v| dot(w, v)).fold(f64::INFINITY, f64::min);
                (n, Some(DualFrame { dual, basis, inverse, det, decay }))
            }
            DensityKind::Gaussian { center, width } => {
                if center.is_empty() || !(*width > 0.0) {
                    return Err(Error::BadParameters("Gaussian needs a center and positive width".into()));
                }
                (center.len(), None)
            }
            DensityKind::Triangle => (1, None),
            DensityKind::BumpCompact { center, radius, .. } => {
                if center.is_empty() || !(*radius > 0.0) {
                    return Err(Error::BadParameters("bump needs a center and positive radius".into()));
                }
                (center.len(), None)
            }
        };
        Ok(SpectralDensity { kind, dim, frame })
    }

    /// e^{-2π a t} on t >= 0, times t^power.
    pub fn truncated_exponential_1d(a: f64, power: u32) -> Result<Self> {
        Self::new(DensityKind::TruncatedExponential { cone: ConeSpec::orthant(1), w: vec![a], power })
    }

    pub fn gaussian(center: Vec<f64>, width: f64) -> Result<Self> {
        Self::new(DensityKind::Gaussian { center, width })
    }

    pub fn triangle() -> Self {
        Self::new(DensityKind::Triangle).expect("triangle is valid")
    }

    pub fn bump(center: Vec<f64>, radius: f64, order: u32) -> Result<Self> {
        Self::new(DensityKind::BumpCompact { center, radius, order })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::new(DensityKind::Zero { dim })
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, DensityKind::Zero { .. })
    }

    pub fn support(&self) -> Support {
        match &self.kind {
            DensityKind::Zero { .. } => Support::Empty,
            DensityKind::TruncatedExponential { .. } => {
                Support::DualCone(self.frame.as_ref().expect("frame").dual.clone())
            }
            DensityKind::Gaussian { .. } => Support::AllSpace,
            DensityKind::Triangle => Support::Box { lo: vec![-1.0], hi: vec![1.0] },
            DensityKind::BumpCompact { center, radius, .. } => {
                Support::Ball { center: center.clone(), radius: *radius }
            }
        }
    }

    /// Constant c with w·t >= c|t| on Γ* (truncated exponentials only).
    pub fn decay_constant(&self) -> Option<f64> {
        self.frame.as_ref().map(|f| f.decay)
    }

    /// Coordinates u of t in the unit generator basis of Γ*.
    pub fn dual_coordinates(&self, t: &[f64]) -> Option<Vec<f64>> {
        self.frame
            .as_ref()
            .map(|f| f.inverse.iter().map(|row| dot(row, t)).collect())
    }

    /// Unit generators of Γ* for truncated exponentials.
    pub fn dual_basis(&self) -> Option<&[Vec<f64>]> {
        self.frame.as_ref().map(|f| f.basis.as_slice())
    }

    pub fn eval(&self, t: &[f64]) -> Result<f64> {
        if t.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: t.len() });
        }
        Ok(match &self.kind {
            DensityKind::Zero { .. } => 0.0,
            DensityKind::TruncatedExponential { w, power, .. } => {
                let frame = self.frame.as_ref().expect("frame");
                let u: Vec<f64> = frame.inverse.iter().map(|row| dot(row, t)).collect();
                let scale = norm(t).max(1.0);
                if u.iter().any(|&v| v < -1e-13 * scale) {
                    return Ok(0.0);
                }
                let poly: f64 = u.iter().map(|v| v.max(0.0).powi(*power as i32)).product();
                poly * (-2.0 * PI * dot(w, t)).exp()
            }
            DensityKind::Gaussian { center, width } => {
                let d2: f64 = t.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                (-PI * d2 / (width * width)).exp()
            }
            DensityKind::Triangle => (1.0 - t[0].abs()).max(0.0),
            DensityKind::BumpCompact { center, radius, order } => {
                let u2: f64 = t.iter().zip(center).map(|(a, b)| ((a - b) / radius).powi(2)).sum();
                if u2 >= 1.0 {
                    0.0
                } else {
                    (1.0 - u2).powi(*order as i32)
                }
            }
        })
    }

    /// Whether f(t) e^{-2π y·t} is integrable, i.e. F is defined at height y.
    pub fn admits_height(&self, y: &[f64]) -> bool {
        match &self.kind {
            DensityKind::TruncatedExponential { w, .. } => {
                let frame = self.frame.as_ref().expect("frame");
                frame.basis.iter().all(|v| dot(v, w) + dot(v, y) > 0.0)
            }
            _ => true,
        }
    }

    /// Whether a closed-form transform is implemented for this density.
    pub fn has_closed_form(&self) -> bool {
        !matches!(self.kind, DensityKind::BumpCompact { .. })
    }

    /// Closed-form transform F(z), or `None` when no formula exists.
    pub fn closed_form(&self, z: &[Complex64]) -> Option<Result<Complex64>> {
        if z.len() != self.dim {
            return Some(Err(Error::DimensionMismatch { expected: self.dim, got: z.len() }));
        }
        let i = Complex64::i();
        Some(Ok(match &self.kind {
            DensityKind::Zero { .. } => Complex64::new(0.0, 0.0),
            DensityKind::TruncatedExponential { w, power, .. } => {
                let frame = self.frame.as_ref().expect("frame");
                let y: Vec<f64> = z.iter().map(|c| c.im).collect();
                if !self.admits_height(&y) {
                    return Some(Err(Error::DivergentSlice(y)));
                }
                let k = *power;
                let mut acc = Complex64::new(frame.det, 0.0);
                for v in &frame.basis {
                    let a = dot(v, w);
                    let zeta: Complex64 = v.iter().zip(z).map(|(vi, zi)| zi * vi).sum();
                    let denom = (a - i * zeta) * (2.0 * PI);
                    acc *= factorial(k) / denom.powu(k + 1);
                }
                acc
            }
            DensityKind::Gaussian { center, width } => {
                let zz: Complex64 = z.iter().map(|c| c * c).sum();
                let cz: Complex64 = z.iter().zip(center).map(|(zi, ci)| zi * ci).sum();
                width.powi(self.dim as i32) * (2.0 * PI * i * cz - PI * width * width * zz).exp()
            }
            DensityKind::Triangle => {
                let s = sinc_pi(z[0]);
                s * s
            }
            DensityKind::BumpCompact { .. } => return None,
        }))
    }

    /// Points where f jumps, which pointwise recovery resolves only to the
    /// midpoint value. Only one-dimensional densities report them.
    pub fn jump_points_1d(&self) -> Vec<f64> {
        match &self.kind {
            DensityKind::TruncatedExponential { power: 0, .. } if self.dim == 1 => vec![0.0],
            _ => Vec::new(),
        }
    }

    /// Distance from t to the nearest jump of f, or infinity.
    pub fn distance_to_jump(&self, t: &[f64]) -> f64 {
        match &self.kind {
            DensityKind::TruncatedExponential { power: 0, .. } => {
                let frame = self.frame.as_ref().expect("frame");
                frame
                    .dual
                    .halfspaces()
                    .iter()
                    .map(|h| dot(h, t).abs() / norm(h))
                    .fold(f64::INFINITY, f64::min)
            }
            _ => f64::INFINITY,
        }
    }
}

/// The closed-form tube function of f, when one exists.
pub fn closed_form_transform(f: &SpectralDensity) -> Option<TubeFunction> {
    f.has_closed_form().then(|| TubeFunction::closed_form(f.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        let f = SpectralDensity::truncated_exponential_1d(1.0, 0).unwrap();
        assert!((f.eval(&[1.0]).unwrap() - (-2.0 * PI).exp()).abs() < 1e-18);
        assert!((f.eval(&[1.0]).unwrap() - 1.8674e-3).abs() < 1e-7);
        assert_eq!(f.eval(&[-1.0]).unwrap(), 0.0);
        assert_eq!(SpectralDensity::triangle().eval(&[0.0]).unwrap(), 1.0);
        assert!(matches!(f.eval(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn truncated_exponential_needs_interior_w() {
        assert!(SpectralDensity::truncated_exponential_1d(-1.0, 0).is_err());
        assert!(SpectralDensity::truncated_exponential_1d(0.0, 0).is_err());
        let half = ConeSpec::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let kind = DensityKind::TruncatedExponential { cone: half, w: vec![0.0, 1.0], power: 0 };
        assert!(SpectralDensity::new(kind).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let f = SpectralDensity::truncated_exponential_1d(1.0, 0).unwrap();
        let v = f.closed_form(&[c(0.0, 1.0)]).unwrap().unwrap();
        assert!((v - c(1.0 / (4.0 * PI), 0.0)).norm() < 1e-16);
        let z = c(0.7, 0.3);
        let expected = 1.0 / (2.0 * PI * (1.0 - Complex64::i() * z));
        assert!((f.closed_form(&[z]).unwrap().unwrap() - expected).norm() < 1e-15);
        assert!(matches!(f.closed_form(&[c(0.0, -2.0)]).unwrap(), Err(Error::DivergentSlice(_))));

        let g = SpectralDensity::gaussian(vec![0.0], 1.0).unwrap();
        assert!((g.closed_form(&[c(0.0, 0.0)]).unwrap().unwrap() - 1.0).norm() < 1e-15);
        let tri = SpectralDensity::triangle();
        assert!((tri.closed_form(&[c(0.0, 0.0)]).unwrap().unwrap() - 1.0).norm() < 1e-15);
        let bump = SpectralDensity::bump(vec![0.0], 0.5, 3).unwrap();
        assert!(bump.closed_form(&[c(0.0, 0.0)]).is_none());
        assert!(closed_form_transform(&bump).is_none());
    }

    #[test]
    fn power_k_closed_form_matches_elementary_integral() {
        // ∫_0^∞ t e^{-2π(a - iz)t} dt = 1/(2π(a - iz))².
        let f = SpectralDensity::truncated_exponential_1d(1.0, 1).unwrap();
        let z = c(0.4, 0.5);
        let d = 2.0 * PI * (1.0 - Complex64::i() * z);
        let expected = 1.0 / (d * d);
        assert!((f.closed_form(&[z]).unwrap().unwrap() - expected).norm() < 1e-15);
    }

    #[test]
    fn quadrant_exponential_factorizes() {
        let kind = DensityKind::TruncatedExponential { cone: ConeSpec::orthant(2), w: vec![1.0, 2.0], power: 0 };
        let f = SpectralDensity::new(kind).unwrap();
        let z = [c(0.3, 0.1), c(-0.2, 0.4)];
        let one = |a: f64, z: Complex64| 1.0 / (2.0 * PI * (a - Complex64::i() * z));
        let expected = one(1.0, z[0]) * one(2.0, z[1]);
        assert!((f.closed_form(&z).unwrap().unwrap() - expected).norm() < 1e-15);
        assert!(f.decay_constant().unwrap() > 0.0);
    }

    #[test]
    fn support_honesty() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let skew = ConeSpec::new(vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let densities = vec![
            SpectralDensity::truncated_exponential_1d(1.0, 0).unwrap(),
            SpectralDensity::truncated_exponential_1d(2.0, 2).unwrap(),
            SpectralDensity::triangle(),
            SpectralDensity::bump(vec![0.2], 0.5, 3).unwrap(),
            SpectralDensity::bump(vec![0.0, 1.0], 0.5, 2).unwrap(),
            SpectralDensity::new(DensityKind::TruncatedExponential { cone: skew, w: vec![2.0, 1.0], power: 0 })
                .unwrap(),
        ];
        for f in &densities {
            let support = f.support();
            let mut outside = 0;
            while outside < 10_000 {
                let t: Vec<f64> = (0..f.dim()).map(|_| rng.gen_range(-3.0..3.0)).collect();
                if support.contains(&t) {
                    continue;
                }
                outside += 1;
                assert_eq!(f.eval(&t).unwrap(), 0.0, "{f:?} at {t:?}");
            }
        }
    }

    #[test]
    fn decay_certificate_on_dual_rays() {
        let skew = ConeSpec::new(vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let w = vec![2.0, 1.0];
        let f = SpectralDensity::new(DensityKind::TruncatedExponential { cone: skew.clone(), w: w.clone(), power: 0 })
            .unwrap();
        let c0 = f.decay_constant().unwrap();
        let dual = skew.dual().unwrap();
        for k in 0..=100 {
            let s = k as f64 / 100.0;
            let t: Vec<f64> = (0..2)
                .map(|i| s * dual.generators()[0][i] + (1.0 - s) * dual.generators()[1][i])
                .collect();
            assert!(dot(&w, &t) >= c0 * norm(&t) - 1e-14);
        }
    }

    #[test]
    fn json_shape() {
        let f = SpectralDensity::truncated_exponential_1d(1.0, 0).unwrap();
        let v = serde_json::to_value(&f).unwrap();
        assert_eq!(v["variant"], "truncated_exponential");
        assert_eq!(v["params"]["cone"]["generators"][0][0], 1.0);
        let back: SpectralDensity = serde_json::from_value(v).unwrap();
        assert_eq!(back, f);
    }
}
