//! Weighted slice norms, the three-regime mixed norms of A^{p,s}(B,ψ), the
//! support sets U_α(B,ψ) and the dual-side weighted norm.

mod base_quad;
mod dual;
mod support;

use std::sync::atomic::{AtomicBool, Ordering};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cone_geometry::BaseRegion;
use crate::numerics::integrate_rn;
use crate::par;
use crate::transforms::{QuadSpec, TubeFunction};
use crate::weights::WeightFn;
use crate::{Error, Result};

pub use base_quad::{integrate_base, sample_base, BaseIntegral};
pub use dual::{dual_kernel, dual_weighted_norm, DualInput};
pub use support::{support_membership, RayCertificate, SupportSetQuery, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    FiniteFinite,
    PFiniteSInf,
    BothInf,
}

/// Exponents (p, s) in (0, ∞]; s = ∞ selects the sup over heights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NormParamsDoc", into = "NormParamsDoc")]
pub struct NormParams {
    p: f64,
    s: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NormParamsDoc {
    #[serde(with = "crate::ext_real")]
    p: f64,
    #[serde(with = "crate::ext_real")]
    s: f64,
}

impl TryFrom<NormParamsDoc> for NormParams {
    type Error = Error;

    fn try_from(d: NormParamsDoc) -> Result<Self> {
        NormParams::new(d.p, d.s)
    }
}

impl From<NormParams> for NormParamsDoc {
    fn from(n: NormParams) -> Self {
        NormParamsDoc { p: n.p, s: n.s }
    }
}

impl NormParams {
    pub fn new(p: f64, s: f64) -> Result<Self> {
        if !(p > 0.0) || !(s > 0.0) {
            return Err(Error::BadParameters(format!("norm exponents p = {p}, s = {s} must be positive")));
        }
        if p.is_infinite() && s.is_finite() {
            return Err(Error::BadParameters("p = ∞ requires s = ∞".into()));
        }
        Ok(NormParams { p, s })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn regime(&self) -> Regime {
        match (self.p.is_finite(), self.s.is_finite()) {
            (true, true) => Regime::FiniteFinite,
            (true, false) => Regime::PFiniteSInf,
            _ => Regime::BothInf,
        }
    }

    /// The conjugate exponent p/(p-1) for 1 < p < ∞.
    pub fn conjugate(&self) -> Option<f64> {
        (self.p > 1.0 && self.p.is_finite()).then(|| self.p / (self.p - 1.0))
    }
}

/// An x-integral of one slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceNorm {
    pub value: f64,
    pub error: f64,
}

/// Per-axis node cap for sup-norm grids, by dimension.
const SUP_AXIS_CAP: [usize; 3] = [usize::MAX, 512, 128];

fn unit_scale(f: &TubeFunction) -> TubeFunction {
    TubeFunction { scale: 1.0, ..f.clone() }
}

/// (∫|F(x+iy)|^p dx)^{1/p}, or the grid sup for p = ∞.
pub fn slice_norm(f: &TubeFunction, y: &[f64], p: f64, q: &QuadSpec) -> Result<SliceNorm> {
    if y.len() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: y.len() });
    }
    if !f.valid_height(y) {
        return Err(Error::NotInBase(y.to_vec()));
    }
    if !(p > 0.0) {
        return Err(Error::BadParameters(format!("slice exponent p = {p} must be positive")));
    }
    if f.is_zero() {
        return Ok(SliceNorm { value: 0.0, error: 0.0 });
    }
    let scale = f.scale.abs();
    let unit = unit_scale(f);
    let n = y.len();
    // x = c·ξ keeps the log grid centred on the slice width, which grows like |y|.
    let c = 1.0 + crate::cone_geometry::norm(y);
    let at = |xi: &[f64]| -> Result<f64> {
        let z: Vec<Complex64> = xi.iter().zip(y).map(|(&a, &b)| Complex64::new(c * a, b)).collect();
        Ok(unit.eval(&z, q)?.norm())
    };
    let rule = q.norm_grid.rule();
    if p.is_infinite() {
        let nodes = rule.nodes();
        let stride = (2 * nodes.len()).div_ceil(SUP_AXIS_CAP[(n - 1).min(2)]).max(1);
        let mut axis: Vec<f64> = vec![0.0];
        for r in nodes.iter().step_by(stride) {
            axis.push(*r);
            axis.push(-r);
        }
        let total = axis.len().pow(n as u32);
        let vals = par::map_range(total, |idx| {
            let mut rem = idx;
            let x: Vec<f64> = (0..n)
                .map(|_| {
                    let v = axis[rem % axis.len()];
                    rem /= axis.len();
                    v
                })
                .collect();
            at(&x)
        });
        let mut best = 0.0f64;
        for v in vals {
            best = best.max(v?);
        }
        return Ok(SliceNorm { value: best * scale, error: 0.0 });
    }
    let failed = std::sync::Mutex::new(None);
    let res = integrate_rn(n, &rule, |x| match at(x) {
        Ok(v) => v.powf(p),
        Err(e) => {
            failed.lock().unwrap_or_else(|e| e.into_inner()).get_or_insert(e);
            f64::NAN
        }
    });
    if let Some(e) = failed.into_inner().unwrap_or_else(|e| e.into_inner()) {
        return Err(e);
    }
    if res.diverges() || !res.value.is_finite() {
        return Err(Error::SliceTailTooLarge { y: y.to_vec(), ratio: res.edge_ratio() });
    }
    let jac = c.powi(n as i32);
    let (integral, err) = (res.value * jac, res.error * jac);
    let value = integral.max(0.0).powf(1.0 / p);
    let error = if integral > 0.0 { value / p * err / integral } else { err.powf(1.0 / p) };
    Ok(SliceNorm { value: value * scale, error: error * scale })
}

/// A mixed-norm value with its discretization data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub value: f64,
    pub regime: Regime,
    pub error: f64,
    /// Range of log|y| explored on unbounded cone bases.
    pub log_radius: Option<(f64, f64)>,
    pub heights: usize,
    /// The weight factor hit the exponent clamp somewhere.
    pub saturated: bool,
}

/// ‖F‖_{A^{p,s}(B,ψ)} in the regime selected by `np`.
pub fn mixed_norm(
    f: &TubeFunction,
    base: &BaseRegion,
    w: &WeightFn,
    np: NormParams,
    q: &QuadSpec,
) -> Result<NormReport> {
    if base.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: base.dim() });
    }
    let regime = np.regime();
    if f.is_zero() {
        return Ok(NormReport { value: 0.0, regime, error: 0.0, log_radius: None, heights: 0, saturated: false });
    }
    let scale = f.scale.abs();
    let unit = unit_scale(f);
    let saturated = AtomicBool::new(false);
    let (p, s) = (np.p, np.s);
    let report = match regime {
        Regime::FiniteFinite => {
            let integral = integrate_base(base, &q.y_sampler, |y| {
                let sn = slice_norm(&unit, y, p, q)?;
                let fac = w.factor(y, p * s)?;
                if fac.saturated {
                    saturated.store(true, Ordering::Relaxed);
                }
                let inner = sn.value.powf(p * s);
                let err = if sn.value > 0.0 { inner * p * s * sn.error / sn.value } else { 0.0 };
                Ok((inner * fac.value, err * fac.value))
            })?;
            let value = integral.value.max(0.0).powf(1.0 / (s * p));
            let error = if integral.value > 0.0 { value / (s * p) * integral.error / integral.value } else { 0.0 };
            NormReport {
                value,
                regime,
                error,
                log_radius: integral.log_radius,
                heights: integral.nodes,
                saturated: false,
            }
        }
        Regime::PFiniteSInf | Regime::BothInf => {
            let ys = sample_base(base, &q.y_sampler)?;
            let pe = if regime == Regime::BothInf { f64::INFINITY } else { p };
            let vals = par::map_slice(&ys, |y| -> Result<(f64, f64)> {
                let sn = slice_norm(&unit, y, pe, q)?;
                let fac = w.factor(y, 1.0)?;
                if fac.saturated {
                    saturated.store(true, Ordering::Relaxed);
                }
                Ok((sn.value * fac.value, sn.error * fac.value))
            });
            let mut best = (0.0f64, 0.0f64);
            for v in vals {
                let v = v?;
                if v.0 > best.0 {
                    best = v;
                }
            }
            NormReport { value: best.0, regime, error: best.1, log_radius: None, heights: ys.len(), saturated: false }
        }
    };
    Ok(NormReport {
        value: report.value * scale,
        error: report.error * scale,
        saturated: saturated.into_inner(),
        ..report
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone_geometry::ConeSpec;
    use std::f64::consts::PI;
    use crate::spectral_models::SpectralDensity;
    use crate::weights::WeightKind;

    fn trunc_exp() -> TubeFunction {
        TubeFunction::closed_form(SpectralDensity::truncated_exponential_1d(1.0, 0).unwrap())
    }

    fn half_line() -> BaseRegion {
        BaseRegion::cone(ConeSpec::orthant(1)).unwrap()
    }

    #[test]
    fn slice_norm_examples() {
        let q = QuadSpec::default();
        let v = slice_norm(&trunc_exp(), &[1.0], 2.0, &q).unwrap();
        assert!((v.value - (1.0 / (8.0 * PI)).sqrt()).abs() < 1e-9, "{v:?}");
        let v = slice_norm(&trunc_exp(), &[1.0], f64::INFINITY, &q).unwrap();
        assert!((v.value - 0.25 / PI).abs() < 1e-15);
        let g = TubeFunction::synthesized(SpectralDensity::gaussian(vec![0.0], 1.0).unwrap(), q.clone());
        let v = slice_norm(&g, &[0.0], 2.0, &q).unwrap();
        assert!((v.value - 2f64.powf(-0.25)).abs() < 1e-9, "{v:?}");
    }

    #[test]
    fn non_integrable_slice_is_reported() {
        let q = QuadSpec::default();
        assert!(matches!(slice_norm(&trunc_exp(), &[1.0], 1.0, &q), Err(Error::SliceTailTooLarge { .. })));
        let c = TubeFunction::constant(1, Complex64::new(1.0, 0.0), None);
        assert!(matches!(slice_norm(&c, &[1.0], 2.0, &q), Err(Error::SliceTailTooLarge { .. })));
    }

    #[test]
    fn bergman_norm_truncated_and_full_cone() {
        let q = QuadSpec::default();
        let w = WeightFn::new(WeightKind::LogPower { alpha: -0.5 }, half_line()).unwrap();
        let np = NormParams::new(2.0, 1.0).unwrap();
        let full = mixed_norm(&trunc_exp(), &half_line(), &w, np, &q).unwrap();
        assert!((full.value - 0.5).abs() < 1e-3 * 0.5, "{full:?}");
        let trunc = BaseRegion::truncated_cone(ConeSpec::orthant(1), 1e-3, 50.0).unwrap();
        let part = mixed_norm(&trunc_exp(), &trunc, &w, np, &q).unwrap();
        let exact = ((50f64.sqrt().atan() - 1e-3f64.sqrt().atan()) / (2.0 * PI)).sqrt();
        assert!((part.value - exact).abs() < 1e-3 * exact, "{} {exact}", part.value);
    }

    #[test]
    fn zero_function_has_zero_norm() {
        let q = QuadSpec::default();
        let z = TubeFunction::closed_form(SpectralDensity::zero(1).unwrap());
        let w = WeightFn::zero(half_line());
        for (p, s) in [(2.0, 1.0), (2.0, f64::INFINITY), (f64::INFINITY, f64::INFINITY)] {
            let r = mixed_norm(&z, &half_line(), &w, NormParams::new(p, s).unwrap(), &q).unwrap();
            assert_eq!(r.value, 0.0);
        }
    }

    #[test]
    fn homogeneity_is_exact() {
        let q = QuadSpec::default();
        let base = BaseRegion::truncated_cone(ConeSpec::orthant(1), 0.1, 5.0).unwrap();
        let w = WeightFn::zero(half_line());
        for (p, s) in [(2.0, 1.0), (1.5, f64::INFINITY), (f64::INFINITY, f64::INFINITY)] {
            let np = NormParams::new(p, s).unwrap();
            let a = mixed_norm(&trunc_exp(), &base, &w, np, &q).unwrap().value;
            let b = mixed_norm(&trunc_exp().scaled(-3.0), &base, &w, np, &q).unwrap().value;
            assert_eq!(b, 3.0 * a);
        }
    }

    #[test]
    fn sup_regimes() {
        let q = QuadSpec::default();
        let base = BaseRegion::new_box(vec![0.2], vec![1.0]).unwrap();
        let w = WeightFn::zero(half_line());
        let both = mixed_norm(&trunc_exp(), &base, &w, NormParams::new(f64::INFINITY, f64::INFINITY).unwrap(), &q)
            .unwrap();
        // |F| is largest at x = 0 and the smallest sampled height.
        let ys = sample_base(&base, &q.y_sampler).unwrap();
        let ymin = ys.iter().map(|y| y[0]).fold(f64::INFINITY, f64::min);
        assert!((both.value - 1.0 / (2.0 * PI * (1.0 + ymin))).abs() < 1e-14);
        let ps = mixed_norm(&trunc_exp(), &base, &w, NormParams::new(2.0, f64::INFINITY).unwrap(), &q).unwrap();
        assert!((ps.value - (1.0 / (4.0 * PI * (1.0 + ymin))).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn divergent_bergman_side_is_reported() {
        let q = QuadSpec::default();
        let w = WeightFn::new(WeightKind::LogPower { alpha: 0.5 }, half_line()).unwrap();
        let r = mixed_norm(&trunc_exp(), &half_line(), &w, NormParams::new(2.0, 1.0).unwrap(), &q);
        assert!(matches!(r, Err(Error::DivergentNorm(_))), "{r:?}");
    }

    #[test]
    fn params_validate_and_serialize() {
        assert!(NormParams::new(0.0, 1.0).is_err());
        assert!(NormParams::new(f64::INFINITY, 1.0).is_err());
        let np = NormParams::new(3.0, f64::INFINITY).unwrap();
        assert_eq!(np.regime(), Regime::PFiniteSInf);
        assert_eq!(np.conjugate(), Some(1.5));
        let s = serde_json::to_string(&np).unwrap();
        assert_eq!(s, r#"{"p":3.0,"s":"inf"}"#);
        assert_eq!(serde_json::from_str::<NormParams>(&s).unwrap(), np);
    }
}
