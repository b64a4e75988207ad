//! ‖F‖_{A²_α(T_Γ)} = ‖f‖_{L²_{α+1}(Γ*)}.

use serde_json::json;

use super::{tube_of, CheckResult};
use crate::cone_geometry::{BaseRegion, ConeSpec};
use crate::mixed_norms::{dual_weighted_norm, mixed_norm, DualInput, NormParams};
use crate::spectral_models::SpectralDensity;
use crate::transforms::QuadSpec;
use crate::weights::{WeightFn, WeightKind};
use crate::{Error, Result};

/// Compares the Bergman norm with weight |y|^α and the dual-side norm of f
/// with kernel K_α. Passes when the relative difference is at most tol_rel.
pub fn check_cor2_isometry(f: &SpectralDensity, alpha: f64, cone: &ConeSpec, q: &QuadSpec) -> Result<CheckResult> {
    if !(alpha > -1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let base = BaseRegion::cone(cone.clone())?;
    let w = WeightFn::new(WeightKind::LogPower { alpha }, base.clone())?;
    let tube = tube_of(f, q).with_base(base.clone());
    let bergman = mixed_norm(&tube, &base, &w, NormParams::new(2.0, 1.0)?, q)?;
    let dual = dual_weighted_norm(DualInput::Model(f), alpha, cone, q)?;
    let scale = bergman.value.abs().max(dual.abs());
    let rel = if scale > 0.0 { (bergman.value - dual).abs() / scale } else { 0.0 };
    let instance = json!({ "density": f, "alpha": alpha, "cone": cone });
    Ok(CheckResult::compare("cor2_isometry", instance, vec![rel], vec![q.tol_rel], q.tol_abs)
        .with("bergman_norm", bergman.value)
        .with("bergman_error", bergman.error)
        .with("dual_norm", dual)
        .with("relative_difference", rel))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_integral_examples() {
        let q = QuadSpec::default();
        let c = ConeSpec::orthant(1);
        for (a, exact) in [(1.0, 0.5), (4.0, 0.125f64.sqrt())] {
            let f = SpectralDensity::truncated_exponential_1d(a, 0).unwrap();
            let r = check_cor2_isometry(&f, -0.5, &c, &q).unwrap();
            assert!(r.passed, "{r:?}");
            for key in ["bergman_norm", "dual_norm"] {
                let v = r.diagnostics[key].as_f64().unwrap();
                assert!((v - exact).abs() < 1e-3 * exact, "{key} {v} {exact}");
            }
        }
    }

    #[test]
    fn divergent_bergman_side_is_an_error() {
        let q = QuadSpec::default();
        let f = SpectralDensity::truncated_exponential_1d(1.0, 0).unwrap();
        let r = check_cor2_isometry(&f, 0.5, &ConeSpec::orthant(1), &q);
        assert!(matches!(r, Err(Error::DivergentNorm(_))), "{r:?}");
        assert!(matches!(
            check_cor2_isometry(&f, -1.0, &ConeSpec::orthant(1), &q),
            Err(Error::AlphaOutOfRange(_))
        ));
    }
}
