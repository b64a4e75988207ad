//! Tri-state membership in U_α(B,ψ) = {t : ∫_B e^{-2πα(t·y+ψ(y))} dy < ∞}.

use std::f64::consts::PI;

use serde::Serialize;

use super::base_quad::{cone_directions, integrate_base};
use crate::cone_geometry::{dot, norm, BaseRegion};
use crate::transforms::QuadSpec;
use crate::weights::{WeightFn, WeightKind};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Converges,
    Diverges,
    Inconclusive,
}

/// Ray-asymptotic data behind a verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RayCertificate {
    /// min over sampled unit rays e of t·e + R_ψ(e).
    pub min_exponent: Option<f64>,
    pub worst_direction: Option<Vec<f64>>,
    pub rays: usize,
    /// The integral itself, for bounded bases.
    pub integral: Option<f64>,
    /// Whether the integrand is integrable at the apex (cones with rho_min = 0).
    pub apex_integrable: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportSetQuery {
    #[serde(with = "crate::ext_real")]
    pub alpha: f64,
    pub base: BaseRegion,
    pub weight: WeightFn,
    pub t: Vec<f64>,
    pub verdict: Verdict,
    pub certificate: RayCertificate,
}

/// Classify t against U_α(B,ψ); α = ∞ selects the inf-type set.
pub fn support_membership(
    t: &[f64],
    alpha: f64,
    base: &BaseRegion,
    w: &WeightFn,
    q: &QuadSpec,
) -> Result<SupportSetQuery> {
    if !(alpha > 0.0) {
        return Err(Error::BadParameters(format!("support exponent α = {alpha} must be positive")));
    }
    if t.len() != base.dim() {
        return Err(Error::DimensionMismatch { expected: base.dim(), got: t.len() });
    }
    let n = base.dim();
    let done = |verdict, certificate| SupportSetQuery {
        alpha,
        base: base.clone(),
        weight: w.clone(),
        t: t.to_vec(),
        verdict,
        certificate,
    };
    let (cone, rho_min) = match base {
        BaseRegion::TruncatedCone { cone, rho_min, rho_max } if !rho_max.is_finite() => (cone, *rho_min),
        _ => {
            // Bounded region: the integrand is continuous on its closure.
            let integral = if alpha.is_finite() {
                Some(
                    integrate_base(base, &q.y_sampler, |y| {
                        let e = -2.0 * PI * alpha * (dot(t, y) + w.eval_unchecked(y)?);
                        Ok((e.exp(), 0.0))
                    })?
                    .value,
                )
            } else {
                None
            };
            let cert = RayCertificate {
                min_exponent: None,
                worst_direction: None,
                rays: 0,
                integral,
                apex_integrable: None,
            };
            return Ok(done(Verdict::Converges, cert));
        }
    };
    let slope = w.support_slope(q.tabulated_slope_margin);
    let mut rays: Vec<Vec<f64>> = cone_directions(cone, &q.y_sampler)?
        .into_iter()
        .map(|d| {
            let l = norm(&d.e);
            d.e.iter().map(|v| v / l).collect()
        })
        .collect();
    for g in cone.generators() {
        let l = norm(g);
        rays.push(g.iter().map(|v| v / l).collect());
    }
    let mut min_exp = f64::INFINITY;
    let mut worst = rays[0].clone();
    for e in &rays {
        let lam = dot(t, e) + slope;
        if lam < min_exp {
            min_exp = lam;
            worst = e.clone();
        }
    }
    // LogPower weights contribute ρ^{α·a/2} at the apex; dy adds ρ^{n-1}.
    let apex = match w.kind() {
        WeightKind::LogPower { alpha: a } if rho_min == 0.0 && alpha.is_finite() => Some(alpha * a / 2.0 + n as f64 > 0.0),
        _ => None,
    };
    let m = q.support_margin;
    let verdict = if apex == Some(false) || min_exp < -m {
        Verdict::Diverges
    } else if min_exp > m {
        Verdict::Converges
    } else {
        Verdict::Inconclusive
    };
    let cert = RayCertificate {
        min_exponent: Some(min_exp),
        worst_direction: Some(worst),
        rays: rays.len(),
        integral: None,
        apex_integrable: apex,
    };
    Ok(done(verdict, cert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone_geometry::ConeSpec;

    fn setup() -> (BaseRegion, WeightFn, QuadSpec) {
        let b = BaseRegion::cone(ConeSpec::orthant(1)).unwrap();
        (b.clone(), WeightFn::zero(b), QuadSpec::default())
    }

    #[test]
    fn half_line_examples() {
        let (b, w, q) = setup();
        let v = |t: f64| support_membership(&[t], 1.0, &b, &w, &q).unwrap().verdict;
        assert_eq!(v(1.0), Verdict::Converges);
        assert_eq!(v(-1.0), Verdict::Diverges);
        assert_eq!(v(0.0), Verdict::Inconclusive);
    }

    #[test]
    fn linear_weight_widens_the_set() {
        let (b, _, q) = setup();
        let w = WeightFn::new(WeightKind::Linear { r: 0.5 }, b.clone()).unwrap();
        let v = |t: f64| support_membership(&[t], 2.0, &b, &w, &q).unwrap().verdict;
        assert_eq!(v(-0.4), Verdict::Converges);
        assert_eq!(v(-0.6), Verdict::Diverges);
        let inf = support_membership(&[-0.4], f64::INFINITY, &b, &w, &q).unwrap();
        assert_eq!(inf.verdict, Verdict::Converges);
    }

    #[test]
    fn bounded_bases_always_converge() {
        let (_, w, q) = setup();
        let b = BaseRegion::new_box(vec![0.5], vec![1.5]).unwrap();
        let r = support_membership(&[-3.0], 1.0, &b, &w, &q).unwrap();
        assert_eq!(r.verdict, Verdict::Converges);
        let exact = ((6.0 * PI * 1.5).exp() - (6.0 * PI * 0.5).exp()) / (6.0 * PI);
        assert!((r.certificate.integral.unwrap() - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn planar_cone_uses_worst_ray() {
        let q = QuadSpec::default();
        let b = BaseRegion::cone(ConeSpec::orthant(2)).unwrap();
        let w = WeightFn::zero(b.clone());
        assert_eq!(support_membership(&[1.0, 0.2], 1.0, &b, &w, &q).unwrap().verdict, Verdict::Converges);
        assert_eq!(support_membership(&[1.0, -0.2], 1.0, &b, &w, &q).unwrap().verdict, Verdict::Diverges);
        assert_eq!(support_membership(&[1.0, 0.0], 1.0, &b, &w, &q).unwrap().verdict, Verdict::Inconclusive);
    }

    #[test]
    fn apex_singularity_diverges() {
        let (b, _, q) = setup();
        let w = WeightFn::new(WeightKind::LogPower { alpha: -4.0 }, b.clone()).unwrap();
        let r = support_membership(&[1.0], 1.0, &b, &w, &q).unwrap();
        assert_eq!(r.verdict, Verdict::Diverges);
        assert_eq!(r.certificate.apex_integrable, Some(false));
    }
}
