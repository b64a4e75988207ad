//! The dual-side norm (∫_{Γ*} |f(t)|² K_α(t) dt)^{1/2} with
//! K_α(t) = ∫_Γ e^{-4πy·t} |y|^α dy.

use std::f64::consts::PI;

use super::base_quad::cone_directions;
use crate::cone_geometry::{dot, norm, ConeSpec};
use crate::numerics::{gamma, integrate_half_line, pairwise_sum};
use crate::spectral_models::SpectralDensity;
use crate::transforms::{QuadSpec, RecoveredDensity};
use crate::{Error, Result};

/// A density given by a model or by recovered samples (n = 1 only).
#[derive(Debug, Clone, Copy)]
pub enum DualInput<'a> {
    Model(&'a SpectralDensity),
    Samples(&'a RecoveredDensity),
}

/// K_α(t). The radial part is Γ(α+n)/(4π e·t)^{α+n} along each ray y = ρe,
/// so only the angular integral is numerical (n >= 2).
pub fn dual_kernel(t: &[f64], alpha: f64, cone: &ConeSpec, q: &QuadSpec) -> Result<f64> {
    if !(alpha > -1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let n = cone.dim();
    if t.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: t.len() });
    }
    let k = alpha + n as f64;
    let g = gamma(k);
    let dirs = cone_directions(cone, &q.y_sampler)?;
    let mut terms = Vec::with_capacity(dirs.len());
    for d in &dirs {
        let et = dot(&d.e, t);
        if !(et > 0.0) {
            return Err(Error::KernelDivergence(t.to_vec()));
        }
        terms.push(d.weight * norm(&d.e).powf(alpha) * g / (4.0 * PI * et).powf(k));
    }
    Ok(pairwise_sum(&terms))
}

/// (∫_{Γ*} |f(t)|² K_α(t) dt)^{1/2}.
pub fn dual_weighted_norm(f: DualInput<'_>, alpha: f64, cone: &ConeSpec, q: &QuadSpec) -> Result<f64> {
    if !(alpha > -1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let dual = cone.dual()?;
    if dual.is_trivial() || dual.simplicial_pieces().is_empty() {
        return Err(Error::BadParameters("the dual cone has empty interior".into()));
    }
    match f {
        DualInput::Model(f) => {
            if f.dim() != cone.dim() {
                return Err(Error::DimensionMismatch { expected: cone.dim(), got: f.dim() });
            }
            if f.is_zero() {
                return Ok(0.0);
            }
            model_norm(f, alpha, cone, &dual, q)
        }
        DualInput::Samples(r) => samples_norm(r, alpha, cone),
    }
}

fn model_norm(f: &SpectralDensity, alpha: f64, cone: &ConeSpec, dual: &ConeSpec, q: &QuadSpec) -> Result<f64> {
    let n = cone.dim();
    let rule = q.norm_grid.rule();
    let dirs = cone_directions(dual, &q.y_sampler)?;
    let mut total = Vec::with_capacity(dirs.len());
    for d in &dirs {
        let failure = std::sync::Mutex::new(None);
        let res = integrate_half_line(&rule, |r| {
            let t: Vec<f64> = d.e.iter().map(|e| r * e).collect();
            let fv = match f.eval(&t) {
                Ok(v) => v,
                Err(e) => {
                    failure.lock().unwrap_or_else(|e| e.into_inner()).get_or_insert(e);
                    return f64::NAN;
                }
            };
            if fv == 0.0 {
                return 0.0;
            }
            match dual_kernel(&t, alpha, cone, q) {
                Ok(k) => fv * fv * k * r.powi(n as i32 - 1),
                Err(e) => {
                    failure.lock().unwrap_or_else(|e| e.into_inner()).get_or_insert(e);
                    f64::NAN
                }
            }
        });
        if let Some(e) = failure.into_inner().unwrap_or_else(|e| e.into_inner()) {
            return Err(e);
        }
        if res.diverges() || !res.value.is_finite() {
            return Err(Error::KernelDivergence(vec![0.0; n]));
        }
        total.push(res.value * d.weight);
    }
    Ok(pairwise_sum(&total).max(0.0).sqrt())
}

/// Cell sums over trusted samples; each cell integrates K exactly and the
/// first cell absorbs [0, Δt/2], where f is taken from its first interior
/// sample.
fn samples_norm(r: &RecoveredDensity, alpha: f64, cone: &ConeSpec) -> Result<f64> {
    if r.dim != 1 || cone.dim() != 1 {
        return Err(Error::BadParameters("sampled dual norms are one-dimensional".into()));
    }
    let sign = if cone.contains(&[1.0], false)? { 1.0 } else { -1.0 };
    let dt = r.grid.dt();
    let b = alpha + 1.0;
    let c = gamma(b) * (4.0 * PI).powf(-b);
    // ∫_a^b K(t) dt for 0 <= a < b.
    let cell = |a: f64, bb: f64| -> f64 {
        if alpha == 0.0 {
            if a == 0.0 {
                f64::INFINITY
            } else {
                c * (bb / a).ln()
            }
        } else {
            c * (bb.powf(-alpha) - a.powf(-alpha)) / (-alpha)
        }
    };
    let mut terms = Vec::new();
    for i in 0..r.len() {
        let t = sign * r.t_axis[i];
        if !(t > 0.5 * dt) || !r.trusted[i] {
            continue;
        }
        let lo = if t < 1.5 * dt { 0.0 } else { t - 0.5 * dt };
        let k = cell(lo, t + 0.5 * dt);
        let v = r.values[i].norm_sqr();
        if v == 0.0 {
            continue;
        }
        if !k.is_finite() {
            return Err(Error::KernelDivergence(vec![0.0]));
        }
        terms.push(v * k);
    }
    Ok(pairwise_sum(&terms).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::{recover_density, TubeFunction};

    #[test]
    fn one_dimensional_kernel_closed_form() {
        let q = QuadSpec::default();
        let c = ConeSpec::orthant(1);
        for (t, a) in [(0.5, -0.5), (2.0, 0.3), (1.0, 0.0)] {
            let k = dual_kernel(&[t], a, &c, &q).unwrap();
            let exact = gamma(a + 1.0) / (4.0 * PI * t).powf(a + 1.0);
            assert!((k - exact).abs() < 1e-14 * exact);
        }
        assert!(matches!(dual_kernel(&[-1.0], -0.5, &c, &q), Err(Error::KernelDivergence(_))));
        assert!(matches!(dual_kernel(&[1.0], -1.0, &c, &q), Err(Error::AlphaOutOfRange(_))));
    }

    #[test]
    fn quadrant_kernel_factorizes_at_alpha_zero() {
        // K_0(t) = 1/((4π)² t1 t2) on the quadrant.
        let q = QuadSpec::default();
        let k = dual_kernel(&[0.5, 2.0], 0.0, &ConeSpec::orthant(2), &q).unwrap();
        let exact = 1.0 / (16.0 * PI * PI);
        assert!((k - exact).abs() < 1e-10 * exact, "{k} {exact}");
    }

    #[test]
    fn beta_integral_examples() {
        let q = QuadSpec::default();
        let c = ConeSpec::orthant(1);
        for (a, exact) in [(1.0, 0.5), (4.0, 0.125f64.sqrt())] {
            let f = SpectralDensity::truncated_exponential_1d(a, 0).unwrap();
            let v = dual_weighted_norm(DualInput::Model(&f), -0.5, &c, &q).unwrap();
            assert!((v - exact).abs() < 1e-8 * exact, "{v} {exact}");
        }
        let z = SpectralDensity::zero(1).unwrap();
        assert_eq!(dual_weighted_norm(DualInput::Model(&z), -0.5, &c, &q).unwrap(), 0.0);
    }

    #[test]
    fn sampled_density_agrees_with_model() {
        let q = QuadSpec::default();
        let f = SpectralDensity::truncated_exponential_1d(1.0, 0).unwrap();
        let r = recover_density(&TubeFunction::closed_form(f), &[0.5], &q).unwrap();
        let v = dual_weighted_norm(DualInput::Samples(&r), -0.5, &ConeSpec::orthant(1), &q).unwrap();
        assert!((v - 0.5).abs() < 1e-3 * 0.5, "{v}");
    }
}
