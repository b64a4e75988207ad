//! Slow growth of |f(t)| against the cone factor for 0 < p < 1.

use std::f64::consts::PI;

use serde_json::json;

use super::{density_abs, density_json, log_weight_integral, CheckResult, Trace};
use crate::cone_geometry::{norm, BaseRegion, ConeSpec};
use crate::mixed_norms::DualInput;
use crate::numerics::ls_slope;
use crate::transforms::QuadSpec;
use crate::weights::{WeightFn, WeightKind};
use crate::{Error, Result};

/// Slack on the fitted exponent for logarithmic contamination.
pub const GROWTH_SLACK: f64 = 0.25;

fn inv(s: f64) -> f64 {
    if s.is_finite() {
        1.0 / s
    } else {
        0.0
    }
}

/// n(1/p - 1)(1/s + 1).
pub fn growth_exponent(n: usize, p: f64, s: f64) -> f64 {
    n as f64 * (1.0 / p - 1.0) * (inv(s) + 1.0)
}

/// n(1-p)(1+s)/(sp), the coefficient of -log(ερ) in J.
fn log_coefficient(n: usize, p: f64, s: f64) -> f64 {
    n as f64 * (1.0 - p) * (1.0 + inv(s)) / p
}

fn check_params(p: f64, s: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::BadParameters(format!("p = {p} must lie in (0, 1)")));
    }
    if !(s > 0.0) {
        return Err(Error::BadParameters(format!("s = {s} must be positive")));
    }
    Ok(())
}

/// J(ρ) = -(n(1-p)(1+s)/(sp))·log(ερ) + 2πR(1+ρ) + 2πρ|t|.
pub fn j_value(rho: f64, t_norm: f64, n: usize, p: f64, s: f64, r_psi: f64, eps: f64) -> f64 {
    -log_coefficient(n, p, s) * (eps * rho).ln() + 2.0 * PI * r_psi * (1.0 + rho) + 2.0 * PI * rho * t_norm
}

/// The minimizer ρ* = n(1-p)(1+s)/(2spπ(R+|t|)) and J(ρ*).
pub fn j_optimum(t: &[f64], n: usize, p: f64, s: f64, r_psi: f64, epsilon_v: f64) -> Result<(f64, f64)> {
    check_params(p, s)?;
    if !(epsilon_v > 0.0) || !(r_psi >= 0.0) {
        return Err(Error::BadParameters("epsilon_v must be positive and R nonnegative".into()));
    }
    let tn = norm(t);
    if !(r_psi + tn > 0.0) {
        return Err(Error::BadParameters("R + |t| must be positive".into()));
    }
    let rho = log_coefficient(n, p, s) / (2.0 * PI * (r_psi + tn));
    Ok((rho, j_value(rho, tn, n, p, s, r_psi, epsilon_v)))
}

/// Rays of the dual cone along which |f| is sampled. In dimension two and
/// up, the rays are pulled into the interior so the cone factor is finite.
fn dual_rays(cone: &ConeSpec) -> Result<Vec<Vec<f64>>> {
    let dual = cone.dual()?;
    let unit: Vec<Vec<f64>> = dual
        .generators()
        .iter()
        .map(|g| {
            let l = norm(g);
            g.iter().map(|v| v / l).collect()
        })
        .collect();
    if cone.dim() == 1 {
        return Ok(unit);
    }
    let n = cone.dim();
    let mut center = vec![0.0; n];
    for g in &unit {
        for (c, v) in center.iter_mut().zip(g) {
            *c += v;
        }
    }
    let normalize = |v: Vec<f64>| -> Vec<f64> {
        let l = norm(&v);
        v.iter().map(|x| x / l).collect()
    };
    let center = normalize(center);
    let mut rays = vec![center.clone()];
    for g in &unit {
        rays.push(normalize(g.iter().zip(&center).map(|(a, b)| a + b).collect()));
    }
    Ok(rays)
}

/// Fits log G(t) against log(1+|t|) along dual rays, where
/// G(t) = |f(t)|·(∫_Γ e^{-2sπ(y·t+R|y|)} dy)^{1/s}.
#[allow(clippy::too_many_arguments)]
pub fn check_cor1_growth(
    f: DualInput<'_>,
    cone: &ConeSpec,
    r_psi: f64,
    p: f64,
    s: f64,
    radii: &[f64],
    q: &QuadSpec,
) -> Result<CheckResult> {
    check_params(p, s)?;
    if radii.len() < 3 {
        return Err(Error::InsufficientDecayWindow(format!("{} radii, need at least 3", radii.len())));
    }
    let base = BaseRegion::cone(cone.clone())?;
    let w = WeightFn::new(WeightKind::Linear { r: r_psi }, base.clone())?;
    let target = growth_exponent(cone.dim(), p, s);
    let mut fitted = f64::NEG_INFINITY;
    let mut best_constant = 0.0f64;
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for (k, e) in dual_rays(cone)?.iter().enumerate() {
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for &r in radii {
            let t: Vec<f64> = e.iter().map(|v| r * v).collect();
            let ft = density_abs(f, &t)?;
            let g = if ft == 0.0 { 0.0 } else { (ft.ln() + log_weight_integral(&t, s, &base, &w, q)?).exp() };
            rows.push(vec![k as f64, r, g]);
            if g > 0.0 && g.is_finite() {
                xs.push((1.0 + r).ln());
                ys.push(g.ln());
                best_constant = best_constant.max(g / (1.0 + r).powf(target));
            }
        }
        if xs.len() >= 2 {
            let slope = ls_slope(&xs, &ys);
            fits.push(slope);
            fitted = fitted.max(slope);
        }
    }
    let degenerate = fits.is_empty();
    let (lhs, rhs) = if degenerate { (vec![], vec![]) } else { (vec![fitted], vec![target + GROWTH_SLACK]) };
    let instance = json!({ "cone": cone, "R_psi": r_psi, "p": p, "s": if s.is_finite() { json!(s) } else { json!("inf") },
        "radii": radii, "density": density_json(f) });
    Ok(CheckResult::compare("cor1_growth", instance, lhs, rhs, q.tol_abs)
        .with("target_exponent", target)
        .with("ray_exponents", fits)
        .with("best_constant", best_constant)
        .with("degenerate_fit", degenerate)
        .trace(Trace::new("growth", &["ray", "radius", "G"], rows)))
}
