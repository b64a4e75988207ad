//! Gluing across opposite wedges for densities supported in
//! K = (Γ* + D̄(0,R)) ∩ (-Γ* + D̄(0,R)).

use num_complex::Complex64;
use serde_json::json;

use super::{tube_of, CheckResult, Trace};
use crate::cone_geometry::ConeSpec;
use crate::numerics::integrate_line;
use crate::spectral_models::{SpectralDensity, Support};
use crate::transforms::{compare_recoveries, recover_density, QuadSpec, TubeFunction};
use crate::weights::WeightFn;
use crate::{Error, Result};

fn dual_distance(cone: &ConeSpec, t: &[f64]) -> Result<f64> {
    Ok(cone.project_onto_dual(t)?.dist)
}

/// Whether a support descriptor lies inside K for the slope R.
pub fn wedge_set_contains(support: &Support, cone: &ConeSpec, r: f64) -> Result<bool> {
    let slack = 1e-12 * (1.0 + r);
    let inside = |t: &[f64], radius: f64| -> Result<bool> {
        let neg: Vec<f64> = t.iter().map(|v| -v).collect();
        Ok(dual_distance(cone, t)? <= radius + slack && dual_distance(cone, &neg)? <= radius + slack)
    };
    match support {
        Support::Empty => Ok(true),
        Support::DualCone(_) | Support::AllSpace => Ok(false),
        Support::Ball { center, radius } => Ok(*radius <= r && inside(center, r - radius)?),
        // K is convex, so the box is inside iff its vertices are.
        Support::Box { lo, hi } => {
            let n = lo.len();
            for mask in 0..(1usize << n) {
                let v: Vec<f64> = (0..n).map(|d| if mask >> d & 1 == 1 { hi[d] } else { lo[d] }).collect();
                if !inside(&v, r)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// ∫_{|x|≤L} |F(x+iy) - F(x-iy)|^k dx and a bound for the part beyond L.
fn slice_mismatch(tube: &TubeFunction, y: &[f64], k: f64, q: &QuadSpec) -> Result<(f64, f64)> {
    let l = q.slice_grid.half_width;
    let at = |x: f64| -> Result<f64> {
        let up = [Complex64::new(x, y[0])];
        let down = [Complex64::new(x, -y[0])];
        Ok((tube.eval(&up, q)? - tube.eval(&down, q)?).norm().powf(k))
    };
    let failed = std::sync::Mutex::new(None);
    let res = integrate_line(&q.norm_grid.rule(), |x| {
        if x.abs() > l {
            return 0.0;
        }
        at(x).unwrap_or_else(|e| {
            failed.lock().unwrap_or_else(|e| e.into_inner()).get_or_insert(e);
            f64::NAN
        })
    });
    if let Some(e) = failed.into_inner().unwrap_or_else(|e| e.into_inner()) {
        return Err(e);
    }
    let tail = 2.0 * l * at(l)?.max(at(-l)?);
    Ok((res.value, res.error + tail))
}

/// Slice mismatch on the ladder y → 0 and agreement of the densities
/// recovered from the two wedges. One dimension.
#[allow(clippy::too_many_arguments)]
pub fn check_edge_of_wedge(
    f: &SpectralDensity,
    cone: &ConeSpec,
    w1: &WeightFn,
    w2: &WeightFn,
    p: f64,
    s: f64,
    q: &QuadSpec,
) -> Result<CheckResult> {
    if cone.dim() != 1 || f.dim() != 1 {
        return Err(Error::BadParameters("the wedge check is one-dimensional".into()));
    }
    if !(p > 0.0) || !(s > 0.0) {
        return Err(Error::BadParameters("p and s must be positive".into()));
    }
    let r = w1.slope().max(w2.slope());
    let support = f.support();
    if !wedge_set_contains(&support, cone, r)? {
        return Err(Error::SupportNotInK(format!("{} with R = {r}", support.describe())));
    }
    let tube = tube_of(f, q);
    let k = if p <= 2.0 { p } else { 2.0 };
    let e = cone.generators()[0][0].signum();
    let mut ladder = Vec::new();
    for h in q.ladder.heights() {
        let (m, err) = slice_mismatch(&tube, &[h * e], k, q)?;
        ladder.push((h, m + err, err));
    }
    let mut lhs: Vec<f64> = ladder.windows(2).map(|w| w[1].1).collect();
    let mut rhs: Vec<f64> = ladder.windows(2).map(|w| w[0].1).collect();
    lhs.push(ladder.last().map_or(0.0, |v| v.1));
    rhs.push(q.tol_abs);
    let y0 = q.ladder.y0 * e;
    let a = recover_density(&tube, &[y0], q)?;
    let b = recover_density(&tube, &[-y0], q)?;
    let residual = compare_recoveries(&a, &b, Some(f), f64::INFINITY);
    let peak = (0..a.len()).filter(|&i| a.trusted[i]).map(|i| a.values[i].norm()).fold(0.0f64, f64::max);
    let mut model = 0.0f64;
    for i in (0..a.len()).filter(|&i| a.trusted[i]) {
        model = model.max((a.values[i].re - f.eval(&a.point(i))?).abs().max(a.values[i].im.abs()));
    }
    lhs.push(residual.value);
    rhs.push(q.tol_rel * peak);
    let instance = json!({ "density": f, "cone": cone, "w1": w1, "w2": w2, "p": p,
        "s": if s.is_finite() { json!(s) } else { json!("inf") } });
    let rows = ladder.iter().map(|&(h, m, err)| vec![h, m, err]).collect();
    Ok(CheckResult::compare("edge_of_wedge", instance, lhs, rhs, q.tol_abs)
        .with("R", r)
        .with("mismatch_exponent", k)
        .with("cross_wedge", residual)
        .with("max_abs_f", peak)
        .with("model_max_error", model)
        .with("ladder_policy", format!(
            "y = {}·2^-k, k = 0..={}, non-increasing and final value below tol_abs; x-window |x| <= {}",
            q.ladder.y0, q.ladder.steps, q.slice_grid.half_width
        ))
        .trace(Trace::new("mismatch_ladder", &["y", "mismatch", "error"], rows)))
}
