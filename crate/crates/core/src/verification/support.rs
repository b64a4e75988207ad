//! Support containment of recovered densities and the p > 2 recovery
//! pipeline.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{CheckResult, Trace};
use crate::cone_geometry::{norm, BaseRegion, ConeSpec};
use crate::mixed_norms::{slice_norm, support_membership, Verdict};
use crate::numerics::ls_slope;
use crate::transforms::{compare_recoveries, recover_density_mollified, MollifierForm, QuadSpec, RecoveredDensity, TubeFunction};
use crate::weights::WeightFn;
use crate::{Error, Result};

/// Largest |f| on trusted grid points outside Γ* + D̄(0, R + Δt√n), against
/// tol·max|f|.
pub fn check_support_containment(f: &RecoveredDensity, cone: &ConeSpec, r: f64, tol: f64) -> Result<CheckResult> {
    if cone.dim() != f.dim {
        return Err(Error::DimensionMismatch { expected: cone.dim(), got: f.dim });
    }
    let margin = f.grid.dt() * (f.dim as f64).sqrt();
    let mut peak = 0.0f64;
    let mut outside = 0.0f64;
    let mut worst: Option<Vec<f64>> = None;
    let mut checked = 0usize;
    for i in 0..f.len() {
        if !f.trusted[i] {
            continue;
        }
        let v = f.values[i].norm();
        peak = peak.max(v);
        if v > outside && !cone.in_dual_plus_ball(&f.point(i), r + margin)? {
            outside = v;
            worst = Some(f.point(i));
        }
        checked += 1;
    }
    let instance = json!({ "cone": cone, "R": r, "tol": tol, "y": f.y, "grid": f.grid });
    Ok(CheckResult::compare("support_containment", instance, vec![outside], vec![tol * peak], 0.0)
        .with("max_abs_f", peak)
        .with("geometric_margin", margin)
        .with("worst_point", worst)
        .with("trusted_points", checked))
}

/// Discretization choices of the p > 2 recovery check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thm3Options {
    /// Recovery heights as multiples of the unit interior direction of Γ.
    pub heights: [f64; 2],
    /// Mollifier power N.
    #[serde(rename = "N")]
    pub n_pow: u32,
    /// Mollifier directions; defaults to interior rays of Γ*.
    pub basis: Option<Vec<Vec<f64>>>,
    pub form: MollifierForm,
    /// The slice L² ladder counts as unbounded when log‖F_y‖₂ grows faster
    /// than this power of 1/y over its second half.
    pub ladder_slope_tol: f64,
}

impl Default for Thm3Options {
    fn default() -> Self {
        Thm3Options { heights: [0.5, 1.0], n_pow: 1, basis: None, form: MollifierForm::ProductLinear, ladder_slope_tol: 0.1 }
    }
}

fn unit(v: &[f64]) -> Vec<f64> {
    let l = norm(v);
    v.iter().map(|x| x / l).collect()
}

/// Normalized sum of the unit generators.
fn center_ray(gens: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n];
    for g in gens {
        for (a, b) in c.iter_mut().zip(unit(g)) {
            *a += b;
        }
    }
    unit(&c)
}

/// Interior rays of Γ*, one per simplicial generator.
fn default_basis(cone: &ConeSpec) -> Result<Vec<Vec<f64>>> {
    let dual = cone.dual()?;
    let n = cone.dim();
    if n == 1 {
        return Ok(vec![unit(&dual.generators()[0])]);
    }
    if dual.generators().len() != n {
        return Err(Error::BadBasis("the default basis needs a simplicial dual cone".into()));
    }
    let c = center_ray(dual.generators(), n);
    Ok(dual.generators().iter().map(|g| unit(&unit(g).iter().zip(&c).map(|(a, b)| a + b).collect::<Vec<_>>())).collect())
}

/// Slice L² norms on the ladder y = y0·2^{-k}·e; errors and growth are
/// reported as an unbounded ladder.
fn hardy_littlewood_ladder(big_f: &TubeFunction, e: &[f64], q: &QuadSpec, slope_tol: f64) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for h in q.ladder.heights() {
        let y: Vec<f64> = e.iter().map(|v| h * v).collect();
        let v = match slice_norm(big_f, &y, 2.0, q) {
            Ok(v) => v.value,
            Err(Error::SliceTailTooLarge { .. } | Error::DivergentSlice(_) | Error::DivergentNorm(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        if !v.is_finite() {
            return Err(Error::HardyLittlewoodUnbounded(format!("slice L2 norm diverges at height {h}")));
        }
        out.push((h, v));
    }
    let tail = &out[out.len() / 2..];
    let positive: Vec<&(f64, f64)> = tail.iter().filter(|p| p.1 > 0.0).collect();
    if positive.len() >= 2 {
        let xs: Vec<f64> = positive.iter().map(|p| p.0.ln()).collect();
        let ys: Vec<f64> = positive.iter().map(|p| p.1.ln()).collect();
        let slope = ls_slope(&xs, &ys);
        if slope < -slope_tol {
            return Err(Error::HardyLittlewoodUnbounded(format!(
                "slice L2 norms grow like y^{slope:.3} as y -> 0"
            )));
        }
    }
    Ok(out)
}

/// The p > 2 pipeline: bounded slice L² ladder, mollified recovery at two
/// heights, their agreement, and containment in U_{sp}(Γ,ψ).
#[allow(clippy::too_many_arguments)]
pub fn check_thm3_recovery(
    big_f: &TubeFunction,
    cone: &ConeSpec,
    w: &WeightFn,
    p: f64,
    s: f64,
    q: &QuadSpec,
    opts: &Thm3Options,
) -> Result<CheckResult> {
    if !(p > 2.0) {
        return Err(Error::BadParameters(format!("p = {p} must exceed 2")));
    }
    if !(s > 0.0) {
        return Err(Error::BadParameters(format!("s = {s} must be positive")));
    }
    let n = cone.dim();
    let instance = json!({ "cone": cone, "weight": w, "p": p, "s": if s.is_finite() { json!(s) } else { json!("inf") },
        "options": opts, "tube": big_f });
    if big_f.is_zero() {
        return Ok(CheckResult::compare("thm3_recovery", instance, vec![0.0, 0.0], vec![0.0, 0.0], q.tol_abs));
    }
    let e = center_ray(cone.generators(), n);
    let ladder = hardy_littlewood_ladder(big_f, &e, q, opts.ladder_slope_tol)?;
    let basis = match &opts.basis {
        Some(b) => b.clone(),
        None => default_basis(cone)?,
    };
    let tube = match &big_f.base {
        Some(_) => big_f.clone(),
        None => big_f.clone().with_base(BaseRegion::cone(cone.clone())?),
    };
    let mut recs = Vec::with_capacity(2);
    for h in opts.heights {
        let y: Vec<f64> = e.iter().map(|v| h * v).collect();
        recs.push(recover_density_mollified(&tube, &y, q, opts.n_pow, &basis, opts.form)?);
    }
    let (a, b) = (&recs[0].density, &recs[1].density);
    // The comparison window: samples whose estimated error is within
    // tol_rel of the peak.
    let peak = a.values.iter().zip(&a.error).filter(|p| p.1.is_finite()).map(|p| p.0.norm()).fold(0.0f64, f64::max);
    let tol = q.tol_rel * peak;
    let window = |d: &RecoveredDensity| -> RecoveredDensity {
        let mut d = d.clone();
        d.trusted = d.error.iter().map(|&e| e <= tol).collect();
        d
    };
    let (a, b) = (window(a), window(b));
    let residual = compare_recoveries(&a, &b, big_f.density(), f64::INFINITY);
    if residual.points == 0 {
        return Err(Error::NoConvergence(format!("no recovered sample has estimated error below {tol:.3e}")));
    }
    // Containment in U_{sp} through ray verdicts; samples below tol_abs are
    // not classified.
    let base = BaseRegion::cone(cone.clone())?;
    let alpha = s * p;
    let geo = a.grid.dt() * (n as f64).sqrt();
    let mut outside = 0.0f64;
    let mut classified = 0usize;
    for i in 0..a.len() {
        let v = a.values[i].norm();
        if !a.trusted[i] || v <= q.tol_abs || v <= outside {
            continue;
        }
        classified += 1;
        let query = support_membership(&a.point(i), alpha, &base, w, q)?;
        let cert = &query.certificate;
        let violates = cert.apex_integrable == Some(false)
            || (query.verdict == Verdict::Diverges && cert.min_exponent.is_none_or(|m| m < -geo));
        if violates {
            outside = v;
        }
    }
    let rows = ladder.iter().map(|&(h, v)| vec![h, v]).collect();
    Ok(CheckResult::compare("thm3_recovery", instance, vec![residual.value, outside], vec![tol, tol], q.tol_abs)
        .with("y_independence", residual)
        .with("max_abs_f", peak)
        .with("classified_points", classified)
        .with("contraction", [recs[0].contraction, recs[1].contraction])
        .with("epsilons", &recs[0].epsilons)
        .with("ladder_policy", format!(
            "y = {}·2^-k, k = 0..={}, unbounded if log-log slope < -{}",
            q.ladder.y0, q.ladder.steps, opts.ladder_slope_tol
        ))
        .trace(Trace::new("slice_l2_ladder", &["y", "l2_norm"], rows)))
}
