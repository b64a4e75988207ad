//! Pointwise and integrated bounds on the density, and the pointwise bound
//! on F over a ball of heights.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use super::{density_abs, density_json, log_weight_integral, CheckResult, Trace};
use crate::cone_geometry::{dot, BaseRegion};
use crate::mixed_norms::{integrate_base, mixed_norm, sample_base, slice_norm, DualInput, NormParams};
use crate::numerics::{integrate_rn, pairwise_sum, unit_ball_volume};
use crate::transforms::{QuadSpec, TubeFunction};
use crate::weights::WeightFn;
use crate::{Error, Result};

fn ext(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!("inf")
    }
}

/// |f(t)|·(∫_B e^{-2sπ(y·t+ψ(y))} dy)^{1/s} ≤ ‖F‖_{A^{1,s}(B,ψ)} at each t.
pub fn check_thm1_p1(
    big_f: &TubeFunction,
    f: DualInput<'_>,
    base: &BaseRegion,
    w: &WeightFn,
    s: f64,
    ts: &[Vec<f64>],
    q: &QuadSpec,
) -> Result<CheckResult> {
    let np = NormParams::new(1.0, s)?;
    let norm = mixed_norm(big_f, base, w, np, q)?;
    let mut lhs = Vec::with_capacity(ts.len());
    for t in ts {
        let ft = density_abs(f, t)?;
        lhs.push(if ft == 0.0 { 0.0 } else { (ft.ln() + log_weight_integral(t, s, base, w, q)?).exp() });
    }
    let rhs = vec![norm.value; ts.len()];
    let rows = ts.iter().zip(&lhs).map(|(t, l)| [t.clone(), vec![*l, norm.value]].concat()).collect();
    let instance = json!({ "s": ext(s), "base": base, "weight": w, "t": ts, "density": density_json(f) });
    Ok(CheckResult::compare("thm1_p1", instance, lhs, rhs, q.tol_abs)
        .with("norm_error", norm.error)
        .with("saturated", norm.saturated)
        .trace(Trace::new("margins", &columns("t", base.dim(), &["lhs", "rhs"]), rows)))
}

fn columns(prefix: &str, n: usize, tail: &[&str]) -> Vec<String> {
    (1..=n).map(|d| format!("{prefix}{d}")).chain(tail.iter().map(|t| t.to_string())).collect()
}

/// (∫|f(t)e^{-2πy·t}|^q dt)^{1/q} with an error estimate.
fn density_lq(f: DualInput<'_>, y: &[f64], qexp: f64, q: &QuadSpec) -> Result<(f64, f64)> {
    match f {
        DualInput::Model(d) => {
            if d.is_zero() {
                return Ok((0.0, 0.0));
            }
            let failed = std::sync::Mutex::new(None);
            let res = integrate_rn(y.len(), &q.norm_grid.rule(), |t| match d.eval(t) {
                Ok(0.0) => 0.0,
                Ok(v) => (v.abs() * (-2.0 * PI * dot(y, t)).exp()).powf(qexp),
                Err(e) => {
                    failed.lock().unwrap_or_else(|e| e.into_inner()).get_or_insert(e);
                    f64::NAN
                }
            });
            if let Some(e) = failed.into_inner().unwrap_or_else(|e| e.into_inner()) {
                return Err(e);
            }
            if res.diverges() || !res.value.is_finite() {
                return Err(Error::DivergentSlice(y.to_vec()));
            }
            let v = res.value.max(0.0).powf(1.0 / qexp);
            let e = if res.value > 0.0 { v / qexp * res.error / res.value } else { 0.0 };
            Ok((v, e))
        }
        DualInput::Samples(r) => {
            let cell = r.grid.dt().powi(r.dim as i32);
            let terms: Vec<f64> = (0..r.len())
                .filter(|&i| r.trusted[i] && r.values[i].norm() > 0.0)
                .map(|i| (r.values[i].norm() * (-2.0 * PI * dot(y, &r.point(i))).exp()).powf(qexp))
                .collect();
            let fine = pairwise_sum(&terms) * cell;
            let coarse = pairwise_sum(&terms.iter().step_by(2).copied().collect::<Vec<_>>()) * cell * 2.0;
            let v = fine.powf(1.0 / qexp);
            let e = if fine > 0.0 { v / qexp * (fine - coarse).abs() / fine } else { 0.0 };
            Ok((v, e))
        }
    }
}

/// For 1 < p ≤ 2: the per-slice Hausdorff–Young bound at each y and the
/// integrated bound against ‖F‖_{A^{p,s}(B,ψ)}.
#[allow(clippy::too_many_arguments)]
pub fn check_thm1_p(
    big_f: &TubeFunction,
    f: DualInput<'_>,
    base: &BaseRegion,
    w: &WeightFn,
    p: f64,
    s: f64,
    ys: &[Vec<f64>],
    q: &QuadSpec,
) -> Result<CheckResult> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::BadParameters(format!("p = {p} must lie in (1, 2]")));
    }
    let np = NormParams::new(p, s)?;
    let qexp = p / (p - 1.0);
    let mut lhs = Vec::with_capacity(ys.len() + 1);
    let mut rhs = Vec::with_capacity(ys.len() + 1);
    let mut errors = Vec::with_capacity(ys.len());
    let mut rows = Vec::with_capacity(ys.len());
    for y in ys {
        let (l, le) = density_lq(f, y, qexp, q)?;
        let r = slice_norm(big_f, y, p, q)?;
        // Rounding floor of the two quadratures.
        let err = le + r.error + 64.0 * f64::EPSILON * l.max(r.value);
        rows.push([y.clone(), vec![l, r.value, err]].concat());
        lhs.push(l);
        rhs.push(r.value);
        errors.push(err);
    }
    let integrated = if s.is_finite() {
        let sp = s * p;
        let i = integrate_base(base, &q.y_sampler, |y| {
            let (l, _) = density_lq(f, y, qexp, q)?;
            let fac = w.factor(y, sp)?;
            Ok((l.powf(sp) * fac.value, 0.0))
        })?;
        i.value.max(0.0).powf(1.0 / sp)
    } else {
        let mut best = 0.0f64;
        for y in sample_base(base, &q.y_sampler)? {
            let (l, _) = density_lq(f, &y, qexp, q)?;
            best = best.max(l * w.factor(&y, 1.0)?.value);
        }
        best
    };
    let norm = mixed_norm(big_f, base, w, np, q)?;
    lhs.push(integrated);
    rhs.push(norm.value);
    let support_claim = p == 1.0 || (s.is_finite() && s * (p - 1.0) <= 1.0);
    let instance = json!({ "p": p, "s": ext(s), "base": base, "weight": w, "y": ys, "density": density_json(f) });
    let hy_margins: Vec<f64> = rhs.iter().zip(&lhs).take(ys.len()).map(|(r, l)| r - l).collect();
    Ok(CheckResult::compare("thm1_p", instance, lhs, rhs, q.tol_abs)
        .with("hausdorff_young_margins", hy_margins)
        .with("hausdorff_young_errors", errors)
        .with("norm_error", norm.error)
        .with("support_claim_applicable", support_claim)
        .trace(Trace::new("hausdorff_young", &columns("y", base.dim(), &["lhs", "rhs", "error"]), rows)))
}

/// The constant of the pointwise bound |F(z)| ≤ C δ^{-(n/p)(1+1/s)} e^{2πψ_δ(y0)}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsLemma1 {
    pub n: usize,
    #[serde(rename = "N")]
    pub order: u32,
    pub p: f64,
    #[serde(with = "crate::ext_real")]
    pub s: f64,
    pub delta: f64,
    pub psi_delta_value: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl ConstantsLemma1 {
    /// C = Ω_n^{2N/p - (1/p)(1+1/s)} / Ω_{2n}^{N/p} · norm.
    pub fn new(n: usize, order: u32, p: f64, s: f64, delta: f64, psi_delta_value: f64, norm: f64) -> Result<Self> {
        let inv_s = if s.is_finite() { 1.0 / s } else { 0.0 };
        if f64::from(order) <= 1.0f64.max(inv_s) {
            return Err(Error::BadParameters(format!("N = {order} must exceed max(1, 1/s)")));
        }
        if !(delta > 0.0) || !(p > 0.0) || !(norm >= 0.0) {
            return Err(Error::BadParameters("delta and p must be positive, the norm nonnegative".into()));
        }
        let nn = f64::from(order);
        let c = unit_ball_volume(n).powf(2.0 * nn / p - (1.0 + inv_s) / p) / unit_ball_volume(2 * n).powf(nn / p) * norm;
        Ok(ConstantsLemma1 { n, order, p, s, delta, psi_delta_value, c })
    }

    /// C δ^{-(n/p)(1+1/s)} e^{2πψ_δ(y0)}.
    pub fn bound(&self) -> f64 {
        let inv_s = if self.s.is_finite() { 1.0 / self.s } else { 0.0 };
        self.c * self.delta.powf(-(self.n as f64) / self.p * (1.0 + inv_s)) * (2.0 * PI * self.psi_delta_value).exp()
    }
}

/// Smallest integer above max(1, 1/s), plus one.
pub fn default_lemma1_order(s: f64) -> u32 {
    let inv_s = if s.is_finite() { 1.0 / s } else { 0.0 };
    1.0f64.max(inv_s).floor() as u32 + 2
}

/// |F(x + iy0)| ≤ C δ^{-(n/p)(1+1/s)} e^{2πψ_δ(y0)} on sampled x.
#[allow(clippy::too_many_arguments)]
pub fn check_lemma1_bound(
    big_f: &TubeFunction,
    y0: &[f64],
    delta: f64,
    p: f64,
    s: f64,
    order: Option<u32>,
    base: &BaseRegion,
    w: &WeightFn,
    q: &QuadSpec,
) -> Result<CheckResult> {
    let n = base.dim();
    if y0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y0.len() });
    }
    if !(delta > 0.0) || !base.contains_closed_ball(y0, delta) {
        return Err(Error::BallNotInDomain { center: y0.to_vec(), radius: delta });
    }
    let psi = w.ball_max(y0, delta)?;
    let norm = mixed_norm(big_f, base, w, NormParams::new(p, s)?, q)?;
    let order = order.unwrap_or_else(|| default_lemma1_order(s));
    let consts = ConstantsLemma1::new(n, order, p, s, delta, psi, norm.value)?;
    let bound = consts.bound();
    let mut xs = vec![vec![0.0; n]];
    for r in [0.25, 1.0, 4.0, 16.0] {
        for d in 0..n {
            for sign in [-1.0, 1.0] {
                let mut x = vec![0.0; n];
                x[d] = sign * r;
                xs.push(x);
            }
        }
    }
    let mut lhs = Vec::with_capacity(xs.len());
    for x in &xs {
        let z: Vec<Complex64> = x.iter().zip(y0).map(|(&a, &b)| Complex64::new(a, b)).collect();
        lhs.push(big_f.eval(&z, q)?.norm());
    }
    let rhs = vec![bound; xs.len()];
    let instance = json!({ "y0": y0, "delta": delta, "p": p, "s": ext(s), "N": order, "base": base, "weight": w });
    let rows = xs.iter().zip(&lhs).map(|(x, l)| [x.clone(), vec![*l, bound]].concat()).collect();
    Ok(CheckResult::compare("lemma1_bound", instance, lhs, rhs, q.tol_abs)
        .with("constants", &consts)
        .with("norm_error", norm.error)
        .trace(Trace::new("samples", &columns("x", n, &["lhs", "rhs"]), rows)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone_geometry::ConeSpec;
    use crate::spectral_models::SpectralDensity;
    use crate::verification::tube_of;

    fn trunc_base() -> BaseRegion {
        BaseRegion::truncated_cone(ConeSpec::orthant(1), 1e-3, 50.0).unwrap()
    }

    #[test]
    fn p1_bound_holds_on_truncated_half_line() {
        let q = QuadSpec::default();
        let b = trunc_base();
        let w = WeightFn::zero(b.clone());
        let f = SpectralDensity::truncated_exponential_1d(1.0, 1).unwrap();
        let tf = tube_of(&f, &q);
        let ts = vec![vec![0.5], vec![1.0], vec![2.0], vec![-5.0]];
        let r = check_thm1_p1(&tf, DualInput::Model(&f), &b, &w, 1.0, &ts, &q).unwrap();
        assert!(r.passed && r.margin > 0.0, "{r:?}");
        // |f(t)| = t e^{-2πt} times ∫_{1e-3}^{50} e^{-2πyt} dy; ‖F_y‖_1 = 1/(4π(1+y)).
        for (t, l) in [0.5, 1.0, 2.0].iter().zip(&r.lhs) {
            let exact = t * (-2.0 * PI * t).exp() * ((-2.0 * PI * 1e-3 * t).exp() - (-100.0 * PI * t).exp()) / (2.0 * PI * t);
            assert!((l - exact).abs() < 1e-9 * exact, "{l} {exact}");
        }
        assert_eq!(r.lhs[3], 0.0);
        let norm = (51.0f64 / 1.001).ln() / (4.0 * PI);
        assert!((r.rhs[0] - norm).abs() < 1e-6 * norm, "{} {norm}", r.rhs[0]);
    }

    #[test]
    fn zero_function_passes_trivially() {
        let q = QuadSpec::default();
        let b = trunc_base();
        let w = WeightFn::zero(b.clone());
        let z = SpectralDensity::zero(1).unwrap();
        let tf = tube_of(&z, &q);
        let r = check_thm1_p1(&tf, DualInput::Model(&z), &b, &w, 1.0, &[vec![1.0]], &q).unwrap();
        assert!(r.passed);
        assert_eq!(r.margin, r.rhs[0]);
        let r = check_thm1_p(&tf, DualInput::Model(&z), &b, &w, 1.5, 1.0, &[vec![1.0]], &q).unwrap();
        assert!(r.passed);
    }

    #[test]
    fn hausdorff_young_and_integrated_bounds() {
        let q = QuadSpec::default();
        let b = trunc_base();
        let w = WeightFn::zero(b.clone());
        let f = SpectralDensity::truncated_exponential_1d(1.0, 0).unwrap();
        let tf = tube_of(&f, &q);
        let ys = vec![vec![0.5], vec![1.0], vec![2.0]];
        let r = check_thm1_p(&tf, DualInput::Model(&f), &b, &w, 1.5, 1.0, &ys, &q).unwrap();
        assert!(r.passed && r.margin > 0.0, "{r:?}");
        // Equality case p = 2: (4π(1+y))^{-1/2} on both sides.
        let r = check_thm1_p(&tf, DualInput::Model(&f), &b, &w, 2.0, 1.0, &ys, &q).unwrap();
        assert!(r.passed, "{r:?}");
        let margins = r.diagnostics["hausdorff_young_margins"].as_array().unwrap();
        let errors = r.diagnostics["hausdorff_young_errors"].as_array().unwrap();
        for (i, y) in ys.iter().enumerate() {
            let (m, e) = (margins[i].as_f64().unwrap(), errors[i].as_f64().unwrap());
            assert!(m.abs() <= 10.0 * e, "margin {m} error {e}");
            let exact = (4.0 * PI * (1.0 + y[0])).powf(-0.5);
            assert!((r.lhs[i] - exact).abs() < 1e-8 * exact, "{} {exact}", r.lhs[i]);
            assert!((r.rhs[i] - exact).abs() < 1e-8 * exact, "{} {exact}", r.rhs[i]);
        }
        assert!(matches!(
            check_thm1_p(&tf, DualInput::Model(&f), &b, &w, 2.5, 1.0, &ys, &q),
            Err(Error::BadParameters(_))
        ));
    }

    #[test]
    fn lemma1_example_and_scaling() {
        let q = QuadSpec::default();
        let b = trunc_base();
        let w = WeightFn::zero(b.clone());
        let f = SpectralDensity::truncated_exponential_1d(1.0, 0).unwrap();
        let tf = tube_of(&f, &q);
        let a = check_lemma1_bound(&tf, &[1.0], 0.4, 2.0, 1.0, Some(2), &b, &w, &q).unwrap();
        assert!(a.passed, "{a:?}");
        // C = Ω_1^{(4-2)/2} / Ω_2 · ‖F‖ with ‖F‖² = ln(51/1.001)/(4π).
        let norm = ((51.0f64 / 1.001).ln() / (4.0 * PI)).sqrt();
        let c = 2.0 / PI * norm;
        assert!((a.rhs[0] - c / 0.4).abs() < 1e-6 * c, "{} {}", a.rhs[0], c / 0.4);
        let narrow = check_lemma1_bound(&tf, &[1.0], 0.1, 2.0, 1.0, Some(2), &b, &w, &q).unwrap();
        assert!(narrow.passed && narrow.rhs[0] > a.rhs[0]);
        let big = check_lemma1_bound(&tf.clone().scaled(10.0), &[1.0], 0.4, 2.0, 1.0, Some(2), &b, &w, &q).unwrap();
        assert_eq!(big.passed, a.passed);
        assert!((big.margin / a.margin - 10.0).abs() < 1e-9);
        assert!(matches!(
            check_lemma1_bound(&tf, &[1.0], 2.0, 2.0, 1.0, Some(2), &b, &w, &q),
            Err(Error::BallNotInDomain { .. })
        ));
        assert!(matches!(
            check_lemma1_bound(&tf, &[1.0], 0.4, 2.0, 1.0, Some(1), &b, &w, &q),
            Err(Error::BadParameters(_))
        ));
        assert_eq!(default_lemma1_order(1.0), 3);
        assert_eq!(default_lemma1_order(0.25), 6);
    }
}
