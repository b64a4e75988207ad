//! Numerical checks of the representation inequalities, isometries, support
//! and growth statements on concrete instances.

mod growth;
mod inequalities;
mod isometry;
mod support;
mod wedge;

use std::f64::consts::PI;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::cone_geometry::{dot, BaseRegion};
use crate::mixed_norms::{integrate_base, sample_base, DualInput};
use crate::spectral_models::SpectralDensity;
use crate::transforms::{QuadSpec, TubeFunction};
use crate::weights::WeightFn;
use crate::{Error, Result};

pub use growth::{check_cor1_growth, growth_exponent, j_optimum, j_value};
pub use inequalities::{check_lemma1_bound, check_thm1_p, check_thm1_p1, default_lemma1_order, ConstantsLemma1};
pub use isometry::check_cor2_isometry;
pub use support::{check_support_containment, check_thm3_recovery, Thm3Options};
pub use wedge::{check_edge_of_wedge, wedge_set_contains};

/// Plot-ready columns attached to a check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Trace {
    pub fn new<S: AsRef<str>>(name: &str, columns: &[S], rows: Vec<Vec<f64>>) -> Self {
        Trace { name: name.into(), columns: columns.iter().map(|c| c.as_ref().to_string()).collect(), rows }
    }
}

/// Outcome of one check: lhs ≤ rhs componentwise up to `tol_abs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub check_id: String,
    pub instance: Value,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// min over components of rhs - lhs.
    pub margin: f64,
    pub passed: bool,
    pub diagnostics: Map<String, Value>,
    #[serde(skip)]
    pub traces: Vec<Trace>,
}

impl CheckResult {
    /// Builds the result; non-finite sides are clamped to ±f64::MAX and
    /// flagged in the diagnostics.
    pub fn compare(check_id: &str, instance: Value, lhs: Vec<f64>, rhs: Vec<f64>, tol_abs: f64) -> Self {
        debug_assert_eq!(lhs.len(), rhs.len());
        let mut diagnostics = Map::new();
        let mut overflow = false;
        let mut clean = |v: Vec<f64>| -> Vec<f64> {
            v.into_iter()
                .map(|x| {
                    if x.is_finite() {
                        x
                    } else {
                        overflow = true;
                        if x < 0.0 {
                            -f64::MAX
                        } else {
                            f64::MAX
                        }
                    }
                })
                .collect()
        };
        let lhs = clean(lhs);
        let rhs = clean(rhs);
        if overflow {
            diagnostics.insert("overflow".into(), Value::Bool(true));
        }
        let margin = lhs
            .iter()
            .zip(&rhs)
            .map(|(l, r)| r - l)
            .map(|m| if m.is_finite() { m } else { -f64::MAX })
            .fold(f64::INFINITY, f64::min);
        let margin = if margin.is_finite() { margin } else { 0.0 };
        CheckResult {
            check_id: check_id.into(),
            instance,
            lhs,
            rhs,
            margin,
            passed: margin >= -tol_abs,
            diagnostics,
            traces: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.diagnostics.insert(key.into(), v);
        self
    }

    pub fn trace(mut self, t: Trace) -> Self {
        self.traces.push(t);
        self
    }
}

/// |f(t)| from a model or from the nearest recovered sample.
pub(crate) fn density_abs(f: DualInput<'_>, t: &[f64]) -> Result<f64> {
    match f {
        DualInput::Model(d) => Ok(d.eval(t)?.abs()),
        DualInput::Samples(r) => r
            .at(t)
            .map(|(v, _, _)| v.norm())
            .ok_or_else(|| Error::BadParameters(format!("t = {t:?} is outside the recovered grid"))),
    }
}

pub(crate) fn density_json(f: DualInput<'_>) -> Value {
    match f {
        DualInput::Model(d) => serde_json::to_value(d).unwrap_or(Value::Null),
        DualInput::Samples(r) => serde_json::to_value(r).unwrap_or(Value::Null),
    }
}

/// The tube function of a density, in closed form when allowed.
pub fn tube_of(f: &SpectralDensity, q: &QuadSpec) -> TubeFunction {
    if q.use_closed_form && f.has_closed_form() {
        TubeFunction::closed_form(f.clone())
    } else {
        TubeFunction::synthesized(f.clone(), q.clone())
    }
}

/// log of (∫_B e^{-2sπ(y·t + ψ(y))} dy)^{1/s}, or of the sup over B for
/// s = ∞. The exponent is shifted by its maximum over base samples before
/// integrating.
pub(crate) fn log_weight_integral(t: &[f64], s: f64, base: &BaseRegion, w: &WeightFn, q: &QuadSpec) -> Result<f64> {
    let se = if s.is_finite() { s } else { 1.0 };
    let expo = |y: &[f64]| -> Result<f64> { Ok(-2.0 * se * PI * (dot(y, t) + w.eval_unchecked(y)?)) };
    let mut shift = f64::NEG_INFINITY;
    for y in sample_base(base, &q.y_sampler)? {
        shift = shift.max(expo(&y)?);
    }
    if !s.is_finite() {
        return Ok(shift);
    }
    if !shift.is_finite() {
        shift = 0.0;
    }
    let i = integrate_base(base, &q.y_sampler, |y| Ok(((expo(y)? - shift).exp(), 0.0)))?;
    Ok((shift + i.value.ln()) / s)
}
