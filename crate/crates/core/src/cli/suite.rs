use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{decode, ExperimentConfig};
use crate::cone_geometry::{BaseRegion, ConeSpec};
use crate::mixed_norms::DualInput;
use crate::par;
use crate::spectral_models::SpectralDensity;
use crate::transforms::{recover_density, QuadSpec, TubeFunction};
use crate::verification::{self as v, CheckResult, Thm3Options};
use crate::weights::WeightFn;
use crate::{Error, Result};

fn one() -> f64 {
    1.0
}

/// One check invocation with its instance, references already inlined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    Thm1P1 {
        tube: TubeFunction,
        #[serde(default)]
        density: Option<SpectralDensity>,
        base: BaseRegion,
        weight: WeightFn,
        #[serde(with = "crate::ext_real", default = "one")]
        s: f64,
        ts: Vec<Vec<f64>>,
    },
    Thm1P {
        tube: TubeFunction,
        #[serde(default)]
        density: Option<SpectralDensity>,
        base: BaseRegion,
        weight: WeightFn,
        p: f64,
        #[serde(with = "crate::ext_real", default = "one")]
        s: f64,
        ys: Vec<Vec<f64>>,
    },
    SupportContainment {
        tube: TubeFunction,
        y: Vec<f64>,
        cone: ConeSpec,
        /// R defaults to the slope of `weight`, or 0.
        #[serde(default, rename = "R")]
        r: Option<f64>,
        #[serde(default)]
        weight: Option<WeightFn>,
        /// Defaults to the quad spec's tol_rel.
        #[serde(default)]
        tol: Option<f64>,
    },
    Cor1Growth {
        density: SpectralDensity,
        cone: ConeSpec,
        #[serde(default, rename = "R_psi")]
        r_psi: f64,
        p: f64,
        #[serde(with = "crate::ext_real", default = "one")]
        s: f64,
        radii: Vec<f64>,
    },
    Lemma1Bound {
        tube: TubeFunction,
        y0: Vec<f64>,
        delta: f64,
        p: f64,
        #[serde(with = "crate::ext_real", default = "one")]
        s: f64,
        #[serde(default, rename = "N")]
        order: Option<u32>,
        base: BaseRegion,
        weight: WeightFn,
        /// Multiplies F.
        #[serde(default = "one")]
        scale: f64,
    },
    Cor2Isometry {
        density: SpectralDensity,
        alpha: f64,
        cone: ConeSpec,
    },
    EdgeOfWedge {
        density: SpectralDensity,
        cone: ConeSpec,
        w1: WeightFn,
        w2: WeightFn,
        p: f64,
        #[serde(with = "crate::ext_real", default = "one")]
        s: f64,
    },
    Thm3Recovery {
        tube: TubeFunction,
        cone: ConeSpec,
        weight: WeightFn,
        p: f64,
        #[serde(with = "crate::ext_real", default = "one")]
        s: f64,
        #[serde(default)]
        options: Thm3Options,
    },
}

fn model<'a>(density: &'a Option<SpectralDensity>, tube: &'a TubeFunction) -> Result<DualInput<'a>> {
    density
        .as_ref()
        .or(tube.density())
        .map(DualInput::Model)
        .ok_or_else(|| Error::BadParameters("the check needs a density: give one or use a density-backed tube".into()))
}

impl CheckSpec {
    pub fn check_id(&self) -> &'static str {
        match self {
            CheckSpec::Thm1P1 { .. } => "thm1_p1",
            CheckSpec::Thm1P { .. } => "thm1_p",
            CheckSpec::SupportContainment { .. } => "support_containment",
            CheckSpec::Cor1Growth { .. } => "cor1_growth",
            CheckSpec::Lemma1Bound { .. } => "lemma1_bound",
            CheckSpec::Cor2Isometry { .. } => "cor2_isometry",
            CheckSpec::EdgeOfWedge { .. } => "edge_of_wedge",
            CheckSpec::Thm3Recovery { .. } => "thm3_recovery",
        }
    }

    pub fn run(&self, q: &QuadSpec) -> Result<CheckResult> {
        match self {
            CheckSpec::Thm1P1 { tube, density, base, weight, s, ts } => {
                v::check_thm1_p1(tube, model(density, tube)?, base, weight, *s, ts, q)
            }
            CheckSpec::Thm1P { tube, density, base, weight, p, s, ys } => {
                v::check_thm1_p(tube, model(density, tube)?, base, weight, *p, *s, ys, q)
            }
            CheckSpec::SupportContainment { tube, y, cone, r, weight, tol } => {
                let r = r.or(weight.as_ref().map(WeightFn::slope)).unwrap_or(0.0);
                let f = recover_density(tube, y, q)?;
                v::check_support_containment(&f, cone, r, tol.unwrap_or(q.tol_rel))
            }
            CheckSpec::Cor1Growth { density, cone, r_psi, p, s, radii } => {
                v::check_cor1_growth(DualInput::Model(density), cone, *r_psi, *p, *s, radii, q)
            }
            CheckSpec::Lemma1Bound { tube, y0, delta, p, s, order, base, weight, scale } => {
                let f = tube.clone().scaled(*scale);
                v::check_lemma1_bound(&f, y0, *delta, *p, *s, *order, base, weight, q)
            }
            CheckSpec::Cor2Isometry { density, alpha, cone } => v::check_cor2_isometry(density, *alpha, cone, q),
            CheckSpec::EdgeOfWedge { density, cone, w1, w2, p, s } => {
                v::check_edge_of_wedge(density, cone, w1, w2, *p, *s, q)
            }
            CheckSpec::Thm3Recovery { tube, cone, weight, p, s, options } => {
                v::check_thm3_recovery(tube, cone, weight, *p, *s, q, options)
            }
        }
    }
}

/// A resolved suite entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Planned {
    pub label: String,
    pub quad: QuadSpec,
    pub spec: CheckSpec,
}

/// Overrides applied to every quad spec of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub grid_scale: Option<f64>,
    pub tol: Option<f64>,
}

impl RunOptions {
    pub fn apply(&self, q: QuadSpec) -> Result<QuadSpec> {
        let mut q = match self.grid_scale {
            Some(s) => q.scaled(s)?,
            None => q,
        };
        if let Some(t) = self.tol {
            q.tol_rel = t;
        }
        q.validate()?;
        Ok(q)
    }
}

/// Resolve every suite entry. Any failure here is a config error.
pub fn plan(config: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<Planned>> {
    let mut out = Vec::with_capacity(config.suite.len());
    for (i, raw) in config.suite.iter().enumerate() {
        let mut entry = config.expand(raw)?;
        let obj = entry
            .as_object_mut()
            .ok_or_else(|| Error::ConfigParse(format!("suite entry {i} is not an object")))?;
        let check = obj.get("check").and_then(Value::as_str).unwrap_or("?").to_string();
        let label = match obj.remove("label") {
            Some(Value::String(s)) => s,
            Some(other) => return Err(Error::ConfigParse(format!("suite entry {i}: label {other} is not a string"))),
            None => format!("{i:02}_{check}"),
        };
        let quad: QuadSpec = match obj.remove("quad") {
            Some(q) => decode(q, &format!("{label}: quad"))?,
            None => QuadSpec::default(),
        };
        let quad = opts.apply(quad).map_err(|e| Error::ConfigParse(format!("{label}: {e}")))?;
        let spec: CheckSpec = decode(entry, &label)?;
        out.push(Planned { label, quad, spec });
    }
    let mut seen = std::collections::BTreeSet::new();
    for p in &out {
        if !seen.insert(p.label.as_str()) {
            return Err(Error::ConfigParse(format!("duplicate label '{}'", p.label)));
        }
    }
    Ok(out)
}

/// Result of one planned check.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub label: String,
    pub check_id: String,
    pub result: Result<CheckResult>,
    pub runtime_s: f64,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.result.as_ref().is_ok_and(|r| r.passed)
    }

    /// The report record; deterministic, so no runtime.
    pub fn to_json(&self) -> Value {
        match &self.result {
            Ok(r) => {
                let mut v = serde_json::to_value(r).unwrap_or(Value::Null);
                if let Value::Object(m) = &mut v {
                    m.insert("label".into(), json!(self.label));
                }
                v
            }
            Err(e) => json!({
                "label": self.label,
                "check_id": self.check_id,
                "passed": false,
                "error": { "kind": error_kind(e), "message": e.to_string() },
            }),
        }
    }
}

/// The variant name of an error.
pub fn error_kind(e: &Error) -> String {
    let d = format!("{e:?}");
    d.split(['(', ' ', '{']).next().unwrap_or_default().to_string()
}

/// Run planned checks concurrently; output order follows the plan.
pub fn run_planned(planned: &[Planned]) -> Vec<Outcome> {
    par::map_slice(planned, |p| {
        let start = Instant::now();
        let result = p.spec.run(&p.quad);
        Outcome {
            label: p.label.clone(),
            check_id: p.spec.check_id().to_string(),
            result,
            runtime_s: start.elapsed().as_secs_f64(),
        }
    })
}

fn file_stem(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Writes results.json, summary.csv and, if asked, traces/<label>_<trace>.csv.
pub fn write_reports(dir: &Path, outcomes: &[Outcome], traces: bool) -> Result<Vec<PathBuf>> {
    let io = |p: &Path, e: &dyn std::fmt::Display| Error::Io(format!("{}: {e}", p.display()));
    std::fs::create_dir_all(dir).map_err(|e| io(dir, &e))?;
    let mut written = Vec::new();
    let results = Value::Array(outcomes.iter().map(Outcome::to_json).collect());
    let path = dir.join("results.json");
    let text = serde_json::to_string_pretty(&results)? + "\n";
    std::fs::write(&path, text).map_err(|e| io(&path, &e))?;
    written.push(path);

    let path = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| io(&path, &e))?;
    w.write_record(["label", "check_id", "passed", "min_margin", "runtime"])?;
    for o in outcomes {
        let margin = o.result.as_ref().map(|r| format!("{:e}", r.margin)).unwrap_or_else(|e| error_kind(e));
        w.write_record([o.label.clone(), o.check_id.clone(), o.passed().to_string(), margin, format!("{:.3}", o.runtime_s)])?;
    }
    w.flush().map_err(|e| io(&path, &e))?;
    written.push(path);

    if traces {
        let tdir = dir.join("traces");
        for o in outcomes {
            let Ok(r) = &o.result else { continue };
            for t in &r.traces {
                std::fs::create_dir_all(&tdir).map_err(|e| io(&tdir, &e))?;
                let path = tdir.join(format!("{}_{}.csv", file_stem(&o.label), file_stem(&t.name)));
                let mut w = csv::Writer::from_path(&path).map_err(|e| io(&path, &e))?;
                w.write_record(&t.columns)?;
                for row in &t.rows {
                    w.write_record(row.iter().map(|x| format!("{x:e}")))?;
                }
                w.flush().map_err(|e| io(&path, &e))?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

/// Everything a suite run produced.
#[derive(Debug)]
pub struct SuiteReport {
    pub outcomes: Vec<Outcome>,
    pub files: Vec<PathBuf>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(Outcome::passed)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Outcome> {
        self.outcomes.iter().filter(|o| !o.passed())
    }
}

/// Plan, run and report a suite. Errors are config or io errors only;
/// failing checks are part of the report.
pub fn run_suite(config: &ExperimentConfig, opts: &RunOptions, out: &Path) -> Result<SuiteReport> {
    let planned = plan(config, opts)?;
    let outcomes = run_planned(&planned);
    let files = write_reports(out, &outcomes, config.output.traces.unwrap_or(true))?;
    Ok(SuiteReport { outcomes, files })
}
