use serde_json::{json, Value};

use super::config::{decode, ExperimentConfig, Table};
use crate::cone_geometry::{BaseRegion, ConeSpec};
use crate::spectral_models::{SpectralDensity, Support};
use crate::transforms::{QuadSpec, TubeFunction};
use crate::weights::WeightFn;
use crate::{Error, Result};

fn support_json(s: &Support) -> Value {
    let kind = match s {
        Support::Empty => "empty",
        Support::DualCone(_) => "dual_cone",
        Support::Box { .. } => "box",
        Support::Ball { .. } => "ball",
        Support::AllSpace => "all_space",
    };
    let mut v = json!({ "kind": kind, "text": s.describe() });
    match s {
        Support::DualCone(c) => v["generators"] = json!(c.generators()),
        Support::Box { lo, hi } => v["bounds"] = json!([lo, hi]),
        Support::Ball { center, radius } => v["ball"] = json!({ "center": center, "radius": radius }),
        _ => {}
    }
    v
}

fn cone_json(c: &ConeSpec) -> Result<Value> {
    Ok(json!({
        "dim": c.dim(),
        "generators": c.generators(),
        "halfspaces": c.halfspaces(),
        "simplicial": c.is_simplicial(),
        "dual_generators": c.dual()?.generators(),
        "regular": c.is_regular()?,
        "regularity_witness": c.regularity_witness()?,
    }))
}

fn derived(t: Table, id: &str, v: &Value) -> Result<Value> {
    let v = v.clone();
    Ok(match t {
        Table::Cone => cone_json(&decode::<ConeSpec>(v, id)?)?,
        Table::Base => {
            let b: BaseRegion = decode(v, id)?;
            json!({ "dim": b.dim(), "bounded": b.is_bounded(), "is_cone": b.as_cone().is_some() })
        }
        Table::Weight => {
            let w: WeightFn = decode(v, id)?;
            json!({ "slope": w.slope(), "slope_is_estimate": w.slope_is_estimate(), "domain_dim": w.domain().dim() })
        }
        Table::Density => {
            let f: SpectralDensity = decode(v, id)?;
            json!({
                "dim": f.dim(),
                "support": support_json(&f.support()),
                "closed_form_transform": f.has_closed_form(),
                "decay_constant": f.decay_constant(),
            })
        }
        Table::Tube => {
            let f: TubeFunction = decode(v, id)?;
            json!({
                "dim": f.dim(),
                "has_density": f.density().is_some(),
                "support": f.density().map(|d| support_json(&d.support())),
                "zero": f.is_zero(),
            })
        }
        Table::Quad => {
            let q: QuadSpec = decode(v, id)?;
            q.validate()?;
            json!({ "frequency_step": q.slice_grid.dt(), "ladder": q.ladder.heights() })
        }
    })
}

/// Parameters and derived quantities of every entity named `id`.
pub fn describe(config: &ExperimentConfig, id: &str) -> Result<Value> {
    let tables = config.find(id);
    if tables.is_empty() {
        return Err(Error::UnresolvedReference(format!("'{id}' is not a cone, base, weight, density, tube or quad spec")));
    }
    let mut out = Vec::new();
    for t in tables {
        let value = config.lookup(t, id)?;
        let derived = derived(t, id, &value)?;
        out.push(json!({ "id": id, "kind": t.name(), "value": value, "derived": derived }));
    }
    Ok(if out.len() == 1 { out.pop().unwrap_or_default() } else { Value::Array(out) })
}
