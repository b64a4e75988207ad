use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::spectral_models::SpectralDensity;
use crate::transforms::TubeFunction;
use crate::{Error, Result};

const MAX_DEPTH: usize = 32;

/// Where reports go.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    /// Write per-check trace CSVs.
    pub traces: Option<bool>,
}

/// A batch of entity tables and check invocations. String values under the
/// keys `cone`, `base`, `domain`, `weight`, `w1`, `w2`, `density`, `tube`
/// and `quad` are references into the tables.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub cones: BTreeMap<String, Value>,
    pub bases: BTreeMap<String, Value>,
    pub weights: BTreeMap<String, Value>,
    pub densities: BTreeMap<String, Value>,
    pub tubes: BTreeMap<String, Value>,
    pub quad: BTreeMap<String, Value>,
    pub suite: Vec<Value>,
    pub output: OutputSpec,
}

/// The tables an entity id can live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    Cone,
    Base,
    Weight,
    Density,
    Tube,
    Quad,
}

impl Table {
    pub const ALL: [Table; 6] = [Table::Cone, Table::Base, Table::Weight, Table::Density, Table::Tube, Table::Quad];

    pub fn name(self) -> &'static str {
        match self {
            Table::Cone => "cone",
            Table::Base => "base",
            Table::Weight => "weight",
            Table::Density => "density",
            Table::Tube => "tube",
            Table::Quad => "quad",
        }
    }

    fn for_key(key: &str) -> Option<Table> {
        match key {
            "cone" => Some(Table::Cone),
            "base" | "domain" => Some(Table::Base),
            "weight" | "w1" | "w2" => Some(Table::Weight),
            "density" => Some(Table::Density),
            "tube" => Some(Table::Tube),
            "quad" => Some(Table::Quad),
            _ => None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::ConfigParse(m) => Error::ConfigParse(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    /// The built-in entities overlaid with this config's own.
    pub fn with_builtins(self) -> Self {
        builtins().overlay(self)
    }

    /// Entities of `top` replace same-named ones here; the suite comes from
    /// `top`, and so does the output spec unless `top` leaves it empty.
    pub fn overlay(mut self, top: Self) -> Self {
        self.cones.extend(top.cones);
        self.bases.extend(top.bases);
        self.weights.extend(top.weights);
        self.densities.extend(top.densities);
        self.tubes.extend(top.tubes);
        self.quad.extend(top.quad);
        self.suite = top.suite;
        if top.output != OutputSpec::default() {
            self.output = top.output;
        }
        self
    }

    fn table(&self, t: Table) -> &BTreeMap<String, Value> {
        match t {
            Table::Cone => &self.cones,
            Table::Base => &self.bases,
            Table::Weight => &self.weights,
            Table::Density => &self.densities,
            Table::Tube => &self.tubes,
            Table::Quad => &self.quad,
        }
    }

    /// Tables containing `id`, in declaration order.
    pub fn find(&self, id: &str) -> Vec<Table> {
        Table::ALL.into_iter().filter(|&t| self.table(t).contains_key(id)).collect()
    }

    /// The entity `id` of table `t` with all references inlined. A base may
    /// name a cone (the whole cone) and a tube may name a density (its
    /// closed form).
    pub fn lookup(&self, t: Table, id: &str) -> Result<Value> {
        self.lookup_at(t, id, 0)
    }

    fn lookup_at(&self, t: Table, id: &str, depth: usize) -> Result<Value> {
        if depth > MAX_DEPTH {
            return Err(Error::ConfigParse(format!("reference cycle through {} '{id}'", t.name())));
        }
        if let Some(v) = self.table(t).get(id) {
            return self.expand_at(v, depth + 1);
        }
        match t {
            Table::Base if self.cones.contains_key(id) => {
                let cone = self.lookup_at(Table::Cone, id, depth + 1)?;
                Ok(json!({ "variant": "truncated_cone", "cone": cone, "rho_min": 0.0, "rho_max": null }))
            }
            Table::Tube if self.densities.contains_key(id) => {
                let f: SpectralDensity = decode(self.lookup_at(Table::Density, id, depth + 1)?, id)?;
                Ok(serde_json::to_value(TubeFunction::closed_form(f))?)
            }
            _ => Err(Error::UnresolvedReference(format!("{} '{id}'", t.name()))),
        }
    }

    /// Replace every reference inside `v` by its expansion.
    pub fn expand(&self, v: &Value) -> Result<Value> {
        self.expand_at(v, 0)
    }

    fn expand_at(&self, v: &Value, depth: usize) -> Result<Value> {
        if depth > MAX_DEPTH {
            return Err(Error::ConfigParse("references nested too deeply".into()));
        }
        match v {
            Value::Object(m) => {
                let mut out = Map::new();
                for (k, val) in m {
                    let e = match (Table::for_key(k), val) {
                        (Some(t), Value::String(id)) => self.lookup_at(t, id, depth + 1)?,
                        _ => self.expand_at(val, depth + 1)?,
                    };
                    out.insert(k.clone(), e);
                }
                Ok(Value::Object(out))
            }
            Value::Array(a) => Ok(Value::Array(a.iter().map(|x| self.expand_at(x, depth + 1)).collect::<Result<_>>()?)),
            _ => Ok(v.clone()),
        }
    }

    /// Decode entity `id` of table `t`.
    pub fn get<T: DeserializeOwned>(&self, t: Table, id: &str) -> Result<T> {
        decode(self.lookup(t, id)?, id)
    }
}

/// Deserialize an expanded value, naming `what` in the error.
pub fn decode<T: DeserializeOwned>(v: Value, what: &str) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::ConfigParse(format!("{what}: {e}")))
}

/// Entities available to every config and to `describe`.
pub fn builtins() -> ExperimentConfig {
    let v = json!({
        "cones": {
            "half_line": { "dim": 1, "generators": [[1.0]] },
            "neg_half_line": { "dim": 1, "generators": [[-1.0]] },
            "quadrant": { "dim": 2, "generators": [[1.0, 0.0], [0.0, 1.0]] },
            "wedge_45": { "dim": 2, "generators": [[1.0, 0.0], [1.0, 1.0]] },
            "half_plane": { "dim": 2, "generators": [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]] }
        },
        "bases": {
            "half_line_trunc": { "variant": "truncated_cone", "cone": "half_line", "rho_min": 1e-3, "rho_max": 50.0 },
            "unit_interval": { "variant": "box", "lo": [0.0], "hi": [1.0] }
        },
        "weights": {
            "zero": { "variant": "zero", "domain": "half_line" },
            "logpow_-0.5": { "variant": "log_power", "params": { "alpha": -0.5 }, "domain": "half_line" },
            "linear_1": { "variant": "linear", "params": { "r": 1.0 }, "domain": "half_line" },
            "linear_1_neg": { "variant": "linear", "params": { "r": 1.0 }, "domain": "neg_half_line" }
        },
        "densities": {
            "trunc_exp_a1": { "variant": "truncated_exponential", "params": { "cone": "half_line", "w": [1.0] } },
            "trunc_exp_a4": { "variant": "truncated_exponential", "params": { "cone": "half_line", "w": [4.0] } },
            "trunc_exp_a1_p1": { "variant": "truncated_exponential", "params": { "cone": "half_line", "w": [1.0], "power": 1 } },
            "gaussian": { "variant": "gaussian", "params": { "center": [0.0], "width": 1.0 } },
            "triangle": { "variant": "triangle" },
            "bump_half": { "variant": "bump_compact", "params": { "center": [0.0], "radius": 0.5, "order": 3 } },
            "bump_off": { "variant": "bump_compact", "params": { "center": [1.0], "radius": 1.0, "order": 3 } }
        },
        "tubes": {
            "constant_box": { "source": "constant", "dim": 1, "re": 1.0, "im": 0.0, "base": "unit_interval" }
        },
        "quad": {
            "default": {},
            "coarse": { "slice_grid": { "half_width": 64.0, "points": 4096 } }
        }
    });
    serde_json::from_value(v).expect("built-in entities are well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone_geometry::{BaseRegion, ConeSpec};
    use crate::weights::WeightFn;

    #[test]
    fn builtins_resolve() {
        let c = builtins();
        for t in Table::ALL {
            for id in c.table(t).keys() {
                c.lookup(t, id).unwrap_or_else(|e| panic!("{id}: {e}"));
            }
        }
        let w: WeightFn = c.get(Table::Weight, "logpow_-0.5").unwrap();
        assert_eq!(w.slope(), 0.0);
        let b: BaseRegion = c.get(Table::Base, "quadrant").unwrap();
        assert_eq!(b, BaseRegion::cone(ConeSpec::orthant(2)).unwrap());
        let f: TubeFunction = c.get(Table::Tube, "trunc_exp_a1").unwrap();
        assert!(f.density().is_some() && f.base.is_some());
    }

    #[test]
    fn unknown_references_are_named() {
        let c = ExperimentConfig::from_json(r#"{ "densities": { "d": { "variant": "truncated_exponential",
            "params": { "cone": "nope", "w": [1.0] } } } }"#)
        .unwrap();
        match c.lookup(Table::Density, "d") {
            Err(Error::UnresolvedReference(m)) => assert!(m.contains("nope")),
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn cycles_are_config_errors() {
        let c = ExperimentConfig::from_json(r#"{ "bases": { "a": { "variant": "truncated_cone", "cone": "x" } },
            "cones": {}, "tubes": { "t": { "source": "constant", "dim": 1, "re": 1, "im": 0, "tube": "t" } } }"#)
        .unwrap();
        assert!(matches!(c.lookup(Table::Tube, "t"), Err(Error::ConfigParse(_))));
    }

    #[test]
    fn round_trips_losslessly() {
        let c = builtins();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn parse_errors_are_config_errors() {
        assert!(matches!(ExperimentConfig::from_json("{ \"suite\": 3 }"), Err(Error::ConfigParse(_))));
        assert!(matches!(ExperimentConfig::from_json("{ \"bogus\": {} }"), Err(Error::ConfigParse(_))));
    }
}
