use serde::{Deserialize, Serialize};

use super::{dot, norm, ConeSpec};
use crate::{Error, Result};

/// The base domain B of a tube T_B = R^n + iB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BaseDoc", into = "BaseDoc")]
pub enum BaseRegion {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    /// {y in Γ : rho_min < |y| < rho_max}. `rho_min = 0` and an infinite
    /// `rho_max` give the whole cone.
    TruncatedCone { cone: ConeSpec, rho_min: f64, rho_max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum BaseDoc {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    TruncatedCone {
        cone: ConeSpec,
        rho_min: f64,
        /// `null` means unbounded.
        rho_max: Option<f64>,
    },
}

impl TryFrom<BaseDoc> for BaseRegion {
    type Error = Error;

    fn try_from(doc: BaseDoc) -> Result<Self> {
        match doc {
            BaseDoc::Box { lo, hi } => BaseRegion::new_box(lo, hi),
            BaseDoc::Ball { center, radius } => BaseRegion::new_ball(center, radius),
            BaseDoc::TruncatedCone { cone, rho_min, rho_max } => {
                BaseRegion::truncated_cone(cone, rho_min, rho_max.unwrap_or(f64::INFINITY))
            }
        }
    }
}

impl From<BaseRegion> for BaseDoc {
    fn from(b: BaseRegion) -> Self {
        match b {
            BaseRegion::Box { lo, hi } => BaseDoc::Box { lo, hi },
            BaseRegion::Ball { center, radius } => BaseDoc::Ball { center, radius },
            BaseRegion::TruncatedCone { cone, rho_min, rho_max } => BaseDoc::TruncatedCone {
                cone,
                rho_min,
                rho_max: rho_max.is_finite().then_some(rho_max),
            },
        }
    }
}

impl BaseRegion {
    pub fn new_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::InvalidBase(format!(
                "box corners have dimensions {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidBase("box needs finite lo < hi in every axis".into()));
        }
        Ok(BaseRegion::Box { lo, hi })
    }

    pub fn new_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() || !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidBase(format!("ball radius {radius} must be positive")));
        }
        Ok(BaseRegion::Ball { center, radius })
    }

    pub fn truncated_cone(cone: ConeSpec, rho_min: f64, rho_max: f64) -> Result<Self> {
        if !(rho_min >= 0.0) || !(rho_min < rho_max) {
            return Err(Error::InvalidBase(format!(
                "truncated cone needs 0 <= rho_min < rho_max, got ({rho_min}, {rho_max})"
            )));
        }
        if cone.simplicial_pieces().is_empty() {
            return Err(Error::InvalidBase("cone has empty interior".into()));
        }
        Ok(BaseRegion::TruncatedCone { cone, rho_min, rho_max })
    }

    /// The whole open cone.
    pub fn cone(cone: ConeSpec) -> Result<Self> {
        Self::truncated_cone(cone, 0.0, f64::INFINITY)
    }

    pub fn dim(&self) -> usize {
        match self {
            BaseRegion::Box { lo, .. } => lo.len(),
            BaseRegion::Ball { center, .. } => center.len(),
            BaseRegion::TruncatedCone { cone, .. } => cone.dim(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            BaseRegion::TruncatedCone { rho_max, .. } => rho_max.is_finite(),
            _ => true,
        }
    }

    pub fn as_cone(&self) -> Option<&ConeSpec> {
        match self {
            BaseRegion::TruncatedCone { cone, .. } => Some(cone),
            _ => None,
        }
    }

    /// Membership in the open region.
    pub fn contains(&self, y: &[f64]) -> bool {
        if y.len() != self.dim() {
            return false;
        }
        match self {
            BaseRegion::Box { lo, hi } => y.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| a < v && v < b),
            BaseRegion::Ball { center, radius } => dist(y, center) < *radius,
            BaseRegion::TruncatedCone { cone, rho_min, rho_max } => {
                let r = norm(y);
                *rho_min < r && r < *rho_max && cone.contains(y, false).unwrap_or(false)
            }
        }
    }

    /// True when the closed ball of radius delta about c lies in the region.
    pub fn contains_closed_ball(&self, c: &[f64], delta: f64) -> bool {
        if c.len() != self.dim() || !(delta >= 0.0) {
            return false;
        }
        match self {
            BaseRegion::Box { lo, hi } => c
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (a, b))| a < &(v - delta) && v + delta < *b),
            BaseRegion::Ball { center, radius } => dist(c, center) + delta < *radius,
            BaseRegion::TruncatedCone { cone, rho_min, rho_max } => {
                let r = norm(c);
                let inside_shell = r - delta > *rho_min && r + delta < *rho_max;
                let inside_cone = if cone.is_whole_space() {
                    true
                } else {
                    cone.halfspaces().iter().all(|h| dot(h, c) / norm(h) > delta)
                };
                inside_shell && inside_cone
            }
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
