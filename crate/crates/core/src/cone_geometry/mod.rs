//! Open convex polyhedral cones in generator form, their duals, and the
//! Euclidean geometry used by the support checks.

mod base;
pub mod nnls;

pub use base::BaseRegion;
pub use crate::numerics::unit_ball_volume;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const NNLS_TOL: f64 = 1e-12;
const ANGLE_TOL: f64 = 1e-12;

/// Serialized form of a cone. Halfspaces are always re-derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeDoc {
    pub dim: usize,
    pub generators: Vec<Vec<f64>>,
}

/// A polyhedral cone Γ given by generators, with the halfspace description
/// {y : h·y >= 0 for all h} of its closure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConeDoc", into = "ConeDoc")]
pub struct ConeSpec {
    dim: usize,
    generators: Vec<Vec<f64>>,
    halfspaces: Vec<Vec<f64>>,
    simplicial: bool,
}

/// Result of projecting a point onto the dual cone.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub proj: Vec<f64>,
    pub dist: f64,
    pub coefficients: Vec<f64>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn unit(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    a.iter().map(|v| v / n).collect()
}

fn rot_ccw(a: &[f64]) -> Vec<f64> {
    vec![-a[1], a[0]]
}

fn rot_cw(a: &[f64]) -> Vec<f64> {
    vec![a[1], -a[0]]
}

fn dir(theta: f64) -> Vec<f64> {
    vec![theta.cos(), theta.sin()]
}

impl TryFrom<ConeDoc> for ConeSpec {
    type Error = Error;

    fn try_from(doc: ConeDoc) -> Result<Self> {
        if let Some(g) = doc.generators.iter().find(|g| g.len() != doc.dim) {
            return Err(Error::DimensionMismatch { expected: doc.dim, got: g.len() });
        }
        if doc.generators.is_empty() {
            return Ok(ConeSpec::trivial(doc.dim));
        }
        ConeSpec::new(doc.generators)
    }
}

impl From<ConeSpec> for ConeDoc {
    fn from(c: ConeSpec) -> Self {
        ConeDoc { dim: c.dim, generators: c.generators }
    }
}

/// Build a cone from its generators.
pub fn make_cone(generators: Vec<Vec<f64>>) -> Result<ConeSpec> {
    ConeSpec::new(generators)
}

impl ConeSpec {
    pub fn new(generators: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(Error::BadParameters("a cone needs at least one generator".into()));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(Error::BadParameters("cone dimension must be positive".into()));
        }
        for (i, g) in generators.iter().enumerate() {
            if g.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: g.len() });
            }
            if !g.iter().all(|v| v.is_finite()) {
                return Err(Error::BadParameters(format!("generator {i} is not finite")));
            }
            if g.iter().all(|&v| v == 0.0) {
                return Err(Error::ZeroGenerator(i));
            }
        }
        let (halfspaces, simplicial) = match dim {
            1 => one_dim_halfspaces(&generators),
            2 => planar_halfspaces(&generators),
            _ => simplicial_halfspaces(&generators)?,
        };
        Ok(ConeSpec { dim, generators, halfspaces, simplicial })
    }

    /// The cone {0}. It is the dual of the whole space.
    pub fn trivial(dim: usize) -> Self {
        let halfspaces = (0..dim)
            .flat_map(|i| {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                let neg = e.iter().map(|v| -v).collect();
                [e, neg]
            })
            .collect();
        ConeSpec { dim, generators: Vec::new(), halfspaces, simplicial: false }
    }

    /// The positive orthant (0, inf)^n.
    pub fn orthant(dim: usize) -> Self {
        let gens = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        ConeSpec::new(gens).expect("orthant generators are valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    pub fn halfspaces(&self) -> &[Vec<f64>] {
        &self.halfspaces
    }

    pub fn is_simplicial(&self) -> bool {
        self.simplicial
    }

    pub fn is_trivial(&self) -> bool {
        self.generators.is_empty()
    }

    /// True when the closure is all of R^n.
    pub fn is_whole_space(&self) -> bool {
        !self.is_trivial() && self.halfspaces.is_empty()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    /// Membership in the closure (`closed`) or in the interior.
    pub fn contains(&self, x: &[f64], closed: bool) -> Result<bool> {
        self.check_dim(x)?;
        let scale = norm(x);
        Ok(self.halfspaces.iter().all(|h| {
            let v = dot(h, x);
            if closed {
                v >= -1e-12 * scale
            } else {
                v > 1e-12 * scale
            }
        }))
    }

    /// Generator form of the closed dual cone.
    pub fn dual(&self) -> Result<ConeSpec> {
        if self.is_trivial() {
            return ConeSpec::new(ConeSpec::trivial(self.dim).halfspaces);
        }
        if self.halfspaces.is_empty() {
            return Ok(ConeSpec::trivial(self.dim));
        }
        ConeSpec::new(self.halfspaces.clone())
    }

    /// A point y with min_i y·g_i >= 1, or `None` when int Γ* is empty.
    pub fn regularity_witness(&self) -> Result<Option<Vec<f64>>> {
        if self.is_trivial() {
            return Ok(Some(vec![0.0; self.dim]));
        }
        let cap = 10 * (self.generators.len() + 1) * (self.dim + 1);
        let Some(mut y) = nnls::least_distance(&self.generators, NNLS_TOL, cap)? else {
            return Ok(None);
        };
        let min = self.generators.iter().map(|g| dot(g, &y)).fold(f64::INFINITY, f64::min);
        if min <= 1e-9 {
            return Ok(None);
        }
        if min < 1.0 {
            y.iter_mut().for_each(|v| *v /= min);
        }
        Ok(Some(y))
    }

    pub fn is_regular(&self) -> Result<bool> {
        Ok(self.regularity_witness()?.is_some())
    }

    /// Euclidean projection of t onto Γ*.
    pub fn project_onto_dual(&self, t: &[f64]) -> Result<Projection> {
        self.check_dim(t)?;
        let dual_gens = &self.halfspaces;
        if dual_gens.is_empty() {
            return Ok(Projection { proj: vec![0.0; self.dim], dist: norm(t), coefficients: Vec::new() });
        }
        let cap = 10 * dual_gens.len() * self.dim;
        let lambda = nnls::nnls(dual_gens, t, NNLS_TOL, cap)?;
        let mut proj = vec![0.0; self.dim];
        for (g, &l) in dual_gens.iter().zip(&lambda) {
            for (p, gi) in proj.iter_mut().zip(g) {
                *p += l * gi;
            }
        }
        let diff: Vec<f64> = t.iter().zip(&proj).map(|(a, b)| a - b).collect();
        Ok(Projection { dist: norm(&diff), proj, coefficients: lambda })
    }

    /// Membership in Γ* + closed ball of radius r.
    pub fn in_dual_plus_ball(&self, t: &[f64], r: f64) -> Result<bool> {
        if !(r >= 0.0) {
            return Err(Error::BadParameters(format!("ball radius {r} must be nonnegative")));
        }
        let p = self.project_onto_dual(t)?;
        Ok(p.dist <= r + 1e-9 * (1.0 + r))
    }

    /// Euclidean distance from a unit vector e in Γ to the boundary of Γ.
    pub fn boundary_distance(&self, e: &[f64]) -> Result<f64> {
        self.check_dim(e)?;
        Ok(self
            .halfspaces
            .iter()
            .map(|h| dot(h, e) / norm(h))
            .fold(f64::INFINITY, f64::min))
    }

    /// Decomposition of the cone into simplicial cones with disjoint
    /// interiors, each given by n generators. Lower dimensional cones give an
    /// empty list.
    pub fn simplicial_pieces(&self) -> Vec<Vec<Vec<f64>>> {
        if self.is_trivial() {
            return Vec::new();
        }
        match self.dim {
            1 => {
                let pos = self.generators.iter().any(|g| g[0] > 0.0);
                let neg = self.generators.iter().any(|g| g[0] < 0.0);
                let mut out = Vec::new();
                if pos {
                    out.push(vec![vec![1.0]]);
                }
                if neg {
                    out.push(vec![vec![-1.0]]);
                }
                out
            }
            2 => match self.angular_span() {
                Some((start, span)) if span > ANGLE_TOL => {
                    let parts = (span / (0.5 * PI) - 1e-9).ceil().max(1.0) as usize;
                    let step = span / parts as f64;
                    (0..parts)
                        .map(|k| {
                            let a = start + k as f64 * step;
                            vec![dir(a), dir(a + step)]
                        })
                        .collect()
                }
                _ => Vec::new(),
            },
            _ => vec![self.generators.clone()],
        }
    }

    /// For planar cones, the start angle and angular width of the closure,
    /// measured counterclockwise.
    pub fn angular_span(&self) -> Option<(f64, f64)> {
        if self.dim != 2 || self.is_trivial() {
            return None;
        }
        let angles = sorted_angles(&self.generators);
        if angles.len() == 1 {
            return Some((angles[0], 0.0));
        }
        let (i, gap) = largest_gap(&angles);
        if gap < PI - ANGLE_TOL {
            return Some((0.0, 2.0 * PI));
        }
        if (gap - PI).abs() <= ANGLE_TOL && angles.len() == 2 {
            // A line has empty interior.
            return Some((angles[0], 0.0));
        }
        let start = angles[(i + 1) % angles.len()];
        Some((start, 2.0 * PI - gap))
    }
}

fn one_dim_halfspaces(gens: &[Vec<f64>]) -> (Vec<Vec<f64>>, bool) {
    let pos = gens.iter().any(|g| g[0] > 0.0);
    let neg = gens.iter().any(|g| g[0] < 0.0);
    let hs = match (pos, neg) {
        (true, false) => vec![vec![1.0]],
        (false, true) => vec![vec![-1.0]],
        _ => Vec::new(),
    };
    (hs, gens.len() == 1)
}

fn sorted_angles(gens: &[Vec<f64>]) -> Vec<f64> {
    let mut angles: Vec<f64> = gens
        .iter()
        .map(|g| g[1].atan2(g[0]).rem_euclid(2.0 * PI))
        .collect();
    angles.sort_by(f64::total_cmp);
    let mut unique: Vec<f64> = Vec::with_capacity(angles.len());
    for a in angles {
        if unique.last().is_none_or(|&b| a - b > ANGLE_TOL) {
            unique.push(a);
        }
    }
    if unique.len() > 1 && unique[0] + 2.0 * PI - unique[unique.len() - 1] <= ANGLE_TOL {
        unique.pop();
    }
    unique
}

/// Index i and size of the largest counterclockwise gap from angle i to i+1.
fn largest_gap(angles: &[f64]) -> (usize, f64) {
    let k = angles.len();
    (0..k)
        .map(|i| {
            let next = if i + 1 == k { angles[0] + 2.0 * PI } else { angles[i + 1] };
            (i, next - angles[i])
        })
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
}

fn planar_halfspaces(gens: &[Vec<f64>]) -> (Vec<Vec<f64>>, bool) {
    let angles = sorted_angles(gens);
    if angles.len() == 1 {
        let a = dir(angles[0]);
        return (vec![rot_ccw(&a), rot_cw(&a), a], false);
    }
    let (i, gap) = largest_gap(&angles);
    if gap > PI + ANGLE_TOL {
        let start = dir(angles[(i + 1) % angles.len()]);
        let end = dir(angles[i]);
        let simplicial = gens.len() == 2;
        return (vec![rot_ccw(&start), rot_cw(&end)], simplicial);
    }
    if gap < PI - ANGLE_TOL {
        return (Vec::new(), false);
    }
    let d = dir(angles[i]);
    let n = rot_ccw(&d);
    if angles.len() == 2 {
        let neg: Vec<f64> = n.iter().map(|v| -v).collect();
        return (vec![n, neg], false);
    }
    let sign = if gens.iter().any(|g| dot(&n, g) < -1e-12 * norm(g)) { -1.0 } else { 1.0 };
    (vec![n.iter().map(|v| sign * v).collect()], false)
}

fn simplicial_halfspaces(gens: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, bool)> {
    let n = gens[0].len();
    if gens.len() != n {
        return Err(Error::UnsupportedNonSimplicial(format!(
            "{} generators in dimension {n}",
            gens.len()
        )));
    }
    // Rows of the generator matrix G are the generators; columns of G^{-1}
    // pair with them, so the halfspaces are the columns of G^{-1}.
    let inv = nnls::invert(gens)
        .ok_or_else(|| Error::UnsupportedNonSimplicial("generators are linearly dependent".into()))?;
    let hs = (0..n)
        .map(|j| unit(&(0..n).map(|i| inv[i][j]).collect::<Vec<_>>()))
        .collect();
    Ok((hs, true))
}
