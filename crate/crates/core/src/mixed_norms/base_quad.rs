//! Quadrature and sampling over base regions B ⊂ R^n.

use std::f64::consts::PI;

use crate::cone_geometry::{norm, BaseRegion, ConeSpec};
use crate::numerics::{determinant, gauss_legendre, pairwise_sum};
use crate::par;
use crate::transforms::YSampler;
use crate::{Error, Result};

/// A ray family y = ρ e with dy = weight · ρ^{n-1} dρ dσ.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Direction {
    pub e: Vec<f64>,
    pub weight: f64,
}

/// Composite Gauss–Legendre nodes on [a, b].
fn panels(a: f64, b: f64, width: f64, order: usize) -> Vec<(f64, f64)> {
    if !(b > a) {
        return Vec::new();
    }
    let count = ((b - a) / width).ceil().max(1.0) as usize;
    let h = (b - a) / count as f64;
    let (xs, ws) = gauss_legendre(order);
    let mut out = Vec::with_capacity(count * order);
    for p in 0..count {
        let lo = a + p as f64 * h;
        for (x, w) in xs.iter().zip(&ws) {
            out.push((lo + 0.5 * h * (x + 1.0), 0.5 * h * w));
        }
    }
    out
}

/// Unit directions with surface weights on S^{n-1}.
pub(crate) fn sphere_directions(n: usize, count: usize) -> Vec<Direction> {
    match n {
        1 => vec![Direction { e: vec![1.0], weight: 1.0 }, Direction { e: vec![-1.0], weight: 1.0 }],
        2 => (0..count)
            .map(|k| {
                let a = 2.0 * PI * (k as f64 + 0.5) / count as f64;
                Direction { e: vec![a.cos(), a.sin()], weight: 2.0 * PI / count as f64 }
            })
            .collect(),
        _ => {
            let m = ((count as f64 / 2.0).sqrt().ceil() as usize).max(4);
            let (zs, ws) = gauss_legendre(m);
            let mut out = Vec::with_capacity(2 * m * m);
            for (z, w) in zs.iter().zip(&ws) {
                let r = (1.0 - z * z).sqrt();
                for k in 0..2 * m {
                    let a = PI * (k as f64 + 0.5) / m as f64;
                    out.push(Direction { e: vec![r * a.cos(), r * a.sin(), *z], weight: w * PI / m as f64 });
                }
            }
            out
        }
    }
}

/// Ray families covering a cone through its simplicial pieces. Each piece
/// with generator matrix G is parametrized by y = ρ Gσ, σ on the simplex.
pub(crate) fn cone_directions(cone: &ConeSpec, s: &YSampler) -> Result<Vec<Direction>> {
    let n = cone.dim();
    if n == 3 && cone.is_whole_space() {
        return Ok(sphere_directions(3, s.directions));
    }
    if n >= 3 && !cone.is_simplicial() {
        return Err(Error::UnsupportedNonSimplicial(format!(
            "cone integrals need a simplicial cone in dimension {n}"
        )));
    }
    let pieces = cone.simplicial_pieces();
    if pieces.is_empty() {
        return Err(Error::InvalidBase("cone has empty interior".into()));
    }
    let mut out = Vec::new();
    for g in pieces {
        let det = determinant(&g).abs();
        let combine = |sigma: &[f64]| -> Vec<f64> {
            (0..n).map(|d| g.iter().zip(sigma).map(|(gi, si)| gi[d] * si).sum()).collect()
        };
        match n {
            1 => out.push(Direction { e: g[0].clone(), weight: det }),
            2 => {
                let count = s.directions.div_ceil(s.nodes_per_panel).max(1);
                for (u, w) in panels(0.0, 1.0, 1.0 / count as f64, s.nodes_per_panel) {
                    out.push(Direction { e: combine(&[1.0 - u, u]), weight: det * w });
                }
            }
            _ => {
                let m = ((s.directions as f64).sqrt().ceil() as usize).max(4);
                let rule = panels(0.0, 1.0, 1.0, m);
                for &(a, wa) in &rule {
                    for &(b, wb) in &rule {
                        let v = (1.0 - a) * b;
                        out.push(Direction { e: combine(&[1.0 - a - v, a, v]), weight: det * (1.0 - a) * wa * wb });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Result of an integral over a base region.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseIntegral {
    pub value: f64,
    pub error: f64,
    pub nodes: usize,
    /// Range of log ρ explored along cone rays.
    pub log_radius: Option<(f64, f64)>,
}

/// ∫ over log ρ of h(u) on one ray family with adaptive unbounded ends.
fn radial<H>(lo: f64, hi: f64, s: &YSampler, h: &H) -> Result<BaseIntegral>
where
    H: Fn(f64) -> Result<(f64, f64)> + Sync,
{
    let lo_open = lo == f64::NEG_INFINITY;
    let hi_open = hi == f64::INFINITY;
    let w = s.panel_width;
    let core_lo = if lo_open { hi.min(0.0) - 4.0 * w } else { lo };
    let core_hi = if hi_open { core_lo.max(0.0) + 4.0 * w } else { hi };
    let eval = |rule: &[(f64, f64)]| -> Result<(f64, f64)> {
        let vals = par::map_slice(rule, |&(u, wt)| h(u).map(|(v, e)| (v * wt, e * wt)));
        let vals: Vec<(f64, f64)> = vals.into_iter().collect::<Result<_>>()?;
        let v = pairwise_sum(&vals.iter().map(|p| p.0).collect::<Vec<_>>());
        let e: f64 = vals.iter().map(|p| p.1.abs()).sum();
        if !v.is_finite() {
            return Err(Error::DivergentNorm("non-finite integrand on the base".into()));
        }
        Ok((v, e))
    };
    let core = panels(core_lo, core_hi, w, s.nodes_per_panel);
    let (mut value, mut error) = eval(&core)?;
    let mut nodes = core.len();
    let mut range = (core_lo, core_hi);
    for (open, sign) in [(lo_open, -1.0), (hi_open, 1.0)] {
        if !open {
            continue;
        }
        let mut edge = if sign > 0.0 { core_hi } else { core_lo };
        let mut quiet = 0;
        let mut last = 0.0f64;
        while quiet < 2 {
            if edge.abs() > s.radial_log_cap {
                return Err(Error::DivergentNorm(format!(
                    "radial integrand still {last:.3e} of the running value {value:.3e} at log radius {edge}"
                )));
            }
            let (a, b) = if sign > 0.0 { (edge, edge + w) } else { (edge - w, edge) };
            let rule = panels(a, b, w, s.nodes_per_panel);
            let (v, e) = eval(&rule)?;
            nodes += rule.len();
            value += v;
            error += e;
            last = v.abs() / value.abs().max(f64::MIN_POSITIVE);
            quiet = if v.abs() <= s.radial_tail_ratio * value.abs() { quiet + 1 } else { 0 };
            edge = if sign > 0.0 { b } else { a };
            if value == 0.0 && v == 0.0 {
                quiet += 1;
            }
        }
        if sign > 0.0 {
            range.1 = edge;
        } else {
            range.0 = edge;
        }
        error += s.radial_tail_ratio * value.abs();
    }
    Ok(BaseIntegral { value, error, nodes, log_radius: Some(range) })
}

/// ∫_B g(y) dy, where g returns a value and an error estimate.
pub fn integrate_base<G>(base: &BaseRegion, s: &YSampler, g: G) -> Result<BaseIntegral>
where
    G: Fn(&[f64]) -> Result<(f64, f64)> + Sync,
{
    let n = base.dim();
    match base {
        BaseRegion::Box { lo, hi } => {
            let axes: Vec<Vec<(f64, f64)>> =
                (0..n).map(|d| panels(lo[d], hi[d], s.panel_width, s.nodes_per_panel)).collect();
            let pts = tensor(&axes);
            sum_points(&pts, &g, None)
        }
        BaseRegion::Ball { center, radius } => {
            if n == 1 {
                let rule = panels(center[0] - radius, center[0] + radius, s.panel_width, s.nodes_per_panel);
                let pts: Vec<(Vec<f64>, f64)> = rule.into_iter().map(|(x, w)| (vec![x], w)).collect();
                return sum_points(&pts, &g, None);
            }
            let radial = panels(0.0, *radius, s.panel_width, s.nodes_per_panel);
            let mut pts = Vec::new();
            for d in sphere_directions(n, s.directions) {
                for &(r, w) in &radial {
                    let y: Vec<f64> = center.iter().zip(&d.e).map(|(c, e)| c + r * e).collect();
                    pts.push((y, w * d.weight * r.powi(n as i32 - 1)));
                }
            }
            sum_points(&pts, &g, None)
        }
        BaseRegion::TruncatedCone { cone, rho_min, rho_max } => {
            let dirs = cone_directions(cone, s)?;
            let mut total = BaseIntegral { value: 0.0, error: 0.0, nodes: 0, log_radius: None };
            for d in &dirs {
                let len = norm(&d.e);
                let lo = if *rho_min > 0.0 { (rho_min / len).ln() } else { f64::NEG_INFINITY };
                let hi = if rho_max.is_finite() { (rho_max / len).ln() } else { f64::INFINITY };
                let h = |u: f64| -> Result<(f64, f64)> {
                    let r = u.exp();
                    let y: Vec<f64> = d.e.iter().map(|e| r * e).collect();
                    let jac = d.weight * r.powi(n as i32);
                    g(&y).map(|(v, e)| (v * jac, e * jac))
                };
                let part = radial(lo, hi, s, &h)?;
                total.value += part.value;
                total.error += part.error;
                total.nodes += part.nodes;
                total.log_radius = match (total.log_radius, part.log_radius) {
                    (Some(a), Some(b)) => Some((a.0.min(b.0), a.1.max(b.1))),
                    (a, b) => a.or(b),
                };
            }
            Ok(total)
        }
    }
}

fn tensor(axes: &[Vec<(f64, f64)>]) -> Vec<(Vec<f64>, f64)> {
    let mut pts = vec![(Vec::new(), 1.0)];
    for axis in axes {
        let mut next = Vec::with_capacity(pts.len() * axis.len());
        for (p, w) in &pts {
            for &(x, wx) in axis {
                let mut q = p.clone();
                q.push(x);
                next.push((q, w * wx));
            }
        }
        pts = next;
    }
    pts
}

fn sum_points<G>(pts: &[(Vec<f64>, f64)], g: &G, log_radius: Option<(f64, f64)>) -> Result<BaseIntegral>
where
    G: Fn(&[f64]) -> Result<(f64, f64)> + Sync,
{
    let vals = par::map_slice(pts, |(y, w)| g(y).map(|(v, e)| (v * w, e * w)));
    let vals: Vec<(f64, f64)> = vals.into_iter().collect::<Result<_>>()?;
    let value = pairwise_sum(&vals.iter().map(|p| p.0).collect::<Vec<_>>());
    if !value.is_finite() {
        return Err(Error::DivergentNorm("non-finite integrand on the base".into()));
    }
    let error = vals.iter().map(|p| p.1.abs()).sum();
    Ok(BaseIntegral { value, error, nodes: pts.len(), log_radius })
}

/// Sample heights of the base for sup-type norms. Unbounded radial ranges
/// are clipped to |log ρ| <= radial_log_cap / 4.
pub fn sample_base(base: &BaseRegion, s: &YSampler) -> Result<Vec<Vec<f64>>> {
    let n = base.dim();
    Ok(match base {
        BaseRegion::Box { lo, hi } => {
            let axes: Vec<Vec<(f64, f64)>> =
                (0..n).map(|d| panels(lo[d], hi[d], s.panel_width, s.nodes_per_panel)).collect();
            tensor(&axes).into_iter().map(|(y, _)| y).collect()
        }
        BaseRegion::Ball { center, radius } => {
            let radial = panels(0.0, *radius, s.panel_width, s.nodes_per_panel);
            let mut out = Vec::new();
            for d in sphere_directions(n, s.directions) {
                for &(r, _) in &radial {
                    out.push(center.iter().zip(&d.e).map(|(c, e)| c + r * e).collect());
                }
            }
            out
        }
        BaseRegion::TruncatedCone { cone, rho_min, rho_max } => {
            let clip = 0.25 * s.radial_log_cap;
            let mut out = Vec::new();
            for d in cone_directions(cone, s)? {
                let len = norm(&d.e);
                let lo = if *rho_min > 0.0 { (rho_min / len).ln() } else { -clip };
                let hi = if rho_max.is_finite() { (rho_max / len).ln() } else { clip };
                for (u, _) in panels(lo.max(-clip), hi.min(clip), s.panel_width, s.nodes_per_panel) {
                    let r = u.exp();
                    out.push(d.e.iter().map(|e| r * e).collect());
                }
            }
            out
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::QuadSpec;

    fn sampler() -> YSampler {
        QuadSpec::default().y_sampler
    }

    #[test]
    fn box_and_ball_volumes() {
        let s = sampler();
        let b = BaseRegion::new_box(vec![0.0, -1.0], vec![2.0, 0.5]).unwrap();
        let v = integrate_base(&b, &s, |_| Ok((1.0, 0.0))).unwrap();
        assert!((v.value - 3.0).abs() < 1e-13);
        let ball = BaseRegion::new_ball(vec![0.3, 0.0, 1.0], 1.5).unwrap();
        let v = integrate_base(&ball, &s, |_| Ok((1.0, 0.0))).unwrap();
        assert!((v.value - 4.0 / 3.0 * PI * 1.5f64.powi(3)).abs() < 1e-10, "{}", v.value);
        let disk = BaseRegion::new_ball(vec![0.0, 0.0], 2.0).unwrap();
        let v = integrate_base(&disk, &s, |y| Ok((y[0] * y[0], 0.0))).unwrap();
        assert!((v.value - 4.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn cone_exponential_integrals() {
        let s = sampler();
        // ∫_0^∞ e^{-2πy} dy = 1/(2π).
        let half = BaseRegion::cone(ConeSpec::orthant(1)).unwrap();
        let v = integrate_base(&half, &s, |y| Ok(((-2.0 * PI * y[0]).exp(), 0.0))).unwrap();
        assert!((v.value - 0.5 / PI).abs() < 1e-9 * v.value);
        // Skew planar cone: ∫ e^{-y·t} over cone{(1,0),(1,1)} with t = (1, 1)
        // equals |det G| / ((g1·t)(g2·t)) = 1/(1·2).
        let skew = ConeSpec::new(vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let b = BaseRegion::cone(skew).unwrap();
        let v = integrate_base(&b, &s, |y| Ok(((-(y[0] + y[1])).exp(), 0.0))).unwrap();
        assert!((v.value - 0.5).abs() < 1e-9, "{}", v.value);
        // The octant: ∫ e^{-(y1+2y2+3y3)} = 1/6.
        let oct = BaseRegion::cone(ConeSpec::orthant(3)).unwrap();
        let v = integrate_base(&oct, &s, |y| Ok(((-(y[0] + 2.0 * y[1] + 3.0 * y[2])).exp(), 0.0))).unwrap();
        assert!((v.value - 1.0 / 6.0).abs() < 1e-6, "{}", v.value);
    }

    #[test]
    fn truncated_cone_matches_closed_form() {
        let s = sampler();
        let b = BaseRegion::truncated_cone(ConeSpec::orthant(1), 1e-3, 50.0).unwrap();
        let v = integrate_base(&b, &s, |y| Ok((y[0].powf(-0.5) / (1.0 + y[0]), 0.0))).unwrap();
        let exact = 2.0 * (50f64.sqrt().atan() - 1e-3f64.sqrt().atan());
        assert!((v.value - exact).abs() < 1e-12, "{} {exact}", v.value);
    }

    #[test]
    fn growing_radial_integrand_diverges() {
        let s = sampler();
        let half = BaseRegion::cone(ConeSpec::orthant(1)).unwrap();
        let r = integrate_base(&half, &s, |y| Ok((y[0].sqrt() / (1.0 + y[0]), 0.0)));
        assert!(matches!(r, Err(Error::DivergentNorm(_))));
    }

    #[test]
    fn samples_lie_in_the_base() {
        let s = sampler();
        let skew = ConeSpec::new(vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        for b in [
            BaseRegion::truncated_cone(skew, 0.1, 10.0).unwrap(),
            BaseRegion::new_ball(vec![0.0, 1.0], 0.5).unwrap(),
            BaseRegion::new_box(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap(),
        ] {
            let pts = sample_base(&b, &s).unwrap();
            assert!(!pts.is_empty());
            assert!(pts.iter().all(|y| b.contains(y)));
        }
    }
}
