use std::f64::consts::PI;

use num_complex::Complex64;

use super::quad_spec::QuadSpec;
use crate::cone_geometry::dot;
use crate::numerics::{gauss_legendre, pairwise_sum_complex};
use crate::spectral_models::{DensityKind, SpectralDensity};
use crate::{Error, Result};

const GL_ORDER: usize = 16;
const MAX_PANELS: usize = 1 << 20;
/// Integrand magnitude, relative to its peak, below which a tail is dropped.
const TAIL_FLOOR: f64 = 1e-17;

/// A quadrature value of F(z) with its truncation error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Synthesis {
    pub value: Complex64,
    pub tail_estimate: f64,
    pub nodes: usize,
}

/// Composite Gauss–Legendre nodes on [a, b]. The panel width resolves an
/// oscillation of `freq` cycles per unit and an exponential rate `rate`.
fn panel_rule(a: f64, b: f64, freq: f64, rate: f64, scale: f64) -> Vec<(f64, f64)> {
    let len = b - a;
    if !(len > 0.0) {
        return Vec::new();
    }
    let mut width = len.min(scale);
    if freq > 0.0 {
        width = width.min(0.5 / freq);
    }
    if rate > 0.0 {
        width = width.min(4.0 / (2.0 * PI * rate));
    }
    let panels = ((len / width).ceil() as usize).clamp(1, MAX_PANELS);
    let h = len / panels as f64;
    let (xs, ws) = gauss_legendre(GL_ORDER);
    let mut out = Vec::with_capacity(panels * GL_ORDER);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (x, w) in xs.iter().zip(&ws) {
            out.push((lo + 0.5 * h * (x + 1.0), 0.5 * h * w));
        }
    }
    out
}

fn integrate(rule: &[(f64, f64)], g: impl Fn(f64) -> Complex64) -> Complex64 {
    let terms: Vec<Complex64> = rule.iter().map(|&(t, w)| g(t) * w).collect();
    pairwise_sum_complex(&terms)
}

/// F(z) = ∫ f(t) e^{2πi t·z} dt by quadrature over the support of f.
pub fn synthesize(f: &SpectralDensity, z: &[Complex64], q: &QuadSpec) -> Result<Synthesis> {
    let n = f.dim();
    if z.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: z.len() });
    }
    let y: Vec<f64> = z.iter().map(|c| c.im).collect();
    let x: Vec<f64> = z.iter().map(|c| c.re).collect();
    if !f.admits_height(&y) {
        return Err(Error::DivergentSlice(y));
    }
    if q.use_closed_form {
        if let Some(v) = f.closed_form(z) {
            return Ok(Synthesis { value: v?, tail_estimate: 0.0, nodes: 0 });
        }
    }
    let i = Complex64::i();
    let out = match f.kind() {
        DensityKind::Zero { .. } => Synthesis { value: Complex64::new(0.0, 0.0), tail_estimate: 0.0, nodes: 0 },
        DensityKind::TruncatedExponential { w, power, .. } => {
            // In the unit dual basis the integrand factorizes over u_j.
            let basis = f.dual_basis().expect("dual basis");
            let det = jacobian(basis);
            let k = *power as i32;
            let mut value = Complex64::new(det, 0.0);
            let mut nodes = 0;
            let mut rel_tail = 0.0;
            for v in basis {
                let rate = dot(v, w) + dot(v, &y);
                let freq = dot(v, &x).abs();
                let mut cut = TAIL_FLOOR.recip().ln() / (2.0 * PI * rate);
                for _ in 0..5 {
                    cut = (TAIL_FLOOR.recip().ln() + f64::from(k) * cut.max(1.0).ln()) / (2.0 * PI * rate);
                }
                let cut = cut.min(q.t_truncation);
                let zeta: Complex64 = v.iter().zip(z).map(|(vi, zi)| zi * vi).sum();
                let s = (dot(v, w) - i * zeta) * (2.0 * PI);
                let rule = panel_rule(0.0, cut, freq, rate, 1.0);
                nodes += rule.len();
                let part = integrate(&rule, |u| (-s * u).exp() * u.powi(k));
                // ∫_cut^∞ u^k e^{-2π rate u} du relative to ∫_0^∞.
                let full = factorial(k) / (2.0 * PI * rate).powi(k + 1);
                let tail = cut.powi(k) * (-2.0 * PI * rate * cut).exp() / (2.0 * PI * rate)
                    * (1.0 + f64::from(k) / (2.0 * PI * rate * cut));
                rel_tail += tail / full;
                value *= part;
            }
            let magnitude_bound = value.norm() / (1.0 - rel_tail.min(0.5));
            Synthesis { value, tail_estimate: rel_tail * magnitude_bound, nodes }
        }
        DensityKind::Gaussian { center, width } => {
            let mut value = Complex64::new(1.0, 0.0);
            let mut nodes = 0;
            let r = width * (TAIL_FLOOR.recip().ln() / PI).sqrt();
            let mut tail = 0.0;
            for d in 0..n {
                let peak_at = center[d] - width * width * y[d];
                let rule = panel_rule(peak_at - r, peak_at + r, x[d].abs(), 0.0, 0.5 * width);
                nodes += rule.len();
                let c = center[d];
                let zd = z[d];
                let part = integrate(&rule, |t| {
                    (-PI * (t - c) * (t - c) / (width * width) + 2.0 * PI * i * t * zd).exp()
                });
                let peak = (PI * width * width * y[d] * y[d] - 2.0 * PI * c * y[d]).exp();
                tail += peak * width * TAIL_FLOOR;
                value *= part;
            }
            Synthesis { value, tail_estimate: tail * value.norm().max(1.0), nodes }
        }
        DensityKind::Triangle => {
            let mut value = Complex64::new(0.0, 0.0);
            let mut nodes = 0;
            for (a, b) in [(-1.0, 0.0), (0.0, 1.0)] {
                let rule = panel_rule(a, b, x[0].abs(), y[0].abs(), 1.0);
                nodes += rule.len();
                value += integrate(&rule, |t| (2.0 * PI * i * t * z[0]).exp() * (1.0 - t.abs()));
            }
            Synthesis { value, tail_estimate: 0.0, nodes }
        }
        DensityKind::BumpCompact { center, radius, .. } => {
            let axes: Vec<Vec<(f64, f64)>> = (0..n)
                .map(|d| panel_rule(center[d] - radius, center[d] + radius, x[d].abs(), y[d].abs(), 0.25 * radius))
                .collect();
            let total: usize = axes.iter().map(Vec::len).product();
            let mut terms = Vec::with_capacity(total);
            let mut t = vec![0.0; n];
            for idx in 0..total {
                let mut rem = idx;
                let mut w = 1.0;
                for d in (0..n).rev() {
                    let (node, weight) = axes[d][rem % axes[d].len()];
                    rem /= axes[d].len();
                    t[d] = node;
                    w *= weight;
                }
                let fv = f.eval(&t)?;
                if fv != 0.0 {
                    let phase: Complex64 = t.iter().zip(z).map(|(ti, zi)| zi * ti).sum();
                    terms.push((2.0 * PI * i * phase).exp() * (fv * w));
                }
            }
            Synthesis { value: pairwise_sum_complex(&terms), tail_estimate: 0.0, nodes: total }
        }
    };
    if out.tail_estimate > q.tol_abs.max(q.tol_rel * out.value.norm()) {
        return Err(Error::TruncationTooSmall { tail: out.tail_estimate, tol: q.tol_abs });
    }
    Ok(out)
}

fn factorial(k: i32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// |det| of the matrix whose columns are the given vectors.
fn jacobian(cols: &[Vec<f64>]) -> f64 {
    match cols.len() {
        1 => cols[0][0].abs(),
        2 => (cols[0][0] * cols[1][1] - cols[0][1] * cols[1][0]).abs(),
        3 => {
            let (a, b, c) = (&cols[0], &cols[1], &cols[2]);
            (a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                + a[2] * (b[0] * c[1] - b[1] * c[0]))
                .abs()
        }
        _ => {
            // Gaussian elimination for larger systems.
            let n = cols.len();
            let mut m: Vec<Vec<f64>> = cols.to_vec();
            let mut det = 1.0;
            for c in 0..n {
                let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap_or(c);
                if m[p][c] == 0.0 {
                    return 0.0;
                }
                m.swap(p, c);
                det *= m[c][c];
                for r in c + 1..n {
                    let f = m[r][c] / m[c][c];
                    for j in c..n {
                        m[r][j] -= f * m[c][j];
                    }
                }
            }
            det.abs()
        }
    }
}
