//! Quadrature primitives, compensated sums and a few special functions.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::par;

/// Pairwise summation; the reduction tree depends only on the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum_complex(xs: &[Complex64]) -> Complex64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum_complex(&xs[..mid]) + pairwise_sum_complex(&xs[mid..])
}

/// Determinant by partial-pivot elimination.
pub fn determinant(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    let mut a = rows.to_vec();
    let mut det = 1.0;
    for c in 0..n {
        let Some(p) = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())) else {
            return 0.0;
        };
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for j in c..n {
                a[r][j] -= f * a[c][j];
            }
        }
    }
    det
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(order, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre rule on [a, b] with `panels` equal panels.
pub fn composite_gl(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (xs, ws) = gauss_legendre(order);
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + width * p as f64;
        let half = 0.5 * width;
        let mid = lo + half;
        for (x, w) in xs.iter().zip(&ws) {
            out.push((mid + half * x, half * w));
        }
    }
    out
}

/// Sine and cosine integrals Si(x), Ci(x) for x > 0.
///
/// Power series below 2, continued fraction for E1(-ix) above.
pub fn sici(x: f64) -> (f64, f64) {
    const EULER: f64 = 0.577_215_664_901_532_9;
    const EPS: f64 = 1e-16;
    let t = x.abs();
    if t == 0.0 {
        return (0.0, f64::NEG_INFINITY);
    }
    let (si, ci) = if t > 2.0 {
        // Lentz evaluation of the continued fraction for E1(i t).
        let mut b = Complex64::new(1.0, t);
        let mut c = Complex64::new(1.0 / f64::MIN_POSITIVE.sqrt(), 0.0);
        let mut d = Complex64::new(1.0, 0.0) / b;
        let mut h = d;
        for i in 2..200 {
            let a = -((i - 1) * (i - 1)) as f64;
            b += 2.0;
            d = Complex64::new(1.0, 0.0) / (d * a + b);
            c = b + Complex64::new(a, 0.0) / c;
            let del = c * d;
            h *= del;
            if (del.re - 1.0).abs() + del.im.abs() < EPS {
                break;
            }
        }
        h *= Complex64::new(t.cos(), -t.sin());
        (0.5 * PI + h.im, -h.re)
    } else {
        let mut sum_s = 0.0;
        let mut sum_c = 0.0;
        let mut sign = 1.0;
        let mut fact = 1.0;
        let mut odd = true;
        let mut k = 1usize;
        loop {
            fact *= t / k as f64;
            let term = fact / k as f64;
            if odd {
                sum_s += sign * term;
                sign = -sign;
            } else {
                sum_c += sign * term;
            }
            if term < EPS * (sum_s.abs() + sum_c.abs()) {
                break;
            }
            odd = !odd;
            k += 1;
            if k > 200 {
                break;
            }
        }
        (sum_s, sum_c + t.ln() + EULER)
    };
    if x < 0.0 {
        (-si, ci)
    } else {
        (si, ci)
    }
}

/// Least-squares slope of ys against xs.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Volume of the unit ball in R^k.
pub fn unit_ball_volume(k: usize) -> f64 {
    let h = k as f64 / 2.0;
    PI.powf(h) / gamma(h + 1.0)
}

/// Log-mapped trapezoid rule on a half line: r = e^u, u in [-U, U].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRule {
    pub log_extent: f64,
    pub step: f64,
}

impl LogRule {
    pub fn nodes(&self) -> Vec<f64> {
        let k = (2.0 * self.log_extent / self.step).round() as usize;
        (0..=k)
            .map(|i| (-self.log_extent + i as f64 * self.step).exp())
            .collect()
    }

    pub fn len(&self) -> usize {
        (2.0 * self.log_extent / self.step).round() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Exponent slack below which an end of a mapped integrand is treated as
/// non-decaying.
pub const DECAY_SLACK: f64 = 0.02;
/// Edge samples smaller than this fraction of the peak are negligible.
pub const NEGLIGIBLE_EDGE: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndBehaviour {
    Negligible,
    PowerLaw { exponent: f64, correction: f64 },
    NonDecaying { exponent: f64, edge_ratio: f64 },
}

impl EndBehaviour {
    fn correction(&self) -> f64 {
        match self {
            EndBehaviour::PowerLaw { correction, .. } => *correction,
            _ => 0.0,
        }
    }
}

/// Result of a log-mapped half-line integral.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfLineIntegral {
    pub value: f64,
    pub error: f64,
    pub head: EndBehaviour,
    pub tail: EndBehaviour,
}

impl HalfLineIntegral {
    pub fn diverges(&self) -> bool {
        matches!(self.head, EndBehaviour::NonDecaying { .. })
            || matches!(self.tail, EndBehaviour::NonDecaying { .. })
    }

    pub fn edge_ratio(&self) -> f64 {
        let r = |e: &EndBehaviour| match e {
            EndBehaviour::NonDecaying { edge_ratio, .. } => *edge_ratio,
            _ => 0.0,
        };
        r(&self.head).max(r(&self.tail))
    }
}

/// Growth rate of |m(u)| near one end, from block maxima over a window of
/// width two in u. Robust to oscillating integrands.
fn end_exponent(us: &[f64], ms: &[f64]) -> Option<f64> {
    const BLOCKS: usize = 8;
    let n = us.len();
    if n < BLOCKS {
        return None;
    }
    let per = n / BLOCKS;
    let mut xs = Vec::with_capacity(BLOCKS);
    let mut ys = Vec::with_capacity(BLOCKS);
    for b in 0..BLOCKS {
        let lo = b * per;
        let hi = if b + 1 == BLOCKS { n } else { lo + per };
        let mut best = 0.0f64;
        let mut at = us[lo];
        for i in lo..hi {
            if ms[i].abs() > best {
                best = ms[i].abs();
                at = us[i];
            }
        }
        if best > 0.0 {
            xs.push(at);
            ys.push(best.ln());
        }
    }
    if xs.len() < 2 {
        None
    } else {
        Some(ls_slope(&xs, &ys))
    }
}

/// Integrate already sampled mapped values m_k = g(e^{u_k}) e^{u_k}.
pub fn integrate_mapped(rule: &LogRule, mapped: &[f64]) -> HalfLineIntegral {
    let h = rule.step;
    let k = mapped.len() - 1;
    let mut inner: Vec<f64> = mapped.to_vec();
    inner[0] *= 0.5;
    inner[k] *= 0.5;
    let fine = h * pairwise_sum(&inner);
    let coarse_vals: Vec<f64> = (0..=k)
        .step_by(2)
        .map(|i| {
            if i == 0 || i == k {
                0.5 * mapped[i]
            } else {
                mapped[i]
            }
        })
        .collect();
    let coarse = if k % 2 == 0 {
        2.0 * h * pairwise_sum(&coarse_vals)
    } else {
        fine
    };
    let peak = mapped.iter().fold(0.0f64, |a, m| a.max(m.abs()));
    let window = ((2.0 / h).round() as usize).max(8).min(k + 1);
    let us: Vec<f64> = (0..=k).map(|i| -rule.log_extent + i as f64 * h).collect();

    let classify = |idx_edge: usize, lo: usize, hi: usize, head: bool| -> EndBehaviour {
        let edge = mapped[idx_edge].abs();
        if peak == 0.0 || edge <= NEGLIGIBLE_EDGE * peak {
            return EndBehaviour::Negligible;
        }
        let Some(slope) = end_exponent(&us[lo..hi], &mapped[lo..hi]) else {
            return EndBehaviour::Negligible;
        };
        let decaying = if head {
            slope > DECAY_SLACK
        } else {
            slope < -DECAY_SLACK
        };
        if decaying {
            // A smooth edge gives a sharper exponent from its first points.
            let (a, b) = if head { (idx_edge, idx_edge + 2) } else { (idx_edge - 2, idx_edge) };
            let monotone = mapped[lo..hi].windows(2).all(|w| {
                w[0] * w[1] > 0.0 && ((w[1].abs() >= w[0].abs()) == head)
            });
            let slope = if monotone {
                (mapped[b] / mapped[a]).ln() / (2.0 * h)
            } else {
                slope
            };
            EndBehaviour::PowerLaw {
                exponent: slope,
                correction: mapped[idx_edge] / slope.abs(),
            }
        } else {
            EndBehaviour::NonDecaying {
                exponent: slope,
                edge_ratio: edge / peak,
            }
        }
    };
    let head = classify(0, 0, window, true);
    let tail = classify(k, k + 1 - window, k + 1, false);
    let slope_at = |e: &EndBehaviour, idx: usize| match e {
        EndBehaviour::PowerLaw { exponent, .. } => exponent * mapped[idx],
        _ => 0.0,
    };
    // Euler-Maclaurin endpoint term of the trapezoid rule.
    let em = (slope_at(&tail, k) - slope_at(&head, 0)) / 12.0;
    let fine = fine - h * h * em;
    let coarse = coarse - 4.0 * h * h * em;
    let value = fine + head.correction() + tail.correction();
    let floor = 64.0 * f64::EPSILON * h * pairwise_sum(&mapped.iter().map(|m| m.abs()).collect::<Vec<_>>());
    HalfLineIntegral {
        value,
        error: (fine - coarse).abs().max(floor),
        head,
        tail,
    }
}

/// Integrate g over (0, inf) with the log-mapped trapezoid rule and
/// power-law end corrections.
pub fn integrate_half_line<G>(rule: &LogRule, g: G) -> HalfLineIntegral
where
    G: Fn(f64) -> f64 + Sync + Send,
{
    let nodes = rule.nodes();
    let mapped = par::map_slice(&nodes, |&r| g(r) * r);
    integrate_mapped(rule, &mapped)
}

/// Integrate g over the real line.
pub fn integrate_line<G>(rule: &LogRule, g: G) -> HalfLineIntegral
where
    G: Fn(f64) -> f64 + Sync + Send,
{
    integrate_half_line(rule, |r| g(r) + g(-r))
}

/// Integral over R^n on the tensor log-mapped grid.
///
/// For n = 1 this is [`integrate_line`]. For n >= 2 no end corrections are
/// applied; a non-negligible edge yields a divergent result.
pub fn integrate_rn<G>(n: usize, rule: &LogRule, g: G) -> HalfLineIntegral
where
    G: Fn(&[f64]) -> f64 + Sync + Send,
{
    if n == 1 {
        return integrate_line(rule, |x| g(&[x]));
    }
    let nodes = rule.nodes();
    let k = nodes.len();
    // Signed axis: index 0..k negative side (reversed), k..2k positive.
    let axis: Vec<(f64, f64, f64, usize)> = (0..2 * k)
        .map(|i| {
            let (j, s) = if i < k { (k - 1 - i, -1.0) } else { (i - k, 1.0) };
            let r = nodes[j];
            let h = rule.step;
            // The head strip (0, r_0) is added assuming g is flat there,
            // together with the matching Euler-Maclaurin term.
            let (fine, coarse) = match j {
                0 => (0.5 * h * r + r + h * h * r / 12.0, h * r + r + h * h * r / 3.0),
                _ if j == k - 1 => (0.5 * h * r, h * r),
                _ if j % 2 == 0 => (h * r, 2.0 * h * r),
                _ => (h * r, 0.0),
            };
            (s * r, fine, coarse, j)
        })
        .collect();
    let total = axis.len().pow(n as u32);
    let per_outer = total / axis.len();
    let rows: Vec<(f64, f64, f64, f64)> = par::map_range(axis.len(), |o| {
        let mut point = vec![0.0; n];
        let mut fine = Vec::with_capacity(per_outer);
        let mut coarse = Vec::with_capacity(per_outer);
        let mut edge = 0.0f64;
        let mut peak = 0.0f64;
        for inner in 0..per_outer {
            let mut rem = inner;
            let mut w = axis[o].1;
            let mut wc = axis[o].2;
            let mut on_edge = axis[o].3 == k - 1;
            point[0] = axis[o].0;
            for d in 1..n {
                let a = &axis[rem % axis.len()];
                rem /= axis.len();
                point[d] = a.0;
                w *= a.1;
                wc *= a.2;
                on_edge |= a.3 == k - 1;
            }
            let v = g(&point);
            let m = v * w;
            fine.push(m);
            peak = peak.max(v.abs() * w / rule.step.powi(n as i32));
            if on_edge {
                edge = edge.max(v.abs() * w / rule.step.powi(n as i32));
            }
            if wc != 0.0 {
                coarse.push(v * wc);
            }
        }
        (pairwise_sum(&fine), pairwise_sum(&coarse), edge, peak)
    });
    let fine = pairwise_sum(&rows.iter().map(|r| r.0).collect::<Vec<_>>());
    let coarse = pairwise_sum(&rows.iter().map(|r| r.1).collect::<Vec<_>>());
    let edge = rows.iter().fold(0.0f64, |a, r| a.max(r.2));
    let peak = rows.iter().fold(0.0f64, |a, r| a.max(r.3));
    let tail = if peak == 0.0 || edge <= 1e-9 * peak {
        EndBehaviour::Negligible
    } else {
        EndBehaviour::NonDecaying {
            exponent: 0.0,
            edge_ratio: edge / peak,
        }
    };
    HalfLineIntegral {
        value: fine,
        error: (fine - coarse).abs(),
        head: EndBehaviour::Negligible,
        tail,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(6);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((s - 2.0 / 11.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn sine_integral_reference_values() {
        // Si(1), Si(5), Ci(1), Ci(5) from tables.
        let (s1, c1) = sici(1.0);
        assert!((s1 - 0.946_083_070_367_183).abs() < 1e-13);
        assert!((c1 - 0.337_403_922_900_968).abs() < 1e-13);
        let (s5, c5) = sici(5.0);
        assert!((s5 - 1.549_931_244_944_674).abs() < 1e-13);
        assert!((c5 + 0.190_029_749_656_644).abs() < 1e-13);
        let (big, _) = sici(1e6);
        assert!((big - PI / 2.0).abs() < 1e-5);
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-14);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-14);
        // Recurrence oracle: V_k = V_{k-2} 2 pi / k.
        for k in 3..8 {
            let rec = unit_ball_volume(k - 2) * 2.0 * PI / k as f64;
            assert!((unit_ball_volume(k) - rec).abs() < 1e-12);
        }
    }

    #[test]
    fn half_line_power_tail_is_corrected() {
        // int_0^inf 1/(1+r)^2 dr = 1, algebraic tail r^-2.
        let rule = LogRule { log_extent: 10.0, step: 1.0 / 16.0 };
        let r = integrate_half_line(&rule, |r| 1.0 / (1.0 + r).powi(2));
        assert!((r.value - 1.0).abs() < 1e-8, "{r:?}");
        assert!(!r.diverges());
    }

    #[test]
    fn half_line_detects_divergence() {
        let rule = LogRule { log_extent: 12.0, step: 1.0 / 16.0 };
        let r = integrate_half_line(&rule, |r| 1.0 / (1.0 + r));
        assert!(r.diverges());
        let r = integrate_half_line(&rule, |r| r.powf(-1.2) / (1.0 + r));
        assert!(r.diverges());
    }

    #[test]
    fn head_singularity_is_integrated() {
        // int_0^inf r^{-1/2}/(1+r) dr = pi.
        let rule = LogRule { log_extent: 20.0, step: 1.0 / 32.0 };
        let r = integrate_half_line(&rule, |r| r.powf(-0.5) / (1.0 + r));
        assert!((r.value - PI).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn tensor_gaussian_integral() {
        let rule = LogRule { log_extent: 10.0, step: 1.0 / 16.0 };
        let r = integrate_rn(2, &rule, |x| (-PI * (x[0] * x[0] + x[1] * x[1])).exp());
        assert!((r.value - 1.0).abs() < 1e-10, "{r:?}");
        assert!(!r.diverges());
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
    }
}
