use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use super::quad_spec::{QuadSpec, SliceGrid};
use super::tube::TubeFunction;
use crate::numerics::sici;
use crate::spectral_models::SpectralDensity;
use crate::{Error, Result};

/// Density samples f(t_j) on the tensor grid of frequencies j/(2L).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveredDensity {
    pub dim: usize,
    pub y: Vec<f64>,
    pub grid: SliceGrid,
    /// Frequencies along each axis, ascending.
    pub t_axis: Vec<f64>,
    /// Row-major samples, the last axis varying fastest.
    #[serde(skip)]
    pub values: Vec<Complex64>,
    /// Estimated absolute error per sample (infinite when unknown).
    #[serde(skip)]
    pub error: Vec<f64>,
    #[serde(skip)]
    pub trusted: Vec<bool>,
    /// Whether the asymptotic tail model of the slice was applied.
    pub tail_model: bool,
    /// Largest |F| on the grid boundary relative to max |F|.
    pub edge_ratio: f64,
}

impl RecoveredDensity {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Frequency vector of the flat index.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        let m = self.t_axis.len();
        let mut t = vec![0.0; self.dim];
        let mut rem = idx;
        for d in (0..self.dim).rev() {
            t[d] = self.t_axis[rem % m];
            rem /= m;
        }
        t
    }

    /// Flat index of the grid point nearest to t.
    pub fn index_of(&self, t: &[f64]) -> Option<usize> {
        if t.len() != self.dim {
            return None;
        }
        let m = self.t_axis.len();
        let dt = self.grid.dt();
        let mut idx = 0;
        for &v in t {
            let j = (v / dt).round() as i64 + (m / 2) as i64;
            if j < 0 || j >= m as i64 {
                return None;
            }
            idx = idx * m + j as usize;
        }
        Some(idx)
    }

    /// (value, error, trusted) at the grid point nearest to t.
    pub fn at(&self, t: &[f64]) -> Option<(Complex64, f64, bool)> {
        self.index_of(t).map(|i| (self.values[i], self.error[i], self.trusted[i]))
    }

    /// The symmetric range |t| <= r on which every sample is trusted
    /// (one-dimensional grids measure r along the axis, others in max-norm).
    pub fn trusted_radius(&self) -> f64 {
        let mut r = f64::INFINITY;
        for (i, &ok) in self.trusted.iter().enumerate() {
            if !ok {
                let t = self.point(i);
                let size = t.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                r = r.min(size);
            }
        }
        // The largest grid radius strictly below the first untrusted sample.
        if r.is_finite() {
            (r - self.grid.dt()).max(-1.0)
        } else {
            self.t_axis.iter().fold(0.0f64, |a, v| a.max(v.abs()))
        }
    }
}

/// Σ_k v_k e^{-2πi x_k·t_j} Δx^n on the tensor grid, output in ascending
/// frequency order.
fn slice_dft(values: &[Complex64], n: usize, m: usize, dx: f64) -> Vec<Complex64> {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    let mut data = values.to_vec();
    let mut line = vec![Complex64::new(0.0, 0.0); m];
    for axis in 0..n {
        let stride = m.pow((n - 1 - axis) as u32);
        let outer = data.len() / (m * stride);
        for o in 0..outer {
            for s in 0..stride {
                let base = o * m * stride + s;
                for k in 0..m {
                    line[k] = data[base + k * stride];
                }
                fft.process(&mut line);
                for k in 0..m {
                    data[base + k * stride] = line[k];
                }
            }
        }
    }
    // Reorder to ascending frequency and apply the e^{iπj} phase of x_0 = -L.
    let total = data.len();
    let scale = dx.powi(n as i32);
    let mut out = vec![Complex64::new(0.0, 0.0); total];
    for (p, slot) in out.iter_mut().enumerate() {
        let mut rem = p;
        let mut src = 0;
        let mut parity = 0i64;
        let mut stride = 1;
        for _ in 0..n {
            let pos = rem % m;
            rem /= m;
            let j = pos as i64 - (m / 2) as i64;
            let k = j.rem_euclid(m as i64) as usize;
            src += k * stride;
            stride *= m;
            parity += j;
        }
        let sign = if parity.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        *slot = data[src] * (sign * scale);
    }
    out
}

/// Number of terms in the asymptotic tail model Σ c_k (L/|x|)^k.
const TAIL_TERMS: usize = 5;
/// Fit abscissae u = L/|x| of the tail model.
const TAIL_FIT: [f64; TAIL_TERMS] = [1.0, 8.0 / 7.0, 4.0 / 3.0, 8.0 / 5.0, 2.0];

/// Corrections turning the one-sided grid sum into an approximation of the
/// integral over the whole line.
struct LineCorrections {
    /// F at +L, which is not a grid node.
    right: Complex64,
    left: Complex64,
    /// Tail coefficients for x > L and x < -L.
    tail: Option<[[Complex64; TAIL_TERMS]; 2]>,
}

/// Coefficients c_k of Σ_{k>=1} c_k u^k through (u_i, v_i).
fn fit_tail(u: [f64; TAIL_TERMS], mut b: [Complex64; TAIL_TERMS]) -> [Complex64; TAIL_TERMS] {
    let mut a = [[0.0; TAIL_TERMS]; TAIL_TERMS];
    for (r, &ui) in u.iter().enumerate() {
        for (k, slot) in a[r].iter_mut().enumerate() {
            *slot = ui.powi(k as i32 + 1);
        }
    }
    for c in 0..TAIL_TERMS {
        let p = (c..TAIL_TERMS).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap_or(c);
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..TAIL_TERMS {
            let f = a[r][c] / a[c][c];
            for k in c..TAIL_TERMS {
                a[r][k] -= f * a[c][k];
            }
            let bc = b[c];
            b[r] -= bc * f;
        }
    }
    let mut x = [Complex64::new(0.0, 0.0); TAIL_TERMS];
    for r in (0..TAIL_TERMS).rev() {
        let mut acc = b[r];
        for k in r + 1..TAIL_TERMS {
            acc -= x[k] * a[r][k];
        }
        x[r] = acc / a[r][r];
    }
    x
}

/// E_n(z) = ∫_1^∞ s^{-n} e^{-zs} ds by its continued fraction, for |z| > 1.
fn expint_cf(n: usize, z: Complex64) -> Complex64 {
    let tiny = Complex64::new(1e-300, 0.0);
    let nf = n as f64;
    let mut b = z + nf;
    let mut c = Complex64::new(1e300, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (nf - 1.0 + i as f64);
        b += 2.0;
        d = an * d + b;
        if d.norm() < 1e-300 {
            d = tiny;
        }
        d = 1.0 / d;
        c = b + an / c;
        if c.norm() < 1e-300 {
            c = tiny;
        }
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h * (-z).exp()
}

/// ∫_L^∞ x^{-k} e^{-iωx} dx for k = 1..=TAIL_TERMS. The k = 1 entry is
/// dropped at ω = 0, where only its principal value pairing is finite.
fn tail_moments(omega: f64, l: f64) -> [Complex64; TAIL_TERMS] {
    let mut out = [Complex64::new(0.0, 0.0); TAIL_TERMS];
    if omega == 0.0 {
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            *slot = Complex64::new(l.powi(-(k as i32)) / k as f64, 0.0);
        }
        return out;
    }
    let i = Complex64::i();
    if omega.abs() * l > 1.0 {
        let z = i * omega * l;
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = expint_cf(k + 1, z) * l.powi(-(k as i32));
        }
        return out;
    }
    let (si, ci) = sici(omega.abs() * l);
    out[0] = Complex64::new(-ci, -omega.signum() * (0.5 * PI - si));
    let edge = (-i * omega * l).exp();
    for k in 1..TAIL_TERMS {
        out[k] = (edge * l.powi(-(k as i32)) - i * omega * out[k - 1]) / k as f64;
    }
    out
}

/// B_{2k}/(2k)! for k = 1, 2, 3.
const EM_COEFFS: [f64; 3] = [1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0];

/// Derivatives of g(x) = F(x) e^{-2πixt} at x = side·L up to order 5, with
/// F^{(j)} taken from the tail model Σ c_k (L/|x|)^k.
fn endpoint_derivatives(value: Complex64, c: &[Complex64; TAIL_TERMS], side: f64, l: f64, t: f64) -> [Complex64; 6] {
    let mut f = [Complex64::new(0.0, 0.0); 6];
    f[0] = value;
    for (j, slot) in f.iter_mut().enumerate().skip(1) {
        let sign = if side > 0.0 && j % 2 == 1 { -1.0 } else { 1.0 };
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, ck) in c.iter().enumerate() {
            let rising: f64 = (0..j).map(|r| (k + 1 + r) as f64).product();
            acc += ck * rising;
        }
        *slot = acc * (sign / l.powi(j as i32));
    }
    let w = Complex64::new(0.0, -2.0 * PI * t);
    let phase = (w * side * l).exp();
    let mut g = [Complex64::new(0.0, 0.0); 6];
    for (m, slot) in g.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut binom = 1.0;
        for (j, fj) in f.iter().enumerate().take(m + 1) {
            acc += fj * w.powi((m - j) as i32) * binom;
            binom = binom * (m - j) as f64 / (j + 1) as f64;
        }
        *slot = acc * phase;
    }
    g
}

impl LineCorrections {
    fn new(values: &[Complex64], right: Complex64) -> Self {
        let m = values.len();
        let left = values[0];
        // Grid index of x = s·L for s a multiple of 1/16.
        let at = |s: f64| values[((1.0 + s) * 0.5 * m as f64).round() as usize];
        let tail = (m % 32 == 0).then(|| {
            let side = |sign: f64, edge: Complex64| {
                let mut v = [edge; TAIL_TERMS];
                for (slot, u) in v.iter_mut().zip(TAIL_FIT).skip(1) {
                    *slot = at(sign / u);
                }
                fit_tail(TAIL_FIT, v)
            };
            let r = side(1.0, right);
            let lf = side(-1.0, left);
            let model = |c: &[Complex64; TAIL_TERMS], u: f64| -> Complex64 {
                c.iter().enumerate().map(|(k, ck)| ck * u.powi(k as i32 + 1)).sum()
            };
            let close = |pred: Complex64, actual: Complex64| {
                (pred - actual).norm() <= 1e-3 * actual.norm() && actual.norm() > 0.0
            };
            let ok = [13.0 / 16.0, 9.0 / 16.0]
                .iter()
                .all(|&s| close(model(&r, 1.0 / s), at(s)) && close(model(&lf, 1.0 / s), at(-s)));
            ok.then_some([r, lf])
        });
        LineCorrections { right, left, tail: tail.flatten() }
    }

    /// ∫_{|x|>L} |F|² under the tail model.
    fn tail_energy(&self, l: f64) -> f64 {
        let Some(sides) = &self.tail else { return 0.0 };
        let mut e = 0.0;
        for c in sides {
            for j in 0..TAIL_TERMS {
                for k in 0..TAIL_TERMS {
                    e += (c[j] * c[k].conj()).re * l / (j + k + 1) as f64;
                }
            }
        }
        e
    }

    fn at(&self, t: f64, l: f64, dx: f64) -> Complex64 {
        let i = Complex64::i();
        let mut total = (self.right * (-2.0 * PI * i * l * t).exp() - self.left * (2.0 * PI * i * l * t).exp()) * (0.5 * dx);
        if let Some([cr, cl]) = &self.tail {
            let w = 2.0 * PI * t;
            let mr = tail_moments(w, l);
            let ml = tail_moments(-w, l);
            for k in 0..TAIL_TERMS {
                let lk = l.powi(k as i32 + 1);
                total += (cr[k] * mr[k] + cl[k] * ml[k]) * lk;
            }
            // Euler–Maclaurin endpoint terms with derivatives of F from the
            // model; the series is asymptotic, so it stops once terms grow.
            let g_right = endpoint_derivatives(self.right, cr, 1.0, l, t);
            let g_left = endpoint_derivatives(self.left, cl, -1.0, l, t);
            let mut last = f64::INFINITY;
            for (k, b) in EM_COEFFS.iter().enumerate() {
                let m = 2 * k + 1;
                let term = (g_right[m] - g_left[m]) * (b * dx.powi(m as i32 + 1));
                if term.norm() > last {
                    break;
                }
                last = term.norm();
                total -= term;
            }
        }
        total
    }
}

/// Corrected line integrals ∫F(x) e^{-2πixt} dx on the frequency grid.
fn corrected_line(values: &[Complex64], right: Complex64, grid: &SliceGrid) -> (Vec<Complex64>, bool) {
    let m = values.len();
    let dx = grid.step();
    let raw = slice_dft(values, 1, m, dx);
    let corr = LineCorrections::new(values, right);
    let dt = grid.dt();
    let out = raw
        .iter()
        .enumerate()
        .map(|(p, s)| {
            let t = (p as i64 - (m / 2) as i64) as f64 * dt;
            s + corr.at(t, grid.half_width, dx)
        })
        .collect();
    (out, corr.tail.is_some())
}

fn edge_ratio(values: &[Complex64], n: usize, m: usize, extra: &[Complex64]) -> f64 {
    let peak = values.iter().chain(extra).fold(0.0f64, |a, v| a.max(v.norm()));
    if peak == 0.0 {
        return 0.0;
    }
    let mut edge = extra.iter().fold(0.0f64, |a, v| a.max(v.norm()));
    for (idx, v) in values.iter().enumerate() {
        let mut rem = idx;
        let mut on_edge = false;
        for _ in 0..n {
            on_edge |= rem % m == 0;
            rem /= m;
        }
        if on_edge {
            edge = edge.max(v.norm());
        }
    }
    edge / peak
}

/// Recover the density from slice samples at height y.
///
/// For one-dimensional slices `right` is F(L + iy); it enables the endpoint
/// and tail corrections.
pub fn recover_from_samples(
    values: &[Complex64],
    right: Option<Complex64>,
    y: &[f64],
    grid: &SliceGrid,
    q: &QuadSpec,
) -> Result<RecoveredDensity> {
    let n = y.len();
    let m = grid.points;
    if values.len() != m.pow(n as u32) {
        return Err(Error::BadParameters(format!(
            "expected {} slice samples, got {}",
            m.pow(n as u32),
            values.len()
        )));
    }
    let ratio = edge_ratio(values, n, m, right.as_slice());
    if ratio > q.slice_tail_tol {
        return Err(Error::SliceTailTooLarge { y: y.to_vec(), ratio });
    }
    let dt = grid.dt();
    let (fine, coarse, tail_model) = match (n, right) {
        (1, Some(r)) => {
            let (fine, tail) = corrected_line(values, r, grid);
            let sub: Vec<Complex64> = values.iter().step_by(2).copied().collect();
            let coarse_grid = SliceGrid { half_width: grid.half_width, points: m / 2 };
            let (coarse, _) = corrected_line(&sub, r, &coarse_grid);
            (fine, coarse, tail)
        }
        _ => {
            let fine = slice_dft(values, n, m, grid.step());
            let half = m / 2;
            let sub: Vec<Complex64> = (0..half.pow(n as u32))
                .map(|idx| {
                    let mut rem = idx;
                    let mut src = 0;
                    let mut stride = 1;
                    for _ in 0..n {
                        src += 2 * (rem % half) * stride;
                        rem /= half;
                        stride *= m;
                    }
                    values[src]
                })
                .collect();
            let coarse = slice_dft(&sub, n, half, 2.0 * grid.step());
            (fine, coarse, false)
        }
    };
    // Pointwise differences on the common frequencies, then a running
    // maximum outward from t = 0 in max-norm.
    let half = m / 2;
    let total = fine.len();
    let peak = fine.iter().fold(0.0f64, |a, v| a.max(v.norm()));
    let mut diff_by_ring = vec![0.0f64; m / 2 + 1];
    let mut ring = vec![0usize; total];
    for (idx, slot) in ring.iter_mut().enumerate() {
        let mut rem = idx;
        let mut r = 0usize;
        let mut cidx = 0usize;
        let mut cstride = 1usize;
        let mut inside = true;
        for _ in 0..n {
            let pos = rem % m;
            rem /= m;
            let j = pos as i64 - half as i64;
            r = r.max(j.unsigned_abs() as usize);
            let cj = j + (half / 2) as i64;
            if cj < 0 || cj >= half as i64 {
                inside = false;
            }
            cidx += cj.max(0) as usize * cstride;
            cstride *= half;
        }
        *slot = r;
        let d = if inside { (fine[idx] - coarse[cidx]).norm() } else { f64::INFINITY };
        diff_by_ring[r] = diff_by_ring[r].max(d);
    }
    let mut env = vec![0.0f64; diff_by_ring.len()];
    let mut running = 0.0f64;
    for (r, d) in diff_by_ring.iter().enumerate() {
        running = running.max(*d);
        env[r] = running;
    }
    let floor = 1e-15 * peak;
    let mut out_values = Vec::with_capacity(total);
    let mut error = Vec::with_capacity(total);
    let mut trusted = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rem = idx;
        let mut exponent = 0.0;
        for d in (0..n).rev() {
            let j = (rem % m) as i64 - half as i64;
            rem /= m;
            exponent += 2.0 * PI * y[d] * j as f64 * dt;
        }
        let amp = exponent.exp();
        let v = fine[idx] * amp;
        let e = env[ring[idx]].max(floor) * amp;
        out_values.push(v);
        error.push(e);
        trusted.push(e.is_finite() && e <= q.tol_rel * v.norm().max(q.tol_abs));
    }
    Ok(RecoveredDensity {
        dim: n,
        y: y.to_vec(),
        grid: *grid,
        t_axis: grid.frequencies(),
        values: out_values,
        error,
        trusted,
        tail_model,
        edge_ratio: ratio,
    })
}

/// f(t) = e^{2πy·t} ∫ F(x + iy) e^{-2πix·t} dx on the frequency grid.
pub fn recover_density(f: &TubeFunction, y: &[f64], q: &QuadSpec) -> Result<RecoveredDensity> {
    recover_with(f, y, q, |_, v| v)
}

/// Recovery from the slice of F(z)·m(z) for a multiplier m.
pub(crate) fn recover_with(
    f: &TubeFunction,
    y: &[f64],
    q: &QuadSpec,
    multiplier: impl Fn(&[Complex64], Complex64) -> Complex64 + Sync,
) -> Result<RecoveredDensity> {
    if !f.valid_height(y) {
        return Err(Error::NotInBase(y.to_vec()));
    }
    let grid = q.slice_grid;
    let n = y.len();
    let m = grid.points;
    let raw = f.slice(y, &grid, q)?;
    let values: Vec<Complex64> = raw
        .iter()
        .enumerate()
        .map(|(idx, &v)| {
            let mut z = vec![Complex64::new(0.0, 0.0); n];
            let mut rem = idx;
            for d in (0..n).rev() {
                z[d] = Complex64::new(grid.node(rem % m), y[d]);
                rem /= m;
            }
            multiplier(&z, v)
        })
        .collect();
    let external = matches!(f.source, super::tube::TubeSource::External { .. });
    let right = if n == 1 && !external {
        let z = [Complex64::new(grid.half_width, y[0])];
        Some(multiplier(&z, f.eval(&z, q)?))
    } else {
        None
    };
    recover_from_samples(&values, right, y, &grid, q)
}

/// Residual between recoveries at two heights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndependenceResidual {
    pub value: f64,
    /// Largest |t| of the compared window.
    pub window: f64,
    pub points: usize,
}

/// max |f_{y1}(t) - f_{y2}(t)| over the jointly trusted grid points, skipping
/// jump points of a known density.
pub fn y_independence_residual(
    f: &TubeFunction,
    y1: &[f64],
    y2: &[f64],
    q: &QuadSpec,
) -> Result<IndependenceResidual> {
    let a = recover_density(f, y1, q)?;
    if y1 == y2 {
        return Ok(IndependenceResidual { value: 0.0, window: a.trusted_radius(), points: a.len() });
    }
    let b = recover_density(f, y2, q)?;
    Ok(compare_recoveries(&a, &b, f.density(), f64::INFINITY))
}

/// max |a - b| over points trusted in both within |t| <= radius.
pub fn compare_recoveries(
    a: &RecoveredDensity,
    b: &RecoveredDensity,
    density: Option<&SpectralDensity>,
    radius: f64,
) -> IndependenceResidual {
    let dt = a.grid.dt();
    let mut value = 0.0f64;
    let mut window = 0.0f64;
    let mut points = 0;
    for idx in 0..a.len() {
        if !(a.trusted[idx] && b.trusted[idx]) {
            continue;
        }
        let t = a.point(idx);
        let size = t.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if size > radius {
            continue;
        }
        if density.is_some_and(|d| d.distance_to_jump(&t) < 0.5 * dt) {
            continue;
        }
        value = value.max((a.values[idx] - b.values[idx]).norm());
        window = window.max(size);
        points += 1;
    }
    IndependenceResidual { value, window, points }
}

/// Discrete slice energy Σ|F(x_k + iy)|²Δx and density energy
/// Σ|f(t_j)|² e^{-4πy·t_j} Δt, each with endpoint and tail corrections.
pub fn plancherel_energies(
    tube: &TubeFunction,
    f: &SpectralDensity,
    y: &[f64],
    q: &QuadSpec,
) -> Result<(f64, f64)> {
    if !tube.valid_height(y) {
        return Err(Error::NotInBase(y.to_vec()));
    }
    let grid = q.slice_grid;
    let n = y.len();
    let dx = grid.step();
    let values = tube.slice(y, &grid, q)?;
    let mut slice_energy: f64 = crate::numerics::pairwise_sum(&values.iter().map(|v| v.norm_sqr()).collect::<Vec<_>>())
        * dx.powi(n as i32);
    if n == 1 {
        let right = tube.eval(&[Complex64::new(grid.half_width, y[0])], q)?;
        let corr = LineCorrections::new(&values, right);
        slice_energy += 0.5 * dx * (right.norm_sqr() - values[0].norm_sqr());
        slice_energy += corr.tail_energy(grid.half_width);
    }
    let dt = grid.dt();
    let m = grid.points;
    let axis = grid.frequencies();
    let weight = |t: &[f64]| -> Result<f64> {
        let decay: f64 = t.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        let fv = if f.distance_to_jump(t) < 0.5 * dt {
            let eps = 1e-9;
            let lo: Vec<f64> = t.iter().map(|v| v - eps).collect();
            let hi: Vec<f64> = t.iter().map(|v| v + eps).collect();
            0.5 * (f.eval(&lo)?.powi(2) + f.eval(&hi)?.powi(2))
        } else {
            f.eval(t)?.powi(2)
        };
        Ok(fv * (-4.0 * PI * decay).exp())
    };
    let total = m.pow(n as u32);
    let terms: Vec<f64> = (0..total)
        .map(|idx| {
            let mut rem = idx;
            let mut t = vec![0.0; n];
            for d in (0..n).rev() {
                t[d] = axis[rem % m];
                rem /= m;
            }
            weight(&t)
        })
        .collect::<Result<_>>()?;
    let mut density_energy = crate::numerics::pairwise_sum(&terms) * dt.powi(n as i32);
    if n == 1 {
        // Euler–Maclaurin term at each jump, from one-sided slopes.
        for &tj in &f.jump_points_1d() {
            let h = 1e-6;
            let e = |t: f64| -> Result<f64> { Ok(f.eval(&[t])?.powi(2) * (-4.0 * PI * y[0] * t).exp()) };
            let right_slope = (e(tj + 2.0 * h)? - e(tj + h)?) / h;
            let left_slope = (e(tj - h)? - e(tj - 2.0 * h)?) / h;
            density_energy += dt * dt / 12.0 * (right_slope - left_slope);
        }
    }
    Ok((slice_energy, density_energy))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trunc_exp() -> TubeFunction {
        TubeFunction::closed_form(SpectralDensity::truncated_exponential_1d(1.0, 0).unwrap())
    }

    #[test]
    fn dft_of_gaussian_is_gaussian() {
        let grid = SliceGrid { half_width: 8.0, points: 256 };
        let vals: Vec<Complex64> = (0..256)
            .map(|k| Complex64::new((-PI * grid.node(k).powi(2)).exp(), 0.0))
            .collect();
        let out = slice_dft(&vals, 1, 256, grid.step());
        for (p, v) in out.iter().enumerate() {
            let t = (p as f64 - 128.0) * grid.dt();
            assert!((v - (-PI * t * t).exp()).norm() < 1e-12, "{t}");
        }
    }

    #[test]
    fn two_dim_dft_factorizes() {
        let m = 64;
        let grid = SliceGrid { half_width: 6.0, points: m };
        let g = |x: f64| (-PI * x * x).exp();
        let vals: Vec<Complex64> = (0..m * m)
            .map(|i| Complex64::new(g(grid.node(i / m)) * g(0.5 * grid.node(i % m)), 0.0))
            .collect();
        let out = slice_dft(&vals, 2, m, grid.step());
        for idx in [0, 17, 5 * m + 3, m * m - 1, (m / 2) * m + m / 2] {
            let half = (m / 2) as f64;
            let t0 = ((idx / m) as f64 - half) * grid.dt();
            let t1 = ((idx % m) as f64 - half) * grid.dt();
            let exact = (-PI * t0 * t0).exp() * 2.0 * (-4.0 * PI * t1 * t1).exp();
            assert!((out[idx] - exact).norm() < 1e-9, "{idx}");
        }
    }

    #[test]
    fn truncated_exponential_examples() {
        let q = QuadSpec::default();
        let r = recover_density(&trunc_exp(), &[1.0], &q).unwrap();
        let (v, err, ok) = r.at(&[1.0]).unwrap();
        assert!(ok, "err {err}");
        assert!((v.re - (-2.0 * PI).exp()).abs() <= 1e-3 * (-2.0 * PI).exp(), "{v}");
        let (v, _, _) = r.at(&[-0.5]).unwrap();
        assert!(v.norm() < 1e-4);
        let (v, _, _) = r.at(&[0.0]).unwrap();
        assert!((v.re - 0.5).abs() < 1e-3, "jump midpoint {v}");
        assert!(r.tail_model);
    }

    #[test]
    fn gaussian_example() {
        let q = QuadSpec::default();
        let g = TubeFunction::closed_form(SpectralDensity::gaussian(vec![0.0], 1.0).unwrap());
        let r = recover_density(&g, &[0.3], &q).unwrap();
        let (v, _, ok) = r.at(&[0.0]).unwrap();
        assert!(ok && (v.re - 1.0).abs() < 1e-6);
    }

    #[test]
    fn residual_examples() {
        let q = QuadSpec::default();
        let tf = trunc_exp();
        let r = y_independence_residual(&tf, &[0.5], &[2.0], &q).unwrap();
        assert!(r.value <= 1e-4, "{r:?}");
        assert!(r.window >= 1.0);
        assert_eq!(y_independence_residual(&tf, &[1.0], &[1.0], &q).unwrap().value, 0.0);
        let g = TubeFunction::closed_form(SpectralDensity::gaussian(vec![0.0], 1.0).unwrap());
        let a = recover_density(&g, &[0.1], &q).unwrap();
        let b = recover_density(&g, &[0.5], &q).unwrap();
        let r = compare_recoveries(&a, &b, None, 2.0);
        assert!(r.value <= 1e-6 && r.window >= 2.0 - 1e-9, "{r:?}");
    }

    #[test]
    fn invalid_heights_are_rejected() {
        let q = QuadSpec::default();
        assert!(matches!(recover_density(&trunc_exp(), &[-0.5], &q), Err(Error::NotInBase(_))));
    }

    #[test]
    fn flat_slice_is_rejected() {
        let q = QuadSpec { slice_grid: SliceGrid { half_width: 16.0, points: 256 }, ..QuadSpec::default() };
        let c = TubeFunction::constant(1, Complex64::new(1.0, 0.0), None);
        assert!(matches!(recover_density(&c, &[0.5], &q), Err(Error::SliceTailTooLarge { .. })));
    }

    #[test]
    fn plancherel_identity() {
        let q = QuadSpec::default();
        let f = SpectralDensity::truncated_exponential_1d(1.0, 0).unwrap();
        let tf = TubeFunction::closed_form(f.clone());
        for y in [0.5, 1.0, 2.0] {
            let (a, b) = plancherel_energies(&tf, &f, &[y], &q).unwrap();
            let exact = 1.0 / (4.0 * PI * (1.0 + y));
            assert!(((a - b) / b).abs() < 1e-5, "{y}: {a} {b}");
            assert!(((b - exact) / exact).abs() < 1e-5);
        }
    }
}
