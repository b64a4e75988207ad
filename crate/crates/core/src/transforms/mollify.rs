use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quad_spec::QuadSpec;
use super::recover::{recover_with, RecoveredDensity};
use super::tube::TubeFunction;
use crate::cone_geometry::{nnls, ConeSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MollifierForm {
    /// (1 + ε Σ z_j²)^N.
    SumSquares,
    /// ∏_j (1 - iε e_j·z)^{2N}.
    ProductLinear,
}

/// Check that the basis has n independent vectors in the interior of Γ*.
pub fn validate_basis(basis: &[Vec<f64>], n: usize, cone: Option<&ConeSpec>) -> Result<()> {
    if basis.len() != n || basis.iter().any(|e| e.len() != n) {
        return Err(Error::BadBasis(format!("need {n} vectors of length {n}")));
    }
    if nnls::invert(basis).is_none() {
        return Err(Error::BadBasis("basis vectors are linearly dependent".into()));
    }
    if let Some(c) = cone {
        let dual = c.dual()?;
        for e in basis {
            if !dual.contains(e, false)? {
                return Err(Error::BadBasis(format!("{e:?} is not interior to the dual cone")));
            }
        }
    }
    Ok(())
}

/// l_ε(z) for the chosen form.
pub fn mollifier_eval(
    z: &[Complex64],
    eps: f64,
    n_pow: u32,
    basis: &[Vec<f64>],
    form: MollifierForm,
) -> Result<Complex64> {
    if !(eps >= 0.0) {
        return Err(Error::BadParameters(format!("mollifier ε = {eps} must be nonnegative")));
    }
    match form {
        MollifierForm::SumSquares => {
            let s: Complex64 = z.iter().map(|c| c * c).sum();
            Ok((1.0 + s * eps).powu(n_pow))
        }
        MollifierForm::ProductLinear => {
            validate_basis(basis, z.len(), None)?;
            let i = Complex64::i();
            let mut acc = Complex64::new(1.0, 0.0);
            for e in basis {
                let ez: Complex64 = e.iter().zip(z).map(|(a, b)| b * a).sum();
                acc *= (1.0 - i * eps * ez).powu(2 * n_pow);
            }
            Ok(acc)
        }
    }
}

/// Smallest eigenvalue of Σ e_j e_jᵀ by cyclic Jacobi rotations.
fn gram_min_eigenvalue(basis: &[Vec<f64>]) -> f64 {
    let n = basis.first().map_or(0, Vec::len);
    let mut a = vec![vec![0.0; n]; n];
    for e in basis {
        for r in 0..n {
            for c in 0..n {
                a[r][c] += e[r] * e[c];
            }
        }
    }
    for _ in 0..64 {
        let off: f64 = (0..n).flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c))).map(|(r, c)| a[r][c] * a[r][c]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).fold(f64::INFINITY, f64::min)
}

/// Certified lower bound for |l_ε(z)|, when its hypotheses hold.
///
/// SumSquares needs ε <= 1/(2R0²) and |y| <= R0; ProductLinear needs
/// e_j·y >= 0 for every basis vector.
pub fn mollifier_lower_bound(
    z: &[Complex64],
    eps: f64,
    n_pow: u32,
    basis: &[Vec<f64>],
    form: MollifierForm,
    r0: f64,
) -> Option<f64> {
    let x2: f64 = z.iter().map(|c| c.re * c.re).sum();
    let y2: f64 = z.iter().map(|c| c.im * c.im).sum();
    match form {
        MollifierForm::SumSquares => {
            (eps <= 0.5 / (r0 * r0) && y2.sqrt() <= r0).then(|| (0.5 + eps * x2).powi(n_pow as i32))
        }
        MollifierForm::ProductLinear => {
            let ok = basis
                .iter()
                .all(|e| e.iter().zip(z).map(|(a, c)| a * c.im).sum::<f64>() >= 0.0);
            ok.then(|| (1.0 + eps * eps * gram_min_eigenvalue(basis) * x2).powi(n_pow as i32))
        }
    }
}

/// Output of the mollified recovery.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MollifiedRecovery {
    /// The ε → 0 extrapolated density.
    pub density: RecoveredDensity,
    pub epsilons: Vec<f64>,
    /// L² norm of g_{ε_{k+1}} - g_{ε_k} over the jointly trusted window.
    pub successive_differences: Vec<f64>,
    /// Last successive difference over the one before it.
    pub contraction: f64,
}

/// Lagrange weights of the polynomial through (ε_i, g_i) evaluated at 0.
fn extrapolation_weights(eps: &[f64]) -> Vec<f64> {
    (0..eps.len())
        .map(|i| {
            (0..eps.len())
                .filter(|&j| j != i)
                .map(|j| eps[j] / (eps[j] - eps[i]))
                .product()
        })
        .collect()
}

/// Recovery through the mollified slices F/l_ε with extrapolation ε → 0
/// through the last three iterates.
pub fn recover_density_mollified(
    f: &TubeFunction,
    y: &[f64],
    q: &QuadSpec,
    n_pow: u32,
    basis: &[Vec<f64>],
    form: MollifierForm,
) -> Result<MollifiedRecovery> {
    if form == MollifierForm::ProductLinear {
        let cone = f.base.as_ref().and_then(|b| b.as_cone());
        validate_basis(basis, y.len(), cone)?;
    }
    if q.epsilon_schedule.len() < 3 {
        return Err(Error::NoConvergence(format!(
            "extrapolation needs at least three ε values, got {}",
            q.epsilon_schedule.len()
        )));
    }
    let mut iterates = Vec::with_capacity(q.epsilon_schedule.len());
    for &eps in &q.epsilon_schedule {
        let g = recover_with(f, y, q, |z, v| {
            let l = mollifier_eval(z, eps, n_pow, basis, form).unwrap_or(Complex64::new(f64::NAN, 0.0));
            v / l
        })?;
        iterates.push(g);
    }
    let cell = iterates[0].grid.dt().powi(y.len() as i32);
    let joint = |a: &RecoveredDensity, b: &RecoveredDensity| -> f64 {
        let sq: f64 = (0..a.len())
            .filter(|&i| a.trusted[i] && b.trusted[i])
            .map(|i| (a.values[i] - b.values[i]).norm_sqr())
            .sum();
        (sq * cell).sqrt()
    };
    let diffs: Vec<f64> = iterates.windows(2).map(|w| joint(&w[0], &w[1])).collect();
    let k = diffs.len();
    let contraction = if diffs[k - 2] > 0.0 { diffs[k - 1] / diffs[k - 2] } else { 0.0 };
    if !(contraction < 1.0) {
        return Err(Error::NoConvergence(format!(
            "successive differences {:?} are not decreasing",
            diffs
        )));
    }
    let last = &iterates[iterates.len() - 3..];
    let eps = &q.epsilon_schedule[q.epsilon_schedule.len() - 3..];
    let w3 = extrapolation_weights(eps);
    let w2 = extrapolation_weights(&eps[1..]);
    let mut out = last[2].clone();
    for i in 0..out.len() {
        let quad: Complex64 = (0..3).map(|j| last[j].values[i] * w3[j]).sum();
        let lin: Complex64 = (0..2).map(|j| last[j + 1].values[i] * w2[j]).sum();
        let propagated: f64 = (0..3).map(|j| w3[j].abs() * last[j].error[i]).sum();
        let err = propagated + (quad - lin).norm();
        out.values[i] = quad;
        out.error[i] = err;
        out.trusted[i] = last.iter().all(|g| g.trusted[i]) && err <= q.tol_rel * quad.norm().max(q.tol_abs);
    }
    Ok(MollifiedRecovery {
        density: out,
        epsilons: q.epsilon_schedule.clone(),
        successive_differences: diffs,
        contraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone_geometry::BaseRegion;
    use crate::spectral_models::SpectralDensity;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn mollifier_examples() {
        let v = mollifier_eval(&[c(0.0, 1.0)], 1.0, 1, &[vec![1.0]], MollifierForm::ProductLinear).unwrap();
        assert!((v - 4.0).norm() < 1e-15);
        let v = mollifier_eval(&[c(3.0, 0.0)], 0.1, 2, &[], MollifierForm::SumSquares).unwrap();
        assert!((v - 3.61).norm() < 1e-14);
        let v = mollifier_eval(&[c(3.0, 0.7)], 0.0, 2, &[], MollifierForm::SumSquares).unwrap();
        assert_eq!(v, c(1.0, 0.0));
    }

    #[test]
    fn bad_basis_is_rejected() {
        let dep = vec![vec![1.0, 1.0], vec![2.0, 2.0]];
        assert!(matches!(validate_basis(&dep, 2, None), Err(Error::BadBasis(_))));
        let q = ConeSpec::orthant(2);
        let outside = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(matches!(validate_basis(&outside, 2, Some(&q)), Err(Error::BadBasis(_))));
        let inside = vec![vec![1.0, 0.2], vec![0.2, 1.0]];
        assert!(validate_basis(&inside, 2, Some(&q)).is_ok());
    }

    #[test]
    fn lower_bounds_hold_on_samples() {
        let basis = vec![vec![1.0, 0.3], vec![0.2, 1.0]];
        for (x0, x1, y0, y1) in [(0.0, 0.0, 0.1, 0.2), (3.0, -2.0, 0.5, 0.1), (-10.0, 7.0, 1.0, 1.0)] {
            let z = [c(x0, y0), c(x1, y1)];
            for eps in [0.01, 0.1, 0.5] {
                let v = mollifier_eval(&z, eps, 2, &basis, MollifierForm::ProductLinear).unwrap();
                let lb = mollifier_lower_bound(&z, eps, 2, &basis, MollifierForm::ProductLinear, 0.0).unwrap();
                assert!(v.norm() >= lb * (1.0 - 1e-12));
                let v = mollifier_eval(&z, eps, 2, &basis, MollifierForm::SumSquares).unwrap();
                if let Some(lb) = mollifier_lower_bound(&z, eps, 2, &basis, MollifierForm::SumSquares, 1.5) {
                    assert!(v.norm() >= lb * (1.0 - 1e-12));
                }
            }
        }
        assert!((gram_min_eigenvalue(&[vec![2.0, 0.0], vec![0.0, 1.0]]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extrapolation_weights_reproduce_quadratics() {
        let eps = [0.2, 0.1, 0.05];
        let w = extrapolation_weights(&eps);
        let g = |e: f64| 3.0 + 2.0 * e - 5.0 * e * e;
        let v: f64 = eps.iter().zip(&w).map(|(e, wi)| g(*e) * wi).sum();
        assert!((v - 3.0).abs() < 1e-12);
        assert!((w[0] - 1.0 / 3.0).abs() < 1e-12 && (w[1] + 2.0).abs() < 1e-12 && (w[2] - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn truncated_exponential_mollified() {
        let q = QuadSpec::default();
        let f = TubeFunction::closed_form(SpectralDensity::truncated_exponential_1d(1.0, 0).unwrap());
        let r = recover_density_mollified(&f, &[1.0], &q, 1, &[vec![1.0]], MollifierForm::ProductLinear).unwrap();
        let (v, _, _) = r.density.at(&[1.0]).unwrap();
        let exact = (-2.0 * PI).exp();
        assert!((v.re - exact).abs() <= 1e-3, "{v} {exact}");
        // g_ε(1) = e^{-2π}(1-ε)^{-2}; the quadratic extrapolant of that is the oracle.
        let w = extrapolation_weights(&q.epsilon_schedule);
        let predicted: f64 = q.epsilon_schedule.iter().zip(&w).map(|(e, wi)| wi / ((1.0 - e) * (1.0 - e))).sum();
        assert!((v.re / exact - predicted).abs() < 1e-6, "{} {predicted}", v.re / exact);
        assert!(r.contraction < 1.0);
    }

    #[test]
    fn triangle_mollified_at_origin() {
        let q = QuadSpec::default();
        let base = BaseRegion::cone(ConeSpec::orthant(1)).unwrap();
        let f = TubeFunction::closed_form(SpectralDensity::triangle()).with_base(base);
        let r = recover_density_mollified(&f, &[0.2], &q, 1, &[vec![1.0]], MollifierForm::ProductLinear).unwrap();
        let (v, _, _) = r.density.at(&[0.0]).unwrap();
        assert!((v - 1.0).norm() <= 1e-3, "{v}");
    }

    #[test]
    fn short_schedule_is_rejected() {
        let q = QuadSpec { epsilon_schedule: vec![0.1], ..QuadSpec::default() };
        let f = TubeFunction::closed_form(SpectralDensity::truncated_exponential_1d(1.0, 0).unwrap());
        let r = recover_density_mollified(&f, &[1.0], &q, 1, &[vec![1.0]], MollifierForm::ProductLinear);
        assert!(matches!(r, Err(Error::NoConvergence(_))));
    }
}
