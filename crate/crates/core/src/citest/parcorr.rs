use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{CiTestResult, FitDiagnostics};
use crate::error::{Error, Result};

/// Least-squares fit of `v` on `[1, Z]`. Returns residuals and coefficients
/// (intercept first).
pub fn ols_fit(v: &[f64], z: &[&[f64]]) -> Result<(Vec<f64>, FitDiagnostics)> {
    let n = v.len();
    if z.is_empty() {
        if n == 0 {
            return Err(Error::SampleSize("empty vector".into()));
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        return Ok((v.iter().map(|x| x - mean).collect(), FitDiagnostics::Demean { mean }));
    }
    for (j, col) in z.iter().enumerate() {
        if col.len() != n {
            return Err(Error::Config(format!("conditioning column {j} has length {}, expected {n}", col.len())));
        }
    }
    let p = z.len() + 1;
    if p >= n {
        return Err(Error::SampleSize(format!("{n} samples for {p} regressors")));
    }
    let design = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { z[j - 1][i] });
    let qr = design.qr();
    let r = qr.r();
    let max_diag = (0..p).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    if (0..p).any(|j| r[(j, j)].abs() <= 1e-10 * max_diag.max(f64::MIN_POSITIVE)) {
        return Err(Error::Singular("conditioning set is rank deficient".into()));
    }
    let q = qr.q();
    let rhs = DVector::from_column_slice(v);
    let qtv = q.transpose() * &rhs;
    let fitted = &q * &qtv;
    let beta = r.solve_upper_triangular(&qtv).ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    let resid = (rhs - fitted).iter().copied().collect();
    Ok((resid, FitDiagnostics::Ols { coefficients: beta.iter().copied().collect() }))
}

/// Residuals of the least-squares regression of `v` on `[1, Z]`.
pub fn ols_residuals(v: &[f64], z: &[&[f64]]) -> Result<Vec<f64>> {
    ols_fit(v, z).map(|(r, _)| r)
}

/// Partial correlation test with a two-sided Student's-t p-value on
/// `T - D_Z - 2` degrees of freedom.
pub fn parcorr_test(x: &[f64], y: &[f64], z: &[&[f64]]) -> Result<CiTestResult> {
    let t = x.len();
    if y.len() != t {
        return Err(Error::Config(format!("x has {t} samples, y has {}", y.len())));
    }
    let d = z.len();
    if t < d + 4 {
        return Err(Error::SampleSize(format!("T = {t} < D_Z + 4 = {}", d + 4)));
    }
    let rx = ols_residuals(x, z)?;
    let ry = ols_residuals(y, z)?;
    let sxx: f64 = rx.iter().map(|a| a * a).sum();
    let syy: f64 = ry.iter().map(|a| a * a).sum();
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| a * b).sum();
    let scale_x: f64 = x.iter().map(|a| a * a).sum::<f64>().max(1.0);
    let scale_y: f64 = y.iter().map(|a| a * a).sum::<f64>().max(1.0);
    if sxx <= 1e-24 * scale_x || syy <= 1e-24 * scale_y {
        return Err(Error::DegenerateTest("zero-variance residuals".into()));
    }
    let dof = t - d - 2;
    let mut r = sxy / (sxx * syy).sqrt();
    let mut notes = Vec::new();
    let p_value = if r.abs() >= 1.0 - 1e-14 {
        r = r.signum();
        notes.push("saturated: |r| = 1, p-value set to 0".to_string());
        0.0
    } else {
        let stat = r * (dof as f64 / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, dof as f64).map_err(|e| Error::Numerical(format!("Student's t: {e}")))?;
        (2.0 * dist.sf(stat.abs())).clamp(0.0, 1.0)
    };
    Ok(CiTestResult { statistic: r, p_value, sample_size: t, cond_dim: d, dof: Some(dof), n_permutations: None, notes })
}
