//! Damped Gauss-Newton (Levenberg-Marquardt) for small weighted
//! nonlinear least-squares problems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LsqOptions {
    pub max_iter: usize,
    /// Relative reduction of the cost below which iteration stops.
    pub cost_tol: f64,
    /// Relative parameter step below which iteration stops.
    pub step_tol: f64,
}

impl Default for LsqOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            cost_tol: 1e-15,
            step_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LsqFit {
    pub params: Vec<f64>,
    /// `(JᵀJ)⁻¹` evaluated at the optimum, with residuals already weighted.
    pub covariance: DMatrix<f64>,
    /// Sum of squared weighted residuals.
    pub chi2: f64,
    pub dof: usize,
    pub iterations: usize,
}

impl LsqFit {
    pub fn std_errors(&self) -> Vec<f64> {
        (0..self.params.len())
            .map(|i| self.covariance[(i, i)].max(0.0).sqrt())
            .collect()
    }

    /// Standard errors scaled by the reduced chi-square, as is customary when
    /// the residual weights are only relative.
    pub fn scaled_std_errors(&self) -> Vec<f64> {
        let s = if self.dof > 0 {
            (self.chi2 / self.dof as f64).sqrt()
        } else {
            1.0
        };
        self.std_errors().into_iter().map(|e| e * s).collect()
    }
}

fn jacobian<F>(f: &F, p: &[f64], r0: &DVector<f64>) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let m = r0.len();
    let n = p.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut q = p.to_vec();
    for j in 0..n {
        let h = 1e-6 * p[j].abs().max(1e-6);
        q[j] = p[j] + h;
        let up = f(&q);
        q[j] = p[j] - h;
        let dn = f(&q);
        q[j] = p[j];
        for i in 0..m {
            jac[(i, j)] = (up[i] - dn[i]) / (2.0 * h);
        }
    }
    jac
}

fn cost(r: &DVector<f64>) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Minimize `Σ rᵢ(p)²` where `residuals` returns the already-weighted residuals.
pub fn levenberg_marquardt<F>(residuals: F, p0: &[f64], opts: &LsqOptions) -> Result<LsqFit>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = p0.len();
    let mut p = p0.to_vec();
    let mut r = DVector::from_vec(residuals(&p));
    let m = r.len();
    if m < n {
        return Err(Error::FitDivergence(format!(
            "{m} residuals for {n} parameters"
        )));
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitDivergence("non-finite residual at start".into()));
    }
    let mut c = cost(&r);
    let mut lambda = 1e-3;
    let mut iterations = 0;

    for it in 0..opts.max_iter {
        iterations = it + 1;
        let jac = jacobian(&residuals, &p, &r);
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let mut accepted = false;
        let mut small_step = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let Some(delta) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(a, d)| a + d).collect();
            let rt = DVector::from_vec(residuals(&trial));
            let ct = cost(&rt);
            if ct.is_finite() && ct <= c {
                let rel_step = delta
                    .iter()
                    .zip(&p)
                    .map(|(d, v)| d.abs() / v.abs().max(1e-12))
                    .fold(0.0, f64::max);
                let rel_cost = (c - ct) / c.max(1e-300);
                p = trial;
                r = rt;
                c = ct;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                small_step = rel_step < opts.step_tol || rel_cost < opts.cost_tol;
                break;
            }
            lambda *= 4.0;
            if lambda > 1e16 {
                break;
            }
        }
        if !accepted || small_step || c == 0.0 {
            break;
        }
    }

    let jac = jacobian(&residuals, &p, &r);
    let jtj = jac.transpose() * &jac;
    let covariance = jtj
        .clone()
        .try_inverse()
        .or_else(|| jtj.pseudo_inverse(1e-300).ok())
        .ok_or_else(|| Error::FitDivergence("singular normal matrix".into()))?;
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitDivergence("non-finite parameters".into()));
    }
    Ok(LsqFit {
        params: p,
        covariance,
        chi2: c,
        dof: m - n,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential_data() {
        let ts: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 2.0 * (-t / 3.0f64).exp() + 0.5).collect();
        let fit = levenberg_marquardt(
            |p| {
                ts.iter()
                    .zip(&ys)
                    .map(|(t, y)| p[0] * (-t / p[1]).exp() + p[2] - y)
                    .collect()
            },
            &[1.0, 1.0, 0.0],
            &LsqOptions::default(),
        )
        .unwrap();
        assert!((fit.params[0] - 2.0).abs() < 1e-8);
        assert!((fit.params[1] - 3.0).abs() < 1e-8);
        assert!((fit.params[2] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn linear_model_covariance_matches_closed_form() {
        // y = a + b x with unit weights: cov = (XᵀX)⁻¹.
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.1, 4.9, 7.0];
        let fit = levenberg_marquardt(
            |p| xs.iter().zip(&ys).map(|(x, y)| p[0] + p[1] * x - y).collect(),
            &[0.0, 0.0],
            &LsqOptions::default(),
        )
        .unwrap();
        let (s0, s1, s2) = (4.0, 6.0, 14.0);
        let det = s0 * s2 - s1 * s1;
        assert!((fit.covariance[(0, 0)] - s2 / det).abs() < 1e-6);
        assert!((fit.covariance[(1, 1)] - s0 / det).abs() < 1e-6);
    }
}
