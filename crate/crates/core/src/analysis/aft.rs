//! Log-normal accelerated failure time model with right censoring.
//!
//! `log T ~ Normal(x·β, σ²)`. The optimizer works on `θ = (β, log σ)`.

use serde::{Deserialize, Serialize};

use super::AnalysisError;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
pub const MAX_ITERATIONS: usize = 200;
pub const GRADIENT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AftFit {
    /// Intercept first, then one coefficient per covariate.
    pub beta: Vec<f64>,
    pub sigma: f64,
    pub log_likelihood: f64,
    pub std_errors: Vec<f64>,
    pub p_values: Vec<f64>,
    pub n: usize,
    pub n_censored: usize,
    pub iterations: usize,
    pub distribution: String,
    /// Log-likelihood after each accepted step, starting point first.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

/// Observations in design-matrix form. Each row of `x` starts with the
/// intercept column.
#[derive(Debug, Clone)]
pub struct AftData {
    pub y: Vec<f64>,
    pub censored: Vec<bool>,
    pub x: Vec<Vec<f64>>,
}

impl AftData {
    pub fn with_covariate(log_durations: &[f64], censored: &[bool], covariate: &[f64]) -> Self {
        AftData {
            y: log_durations.to_vec(),
            censored: censored.to_vec(),
            x: covariate.iter().map(|&c| vec![1.0, c]).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len) + 1
    }
}

pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// `log(1 - Φ(z))` and the inverse Mills ratio `φ(z) / (1 - Φ(z))`.
fn log_sf_and_mills(z: f64) -> (f64, f64) {
    let log_pdf = -0.5 * z * z - LN_SQRT_2PI;
    if z < 30.0 {
        let sf = normal_sf(z);
        (libm::log(sf), libm::exp(log_pdf) / sf)
    } else {
        // asymptotic tail series
        let z2 = z * z;
        let z4 = z2 * z2;
        let series = 1.0 - 1.0 / z2 + 3.0 / z4 - 15.0 / (z4 * z2) + 105.0 / (z4 * z4);
        let log_sf = log_pdf - libm::log(z) + libm::log(series);
        (log_sf, z / series)
    }
}

fn split(theta: &[f64]) -> (&[f64], f64) {
    let (beta, eta) = theta.split_at(theta.len() - 1);
    (beta, eta[0])
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Neumaier-compensated sum. Near the optimum a Newton step changes the
/// log-likelihood by less than the rounding error of a plain sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn log_likelihood(theta: &[f64], data: &AftData) -> f64 {
    let (beta, eta) = split(theta);
    let sigma = libm::exp(eta);
    compensated_sum(
        data.y
            .iter()
            .zip(&data.x)
            .zip(&data.censored)
            .map(|((y, x), &c)| {
                let z = (y - dot(x, beta)) / sigma;
                if c {
                    log_sf_and_mills(z).0
                } else {
                    -eta - LN_SQRT_2PI - 0.5 * z * z
                }
            }),
    )
}

/// Analytic gradient and Hessian of [`log_likelihood`].
pub fn gradient_hessian(theta: &[f64], data: &AftData) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (beta, eta) = split(theta);
    let p = theta.len();
    let k = p - 1;
    let sigma = libm::exp(eta);
    let mut g = vec![0.0; p];
    let mut h = vec![vec![0.0; p]; p];
    for ((y, x), &c) in data.y.iter().zip(&data.x).zip(&data.censored) {
        let z = (y - dot(x, beta)) / sigma;
        // per-observation derivatives in (beta direction scale, eta)
        let (gb, ge, hbb, hbe, hee) = if c {
            let lam = log_sf_and_mills(z).1;
            let d2 = -lam * (lam - z);
            (lam, lam * z, d2, d2 * z - lam, d2 * z * z - lam * z)
        } else {
            (z, z * z - 1.0, -1.0, -2.0 * z, -2.0 * z * z)
        };
        for i in 0..k {
            g[i] += gb * x[i] / sigma;
            h[i][k] += hbe * x[i] / sigma;
            for j in 0..k {
                h[i][j] += hbb * x[i] * x[j] / (sigma * sigma);
            }
        }
        g[k] += ge;
        h[k][k] += hee;
    }
    for i in 0..k {
        h[k][i] = h[i][k];
    }
    (g, h)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &v)| {
            let mut r = row.clone();
            r.push(v);
            r
        })
        .collect();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |s, v| s.max(v.abs()))
        .max(1e-300);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() <= scale * 1e-13 {
            return None;
        }
        m.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for c in col..=n {
                m[row][c] -= f * m[col][c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| m[row][c] * x[c]).sum();
        x[row] = (m[row][n] - s) / m[row][row];
    }
    Some(x)
}

fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        cols.push(solve(a, &e)?);
    }
    Some(
        (0..n)
            .map(|r| (0..n).map(|c| cols[c][r]).collect())
            .collect(),
    )
}

/// Ordinary least squares on all rows; a starting point for Newton.
fn initial_theta(data: &AftData) -> Option<Vec<f64>> {
    let k = data.dim() - 1;
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    for (x, y) in data.x.iter().zip(&data.y) {
        for i in 0..k {
            xty[i] += x[i] * y;
            for j in 0..k {
                xtx[i][j] += x[i] * x[j];
            }
        }
    }
    let beta = solve(&xtx, &xty)?;
    let n = data.y.len() as f64;
    let rss: f64 = data
        .x
        .iter()
        .zip(&data.y)
        .map(|(x, y)| (y - dot(x, &beta)).powi(2))
        .sum();
    let sigma = (rss / n).sqrt().max(1e-3);
    let mut theta = beta;
    theta.push(sigma.ln());
    Some(theta)
}

pub fn standard_normal_two_sided_p(z: f64) -> f64 {
    (2.0 * normal_sf(z.abs())).clamp(0.0, 1.0)
}

/// Maximum likelihood by damped Newton ascent. A step that does not raise
/// the log-likelihood is halved; when the Hessian is not negative definite
/// the step falls back to the gradient direction.
pub fn fit(data: &AftData) -> Result<AftFit, AnalysisError> {
    let n = data.y.len();
    if data.censored.len() != n || data.x.len() != n {
        return Err(AnalysisError::LengthMismatch {
            left: n,
            right: data.x.len().min(data.censored.len()),
        });
    }
    let p = data.dim();
    if n < 10.max(p) {
        return Err(AnalysisError::TooFew {
            needed: 10.max(p),
            got: n,
        });
    }
    let n_censored = data.censored.iter().filter(|c| **c).count();
    if n_censored == n {
        return Err(AnalysisError::AllCensored);
    }
    if data
        .y
        .iter()
        .chain(data.x.iter().flatten())
        .any(|v| !v.is_finite())
    {
        return Err(AnalysisError::NonFinite);
    }
    let mut theta = initial_theta(data).ok_or(AnalysisError::Singular)?;
    let mut ll = log_likelihood(&theta, data);
    let mut trace = vec![ll];
    let mut iterations = 0;
    loop {
        let (g, h) = gradient_hessian(&theta, data);
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax < GRADIENT_TOLERANCE {
            break;
        }
        if iterations == MAX_ITERATIONS {
            return Err(AnalysisError::NonConvergence { iterations });
        }
        iterations += 1;
        let neg_h: Vec<Vec<f64>> = h.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
        let mut dir = solve(&neg_h, &g)
            .filter(|d| dot(d, &g) > 0.0)
            .unwrap_or_else(|| g.clone());
        let mut accepted = false;
        let noise = 1e-12 * ll.abs().max(1.0);
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t + d).collect();
            let cand_ll = log_likelihood(&cand, data);
            // a change lost in rounding still counts if the gradient shrinks
            let flat_but_closer = cand_ll.is_finite() && ll - cand_ll <= noise && {
                let (cg, _) = gradient_hessian(&cand, data);
                cg.iter().fold(0.0f64, |m, v| m.max(v.abs())) < gmax
            };
            if cand_ll.is_finite() && (cand_ll >= ll || flat_but_closer) {
                theta = cand;
                ll = cand_ll.max(ll);
                trace.push(cand_ll);
                accepted = true;
                break;
            }
            dir.iter_mut().for_each(|d| *d *= 0.5);
        }
        if !accepted {
            // no ascent left at machine precision
            break;
        }
    }
    let (_, h) = gradient_hessian(&theta, data);
    let info: Vec<Vec<f64>> = h.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
    let cov = invert(&info).ok_or(AnalysisError::Singular)?;
    let (beta, eta) = split(&theta);
    let std_errors: Vec<f64> = (0..beta.len()).map(|i| cov[i][i].max(0.0).sqrt()).collect();
    if std_errors.iter().any(|s| !s.is_finite() || *s == 0.0) {
        return Err(AnalysisError::Singular);
    }
    let p_values = beta
        .iter()
        .zip(&std_errors)
        .map(|(b, se)| standard_normal_two_sided_p(b / se))
        .collect();
    Ok(AftFit {
        beta: beta.to_vec(),
        sigma: libm::exp(eta),
        log_likelihood: ll,
        std_errors,
        p_values,
        n,
        n_censored,
        iterations,
        distribution: "lognormal".into(),
        trace,
    })
}

/// One standardized covariate plus intercept.
pub fn fit_aft(
    log_durations: &[f64],
    censored: &[bool],
    covariate: &[f64],
) -> Result<AftFit, AnalysisError> {
    if log_durations.len() != censored.len() || censored.len() != covariate.len() {
        return Err(AnalysisError::LengthMismatch {
            left: log_durations.len(),
            right: covariate.len().min(censored.len()),
        });
    }
    fit(&AftData::with_covariate(log_durations, censored, covariate))
}

/// z-scores with the population standard deviation.
pub fn standardize(values: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    if !(sd > 0.0) {
        return Err(AnalysisError::ConstantInput);
    }
    Ok(values.iter().map(|v| (v - mean) / sd).collect())
}
