//! Covariance of the Gaussian limit
//! `Σ(h,h′) = (η−3)γ_hγ_{h′} + Σ_k [γ_kγ_{k−h+h′} + γ_{k+h′}γ_{k−h}]`.

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::beta::beta;

use crate::coeffmodel::{explicit_acov_all, CoefficientModel, SlowlyVarying};
use crate::conv::Convolver;
use crate::error::{Error, Result};
use crate::streams::{derive_seed, salt, StreamRng};
use crate::tail::{power_tail, product_tail};

/// Largest `K` tried for the exact part of the `k`-sum.
const MAX_EXACT_LOG2: u32 = 20;

/// `S(m) = Σ_{k∈ℤ} γ_k γ_{k+m}` for `m = 0..=max_m` from `γ_0..γ_{K+max_m}`
/// plus a tail `T(m) ≈ Σ_{k≥K} γ_k γ_{k+m}`.
fn lag_products(gamma: &[f64], k: usize, max_m: usize, tails: &[f64]) -> Vec<f64> {
    (0..=max_m)
        .map(|m| {
            let half: f64 = (0..k).map(|i| gamma[i] * gamma[i + m]).sum::<f64>() + tails[m];
            let middle: f64 = (1..m).map(|i| gamma[i] * gamma[m - i]).sum();
            let overlap = if m == 0 { gamma[0] * gamma[0] } else { 0.0 };
            2.0 * half + middle - overlap
        })
        .collect()
}

fn assemble(gamma: &[f64], s: &[f64], eta: f64, lags: usize) -> Vec<Vec<f64>> {
    (0..=lags)
        .map(|h| {
            (0..=lags)
                .map(|g| (eta - 3.0) * (gamma[h] * gamma[g]) + s[h.abs_diff(g)] + s[h + g])
                .collect()
        })
        .collect()
}

/// `γ_0..γ_{len−1}` of the constant-`l` power law, exact up to the
/// Euler–Maclaurin tail error: an FFT cross-correlation over `j < J`
/// plus `C² Σ_{j≥J} j^{d−1}(j+k)^{d−1}` per lag.
fn power_law_acov(d: f64, c_d: f64, psi0: f64, sigma2: f64, len: usize) -> Vec<f64> {
    let j_cap = 2 * len;
    let psi: Vec<f64> = (0..j_cap + len)
        .map(|j| if j == 0 { psi0 } else { c_d * (j as f64).powf(d - 1.0) })
        .collect();
    // Σ_{j<J} ψ(j)ψ(j+k) is the convolution of reversed ψ[..J] with ψ.
    let head_kernel: Vec<f64> = psi[..j_cap].iter().rev().copied().collect();
    let conv = Convolver::linear(&head_kernel, psi.len()).apply(&psi);
    (0..len)
        .map(|k| {
            let tail = power_tail(d - 1.0, j_cap as u64, k as f64).value;
            sigma2 * (conv[j_cap - 1 + k] + c_d * c_d * tail)
        })
        .collect()
}

/// The Gaussian limit covariance for `h, h′ = 0..=lags`.
///
/// Explicit models are summed exactly. For power laws with `d < 1/4`, `γ_k`
/// is computed exactly for `k < K` and beyond that replaced by
/// `a k^{2d−1} + b k^{d−1}`, with `a = σ²C_d²B(d, 1−2d)` and `b` fitted at
/// `K`; the reported bound doubles the fit's relative error at `K/2`.
pub fn gaussian_limit_cov(
    coeff: &CoefficientModel,
    sigma2: f64,
    eta: f64,
    lags: usize,
    tol: f64,
) -> Result<Vec<Vec<f64>>> {
    coeff.validate()?;
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "tolerance must be positive"));
    }
    let max_m = 2 * lags;
    match *coeff {
        CoefficientModel::Explicit(ref c) => {
            let len = c.len() + max_m + 1;
            let gamma = explicit_acov_all(c, sigma2, len);
            let s = lag_products(&gamma, c.len(), max_m, &vec![0.0; max_m + 1]);
            Ok(assemble(&gamma, &s, eta, lags))
        }
        CoefficientModel::PowerLaw {
            d,
            c_d,
            slowly,
            psi0,
        } => {
            if d >= 0.25 {
                return Err(Error::CovarianceDiverges { d });
            }
            if slowly != SlowlyVarying::Constant {
                return Err(Error::invalid(
                    "l",
                    "the Gaussian limit covariance needs the constant slowly varying factor",
                ));
            }
            let p = 2.0 * d - 1.0;
            let q = d - 1.0;
            let a = sigma2 * c_d * c_d * beta(d, 1.0 - 2.0 * d);
            let mut best = f64::INFINITY;
            for log2 in 12..=MAX_EXACT_LOG2 {
                let k = 1usize << log2;
                let gamma = power_law_acov(d, c_d, psi0, sigma2, k + max_m + 1);
                let kf = k as f64;
                let b = (gamma[k] - a * kf.powf(p)) / kf.powf(q);
                let fit = |x: f64| a * x.powf(p) + b * x.powf(q);
                let probe = k / 2;
                let rel = (fit(probe as f64) / gamma[probe] - 1.0).abs();
                let tails: Vec<f64> = (0..=max_m)
                    .map(|m| {
                        let mf = m as f64;
                        let t = |e, f| product_tail(e, f, k as u64, mf).value;
                        a * a * t(p, p) + a * b * (t(p, q) + t(q, p)) + b * b * t(q, q)
                    })
                    .collect();
                let s = lag_products(&gamma, k, max_m, &tails);
                // Each tail term carries the fit error twice (γ_k and γ_{k+m}).
                let bound = 2.0 * 2.0 * rel * tails.iter().fold(0.0f64, |acc, t| acc.max(t.abs()));
                let cov = assemble(&gamma, &s, eta, lags);
                if bound <= tol * cov[0][0].abs() {
                    return Ok(cov);
                }
                best = best.min(bound / cov[0][0].abs());
            }
            Err(Error::ToleranceUnattainable {
                requested: tol,
                achieved: best,
            })
        }
    }
}

/// Lower-triangular factor `L` with `L Lᵀ = Σ`; columns with a
/// nonpositive pivot (numerically singular directions) are zeroed.
pub(crate) fn cholesky_psd(cov: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = cov.len();
    let scale = (0..n).map(|i| cov[i][i].abs()).fold(0.0, f64::max);
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let pivot = cov[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        if pivot <= 1e-14 * scale {
            continue;
        }
        let root = pivot.sqrt();
        l[j][j] = root;
        for i in j + 1..n {
            let v = cov[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            l[i][j] = v / root;
        }
    }
    l
}

/// `n` i.i.d. draws of `N(0, Σ)`; draw `i` uses its own stream.
pub fn sample_gaussian_vector(cov: &[Vec<f64>], n: usize, seed: u64) -> Vec<Vec<f64>> {
    let l = cholesky_psd(cov);
    let dim = cov.len();
    (0..n)
        .map(|i| {
            let mut rng = StreamRng::seed_from_u64(derive_seed(seed, &[salt::GAUSSIAN_LIMIT, i as u64]));
            let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            (0..dim)
                .map(|r| (0..=r).map(|c| l[r][c] * g[c]).sum())
                .collect()
        })
        .collect()
}
