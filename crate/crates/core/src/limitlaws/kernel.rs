//! L² distances between the step kernels `f_{N,h}` and the Rosenblatt
//! kernel `f(x₁,x₂) = ∫_0^1 (v−x₁)_+^{d−1}(v−x₂)_+^{d−1} dv` on `[−K, 1]²`.
//!
//! `f_{N,h}` equals `C_{N,h}(k,k′) = N^{1−2d} Σ_{t=1}^{N} ψ(t−k)ψ(t+h−k′)` on
//! the cell `[k/N,(k+1)/N) × [k′/N,(k′+1)/N)` for `k ≠ k′` and vanishes on
//! diagonal cells. All sums over `(k,k′)` collapse onto the Gram table
//! `G(t,s) = Σ_k ψ(t−k)ψ(s−k)`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exec::{map_indexed, Schedule};
use crate::quad;

use super::rosenblatt::{check_params, kernel_norm_truncated, unit_kernel, RosenblattSampler};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelL2 {
    pub d: f64,
    pub grid: usize,
    pub span: f64,
    /// `∬ f_{N,0}²`.
    pub step_norm: f64,
    /// `∬ f_{N,0} f`.
    pub cross: f64,
    /// `∬ f²` over `[−K, 1]²`.
    pub limit_norm: f64,
    /// `∬ (f_{N,0} − f)²`.
    pub distance: f64,
    /// `∬ (f_{N,h} − f_{N,0})²` for `h = 1..=H`.
    pub lag_gaps: Vec<f64>,
}

struct Gram {
    n: usize,
    width: usize,
    g: Vec<f64>,
}

impl Gram {
    /// `G(t,s)` for `t, s ∈ [1, N+H]`, `k ∈ [−KN, N]`.
    fn new(psi: &[f64], n: usize, kn: usize, lags: usize) -> Self {
        let width = n + lags;
        let mut g = vec![0.0; width * width];
        // G(1,s) = Σ_{j=1}^{KN+1} ψ(j)ψ(j+s−1)
        for s in 1..=width {
            let v: f64 = (1..=kn + 1).map(|j| psi[j] * psi[j + s - 1]).sum();
            g[s - 1] = v;
            g[(s - 1) * width] = v;
        }
        let at = |j: i64| if j <= 0 { 0.0 } else { psi[j as usize] };
        for t in 1..width {
            for s in 1..width {
                let (ti, si) = (t as i64, s as i64);
                let step = at(ti + kn as i64 + 1) * at(si + kn as i64 + 1)
                    - at(ti - n as i64) * at(si - n as i64);
                g[t * width + s] = g[(t - 1) * width + s - 1] + step;
            }
        }
        Self { n, width, g }
    }

    fn get(&self, t: usize, s: usize) -> f64 {
        self.g[(t - 1) * self.width + s - 1]
    }

    /// `Σ_{t,s≤N} G(t,s) G(t+a, s+b)`-type contraction with `D(t,s)`.
    fn contract<F: Fn(usize, usize) -> f64>(&self, other: F) -> f64 {
        let mut total = 0.0;
        for t in 1..=self.n {
            for s in 1..=self.n {
                total += self.get(t, s) * other(t, s);
            }
        }
        total
    }
}

/// Distances for lags `1..=lags` at grid `N` and span `K` (`C_d = 1`).
pub fn kernel_l2(d: f64, grid: usize, span: f64, lags: usize) -> Result<KernelL2> {
    kernel_l2_with(d, grid, span, lags, kernel_norm_truncated(d, span), Schedule::default())
}

/// Like [`kernel_l2`] for a grid sequence, sharing `∬f²`.
pub fn kernel_l2_sequence(d: f64, grids: &[usize], span: f64, lags: usize) -> Result<Vec<KernelL2>> {
    let limit = kernel_norm_truncated(d, span);
    grids
        .iter()
        .map(|&n| kernel_l2_with(d, n, span, lags, limit, Schedule::default()))
        .collect()
}

fn kernel_l2_with(
    d: f64,
    n: usize,
    span: f64,
    lags: usize,
    limit_norm: f64,
    schedule: Schedule,
) -> Result<KernelL2> {
    let kn = check_params(d, n, span)?;
    let len = kn + n;
    let psi = unit_kernel(d, len + lags + 1);
    let gram = Gram::new(&psi, n, kn, lags);
    let scale = (n as f64).powf(1.0 - 2.0 * d);
    let scale2 = scale * scale;
    let nn = (n * n) as f64;

    // C_h(k,k) = N^{1−2d} Σ_{j=1−k}^{N−k} ψ(j)ψ(j+h), k ∈ [−KN, N]
    let diag_of = |h: usize| -> Vec<f64> {
        let mut prefix = vec![0.0; len + 2];
        for j in 1..=len + 1 {
            prefix[j] = prefix[j - 1] + psi[j] * psi[j + h];
        }
        (0..=len)
            .map(|i| {
                // k = i − KN; j runs over [max(1, 1−k), N−k]
                let hi = len - i;
                let lo = (kn + 1).saturating_sub(i).max(1);
                if hi < lo {
                    0.0
                } else {
                    scale * (prefix[hi] - prefix[lo - 1])
                }
            })
            .collect()
    };
    let c0 = diag_of(0);
    let step_norm =
        (scale2 * gram.contract(|t, s| gram.get(t, s)) - c0.iter().map(|c| c * c).sum::<f64>()) / nn;
    let lag_gaps = (1..=lags)
        .map(|h| {
            let full = gram.contract(|t, s| {
                gram.get(t + h, s + h) - gram.get(t + h, s) - gram.get(t, s + h) + gram.get(t, s)
            });
            let ch = diag_of(h);
            let diag: f64 = ch.iter().zip(&c0).map(|(a, b)| (a - b).powi(2)).sum();
            (scale2 * full - diag) / nn
        })
        .collect();

    let cross = step_cross(d, n, span, schedule)?;
    Ok(KernelL2 {
        d,
        grid: n,
        span,
        step_norm,
        cross,
        limit_norm,
        distance: step_norm - 2.0 * cross + limit_norm,
        lag_gaps,
    })
}

/// `∬ f_{N,0} f = ∫_0^1 N^{1−2d} Σ_t [A_t(v)² − Σ_k ψ(t−k)² Φ_k(v)²] dv`, with
/// `Φ_k(v) = ∫_{cell k} (v−x)_+^{d−1} dx` and `A_t(v) = Σ_k ψ(t−k) Φ_k(v)`.
fn step_cross(d: f64, n: usize, span: f64, schedule: Schedule) -> Result<f64> {
    let sampler = RosenblattSampler::new(d, n, span, false)?;
    let kn = sampler.kn;
    let len = kn + n;
    let nf = n as f64;
    let scale = nf.powf(1.0 - 2.0 * d);
    // Within panel j, v − j/N = r^{1/d}/N turns (v − j/N)^d into r/N^d.
    let q = 1.0 / d;
    let mut r_nodes = Vec::new();
    for (a, b) in [(0.0, 0.125), (0.125, 0.5), (0.5, 1.0)] {
        r_nodes.extend(quad::nodes(16, a, b));
    }
    let panels = map_indexed(n, schedule, |j| {
        let mut total = 0.0;
        let mut phi = vec![0.0; len];
        for &(r, w) in &r_nodes {
            let offset = r.powf(q);
            let jac = w * q * r.powf(q - 1.0) / nf;
            let v = (j as f64 + offset) / nf;
            // cells k ≤ j, i = k + KN
            let mut prev = (v - (-(kn as f64)) / nf).powf(d);
            for (i, p) in phi.iter_mut().enumerate().take(kn + j + 1) {
                let k = i as f64 - kn as f64;
                let next = if i == kn + j { 0.0 } else { (v - (k + 1.0) / nf).powf(d) };
                *p = (prev - next) / d;
                prev = next;
            }
            phi[kn + j + 1..].iter_mut().for_each(|p| *p = 0.0);
            let a = sampler.conv.apply(&phi);
            let squares: f64 = (1..=n).map(|t| a[t + kn].powi(2)).sum();
            let diag: f64 = phi.iter().zip(&sampler.diag).map(|(p, s)| p * p * s).sum();
            total += jac * (squares - diag);
        }
        total
    });
    Ok(scale * panels.iter().sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limitlaws::rosenblatt::tests::cell_psi;

    /// Brute-force `∬ f_{N,h} f_{N,h′}` from the cell values.
    fn brute_inner(d: f64, n: usize, kn: usize, h: usize, hp: usize) -> f64 {
        let psi = |j: i64| cell_psi(d, j);
        let scale = (n as f64).powf(1.0 - 2.0 * d);
        let c = |k: i64, kp: i64, h: usize| -> f64 {
            scale * (1..=n as i64).map(|t| psi(t - k) * psi(t + h as i64 - kp)).sum::<f64>()
        };
        let mut total = 0.0;
        for k in -(kn as i64)..=n as i64 {
            for kp in -(kn as i64)..=n as i64 {
                if k != kp {
                    total += c(k, kp, h) * c(k, kp, hp);
                }
            }
        }
        total / (n * n) as f64
    }

    #[test]
    fn gram_contractions_match_cellwise_sums() {
        let (d, n) = (0.35, 100usize);
        let r = kernel_l2_with(d, n, 1.0, 2, 0.0, Schedule::Sequential).unwrap();
        let b00 = brute_inner(d, n, n, 0, 0);
        assert!((r.step_norm - b00).abs() < 1e-10 * b00, "{} vs {b00}", r.step_norm);
        for h in 1..=2 {
            let gap = brute_inner(d, n, n, h, h) - 2.0 * brute_inner(d, n, n, h, 0) + b00;
            assert!((r.lag_gaps[h - 1] - gap).abs() < 1e-8 * b00, "h={h}");
        }
    }

    #[test]
    fn cross_term_matches_cellwise_quadrature() {
        // Σ_{k≠k′} C(k,k′) ∫_0^1 Φ_k Φ_{k′} dv with an explicit matrix and a
        // dyadic rule refined towards each cell edge.
        let (d, n) = (0.4, 100usize);
        let kn = n;
        let psi = |j: i64| cell_psi(d, j);
        let scale = (n as f64).powf(1.0 - 2.0 * d);
        let cells: Vec<i64> = (-(kn as i64)..n as i64).collect();
        let c: Vec<Vec<f64>> = cells
            .iter()
            .map(|&k| {
                cells
                    .iter()
                    .map(|&kp| {
                        if k == kp {
                            0.0
                        } else {
                            scale * (1..=n as i64).map(|t| psi(t - k) * psi(t - kp)).sum::<f64>()
                        }
                    })
                    .collect()
            })
            .collect();
        let nf = n as f64;
        let pos = |x: f64| if x > 0.0 { x.powf(d) } else { 0.0 };
        let mut expected = 0.0;
        for j in 0..n {
            let a = j as f64 / nf;
            expected += quad::graded_left(a, a + 1.0 / nf, 14, |v| {
                let phi: Vec<f64> = cells
                    .iter()
                    .map(|&k| (pos(v - k as f64 / nf) - pos(v - (k + 1) as f64 / nf)) / d)
                    .collect();
                phi.iter()
                    .zip(&c)
                    .map(|(p, row)| p * row.iter().zip(&phi).map(|(x, y)| x * y).sum::<f64>())
                    .sum()
            });
        }
        let got = step_cross(d, n, 1.0, Schedule::Sequential).unwrap();
        assert!((got - expected).abs() < 1e-7 * expected, "{got} vs {expected}");
    }

    #[test]
    fn distance_shrinks_with_grid() {
        let seq = kernel_l2_sequence(0.4, &[100, 200], 1.0, 1).unwrap();
        assert!(seq[1].distance < seq[0].distance);
        assert!(seq[0].distance > 0.0);
        assert!(seq[1].lag_gaps[0] < seq[0].lag_gaps[0]);
    }
}
