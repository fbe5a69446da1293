//! Rosenblatt limit `U_d(1)` as an off-diagonal Gaussian quadratic form.
//!
//! With `w_k = g_k/√N`, `k ∈ [−KN, N)`, and `ψ(j)` the unit-cell average of
//! `(s−x)_+^{d−1}` (see [`unit_kernel`]; zero for
//! `j ≤ 0`), one draw is
//!
//! `Q = Σ_{k≠k′} C_{N,0}(k,k′) w_k w_{k′}
//!    = N^{1−2d} Σ_{t=1}^{N} [Y_t² − Σ_k ψ(t−k)² w_k²]`,
//!
//! where `Y_t = Σ_k ψ(t−k) w_k` is a single FFT convolution.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta;

use crate::conv::Convolver;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Schedule};
use crate::quad;
use crate::streams::{rng_from, salt};
use crate::tail::power_tail;

pub const MIN_GRID: usize = 100;

/// `ψ(j) = ∫_{j−1}^{j}∫_0^1 (s−x)_+^{d−1} dx ds`, the second difference of
/// `x_+^{d+1}/(d(d+1))`, on `0..=len`. It behaves like `(j−1)^{d−1}` but
/// keeps the singular mass near the diagonal that point samples of
/// `j^{d−1}` miss, so `∬f_N²` approaches `∬f²` much faster.
pub(crate) fn unit_kernel(d: f64, len: usize) -> Vec<f64> {
    let g = |x: f64| if x <= 0.0 { 0.0 } else { x.powf(d + 1.0) };
    (0..=len)
        .map(|j| {
            let j = j as f64;
            (g(j) - 2.0 * g(j - 1.0) + g(j - 2.0)) / (d * (d + 1.0))
        })
        .collect()
}

pub(crate) fn check_params(d: f64, grid: usize, span: f64) -> Result<usize> {
    if !(d > 0.25 && d < 0.5) {
        return Err(Error::invalid("d", "the Rosenblatt kernel needs 1/4 < d < 1/2"));
    }
    if grid < MIN_GRID {
        return Err(Error::invalid("grid", format!("grid must be at least {MIN_GRID}")));
    }
    if !(span >= 1.0 && span.is_finite()) {
        return Err(Error::invalid("span", "span K must be at least 1"));
    }
    Ok((span * grid as f64).round() as usize)
}

/// `∬ f²` over the whole plane for `C_d = 1`:
/// `B(d, 1−2d)² · 2/((4d−1)·4d)`.
pub fn kernel_norm_full(d: f64) -> f64 {
    let b = beta(d, 1.0 - 2.0 * d);
    b * b * 2.0 / ((4.0 * d - 1.0) * 4.0 * d)
}

/// `∬ f²` over `[−K, 1]²` for `C_d = 1`.
///
/// Swapping the order of integration gives `∫_0^1∫_0^1 ρ_K(u,v)² du dv` with
/// `ρ_K = ρ_∞ − T`, `ρ_∞ = B(d,1−2d)|u−v|^{2d−1}` and
/// `T(u,v) = ∫_K^∞ (u+y)^{d−1}(v+y)^{d−1} dy`.
pub fn kernel_norm_truncated(d: f64, span: f64) -> f64 {
    let b = beta(d, 1.0 - 2.0 * d);
    let c = 1.0 / (1.0 - 2.0 * d);
    // y = K s^{−c} makes the T integrand bounded on (0, 1].
    let t_nodes = quad::nodes(32, 0.0, 1.0);
    let t = |u: f64, v: f64| -> f64 {
        t_nodes
            .iter()
            .map(|&(s, w)| {
                let y = span * s.powf(-c);
                w * c * y / s * (u + y).powf(d - 1.0) * (v + y).powf(d - 1.0)
            })
            .sum()
    };
    // 2∬_{v<u} ρ_∞ T with u − v = u w^{1/(2d)}, so (u−v)^{2d−1} dv = u^{2d}/(2d) dw
    let cross = 2.0
        * b
        * quad::graded_left(0.0, 1.0, 24, |u| {
            u.powf(2.0 * d) / (2.0 * d)
                * quad::graded_left(0.0, 1.0, 24, |w| t(u, u - u * w.powf(0.5 / d)))
        });
    let square = 2.0
        * quad::gl(32, 0.0, 1.0, |u| quad::gl(32, 0.0, u, |v| t(u, v).powi(2)));
    kernel_norm_full(d) - 2.0 * cross + square
}

/// Low-rank Gaussian field `F_t = Σ_{k<−KN} ψ(t−k) w_k`, `t = 1..N`.
#[derive(Debug, Clone)]
struct FarField {
    /// `rank × N` factor with `L Lᵀ ≈ Σ_far`.
    factor: Vec<Vec<f64>>,
    /// `Σ_t Σ_far(t,t)`, the expected diagonal removed from the form.
    expected: f64,
}

impl FarField {
    /// Pivoted Cholesky of `Σ_far(t,s) = (1/N) Σ_{j>min(t,s)+KN} ψ(j)ψ(j+|t−s|)`
    /// with `ψ(j) ≈ (j−1)^{d−1}`, whose error is `O(j^{−2})` relative at `j > KN`,
    /// stopped once the residual diagonal is below `1e−12` of its maximum.
    fn build(d: f64, n: usize, kn: usize) -> Self {
        let inv_n = 1.0 / n as f64;
        let entry = |t: usize, s: usize| {
            let lo = t.min(s);
            inv_n * power_tail(d - 1.0, (lo + kn) as u64, t.abs_diff(s) as f64).value
        };
        let diag: Vec<f64> = (1..=n).map(|t| entry(t, t)).collect();
        let expected = diag.iter().sum();
        let mut residual = diag.clone();
        let top = residual.iter().cloned().fold(0.0, f64::max);
        let mut factor: Vec<Vec<f64>> = Vec::new();
        while factor.len() < n {
            let (p, &rp) = residual
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("nonempty");
            if rp <= 1e-12 * top {
                break;
            }
            let root = rp.sqrt();
            let col: Vec<f64> = (0..n)
                .map(|i| {
                    let prev: f64 = factor.iter().map(|f| f[i] * f[p]).sum();
                    (entry(i + 1, p + 1) - prev) / root
                })
                .collect();
            for (r, c) in residual.iter_mut().zip(&col) {
                *r = (*r - c * c).max(0.0);
            }
            residual[p] = 0.0;
            factor.push(col);
        }
        Self { factor, expected }
    }
}

/// Reusable sampler for fixed `(d, N_g, K)`.
pub struct RosenblattSampler {
    d: f64,
    grid: usize,
    span: f64,
    pub(crate) kn: usize,
    pub(crate) conv: Convolver,
    /// `S_i = Σ_{t=1}^{N} ψ(t+KN−i)²` for `i = k + KN`.
    pub(crate) diag: Vec<f64>,
    far: Option<FarField>,
}

/// Provenance of a Rosenblatt draw set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosenblattInfo {
    pub d: f64,
    pub grid: usize,
    pub span: f64,
    pub far_field: bool,
    pub far_field_rank: usize,
    /// `2∬f²` of the targeted kernel (`C_d = 1`).
    pub target_variance: f64,
    /// `∬f²` outside `[−K, 1]²`, zero when the far field is included.
    pub discarded_mass: f64,
}

impl RosenblattSampler {
    pub fn new(d: f64, grid: usize, span: f64, far_field: bool) -> Result<Self> {
        let kn = check_params(d, grid, span)?;
        let len = kn + grid;
        let kernel = unit_kernel(d, len);
        let conv = Convolver::linear(&kernel, len);
        let mut prefix = Vec::with_capacity(kernel.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for k in &kernel {
            acc += k * k;
            prefix.push(acc);
        }
        // j = t + KN − i runs over [KN + 1 − i, len − i]
        let diag = (0..len)
            .map(|i| prefix[len - i + 1] - prefix[(kn + 1).saturating_sub(i)])
            .collect();
        let far = far_field.then(|| FarField::build(d, grid, kn));
        Ok(Self {
            d,
            grid,
            span,
            kn,
            conv,
            diag,
            far,
        })
    }

    pub fn info(&self) -> RosenblattInfo {
        let full = kernel_norm_full(self.d);
        let (target, discarded) = if self.far.is_some() {
            (2.0 * full, 0.0)
        } else {
            let kept = kernel_norm_truncated(self.d, self.span);
            (2.0 * kept, full - kept)
        };
        RosenblattInfo {
            d: self.d,
            grid: self.grid,
            span: self.span,
            far_field: self.far.is_some(),
            far_field_rank: self.far.as_ref().map_or(0, |f| f.factor.len()),
            target_variance: target,
            discarded_mass: discarded,
        }
    }

    /// Draw number `index` of the stream `seed`.
    pub fn draw(&self, seed: u64, index: u64) -> f64 {
        let mut rng = rng_from(seed, &[salt::ROSENBLATT, index]);
        let len = self.kn + self.grid;
        let inv_sqrt = 1.0 / (self.grid as f64).sqrt();
        let w: Vec<f64> = (0..len)
            .map(|_| inv_sqrt * Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect();
        let y = self.conv.apply(&w);
        let mut far_values = vec![0.0; self.grid];
        let mut expected = 0.0;
        if let Some(far) = &self.far {
            for col in &far.factor {
                let xi: f64 = StandardNormal.sample(&mut rng);
                for (v, c) in far_values.iter_mut().zip(col) {
                    *v += xi * c;
                }
            }
            expected = far.expected;
        }
        let squares: f64 = (1..=self.grid)
            .map(|t| (y[t + self.kn] + far_values[t - 1]).powi(2))
            .sum();
        let diagonal: f64 = w.iter().zip(&self.diag).map(|(x, s)| x * x * s).sum();
        (self.grid as f64).powf(1.0 - 2.0 * self.d) * (squares - diagonal - expected)
    }

    pub fn draws(&self, n: usize, seed: u64, schedule: Schedule) -> Vec<f64> {
        map_indexed(n, schedule, |i| self.draw(seed, i as u64))
    }
}

/// `n` draws of the `K`-truncated form with `C_d = 1`.
pub fn sample_rosenblatt(d: f64, grid: usize, span: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    Ok(RosenblattSampler::new(d, grid, span, false)?.draws(n, seed, Schedule::default()))
}
