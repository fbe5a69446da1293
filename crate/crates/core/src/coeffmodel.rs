//! Moving-average coefficient sequences and their exact second-order
//! quantities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::tail::{power_tail, TailSum};

/// The slowly varying factor `l` in `ψ(j) = j^{d−1} l(j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlowlyVarying {
    /// `l(u) = C_d`.
    Constant,
    /// `l(u) = C_d / (1 + 1/ln(e + u))`, which tends to `C_d` logarithmically.
    LogDamped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CoefficientModel {
    PowerLaw {
        d: f64,
        c_d: f64,
        slowly: SlowlyVarying,
        /// Value used at `j = 0`, where `j^{d−1}` is undefined.
        psi0: f64,
    },
    Explicit(Vec<f64>),
}

impl CoefficientModel {
    /// `ψ(j) = c_d j^{d−1}` with `ψ(0) = 1`.
    pub fn power_law(d: f64, c_d: f64) -> Result<Self> {
        let m = CoefficientModel::PowerLaw {
            d,
            c_d,
            slowly: SlowlyVarying::Constant,
            psi0: 1.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn explicit(coeffs: Vec<f64>) -> Result<Self> {
        let m = CoefficientModel::Explicit(coeffs);
        m.validate()?;
        Ok(m)
    }

    pub fn with_psi0(mut self, value: f64) -> Result<Self> {
        match &mut self {
            CoefficientModel::PowerLaw { psi0, .. } => *psi0 = value,
            CoefficientModel::Explicit(_) => {
                return Err(Error::invalid("psi0", "only power-law models take psi0"))
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub fn with_slowly_varying(mut self, l: SlowlyVarying) -> Result<Self> {
        match &mut self {
            CoefficientModel::PowerLaw { slowly, .. } => *slowly = l,
            CoefficientModel::Explicit(_) => {
                return Err(Error::invalid("l", "only power-law models take a slowly varying factor"))
            }
        }
        Ok(self)
    }

    /// Checks the invariants; models built by deserialization should be
    /// validated before use.
    pub fn validate(&self) -> Result<()> {
        match self {
            CoefficientModel::PowerLaw { d, c_d, psi0, .. } => {
                if !(*d > 0.0 && *d < 0.5) {
                    return Err(Error::invalid("d", "d must lie in (0, 0.5)"));
                }
                if !(*c_d > 0.0 && c_d.is_finite()) {
                    return Err(Error::invalid("C_d", "C_d must be positive and finite"));
                }
                if !psi0.is_finite() {
                    return Err(Error::invalid("psi0", "psi0 must be finite"));
                }
            }
            CoefficientModel::Explicit(c) => {
                if c.is_empty() || c.iter().all(|&x| x == 0.0) {
                    return Err(Error::invalid("coeffs", "need at least one nonzero coefficient"));
                }
                if c.iter().any(|x| !x.is_finite()) {
                    return Err(Error::invalid("coeffs", "coefficients must be finite"));
                }
            }
        }
        Ok(())
    }

    pub fn psi(&self, j: usize) -> f64 {
        match self {
            CoefficientModel::PowerLaw {
                d, c_d, slowly, psi0,
            } => {
                if j == 0 {
                    *psi0
                } else {
                    power_law_value(*d, *c_d, *slowly, j as f64)
                }
            }
            CoefficientModel::Explicit(c) => c.get(j).copied().unwrap_or(0.0),
        }
    }

    /// `ψ(0), …, ψ(m)`.
    pub fn coefficients(&self, m: usize) -> Vec<f64> {
        (0..=m).map(|j| self.psi(j)).collect()
    }

    /// The MA(m) model keeping `ψ(0), …, ψ(m)`.
    pub fn truncated(&self, m: usize) -> CoefficientModel {
        CoefficientModel::Explicit(self.coefficients(m))
    }

    /// Number of stored coefficients of an explicit model.
    pub fn support_len(&self) -> Option<usize> {
        match self {
            CoefficientModel::Explicit(c) => Some(c.len()),
            CoefficientModel::PowerLaw { .. } => None,
        }
    }

    pub fn memory(&self) -> Option<f64> {
        match self {
            CoefficientModel::PowerLaw { d, .. } => Some(*d),
            CoefficientModel::Explicit(_) => None,
        }
    }

    pub fn c_d(&self) -> Option<f64> {
        match self {
            CoefficientModel::PowerLaw { c_d, .. } => Some(*c_d),
            CoefficientModel::Explicit(_) => None,
        }
    }

    /// `Σ_{j≥start} ψ(j)ψ(j+h)` for a power-law model and `start ≥ 1`,
    /// with an absolute error bound.
    fn power_tail_sum(&self, start: usize, h: usize, abs_tol: f64) -> Result<TailSum> {
        let CoefficientModel::PowerLaw { d, c_d, slowly, .. } = *self else {
            unreachable!("tails only exist for power-law models")
        };
        match slowly {
            SlowlyVarying::Constant => {
                let t = power_tail(d - 1.0, start as u64, h as f64);
                Ok(TailSum {
                    value: c_d * c_d * t.value,
                    error: c_d * c_d * t.error,
                })
            }
            SlowlyVarying::LogDamped => log_damped_tail(d, c_d, start, h, abs_tol),
        }
    }

    /// `Σ_{j≥0} ψ(j)ψ(j+h)`.
    fn product_sum(&self, h: usize, abs_tol: f64) -> Result<TailSum> {
        match self {
            CoefficientModel::Explicit(c) => Ok(TailSum {
                value: explicit_product_sum(c, h),
                error: 0.0,
            }),
            CoefficientModel::PowerLaw { psi0, .. } => {
                let t = self.power_tail_sum(1, h, abs_tol)?;
                Ok(TailSum {
                    value: psi0 * self.psi(h) + t.value,
                    error: t.error,
                })
            }
        }
    }
}

fn power_law_value(d: f64, c_d: f64, slowly: SlowlyVarying, x: f64) -> f64 {
    let l = match slowly {
        SlowlyVarying::Constant => c_d,
        SlowlyVarying::LogDamped => c_d / (1.0 + 1.0 / (std::f64::consts::E + x).ln()),
    };
    x.powf(d - 1.0) * l
}

fn explicit_product_sum(c: &[f64], h: usize) -> f64 {
    if h >= c.len() {
        return 0.0;
    }
    c.iter().zip(&c[h..]).map(|(a, b)| a * b).sum()
}

const LOG_TAIL_CAP: usize = 1 << 26;

/// `Σ_{j≥start} ψ(j)ψ(j+h)` for the log-damped family: direct summation to
/// `m`, then `∫_m^∞ f + f(m)/2`, whose remainder is at most `|f′(m)|/12`
/// for a convex decreasing summand. `m` doubles until that bound plus the
/// quadrature discrepancy is below `abs_tol`.
fn log_damped_tail(d: f64, c_d: f64, start: usize, h: usize, abs_tol: f64) -> Result<TailSum> {
    let hf = h as f64;
    let f = |x: f64| {
        power_law_value(d, c_d, SlowlyVarying::LogDamped, x)
            * power_law_value(d, c_d, SlowlyVarying::LogDamped, x + hf)
    };
    // x = m·u^{−q} maps [m, ∞) onto (0, 1] and makes the integrand bounded.
    let q = 1.0 / (1.0 - 2.0 * d);
    let levels = ((900.0 / q) as u32).min(60);
    let integral = |m: f64, points: usize| {
        quad::graded_left_with(points, 0.0, 1.0, levels, |u| {
            let x = m * u.powf(-q);
            if x.is_finite() {
                // dx = q·x/u du
                f(x) * x * q / u
            } else {
                0.0
            }
        })
    };
    let mut m = start.max(64).max(8 * (h + 1));
    let mut direct: f64 = (start..m).map(|j| f(j as f64)).sum();
    let mut best = f64::INFINITY;
    loop {
        let mf = m as f64;
        let i16 = integral(mf, 16);
        let i32 = integral(mf, 32);
        let slope = f(mf - 1.0) - f(mf);
        let error = slope.abs() / 12.0 + (i32 - i16).abs() + f64::EPSILON * direct.abs();
        if error <= abs_tol {
            return Ok(TailSum {
                value: direct + i32 + 0.5 * f(mf),
                error,
            });
        }
        best = best.min(error);
        if 2 * m > LOG_TAIL_CAP {
            return Err(Error::ToleranceUnattainable {
                requested: abs_tol,
                achieved: best,
            });
        }
        direct += (m..2 * m).map(|j| f(j as f64)).sum::<f64>();
        m *= 2;
    }
}

/// Autocovariances `γ_0, …, γ_H` together with a bound on the error from
/// truncating the infinite coefficient sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcovSequence {
    pub values: Vec<f64>,
    pub sigma2: f64,
    pub tail_bound: f64,
}

/// `γ_h = σ² Σ_j ψ(j)ψ(j+h)` for `h = 0..=H`.
///
/// Explicit models are summed exactly. Power-law models are summed directly
/// up to an anchor and completed with an Euler–Maclaurin tail; the combined
/// error must stay below `tol·γ_0`.
pub fn theoretical_acov(
    model: &CoefficientModel,
    sigma2: f64,
    lags: usize,
    tol: f64,
) -> Result<AcovSequence> {
    model.validate()?;
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "tolerance must be positive"));
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::invalid("sigma2", "innovation variance must be positive"));
    }
    // γ_0 ≥ ψ(0)² + ψ(1)² gives a safe scale for the absolute tolerance.
    let scale = model.psi(0).powi(2) + model.psi(1).powi(2);
    let abs_tol = 0.5 * tol * scale.max(f64::MIN_POSITIVE);
    let mut values = Vec::with_capacity(lags + 1);
    let mut worst: f64 = 0.0;
    for h in 0..=lags {
        let s = model.product_sum(h, abs_tol)?;
        values.push(sigma2 * s.value);
        worst = worst.max(sigma2 * s.error);
    }
    if worst > tol * values[0] {
        return Err(Error::ToleranceUnattainable {
            requested: tol,
            achieved: worst / values[0],
        });
    }
    Ok(AcovSequence {
        values,
        sigma2,
        tail_bound: worst,
    })
}

/// Lag-product weights `c_j(h) = ψ(j)ψ(j+h)` for `j < J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagProductWeights {
    /// `table[h][j] = c_j(h)`.
    pub table: Vec<Vec<f64>>,
    /// `c_j = Σ_h u_h c_j(h)`.
    pub combined: Vec<f64>,
    /// `Σ_{j≥0} c_j(h)`, the explicit part plus the tail from `J` on.
    pub lag_sums: Vec<f64>,
    /// Error bound on `lag_sums`.
    pub tail_bound: f64,
}

pub fn lag_product_weights(
    model: &CoefficientModel,
    lags: usize,
    u: &[f64],
    cap: usize,
) -> Result<LagProductWeights> {
    model.validate()?;
    if cap < 1 {
        return Err(Error::invalid("J", "index cap must be at least 1"));
    }
    if u.len() != lags + 1 {
        return Err(Error::invalid("u", format!("expected {} weights", lags + 1)));
    }
    let psi = model.coefficients(cap + lags);
    let table: Vec<Vec<f64>> = (0..=lags)
        .map(|h| (0..cap).map(|j| psi[j] * psi[j + h]).collect())
        .collect();
    let combined = (0..cap)
        .map(|j| table.iter().zip(u).map(|(row, w)| w * row[j]).sum())
        .collect();
    let mut lag_sums = Vec::with_capacity(lags + 1);
    let mut tail_bound: f64 = 0.0;
    for h in 0..=lags {
        let head: f64 = table[h].iter().sum();
        let tail = match model {
            CoefficientModel::Explicit(c) => TailSum {
                value: c.get(cap..).map_or(0.0, |rest| explicit_product_sum(rest, h)),
                error: 0.0,
            },
            CoefficientModel::PowerLaw { .. } => model.power_tail_sum(cap, h, 1e-13 * head.abs())?,
        };
        lag_sums.push(head + tail.value);
        tail_bound = tail_bound.max(tail.error);
    }
    Ok(LagProductWeights {
        table,
        combined,
        lag_sums,
        tail_bound,
    })
}

/// Exact autocovariances `γ_0..γ_{len−1}` of a finite-support model; long
/// supports use one FFT autocorrelation.
pub fn explicit_acov_all(coeffs: &[f64], sigma2: f64, len: usize) -> Vec<f64> {
    let n = coeffs.len();
    if n < crate::procsim::FFT_THRESHOLD {
        return (0..len).map(|h| sigma2 * explicit_product_sum(coeffs, h)).collect();
    }
    let reversed: Vec<f64> = coeffs.iter().rev().copied().collect();
    let conv = crate::conv::Convolver::linear(&reversed, n).apply(coeffs);
    // conv[n−1+h] = Σ_j c[j+h]·c[j]
    (0..len)
        .map(|h| if h < n { sigma2 * conv[n - 1 + h] } else { 0.0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pl(d: f64) -> CoefficientModel {
        CoefficientModel::power_law(d, 1.0).unwrap()
    }

    #[test]
    fn psi_examples() {
        assert_eq!(pl(0.3).psi(1), 1.0);
        let m = CoefficientModel::power_law(0.25, 2.0).unwrap();
        assert!((m.psi(16) - 0.25).abs() < 1e-15);
        let e = CoefficientModel::explicit(vec![1.0, 0.5]).unwrap();
        assert_eq!(e.psi(5), 0.0);
        assert_eq!(pl(0.3).with_psi0(0.7).unwrap().psi(0), 0.7);
    }

    #[test]
    fn construction_is_validated() {
        assert!(CoefficientModel::power_law(0.5, 1.0).is_err());
        assert!(CoefficientModel::power_law(0.0, 1.0).is_err());
        assert!(CoefficientModel::power_law(0.3, 0.0).is_err());
        assert!(CoefficientModel::explicit(vec![0.0, 0.0]).is_err());
        assert!(CoefficientModel::explicit(vec![]).is_err());
        let err = CoefficientModel::power_law(0.6, 1.0).unwrap_err();
        assert!(err.to_string().contains("d must lie in (0, 0.5)"));
    }

    #[test]
    fn explicit_acov_examples() {
        let a = theoretical_acov(&CoefficientModel::explicit(vec![1.0]).unwrap(), 2.0, 1, 1e-12)
            .unwrap();
        assert_eq!(a.values, vec![2.0, 0.0]);
        let geo = CoefficientModel::explicit((0..=60).map(|j| 0.5f64.powi(j)).collect()).unwrap();
        let a = theoretical_acov(&geo, 1.0, 1, 1e-12).unwrap();
        assert!((a.values[0] - 4.0 / 3.0).abs() < 1e-12);
        assert!((a.values[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    // Golden values: 1 + ζ(2 − 2d) from mpmath at 30 digits, cross-checked by
    // summing 10^8 terms plus the integral tail.
    #[test]
    fn power_law_gamma0_golden() {
        let golden = [
            (0.1, 2.882_229_618_102_822),
            (0.2, 3.285_765_665_680_129_8),
            (0.3, 4.105_547_277_977_580_4),
            (0.4, 6.591_582_441_177_750_8),
            (0.45, 11.584_448_464_950_81),
        ];
        for (d, g) in golden {
            let a = theoretical_acov(&pl(d), 1.0, 0, 1e-12).unwrap();
            assert!((a.values[0] - g).abs() < 1e-12 * g, "d={d}: {}", a.values[0]);
            assert!(a.tail_bound <= 1e-12 * g);
        }
        let a = theoretical_acov(&pl(0.3), 2.5, 3, 1e-12).unwrap();
        assert!((a.values[3] / 2.5 - 2.500_383_795_002_439_6).abs() < 1e-12);
    }

    // Golden values from numpy pairwise summation to 10^7 plus an mpmath
    // integral tail; the 10^6 variant agrees to 2e−16.
    #[test]
    fn log_damped_golden() {
        let m = pl(0.3).with_slowly_varying(SlowlyVarying::LogDamped).unwrap();
        let a = theoretical_acov(&m, 1.0, 2, 1e-11).unwrap();
        assert!((a.values[0] - 2.441_797_187_077_869_4).abs() < 1e-10, "{}", a.values[0]);
        assert!((a.values[2] - 1.532_693_980_624_433_5).abs() < 1e-10, "{}", a.values[2]);
    }

    #[test]
    fn lag_product_examples() {
        let one = CoefficientModel::explicit(vec![1.0]).unwrap();
        let w = lag_product_weights(&one, 2, &[1.0, 0.0, 0.0], 10).unwrap();
        assert!(w.table[1].iter().chain(&w.table[2]).all(|&c| c == 0.0));

        let w = lag_product_weights(&pl(0.3), 1, &[1.0, 0.0], 5).unwrap();
        assert!((w.table[0][2] - 2f64.powf(-1.4)).abs() < 1e-15);
        assert_eq!(w.combined, w.table[0]);
    }

    #[test]
    fn lag_products_approach_power_law() {
        let c = 1.7;
        let m = CoefficientModel::power_law(0.3, c).unwrap();
        let j = 1_000_000usize;
        for h in [0usize, 1, 5] {
            let ratio = m.psi(j) * m.psi(j + h) / (c * c * (j as f64).powf(2.0 * 0.3 - 2.0));
            assert!((ratio - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn lag_sums_match_theoretical_acov() {
        for d in [0.1, 0.3, 0.45] {
            for model in [
                pl(d),
                pl(d).with_slowly_varying(SlowlyVarying::LogDamped).unwrap(),
            ] {
                let a = theoretical_acov(&model, 1.0, 3, 1e-13).unwrap();
                let w = lag_product_weights(&model, 3, &[1.0, 0.0, 0.0, 0.0], 1000).unwrap();
                for h in 0..=3 {
                    assert!(
                        (a.values[h] - w.lag_sums[h]).abs() < 1e-12 * a.values[0],
                        "d={d} h={h}: {} vs {}",
                        a.values[h],
                        w.lag_sums[h]
                    );
                }
            }
        }
        let e = CoefficientModel::explicit(vec![1.0, -0.4, 0.3, 0.2]).unwrap();
        let a = theoretical_acov(&e, 1.3, 4, 1e-12).unwrap();
        let w = lag_product_weights(&e, 4, &[0.0; 5], 2).unwrap();
        for h in 0..=4 {
            assert!((a.values[h] - 1.3 * w.lag_sums[h]).abs() < 1e-14);
        }
    }

    #[test]
    fn fft_autocorrelation_matches_direct() {
        let c: Vec<f64> = (0..300).map(|j| ((j * 31) % 17) as f64 / 17.0 - 0.4).collect();
        let all = explicit_acov_all(&c, 1.5, 310);
        for h in [0usize, 1, 7, 299, 305] {
            assert!((all[h] - 1.5 * explicit_product_sum(&c, h)).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn power_law_acov_positive_decreasing(d in 0.02f64..0.48, c in 0.2f64..3.0) {
            let a = theoretical_acov(&CoefficientModel::power_law(d, c).unwrap(), 1.0, 6, 1e-10).unwrap();
            prop_assert!(a.values[0] > 0.0);
            for w in a.values.windows(2) {
                prop_assert!(w[1] > 0.0 && w[1] < w[0]);
            }
        }
    }
}
