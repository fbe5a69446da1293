//! Sample autocovariances, their diagonal/off-diagonal decomposition and
//! regime-specific error scaling.

use serde::{Deserialize, Serialize};

use crate::coeffmodel::{AcovSequence, CoefficientModel};
use crate::conv::{direct, Convolver};
use crate::error::{Error, Result};
use crate::limitlaws::RegimeReport;
use crate::procsim::{SeriesSample, FFT_THRESHOLD};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcovEstimate {
    /// `γ̂_0, …, γ̂_H`.
    pub values: Vec<f64>,
    pub n: usize,
}

/// `γ̂_h = (1/N) Σ_{t=1}^{N} X_t X_{t+h}` for `h = 0..=lags`. With
/// `centered`, the mean of `X_1..X_N` is subtracted first.
pub fn acov_from_slice(x: &[f64], n: usize, lags: usize, centered: bool) -> Result<AcovEstimate> {
    if n == 0 {
        return Err(Error::invalid("N", "N must be at least 1"));
    }
    if x.len() < n + lags {
        return Err(Error::InsufficientLength {
            lag: lags,
            needed: n + lags,
            available: x.len(),
        });
    }
    let owned;
    let x = if centered {
        let mean = x[..n].iter().sum::<f64>() / n as f64;
        owned = x.iter().map(|v| v - mean).collect::<Vec<_>>();
        &owned[..]
    } else {
        x
    };
    let values = (0..=lags)
        .map(|h| x[..n].iter().zip(&x[h..h + n]).map(|(a, b)| a * b).sum::<f64>() / n as f64)
        .collect();
    Ok(AcovEstimate { values, n })
}

pub fn sample_acov(series: &SeriesSample, lags: usize) -> Result<AcovEstimate> {
    acov_from_slice(&series.values, series.n, lags, false)
}

pub fn sample_acov_centered(series: &SeriesSample, lags: usize) -> Result<AcovEstimate> {
    acov_from_slice(&series.values, series.n, lags, true)
}

/// `Σ_h u_h(γ̂_h − γ_h) = D_N + R_N`, split into squared-innovation terms
/// `d_{N,h}` and cross-product terms `r_{N,h}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub d_n: f64,
    pub r_n: f64,
    pub d_terms: Vec<f64>,
    pub r_terms: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Coefficients of the simulated MA(M) model, checked against the series.
fn series_coefficients(series: &SeriesSample, coeff: &CoefficientModel) -> Result<Vec<f64>> {
    match coeff.support_len() {
        Some(len) if len > series.m + 1 => Err(Error::SupportTooLong {
            support: len,
            order: series.m,
        }),
        _ => Ok(coeff.coefficients(series.m)),
    }
}

/// Pieces shared by the decomposition and the off-diagonal summands.
struct Parts<'a> {
    z: &'a [f64],
    c: Vec<f64>,
    /// `X̃_1..X̃_{N+H}` recomputed from the innovations.
    x: Vec<f64>,
    n: usize,
    m: usize,
}

impl<'a> Parts<'a> {
    fn new(series: &'a SeriesSample, coeff: &CoefficientModel, lags: usize) -> Result<Self> {
        let z = series.innovations.as_deref().ok_or(Error::InnovationsAbsent)?;
        if lags > series.h {
            return Err(Error::InsufficientLength {
                lag: lags,
                needed: series.n + lags,
                available: series.n + series.h,
            });
        }
        let c = series_coefficients(series, coeff)?;
        let (n, m) = (series.n, series.m);
        let range = m..m + n + series.h;
        let x = if c.len() >= FFT_THRESHOLD {
            Convolver::valid(&c, z.len()).apply(z)[range].to_vec()
        } else {
            direct(&c, z, range)
        };
        Ok(Self { z, c, x, n, m })
    }

    /// `c_j(h) = ψ(j)ψ(j+h)` for `j = 0..=M`.
    fn weights(&self, h: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.c.len().saturating_sub(h)).map(move |j| (j, self.c[j] * self.c[j + h]))
    }
}

pub fn decompose(
    series: &SeriesSample,
    coeff: &CoefficientModel,
    u: &[f64],
    lags: usize,
) -> Result<Decomposition> {
    if u.len() != lags + 1 {
        return Err(Error::invalid("u", format!("expected {} weights", lags + 1)));
    }
    let parts = Parts::new(series, coeff, lags)?;
    let sigma2 = series.innov.sigma2();
    let (n, m) = (parts.n, parts.m);
    let nf = n as f64;
    // prefix[k] = Σ_{i<k} Z_i²; Z_s sits at index s + M − 1.
    let mut prefix = Vec::with_capacity(parts.z.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for z in parts.z {
        acc += z * z;
        prefix.push(acc);
    }
    // Σ_{t=1}^{N} Z²_{t−j}
    let window = |j: usize| prefix[n + m - j] - prefix[m - j];
    let mut d_terms = Vec::with_capacity(lags + 1);
    let mut r_terms = Vec::with_capacity(lags + 1);
    for h in 0..=lags {
        let mut diag = 0.0;
        let mut centered = 0.0;
        for (j, w) in parts.weights(h) {
            let s = window(j);
            diag += w * s;
            centered += w * (s - nf * sigma2);
        }
        let products: f64 = parts.x[..n]
            .iter()
            .zip(&parts.x[h..h + n])
            .map(|(a, b)| a * b)
            .sum();
        d_terms.push(centered / nf);
        r_terms.push((products - diag) / nf);
    }
    let dot = |v: &[f64]| v.iter().zip(u).map(|(a, b)| a * b).sum::<f64>();
    Ok(Decomposition {
        d_n: dot(&d_terms),
        r_n: dot(&r_terms),
        d_terms,
        r_terms,
        weights: u.to_vec(),
    })
}

/// Off-diagonal summands
/// `ξ_t(h) = X_t X_{t+h} − Σ_j c_j(h) Z²_{t−j} = Σ_{i≠j+h} ψ(i)ψ(j) Z_{t−i} Z_{t+h−j}`
/// for `t = 1..N`.
pub fn offdiag_summands(series: &SeriesSample, coeff: &CoefficientModel, h: usize) -> Result<Vec<f64>> {
    let parts = Parts::new(series, coeff, h)?;
    let (n, m) = (parts.n, parts.m);
    let sq: Vec<f64> = parts.z.iter().map(|z| z * z).collect();
    let w: Vec<f64> = parts.weights(h).map(|(_, w)| w).collect();
    let range = m..m + n;
    let diag = if w.len() >= FFT_THRESHOLD {
        Convolver::valid(&w, sq.len()).apply(&sq)[range].to_vec()
    } else {
        direct(&w, &sq, range)
    };
    Ok((0..n)
        .map(|t| parts.x[t] * parts.x[t + h] - diag[t])
        .collect())
}

/// Normalized errors `factor·(γ̂_h − γ_h)` under the regime's rate.
pub fn scale_errors(
    est: &AcovEstimate,
    gamma: &AcovSequence,
    regime: &RegimeReport,
    a_n: Option<f64>,
) -> Result<Vec<f64>> {
    if gamma.values.len() < est.values.len() {
        return Err(Error::invalid("gamma", "fewer theoretical lags than estimated lags"));
    }
    let factor = regime.scale_factor(est.n, a_n)?;
    Ok(est
        .values
        .iter()
        .zip(&gamma.values)
        .map(|(g_hat, g)| factor * (g_hat - g))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffmodel::theoretical_acov;
    use crate::innovations::{InnovationModel, MomentClass};
    use crate::limitlaws::classify_regime;
    use crate::procsim::{simulate_linear, ConvolutionMethod};
    use proptest::prelude::*;

    fn series_from(z: Vec<f64>, coeff: &CoefficientModel, n: usize, h: usize, m: usize) -> SeriesSample {
        let values = crate::procsim::filter_innovations(coeff, &z, n, h, m, ConvolutionMethod::Direct)
            .unwrap();
        SeriesSample {
            values,
            innovations: Some(z),
            n,
            h,
            m,
            coeff: coeff.clone(),
            innov: InnovationModel::Gaussian { sigma: 1.0 },
            seed: 0,
            method: ConvolutionMethod::Direct,
        }
    }

    #[test]
    fn sample_acov_examples() {
        let e = acov_from_slice(&[1.0, 2.0, 3.0], 2, 1, false).unwrap();
        assert_eq!(e.values, vec![2.5, 4.0]);
        let z = acov_from_slice(&[0.0; 10], 7, 3, false).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
        assert!(matches!(
            acov_from_slice(&[1.0, 2.0, 3.0], 2, 2, false),
            Err(Error::InsufficientLength { .. })
        ));
        // mean of the first n values is 2: (−1, 1, 3)
        let c = acov_from_slice(&[1.0, 3.0, 5.0], 2, 1, true).unwrap();
        assert_eq!(c.values, vec![1.0, 1.0]);
    }

    #[test]
    fn sample_acov_matches_brute_force() {
        let g = InnovationModel::gaussian(1.0).unwrap();
        let model = CoefficientModel::power_law(0.3, 1.0).unwrap();
        let s = simulate_linear(&model, &g, 500, 3, 64, 8, ConvolutionMethod::Direct).unwrap();
        let est = sample_acov(&s, 3).unwrap();
        for h in 0..=3 {
            let mut acc = 0.0;
            for t in 0..500 {
                acc += s.values[t] * s.values[t + h];
            }
            assert!((est.values[h] - acc / 500.0).abs() < 1e-12);
        }
    }

    #[test]
    fn iid_decomposition() {
        let one = CoefficientModel::explicit(vec![1.0]).unwrap();
        let g = InnovationModel::gaussian(1.0).unwrap();
        let s = simulate_linear(&one, &g, 100, 0, 1, 4, ConvolutionMethod::Direct).unwrap();
        let dec = decompose(&s, &one, &[1.0], 0).unwrap();
        assert!(dec.r_n.abs() < 1e-14);
        let est = sample_acov(&s, 0).unwrap();
        assert!((est.values[0] - 1.0 - dec.d_n).abs() < 1e-13);
    }

    #[test]
    fn decomposition_identity_small() {
        let e = CoefficientModel::explicit(vec![1.0, 0.5]).unwrap();
        let g = InnovationModel::gaussian(1.0).unwrap();
        let s = simulate_linear(&e, &g, 4, 1, 2, 99, ConvolutionMethod::Direct).unwrap();
        let u = [0.7, -1.2];
        let dec = decompose(&s, &e, &u, 1).unwrap();
        let est = sample_acov(&s, 1).unwrap();
        let gamma = theoretical_acov(&e, 1.0, 1, 1e-12).unwrap();
        let lhs: f64 = (0..2).map(|h| u[h] * (est.values[h] - gamma.values[h])).sum();
        assert!((lhs - dec.d_n - dec.r_n).abs() < 1e-12);
    }

    // Exhaustive enumeration over all index pairs (i, j) of the double sum.
    #[test]
    fn terms_match_enumeration() {
        let c = [1.0, 0.5];
        let e = CoefficientModel::explicit(c.to_vec()).unwrap();
        let z = vec![0.3, -1.1, 2.0, 0.4, -0.7, 1.5];
        let (n, h, m) = (4usize, 1usize, 1usize);
        let s = series_from(z.clone(), &e, n, h, m);
        let dec = decompose(&s, &e, &[1.0, 0.0], 1).unwrap();
        let zt = |t: isize| z[(t + m as isize - 1) as usize];
        for lag in 0..=1usize {
            let (mut d, mut r) = (0.0, 0.0);
            for t in 1..=n as isize {
                for i in 0..c.len() {
                    for j in 0..c.len() {
                        let a = zt(t - i as isize);
                        let b = zt(t + lag as isize - j as isize);
                        if j == i + lag {
                            d += c[i] * c[j] * (a * b - 1.0);
                        } else {
                            r += c[i] * c[j] * a * b;
                        }
                    }
                }
            }
            assert!((dec.d_terms[lag] - d / n as f64).abs() < 1e-14, "lag {lag}");
            assert!((dec.r_terms[lag] - r / n as f64).abs() < 1e-14, "lag {lag}");
        }
        let xi = offdiag_summands(&s, &e, 0).unwrap();
        assert!((xi.iter().sum::<f64>() / n as f64 - dec.r_terms[0]).abs() < 1e-14);
    }

    #[test]
    fn decompose_errors() {
        let e = CoefficientModel::explicit(vec![1.0, 0.5, 0.2]).unwrap();
        let g = InnovationModel::gaussian(1.0).unwrap();
        let s = simulate_linear(&e, &g, 10, 0, 2, 1, ConvolutionMethod::Direct).unwrap();
        assert_eq!(
            decompose(&s.clone().without_innovations(), &e, &[1.0], 0),
            Err(Error::InnovationsAbsent)
        );
        let long = CoefficientModel::explicit(vec![1.0; 5]).unwrap();
        assert!(matches!(decompose(&s, &long, &[1.0], 0), Err(Error::SupportTooLong { .. })));
    }

    #[test]
    fn scale_error_examples() {
        let gamma = |g: f64| AcovSequence {
            values: vec![g],
            sigma2: 1.0,
            tail_bound: 0.0,
        };
        let est = |v: f64, n| AcovEstimate { values: vec![v], n };
        let a = classify_regime(MomentClass::FiniteFourth, 0.1).unwrap();
        let v = scale_errors(&est(1.2, 100), &gamma(1.0), &a, None).unwrap();
        assert!((v[0] - 2.0).abs() < 1e-12);
        let c = classify_regime(MomentClass::FiniteFourth, 0.4).unwrap();
        let v = scale_errors(&est(1.05, 10_000), &gamma(1.0), &c, None).unwrap();
        assert!((v[0] - 10f64.powf(0.8) * 0.05).abs() < 1e-12);
        let b = classify_regime(MomentClass::Heavy { alpha: 3.0 }, 0.2).unwrap();
        let v = scale_errors(&est(1.01, 1000), &gamma(1.0), &b, Some(10.0)).unwrap();
        assert!((v[0] - 0.1).abs() < 1e-12);
        assert_eq!(
            scale_errors(&est(1.01, 1000), &gamma(1.0), &b, None),
            Err(Error::MissingNorming)
        );
    }

    #[test]
    fn offdiag_autocovariance_decays_like_power() {
        // E[ξ_n ξ_0] ~ K n^{4d−2}; estimated from the FFT autocovariance of
        // ξ along long paths, averaged over replications.
        let d = 0.35;
        let model = CoefficientModel::power_law(d, 1.0).unwrap();
        let g = InnovationModel::gaussian(1.0).unwrap();
        let (n, m) = (1usize << 15, 1usize << 15);
        let sim = crate::procsim::LinearSimulator::new(&model, &g, n, 0, m, ConvolutionMethod::Fft)
            .unwrap();
        let lags: Vec<usize> = (2..=7).map(|k| 1usize << k).collect();
        let mut acc = vec![0.0; lags.len()];
        let reps = 64;
        for r in 0..reps {
            let xi = offdiag_summands(&sim.simulate(1000 + r), &model, 0).unwrap();
            for (a, &l) in acc.iter_mut().zip(&lags) {
                *a += xi[..n - l].iter().zip(&xi[l..]).map(|(x, y)| x * y).sum::<f64>()
                    / (n - l) as f64;
            }
        }
        let x: Vec<f64> = lags.iter().map(|&l| l as f64).collect();
        let y: Vec<f64> = acc.iter().map(|a| a / reps as f64).collect();
        let fit = crate::stats::log_log_slope(&x, &y);
        assert!((fit.slope - (4.0 * d - 2.0)).abs() < 0.2, "slope {}", fit.slope);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn decomposition_identity(
            coeffs in prop::collection::vec(-2.0f64..2.0, 1..8),
            extra_m in 0usize..4,
            n in 1usize..40,
            lags in 0usize..4,
            seed in any::<u64>(),
            u in prop::collection::vec(-3.0f64..3.0, 4),
            nu_student in prop::bool::ANY,
        ) {
            prop_assume!(coeffs.iter().any(|&c| c.abs() > 1e-3));
            let e = CoefficientModel::explicit(coeffs.clone()).unwrap();
            let innov = if nu_student {
                InnovationModel::student(5.0, 1.3).unwrap()
            } else {
                InnovationModel::pareto(2.7, 0.8).unwrap()
            };
            let m = coeffs.len() - 1 + extra_m;
            let s = simulate_linear(&e, &innov, n, lags, m.max(1), seed, ConvolutionMethod::Direct).unwrap();
            let u = &u[..=lags];
            let dec = decompose(&s, &e, u, lags).unwrap();
            let est = sample_acov(&s, lags).unwrap();
            let gamma = theoretical_acov(&e, innov.sigma2(), lags, 1e-12).unwrap();
            let lhs: f64 = (0..=lags).map(|h| u[h] * (est.values[h] - gamma.values[h])).sum();
            let scale = 1.0 + est.values[0].abs() + dec.d_n.abs();
            prop_assert!((lhs - dec.d_n - dec.r_n).abs() < 1e-12 * scale);
        }
    }
}
