//! Empirical-distribution statistics used by the experiment harness.

use serde::{Deserialize, Serialize};

fn sorted(a: &[f64]) -> Vec<f64> {
    let mut v = a.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Two-sample Kolmogorov–Smirnov distance `sup_x |F_a(x) − F_b(x)|`,
/// computed by a merge scan over the sorted samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "KS needs nonempty samples");
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut best: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}

/// Critical value of the two-sample KS statistic at the 5% level
/// (asymptotic, `c(0.05) = 1.358`).
pub fn ks_critical_value(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.358 * ((n + m) / (n * m)).sqrt()
}

/// Linearly interpolated quantile of an already sorted sample.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(a: &[f64], q: f64) -> f64 {
    quantile_sorted(&sorted(a), q)
}

pub fn iqr(a: &[f64]) -> f64 {
    let s = sorted(a);
    quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25)
}

/// Central quantile band used for heavy-tailed comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileBand {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

impl Default for QuantileBand {
    fn default() -> Self {
        Self {
            lower: 0.05,
            upper: 0.95,
            points: 19,
        }
    }
}

/// Largest absolute difference between empirical quantiles of `a` and `b`
/// over the band, divided by the interquartile range of `a`.
pub fn quantile_distance(a: &[f64], b: &[f64], band: QuantileBand) -> f64 {
    assert!(0.0 < band.lower && band.lower < band.upper && band.upper < 1.0);
    assert!(band.points >= 2);
    let (sa, sb) = (sorted(a), sorted(b));
    let scale = quantile_sorted(&sa, 0.75) - quantile_sorted(&sa, 0.25);
    let step = (band.upper - band.lower) / (band.points - 1) as f64;
    let worst = (0..band.points)
        .map(|k| {
            let q = band.lower + step * k as f64;
            (quantile_sorted(&sa, q) - quantile_sorted(&sb, q)).abs()
        })
        .fold(0.0, f64::max);
    if scale > 0.0 {
        worst / scale
    } else if worst == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

pub fn mean(a: &[f64]) -> f64 {
    a.iter().sum::<f64>() / a.len() as f64
}

/// Unbiased sample variance.
pub fn variance(a: &[f64]) -> f64 {
    let m = mean(a);
    a.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (a.len() as f64 - 1.0)
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

/// Ordinary least-squares line `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "a line needs two points");
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    LineFit {
        slope,
        intercept: my - slope * mx,
    }
}

/// Slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> LineFit {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    fit_line(&lx, &ly)
}

/// Rate exponent `r` in `IQR(errors at N) ∝ N^r`.
pub fn iqr_exponent(ns: &[usize], samples: &[Vec<f64>]) -> LineFit {
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let y: Vec<f64> = samples.iter().map(|s| iqr(s)).collect();
    log_log_slope(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ks_examples() {
        let a = [0.3, 0.1, 0.7];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        assert_eq!(ks_two_sample(&[0.1, 0.5, 0.9], &[2.1, 2.5]), 1.0);
        // breakpoints 1, 1.5, 2: |0.5−0|, |0.5−1|, |1−1|
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.5]), 0.5);
    }

    #[test]
    fn ks_handles_ties() {
        assert_eq!(ks_two_sample(&[1.0, 1.0, 2.0], &[1.0, 2.0, 2.0]), 1.0 / 3.0);
    }

    #[test]
    fn quantile_distance_examples() {
        let a: Vec<f64> = (0..=100).map(|i| i as f64 * 0.04).collect(); // IQR = 2
        assert!((iqr(&a) - 2.0).abs() < 1e-12);
        assert_eq!(quantile_distance(&a, &a, QuantileBand::default()), 0.0);
        let b: Vec<f64> = a.iter().map(|x| x + 1.0).collect();
        assert!((quantile_distance(&a, &b, QuantileBand::default()) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn iqr_exponent_recovers_pure_power() {
        let base: Vec<f64> = (0..501).map(|i| ((i * 37) % 101) as f64 - 50.0).collect();
        let ns = [1usize << 10, 1 << 12, 1 << 14, 1 << 16];
        let r = -0.3137;
        let samples: Vec<Vec<f64>> = ns
            .iter()
            .map(|&n| base.iter().map(|x| x * (n as f64).powf(r)).collect())
            .collect();
        let fit = iqr_exponent(&ns, &samples);
        assert!((fit.slope - r).abs() < 1e-6, "{}", fit.slope);
    }

    proptest! {
        #[test]
        fn ks_symmetric_and_monotone_invariant(
            a in prop::collection::vec(-10.0f64..10.0, 1..60),
            b in prop::collection::vec(-10.0f64..10.0, 1..60),
        ) {
            let d = ks_two_sample(&a, &b);
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert_eq!(d, ks_two_sample(&b, &a));
            let ta: Vec<f64> = a.iter().map(|x| x.exp() * 3.0 + 1.0).collect();
            let tb: Vec<f64> = b.iter().map(|x| x.exp() * 3.0 + 1.0).collect();
            prop_assert!((d - ks_two_sample(&ta, &tb)).abs() < 1e-12);
        }
    }
}
