//! Innovation laws with exact moment and tail functionals.
//!
//! The two-sided Pareto variant draws a raw value `Y` with
//! `P[|Y| > x] = x^{−α}` for `x ≥ 1` and `P[Y > 0] = p`, then subtracts its
//! mean `m = (2p−1)α/(α−1)`. The norming constant `a_N` refers to `|Y|`,
//! so `a_N = N^{1/α}` exactly; truncated moments such as `b_N` refer to the
//! centered `Z = Y − m`.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::streams::{derive_seed, salt, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InnovationModel {
    Gaussian { sigma: f64 },
    /// `scale · t_ν`.
    StudentType { nu: f64, scale: f64 },
    TwoSidedPareto { alpha: f64, p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum MomentClass {
    FiniteFourth,
    Heavy { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub sigma2: f64,
    /// `E Z⁴ / σ⁴`, absent when the fourth moment is infinite.
    pub eta: Option<f64>,
    pub alpha: Option<f64>,
}

/// `N a_N^{−2}(σ² − b_N)` and its limit `α/(α−2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailCentering {
    pub value: f64,
    pub limit: f64,
}

/// Parameters of the bounded mean-zero truncation
/// `Z(T) = Z·1{|Z| ≤ T} − 2ε·sign(μ(T))`, `ε ~ U[0, |μ(T)|]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationSpec {
    pub t: f64,
    /// `μ(T) = E[Z·1{|Z| ≤ T}]`.
    pub mu_t: f64,
    /// `E Z(T)²`.
    pub sigma2_t: f64,
}

impl TruncationSpec {
    pub fn eps_range(&self) -> f64 {
        self.mu_t.abs()
    }
}

impl InnovationModel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        let m = InnovationModel::Gaussian { sigma };
        m.validate()?;
        Ok(m)
    }

    pub fn student(nu: f64, scale: f64) -> Result<Self> {
        let m = InnovationModel::StudentType { nu, scale };
        m.validate()?;
        Ok(m)
    }

    /// Student-type law scaled to unit variance.
    pub fn student_unit_variance(nu: f64) -> Result<Self> {
        Self::student(nu, ((nu - 2.0) / nu).sqrt())
    }

    pub fn pareto(alpha: f64, p: f64) -> Result<Self> {
        let m = InnovationModel::TwoSidedPareto { alpha, p };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            InnovationModel::Gaussian { sigma } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::invalid("sigma", "sigma must be positive"));
                }
            }
            InnovationModel::StudentType { nu, scale } => {
                if !(nu > 4.0 && nu.is_finite()) {
                    return Err(Error::invalid("nu", "nu must exceed 4"));
                }
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(Error::invalid("scale", "scale must be positive"));
                }
            }
            InnovationModel::TwoSidedPareto { alpha, p } => {
                if !(alpha > 2.0 && alpha < 4.0) {
                    return Err(Error::invalid("alpha", "alpha must lie in (2, 4)"));
                }
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::invalid("p", "p must lie in [0, 1]"));
                }
            }
        }
        Ok(())
    }

    pub fn moment_class(&self) -> MomentClass {
        match *self {
            InnovationModel::TwoSidedPareto { alpha, .. } => MomentClass::Heavy { alpha },
            _ => MomentClass::FiniteFourth,
        }
    }

    pub fn tail_index(&self) -> Option<f64> {
        match *self {
            InnovationModel::TwoSidedPareto { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    /// Constant subtracted from the raw draw to make it mean zero.
    pub fn mean_shift(&self) -> f64 {
        match *self {
            InnovationModel::TwoSidedPareto { alpha, p } => (2.0 * p - 1.0) * alpha / (alpha - 1.0),
            _ => 0.0,
        }
    }

    pub fn moments(&self) -> Moments {
        match *self {
            InnovationModel::Gaussian { sigma } => Moments {
                sigma2: sigma * sigma,
                eta: Some(3.0),
                alpha: None,
            },
            InnovationModel::StudentType { nu, scale } => Moments {
                sigma2: scale * scale * nu / (nu - 2.0),
                eta: Some(3.0 * (nu - 2.0) / (nu - 4.0)),
                alpha: None,
            },
            InnovationModel::TwoSidedPareto { alpha, .. } => {
                let m = self.mean_shift();
                Moments {
                    sigma2: alpha / (alpha - 2.0) - m * m,
                    eta: None,
                    alpha: Some(alpha),
                }
            }
        }
    }

    pub fn sigma2(&self) -> f64 {
        self.moments().sigma2
    }

    fn sampler(&self) -> Sampler {
        match *self {
            InnovationModel::Gaussian { sigma } => Sampler::Gaussian(sigma),
            InnovationModel::StudentType { nu, scale } => {
                Sampler::Student(StudentT::new(nu).expect("validated nu"), scale)
            }
            InnovationModel::TwoSidedPareto { alpha, p } => Sampler::Pareto {
                inv_alpha: -1.0 / alpha,
                p,
                shift: self.mean_shift(),
            },
        }
    }

    /// Fills `out` with i.i.d. draws from `rng`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let s = self.sampler();
        out.iter_mut().for_each(|z| *z = s.draw(rng));
    }

    /// `n` i.i.d. draws, deterministic in `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = StreamRng::seed_from_u64(derive_seed(seed, &[salt::INNOVATIONS]));
        let mut out = vec![0.0; n];
        self.sample_into(&mut rng, &mut out);
        out
    }

    /// `Σ_{i<n} (Z_i² − c)` without storing the draws.
    pub fn sum_centered_squares<R: Rng + ?Sized>(&self, rng: &mut R, n: usize, c: f64) -> f64 {
        match self.sampler() {
            // The sign of a symmetric Pareto draw does not affect Z².
            Sampler::Pareto { inv_alpha, shift: 0.0, .. } => {
                let k = 2.0 * inv_alpha;
                (0..n).map(|_| (1.0 - rng.random::<f64>()).powf(k) - c).sum()
            }
            s => (0..n).map(|_| s.draw(rng).powi(2) - c).sum(),
        }
    }

    /// `a_N` solving `N·P[|Y| > a_N] = 1`.
    pub fn norming_a(&self, n: usize) -> Result<f64> {
        let alpha = self.tail_index().ok_or(Error::NoTailIndex)?;
        Ok((n as f64).powf(1.0 / alpha))
    }

    /// `b_N = E[Z²·1{|Z| ≤ a_N}]`.
    pub fn truncated_b(&self, n: usize) -> Result<f64> {
        let a = self.norming_a(n)?;
        Ok(self.pareto_moment(2, Some(a), false))
    }

    pub fn tail_centering(&self, n: usize) -> Result<TailCentering> {
        let a = self.norming_a(n)?;
        let alpha = self.tail_index().ok_or(Error::NoTailIndex)?;
        // σ² − b_N is integrated directly over {|Z| > a_N} to avoid cancellation.
        let excess = self.pareto_moment(2, Some(a), true);
        Ok(TailCentering {
            value: n as f64 * excess / (a * a),
            limit: alpha / (alpha - 2.0),
        })
    }

    /// `E[Z^r·1{|Z| ≤ t}]` (or over `|Z| > t` when `outside`) for the
    /// centered Pareto variant, `r ∈ {0, 1, 2}`, with `t = None` meaning
    /// no restriction.
    fn pareto_moment(&self, r: u32, t: Option<f64>, outside: bool) -> f64 {
        let InnovationModel::TwoSidedPareto { alpha, p } = *self else {
            unreachable!("closed forms only exist for the Pareto variant")
        };
        let m = self.mean_shift();
        // ∫_lo^hi y^k α y^{−α−1} dy
        let i = |k: f64, lo: f64, hi: f64| {
            if hi <= lo {
                return 0.0;
            }
            let top = if hi.is_infinite() { 0.0 } else { hi.powf(k - alpha) };
            alpha / (k - alpha) * (top - lo.powf(k - alpha))
        };
        // Z = s·y − m with y ≥ 1, s = ±1: E[Z^r] over y ∈ [lo, hi] as a
        // polynomial in y.
        let branch = |s: f64, lo: f64, hi: f64| match r {
            0 => i(0.0, lo, hi),
            1 => s * i(1.0, lo, hi) - m * i(0.0, lo, hi),
            2 => i(2.0, lo, hi) - 2.0 * s * m * i(1.0, lo, hi) + m * m * i(0.0, lo, hi),
            _ => unreachable!(),
        };
        // |s·y − m| ≤ t  ⟺  y ∈ [s·m − t, s·m + t]
        let part = |s: f64| -> f64 {
            let Some(t) = t else {
                return branch(s, 1.0, f64::INFINITY);
            };
            let lo = (s * m - t).max(1.0);
            let hi = s * m + t;
            if outside {
                branch(s, 1.0, lo.min(hi.max(1.0))) + branch(s, hi.max(1.0), f64::INFINITY)
            } else {
                branch(s, lo, hi)
            }
        };
        p * part(1.0) + (1.0 - p) * part(-1.0)
    }

    /// Second moment of `Z` restricted to `|Z| ≤ t` for the symmetric
    /// finite-fourth-moment variants, by Gauss–Legendre on dyadic panels.
    fn symmetric_truncated_second(&self, t: f64) -> f64 {
        let (density, width): (Box<dyn Fn(f64) -> f64>, f64) = match *self {
            InnovationModel::Gaussian { sigma } => {
                let c = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
                (Box::new(move |z: f64| c * (-0.5 * (z / sigma).powi(2)).exp()), sigma)
            }
            InnovationModel::StudentType { nu, scale } => {
                use statrs::function::gamma::ln_gamma;
                let c = (ln_gamma(0.5 * (nu + 1.0))
                    - ln_gamma(0.5 * nu)
                    - 0.5 * (nu * std::f64::consts::PI).ln())
                .exp()
                    / scale;
                (
                    Box::new(move |z: f64| c * (1.0 + (z / scale).powi(2) / nu).powf(-0.5 * (nu + 1.0))),
                    scale,
                )
            }
            InnovationModel::TwoSidedPareto { .. } => unreachable!(),
        };
        let mut total = 0.0;
        let mut lo = 0.0;
        let mut hi = width.min(t);
        loop {
            total += quad::gl(32, lo, hi, |z| z * z * density(z));
            if hi >= t {
                break;
            }
            lo = hi;
            hi = (2.0 * hi).min(t);
        }
        2.0 * total
    }

    pub fn truncation(&self, t: f64) -> Result<TruncationSpec> {
        if !(t > 0.0) {
            return Err(Error::invalid("T", "truncation level must be positive"));
        }
        let (mu_t, second) = match self {
            InnovationModel::TwoSidedPareto { .. } => (
                self.pareto_moment(1, Some(t), false),
                self.pareto_moment(2, Some(t), false),
            ),
            _ => (0.0, self.symmetric_truncated_second(t)),
        };
        // E[(Z1 − 2ε·sgn μ)²] = E[Z²1] − 4|μ|·E ε + 4 E ε² = E[Z²1] − 2μ²/3
        Ok(TruncationSpec {
            t,
            mu_t,
            sigma2_t: second - 2.0 * mu_t * mu_t / 3.0,
        })
    }

    /// Applies the truncation element-wise; the `ε` draws come from a stream
    /// of `seed` separate from any innovation stream.
    pub fn truncate_sample(&self, z: &[f64], t: f64, seed: u64) -> Result<Vec<f64>> {
        let trunc = self.truncation(t)?;
        let kept = z.iter().map(|&x| if x.abs() <= t { x } else { 0.0 });
        if trunc.mu_t == 0.0 {
            return Ok(kept.collect());
        }
        let mut rng = StreamRng::seed_from_u64(derive_seed(seed, &[salt::TRUNCATION_EPS]));
        let shift = 2.0 * trunc.mu_t.signum();
        let range = trunc.eps_range();
        Ok(kept
            .map(|x| x - shift * range * rng.random::<f64>())
            .collect())
    }
}

enum Sampler {
    Gaussian(f64),
    Student(StudentT<f64>, f64),
    Pareto { inv_alpha: f64, p: f64, shift: f64 },
}

impl Sampler {
    #[inline]
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Gaussian(s) => s * Distribution::<f64>::sample(&StandardNormal, rng),
            Sampler::Student(t, s) => s * t.sample(rng),
            Sampler::Pareto { inv_alpha, p, shift } => {
                let u: f64 = rng.random();
                let y = (1.0 - u).powf(*inv_alpha);
                let y = if rng.random::<f64>() < *p { y } else { -y };
                y - shift
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean;

    #[test]
    fn moments_examples() {
        let g = InnovationModel::gaussian(1.0).unwrap().moments();
        assert_eq!((g.sigma2, g.eta, g.alpha), (1.0, Some(3.0), None));
        let p = InnovationModel::pareto(3.0, 0.5).unwrap().moments();
        assert_eq!((p.sigma2, p.eta, p.alpha), (3.0, None, Some(3.0)));
        let s = InnovationModel::student_unit_variance(6.0).unwrap().moments();
        assert!((s.sigma2 - 1.0).abs() < 1e-15);
        assert!((s.eta.unwrap() - 6.0).abs() < 1e-15);
    }

    // Golden values from scipy.integrate.quad on the densities.
    #[test]
    fn closed_forms_match_quadrature_oracle() {
        // Pareto α=3, p=0.5: ∫_1^∞ y²·3y^{−4} dy = 3
        let m = InnovationModel::pareto(3.0, 0.5).unwrap();
        assert!((m.pareto_moment(2, None, false) - 3.0).abs() < 1e-14);
        // Pareto α=3, p=0.8 centered: σ² = 3 − 0.81 = 2.19
        let m = InnovationModel::pareto(3.0, 0.8).unwrap();
        assert!((m.sigma2() - 2.19).abs() < 1e-14);
        assert!(m.pareto_moment(1, None, false).abs() < 1e-14);
        // Student ν=6 unit variance: the truncated second moment tends to 1
        let s = InnovationModel::student_unit_variance(6.0).unwrap();
        assert!((s.symmetric_truncated_second(1e6) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn validation_messages() {
        let e = InnovationModel::pareto(2.0, 0.5).unwrap_err();
        assert!(e.to_string().contains("alpha must lie in (2, 4)"));
        assert!(InnovationModel::student(4.0, 1.0).is_err());
        assert!(InnovationModel::pareto(3.0, 1.1).is_err());
    }

    #[test]
    fn norming_examples() {
        let m = InnovationModel::pareto(3.0, 0.5).unwrap();
        assert!((m.norming_a(1000).unwrap() - 10.0).abs() < 1e-13);
        let m25 = InnovationModel::pareto(2.5, 0.5).unwrap();
        assert!((m25.norming_a(32).unwrap() - 4.0).abs() < 1e-14);
        let g = InnovationModel::gaussian(1.0).unwrap();
        assert_eq!(g.norming_a(10), Err(Error::NoTailIndex));
        assert_eq!(g.truncated_b(10), Err(Error::NoTailIndex));
        assert!(g.to_owned().tail_centering(10).is_err());
        assert!(g.norming_a(10).unwrap_err().to_string().contains("no tail index"));
        for n in [10usize, 1000, 1_000_000] {
            for alpha in [2.5, 3.0, 3.5] {
                let a = InnovationModel::pareto(alpha, 0.3).unwrap().norming_a(n).unwrap();
                assert!((n as f64 * a.powf(-alpha) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn truncated_b_examples() {
        let m = InnovationModel::pareto(3.0, 0.5).unwrap();
        assert!((m.truncated_b(1000).unwrap() - 2.7).abs() < 1e-12);
        // b_N = 3(1 − 1/a_N) with a_N = 2^20
        assert!((m.truncated_b(1 << 60).unwrap() - 3.0 * (1.0 - 2f64.powi(-20))).abs() < 1e-12);
        // quadrature oracle: 5·(1 − 16^{−1/2}) = 3.75
        let m = InnovationModel::pareto(2.5, 0.5).unwrap();
        assert!((m.truncated_b(1024).unwrap() - 3.75).abs() < 1e-10);
    }

    // Oracle: scipy.integrate.quad of the centered two-sided density over
    // [−a, a] for α=2.5, p=0.8, N=1024, in both the y and z coordinates.
    #[test]
    fn asymmetric_truncated_b_golden() {
        let m = InnovationModel::pareto(2.5, 0.8).unwrap();
        let b = m.truncated_b(1024).unwrap();
        assert!((b - 2.797_327_018_806_736).abs() < 1e-10, "{b}");
        let full = m.pareto_moment(2, Some(16.0), false) + m.pareto_moment(2, Some(16.0), true);
        assert!((full - m.sigma2()).abs() < 1e-13);
    }

    #[test]
    fn tail_centering_examples() {
        let m = InnovationModel::pareto(3.0, 0.5).unwrap();
        let c = m.tail_centering(1000).unwrap();
        assert!((c.value - 3.0).abs() < 1e-12);
        assert_eq!(c.limit, 3.0);
        assert_eq!(InnovationModel::pareto(2.5, 0.5).unwrap().tail_centering(10).unwrap().limit, 5.0);
        let c = InnovationModel::pareto(3.0, 0.8).unwrap().tail_centering(1_000_000).unwrap();
        assert!((c.value - 3.0).abs() < 0.05);
    }

    #[test]
    fn gaussian_sample_mean() {
        let z = InnovationModel::gaussian(1.0).unwrap().sample(1_000_000, 7);
        assert!(mean(&z).abs() < 4e-3);
    }

    #[test]
    fn pareto_tail_and_balance() {
        let n = 1_000_000;
        for (p, seed) in [(0.5, 1u64), (0.8, 2)] {
            let model = InnovationModel::pareto(3.0, p).unwrap();
            let shift = model.mean_shift();
            let raw: Vec<f64> = model.sample(n, seed).iter().map(|z| z + shift).collect();
            for x in [2.0f64, 5.0, 10.0] {
                let q = x.powi(-3);
                let hits = raw.iter().filter(|y| y.abs() > x).count() as f64 / n as f64;
                let se = (q * (1.0 - q) / n as f64).sqrt();
                assert!((hits - q).abs() < 3.0 * se, "p={p} x={x}: {hits} vs {q}");
            }
            let big: Vec<&f64> = raw.iter().filter(|y| y.abs() > 10.0).collect();
            let frac = big.iter().filter(|y| ***y > 0.0).count() as f64 / big.len() as f64;
            let se = (p * (1.0 - p) / big.len() as f64).sqrt();
            assert!((frac - p).abs() < 4.0 * se + 1e-12, "p={p}: {frac}");
        }
    }

    #[test]
    fn pareto_second_moment_by_monte_carlo() {
        let model = InnovationModel::pareto(3.0, 0.5).unwrap();
        let z = model.sample(10_000_000, 3);
        let m2 = z.iter().map(|x| x * x).sum::<f64>() / z.len() as f64;
        assert!((m2 / 3.0 - 1.0).abs() < 0.05, "{m2}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = InnovationModel::student(5.0, 2.0).unwrap();
        assert_eq!(m.sample(100, 9), m.sample(100, 9));
        assert_ne!(m.sample(100, 9), m.sample(100, 10));
    }

    #[test]
    fn symmetric_truncation_is_plain_cutoff() {
        for model in [
            InnovationModel::pareto(3.0, 0.5).unwrap(),
            InnovationModel::gaussian(1.0).unwrap(),
        ] {
            let z = model.sample(1000, 4);
            let t = model.truncate_sample(&z, 1.5, 5).unwrap();
            for (a, b) in z.iter().zip(&t) {
                assert_eq!(*b, if a.abs() <= 1.5 { *a } else { 0.0 });
            }
        }
    }

    #[test]
    fn asymmetric_truncation_is_bounded() {
        let model = InnovationModel::pareto(2.5, 0.9).unwrap();
        let trunc = model.truncation(4.0).unwrap();
        assert!(trunc.mu_t != 0.0);
        let z = model.sample(100_000, 6);
        let t = model.truncate_sample(&z, 4.0, 7).unwrap();
        assert!(t.iter().all(|x| x.abs() <= 4.0 + 2.0 * trunc.mu_t.abs()));
    }

    #[test]
    fn truncated_variance_tends_to_sigma2() {
        for model in [
            InnovationModel::pareto(3.0, 0.8).unwrap(),
            InnovationModel::student_unit_variance(6.0).unwrap(),
        ] {
            let s2 = model.sigma2();
            let mut prev = f64::INFINITY;
            for t in [2.0, 8.0, 32.0, 128.0, 1e4] {
                let gap = (model.truncation(t).unwrap().sigma2_t - s2).abs();
                assert!(gap < prev);
                prev = gap;
            }
            assert!(prev < 1e-3 * s2);
            // Monte Carlo agrees with the exact truncated variance
            let z = model.sample(1_000_000, 11);
            let t = model.truncate_sample(&z, 8.0, 12).unwrap();
            let v = t.iter().map(|x| x * x).sum::<f64>() / t.len() as f64;
            let exact = model.truncation(8.0).unwrap().sigma2_t;
            assert!((v / exact - 1.0).abs() < 0.02, "{v} vs {exact}");
        }
    }
}
