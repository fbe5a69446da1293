//! Regime classification and samplers for the three limit laws.

mod gaussian;
mod kernel;
mod regime;
mod rosenblatt;
mod stable;

use serde::{Deserialize, Serialize};

use crate::coeffmodel::{theoretical_acov, CoefficientModel};
use crate::error::{Error, Result};
use crate::exec::Schedule;
use crate::innovations::InnovationModel;

pub use gaussian::{gaussian_limit_cov, sample_gaussian_vector};
pub use kernel::{kernel_l2, kernel_l2_sequence, KernelL2};
pub use regime::{classify_regime, forced_regime, Normalization, Region, RegimeReport};
pub use rosenblatt::{
    kernel_norm_full, kernel_norm_truncated, sample_rosenblatt, RosenblattInfo, RosenblattSampler,
    MIN_GRID,
};
pub use stable::{sample_stable_s, sample_stable_s_with, MIN_STABLE_N};

/// Settings for [`sample_limit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitOptions {
    /// Relative tolerance for theoretical series.
    pub tol: f64,
    /// `N_big` of the stable sampler.
    pub n_big: usize,
    /// Rosenblatt grid `N_g`.
    pub grid: usize,
    /// Rosenblatt span `K`.
    pub span: f64,
    pub far_field: bool,
    /// Sample at a boundary point using the neighbouring region's law.
    pub allow_boundary: bool,
    #[serde(skip)]
    pub schedule: Schedule,
}

impl Default for LimitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            n_big: MIN_STABLE_N,
            grid: 1000,
            span: 5.0,
            far_field: false,
            allow_boundary: false,
            schedule: Schedule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law")]
pub enum LimitLaw {
    GaussianVector {
        cov: Vec<Vec<f64>>,
    },
    StableShifted {
        alpha: f64,
        n_big: usize,
        a_n: f64,
        b_n: f64,
        /// `α/(α−2)`, subtracted from each `S` draw.
        shift: f64,
        /// `Σ_j ψ(j)ψ(j+h)` per lag.
        lag_factors: Vec<f64>,
    },
    RosenblattScaled {
        d: f64,
        sigma2: f64,
        c_d: f64,
        kernel: RosenblattInfo,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSample {
    /// `n × (H+1)`.
    pub draws: Vec<Vec<f64>>,
    pub law: LimitLaw,
    pub region: Region,
    pub seed: u64,
}

impl LimitSample {
    /// Column `h` of the draw matrix.
    pub fn lag(&self, h: usize) -> Vec<f64> {
        self.draws.iter().map(|row| row[h]).collect()
    }
}

/// Region used for sampling: boundary points map to the region on the
/// Gaussian side (`d < 1/4`) or stable side (`d < 1/α`) when allowed.
fn effective_region(regime: &RegimeReport, allow_boundary: bool) -> Result<Region> {
    if regime.region != Region::Boundary {
        return Ok(regime.region);
    }
    if !allow_boundary {
        return Err(Error::RegimeBoundary {
            caveat: regime.caveats.join("; "),
        });
    }
    Ok(match regime.moment_class {
        crate::innovations::MomentClass::FiniteFourth => Region::A,
        crate::innovations::MomentClass::Heavy { .. } => Region::B,
    })
}

fn check_consistency(regime: &RegimeReport, coeff: &CoefficientModel, innov: &InnovationModel) -> Result<()> {
    if regime.moment_class != innov.moment_class() {
        return Err(Error::RegimeMismatch(format!(
            "regime was classified for {:?} but the innovations are {:?}",
            regime.moment_class,
            innov.moment_class()
        )));
    }
    if let Some(d) = coeff.memory() {
        if (d - regime.d).abs() > 1e-12 {
            return Err(Error::RegimeMismatch(format!(
                "regime was classified at d = {} but the coefficients have d = {d}",
                regime.d
            )));
        }
    }
    Ok(())
}

/// `n` draws of the limit vector over lags `0..=H` for the given regime.
pub fn sample_limit(
    regime: &RegimeReport,
    coeff: &CoefficientModel,
    innov: &InnovationModel,
    lags: usize,
    n: usize,
    seed: u64,
    opts: &LimitOptions,
) -> Result<LimitSample> {
    coeff.validate()?;
    innov.validate()?;
    check_consistency(regime, coeff, innov)?;
    let region = effective_region(regime, opts.allow_boundary)?;
    let (draws, law) = match region {
        Region::A => {
            let m = innov.moments();
            let eta = m.eta.ok_or_else(|| {
                Error::RegimeMismatch("the Gaussian limit needs a finite fourth moment".into())
            })?;
            let cov = gaussian_limit_cov(coeff, m.sigma2, eta, lags, opts.tol)?;
            (sample_gaussian_vector(&cov, n, seed), LimitLaw::GaussianVector { cov })
        }
        Region::B => {
            let alpha = innov.tail_index().ok_or(Error::NoTailIndex)?;
            let lag_factors = theoretical_acov(coeff, 1.0, lags, opts.tol)?.values;
            let shift = alpha / (alpha - 2.0);
            let s = sample_stable_s_with(innov, n, seed, opts.n_big, opts.schedule)?;
            let draws = s
                .iter()
                .map(|s| lag_factors.iter().map(|f| (s - shift) * f).collect())
                .collect();
            let law = LimitLaw::StableShifted {
                alpha,
                n_big: opts.n_big,
                a_n: innov.norming_a(opts.n_big)?,
                b_n: innov.truncated_b(opts.n_big)?,
                shift,
                lag_factors,
            };
            (draws, law)
        }
        Region::C => {
            let (d, c_d) = match (coeff.memory(), coeff.c_d()) {
                (Some(d), Some(c)) => (d, c),
                _ => {
                    return Err(Error::RegimeMismatch(
                        "the Rosenblatt limit needs a power-law coefficient model".into(),
                    ))
                }
            };
            let sigma2 = innov.sigma2();
            let sampler = RosenblattSampler::new(d, opts.grid, opts.span, opts.far_field)?;
            let factor = sigma2 * c_d * c_d;
            let draws = sampler
                .draws(n, seed, opts.schedule)
                .into_iter()
                .map(|u| vec![factor * u; lags + 1])
                .collect();
            let law = LimitLaw::RosenblattScaled {
                d,
                sigma2,
                c_d,
                kernel: sampler.info(),
            };
            (draws, law)
        }
        Region::Boundary => unreachable!("mapped by effective_region"),
    };
    Ok(LimitSample {
        draws,
        law,
        region,
        seed,
    })
}
