//! Monte Carlo experiments: distributional convergence per regime, lag
//! invariance, variance rates and the phase diagram of rate exponents.
//!
//! Replication `r` at grid index `i` draws from the stream
//! `derive_seed(master, [REPLICATION, i, r])`; results are gathered in index
//! order, so every output is independent of the worker count.

mod rates;

pub use rates::{phase_diagram, variance_rate_slope, PhaseCell, PhaseOptions, PhaseRow, VarianceRate};

use serde::{Deserialize, Serialize};

use crate::acov::sample_acov;
use crate::coeffmodel::{theoretical_acov, CoefficientModel};
use crate::error::{Error, Result};
use crate::exec::{try_map_indexed, Schedule};
use crate::innovations::InnovationModel;
use crate::limitlaws::{
    classify_regime, forced_regime, sample_limit, LimitOptions, LimitSample, Region, RegimeReport,
};
use crate::procsim::{choose_truncation, ConvolutionMethod, LinearSimulator};
use crate::stats::{self, ks_critical_value, ks_two_sample, quantile_distance, LineFit, QuantileBand};
use crate::streams::{derive_seed, salt};

pub const MIN_REPLICATIONS: usize = 100;

/// How the order `M` of the simulated MA(M) model is chosen per `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum TruncationRule {
    /// Region C: `M = K·N` with the Rosenblatt span `K`; otherwise a tail
    /// tolerance of `1e−4`.
    Auto,
    Tolerance { rel_tol: f64 },
    Span { span: f64 },
    Fixed { m: usize },
}

impl TruncationRule {
    /// Explicit models always use their own support.
    pub fn resolve(&self, coeff: &CoefficientModel, region: Region, n: usize, span: f64) -> Result<usize> {
        if let Some(len) = coeff.support_len() {
            return Ok(len.saturating_sub(1).max(1));
        }
        match *self {
            TruncationRule::Auto if region == Region::C => Ok(span_order(span, n)),
            TruncationRule::Auto => choose_truncation(coeff, 1e-4),
            TruncationRule::Tolerance { rel_tol } => choose_truncation(coeff, rel_tol),
            TruncationRule::Span { span } => Ok(span_order(span, n)),
            TruncationRule::Fixed { m } => Ok(m.max(1)),
        }
    }
}

fn span_order(span: f64, n: usize) -> usize {
    ((span * n as f64).ceil() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Final KS distance at the largest `N`.
    pub ks: f64,
    /// Final central-quantile distance (heavy-tailed regimes).
    pub quantile: f64,
    /// Allowed rise of a distance between consecutive grid points; the
    /// two-sample KS 5% critical value when absent.
    pub trend_slack: Option<f64>,
    /// Allowed deviation of the fitted IQR exponent from the regime's rate.
    pub rate: f64,
    pub lag_ks: f64,
    pub lag_correlation: f64,
    /// Allowed deviation of a fitted variance-growth slope.
    pub variance_slope: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ks: 0.05,
            quantile: 0.1,
            trend_slack: None,
            rate: 0.12,
            lag_ks: 0.06,
            lag_correlation: 0.9,
            variance_slope: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub coeff: CoefficientModel,
    pub innov: InnovationModel,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub lags: usize,
    pub seed: u64,
    /// Region used instead of the classification, e.g. for explicit models.
    pub regime_override: Option<Region>,
    pub allow_boundary: bool,
    pub truncation: TruncationRule,
    /// Number of limit-law draws compared against each grid point.
    pub limit_draws: usize,
    pub band: QuantileBand,
    pub limit: LimitOptions,
    pub tolerances: Tolerances,
    #[serde(skip)]
    pub schedule: Schedule,
}

impl ExperimentConfig {
    /// Defaults: `R = 1000`, `H = 2`, seed 0, 2000 limit draws.
    pub fn new(coeff: CoefficientModel, innov: InnovationModel, n_grid: Vec<usize>) -> Self {
        Self {
            coeff,
            innov,
            n_grid,
            replications: 1000,
            lags: 2,
            seed: 0,
            regime_override: None,
            allow_boundary: false,
            truncation: TruncationRule::Auto,
            limit_draws: 2000,
            band: QuantileBand::default(),
            limit: LimitOptions::default(),
            tolerances: Tolerances::default(),
            schedule: Schedule::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.coeff.validate()?;
        self.innov.validate()?;
        if self.n_grid.is_empty() {
            return Err(Error::invalid("N", "the N grid is empty"));
        }
        if self.n_grid[0] < 2 || self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("N", "the N grid must be strictly increasing and start at 2 or more"));
        }
        if self.replications < MIN_REPLICATIONS {
            return Err(Error::invalid("R", format!("R must be at least {MIN_REPLICATIONS}")));
        }
        if self.limit_draws < 1 {
            return Err(Error::invalid("limit_draws", "need at least one limit draw"));
        }
        let b = self.band;
        if !(0.0 < b.lower && b.lower < b.upper && b.upper < 1.0 && b.points >= 2) {
            return Err(Error::invalid("band", "band must satisfy 0 < lower < upper < 1 with 2+ points"));
        }
        let t = &self.tolerances;
        for (field, v) in [("tolerances.ks", t.ks), ("tolerances.lag_ks", t.lag_ks)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::invalid(field, "KS tolerances must lie in (0, 1]"));
            }
        }
        if !(t.quantile > 0.0 && t.rate > 0.0) {
            return Err(Error::invalid("tolerances", "tolerances must be positive"));
        }
        Ok(())
    }

    /// The classified (or overridden) regime; boundary points are refused
    /// unless allowed.
    pub fn regime(&self) -> Result<RegimeReport> {
        let class = self.innov.moment_class();
        let d = self.coeff.memory();
        let report = match (self.regime_override, d) {
            (Some(region), _) => forced_regime(region, class, d.unwrap_or(0.0))?,
            (None, Some(d)) => classify_regime(class, d)?,
            (None, None) => {
                let region = match class {
                    crate::innovations::MomentClass::FiniteFourth => Region::A,
                    crate::innovations::MomentClass::Heavy { .. } => Region::B,
                };
                forced_regime(region, class, 0.0)?
            }
        };
        if report.is_boundary() && !self.allow_boundary {
            return Err(Error::RegimeBoundary {
                caveat: report.caveats.join("; "),
            });
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub outcome: Outcome,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Verdict {
    fn new(name: &str, outcome: Outcome, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            outcome,
            value,
            threshold,
            detail: detail.into(),
        }
    }
}

/// Scaled errors and distances at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub n: usize,
    /// Order of the simulated MA(M) model.
    pub m: usize,
    pub a_n: Option<f64>,
    /// Normalizing factor applied to `γ̂_h − γ_h`.
    pub scale: f64,
    /// `γ_h` of the simulated model, used for centering.
    pub gamma: Vec<f64>,
    /// `R × (H+1)`.
    pub scaled: Vec<Vec<f64>>,
    /// KS distance to the limit draws, per lag.
    pub ks: Vec<f64>,
    /// Central-quantile distance to the limit draws, per lag.
    pub quantile: Vec<f64>,
}

impl GridPoint {
    pub fn lag(&self, h: usize) -> Vec<f64> {
        self.scaled.iter().map(|row| row[h]).collect()
    }

    /// Unscaled errors `γ̂_h − γ_h`.
    pub fn raw_lag(&self, h: usize) -> Vec<f64> {
        self.scaled.iter().map(|row| row[h] / self.scale).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub regime: RegimeReport,
    pub grid: Vec<GridPoint>,
    pub limit: LimitSample,
    /// Fit of `log IQR(γ̂_0 − γ_0)` against `log N`.
    pub rate_fit: Option<LineFit>,
    pub verdicts: Vec<Verdict>,
}

impl ExperimentResult {
    pub fn failed(&self) -> bool {
        self.verdicts.iter().any(|v| v.outcome == Outcome::Fail)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }
}

/// `R` replications of `γ̂_h − γ_h` for `h = 0..=H`.
pub(crate) fn replicate_errors(
    sim: &LinearSimulator,
    gamma: &[f64],
    lags: usize,
    reps: usize,
    seed_of: impl Fn(usize) -> u64 + Sync + Send,
    schedule: Schedule,
) -> Result<Vec<Vec<f64>>> {
    try_map_indexed(reps, schedule, |r| {
        let series = sim.simulate(seed_of(r)).without_innovations();
        let est = sample_acov(&series, lags)?;
        Ok(est.values.iter().zip(gamma).map(|(a, b)| a - b).collect())
    })
}

/// `γ_0..γ_H` of the MA(M) model that is actually simulated.
pub(crate) fn simulated_acov(coeff: &CoefficientModel, sigma2: f64, m: usize, lags: usize) -> Result<Vec<f64>> {
    Ok(theoretical_acov(&coeff.truncated(m), sigma2, lags, 1e-12)?.values)
}

/// A sequence of distances passes when no step rises by more than `slack`.
fn trend_outcome(values: &[f64], slack: f64) -> (Outcome, f64) {
    let worst_rise = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    if values.len() < 2 {
        (Outcome::Inconclusive, 0.0)
    } else if worst_rise <= slack {
        (Outcome::Pass, worst_rise)
    } else {
        (Outcome::Fail, worst_rise)
    }
}

pub fn run_convergence(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let regime = config.regime()?;
    let region = match regime.region {
        Region::Boundary => match regime.moment_class {
            crate::innovations::MomentClass::FiniteFourth => Region::A,
            crate::innovations::MomentClass::Heavy { .. } => Region::B,
        },
        r => r,
    };
    let sigma2 = config.innov.sigma2();
    let lags = config.lags;
    let mut grid = Vec::with_capacity(config.n_grid.len());
    let mut largest_m = 1;
    for (i, &n) in config.n_grid.iter().enumerate() {
        let m = config.truncation.resolve(&config.coeff, region, n, config.limit.span)?;
        largest_m = m;
        let sim = LinearSimulator::new(&config.coeff, &config.innov, n, lags, m, ConvolutionMethod::auto(m))?;
        let gamma = simulated_acov(&config.coeff, sigma2, m, lags)?;
        let a_n = config.innov.norming_a(n).ok();
        let scale = regime.scale_factor(n, a_n)?;
        let raw = replicate_errors(
            &sim,
            &gamma,
            lags,
            config.replications,
            |r| derive_seed(config.seed, &[salt::REPLICATION, i as u64, r as u64]),
            config.schedule,
        )?;
        let scaled = raw
            .into_iter()
            .map(|row| row.into_iter().map(|e| scale * e).collect())
            .collect();
        grid.push(GridPoint {
            n,
            m,
            a_n,
            scale,
            gamma,
            scaled,
            ks: Vec::new(),
            quantile: Vec::new(),
        });
    }

    // Region B's limit depends on Σψψ₊ₕ of the simulated model.
    let limit_coeff = match (region, config.coeff.support_len()) {
        (Region::B, None) => config.coeff.truncated(largest_m),
        _ => config.coeff.clone(),
    };
    let limit_regime = RegimeReport {
        region,
        ..regime.clone()
    };
    let opts = LimitOptions {
        schedule: config.schedule,
        allow_boundary: config.allow_boundary,
        ..config.limit.clone()
    };
    let limit = sample_limit(
        &limit_regime,
        &limit_coeff,
        &config.innov,
        lags,
        config.limit_draws,
        derive_seed(config.seed, &[salt::LIMIT]),
        &opts,
    )?;
    let limit_cols: Vec<Vec<f64>> = (0..=lags).map(|h| limit.lag(h)).collect();
    for point in &mut grid {
        for (h, col) in limit_cols.iter().enumerate() {
            let errs = point.lag(h);
            point.ks.push(ks_two_sample(&errs, col));
            point.quantile.push(quantile_distance(col, &errs, config.band));
        }
    }

    let rate_fit = (grid.len() >= 2).then(|| {
        let ns: Vec<usize> = grid.iter().map(|p| p.n).collect();
        let raws: Vec<Vec<f64>> = grid.iter().map(|p| p.raw_lag(0)).collect();
        stats::iqr_exponent(&ns, &raws)
    });
    let verdicts = convergence_verdicts(config, &regime, region, &grid, rate_fit);
    Ok(ExperimentResult {
        config: config.clone(),
        regime,
        grid,
        limit,
        rate_fit,
        verdicts,
    })
}

fn convergence_verdicts(
    config: &ExperimentConfig,
    regime: &RegimeReport,
    region: Region,
    grid: &[GridPoint],
    rate_fit: Option<LineFit>,
) -> Vec<Verdict> {
    let tol = &config.tolerances;
    let noise = ks_critical_value(config.replications, config.limit_draws);
    // Sample sizes whose own KS noise reaches the threshold cannot decide it.
    let resolvable = noise < tol.ks;
    let slack = tol.trend_slack.unwrap_or(noise);
    let last = grid.last().expect("nonempty grid");
    let mut out = Vec::new();

    let ks0: Vec<f64> = grid.iter().map(|p| p.ks[0]).collect();
    let (trend, rise) = trend_outcome(&ks0, slack);
    out.push(Verdict::new(
        "ks_trend",
        if resolvable { trend } else { Outcome::Inconclusive },
        rise,
        slack,
        "largest rise of the lag-0 KS distance between consecutive grid points",
    ));
    let final_ks = last.ks[0];
    let outcome = match (resolvable, final_ks < tol.ks) {
        (false, _) => Outcome::Inconclusive,
        (true, true) => Outcome::Pass,
        (true, false) => Outcome::Fail,
    };
    out.push(Verdict::new(
        "ks_final",
        outcome,
        final_ks,
        tol.ks,
        format!("lag-0 KS distance at N = {} (noise level {noise:.4})", last.n),
    ));

    if region == Region::B {
        let q0: Vec<f64> = grid.iter().map(|p| p.quantile[0]).collect();
        let final_q = last.quantile[0];
        let outcome = match (resolvable, final_q < tol.quantile) {
            (false, _) => Outcome::Inconclusive,
            (true, true) => Outcome::Pass,
            (true, false) => Outcome::Fail,
        };
        out.push(Verdict::new(
            "quantile_final",
            outcome,
            final_q,
            tol.quantile,
            format!("central-quantile distance at N = {}; grid values {q0:?}", last.n),
        ));
    }

    if let Some(fit) = rate_fit {
        let dev = (fit.slope - regime.rate_exponent).abs();
        let outcome = if grid.len() < 3 || !resolvable {
            Outcome::Inconclusive
        } else if dev <= tol.rate {
            Outcome::Pass
        } else {
            Outcome::Fail
        };
        out.push(Verdict::new(
            "rate_exponent",
            outcome,
            fit.slope,
            regime.rate_exponent,
            format!("fitted IQR exponent vs theoretical, allowed deviation {}", tol.rate),
        ));
    }
    out
}

/// Cross-lag behaviour of the scaled errors at the largest `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagInvariance {
    pub n: usize,
    /// `(h, h′, KS)` for all `h < h′`.
    pub pairwise_ks: Vec<(usize, usize, f64)>,
    /// Correlation of lag 0 with lag `h`, `h = 1..=H`.
    pub correlations: Vec<f64>,
    pub verdicts: Vec<Verdict>,
}

impl LagInvariance {
    pub fn failed(&self) -> bool {
        self.verdicts.iter().any(|v| v.outcome == Outcome::Fail)
    }
}

pub fn lag_invariance_check(result: &ExperimentResult) -> Result<LagInvariance> {
    if result.regime.region != Region::C {
        return Err(Error::NotRegionC(format!("{:?}", result.regime.region)));
    }
    let point = result.grid.last().expect("nonempty grid");
    let lags = result.config.lags;
    let cols: Vec<Vec<f64>> = (0..=lags).map(|h| point.lag(h)).collect();
    let mut pairwise_ks = Vec::new();
    for a in 0..=lags {
        for b in a + 1..=lags {
            pairwise_ks.push((a, b, ks_two_sample(&cols[a], &cols[b])));
        }
    }
    let correlations: Vec<f64> = (1..=lags).map(|h| stats::correlation(&cols[0], &cols[h])).collect();
    let tol = &result.config.tolerances;
    let max_ks = pairwise_ks.iter().map(|p| p.2).fold(0.0, f64::max);
    let min_corr = correlations.iter().cloned().fold(1.0, f64::min);
    let verdicts = vec![
        Verdict::new(
            "lag_ks",
            if max_ks < tol.lag_ks { Outcome::Pass } else { Outcome::Fail },
            max_ks,
            tol.lag_ks,
            "largest pairwise KS distance between lags",
        ),
        Verdict::new(
            "lag_correlation",
            if min_corr > tol.lag_correlation {
                Outcome::Pass
            } else {
                Outcome::Fail
            },
            min_corr,
            tol.lag_correlation,
            "smallest correlation between lag 0 and another lag",
        ),
    ];
    Ok(LagInvariance {
        n: point.n,
        pairwise_ks,
        correlations,
        verdicts,
    })
}
