//! Rate experiments: variance growth of the off-diagonal sum and the
//! empirical phase diagram of rate exponents.

use serde::{Deserialize, Serialize};

use crate::acov::offdiag_summands;
use crate::coeffmodel::CoefficientModel;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, try_map_indexed, Schedule};
use crate::innovations::{InnovationModel, MomentClass};
use crate::limitlaws::{classify_regime, Region};
use crate::procsim::{ConvolutionMethod, LinearSimulator};
use crate::stats::{self, LineFit};
use crate::streams::{derive_seed, salt};

use super::{replicate_errors, simulated_acov, TruncationRule, MIN_REPLICATIONS};

/// Monte Carlo variance of `Σ_{t≤N} ξ_t(0)` across a grid of `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRate {
    pub d: f64,
    pub n_grid: Vec<usize>,
    pub variances: Vec<f64>,
    pub fit: LineFit,
    /// `1` for `d < 1/4`, `4d` above.
    pub expected_slope: f64,
    /// `Var / (N ln N)` per grid point, reported at `d = 1/4`.
    pub n_log_n_ratio: Option<Vec<f64>>,
}

fn check_grid(n_grid: &[usize], reps: usize) -> Result<()> {
    if n_grid.len() < 2 || n_grid[0] < 2 || n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("N", "need a strictly increasing grid of two or more sizes"));
    }
    if reps < MIN_REPLICATIONS {
        return Err(Error::invalid("R", format!("R must be at least {MIN_REPLICATIONS}")));
    }
    Ok(())
}

/// The series use `M = K·N` so that the simulated kernel is self-similar in `N`.
pub fn variance_rate_slope(
    coeff: &CoefficientModel,
    innov: &InnovationModel,
    n_grid: &[usize],
    reps: usize,
    seed: u64,
    span: f64,
    schedule: Schedule,
) -> Result<VarianceRate> {
    coeff.validate()?;
    innov.validate()?;
    check_grid(n_grid, reps)?;
    let d = coeff
        .memory()
        .ok_or_else(|| Error::invalid("coeff", "variance rates need a power-law model"))?;
    if !(span >= 1.0) {
        return Err(Error::invalid("span", "span K must be at least 1"));
    }
    let mut variances = Vec::with_capacity(n_grid.len());
    for (i, &n) in n_grid.iter().enumerate() {
        let m = (span * n as f64).ceil() as usize;
        let sim = LinearSimulator::new(coeff, innov, n, 0, m, ConvolutionMethod::auto(m))?;
        let sums = try_map_indexed(reps, schedule, |r| -> Result<f64> {
            let series = sim.simulate(derive_seed(seed, &[salt::REPLICATION, i as u64, r as u64]));
            Ok(offdiag_summands(&series, coeff, 0)?.iter().sum())
        })?;
        variances.push(stats::variance(&sums));
    }
    let ns: Vec<f64> = n_grid.iter().map(|&n| n as f64).collect();
    let fit = stats::log_log_slope(&ns, &variances);
    let at_quarter = (d - 0.25).abs() < 1e-12;
    Ok(VarianceRate {
        d,
        n_grid: n_grid.to_vec(),
        fit,
        expected_slope: if d < 0.25 || at_quarter { 1.0 } else { 4.0 * d },
        n_log_n_ratio: at_quarter.then(|| {
            ns.iter()
                .zip(&variances)
                .map(|(n, v)| v / (n * n.ln()))
                .collect()
        }),
        variances,
    })
}

/// One `(moment class, d)` point of the phase diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub moment_class: MomentClass,
    pub d: f64,
}

impl PhaseCell {
    /// Gaussian innovations for the finite-fourth-moment class, symmetric
    /// Pareto for the heavy class.
    pub fn innovations(&self) -> Result<InnovationModel> {
        match self.moment_class {
            MomentClass::FiniteFourth => InnovationModel::gaussian(1.0),
            MomentClass::Heavy { alpha } => InnovationModel::pareto(alpha, 0.5),
        }
    }

    fn check_margin(&self) -> Result<()> {
        const MARGIN: f64 = 0.02;
        let mut edges = vec![0.25];
        if let MomentClass::Heavy { alpha } = self.moment_class {
            edges.push(1.0 / alpha);
        }
        if edges.iter().any(|e| (self.d - e).abs() < MARGIN) {
            return Err(Error::invalid("d", "phase-diagram cells must stay 0.02 away from region boundaries"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseOptions {
    pub truncation: TruncationRule,
    pub span: f64,
    #[serde(skip)]
    pub schedule: Schedule,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        Self {
            truncation: TruncationRule::Span { span: 5.0 },
            span: 5.0,
            schedule: Schedule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub cell: PhaseCell,
    pub region: Region,
    pub theoretical: f64,
    pub empirical: f64,
    pub deviation: f64,
    /// `IQR(γ̂_0 − γ_0)` per grid point.
    pub iqrs: Vec<f64>,
}

/// Empirical IQR exponents of `γ̂_0 − γ_0` against the classified rates.
pub fn phase_diagram(
    cells: &[PhaseCell],
    n_grid: &[usize],
    reps: usize,
    seed: u64,
    opts: &PhaseOptions,
) -> Result<Vec<PhaseRow>> {
    check_grid(n_grid, reps)?;
    for cell in cells {
        cell.check_margin()?;
    }
    let rows = map_indexed(cells.len(), Schedule::Sequential, |c| -> Result<PhaseRow> {
        let cell = cells[c];
        let innov = cell.innovations()?;
        let coeff = CoefficientModel::power_law(cell.d, 1.0)?;
        let regime = classify_regime(cell.moment_class, cell.d)?;
        let mut samples = Vec::with_capacity(n_grid.len());
        for (i, &n) in n_grid.iter().enumerate() {
            let m = opts.truncation.resolve(&coeff, regime.region, n, opts.span)?;
            let sim = LinearSimulator::new(&coeff, &innov, n, 0, m, ConvolutionMethod::auto(m))?;
            let gamma = simulated_acov(&coeff, innov.sigma2(), m, 0)?;
            let errs = replicate_errors(
                &sim,
                &gamma,
                0,
                reps,
                |r| derive_seed(seed, &[salt::REPLICATION, c as u64, i as u64, r as u64]),
                opts.schedule,
            )?;
            samples.push(errs.into_iter().map(|e| e[0]).collect::<Vec<f64>>());
        }
        let fit = stats::iqr_exponent(n_grid, &samples);
        Ok(PhaseRow {
            cell,
            region: regime.region,
            theoretical: regime.rate_exponent,
            empirical: fit.slope,
            deviation: fit.slope - regime.rate_exponent,
            iqrs: samples.iter().map(|s| stats::iqr(s)).collect(),
        })
    });
    rows.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_cells_near_boundaries() {
        let cells = [PhaseCell {
            moment_class: MomentClass::Heavy { alpha: 3.0 },
            d: 0.32,
        }];
        assert!(phase_diagram(&cells, &[64, 128], 100, 0, &PhaseOptions::default()).is_err());
    }

    #[test]
    fn variance_rate_needs_power_law() {
        let e = CoefficientModel::explicit(vec![1.0, 0.5]).unwrap();
        let g = InnovationModel::gaussian(1.0).unwrap();
        assert!(variance_rate_slope(&e, &g, &[64, 128], 100, 0, 5.0, Schedule::Sequential).is_err());
    }

    #[test]
    fn short_memory_variance_grows_linearly() {
        let m = CoefficientModel::power_law(0.1, 1.0).unwrap();
        let g = InnovationModel::gaussian(1.0).unwrap();
        let r = variance_rate_slope(&m, &g, &[256, 1024, 4096], 200, 3, 2.0, Schedule::default()).unwrap();
        assert!((r.fit.slope - 1.0).abs() < 0.2, "{}", r.fit.slope);
        assert!(r.n_log_n_ratio.is_none());
    }
}
