//! One function per subcommand. Each returns its data tables, metrics and
//! verdicts; writing and exit codes are handled by the caller.

use acovlab::acov::sample_acov;
use acovlab::coeffmodel::theoretical_acov;
use acovlab::limitlaws::{classify_regime, sample_limit, Region, RegimeReport};
use acovlab::mcharness::{
    lag_invariance_check, phase_diagram, run_convergence, variance_rate_slope, ExperimentConfig, Outcome,
    PhaseOptions, TruncationRule, Verdict,
};
use acovlab::procsim::{simulate_linear, ConvolutionMethod};
use acovlab::streams::{derive_seed, salt};
use acovlab::{CoefficientModel, InnovationModel, MomentClass, Schedule};
use serde_json::{json, Map, Value};

use crate::config::{ConfigError, ConfigFile};
use crate::output::{Cell, Table};

pub struct Report {
    pub tables: Vec<Table>,
    /// Command-specific inputs echoed next to the config.
    pub extra_params: Map<String, Value>,
    pub metrics: Value,
    pub verdicts: Vec<Verdict>,
}

impl Report {
    fn new(tables: Vec<Table>, metrics: Value) -> Self {
        Self {
            tables,
            extra_params: Map::new(),
            metrics,
            verdicts: Vec::new(),
        }
    }

    pub fn failed(&self) -> bool {
        self.verdicts.iter().any(|v| v.outcome == Outcome::Fail)
    }
}

type Outcomes = Result<Report, ConfigError>;

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("library types serialize")
}

/// The config's regime for sampling, refusing boundaries unless allowed.
fn regime(cfg: &ConfigFile, coeff: &CoefficientModel, innov: &InnovationModel, allow: bool) -> Result<RegimeReport, ConfigError> {
    let mut e = ExperimentConfig::new(coeff.clone(), *innov, vec![1]);
    e.regime_override = cfg.region;
    e.allow_boundary = allow;
    Ok(e.regime()?)
}

/// Region used only to pick the simulation order; boundaries fall back
/// to the tail-tolerance rule.
fn order_region(cfg: &ConfigFile, coeff: &CoefficientModel, innov: &InnovationModel) -> Region {
    if let Some(r) = cfg.region {
        return r;
    }
    match coeff.memory() {
        Some(d) => classify_regime(innov.moment_class(), d).map_or(Region::Boundary, |r| r.region),
        None => Region::A,
    }
}

fn series_seed(seed: u64, i: usize) -> u64 {
    derive_seed(seed, &[salt::REPLICATION, i as u64, 0])
}

pub fn simulate(cfg: &ConfigFile) -> Outcomes {
    let (coeff, innov) = (cfg.coeff()?, cfg.innov()?);
    let region = order_region(cfg, &coeff, &innov);
    let mut table = Table::new("series", &["N", "t", "x"]);
    let mut sizes = Vec::new();
    for (i, &n) in cfg.grid()?.iter().enumerate() {
        let m = cfg.truncation().resolve(&coeff, region, n, cfg.span)?;
        let method = ConvolutionMethod::auto(m);
        let s = simulate_linear(&coeff, &innov, n, cfg.h, m, series_seed(cfg.seed, i), method)?;
        for (t, x) in s.values.iter().enumerate() {
            table.push(vec![n.into(), (t + 1).into(), (*x).into()]);
        }
        sizes.push(json!({ "N": n, "M": m, "method": method }));
    }
    Ok(Report::new(vec![table], json!({ "series": sizes })))
}

pub fn acov(cfg: &ConfigFile) -> Outcomes {
    let (coeff, innov) = (cfg.coeff()?, cfg.innov()?);
    let region = order_region(cfg, &coeff, &innov);
    let sigma2 = innov.sigma2();
    let gamma = theoretical_acov(&coeff, sigma2, cfg.h, 1e-8)?;
    let mut table = Table::new("acov", &["N", "M", "lag", "gamma", "gamma_model", "gamma_hat"]);
    for (i, &n) in cfg.grid()?.iter().enumerate() {
        let m = cfg.truncation().resolve(&coeff, region, n, cfg.span)?;
        let s = simulate_linear(&coeff, &innov, n, cfg.h, m, series_seed(cfg.seed, i), ConvolutionMethod::auto(m))?;
        let est = sample_acov(&s, cfg.h)?;
        let model = theoretical_acov(&coeff.truncated(m), sigma2, cfg.h, 1e-12)?;
        for h in 0..=cfg.h {
            table.push(vec![
                n.into(),
                m.into(),
                h.into(),
                gamma.values[h].into(),
                model.values[h].into(),
                est.values[h].into(),
            ]);
        }
    }
    Ok(Report::new(vec![table], json!({ "gamma": gamma })))
}

pub fn regime_report(cfg: &ConfigFile, alpha: Option<f64>, d: Option<f64>) -> Outcomes {
    let class = match (alpha, &cfg.innov) {
        (Some(alpha), _) => {
            if !(alpha > 2.0 && alpha < 4.0) {
                return Err(ConfigError("invalid alpha: alpha must lie in (2, 4)".into()));
            }
            MomentClass::Heavy { alpha }
        }
        (None, Some(_)) => cfg.innov()?.moment_class(),
        (None, None) => MomentClass::FiniteFourth,
    };
    let d = match (d, &cfg.coeff) {
        (Some(d), _) => d,
        (None, Some(_)) => cfg
            .coeff()?
            .memory()
            .ok_or_else(|| ConfigError("invalid d: explicit coefficients have no memory parameter".into()))?,
        (None, None) => return Err(ConfigError("invalid d: pass --d or a power-law coeff".into())),
    };
    let report = classify_regime(class, d)?;
    let mut table = Table::new("regime", &["region", "rate_exponent", "normalization", "caveats"]);
    table.push(vec![
        format!("{:?}", report.region).into(),
        report.rate_exponent.into(),
        to_value(&report.normalization).as_str().unwrap_or_default().into(),
        report.caveats.join("; ").into(),
    ]);
    let mut out = Report::new(vec![table], to_value(&report));
    if let Some(a) = alpha {
        out.extra_params.insert("alpha".into(), a.into());
    }
    out.extra_params.insert("d".into(), d.into());
    Ok(out)
}

pub fn limit_sample(cfg: &ConfigFile, draws: Option<usize>, allow: bool) -> Outcomes {
    let (coeff, innov) = (cfg.coeff()?, cfg.innov()?);
    let regime = regime(cfg, &coeff, &innov, allow)?;
    let n = draws.unwrap_or(cfg.limit_draws);
    if n == 0 {
        return Err(ConfigError("invalid draws: need at least one draw".into()));
    }
    let opts = cfg.limit_options(allow);
    let sample = sample_limit(&regime, &coeff, &innov, cfg.h, n, derive_seed(cfg.seed, &[salt::LIMIT]), &opts)?;
    let mut table = Table::with_lags("limit", &["draw"], cfg.h);
    for (i, row) in sample.draws.iter().enumerate() {
        let mut cells = vec![Cell::from(i)];
        cells.extend(row.iter().map(|&v| Cell::from(v)));
        table.push(cells);
    }
    let mut out = Report::new(
        vec![table],
        json!({ "region": sample.region, "law": sample.law, "regime": regime }),
    );
    out.extra_params.insert("draws".into(), n.into());
    Ok(out)
}

pub fn mc_run(cfg: &ConfigFile, allow: bool) -> Outcomes {
    let exp = cfg.experiment(allow)?;
    let result = run_convergence(&exp)?;
    let lags = exp.lags;
    let mut errors = Table::with_lags("errors", &["N", "replication"], lags);
    let mut distances = Table::new("distances", &["N", "M", "lag", "ks", "quantile"]);
    let mut per_n = Vec::new();
    for p in &result.grid {
        for (r, row) in p.scaled.iter().enumerate() {
            let mut cells = vec![Cell::from(p.n), Cell::from(r)];
            cells.extend(row.iter().map(|&v| Cell::from(v)));
            errors.push(cells);
        }
        for h in 0..=lags {
            distances.push(vec![p.n.into(), p.m.into(), h.into(), p.ks[h].into(), p.quantile[h].into()]);
        }
        per_n.push(json!({ "N": p.n, "M": p.m, "a_N": p.a_n, "scale": p.scale, "gamma": p.gamma }));
    }
    let mut limit = Table::with_lags("limit", &["draw"], lags);
    for (i, row) in result.limit.draws.iter().enumerate() {
        let mut cells = vec![Cell::from(i)];
        cells.extend(row.iter().map(|&v| Cell::from(v)));
        limit.push(cells);
    }
    let mut verdicts = result.verdicts.clone();
    let mut metrics = json!({
        "regime": result.regime,
        "rate_fit": result.rate_fit,
        "grid": per_n,
        "law": result.limit.law,
    });
    if result.regime.region == Region::C && lags > 0 {
        let inv = lag_invariance_check(&result)?;
        metrics["lag_invariance"] = json!({
            "N": inv.n,
            "pairwise_ks": inv.pairwise_ks,
            "correlations": inv.correlations,
        });
        verdicts.extend(inv.verdicts);
    }
    Ok(Report {
        tables: vec![errors, limit, distances],
        extra_params: Map::new(),
        metrics,
        verdicts,
    })
}

pub fn variance_rate(cfg: &ConfigFile) -> Outcomes {
    let (coeff, innov) = (cfg.coeff()?, cfg.innov()?);
    let rate = variance_rate_slope(&coeff, &innov, cfg.grid()?, cfg.r, cfg.seed, cfg.span, Schedule::default())?;
    let mut table = Table::new("variance", &["N", "variance", "n_log_n_ratio"]);
    for (i, (&n, &v)) in rate.n_grid.iter().zip(&rate.variances).enumerate() {
        let ratio = rate.n_log_n_ratio.as_ref().map_or(Cell::from(""), |r| Cell::from(r[i]));
        table.push(vec![n.into(), v.into(), ratio]);
    }
    let tol = cfg.tolerances.variance_slope;
    let dev = (rate.fit.slope - rate.expected_slope).abs();
    let verdict = Verdict {
        name: "variance_slope".into(),
        outcome: if dev <= tol { Outcome::Pass } else { Outcome::Fail },
        value: rate.fit.slope,
        threshold: rate.expected_slope,
        detail: format!("fitted log-log slope vs expected, allowed deviation {tol}"),
    };
    let mut out = Report::new(vec![table], to_value(&rate));
    out.verdicts.push(verdict);
    Ok(out)
}

pub fn phase(cfg: &ConfigFile) -> Outcomes {
    let cells = cfg.cells()?;
    let opts = PhaseOptions {
        truncation: match cfg.truncation() {
            TruncationRule::Auto => TruncationRule::Span { span: cfg.span },
            rule => rule,
        },
        span: cfg.span,
        schedule: Schedule::default(),
    };
    let rows = phase_diagram(&cells, cfg.grid()?, cfg.r, cfg.seed, &opts)?;
    let mut table = Table::new(
        "phase",
        &["moment_class", "alpha", "d", "region", "theoretical", "empirical", "deviation"],
    );
    let tol = cfg.tolerances.rate;
    let mut verdicts = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let (class, alpha) = match row.cell.moment_class {
            MomentClass::FiniteFourth => ("finite_fourth", Cell::from("")),
            MomentClass::Heavy { alpha } => ("heavy", Cell::from(alpha)),
        };
        table.push(vec![
            class.into(),
            alpha,
            row.cell.d.into(),
            format!("{:?}", row.region).into(),
            row.theoretical.into(),
            row.empirical.into(),
            row.deviation.into(),
        ]);
        verdicts.push(Verdict {
            name: format!("rate_cell_{i}"),
            outcome: if row.deviation.abs() <= tol { Outcome::Pass } else { Outcome::Fail },
            value: row.empirical,
            threshold: row.theoretical,
            detail: format!("IQR exponent vs theoretical rate, allowed deviation {tol}"),
        });
    }
    let mut out = Report::new(vec![table], json!({ "rows": rows }));
    out.verdicts = verdicts;
    Ok(out)
}
