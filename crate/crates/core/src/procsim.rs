//! Simulation of the truncated linear process
//! `X_t = Σ_{j=0}^{M} ψ(j) Z_{t−j}`, `t = 1..N+H`.

use serde::{Deserialize, Serialize};

use crate::coeffmodel::{theoretical_acov, CoefficientModel};
use crate::conv::{direct, Convolver};
use crate::error::{Error, Result};
use crate::innovations::InnovationModel;

/// Largest truncation order `2^62` that [`choose_truncation`] returns.
pub const MAX_TRUNCATION_LOG2: u32 = 62;

/// Truncation orders from this size on default to the FFT path.
pub const FFT_THRESHOLD: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvolutionMethod {
    Direct,
    Fft,
}

impl ConvolutionMethod {
    pub fn auto(m: usize) -> Self {
        if m >= FFT_THRESHOLD {
            ConvolutionMethod::Fft
        } else {
            ConvolutionMethod::Direct
        }
    }
}

/// `log2` of the truncation order at which the integral bound
/// `C_d² M^{2d−1}/(1−2d)` on `Σ_{j>M} ψ(j)²` drops to `rel_tol·γ_0/σ²`.
/// For explicit models this is `log2` of the support length.
pub fn truncation_log2(model: &CoefficientModel, rel_tol: f64) -> Result<f64> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::invalid("rel_tol", "rel_tol must lie in (0, 1)"));
    }
    match model {
        CoefficientModel::Explicit(c) => Ok((c.len() as f64).log2()),
        CoefficientModel::PowerLaw { d, c_d, .. } => {
            let gamma0 = theoretical_acov(model, 1.0, 0, 1e-12)?.values[0];
            let e = 1.0 - 2.0 * d;
            Ok((c_d * c_d / (e * rel_tol * gamma0)).log2() / e)
        }
    }
}

/// Smallest power-of-two order `M` whose tail bound meets `rel_tol`; the
/// support length for explicit models.
pub fn choose_truncation(model: &CoefficientModel, rel_tol: f64) -> Result<usize> {
    let raw = truncation_log2(model, rel_tol)?;
    if let Some(len) = model.support_len() {
        return Ok(len);
    }
    let exponent = raw.ceil().max(0.0);
    if exponent > MAX_TRUNCATION_LOG2 as f64 {
        return Err(Error::TruncationUnattainable {
            required_log2: raw,
            cap_log2: MAX_TRUNCATION_LOG2,
        });
    }
    Ok(1usize << exponent as u32)
}

/// A simulated path with the innovations that generated it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSample {
    /// `X_1, …, X_{N+H}`.
    pub values: Vec<f64>,
    /// `Z_{1−M}, …, Z_{N+H}`, absent once dropped.
    pub innovations: Option<Vec<f64>>,
    pub n: usize,
    pub h: usize,
    pub m: usize,
    pub coeff: CoefficientModel,
    pub innov: InnovationModel,
    pub seed: u64,
    pub method: ConvolutionMethod,
}

impl SeriesSample {
    pub fn without_innovations(mut self) -> Self {
        self.innovations = None;
        self
    }
}

/// Reusable simulator for fixed `(ψ, law, N, H, M)`; the FFT kernel
/// spectrum is computed once.
pub struct LinearSimulator {
    coeff: CoefficientModel,
    innov: InnovationModel,
    n: usize,
    h: usize,
    m: usize,
    method: ConvolutionMethod,
    kernel: Vec<f64>,
    fft: Option<Convolver>,
}

impl LinearSimulator {
    pub fn new(
        coeff: &CoefficientModel,
        innov: &InnovationModel,
        n: usize,
        h: usize,
        m: usize,
        method: ConvolutionMethod,
    ) -> Result<Self> {
        coeff.validate()?;
        innov.validate()?;
        if n < 1 {
            return Err(Error::invalid("N", "N must be at least 1"));
        }
        if m < 1 {
            return Err(Error::invalid("M", "M must be at least 1"));
        }
        let kernel = coeff.coefficients(m);
        let fft = (method == ConvolutionMethod::Fft).then(|| Convolver::valid(&kernel, m + n + h));
        Ok(Self {
            coeff: coeff.clone(),
            innov: *innov,
            n,
            h,
            m,
            method,
            kernel,
            fft,
        })
    }

    pub fn innovations_len(&self) -> usize {
        self.m + self.n + self.h
    }

    /// `X_1..X_{N+H}` from `Z_{1−M}..Z_{N+H}`.
    pub fn filter(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.innovations_len());
        let out = self.m..self.m + self.n + self.h;
        match &self.fft {
            Some(c) => c.apply(z)[out].to_vec(),
            None => direct(&self.kernel, z, out),
        }
    }

    pub fn simulate(&self, seed: u64) -> SeriesSample {
        let z = self.innov.sample(self.innovations_len(), seed);
        SeriesSample {
            values: self.filter(&z),
            innovations: Some(z),
            n: self.n,
            h: self.h,
            m: self.m,
            coeff: self.coeff.clone(),
            innov: self.innov,
            seed,
            method: self.method,
        }
    }
}

pub fn simulate_linear(
    coeff: &CoefficientModel,
    innov: &InnovationModel,
    n: usize,
    h: usize,
    m: usize,
    seed: u64,
    method: ConvolutionMethod,
) -> Result<SeriesSample> {
    Ok(LinearSimulator::new(coeff, innov, n, h, m, method)?.simulate(seed))
}

/// Filters given innovations `Z_{1−M}..Z_{N+H}` (length `M+N+H`).
pub fn filter_innovations(
    coeff: &CoefficientModel,
    z: &[f64],
    n: usize,
    h: usize,
    m: usize,
    method: ConvolutionMethod,
) -> Result<Vec<f64>> {
    if z.len() != m + n + h {
        return Err(Error::invalid("innovations", format!("expected {} values", m + n + h)));
    }
    let sim = LinearSimulator::new(coeff, &InnovationModel::Gaussian { sigma: 1.0 }, n, h, m, method)?;
    Ok(sim.filter(z))
}
