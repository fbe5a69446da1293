//! Classification of `(moment class, d)` into convergence regions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::innovations::MomentClass;

const EDGE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    A,
    B,
    C,
    Boundary,
}

/// Normalizing factor applied to `γ̂_h − γ_h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `N^{1/2}`
    SqrtN,
    /// `N a_N^{−2}`
    NOverAN2,
    /// `N^{1−2d}`
    NPower1Minus2d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub region: Region,
    /// `r` such that `γ̂_h − γ_h` is of order `N^r`.
    pub rate_exponent: f64,
    pub normalization: Normalization,
    pub caveats: Vec<String>,
    pub moment_class: MomentClass,
    pub d: f64,
}

impl RegimeReport {
    pub fn is_boundary(&self) -> bool {
        self.region == Region::Boundary
    }

    /// The normalizing factor at sample size `n`; `a_n` is required for
    /// the `N a_N^{−2}` normalization.
    pub fn scale_factor(&self, n: usize, a_n: Option<f64>) -> Result<f64> {
        let nf = n as f64;
        Ok(match self.normalization {
            Normalization::SqrtN => nf.sqrt(),
            Normalization::NOverAN2 => {
                let a = a_n.ok_or(Error::MissingNorming)?;
                nf / (a * a)
            }
            Normalization::NPower1Minus2d => nf.powf(1.0 - 2.0 * self.d),
        })
    }
}

const LOG_CAVEAT: &str = "at d = 1/4 the result additionally needs a_N^{−4}N ln N → 0";

pub fn classify_regime(moment_class: MomentClass, d: f64) -> Result<RegimeReport> {
    if !(d > 0.0 && d < 0.5) {
        return Err(Error::invalid("d", "d must lie in (0, 0.5)"));
    }
    let report = |region, rate_exponent, normalization, caveats: Vec<String>| RegimeReport {
        region,
        rate_exponent,
        normalization,
        caveats,
        moment_class,
        d,
    };
    Ok(match moment_class {
        MomentClass::FiniteFourth => {
            if (d - 0.25).abs() < EDGE {
                report(
                    Region::Boundary,
                    -0.5,
                    Normalization::SqrtN,
                    vec![
                        "d = 1/4 separates the Gaussian and Rosenblatt regions; the off-diagonal \
                         variance grows like N ln N, so the N^{1/2} rate carries a logarithmic \
                         correction"
                            .into(),
                        LOG_CAVEAT.into(),
                    ],
                )
            } else if d < 0.25 {
                report(Region::A, -0.5, Normalization::SqrtN, vec![])
            } else {
                report(Region::C, 2.0 * d - 1.0, Normalization::NPower1Minus2d, vec![])
            }
        }
        MomentClass::Heavy { alpha } => {
            if !(alpha > 2.0 && alpha < 4.0) {
                return Err(Error::invalid("alpha", "alpha must lie in (2, 4)"));
            }
            let edge = 1.0 / alpha;
            if (d - edge).abs() < EDGE {
                report(
                    Region::Boundary,
                    2.0 / alpha - 1.0,
                    Normalization::NOverAN2,
                    vec![format!(
                        "d = 1/alpha = {edge} separates the stable and Rosenblatt regions; both \
                         rates coincide there and the limit is a mixture"
                    )],
                )
            } else if (d - 0.25).abs() < EDGE {
                report(
                    Region::Boundary,
                    2.0 / alpha - 1.0,
                    Normalization::NOverAN2,
                    vec![LOG_CAVEAT.into()],
                )
            } else if d < edge {
                report(Region::B, 2.0 / alpha - 1.0, Normalization::NOverAN2, vec![])
            } else {
                report(Region::C, 2.0 * d - 1.0, Normalization::NPower1Minus2d, vec![])
            }
        }
    })
}

/// A report for a region chosen by the caller rather than by `d`, e.g. for
/// short-memory explicit models.
pub fn forced_regime(region: Region, moment_class: MomentClass, d: f64) -> Result<RegimeReport> {
    let caveats = vec![format!("region {region:?} set explicitly")];
    let (rate_exponent, normalization) = match (region, moment_class) {
        (Region::A, _) => (-0.5, Normalization::SqrtN),
        (Region::B, MomentClass::Heavy { alpha }) => (2.0 / alpha - 1.0, Normalization::NOverAN2),
        (Region::B, MomentClass::FiniteFourth) => return Err(Error::NoTailIndex),
        (Region::C, _) => {
            if !(d > 0.0 && d < 0.5) {
                return Err(Error::invalid("d", "d must lie in (0, 0.5)"));
            }
            (2.0 * d - 1.0, Normalization::NPower1Minus2d)
        }
        (Region::Boundary, _) => {
            return Err(Error::invalid("region", "a boundary cannot be forced"));
        }
    };
    Ok(RegimeReport {
        region,
        rate_exponent,
        normalization,
        caveats,
        moment_class,
        d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let b = classify_regime(MomentClass::Heavy { alpha: 3.0 }, 0.2).unwrap();
        assert_eq!(b.region, Region::B);
        assert!((b.rate_exponent + 1.0 / 3.0).abs() < 1e-15);
        let c = classify_regime(MomentClass::Heavy { alpha: 3.0 }, 0.4).unwrap();
        assert_eq!(c.region, Region::C);
        assert!((c.rate_exponent + 0.2).abs() < 1e-15);
        let a = classify_regime(MomentClass::FiniteFourth, 0.1).unwrap();
        assert_eq!((a.region, a.rate_exponent), (Region::A, -0.5));
        let f = classify_regime(MomentClass::FiniteFourth, 0.3).unwrap();
        assert_eq!(f.region, Region::C);
    }

    #[test]
    fn boundaries_and_errors() {
        for (class, d) in [
            (MomentClass::FiniteFourth, 0.25),
            (MomentClass::Heavy { alpha: 3.0 }, 1.0 / 3.0),
            (MomentClass::Heavy { alpha: 3.0 }, 0.25),
        ] {
            let r = classify_regime(class, d).unwrap();
            assert!(r.is_boundary());
            assert!(!r.caveats.is_empty());
        }
        let r = classify_regime(MomentClass::FiniteFourth, 0.25).unwrap();
        assert!(r.caveats.iter().any(|c| c.contains("a_N^{−4}N ln N → 0")));
        assert!(classify_regime(MomentClass::FiniteFourth, 0.5).is_err());
        assert!(classify_regime(MomentClass::FiniteFourth, 0.0).is_err());
        assert!(classify_regime(MomentClass::Heavy { alpha: 4.0 }, 0.1).is_err());
    }

    #[test]
    fn forced_regions() {
        let b = forced_regime(Region::B, MomentClass::Heavy { alpha: 2.5 }, 0.0).unwrap();
        assert!((b.rate_exponent + 0.2).abs() < 1e-15);
        assert_eq!(
            forced_regime(Region::B, MomentClass::FiniteFourth, 0.0),
            Err(Error::NoTailIndex)
        );
        assert!(forced_regime(Region::Boundary, MomentClass::FiniteFourth, 0.1).is_err());
        assert!(forced_regime(Region::C, MomentClass::FiniteFourth, 0.0).is_err());
    }

    #[test]
    fn rate_matches_normalization_exponent() {
        let n = 1usize << 20;
        let cases = [
            (MomentClass::FiniteFourth, 0.1),
            (MomentClass::FiniteFourth, 0.4),
            (MomentClass::Heavy { alpha: 2.5 }, 0.1),
            (MomentClass::Heavy { alpha: 3.5 }, 0.2),
            (MomentClass::Heavy { alpha: 3.0 }, 0.45),
        ];
        for (class, d) in cases {
            let r = classify_regime(class, d).unwrap();
            let a_n = match class {
                MomentClass::Heavy { alpha } => Some((n as f64).powf(1.0 / alpha)),
                MomentClass::FiniteFourth => None,
            };
            let f = r.scale_factor(n, a_n).unwrap();
            assert!((f.ln() / (n as f64).ln() + r.rate_exponent).abs() < 1e-12);
        }
    }
}
