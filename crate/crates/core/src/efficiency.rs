//! Noise-degraded bounds and detection-efficiency thresholds.
//!
//! With per-detector efficiency η, the coincidence estimator sees every
//! correlation scaled by `η² / (1 − (1 − η)²) = η / (2 − η)`. A lossy
//! experiment therefore violates the local bound iff
//! `η/(2−η) · β_QM > β_EPR`, which for `r = β_EPR / β_QM` means
//! `η > 2r / (1 + r)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::BellScenario;

pub const DEFAULT_EPSILON: f64 = 0.15;
pub const DEFAULT_P: f64 = 0.98;
pub const DEFAULT_ETA: f64 = 0.33;

/// Default search cap for [`min_blocks`].
pub const DEFAULT_BLOCK_CAP: usize = 64;

/// Correlation deficit ε, state weight p, detector efficiency η.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub epsilon: f64,
    pub p: f64,
    pub eta: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            epsilon: DEFAULT_EPSILON,
            p: DEFAULT_P,
            eta: DEFAULT_ETA,
        }
    }
}

impl NoiseParams {
    pub fn new(epsilon: f64, p: f64, eta: f64) -> Result<Self> {
        check_unit("epsilon", epsilon)?;
        check_unit("p", p)?;
        check_eta(eta)?;
        Ok(NoiseParams { epsilon, p, eta })
    }

    pub fn ideal() -> Self {
        NoiseParams {
            epsilon: 0.0,
            p: 1.0,
            eta: 1.0,
        }
    }
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::ParameterOutOfRange {
            name,
            value,
            range: "[0, 1]",
        });
    }
    Ok(())
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::ParameterOutOfRange {
            name: "eta",
            value: eta,
            range: "(0, 1]",
        });
    }
    Ok(())
}

fn pow2(n: usize) -> f64 {
    2f64.powi(n as i32)
}

/// `(2^N + 4^N ε, p 4^N + (1 − p))`.
pub fn noisy_bounds(n_blocks: usize, epsilon: f64, p: f64) -> Result<(f64, f64)> {
    BellScenario::new(n_blocks)?;
    check_unit("epsilon", epsilon)?;
    check_unit("p", p)?;
    let two = pow2(n_blocks);
    let four = two * two;
    Ok((two + four * epsilon, p * four + (1.0 - p)))
}

/// `η² / (1 − (1 − η)²)`, simplified to `η / (2 − η)`.
pub fn visibility_factor(eta: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok(eta / (2.0 - eta))
}

/// Efficiency at which `visibility_factor(η) = β_EPR / β_QM`.
pub fn eta_threshold(beta_epr: f64, beta_qm: f64) -> Result<f64> {
    if !(beta_epr > 0.0 && beta_qm > 0.0) {
        return Err(Error::ParameterOutOfRange {
            name: "beta",
            value: beta_epr.min(beta_qm),
            range: "(0, inf)",
        });
    }
    let r = beta_epr / beta_qm;
    if r > 1.0 {
        return Err(Error::NoViolation(r));
    }
    Ok(2.0 * r / (1.0 + r))
}

/// Whether a lossy experiment at `noise` violates the bound with N blocks.
/// Equality is not a violation.
pub fn is_violated(n_blocks: usize, noise: &NoiseParams) -> Result<bool> {
    let (epr, qm) = noisy_bounds(n_blocks, noise.epsilon, noise.p)?;
    Ok(visibility_factor(noise.eta)? * qm > epr)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub n: usize,
    pub beta_epr: u128,
    pub beta_qm: u128,
    pub beta_epr_noisy: f64,
    pub beta_qm_noisy: f64,
    /// `beta_epr_noisy / beta_qm_noisy`.
    pub ratio: f64,
    pub ideal_ratio: f64,
    /// Threshold from the noisy ratio; `None` when the ratio exceeds 1.
    pub eta_min: Option<f64>,
    pub eta_min_ideal: f64,
    pub visibility: f64,
    pub violated: bool,
}

impl BoundsReport {
    pub fn compute(n_blocks: usize, noise: &NoiseParams) -> Result<Self> {
        let scenario = BellScenario::new(n_blocks)?;
        let n = u32::try_from(n_blocks).map_err(|_| Error::TooManyBlocks {
            what: "bounds report",
            max: 63,
            got: n_blocks,
        })?;
        let too_many = Error::TooManyBlocks {
            what: "bounds report",
            max: 63,
            got: n_blocks,
        };
        let beta_epr = 2u128.checked_pow(n).ok_or(too_many.clone())?;
        let beta_qm = scenario.local_dimension().ok_or(too_many)?;
        let (beta_epr_noisy, beta_qm_noisy) = noisy_bounds(n_blocks, noise.epsilon, noise.p)?;
        let ratio = beta_epr_noisy / beta_qm_noisy;
        let ideal_ratio = beta_epr as f64 / beta_qm as f64;
        let visibility = visibility_factor(noise.eta)?;
        Ok(BoundsReport {
            n: n_blocks,
            beta_epr,
            beta_qm,
            beta_epr_noisy,
            beta_qm_noisy,
            ratio,
            ideal_ratio,
            eta_min: eta_threshold(beta_epr_noisy, beta_qm_noisy).ok(),
            eta_min_ideal: eta_threshold(beta_epr as f64, beta_qm as f64)?,
            visibility,
            violated: visibility * beta_qm_noisy > beta_epr_noisy,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub n: usize,
    pub ratio: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinBlocks {
    pub first_crossing: usize,
    pub visibility: f64,
    /// `r(N)` for `N = 1..=first_crossing + 2`.
    pub table: Vec<RatioRow>,
}

fn ratio_row(n: usize, noise: &NoiseParams, visibility: f64) -> Result<RatioRow> {
    let (epr, qm) = noisy_bounds(n, noise.epsilon, noise.p)?;
    Ok(RatioRow {
        n,
        ratio: epr / qm,
        violated: visibility * qm > epr,
    })
}

/// Smallest N whose lossy, noisy experiment violates the bound.
pub fn min_blocks(noise: &NoiseParams, cap: usize) -> Result<MinBlocks> {
    NoiseParams::new(noise.epsilon, noise.p, noise.eta)?;
    let visibility = visibility_factor(noise.eta)?;
    let mut table = Vec::new();
    let mut first = None;
    for n in 1..=cap {
        let row = ratio_row(n, noise, visibility)?;
        table.push(row);
        if row.violated {
            first = Some(n);
            break;
        }
    }
    let Some(first_crossing) = first else {
        let asymptotic = if noise.p > 0.0 {
            noise.epsilon / noise.p
        } else {
            f64::INFINITY
        };
        if asymptotic >= visibility {
            return Err(Error::ViolationImpossible {
                asymptotic,
                visibility,
            });
        }
        return Err(Error::NotFoundBelowCap(cap));
    };
    for n in first_crossing + 1..=first_crossing + 2 {
        table.push(ratio_row(n, noise, visibility)?);
    }
    Ok(MinBlocks {
        first_crossing,
        visibility,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noisy_bound_examples() {
        let (epr, qm) = noisy_bounds(6, 0.15, 0.98).unwrap();
        assert!((epr - 678.4).abs() < 1e-9);
        assert!((qm - 4014.1).abs() < 1e-9);
        assert_eq!(noisy_bounds(3, 0.0, 1.0).unwrap(), (8.0, 64.0));
        assert!(noisy_bounds(3, 1.5, 1.0).is_err());
        assert!(noisy_bounds(3, 0.1, -0.1).is_err());
        assert!(noisy_bounds(0, 0.1, 0.9).is_err());
    }

    #[test]
    fn visibility_examples() {
        assert_eq!(visibility_factor(1.0).unwrap(), 1.0);
        assert!((visibility_factor(0.33).unwrap() - 0.33 / 1.67).abs() < 1e-15);
        assert!((visibility_factor(2.0 / 3.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(visibility_factor(0.0).is_err());
        assert!(visibility_factor(1.01).is_err());
        // agrees with the unsimplified form
        for eta in [0.1, 0.33, 0.5, 0.9] {
            let raw = eta * eta / (1.0 - (1.0 - eta) * (1.0 - eta));
            assert!((visibility_factor(eta).unwrap() - raw).abs() < 1e-14);
        }
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(eta_threshold(1.0, 1.0).unwrap(), 1.0);
        assert!((eta_threshold(2.0, 4.0).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let chsh = eta_threshold(std::f64::consts::FRAC_1_SQRT_2, 1.0).unwrap();
        assert!((chsh - 0.8284).abs() < 1e-4);
        assert!(matches!(
            eta_threshold(5.0, 4.0),
            Err(Error::NoViolation(_))
        ));
        assert!(eta_threshold(0.0, 4.0).is_err());
    }

    #[test]
    fn min_blocks_reference_parameters() {
        let noise = NoiseParams::default();
        let m = min_blocks(&noise, DEFAULT_BLOCK_CAP).unwrap();
        assert_eq!(m.first_crossing, 5);
        assert_eq!(m.table.len(), 7);
        assert!(!m.table[3].violated);
        assert!(m.table[5].violated);
        assert!(is_violated(6, &noise).unwrap());
        assert!(!is_violated(4, &noise).unwrap());
    }

    #[test]
    fn min_blocks_ideal() {
        let m = min_blocks(&NoiseParams::ideal(), 10).unwrap();
        assert_eq!(m.first_crossing, 1);
        assert_eq!(m.table.len(), 3);
    }

    #[test]
    fn min_blocks_impossible() {
        let noise = NoiseParams::new(0.5, 0.9, 0.33).unwrap();
        assert!(matches!(
            min_blocks(&noise, 40),
            Err(Error::ViolationImpossible { .. })
        ));
        // possible in the limit but beyond a tiny cap
        let noise = NoiseParams::new(0.0, 1.0, 0.05).unwrap();
        assert_eq!(min_blocks(&noise, 2), Err(Error::NotFoundBelowCap(2)));
        assert_eq!(min_blocks(&noise, 40).unwrap().first_crossing, 6);
    }

    #[test]
    fn report_fields() {
        let r = BoundsReport::compute(6, &NoiseParams::default()).unwrap();
        assert_eq!(r.beta_epr, 64);
        assert_eq!(r.beta_qm, 4096);
        assert!(r.violated);
        assert!((r.ratio - 678.4 / 4014.1).abs() < 1e-12);
        let noisy = NoiseParams::new(0.9, 0.5, 0.9).unwrap();
        assert_eq!(BoundsReport::compute(1, &noisy).unwrap().eta_min, None);
    }
}
