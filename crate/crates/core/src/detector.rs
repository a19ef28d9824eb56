//! Linear receive filters (RAKE and MMSE) and the BPSK slicer.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use crate::signal::{Bpsk, EffectiveSignature};
use crate::CVec;

#[derive(Debug, Error, PartialEq)]
pub enum DetectorError {
    #[error("MMSE filter needs a positive noise variance, got {0}")]
    NoiseVariance(f64),
    #[error("target index {index} out of range for {users} signatures")]
    Target { index: usize, users: usize },
    #[error("dimension mismatch: filter has {filter} taps, input has {input}")]
    Dimension { filter: usize, input: usize },
    #[error("MMSE system is not positive definite")]
    Singular,
    #[error("unknown detector `{0}` (expected rake or mmse)")]
    UnknownKind(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Rake,
    Mmse,
}

impl DetectorKind {
    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Rake => "rake",
            DetectorKind::Mmse => "mmse",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = DetectorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rake" | "mf" => Ok(DetectorKind::Rake),
            "mmse" => Ok(DetectorKind::Mmse),
            _ => Err(DetectorError::UnknownKind(s.to_string())),
        }
    }
}

/// Weight vector `w` applied as `wᴴ y`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReceiveFilter {
    weights: CVec,
    kind: DetectorKind,
}

impl ReceiveFilter {
    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn kind(&self) -> DetectorKind {
        self.kind
    }

    pub fn norm_sqr(&self) -> f64 {
        linalg::norm_sqr(&self.weights)
    }
}

/// Matched filter: `w = h`.
pub fn rake_filter(target: &EffectiveSignature) -> ReceiveFilter {
    ReceiveFilter { weights: target.vector().to_vec(), kind: DetectorKind::Rake }
}

/// `w = (Σ_k h_k h_kᴴ + σ² I)⁻¹ h_target`.
pub fn mmse_filter(
    signatures: &[&EffectiveSignature],
    target: usize,
    sigma2: f64,
) -> Result<ReceiveFilter, DetectorError> {
    let columns: Vec<&[Complex64]> = signatures.iter().map(|s| s.vector()).collect();
    let target_vec = *columns.get(target).ok_or(DetectorError::Target { index: target, users: columns.len() })?;
    let weights = mmse_weights(&columns, &[target_vec], sigma2)?.remove(0);
    Ok(ReceiveFilter { weights, kind: DetectorKind::Mmse })
}

/// MMSE weights for several targets sharing one covariance. Columns may be
/// N-vectors (relay side) or stacked 2N-vectors (destination side).
pub fn mmse_weights(
    columns: &[&[Complex64]],
    targets: &[&[Complex64]],
    sigma2: f64,
) -> Result<Vec<CVec>, DetectorError> {
    if !sigma2.is_finite() || sigma2 <= 0.0 {
        return Err(DetectorError::NoiseVariance(sigma2));
    }
    if let Some(dim) = targets.first().map(|t| t.len()) {
        if let Some(bad) = columns.iter().chain(targets).find(|c| c.len() != dim) {
            return Err(DetectorError::Dimension { filter: dim, input: bad.len() });
        }
    }
    linalg::solve_regularized_gram(columns, sigma2, targets).ok_or(DetectorError::Singular)
}

/// Builds the configured filter for `signatures[target]`.
pub fn build_filter(
    kind: DetectorKind,
    signatures: &[&EffectiveSignature],
    target: usize,
    sigma2: f64,
) -> Result<ReceiveFilter, DetectorError> {
    match kind {
        DetectorKind::Rake => signatures
            .get(target)
            .map(|s| rake_filter(s))
            .ok_or(DetectorError::Target { index: target, users: signatures.len() }),
        DetectorKind::Mmse => mmse_filter(signatures, target, sigma2),
    }
}

/// Soft output `wᴴ y`.
pub fn detect(filter: &ReceiveFilter, y: &[Complex64]) -> Result<Complex64, DetectorError> {
    if filter.weights.len() != y.len() {
        return Err(DetectorError::Dimension { filter: filter.weights.len(), input: y.len() });
    }
    Ok(linalg::inner(&filter.weights, y))
}

/// Hard BPSK decision on the real part; an exact zero maps to +1.
pub fn slice(soft: Complex64) -> Bpsk {
    if soft.re >= 0.0 {
        Bpsk::PLUS
    } else {
        Bpsk::MINUS
    }
}
