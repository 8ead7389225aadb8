//! Term-level scoring kernels shared by early and late fusion.
//!
//! Every kernel takes a real-valued frequency so the same code scores real
//! documents and pseudo-objects built from fractional association weights.
//! Logarithms are natural.

use std::fmt;
use std::str::FromStr;

use crate::error::{FusionError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RetrievalModel {
    /// Query likelihood with Jelinek-Mercer smoothing.
    Lm,
    Bm25,
}

impl RetrievalModel {
    pub fn name(self) -> &'static str {
        match self {
            RetrievalModel::Lm => "lm",
            RetrievalModel::Bm25 => "bm25",
        }
    }
}

impl fmt::Display for RetrievalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RetrievalModel {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lm" => Ok(RetrievalModel::Lm),
            "bm25" => Ok(RetrievalModel::Bm25),
            _ => Err(FusionError::InvalidParameter(format!("unknown retrieval model `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Jelinek-Mercer smoothing weight on the background model.
    pub lambda: f64,
    pub k1: f64,
    pub b: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            k1: 1.2,
            b: 0.75,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(FusionError::InvalidParameter(format!("lambda must be in [0,1], got {}", self.lambda)));
        }
        if !(self.k1 >= 0.0 && self.k1.is_finite()) {
            return Err(FusionError::InvalidParameter(format!("k1 must be non-negative, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(FusionError::InvalidParameter(format!("b must be in [0,1], got {}", self.b)));
        }
        Ok(())
    }
}

/// `ln((1-λ)·freq/unit_length + λ·p_background)`.
///
/// Returns `None` when the logarithm's argument is zero, i.e. the term has no
/// mass in either the unit or the background model.
#[inline]
pub fn lm_term_score(freq: f64, unit_length: f64, p_background: f64, lambda: f64) -> Option<f64> {
    let p = (1.0 - lambda) * freq / unit_length + lambda * p_background;
    (p > 0.0).then(|| p.ln())
}

/// Okapi BM25 term weight.
#[inline]
pub fn bm25_term_score(freq: f64, unit_length: f64, avg_length: f64, idf: f64, k1: f64, b: f64) -> f64 {
    if freq <= 0.0 {
        return 0.0;
    }
    idf * freq * (k1 + 1.0) / (freq + k1 * (1.0 - b + b * unit_length / avg_length))
}

/// `ln(num_units / unit_freq)`; `None` for a term that occurs in no unit.
#[inline]
pub fn idf(num_units: usize, unit_freq: usize) -> Option<f64> {
    debug_assert!(unit_freq <= num_units);
    (unit_freq > 0).then(|| (num_units as f64 / unit_freq as f64).ln())
}
