//! Threshold-diffusion parameterization.
//!
//! A model is `dX = b(X) dt + σ(X) dB` where `b` and `σ` are step functions
//! that are constant on the regimes `(-∞, a₁]`, `(a₁, a₂]`, …, `(a_n, ∞)`.
//! A threshold belongs to the regime on its left; every other module uses the
//! same convention through [`ThresholdModel::regime_index`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One violated model invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoThresholds,
    LengthMismatch { field: &'static str, expected: usize, found: usize },
    NonFinite { field: &'static str, index: usize },
    ThresholdsNotIncreasing { index: usize },
    NonPositiveVolatility { index: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoThresholds => write!(f, "at least one threshold is required"),
            Violation::LengthMismatch { field, expected, found } => write!(
                f,
                "{field} must have one more entry than thresholds (expected {expected}, found {found})"
            ),
            Violation::NonFinite { field, index } => {
                write!(f, "{field}[{index}] is not a finite number")
            }
            Violation::ThresholdsNotIncreasing { index } => write!(
                f,
                "thresholds not strictly increasing (thresholds[{}] >= thresholds[{}])",
                index - 1,
                index
            ),
            Violation::NonPositiveVolatility { index } => {
                write!(f, "volatility must be positive (vols[{index}])")
            }
        }
    }
}

/// Checks the raw parts of a model and lists every violated invariant.
pub fn validate(thresholds: &[f64], drifts: &[f64], vols: &[f64]) -> std::result::Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let n = thresholds.len();
    if n == 0 {
        out.push(Violation::NoThresholds);
    }
    for (field, v) in [("drifts", drifts), ("vols", vols)] {
        if v.len() != n + 1 {
            out.push(Violation::LengthMismatch { field, expected: n + 1, found: v.len() });
        }
    }
    for (field, v) in [("thresholds", thresholds), ("drifts", drifts), ("vols", vols)] {
        for (index, x) in v.iter().enumerate() {
            if !x.is_finite() {
                out.push(Violation::NonFinite { field, index });
            }
        }
    }
    for index in 1..n {
        let (lo, hi) = (thresholds[index - 1], thresholds[index]);
        if lo.is_finite() && hi.is_finite() && lo >= hi {
            out.push(Violation::ThresholdsNotIncreasing { index });
        }
    }
    for (index, s) in vols.iter().enumerate() {
        if s.is_finite() && *s <= 0.0 {
            out.push(Violation::NonPositiveVolatility { index });
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// A validated threshold model. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct ThresholdModel {
    thresholds: Vec<f64>,
    drifts: Vec<f64>,
    vols: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    thresholds: Vec<f64>,
    drifts: Vec<f64>,
    vols: Vec<f64>,
}

impl TryFrom<ModelFile> for ThresholdModel {
    type Error = Error;

    fn try_from(raw: ModelFile) -> Result<Self> {
        ThresholdModel::new(raw.thresholds, raw.drifts, raw.vols)
    }
}

impl From<ThresholdModel> for ModelFile {
    fn from(m: ThresholdModel) -> Self {
        ModelFile { thresholds: m.thresholds, drifts: m.drifts, vols: m.vols }
    }
}

impl ThresholdModel {
    pub fn new(thresholds: Vec<f64>, drifts: Vec<f64>, vols: Vec<f64>) -> Result<Self> {
        validate(&thresholds, &drifts, &vols).map_err(Error::InvalidModel)?;
        Ok(Self { thresholds, drifts, vols })
    }

    /// Model with `n` thresholds and identical coefficients in every regime.
    pub fn uniform(thresholds: Vec<f64>, drift: f64, vol: f64) -> Result<Self> {
        let k = thresholds.len() + 1;
        Self::new(thresholds, vec![drift; k], vec![vol; k])
    }

    /// Parses the JSON model-file format. Unknown fields are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("malformed model file: {e}")))?;
        raw.try_into()
    }

    /// Serializes to the model-file format with plain decimal numbers that
    /// parse back to identical values.
    pub fn to_json(&self) -> String {
        fn list(v: &[f64]) -> String {
            let items: Vec<String> = v.iter().map(|x| decimal(*x)).collect();
            format!("[{}]", items.join(", "))
        }
        format!(
            "{{\n  \"thresholds\": {},\n  \"drifts\": {},\n  \"vols\": {}\n}}\n",
            list(&self.thresholds),
            list(&self.drifts),
            list(&self.vols)
        )
    }

    /// Number of thresholds `n`; there are `n + 1` regimes.
    pub fn n(&self) -> usize {
        self.thresholds.len()
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn drifts(&self) -> &[f64] {
        &self.drifts
    }

    pub fn vols(&self) -> &[f64] {
        &self.vols
    }

    /// Threshold `a_i` with the one-based index used for thresholds.
    pub fn a(&self, i: usize) -> f64 {
        self.thresholds[i - 1]
    }

    /// Width `a_{i+1} - a_i` of the bounded regime `i` (`1 <= i < n`).
    pub fn width(&self, i: usize) -> f64 {
        self.a(i + 1) - self.a(i)
    }

    /// Regime containing `x`: 0 for `x <= a₁`, `i` for `x ∈ (a_i, a_{i+1}]`,
    /// `n` for `x > a_n`.
    pub fn regime_index(&self, x: f64) -> usize {
        self.thresholds.partition_point(|&a| a < x)
    }

    /// Regime just to the right of `x` (differs from [`Self::regime_index`]
    /// only at a threshold).
    pub fn regime_index_right(&self, x: f64) -> usize {
        self.thresholds.partition_point(|&a| a <= x)
    }

    pub fn checked_regime_index(&self, x: f64) -> Result<usize> {
        crate::error::check_finite("x", x)?;
        Ok(self.regime_index(x))
    }

    pub fn drift_at(&self, x: f64) -> f64 {
        self.drifts[self.regime_index(x)]
    }

    pub fn vol_at(&self, x: f64) -> f64 {
        self.vols[self.regime_index(x)]
    }

    /// `2μ_i / σ_i²`, the log-slope of the speed density in regime `i`.
    pub(crate) fn speed_slope(&self, i: usize) -> f64 {
        2.0 * self.drifts[i] / (self.vols[i] * self.vols[i])
    }

    pub(crate) fn var(&self, i: usize) -> f64 {
        self.vols[i] * self.vols[i]
    }

    pub fn is_positive_recurrent(&self) -> bool {
        self.drifts[0] > 0.0 && self.drifts[self.n()] < 0.0
    }

    pub fn is_two_sided_transient(&self) -> bool {
        self.drifts[0] < 0.0 && self.drifts[self.n()] > 0.0
    }
}

/// Shortest round-trip decimal rendering without an exponent.
pub(crate) fn decimal(x: f64) -> String {
    let s = format!("{x}");
    if s.contains('.') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_model_is_valid() {
        assert!(validate(&[0.0], &[1.0, -1.0], &[1.0, 1.0]).is_ok());
    }

    #[test]
    fn unsorted_thresholds_rejected() {
        let err = validate(&[1.0, 0.0], &[0.0; 3], &[1.0; 3]).unwrap_err();
        assert_eq!(err, vec![Violation::ThresholdsNotIncreasing { index: 1 }]);
        assert!(err[0].to_string().contains("thresholds not strictly increasing"));
    }

    #[test]
    fn zero_volatility_rejected() {
        let err = validate(&[0.0], &[1.0, -1.0], &[1.0, 0.0]).unwrap_err();
        assert_eq!(err, vec![Violation::NonPositiveVolatility { index: 1 }]);
        assert!(err[0].to_string().contains("volatility must be positive"));
    }

    #[test]
    fn every_violation_is_listed() {
        let err = validate(&[0.0, 0.0], &[f64::NAN, 0.0], &[-1.0, 1.0, 1.0]).unwrap_err();
        assert!(err.contains(&Violation::LengthMismatch { field: "drifts", expected: 3, found: 2 }));
        assert!(err.contains(&Violation::NonFinite { field: "drifts", index: 0 }));
        assert!(err.contains(&Violation::ThresholdsNotIncreasing { index: 1 }));
        assert!(err.contains(&Violation::NonPositiveVolatility { index: 0 }));
        assert!(validate(&[], &[0.0], &[1.0]).unwrap_err().contains(&Violation::NoThresholds));
    }

    #[test]
    fn regime_index_convention() {
        let m = ThresholdModel::uniform(vec![0.0, 1.0], 0.0, 1.0).unwrap();
        assert_eq!(m.regime_index(0.0), 0);
        assert_eq!(m.regime_index(0.5), 1);
        assert_eq!(m.regime_index(1.0), 1);
        assert_eq!(m.regime_index(2.0), 2);
        assert_eq!(m.regime_index(-5.0), 0);
        assert_eq!(m.regime_index_right(0.0), 1);
        assert_eq!(m.regime_index_right(1.0), 2);
        assert!(m.checked_regime_index(f64::NAN).is_err());
    }

    #[test]
    fn coefficients_at_points() {
        let m = ThresholdModel::new(vec![0.0], vec![1.0, -1.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(m.drift_at(-3.0), 1.0);
        assert_eq!(m.drift_at(0.0), 1.0);
        assert_eq!(m.vol_at(0.1), 2.0);
        assert_eq!(m.vol_at(0.0), 1.0);
    }

    #[test]
    fn regime_index_left_continuous_at_thresholds() {
        let m = ThresholdModel::uniform(vec![-1.0, 0.5, 2.0], 0.0, 1.0).unwrap();
        let eps = 1e-9;
        for (k, &a) in m.thresholds().iter().enumerate() {
            assert_eq!(m.regime_index(a), m.regime_index(a - eps));
            assert_eq!(m.regime_index(a), k);
            assert_eq!(m.regime_index(a + eps), k + 1);
        }
    }

    #[test]
    fn json_rejects_extra_fields_and_mismatch() {
        let ok = r#"{"thresholds":[0],"drifts":[1,-1],"vols":[1,1]}"#;
        assert!(ThresholdModel::from_json(ok).is_ok());
        let extra = r#"{"thresholds":[0],"drifts":[1,-1],"vols":[1,1],"q":1}"#;
        assert!(matches!(ThresholdModel::from_json(extra), Err(Error::InvalidArgument(_))));
        let short = r#"{"thresholds":[0],"drifts":[1],"vols":[1,1]}"#;
        assert!(matches!(ThresholdModel::from_json(short), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = ThresholdModel::new(
            vec![-0.1, 1e-7, 3.25],
            vec![0.1 + 0.2, 0.0, -1.0 / 3.0, 2e-12],
            vec![std::f64::consts::SQRT_2, 1.0, 0.3, 7.0],
        )
        .unwrap();
        let text = m.to_json();
        assert!(!text.contains("e-") && !text.contains("e+"), "{text}");
        assert_eq!(ThresholdModel::from_json(&text).unwrap(), m);
    }
}
