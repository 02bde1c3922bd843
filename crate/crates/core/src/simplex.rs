//! Probability vectors, estimates, the privacy budget and the two losses.
//!
//! Categories are zero-based in the API (`0..k`). Textual labels (CSV headers,
//! CLI output) use one-based category numbers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Accepted deviation of an input distribution's sum from 1.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A point of the probability simplex over `k >= 2` categories.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbabilityVector {
    entries: Vec<f64>,
}

impl ProbabilityVector {
    /// Validates `entries` as a distribution. Sums within [`SUM_TOLERANCE`] of 1
    /// are rescaled so the stored vector sums to 1 up to rounding.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::TooFewCategories { k: entries.len() });
        }
        for (index, &value) in entries.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index, value });
            }
            if value < 0.0 {
                return Err(Error::NegativeEntry { index, value });
            }
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::SumNotOne { sum });
        }
        let entries = if sum == 1.0 {
            entries
        } else {
            entries.into_iter().map(|x| x / sum).collect()
        };
        Ok(Self { entries })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::TooFewCategories { k });
        }
        Ok(Self {
            entries: vec![1.0 / k as f64; k],
        })
    }

    pub fn point_mass(k: usize, category: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::TooFewCategories { k });
        }
        if category >= k {
            return Err(Error::CategoryOutOfRange { category, k });
        }
        let mut entries = vec![0.0; k];
        entries[category] = 1.0;
        Ok(Self { entries })
    }

    /// Parses a distribution from text: either one comma-separated row or one
    /// probability per line. Blank lines and `#` comments are ignored.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            for field in line.split(',') {
                let field = field.trim();
                if field.is_empty() {
                    continue;
                }
                let value = field
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("{field:?}: {e}")))?;
                entries.push(value);
            }
        }
        Self::new(entries)
    }

    pub fn k(&self) -> usize {
        self.entries.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> f64 {
        self.entries[i]
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.entries.iter().map(|p| p * p).sum()
    }

    /// True if every entry equals `1/k` to within `1e-12`.
    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.k() as f64;
        self.entries.iter().all(|&p| (p - u).abs() <= 1e-12)
    }
}

impl<'de> Deserialize<'de> for ProbabilityVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<f64>::deserialize(d)?;
        Self::new(entries).map_err(serde::de::Error::custom)
    }
}

/// An estimate of a distribution. Entries are finite but otherwise
/// unconstrained: unbiased estimators routinely leave the simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct EstimateVector {
    entries: Vec<f64>,
}

impl EstimateVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = entries.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { entries })
    }

    pub fn k(&self) -> usize {
        self.entries.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.entries
    }
}

impl From<&ProbabilityVector> for EstimateVector {
    fn from(p: &ProbabilityVector) -> Self {
        Self {
            entries: p.entries.clone(),
        }
    }
}

/// Privacy level `epsilon > 0` with `e^epsilon` cached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrivacyBudget {
    epsilon: f64,
    exp_epsilon: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidEpsilon { epsilon });
        }
        Ok(Self {
            epsilon,
            exp_epsilon: epsilon.exp(),
        })
    }

    /// Builds a budget from `e^epsilon` directly. The stored `exp_epsilon` is
    /// exactly `exp_epsilon`, so formulas evaluated at e.g. `e^eps = 3` are exact.
    pub fn from_exp(exp_epsilon: f64) -> Result<Self> {
        if !(exp_epsilon.is_finite() && exp_epsilon > 1.0) {
            return Err(Error::InvalidEpsilon {
                epsilon: exp_epsilon.ln(),
            });
        }
        Ok(Self {
            epsilon: exp_epsilon.ln(),
            exp_epsilon,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn exp_epsilon(&self) -> f64 {
        self.exp_epsilon
    }

    /// `e^(epsilon/2)`, the per-bit odds of k-RAPPOR.
    pub fn exp_half_epsilon(&self) -> f64 {
        (0.5 * self.epsilon).exp()
    }
}

impl<'de> Deserialize<'de> for PrivacyBudget {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            epsilon: f64,
        }
        let raw = Raw::deserialize(d)?;
        Self::new(raw.epsilon).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LossKind {
    #[serde(rename = "l1")]
    L1,
    #[serde(rename = "l22")]
    L2Squared,
}

impl LossKind {
    pub const ALL: [LossKind; 2] = [LossKind::L1, LossKind::L2Squared];

    pub fn short_name(self) -> &'static str {
        match self {
            LossKind::L1 => "l1",
            LossKind::L2Squared => "l22",
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(LossKind::L1),
            "l22" | "l2" | "l2squared" | "l2^2" => Ok(LossKind::L2Squared),
            other => Err(Error::Parse(format!("unknown loss {other:?}"))),
        }
    }
}

/// Loss between raw slices of equal length.
pub(crate) fn loss_slices(kind: LossKind, estimate: &[f64], truth: &[f64]) -> f64 {
    let diffs = estimate.iter().zip(truth).map(|(e, p)| e - p);
    match kind {
        LossKind::L1 => diffs.map(f64::abs).sum(),
        LossKind::L2Squared => diffs.map(|d| d * d).sum(),
    }
}

pub fn loss(kind: LossKind, estimate: &EstimateVector, truth: &ProbabilityVector) -> Result<f64> {
    if estimate.k() != truth.k() {
        return Err(Error::DimensionMismatch {
            expected: truth.k(),
            found: estimate.k(),
        });
    }
    Ok(loss_slices(kind, estimate.as_slice(), truth.as_slice()))
}

/// Maps each coordinate into `[0, 1]`. Since every true probability lies in
/// `[0, 1]`, clipping never increases the L1 or squared L2 loss.
pub fn clip_to_unit_cube(estimate: &EstimateVector) -> EstimateVector {
    EstimateVector {
        entries: estimate
            .entries
            .iter()
            .map(|&x| x.clamp(0.0, 1.0))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn est(v: &[f64]) -> EstimateVector {
        EstimateVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn validates_distributions() {
        assert!(ProbabilityVector::new(vec![0.5, 0.5]).is_ok());
        assert!(matches!(
            ProbabilityVector::new(vec![0.5, 0.6]),
            Err(Error::SumNotOne { .. })
        ));
        assert!(matches!(
            ProbabilityVector::new(vec![1.0]),
            Err(Error::TooFewCategories { k: 1 })
        ));
        assert!(matches!(
            ProbabilityVector::new(vec![1.2, -0.2]),
            Err(Error::NegativeEntry { index: 1, .. })
        ));
        let u = ProbabilityVector::new(vec![0.1; 10]).unwrap();
        assert!(u.is_uniform());
    }

    #[test]
    fn renormalizes_small_rounding_only() {
        let p = ProbabilityVector::new(vec![0.3333333333, 0.3333333333, 0.3333333334]).unwrap();
        assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!(ProbabilityVector::new(vec![0.333, 0.333, 0.333]).is_err());
    }

    #[test]
    fn parses_row_and_column_csv() {
        let row = ProbabilityVector::parse_csv("0.25, 0.25,0.5\n").unwrap();
        let col = ProbabilityVector::parse_csv("# p\n0.25\n0.25\n\n0.5\n").unwrap();
        assert_eq!(row, col);
        assert!(matches!(
            ProbabilityVector::parse_csv("0.5,abc"),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn budget_rejects_nonpositive() {
        assert!(PrivacyBudget::new(0.0).is_err());
        assert!(PrivacyBudget::new(-1.0).is_err());
        assert!(PrivacyBudget::new(f64::NAN).is_err());
        assert!(PrivacyBudget::from_exp(1.0).is_err());
        let b = PrivacyBudget::new(1.0).unwrap();
        assert_eq!(b.exp_epsilon(), 1f64.exp());
        assert_eq!(PrivacyBudget::from_exp(3.0).unwrap().exp_epsilon(), 3.0);
    }

    #[test]
    fn loss_examples() {
        let truth = ProbabilityVector::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(
            loss(LossKind::L2Squared, &EstimateVector::from(&truth), &truth).unwrap(),
            0.0
        );
        let e1 = ProbabilityVector::point_mass(2, 1).unwrap();
        assert_eq!(loss(LossKind::L1, &est(&[1.0, 0.0]), &e1).unwrap(), 2.0);
        let l = loss(LossKind::L2Squared, &est(&[0.6, 0.4]), &truth).unwrap();
        assert!((l - 0.02).abs() < 1e-15);
        assert!(matches!(
            loss(LossKind::L1, &est(&[1.0, 0.0, 0.0]), &truth),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn clip_examples() {
        assert_eq!(
            clip_to_unit_cube(&est(&[-0.1, 0.6, 1.2])),
            est(&[0.0, 0.6, 1.0])
        );
        let inside = est(&[0.0, 0.3, 1.0]);
        assert_eq!(clip_to_unit_cube(&inside), inside);
    }

    fn simplex_point(k: usize) -> impl Strategy<Value = ProbabilityVector> {
        prop::collection::vec(0.001f64..1.0, k).prop_map(|w| {
            let s: f64 = w.iter().sum();
            ProbabilityVector::new(w.into_iter().map(|x| x / s).collect()).unwrap()
        })
    }

    fn estimate_and_truth() -> impl Strategy<Value = (EstimateVector, ProbabilityVector)> {
        (2usize..12).prop_flat_map(|k| {
            (
                prop::collection::vec(-2.0f64..3.0, k)
                    .prop_map(|v| EstimateVector::new(v).unwrap()),
                simplex_point(k),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn clipping_never_increases_loss((e, p) in estimate_and_truth()) {
            let c = clip_to_unit_cube(&e);
            prop_assert_eq!(clip_to_unit_cube(&c), c.clone());
            for kind in LossKind::ALL {
                prop_assert!(loss(kind, &c, &p).unwrap() <= loss(kind, &e, &p).unwrap() + 1e-15);
            }
        }

        #[test]
        fn losses_nonnegative_and_bounded_on_cube((e, p) in estimate_and_truth()) {
            let c = clip_to_unit_cube(&e);
            for kind in LossKind::ALL {
                let l = loss(kind, &c, &p).unwrap();
                prop_assert!(l >= 0.0);
                prop_assert!(l <= p.k() as f64);
                prop_assert_eq!(loss(kind, &EstimateVector::from(&p), &p).unwrap(), 0.0);
            }
        }
    }
}
