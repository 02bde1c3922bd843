//! Count accumulation and the unbiased empirical estimators.
//!
//! Each estimator is the affine inverse of its mechanism's per-coordinate
//! marginal map: `p_hat_i = scale * T_i / n - offset`, where `T_i` counts the
//! privatized samples whose coordinate `i` is set.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mechanisms::{BitObservation, MechanismSpec, Scheme, SubsetObservation};
use crate::simplex::{EstimateVector, ProbabilityVector};

/// A privatized report that sets some coordinates of `{0,1}^k`.
pub trait Report {
    fn k(&self) -> usize;
    fn for_each_one(&self, f: impl FnMut(usize));
}

impl Report for SubsetObservation {
    fn k(&self) -> usize {
        SubsetObservation::k(self)
    }

    fn for_each_one(&self, f: impl FnMut(usize)) {
        self.members().iter().copied().for_each(f)
    }
}

impl Report for BitObservation {
    fn k(&self) -> usize {
        BitObservation::k(self)
    }

    fn for_each_one(&self, mut f: impl FnMut(usize)) {
        for (i, &b) in self.bits().iter().enumerate() {
            if b {
                f(i);
            }
        }
    }
}

/// Per-coordinate counts `T_i` over `n` absorbed reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountVector {
    counts: Vec<u64>,
    n: u64,
}

impl CountVector {
    pub fn new(k: usize) -> Self {
        Self {
            counts: vec![0; k],
            n: 0,
        }
    }

    /// Rebuilds a count vector from stored totals. Each count must be at most `n`.
    pub fn from_counts(counts: Vec<u64>, n: u64) -> Result<Self> {
        if let Some((i, &c)) = counts.iter().enumerate().find(|(_, &c)| c > n) {
            return Err(Error::Parse(format!(
                "count {c} for category {} exceeds n = {n}",
                i + 1
            )));
        }
        Ok(Self { counts, n })
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn accumulate<R: Report>(&mut self, obs: &R) -> Result<()> {
        if obs.k() != self.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                found: obs.k(),
            });
        }
        obs.for_each_one(|i| self.counts[i] += 1);
        self.n += 1;
        Ok(())
    }

    /// Records one report given its set coordinates, which must be distinct and `< k`.
    pub(crate) fn record_ones(&mut self, ones: &[usize]) {
        for &i in ones {
            self.counts[i] += 1;
        }
        self.n += 1;
    }

    pub(crate) fn bump(&mut self, i: usize) {
        self.counts[i] += 1;
    }

    pub(crate) fn finish_report(&mut self) {
        self.n += 1;
    }

    /// Adds another shard's counts. Exact, so sharded accumulation is order-independent.
    pub fn merge(&mut self, other: &CountVector) -> Result<()> {
        if other.k() != self.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                found: other.k(),
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.n += other.n;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Estimator for the subset mechanism (and k-RR, its `d = 1` case) with the
/// affine coefficients precomputed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubsetEstimator {
    k: usize,
    d: usize,
    scale: f64,
    offset: f64,
}

impl SubsetEstimator {
    pub fn new(spec: &MechanismSpec) -> Result<Self> {
        let d = spec.subset_size().ok_or(Error::UnsupportedScheme(
            "k-RAPPOR (subset mechanism expected)",
        ))?;
        let k = spec.k();
        let e = spec.budget().exp_epsilon();
        if e == 1.0 {
            return Err(Error::DegenerateBudget);
        }
        let (kf, df) = (k as f64, d as f64);
        let denom = (kf - df) * (e - 1.0);
        Ok(Self {
            k,
            d,
            scale: ((kf - 1.0) * e + (kf - 1.0) * (kf - df) / df) / denom,
            offset: ((df - 1.0) * e + kf - df) / denom,
        })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn estimate(&self, counts: &CountVector) -> Result<EstimateVector> {
        affine_estimate(counts, self.k, self.scale, self.offset)
    }
}

/// Estimator for k-RAPPOR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RapporEstimator {
    k: usize,
    scale: f64,
    offset: f64,
}

impl RapporEstimator {
    pub fn new(spec: &MechanismSpec) -> Result<Self> {
        let Scheme::Rappor { k } = spec.scheme() else {
            return Err(Error::UnsupportedScheme(
                "subset mechanisms (k-RAPPOR expected)",
            ));
        };
        let s = spec.budget().exp_half_epsilon();
        if s == 1.0 {
            return Err(Error::DegenerateBudget);
        }
        Ok(Self {
            k,
            scale: (s + 1.0) / (s - 1.0),
            offset: 1.0 / (s - 1.0),
        })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn estimate(&self, counts: &CountVector) -> Result<EstimateVector> {
        affine_estimate(counts, self.k, self.scale, self.offset)
    }
}

/// The matching estimator for any supported mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    Subset(SubsetEstimator),
    Rappor(RapporEstimator),
}

impl Estimator {
    pub fn for_spec(spec: &MechanismSpec) -> Result<Self> {
        match spec.scheme() {
            Scheme::Rappor { .. } => RapporEstimator::new(spec).map(Estimator::Rappor),
            _ => SubsetEstimator::new(spec).map(Estimator::Subset),
        }
    }

    pub fn scale(&self) -> f64 {
        match self {
            Estimator::Subset(e) => e.scale,
            Estimator::Rappor(e) => e.scale,
        }
    }

    pub fn estimate(&self, counts: &CountVector) -> Result<EstimateVector> {
        match self {
            Estimator::Subset(e) => e.estimate(counts),
            Estimator::Rappor(e) => e.estimate(counts),
        }
    }

    /// Writes the estimate into `out` without allocating. `counts` must be
    /// non-empty with the estimator's `k`.
    pub(crate) fn estimate_into(&self, counts: &CountVector, out: &mut [f64]) {
        let (scale, offset) = match self {
            Estimator::Subset(e) => (e.scale, e.offset),
            Estimator::Rappor(e) => (e.scale, e.offset),
        };
        let n = counts.n as f64;
        for (o, &t) in out.iter_mut().zip(&counts.counts) {
            *o = scale * (t as f64 / n) - offset;
        }
    }
}

fn affine_estimate(
    counts: &CountVector,
    k: usize,
    scale: f64,
    offset: f64,
) -> Result<EstimateVector> {
    if counts.k() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: counts.k(),
        });
    }
    if counts.n == 0 {
        return Err(Error::EmptySample);
    }
    let n = counts.n as f64;
    EstimateVector::new(
        counts
            .counts
            .iter()
            .map(|&t| scale * (t as f64 / n) - offset)
            .collect(),
    )
}

pub fn subset_estimate(counts: &CountVector, spec: &MechanismSpec) -> Result<EstimateVector> {
    SubsetEstimator::new(spec)?.estimate(counts)
}

pub fn rappor_estimate(counts: &CountVector, spec: &MechanismSpec) -> Result<EstimateVector> {
    RapporEstimator::new(spec)?.estimate(counts)
}

/// `q_i = P(Y_i = 1)` under a subset mechanism when inputs follow `p`.
pub fn marginal_q(p: &ProbabilityVector, spec: &MechanismSpec) -> Result<Vec<f64>> {
    let d = spec.subset_size().ok_or(Error::UnsupportedScheme(
        "k-RAPPOR (subset mechanism expected)",
    ))?;
    let k = spec.k();
    if p.k() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: p.k(),
        });
    }
    let e = spec.budget().exp_epsilon();
    let (kf, df) = (k as f64, d as f64);
    let denom = (kf - 1.0) * e + (kf - 1.0) * (kf - df) / df;
    Ok(p.as_slice()
        .iter()
        .map(|&pi| ((kf - df) * (e - 1.0) * pi + (df - 1.0) * e + kf - df) / denom)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::build_channel;
    use crate::simplex::PrivacyBudget;

    fn subset(k: usize, d: usize, e: f64) -> MechanismSpec {
        MechanismSpec::subset(k, d, PrivacyBudget::from_exp(e).unwrap()).unwrap()
    }

    fn rappor_half(k: usize, s: f64) -> MechanismSpec {
        MechanismSpec::rappor(k, PrivacyBudget::new(2.0 * s.ln()).unwrap()).unwrap()
    }

    #[test]
    fn accumulate_subset_observation() {
        let mut c = CountVector::new(4);
        c.accumulate(&SubsetObservation::new(4, vec![0, 2]).unwrap())
            .unwrap();
        assert_eq!(c.counts(), &[1, 0, 1, 0]);
        assert_eq!(c.n(), 1);
        assert!(matches!(
            c.accumulate(&SubsetObservation::new(5, vec![0]).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn accumulate_bits_and_merge() {
        let mut a = CountVector::new(3);
        for _ in 0..5 {
            a.accumulate(&BitObservation::new(vec![false, true, true]))
                .unwrap();
        }
        assert_eq!(a.counts(), &[0, 5, 5]);
        let mut b = CountVector::new(3);
        b.accumulate(&BitObservation::new(vec![true, true, false]))
            .unwrap();
        a.merge(&b).unwrap();
        assert_eq!((a.counts(), a.n()), (&[1u64, 6, 5][..], 6));
    }

    #[test]
    fn subset_coefficients() {
        let est = SubsetEstimator::new(&subset(4, 2, 3.0)).unwrap();
        assert!((est.scale() - 3.0).abs() < 1e-15);
        assert!((est.offset() - 1.25).abs() < 1e-15);
        let counts = CountVector::from_counts(vec![6, 4, 5, 5], 10).unwrap();
        let p = est.estimate(&counts).unwrap();
        assert!((p.as_slice()[0] - 0.55).abs() < 1e-15);
    }

    #[test]
    fn d_one_reduces_to_randomized_response() {
        let (k, e) = (5.0, 4.0);
        let est = SubsetEstimator::new(&subset(5, 1, e)).unwrap();
        assert!((est.scale() - (e + k - 1.0) / (e - 1.0)).abs() < 1e-14);
        assert!((est.offset() - 1.0 / (e - 1.0)).abs() < 1e-14);
        let rr = MechanismSpec::rr(5, PrivacyBudget::from_exp(e).unwrap()).unwrap();
        assert_eq!(SubsetEstimator::new(&rr).unwrap(), est);
    }

    #[test]
    fn rappor_coefficients() {
        let spec = rappor_half(4, 2.0);
        let counts = CountVector::from_counts(vec![50, 0, 100, 100], 100).unwrap();
        let p = rappor_estimate(&counts, &spec).unwrap();
        assert!((p.as_slice()[0] - 0.5).abs() < 1e-12);
        // Pure-noise level 1/(1+s) maps to zero.
        let noise = CountVector::from_counts(vec![1, 1, 1, 1], 3).unwrap();
        let z = rappor_estimate(&noise, &spec).unwrap();
        assert!(z.as_slice()[0].abs() < 1e-12);
    }

    #[test]
    fn estimator_errors() {
        let spec = subset(4, 2, 3.0);
        assert_eq!(
            subset_estimate(&CountVector::new(4), &spec),
            Err(Error::EmptySample)
        );
        let flat = MechanismSpec::subset(4, 2, PrivacyBudget::new(1e-300).unwrap()).unwrap();
        assert_eq!(SubsetEstimator::new(&flat), Err(Error::DegenerateBudget));
        let flat_rappor = MechanismSpec::rappor(4, PrivacyBudget::new(1e-300).unwrap()).unwrap();
        assert_eq!(
            RapporEstimator::new(&flat_rappor),
            Err(Error::DegenerateBudget)
        );
        assert!(rappor_estimate(&CountVector::new(4), &spec).is_err());
    }

    #[test]
    fn estimator_inverts_marginals() {
        for (k, d, e) in [(4, 2, 3.0), (7, 3, 1.5), (10, 1, 8.0), (12, 11, 2.0)] {
            let spec = subset(k, d, e);
            let mut w: Vec<f64> = (1..=k).map(|i| (i * i) as f64).collect();
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= s);
            let p = ProbabilityVector::new(w).unwrap();
            let q = marginal_q(&p, &spec).unwrap();
            let est = SubsetEstimator::new(&spec).unwrap();
            for (qi, pi) in q.iter().zip(p.as_slice()) {
                assert!((est.scale() * qi - est.offset() - pi).abs() < 1e-12);
            }
            assert!((q.iter().sum::<f64>() - d as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn marginals_uniform_and_by_enumeration() {
        let spec = subset(6, 2, 2.5);
        let q = marginal_q(&ProbabilityVector::uniform(6).unwrap(), &spec).unwrap();
        assert!(q.iter().all(|qi| (qi - 2.0 / 6.0).abs() < 1e-15));

        let e = 3.0;
        let spec = subset(4, 2, e);
        let p = ProbabilityVector::new(vec![0.5, 0.3, 0.1, 0.1]).unwrap();
        let q = marginal_q(&p, &spec).unwrap();
        let ch = build_channel(&spec).unwrap();
        for (i, qi) in q.iter().enumerate() {
            let enumerated: f64 = ch
                .labels()
                .iter()
                .enumerate()
                .filter(|(_, l)| matches!(l, crate::mechanisms::OutputLabel::Subset(s) if s.contains(i)))
                .map(|(y, _)| (0..4).map(|x| p.get(x) * ch.get(x, y)).sum::<f64>())
                .sum();
            assert!((qi - enumerated).abs() < 1e-14);
        }
        let p1 = p.get(0);
        let closed = (3.0 * e * p1 + (e + 2.0) * (1.0 - p1)) / (3.0 * e + 3.0);
        assert!((q[0] - closed).abs() < 1e-15);
    }
}
