//! Closed-form risks of the empirical estimators, the choice of subset size,
//! upper bounds for the recommended subset size, minimax lower bounds and
//! scheme comparisons.
//!
//! L1 values are the leading `1/sqrt(n)` term of the expected loss; the
//! remainder is `o(1/sqrt(n))` and not quantified. Reports carry
//! [`Flavor::AsymptoticLeading`] to make this explicit.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mechanisms::MechanismSpec;
use crate::simplex::{LossKind, PrivacyBudget, ProbabilityVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Flavor {
    ExactAllN,
    AsymptoticLeading,
    UpperBound,
    LowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport {
    /// The mechanism the value refers to; `None` for minimax lower bounds.
    pub scheme: Option<MechanismSpec>,
    pub loss: LossKind,
    pub n: u64,
    pub value: f64,
    pub flavor: Flavor,
    pub worst_case: bool,
    pub formula: String,
}

impl RiskReport {
    fn new(
        scheme: Option<MechanismSpec>,
        loss: LossKind,
        n: u64,
        value: f64,
        flavor: Flavor,
        worst_case: bool,
        formula: &str,
    ) -> Self {
        debug_assert!(value.is_finite() && value >= 0.0, "{formula}: {value}");
        debug_assert!(flavor != Flavor::AsymptoticLeading || loss == LossKind::L1);
        Self {
            scheme,
            loss,
            n,
            value,
            flavor,
            worst_case,
            formula: formula.to_owned(),
        }
    }
}

fn check_n(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    Ok(n as f64)
}

/// Validates `(k, d, budget)` for the subset formulas and returns `e^eps`.
fn subset_setup(k: usize, d: usize, budget: PrivacyBudget) -> Result<(MechanismSpec, f64)> {
    let spec = MechanismSpec::subset(k, d, budget)?;
    let e = budget.exp_epsilon();
    if e == 1.0 {
        return Err(Error::DegenerateBudget);
    }
    Ok((spec, e))
}

fn check_dim(k: usize, p: &ProbabilityVector) -> Result<()> {
    if p.k() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: p.k(),
        });
    }
    Ok(())
}

/// Part of the squared-L2 risk (times `n`) that does not depend on `p`.
fn l22_constant(k: f64, d: f64, e: f64) -> f64 {
    let em1sq = (e - 1.0) * (e - 1.0);
    (d * (k - 2.0) + 1.0) * e * e / ((k - d) * em1sq)
        + 2.0 * (k - 2.0) * e / em1sq
        + ((k - 2.0) * (k - d) + 1.0) / (d * em1sq)
}

/// Exact expected squared L2 loss of the subset estimator, for every `n`.
pub fn l22_risk_subset(
    k: usize,
    d: usize,
    budget: PrivacyBudget,
    n: u64,
    p: &ProbabilityVector,
) -> Result<RiskReport> {
    let (spec, e) = subset_setup(k, d, budget)?;
    check_dim(k, p)?;
    let nf = check_n(n)?;
    let value = (l22_constant(k as f64, d as f64, e) - p.sum_of_squares()) / nf;
    Ok(RiskReport::new(
        Some(spec),
        LossKind::L2Squared,
        n,
        value,
        Flavor::ExactAllN,
        p.is_uniform(),
        "subset-l22-exact",
    ))
}

/// Leading term of the expected L1 loss of the subset estimator.
pub fn l1_risk_subset_asymptotic(
    k: usize,
    d: usize,
    budget: PrivacyBudget,
    n: u64,
    p: &ProbabilityVector,
) -> Result<RiskReport> {
    let (spec, e) = subset_setup(k, d, budget)?;
    check_dim(k, p)?;
    let nf = check_n(n)?;
    let (kf, df) = (k as f64, d as f64);
    let sum: f64 = p
        .as_slice()
        .iter()
        .map(|&pi| {
            let a = (e - 1.0) * pi + (df - 1.0) * e / (kf - df) + 1.0;
            let b = (e - 1.0) * (1.0 - pi) + (kf - 1.0) / df;
            (2.0 / (PI * nf) * a * b).sqrt()
        })
        .sum();
    Ok(RiskReport::new(
        Some(spec),
        LossKind::L1,
        n,
        sum / (e - 1.0),
        Flavor::AsymptoticLeading,
        p.is_uniform(),
        "subset-l1-leading",
    ))
}

/// The L1 leading term at the uniform distribution, where it is largest.
pub fn l1_risk_uniform(k: usize, d: usize, budget: PrivacyBudget, n: u64) -> Result<RiskReport> {
    let (spec, e) = subset_setup(k, d, budget)?;
    let nf = check_n(n)?;
    let value = (2.0 * (k as f64 - 1.0) / (PI * nf) * l1_uniform_factor(k as f64, d as f64, e))
        .sqrt()
        / (e - 1.0);
    Ok(RiskReport::new(
        Some(spec),
        LossKind::L1,
        n,
        value,
        Flavor::AsymptoticLeading,
        true,
        "subset-l1-leading-uniform",
    ))
}

/// The `d`-dependent product inside the uniform L1 leading term.
fn l1_uniform_factor(k: f64, d: f64, e: f64) -> f64 {
    (e - 1.0 + k * (d - 1.0) * e / (k - d) + k) * (e + (k - d) / d)
}

/// The `d`-dependent part of the squared-L2 constant, times `(e^eps - 1)^2`.
fn l22_d_objective(k: f64, d: f64, e: f64) -> f64 {
    (k - 2.0) * (d * e * e / (k - d) + (k - d) / d) + e * e / (k - d) + 1.0 / d
}

/// Worst-case (uniform) squared-L2 risk of the subset estimator.
pub fn l22_risk_uniform(k: usize, d: usize, budget: PrivacyBudget, n: u64) -> Result<RiskReport> {
    l22_risk_subset(k, d, budget, n, &ProbabilityVector::uniform(k)?)
}

/// Worst-case risks of k-RAPPOR: the exact squared L2 loss and the L1 leading term.
pub fn rappor_worstcase_risks(
    k: usize,
    budget: PrivacyBudget,
    n: u64,
) -> Result<(RiskReport, RiskReport)> {
    let spec = MechanismSpec::rappor(k, budget)?;
    let nf = check_n(n)?;
    let s = budget.exp_half_epsilon();
    if s == 1.0 {
        return Err(Error::DegenerateBudget);
    }
    let kf = k as f64;
    let l22 = (1.0 + kf * kf * s / ((kf - 1.0) * (s - 1.0) * (s - 1.0))) * (kf - 1.0) / (nf * kf);
    let l1 = (2.0 / (PI * nf) * (s + kf - 1.0) * (s * (kf - 1.0) + 1.0) / ((s - 1.0) * (s - 1.0)))
        .sqrt();
    Ok((
        RiskReport::new(
            Some(spec),
            LossKind::L2Squared,
            n,
            l22,
            Flavor::ExactAllN,
            true,
            "rappor-l22-uniform",
        ),
        RiskReport::new(
            Some(spec),
            LossKind::L1,
            n,
            l1,
            Flavor::AsymptoticLeading,
            true,
            "rappor-l1-leading-uniform",
        ),
    ))
}

/// Worst-case risk of any supported scheme: uniform `p` for subset/RR.
pub fn worst_case_risk(spec: &MechanismSpec, loss: LossKind, n: u64) -> Result<RiskReport> {
    match spec.subset_size() {
        Some(d) => match loss {
            LossKind::L2Squared => l22_risk_uniform(spec.k(), d, spec.budget(), n),
            LossKind::L1 => l1_risk_uniform(spec.k(), d, spec.budget(), n),
        },
        None => {
            let (l22, l1) = rappor_worstcase_risks(spec.k(), spec.budget(), n)?;
            Ok(if loss == LossKind::L1 { l1 } else { l22 })
        }
    }
}

/// The recommended subset size `ceil(k / (e^eps + 1))`, at least 1.
pub fn default_d(k: usize, budget: PrivacyBudget) -> usize {
    ((k as f64 / (budget.exp_epsilon() + 1.0)).ceil() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DChoice {
    pub d_star: usize,
    /// `floor(k / (e^eps + 1))`, raised to 1 if it is 0.
    pub floor: usize,
    /// `ceil(k / (e^eps + 1))`.
    pub ceil: usize,
}

/// Picks the better of the two integers around `k / (e^eps + 1)`, where the
/// worst-case risk (squared L2, or the L1 leading term) is minimized over
/// real `d`. Near-ties (within `1e-12` relative) go to the ceiling.
pub fn select_d(k: usize, budget: PrivacyBudget, loss: LossKind) -> Result<DChoice> {
    if k < 2 {
        return Err(Error::TooFewCategories { k });
    }
    let e = budget.exp_epsilon();
    let x = k as f64 / (e + 1.0);
    let floor = (x.floor() as usize).clamp(1, k - 1);
    let ceil = (x.ceil() as usize).clamp(1, k - 1);
    let objective = |d: usize| match loss {
        LossKind::L2Squared => l22_d_objective(k as f64, d as f64, e),
        LossKind::L1 => l1_uniform_factor(k as f64, d as f64, e),
    };
    let (g_floor, g_ceil) = (objective(floor), objective(ceil));
    let d_star = if g_ceil <= g_floor + 1e-12 * g_floor.abs() {
        ceil
    } else {
        floor
    };
    Ok(DChoice {
        d_star,
        floor,
        ceil,
    })
}

fn check_upper_hypothesis(k: usize, e: f64) -> Result<()> {
    let need = 4f64.max(e + 1.0);
    if (k as f64) < need {
        return Err(Error::HypothesisViolated(format!(
            "k >= max(4, e^eps + 1) required, but k = {k} < {need}"
        )));
    }
    Ok(())
}

fn upper_setup(k: usize, budget: PrivacyBudget, n: u64) -> Result<(MechanismSpec, f64, f64)> {
    let e = budget.exp_epsilon();
    check_upper_hypothesis(k, e)?;
    let nf = check_n(n)?;
    let (spec, _) = subset_setup(k, default_d(k, budget), budget)?;
    Ok((spec, e, nf))
}

/// Upper bound on the worst-case squared L2 risk at `d = ceil(k/(e^eps+1))`.
pub fn l22_upper_bound(k: usize, budget: PrivacyBudget, n: u64) -> Result<RiskReport> {
    let (spec, e, nf) = upper_setup(k, budget, n)?;
    let kf = k as f64;
    let value = 4.0 * kf * e / (nf * (e - 1.0) * (e - 1.0)) * (1.0 + (2.0 * e + 3.0) / (4.0 * kf));
    Ok(RiskReport::new(
        Some(spec),
        LossKind::L2Squared,
        n,
        value,
        Flavor::UpperBound,
        true,
        "subset-l22-upper",
    ))
}

/// Upper bound on the worst-case L1 leading term at `d = ceil(k/(e^eps+1))`.
pub fn l1_upper_bound(k: usize, budget: PrivacyBudget, n: u64) -> Result<RiskReport> {
    let (spec, e, nf) = upper_setup(k, budget, n)?;
    let kf = k as f64;
    let value = (8.0 * e / (PI * nf)).sqrt() * kf / (e - 1.0) * (1.0 + (e + 1.0) / (4.0 * kf));
    Ok(RiskReport::new(
        Some(spec),
        LossKind::L1,
        n,
        value,
        Flavor::UpperBound,
        true,
        "subset-l1-upper",
    ))
}

pub fn upper_bound(k: usize, budget: PrivacyBudget, n: u64, loss: LossKind) -> Result<RiskReport> {
    match loss {
        LossKind::L2Squared => l22_upper_bound(k, budget, n),
        LossKind::L1 => l1_upper_bound(k, budget, n),
    }
}

/// Sample size that `n` must strictly exceed for [`lower_bound`] to apply.
pub fn lower_bound_threshold(k: usize, budget: PrivacyBudget) -> f64 {
    let e = budget.exp_epsilon();
    let kf = k as f64;
    let a = kf * kf * (e + 1.0) * (e + 1.0) / (16.0 * (e - 1.0) * (e - 1.0));
    let b = kf * kf / (2.0 * (e - 1.0));
    a.max(b)
}

/// Lower bound on the minimax risk over all `eps`-private mechanisms and
/// estimators. The branch switches at `e^eps = 3` (inclusive on the upper side).
pub fn lower_bound(k: usize, budget: PrivacyBudget, n: u64, loss: LossKind) -> Result<RiskReport> {
    if k < 2 {
        return Err(Error::TooFewCategories { k });
    }
    let e = budget.exp_epsilon();
    if e == 1.0 {
        return Err(Error::DegenerateBudget);
    }
    let threshold = lower_bound_threshold(k, budget);
    if (n as f64) <= threshold {
        return Err(Error::SampleSizeTooSmall { n, threshold });
    }
    let (kf, nf) = (k as f64, n as f64);
    let (value, formula) = match (loss, e < 3.0) {
        (LossKind::L2Squared, true) => (
            (kf - 1.0) * (e + 1.0) * (e + 1.0) / (512.0 * nf * (e - 1.0) * (e - 1.0)),
            "minimax-l22-lower-small-eps",
        ),
        (LossKind::L1, true) => (
            (kf - 1.0) * (e + 1.0) / (64.0 * nf.sqrt() * (e - 1.0)),
            "minimax-l1-lower-small-eps",
        ),
        (LossKind::L2Squared, false) => (
            (kf - 1.0) / (64.0 * nf * (e - 1.0)),
            "minimax-l22-lower-large-eps",
        ),
        (LossKind::L1, false) => (
            (kf - 1.0) / (16.0 * (2.0 * nf * (e - 1.0)).sqrt()),
            "minimax-l1-lower-large-eps",
        ),
    };
    Ok(RiskReport::new(
        None,
        loss,
        n,
        value,
        Flavor::LowerBound,
        true,
        formula,
    ))
}

/// Lower bound, exact worst-case risk of the recommended subset mechanism,
/// and its upper bound, side by side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsCertificate {
    pub k: usize,
    pub epsilon: f64,
    pub exp_epsilon: f64,
    pub n: u64,
    pub loss: LossKind,
    pub d: usize,
    pub lower: f64,
    pub exact_worst_case: f64,
    pub upper: f64,
    pub formula: String,
}

impl BoundsCertificate {
    pub fn is_ordered(&self) -> bool {
        self.lower <= self.exact_worst_case && self.exact_worst_case <= self.upper
    }
}

pub fn bounds_certificate(
    k: usize,
    budget: PrivacyBudget,
    n: u64,
    loss: LossKind,
) -> Result<BoundsCertificate> {
    let upper = upper_bound(k, budget, n, loss)?;
    let lower = lower_bound(k, budget, n, loss)?;
    let d = default_d(k, budget);
    let exact = match loss {
        LossKind::L2Squared => l22_risk_uniform(k, d, budget, n)?,
        LossKind::L1 => l1_risk_uniform(k, d, budget, n)?,
    };
    Ok(BoundsCertificate {
        k,
        epsilon: budget.epsilon(),
        exp_epsilon: budget.exp_epsilon(),
        n,
        loss,
        d,
        lower: lower.value,
        exact_worst_case: exact.value,
        upper: upper.value,
        formula: format!(
            "{} <= {} <= {}",
            lower.formula, exact.formula, upper.formula
        ),
    })
}

fn lemimp_check(k: usize) -> Result<()> {
    if k < 2 || k % 2 == 1 {
        return Err(Error::OddK { k });
    }
    Ok(())
}

/// `t (e^eps - 1)^2 / (t (e^eps - 1) + k)^2`: the largest squared normalized
/// difference an extremal output column with `t` high entries can contribute.
pub fn lemimp_objective(t: usize, k: usize, budget: PrivacyBudget) -> Result<f64> {
    lemimp_check(k)?;
    if t == 0 || t > k / 2 {
        return Err(Error::TOutOfRange { t, max: k / 2 });
    }
    let a = budget.exp_epsilon() - 1.0;
    let t = t as f64;
    Ok(t * a * a / ((t * a + k as f64) * (t * a + k as f64)))
}

/// Closed-form bound on [`lemimp_objective`] over `t` in `1..=k/2`.
pub fn lemimp_bound(k: usize, budget: PrivacyBudget) -> Result<f64> {
    lemimp_check(k)?;
    let e = budget.exp_epsilon();
    let kf = k as f64;
    Ok(if e < 3.0 {
        2.0 * (e - 1.0) * (e - 1.0) / (kf * (e + 1.0) * (e + 1.0))
    } else {
        (e - 1.0) / (4.0 * kf)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioSet {
    pub l22_vs_rappor: f64,
    pub l22_vs_rr: f64,
    pub l1_vs_rappor: f64,
    pub l1_vs_rr: f64,
}

impl RatioSet {
    pub fn meets(&self, l22_limit: f64, l1_limit: f64) -> bool {
        self.l22_vs_rappor < l22_limit
            && self.l22_vs_rr < l22_limit
            && self.l1_vs_rappor < l1_limit
            && self.l1_vs_rr < l1_limit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum CompareStatus {
    Pass,
    Fail,
    NotApplicable,
}

impl std::fmt::Display for CompareStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CompareStatus::Pass => "PASS",
            CompareStatus::Fail => "FAIL",
            CompareStatus::NotApplicable => "NOT-APPLICABLE",
        })
    }
}

/// Ratio ceilings guaranteed in the medium-privacy regime.
pub const L22_RATIO_LIMIT: f64 = 0.5;
pub const L1_RATIO_LIMIT: f64 = 0.7;
/// The regime: `eps > 3.8` and `k > 9 e^eps`.
pub const REGIME_MIN_EPSILON: f64 = 3.8;
pub const REGIME_K_FACTOR: f64 = 9.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub k: usize,
    pub epsilon: f64,
    pub exp_epsilon: f64,
    pub n: u64,
    /// Subset size of the recommended mechanism, `ceil(k/(e^eps+1))`.
    pub d: usize,
    /// Upper bound for the subset mechanism over lower estimates of the
    /// competitors' worst-case risks. `None` when `k < max(4, e^eps + 1)`.
    pub bound_ratios: Option<RatioSet>,
    /// Exact worst-case risk ratios (L1 via leading terms).
    pub exact_ratios: RatioSet,
    pub in_regime: bool,
    pub status: CompareStatus,
}

/// Compares the recommended subset mechanism with k-RAPPOR and k-RR.
pub fn compare_schemes(k: usize, budget: PrivacyBudget, n: u64) -> Result<Comparison> {
    let e = budget.exp_epsilon();
    if e == 1.0 || budget.exp_half_epsilon() == 1.0 {
        return Err(Error::DegenerateBudget);
    }
    let nf = check_n(n)?;
    let d = default_d(k, budget);
    let (kf, s) = (k as f64, budget.exp_half_epsilon());

    let (rap_l22, rap_l1) = rappor_worstcase_risks(k, budget, n)?;
    let exact_ratios = RatioSet {
        l22_vs_rappor: l22_risk_uniform(k, d, budget, n)?.value / rap_l22.value,
        l22_vs_rr: l22_risk_uniform(k, d, budget, n)?.value
            / l22_risk_uniform(k, 1, budget, n)?.value,
        l1_vs_rappor: l1_risk_uniform(k, d, budget, n)?.value / rap_l1.value,
        l1_vs_rr: l1_risk_uniform(k, d, budget, n)?.value / l1_risk_uniform(k, 1, budget, n)?.value,
    };

    let bound_ratios = match (l22_upper_bound(k, budget, n), l1_upper_bound(k, budget, n)) {
        (Ok(up22), Ok(up1)) => {
            let shrink = (1.0 - 1.0 / kf).sqrt();
            let rap22_floor = kf * s / (nf * (s - 1.0) * (s - 1.0));
            let rr22_floor = kf * kf / (nf * (e - 1.0) * (e - 1.0)) * (1.0 - 1.0 / kf);
            let rap1_floor = (2.0 / PI).sqrt() * kf * s.sqrt() / ((s - 1.0) * nf.sqrt()) * shrink;
            let rr1_floor = (2.0 / PI).sqrt() * kf * kf.sqrt() / ((e - 1.0) * nf.sqrt()) * shrink;
            Some(RatioSet {
                l22_vs_rappor: up22.value / rap22_floor,
                l22_vs_rr: up22.value / rr22_floor,
                l1_vs_rappor: up1.value / rap1_floor,
                l1_vs_rr: up1.value / rr1_floor,
            })
        }
        (Err(Error::HypothesisViolated(_)), _) | (_, Err(Error::HypothesisViolated(_))) => None,
        (Err(err), _) | (_, Err(err)) => return Err(err),
    };

    let in_regime = budget.epsilon() > REGIME_MIN_EPSILON && kf > REGIME_K_FACTOR * e;
    let status = match (in_regime, bound_ratios) {
        (false, _) => CompareStatus::NotApplicable,
        (true, Some(r)) if r.meets(L22_RATIO_LIMIT, L1_RATIO_LIMIT) => CompareStatus::Pass,
        (true, _) => CompareStatus::Fail,
    };
    Ok(Comparison {
        k,
        epsilon: budget.epsilon(),
        exp_epsilon: e,
        n,
        d,
        bound_ratios,
        exact_ratios,
        in_regime,
        status,
    })
}
