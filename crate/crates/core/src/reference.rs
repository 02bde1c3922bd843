//! Brute-force oracles. Nothing here calls the closed forms it is used to
//! check: channels are rebuilt from the raw output law, marginals are summed
//! over every output, and the estimator's affine map is recovered from the
//! enumerated marginals.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::marginal_q;
use crate::mechanisms::{build_channel, is_extremal, privacy_ratio, MechanismSpec};
use crate::montecarlo::trial_rng;
use crate::risk::l22_risk_subset;
use crate::simplex::{LossKind, PrivacyBudget, ProbabilityVector};

/// Largest output alphabet the enumeration oracles will walk.
pub const MAX_ORACLE_OUTPUTS: f64 = 1e5;

fn choose(n: usize, r: usize) -> f64 {
    if r > n {
        return 0.0;
    }
    let r = r.min(n - r);
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Visits every size-`d` subset of `0..k` as a membership mask.
fn for_each_subset(k: usize, d: usize, mut visit: impl FnMut(&[bool])) {
    let mut idx: Vec<usize> = (0..d).collect();
    let mut mask = vec![false; k];
    loop {
        mask.iter_mut().for_each(|m| *m = false);
        idx.iter().for_each(|&i| mask[i] = true);
        visit(&mask);
        let Some(i) = (0..d).rev().find(|&i| idx[i] != i + k - d) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..d {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn subset_spec_size(spec: &MechanismSpec) -> Result<(usize, usize)> {
    let d = spec
        .subset_size()
        .ok_or(Error::UnsupportedScheme("rappor in a subset oracle"))?;
    let size = choose(spec.k(), d);
    if size > MAX_ORACLE_OUTPUTS {
        return Err(Error::AlphabetTooLarge {
            size,
            limit: MAX_ORACLE_OUTPUTS,
        });
    }
    Ok((spec.k(), d))
}

/// `P(i in Y)` for every `i` when `X ~ p`, summed over the enumerated outputs.
fn enumerated_marginals(k: usize, d: usize, e: f64, p: &[f64]) -> Vec<f64> {
    let norm = e * choose(k - 1, d - 1) + choose(k - 1, d);
    let mut q = vec![0.0; k];
    for_each_subset(k, d, |mask| {
        let prob: f64 = (0..k)
            .map(|x| p[x] * if mask[x] { e } else { 1.0 })
            .sum::<f64>()
            / norm;
        for (qi, &m) in q.iter_mut().zip(mask) {
            if m {
                *qi += prob;
            }
        }
    });
    q
}

/// Exact expected squared L2 loss of the subset (or RR) empirical estimator,
/// computed as per-coordinate binomial variance plus squared bias from
/// enumerated marginals.
pub fn exact_l22_by_enumeration(
    spec: &MechanismSpec,
    p: &ProbabilityVector,
    n: u64,
) -> Result<f64> {
    let (k, d) = subset_spec_size(spec)?;
    if p.k() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: p.k(),
        });
    }
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let e = spec.budget().exp_epsilon();
    // q_i is affine in p_i: hit rate a when X = i, b otherwise.
    let mut point = vec![0.0; k];
    point[0] = 1.0;
    let at_zero = enumerated_marginals(k, d, e, &point);
    let (a, b) = (at_zero[0], at_zero[1]);
    if a == b {
        return Err(Error::DegenerateBudget);
    }
    let scale = 1.0 / (a - b);
    let offset = b / (a - b);
    let q = enumerated_marginals(k, d, e, p.as_slice());
    let nf = n as f64;
    Ok(q.iter()
        .zip(p.as_slice())
        .map(|(&qi, &pi)| {
            let bias = scale * qi - offset - pi;
            scale * scale * qi * (1.0 - qi) / nf + bias * bias
        })
        .sum())
}

/// Uniform-input risk factor of `Q_{k,d}` with `n = 1`, from first principles.
fn uniform_risk(k: usize, d: usize, e: f64, loss: LossKind) -> f64 {
    let (kf, df) = (k as f64, d as f64);
    let hit = df * e / (df * e + kf - df);
    let cross = hit * (df - 1.0) / (kf - 1.0) + (1.0 - hit) * df / (kf - 1.0);
    let scale = 1.0 / (hit - cross);
    let q = (hit + (kf - 1.0) * cross) / kf;
    match loss {
        LossKind::L2Squared => scale * scale * kf * q * (1.0 - q),
        LossKind::L1 => scale * kf * (2.0 / std::f64::consts::PI * q * (1.0 - q)).sqrt(),
    }
}

/// Exhaustive search for the `d` minimizing the uniform-input risk. Values
/// within `1e-9` relative count as ties and go to the larger `d`.
pub fn brute_force_select_d(k: usize, budget: PrivacyBudget, loss: LossKind) -> Result<usize> {
    if k < 2 {
        return Err(Error::TooFewCategories { k });
    }
    if k > 64 {
        return Err(Error::InvalidPlan(format!(
            "brute-force d search limited to k <= 64, got {k}"
        )));
    }
    let e = budget.exp_epsilon();
    if e == 1.0 {
        return Err(Error::DegenerateBudget);
    }
    let mut best = (1, uniform_risk(k, 1, e, loss));
    for d in 2..k {
        let r = uniform_risk(k, d, e, loss);
        if r <= best.1 * (1.0 + 1e-9) {
            best = (d, r.min(best.1));
        }
    }
    Ok(best.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelAudit {
    pub privacy_ratio: f64,
    pub is_extremal: bool,
    pub max_row_sum_deviation: f64,
    /// Largest `|closed-form q_i - enumerated q_i|` over the probes; `None` for RAPPOR.
    pub marginal_match: Option<f64>,
}

/// Audits `spec` against uniform, point-mass and ramp inputs.
pub fn audit_channel(spec: &MechanismSpec) -> Result<ChannelAudit> {
    let k = spec.k();
    let ramp: Vec<f64> = (1..=k).map(|i| i as f64).collect();
    let total: f64 = ramp.iter().sum();
    let probes = [
        ProbabilityVector::uniform(k)?,
        ProbabilityVector::point_mass(k, k - 1)?,
        ProbabilityVector::new(ramp.iter().map(|x| x / total).collect())?,
    ];
    audit_channel_with(spec, &probes)
}

pub fn audit_channel_with(
    spec: &MechanismSpec,
    probes: &[ProbabilityVector],
) -> Result<ChannelAudit> {
    let size = spec.alphabet_size();
    if size > MAX_ORACLE_OUTPUTS {
        return Err(Error::AlphabetTooLarge {
            size,
            limit: MAX_ORACLE_OUTPUTS,
        });
    }
    let channel = build_channel(spec)?;
    let marginal_match = match spec.subset_size() {
        None => None,
        Some(d) => {
            let e = spec.budget().exp_epsilon();
            let mut worst: f64 = 0.0;
            for p in probes {
                let closed = marginal_q(p, spec)?;
                let enumerated = enumerated_marginals(spec.k(), d, e, p.as_slice());
                for (a, b) in closed.iter().zip(&enumerated) {
                    worst = worst.max((a - b).abs());
                }
            }
            Some(worst)
        }
    };
    Ok(ChannelAudit {
        privacy_ratio: privacy_ratio(&channel),
        is_extremal: is_extremal(&channel, spec.budget()),
        max_row_sum_deviation: channel.max_row_sum_deviation(),
        marginal_match,
    })
}

/// A random point of the simplex: normalized unit exponentials.
pub fn random_distribution<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<ProbabilityVector> {
    let raw: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    ProbabilityVector::new(raw.into_iter().map(|x| x / total).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleGridReport {
    pub points: usize,
    pub max_relative_deviation: f64,
    pub worst: Option<(usize, usize, f64)>,
}

/// Compares the closed-form squared L2 risk to the enumeration oracle for
/// every `k` in `ks`, every `d` in `1..k`, every `e^eps` in `exp_eps` and
/// `probes` random inputs per point (drawn from `seed`).
pub fn l22_oracle_grid(
    ks: &[usize],
    exp_eps: &[f64],
    probes: usize,
    seed: u64,
    n: u64,
) -> Result<OracleGridReport> {
    let mut points = Vec::new();
    for &k in ks {
        for d in 1..k {
            for &e in exp_eps {
                points.push((k, d, e));
            }
        }
    }
    let results = points
        .par_iter()
        .enumerate()
        .map(|(idx, &(k, d, e))| -> Result<(f64, (usize, usize, f64))> {
            let budget = PrivacyBudget::from_exp(e)?;
            let spec = MechanismSpec::subset(k, d, budget)?;
            let mut rng = trial_rng(seed, idx as u64);
            let mut worst: f64 = 0.0;
            for _ in 0..probes {
                let p = random_distribution(k, &mut rng)?;
                let oracle = exact_l22_by_enumeration(&spec, &p, n)?;
                let closed = l22_risk_subset(k, d, budget, n, &p)?.value;
                worst = worst.max((closed - oracle).abs() / oracle.abs());
            }
            Ok((worst, (k, d, e)))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = results
        .iter()
        .copied()
        .fold(None, |acc: Option<(f64, _)>, r| match acc {
            Some(a) if a.0 >= r.0 => Some(a),
            _ => Some(r),
        });
    Ok(OracleGridReport {
        points: results.len() * probes,
        max_relative_deviation: worst.map_or(0.0, |w| w.0),
        worst: worst.map(|w| w.1),
    })
}
