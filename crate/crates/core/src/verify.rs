//! Self-audits behind `subset-ldp verify`: each suite sweeps a fixed grid,
//! compares a fast path against a brute-force or sampled oracle and reports
//! the largest deviation seen.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::mechanisms::{
    build_channel, check_ldp, convex_vertex_decomposition, extremalize, is_extremal, ChannelMatrix,
    MechanismSpec,
};
use crate::montecarlo::{empirical_channel, total_variation, trial_rng};
use crate::reference::{audit_channel, brute_force_select_d, l22_oracle_grid};
use crate::risk::{lemimp_bound, lemimp_objective, select_d};
use crate::simplex::{LossKind, PrivacyBudget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Channels,
    Risks,
    SelectD,
    Extremal,
    Lemimp,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    /// Number of individual comparisons made.
    pub checked: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub grid: String,
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<SuiteReport> {
    match suite {
        Suite::Channels => channels(seed),
        Suite::Risks => risks(seed),
        Suite::SelectD => select_d_suite(),
        Suite::Extremal => extremal(seed),
        Suite::Lemimp => lemimp(),
    }
}

/// Sampler TV distance from the enumerated rows, plus privacy audits of every
/// small channel.
fn channels(seed: u64) -> Result<SuiteReport> {
    const DRAWS: u64 = 1_000_000;
    let sampled = [
        MechanismSpec::subset(6, 3, PrivacyBudget::new(1.0)?)?,
        MechanismSpec::rappor(3, PrivacyBudget::from_exp(4.0)?)?,
    ];
    let mut tv_max: f64 = 0.0;
    let mut checked = 0;
    for spec in &sampled {
        let channel = build_channel(spec)?;
        let tvs = (0..spec.k())
            .into_par_iter()
            .map(|x| {
                Ok(total_variation(
                    &empirical_channel(spec, x, DRAWS, seed)?,
                    channel.row(x),
                ))
            })
            .collect::<Result<Vec<f64>>>()?;
        checked += tvs.len();
        tv_max = tvs.into_iter().fold(tv_max, f64::max);
    }
    let mut private = true;
    for k in 2..=7 {
        for e in [1.5, 3.0, 8.0] {
            let budget = PrivacyBudget::from_exp(e)?;
            let mut specs = vec![
                MechanismSpec::rr(k, budget)?,
                MechanismSpec::rappor(k, budget)?,
            ];
            for d in 1..k {
                specs.push(MechanismSpec::subset(k, d, budget)?);
            }
            for spec in specs {
                let audit = audit_channel(&spec)?;
                private &= audit.privacy_ratio <= e * (1.0 + 1e-12)
                    && audit.max_row_sum_deviation <= 1e-12;
                private &= audit.marginal_match.is_none_or(|m| m <= 1e-12);
                checked += 1;
            }
        }
    }
    Ok(SuiteReport {
        suite: Suite::Channels,
        checked,
        max_deviation: tv_max,
        tolerance: 0.005,
        pass: private && tv_max < 0.005,
        grid: format!("sampler TV: subset k=6 d=3 eps=1 and rappor k=3 e^eps=4, {DRAWS} draws per input; audits: k in 2..=7, e^eps in {{1.5, 3, 8}}, all schemes"),
    })
}

fn risks(seed: u64) -> Result<SuiteReport> {
    let ks: Vec<usize> = (2..=12).collect();
    let r = l22_oracle_grid(&ks, &[1.5, 2.0, 3.0, 5.0], 5, seed, 1000)?;
    Ok(SuiteReport {
        suite: Suite::Risks,
        checked: r.points,
        max_deviation: r.max_relative_deviation,
        tolerance: 1e-10,
        pass: r.max_relative_deviation <= 1e-10,
        grid: "k in 2..=12, d in 1..k, e^eps in {1.5, 2, 3, 5}, 5 random p each".into(),
    })
}

/// Epsilon grid `0.25, 0.5, ..., 5`.
pub fn select_d_epsilons() -> Vec<f64> {
    (1..=20).map(|i| 0.25 * i as f64).collect()
}

fn select_d_suite() -> Result<SuiteReport> {
    let mut checked = 0;
    let mut mismatches = 0;
    for k in 2..=30 {
        for &eps in &select_d_epsilons() {
            let budget = PrivacyBudget::new(eps)?;
            for loss in LossKind::ALL {
                checked += 1;
                if select_d(k, budget, loss)?.d_star != brute_force_select_d(k, budget, loss)? {
                    mismatches += 1;
                }
            }
        }
    }
    Ok(SuiteReport {
        suite: Suite::SelectD,
        checked,
        max_deviation: mismatches as f64,
        tolerance: 0.0,
        pass: mismatches == 0,
        grid: "k in 2..=30, eps in {0.25, 0.5, ..., 5}, both losses; deviation counts mismatches"
            .into(),
    })
}

/// A random `k x outputs` channel that is `eps`-private: rows of entries in
/// `[1, e^(eps/2)]`, normalized.
pub fn random_private_channel<R: Rng + ?Sized>(
    k: usize,
    outputs: usize,
    budget: PrivacyBudget,
    rng: &mut R,
) -> Result<ChannelMatrix> {
    let hi = budget.exp_half_epsilon();
    let rows = (0..k)
        .map(|_| {
            let raw: Vec<f64> = (0..outputs).map(|_| rng.gen_range(1.0..=hi)).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / total).collect()
        })
        .collect();
    ChannelMatrix::from_rows(rows, None)
}

/// Largest `|pushforward - original|` entry after extremalizing `channel`.
pub fn extremalize_deviation(
    channel: &ChannelMatrix,
    budget: PrivacyBudget,
) -> Result<(bool, f64)> {
    let ext = extremalize(channel, budget)?;
    let mut worst: f64 = 0.0;
    for x in 0..channel.k() {
        let pushed = ext.pushforward_row(x, channel.outputs());
        for (a, b) in pushed.iter().zip(channel.row(x)) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok((
        is_extremal(&ext.channel, budget) && check_ldp(&ext.channel, budget),
        worst,
    ))
}

fn extremal(seed: u64) -> Result<SuiteReport> {
    let mut rng = trial_rng(seed, 0);
    let mut worst: f64 = 0.0;
    let mut all_extremal = true;
    for i in 0..200 {
        let budget = PrivacyBudget::from_exp(if i % 2 == 0 { 2.0 } else { 4.0 })?;
        let channel = random_private_channel(3, 4, budget, &mut rng)?;
        let (ok, dev) = extremalize_deviation(&channel, budget)?;
        all_extremal &= ok;
        worst = worst.max(dev);
    }
    for _ in 0..1000 {
        let k = rng.gen_range(1..=8);
        let e = rng.gen_range(1.1..10.0);
        let budget = PrivacyBudget::from_exp(e)?;
        let v: Vec<f64> = (0..k).map(|_| rng.gen_range(1.0..=e)).collect();
        let dec = convex_vertex_decomposition(&v, budget)?;
        for (a, b) in dec.reconstruct().iter().zip(&v) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(SuiteReport {
        suite: Suite::Extremal,
        checked: 1200,
        max_deviation: worst,
        tolerance: 1e-12,
        pass: all_extremal && worst <= 1e-12,
        grid: "200 random private 3x4 channels, e^eps in {2, 4}; 1000 random cube points, k <= 8"
            .into(),
    })
}

fn lemimp() -> Result<SuiteReport> {
    let mut checked = 0;
    let mut worst_excess = f64::NEG_INFINITY;
    for k in (2..=40).step_by(2) {
        for e in [1.2, 2.0, 3.0, 5.0, 10.0] {
            let budget = PrivacyBudget::from_exp(e)?;
            let bound = lemimp_bound(k, budget)?;
            for t in 1..=k / 2 {
                checked += 1;
                worst_excess = worst_excess.max(lemimp_objective(t, k, budget)? / bound - 1.0);
            }
        }
    }
    let tight = PrivacyBudget::from_exp(3.0)?;
    let gap = (lemimp_objective(4, 8, tight)? - 1.0 / 16.0)
        .abs()
        .max((lemimp_bound(8, tight)? - 1.0 / 16.0).abs());
    Ok(SuiteReport {
        suite: Suite::Lemimp,
        checked: checked + 1,
        max_deviation: worst_excess.max(gap),
        tolerance: 1e-12,
        pass: worst_excess <= 1e-12 && gap <= 1e-15,
        grid: "k in {2, 4, ..., 40}, e^eps in {1.2, 2, 3, 5, 10}, t in 1..=k/2; tightness k=8 e^eps=3 t=4; deviation is max(objective/bound - 1)".into(),
    })
}
