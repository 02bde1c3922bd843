//! Seeded end-to-end simulation: draw raw samples from `p`, privatize,
//! estimate, and score the losses, repeated over independent trials.
//!
//! Trial `t` of a plan with seed `s` uses a ChaCha8 generator seeded with `s`
//! on stream `t`. Within a trial the `n` samples are processed in order, and
//! each consumes one uniform for its raw category followed by the mechanism's
//! own draws. Results therefore depend only on `(plan, t)`, never on
//! scheduling or thread count.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::{CountVector, Estimator};
use crate::mechanisms::{subset_rank, MechanismSpec, RapporSampler, Scheme, SubsetSampler};
use crate::simplex::{loss_slices, EstimateVector, LossKind, ProbabilityVector};

/// Largest alphabet [`empirical_channel`] will tabulate.
pub const MAX_EMPIRICAL_OUTPUTS: f64 = 1e4;

/// The generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Inverse-CDF sampler over a fixed distribution.
#[derive(Debug, Clone)]
pub struct CategorySampler {
    cumulative: Vec<f64>,
    last_positive: usize,
}

impl CategorySampler {
    pub fn new(p: &ProbabilityVector) -> Self {
        let mut acc = 0.0;
        let cumulative = p
            .as_slice()
            .iter()
            .map(|&x| {
                acc += x;
                acc
            })
            .collect();
        let last_positive = p.as_slice().iter().rposition(|&x| x > 0.0).unwrap_or(0);
        Self {
            cumulative,
            last_positive,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.last_positive)
    }
}

/// Privatizes raw categories straight into a [`CountVector`].
#[derive(Debug, Clone)]
enum Privatizer {
    Subset {
        sampler: SubsetSampler,
        d: usize,
        scratch: Vec<usize>,
    },
    Rappor(RapporSampler),
}

impl Privatizer {
    fn new(spec: &MechanismSpec) -> Result<Self> {
        Ok(match spec.scheme() {
            Scheme::Rappor { .. } => Privatizer::Rappor(RapporSampler::new(spec)?),
            _ => Privatizer::Subset {
                sampler: SubsetSampler::new(spec)?,
                d: spec.subset_size().unwrap_or(1),
                scratch: Vec::new(),
            },
        })
    }

    fn privatize_into<R: Rng + ?Sized>(
        &mut self,
        input: usize,
        rng: &mut R,
        counts: &mut CountVector,
    ) {
        match self {
            Privatizer::Subset {
                sampler, scratch, ..
            } => {
                sampler.sample_into(input, rng, scratch);
                counts.record_ones(scratch);
            }
            Privatizer::Rappor(sampler) => {
                sampler.sample_ones(input, rng, |i| counts.bump(i));
                counts.finish_report();
            }
        }
    }

    fn ones_per_report(&self) -> Option<usize> {
        match self {
            Privatizer::Subset { d, .. } => Some(*d),
            Privatizer::Rappor(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationPlan {
    pub spec: MechanismSpec,
    pub p: ProbabilityVector,
    /// Samples per trial.
    pub n: u64,
    pub trials: u64,
    pub seed: u64,
    pub losses: Vec<LossKind>,
}

impl SimulationPlan {
    pub fn new(spec: MechanismSpec, p: ProbabilityVector, n: u64, trials: u64, seed: u64) -> Self {
        Self {
            spec,
            p,
            n,
            trials,
            seed,
            losses: LossKind::ALL.to_vec(),
        }
    }

    pub fn with_losses(mut self, losses: &[LossKind]) -> Self {
        self.losses = losses.to_vec();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidPlan("n must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidPlan("trials must be at least 1".into()));
        }
        if self.p.k() != self.spec.k() {
            return Err(Error::DimensionMismatch {
                expected: self.spec.k(),
                found: self.p.k(),
            });
        }
        if self.losses.is_empty() {
            return Err(Error::InvalidPlan("no loss selected".into()));
        }
        Ok(())
    }
}

/// Privatized counts of one trial.
pub fn run_trial_counts(plan: &SimulationPlan, trial: u64) -> Result<CountVector> {
    plan.validate()?;
    let raw = CategorySampler::new(&plan.p);
    let mut privatizer = Privatizer::new(&plan.spec)?;
    let mut rng = trial_rng(plan.seed, trial);
    Ok(privatize_many(plan, &raw, &mut privatizer, &mut rng))
}

fn privatize_many(
    plan: &SimulationPlan,
    raw: &CategorySampler,
    privatizer: &mut Privatizer,
    rng: &mut ChaCha8Rng,
) -> CountVector {
    let mut counts = CountVector::new(plan.spec.k());
    for _ in 0..plan.n {
        let x = raw.sample(rng);
        privatizer.privatize_into(x, rng, &mut counts);
    }
    if let Some(d) = privatizer.ones_per_report() {
        debug_assert_eq!(counts.total(), counts.n() * d as u64);
    }
    counts
}

/// The estimate produced in one trial.
pub fn run_trial_estimate(plan: &SimulationPlan, trial: u64) -> Result<EstimateVector> {
    let counts = run_trial_counts(plan, trial)?;
    Estimator::for_spec(&plan.spec)?.estimate(&counts)
}

/// Losses of one trial, in the order of `plan.losses`.
pub fn run_trial(plan: &SimulationPlan, trial: u64) -> Result<Vec<f64>> {
    let estimate = run_trial_estimate(plan, trial)?;
    Ok(plan
        .losses
        .iter()
        .map(|&kind| loss_slices(kind, estimate.as_slice(), plan.p.as_slice()))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossSummary {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(trials)`; `None` for a single trial.
    pub stderr: Option<f64>,
    pub trials: u64,
}

impl LossSummary {
    pub fn from_values(values: &[f64]) -> Self {
        let trials = values.len() as u64;
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let stderr = (values.len() > 1).then(|| {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (values.len() - 1) as f64).sqrt() / (values.len() as f64).sqrt()
        });
        Self {
            mean,
            stderr,
            trials,
        }
    }

    /// `|mean - target|` in units of the standard error.
    pub fn z_score(&self, target: f64) -> Option<f64> {
        self.stderr.map(|se| (self.mean - target).abs() / se)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationResult {
    pub scheme: &'static str,
    pub k: usize,
    pub d: Option<usize>,
    pub epsilon: f64,
    pub n: u64,
    pub trials: u64,
    pub seed: u64,
    /// Keyed by `"l1"` / `"l22"`.
    pub losses: BTreeMap<&'static str, LossSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_trial: Option<BTreeMap<&'static str, Vec<f64>>>,
}

impl SimulationResult {
    pub fn loss(&self, kind: LossKind) -> Option<&LossSummary> {
        self.losses.get(kind.short_name())
    }
}

pub fn simulate(plan: &SimulationPlan) -> Result<SimulationResult> {
    simulate_with(plan, false)
}

/// Runs every trial (in parallel) and aggregates in trial order.
pub fn simulate_with(plan: &SimulationPlan, keep_per_trial: bool) -> Result<SimulationResult> {
    plan.validate()?;
    let estimator = Estimator::for_spec(&plan.spec)?;
    let raw = CategorySampler::new(&plan.p);
    let base = Privatizer::new(&plan.spec)?;
    let k = plan.spec.k();

    let per_trial: Vec<Vec<f64>> = (0..plan.trials)
        .into_par_iter()
        .map_init(
            || vec![0.0; k],
            |estimate, t| {
                // A fresh sampler per trial: its permutation state must not leak across trials.
                let mut privatizer = base.clone();
                let mut rng = trial_rng(plan.seed, t);
                let counts = privatize_many(plan, &raw, &mut privatizer, &mut rng);
                estimator.estimate_into(&counts, estimate);
                plan.losses
                    .iter()
                    .map(|&kind| loss_slices(kind, estimate, plan.p.as_slice()))
                    .collect()
            },
        )
        .collect();

    let mut losses = BTreeMap::new();
    let mut kept = BTreeMap::new();
    for (j, &kind) in plan.losses.iter().enumerate() {
        let values: Vec<f64> = per_trial.iter().map(|v| v[j]).collect();
        losses.insert(kind.short_name(), LossSummary::from_values(&values));
        if keep_per_trial {
            kept.insert(kind.short_name(), values);
        }
    }
    Ok(SimulationResult {
        scheme: plan.spec.scheme().name(),
        k,
        d: plan.spec.subset_size(),
        epsilon: plan.spec.budget().epsilon(),
        n: plan.n,
        trials: plan.trials,
        seed: plan.seed,
        losses,
        per_trial: keep_per_trial.then_some(kept),
    })
}

/// Output frequencies of `draws` privatizations of `input`, in the canonical
/// output order of [`crate::mechanisms::build_channel`].
pub fn empirical_channel(
    spec: &MechanismSpec,
    input: usize,
    draws: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    let size = spec.alphabet_size();
    if size > MAX_EMPIRICAL_OUTPUTS {
        return Err(Error::AlphabetTooLarge {
            size,
            limit: MAX_EMPIRICAL_OUTPUTS,
        });
    }
    if draws == 0 {
        return Err(Error::EmptySample);
    }
    spec.check_input(input)?;
    let k = spec.k();
    let mut freq = vec![0u64; size as usize];
    let mut rng = trial_rng(seed, input as u64);
    match spec.scheme() {
        Scheme::Rappor { .. } => {
            let sampler = RapporSampler::new(spec)?;
            for _ in 0..draws {
                let mut index = 0usize;
                sampler.sample_ones(input, &mut rng, |i| index |= 1 << (k - 1 - i));
                freq[index] += 1;
            }
        }
        _ => {
            let mut sampler = SubsetSampler::new(spec)?;
            let mut members = Vec::new();
            for _ in 0..draws {
                sampler.sample_into(input, &mut rng, &mut members);
                members.sort_unstable();
                freq[subset_rank(k, &members)] += 1;
            }
        }
    }
    Ok(freq.into_iter().map(|c| c as f64 / draws as f64).collect())
}

/// Total variation distance, `sum |a_i - b_i| / 2`.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}
