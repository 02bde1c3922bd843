//! Privatizes a skewed population with each scheme and recovers its
//! histogram from the noisy reports.
//!
//! cargo run --release --example estimate

use subset_ldp::estimation::Estimator;
use subset_ldp::mechanisms::{sample_rappor, sample_subset};
use subset_ldp::montecarlo::{trial_rng, CategorySampler};
use subset_ldp::risk::default_d;
use subset_ldp::{CountVector, MechanismSpec, PrivacyBudget, ProbabilityVector};

fn main() -> subset_ldp::Result<()> {
    let k = 8;
    let truth = ProbabilityVector::new(vec![0.3, 0.2, 0.15, 0.1, 0.1, 0.07, 0.05, 0.03])?;
    let budget = PrivacyBudget::new(1.5)?;
    let n = 200_000;
    let population = CategorySampler::new(&truth);

    for spec in [
        MechanismSpec::subset(k, default_d(k, budget), budget)?,
        MechanismSpec::rr(k, budget)?,
        MechanismSpec::rappor(k, budget)?,
    ] {
        let mut rng = trial_rng(1, 0);
        let mut counts = CountVector::new(k);
        for _ in 0..n {
            let x = population.sample(&mut rng);
            match spec.subset_size() {
                Some(_) => counts.accumulate(&sample_subset(&spec, x, &mut rng)?)?,
                None => counts.accumulate(&sample_rappor(&spec, x, &mut rng)?)?,
            }
        }
        let estimate = Estimator::for_spec(&spec)?.estimate(&counts)?;
        let shown: Vec<String> = estimate
            .as_slice()
            .iter()
            .map(|v| format!("{v:.3}"))
            .collect();
        println!("{:<7} {}", spec.scheme().name(), shown.join(" "));
    }
    let shown: Vec<String> = truth.as_slice().iter().map(|v| format!("{v:.3}")).collect();
    println!("{:<7} {}", "truth", shown.join(" "));
    Ok(())
}
