//! Tabulates a small subset channel, checks its privacy level and draws a few
//! reports from it.
//!
//! cargo run --example channel

use subset_ldp::mechanisms::{build_channel, privacy_ratio, SubsetSampler};
use subset_ldp::montecarlo::trial_rng;
use subset_ldp::{MechanismSpec, PrivacyBudget};

fn main() -> subset_ldp::Result<()> {
    let spec = MechanismSpec::subset(4, 2, PrivacyBudget::from_exp(3.0)?)?;
    let channel = build_channel(&spec)?;
    print!("{}", channel.to_csv());
    println!(
        "worst column ratio: {} (budget e^eps = 3)",
        privacy_ratio(&channel)
    );

    let mut sampler = SubsetSampler::new(&spec)?;
    let mut rng = trial_rng(7, 0);
    let reports: Vec<String> = (0..8)
        .map(|_| sampler.sample(0, &mut rng).to_string())
        .collect();
    println!("eight reports for category 1: {}", reports.join(" "));
    Ok(())
}
