//! Refines a random private channel into one whose column ratios are all 1
//! or e^eps, then merges it back to show nothing was lost.
//!
//! cargo run --example extremalize

use subset_ldp::mechanisms::{extremalize, is_extremal, privacy_ratio};
use subset_ldp::montecarlo::trial_rng;
use subset_ldp::verify::random_private_channel;
use subset_ldp::PrivacyBudget;

fn main() -> subset_ldp::Result<()> {
    let budget = PrivacyBudget::from_exp(3.0)?;
    let channel = random_private_channel(3, 4, budget, &mut trial_rng(5, 0))?;
    println!(
        "original ({} outputs, ratio {:.4}):",
        channel.outputs(),
        privacy_ratio(&channel)
    );
    print!("{}", channel.to_csv());

    let ext = extremalize(&channel, budget)?;
    println!(
        "extremal ({} outputs, extremal: {}), output map {:?}:",
        ext.channel.outputs(),
        is_extremal(&ext.channel, budget),
        ext.output_map
    );
    print!("{}", ext.channel.to_csv());

    let worst = (0..3)
        .flat_map(|x| {
            let merged = ext.pushforward_row(x, channel.outputs());
            merged
                .into_iter()
                .zip(channel.row(x).to_vec())
                .map(|(a, b)| (a - b).abs())
        })
        .fold(0.0, f64::max);
    println!("largest entry change after merging back: {worst:.1e}");
    Ok(())
}
