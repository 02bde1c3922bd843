//! Worst-case risk as a function of the subset size, and the size picked by
//! `select_d`.
//!
//! cargo run --example choose_d

use subset_ldp::reference::brute_force_select_d;
use subset_ldp::risk::{l1_risk_uniform, l22_risk_uniform, select_d};
use subset_ldp::{LossKind, PrivacyBudget};

fn main() -> subset_ldp::Result<()> {
    let (k, n) = (40, 10_000);
    for eps in [0.5, 1.0, 2.0, 3.0] {
        let budget = PrivacyBudget::new(eps)?;
        println!(
            "eps = {eps}: k/(e^eps+1) = {:.2}",
            k as f64 / (budget.exp_epsilon() + 1.0)
        );
        for d in [1, 2, 4, 6, 8, 12, 16, 20] {
            println!(
                "  d = {d:>2}  l22 {:.4e}  l1 {:.4e}",
                l22_risk_uniform(k, d, budget, n)?.value,
                l1_risk_uniform(k, d, budget, n)?.value
            );
        }
        for loss in LossKind::ALL {
            let choice = select_d(k, budget, loss)?;
            println!(
                "  {}: d* = {} (candidates {}, {}; exhaustive search says {})",
                loss.short_name(),
                choice.d_star,
                choice.floor,
                choice.ceil,
                brute_force_select_d(k, budget, loss)?
            );
        }
    }
    Ok(())
}
