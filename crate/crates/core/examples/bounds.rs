//! Minimax lower bound, exact worst-case risk of the recommended subset
//! mechanism and its upper bound for a range of alphabet sizes.
//!
//! cargo run --example bounds

use subset_ldp::risk::{bounds_certificate, lower_bound_threshold};
use subset_ldp::{LossKind, PrivacyBudget};

fn main() -> subset_ldp::Result<()> {
    let budget = PrivacyBudget::from_exp(4.0)?;
    for loss in LossKind::ALL {
        println!("{}:", loss.short_name());
        for k in [8, 16, 32, 64, 128] {
            let n = (2.0 * lower_bound_threshold(k, budget)).ceil() as u64;
            let c = bounds_certificate(k, budget, n, loss)?;
            println!(
                "  k={k:>3} n={n:>6} d={:>2}  {:.3e} <= {:.3e} <= {:.3e}  upper/lower = {:.1}",
                c.d,
                c.lower,
                c.exact_worst_case,
                c.upper,
                c.upper / c.lower
            );
        }
    }
    Ok(())
}
