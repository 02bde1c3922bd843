//! Ratio of the subset mechanism's worst-case risk to RAPPOR and RR across
//! privacy levels, printed as CSV.
//!
//! cargo run --example compare

use subset_ldp::risk::compare_schemes;
use subset_ldp::PrivacyBudget;

fn main() -> subset_ldp::Result<()> {
    println!("k,epsilon,d,l22_vs_rappor,l22_vs_rr,l1_vs_rappor,l1_vs_rr,status");
    for k in [100, 500, 2000] {
        for eps in [0.5, 1.0, 2.0, 3.0, 4.0, 5.0] {
            let c = compare_schemes(k, PrivacyBudget::new(eps)?, 1)?;
            let r = c.exact_ratios;
            println!(
                "{k},{eps},{},{:.4},{:.4},{:.4},{:.4},{}",
                c.d, r.l22_vs_rappor, r.l22_vs_rr, r.l1_vs_rappor, r.l1_vs_rr, c.status
            );
        }
    }
    Ok(())
}
