//! Monte Carlo losses against the closed forms for the subset mechanism and
//! RAPPOR.
//!
//! cargo run --release --example simulate

use subset_ldp::montecarlo::{simulate, SimulationPlan};
use subset_ldp::risk::{l1_risk_uniform, l22_risk_uniform, rappor_worstcase_risks};
use subset_ldp::{LossKind, MechanismSpec, PrivacyBudget, ProbabilityVector};

fn main() -> subset_ldp::Result<()> {
    let (k, n, trials) = (4, 1000, 20_000);
    let uniform = ProbabilityVector::uniform(k)?;

    let budget = PrivacyBudget::from_exp(3.0)?;
    let spec = MechanismSpec::subset(k, 2, budget)?;
    let result = simulate(&SimulationPlan::new(spec, uniform.clone(), n, trials, 1))?;
    report(
        "subset d=2",
        result.loss(LossKind::L2Squared),
        l22_risk_uniform(k, 2, budget, n)?.value,
    );
    report(
        "subset d=2 (l1)",
        result.loss(LossKind::L1),
        l1_risk_uniform(k, 2, budget, n)?.value,
    );

    let budget = PrivacyBudget::from_exp(4.0)?;
    let spec = MechanismSpec::rappor(k, budget)?;
    let result = simulate(&SimulationPlan::new(spec, uniform, n, trials, 1))?;
    let (l22, l1) = rappor_worstcase_risks(k, budget, n)?;
    report("rappor", result.loss(LossKind::L2Squared), l22.value);
    report("rappor (l1)", result.loss(LossKind::L1), l1.value);
    Ok(())
}

fn report(name: &str, summary: Option<&subset_ldp::montecarlo::LossSummary>, formula: f64) {
    let s = summary.expect("loss was simulated");
    println!(
        "{name:<16} simulated {:.5e} +- {:.1e}   formula {formula:.5e}   z = {:+.2}",
        s.mean,
        s.stderr.unwrap_or(0.0),
        s.z_score(formula).unwrap_or(0.0)
    );
}
