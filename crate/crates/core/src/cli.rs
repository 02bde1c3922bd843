//! The `subset-ldp` command line. JSON (or CSV) goes to stdout, notes to
//! stderr. Exit codes: 0 ok, 2 usage or invalid input, 3 violated hypothesis,
//! 4 failed self-check.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::estimation::{CountVector, Estimator};
use crate::mechanisms::{
    build_channel, sample_rappor, sample_subset, BitObservation, MechanismSpec, OutputLabel,
    SubsetObservation,
};
use crate::montecarlo::{simulate_with, trial_rng, CategorySampler, SimulationPlan};
use crate::numfmt::{sig17, to_json};
use crate::risk::{
    bounds_certificate, compare_schemes, default_d, l1_risk_subset_asymptotic, l22_risk_subset,
    rappor_worstcase_risks, select_d,
};
use crate::simplex::{clip_to_unit_cube, LossKind, PrivacyBudget, ProbabilityVector};
use crate::verify::{run_suite, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "subset-ldp",
    version,
    about = "Locally private distribution estimation with k-subset, k-RR and k-RAPPOR"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Privatize samples; categories are one-based.
    Sample(SampleArgs),
    /// Print the full channel matrix.
    Channel(ChannelArgs),
    /// Estimate the distribution from privatized counts or reports.
    Estimate(EstimateArgs),
    /// Risk of a mechanism under a given distribution.
    Risk(RiskArgs),
    /// Choose the subset size.
    #[command(name = "select-d")]
    SelectD(SelectDArgs),
    /// Lower bound, exact worst-case risk and upper bound side by side.
    Bounds(BoundsArgs),
    /// Ratios of the recommended subset mechanism's risk to RAPPOR and RR.
    Compare(CompareArgs),
    /// Monte Carlo estimate of the expected losses.
    Simulate(SimulateArgs),
    /// Run a self-audit suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Subset,
    Rr,
    Rappor,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct BudgetArgs {
    /// Privacy parameter on the natural-log scale.
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    /// The privacy level e^eps directly.
    #[arg(long = "exp-epsilon", allow_hyphen_values = true)]
    pub exp_epsilon: Option<f64>,
}

impl BudgetArgs {
    fn budget(&self) -> Result<PrivacyBudget> {
        match (self.epsilon, self.exp_epsilon) {
            (Some(eps), _) => PrivacyBudget::new(eps),
            (None, Some(e)) => PrivacyBudget::from_exp(e),
            (None, None) => unreachable!("clap requires one budget flag"),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct MechArgs {
    #[arg(long, value_enum, default_value = "subset")]
    pub scheme: SchemeArg,
    #[arg(long)]
    pub k: usize,
    /// Subset size; defaults to ceil(k / (e^eps + 1)).
    #[arg(long)]
    pub d: Option<usize>,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

impl MechArgs {
    fn spec(&self) -> Result<MechanismSpec> {
        let budget = self.budget.budget()?;
        match self.scheme {
            SchemeArg::Subset => {
                let d = self.d.unwrap_or_else(|| default_d(self.k, budget));
                MechanismSpec::subset(self.k, d, budget)
            }
            SchemeArg::Rr => MechanismSpec::rr(self.k, budget),
            SchemeArg::Rappor => MechanismSpec::rappor(self.k, budget),
        }
    }
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub mech: MechArgs,
    /// Privatize this one-based category every time instead of drawing from --dist.
    #[arg(long)]
    pub input: Option<usize>,
    /// `uniform`, a comma-separated list, or a CSV file.
    #[arg(long, default_value = "uniform")]
    pub dist: String,
    #[arg(long, default_value_t = 10)]
    pub count: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ChannelArgs {
    #[command(flatten)]
    pub mech: MechArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub mech: MechArgs,
    /// Per-category counts of ones, comma-separated; needs --n.
    #[arg(long, conflicts_with = "reports")]
    pub counts: Option<String>,
    #[arg(long, requires = "counts")]
    pub n: Option<u64>,
    /// File with one privatized report per line ("1+3" or "0110"), or the
    /// JSON written by `sample`.
    #[arg(long, required_unless_present = "counts")]
    pub reports: Option<std::path::PathBuf>,
    /// Also report the estimate clipped to [0, 1]^k.
    #[arg(long)]
    pub clip: bool,
}

#[derive(Debug, Args)]
pub struct RiskArgs {
    #[command(flatten)]
    pub mech: MechArgs,
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value = "l22")]
    pub loss: LossKind,
    #[arg(long, default_value = "uniform")]
    pub dist: String,
}

#[derive(Debug, Args)]
pub struct SelectDArgs {
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[arg(long, default_value = "l22")]
    pub loss: LossKind,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// With --grid, a comma-separated list.
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<usize>,
    /// With --grid, a comma-separated list.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub epsilon: Vec<f64>,
    /// With --grid, a comma-separated list.
    #[arg(
        long = "exp-epsilon",
        value_delimiter = ',',
        conflicts_with = "epsilon"
    )]
    pub exp_epsilon: Vec<f64>,
    /// With --grid, a comma-separated list.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u64>,
    /// With --grid, a comma-separated list.
    #[arg(long, value_delimiter = ',', default_value = "l22")]
    pub loss: Vec<LossKind>,
    /// Emit a CSV row per grid point instead of one JSON certificate.
    #[arg(long)]
    pub grid: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[arg(long, default_value_t = 1)]
    pub n: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub mech: MechArgs,
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "uniform")]
    pub dist: String,
    /// Restrict to these losses (comma-separated); default both.
    #[arg(long, value_delimiter = ',')]
    pub loss: Vec<LossKind>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Include every trial's loss in the output.
    #[arg(long)]
    pub per_trial: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Entry point of the binary. Returns the process exit code.
pub fn main() -> i32 {
    run(std::env::args_os())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let mut stdout = std::io::stdout().lock();
    match execute(&cli.command) {
        Ok(Outcome { text, code }) => {
            let _ = stdout.write_all(text.as_bytes());
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_hypothesis_violation() {
                EXIT_HYPOTHESIS
            } else {
                EXIT_USAGE
            }
        }
    }
}

/// Text for stdout and the exit code.
#[derive(Debug)]
pub struct Outcome {
    pub text: String,
    pub code: i32,
}

impl Outcome {
    fn json<T: Serialize>(value: &T) -> Result<Self> {
        let mut text = to_json(value).map_err(|e| Error::Parse(e.to_string()))?;
        text.push('\n');
        Ok(Self {
            text,
            code: EXIT_OK,
        })
    }
}

pub fn execute(command: &Command) -> Result<Outcome> {
    match command {
        Command::Sample(a) => cmd_sample(a),
        Command::Channel(a) => cmd_channel(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Risk(a) => cmd_risk(a),
        Command::SelectD(a) => {
            let choice = select_d(a.k, a.budget.budget()?, a.loss)?;
            Outcome::json(&json!({ "k": a.k, "loss": a.loss, "choice": choice }))
        }
        Command::Bounds(a) => cmd_bounds(a),
        Command::Compare(a) => Outcome::json(&compare_schemes(a.k, a.budget.budget()?, a.n)?),
        Command::Simulate(a) => with_threads(a.threads, || cmd_simulate(a)),
        Command::Verify(a) => with_threads(a.threads, || {
            let report = run_suite(a.suite, a.seed)?;
            eprintln!(
                "{}: {}",
                if report.pass { "PASS" } else { "FAIL" },
                report.grid
            );
            let mut out = Outcome::json(&report)?;
            if !report.pass {
                out.code = EXIT_MISMATCH;
            }
            Ok(out)
        }),
    }
}

fn with_threads(
    threads: Option<usize>,
    job: impl FnOnce() -> Result<Outcome> + Send,
) -> Result<Outcome> {
    match threads {
        None => job(),
        Some(0) => Err(Error::InvalidPlan("--threads must be at least 1".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidPlan(e.to_string()))?
            .install(job),
    }
}

/// `uniform`, an inline comma-separated list, or a path to a CSV file.
pub fn parse_dist(arg: &str, k: usize) -> Result<ProbabilityVector> {
    let p = if arg.eq_ignore_ascii_case("uniform") {
        ProbabilityVector::uniform(k)?
    } else if std::path::Path::new(arg).is_file() {
        let text = std::fs::read_to_string(arg).map_err(|e| Error::Parse(format!("{arg}: {e}")))?;
        ProbabilityVector::parse_csv(&text)?
    } else {
        ProbabilityVector::parse_csv(arg)?
    };
    if p.k() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: p.k(),
        });
    }
    Ok(p)
}

fn cmd_sample(a: &SampleArgs) -> Result<Outcome> {
    let spec = a.mech.spec()?;
    let k = spec.k();
    let fixed = match a.input {
        Some(0) => return Err(Error::Parse("--input is one-based".into())),
        Some(i) => {
            spec.check_input(i - 1)?;
            Some(i - 1)
        }
        None => None,
    };
    let raw = CategorySampler::new(&parse_dist(&a.dist, k)?);
    let mut rng = trial_rng(a.seed, 0);
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for _ in 0..a.count {
        let x = fixed.unwrap_or_else(|| raw.sample(&mut rng));
        let label = match spec.subset_size() {
            Some(_) => OutputLabel::Subset(sample_subset(&spec, x, &mut rng)?),
            None => OutputLabel::Bits(sample_rappor(&spec, x, &mut rng)?),
        };
        inputs.push(x + 1);
        outputs.push(label);
    }
    Outcome::json(
        &json!({ "mechanism": spec, "seed": a.seed, "inputs": inputs, "outputs": outputs }),
    )
}

fn cmd_channel(a: &ChannelArgs) -> Result<Outcome> {
    let spec = a.mech.spec()?;
    let channel = build_channel(&spec)?;
    match a.format {
        Format::Csv => Ok(Outcome {
            text: channel.to_csv(),
            code: EXIT_OK,
        }),
        Format::Json => {
            let rows: Vec<&[f64]> = (0..channel.k()).map(|x| channel.row(x)).collect();
            Outcome::json(&json!({ "mechanism": spec, "labels": channel.labels(), "rows": rows }))
        }
    }
}

/// Report labels from a line-per-report file or from `sample` JSON output.
fn report_labels(text: &str) -> Result<Vec<String>> {
    if text.trim_start().starts_with('{') {
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let outputs = v["outputs"]
            .as_array()
            .ok_or_else(|| Error::Parse("JSON reports need an \"outputs\" array".into()))?;
        return outputs
            .iter()
            .map(|o| {
                o.as_str()
                    .map(str::to_owned)
                    .ok_or_else(|| Error::Parse(format!("bad report {o}")))
            })
            .collect();
    }
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect())
}

fn cmd_estimate(a: &EstimateArgs) -> Result<Outcome> {
    let spec = a.mech.spec()?;
    let k = spec.k();
    let counts = match (&a.counts, &a.reports) {
        (Some(list), _) => {
            let counts = list
                .split(',')
                .map(|f| {
                    f.trim()
                        .parse::<u64>()
                        .map_err(|e| Error::Parse(format!("{f:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if counts.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: counts.len(),
                });
            }
            let n =
                a.n.ok_or_else(|| Error::Parse("--counts needs --n".into()))?;
            CountVector::from_counts(counts, n)?
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            let mut counts = CountVector::new(k);
            for line in report_labels(&text)? {
                let line = line.as_str();
                match spec.subset_size() {
                    Some(d) => {
                        let obs = SubsetObservation::parse_label(k, line)?;
                        if obs.len() != d {
                            return Err(Error::WrongSubsetSize {
                                expected: d,
                                found: obs.len(),
                            });
                        }
                        counts.accumulate(&obs)?;
                    }
                    None => counts.accumulate(&BitObservation::parse_label(line)?)?,
                }
            }
            counts
        }
        (None, None) => return Err(Error::Parse("give --counts or --reports".into())),
    };
    let estimate = Estimator::for_spec(&spec)?.estimate(&counts)?;
    let clipped = a.clip.then(|| clip_to_unit_cube(&estimate).into_vec());
    Outcome::json(&json!({
        "mechanism": spec,
        "n": counts.n(),
        "estimate": estimate.as_slice(),
        "clipped": clipped,
    }))
}

fn cmd_risk(a: &RiskArgs) -> Result<Outcome> {
    let spec = a.mech.spec()?;
    let p = parse_dist(&a.dist, spec.k())?;
    let report = match spec.subset_size() {
        Some(d) => match a.loss {
            LossKind::L2Squared => l22_risk_subset(spec.k(), d, spec.budget(), a.n, &p)?,
            LossKind::L1 => l1_risk_subset_asymptotic(spec.k(), d, spec.budget(), a.n, &p)?,
        },
        None => {
            if !p.is_uniform() {
                return Err(Error::UnsupportedScheme(
                    "rappor risk away from the uniform distribution",
                ));
            }
            let (l22, l1) = rappor_worstcase_risks(spec.k(), spec.budget(), a.n)?;
            if a.loss == LossKind::L1 {
                l1
            } else {
                l22
            }
        }
    };
    if a.loss == LossKind::L1 {
        note_l1();
    }
    Outcome::json(&report)
}

fn bounds_budgets(a: &BoundsArgs) -> Result<Vec<PrivacyBudget>> {
    let budgets = if a.exp_epsilon.is_empty() {
        a.epsilon
            .iter()
            .map(|&e| PrivacyBudget::new(e))
            .collect::<Result<Vec<_>>>()?
    } else {
        a.exp_epsilon
            .iter()
            .map(|&e| PrivacyBudget::from_exp(e))
            .collect::<Result<Vec<_>>>()?
    };
    if budgets.is_empty() {
        return Err(Error::Parse("give --epsilon or --exp-epsilon".into()));
    }
    Ok(budgets)
}

fn note_l1() {
    eprintln!("note: L1 values are the leading 1/sqrt(n) term of the expected loss; the remainder is not bounded");
}

fn cmd_bounds(a: &BoundsArgs) -> Result<Outcome> {
    let budgets = bounds_budgets(a)?;
    if a.loss.contains(&LossKind::L1) {
        note_l1();
    }
    if !a.grid {
        if a.k.len() != 1 || budgets.len() != 1 || a.n.len() != 1 || a.loss.len() != 1 {
            return Err(Error::Parse("lists of values need --grid".into()));
        }
        let cert = bounds_certificate(a.k[0], budgets[0], a.n[0], a.loss[0])?;
        if !cert.is_ordered() {
            eprintln!("lower <= exact <= upper does not hold");
        }
        return Outcome::json(&cert);
    }
    let mut text =
        String::from("k,epsilon,exp_epsilon,n,loss,d,lower,exact_worst_case,upper,ordered\n");
    for &k in &a.k {
        for &budget in &budgets {
            for &n in &a.n {
                for &loss in &a.loss {
                    match bounds_certificate(k, budget, n, loss) {
                        Ok(c) => {
                            let _ = writeln!(
                                text,
                                "{},{},{},{},{},{},{},{},{},{}",
                                c.k,
                                sig17(c.epsilon),
                                sig17(c.exp_epsilon),
                                c.n,
                                c.loss.short_name(),
                                c.d,
                                sig17(c.lower),
                                sig17(c.exact_worst_case),
                                sig17(c.upper),
                                c.is_ordered()
                            );
                        }
                        Err(e) if e.is_hypothesis_violation() => {
                            eprintln!(
                                "skipped k={k} e^eps={} n={n} {}: {e}",
                                budget.exp_epsilon(),
                                loss.short_name()
                            );
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }
    Ok(Outcome {
        text,
        code: EXIT_OK,
    })
}

fn cmd_simulate(a: &SimulateArgs) -> Result<Outcome> {
    let spec = a.mech.spec()?;
    let p = parse_dist(&a.dist, spec.k())?;
    let mut plan = SimulationPlan::new(spec, p, a.n, a.trials, a.seed);
    if !a.loss.is_empty() {
        plan = plan.with_losses(&a.loss);
    }
    Outcome::json(&simulate_with(&plan, a.per_trial)?)
}
