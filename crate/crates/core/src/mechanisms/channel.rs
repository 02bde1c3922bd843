use std::fmt::Write as _;

use super::subset::binomial;
use super::{BitObservation, MechanismSpec, OutputLabel, Scheme, SubsetObservation};
use crate::error::{Error, Result};
use crate::numfmt::sig17;
use crate::simplex::PrivacyBudget;

/// Largest output alphabet `build_channel` will materialize.
pub const MAX_CHANNEL_OUTPUTS: f64 = 1e6;

const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// A row-stochastic `k x L` matrix: row `x` is the output law given input `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    k: usize,
    outputs: usize,
    probs: Vec<f64>,
    labels: Vec<OutputLabel>,
}

impl ChannelMatrix {
    /// Builds a channel from rows. Labels default to output indices when `labels` is `None`.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Option<Vec<OutputLabel>>) -> Result<Self> {
        let k = rows.len();
        let outputs = rows.first().map_or(0, Vec::len);
        let mut probs = Vec::with_capacity(k * outputs);
        for (x, row) in rows.into_iter().enumerate() {
            if row.len() != outputs {
                return Err(Error::DimensionMismatch {
                    expected: outputs,
                    found: row.len(),
                });
            }
            check_row(x, &row)?;
            probs.extend(row);
        }
        let labels = labels.unwrap_or_else(|| (0..outputs).map(OutputLabel::Index).collect());
        if labels.len() != outputs {
            return Err(Error::DimensionMismatch {
                expected: outputs,
                found: labels.len(),
            });
        }
        Ok(Self {
            k,
            outputs,
            probs,
            labels,
        })
    }

    pub(crate) fn from_columns(k: usize, columns: Vec<Vec<f64>>) -> Result<Self> {
        let outputs = columns.len();
        let mut probs = vec![0.0; k * outputs];
        for (y, col) in columns.iter().enumerate() {
            for (x, &q) in col.iter().enumerate() {
                probs[x * outputs + y] = q;
            }
        }
        for x in 0..k {
            check_row(x, &probs[x * outputs..(x + 1) * outputs])?;
        }
        Ok(Self {
            k,
            outputs,
            probs,
            labels: (0..outputs).map(OutputLabel::Index).collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn get(&self, input: usize, output: usize) -> f64 {
        self.probs[input * self.outputs + output]
    }

    pub fn row(&self, input: usize) -> &[f64] {
        &self.probs[input * self.outputs..(input + 1) * self.outputs]
    }

    pub fn column(&self, output: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.k).map(move |x| self.get(x, output))
    }

    pub fn labels(&self) -> &[OutputLabel] {
        &self.labels
    }

    /// Largest `|row sum - 1|` over all inputs.
    pub fn max_row_sum_deviation(&self) -> f64 {
        (0..self.k)
            .map(|x| (self.row(x).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// CSV export: a header of output labels, then one row of probabilities
    /// per input, each printed with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.labels.iter().map(ToString::to_string).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for x in 0..self.k {
            for (y, &q) in self.row(x).iter().enumerate() {
                if y > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", sig17(q));
            }
            out.push('\n');
        }
        out
    }
}

fn check_row(x: usize, row: &[f64]) -> Result<()> {
    if let Some(&q) = row.iter().find(|q| !(q.is_finite() && **q >= 0.0)) {
        return Err(Error::NotStochastic {
            row: x,
            reason: format!("entry {q}"),
        });
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(Error::NotStochastic {
            row: x,
            reason: format!("sums to {sum}"),
        });
    }
    Ok(())
}

/// Advances `members` to the next size-`d` subset of `0..k` in lexicographic
/// order. Returns false after the last one.
fn next_combination(members: &mut [usize], k: usize) -> bool {
    let d = members.len();
    let Some(i) = (0..d).rev().find(|&i| members[i] < k - d + i) else {
        return false;
    };
    members[i] += 1;
    for j in i + 1..d {
        members[j] = members[j - 1] + 1;
    }
    true
}

/// Enumerates every output of `spec` in canonical order (subsets
/// lexicographically, RAPPOR bit patterns as binary numbers with category 1 as
/// the most significant bit) and tabulates the channel.
pub fn build_channel(spec: &MechanismSpec) -> Result<ChannelMatrix> {
    let size = spec.alphabet_size();
    if size > MAX_CHANNEL_OUTPUTS {
        return Err(Error::AlphabetTooLarge {
            size,
            limit: MAX_CHANNEL_OUTPUTS,
        });
    }
    let k = spec.k();
    let labels: Vec<OutputLabel> = match spec.scheme() {
        Scheme::Subset { d, .. } => subset_labels(k, d),
        Scheme::Rr { .. } => subset_labels(k, 1),
        Scheme::Rappor { .. } => (0..1usize << k)
            .map(|m| {
                OutputLabel::Bits(BitObservation::new(
                    (0..k).map(|i| m >> (k - 1 - i) & 1 == 1).collect(),
                ))
            })
            .collect(),
    };
    let mut rows = Vec::with_capacity(k);
    for x in 0..k {
        rows.push(
            labels
                .iter()
                .map(|label| spec.channel_prob(x, label))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    ChannelMatrix::from_rows(rows, Some(labels))
}

/// Position of the sorted subset `members` of `0..k` in lexicographic order.
pub fn subset_rank(k: usize, members: &[usize]) -> usize {
    let d = members.len();
    let mut rank = 0.0;
    let mut next = 0;
    for (i, &c) in members.iter().enumerate() {
        for j in next..c {
            rank += binomial(k - 1 - j, d - 1 - i);
        }
        next = c + 1;
    }
    rank as usize
}

fn subset_labels(k: usize, d: usize) -> Vec<OutputLabel> {
    let mut members: Vec<usize> = (0..d).collect();
    let mut labels = Vec::new();
    loop {
        labels.push(OutputLabel::Subset(SubsetObservation {
            k,
            members: members.clone(),
        }));
        if !next_combination(&mut members, k) {
            break;
        }
    }
    labels
}

/// `max` over non-zero columns of `max entry / min entry`; infinite when some
/// input can never produce an output another input can.
pub fn privacy_ratio(channel: &ChannelMatrix) -> f64 {
    let mut worst: f64 = 1.0;
    for y in 0..channel.outputs() {
        let (lo, hi) = channel
            .column(y)
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), q| {
                (lo.min(q), hi.max(q))
            });
        if hi == 0.0 {
            continue;
        }
        if lo == 0.0 {
            return f64::INFINITY;
        }
        worst = worst.max(hi / lo);
    }
    worst
}

pub fn check_ldp(channel: &ChannelMatrix, budget: PrivacyBudget) -> bool {
    privacy_ratio(channel) <= budget.exp_epsilon() * (1.0 + 1e-12)
}

/// True iff within every non-zero column each entry divided by the column
/// minimum is `1` or `e^eps` (to within `1e-9`).
pub fn is_extremal(channel: &ChannelMatrix, budget: PrivacyBudget) -> bool {
    const TOL: f64 = 1e-9;
    let e = budget.exp_epsilon();
    (0..channel.outputs()).all(|y| {
        let lo = channel.column(y).fold(f64::INFINITY, f64::min);
        let hi = channel.column(y).fold(0.0, f64::max);
        if hi == 0.0 {
            return true;
        }
        if lo == 0.0 {
            return false;
        }
        channel.column(y).all(|q| {
            let r = q / lo;
            (r - 1.0).abs() <= TOL || (r - e).abs() <= TOL
        })
    })
}
