//! Privatization channels: the k-subset mechanism, k-ary randomized response
//! (the subset mechanism with `d = 1`) and k-RAPPOR.

mod channel;
mod extremal;
mod rappor;
mod subset;

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::simplex::PrivacyBudget;

pub use channel::{
    build_channel, check_ldp, is_extremal, privacy_ratio, subset_rank, ChannelMatrix,
    MAX_CHANNEL_OUTPUTS,
};
pub use extremal::{convex_vertex_decomposition, extremalize, ConvexDecomposition, Extremalized};
pub use rappor::{rappor_channel_prob, sample_rappor, RapporSampler};
pub use subset::{binomial, sample_subset, subset_channel_prob, SubsetSampler};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "scheme", rename_all = "lowercase")]
pub enum Scheme {
    /// Uniform-like size-`d` subsets biased toward the true category.
    Subset { k: usize, d: usize },
    /// k-ary randomized response; identical in law to `Subset { k, d: 1 }`.
    Rr { k: usize },
    /// One-hot encoding with every bit flipped independently.
    Rappor { k: usize },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Subset { .. } => "subset",
            Scheme::Rr { .. } => "rr",
            Scheme::Rappor { .. } => "rappor",
        }
    }
}

/// A privatization channel together with its privacy budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MechanismSpec {
    #[serde(flatten)]
    scheme: Scheme,
    #[serde(flatten)]
    budget: PrivacyBudget,
}

impl MechanismSpec {
    pub fn subset(k: usize, d: usize, budget: PrivacyBudget) -> Result<Self> {
        check_k(k)?;
        if d == 0 || d >= k {
            return Err(Error::InvalidD { d, k });
        }
        Ok(Self {
            scheme: Scheme::Subset { k, d },
            budget,
        })
    }

    pub fn rr(k: usize, budget: PrivacyBudget) -> Result<Self> {
        check_k(k)?;
        Ok(Self {
            scheme: Scheme::Rr { k },
            budget,
        })
    }

    pub fn rappor(k: usize, budget: PrivacyBudget) -> Result<Self> {
        check_k(k)?;
        Ok(Self {
            scheme: Scheme::Rappor { k },
            budget,
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn budget(&self) -> PrivacyBudget {
        self.budget
    }

    pub fn k(&self) -> usize {
        match self.scheme {
            Scheme::Subset { k, .. } | Scheme::Rr { k } | Scheme::Rappor { k } => k,
        }
    }

    /// Subset size for subset-valued schemes (`1` for RR), `None` for RAPPOR.
    pub fn subset_size(&self) -> Option<usize> {
        match self.scheme {
            Scheme::Subset { d, .. } => Some(d),
            Scheme::Rr { .. } => Some(1),
            Scheme::Rappor { .. } => None,
        }
    }

    /// Number of distinct outputs, as a float since it can be astronomically large.
    pub fn alphabet_size(&self) -> f64 {
        match self.scheme {
            Scheme::Subset { k, d } => binomial(k, d),
            Scheme::Rr { k } => k as f64,
            Scheme::Rappor { k } => 2f64.powi(k as i32),
        }
    }

    pub(crate) fn check_input(&self, input: usize) -> Result<()> {
        let k = self.k();
        if input >= k {
            return Err(Error::CategoryOutOfRange { category: input, k });
        }
        Ok(())
    }

    /// Probability of emitting `output` on `input`.
    pub fn channel_prob(&self, input: usize, output: &OutputLabel) -> Result<f64> {
        match (self.scheme, output) {
            (Scheme::Subset { .. } | Scheme::Rr { .. }, OutputLabel::Subset(obs)) => {
                subset_channel_prob(self, input, obs)
            }
            (Scheme::Rappor { .. }, OutputLabel::Bits(obs)) => {
                rappor_channel_prob(self, input, obs)
            }
            _ => Err(Error::UnsupportedScheme("this output label")),
        }
    }
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::TooFewCategories { k });
    }
    Ok(())
}

/// One privatized sample of a subset mechanism: the positions of the ones.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetObservation {
    k: usize,
    members: Vec<usize>,
}

impl SubsetObservation {
    /// `members` must be strictly increasing zero-based categories below `k`.
    pub fn new(k: usize, members: Vec<usize>) -> Result<Self> {
        if members.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::UnsortedMembers);
        }
        if let Some(&category) = members.iter().find(|&&m| m >= k) {
            return Err(Error::CategoryOutOfRange { category, k });
        }
        Ok(Self { k, members })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, category: usize) -> bool {
        self.members.binary_search(&category).is_ok()
    }

    /// Parses the `"1+3"` label form (one-based members).
    pub fn parse_label(k: usize, label: &str) -> Result<Self> {
        let mut members = Vec::new();
        for part in label.split('+') {
            let m: usize = part
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad subset label {label:?}")))?;
            if m == 0 {
                return Err(Error::Parse(format!(
                    "subset labels are one-based: {label:?}"
                )));
            }
            members.push(m - 1);
        }
        Self::new(k, members)
    }
}

impl fmt::Display for SubsetObservation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, m) in self.members.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "{}", m + 1)?;
        }
        Ok(())
    }
}

/// One privatized k-RAPPOR sample.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitObservation {
    bits: Vec<bool>,
}

impl BitObservation {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn k(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn parse_label(label: &str) -> Result<Self> {
        label
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Parse(format!("bad bit label {label:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }
}

impl fmt::Display for BitObservation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Label of a channel output column.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum OutputLabel {
    Subset(SubsetObservation),
    Bits(BitObservation),
    /// Outputs of generic channels, e.g. extremalized ones.
    Index(usize),
}

impl fmt::Display for OutputLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputLabel::Subset(s) => s.fmt(f),
            OutputLabel::Bits(b) => b.fmt(f),
            OutputLabel::Index(i) => write!(f, "{i}"),
        }
    }
}

impl Serialize for OutputLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl Serialize for SubsetObservation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl Serialize for BitObservation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
