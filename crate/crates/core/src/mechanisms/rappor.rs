use rand::Rng;

use super::{BitObservation, MechanismSpec, Scheme};
use crate::error::{Error, Result};

fn rappor_k(spec: &MechanismSpec) -> Result<usize> {
    match spec.scheme() {
        Scheme::Rappor { k } => Ok(k),
        _ => Err(Error::UnsupportedScheme(
            "subset mechanisms (k-RAPPOR expected)",
        )),
    }
}

/// `Q(obs | input)` for k-RAPPOR: each bit of the one-hot encoding of `input`
/// is kept with probability `s/(1+s)`, `s = e^(eps/2)`.
pub fn rappor_channel_prob(
    spec: &MechanismSpec,
    input: usize,
    obs: &BitObservation,
) -> Result<f64> {
    let k = rappor_k(spec)?;
    spec.check_input(input)?;
    if obs.k() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: obs.k(),
        });
    }
    let s = spec.budget().exp_half_epsilon();
    let kept = obs
        .bits()
        .iter()
        .enumerate()
        .filter(|&(i, &b)| b == (i == input))
        .count();
    let flipped = k - kept;
    let ln_keep = (s / (1.0 + s)).ln();
    let ln_flip = -(1.0 + s).ln();
    Ok((kept as f64 * ln_keep + flipped as f64 * ln_flip).exp())
}

#[derive(Debug, Clone)]
pub struct RapporSampler {
    k: usize,
    flip_prob: f64,
}

impl RapporSampler {
    pub fn new(spec: &MechanismSpec) -> Result<Self> {
        let k = rappor_k(spec)?;
        Ok(Self {
            k,
            flip_prob: 1.0 / (1.0 + spec.budget().exp_half_epsilon()),
        })
    }

    pub fn flip_prob(&self) -> f64 {
        self.flip_prob
    }

    /// Calls `set(i)` for every output bit that is 1, in increasing order.
    pub fn sample_ones<R: Rng + ?Sized>(
        &self,
        input: usize,
        rng: &mut R,
        mut set: impl FnMut(usize),
    ) {
        for i in 0..self.k {
            let flip = rng.gen::<f64>() < self.flip_prob;
            if (i == input) != flip {
                set(i);
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, input: usize, rng: &mut R) -> BitObservation {
        let mut bits = vec![false; self.k];
        self.sample_ones(input, rng, |i| bits[i] = true);
        BitObservation::new(bits)
    }
}

pub fn sample_rappor<R: Rng + ?Sized>(
    spec: &MechanismSpec,
    input: usize,
    rng: &mut R,
) -> Result<BitObservation> {
    spec.check_input(input)?;
    Ok(RapporSampler::new(spec)?.sample(input, rng))
}
