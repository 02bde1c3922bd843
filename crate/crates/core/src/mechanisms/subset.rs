use rand::Rng;
use statrs::function::factorial::ln_binomial;

use super::{MechanismSpec, SubsetObservation};
use crate::error::{Error, Result};

/// Above this many categories binomial coefficients are evaluated via log-gamma.
const EXACT_BINOMIAL_MAX_N: usize = 50;

/// `C(n, r)` as a float; exact for `n <= 50`.
pub fn binomial(n: usize, r: usize) -> f64 {
    if r > n {
        return 0.0;
    }
    if n <= EXACT_BINOMIAL_MAX_N {
        let r = r.min(n - r);
        let mut c: u128 = 1;
        for i in 0..r {
            c = c * (n - i) as u128 / (i + 1) as u128;
        }
        c as f64
    } else {
        ln_binomial(n as u64, r as u64).exp()
    }
}

fn ln_binomial_coefficient(n: usize, r: usize) -> f64 {
    if n <= EXACT_BINOMIAL_MAX_N {
        binomial(n, r).ln()
    } else {
        ln_binomial(n as u64, r as u64)
    }
}

pub(crate) fn subset_params(spec: &MechanismSpec) -> Result<(usize, usize)> {
    match spec.subset_size() {
        Some(d) => Ok((spec.k(), d)),
        None => Err(Error::UnsupportedScheme(
            "k-RAPPOR (subset mechanism expected)",
        )),
    }
}

/// Probability that a subset mechanism reports `obs` when the true category is
/// `input`.
///
/// Evaluated in the factored form `P(input in Y) / C(k-1, d-1)` or
/// `P(input not in Y) / C(k-1, d)`, which avoids the huge normalizer of the
/// direct expression.
pub fn subset_channel_prob(
    spec: &MechanismSpec,
    input: usize,
    obs: &SubsetObservation,
) -> Result<f64> {
    let (k, d) = subset_params(spec)?;
    spec.check_input(input)?;
    if obs.k() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: obs.k(),
        });
    }
    if obs.len() != d {
        return Err(Error::WrongSubsetSize {
            expected: d,
            found: obs.len(),
        });
    }
    let e = spec.budget().exp_epsilon();
    let denom = d as f64 * e + (k - d) as f64;
    let (head, others) = if obs.contains(input) {
        (d as f64 * e / denom, d - 1)
    } else {
        ((k - d) as f64 / denom, d)
    };
    if k <= EXACT_BINOMIAL_MAX_N {
        Ok(head / binomial(k - 1, others))
    } else {
        Ok((head.ln() - ln_binomial_coefficient(k - 1, others)).exp())
    }
}

/// Reusable sampler for a subset mechanism.
///
/// Draws whether the true category is reported, then picks the remaining
/// members one at a time, uniformly from the categories not yet chosen
/// (a partial Fisher-Yates shuffle over a persistent permutation).
#[derive(Debug, Clone)]
pub struct SubsetSampler {
    k: usize,
    d: usize,
    include_prob: f64,
    perm: Vec<u32>,
    pos: Vec<u32>,
}

impl SubsetSampler {
    pub fn new(spec: &MechanismSpec) -> Result<Self> {
        let (k, d) = subset_params(spec)?;
        let e = spec.budget().exp_epsilon();
        Ok(Self {
            k,
            d,
            include_prob: d as f64 * e / (d as f64 * e + (k - d) as f64),
            perm: (0..k as u32).collect(),
            pos: (0..k as u32).collect(),
        })
    }

    /// Probability that the true category is among the reported members.
    pub fn include_prob(&self) -> f64 {
        self.include_prob
    }

    fn swap(&mut self, a: usize, b: usize) {
        self.perm.swap(a, b);
        self.pos[self.perm[a] as usize] = a as u32;
        self.pos[self.perm[b] as usize] = b as u32;
    }

    /// Writes the `d` members (unsorted) into `out`. `input` must be `< k`.
    pub fn sample_into<R: Rng + ?Sized>(
        &mut self,
        input: usize,
        rng: &mut R,
        out: &mut Vec<usize>,
    ) {
        debug_assert!(input < self.k);
        out.clear();
        let include = rng.gen::<f64>() < self.include_prob;
        // Park the true category in the last slot so the draw below is over X \ {input}.
        let last = self.k - 1;
        let at = self.pos[input] as usize;
        self.swap(at, last);
        let wanted = if include {
            out.push(input);
            self.d - 1
        } else {
            self.d
        };
        for t in 0..wanted {
            let j = t + rng.gen_range(0..(last - t) as u32) as usize;
            self.swap(t, j);
            out.push(self.perm[t] as usize);
        }
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, input: usize, rng: &mut R) -> SubsetObservation {
        let mut members = Vec::with_capacity(self.d);
        self.sample_into(input, rng, &mut members);
        members.sort_unstable();
        SubsetObservation { k: self.k, members }
    }
}

/// Draws one privatized subset for `input`.
pub fn sample_subset<R: Rng + ?Sized>(
    spec: &MechanismSpec,
    input: usize,
    rng: &mut R,
) -> Result<SubsetObservation> {
    spec.check_input(input)?;
    Ok(SubsetSampler::new(spec)?.sample(input, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::PrivacyBudget;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(k: usize, d: usize, e: f64) -> MechanismSpec {
        MechanismSpec::subset(k, d, PrivacyBudget::from_exp(e).unwrap()).unwrap()
    }

    fn obs(k: usize, m: &[usize]) -> SubsetObservation {
        SubsetObservation::new(k, m.to_vec()).unwrap()
    }

    // Lexicographic size-d subsets of 0..k, written independently of the crate's enumerator.
    fn all_subsets(k: usize, d: usize) -> Vec<Vec<usize>> {
        (0u32..1 << k)
            .filter(|m| m.count_ones() as usize == d)
            .map(|m| (0..k).filter(|i| m >> i & 1 == 1).collect::<Vec<_>>())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(49, 24), 63205303218876.0);
        assert_eq!(binomial(3, 5), 0.0);
        let big = binomial(60, 30);
        assert!((big / 1.1826458156486142e17 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn four_choose_two_example() {
        let e = 1.7;
        let s = spec(4, 2, e);
        let p = subset_channel_prob(&s, 0, &obs(4, &[0, 1])).unwrap();
        assert!((p - e / (3.0 * e + 3.0)).abs() < 1e-15);
        let q = subset_channel_prob(&s, 0, &obs(4, &[2, 3])).unwrap();
        assert!((q - 1.0 / (3.0 * e + 3.0)).abs() < 1e-15);
    }

    #[test]
    fn binary_randomized_response() {
        let e = 2.5;
        let s = spec(2, 1, e);
        let keep = subset_channel_prob(&s, 0, &obs(2, &[0])).unwrap();
        let flip = subset_channel_prob(&s, 0, &obs(2, &[1])).unwrap();
        assert!((keep - e / (e + 1.0)).abs() < 1e-15);
        assert!((flip - 1.0 / (e + 1.0)).abs() < 1e-15);
        assert!((keep + flip - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rows_sum_to_one_by_enumeration() {
        for (k, d, e) in [(4, 2, 3.0), (5, 2, 2.0), (7, 3, 1.3), (9, 8, 6.0)] {
            let s = spec(k, d, e);
            for x in 0..k {
                let total: f64 = all_subsets(k, d)
                    .iter()
                    .map(|m| subset_channel_prob(&s, x, &obs(k, m)).unwrap())
                    .sum();
                assert!((total - 1.0).abs() < 1e-13, "k={k} d={d} x={x}: {total}");
            }
        }
    }

    #[test]
    fn log_space_agrees_with_direct_form() {
        // Direct form e^eps / (C(k-1,d-1) e^eps + C(k-1,d)) at k = 60 using ln_binomial.
        let (k, d, e) = (60usize, 7usize, 4.0f64);
        let s = spec(k, d, e);
        let members: Vec<usize> = (0..d).collect();
        let p = subset_channel_prob(&s, 0, &obs(k, &members)).unwrap();
        let a = ln_binomial((k - 1) as u64, (d - 1) as u64).exp();
        let b = ln_binomial((k - 1) as u64, d as u64).exp();
        let direct = e / (a * e + b);
        assert!((p / direct - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_observations() {
        let s = spec(4, 2, 3.0);
        assert!(matches!(
            subset_channel_prob(&s, 0, &obs(4, &[1])),
            Err(Error::WrongSubsetSize {
                expected: 2,
                found: 1
            })
        ));
        assert!(matches!(
            subset_channel_prob(&s, 4, &obs(4, &[0, 1])),
            Err(Error::CategoryOutOfRange { .. })
        ));
        assert!(matches!(
            subset_channel_prob(&s, 0, &obs(5, &[0, 1])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sampler_structure_and_inclusion_rate() {
        let s = spec(4, 2, 3.0);
        let mut sampler = SubsetSampler::new(&s).unwrap();
        assert_eq!(sampler.include_prob(), 0.75);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 200_000;
        let mut hits = 0usize;
        for i in 0..draws {
            let input = i % 4;
            let o = sampler.sample(input, &mut rng);
            assert_eq!(o.len(), 2);
            assert!(o.members().windows(2).all(|w| w[0] < w[1]));
            assert!(o.members().iter().all(|&m| m < 4));
            hits += o.contains(input) as usize;
        }
        let rate = hits as f64 / draws as f64;
        let se = (0.75f64 * 0.25 / draws as f64).sqrt();
        assert!((rate - 0.75).abs() < 4.0 * se, "rate {rate}");
    }

    #[test]
    fn sampler_handles_extreme_d() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in [1, 9] {
            let s = spec(10, d, 5.0);
            for input in 0..10 {
                let o = sample_subset(&s, input, &mut rng).unwrap();
                assert_eq!(o.len(), d);
            }
        }
        assert!(sample_subset(&spec(10, 3, 5.0), 10, &mut rng).is_err());
    }

    #[test]
    fn same_seed_same_draws() {
        let s = spec(8, 3, 2.0);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut sampler = SubsetSampler::new(&s).unwrap();
            (0..100)
                .map(|i| sampler.sample(i % 8, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
        assert_ne!(draw(3), draw(4));
    }
}
