//! Classical photon-counting sampler over an MPS.
//!
//! Outcomes are drawn one site at a time through the chain rule
//! `p(n_1, ..., n_N) = p(n_1) · p(n_2 | n_1) · ...`: each conditional
//! marginal is a local contraction between the environment of the already
//! fixed prefix and a right environment that is precomputed once per
//! batch, so a sample costs `O(N d χ³)`.
//!
//! Randomness comes from ChaCha12 seeded with the caller's seed; sample
//! `j` uses stream `j` of that generator, so batches are reproducible and
//! can be partitioned across workers by sample index without changing the
//! merged result.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::SimError;
use crate::mps::{
    env_dot, right_environments, transfer_identity, transfer_projected, unit_env, Mps,
};

/// A batch of photon-count samples plus the seed that produced it.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    /// One occupation vector per sample, one entry per measured site.
    pub outcomes: Vec<Vec<usize>>,
    pub seed: u64,
    /// Natural log of each sample's joint probability.
    pub log_probabilities: Option<Vec<f64>>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}

/// Uniform double in `[0, 1)` from the top 53 bits of the generator.
fn next_f64(rng: &mut ChaCha12Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Probability distribution of the occupation of `site` given fixed
/// outcomes on the leading `conditioning.len()` sites. Sites between the
/// conditioned prefix and `site` are marginalized. The result is
/// normalized by the probability of the conditioning event, which must
/// not vanish.
pub fn marginal_distribution(
    m: &Mps,
    site: usize,
    conditioning: &[usize],
) -> Result<Vec<f64>, SimError> {
    if site >= m.num_sites() {
        return Err(SimError::InvalidSite {
            site,
            num_sites: m.num_sites(),
        });
    }
    if conditioning.len() > site {
        return Err(SimError::InvalidArgument(format!(
            "{} conditioned sites do not precede target site {site}",
            conditioning.len()
        )));
    }
    for (i, &n) in conditioning.iter().enumerate() {
        if n >= m.phys_dim(i) {
            return Err(SimError::InvalidArgument(format!(
                "conditioned outcome {n} out of range 0..{} at site {i}",
                m.phys_dim(i)
            )));
        }
    }
    let renvs = right_environments(m);
    let mut env = unit_env();
    for (i, &n) in conditioning.iter().enumerate() {
        env = transfer_projected(&env, m.site(i), n);
    }
    for i in conditioning.len()..site {
        env = transfer_identity(&env, m.site(i));
    }
    let d = m.phys_dim(site);
    let mut probs = Vec::with_capacity(d);
    for n in 0..d {
        let env_n = transfer_projected(&env, m.site(site), n);
        probs.push(env_dot(&env_n, &renvs[site + 1]).re.max(0.0));
    }
    let total: f64 = probs.iter().sum();
    if total <= 0.0 {
        return Err(SimError::ZeroProbability);
    }
    Ok(probs.iter().map(|p| p / total).collect())
}

/// Draws `count` independent samples of the photon-count outcome.
///
/// With `include_loop_sites` the trailing loop sites are measured too and
/// every outcome conserves the total input photon number exactly; without
/// it they are marginalized, never conditioned on.
pub fn draw_samples(
    m: &Mps,
    count: usize,
    seed: u64,
    include_loop_sites: bool,
) -> Result<SampleBatch, SimError> {
    if count == 0 {
        return Err(SimError::InvalidArgument("sample count must be positive".into()));
    }
    let measured = if include_loop_sites {
        m.num_sites()
    } else {
        m.num_bin_sites()
    };
    let renvs = right_environments(m);
    let mut outcomes = Vec::with_capacity(count);
    let mut log_probs = Vec::with_capacity(count);
    for j in 0..count {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(j as u64);
        let mut env = unit_env();
        let mut outcome = Vec::with_capacity(measured);
        let mut log_p = 0.0f64;
        for i in 0..measured {
            let d = m.phys_dim(i);
            let mut weights = Vec::with_capacity(d);
            let mut envs = Vec::with_capacity(d);
            for n in 0..d {
                let env_n = transfer_projected(&env, m.site(i), n);
                let w = env_dot(&env_n, &renvs[i + 1]).re.max(0.0);
                weights.push(w);
                envs.push(env_n);
            }
            let total: f64 = weights.iter().sum();
            if total <= 0.0 {
                return Err(SimError::ZeroProbability);
            }
            let u = next_f64(&mut rng) * total;
            let mut cumulative = 0.0;
            let mut chosen = d - 1;
            for (n, &w) in weights.iter().enumerate() {
                cumulative += w;
                if u < cumulative && w > 0.0 {
                    chosen = n;
                    break;
                }
            }
            // Guard the fully-accumulated edge: fall back to the last
            // outcome with nonzero weight.
            if weights[chosen] <= 0.0 {
                chosen = weights
                    .iter()
                    .rposition(|&w| w > 0.0)
                    .expect("total > 0 implies a positive weight");
            }
            log_p += (weights[chosen] / total).min(1.0).ln();
            env = envs.swap_remove(chosen);
            outcome.push(chosen);
        }
        outcomes.push(outcome);
        log_probs.push(log_p);
    }
    Ok(SampleBatch {
        outcomes,
        seed,
        log_probabilities: Some(log_probs),
    })
}

/// Joint probability of a complete outcome on the normalized state.
///
/// The outcome covers either every site or just the bin sites, in which
/// case the loop sites are summed out.
pub fn exact_joint_probability(m: &Mps, outcome: &[usize]) -> Result<f64, SimError> {
    let all = m.num_sites();
    let bins = m.num_bin_sites();
    let measured = if outcome.len() == all {
        all
    } else if outcome.len() == bins {
        bins
    } else {
        return Err(SimError::LengthMismatch {
            expected: all,
            got: outcome.len(),
        });
    };
    for (i, &n) in outcome.iter().enumerate() {
        if n >= m.phys_dim(i) {
            return Err(SimError::InvalidArgument(format!(
                "outcome {n} out of range 0..{} at site {i}",
                m.phys_dim(i)
            )));
        }
    }
    let renvs = right_environments(m);
    let norm2 = env_dot(&unit_env(), &renvs[0]).re;
    if norm2 <= 0.0 {
        return Err(SimError::ZeroNorm);
    }
    let mut env = unit_env();
    for (i, &n) in outcome.iter().enumerate().take(measured) {
        env = transfer_projected(&env, m.site(i), n);
    }
    let p = env_dot(&env, &renvs[measured]).re;
    Ok((p / norm2).max(0.0))
}
