use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainDecision, LinkConfig};
use crate::error::{ModelError, ModelResult};
use crate::model::{distill_n_rounds, swap_chain_fidelity, NoiseParams};

pub const MIN_TRIALS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    /// Raw pairs attempted per link in one trial; defaults to
    /// `2^(n_L + n_E + 4)`.
    pub batch_pairs: Option<u64>,
}

impl McConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            batch_pairs: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McRateEstimate {
    pub mean_rate: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
}

impl McRateEstimate {
    /// Whether `expected` lies within `k` standard errors of the mean. A
    /// zero standard error demands exact agreement up to round-off.
    pub fn agrees_with(&self, expected: f64, k: f64) -> bool {
        let tol = (k * self.std_error).max(1e-12 * expected.abs());
        (self.mean_rate - expected).abs() <= tol
    }
}

/// Keeps pairs from `count` states and lets each pair survive with
/// probability `p`. An odd leftover state joins a pair with probability 1/2,
/// which keeps the expected pair count at exactly `count / 2`.
fn distill_round(count: u64, p: f64, rng: &mut ChaCha8Rng) -> u64 {
    let mut pairs = count / 2;
    if count % 2 == 1 && rng.random_bool(0.5) {
        pairs += 1;
    }
    sample_binomial(pairs, p, rng)
}

fn sample_binomial(n: u64, p: f64, rng: &mut ChaCha8Rng) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
}

/// Monte-Carlo estimate of the end-to-end pair rate of `decision`.
///
/// Each trial attempts a batch of raw pairs on every link, drops those lost
/// in the fiber, and runs the link-level rounds with the success
/// probabilities of the deterministic fidelity trace. Swapping consumes one
/// state per link; link memories buffer the surplus, so the end-to-end
/// count is the mean link count, rounded stochastically. The end-to-end
/// rounds follow, and the trial's estimate is `R0 * survivors / batch`.
/// Trial `i` draws from stream `i` of a generator keyed by the seed, so the
/// result is independent of thread scheduling.
pub fn mc_rate(
    decision: &ChainDecision<f64>,
    link: &LinkConfig<f64>,
    noise: &NoiseParams<f64>,
    config: &McConfig,
) -> ModelResult<McRateEstimate> {
    decision.validate()?;
    link.validate()?;
    if config.trials < MIN_TRIALS {
        return Err(ModelError::domain("trials", config.trials as f64, ">= 1000"));
    }
    let rounds = decision.n_link_distill + decision.n_e2e_distill;
    let batch = match config.batch_pairs {
        Some(0) => return Err(ModelError::domain("batch_pairs", 0.0, ">= 1")),
        Some(b) => b,
        None => 1u64.checked_shl((rounds + 4) as u32).ok_or(ModelError::domain(
            "distillation rounds",
            rounds as f64,
            "<= 59",
        ))?,
    };

    let link_trace = distill_n_rounds(decision.n_link_distill, link.f0_initial_fidelity, noise)?;
    let f_e2e = swap_chain_fidelity(link_trace.final_fidelity(), decision.n_links, noise)?;
    let e2e_trace = distill_n_rounds(decision.n_e2e_distill, f_e2e, noise)?;
    let survive = link.transmission(decision.d_separation);
    let n_links = decision.n_links as u64;

    let estimates: Vec<f64> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(trial);
            let mut total = 0u64;
            for _ in 0..n_links {
                let mut count = sample_binomial(batch, survive, &mut rng);
                for &p in &link_trace.per_round_success_prob {
                    count = distill_round(count, p, &mut rng);
                }
                total += count;
            }
            let mut e2e = total / n_links;
            let rem = total % n_links;
            if rem > 0 && rng.random_bool(rem as f64 / n_links as f64) {
                e2e += 1;
            }
            for &p in &e2e_trace.per_round_success_prob {
                e2e = distill_round(e2e, p, &mut rng);
            }
            link.r0_source_rate * e2e as f64 / batch as f64
        })
        .collect();

    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let var = estimates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(McRateEstimate {
        mean_rate: mean,
        std_error: (var / n).sqrt(),
        trials: config.trials,
        seed: config.seed,
    })
}
