//! Slot-by-slot simulation of first-come-first-matched.
//!
//! Replications draw from independent ChaCha8 streams keyed by
//! `(seed, replication)`, so results do not depend on how replications are
//! scheduled across threads.

mod queue;

pub use queue::{Departure, QueueState, StepOutcome};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Model, Side};
use crate::transition::{PerTransition, TransitionType};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationConfig {
    pub seed: u64,
    pub warmup_slots: u64,
    pub measured_slots: u64,
    pub replications: usize,
    /// Assert the queue invariants after every slot.
    pub checked: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            seed: 1,
            warmup_slots: 1_000_000,
            measured_slots: 1_000_000,
            replications: 20,
            checked: false,
        }
    }
}

impl SimulationConfig {
    fn validate(&self) -> Result<()> {
        if self.measured_slots == 0 {
            return Err(Error::Spec("measured_slots must be at least 1".into()));
        }
        if self.replications == 0 {
            return Err(Error::Spec("replications must be at least 1".into()));
        }
        Ok(())
    }
}

/// Metrics measured on one replication. Per-class entries are `NaN` when
/// the class had no arrival (or no departure) in the measured window.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationResult {
    pub customer_waiting_prob: Vec<f64>,
    pub server_waiting_prob: Vec<f64>,
    pub customer_mean_wait: Vec<f64>,
    pub server_mean_wait: Vec<f64>,
    /// Time-average number of unmatched customers at slot boundaries.
    pub mean_unmatched: f64,
    pub transitions: PerTransition<f64>,
    /// Fraction of measured slots that start with an empty system.
    pub empty_fraction: f64,
    /// Mean number of slots between successive visits to the empty state.
    pub mean_return_time: f64,
    pub final_length: usize,
    pub median_length: usize,
    pub diverging: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Sample standard deviation across replications (0 with one replication).
    pub std_dev: f64,
}

impl Estimate {
    pub fn from_samples(samples: impl IntoIterator<Item = f64>) -> Self {
        let samples: Vec<f64> = samples.into_iter().collect();
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let std_dev = if samples.len() > 1 {
            (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Estimate { mean, std_dev }
    }

    /// Standard error of the mean over `replications` samples.
    pub fn std_error(&self, replications: usize) -> f64 {
        self.std_dev / (replications as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationEstimate {
    pub config: SimulationConfig,
    pub replications: Vec<ReplicationResult>,
    pub customer_waiting_prob: Vec<Estimate>,
    pub server_waiting_prob: Vec<Estimate>,
    pub customer_mean_wait: Vec<Estimate>,
    pub server_mean_wait: Vec<Estimate>,
    pub mean_unmatched: Estimate,
    pub transitions: PerTransition<Estimate>,
    pub empty_fraction: Estimate,
    pub mean_return_time: Estimate,
    /// Some replication looked divergent (unstable model or run too short).
    pub instability_advisory: bool,
}

/// Runs every replication and aggregates mean and standard deviation.
pub fn simulate(model: &Model, config: &SimulationConfig) -> Result<SimulationEstimate> {
    config.validate()?;
    let replications: Vec<ReplicationResult> = (0..config.replications)
        .into_par_iter()
        .map(|rep| run_replication(model, config, rep as u64))
        .collect();

    let per_class = |pick: fn(&ReplicationResult) -> &Vec<f64>| -> Vec<Estimate> {
        let n = pick(&replications[0]).len();
        (0..n)
            .map(|c| Estimate::from_samples(replications.iter().map(|r| pick(r)[c])))
            .collect()
    };
    let scalar = |pick: fn(&ReplicationResult) -> f64| -> Estimate {
        Estimate::from_samples(replications.iter().map(pick))
    };

    let mut transitions = PerTransition::<Estimate>(
        [Estimate {
            mean: 0.0,
            std_dev: 0.0,
        }; 5],
    );
    for t in TransitionType::ALL {
        transitions[t] = Estimate::from_samples(replications.iter().map(|r| r.transitions[t]));
    }

    Ok(SimulationEstimate {
        config: *config,
        customer_waiting_prob: per_class(|r| &r.customer_waiting_prob),
        server_waiting_prob: per_class(|r| &r.server_waiting_prob),
        customer_mean_wait: per_class(|r| &r.customer_mean_wait),
        server_mean_wait: per_class(|r| &r.server_mean_wait),
        mean_unmatched: scalar(|r| r.mean_unmatched),
        transitions,
        empty_fraction: scalar(|r| r.empty_fraction),
        mean_return_time: scalar(|r| r.mean_return_time),
        instability_advisory: replications.iter().any(|r| r.diverging),
        replications,
    })
}

/// Inverse-CDF sampler over a fixed discrete distribution.
struct ClassSampler {
    cumulative: Vec<f64>,
}

impl ClassSampler {
    fn new(probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        ClassSampler { cumulative }
    }

    #[inline]
    fn sample(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.gen();
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }
}

#[derive(Default)]
struct ClassCounters {
    arrivals: Vec<u64>,
    queued: Vec<u64>,
    departures: Vec<u64>,
    wait_sum: Vec<u64>,
}

impl ClassCounters {
    fn new(n: usize) -> Self {
        ClassCounters {
            arrivals: vec![0; n],
            queued: vec![0; n],
            departures: vec![0; n],
            wait_sum: vec![0; n],
        }
    }

    fn waiting_prob(&self) -> Vec<f64> {
        ratio(&self.queued, &self.arrivals)
    }

    fn mean_wait(&self) -> Vec<f64> {
        ratio(&self.wait_sum, &self.departures)
    }
}

fn ratio(num: &[u64], den: &[u64]) -> Vec<f64> {
    num.iter()
        .zip(den)
        .map(|(&n, &d)| {
            if d == 0 {
                f64::NAN
            } else {
                n as f64 / d as f64
            }
        })
        .collect()
}

pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

fn run_replication(
    model: &Model,
    config: &SimulationConfig,
    replication: u64,
) -> ReplicationResult {
    let graph = model.graph();
    let mut rng = replication_rng(config.seed, replication);
    let customer_sampler = ClassSampler::new(model.lambda());
    let server_sampler = ClassSampler::new(model.mu());

    let mut state = QueueState::new(graph);
    let mut customers = ClassCounters::new(graph.customer_count());
    let mut servers = ClassCounters::new(graph.server_count());
    let mut transition_counts = [0u64; 5];
    let mut length_histogram: Vec<u64> = Vec::new();
    let mut length_sum = 0u64;
    let mut empty_slots = 0u64;
    let mut last_empty: Option<u64> = None;
    let mut return_sum = 0u64;
    let mut return_count = 0u64;
    let mut window_start_length = 0usize;

    let end = config.warmup_slots + config.measured_slots;
    for slot in 0..end {
        let measuring = slot >= config.warmup_slots;
        if measuring {
            let len = state.len();
            if slot == config.warmup_slots {
                window_start_length = len;
            }
            if len >= length_histogram.len() {
                length_histogram.resize(len + 1, 0);
            }
            length_histogram[len] += 1;
            length_sum += len as u64;
            if len == 0 {
                empty_slots += 1;
                if let Some(previous) = last_empty {
                    return_sum += slot - previous;
                    return_count += 1;
                }
                last_empty = Some(slot);
            }
        }

        let i = customer_sampler.sample(&mut rng);
        let k = server_sampler.sample(&mut rng);
        let outcome = state.step(graph, i, k, slot);
        if config.checked {
            assert!(
                state.satisfies_invariants(graph),
                "queue invariants violated at slot {slot}"
            );
        }

        if measuring {
            customers.arrivals[i] += 1;
            servers.arrivals[k] += 1;
            customers.queued[i] += outcome.customer_queued as u64;
            servers.queued[k] += outcome.server_queued as u64;
            transition_counts[outcome.transition as usize] += 1;
            for d in &outcome.departures {
                let counters = match d.class.side {
                    Side::Customer => &mut customers,
                    Side::Server => &mut servers,
                };
                counters.departures[d.class.index] += 1;
                counters.wait_sum[d.class.index] += d.wait();
            }
        }
    }

    let measured = config.measured_slots as f64;
    let median_length = median(&length_histogram);
    let final_length = state.len();
    ReplicationResult {
        customer_waiting_prob: customers.waiting_prob(),
        server_waiting_prob: servers.waiting_prob(),
        customer_mean_wait: customers.mean_wait(),
        server_mean_wait: servers.mean_wait(),
        mean_unmatched: length_sum as f64 / measured,
        transitions: PerTransition(transition_counts.map(|c| c as f64 / measured)),
        empty_fraction: empty_slots as f64 / measured,
        mean_return_time: if return_count == 0 {
            f64::NAN
        } else {
            return_sum as f64 / return_count as f64
        },
        final_length,
        median_length,
        diverging: looks_divergent(
            final_length,
            median_length,
            window_start_length,
            config.measured_slots,
        ),
    }
}

/// Final length far above the typical length, or a queue that at least
/// doubled over the window and grew beyond `√slots`.
fn looks_divergent(final_length: usize, median: usize, start: usize, slots: u64) -> bool {
    let spike = final_length > 10 * median.max(1);
    let drift = final_length >= 2 * start.max(1) && final_length as f64 > (slots as f64).sqrt();
    spike || drift
}

fn median(histogram: &[u64]) -> usize {
    let total: u64 = histogram.iter().sum();
    let half = total.div_ceil(2);
    let mut acc = 0;
    for (len, &count) in histogram.iter().enumerate() {
        acc += count;
        if acc >= half {
            return len;
        }
    }
    0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;

    fn small(seed: u64) -> SimulationConfig {
        SimulationConfig {
            seed,
            warmup_slots: 1_000,
            measured_slots: 20_000,
            replications: 4,
            checked: true,
        }
    }

    #[test]
    fn single_pair_never_waits() {
        let est = simulate(&presets::single_pair(), &small(3)).unwrap();
        assert_eq!(est.customer_waiting_prob[0].mean, 0.0);
        assert_eq!(est.server_mean_wait[0].mean, 0.0);
        assert_eq!(est.transitions[TransitionType::KeepKeep].mean, 1.0);
        assert_eq!(est.empty_fraction.mean, 1.0);
        assert_eq!(est.mean_return_time.mean, 1.0);
        assert!(!est.instability_advisory);
    }

    #[test]
    fn deterministic_per_seed() {
        let model = presets::path_model(0.4);
        let a = simulate(&model, &small(11)).unwrap();
        let b = simulate(&model, &small(11)).unwrap();
        assert_eq!(a, b);
        let c = simulate(&model, &small(12)).unwrap();
        assert_ne!(a.replications[0], c.replications[0]);
    }

    #[test]
    fn invariants_hold_on_long_checked_runs() {
        for model in [presets::path_model(0.2), presets::n_model(0.5, 0.25)] {
            let est = simulate(&model, &small(5)).unwrap();
            for r in &est.replications {
                let s: f64 = r.transitions.sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unstable_model_is_flagged() {
        let cfg = SimulationConfig {
            replications: 2,
            checked: false,
            ..small(1)
        };
        let est = simulate(&presets::n_model(0.1, 0.5), &cfg).unwrap();
        assert!(est.instability_advisory);
        let est = simulate(&presets::n_model(0.5, 0.25), &cfg).unwrap();
        assert!(!est.instability_advisory);
    }

    #[test]
    fn rejects_empty_config() {
        let cfg = SimulationConfig {
            replications: 0,
            ..small(1)
        };
        assert!(simulate(&presets::single_pair(), &cfg).is_err());
    }

    #[test]
    fn median_of_histogram() {
        assert_eq!(median(&[5, 1, 1]), 0);
        assert_eq!(median(&[1, 1, 5]), 2);
        assert_eq!(median(&[1, 2, 1]), 1);
    }
}
