//! Scenario builders shared by the benchmarks.

use rand::Rng;
use tempnet_core::pipeline::{RunConfig, StepConfig};
use tempnet_core::sequences::{MixMode, SamplerConfig};
use tempnet_core::{seeded_rng, FlowSystem};

/// Power-law step with `nodes` nodes, communities of 60 to 120 nodes and
/// degrees between 5 and 40, 70% of them intra.
pub fn power_law_step(nodes: usize) -> StepConfig {
    StepConfig {
        nodes: Some(nodes),
        communities: None,
        sizes: SamplerConfig::power_law(1.5, 60, 120),
        degrees: SamplerConfig::power_law(2.5, 5, 40).with_mix(0.7, MixMode::Fixed),
    }
}

pub fn run_config(seed: u64, nodes: usize, timesteps: usize) -> RunConfig {
    RunConfig::new(seed, timesteps, power_law_step(nodes))
}

/// Flow system between two random compositions of `n` into `k` and `l`
/// positive parts.
pub fn random_flow_system(seed: u64, k: usize, l: usize, n: u64) -> FlowSystem {
    let mut rng = seeded_rng(seed);
    let mut parts = |m: usize| {
        let mut v = vec![1u64; m];
        for _ in 0..n - m as u64 {
            v[rng.random_range(0..m)] += 1;
        }
        v
    };
    let rows = parts(k);
    let cols = parts(l);
    FlowSystem::new(rows, cols).expect("compositions share their total")
}

/// Even-sum uniform degree sequence for a single community.
pub fn degree_sequence(seed: u64, n: usize, max: u32) -> Vec<u32> {
    let mut rng = seeded_rng(seed);
    let mut d: Vec<u32> = (0..n).map(|_| rng.random_range(1..=max)).collect();
    if d.iter().sum::<u32>() % 2 == 1 {
        d[0] += 1;
    }
    d
}
