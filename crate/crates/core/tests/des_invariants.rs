use std::collections::HashMap;

use txconfirm_core::priority::PriorityTraffic;
use txconfirm_core::sim::{estimate, run_replication, run_replication_observed, BlockFill, SimConfig};
use txconfirm_core::{solve, QueueConfig, ServiceDistribution};

fn exp(mu: f64) -> ServiceDistribution {
    ServiceDistribution::exponential(mu).unwrap()
}

fn traffic(rates: Vec<f64>, s: ServiceDistribution, b: usize) -> PriorityTraffic {
    PriorityTraffic::new(rates, s, b).unwrap()
}

#[test]
fn frozen_blocks_keep_their_members() {
    let b = 5;
    let cfg = SimConfig::new(traffic(vec![2.0, 1.5], exp(1.0), b), 11)
        .with_fill(BlockFill::Frozen)
        .with_warmup(0)
        .with_horizon(20_000);
    let mut seen = HashMap::new();
    let mut last_confirmed = 0.0;
    run_replication_observed(&cfg, 0, |block| {
        assert!(!block.members.is_empty() && block.members.len() <= b);
        assert!(block.confirmed >= block.opened && block.opened >= last_confirmed);
        last_confirmed = block.confirmed;
        for tx in &block.members {
            // joined on arrival into the open block, or seeded when it opened
            assert!(tx.joined >= block.opened && tx.joined <= block.confirmed);
            assert!(tx.joined == tx.arrival || tx.joined == block.opened);
            assert!(seen.insert(tx.id, block.confirmed).is_none(), "tx {} confirmed twice", tx.id);
        }
    });
    assert!(seen.len() >= 20_000);
}

#[test]
fn fifo_within_class_for_both_fills() {
    for fill in [BlockFill::Frozen, BlockFill::PriorityAtCompletion] {
        let cfg = SimConfig::new(traffic(vec![1.5, 2.0, 0.5], exp(1.0), 6), 5)
            .with_fill(fill)
            .with_warmup(0)
            .with_horizon(20_000);
        let mut last_arrival = [f64::NEG_INFINITY; 3];
        run_replication_observed(&cfg, 1, |block| {
            assert!(block.members.len() <= 6);
            let mut in_block = [f64::NEG_INFINITY; 3];
            for tx in &block.members {
                assert!(tx.arrival > last_arrival[tx.class], "{fill:?}: class {} overtaken", tx.class);
                in_block[tx.class] = in_block[tx.class].max(tx.arrival);
                assert!(tx.arrival <= block.confirmed);
            }
            for k in 0..3 {
                last_arrival[k] = last_arrival[k].max(in_block[k]);
            }
        });
    }
}

#[test]
fn priority_fill_never_skips_a_waiting_high_class() {
    // if a block is not full every waiting transaction was taken; if it is
    // full no higher class is left behind while a lower class rides
    let b = 4;
    let cfg = SimConfig::new(traffic(vec![2.5, 1.0], exp(1.0), b), 9)
        .with_warmup(0)
        .with_horizon(10_000);
    let mut confirmed_at: HashMap<u64, f64> = HashMap::new();
    let mut blocks = Vec::new();
    run_replication_observed(&cfg, 0, |block| {
        for tx in &block.members {
            confirmed_at.insert(tx.id, block.confirmed);
        }
        blocks.push(block.clone());
    });
    for block in &blocks {
        if block.members.iter().any(|t| t.class == 1) {
            // every high-class transaction that arrived before this block
            // completed must be confirmed no later than it
            let lows: Vec<_> = block.members.iter().filter(|t| t.class == 1).collect();
            assert!(!lows.is_empty());
            let waiting_high = blocks
                .iter()
                .flat_map(|b| &b.members)
                .filter(|t| t.class == 0 && t.arrival < block.confirmed)
                .filter(|t| confirmed_at[&t.id] > block.confirmed)
                .count();
            assert_eq!(waiting_high, 0);
        }
    }
}

#[test]
fn idle_fraction_matches_empty_probability() {
    for (b, load) in [(1usize, 0.5), (2, 0.6), (5, 0.7), (10, 0.5)] {
        let s = exp(1.0);
        let lambda = load * b as f64;
        let p0 = solve(&QueueConfig::new(b, lambda, s).unwrap()).unwrap().p0;
        let est = estimate(&SimConfig::new(traffic(vec![lambda], s, b), 21).with_replications(20)).unwrap();
        assert!((est.idle_fraction - p0).abs() <= 0.02 * p0, "b={b}: {} vs {p0}", est.idle_fraction);
    }
}

#[test]
fn single_server_interval_covers_two() {
    let est = estimate(&SimConfig::new(traffic(vec![0.5], exp(1.0), 1), 2024)).unwrap();
    let (lo, hi) = est.class_interval(0);
    assert!(lo <= 2.0 && 2.0 <= hi, "[{lo}, {hi}]");
}

#[test]
fn golden_ratio_interval_covers_analysis() {
    let est = estimate(&SimConfig::new(traffic(vec![1.0], exp(1.0), 2), 77)).unwrap();
    let (lo, hi) = est.class_interval(0);
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    assert!(lo <= phi && phi <= hi, "[{lo}, {hi}]");
}

#[test]
fn littles_law_in_simulation() {
    let lambda = 7.0;
    let est = estimate(&SimConfig::new(traffic(vec![5.0, 2.0], exp(1.0), 10), 8).with_replications(10)).unwrap();
    let gap = (est.mean_in_system - lambda * est.overall_mean).abs() / est.mean_in_system;
    assert!(gap < 0.02, "{gap}");
}

#[test]
fn same_seed_same_numbers() {
    let cfg = SimConfig::new(traffic(vec![3.0, 1.0], exp(1.0), 5), 99)
        .with_replications(4)
        .with_horizon(5_000)
        .with_warmup(500);
    assert_eq!(estimate(&cfg).unwrap(), estimate(&cfg).unwrap());
    let other = SimConfig { seed: 100, ..cfg.clone() };
    assert_ne!(run_replication(&cfg, 0), run_replication(&other, 0));
    assert_ne!(run_replication(&cfg, 0), run_replication(&cfg, 1));
}
