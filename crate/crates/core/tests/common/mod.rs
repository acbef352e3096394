#![allow(dead_code)]

use proptest::prelude::*;
use qmdp_core::mdp::generate_garnet;
use qmdp_core::wealth::OrdinalScale;
use qmdp_core::{GarnetConfig, Horizon, Mdp, StepFunction, WealthDistribution, WealthSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn garnet(n_states: usize, n_actions: usize, branching: usize, horizon: usize, seed: u64) -> Mdp {
    let mut cfg = GarnetConfig::new(n_states, n_actions, seed);
    cfg.branching = branching;
    cfg.horizon = Horizon::Finite(horizon);
    generate_garnet(&cfg).unwrap()
}

/// Random kernel over `n_states` with integer reward labels in `0..labels`,
/// together with a random class-transition table over `classes` classes.
pub fn ordinal_instance(n_states: usize, n_actions: usize, classes: usize, labels: usize, horizon: usize, seed: u64) -> (Mdp, WealthSpace) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for s in 0..n_states {
        for a in 0..n_actions {
            let k = rng.gen_range(1..=n_states.min(3));
            let next = rand::seq::index::sample(&mut rng, n_states, k);
            let mut weights: Vec<f64> = (0..k).map(|_| rng.gen_range(1..=4) as f64).collect();
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            for (s2, p) in next.iter().zip(weights) {
                entries.push((s, a, s2, p, rng.gen_range(0..labels) as f64));
            }
        }
    }
    let m = Mdp::from_transitions(n_states, n_actions, entries, 0, Horizon::Finite(horizon)).unwrap();
    let names = (0..classes).map(|c| format!("c{c}")).collect();
    let table = (0..classes).map(|_| (0..labels).map(|_| rng.gen_range(0..classes)).collect()).collect();
    let scale = OrdinalScale::new(names, table, rng.gen_range(0..classes)).unwrap();
    (m, WealthSpace::ordinal(scale))
}

/// Five states with rewards in `{-1, -0.75, -0.5, -0.25}` except for an
/// absorbing zero-reward state 4. Wealth falls by at least 0.25 per step
/// outside the sink, so thresholds above `-K/4` are settled after `K` steps.
pub fn nonpositive_instance(seed: u64) -> Mdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, n_actions) = (5, 2);
    let mut entries = Vec::new();
    for s in 0..n {
        for a in 0..n_actions {
            if s == n - 1 {
                entries.push((s, a, s, 1.0, 0.0));
                continue;
            }
            let k = rng.gen_range(1..=3);
            let next = rand::seq::index::sample(&mut rng, n, k);
            let mut weights: Vec<f64> = (0..k).map(|_| rng.gen_range(1..=5) as f64).collect();
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            let r = -(rng.gen_range(1..=4) as f64) / 4.0;
            for (s2, p) in next.iter().zip(weights) {
                entries.push((s, a, s2, p, r));
            }
        }
    }
    Mdp::from_transitions(n, n_actions, entries, 0, Horizon::Infinite).unwrap()
}

/// Thresholds live on the grid `k / 4`, so distinct functions share
/// breakpoints and exact translations by grid rewards stay exact.
pub fn arb_step() -> impl Strategy<Value = StepFunction> {
    (0.0..=1.0f64, prop::collection::btree_map(-12i32..12, (0u8..3, 0.0..=1.0f64, 0.0..=1.0f64), 0..8)).prop_map(
        |(base, picks)| {
            let mut entries = Vec::new();
            for (k, (mode, v1, v2)) in picks {
                let x = k as f64 / 4.0;
                match mode {
                    0 => entries.push((x, true, v1)),
                    1 => entries.push((x, false, v1)),
                    _ => {
                        entries.push((x, true, v1));
                        entries.push((x, false, v2));
                    }
                }
            }
            StepFunction::new(base, entries).unwrap()
        },
    )
}

/// Points hitting every piece of a grid step function: each grid threshold
/// and the midpoints between them, plus far-out points.
pub fn probe_points() -> Vec<f64> {
    let mut xs = vec![-100.0, 100.0];
    for k in -40..40 {
        xs.push(k as f64 / 4.0);
        xs.push(k as f64 / 4.0 + 0.125);
    }
    xs.sort_by(f64::total_cmp);
    xs
}

pub fn arb_distribution() -> impl Strategy<Value = WealthDistribution> {
    prop::collection::vec((-50i32..50, 0.01..1.0f64), 1..12).prop_map(|atoms| {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        WealthDistribution::from_atoms(atoms.into_iter().map(|(w, p)| (w as f64 / 4.0, p / total)).collect()).unwrap()
    })
}
