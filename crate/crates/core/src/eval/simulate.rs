use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mdp::Mdp;
use crate::policy::WealthMarkovPolicy;
use crate::wealth::WealthSpace;

/// Episodes simulated per random substream.
const CHUNK: usize = 4096;

/// Final wealth of `n` independent episodes under `pi`.
///
/// Episodes are split into fixed-size chunks; chunk `k` draws from its own
/// generator seeded with `seed + k`, so the output does not depend on the
/// number of worker threads.
pub fn simulate(m: &Mdp, space: &WealthSpace, pi: &WealthMarkovPolicy, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Argument("need at least one episode".into()));
    }
    m.ensure_valid()?;
    let horizon = m.finite_horizon()?;
    pi.check_shape(m.n_states(), m.n_actions(), Some(horizon))?;

    let chunks: Vec<Result<Vec<f64>>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let len = CHUNK.min(n - k * CHUNK);
            (0..len).map(|_| episode(m, space, pi, horizon, &mut rng)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    for chunk in chunks {
        out.extend(chunk?);
    }
    Ok(out)
}

fn episode(m: &Mdp, space: &WealthSpace, pi: &WealthMarkovPolicy, horizon: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut s = m.initial_state();
    let mut w = space.w0();
    for t in 1..=horizon {
        let edges = m.edges(s, pi.action(t, s, w));
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        // falls back to the last edge when rounding leaves u above the total
        let mut chosen = edges[edges.len() - 1];
        for e in edges {
            acc += e.prob;
            if u < acc {
                chosen = *e;
                break;
            }
        }
        w = space.accumulate(w, chosen.reward, t - 1)?;
        s = chosen.next;
    }
    Ok(w)
}
