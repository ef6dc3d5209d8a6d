//! Independent checks on the engine: finite-horizon dynamic programming and seeded Monte
//! Carlo simulation of the surplus process, both in `f64`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, RuinError};
use crate::joint::JointMatrix;

/// Truncated joint mass above this is reported with Monte Carlo results.
pub const MC_TAIL_WARNING: f64 = 1e-6;
/// Below this tail mass the DP accepts a matrix whatever its exact window.
const DP_TAIL_ALLOWANCE: f64 = 1e-12;
const PATHS_PER_CHUNK: u64 = 65_536;
pub const GENERATOR: &str = "ChaCha8";

/// Survival probabilities over a fixed number of claim pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpState {
    pub pairs: usize,
    /// φ_pairs(u) for u = 0..=u_max.
    pub values: Vec<f64>,
}

impl DpState {
    pub fn psi(&self, u: usize) -> f64 {
        1.0 - self.values[u]
    }
}

/// Capital reachable within `pairs` pairs from any u ≤ u_max; larger claims lose anyway.
pub fn dp_window(u_max: usize, pairs: usize) -> usize {
    u_max + 2 * pairs + 2
}

/// φ_pairs(u) for u = 0..=u_max: the probability that `W_u(n) > 0` for every n ≤ 2·pairs.
///
/// One pair from capital u survives iff X ≤ u and X + Y ≤ u + 1, leaving u + 2 - X - Y, so
/// φ_m(u) = Σ_{x ≤ u, x+y ≤ u+1} h(x, y) φ_{m-1}(u + 2 - x - y). Grouping by t = x + y, the
/// only excluded cell with t ≤ u + 1 is (u + 1, 0), which gives the O(u) form
/// φ_m(u) = Σ_{t=0}^{u+1} s_t φ_{m-1}(u + 2 - t) - h(u + 1, 0) φ_{m-1}(1).
pub fn finite_horizon_table(m: &JointMatrix, u_max: usize, pairs: usize) -> Result<DpState> {
    let needed = dp_window(u_max, pairs);
    if m.exact_through() < needed && m.tail_mass().to_f64() > DP_TAIL_ALLOWANCE {
        return Err(RuinError::WindowTooSmall {
            required: needed,
            available: m.exact_through(),
        });
    }
    let s: Vec<f64> = (0..=needed).map(|k| m.s(k).to_f64()).collect();
    let h0: Vec<f64> = (0..=needed).map(|k| m.h_col0(k).to_f64()).collect();

    let mut phi = vec![1.0; u_max + 2 * pairs + 1];
    for k in 1..=pairs {
        let cap = u_max + 2 * (pairs - k);
        let next: Vec<f64> = (0..=cap)
            .map(|u| {
                let mut acc = 0.0;
                for (t, st) in s.iter().enumerate().take(u + 2) {
                    acc += st * phi[u + 2 - t];
                }
                (acc - h0[u + 1] * phi[1]).clamp(0.0, 1.0)
            })
            .collect();
        phi = next;
    }
    phi.truncate(u_max + 1);
    Ok(DpState { pairs, values: phi })
}

pub fn finite_horizon_survival(m: &JointMatrix, u: usize, pairs: usize) -> Result<f64> {
    Ok(finite_horizon_table(m, u, pairs)?.values[u])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    /// Fraction of paths ruined within the horizon.
    pub estimate: f64,
    /// Binomial standard error sqrt(p (1 - p) / n).
    pub stderr: f64,
    pub paths: u64,
    pub seed: u64,
    pub generator: &'static str,
    pub warnings: Vec<String>,
}

/// Inverse-cdf sampler over the nonzero cells of a joint matrix.
struct PairSampler {
    cdf: Vec<f64>,
    cells: Vec<(i64, i64)>,
    total: f64,
}

impl PairSampler {
    fn new(m: &JointMatrix) -> Self {
        let mut cdf = Vec::new();
        let mut cells = Vec::new();
        let mut total = 0.0;
        for (x, row) in m.rows().iter().enumerate() {
            for (y, h) in row.iter().enumerate() {
                let p = h.to_f64();
                if p > 0.0 {
                    total += p;
                    cdf.push(total);
                    cells.push((x as i64, y as i64));
                }
            }
        }
        PairSampler { cdf, cells, total }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> (i64, i64) {
        let r = rng.random::<f64>() * self.total;
        let i = self
            .cdf
            .partition_point(|&c| c <= r)
            .min(self.cells.len() - 1);
        self.cells[i]
    }
}

/// Ruin frequency over `horizon_pairs` pairs across `n_paths` simulated paths.
///
/// Paths are split into fixed chunks of 65 536; chunk c draws from the ChaCha8 stream c of
/// `seed`, so results do not depend on the thread count.
pub fn monte_carlo_ruin(
    m: &JointMatrix,
    u: usize,
    horizon_pairs: usize,
    n_paths: u64,
    seed: u64,
) -> Result<McEstimate> {
    if n_paths == 0 {
        return Err(RuinError::Parameter("n_paths must be at least 1".into()));
    }
    let sampler = PairSampler::new(m);
    let mut warnings = Vec::new();
    let tail = m.tail_mass().to_f64();
    if tail > MC_TAIL_WARNING {
        warnings.push(format!(
            "joint matrix drops {tail:e} of probability mass; sampling ignores it"
        ));
    }
    let chunks = n_paths.div_ceil(PATHS_PER_CHUNK);
    let ruined: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let paths = PATHS_PER_CHUNK.min(n_paths - c * PATHS_PER_CHUNK);
            (0..paths)
                .filter(|_| path_ruined(&sampler, &mut rng, u as i64, horizon_pairs))
                .count() as u64
        })
        .sum();
    let p = ruined as f64 / n_paths as f64;
    Ok(McEstimate {
        estimate: p,
        stderr: (p * (1.0 - p) / n_paths as f64).sqrt(),
        paths: n_paths,
        seed,
        generator: GENERATOR,
        warnings,
    })
}

fn path_ruined(sampler: &PairSampler, rng: &mut ChaCha8Rng, u: i64, pairs: usize) -> bool {
    let mut w = u;
    for _ in 0..pairs {
        let (x, y) = sampler.sample(rng);
        w += 1 - x;
        if w <= 0 {
            return true;
        }
        w += 1 - y;
        if w <= 0 {
            return true;
        }
    }
    false
}
