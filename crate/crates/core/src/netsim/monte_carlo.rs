use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::simulate_inner;
use super::{LinkTally, NetworkConfig, ProtocolPlan};
use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959964;

/// Error count with a Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRate {
    pub errors: u64,
    pub total: u64,
    pub rate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl ErrorRate {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

pub fn wilson(errors: u64, total: u64) -> ErrorRate {
    if total == 0 {
        return ErrorRate { errors, total, rate: 0.0, lower: 0.0, upper: 1.0 };
    }
    let n = total as f64;
    let p = errors as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ErrorRate { errors, total, rate: p, lower: (center - half).max(0.0), upper: (center + half).min(1.0) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub trials: u64,
    pub base_seed: u64,
    pub blocks_per_trial: usize,
    pub delivered_a: u64,
    pub delivered_b: u64,
    pub message_error_rate: ErrorRate,
    pub block_error_rate: ErrorRate,
    /// Trials with at least one wrong recovery.
    pub trial_error_rate: ErrorRate,
    pub mean_throughput: f64,
    pub links: Vec<LinkTally>,
}

/// Independent trials with seeds `seed, seed + 1, …`, run in parallel and
/// aggregated in seed order.
pub fn monte_carlo(plan: &ProtocolPlan, config: &NetworkConfig, trials: u64, seed: u64) -> Result<MonteCarloReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    let runs = (0..trials)
        .into_par_iter()
        .map(|t| simulate_inner(plan, config, seed.wrapping_add(t), false))
        .collect::<Result<Vec<_>>>()?;

    let mut links: Vec<LinkTally> =
        runs[0].links.iter().map(|t| LinkTally { node: t.node, ..LinkTally::default() }).collect();
    let (mut da, mut db, mut msg_err, mut blk_err, mut trial_err, mut thr) = (0, 0, 0, 0, 0, 0.0);
    for r in &runs {
        da += r.delivered_a;
        db += r.delivered_b;
        msg_err += r.message_errors();
        blk_err += r.block_errors;
        trial_err += u64::from(r.message_errors() > 0);
        thr += r.throughput;
        for (acc, t) in links.iter_mut().zip(&r.links) {
            acc.attempts += t.attempts;
            acc.failures += t.failures;
        }
    }
    Ok(MonteCarloReport {
        trials,
        base_seed: seed,
        blocks_per_trial: plan.blocks,
        delivered_a: da,
        delivered_b: db,
        message_error_rate: wilson(msg_err, da + db + msg_err),
        block_error_rate: wilson(blk_err, trials * plan.blocks as u64),
        trial_error_rate: wilson(trial_err, trials),
        mean_throughput: thr / trials as f64,
        links,
    })
}
