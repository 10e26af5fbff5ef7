//! Line-network channel, block-Markov relay protocol and Monte Carlo harness.
//!
//! Nodes are stored 0-based; anything user-facing (errors, traces, tallies)
//! numbers them from 1 like the literature does.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{CodePoint, RealVector};

mod engine;
mod monte_carlo;
mod plan;

pub use engine::{
    run_chain, run_half_duplex, run_single_relay_bc, run_two_relay, simulate, trace_csv, BlockState, LinkTally,
    NodeDecode, Role, SimulationResult, TRACE_HEADER,
};
pub use monte_carlo::{monte_carlo, wilson, ErrorRate, MonteCarloReport, WILSON_Z};
pub use plan::{plan_protocol, plan_protocol_with, PlanOptions, ProtocolPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Duplex {
    #[default]
    Full,
    Half,
}

/// Powers and noise variances of a line network with unit channel gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkConfigRepr", deny_unknown_fields)]
pub struct NetworkConfig {
    powers: Vec<f64>,
    noise: Vec<f64>,
    #[serde(default)]
    duplex: Duplex,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkConfigRepr {
    powers: Vec<f64>,
    noise: Vec<f64>,
    #[serde(default)]
    duplex: Duplex,
}

impl TryFrom<NetworkConfigRepr> for NetworkConfig {
    type Error = Error;

    fn try_from(r: NetworkConfigRepr) -> Result<Self> {
        NetworkConfig::new(r.powers, r.noise, r.duplex)
    }
}

impl NetworkConfig {
    /// Zero noise variances are accepted and mean a noiseless receiver.
    pub fn new(powers: Vec<f64>, noise: Vec<f64>, duplex: Duplex) -> Result<Self> {
        if powers.len() < 3 {
            return Err(Error::InvalidParameter(format!(
                "a line network needs at least 3 nodes, got {}",
                powers.len()
            )));
        }
        if noise.len() != powers.len() {
            return Err(Error::DimensionMismatch { expected: powers.len(), got: noise.len() });
        }
        if let Some(i) = powers.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidParameter(format!("power of node {} must be positive", i + 1)));
        }
        if let Some(i) = noise.iter().position(|n| !(n.is_finite() && *n >= 0.0)) {
            return Err(Error::InvalidParameter(format!("noise variance of node {} must be non-negative", i + 1)));
        }
        Ok(NetworkConfig { powers, noise, duplex })
    }

    pub fn nodes(&self) -> usize {
        self.powers.len()
    }

    pub fn relays(&self) -> usize {
        self.powers.len() - 2
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    pub fn duplex(&self) -> Duplex {
        self.duplex
    }

    pub fn with_duplex(mut self, duplex: Duplex) -> Self {
        self.duplex = duplex;
        self
    }

    /// Same powers, every noise variance replaced by `n`.
    pub fn with_uniform_noise(mut self, n: f64) -> Result<Self> {
        let len = self.noise.len();
        self.noise = vec![n; len];
        NetworkConfig::new(self.powers, self.noise, self.duplex)
    }
}

/// A node's channel input: exact lattice point times a real amplitude gain.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub point: CodePoint,
    pub gain: f64,
}

impl Transmission {
    pub fn signal(&self) -> Vec<f64> {
        self.point.real_coords(self.gain)
    }
}

/// One channel use of the line network.
///
/// Each receiver hears the sum of its neighbours' transmissions plus fresh
/// Gaussian noise of its own variance; its own signal is already subtracted.
/// Outputs are produced in increasing node order, which fixes the order of
/// noise draws.
pub fn awgn_step<R: Rng + ?Sized>(
    inputs: &BTreeMap<usize, Transmission>,
    receivers: &[usize],
    config: &NetworkConfig,
    rng: &mut R,
) -> Result<BTreeMap<usize, RealVector>> {
    let l = config.nodes();
    let dim = match inputs.values().next() {
        Some(t) => t.point.dimension(),
        None => return Err(Error::InvalidParameter("no transmitting node".into())),
    };
    for (&node, t) in inputs {
        if node >= l {
            return Err(Error::InvalidParameter(format!("node {} is outside the network", node + 1)));
        }
        if t.point.dimension() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: t.point.dimension() });
        }
    }
    let mut rx: Vec<usize> = receivers.to_vec();
    rx.sort_unstable();
    rx.dedup();
    let mut out = BTreeMap::new();
    for j in rx {
        if j >= l {
            return Err(Error::InvalidParameter(format!("node {} is outside the network", j + 1)));
        }
        if config.duplex == Duplex::Half && inputs.contains_key(&j) {
            return Err(Error::HalfDuplexConflict { node: j + 1 });
        }
        let mut y = vec![0.0; dim];
        let neighbours = [j.checked_sub(1), Some(j + 1)];
        for t in neighbours.into_iter().flatten().filter_map(|k| inputs.get(&k)) {
            for (yi, xi) in y.iter_mut().zip(t.signal()) {
                *yi += xi;
            }
        }
        let var = config.noise[j];
        if var > 0.0 {
            let normal = Normal::new(0.0, var.sqrt()).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            for yi in y.iter_mut() {
                *yi += normal.sample(rng);
            }
        }
        out.insert(j, RealVector::new(y)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tx(v: i64) -> Transmission {
        Transmission { point: CodePoint::new(vec![v, -v], int(1)).unwrap(), gain: 1.0 }
    }

    #[test]
    fn noiseless_sum() {
        let cfg = NetworkConfig::new(vec![1.0; 4], vec![0.0; 4], Duplex::Full).unwrap();
        let inputs = BTreeMap::from([(0, tx(1)), (2, tx(2))]);
        let out = awgn_step(&inputs, &[1], &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(out[&1].as_slice(), &[3.0, -3.0]);
    }

    #[test]
    fn single_transmitter() {
        let cfg = NetworkConfig::new(vec![1.0; 4], vec![0.0; 4], Duplex::Full).unwrap();
        let inputs = BTreeMap::from([(1, tx(2))]);
        let out = awgn_step(&inputs, &[0, 2, 3], &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(out[&0].as_slice(), &[2.0, -2.0]);
        assert_eq!(out[&2].as_slice(), &[2.0, -2.0]);
        assert_eq!(out[&3].as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn seeded_noise_repeats() {
        let cfg = NetworkConfig::new(vec![1.0; 3], vec![0.5; 3], Duplex::Full).unwrap();
        let inputs = BTreeMap::from([(0, tx(1))]);
        let a = awgn_step(&inputs, &[1, 2], &cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = awgn_step(&inputs, &[1, 2], &cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[&1].as_slice(), &[1.0, -1.0]);
    }

    #[test]
    fn half_duplex_conflict() {
        let cfg = NetworkConfig::new(vec![1.0; 4], vec![0.0; 4], Duplex::Half).unwrap();
        let inputs = BTreeMap::from([(0, tx(1)), (1, tx(1))]);
        let err = awgn_step(&inputs, &[1], &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert_eq!(err, Error::HalfDuplexConflict { node: 2 });
        assert_eq!(err.to_string(), "half-duplex conflict at node 2");
    }

    #[test]
    fn config_validation() {
        assert!(NetworkConfig::new(vec![1.0; 2], vec![1.0; 2], Duplex::Full).is_err());
        assert!(NetworkConfig::new(vec![1.0, 0.0, 1.0], vec![1.0; 3], Duplex::Full).is_err());
        assert!(NetworkConfig::new(vec![1.0; 3], vec![1.0, -1.0, 1.0], Duplex::Full).is_err());
        assert!(NetworkConfig::new(vec![1.0; 3], vec![1.0; 4], Duplex::Full).is_err());
    }
}
