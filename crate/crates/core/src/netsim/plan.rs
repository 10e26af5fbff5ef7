use serde::{Deserialize, Serialize};

use super::NetworkConfig;
use crate::error::{Error, Result};
use crate::field::nearest_prime;
use crate::lattice::LatticeSpec;
use crate::rates::{self, Orientation, PairPattern};
use crate::rational::{self, Rational};

/// Everything the protocol engine needs besides the channel.
///
/// Node `i` transmits points of `s_i·Λ_c ∩ V(s_i·Λ)` with real amplitude
/// `unit · √12/a`, where `unit` is shared by all nodes of the same parity.
/// The smallest scale in each parity group is 1, so its unit is the square
/// root of that node's truncated power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolPlan {
    pub spec: LatticeSpec,
    pub rate_sym: f64,
    pub blocks: usize,
    /// Truncated powers `P′`.
    pub powers: Vec<f64>,
    #[serde(with = "rational::vec_as_string")]
    pub scales: Vec<Rational>,
    /// Units of the odd-numbered (Node 1, 3, …) and even-numbered groups.
    pub units: [f64; 2],
    /// Square-root power ratio of each pair `(i, i + 2)`.
    pub pairs: Vec<PairPattern>,
    /// Message alphabet sizes of the two directions.
    pub alphabet: [u64; 2],
}

impl ProtocolPlan {
    pub fn nodes(&self) -> usize {
        self.scales.len()
    }

    pub fn relays(&self) -> usize {
        self.scales.len() - 2
    }

    /// Ratio of the pair (Node 1, Node 3).
    pub fn n_ratio(&self) -> u64 {
        self.pairs[0].ratio
    }

    /// Ratio of the pair (Node 2, Node 4); 1 when there is no such pair.
    pub fn m_ratio(&self) -> u64 {
        self.pairs.get(1).map_or(1, |p| p.ratio)
    }

    pub fn p(&self) -> f64 {
        self.units[0]
    }

    pub fn q(&self) -> f64 {
        self.units[1]
    }

    pub fn prime(&self) -> u64 {
        self.spec.prime()
    }

    /// Layout of the pair starting at 0-based node `first`.
    pub fn orientation(&self, first: usize) -> Orientation {
        self.pairs[first].orientation
    }

    /// Amplitude gain applied to the exact point of node `i`.
    pub fn amplitude(&self, i: usize) -> f64 {
        self.units[i % 2] * self.spec.unit_power_gain()
    }

    /// Information bits per channel use carried by a full codebook.
    pub fn code_rate(&self) -> f64 {
        (self.prime() as f64).log2() / self.spec.dimension() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanOptions {
    pub rate_sym: f64,
    pub dimension: usize,
    pub blocks: usize,
    /// Per-direction rates; the smaller one is padded with zero messages.
    pub rate_a: Option<f64>,
    pub rate_b: Option<f64>,
    /// Truncate the powers into a square pattern instead of requiring one.
    pub truncate: bool,
    pub generator: Option<Vec<u64>>,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            rate_sym: 1.0,
            dimension: 2,
            blocks: 10,
            rate_a: None,
            rate_b: None,
            truncate: false,
            generator: None,
        }
    }
}

/// Plan for powers that already form a square pattern.
pub fn plan_protocol(config: &NetworkConfig, rate_sym: f64, n: usize, blocks: usize) -> Result<ProtocolPlan> {
    plan_protocol_with(config, &PlanOptions { rate_sym, dimension: n, blocks, ..PlanOptions::default() })
}

fn truncated_powers(config: &NetworkConfig) -> Result<Vec<f64>> {
    let p = config.powers();
    match p.len() {
        3 => {
            let t = rates::truncate_powers(p[0], p[2])?;
            Ok(vec![t.p1, p[1], t.p3])
        }
        4 if config.noise().iter().all(|&n| n > 0.0) => {
            Ok(rates::optimize_truncated(p, config.noise())?.truncated_powers.to_vec())
        }
        4 => Ok(rates::appendix_candidate(p)?.0.to_vec()),
        l => Err(Error::InfeasiblePattern(format!(
            "automatic truncation covers 3 and 4 nodes; a {l}-node chain needs square power ratios"
        ))),
    }
}

pub fn plan_protocol_with(config: &NetworkConfig, opts: &PlanOptions) -> Result<ProtocolPlan> {
    let positive_rate = |r: f64| r.is_finite() && r > 0.0;
    if !positive_rate(opts.rate_sym) {
        return Err(Error::InvalidParameter(format!("rate must be positive, got {}", opts.rate_sym)));
    }
    if opts.dimension == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    if opts.blocks == 0 {
        return Err(Error::InvalidParameter("block count must be at least 1".into()));
    }
    let rate_a = opts.rate_a.unwrap_or(opts.rate_sym);
    let rate_b = opts.rate_b.unwrap_or(opts.rate_sym);
    if !positive_rate(rate_a) || !positive_rate(rate_b) {
        return Err(Error::InvalidParameter("per-direction rates must be positive".into()));
    }
    let explicit = opts.rate_a.is_some() || opts.rate_b.is_some();
    let rate_sym = if explicit { rate_a.max(rate_b) } else { opts.rate_sym };

    let n = opts.dimension;
    let exponent = n as f64 * rate_sym;
    if exponent > 22.0 {
        return Err(Error::InvalidParameter(format!("n·R = {exponent} exceeds the supported codebook size")));
    }
    let prime = nearest_prime(exponent.exp2());
    let generator = opts.generator.clone().unwrap_or_else(|| LatticeSpec::default_generator(n, prime));
    if generator.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: generator.len() });
    }
    let spec = LatticeSpec::new(prime, Rational::from_integer(prime as i128), generator)?;

    let powers = if opts.truncate { truncated_powers(config)? } else { config.powers().to_vec() };
    let l = powers.len();
    let mut pairs = Vec::with_capacity(l - 2);
    for j in 0..l - 2 {
        let pair = rates::square_pattern(j, powers[j], powers[j + 2]).ok_or_else(|| {
            Error::InfeasiblePattern(format!(
                "P{}/P{} = {} is not the square of an integer or its reciprocal; truncate the powers first",
                j + 1,
                j + 3,
                powers[j] / powers[j + 2]
            ))
        })?;
        if pair.ratio % prime == 0 {
            return Err(Error::DegenerateCoefficient { coefficient: pair.ratio as i64, prime });
        }
        pairs.push(pair);
    }

    let mut scales = vec![Rational::from_integer(1); l];
    for j in 0..l - 2 {
        let r = Rational::from_integer(pairs[j].ratio as i128);
        scales[j + 2] = if pairs[j].orientation.later_larger(j) { scales[j] * r } else { scales[j] / r };
    }
    let mut units = [0.0; 2];
    for (parity, unit) in units.iter_mut().enumerate() {
        let group: Vec<usize> = (parity..l).step_by(2).collect();
        let min = group.iter().map(|&i| scales[i]).min().expect("every group is non-empty");
        for &i in &group {
            scales[i] /= min;
        }
        let base = group.iter().copied().find(|&i| scales[i] == Rational::from_integer(1)).expect("normalised");
        *unit = powers[base].sqrt();
    }

    let alphabet_for = |r: f64| -> u64 {
        if explicit && r < rate_sym {
            ((n as f64 * r).exp2().round() as u64).clamp(1, prime)
        } else {
            prime
        }
    };
    Ok(ProtocolPlan {
        spec,
        rate_sym,
        blocks: opts.blocks,
        powers,
        scales,
        units,
        pairs,
        alphabet: [alphabet_for(rate_a), alphabet_for(rate_b)],
    })
}
