use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{awgn_step, Duplex, NetworkConfig, ProtocolPlan, Transmission};
use crate::error::{Error, Result};
use crate::field::{phi_inverse, solve_coefficient, CombinationKey, FieldElement, MessageSlot, Stream};
use crate::lattice::{mod_point, CodePoint, RealVector};
use crate::rational::{self, Rational};
use crate::scheme::{decode_point_to_point, encode, redistribution_transform, DecodedCombination, SumDecoder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    End,
    Relay,
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Role::End => "end",
            Role::Relay => "relay",
        })
    }
}

/// What one node decoded in one block.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeDecode {
    pub role: Role,
    /// Field combination carried by the decoded point.
    pub key: CombinationKey,
    /// Relays only: the decoded lattice combination.
    pub combination: Option<DecodedCombination>,
    /// Decoded point equals the noiseless one.
    pub link_ok: bool,
    /// End nodes only: recovered message, its value and whether it is correct.
    pub recovered: Option<(MessageSlot, FieldElement, bool)>,
}

/// Snapshot of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockState {
    pub block: usize,
    pub message_a: FieldElement,
    pub message_b: FieldElement,
    /// Exact transmitted point and its field combination, per node.
    pub transmitted: Vec<Option<(CodePoint, CombinationKey)>>,
    pub decodes: Vec<Option<NodeDecode>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LinkTally {
    /// Receiving node, numbered from 1.
    pub node: usize,
    pub attempts: u64,
    pub failures: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub blocks: usize,
    pub slots_per_block: usize,
    /// Messages of stream `a` correctly recovered at the right end.
    pub delivered_a: u64,
    /// Messages of stream `b` correctly recovered at the left end.
    pub delivered_b: u64,
    pub message_errors_a: u64,
    pub message_errors_b: u64,
    /// Blocks with at least one wrong recovery.
    pub block_errors: u64,
    /// Delivered bits per channel use in the weaker direction.
    pub throughput: f64,
    pub links: Vec<LinkTally>,
    #[serde(skip)]
    pub trace: Vec<BlockState>,
}

impl SimulationResult {
    pub fn delivered(&self) -> u64 {
        self.delivered_a.min(self.delivered_b)
    }

    pub fn message_errors(&self) -> u64 {
        self.message_errors_a + self.message_errors_b
    }

    pub fn messages(&self) -> u64 {
        self.delivered_a + self.delivered_b + self.message_errors()
    }
}

pub const TRACE_HEADER: &str = "block,node,role,field_combination,decode_ok";

/// Per-block trace as CSV, one row per node that decoded something.
pub fn trace_csv(trace: &[BlockState]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for state in trace {
        for (i, d) in state.decodes.iter().enumerate() {
            let Some(d) = d else { continue };
            let ok = d.recovered.map_or(d.link_ok, |r| r.2);
            out.push_str(&format!("{},{},{},{},{}\n", state.block, i + 1, d.role, d.key, ok));
        }
    }
    out
}

struct Engine<'a> {
    plan: &'a ProtocolPlan,
    config: &'a NetworkConfig,
    trace: bool,
    decoders: HashMap<(i64, Rational), SumDecoder>,
}

/// End-node bookkeeping: messages it knows and the stream it is after.
struct Sink {
    node: usize,
    neighbour: usize,
    wanted: Stream,
    recovered: BTreeMap<usize, FieldElement>,
}

impl<'a> Engine<'a> {
    fn new(plan: &'a ProtocolPlan, config: &'a NetworkConfig, trace: bool) -> Result<Self> {
        if plan.nodes() != config.nodes() {
            return Err(Error::InvalidParameter(format!(
                "plan has {} nodes, network has {}",
                plan.nodes(),
                config.nodes()
            )));
        }
        Ok(Engine { plan, config, trace, decoders: HashMap::new() })
    }

    fn normalise(&self, y: &RealVector, node: usize) -> Vec<f64> {
        // both neighbours share the opposite parity, hence one amplitude
        let g = self.plan.amplitude(node + 1);
        y.iter().map(|v| v / g).collect()
    }

    fn relay_decode(
        &mut self,
        j: usize,
        y: &[f64],
        tx: &[Option<(CodePoint, CombinationKey)>],
    ) -> Result<Option<(DecodedCombination, CombinationKey, bool)>> {
        let spec = &self.plan.spec;
        let scales = &self.plan.scales;
        let prime = spec.prime();
        match (&tx[j - 1], &tx[j + 1]) {
            (Some(l), Some(r)) => {
                let (sl, sr) = (scales[j - 1], scales[j + 1]);
                let theta = sl.min(sr);
                let alpha = rational::integer_ratio(&sl.max(sr), &theta).ok_or(Error::ScaleMismatch)? as i64;
                let decoder = match self.decoders.entry((alpha, theta)) {
                    std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                    std::collections::hash_map::Entry::Vacant(e) => e.insert(SumDecoder::new(alpha, &theta, spec)?),
                };
                let decoded = decoder.decode(y)?;
                let cl = rational::integer_ratio(&sl, &theta).ok_or(Error::ScaleMismatch)? as i64;
                let cr = rational::integer_ratio(&sr, &theta).ok_or(Error::ScaleMismatch)? as i64;
                let key = CombinationKey::linear(&[(cl, &l.1), (cr, &r.1)], prime);
                let expected = mod_point(&l.0.checked_add(&r.0)?, &decoded.modulus, spec)?;
                let ok = decoded.point == expected;
                Ok(Some((decoded, key, ok)))
            }
            (Some(x), None) | (None, Some(x)) => {
                let s = if tx[j - 1].is_some() { scales[j - 1] } else { scales[j + 1] };
                let t = decode_point_to_point(y, &s, spec)?;
                let ok = t == x.0;
                Ok(Some((DecodedCombination::new(t, s, s)?, x.1.clone(), ok)))
            }
            (None, None) => Ok(None),
        }
    }

    /// Decode the neighbouring relay, strip known terms, solve for the newest
    /// unknown message.
    fn end_decode(
        &self,
        sink: &mut Sink,
        y: &[f64],
        incoming: &(CodePoint, CombinationKey),
        own: &[FieldElement],
        truth: &[FieldElement],
    ) -> Result<NodeDecode> {
        let spec = &self.plan.spec;
        let prime = spec.prime();
        let s = self.plan.scales[sink.neighbour];
        let t = decode_point_to_point(y, &s, spec)?;
        let link_ok = t == incoming.0;
        let u = phi_inverse(&t, &s, spec)?;
        let key = &incoming.1;
        let target = key
            .terms()
            .iter()
            .filter(|(_, slot)| slot.stream == sink.wanted)
            .max_by_key(|(_, slot)| slot.block)
            .copied();
        let mut recovered = None;
        if let Some((c, slot)) = target {
            let known =
                key.terms().iter().filter(|(_, s)| *s != slot).try_fold(FieldElement::zero(prime), |acc, &(k, s)| {
                    let w = if s.stream == sink.wanted {
                        sink.recovered.get(&s.block).copied()
                    } else {
                        Some(own[s.block - 1])
                    };
                    w.map(|w| acc + w.scale(k))
                });
            if let Some(known) = known {
                let w = solve_coefficient(u - known, c)?;
                sink.recovered.insert(slot.block, w);
                recovered = Some((slot, w, w == truth[slot.block - 1]));
            }
        }
        Ok(NodeDecode { role: Role::End, key: key.clone(), combination: None, link_ok, recovered })
    }

    fn run(&mut self, seed: u64, half: bool) -> Result<SimulationResult> {
        let plan = self.plan;
        let spec = &plan.spec;
        let prime = spec.prime();
        let l = plan.nodes();
        let mut msg_rng = ChaCha8Rng::seed_from_u64(seed);
        msg_rng.set_stream(0);
        let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
        noise_rng.set_stream(1);

        let mut a_msgs: Vec<FieldElement> = Vec::with_capacity(plan.blocks);
        let mut b_msgs: Vec<FieldElement> = Vec::with_capacity(plan.blocks);
        let mut pending: Vec<Option<(CodePoint, CombinationKey)>> = vec![None; l];
        let mut left = Sink { node: 0, neighbour: 1, wanted: Stream::B, recovered: BTreeMap::new() };
        let mut right = Sink { node: l - 1, neighbour: l - 2, wanted: Stream::A, recovered: BTreeMap::new() };
        let mut links: Vec<LinkTally> = (1..=l).map(|node| LinkTally { node, ..LinkTally::default() }).collect();
        let mut result = SimulationResult {
            blocks: plan.blocks,
            slots_per_block: if half { 2 } else { 1 },
            delivered_a: 0,
            delivered_b: 0,
            message_errors_a: 0,
            message_errors_b: 0,
            block_errors: 0,
            throughput: 0.0,
            links: Vec::new(),
            trace: Vec::new(),
        };

        for block in 1..=plan.blocks {
            let wa = FieldElement::new(msg_rng.random_range(0..plan.alphabet[0]), prime)?;
            let wb = FieldElement::new(msg_rng.random_range(0..plan.alphabet[1]), prime)?;
            a_msgs.push(wa);
            b_msgs.push(wb);

            let mut tx = std::mem::replace(&mut pending, vec![None; l]);
            tx[0] = Some((encode(wa, &plan.scales[0], spec)?, CombinationKey::single(MessageSlot::a(block))));
            tx[l - 1] = Some((encode(wb, &plan.scales[l - 1], spec)?, CombinationKey::single(MessageSlot::b(block))));

            let inputs_for = |parity: Option<usize>| -> BTreeMap<usize, Transmission> {
                tx.iter()
                    .enumerate()
                    .filter(|(i, _)| parity.is_none_or(|p| i % 2 == p))
                    .filter_map(|(i, t)| {
                        t.as_ref().map(|(pt, _)| (i, Transmission { point: pt.clone(), gain: plan.amplitude(i) }))
                    })
                    .collect()
            };
            let received = if half {
                // slot A: Node 1, 3, … transmit; slot B: Node 2, 4, …
                let mut out = BTreeMap::new();
                for parity in 0..2 {
                    let receivers: Vec<usize> = (0..l).filter(|i| i % 2 != parity).collect();
                    out.extend(awgn_step(&inputs_for(Some(parity)), &receivers, self.config, &mut noise_rng)?);
                }
                out
            } else {
                let all: Vec<usize> = (0..l).collect();
                awgn_step(&inputs_for(None), &all, self.config, &mut noise_rng)?
            };

            let mut decodes: Vec<Option<NodeDecode>> = vec![None; l];
            for j in 1..l - 1 {
                let y = self.normalise(&received[&j], j);
                let Some((dc, key, ok)) = self.relay_decode(j, &y, &tx)? else { continue };
                links[j].attempts += 1;
                links[j].failures += u64::from(!ok);
                let out = redistribution_transform(&dc, dc.alpha(), &plan.scales[j], spec)?;
                pending[j] = Some((out, key.clone()));
                decodes[j] =
                    Some(NodeDecode { role: Role::Relay, key, combination: Some(dc), link_ok: ok, recovered: None });
            }

            let mut block_error = false;
            for (sink, own, truth) in [(&mut left, &a_msgs, &b_msgs), (&mut right, &b_msgs, &a_msgs)] {
                let Some(incoming) = tx[sink.neighbour].as_ref() else { continue };
                let node = sink.node;
                let y = self.normalise(&received[&node], node);
                let d = self.end_decode(sink, &y, incoming, own, truth)?;
                links[node].attempts += 1;
                links[node].failures += u64::from(!d.link_ok);
                if let Some((_, _, ok)) = d.recovered {
                    let (delivered, errors) = match sink.wanted {
                        Stream::A => (&mut result.delivered_a, &mut result.message_errors_a),
                        Stream::B => (&mut result.delivered_b, &mut result.message_errors_b),
                    };
                    if ok {
                        *delivered += 1;
                    } else {
                        *errors += 1;
                        block_error = true;
                    }
                }
                decodes[node] = Some(d);
            }
            result.block_errors += u64::from(block_error);

            if self.trace {
                result.trace.push(BlockState { block, message_a: wa, message_b: wb, transmitted: tx, decodes });
            }
        }
        result.links = links;
        result.throughput =
            result.delivered() as f64 * plan.rate_sym / (plan.blocks as f64 * result.slots_per_block as f64);
        Ok(result)
    }
}

fn run(plan: &ProtocolPlan, config: &NetworkConfig, seed: u64, half: bool, trace: bool) -> Result<SimulationResult> {
    Engine::new(plan, config, trace)?.run(seed, half)
}

/// Full-duplex block-Markov relaying over any line (`K = nodes − 2` relays).
/// Each end node recovers the opposite stream with a delay of `K` blocks.
pub fn run_chain(plan: &ProtocolPlan, config: &NetworkConfig, seed: u64) -> Result<SimulationResult> {
    run(plan, config, seed, false, true)
}

pub fn run_two_relay(plan: &ProtocolPlan, config: &NetworkConfig, seed: u64) -> Result<SimulationResult> {
    if plan.nodes() != 4 {
        return Err(Error::InvalidParameter(format!("two-relay run needs 4 nodes, plan has {}", plan.nodes())));
    }
    run_chain(plan, config, seed)
}

/// One relay between two end nodes; expects the left end to be the stronger one.
pub fn run_single_relay_bc(plan: &ProtocolPlan, config: &NetworkConfig, seed: u64) -> Result<SimulationResult> {
    if plan.nodes() != 3 {
        return Err(Error::InvalidParameter(format!("single-relay run needs 3 nodes, plan has {}", plan.nodes())));
    }
    if plan.scales[0] < plan.scales[2] {
        return Err(Error::InfeasiblePattern("single-relay scheme expects P1 = N²p² ≥ P3 = p²".into()));
    }
    run_chain(plan, config, seed)
}

/// Every block split into two slots: odd-numbered nodes transmit first, then
/// even-numbered ones.
pub fn run_half_duplex(plan: &ProtocolPlan, config: &NetworkConfig, seed: u64) -> Result<SimulationResult> {
    if config.duplex() != Duplex::Half {
        return Err(Error::InvalidParameter("half-duplex run needs a half-duplex network".into()));
    }
    run(plan, config, seed, true, true)
}

/// Runs the schedule that matches the network's duplex mode.
pub fn simulate(plan: &ProtocolPlan, config: &NetworkConfig, seed: u64) -> Result<SimulationResult> {
    simulate_inner(plan, config, seed, true)
}

pub(crate) fn simulate_inner(
    plan: &ProtocolPlan,
    config: &NetworkConfig,
    seed: u64,
    trace: bool,
) -> Result<SimulationResult> {
    run(plan, config, seed, config.duplex() == Duplex::Half, trace)
}
