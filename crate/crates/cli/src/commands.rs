use latticeway::field::{phi_inverse, FieldElement};
use latticeway::lattice::LatticeSpec;
use latticeway::netsim::{
    monte_carlo, plan_protocol_with, run_chain, run_half_duplex, run_single_relay_bc, run_two_relay, trace_csv, Duplex,
    NetworkConfig, ProtocolPlan, SimulationResult,
};
use latticeway::rates;
use latticeway::rational::{self, Rational};
use latticeway::scheme::{encode, redistribution_steps, SumDecoder};

use crate::config::{Command, ExperimentConfig, Format};
use crate::error::CliError;
use crate::report::*;

/// What a command produced: the main artefact and an optional trace.
pub struct Artifacts {
    pub main: String,
    pub trace: Option<String>,
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// The string a unit enum serialises to, so CSV and JSON agree.
fn serde_name<T: serde::Serialize>(v: &T) -> Result<String, CliError> {
    match serde_json::to_value(v)? {
        serde_json::Value::String(s) => Ok(s),
        other => Ok(other.to_string()),
    }
}

pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    cfg.validate(command)?;
    match command {
        Command::Rates => rates_cmd(cfg),
        Command::GapCheck => gap_cmd(cfg),
        Command::Simulate | Command::Chain => simulate_cmd(command, cfg),
        Command::TransformDemo => transform_cmd(cfg),
    }
}

fn rates_cmd(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let net = cfg.network()?;
    if net.noise().iter().any(|&n| n <= 0.0) {
        return Err(CliError::Config("rate analysis needs positive noise variances".into()));
    }
    let (p, n) = (net.powers(), net.noise());
    let out = if net.nodes() == 4 {
        let report = rates::optimize_truncated(p, n)?;
        let half = rates::half_duplex_rate(&report);
        RatesOutput {
            command: "rates".into(),
            powers: p.to_vec(),
            noise: n.to_vec(),
            pattern: rates::theorem1_rate(p, n).ok(),
            report: Some(report),
            chain_rate: None,
            half_duplex_rate: Some(half),
        }
    } else {
        let r = rates::chain_rate(p, n)?;
        RatesOutput {
            command: "rates".into(),
            powers: p.to_vec(),
            noise: n.to_vec(),
            report: None,
            pattern: None,
            chain_rate: Some(r),
            half_duplex_rate: Some(0.5 * r),
        }
    };
    let main = match cfg.output.format {
        Format::Json => to_json(&out)?,
        Format::Csv => {
            let mut rows: Vec<(&str, String)> = Vec::new();
            if let Some(r) = &out.report {
                rows.push(("R_achievable", fmt_float(r.r_achievable)));
                rows.push(("R_outer", fmt_float(r.r_outer)));
                rows.push(("gap", fmt_float(r.gap)));
                rows.push(("binding", r.binding.to_string()));
                rows.push(("N", r.n.to_string()));
                rows.push(("M", r.m.to_string()));
                for (name, v) in ["P1'", "P2'", "P3'", "P4'"].iter().zip(r.truncated_powers) {
                    rows.push((name, fmt_float(v)));
                }
                rows.push(("orientation13", serde_name(&r.orientation13)?));
                rows.push(("orientation24", serde_name(&r.orientation24)?));
            }
            if let Some(c) = out.chain_rate {
                rows.push(("chain_rate", fmt_float(c)));
            }
            if let Some(h) = out.half_duplex_rate {
                rows.push(("half_duplex_rate", fmt_float(h)));
            }
            key_value_csv(&rows)
        }
    };
    Ok(Artifacts { main, trace: None })
}

fn gap_cmd(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let g = &cfg.gap_check;
    let audit = rates::gap_audit(g.samples, cfg.simulation.seed, g.low, g.high)?;
    let main = match cfg.output.format {
        Format::Json => to_json(&GapOutput { command: "gap-check".into(), low: g.low, high: g.high, audit })?,
        Format::Csv => {
            let mut rows = vec![
                ("samples", audit.samples.to_string()),
                ("seed", audit.seed.to_string()),
                ("max_gap", fmt_float(audit.max_gap)),
                ("bound", fmt_float(audit.bound)),
                ("holds", audit.holds.to_string()),
            ];
            let names = ["P1", "P2", "P3", "P4"].iter().zip(audit.argmax_powers);
            let noise = ["N1", "N2", "N3", "N4"].iter().zip(audit.argmax_noise);
            rows.extend(names.chain(noise).map(|(k, v)| (*k, fmt_float(v))));
            key_value_csv(&rows)
        }
    };
    Ok(Artifacts { main, trace: None })
}

fn analysis_rate(plan: &ProtocolPlan, net: &NetworkConfig) -> Option<f64> {
    if net.noise().iter().any(|&n| n <= 0.0) {
        return None;
    }
    let r = if plan.nodes() == 4 {
        rates::theorem1_rate(&plan.powers, net.noise()).ok()?.rate
    } else {
        rates::chain_rate(&plan.powers, net.noise()).ok()?
    };
    Some(if net.duplex() == Duplex::Half { 0.5 * r } else { r })
}

fn single_run(
    command: Command,
    plan: &ProtocolPlan,
    net: &NetworkConfig,
    seed: u64,
) -> Result<SimulationResult, CliError> {
    Ok(match (command, net.duplex(), net.nodes()) {
        (_, Duplex::Half, _) => run_half_duplex(plan, net, seed)?,
        (Command::Chain, _, _) => run_chain(plan, net, seed)?,
        (_, _, 3) => run_single_relay_bc(plan, net, seed)?,
        (_, _, 4) => run_two_relay(plan, net, seed)?,
        (_, _, l) => {
            return Err(CliError::Config(format!("`simulate` covers 3 or 4 nodes; use `chain` for {l}")));
        }
    })
}

fn simulate_cmd(command: Command, cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let net = cfg.network()?;
    let plan = plan_protocol_with(&net, &cfg.plan_options())?;
    let sim = &cfg.simulation;
    let mut out = SimulateOutput {
        command: command.name().into(),
        seed: sim.seed,
        analysis_rate: analysis_rate(&plan, &net),
        plan,
        result: None,
        monte_carlo: None,
    };
    let wants_trace = cfg.output.trace.is_some() || (sim.trials == 1 && cfg.output.format == Format::Csv);
    let traced =
        if sim.trials == 1 || wants_trace { Some(single_run(command, &out.plan, &net, sim.seed)?) } else { None };
    let trace = traced.as_ref().filter(|_| wants_trace).map(|r| trace_csv(&r.trace));
    if sim.trials == 1 {
        out.result = traced;
    } else {
        // the trial dispatcher follows the duplex mode; validate the node count the same way
        if command == Command::Simulate && net.duplex() == Duplex::Full && !(3..=4).contains(&net.nodes()) {
            return Err(CliError::Config(format!("`simulate` covers 3 or 4 nodes; use `chain` for {}", net.nodes())));
        }
        out.monte_carlo = Some(monte_carlo(&out.plan, &net, sim.trials, sim.seed)?);
    }
    let main = match cfg.output.format {
        Format::Json => to_json(&out)?,
        Format::Csv => match &out.monte_carlo {
            None => trace.clone().expect("single trial traces"),
            Some(mc) => {
                let rows = vec![
                    ("trials", mc.trials.to_string()),
                    ("base_seed", mc.base_seed.to_string()),
                    ("blocks_per_trial", mc.blocks_per_trial.to_string()),
                    ("delivered_a", mc.delivered_a.to_string()),
                    ("delivered_b", mc.delivered_b.to_string()),
                    ("message_error_rate", fmt_float(mc.message_error_rate.rate)),
                    ("message_error_lower", fmt_float(mc.message_error_rate.lower)),
                    ("message_error_upper", fmt_float(mc.message_error_rate.upper)),
                    ("block_error_rate", fmt_float(mc.block_error_rate.rate)),
                    ("block_error_lower", fmt_float(mc.block_error_rate.lower)),
                    ("block_error_upper", fmt_float(mc.block_error_rate.upper)),
                    ("mean_throughput", fmt_float(mc.mean_throughput)),
                ];
                key_value_csv(&rows)
            }
        },
    };
    let trace = if cfg.output.trace.is_some() { trace } else { None };
    Ok(Artifacts { main, trace })
}

pub fn transform_demo(t: &crate::config::TransformSection) -> Result<TransformOutput, CliError> {
    let n = t.generator.len();
    let spec = LatticeSpec::new(t.prime, t.coarse_scale, t.generator.clone())?;
    let p = spec.prime();
    let strong: Rational = t.theta * Rational::from_integer(t.multiplier as i128);
    let decoder = SumDecoder::new(t.multiplier, &t.theta, &spec)?;
    let mut candidates = decoder.candidates();
    candidates.sort_by(|a, b| a.coords().cmp(b.coords()));
    let mut rows = Vec::new();
    let mut counts: Vec<(Vec<i64>, String, u64)> = Vec::new();
    for wa in 0..p {
        for wb in 0..p {
            let ta = encode(FieldElement::new(wa, p)?, &strong, &spec)?;
            let tb = encode(FieldElement::new(wb, p)?, &t.theta, &spec)?;
            let y: Vec<f64> = ta.to_real().iter().zip(tb.to_real()).map(|(a, b)| a + b).collect();
            let decoded = decoder.decode(&y)?;
            let steps = redistribution_steps(&decoded, t.multiplier, &t.out_scale, &spec)?;
            let message = phi_inverse(&steps.output, &t.out_scale, &spec)?.value();
            let key = steps.output.rescaled(&spec.fine_step(&t.out_scale)).expect("transform output is a codeword");
            let label = fmt_point(&steps.output);
            match counts.iter_mut().find(|c| c.0 == key.coords()) {
                Some(c) => c.2 += 1,
                None => counts.push((key.coords().to_vec(), label, 1)),
            }
            rows.push(TransformRow {
                w_a: wa,
                w_b: wb,
                t_a: fmt_point(&ta),
                t_b: fmt_point(&tb),
                decoded: fmt_point(&decoded.point),
                multiplied: fmt_point(&steps.multiplied),
                reduced: fmt_point(&steps.reduced),
                output: fmt_point(&steps.output),
                message,
            });
        }
    }
    counts.sort();
    debug_assert_eq!(spec.dimension(), n);
    Ok(TransformOutput {
        command: "transform-demo".into(),
        spec,
        theta: rational::format(&t.theta),
        multiplier: t.multiplier,
        out_scale: rational::format(&t.out_scale),
        candidates: candidates.iter().map(fmt_point).collect(),
        outputs: counts.into_iter().map(|(_, point, count)| OutputCount { point, count }).collect(),
        rows,
    })
}

fn transform_cmd(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let out = transform_demo(&cfg.transform)?;
    let main = match cfg.output.format {
        Format::Json => to_json(&out)?,
        Format::Csv => {
            let mut s = String::from(TRANSFORM_HEADER);
            s.push('\n');
            for r in &out.rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    r.w_a, r.w_b, r.t_a, r.t_b, r.decoded, r.multiplied, r.reduced, r.output, r.message
                ));
            }
            s
        }
    };
    Ok(Artifacts { main, trace: None })
}
