//! Report types written by the subcommands. Each one parses back with the
//! same strict schema it was written with.

use latticeway::lattice::{CodePoint, LatticeSpec};
use latticeway::netsim::{MonteCarloReport, ProtocolPlan, SimulationResult};
use latticeway::rates::{GapAudit, PatternRate, RateReport};
use latticeway::rational;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesOutput {
    pub command: String,
    pub powers: Vec<f64>,
    pub noise: Vec<f64>,
    /// Truncation optimiser (four nodes only).
    pub report: Option<RateReport>,
    /// Rate of the given powers when they already form a square pattern.
    pub pattern: Option<PatternRate>,
    pub chain_rate: Option<f64>,
    pub half_duplex_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapOutput {
    pub command: String,
    pub low: f64,
    pub high: f64,
    pub audit: GapAudit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateOutput {
    pub command: String,
    pub seed: u64,
    pub plan: ProtocolPlan,
    /// Closed-form rate of the planned powers, when every noise variance is positive.
    pub analysis_rate: Option<f64>,
    pub result: Option<SimulationResult>,
    pub monte_carlo: Option<MonteCarloReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformRow {
    pub w_a: u64,
    pub w_b: u64,
    pub t_a: String,
    pub t_b: String,
    pub decoded: String,
    pub multiplied: String,
    pub reduced: String,
    pub output: String,
    pub message: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputCount {
    pub point: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformOutput {
    pub command: String,
    pub spec: LatticeSpec,
    pub theta: String,
    pub multiplier: i64,
    pub out_scale: String,
    pub candidates: Vec<String>,
    pub outputs: Vec<OutputCount>,
    pub rows: Vec<TransformRow>,
}

pub const TRANSFORM_HEADER: &str = "w_a,w_b,t_a,t_b,decoded,multiplied,reduced,output,message";

/// Exact coordinates, space separated; one-dimensional points print bare.
pub fn fmt_point(p: &CodePoint) -> String {
    let parts: Vec<String> = p
        .coords()
        .iter()
        .map(|&k| rational::format(&(*p.scale() * rational::Rational::from_integer(k as i128))))
        .collect();
    if parts.len() == 1 {
        parts[0].clone()
    } else {
        format!("({})", parts.join(" "))
    }
}

/// `%.12g`: 12 significant digits, trailing zeros trimmed.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    } else {
        let s = format!("{x:.11e}");
        let (mantissa, e) = s.split_once('e').expect("scientific format");
        format!("{}e{e}", trim(mantissa.to_string()))
    }
}

/// Two-column CSV of named values.
pub fn key_value_csv(rows: &[(&str, String)]) -> String {
    let mut out = String::from("field,value\n");
    for (k, v) in rows {
        out.push_str(&format!("{k},{v}\n"));
    }
    out
}
