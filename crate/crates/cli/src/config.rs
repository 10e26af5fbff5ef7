//! Experiment configuration: one JSON file, every section optional.

use std::path::{Path, PathBuf};

use latticeway::netsim::{Duplex, NetworkConfig, PlanOptions};
use latticeway::rational::{self, Rational};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Rates,
    GapCheck,
    Simulate,
    TransformDemo,
    Chain,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Rates => "rates",
            Command::GapCheck => "gap-check",
            Command::Simulate => "simulate",
            Command::TransformDemo => "transform-demo",
            Command::Chain => "chain",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub powers: Vec<f64>,
    pub noise: Vec<f64>,
    #[serde(default)]
    pub duplex: Duplex,
}

impl Default for NetworkSection {
    fn default() -> Self {
        NetworkSection { powers: vec![1.0, 4.0, 4.0, 1.0], noise: vec![1.0; 4], duplex: Duplex::Full }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub dim: usize,
    pub blocks: usize,
    pub trials: u64,
    pub seed: u64,
    pub rate_sym: f64,
    pub rate_a: Option<f64>,
    pub rate_b: Option<f64>,
    /// Truncate powers into a square pattern instead of rejecting them.
    pub truncate: bool,
    pub generator: Option<Vec<u64>>,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            dim: 2,
            blocks: 10,
            trials: 1,
            seed: 0,
            rate_sym: 1.0,
            rate_a: None,
            rate_b: None,
            truncate: false,
            generator: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GapCheckSection {
    pub samples: u64,
    pub low: f64,
    pub high: f64,
}

impl Default for GapCheckSection {
    fn default() -> Self {
        GapCheckSection { samples: 10_000, low: 0.01, high: 100.0 }
    }
}

/// Decode-the-sum followed by the transform, over every message pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformSection {
    pub prime: u64,
    #[serde(with = "rational::as_string")]
    pub coarse_scale: Rational,
    pub generator: Vec<u64>,
    /// Fine scale of the weaker transmitter.
    #[serde(with = "rational::as_string")]
    pub theta: Rational,
    pub multiplier: i64,
    #[serde(with = "rational::as_string")]
    pub out_scale: Rational,
}

impl Default for TransformSection {
    fn default() -> Self {
        TransformSection {
            prime: 5,
            coarse_scale: rational::int(5),
            generator: vec![1],
            theta: rational::ratio(1, 2),
            multiplier: 2,
            out_scale: rational::int(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    pub network: NetworkSection,
    pub simulation: SimulationSection,
    pub gap_check: GapCheckSection,
    pub transform: TransformSection,
    pub output: OutputSection,
}

/// Flat flag overrides; `None` keeps the config value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub blocks: Option<usize>,
    pub dim: Option<usize>,
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub format: Option<Format>,
    pub noise: Option<f64>,
    pub rate: Option<f64>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(ExperimentConfig::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: Overrides) {
        let sim = &mut self.simulation;
        if let Some(v) = o.seed {
            sim.seed = v;
        }
        if let Some(v) = o.trials {
            sim.trials = v;
            self.gap_check.samples = v;
        }
        if let Some(v) = o.blocks {
            sim.blocks = v;
        }
        if let Some(v) = o.dim {
            sim.dim = v;
        }
        if let Some(v) = o.rate {
            sim.rate_sym = v;
        }
        if let Some(v) = o.noise {
            self.network.noise = vec![v; self.network.powers.len()];
        }
        if o.out.is_some() {
            self.output.out = o.out;
        }
        if o.trace.is_some() {
            self.output.trace = o.trace;
        }
        if let Some(f) = o.format {
            self.output.format = f;
        }
    }

    /// Range checks that serde cannot express.
    pub fn validate(&self, command: Command) -> Result<(), CliError> {
        if let Some(c) = self.command {
            if c != command {
                return Err(CliError::Config(format!(
                    "config is for `{}` but `{}` was requested",
                    c.name(),
                    command.name()
                )));
            }
        }
        let sim = &self.simulation;
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if sim.dim == 0 || sim.dim > 16 {
            return bad("simulation.dim must be in 1..=16");
        }
        if sim.blocks == 0 {
            return bad("simulation.blocks must be at least 1");
        }
        if sim.trials == 0 {
            return bad("simulation.trials must be at least 1");
        }
        if !(sim.rate_sym.is_finite() && sim.rate_sym > 0.0) {
            return bad("simulation.rate_sym must be positive");
        }
        let g = &self.gap_check;
        if g.samples == 0 || !(g.low > 0.0 && g.high >= g.low && g.high.is_finite()) {
            return bad("gap_check needs samples ≥ 1 and 0 < low ≤ high");
        }
        Ok(())
    }

    pub fn network(&self) -> Result<NetworkConfig, CliError> {
        let n = &self.network;
        NetworkConfig::new(n.powers.clone(), n.noise.clone(), n.duplex)
            .map_err(|e| CliError::Config(format!("network: {e}")))
    }

    pub fn plan_options(&self) -> PlanOptions {
        let s = &self.simulation;
        PlanOptions {
            rate_sym: s.rate_sym,
            dimension: s.dim,
            blocks: s.blocks,
            rate_a: s.rate_a,
            rate_b: s.rate_b,
            truncate: s.truncate,
            generator: s.generator.clone(),
        }
    }
}
