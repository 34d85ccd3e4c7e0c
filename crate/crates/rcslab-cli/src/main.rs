//! Seeded, reproducible experiment runner: every library pipeline is a
//! subcommand emitting machine-readable reports with the run configuration
//! echoed into the artifact.
//!
//! Exit codes: 0 success, 2 usage (argument parsing), 3 validation or bad
//! input, 4 resource guard, 5 decode failure.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use rcslab::circuit::{Architecture, Circuit};
use rcslab::dist::{OutputDistribution, SampleSet};
use rcslab::ensemble::{sample_circuit, EnsembleSpec};
use rcslab::error::{Error, Result};
use rcslab::field::PrimeField;
use rcslab::perm::{permanent_ryser, permanent_w2a, rand_matrix, CorruptiblePermOracle};
use rcslab::reduction::{
    worst_to_average, CorruptingProbOracle, ExactProbOracle, NodeScheme, ReductionConfig,
};
use rcslab::rng;
use rcslab::sim;
use rcslab::stats;

#[derive(Parser)]
#[command(
    name = "rcslab",
    version,
    about = "Desk-scale random-circuit-sampling laboratory",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a circuit file and emit its exact output distribution.
    Simulate(SimulateCmd),
    /// Draw a seeded random circuit and emit it as circuit JSON.
    SampleCircuit(SampleCircuitCmd),
    /// Recover a worst-case zero-outcome probability from an oracle that
    /// answers on random scrambled circuits.
    Reduce(ReduceCmd),
    /// Finite-field analogue: recover a worst-case permanent from an
    /// oracle for random matrices.
    PermReduce(PermReduceCmd),
    /// Score a sample file against a circuit's exact distribution.
    Verify(VerifyCmd),
    /// Histogram scaled probabilities against the Porter-Thomas shape.
    Shape(ShapeCmd),
    /// Build the block-rescaled spoofing distribution for an ideal
    /// distribution and score it.
    Counterexample(CounterexampleCmd),
    /// Classical ball-throwing distribution whose bin counts follow
    /// Poisson(1) at n = m.
    Imposter(ImposterCmd),
    /// Estimate the fraction of random circuits clearing an
    /// anti-concentration threshold.
    Anticonc(AnticoncCmd),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum EnsembleKind {
    Haar,
    Perturbed,
    Truncated,
}

#[derive(Args, Clone, Serialize)]
struct EnsembleArgs {
    /// Gate ensemble drawn at every slot.
    #[arg(long, value_enum, default_value_t = EnsembleKind::Haar)]
    ensemble: EnsembleKind,
    /// Perturbation strength in [0, 1] (perturbed/truncated ensembles).
    #[arg(long)]
    theta: Option<f64>,
    /// Taylor truncation order (truncated ensemble).
    #[arg(long)]
    order: Option<usize>,
}

impl EnsembleArgs {
    fn spec(&self) -> Result<EnsembleSpec> {
        let need_theta = || {
            self.theta
                .ok_or_else(|| Error::validation("this ensemble requires --theta"))
        };
        let spec = match self.ensemble {
            EnsembleKind::Haar => EnsembleSpec::Haar,
            EnsembleKind::Perturbed => EnsembleSpec::Perturbed {
                theta: need_theta()?,
            },
            EnsembleKind::Truncated => EnsembleSpec::Truncated {
                theta: need_theta()?,
                order: self
                    .order
                    .ok_or_else(|| Error::validation("the truncated ensemble requires --order"))?,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

// ---------------------------------------------------------------------------
// Artifact plumbing.

/// Every artifact leads with the subcommand name and the full argument echo,
/// so a report file alone reproduces its run.
fn artifact(subcommand: &str, config: &impl Serialize, body: Value) -> Result<Value> {
    let mut root = serde_json::Map::new();
    root.insert("subcommand".into(), Value::String(subcommand.into()));
    root.insert(
        "config".into(),
        serde_json::to_value(config).map_err(|e| Error::validation(e.to_string()))?,
    );
    if let Value::Object(fields) = body {
        for (k, v) in fields {
            root.insert(k, v);
        }
    }
    Ok(Value::Object(root))
}

fn write_output(text: &str, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_json(value: &Value, out: &Option<PathBuf>) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Error::validation(e.to_string()))?;
    text.push('\n');
    write_output(&text, out)
}

fn kv_csv(rows: &[(&str, String)]) -> String {
    let mut text = String::from("key,value\n");
    for (k, v) in rows {
        text.push_str(&format!("{k},{v}\n"));
    }
    text
}

fn read_stdin() -> Result<String> {
    let mut text = String::new();
    std::io::stdin().read_to_string(&mut text)?;
    Ok(text)
}

/// Accept both bare circuit JSON and a sample-circuit artifact.
fn circuit_from_text(text: &str) -> Result<Circuit> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| Error::validation(format!("circuit JSON: {e}")))?;
    match v.get("circuit") {
        Some(inner) => Circuit::from_json(&inner.to_string()),
        None => Circuit::from_json(text),
    }
}

fn read_circuit(path: &Path) -> Result<Circuit> {
    circuit_from_text(&std::fs::read_to_string(path)?)
}

/// Accept both bare distribution JSON and any artifact carrying one.
fn distribution_from_text(text: &str) -> Result<OutputDistribution> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| Error::validation(format!("distribution JSON: {e}")))?;
    match v.get("distribution") {
        Some(inner) => OutputDistribution::from_json(&inner.to_string()),
        None => OutputDistribution::from_json(text),
    }
}

fn to_value(x: &impl Serialize) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| Error::validation(e.to_string()))
}

// ---------------------------------------------------------------------------
// Subcommands.

#[derive(Args, Serialize)]
struct SimulateCmd {
    /// Circuit JSON file.
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output path; stdout when omitted.
    #[arg(long)]
    #[serde(skip_serializing)]
    out: Option<PathBuf>,
}

impl SimulateCmd {
    fn run(&self) -> Result<()> {
        let circuit = read_circuit(&self.circuit)?;
        let dist = sim::full_distribution(&circuit)?;
        match self.format {
            Format::Json => {
                let body = serde_json::json!({ "distribution": to_value(&dist)? });
                emit_json(&artifact("simulate", self, body)?, &self.out)
            }
            Format::Csv => write_output(&dist.to_csv(), &self.out),
        }
    }
}

#[derive(Args, Serialize)]
struct SampleCircuitCmd {
    /// Qubit count.
    #[arg(long)]
    n: usize,
    /// Brickwork depth on a line; gate slots alternate between the even and
    /// odd nearest-neighbor pairings.
    #[arg(long)]
    depth: usize,
    #[command(flatten)]
    #[serde(flatten)]
    ensemble: EnsembleArgs,
    /// Master seed (required: runs never draw from the wall clock).
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    #[serde(skip_serializing)]
    out: Option<PathBuf>,
}

impl SampleCircuitCmd {
    fn run(&self) -> Result<()> {
        if self.format == Format::Csv {
            return Err(Error::validation(
                "circuits have no tabular form; use --format json",
            ));
        }
        let arch = Architecture::line(self.n, self.depth)?;
        let spec = self.ensemble.spec()?;
        let circuit = sample_circuit(&arch, &spec, self.seed)?;
        let circuit_value: Value = serde_json::from_str(&circuit.to_json())
            .map_err(|e| Error::validation(e.to_string()))?;
        let body = serde_json::json!({ "circuit": circuit_value });
        emit_json(&artifact("sample-circuit", self, body)?, &self.out)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SchemeArg {
    Chebyshev,
    Uniform,
}

#[derive(Args, Serialize)]
struct ReduceCmd {
    /// Worst-case circuit file; omitted, a Haar circuit on a line is drawn
    /// from --n/--m and the master seed.
    #[arg(long, conflicts_with_all = ["n", "m"])]
    circuit: Option<PathBuf>,
    /// Qubits of the sampled worst-case circuit.
    #[arg(long, required_unless_present = "circuit")]
    n: Option<usize>,
    /// Gate count of the sampled worst-case circuit.
    #[arg(long, required_unless_present = "circuit")]
    m: Option<usize>,
    /// Taylor truncation order K of the scrambled gates.
    #[arg(long = "K", value_name = "K")]
    k_order: usize,
    /// Upper end of the node interval [0, theta_max); default 1/(10 m).
    #[arg(long)]
    theta_max: Option<f64>,
    /// Oracle node count; default 2mK + 2 x corruptions + 1.
    #[arg(long)]
    points: Option<usize>,
    /// Working precision in mantissa bits.
    #[arg(long, default_value_t = 512)]
    precision: u32,
    #[arg(long, value_enum, default_value_t = SchemeArg::Chebyshev)]
    scheme: SchemeArg,
    /// Fresh-scramble repetitions; the estimate is their median.
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Corrupted answers per node batch the oracle is allowed; nonzero
    /// switches the fit to error-correcting decoding.
    #[arg(long, default_value_t = 0)]
    corruptions: usize,
    /// Master seed (required: runs never draw from the wall clock).
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    #[serde(skip_serializing)]
    out: Option<PathBuf>,
}

impl ReduceCmd {
    fn run(&self) -> Result<()> {
        let circuit = match &self.circuit {
            Some(path) => read_circuit(path)?,
            None => {
                let (n, m) = (self.n.unwrap(), self.m.unwrap());
                let arch = Architecture::line_with_slots(n, m)?;
                sample_circuit(&arch, &EnsembleSpec::Haar, self.seed)?
            }
        };
        let mut cfg = ReductionConfig::for_circuit(circuit.m(), self.k_order);
        cfg.precision_bits = self.precision;
        cfg.repetitions = self.reps;
        cfg.node_scheme = match self.scheme {
            SchemeArg::Chebyshev => NodeScheme::Chebyshev,
            SchemeArg::Uniform => NodeScheme::Uniform,
        };
        if let Some(t) = self.theta_max {
            cfg.theta_max = t;
        }
        cfg.num_points = match self.points {
            Some(k) => k,
            None => cfg.degree(circuit.m()) + 2 * self.corruptions + 1,
        };
        let (report, oracle_corruptions) = if self.corruptions == 0 {
            let mut oracle = ExactProbOracle;
            (
                worst_to_average(&circuit, &cfg, &mut oracle, self.seed)?,
                None,
            )
        } else {
            let mut oracle =
                CorruptingProbOracle::new(cfg.num_points, self.corruptions, self.seed)?;
            let report = worst_to_average(&circuit, &cfg, &mut oracle, self.seed)?;
            (report, Some(oracle.corruptions))
        };
        match self.format {
            Format::Json => {
                let body = serde_json::json!({
                    "report": to_value(&report)?,
                    "oracle_corruptions": oracle_corruptions,
                });
                emit_json(&artifact("reduce", self, body)?, &self.out)
            }
            Format::Csv => {
                let rows = [
                    ("estimate", format!("{:e}", report.estimate)),
                    ("direct_p0", format!("{:e}", report.direct_p0)),
                    ("truncation_gap", format!("{:e}", report.truncation_gap)),
                    ("interp_residual", format!("{:e}", report.interp_residual)),
                    ("condition_factor", format!("{:e}", report.condition_factor)),
                    ("conditioning_alert", report.conditioning_alert.to_string()),
                ];
                write_output(&kv_csv(&rows), &self.out)
            }
        }
    }
}

#[derive(Args, Serialize)]
struct PermReduceCmd {
    /// Matrix dimension.
    #[arg(long)]
    size: usize,
    /// Prime modulus of the field (must exceed size + 1).
    #[arg(long, default_value_t = 10007)]
    modulus: u64,
    /// Majority-vote rounds.
    #[arg(long, default_value_t = 99)]
    reps: usize,
    /// Per-call probability that the oracle answers wrongly.
    #[arg(long, default_value_t = 0.0)]
    error_rate: f64,
    /// Master seed (required: runs never draw from the wall clock).
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    #[serde(skip_serializing)]
    out: Option<PathBuf>,
}

impl PermReduceCmd {
    fn run(&self) -> Result<()> {
        let field = PrimeField::new(self.modulus)?;
        let x = rand_matrix(
            &field,
            self.size,
            &mut rng::stream(self.seed, "perm-instance"),
        );
        let mut oracle = CorruptiblePermOracle::new(self.error_rate, self.seed)?;
        let recovered = permanent_w2a(&field, &x, &mut oracle, self.reps, self.seed)?;
        let direct = permanent_ryser(&field, &x)?;
        match self.format {
            Format::Json => {
                let body = serde_json::json!({
                    "report": {
                        "recovered": recovered,
                        "direct": direct,
                        "agree": recovered == direct,
                        "oracle_calls": oracle.calls,
                        "oracle_corruptions": oracle.corruptions,
                    }
                });
                emit_json(&artifact("perm-reduce", self, body)?, &self.out)
            }
            Format::Csv => {
                let rows = [
                    ("recovered", recovered.to_string()),
                    ("direct", direct.to_string()),
                    ("agree", (recovered == direct).to_string()),
                    ("oracle_calls", oracle.calls.to_string()),
                    ("oracle_corruptions", oracle.corruptions.to_string()),
                ];
                write_output(&kv_csv(&rows), &self.out)
            }
        }
    }
}

#[derive(Args, Serialize)]
struct VerifyCmd {
    /// Circuit JSON file defining the ideal distribution.
    #[arg(long)]
    circuit: PathBuf,
    /// Sample file: `n <bits>` header, then one outcome per line.
    #[arg(long)]
    samples: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    #[serde(skip_serializing)]
    out: Option<PathBuf>,
}

impl VerifyCmd {
    fn run(&self) -> Result<()> {
        let circuit = read_circuit(&self.circuit)?;
        let samples = SampleSet::read_file(&self.samples)?;
        let ideal = sim::full_distribution(&circuit)?;
        let ced = stats::empirical_ced(&samples, &ideal)?;
        let hog = stats::hog_empirical(&samples, &ideal)?;
        match self.format {
            Format::Json => {
                let body = serde_json::json!({
                    "report": { "ced": ced, "hog": hog, "sample_count": samples.len() }
                });
                emit_json(&artifact("verify", self, body)?, &self.out)
            }
            Format::Csv => {
                let rows = [
                    ("ced", format!("{ced:e}")),
                    ("hog", format!("{hog:e}")),
                    ("sample_count", samples.len().to_string()),
                ];
                write_output(&kv_csv(&rows), &self.out)
            }
        }
    }
}

#[derive(Args, Serialize)]
struct ShapeCmd {
    /// Distribution JSON (bare or any artifact carrying one); stdin when
    /// omitted, so distribution-producing subcommands pipe straight in.
    #[arg(long)]
    dist: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    bins: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    #[serde(skip_serializing)]
    out: Option<PathBuf>,
}

impl ShapeCmd {
    fn run(&self) -> Result<()> {
        let text = match &self.dist {
            Some(path) => std::fs::read_to_string(path)?,
            None => read_stdin()?,
        };
        let dist = distribution_from_text(&text)?;
        let histogram = stats::shape_histogram(&dist, self.bins)?;
        match self.format {
            Format::Json => {
                let body = serde_json::json!({ "histogram": to_value(&histogram)? });
                emit_json(&artifact("shape", self, body)?, &self.out)
            }
            Format::Csv => {
                let mut text = String::from("bin_lo,bin_hi,count,pt_expected\n");
                for i in 0..histogram.counts.len() {
                    text.push_str(&format!(
                        "{:e},{:e},{},{:e}\n",
                        histogram.bin_edges[i],
                        histogram.bin_edges[i + 1],
                        histogram.counts[i],
                        histogram.pt_reference[i],
                    ));
                }
                write_output(&text, &self.out)
            }
        }
    }
}

#[derive(Args, Serialize)]
struct CounterexampleCmd {
    /// Circuit JSON file defining the ideal distribution.
    #[arg(long, conflicts_with = "dist", required_unless_present = "dist")]
    circuit: Option<PathBuf>,
    /// Ideal distribution JSON, as an alternative to --circuit.
    #[arg(long)]
    dist: Option<PathBuf>,
    /// Block size: each k-block of the sorted middle region collapses onto
    /// its first element.
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    #[serde(skip_serializing)]
    out: Option<PathBuf>,
}

impl CounterexampleCmd {
    fn run(&self) -> Result<()> {
        let ideal = match (&self.circuit, &self.dist) {
            (Some(path), _) => sim::full_distribution(&read_circuit(path)?)?,
            (None, Some(path)) => distribution_from_text(&std::fs::read_to_string(path)?)?,
            (None, None) => unreachable!("clap enforces one source"),
        };
        let spoof = stats::rescaled_counterexample(&ideal, self.k)?;
        let report = stats::divergences(&spoof, &ideal)?;
        match self.format {
            Format::Json => {
                let body = serde_json::json!({
                    "report": to_value(&report)?,
                    "distribution": to_value(&spoof)?,
                });
                emit_json(&artifact("counterexample", self, body)?, &self.out)
            }
            Format::Csv => write_output(&spoof.to_csv(), &self.out),
        }
    }
}

#[derive(Args, Serialize)]
struct ImposterCmd {
    /// Output bits (bins are the 2^n prefixes).
    #[arg(long)]
    n: usize,
    /// Environment bits (2^m balls).
    #[arg(long)]
    m: usize,
    /// Master seed (required: runs never draw from the wall clock).
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    #[serde(skip_serializing)]
    out: Option<PathBuf>,
}

impl ImposterCmd {
    fn run(&self) -> Result<()> {
        let dist = stats::poisson_imposter(self.n, self.m, self.seed)?;
        match self.format {
            Format::Json => {
                let body = serde_json::json!({ "distribution": to_value(&dist)? });
                emit_json(&artifact("imposter", self, body)?, &self.out)
            }
            Format::Csv => write_output(&dist.to_csv(), &self.out),
        }
    }
}

#[derive(Args, Serialize)]
struct AnticoncCmd {
    /// Qubit count.
    #[arg(long)]
    n: usize,
    /// Brickwork depth; default 3 x n.
    #[arg(long)]
    depth: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    ensemble: EnsembleArgs,
    /// Threshold scale: circuits count when p0 >= 1/(kappa 2^n).
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    /// Monte-Carlo trials.
    #[arg(long)]
    trials: usize,
    /// Master seed (required: runs never draw from the wall clock).
    #[arg(long)]
    seed: u64,
    /// Worker threads for the trial loop; results are ordered by trial
    /// index, so the report does not depend on this.
    #[arg(long, default_value_t = 1)]
    #[serde(skip_serializing)]
    jobs: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    #[serde(skip_serializing)]
    out: Option<PathBuf>,
}

impl AnticoncCmd {
    fn run(&self) -> Result<()> {
        use rayon::prelude::*;
        stats::check_anticoncentration_args(self.trials, self.kappa)?;
        let depth = self.depth.unwrap_or(3 * self.n);
        let arch = Architecture::line(self.n, depth)?;
        let spec = self.ensemble.spec()?;
        let outcomes: Vec<bool> = if self.jobs > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.jobs)
                .build()
                .map_err(|e| Error::resource(format!("thread pool: {e}")))?;
            pool.install(|| {
                (0..self.trials as u64)
                    .into_par_iter()
                    .map(|t| stats::anticoncentration_trial(&arch, &spec, self.kappa, self.seed, t))
                    .collect::<Result<Vec<bool>>>()
            })?
        } else {
            (0..self.trials as u64)
                .map(|t| stats::anticoncentration_trial(&arch, &spec, self.kappa, self.seed, t))
                .collect::<Result<Vec<bool>>>()?
        };
        let hits = outcomes.iter().filter(|&&b| b).count();
        let fraction = hits as f64 / self.trials as f64;
        let threshold = 1.0 / (self.kappa * (1u64 << self.n) as f64);
        match self.format {
            Format::Json => {
                let body = serde_json::json!({
                    "report": {
                        "fraction": fraction,
                        "hits": hits,
                        "trials": self.trials,
                        "threshold": threshold,
                    }
                });
                emit_json(&artifact("anticonc", self, body)?, &self.out)
            }
            Format::Csv => {
                let rows = [
                    ("fraction", format!("{fraction:e}")),
                    ("hits", hits.to_string()),
                    ("trials", self.trials.to_string()),
                    ("threshold", format!("{threshold:e}")),
                ];
                write_output(&kv_csv(&rows), &self.out)
            }
        }
    }
}

// ---------------------------------------------------------------------------

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Validation(_) | Error::Degenerate(_) | Error::Io(_) => 3,
        Error::Resource(_) => 4,
        Error::Decode(_) => 5,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, result) = match &cli.cmd {
        Cmd::Simulate(c) => ("simulate", c.run()),
        Cmd::SampleCircuit(c) => ("sample-circuit", c.run()),
        Cmd::Reduce(c) => ("reduce", c.run()),
        Cmd::PermReduce(c) => ("perm-reduce", c.run()),
        Cmd::Verify(c) => ("verify", c.run()),
        Cmd::Shape(c) => ("shape", c.run()),
        Cmd::Counterexample(c) => ("counterexample", c.run()),
        Cmd::Imposter(c) => ("imposter", c.run()),
        Cmd::Anticonc(c) => ("anticonc", c.run()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("rcslab {name}: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
