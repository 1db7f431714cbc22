//! `fedsense` command-line driver.
//!
//! Exit status: 0 success, 1 other failure, 2 usage error, 3 I/O error,
//! 4 a run finished but violated one of its invariants.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::federation::ModelMessage;
use crate::scenario::{
    builtin_scenario, run, ArchChoice, Profile, Scenario, ScenarioTraffic, Seeds,
};
use crate::sensing::write_packed;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "fedsense",
    version,
    about = "Peer-to-peer federated channel-availability prediction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write per-node sensing traces and a manifest.
    Generate(GenerateArgs),
    /// Run a scenario end to end and write the report, metrics, and models.
    Run(RunArgs),
    /// Summarize a model file.
    InspectModel { path: PathBuf },
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Builtin scenario: hidden-terminal, three-neighbor, five-neighbor.
    #[arg(long, conflicts_with = "config")]
    pub scenario: Option<String>,
    /// Scenario file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Trace length preset; overrides the scenario's horizon.
    #[arg(long, value_enum)]
    pub profile: Option<Profile>,
    /// Base seed; all traffic, init, shuffle, and validation seeds derive from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Also write the validation traces.
    #[arg(long)]
    pub with_validation: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Network preset; also sets its default learning rate and epochs.
    #[arg(long, value_enum)]
    pub arch: Option<ArchChoice>,
    /// Training epochs per node.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// SGD step size.
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Standard deviation of Gaussian noise added to received parameters.
    #[arg(long)]
    pub noise_std: Option<f64>,
}

impl ScenarioArgs {
    pub fn resolve(&self) -> Result<Scenario> {
        let mut scenario = match (&self.scenario, &self.config) {
            (Some(name), None) => builtin_scenario(name)?,
            (None, Some(path)) => Scenario::from_file(path)?,
            (None, None) => {
                return Err(Error::invalid("one of --scenario or --config is required"))
            }
            (Some(_), Some(_)) => {
                return Err(Error::invalid(
                    "--scenario and --config are mutually exclusive",
                ))
            }
        };
        if let Some(profile) = self.profile {
            scenario = scenario.with_profile(profile);
        }
        if let Some(seed) = self.seed {
            scenario = scenario.with_seeds(Seeds::from_base(seed));
        }
        scenario.validate()?;
        Ok(scenario)
    }
}

impl RunArgs {
    pub fn resolve(&self) -> Result<Scenario> {
        let mut scenario = self.scenario.resolve()?;
        if let Some(arch) = self.arch {
            scenario = scenario.with_arch(arch);
        }
        if let Some(epochs) = self.epochs {
            scenario.epochs = epochs;
        }
        if let Some(lr) = self.learning_rate {
            scenario.learning_rate = lr;
        }
        if let Some(noise) = self.noise_std {
            scenario.noise_std = noise;
        }
        scenario.validate()?;
        Ok(scenario)
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    scenario: &'a str,
    seeds: Seeds,
    delta: f64,
    horizon: f64,
    files: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize)]
struct ManifestEntry {
    node_id: u32,
    kind: &'static str,
    path: String,
    slots: usize,
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path)?;
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes)?;
    Ok(())
}

fn write_manifest(out: &Path, manifest: &Manifest<'_>, scenario: &Scenario) -> Result<()> {
    write_file(
        &out.join("manifest.json"),
        serde_json::to_string_pretty(manifest)?.as_bytes(),
    )?;
    write_file(&out.join("scenario.toml"), scenario.to_toml().as_bytes())
}

/// Writes `traces/node<id>.trace` (packed format) for every node.
pub fn cmd_generate(args: &GenerateArgs) -> Result<Vec<PathBuf>> {
    let scenario = args.scenario.resolve()?;
    let out = &args.scenario.out;
    let dir = out.join("traces");
    create_dir(&dir)?;

    let mut sets = vec![(
        "train",
        ScenarioTraffic::generate(&scenario, scenario.seeds.traffic, scenario.horizon)?,
        dir.clone(),
    )];
    if args.with_validation {
        create_dir(&dir.join("val"))?;
        sets.push((
            "validation",
            ScenarioTraffic::generate(
                &scenario,
                scenario.seeds.validation,
                scenario.validation_horizon(),
            )?,
            dir.join("val"),
        ));
    }

    let mut written = Vec::new();
    let mut entries = Vec::new();
    for (kind, traffic, target) in &sets {
        for node in &scenario.nodes {
            let trace = traffic.trace(&scenario, node.id)?;
            let path = target.join(format!("node{}.trace", node.id));
            let mut buf = Vec::new();
            write_packed(&trace, &mut buf)?;
            write_file(&path, &buf)?;
            entries.push(ManifestEntry {
                node_id: node.id,
                kind,
                path: path
                    .strip_prefix(out)
                    .unwrap_or(&path)
                    .display()
                    .to_string(),
                slots: trace.len(),
            });
            written.push(path);
        }
    }
    write_manifest(
        out,
        &Manifest {
            scenario: &scenario.name,
            seeds: scenario.seeds,
            delta: scenario.delta,
            horizon: scenario.horizon,
            files: entries,
        },
        &scenario,
    )?;
    Ok(written)
}

/// Outcome of `run`: where the artifacts went and which invariants failed.
#[derive(Debug)]
pub struct RunSummary {
    pub report: crate::scenario::EvalReport,
    pub failures: Vec<String>,
}

/// Runs the scenario and writes `report.json`, `epochs.csv`, `summary.csv`,
/// and `models/node<id>.{local,global}.model`.
pub fn cmd_run(args: &RunArgs) -> Result<RunSummary> {
    let scenario = args.resolve()?;
    let out = &args.scenario.out;
    create_dir(&out.join("models"))?;
    let output = run(&scenario)?;
    let report = output.report;

    report.write_json(BufWriter::new(fs::File::create(out.join("report.json"))?))?;
    report.write_epoch_csv(fs::File::create(out.join("epochs.csv"))?)?;
    report.write_summary_csv(fs::File::create(out.join("summary.csv"))?)?;

    let mut entries = Vec::new();
    for node in &output.nodes {
        let spec = scenario.node(node.id)?;
        let models = [
            ("local", node.local.as_ref()),
            ("global", node.global.as_ref().map(|g| &g.params)),
        ];
        for (kind, params) in models {
            let Some(params) = params else { continue };
            let path = out
                .join("models")
                .join(format!("node{}.{kind}.model", node.id));
            write_file(
                &path,
                &ModelMessage::new(node.id, spec.channel, params)?.to_bytes(),
            )?;
            entries.push(ManifestEntry {
                node_id: node.id,
                kind,
                path: path
                    .strip_prefix(out)
                    .unwrap_or(&path)
                    .display()
                    .to_string(),
                slots: node.train_trace.len(),
            });
        }
    }
    write_manifest(
        out,
        &Manifest {
            scenario: &scenario.name,
            seeds: scenario.seeds,
            delta: scenario.delta,
            horizon: scenario.horizon,
            files: entries,
        },
        &scenario,
    )?;

    let failures = report.invariant_failures();
    Ok(RunSummary { report, failures })
}

/// Architecture, size, and value statistics of an encoded model.
pub fn inspect_model(bytes: &[u8]) -> Result<String> {
    let msg = ModelMessage::from_bytes(bytes)?;
    let values = msg.payload();
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let var = values
        .iter()
        .map(|&v| (f64::from(v) - mean).powi(2))
        .sum::<f64>()
        / n;
    let min = values.iter().copied().fold(f32::INFINITY, f32::min);
    let max = values.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    Ok(format!(
        "node: {}, channel: {}\narch: m={} P={} Q={}\nparams: {}, payload: {} bytes\nmin: {min:.6}, max: {max:.6}, mean: {mean:.6}, std: {:.6}\n",
        msg.node_id,
        msg.channel_id,
        msg.arch.input_dim,
        msg.arch.p_units,
        msg.arch.q_units,
        msg.param_count(),
        msg.payload_bytes(),
        var.sqrt(),
    ))
}

pub fn cmd_inspect_model(path: &Path) -> Result<String> {
    inspect_model(&fs::read(path)?)
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => EXIT_IO,
        Error::UnknownScenario(_)
        | Error::InvalidScenario(_)
        | Error::InvalidArgument(_)
        | Error::Toml(_) => EXIT_USAGE,
        Error::Node { source, .. } => exit_code(source),
        _ => EXIT_FAILURE,
    }
}

/// Executes a parsed command and returns the process exit status.
pub fn execute(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Generate(args) => cmd_generate(args).map(|files| {
            println!(
                "wrote {} trace files to {}",
                files.len(),
                args.scenario.out.display()
            );
            EXIT_OK
        }),
        Command::Run(args) => cmd_run(args).map(|summary| {
            let r = &summary.report;
            let fmt = |v: Option<f64>| v.map_or("n/a".into(), |v| format!("{v:.5}"));
            println!(
                "{}: {} nodes, {} params, eta1 {}, eta2 {}",
                r.scenario,
                r.nodes.len(),
                r.param_count,
                fmt(r.eta1),
                fmt(r.eta2)
            );
            if let Some(quoted) = r.quoted_param_count {
                println!(
                    "note: parameter count {} differs from the quoted {quoted}",
                    r.param_count
                );
            }
            for f in &summary.failures {
                eprintln!("invariant failed: {f}");
            }
            if summary.failures.is_empty() {
                EXIT_OK
            } else {
                EXIT_INVARIANT
            }
        }),
        Command::InspectModel { path } => cmd_inspect_model(path).map(|s| {
            print!("{s}");
            EXIT_OK
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })
}
