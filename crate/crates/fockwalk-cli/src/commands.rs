//! Subcommand drivers: argument plumbing, engine invocation, output files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use fockwalk::conditional::run_conditional;
use fockwalk::error::FockError;
use fockwalk::gaussian::{
    circuit_density_params, circuit_statevector_params, CircuitSpec, CutoffMode,
};
use fockwalk::gbs::{run_gbs, run_gbs_global_cutoff, GbsOptions};
use fockwalk::lattice::CutoffSpec;
use fockwalk::walker::{fill_full, fill_probability_mass};
use serde::Serialize;

use crate::bench;
use crate::io;
use crate::report::{input_digest, AmplitudeBreakdown, RunReport};
use crate::schema::CircuitFile;
use crate::threads::ThreadedExecutor;

#[derive(Debug, Parser)]
#[command(name = "fockwalk", version, about = "Fock-lattice walks over Gaussian circuit data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pure-state Fock amplitudes of a lossless circuit
    Statevec(WalkArgs),
    /// Photon-number probabilities of the (generally mixed) output state
    Gbs(WalkArgs),
    /// Conditional states of the undetected modes, one block per outcome
    Conditional(WalkArgs),
    /// Dry complexity curves for all traversal strategies
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct WalkArgs {
    /// Circuit description file (JSON)
    pub spec: PathBuf,
    /// Directory for output files
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for pivot batches
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Stream halo amplitudes through the evicting buffer (gbs, conditional)
    #[arg(long)]
    pub buffered: bool,
    /// Override the cutoff mode with a total-photon bound
    #[arg(long, conflicts_with = "prob_mass")]
    pub global_cutoff: Option<usize>,
    /// Override the cutoff mode with a probability-mass target (statevec)
    #[arg(long)]
    pub prob_mass: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Directory for complexity.csv
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

pub fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Statevec(args) => run_statevec(&args),
        Command::Gbs(args) => run_gbs_cmd(&args),
        Command::Conditional(args) => run_conditional_cmd(&args),
        Command::Bench(args) => bench::run(&args.out),
    }
}

fn validation(msg: impl Into<String>) -> anyhow::Error {
    FockError::Validation(msg.into()).into()
}

struct LoadedSpec {
    spec: CircuitSpec,
    digest: String,
}

fn load_spec(args: &WalkArgs) -> anyhow::Result<LoadedSpec> {
    let bytes = fs::read(&args.spec)
        .with_context(|| format!("read circuit file {}", args.spec.display()))?;
    let digest = input_digest(&bytes);
    let text = String::from_utf8(bytes).context("circuit file is not UTF-8")?;
    let mut spec = CircuitFile::from_json(&text)?.into_spec()?;
    if let Some(n) = args.global_cutoff {
        spec.cutoff_mode = CutoffMode::GlobalPhotons(n);
    }
    if let Some(x) = args.prob_mass {
        spec.cutoff_mode = CutoffMode::ProbabilityMass(x);
    }
    spec.validate()?;
    fs::create_dir_all(&args.out)
        .with_context(|| format!("create output directory {}", args.out.display()))?;
    Ok(LoadedSpec { spec, digest })
}

fn finish(out_dir: &Path, mut report: RunReport) -> anyhow::Result<()> {
    report.outputs.push("report.json".into());
    fs::write(out_dir.join("report.json"), report.to_json())?;
    eprintln!(
        "{}: {} pivots, {} amplitudes, wrote {}",
        report.command,
        report.pivots_applied,
        report.amplitudes_written.total,
        report.outputs.join(", ")
    );
    Ok(())
}

fn run_statevec(args: &WalkArgs) -> anyhow::Result<()> {
    if args.buffered {
        return Err(validation("--buffered applies to gbs and conditional runs"));
    }
    let LoadedSpec { spec, digest } = load_spec(args)?;
    if !spec.is_lossless() {
        return Err(validation("statevec needs a lossless circuit; run gbs for lossy ones"));
    }
    let params = circuit_statevector_params(&spec)?;
    let exec = ThreadedExecutor::new(args.threads);
    let (tensor, counters, mass) = match &spec.cutoff_mode {
        CutoffMode::Local => {
            let (t, c) = fill_full(&params, &CutoffSpec::Local(spec.cutoffs.clone()), &exec)?;
            (t, c, None)
        }
        CutoffMode::GlobalPhotons(n) => {
            let (t, c) = fill_full(&params, &CutoffSpec::GlobalWeight(*n), &exec)?;
            (t, c, None)
        }
        CutoffMode::ProbabilityMass(x) => {
            let (t, c, reached) = fill_probability_mass(&params, *x)?;
            (t, c, Some(reached))
        }
    };
    let outputs = io::write_complex_tensor(
        &args.out,
        "statevector",
        &tensor.shape,
        &tensor.data,
        "mode_occupation",
    )?;
    finish(
        &args.out,
        RunReport {
            command: "statevec".into(),
            input_digest: digest,
            pivots_applied: counters.pivots_applied,
            amplitudes_written: AmplitudeBreakdown::total_only(counters.cells_written),
            peak_buffer_bytes: counters.peak_cells * 16,
            mass_reached: mass,
            outputs,
        },
    )
}

#[derive(Serialize)]
struct PatternRow {
    pattern: Vec<usize>,
    probability: f64,
}

#[derive(Serialize)]
struct PatternFile {
    photon_bound: usize,
    rows: Vec<PatternRow>,
}

fn run_gbs_cmd(args: &WalkArgs) -> anyhow::Result<()> {
    let LoadedSpec { spec, digest } = load_spec(args)?;
    let params = circuit_density_params(&spec)?;
    let exec = ThreadedExecutor::new(args.threads);
    match &spec.cutoff_mode {
        CutoffMode::Local => {
            let opts = GbsOptions { buffered: args.buffered, force_general: false };
            let (probs, counters) = run_gbs(&params, &spec.cutoffs, opts, &exec)?;
            let outputs = io::write_real_tensor(
                &args.out,
                "probabilities",
                &probs.shape,
                &probs.data,
                "mode_occupation",
            )?;
            finish(
                &args.out,
                RunReport {
                    command: "gbs".into(),
                    input_digest: digest,
                    pivots_applied: counters.pivots_applied,
                    amplitudes_written: AmplitudeBreakdown::from_counts(&counters.writes),
                    peak_buffer_bytes: counters.peak_cells * 16,
                    mass_reached: None,
                    outputs,
                },
            )
        }
        CutoffMode::GlobalPhotons(n) => {
            if args.buffered {
                return Err(validation(
                    "total-photon runs retain the whole simplex; --buffered does not apply",
                ));
            }
            let (rows, counters) = run_gbs_global_cutoff(&params, *n, &exec)?;
            let file = PatternFile {
                photon_bound: *n,
                rows: rows
                    .into_iter()
                    .map(|(pattern, probability)| PatternRow { pattern, probability })
                    .collect(),
            };
            let mut text = serde_json::to_string_pretty(&file)?;
            text.push('\n');
            fs::write(args.out.join("photon_patterns.json"), text)?;
            finish(
                &args.out,
                RunReport {
                    command: "gbs".into(),
                    input_digest: digest,
                    pivots_applied: counters.pivots_applied,
                    amplitudes_written: AmplitudeBreakdown::from_counts(&counters.writes),
                    peak_buffer_bytes: counters.peak_cells * 16,
                    mass_reached: None,
                    outputs: vec!["photon_patterns.json".into()],
                },
            )
        }
        CutoffMode::ProbabilityMass(_) => Err(validation(
            "probability-mass bounds apply to statevec runs; pick Local or GlobalPhotons",
        )),
    }
}

#[derive(Serialize)]
struct BlockEntry {
    pattern: Vec<usize>,
    trace: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    values: Option<Vec<[f64; 2]>>,
}

#[derive(Serialize)]
struct BlocksFile {
    /// One-based labels, matching the input convention.
    detected_modes: Vec<usize>,
    undetected_modes: Vec<usize>,
    /// Interleaved bra/ket shape of each block.
    block_shape: Vec<usize>,
    blocks: Vec<BlockEntry>,
}

fn run_conditional_cmd(args: &WalkArgs) -> anyhow::Result<()> {
    if args.global_cutoff.is_some() || args.prob_mass.is_some() {
        return Err(validation("conditional runs use per-mode cutoffs only"));
    }
    let LoadedSpec { spec, digest } = load_spec(args)?;
    if spec.cutoff_mode != CutoffMode::Local {
        return Err(validation("conditional runs use per-mode cutoffs only"));
    }
    let params = circuit_density_params(&spec)?;
    let exec = ThreadedExecutor::new(args.threads);
    let opts = GbsOptions { buffered: args.buffered, force_general: false };
    let (batch, counters) =
        run_conditional(&params, &spec.cutoffs, &spec.detected_modes, opts, &exec)?;

    // blocks.bin holds one tensor over detected pattern coordinates followed
    // by the interleaved undetected axes, blocks in pattern-major order.
    let mut shape: Vec<usize> =
        batch.detected_modes.iter().map(|&m| spec.cutoffs[m]).collect();
    shape.extend_from_slice(&batch.undetected_shape);
    let flat: Vec<fockwalk::C64> =
        batch.blocks.iter().flat_map(|b| b.data.iter().copied()).collect();
    let embed_values = flat.len() <= io::JSON_TWIN_LIMIT;
    let mut bytes = Vec::new();
    {
        #[derive(Serialize)]
        struct Header<'a> {
            shape: &'a [usize],
            index_convention: &'a str,
            dtype: &'a str,
            count: usize,
        }
        bytes.extend_from_slice(&serde_json::to_vec(&Header {
            shape: &shape,
            index_convention: "detected_pattern_then_interleaved_bra_ket",
            dtype: "complex128",
            count: flat.len(),
        })?);
        bytes.push(b'\n');
        for z in &flat {
            bytes.extend_from_slice(&z.re.to_le_bytes());
            bytes.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    fs::write(args.out.join("blocks.bin"), bytes)?;

    let meta = BlocksFile {
        detected_modes: batch.detected_modes.iter().map(|m| m + 1).collect(),
        undetected_modes: batch.undetected_modes.iter().map(|m| m + 1).collect(),
        block_shape: batch.undetected_shape.clone(),
        blocks: batch
            .blocks
            .iter()
            .map(|b| BlockEntry {
                pattern: b.pattern.clone(),
                trace: b.trace,
                values: embed_values
                    .then(|| b.data.iter().map(|z| [z.re, z.im]).collect()),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    fs::write(args.out.join("blocks.json"), text)?;

    finish(
        &args.out,
        RunReport {
            command: "conditional".into(),
            input_digest: digest,
            pivots_applied: counters.pivots_applied,
            amplitudes_written: AmplitudeBreakdown::from_counts(&counters.writes),
            peak_buffer_bytes: counters.peak_cells * 16,
            mass_reached: None,
            outputs: vec!["blocks.bin".into(), "blocks.json".into()],
        },
    )
}
