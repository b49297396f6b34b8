use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, bail};
use clap::{Args, Parser, Subcommand};

use maxwell_demon::dilation::{build_standard_dilation, verify_dilation};
use maxwell_demon::io::{self, Layout, MatrixJson};
use maxwell_demon::scenarios::{
    Check, parameter_grid, run_die, run_erasure, run_property_suite, run_simple_qmd,
    run_simple_qmd_sweep,
};
use maxwell_demon::states::DensityOperator;

/// Conditional-action measurement cycles with entropy bookkeeping.
#[derive(Parser)]
#[command(name = "demon", version, about)]
struct Cli {
    /// Print entropies in bits instead of nats (files stay in nats).
    #[arg(long, global = true)]
    bits: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in cycle and print its ledger and checks.
    Demo {
        #[command(subcommand)]
        which: Demo,
    },
    /// Randomized whole-pipeline checks over seeded instances.
    Verify(VerifyArgs),
    /// Build, check, or export a unitary realization of an instrument file.
    Dilate(DilateArgs),
}

#[derive(Subcommand)]
enum Demo {
    /// Reset a qubit register to all-zero, pushing its entropy into the
    /// record.
    Erasure {
        /// Register size, 1..=5.
        #[arg(long, default_value_t = 2)]
        qubits: usize,
        /// Input state: `uniform` (the default, maximally mixed) or a JSON
        /// matrix file.
        #[arg(long, default_value = "uniform")]
        state: String,
    },
    /// Four-level conditional-action cycle at one bias or over a sweep.
    SimpleQmd {
        /// Bias parameter in (0, 1).
        #[arg(long, conflicts_with = "sweep")]
        p: Option<f64>,
        /// Bias grid start:end:step, e.g. 0.05:0.95:0.05.
        #[arg(long)]
        sweep: Option<String>,
        /// Write the sweep table to this CSV file (values in nats).
        #[arg(long, requires = "sweep")]
        csv: Option<PathBuf>,
        /// Random states used to check the realizations.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Fair-die relabeling cycle.
    Die,
}

#[derive(Args)]
struct VerifyArgs {
    /// Largest object dimension to sample.
    #[arg(long, default_value_t = 6)]
    dim_max: usize,
    /// Largest outcome count to sample.
    #[arg(long, default_value_t = 4)]
    outcomes_max: usize,
    /// Number of seeded random instances.
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Generator seed; explicit so runs are reproducible on purpose.
    #[arg(long)]
    seed: u64,
    /// Write the full report to this JSON file.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Also feed deliberately broken families to the validators and demand
    /// rejection.
    #[arg(long)]
    inject_corrupt: bool,
}

#[derive(Args)]
struct DilateArgs {
    /// Instrument JSON: either per-outcome operator lists or a
    /// projector/unitary pair.
    #[arg(long)]
    instrument: PathBuf,
    /// Check the built realization against the instrument on random states.
    #[arg(long)]
    check: bool,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Write the built realization to this JSON file.
    #[arg(long)]
    emit: Option<PathBuf>,
    /// Joint-index order for the emitted file.
    #[arg(long, value_enum, default_value_t = LayoutArg::Canonical)]
    layout: LayoutArg,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum LayoutArg {
    Canonical,
    AncillaOuter,
}

impl From<LayoutArg> for Layout {
    fn from(value: LayoutArg) -> Self {
        match value {
            LayoutArg::Canonical => Layout::Canonical,
            LayoutArg::AncillaOuter => Layout::AncillaOuter,
        }
    }
}

struct Units {
    bits: bool,
}

impl Units {
    fn scale(&self) -> f64 {
        if self.bits { 1.0 / 2.0f64.ln() } else { 1.0 }
    }

    fn label(&self) -> &'static str {
        if self.bits { "bits" } else { "nats" }
    }

    fn entropy(&self, name: &str, value: f64) -> String {
        format!("  {name:<28} {: >18.12} {}", value * self.scale(), self.label())
    }
}

fn print_checks(checks: &[Check]) {
    for check in checks {
        println!("{check}");
    }
}

fn run() -> anyhow::Result<bool> {
    let cli = Cli::parse();
    let units = Units { bits: cli.bits };
    match cli.command {
        Command::Demo { which } => run_demo(which, &units),
        Command::Verify(args) => run_verify(args),
        Command::Dilate(args) => run_dilate(args),
    }
}

fn run_demo(which: Demo, units: &Units) -> anyhow::Result<bool> {
    match which {
        Demo::Erasure { qubits, state } => {
            let input = if state == "uniform" {
                None
            } else {
                let path = PathBuf::from(&state);
                let text = fs::read_to_string(&path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let parsed: MatrixJson = serde_json::from_str(&text)
                    .with_context(|| format!("parsing {}", path.display()))?;
                Some(DensityOperator::new(parsed.to_matrix()?)?)
            };
            let report = run_erasure(qubits, input)?;
            println!(
                "erasure: {} qubit(s), dimension {}, input {}",
                report.qubits,
                report.dim,
                if report.uniform_input {
                    "maximally mixed"
                } else {
                    "from file"
                }
            );
            let b = &report.balance;
            println!("{}", units.entropy("input S0", b.s0));
            println!("{}", units.entropy("readout-known S~1", b.s_tilde1));
            println!("{}", units.entropy("joint S12", b.s12));
            println!("{}", units.entropy("object S1", b.s1));
            println!("{}", units.entropy("record S2", b.s2));
            print_checks(&report.checks);
            Ok(report.passed())
        }
        Demo::SimpleQmd {
            p,
            sweep,
            csv,
            trials,
            seed,
        } => match sweep {
            Some(spec) => {
                let grid = parse_sweep(&spec)?;
                let report = run_simple_qmd_sweep(&grid)?;
                println!(
                    "four-level cycle sweep over {} bias values in [{}, {}]",
                    grid.len(),
                    grid[0],
                    grid[grid.len() - 1]
                );
                println!(
                    "  {:>8}  {:>14}  {:>14}  {:>14}  {:>14}  ({})",
                    "p", "S0", "S1", "S2", "S1+S2",
                    units.label()
                );
                let s = units.scale();
                for row in &report.table.rows {
                    println!(
                        "  {:>8.4}  {:>14.9}  {:>14.9}  {:>14.9}  {:>14.9}",
                        row.p,
                        row.s0 * s,
                        row.s1 * s,
                        row.s2 * s,
                        row.s1_plus_s2 * s
                    );
                }
                if let Some(path) = csv {
                    fs::write(&path, report.table.to_csv())
                        .with_context(|| format!("writing {}", path.display()))?;
                    println!("wrote {}", path.display());
                }
                print_checks(&report.checks);
                Ok(report.passed())
            }
            None => {
                let p = p.unwrap_or(0.3);
                let report = run_simple_qmd(p, trials, seed)?;
                println!("four-level cycle at bias p = {p}");
                let b = &report.fixture_balance;
                println!("{}", units.entropy("input S0", b.s0));
                println!("{}", units.entropy("readout-known S~1", b.s_tilde1));
                println!("{}", units.entropy("joint S12", b.s12));
                println!("{}", units.entropy("object S1", b.s1));
                println!("{}", units.entropy("record S2", b.s2));
                println!(
                    "  outcome probabilities       {:?}",
                    b.outcome_probs
                );
                print_checks(&report.checks);
                Ok(report.passed())
            }
        },
        Demo::Die => {
            let report = run_die()?;
            println!("fair-die relabeling cycle");
            println!("{}", units.entropy("event entropy H(p)", report.event_entropy));
            println!("{}", units.entropy("output entropy H(q)", report.output_entropy));
            println!("{}", units.entropy("label entropy", report.label_entropy));
            println!("{}", units.entropy("joint entropy", report.joint_entropy));
            print_checks(&report.checks);
            Ok(report.passed())
        }
    }
}

fn parse_sweep(spec: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        bail!("sweep must be start:end:step, got `{spec}`");
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|s| s.parse().with_context(|| format!("bad number `{s}` in sweep")))
        .collect::<anyhow::Result<_>>()?;
    Ok(parameter_grid(nums[0], nums[1], nums[2])?)
}

fn run_verify(args: VerifyArgs) -> anyhow::Result<bool> {
    let report = run_property_suite(
        args.dim_max,
        args.outcomes_max,
        args.trials,
        args.seed,
        args.inject_corrupt,
    )?;
    println!(
        "{} seeded instances, dimensions 2..={}, outcomes 2..={}, seed {}",
        report.trials, report.dim_max, report.outcomes_max, report.seed
    );
    print_checks(&report.checks);
    if let Some(path) = args.json {
        fs::write(&path, serde_json::to_string_pretty(&report)?)
            .with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(report.passed())
}

fn run_dilate(args: DilateArgs) -> anyhow::Result<bool> {
    let text = fs::read_to_string(&args.instrument)
        .with_context(|| format!("reading {}", args.instrument.display()))?;
    let instr = io::instrument_from_json(&text)?;
    let (ps, us) = instr.recover_maxwell_form().map_err(|e| {
        anyhow::anyhow!("instrument is not a conditional action, cannot realize it this way: {e}")
    })?;
    let spec = build_standard_dilation(&ps, &us)?;
    println!(
        "built realization: object dimension {}, pointer dimension {}, start index {}",
        spec.object_dim(),
        spec.ancilla_dim(),
        spec.phi_index()
    );
    let mut pass = true;
    if args.check {
        let report = verify_dilation(&spec, &instr, args.trials, args.seed)?;
        let check = Check::le(
            "realization-reproduces-instrument",
            report.max_residual,
            report.threshold,
        );
        println!("{check}");
        println!(
            "  ({} random states, worst trial {}, worst outcome {})",
            report.trials, report.worst_trial, report.worst_outcome
        );
        pass = report.pass;
    }
    if let Some(path) = args.emit {
        let json = io::dilation_to_json(&spec, args.layout.into())?;
        fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(pass)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed");
            ExitCode::FAILURE
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
