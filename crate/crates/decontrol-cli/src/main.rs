//! Command-line front end: decontrol, simulate, verify, demo, and count over
//! the circuit and oracle JSON file formats.
//!
//! Machine-readable results go to standard output as JSON; human-readable
//! notes go to standard error. Exit codes: 0 on success, 1 when validation
//! or verification fails (e.g. the verify distance exceeds tolerance), 2 on
//! usage or parse errors.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex;
use serde_json::json;

use decontrol::circuit::validate;
use decontrol::format::{parse_circuit, parse_oracle, serialize_circuit};
use decontrol::harness::{build_demo, check_equivalence};
use decontrol::sim::{output_density, run_pure, OracleBinding};
use decontrol::transform::{
    decontrol as decontrol_circuit, overhead_report, CounterMode, DecontrolVariant, HoldMode,
};
use decontrol::{Circuit64, OracleBinding64};

#[derive(Parser)]
#[command(
    name = "decontrol",
    about = "Rewrite circuits with controlled oracle calls into uncontrolled ones, \
             simulate them exactly, and verify the rewrite against brute force",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct VariantArgs {
    /// Counter construction: full, no-counter, or period:N
    #[arg(long, default_value = "full")]
    variant: String,
    /// Hold registers: both, h, ht, or auto
    #[arg(long, default_value = "auto")]
    hold: String,
}

#[derive(Subcommand)]
enum Command {
    /// Rewrite a circuit so it contains no controlled oracle calls
    Decontrol {
        /// Input circuit file
        #[arg(long = "in")]
        input: PathBuf,
        /// Output circuit file (standard output if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        variant: VariantArgs,
    },
    /// Run a circuit on a bound oracle and print the output state
    Simulate {
        /// Input circuit file
        #[arg(long = "in")]
        input: PathBuf,
        /// Oracle file binding the black box
        #[arg(long)]
        oracle: PathBuf,
        /// Override the oracle's global phase with e^{i·radians}
        #[arg(long)]
        phase: Option<f64>,
        /// Print the traced output density matrix instead of the pure state
        #[arg(long)]
        density: bool,
    },
    /// Check the rewritten circuit against the brute-force reference mixture
    Verify {
        /// Input circuit file (the original, controlled circuit)
        #[arg(long = "in")]
        input: PathBuf,
        /// Oracle file binding the black box
        #[arg(long)]
        oracle: PathBuf,
        /// Phase-group order for the reference average (default: one more
        /// than the circuit's controlled-call count)
        #[arg(long)]
        q: Option<usize>,
        /// Largest passing trace distance
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        variant: VariantArgs,
    },
    /// Run a built-in demo: global-phase, commutativity, state-prep, pru-phase
    Demo { name: String },
    /// Report the structural overhead of rewriting a circuit
    Count {
        /// Input circuit file
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        variant: VariantArgs,
    },
}

// Exit codes 1 and 2 as documented; success paths return 0 directly.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn parse(message: impl fmt::Display) -> Self {
        Self {
            code: 2,
            message: message.to_string(),
        }
    }

    fn validation(message: impl fmt::Display) -> Self {
        Self {
            code: 1,
            message: message.to_string(),
        }
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::parse(format!("cannot read {}: {e}", path.display())))
}

fn load_circuit(path: &Path) -> Result<Circuit64, Failure> {
    let text = read_file(path)?;
    let circuit = parse_circuit::<f64>(&text)
        .map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
    let violations = validate(&circuit);
    if !violations.is_empty() {
        let list = violations
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Failure::validation(format!(
            "{}: invalid circuit: {list}",
            path.display()
        )));
    }
    Ok(circuit)
}

fn load_oracle(path: &Path, phase_override: Option<f64>) -> Result<OracleBinding64, Failure> {
    let text = read_file(path)?;
    let binding = parse_oracle::<f64>(&text)
        .map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
    match phase_override {
        None => Ok(binding),
        Some(theta) => {
            OracleBinding::new(binding.unitary().clone(), Complex::from_polar(1.0, theta))
                .map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
        }
    }
}

fn parse_variant(args: &VariantArgs) -> Result<DecontrolVariant, Failure> {
    let counter = match args.variant.as_str() {
        "full" => CounterMode::Full,
        "no-counter" => CounterMode::None,
        other => match other.strip_prefix("period:") {
            Some(p) => {
                let p: usize = p.parse().map_err(|_| {
                    Failure::parse(format!("invalid period in --variant {other}"))
                })?;
                if p == 0 {
                    return Err(Failure::parse("period must be at least 1"));
                }
                CounterMode::Period(p)
            }
            None => {
                return Err(Failure::parse(format!(
                    "unknown --variant {other}; expected full, no-counter, or period:<p>"
                )))
            }
        },
    };
    let hold = match args.hold.as_str() {
        "both" => HoldMode::Both,
        "h" => HoldMode::HOnly,
        "ht" => HoldMode::HTransposeOnly,
        "auto" => HoldMode::Auto,
        other => {
            return Err(Failure::parse(format!(
                "unknown --hold {other}; expected both, h, ht, or auto"
            )))
        }
    };
    Ok(DecontrolVariant { counter, hold })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::parse(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn complex_pairs(entries: &[Complex<f64>]) -> Vec<[f64; 2]> {
    entries.iter().map(|c| [c.re, c.im]).collect()
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Decontrol {
            input,
            out,
            variant,
        } => {
            let circuit = load_circuit(&input)?;
            let dv = parse_variant(&variant)?;
            let rewritten = decontrol_circuit(&circuit, &dv)
                .map_err(|e| Failure::validation(e.to_string()))?;
            let report = overhead_report(&circuit, &dv)
                .map_err(|e| Failure::validation(e.to_string()))?;
            eprintln!(
                "rewrote {} controlled call(s); {} extra qubits, {} extra gates",
                report.gadget_count, report.extra_qubits, report.extra_gate_count
            );
            emit(out.as_deref(), &serialize_circuit(&rewritten))?;
            Ok(0)
        }
        Command::Simulate {
            input,
            oracle,
            phase,
            density,
        } => {
            let circuit = load_circuit(&input)?;
            let binding = load_oracle(&oracle, phase)?;
            let doc = if density {
                let rho = output_density(&circuit, &binding)
                    .map_err(|e| Failure::validation(e.to_string()))?;
                let m = rho.matrix();
                let rows: Vec<Vec<[f64; 2]>> = (0..m.rows())
                    .map(|i| (0..m.cols()).map(|j| [m.get(i, j).re, m.get(i, j).im]).collect())
                    .collect();
                json!({
                    "registers": rho.layout().registers.iter()
                        .map(|r| json!({"name": r.name, "dim": r.dim}))
                        .collect::<Vec<_>>(),
                    "density": rows,
                })
            } else {
                let psi = run_pure(&circuit, &binding)
                    .map_err(|e| Failure::validation(e.to_string()))?;
                json!({
                    "registers": circuit.layout.registers.iter()
                        .map(|r| json!({"name": r.name, "dim": r.dim}))
                        .collect::<Vec<_>>(),
                    "amplitudes": complex_pairs(psi.entries()),
                })
            };
            println!("{}", serde_json::to_string_pretty(&doc).expect("serializes"));
            Ok(0)
        }
        Command::Verify {
            input,
            oracle,
            q,
            tol,
            variant,
        } => {
            let circuit = load_circuit(&input)?;
            let binding = load_oracle(&oracle, None)?;
            let dv = parse_variant(&variant)?;
            let q = q.unwrap_or_else(|| circuit.default_q());
            if q == 0 {
                return Err(Failure::parse("--q must be at least 1"));
            }
            let report = check_equivalence(&circuit, binding.unitary(), &dv, q, tol)
                .map_err(|e| Failure::validation(e.to_string()))?;
            eprintln!(
                "trace distance {:.3e} against C_{} reference (tolerance {:.1e})",
                report.trace_distance, report.q_used, report.tolerance
            );
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
            Ok(if report.pass { 0 } else { 1 })
        }
        Command::Demo { name } => {
            let demo = build_demo(&name).map_err(|e| Failure::parse(e.to_string()))?;
            eprintln!("{}", demo.result.narrative);
            println!(
                "{}",
                serde_json::to_string_pretty(&demo.result).expect("result serializes")
            );
            Ok(0)
        }
        Command::Count { input, variant } => {
            let circuit = load_circuit(&input)?;
            let dv = parse_variant(&variant)?;
            let report =
                overhead_report(&circuit, &dv).map_err(|e| Failure::validation(e.to_string()))?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    // clap handles --help/--version itself and exits 2 on usage errors.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.exit_code() == 0 { 0 } else { 2 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
