//! Command-line front end: validate, run, and render scenario files.
//!
//! Exit codes: 0 on success, 1 when a scenario fails to parse or validate,
//! 2 on runtime errors (I/O, realization failures).

use std::io::{IsTerminal, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use relindet_core::render::render_diagram;
use relindet_core::scenario::{builtin, Scenario, BUILTIN_NAMES};

#[derive(Parser)]
#[command(
    name = "relindet",
    about = "Simulate causally propagating determinacy, propensities, boxes and quantum \
             state assignment on 1+1D Minkowski spacetime",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    /// Structured JSON report.
    #[value(alias = "json")]
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a scenario file (`-` reads standard input) and print the report.
    Run {
        file: String,
        /// Override the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Override the geometric tolerance epsilon.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Record per-query timings (makes structured output nondeterministic).
        #[arg(long)]
        timings: bool,
        /// Write the report to a file instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Validate a scenario file and report any issues.
    Check {
        file: String,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Render the spacetime diagram of a scenario run as SVG.
    Diagram {
        file: String,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Write a built-in scenario (fig1, fig2, fig3, prbox, singlet) as JSON.
    Builtin {
        name: String,
        /// Write to a file instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, String> {
    match command {
        Command::Run { file, seed, format, tolerance, timings, output } => {
            let scenario = match load_scenario(&file, tolerance) {
                Ok(s) => s,
                Err(code) => return Ok(code),
            };
            let seed = seed.unwrap_or(scenario.doc.seed);
            let report = scenario
                .run(seed, timings)
                .map_err(|e| format!("running `{file}`: {e}"))?;
            let rendered = match format {
                Format::Structured => report.to_json(),
                Format::Text => report.to_text(use_color()),
            };
            write_output(output.as_deref(), &rendered)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { file, tolerance } => match load_scenario(&file, tolerance) {
            Ok(s) => {
                println!("ok: scenario {} is valid", s.name());
                Ok(ExitCode::SUCCESS)
            }
            Err(code) => Ok(code),
        },
        Command::Diagram { file, output, seed, tolerance } => {
            let scenario = match load_scenario(&file, tolerance) {
                Ok(s) => s,
                Err(code) => return Ok(code),
            };
            let seed = seed.unwrap_or(scenario.doc.seed);
            let report = scenario
                .run(seed, false)
                .map_err(|e| format!("running `{file}`: {e}"))?;
            let svg = render_diagram(&scenario, &report);
            std::fs::write(&output, svg).map_err(|e| format!("writing {}: {e}", output.display()))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Builtin { name, output } => match builtin(&name) {
            Some(scenario) => {
                write_output(output.as_deref(), &scenario.to_canonical_json())?;
                Ok(ExitCode::SUCCESS)
            }
            None => {
                eprintln!(
                    "error: unknown built-in `{name}` (available: {})",
                    BUILTIN_NAMES.join(", ")
                );
                Ok(ExitCode::FAILURE)
            }
        },
    }
}

/// Read, parse and validate a scenario; prints issues and returns exit code
/// 1 on validation failure.
fn load_scenario(file: &str, tolerance: Option<f64>) -> Result<Scenario, ExitCode> {
    let text = if file == "-" {
        let mut buf = String::new();
        if let Err(e) = std::io::stdin().read_to_string(&mut buf) {
            eprintln!("error: reading standard input: {e}");
            return Err(ExitCode::from(2));
        }
        buf
    } else {
        match std::fs::read_to_string(file) {
            Ok(text) => text,
            Err(e) => {
                eprintln!("error: reading {file}: {e}");
                return Err(ExitCode::from(2));
            }
        }
    };
    let parsed = Scenario::parse(&text).and_then(|s| match tolerance {
        None => Ok(s),
        Some(eps) => {
            // Re-validate with the overridden tolerance.
            let mut doc = s.doc;
            doc.epsilon = Some(eps);
            Scenario::from_doc(doc)
        }
    });
    match parsed {
        Ok(s) => Ok(s),
        Err(issues) => {
            eprintln!("invalid scenario `{file}`:");
            for issue in issues {
                eprintln!("  - {issue}");
            }
            Err(ExitCode::FAILURE)
        }
    }
}

fn write_output(path: Option<&std::path::Path>, content: &str) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|e| format!("writing {}: {e}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .map_err(|e| format!("writing standard output: {e}"))
        }
    }
}

fn use_color() -> bool {
    std::env::var_os("NO_COLOR").is_none() && std::io::stdout().is_terminal()
}
