//! `vdp`: solve visual discrimination puzzles from detection files.
//!
//! Exit status: 0 on success, 1 when no discriminator exists or none was
//! found in time, 2 on usage, schema or input errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vdp_core::harness::{self, generate_synthetic_puzzle, load_puzzle_file, read_detections, run_dataset, PlantedSpec};
use vdp_core::logic::{holds, parse_formula, Signature};
use vdp_core::scene::{build_model, surviving_labels, ExtractionConfig};
use vdp_core::synth::{synthesize, Backend, SynthesisConfig, SynthesisError};

#[derive(Parser)]
#[command(name = "vdp", version, about = "First-order discriminators for visual discrimination puzzles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the ranked discriminators of one puzzle.
    Solve {
        /// Puzzle manifest.
        #[arg(long)]
        puzzle: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Solve every manifest in a directory and print a per-concept table.
    Batch {
        #[arg(long)]
        dir: PathBuf,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Write a synthetic puzzle with a planted concept.
    Generate {
        /// Planted spec (JSON).
        #[arg(long)]
        spec: PathBuf,
        /// Output directory; defaults to the spec's directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Print the first-order model of a detection file.
    ExtractModel {
        #[arg(long)]
        detections: PathBuf,
    },
    /// Evaluate a sentence on the model of a detection file.
    EvalFormula {
        #[arg(long)]
        formula: String,
        #[arg(long)]
        detections: PathBuf,
    },
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 5)]
    top_k: usize,
    #[arg(long, default_value_t = 3)]
    max_vars: usize,
    #[arg(long, default_value_t = 5)]
    max_atoms: usize,
    /// Time budget in seconds.
    #[arg(long, default_value_t = 300.0)]
    timeout: f64,
    /// enumerative or constraint.
    #[arg(long, default_value = "enumerative")]
    backend: Backend,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses every core. Output does not depend on it.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

impl SearchArgs {
    fn config(&self) -> SynthesisConfig {
        SynthesisConfig {
            top_k: self.top_k,
            max_vars: self.max_vars,
            max_atoms: self.max_atoms,
            time_budget_seconds: self.timeout,
            backend: self.backend,
            seed: self.seed,
            threads: self.threads,
            ..Default::default()
        }
    }
}

/// A failure with its exit status.
struct Failure(u8, String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(2, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure(code, msg)) => {
            eprintln!("vdp: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run(command: Command) -> Result<String, Failure> {
    let extraction = ExtractionConfig::default();
    match command {
        Command::Solve { puzzle, search } => solve(&puzzle, &search.config(), &extraction),
        Command::Batch { dir, out, search } => {
            let cfg = search.config();
            cfg.validate()?;
            let report = run_dataset(&dir, &cfg, &extraction)?;
            if let Some(out) = out {
                fs::write(&out, report.to_json_string()).map_err(|e| Failure(2, format!("{}: {e}", out.display())))?;
            }
            Ok(report.to_table())
        }
        Command::Generate { spec, out_dir } => {
            let text = fs::read_to_string(&spec).map_err(|e| Failure(2, format!("{}: {e}", spec.display())))?;
            let planted: PlantedSpec =
                serde_json::from_str(&text).map_err(|e| Failure(2, format!("{}: {e}", spec.display())))?;
            let dir = out_dir.unwrap_or_else(|| spec.parent().map(Path::to_path_buf).unwrap_or_default());
            let g = match generate_synthetic_puzzle(&planted, &dir) {
                Err(e @ harness::HarnessError::HardToPlant(_)) => return Err(Failure(1, e.to_string())),
                r => r?,
            };
            Ok(format!(
                "wrote {}\nexpected candidate: #{}\n",
                g.manifest_path.display(),
                g.manifest.expected_candidate.unwrap_or(0)
            ))
        }
        Command::ExtractModel { detections } => {
            let scene = read_detections(&detections)?;
            let vocab = surviving_labels(&scene, &extraction);
            let m = build_model(&scene, &vocab, &extraction)?;
            if m.truncated {
                eprintln!("vdp: objects beyond max_objects were dropped");
            }
            let mut s = serde_json::to_string_pretty(&m.model.to_json())?;
            s.push('\n');
            Ok(s)
        }
        Command::EvalFormula { formula, detections } => {
            let scene = read_detections(&detections)?;
            let vocab = surviving_labels(&scene, &extraction);
            let model = build_model(&scene, &vocab, &extraction)?.model;
            // Labels absent from the scene are still valid constants.
            let mut labels = vocab.clone();
            labels.extend(mentioned_labels(&formula));
            let sig = Signature::new(labels, model.number_bound());
            let f = parse_formula(&formula, &sig)?;
            let model = build_model(&scene, sig.labels(), &extraction)?.model;
            Ok(format!("{}\n", holds(&model, &f)?))
        }
    }
}

fn solve(manifest: &Path, cfg: &SynthesisConfig, extraction: &ExtractionConfig) -> Result<String, Failure> {
    cfg.validate()?;
    let loaded = load_puzzle_file(manifest, extraction)?;
    let s = match synthesize(&loaded.puzzle, cfg) {
        Ok(s) => s,
        Err(e @ (SynthesisError::SpaceExhausted | SynthesisError::BudgetExhausted)) => {
            return Err(Failure(1, format!("{}: {e}", loaded.manifest.name)))
        }
        Err(e) => return Err(e.into()),
    };
    let mut out = format!("puzzle: {}\n", loaded.manifest.name);
    out += &format!("chosen candidate: #{}\n", s.best().chosen_candidate + 1);
    for (i, r) in s.results.iter().enumerate() {
        out += &format!("{}. #{} cost {} {}\n", i + 1, r.chosen_candidate + 1, r.cost, r.formula);
    }
    let mut flags = Vec::new();
    if s.ambiguous {
        flags.push("ambiguous");
    }
    if s.budget_exhausted {
        flags.push("budget_exhausted");
    }
    if loaded.truncated {
        flags.push("truncated");
    }
    if !flags.is_empty() {
        out += &format!("flags: {}\n", flags.join(", "));
    }
    Ok(out)
}

/// Symbols in label position of `labelOf` and `count` atoms.
fn mentioned_labels(text: &str) -> Vec<String> {
    let tokens: Vec<&str> = text
        .split(|c: char| c.is_whitespace() || c == '(' || c == ')')
        .filter(|t| !t.is_empty())
        .collect();
    tokens
        .windows(3)
        .filter_map(|w| match w[0] {
            "labelOf" => Some(w[2].to_string()),
            "count" => Some(w[1].to_string()),
            _ => None,
        })
        .collect()
}
