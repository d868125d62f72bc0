//! `pivotmap`: pivot extraction, matching, losses, rasterization,
//! evaluation and fitting over JSONL map files.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pivotmap::config::Config;
use pivotmap::synth::ShapeKind;
use pivotmap::Error;

#[derive(Debug, Parser)]
#[command(
    name = "pivotmap",
    version,
    about = "Pivot-based vectorized map toolkit"
)]
struct Cli {
    /// JSON file overriding default weights, thresholds, budgets and grid dims.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Seed for every stochastic step (synthesis, fit initialization).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct InOut {
    /// Input JSONL (default: stdin).
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,

    /// Output file (default: stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Pair {
    /// Predicted maps, JSONL (one frame per line, scores required).
    #[arg(long, value_name = "FILE")]
    preds: PathBuf,

    /// Ground-truth maps, JSONL.
    #[arg(long, value_name = "FILE")]
    gts: PathBuf,

    /// Output file (default: stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MaskFormat {
    Rle,
    Pgm,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reduce every element to its pivot sequence (Visvalingam-Whyatt).
    Simplify {
        #[command(flatten)]
        io: InOut,
        /// Effective-area stopping threshold in m².
        #[arg(long)]
        area_threshold: Option<f64>,
    },
    /// Assign predictions to ground truth per class and report each pivot matching.
    Match {
        #[command(flatten)]
        pair: Pair,
        /// Match in range-normalized [0,1]² coordinates instead of metres.
        #[arg(long)]
        normalize: bool,
    },
    /// Evaluate the sequence loss for records {"pred", "probs", "gt"}.
    Loss {
        #[command(flatten)]
        io: InOut,
        /// Normalize coordinates by the configured range before the loss.
        #[arg(long)]
        normalize: bool,
    },
    /// Rasterize elements into BEV masks.
    Rasterize {
        #[command(flatten)]
        io: InOut,
        /// `rle`: one JSON record per frame; `pgm`: union mask of one frame as binary PGM.
        #[arg(long, value_enum, default_value_t = MaskFormat::Rle)]
        format: MaskFormat,
        /// Frame to export with `--format pgm` (default: the first).
        #[arg(long)]
        frame: Option<String>,
    },
    /// Chamfer-distance average precision per class and mAP.
    Eval {
        #[command(flatten)]
        pair: Pair,
        /// Comma-separated Chamfer thresholds in metres.
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
        /// Also write a one-row CSV table (AP_divider,AP_ped,AP_boundary,mAP).
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
        /// Worker threads for per-frame matching (0 = all cores).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Emit a synthetic corpus, one element per frame.
    Synth {
        /// Output file (default: stdout).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// `all`, `corner-heavy`, or a single shape kind.
        #[arg(long, default_value = "corner-heavy")]
        kind: String,
    },
    /// Compare dense, evenly-resampled and pivot representations of a corpus.
    Compare {
        #[command(flatten)]
        io: InOut,
        /// Points per compact representation.
        #[arg(short, long, default_value_t = 5)]
        k: usize,
        /// Write an SVG overlay of the first `--svg-limit` shapes.
        #[arg(long, value_name = "FILE")]
        svg: Option<PathBuf>,
        #[arg(long, default_value_t = 12)]
        svg_limit: usize,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Fit a free point set to a ground-truth pivot sequence by direct descent.
    Fit {
        /// Ground-truth maps; the element is chosen with --frame/--element.
        /// Without it a synthetic shape is generated.
        #[arg(long = "in", value_name = "FILE")]
        input: Option<PathBuf>,
        /// Output file (default: stdout).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        #[arg(long)]
        frame: Option<String>,
        #[arg(long, default_value_t = 0)]
        element: usize,
        /// Synthetic shape used when --in is absent.
        #[arg(long, default_value = "rectangle")]
        shape: ShapeKind,
        /// Number of free points.
        #[arg(short, long, default_value_t = 10)]
        n: usize,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        /// Write an SVG overlay of ground truth, initial and final points.
        #[arg(long, value_name = "FILE")]
        svg: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_) | Error::Parse { .. } | Error::Validation { .. } => 2,
        Error::Capacity(_) => 3,
        Error::Io(_) => 4,
    }
}

fn report(kind: &str, detail: &str) {
    let envelope = serde_json::json!({ "error": { "kind": kind, "detail": detail } });
    eprintln!("{envelope}");
}

fn load_config(path: Option<&PathBuf>) -> pivotmap::Result<Config> {
    match path {
        None => Ok(Config::default()),
        Some(p) => Config::from_json(&io::read_file(p)?),
    }
}

fn run(cli: Cli) -> pivotmap::Result<()> {
    let mut cfg = load_config(cli.config.as_ref())?;
    let seed = cli.seed;
    match cli.command {
        Command::Simplify { io, area_threshold } => {
            if let Some(a) = area_threshold {
                cfg.simplify.area_threshold = a;
            }
            cfg.validate()?;
            commands::simplify(&cfg, io.input.as_deref(), io.out.as_deref())
        }
        Command::Match { pair, normalize } => {
            cfg.validate()?;
            commands::match_instances(&cfg, &pair.preds, &pair.gts, pair.out.as_deref(), normalize)
        }
        Command::Loss { io, normalize } => {
            cfg.validate()?;
            commands::loss(&cfg, io.input.as_deref(), io.out.as_deref(), normalize)
        }
        Command::Rasterize { io, format, frame } => {
            cfg.validate()?;
            match format {
                MaskFormat::Rle => {
                    commands::rasterize_rle(&cfg, io.input.as_deref(), io.out.as_deref())
                }
                MaskFormat::Pgm => commands::rasterize_pgm(
                    &cfg,
                    io.input.as_deref(),
                    io.out.as_deref(),
                    frame.as_deref(),
                ),
            }
        }
        Command::Eval {
            pair,
            thresholds,
            csv,
            jobs,
        } => {
            if let Some(t) = thresholds {
                cfg.eval.thresholds = t;
            }
            cfg.validate()?;
            commands::eval(
                &cfg,
                &pair.preds,
                &pair.gts,
                pair.out.as_deref(),
                csv.as_deref(),
                jobs,
            )
        }
        Command::Synth { out, count, kind } => {
            cfg.validate()?;
            commands::synth(&cfg, out.as_deref(), count, &kind, seed)
        }
        Command::Compare {
            io,
            k,
            svg,
            svg_limit,
            jobs,
        } => {
            cfg.validate()?;
            commands::compare(
                &cfg,
                io.input.as_deref(),
                io.out.as_deref(),
                k,
                svg.as_deref(),
                svg_limit,
                jobs,
            )
        }
        Command::Fit {
            input,
            out,
            frame,
            element,
            shape,
            n,
            steps,
            learning_rate,
            svg,
        } => {
            cfg.fit.seed = seed;
            if let Some(s) = steps {
                cfg.fit.steps = s;
            }
            if let Some(lr) = learning_rate {
                cfg.fit.learning_rate = lr;
            }
            cfg.validate()?;
            let source = match input {
                Some(path) => commands::FitSource::File {
                    path,
                    frame,
                    element,
                },
                None => commands::FitSource::Synthetic(shape),
            };
            commands::fit(&cfg, &source, n, out.as_deref(), svg.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                let _ = e.print();
                return ExitCode::from(2);
            }
            report("invalid_input", e.render().to_string().trim());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            report(e.kind(), &e.to_string());
            ExitCode::from(exit_code(&e))
        }
    }
}
