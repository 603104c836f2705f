use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use treelayout::cli::{
    cmd_eval, cmd_gen, cmd_layout, cmd_oracle, cmd_sweep, render_rows, GenFamily, GenParams,
    LayoutMode, OutputFormat,
};
use treelayout::error::{Error, Result};
use treelayout::io::{parse_ratio, read_layout, read_tree, tree_to_json};
use treelayout::sweep::{OffsetPolicy, SweepConfig};

#[derive(Parser)]
#[command(name = "treelayout", version, about = "Block layouts for binary trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Perfect,
    Path,
    Random,
    Lowerbound,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Aware,
    Oblivious,
}

#[derive(Clone, Copy, ValueEnum)]
enum OffsetsArg {
    Zero,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a tree file.
    Gen {
        family: FamilyArg,
        #[arg(long)]
        height: Option<u32>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "B")]
        block_size: Option<u64>,
        #[arg(long = "inv-p")]
        inv_p: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lay out a tree for a block size, or as a single linear order.
    Layout {
        mode: ModeArg,
        #[arg(long)]
        tree: PathBuf,
        #[arg(long = "B")]
        block_size: Option<u64>,
        #[arg(long, default_value = "1/1")]
        c: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Worst-case transfer counts of a layout, per block size, offset and depth.
    Eval {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        layout: PathBuf,
        #[arg(long = "B")]
        block_sizes: Vec<u64>,
        #[arg(long, value_enum, default_value = "zero")]
        offsets: OffsetsArg,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sweep described by a JSON config.
    Sweep {
        config: PathBuf,
        /// Overrides the config's CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
    /// Exhaustive optimum for a tiny tree, compared with the two-phase layout.
    Oracle {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long = "B")]
        block_size: u64,
        #[arg(long = "D")]
        depth: u32,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => Ok(std::fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn tree_id(path: &Path) -> String {
    path.file_stem().map_or_else(|| "tree".into(), |s| s.to_string_lossy().into_owned())
}

fn format_of(f: FormatArg) -> OutputFormat {
    match f {
        FormatArg::Csv => OutputFormat::Csv,
        FormatArg::Json => OutputFormat::Json,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { family, height, n, seed, block_size, inv_p, out } => {
            let family = match family {
                FamilyArg::Perfect => GenFamily::Perfect,
                FamilyArg::Path => GenFamily::Path,
                FamilyArg::Random => GenFamily::Random,
                FamilyArg::Lowerbound => GenFamily::LowerBound,
            };
            let tree = cmd_gen(family, &GenParams { height, n, seed, block_size, inv_p })?;
            emit(out.as_deref(), &(tree_to_json(&tree) + "\n"))
        }
        Command::Layout { mode, tree, block_size, c, out } => {
            let t = read_tree(&tree)?;
            let mode = match mode {
                ModeArg::Aware => LayoutMode::Aware,
                ModeArg::Oblivious => LayoutMode::Oblivious,
            };
            let (json, took) = cmd_layout(&t, mode, block_size, parse_ratio(&c)?)?;
            eprintln!("layout: {} nodes in {:.3} ms", t.len(), took.as_secs_f64() * 1e3);
            emit(out.as_deref(), &(json + "\n"))
        }
        Command::Eval { tree, layout, block_sizes, offsets, format, out } => {
            let t = read_tree(&tree)?;
            let offsets = match offsets {
                OffsetsArg::Zero => OffsetPolicy::Zero,
                OffsetsArg::All => OffsetPolicy::All,
            };
            let rows = cmd_eval(&t, &tree_id(&tree), read_layout(&layout)?, &block_sizes, offsets)?;
            emit(out.as_deref(), &render_rows(&rows, format_of(format))?)
        }
        Command::Sweep { config, out, format } => {
            let text = std::fs::read_to_string(&config)?;
            let cfg: SweepConfig = serde_json::from_str(&text)?;
            let result = cmd_sweep(&cfg)?;
            let rows = render_rows(&result.rows, format_of(format))?;
            let out = out.or_else(|| cfg.out.as_ref().map(PathBuf::from));
            emit(out.as_deref(), &rows)?;
            let summary = serde_json::to_string_pretty(&result.summary)? + "\n";
            match &cfg.summary {
                Some(p) => std::fs::write(p, summary)?,
                None => eprint!("{summary}"),
            }
            Ok(())
        }
        Command::Oracle { tree, block_size, depth } => {
            let t = read_tree(&tree)?;
            let report = cmd_oracle(&t, block_size, depth)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            if let Error::Usage(_) = e {
                eprintln!("run with --help for usage");
            }
            ExitCode::from(code as u8)
        }
    }
}
