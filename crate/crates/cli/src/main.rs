use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use loewner_cli::{corpus, exit_code, run_file, RunOptions};

#[derive(Parser)]
#[command(name = "loewner-lab", version, about = "Loewner evolution laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Run {
        /// Config file (JSON).
        #[arg(value_name = "CONFIG", required_unless_present = "config")]
        path: Option<PathBuf>,
        #[arg(long, conflicts_with = "path")]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long, env = "LOEWNER_LAB_OUT", default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        /// Added to every base seed.
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
        /// Fail on any unconverged trace point.
        #[arg(long)]
        strict: bool,
    },
    /// Write the standard driver corpus.
    Corpus {
        #[arg(long, env = "LOEWNER_LAB_OUT", default_value = "corpus")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { path, config, out, threads, seed_offset, strict } => {
            let file = path.or(config).expect("clap enforces one config");
            let opts = RunOptions { out, threads, seed_offset, strict, base_dir: None };
            let res = run_file(&file, &opts);
            match &res {
                Ok(o) => {
                    for c in &o.checks {
                        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
                    }
                    println!("wrote {}", o.json_path.display());
                    println!("wrote {}", o.csv_path.display());
                    if let Some(p) = &o.svg_path {
                        println!("wrote {}", p.display());
                    }
                }
                Err(e) => eprintln!("error: {e}"),
            }
            ExitCode::from(exit_code(&res) as u8)
        }
        Command::Corpus { out } => match corpus::write_corpus(&out) {
            Ok(m) => {
                println!("wrote {} drivers to {} (corpus sha256 {})", m.entries.len(), out.display(), m.corpus_sha256);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
    }
}
