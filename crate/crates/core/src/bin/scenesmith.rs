use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use scenesmith::pipeline::{self, Overrides, PipelineConfig, PipelineError, Stage};

/// Builds a simulation scene from a surface model, a multispectral image, a
/// spectral library and road lines.
#[derive(Parser, Debug)]
#[command(name = "scenesmith", version)]
struct Args {
    /// Pipeline config file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// calibrate, classify, dtm, buildings, place, assemble or all.
    #[arg(long)]
    stage: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
}

fn run(args: Args) -> Result<pipeline::RunReport, PipelineError> {
    let stage: Stage = args.stage.parse()?;
    let overrides = Overrides { seed: args.seed, out_dir: args.out, workers: args.workers };
    let cfg = PipelineConfig::load(&args.config, &overrides)?;
    pipeline::run(&cfg, stage)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(args) {
        Ok(report) => {
            for s in &report.stages {
                let counts: Vec<String> = s.counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
                let state = if s.cached { "cached" } else { "done" };
                println!("{:<10} {state:<6} {:>8.3}s  {}", s.stage.as_str(), s.seconds, counts.join(" "));
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
