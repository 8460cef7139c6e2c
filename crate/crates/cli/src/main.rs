use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand};
use msr_core::config::resolve_seed;
use msr_core::dataset::{self, Dataset};
use msr_core::eval::{parse_report_csv, to_markdown};
use msr_core::pipeline::{csv_file, RunOptions};
use msr_core::{Error, Execution, Modality, RunConfig};

#[derive(Parser)]
#[command(name = "msr", version, about = "Seeded multi-scenario reasoning runs over synthetic multimodal data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset file.
    Gen(GenArgs),
    /// Run the seven-step pipeline and write the trace and reports.
    Run(RunArgs),
    /// Render the Markdown report from the per-modality CSV files.
    Report(ReportArgs),
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed. Falls back to MSR_SEED, then the config, then 42.
    #[arg(long, env = "MSR_SEED")]
    seed: Option<u64>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    common: Common,
    /// Records per modality.
    #[arg(long)]
    n: Option<usize>,
    /// Dataset file to write.
    #[arg(long, default_value = "dataset.json")]
    out: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Dataset file; overrides the config. Without either, one is generated.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Records per modality when generating.
    #[arg(long)]
    n: Option<usize>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run a single modality.
    #[arg(long)]
    modality: Option<Modality>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding the report CSV files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    modality: Option<Modality>,
    /// Flag every cell below this value.
    #[arg(long)]
    band: Option<f64>,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(RunConfig::default()),
    }
}

fn apply_overrides(cfg: &mut RunConfig, n: Option<usize>, workers: Option<usize>) -> Result<()> {
    if let Some(n) = n {
        cfg.generator.n_per_modality = n;
    }
    if workers.is_some() {
        cfg.workers = workers;
    }
    cfg.validate()?;
    Ok(())
}

fn generated(cfg: &RunConfig, seed: u64) -> Result<Dataset> {
    let gen_cfg = msr_core::GeneratorConfig { seed, ..cfg.generator.clone() };
    Ok(msr_core::exec::Execution::Parallel.install(cfg.workers, || dataset::generate(&gen_cfg, Execution::Parallel))?)
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let mut cfg = load_config(args.common.config.as_deref())?;
    apply_overrides(&mut cfg, args.n, args.workers)?;
    cfg.generator.validate()?;
    let seed = resolve_seed(args.common.seed, None, cfg.seed);
    let data = generated(&cfg, seed)?;
    dataset::save(&data, &args.out)?;
    println!("wrote {}", args.out.display());
    for m in Modality::ALL {
        println!("{m}: {} records", data.meta.counts.get(m));
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut cfg = load_config(args.common.config.as_deref())?;
    if args.dataset.is_some() {
        cfg.dataset = args.dataset;
    }
    apply_overrides(&mut cfg, args.n, args.workers)?;
    let seed = resolve_seed(args.common.seed, None, cfg.seed);
    let data = match &cfg.dataset {
        Some(p) => dataset::load(p).with_context(|| format!("loading dataset {}", p.display()))?,
        None => generated(&cfg, seed)?,
    };
    let out = args.out.or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let mut opts = RunOptions::new(seed);
    if let Some(m) = args.modality {
        opts.modalities = vec![m];
    }
    let output = msr_core::run(&cfg, &data, &opts)?;
    let files = output.write(&out)?;
    for r in output.reports()? {
        let acc = r.mean_accuracy().map_or("n/a".to_string(), |a| format!("{a:.3}"));
        println!("{}: mean accuracy {acc}", r.modality);
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let modalities: Vec<Modality> = match args.modality {
        Some(m) => vec![m],
        None => Modality::ALL.to_vec(),
    };
    if let Some(b) = args.band {
        if !(0.0..=1.0).contains(&b) {
            bail!("--band {b} is outside [0, 1]");
        }
    }
    let mut reports = Vec::new();
    for m in modalities {
        let path = args.out.join(csv_file(m));
        let text = std::fs::read_to_string(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
        reports.push(parse_report_csv(m, &path, &text)?);
    }
    print!("{}", to_markdown(&reports, args.band));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Run(a) => cmd_run(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = e.chain().any(|c| matches!(c.downcast_ref::<Error>(), Some(Error::Config { .. })));
            ExitCode::from(if config { 2 } else { 1 })
        }
    }
}
