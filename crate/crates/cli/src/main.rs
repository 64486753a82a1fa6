mod config;

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use fablab::lab::{write_dominance_csv, write_selection_csv};
use fablab::verify::verify_priors;
use fablab::{
    dominance_curve, fab_fit, generate_gmm_data, selection_sweep, Budget, Dataset, FabConfig, Init, ModelDocument,
    PriorSpec,
};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "fablab",
    version,
    about = "Partition priors, FAB-EM fitting and desk-scale model-selection experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the CRP/FIC/GFIC identities exhaustively and print the report.
    VerifyPriors {
        #[arg(long, default_value_t = 7)]
        n_max: usize,
        #[arg(long, default_value_t = 4)]
        k_max: usize,
    },
    /// Fit a diagonal Gaussian mixture by FAB-EM and write the model as JSON.
    Fit(FitArgs),
    /// Run an experiment suite from a JSON config and write a CSV table.
    Lab {
        #[command(subcommand)]
        suite: LabSuite,
    },
}

#[derive(clap::Args)]
struct FitArgs {
    /// CSV file, one observation per row.
    data: PathBuf,
    #[arg(long, default_value_t = 10)]
    k_init: usize,
    #[arg(long, default_value_t = 1.0)]
    d: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Treat the first CSV row as a header.
    #[arg(long)]
    header: bool,
    /// Minimum soft count a component needs to survive [default: max(d, 1)].
    #[arg(long)]
    prune_threshold: Option<f64>,
    #[arg(long, value_enum, default_value_t = InitArg::Random)]
    init: InitArg,
    #[arg(long, default_value_t = 1e-6)]
    rel_tol: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Random,
    Kmeans,
}

#[derive(Subcommand)]
enum LabSuite {
    /// Prior influence on exhaustive posteriors as features are replicated.
    Dominance(LabArgs),
    /// FAB-EM selected k over a grid of d values and seeds.
    Selection(LabArgs),
}

#[derive(clap::Args)]
struct LabArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output CSV [default: `out` from the config].
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let budget = error.chain().any(|c| c.downcast_ref::<fablab::Error>().is_some_and(fablab::Error::is_budget));
        Failure { code: if budget { 2 } else { 1 }, error }
    }
}

impl From<fablab::Error> for Failure {
    fn from(error: fablab::Error) -> Self {
        anyhow::Error::from(error).into()
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let budget = Budget::from_env()?;
    match cli.command {
        Command::VerifyPriors { n_max, k_max } => {
            let report = verify_priors(n_max, k_max, budget)?;
            write!(io::stdout(), "{report}").context("cannot write the report")?;
            Ok(if report.passed() { 0 } else { 1 })
        }
        Command::Fit(args) => fit(args).map(|_| 0),
        Command::Lab { suite: LabSuite::Dominance(args) } => dominance(args, budget).map(|_| 0),
        Command::Lab { suite: LabSuite::Selection(args) } => selection(args).map(|_| 0),
    }
}

/// Writes through a temporary file in the destination directory and renames
/// it into place, so a failure never leaves a partial file behind.
fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
    {
        let mut w = io::BufWriter::new(tmp.as_file_mut());
        write(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn fit(args: FitArgs) -> Result<(), Failure> {
    let cfg = FabConfig {
        k_init: args.k_init,
        d: args.d,
        max_iters: args.max_iters,
        rel_tol: args.rel_tol,
        prune_threshold: args.prune_threshold,
        seed: args.seed,
        init: match args.init {
            InitArg::Random => Init::RandomResponsibilities,
            InitArg::Kmeans => Init::KmeansStyle,
        },
        ..FabConfig::default()
    };
    cfg.validate()?;
    let file = File::open(&args.data).with_context(|| format!("cannot open {}", args.data.display()))?;
    let x = Dataset::from_csv_reader(BufReader::new(file), args.header)
        .with_context(|| format!("cannot read {}", args.data.display()))?;
    let (model, trace) = fab_fit(&x, &cfg)?;
    let doc = ModelDocument::new(&model, &cfg, &trace);
    write_atomic(&args.out, |w| {
        serde_json::to_writer_pretty(&mut *w, &doc)?;
        writeln!(w)?;
        Ok(())
    })?;
    writeln!(
        io::stdout(),
        "k={} objective={} iterations={} converged={}",
        model.k(),
        trace.final_objective(),
        trace.iterations,
        trace.converged
    )
    .context("cannot write the summary")?;
    Ok(())
}

fn dominance(args: LabArgs, budget: Budget) -> Result<(), Failure> {
    let cfg = RunConfig::load(&args.config)?;
    cfg.validate_dominance()?;
    let out = cfg.output_path(args.out)?;
    let (x, _) = generate_gmm_data(&cfg.gen)?;
    let k_max = cfg.k_max.unwrap_or(cfg.gen.n);
    let rows = dominance_curve(&x, &cfg.replications, &cfg.priors, k_max, &cfg.settings(budget))?;
    write_atomic(&out, |w| Ok(write_dominance_csv(&rows, w)?))?;

    let (first, last) = (cfg.replications[0], cfg.replications[cfg.replications.len() - 1]);
    let tv = |kind: &str, r: usize| {
        rows.iter().find(|row| row.prior.kind_name() == kind && row.replication == r).map(|row| row.tv_distance)
    };
    let mut parts = Vec::new();
    for spec in &cfg.priors {
        if let (Some(a), Some(b)) = (tv(spec.kind_name(), first), tv(spec.kind_name(), last)) {
            if *spec != PriorSpec::Uniform {
                parts.push(format!("{} tv r={first} {a:.4} r={last} {b:.4}", spec.kind_name()));
            }
        }
    }
    writeln!(io::stdout(), "dominance: {} rows written to {}; {}", rows.len(), out.display(), parts.join(", "))
        .context("cannot write the summary")?;
    Ok(())
}

fn selection(args: LabArgs) -> Result<(), Failure> {
    let cfg = RunConfig::load(&args.config)?;
    cfg.validate_selection()?;
    let out = cfg.output_path(args.out)?;
    let rows = selection_sweep(&cfg.gen, &cfg.d_grid, &cfg.seeds, &cfg.fab);
    write_atomic(&out, |w| Ok(write_selection_csv(&rows, w)?))?;

    let errors = rows.iter().filter(|r| r.selected_k.is_none()).count();
    let means: Vec<String> = cfg
        .d_grid
        .iter()
        .map(|&d| {
            let ks: Vec<usize> = rows.iter().filter(|r| r.d == d).filter_map(|r| r.selected_k).collect();
            if ks.is_empty() {
                format!("d={d} n/a")
            } else {
                format!("d={d} {:.2}", ks.iter().sum::<usize>() as f64 / ks.len() as f64)
            }
        })
        .collect();
    writeln!(
        io::stdout(),
        "selection: {} rows ({errors} errors) written to {}; mean selected k: {}",
        rows.len(),
        out.display(),
        means.join(", ")
    )
    .context("cannot write the summary")?;
    Ok(())
}
