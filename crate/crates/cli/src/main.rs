//! `sobolev`: norm tables and inequality verification runs from a config file.

mod config;
mod poly;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sobolev_core::function_space::{generate_family, FamilyHints};
use sobolev_core::norms::{evaluate, NormContext};
use sobolev_core::report::{
    equivalences_csv, norms_csv, records_csv, suite_plotdata, to_json, NormFailure, NormRow,
    NormTable, PlotFiles,
};
use sobolev_core::suite::{parse_seminorm, resolve_gamma};
use sobolev_core::{run_suite, SuiteReport, TestFunction};

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] sobolev_core::Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "sobolev", version, about = "Sobolev norm tables and inequality checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Print nothing but errors.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the configured norms on the configured functions.
    Norms(Common),
    /// Run the configured theorem harnesses.
    Verify(Common),
    /// Write columnar plot data for a verification run.
    Plotdata {
        #[command(flatten)]
        common: Common,
        /// Read records from a `verify.json` instead of running the harnesses.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("sobolev: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf), CliError> {
    let cfg = RunConfig::load(&common.config)?.with_seed(common.seed);
    cfg.validate()?;
    let out = common.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    Ok((cfg, out))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Norms(common) => {
            let (cfg, out) = load(&common)?;
            let table = run_norms(&cfg)?;
            write(&out, "norms.csv", &norms_csv(&table)?)?;
            write(&out, "norms.json", &to_json(&table)?)?;
            if !common.quiet {
                for r in &table.rows {
                    println!("{} {} {}", r.function_id, r.norm.id, r.norm.value);
                }
                for f in &table.failures {
                    println!("{} {} error: {}", f.function_id, f.norm, f.error);
                }
            }
            Ok(0)
        }
        Command::Verify(common) => {
            let (cfg, out) = load(&common)?;
            let report = run_suite(&cfg.suite())?;
            write(&out, "records.csv", &records_csv(&report.records)?)?;
            write(&out, "equivalences.csv", &equivalences_csv(&report.equivalences)?)?;
            write(&out, "verify.json", &to_json(&report)?)?;
            if !common.quiet {
                print_summary(&report);
            }
            Ok(if report.failures().is_empty() { 0 } else { 1 })
        }
        Command::Plotdata { common, input } => {
            let (cfg, out) = load(&common)?;
            let report: SuiteReport = match input {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                    serde_json::from_str(&text)
                        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
                }
                None => run_suite(&cfg.suite())?,
            };
            let files: PlotFiles = suite_plotdata(&report);
            let dir = out.join("plot");
            for (name, body) in &files {
                write(&dir, name, body)?;
            }
            if !common.quiet {
                println!("wrote {} files to {}", files.len(), dir.display());
            }
            Ok(0)
        }
    }
}

fn run_norms(cfg: &RunConfig) -> Result<NormTable, CliError> {
    let domain = cfg.domain()?;
    let specs = cfg.norm_specs()?;
    let mut functions: Vec<TestFunction> = cfg
        .norms
        .functions
        .iter()
        .map(|s| {
            let p = poly::parse_polynomial(s, domain.dim()).map_err(|e| CliError::Config(e.to_string()))?;
            Ok(TestFunction::polynomial(p).with_id(s.clone()))
        })
        .collect::<Result<_, CliError>>()?;
    if cfg.norms.include_family {
        let spec = sobolev_core::FamilySpec {
            seed: cfg.seed,
            ..cfg.family.clone()
        };
        functions.extend(generate_family(&spec, &FamilyHints::region(domain.region().bounding_box()))?);
    }
    let mut ctx = NormContext::new(&domain, cfg.quadrature.clone());
    ctx.sup_grid = cfg.norms.sup_grid;
    if let Some(g) = &cfg.norms.gamma {
        let gamma = resolve_gamma(g, &domain)?;
        ctx.seminorms = cfg
            .norms
            .seminorms
            .iter()
            .map(|s| parse_seminorm(s, &gamma))
            .collect::<Result<_, _>>()?;
        ctx.gamma = Some(gamma);
    } else {
        ctx.seminorms = cfg
            .norms
            .seminorms
            .iter()
            .filter(|s| !s.starts_with("trace"))
            .map(|s| parse_seminorm(s, &sobolev_core::BoundarySubset::new("none", vec![])))
            .collect::<Result<_, _>>()?;
    }
    let mut table = NormTable::default();
    for u in &functions {
        for spec in &specs {
            match evaluate(spec, u, &ctx) {
                Ok(norm) => table.rows.push(NormRow {
                    function_id: u.id().to_string(),
                    norm,
                }),
                Err(e) => table.failures.push(NormFailure {
                    function_id: u.id().to_string(),
                    norm: spec.id(),
                    error: e.to_string(),
                }),
            }
        }
    }
    Ok(table)
}

fn print_summary(report: &SuiteReport) {
    let mut theorems: Vec<&str> = report.records.iter().map(|r| r.theorem.as_str()).collect();
    theorems.dedup();
    for t in theorems {
        let rs: Vec<_> = report.records.iter().filter(|r| r.theorem == t).collect();
        let failed = rs.iter().filter(|r| r.is_failure()).count();
        let asserted = rs.iter().filter(|r| r.provenance.is_asserted()).count();
        let status = if failed == 0 { "PASS" } else { "FAIL" };
        println!("{status} {t}: {} records, {asserted} asserted, {failed} failed", rs.len());
    }
    for e in &report.equivalences {
        println!(
            "{} {}/{} ratio in [{:.6}, {:.6}] over {} functions",
            e.theorem,
            e.norm_a,
            e.norm_b,
            e.min_ratio,
            e.max_ratio,
            e.ratios.len()
        );
    }
    for c in &report.constants {
        let k = &c.constants;
        println!("sec6 {} p={}: c1~ = {:.6}, c2~ = {:.6}", c.atlas, k.p, k.c1_tilde, k.c2_tilde);
    }
    for s in &report.summaries {
        println!("{} {}: {:.6e}", s.theorem, s.label, s.value);
    }
    for s in &report.stability {
        let status = if s.passed { "stable" } else { "UNSTABLE" };
        println!("{status} {}: growth {:.4}", s.label, s.growth);
    }
    for s in &report.skipped {
        println!("skipped {}: {}", s.theorem, s.label);
    }
}
