use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use symhodge_cli::config::{parse_shapes, ExperimentConfig};

#[derive(Parser)]
#[command(name = "symhodge", version, about = "Primitive symplectic Hodge theory: verification suites and experiment batteries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// sl(2), 𝒥, ⋆ and Lefschetz identities of the fiber algebra
    Identities(Common),
    /// Symbols, operator identities, Green's defects and their convergence
    Operators(Common),
    /// Harmonic-field dimensions over kind × boundary condition under refinement
    Harmonic(Common),
    /// Hodge decomposition battery over all flavors
    Decompose(Common),
    /// Cohomology isomorphism battery and the Lefschetz-map check
    Cohomology(Common),
    /// Poincaré-lemma solvers on manufactured and obstructed data
    Poincare(Common),
    /// Gaffney constants under refinement and the 𝒥-conjugation identity
    Gaffney(Common),
}

#[derive(Args)]
struct Common {
    /// Config file of `key = value` lines; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated grid shapes, e.g. 17x16,33x32
    #[arg(long, alias = "shape")]
    shapes: Option<String>,
    /// Stencil order (2 or 4)
    #[arg(long)]
    order: Option<usize>,
    /// Relative eigenvalue / singular-value cutoff
    #[arg(long)]
    cutoff: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Random inputs per decomposition flavor
    #[arg(long)]
    samples: Option<usize>,
    /// Fourier modes per axis of random fields
    #[arg(long)]
    modes: Option<usize>,
    /// Output directory for the CSV and JSON reports
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved config and exit
    #[arg(long)]
    print_config: bool,
}

fn resolve(name: &str, c: Common) -> Result<(ExperimentConfig, bool)> {
    let mut cfg = match &c.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ExperimentConfig::from_text(&text)?
        }
        None => ExperimentConfig::default(),
    };
    cfg.experiment = name.to_string();
    if let Some(v) = c.n {
        cfg.n = v;
    }
    if let Some(v) = &c.shapes {
        cfg.shapes = parse_shapes(v)?;
    }
    if let Some(v) = c.modes {
        cfg.modes = v;
    }
    if let Some(v) = c.order {
        cfg.order = v;
    }
    if let Some(v) = c.cutoff {
        cfg.cutoff = v;
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = c.samples {
        cfg.samples = v;
    }
    if let Some(v) = c.out {
        cfg.out = v;
    }
    cfg.validate()?;
    Ok((cfg, c.print_config))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match cli.command {
        Command::Identities(c) => ("identities", c),
        Command::Operators(c) => ("operators", c),
        Command::Harmonic(c) => ("harmonic", c),
        Command::Decompose(c) => ("decompose", c),
        Command::Cohomology(c) => ("cohomology", c),
        Command::Poincare(c) => ("poincare", c),
        Command::Gaffney(c) => ("gaffney", c),
    };
    let (cfg, print_only) = match resolve(name, common) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if print_only {
        print!("{}", cfg.to_text());
        return ExitCode::SUCCESS;
    }
    let start = std::time::Instant::now();
    let report = match symhodge_cli::run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match report.write(&cfg.out) {
        Ok((csv, json)) => println!("wrote {} and {}", csv.display(), json.display()),
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    }
    let failures = report.failures();
    println!(
        "{name}: {} of {} assertions passed in {:.2}s",
        report.assertions.len() - failures.len(),
        report.assertions.len(),
        start.elapsed().as_secs_f64()
    );
    for f in &failures {
        println!("FAILED {}: {}", f.name, f.detail);
    }
    if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
