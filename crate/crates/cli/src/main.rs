//! Command-line front end: configuration-driven runs, residual sweeps,
//! config validation, and norm recomputation from field dumps.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use rotbl_core::config::RunConfig;
use rotbl_core::norms::{self, NormParams};
use rotbl_core::{identity, io, pipeline, radius};

#[derive(Parser)]
#[command(
    name = "rotbl",
    version,
    about = "Boundary-layer toolkit for fast horizontally rotating flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Run configuration file (key = value under [sections]).
    #[arg(long)]
    config: PathBuf,
    /// Output directory override (also via ROTBL_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override recorded in the manifest.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the coupled pipeline and write all artifacts.
    Run(ConfigArgs),
    /// Coupled run followed by the composite-residual sweep across eps.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma-separated eps values (overrides [sweep] eps).
        #[arg(long)]
        eps: Option<String>,
    },
    /// Check a configuration without running.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Recompute norm diagnostics from a field dump.
    Norms {
        /// Binary field dump produced by a run.
        #[arg(long)]
        dump: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[arg(long, default_value_t = 0.25)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        ell: f64,
        #[arg(long, default_value_t = 8)]
        m_max: usize,
    },
}

fn load_config(args: &ConfigArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::from_file(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    if let Ok(dir) = std::env::var("ROTBL_OUT") {
        cfg.out_dir = PathBuf::from(dir);
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let violations = cfg.validate();
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("config violation: {v}");
        }
        bail!("invalid configuration ({} violations)", violations.len());
    }
    Ok(cfg)
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let cfg = load_config(&args)?;
            let (pipe, artifacts) = pipeline::run(&cfg)?;
            let last = pipe.norm_history.last().unwrap();
            println!(
                "completed {} steps to t = {:.6e} (rho {:.4}, X {:.6e})",
                pipe.step_idx, last.t, last.rho, last.x
            );
            if pipe.step_idx >= 2 {
                let rep = pipe.identity_report(identity::DEFAULT_IDENTITY_TOL)?;
                print!("{}", identity::render_report(&rep));
            }
            if let Ok(budget) = pipe.energy_budget() {
                println!("energy budget constant: {:.6e}", budget.c_fit);
            }
            let t_star = radius::lifespan_estimate(pipe.x0_sq.sqrt(), cfg.rho0, cfg.tau);
            println!("lifespan estimate T* = {t_star:.6e}");
            if let Some((count, worst)) = pipe.decay_warnings {
                eprintln!("warning: left-edge decay check failed on {count} steps (worst ratio {worst:.2e})");
            }
            if let Some((count, worst)) = pipe.tail_warnings {
                eprintln!("warning: unresolved tangential spectrum on {count} steps (worst ratio {worst:.2e})");
            }
            for w in &pipe.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "wrote {} artifacts to {}",
                artifacts.files.len() + 1,
                artifacts.out_dir.display()
            );
        }
        Command::Sweep { cfg: args, eps } => {
            let mut cfg = load_config(&args)?;
            if let Some(list) = eps {
                cfg.eps_sweep = list
                    .split(',')
                    .map(|s| s.trim().parse::<f64>().context("parsing --eps"))
                    .collect::<anyhow::Result<Vec<f64>>>()?;
                if !cfg.eps_sweep.windows(2).all(|w| w[1] < w[0]) {
                    bail!("--eps must be strictly decreasing");
                }
            }
            let (_, report) = pipeline::sweep(&cfg)?;
            for e in &report.entries {
                println!(
                    "eps {:.3e}: near-wall momentum ({:.3e}, {:.3e}, {:.3e}), bulk ({:.3e}, {:.3e}, {:.3e}), total {:.6e}",
                    e.eps,
                    e.window[0],
                    e.window[1],
                    e.window[2],
                    e.bulk[0],
                    e.bulk[1],
                    e.bulk[2],
                    e.total
                );
            }
            println!("fitted residual slope: {:.4}", report.fitted_slope);
        }
        Command::Validate { config } => {
            let cfg = RunConfig::from_file(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let violations = cfg.validate();
            if violations.is_empty() {
                println!("configuration ok");
            } else {
                for v in &violations {
                    println!("violation: {v}");
                }
                std::process::exit(1);
            }
        }
        Command::Norms {
            dump,
            rho,
            a,
            ell,
            m_max,
        } => {
            let f = io::read_field(&dump)?;
            let p = NormParams::new(rho, a, ell, m_max)?;
            let r = norms::compute_norms(&f, &p);
            println!("field {} on {} x {} grid", f.label, f.grid.n_x1, f.grid.n_y);
            println!("X = {:.9e}", r.x);
            println!("Y = {:.9e}", r.y);
            println!("Z = {:.9e}", r.z);
            for pm in &r.per_m {
                println!("  m = {:>2}: X^2 contribution {:.6e}", pm.m, pm.x_sq);
            }
            if let Some(tail) = r.tail_warning {
                eprintln!(
                    "warning: tangential spectrum tail ratio {tail:.2e}; high orders unresolved"
                );
            }
        }
    }
    Ok(())
}
