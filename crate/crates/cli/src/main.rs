use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use nsac_core::app::{parse_config, run};
use nsac_core::benchmarks::{
    run_coupled_release, run_energy_convergence_sweep, run_front_benchmark, run_mcf_benchmark, BenchReport,
    CoupledConfig, FrontConfig, McfConfig, SweepConfig,
};
use nsac_core::constitutive::{checks, LatentHeat, Material, ModelParams};

#[derive(Parser)]
#[command(name = "nsac", version, about = "Phase-field solver coupling Allen-Cahn, Navier-Stokes and heat transport")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation from a `key = value` configuration file.
    Run { config: PathBuf },
    /// Shrinking circle against the curvature-flow radius law.
    BenchMcf {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        r0: Option<f64>,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long, default_value = "out/bench-mcf")]
        out: PathBuf,
    },
    /// Planar front driven by a constant latent term.
    BenchFront {
        #[arg(long)]
        ellbar: Option<f64>,
        #[arg(long, default_value = "out/bench-front")]
        out: PathBuf,
    },
    /// Interface-energy convergence over a list of eps values.
    SweepEps {
        /// Comma-separated, decreasing.
        #[arg(long, value_delimiter = ',')]
        list: Option<Vec<f64>>,
        #[arg(long, default_value = "out/sweep-eps")]
        out: PathBuf,
    },
    /// Fully coupled circle release with energy and entropy monitors.
    BenchCoupled {
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        theta0: Option<f64>,
        #[arg(long, default_value = "out/bench-coupled")]
        out: PathBuf,
    },
    /// Property sweeps over the constitutive functions.
    ValidateConstitutive,
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("NSAC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).with_context(|| {
        format!("NSAC_THREADS must be a positive integer, got `{raw}`")
    })?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn report(rep: &BenchReport, out: &Path) -> Result<bool> {
    for (k, v) in &rep.params_used {
        println!("  {k} = {v}");
    }
    for (k, v) in &rep.metrics {
        println!("  {k} = {v:e}");
    }
    for n in &rep.notes {
        println!("  note: {n}");
    }
    rep.write(out).with_context(|| format!("writing results to {}", out.display()))?;
    println!("{}", rep.verdict_line());
    Ok(rep.pass)
}

fn execute(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let cfg = match parse_config(&text) {
                Ok(c) => c,
                Err(e) => bail!("{}: {e}", config.display()),
            };
            let s = run(&cfg)?;
            println!(
                "run finished: {} steps, t = {:e}, E_tot {:e} -> {:e}, outputs in {}",
                s.steps,
                s.t,
                s.first.e_tot,
                s.last.e_tot,
                cfg.outdir.display()
            );
            Ok(true)
        }
        Command::BenchMcf { eps, r0, nx, out } => {
            let d = McfConfig::default();
            let cfg = McfConfig { eps: eps.unwrap_or(d.eps), r0: r0.unwrap_or(d.r0), n: nx.unwrap_or(d.n), ..d };
            report(&run_mcf_benchmark(&cfg)?, &out)
        }
        Command::BenchFront { ellbar, out } => {
            let d = FrontConfig::default();
            let cfg = FrontConfig { ell_bar: ellbar.unwrap_or(d.ell_bar), ..d };
            report(&run_front_benchmark(&cfg)?, &out)
        }
        Command::SweepEps { list, out } => {
            let d = SweepConfig::default();
            let cfg = SweepConfig { eps_list: list.unwrap_or(d.eps_list.clone()), ..d };
            let (rep, rows) = run_energy_convergence_sweep(&cfg)?;
            for r in &rows {
                println!(
                    "  eps = {} n = {} energy_err = {:e} psi_err = {:e} max_rel_energy = {:e}",
                    r.eps, r.n, r.energy_error, r.psi_error, r.max_rel_energy
                );
            }
            report(&rep, &out)
        }
        Command::BenchCoupled { steps, theta0, out } => {
            let d = CoupledConfig::default();
            let cfg = CoupledConfig { steps: steps.unwrap_or(d.steps), theta0: theta0.unwrap_or(d.theta0), ..d };
            report(&run_coupled_release(&cfg)?.report, &out)
        }
        Command::ValidateConstitutive => {
            let mut all = true;
            let variants = [
                ("arctan", ModelParams::default()),
                ("linear", ModelParams { latent: LatentHeat::Linear { lambda: 1.0 }, alpha: 1.0, ..Default::default() }),
            ];
            for (label, p) in variants {
                let m = Material::new(p)?;
                for c in checks::run_all(&m) {
                    all &= c.pass;
                    println!("{label}/{} {} {}", c.name, if c.pass { "PASS" } else { "FAIL" }, c.detail);
                }
            }
            println!("validate-constitutive {}", if all { "PASS" } else { "FAIL" });
            Ok(all)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
