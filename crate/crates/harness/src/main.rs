use std::path::PathBuf;
use std::process::ExitCode;

use abloc_core::synth::generate_dataset;
use abloc_core::theory::Decision;
use abloc_core::ExperimentConfig;
use abloc_harness::dataset_io::write_dataset;
use abloc_harness::report::theory_section;
use abloc_harness::{
    emit_outputs, emit_sweep, load_config, run_experiment, sweep, Format, HarnessError, SweepAxis,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "abloc", version, about = "Bias-learning combiner experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut c = load_config(&self.config)?;
        if let Some(s) = self.seed {
            c.seed = s;
        }
        Ok(c)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic dataset as CSV files plus a manifest.
    Generate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print closed-form bounds without simulating.
    Theory {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// `json` or `text`.
        #[arg(long, default_value = "text")]
        format: String,
    },
    /// Run one experiment and write its report.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "json,csv,plotdata")]
        format: Vec<Format>,
    },
    /// Repeat the experiment along one axis.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        axis: SweepAxis,
        /// Axis values, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Seeds per value, e.g. `42,43` or `42..=51`.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "json,csv")]
        format: Vec<Format>,
    },
    /// Decide between bias learning and plain averaging.
    Recommend {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, HarnessError> {
    let bad = |item: &str| {
        HarnessError::ConfigInvalid(abloc_core::Error::invalid(
            "seeds",
            format!("cannot parse {item:?}"),
        ))
    };
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = item.split_once("..=") {
            let a: u64 = a.parse().map_err(|_| bad(item))?;
            let b: u64 = b.parse().map_err(|_| bad(item))?;
            if a > b {
                return Err(bad(item));
            }
            out.extend(a..=b);
        } else {
            out.push(item.parse().map_err(|_| bad(item))?);
        }
    }
    Ok(out)
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Generate { cfg, out } => {
            let config = cfg.load()?;
            let dataset = generate_dataset(&config)?;
            let manifest = write_dataset(&dataset, &config, &out)?;
            println!(
                "wrote {} files to {}",
                manifest.files.len() + 1,
                out.display()
            );
        }
        Command::Theory { cfg, format } => {
            let config = cfg.load()?;
            let th = theory_section(&config, None)?;
            if format.eq_ignore_ascii_case("json") {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&th).expect("theory serializes")
                );
            } else {
                let n = &th.nominal;
                println!("agent  v*        w*");
                for (i, (v, w)) in n.v_star.iter().zip(n.w_star.as_slice()).enumerate() {
                    println!("{i:<6} {v:<9.5} {w:.5}");
                }
                println!("mse_baseline       {:.5}", n.mse_baseline);
                println!("mse_optimal        {:.5}", n.mse_optimal);
                println!("eta_bound          {:.4}", n.eta_bound);
                println!("eta_weighted_ratio {:.4}", n.eta_weighted_ratio);
                println!("eta_simplified     {:.4}", n.eta_simplified);
                println!("oracle_noise_mse   {:.5}", n.oracle_mse_noise_only);
                match th.required_samples {
                    Some(s) => println!("required_samples   {s}"),
                    None => println!("required_samples   infeasible"),
                }
            }
        }
        Command::Run { cfg, out, format } => {
            let config = cfg.load()?;
            let report = run_experiment(&config)?;
            let r = &report.results;
            println!("baseline MSE   {:.5}", r.mse_baseline);
            println!(
                "abloc MSE      {:.5}  (efficiency {:.3})",
                r.mse_abloc, r.efficiency_abloc
            );
            println!("oracle MSE     {:.5}", r.mse_oracle);
            if let Some(a) = r.achievement_nominal {
                println!(
                    "achievement    {a:.3} of bound {:.3}",
                    report.theory.nominal.eta_bound
                );
            }
            println!(
                "iterations     {} (best at {}, converged: {})",
                r.iterations, r.early_stop_iteration, r.converged
            );
            if let Some(dir) = out {
                print_paths(&emit_outputs(&report, &dir, &format)?);
            }
        }
        Command::Sweep {
            cfg,
            axis,
            values,
            seeds,
            out,
            format,
        } => {
            let config = cfg.load()?;
            let seeds = seeds
                .as_deref()
                .map(parse_seeds)
                .transpose()?
                .unwrap_or_default();
            let report = sweep(&config, axis, &values, &seeds)?;
            println!("{axis:<8} runs  eff_mean  eff_min   eff_max   ach_mean");
            for p in &report.points {
                let ach = p
                    .achievement
                    .map_or("-".to_string(), |a| format!("{:.3}", a.mean));
                println!(
                    "{:<8} {:<5} {:<9.4} {:<9.4} {:<9.4} {ach}",
                    p.value, p.efficiency.n, p.efficiency.mean, p.efficiency.min, p.efficiency.max
                );
            }
            if let Some(dir) = out {
                print_paths(&emit_sweep(&report, &dir, &format)?);
            }
        }
        Command::Recommend { cfg } => {
            let config = cfg.load()?;
            let rec = abloc_core::theory::recommend(&config.agents, config.t, config.d);
            let decision = match rec.decision {
                Decision::LearnBias => "learn_bias",
                Decision::SimpleAverage => "simple_average",
            };
            println!("{decision}");
            for c in &rec.checks {
                let mark = if c.passed { "pass" } else { "FAIL" };
                println!("  {mark} {:<16} {:.4} > {}", c.name, c.value, c.threshold);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("1,2, 5").unwrap(), [1, 2, 5]);
        assert_eq!(parse_seeds("42..=44,7").unwrap(), [42, 43, 44, 7]);
        assert!(parse_seeds("3..=1").is_err());
        assert!(parse_seeds("x").is_err());
    }
}
