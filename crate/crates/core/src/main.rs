use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use dtlet::harness::{self, ExperimentConfig, Method};
use dtlet::matcher::{self, MatchingPlan};
use dtlet::sae;

#[derive(Parser)]
#[command(name = "dtlet", version, about = "Heterogeneous transfer with stacked autoencoders of different depths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the repeated binary-task experiment for one method.
    Run(RunArgs),
    /// Rerun DT-LET for several top-layer widths.
    SweepNeurons {
        #[command(flatten)]
        run: RunArgs,
        /// Top-layer widths to try.
        #[arg(long, value_delimiter = ',', default_values_t = [10, 20, 30, 40, 50])]
        widths: Vec<usize>,
    },
    /// List the layer matchings for a depth pair.
    Enumerate {
        a: usize,
        b: usize,
        /// Keep only matchings that pair every layer of the shallower network.
        #[arg(long)]
        full_rank_only: bool,
        /// Allow crossing pairs.
        #[arg(long)]
        non_monotone: bool,
        /// Input dimensions `source,target`; orders plans by the resolution hint.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        hint: Option<Vec<usize>>,
    },
    /// Compare analytic and finite-difference autoencoder gradients.
    Gradcheck {
        #[arg(long, value_delimiter = ',', default_values_t = [5, 3, 2])]
        widths: Vec<usize>,
        #[arg(long, default_value_t = 8)]
        samples: usize,
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        /// Central-difference step.
        #[arg(long, default_value_t = 1e-5)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `dtlet`, `none-dtlet` or `cca-svm`.
    #[arg(long)]
    method: Option<Method>,
    /// Random splits per class pair.
    #[arg(long)]
    repeats: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    /// Master seed for splits and initialization.
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict DT-LET candidates to full-rank matchings.
    #[arg(long)]
    full_rank_only: bool,
    /// Include partial matchings among DT-LET candidates.
    #[arg(long, conflicts_with = "full_rank_only")]
    all_ranks: bool,
    /// Use raw activations instead of mean-centered ones in the coupling.
    #[arg(long)]
    uncentered: bool,
    /// Explicit candidate plans, e.g. `3-2,4-3,5-4;2-2,4-3`.
    #[arg(long)]
    plans: Option<String>,
    /// Extra `key=value` settings applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Three class pairs, three repeats.
    #[arg(long)]
    smoke: bool,
    /// Output directory for report.csv, summary.txt and trials.jsonl.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl RunArgs {
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        for kv in &self.overrides {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("--set expects KEY=VALUE, got {kv:?}");
            };
            cfg.set(k, v)?;
        }
        if let Some(m) = self.method {
            cfg.method = m;
        }
        if let Some(r) = self.repeats {
            cfg.repeats = r;
        }
        if let Some(j) = self.jobs {
            cfg.jobs = j;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.full_rank_only {
            cfg.full_rank_only = true;
        }
        if self.all_ranks {
            cfg.full_rank_only = false;
        }
        if self.uncentered {
            cfg.train.centered = false;
        }
        if let Some(p) = &self.plans {
            cfg.set("plans", p)?;
        }
        if self.smoke {
            cfg.smoke = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run(args) => {
            let cfg = args.config()?;
            let report = harness::run_experiment(&cfg)?;
            harness::write_outputs(&report, &args.out)
                .with_context(|| format!("writing outputs to {}", args.out.display()))?;
            print!("{}", harness::render_summary(&report));
        }
        Command::SweepNeurons { run, widths } => {
            let cfg = run.config()?;
            let table = harness::neuron_sweep(&cfg, &widths)?;
            std::fs::create_dir_all(&run.out)?;
            std::fs::write(run.out.join("sweep.txt"), table.render())?;
            print!("{}", table.render());
        }
        Command::Enumerate {
            a,
            b,
            full_rank_only,
            non_monotone,
            hint,
        } => {
            let mut plans: Vec<MatchingPlan> =
                matcher::enumerate_matchings_with(a, b, full_rank_only, !non_monotone)?;
            if let Some(h) = hint {
                matcher::order_by_resolution_hint(&mut plans, h[0], h[1]);
            }
            for p in &plans {
                println!("{p}");
            }
            eprintln!("{} plan(s)", plans.len());
        }
        Command::Gradcheck {
            widths,
            samples,
            lambda,
            eps,
            seed,
        } => {
            if widths.len() < 2 || samples == 0 {
                bail!("need at least two widths and one sample");
            }
            let params = sae::init_network(&widths, seed)?;
            let data = dtlet::Matrix::from_fn(samples, widths[0], |i, j| {
                let t = (i * widths[0] + j) as f64;
                0.5 + 0.4 * (0.37 * t + seed as f64).sin()
            });
            let report = sae::gradient_check(&params, &data, lambda, eps)?;
            println!(
                "checked {} parameters, max relative error {:.3e}",
                report.checked, report.max_rel_error
            );
            if report.max_rel_error > 1e-4 {
                bail!("gradient check failed");
            }
        }
    }
    Ok(())
}
