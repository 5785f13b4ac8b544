use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use torusnet::cli::{self, Overrides, Suite, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "torusnet", version, about = "Stationary neural networks on a torus")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML config (or a manifest.json from an earlier run).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the network and write paths, summary and manifest.
    Simulate(Common),
    /// Run property suites: kernels, noise, dynamics, empirical or all.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Sweep -(1/|V_n|) log P(observable > threshold) over n.
    Scaling {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "1,2,3")]
        n_list: String,
        #[arg(long, default_value = "spatial_mean_sup")]
        observable: String,
        /// A number, `auto` (0.9 quantile at the smallest n) or `auto:q`.
        #[arg(long, default_value = "auto")]
        threshold: String,
    },
}

fn overrides(c: &Common) -> Overrides {
    Overrides { seed: c.seed, replicas: c.replicas }
}

fn run(args: Args) -> i32 {
    let (common, job): (&Common, Box<dyn FnOnce() -> i32 + Send>) = match &args.command {
        Command::Simulate(c) => {
            let out = c.out.clone().unwrap_or_else(|| cli::default_out_dir(&c.config, "simulate"));
            let (config, ov) = (c.config.clone(), overrides(c));
            (c, Box::new(move || cli::cmd_simulate(&config, &out, ov)))
        }
        Command::Verify { common: c, suite } => {
            let suite: Suite = match suite.parse() {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_CONFIG;
                }
            };
            let (config, out, ov) = (c.config.clone(), c.out.clone(), overrides(c));
            (c, Box::new(move || cli::cmd_verify(&config, suite, out.as_deref(), ov)))
        }
        Command::Scaling { common: c, n_list, observable, threshold } => {
            let parsed = cli::parse_n_list(n_list).and_then(|n| Ok((n, cli::parse_threshold(threshold)?)));
            let (ns, th) = match parsed {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_CONFIG;
                }
            };
            let out = c.out.clone().unwrap_or_else(|| cli::default_out_dir(&c.config, "scaling"));
            let (config, obs, ov) = (c.config.clone(), observable.clone(), overrides(c));
            (c, Box::new(move || cli::cmd_scaling(&config, &ns, &obs, th, &out, ov)))
        }
    };
    match cli::with_workers(common.workers, job) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run(Args::parse()) as u8)
}
