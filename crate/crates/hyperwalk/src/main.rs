use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use hyperwalk::config::{parse_pairs, Params};
use hyperwalk::{list_families, write_experiment, ExperimentConfig, Mode};

#[derive(Parser)]
#[command(
    name = "hyperwalk",
    version,
    about = "Random walks on hyperplane arrangements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact separation, total variation and P(T > t)
    Exact(Common),
    /// Monte Carlo P(T > t)
    Mc(Common),
    /// Tsetlin-library cutoff bounds
    Bounds(Common),
    /// Cutoff prediction from (b, d) with a Monte Carlo profile
    Cutoff(Common),
    /// Glauber dynamics on a small spin system
    Glauber {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        field: Option<f64>,
    },
    /// List families and their parameters
    List,
}

#[derive(Args)]
struct Common {
    /// key=value file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    family: Option<String>,
    /// Family parameters, e.g. "n=5 a=2" or "weights=1/3,1/3,1/3"
    #[arg(long)]
    params: Option<String>,
    /// "a..b", "a..b:step" or "t1,t2,..."
    #[arg(long)]
    t_grid: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn pairs(&self, mode: Mode) -> anyhow::Result<Params> {
        let mut pairs = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                parse_pairs(&text)?
            }
            None => Params::new(),
        };
        if let Some(p) = &self.params {
            pairs.extend(parse_pairs(p)?);
        }
        let mut set = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                pairs.insert(k.to_string(), v);
            }
        };
        set("family", self.family.clone());
        set("t", self.t_grid.clone());
        set("trials", self.trials.map(|t| t.to_string()));
        set("seed", self.seed.map(|s| s.to_string()));
        set("out", self.out.as_ref().map(|p| p.display().to_string()));
        set("mode", Some(mode.as_str().to_string()));
        Ok(pairs)
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let pairs = match &cli.command {
        Command::List => {
            print!("{}", list_families());
            return Ok(());
        }
        Command::Exact(c) => c.pairs(Mode::Exact)?,
        Command::Mc(c) => c.pairs(Mode::Mc)?,
        Command::Bounds(c) => c.pairs(Mode::Bounds)?,
        Command::Cutoff(c) => c.pairs(Mode::Cutoff)?,
        Command::Glauber {
            common,
            width,
            height,
            beta,
            field,
        } => {
            let mut p = common.pairs(Mode::Glauber)?;
            p.entry("family".into()).or_insert_with(|| "ising".into());
            for (k, v) in [
                ("width", width.map(|x| x.to_string())),
                ("height", height.map(|x| x.to_string())),
                ("beta", beta.map(|x| x.to_string())),
                ("field", field.map(|x| x.to_string())),
            ] {
                if let Some(v) = v {
                    p.insert(k.into(), v);
                }
            }
            p
        }
    };
    let cfg = ExperimentConfig::from_pairs(&pairs)?;
    if let Some(text) = write_experiment(&cfg)? {
        print!("{text}");
    }
    Ok(())
}
