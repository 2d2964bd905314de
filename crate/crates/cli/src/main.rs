use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

mod config;
mod run;

use config::{parse_n_list, ExperimentConfig, Kind};

/// Exact pushforwards, mixture approximations and divergence sweeps for
/// mean-field Gibbs measures.
#[derive(Debug, Parser)]
#[command(name = "mfgibbs", version)]
struct Args {
    /// TOML experiment file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// analyze, partition, kl-sweep, chaos, critical or sample-check.
    #[arg(long)]
    kind: Option<Kind>,
    /// Built-in model: curie_weiss or potts.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    h: Option<f64>,
    /// Number of Potts states.
    #[arg(long)]
    q: Option<usize>,
    /// Truncation exponent, R_N = N^delta.
    #[arg(long)]
    delta: Option<f64>,
    /// `128,256,512` or `2^7..2^14`.
    #[arg(long, value_parser = parse_n_list_arg)]
    n_list: Option<NList>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    nodes_per_dim: Option<usize>,
    /// Block size for `chaos`.
    #[arg(long)]
    k: Option<usize>,
    /// Sample count for `sample-check`.
    #[arg(long)]
    samples: Option<usize>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the effective config as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Debug, Clone)]
struct NList(Vec<usize>);

fn parse_n_list_arg(s: &str) -> Result<NList, String> {
    parse_n_list(s).map(NList).map_err(|e| format!("{e:#}"))
}

impl Args {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                ExperimentConfig::from_toml(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(kind) = self.kind {
            cfg.kind = kind;
        }
        if let Some(model) = &self.model {
            if *model != cfg.model {
                cfg.params.clear();
            }
            cfg.model = model.clone();
        }
        for (name, value) in [("beta", self.beta), ("h", self.h), ("q", self.q.map(|q| q as f64))] {
            if let Some(v) = value {
                cfg.params.insert(name.into(), v);
            }
        }
        if let Some(NList(list)) = &self.n_list {
            cfg.n_list = list.clone();
        }
        cfg.delta = self.delta.or(cfg.delta);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        if let Some(n) = self.nodes_per_dim {
            cfg.quadrature.nodes_per_dim = n;
        }
        if let Some(k) = self.k {
            cfg.chaos.k = Some(k);
            cfg.chaos.fraction = None;
        }
        if let Some(s) = self.samples {
            cfg.sampling.samples = s;
        }
        cfg.out = self.out.clone().or(cfg.out);
        Ok(cfg)
    }
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("MFGIBBS_THREADS") {
        let n: usize = v.parse().with_context(|| format!("MFGIBBS_THREADS must be an integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main_inner() -> Result<()> {
    let args = Args::parse();
    let cfg = args.resolve()?;
    if args.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    init_threads()?;
    let table = run::run(&cfg)?;
    let csv = table.to_csv();
    match &cfg.out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
            for line in table.footer() {
                eprintln!("{line}");
            }
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
