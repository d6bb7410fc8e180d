//! `skillcast` — build skill-share panels, cluster skills, and forecast
//! demand from the command line.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "skillcast",
    version,
    about = "Skill-share panels, skill clusters, and demand forecasts"
)]
pub struct Cli {
    /// Master random seed; overrides any seed found in spec or config files.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for grid sweeps; 0 means one per core. Results never
    /// depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    /// Directory receiving generated files.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,

    /// Experiment configuration (JSON); required by `experiment`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Progress notes on stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a synthetic share panel plus a matching ad corpus.
    Synth {
        /// Generator spec (JSON).
        #[arg(long)]
        spec: PathBuf,
    },

    /// Build a skill-share panel from ads and employment CSVs.
    Shares {
        /// Job-ad CSV (`ad_id,month,soc,skills`).
        #[arg(long)]
        ads: PathBuf,

        /// Annual employment CSV (`soc,year,employment`).
        #[arg(long)]
        employment: PathBuf,

        /// Comma-separated skills to track.
        #[arg(long, value_delimiter = ',')]
        skills: Vec<String>,

        /// Comma-separated occupation codes; defaults to every occupation
        /// in the employment file.
        #[arg(long, value_delimiter = ',')]
        occupations: Vec<String>,

        /// `contemporaneous` or `fixed2010`.
        #[arg(long, default_value = "contemporaneous")]
        employment_mode: String,

        /// First panel month as YYYY-MM; defaults to the earliest ad.
        #[arg(long)]
        start: Option<String>,

        /// Panel length in months; defaults to covering every ad from the
        /// start month onward.
        #[arg(long)]
        months: Option<usize>,
    },

    /// Embed skills from ad co-occurrence and emit similarity clusters.
    Cluster {
        /// Job-ad CSV supplying the co-occurrence corpus.
        #[arg(long)]
        ads: PathBuf,

        /// Comma-separated skills to build clusters around.
        #[arg(long, value_delimiter = ',')]
        key_skills: Vec<String>,

        /// Cluster size, key skill included.
        #[arg(long, default_value_t = 52)]
        size: usize,

        /// Embedding dimension.
        #[arg(long, default_value_t = 30)]
        dim: usize,

        /// Training passes over the corpus.
        #[arg(long, default_value_t = 15)]
        epochs: usize,

        /// Negative samples per positive pair.
        #[arg(long, default_value_t = 5)]
        negatives: usize,

        /// Also split the whole vocabulary into this many k-means groups.
        #[arg(long)]
        kmeans: Option<usize>,
    },

    /// Run the forecasting experiment described by --config.
    Experiment,

    /// Fit minimum pairwise correlation against mean NRMSE across runs.
    Correlate {
        /// summary.json files from at least three experiment runs.
        summaries: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global();
    }
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(if err.is_usage() { 2 } else { 1 })
        }
    }
}
