//! Subcommand implementations. Input paths are checked before any heavy
//! computation; every output is a pure function of the inputs and the seed.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use skillcast::cluster::{
    build_cluster_dataset, kmeans, train_skipgram, write_cluster_csv, write_embedding_file,
    SkipgramConfig,
};
use skillcast::forecast::{
    layer_depth_study, run_experiment_multivariate, run_experiment_univariate_shared,
    run_experiment_univariate_tuned, ExperimentGrid, ForecastReport, GridCoords,
};
use skillcast::market::io::{
    read_ads_csv, read_employment_csv, read_panel_csv, write_ads_csv, write_employment_csv,
    write_panel_csv,
};
use skillcast::market::{build_panel, interpolate_employment, EmploymentMode, SkillSharePanel};
use skillcast::metrics::{correlation_summary, correlation_vs_error_slope};
use skillcast::months::{parse_month, MonthRange, DEFAULT_EPOCH_YEAR};
use skillcast::report::{
    artifact_name, write_charts, write_correlation_csv, write_depth_csv, write_grid_csv,
    write_metrics_csv, write_predictions_csv, write_report_csv, RunSummary,
};
use skillcast::seed::derive_seed;
use skillcast::synth::{generate_ads, generate_panel, SynthSpec};
use skillcast::{Error, Result};

use crate::{Cli, Command};

/// Seed used when neither `--seed` nor an input file provides one.
const DEFAULT_SEED: u64 = 42;

const KMEANS_MAX_ITER: usize = 100;

pub fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx {
        seed: cli.seed,
        out_dir: cli.out_dir,
        config: cli.config,
        verbose: cli.verbose,
    };
    match cli.command {
        Command::Synth { spec } => cmd_synth(&ctx, &spec),
        Command::Shares {
            ads,
            employment,
            skills,
            occupations,
            employment_mode,
            start,
            months,
        } => cmd_shares(
            &ctx,
            &ads,
            &employment,
            skills,
            occupations,
            &employment_mode,
            start.as_deref(),
            months,
        ),
        Command::Cluster {
            ads,
            key_skills,
            size,
            dim,
            epochs,
            negatives,
            kmeans,
        } => cmd_cluster(&ctx, &ads, key_skills, size, dim, epochs, negatives, kmeans),
        Command::Experiment => cmd_experiment(&ctx),
        Command::Correlate { summaries } => cmd_correlate(&ctx, &summaries),
    }
}

struct Ctx {
    seed: Option<u64>,
    out_dir: PathBuf,
    config: Option<PathBuf>,
    verbose: bool,
}

impl Ctx {
    fn log(&self, msg: &str) {
        if self.verbose {
            eprintln!("[skillcast] {msg}");
        }
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "input file not found: {}",
            path.display()
        )))
    }
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}

/// Drops empty entries left behind by trailing commas or `--flag ""`.
fn clean_list(values: Vec<String>) -> Vec<String> {
    values.into_iter().filter(|v| !v.trim().is_empty()).collect()
}

fn cmd_synth(ctx: &Ctx, spec_path: &Path) -> Result<()> {
    require_file(spec_path)?;
    let mut spec: SynthSpec = read_json(spec_path)?;
    if let Some(seed) = ctx.seed {
        spec.seed = seed;
    }
    spec.validate()?;

    ctx.log(&format!(
        "generating {} skills x {} months, seed {}",
        spec.n_skills, spec.months, spec.seed
    ));
    let synth = generate_panel(&spec)?;
    let (ads, employment) = generate_ads(&spec, &synth.panel)?;

    ensure_dir(&ctx.out_dir)?;
    let ads_path = ctx.out_dir.join("ads.csv");
    let employment_path = ctx.out_dir.join("employment.csv");
    let panel_path = ctx.out_dir.join("panel.csv");
    write_ads_csv(&ads_path, &ads, DEFAULT_EPOCH_YEAR)?;
    write_employment_csv(&employment_path, &employment)?;
    write_panel_csv(&panel_path, &synth.panel, DEFAULT_EPOCH_YEAR)?;

    println!(
        "wrote {} ({} ads), {} ({} records), {} ({} skills x {} months)",
        ads_path.display(),
        ads.len(),
        employment_path.display(),
        employment.len(),
        panel_path.display(),
        synth.panel.n_skills(),
        synth.panel.n_months()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_shares(
    ctx: &Ctx,
    ads_path: &Path,
    employment_path: &Path,
    skills: Vec<String>,
    occupations: Vec<String>,
    employment_mode: &str,
    start: Option<&str>,
    months: Option<usize>,
) -> Result<()> {
    require_file(ads_path)?;
    require_file(employment_path)?;
    let skills = clean_list(skills);
    if skills.is_empty() {
        return Err(Error::Config(
            "at least one skill is required (--skills a,b,...)".into(),
        ));
    }
    let mode: EmploymentMode = employment_mode.parse()?;

    let ads = read_ads_csv(ads_path, DEFAULT_EPOCH_YEAR)?;
    let annual = read_employment_csv(employment_path)?;
    if ads.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} contains no ads",
            ads_path.display()
        )));
    }

    let start_month = match start {
        Some(label) => parse_month(label, DEFAULT_EPOCH_YEAR)?,
        None => ads.iter().map(|a| a.month).min().expect("ads is non-empty"),
    };
    let len = match months {
        Some(0) => return Err(Error::Config("months must be >= 1".into())),
        Some(m) => m,
        None => {
            let last = ads.iter().map(|a| a.month).max().expect("ads is non-empty");
            if last < start_month {
                return Err(Error::InvalidInput(format!(
                    "no ads at or after the requested start month (last ad is {})",
                    skillcast::months::format_month(last, DEFAULT_EPOCH_YEAR)
                )));
            }
            (last - start_month + 1) as usize
        }
    };
    let range = MonthRange::new(start_month, len);

    let in_range: Vec<_> = ads
        .into_iter()
        .filter(|ad| range.contains(ad.month))
        .collect();
    if in_range.is_empty() {
        return Err(Error::InvalidInput(
            "no ads fall inside the requested window".into(),
        ));
    }

    let occupations = {
        let cleaned = clean_list(occupations);
        if cleaned.is_empty() {
            let distinct: BTreeSet<String> =
                annual.iter().map(|r| r.occupation.clone()).collect();
            distinct.into_iter().collect()
        } else {
            cleaned
        }
    };

    let table = interpolate_employment(&annual, range, 1, DEFAULT_EPOCH_YEAR)?;
    let (panel, diagnostics) = build_panel(&in_range, &table, &skills, &occupations, range, mode)?;

    ensure_dir(&ctx.out_dir)?;
    let panel_path = ctx.out_dir.join("panel.csv");
    write_panel_csv(&panel_path, &panel, DEFAULT_EPOCH_YEAR)?;
    println!(
        "wrote {} ({} skills x {} months, {} occupation-months without ads)",
        panel_path.display(),
        panel.n_skills(),
        panel.n_months(),
        diagnostics.zero_ad_cells
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_cluster(
    ctx: &Ctx,
    ads_path: &Path,
    key_skills: Vec<String>,
    size: usize,
    dim: usize,
    epochs: usize,
    negatives: usize,
    kmeans_k: Option<usize>,
) -> Result<()> {
    require_file(ads_path)?;
    let key_skills = clean_list(key_skills);
    if key_skills.is_empty() {
        return Err(Error::Config(
            "at least one key skill is required (--key-skills a,b,...)".into(),
        ));
    }

    let ads = read_ads_csv(ads_path, DEFAULT_EPOCH_YEAR)?;
    let postings: Vec<BTreeSet<String>> = ads.into_iter().map(|ad| ad.skills).collect();
    let config = SkipgramConfig {
        dim,
        epochs,
        negatives,
        ..SkipgramConfig::default()
    };
    let master = ctx.seed.unwrap_or(DEFAULT_SEED);

    ctx.log(&format!(
        "training {dim}-d embedding over {} postings",
        postings.len()
    ));
    let embedding = train_skipgram(&postings, &config, derive_seed(master, "skipgram"))?;
    let clusters = key_skills
        .iter()
        .map(|key| build_cluster_dataset(&embedding, key, size))
        .collect::<Result<Vec<_>>>()?;

    ensure_dir(&ctx.out_dir)?;
    let embedding_path = ctx.out_dir.join("embedding.txt");
    let clusters_path = ctx.out_dir.join("clusters.csv");
    write_embedding_file(&embedding_path, &embedding)?;
    write_cluster_csv(&clusters_path, &clusters)?;
    println!(
        "wrote {} ({} skills) and {} ({} clusters of size {size})",
        embedding_path.display(),
        embedding.vocab.len(),
        clusters_path.display(),
        clusters.len()
    );

    if let Some(k) = kmeans_k {
        let result = kmeans(
            &embedding.vectors,
            k,
            derive_seed(master, "kmeans"),
            KMEANS_MAX_ITER,
        )?;
        let kmeans_path = ctx.out_dir.join("kmeans.csv");
        let mut writer = csv::Writer::from_path(&kmeans_path)?;
        writer.write_record(["skill", "cluster"])?;
        for (i, assignment) in result.assignments.iter().enumerate() {
            writer.write_record([embedding.vocab.id(i).to_string(), assignment.to_string()])?;
        }
        writer.flush()?;

        let objective_path = ctx.out_dir.join("kmeans_objective.csv");
        let mut writer = csv::Writer::from_path(&objective_path)?;
        writer.write_record(["iteration", "objective"])?;
        for (i, objective) in result.objective_history.iter().enumerate() {
            writer.write_record([i.to_string(), format!("{objective}")])?;
        }
        writer.flush()?;
        println!(
            "wrote {} and {} (k = {k}, {} iterations)",
            kmeans_path.display(),
            objective_path.display(),
            result.iterations
        );
    }
    Ok(())
}

/// On-disk experiment description consumed by `skillcast experiment`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentConfig {
    /// Panel CSV to forecast.
    dataset: PathBuf,
    /// One of `multi`, `uni-shared`, `uni-tuned`, `depth-study`.
    experiment: String,
    #[serde(default)]
    grid: ExperimentGrid,
    /// For `uni-shared`: directory of a prior `multi` run whose per-horizon
    /// winners supply the shared hyperparameters.
    multi_report: Option<PathBuf>,
    /// For `depth-study`: stack depths to compare.
    depths: Option<Vec<usize>>,
    /// Overrides `--out-dir` when present.
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ExperimentMode {
    Multi,
    UniShared,
    UniTuned,
    DepthStudy,
}

impl std::str::FromStr for ExperimentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multi" => Ok(Self::Multi),
            "uni-shared" => Ok(Self::UniShared),
            "uni-tuned" => Ok(Self::UniTuned),
            "depth-study" => Ok(Self::DepthStudy),
            other => Err(Error::Config(format!(
                "unknown experiment `{other}` (expected multi, uni-shared, uni-tuned, or depth-study)"
            ))),
        }
    }
}

fn panel_min_correlation(panel: &SkillSharePanel) -> Option<f64> {
    if panel.n_skills() < 2 {
        return None;
    }
    let series: Vec<(String, Vec<f64>)> = panel
        .skills
        .iter()
        .enumerate()
        .map(|(i, skill)| (skill.clone(), panel.column(i)))
        .collect();
    correlation_summary(&series)
        .ok()
        .map(|summary| summary.min_off_diagonal)
}

/// Writes every artifact of one report-shaped run into `dir`.
fn write_run_artifacts(
    dir: &Path,
    dataset: &str,
    min_correlation: Option<f64>,
    report: &ForecastReport,
) -> Result<()> {
    write_report_csv(&dir.join("report.csv"), report)?;
    write_grid_csv(&dir.join("grid.csv"), report)?;
    write_metrics_csv(&dir.join("metrics.csv"), dataset, report)?;
    for (s, skill) in report.skills.iter().enumerate() {
        let path = dir.join(format!("predictions_{}.csv", artifact_name(skill)));
        write_predictions_csv(&path, report, s, DEFAULT_EPOCH_YEAR)?;
    }
    write_charts(dir, report, DEFAULT_EPOCH_YEAR)?;
    let summary = RunSummary {
        dataset: dataset.to_string(),
        experiment: report.experiment.clone(),
        horizon: report.horizon,
        master_seed: report.master_seed,
        min_correlation,
        report: report.clone(),
    };
    summary.to_json_file(&dir.join("summary.json"))
}

fn cmd_experiment(ctx: &Ctx) -> Result<()> {
    let config_path = ctx
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("experiment requires --config <file>".into()))?;
    require_file(config_path)?;
    let config: ExperimentConfig = read_json(config_path)?;
    let mode: ExperimentMode = config.experiment.parse()?;
    require_file(&config.dataset)?;

    let mut grid = config.grid;
    if let Some(seed) = ctx.seed {
        grid.seeds = vec![seed];
    }
    grid.validate()?;

    // The shared-hyperparameter run depends on a finished joint run; check
    // all of its per-horizon summaries up front.
    let multi_dir = if mode == ExperimentMode::UniShared {
        let dir = config.multi_report.clone().ok_or_else(|| {
            Error::Config(
                "uni-shared needs `multi_report` in the config, pointing at a prior multi run"
                    .into(),
            )
        })?;
        for &h in &grid.horizons {
            require_file(&dir.join(format!("h{h}")).join("summary.json"))?;
        }
        Some(dir)
    } else {
        None
    };

    let panel = read_panel_csv(&config.dataset, DEFAULT_EPOCH_YEAR)?;
    let dataset_label = config.dataset.display().to_string();
    let min_correlation = panel_min_correlation(&panel);
    let out_root = config.output.clone().unwrap_or_else(|| ctx.out_dir.clone());
    ensure_dir(&out_root)?;

    let mut index: Vec<(usize, String, f64, Option<f64>)> = Vec::new();
    for &horizon in &grid.horizons {
        let hdir = out_root.join(format!("h{horizon}"));
        ensure_dir(&hdir)?;
        ctx.log(&format!("running {} at horizon {horizon}", config.experiment));

        if mode == ExperimentMode::DepthStudy {
            let depths = config.depths.clone().unwrap_or_else(|| vec![1, 5, 10]);
            let template = GridCoords {
                kind: grid.kinds[0],
                lag: grid.lags[0],
                epochs: grid.epochs[0],
                layers: grid.layers[0],
                neurons: grid.neurons[0],
                kernel: grid.kernels.first().copied(),
            };
            let study = layer_depth_study(
                &panel,
                &grid.kinds,
                &depths,
                &template,
                horizon,
                grid.primary_seed(),
            )?;
            write_depth_csv(&hdir.join("depth_study.csv"), &study)?;
            std::fs::write(
                hdir.join("depth_study.json"),
                serde_json::to_string_pretty(&study)?,
            )?;
            let best = study
                .rows
                .iter()
                .map(|row| row.mean_nrmse)
                .fold(f64::INFINITY, f64::min);
            index.push((horizon, "depth_study".into(), best, None));
            println!("h{horizon}: best depth-study mean NRMSE {best:.4}");
            continue;
        }

        let report = match mode {
            ExperimentMode::Multi => run_experiment_multivariate(&panel, &grid, horizon)?,
            ExperimentMode::UniTuned => run_experiment_univariate_tuned(&panel, &grid, horizon)?,
            ExperimentMode::UniShared => {
                let dir = multi_dir.as_ref().expect("checked above");
                let summary =
                    RunSummary::from_json_file(&dir.join(format!("h{horizon}")).join("summary.json"))?;
                let shared = summary.report.winner.clone().ok_or_else(|| {
                    Error::Config(format!(
                        "multi summary for horizon {horizon} records no winning configuration"
                    ))
                })?;
                let master = ctx.seed.unwrap_or(summary.master_seed);
                run_experiment_univariate_shared(&panel, &shared, horizon, master)?
            }
            ExperimentMode::DepthStudy => unreachable!("handled above"),
        };
        write_run_artifacts(&hdir, &dataset_label, min_correlation, &report)?;
        index.push((
            horizon,
            report.experiment.clone(),
            report.mean_nrmse,
            Some(report.mean_mape),
        ));
        println!(
            "h{horizon}: mean NRMSE {:.4}, mean MAPE {:.2}% -> {}",
            report.mean_nrmse,
            report.mean_mape,
            hdir.display()
        );
    }

    let mut writer = csv::Writer::from_path(out_root.join("index.csv"))?;
    writer.write_record(["horizon", "experiment", "mean_nrmse", "mean_mape"])?;
    for (horizon, experiment, nrmse, mape) in &index {
        writer.write_record([
            horizon.to_string(),
            experiment.clone(),
            format!("{nrmse}"),
            mape.map_or(String::new(), |m| format!("{m}")),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

fn cmd_correlate(ctx: &Ctx, summaries: &[PathBuf]) -> Result<()> {
    if summaries.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "correlation report needs at least 3 run summaries, got {}",
            summaries.len()
        )));
    }
    for path in summaries {
        require_file(path)?;
    }

    let mut points: Vec<(String, f64, f64)> = Vec::with_capacity(summaries.len());
    for path in summaries {
        let summary = RunSummary::from_json_file(path)?;
        let correlation = summary.min_correlation.ok_or_else(|| {
            Error::InvalidInput(format!(
                "{} has no minimum correlation (single-skill panel?)",
                path.display()
            ))
        })?;
        points.push((summary.dataset, correlation, summary.report.mean_nrmse));
    }
    let pairs: Vec<(f64, f64)> = points.iter().map(|(_, c, e)| (*c, *e)).collect();
    let slope = correlation_vs_error_slope(&pairs)?;

    ensure_dir(&ctx.out_dir)?;
    let path = ctx.out_dir.join("correlation_report.csv");
    write_correlation_csv(&path, &points, slope)?;
    println!(
        "wrote {} ({} runs, slope {slope:.6})",
        path.display(),
        points.len()
    );
    Ok(())
}
