//! Grid-search experiments over panels: joint (all skills in one model),
//! per-skill with shared hyperparameters, and per-skill with independent
//! tuning, plus a layer-depth comparison.
//!
//! Every candidate is scored by held-out NRMSE over the reserved months.
//! Evaluations derive their RNG seed from the skill subset, the grid
//! coordinates, and the horizon — never from execution order — so results
//! are identical across thread counts and a one-skill joint run is
//! bit-identical to the per-skill run on that skill.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::model::{
    train, ArchitectureKind, ArchitectureSpec, ForecastMode, ForecastModel, TrainConfig,
};
use crate::market::SkillSharePanel;
use crate::metrics::{mape, nrmse, Space};
use crate::preprocess::{
    flatten_time_major, inverse_transform, transform_panel, PreprocessConfig, StatsSide,
};
use crate::seed::derive_seed;

pub const ALLOWED_LAGS: [usize; 3] = [12, 24, 36];
pub const ALLOWED_EPOCHS: [usize; 5] = [50, 100, 500, 1000, 2000];
pub const ALLOWED_LAYERS: [usize; 3] = [1, 5, 10];
pub const ALLOWED_HORIZONS: [usize; 4] = [6, 12, 24, 36];
pub const DEFAULT_MAX_POINTS: usize = 4096;

/// One grid cell. The derived `Ord` (field order: kind, lag, epochs,
/// layers, neurons, kernel) is the tie-break when candidates score equally.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridCoords {
    pub kind: ArchitectureKind,
    pub lag: usize,
    pub epochs: usize,
    pub layers: usize,
    pub neurons: usize,
    /// Present exactly when `kind` is `cnn_lstm`.
    #[serde(default)]
    pub kernel: Option<usize>,
}

impl GridCoords {
    pub fn arch_spec(&self) -> ArchitectureSpec {
        ArchitectureSpec {
            kind: self.kind,
            layers: self.layers,
            neurons: self.neurons,
            kernel: self.kernel,
            filters: None,
        }
    }

    /// Stable text form, used in seed derivation and file names.
    pub fn label(&self) -> String {
        format!(
            "{}-lag{}-ep{}-ly{}-ne{}-ke{}",
            self.kind,
            self.lag,
            self.epochs,
            self.layers,
            self.neurons,
            self.kernel.unwrap_or(0)
        )
    }
}

impl std::fmt::Display for GridCoords {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

fn default_kinds() -> Vec<ArchitectureKind> {
    ArchitectureKind::ALL.to_vec()
}

fn default_lags() -> Vec<usize> {
    vec![12]
}

fn default_epochs() -> Vec<usize> {
    vec![500]
}

fn default_layers() -> Vec<usize> {
    vec![1]
}

fn default_neurons() -> Vec<usize> {
    vec![10]
}

fn default_kernels() -> Vec<usize> {
    vec![3]
}

fn default_horizons() -> Vec<usize> {
    ALLOWED_HORIZONS.to_vec()
}

fn default_seeds() -> Vec<u64> {
    vec![42]
}

fn default_max_points() -> usize {
    DEFAULT_MAX_POINTS
}

/// Candidate axes for the sweep. The Cartesian product is enumerated; the
/// kernel axis applies only to `cnn_lstm` members.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentGrid {
    #[serde(default = "default_kinds")]
    pub kinds: Vec<ArchitectureKind>,
    #[serde(default = "default_lags")]
    pub lags: Vec<usize>,
    #[serde(default = "default_epochs")]
    pub epochs: Vec<usize>,
    #[serde(default = "default_layers")]
    pub layers: Vec<usize>,
    #[serde(default = "default_neurons")]
    pub neurons: Vec<usize>,
    #[serde(default = "default_kernels")]
    pub kernels: Vec<usize>,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<usize>,
    /// First entry is the designated benchmark seed; the rest are for
    /// variance runs.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        Self {
            kinds: default_kinds(),
            lags: default_lags(),
            epochs: default_epochs(),
            layers: default_layers(),
            neurons: default_neurons(),
            kernels: default_kernels(),
            horizons: default_horizons(),
            seeds: default_seeds(),
            max_points: default_max_points(),
        }
    }
}

fn check_subset(values: &[usize], allowed: &[usize], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Config(format!("{what} axis is empty")));
    }
    for v in values {
        if !allowed.contains(v) {
            return Err(Error::Config(format!(
                "{what} = {v} is not one of {allowed:?}"
            )));
        }
    }
    Ok(())
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        if self.kinds.is_empty() {
            return Err(Error::Config("kinds axis is empty".into()));
        }
        check_subset(&self.lags, &ALLOWED_LAGS, "lag")?;
        check_subset(&self.epochs, &ALLOWED_EPOCHS, "epochs")?;
        check_subset(&self.layers, &ALLOWED_LAYERS, "layers")?;
        check_subset(&self.horizons, &ALLOWED_HORIZONS, "horizon")?;
        if self.neurons.is_empty() {
            return Err(Error::Config("neurons axis is empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds list is empty".into()));
        }
        if self.kinds.contains(&ArchitectureKind::CnnLstm) && self.kernels.is_empty() {
            return Err(Error::Config(
                "kernels axis is empty but kinds includes cnn_lstm".into(),
            ));
        }
        for point in self.points() {
            point.arch_spec().validate()?;
        }
        let count = self.points().len();
        if count > self.max_points {
            return Err(Error::Config(format!(
                "grid enumerates {count} points, above the cap of {}",
                self.max_points
            )));
        }
        Ok(())
    }

    pub fn primary_seed(&self) -> u64 {
        self.seeds.first().copied().unwrap_or(0)
    }

    /// Deduplicated Cartesian product, in coordinate order.
    pub fn points(&self) -> Vec<GridCoords> {
        let mut set = std::collections::BTreeSet::new();
        for &kind in &self.kinds {
            for &lag in &self.lags {
                for &epochs in &self.epochs {
                    for &layers in &self.layers {
                        for &neurons in &self.neurons {
                            let base = GridCoords { kind, lag, epochs, layers, neurons, kernel: None };
                            if kind == ArchitectureKind::CnnLstm {
                                for &kernel in &self.kernels {
                                    set.insert(GridCoords { kernel: Some(kernel), ..base.clone() });
                                }
                            } else {
                                set.insert(base);
                            }
                        }
                    }
                }
            }
        }
        set.into_iter().collect()
    }
}

/// Everything produced by scoring one candidate on one panel.
#[derive(Clone, Debug)]
struct PointEval {
    predicted: Vec<Vec<f64>>,
    actual: Vec<Vec<f64>>,
    per_skill_nrmse: Vec<f64>,
    per_skill_mape: Vec<f64>,
    mean_nrmse: f64,
    test_months: Vec<i32>,
    final_loss: f64,
}

/// Trains and scores one grid point. The seed depends only on the panel's
/// skill list, the coordinates, and the horizon.
fn evaluate_point(
    panel: &SkillSharePanel,
    coords: &GridCoords,
    horizon: usize,
    master_seed: u64,
) -> Result<PointEval> {
    let config = PreprocessConfig::new(coords.lag, horizon);
    let transformed = transform_panel(panel, &config)?;
    let label = format!("train/{}/{}/h{horizon}", panel.skills.join("+"), coords.label());
    let seed = derive_seed(master_seed, &label);
    let mode = if panel.n_skills() == 1 {
        ForecastMode::Univariate(panel.skills[0].clone())
    } else {
        ForecastMode::Multivariate
    };
    let model =
        ForecastModel::build(coords.arch_spec(), panel.n_skills(), coords.lag, horizon, seed)?;
    let mut trained = train(model, &transformed.windows, &TrainConfig::new(coords.epochs), mode)?;

    let input = flatten_time_major(&transformed.forecast_input);
    let forecast_std = trained.model.forecast_one_shot(&input)?;
    let predicted = inverse_transform(&forecast_std, &transformed.state, StatsSide::Model)?;
    let actual = transformed.test_levels.clone();

    let n = panel.n_skills();
    let mut per_skill_nrmse = Vec::with_capacity(n);
    let mut per_skill_mape = Vec::with_capacity(n);
    for s in 0..n {
        let pred_col: Vec<f64> = predicted.iter().map(|row| row[s]).collect();
        let actual_col: Vec<f64> = actual.iter().map(|row| row[s]).collect();
        per_skill_nrmse.push(nrmse(&pred_col, &actual_col, Space::Level)?.value);
        per_skill_mape.push(mape(&pred_col, &actual_col, Space::Level)?.value);
    }
    let mean_nrmse = per_skill_nrmse.iter().sum::<f64>() / n as f64;
    Ok(PointEval {
        predicted,
        actual,
        per_skill_nrmse,
        per_skill_mape,
        mean_nrmse,
        test_months: transformed.test_months(),
        final_loss: trained.loss_history.last().copied().unwrap_or(f64::NAN),
    })
}

/// Outcome of one evaluated grid point, kept for every candidate so winner
/// optimality can be audited from the report alone.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridPointOutcome {
    /// `None` for a joint model over all skills; `Some` for per-skill runs.
    pub skill: Option<String>,
    pub coords: GridCoords,
    /// Mean held-out NRMSE across the point's skills; absent if it diverged.
    pub mean_nrmse: Option<f64>,
    pub per_skill_nrmse: Vec<f64>,
    pub final_loss: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SkillOutcome {
    pub skill: String,
    pub coords: GridCoords,
    pub nrmse: f64,
    pub mape: f64,
}

/// Result of one experiment at one horizon.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ForecastReport {
    pub experiment: String,
    pub horizon: usize,
    pub master_seed: u64,
    pub skills: Vec<String>,
    /// The winning configuration, absent when each skill tunes its own.
    pub winner: Option<GridCoords>,
    pub per_skill: Vec<SkillOutcome>,
    pub mean_nrmse: f64,
    pub mean_mape: f64,
    /// Month indices of the scored rows.
    pub test_months: Vec<i32>,
    /// Level-space forecasts, `[horizon][skill]`, column order = `skills`.
    pub predicted: Vec<Vec<f64>>,
    pub actual: Vec<Vec<f64>>,
    pub outcomes: Vec<GridPointOutcome>,
}

fn check_horizon(grid: &ExperimentGrid, horizon: usize) -> Result<()> {
    if !grid.horizons.contains(&horizon) {
        return Err(Error::Config(format!(
            "horizon {horizon} is not in the grid's horizon axis {:?}",
            grid.horizons
        )));
    }
    Ok(())
}

/// Runs every grid point; training divergence is recorded per point, any
/// other failure aborts.
fn sweep(
    panel: &SkillSharePanel,
    points: &[GridCoords],
    horizon: usize,
    master_seed: u64,
) -> Result<Vec<(GridCoords, std::result::Result<PointEval, String>)>> {
    let raw: Vec<(GridCoords, Result<PointEval>)> = points
        .par_iter()
        .map(|coords| (coords.clone(), evaluate_point(panel, coords, horizon, master_seed)))
        .collect();
    let mut out = Vec::with_capacity(raw.len());
    for (coords, result) in raw {
        match result {
            Ok(eval) => out.push((coords, Ok(eval))),
            Err(err @ Error::Divergence { .. }) => out.push((coords, Err(err.to_string()))),
            Err(other) => return Err(other),
        }
    }
    Ok(out)
}

fn outcome_of(
    skill: Option<String>,
    coords: &GridCoords,
    result: &std::result::Result<PointEval, String>,
) -> GridPointOutcome {
    match result {
        Ok(eval) => GridPointOutcome {
            skill,
            coords: coords.clone(),
            mean_nrmse: Some(eval.mean_nrmse),
            per_skill_nrmse: eval.per_skill_nrmse.clone(),
            final_loss: Some(eval.final_loss),
            error: None,
        },
        Err(detail) => GridPointOutcome {
            skill,
            coords: coords.clone(),
            mean_nrmse: None,
            per_skill_nrmse: Vec::new(),
            final_loss: None,
            error: Some(detail.clone()),
        },
    }
}

/// Smaller mean NRMSE wins; exact ties go to the smaller coordinates.
fn better(a: &(GridCoords, f64), b: &(GridCoords, f64)) -> bool {
    (a.1, &a.0) < (b.1, &b.0)
}

/// Tags a divergence with the grid point (and skill) it came from.
fn annotate_divergence(error: Error, context: &str) -> Error {
    match error {
        Error::Divergence { epoch, detail } => Error::Divergence {
            epoch,
            detail: format!("{detail} [{context}]"),
        },
        other => other,
    }
}

fn all_diverged_error(
    results: &[(GridCoords, std::result::Result<PointEval, String>)],
    skill: Option<&str>,
) -> Error {
    let first = results
        .iter()
        .find_map(|(coords, r)| r.as_ref().err().map(|detail| format!("{coords}: {detail}")))
        .unwrap_or_else(|| "no grid points were evaluated".into());
    let scope = skill.map_or(String::new(), |s| format!(" for skill {s}"));
    Error::ExperimentFailed(format!(
        "all {} grid points diverged during training{scope}; first failure: {first}",
        results.len()
    ))
}

/// One model over all skills jointly, swept over the grid; the winner is
/// the candidate with the lowest mean held-out NRMSE.
pub fn run_experiment_multivariate(
    panel: &SkillSharePanel,
    grid: &ExperimentGrid,
    horizon: usize,
) -> Result<ForecastReport> {
    grid.validate()?;
    check_horizon(grid, horizon)?;
    if panel.n_skills() < 1 {
        return Err(Error::InvalidInput("panel has no skills".into()));
    }
    let master_seed = grid.primary_seed();
    let points = grid.points();
    let results = sweep(panel, &points, horizon, master_seed)?;

    let outcomes: Vec<GridPointOutcome> = results
        .iter()
        .map(|(coords, result)| outcome_of(None, coords, result))
        .collect();
    let mut winner: Option<(GridCoords, f64)> = None;
    for (coords, result) in &results {
        if let Ok(eval) = result {
            let candidate = (coords.clone(), eval.mean_nrmse);
            if winner.as_ref().is_none_or(|best| better(&candidate, best)) {
                winner = Some(candidate);
            }
        }
    }
    let (best_coords, _) = winner.ok_or_else(|| all_diverged_error(&results, None))?;
    let best_eval = results
        .iter()
        .find(|(coords, _)| *coords == best_coords)
        .and_then(|(_, r)| r.as_ref().ok())
        .expect("winner came from a successful evaluation");

    let per_skill = panel
        .skills
        .iter()
        .enumerate()
        .map(|(s, skill)| SkillOutcome {
            skill: skill.clone(),
            coords: best_coords.clone(),
            nrmse: best_eval.per_skill_nrmse[s],
            mape: best_eval.per_skill_mape[s],
        })
        .collect::<Vec<_>>();
    Ok(ForecastReport {
        experiment: "multivariate".into(),
        horizon,
        master_seed,
        skills: panel.skills.clone(),
        winner: Some(best_coords),
        mean_nrmse: mean(per_skill.iter().map(|o| o.nrmse)),
        mean_mape: mean(per_skill.iter().map(|o| o.mape)),
        per_skill,
        test_months: best_eval.test_months.clone(),
        predicted: best_eval.predicted.clone(),
        actual: best_eval.actual.clone(),
        outcomes,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let collected: Vec<f64> = values.collect();
    collected.iter().sum::<f64>() / collected.len().max(1) as f64
}

fn assemble_columns(evals: &[&PointEval], horizon: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut predicted = vec![Vec::with_capacity(evals.len()); horizon];
    let mut actual = vec![Vec::with_capacity(evals.len()); horizon];
    for eval in evals {
        for t in 0..horizon {
            predicted[t].push(eval.predicted[t][0]);
            actual[t].push(eval.actual[t][0]);
        }
    }
    (predicted, actual)
}

/// One model per skill, all with the same hyperparameters — normally the
/// winner of a joint run.
pub fn run_experiment_univariate_shared(
    panel: &SkillSharePanel,
    shared: &GridCoords,
    horizon: usize,
    master_seed: u64,
) -> Result<ForecastReport> {
    shared.arch_spec().validate()?;
    let singles: Vec<SkillSharePanel> = panel
        .skills
        .iter()
        .map(|skill| panel.select(skill))
        .collect::<Result<_>>()?;
    let evals: Vec<Result<PointEval>> = singles
        .par_iter()
        .map(|single| {
            evaluate_point(single, shared, horizon, master_seed).map_err(|e| {
                annotate_divergence(e, &format!("skill {}, {shared}", single.skills[0]))
            })
        })
        .collect();
    let evals: Vec<PointEval> = evals.into_iter().collect::<Result<_>>()?;

    let per_skill: Vec<SkillOutcome> = panel
        .skills
        .iter()
        .zip(&evals)
        .map(|(skill, eval)| SkillOutcome {
            skill: skill.clone(),
            coords: shared.clone(),
            nrmse: eval.per_skill_nrmse[0],
            mape: eval.per_skill_mape[0],
        })
        .collect();
    let outcomes: Vec<GridPointOutcome> = panel
        .skills
        .iter()
        .zip(&evals)
        .map(|(skill, eval)| GridPointOutcome {
            skill: Some(skill.clone()),
            coords: shared.clone(),
            mean_nrmse: Some(eval.mean_nrmse),
            per_skill_nrmse: eval.per_skill_nrmse.clone(),
            final_loss: Some(eval.final_loss),
            error: None,
        })
        .collect();
    let eval_refs: Vec<&PointEval> = evals.iter().collect();
    let (predicted, actual) = assemble_columns(&eval_refs, horizon);
    Ok(ForecastReport {
        experiment: "univariate_shared".into(),
        horizon,
        master_seed,
        skills: panel.skills.clone(),
        winner: Some(shared.clone()),
        mean_nrmse: mean(per_skill.iter().map(|o| o.nrmse)),
        mean_mape: mean(per_skill.iter().map(|o| o.mape)),
        per_skill,
        test_months: evals[0].test_months.clone(),
        predicted,
        actual,
        outcomes,
    })
}

/// Independent grid search per skill; each skill keeps its own winner.
pub fn run_experiment_univariate_tuned(
    panel: &SkillSharePanel,
    grid: &ExperimentGrid,
    horizon: usize,
) -> Result<ForecastReport> {
    grid.validate()?;
    check_horizon(grid, horizon)?;
    let master_seed = grid.primary_seed();
    let points = grid.points();
    let singles: Vec<SkillSharePanel> = panel
        .skills
        .iter()
        .map(|skill| panel.select(skill))
        .collect::<Result<_>>()?;

    let mut outcomes = Vec::with_capacity(singles.len() * points.len());
    let mut per_skill = Vec::with_capacity(singles.len());
    let mut winner_evals: Vec<PointEval> = Vec::with_capacity(singles.len());
    for (skill, single) in panel.skills.iter().zip(&singles) {
        let results = sweep(single, &points, horizon, master_seed)?;
        let mut best: Option<(GridCoords, f64)> = None;
        for (coords, result) in &results {
            outcomes.push(outcome_of(Some(skill.clone()), coords, result));
            if let Ok(eval) = result {
                let candidate = (coords.clone(), eval.mean_nrmse);
                if best.as_ref().is_none_or(|b| better(&candidate, b)) {
                    best = Some(candidate);
                }
            }
        }
        let (best_coords, _) = best.ok_or_else(|| all_diverged_error(&results, Some(skill)))?;
        let eval = results
            .into_iter()
            .find(|(coords, _)| *coords == best_coords)
            .and_then(|(_, r)| r.ok())
            .expect("winner came from a successful evaluation");
        per_skill.push(SkillOutcome {
            skill: skill.clone(),
            coords: best_coords,
            nrmse: eval.per_skill_nrmse[0],
            mape: eval.per_skill_mape[0],
        });
        winner_evals.push(eval);
    }
    let eval_refs: Vec<&PointEval> = winner_evals.iter().collect();
    let (predicted, actual) = assemble_columns(&eval_refs, horizon);
    Ok(ForecastReport {
        experiment: "univariate_tuned".into(),
        horizon,
        master_seed,
        skills: panel.skills.clone(),
        winner: None,
        mean_nrmse: mean(per_skill.iter().map(|o| o.nrmse)),
        mean_mape: mean(per_skill.iter().map(|o| o.mape)),
        per_skill,
        test_months: winner_evals[0].test_months.clone(),
        predicted,
        actual,
        outcomes,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DepthRow {
    pub kind: ArchitectureKind,
    pub depth: usize,
    pub coords: GridCoords,
    pub mean_nrmse: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DepthStudy {
    pub horizon: usize,
    pub master_seed: u64,
    pub rows: Vec<DepthRow>,
}

/// One joint run per (architecture, depth) with everything else held at
/// `template`; `template.kind` and `template.layers` are overridden.
pub fn layer_depth_study(
    panel: &SkillSharePanel,
    kinds: &[ArchitectureKind],
    depths: &[usize],
    template: &GridCoords,
    horizon: usize,
    master_seed: u64,
) -> Result<DepthStudy> {
    if kinds.is_empty() || depths.is_empty() {
        return Err(Error::Config("kinds and depths must be non-empty".into()));
    }
    check_subset(depths, &ALLOWED_LAYERS, "depth")?;
    let mut cells = Vec::with_capacity(kinds.len() * depths.len());
    for &kind in kinds {
        for &depth in depths {
            let coords = GridCoords {
                kind,
                lag: template.lag,
                epochs: template.epochs,
                layers: depth,
                neurons: template.neurons,
                kernel: if kind == ArchitectureKind::CnnLstm {
                    Some(template.kernel.ok_or_else(|| {
                        Error::Config("depth study over cnn_lstm needs a kernel".into())
                    })?)
                } else {
                    None
                },
            };
            coords.arch_spec().validate()?;
            cells.push((kind, depth, coords));
        }
    }
    let rows: Vec<Result<DepthRow>> = cells
        .par_iter()
        .map(|(kind, depth, coords)| {
            let eval = evaluate_point(panel, coords, horizon, master_seed)
                .map_err(|e| annotate_divergence(e, &coords.label()))?;
            Ok(DepthRow {
                kind: *kind,
                depth: *depth,
                coords: coords.clone(),
                mean_nrmse: eval.mean_nrmse,
            })
        })
        .collect();
    Ok(DepthStudy {
        horizon,
        master_seed,
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}
