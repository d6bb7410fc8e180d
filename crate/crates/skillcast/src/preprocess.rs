//! Panel-to-window transformation and its exact inverse.
//!
//! The chain per series: trailing moving average (no future value enters a
//! smoothed point), first difference, standardize to zero mean and unit
//! population variance, then slide supervised windows of `lag` inputs and
//! `horizon` targets. The last `split` smoothed months are reserved for
//! evaluation; the model never sees them. Inversion un-standardizes and
//! cumulative-sums from the last training-segment level, landing back in
//! smoothed-level space, which is also where metrics are computed.
//!
//! Flattening order everywhere is time-major then series: step 0 of every
//! series, then step 1, and so on. The dense head's output is read back
//! through the same order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::SkillSharePanel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitScope {
    /// Standardization statistics fitted on each segment separately
    /// (training stats for the training segment, test stats for the test
    /// segment). The default.
    PerSegment,
    /// Test targets standardized with the training statistics; nothing about
    /// the test segment influences any fitted number.
    TrainOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PreprocessConfig {
    pub smooth_window: usize,
    pub lag: usize,
    pub horizon: usize,
    /// Trailing smoothed months reserved for evaluation. Defaults to the
    /// horizon when `None`.
    pub split: Option<usize>,
    pub fit_scope: FitScope,
}

impl PreprocessConfig {
    pub fn new(lag: usize, horizon: usize) -> Self {
        Self {
            smooth_window: 3,
            lag,
            horizon,
            split: None,
            fit_scope: FitScope::PerSegment,
        }
    }

    pub fn split_len(&self) -> usize {
        self.split.unwrap_or(self.horizon)
    }

    pub fn validate(&self) -> Result<()> {
        if self.smooth_window < 1 {
            return Err(Error::Config("smoothing window must be >= 1".into()));
        }
        if self.lag < 1 || self.horizon < 1 {
            return Err(Error::Config("lag and horizon must be >= 1".into()));
        }
        if self.split_len() < self.horizon {
            return Err(Error::Config(format!(
                "reserved split {} shorter than horizon {}",
                self.split_len(),
                self.horizon
            )));
        }
        Ok(())
    }
}

/// Trailing moving average: output k is the mean of input `[k, k+w)`, so a
/// smoothed point only ever sees values at or before its own month.
pub fn moving_average(series: &[f64], w: usize) -> Result<Vec<f64>> {
    if w < 1 {
        return Err(Error::InvalidInput("window must be >= 1".into()));
    }
    if series.len() < w {
        return Err(Error::InvalidInput(format!(
            "series of length {} shorter than window {w}",
            series.len()
        )));
    }
    let inv = 1.0 / w as f64;
    Ok(series
        .windows(w)
        .map(|win| win.iter().sum::<f64>() * inv)
        .collect())
}

/// First difference plus the last input value, kept as the anchor for
/// reconstruction.
pub fn first_difference(series: &[f64]) -> Result<(Vec<f64>, f64)> {
    if series.len() < 2 {
        return Err(Error::InvalidInput(
            "differencing needs at least two points".into(),
        ));
    }
    let diffs = series.windows(2).map(|p| p[1] - p[0]).collect();
    Ok((diffs, series[series.len() - 1]))
}

/// Mean and population standard deviation of a series.
pub fn fit_stats(series: &[f64], label: &str) -> Result<(f64, f64)> {
    if series.is_empty() {
        return Err(Error::InvalidInput("cannot fit stats on nothing".into()));
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 {
        return Err(Error::ConstantSeries(label.to_string()));
    }
    Ok((mean, std))
}

/// Standardizes with statistics fitted on the series itself.
pub fn standardize(series: &[f64], label: &str) -> Result<(Vec<f64>, f64, f64)> {
    let (mean, std) = fit_stats(series, label)?;
    Ok((apply_stats(series, mean, std), mean, std))
}

pub fn apply_stats(series: &[f64], mean: f64, std: f64) -> Vec<f64> {
    series.iter().map(|v| (v - mean) / std).collect()
}

pub fn invert_stats(series: &[f64], mean: f64, std: f64) -> Vec<f64> {
    series.iter().map(|v| v * std + mean).collect()
}

/// Supervised windows over an already-transformed `[steps][series]` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowSet {
    /// One row per sample, width `lag * n_series`, time-major then series.
    pub inputs: Vec<Vec<f64>>,
    /// One row per sample, width `horizon * n_series`, same ordering.
    pub targets: Vec<Vec<f64>>,
    pub series: Vec<String>,
    pub lag: usize,
    pub horizon: usize,
    /// Month index of each sample's first input step.
    pub origins: Vec<i32>,
}

impl WindowSet {
    pub fn n_samples(&self) -> usize {
        self.inputs.len()
    }

    pub fn n_series(&self) -> usize {
        self.series.len()
    }
}

/// Flattens `[steps][series]` rows time-major then series.
pub fn flatten_time_major(rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter().flatten().copied().collect()
}

/// Inverse of `flatten_time_major`.
pub fn unflatten_time_major(flat: &[f64], steps: usize, n_series: usize) -> Result<Vec<Vec<f64>>> {
    if flat.len() != steps * n_series {
        return Err(Error::InvalidInput(format!(
            "flat length {} does not factor into {steps} steps x {n_series} series",
            flat.len()
        )));
    }
    Ok(flat.chunks(n_series).map(<[f64]>::to_vec).collect())
}

/// Slides windows of `lag` input steps and `horizon` target steps (stride 1)
/// over the matrix. `first_month` is the month index of row 0.
pub fn make_windows(
    matrix: &[Vec<f64>],
    series: &[String],
    lag: usize,
    horizon: usize,
    first_month: i32,
) -> Result<WindowSet> {
    let steps = matrix.len();
    if lag < 1 || horizon < 1 {
        return Err(Error::InvalidInput("lag and horizon must be >= 1".into()));
    }
    if steps < lag + horizon {
        return Err(Error::InvalidInput(format!(
            "{steps} transformed steps cannot fit lag {lag} + horizon {horizon}"
        )));
    }
    let n_samples = steps - lag - horizon + 1;
    let mut inputs = Vec::with_capacity(n_samples);
    let mut targets = Vec::with_capacity(n_samples);
    let mut origins = Vec::with_capacity(n_samples);
    for start in 0..n_samples {
        inputs.push(flatten_time_major(&matrix[start..start + lag]));
        targets.push(flatten_time_major(
            &matrix[start + lag..start + lag + horizon],
        ));
        origins.push(first_month + start as i32);
    }
    Ok(WindowSet {
        inputs,
        targets,
        series: series.to_vec(),
        lag,
        horizon,
        origins,
    })
}

/// Everything needed to undo the transform chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformState {
    pub series: Vec<String>,
    pub window: usize,
    pub lag: usize,
    pub horizon: usize,
    pub fit_scope: FitScope,
    /// Standardization statistics fitted on the training-segment
    /// differences; model inputs and outputs live in this scale.
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Statistics the recorded test targets were standardized with. Equal to
    /// `means`/`stds` under `TrainOnly`.
    pub test_means: Vec<f64>,
    pub test_stds: Vec<f64>,
    /// Last training-segment smoothed level per series: the forecast origin
    /// the cumulative sum starts from.
    pub anchors: Vec<f64>,
}

impl TransformState {
    pub fn n_series(&self) -> usize {
        self.series.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.series.len();
        for (name, len) in [
            ("means", self.means.len()),
            ("stds", self.stds.len()),
            ("test_means", self.test_means.len()),
            ("test_stds", self.test_stds.len()),
            ("anchors", self.anchors.len()),
        ] {
            if len != n {
                return Err(Error::StateIncomplete(format!(
                    "{name} holds {len} entries for {n} series"
                )));
            }
        }
        if self.stds.iter().chain(&self.test_stds).any(|s| *s <= 0.0) {
            return Err(Error::StateIncomplete("non-positive std".into()));
        }
        Ok(())
    }

    pub fn to_json_file(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let state: Self = serde_json::from_str(&text)?;
        state.validate()?;
        Ok(state)
    }
}

/// Which standardization statistics to undo when leaving model space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StatsSide {
    /// Model predictions: training-fit statistics.
    Model,
    /// Recorded test targets: the test segment's own statistics.
    TestSegment,
}

/// Un-standardizes a flat `[horizon * n_series]` block of differences and
/// cumulative-sums each series from its anchor, producing levels aligned
/// with the smoothed test months.
pub fn inverse_transform(
    flat_std: &[f64],
    state: &TransformState,
    side: StatsSide,
) -> Result<Vec<Vec<f64>>> {
    state.validate()?;
    let n = state.n_series();
    let rows = unflatten_time_major(flat_std, state.horizon, n)?;
    let (means, stds) = match side {
        StatsSide::Model => (&state.means, &state.stds),
        StatsSide::TestSegment => (&state.test_means, &state.test_stds),
    };
    let mut levels = vec![vec![0.0; n]; state.horizon];
    let mut current = state.anchors.clone();
    for (t, row) in rows.iter().enumerate() {
        for s in 0..n {
            let diff = row[s] * stds[s] + means[s];
            current[s] += diff;
            levels[t][s] = current[s];
        }
    }
    Ok(levels)
}

/// The full transformed bundle for one panel and one (lag, horizon) choice.
#[derive(Clone, Debug)]
pub struct TransformedPanel {
    pub windows: WindowSet,
    /// Last `lag` training steps in model space: the input for the held-out
    /// forecast, `[lag][n_series]`.
    pub forecast_input: Vec<Vec<f64>>,
    pub state: TransformState,
    /// Smoothed level values of the first `horizon` reserved months:
    /// the ground truth forecasts are scored against, `[horizon][n_series]`.
    pub test_levels: Vec<Vec<f64>>,
    /// The same months as standardized differences, `[horizon][n_series]`.
    pub test_targets_std: Vec<Vec<f64>>,
    /// Whole smoothed panel, `[months - window + 1][n_series]`.
    pub smoothed: Vec<Vec<f64>>,
    /// Month index of the first smoothed row.
    pub smoothed_start: i32,
    /// Trailing smoothed rows reserved for evaluation (>= horizon).
    pub reserved: usize,
}

impl TransformedPanel {
    pub fn train_level_rows(&self) -> usize {
        self.smoothed.len() - self.reserved
    }

    /// Month indices of the scored test rows.
    pub fn test_months(&self) -> Vec<i32> {
        let first = self.smoothed_start + self.train_level_rows() as i32;
        (0..self.state.horizon as i32).map(|k| first + k).collect()
    }
}

/// Applies the whole chain to a panel.
pub fn transform_panel(panel: &SkillSharePanel, config: &PreprocessConfig) -> Result<TransformedPanel> {
    config.validate()?;
    let w = config.smooth_window;
    let months = panel.n_months();
    if months < w {
        return Err(Error::InvalidInput(format!(
            "panel of {months} months shorter than smoothing window {w}"
        )));
    }
    let smoothed_len = months - w + 1;
    let split = config.split_len();
    if smoothed_len < split + 2 {
        return Err(Error::InvalidInput(format!(
            "panel too short: {smoothed_len} smoothed months cannot reserve {split} and still difference"
        )));
    }
    let train_levels_len = smoothed_len - split;
    let train_diffs_len = train_levels_len - 1;
    if train_diffs_len < config.lag + config.horizon {
        return Err(Error::InvalidInput(format!(
            "{train_diffs_len} training differences cannot fit lag {} + horizon {}",
            config.lag, config.horizon
        )));
    }

    let n = panel.n_skills();
    let mut smoothed_cols = Vec::with_capacity(n);
    let mut train_std_cols = Vec::with_capacity(n);
    let mut test_std_cols = Vec::with_capacity(n);
    let mut means = Vec::with_capacity(n);
    let mut stds = Vec::with_capacity(n);
    let mut test_means = Vec::with_capacity(n);
    let mut test_stds = Vec::with_capacity(n);
    let mut anchors = Vec::with_capacity(n);
    let mut test_levels_cols = Vec::with_capacity(n);

    for (s, name) in panel.skills.iter().enumerate() {
        let column = panel.column(s);
        let smoothed = moving_average(&column, w)?;
        let train_segment = &smoothed[..train_levels_len];
        let reserved_segment = &smoothed[train_levels_len..];
        let (train_diffs, anchor) = first_difference(train_segment)?;
        let (train_std, mean, std) = standardize(&train_diffs, name)?;

        // Differences continue across the boundary: the first reserved
        // difference is taken against the anchor.
        let mut reserved_diffs = Vec::with_capacity(split);
        let mut prev = anchor;
        for v in reserved_segment {
            reserved_diffs.push(v - prev);
            prev = *v;
        }
        let (t_mean, t_std) = match config.fit_scope {
            FitScope::PerSegment => fit_stats(&reserved_diffs, name)?,
            FitScope::TrainOnly => (mean, std),
        };
        let test_std_series = apply_stats(&reserved_diffs[..config.horizon], t_mean, t_std);

        test_levels_cols.push(reserved_segment[..config.horizon].to_vec());
        smoothed_cols.push(smoothed);
        train_std_cols.push(train_std);
        test_std_cols.push(test_std_series);
        means.push(mean);
        stds.push(std);
        test_means.push(t_mean);
        test_stds.push(t_std);
        anchors.push(anchor);
    }

    let to_rows = |cols: &[Vec<f64>], rows: usize| -> Vec<Vec<f64>> {
        (0..rows)
            .map(|t| cols.iter().map(|c| c[t]).collect())
            .collect()
    };
    let smoothed = to_rows(&smoothed_cols, smoothed_len);
    let train_std = to_rows(&train_std_cols, train_diffs_len);
    let test_targets_std = to_rows(&test_std_cols, config.horizon);
    let test_levels = to_rows(&test_levels_cols, config.horizon);

    let smoothed_start = panel.range.start + (w as i32 - 1);
    // Differences sit at the month of their later endpoint.
    let first_diff_month = smoothed_start + 1;
    let windows = make_windows(
        &train_std,
        &panel.skills,
        config.lag,
        config.horizon,
        first_diff_month,
    )?;
    let forecast_input = train_std[train_diffs_len - config.lag..].to_vec();

    let state = TransformState {
        series: panel.skills.clone(),
        window: w,
        lag: config.lag,
        horizon: config.horizon,
        fit_scope: config.fit_scope,
        means,
        stds,
        test_means,
        test_stds,
        anchors,
    };

    Ok(TransformedPanel {
        windows,
        forecast_input,
        state,
        test_levels,
        test_targets_std,
        smoothed,
        smoothed_start,
        reserved: split,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::EmploymentMode;
    use crate::months::MonthRange;

    #[test]
    fn moving_average_examples() {
        assert_eq!(moving_average(&[5.0, 5.0, 5.0, 5.0], 3).unwrap(), vec![5.0, 5.0]);
        assert_eq!(moving_average(&[1.0, 2.0, 3.0, 4.0], 3).unwrap(), vec![2.0, 3.0]);
        let series: Vec<f64> = (0..120).map(|i| (i as f64).sin()).collect();
        assert_eq!(moving_average(&series, 1).unwrap(), series);
        assert!(moving_average(&[1.0, 2.0], 3).is_err());
    }

    #[test]
    fn first_difference_examples() {
        let (d, anchor) = first_difference(&[0.0, 2.0, 4.0, 6.0]).unwrap();
        assert_eq!(d, vec![2.0, 2.0, 2.0]);
        assert_eq!(anchor, 6.0);
        let (d, _) = first_difference(&[3.0, 3.0, 3.0]).unwrap();
        assert!(d.iter().all(|v| *v == 0.0));
        assert!(first_difference(&[1.0]).is_err());

        // Cumulative sum from the first value reconstructs any series.
        let series = [0.3, -0.1, 0.8, 0.75, -0.2];
        let (diffs, _) = first_difference(&series).unwrap();
        let mut level = series[0];
        for (k, dv) in diffs.iter().enumerate() {
            level += dv;
            assert!((level - series[k + 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn standardize_hand_zscores() {
        let (z, mean, std) = standardize(&[1.0, 2.0, 3.0], "x").unwrap();
        assert_eq!(mean, 2.0);
        assert!((std - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((z[0] + 1.224744871391589).abs() < 1e-12);
        assert!(z[1].abs() < 1e-15);
        assert!((z[2] - 1.224744871391589).abs() < 1e-12);

        // Standardized output has zero mean, unit population std.
        let m = z.iter().sum::<f64>() / 3.0;
        let v = z.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 3.0;
        assert!(m.abs() < 1e-12);
        assert!((v.sqrt() - 1.0).abs() < 1e-12);

        // Re-standardizing a standardized series changes nothing.
        let (z2, _, _) = standardize(&z, "x").unwrap();
        for (a, b) in z.iter().zip(&z2) {
            assert!((a - b).abs() < 1e-12);
        }

        // Inversion restores the original values.
        let back = invert_stats(&z, mean, std);
        for (a, b) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }

        assert!(matches!(
            standardize(&[4.0, 4.0, 4.0], "flat"),
            Err(Error::ConstantSeries(_))
        ));
    }

    #[test]
    fn window_shapes_and_contents() {
        let series = vec!["a".to_string()];
        let matrix: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let ws = make_windows(&matrix, &series, 3, 2, 0).unwrap();
        assert_eq!(ws.n_samples(), 6);
        assert_eq!(ws.inputs[0], vec![0.0, 1.0, 2.0]);
        assert_eq!(ws.targets[0], vec![3.0, 4.0]);
        assert_eq!(ws.inputs[5], vec![5.0, 6.0, 7.0]);
        assert_eq!(ws.targets[5], vec![8.0, 9.0]);
        assert_eq!(ws.origins, vec![0, 1, 2, 3, 4, 5]);

        let two = vec!["a".to_string(), "b".to_string()];
        let matrix: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 10.0 + i as f64]).collect();
        let ws = make_windows(&matrix, &two, 2, 1, 7).unwrap();
        assert_eq!(ws.inputs[0].len(), 4);
        assert_eq!(ws.targets[0].len(), 2);
        // Time-major then series: [t0 s0, t0 s1, t1 s0, t1 s1].
        assert_eq!(ws.inputs[0], vec![0.0, 10.0, 1.0, 11.0]);

        assert!(make_windows(&matrix, &two, 5, 1, 0).is_err());
    }

    #[test]
    fn overlapping_windows_reconstruct_the_matrix() {
        let series = vec!["a".to_string(), "b".to_string()];
        let matrix: Vec<Vec<f64>> = (0..9)
            .map(|i| vec![(i * i) as f64, -(i as f64)])
            .collect();
        let ws = make_windows(&matrix, &series, 3, 2, 0).unwrap();
        let mut rebuilt = vec![None; matrix.len()];
        for (k, input) in ws.inputs.iter().enumerate() {
            let rows = unflatten_time_major(input, 3, 2).unwrap();
            for (o, row) in rows.into_iter().enumerate() {
                match &rebuilt[k + o] {
                    None => rebuilt[k + o] = Some(row),
                    Some(existing) => assert_eq!(existing, &row),
                }
            }
        }
        for (k, target) in ws.targets.iter().enumerate() {
            let rows = unflatten_time_major(target, 2, 2).unwrap();
            for (o, row) in rows.into_iter().enumerate() {
                match &rebuilt[k + 3 + o] {
                    None => rebuilt[k + 3 + o] = Some(row),
                    Some(existing) => assert_eq!(existing, &row),
                }
            }
        }
        for (row, original) in rebuilt.into_iter().zip(&matrix) {
            assert_eq!(row.unwrap(), *original);
        }
    }

    #[test]
    fn flatten_roundtrip() {
        let rows = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]];
        let flat = flatten_time_major(&rows);
        assert_eq!(flat, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(unflatten_time_major(&flat, 3, 2).unwrap(), rows);
        assert!(unflatten_time_major(&flat, 2, 2).is_err());
    }

    fn demo_panel(months: usize) -> SkillSharePanel {
        // Two smooth deterministic series with trend and seasonality; values
        // stay well inside (0, 1).
        let values = (0..months)
            .map(|t| {
                let tf = t as f64;
                vec![
                    0.3 + 0.001 * tf + 0.02 * (tf * std::f64::consts::TAU / 12.0).sin(),
                    0.5 - 0.0005 * tf + 0.03 * (tf * std::f64::consts::TAU / 12.0).cos(),
                ]
            })
            .collect();
        SkillSharePanel {
            skills: vec!["alpha".into(), "beta".into()],
            range: MonthRange::new(0, months),
            values,
            employment_mode: EmploymentMode::Contemporaneous,
        }
    }

    #[test]
    fn inverse_transform_zero_prediction_is_flat_at_anchor() {
        let state = TransformState {
            series: vec!["a".into()],
            window: 3,
            lag: 4,
            horizon: 3,
            fit_scope: FitScope::TrainOnly,
            means: vec![0.0],
            stds: vec![1.0],
            test_means: vec![0.0],
            test_stds: vec![1.0],
            anchors: vec![10.0],
        };
        let levels = inverse_transform(&[0.0, 0.0, 0.0], &state, StatsSide::Model).unwrap();
        assert_eq!(levels, vec![vec![10.0], vec![10.0], vec![10.0]]);

        let levels = inverse_transform(&[1.0, -1.0, 2.0], &state, StatsSide::Model).unwrap();
        assert_eq!(levels, vec![vec![11.0], vec![10.0], vec![12.0]]);
    }

    #[test]
    fn inverse_transform_rejects_incomplete_state() {
        let state = TransformState {
            series: vec!["a".into(), "b".into()],
            window: 3,
            lag: 4,
            horizon: 2,
            fit_scope: FitScope::TrainOnly,
            means: vec![0.0, 0.0],
            stds: vec![1.0, 1.0],
            test_means: vec![0.0, 0.0],
            test_stds: vec![1.0, 1.0],
            anchors: vec![10.0], // one anchor missing
        };
        assert!(matches!(
            inverse_transform(&[0.0; 4], &state, StatsSide::Model),
            Err(Error::StateIncomplete(_))
        ));
    }

    #[test]
    fn full_chain_roundtrip_reproduces_smoothed_tail() {
        let panel = demo_panel(120);
        for (lag, horizon) in [(12, 6), (24, 12), (36, 36), (12, 24)] {
            let config = PreprocessConfig::new(lag, horizon);
            let tp = transform_panel(&panel, &config).unwrap();
            let flat = flatten_time_major(&tp.test_targets_std);
            let levels = inverse_transform(&flat, &tp.state, StatsSide::TestSegment).unwrap();
            for (row, expected) in levels.iter().zip(&tp.test_levels) {
                for (got, want) in row.iter().zip(expected) {
                    assert!(
                        (got - want).abs() < 1e-9,
                        "lag {lag} horizon {horizon}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn split_sizes_line_up() {
        let panel = demo_panel(120);
        let config = PreprocessConfig::new(12, 12);
        let tp = transform_panel(&panel, &config).unwrap();
        // 120 months, window 3: 118 smoothed rows; 12 reserved leaves 106
        // training levels and 105 training differences.
        assert_eq!(tp.smoothed.len(), 118);
        assert_eq!(tp.train_level_rows(), 106);
        assert_eq!(tp.windows.n_samples(), 105 - 12 - 12 + 1);
        assert_eq!(tp.forecast_input.len(), 12);
        assert_eq!(tp.test_levels.len(), 12);
        // Smoothed rows start two months into the panel; diffs one later.
        assert_eq!(tp.smoothed_start, 2);
        assert_eq!(tp.windows.origins[0], 3);
        assert_eq!(tp.test_months(), (108..120).collect::<Vec<_>>());
    }

    #[test]
    fn transform_is_deterministic() {
        let panel = demo_panel(120);
        let config = PreprocessConfig::new(24, 6);
        let a = transform_panel(&panel, &config).unwrap();
        let b = transform_panel(&panel, &config).unwrap();
        assert_eq!(a.windows, b.windows);
        assert_eq!(a.state, b.state);
        assert_eq!(a.test_levels, b.test_levels);
    }

    #[test]
    fn state_json_roundtrip() {
        let panel = demo_panel(120);
        let config = PreprocessConfig::new(12, 6);
        let tp = transform_panel(&panel, &config).unwrap();
        let dir = std::env::temp_dir().join(format!("skillcast-pp-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("state.json");
        tp.state.to_json_file(&path).unwrap();
        let back = TransformState::from_json_file(&path).unwrap();
        assert_eq!(back, tp.state);
    }
}
