//! Emission of experiment artifacts: result tables, per-skill forecast
//! CSVs, and dependency-free SVG line charts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::forecast::{DepthStudy, ForecastReport, GridCoords};
use crate::metrics::Space;
use crate::months::format_month;

/// On-disk `summary.json`: one experiment at one horizon, with enough
/// context to chain runs (shared-hyperparameter runs read the winner from
/// here) and to correlate panels against their errors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    /// Path of the panel the experiment ran on.
    pub dataset: String,
    pub experiment: String,
    pub horizon: usize,
    pub master_seed: u64,
    /// Minimum pairwise correlation across the panel's series; absent for
    /// single-skill panels.
    pub min_correlation: Option<f64>,
    pub report: ForecastReport,
}

impl RunSummary {
    pub fn to_json_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| crate::error::Error::Parse {
            path: path.display().to_string(),
            detail: e.to_string(),
        })
    }
}

fn coords_fields(coords: &GridCoords) -> [String; 6] {
    [
        coords.kind.to_string(),
        coords.lag.to_string(),
        coords.epochs.to_string(),
        coords.layers.to_string(),
        coords.neurons.to_string(),
        coords.kernel.map_or(String::new(), |k| k.to_string()),
    ]
}

/// Per-skill results table: one row per skill plus a trailing mean row.
pub fn write_report_csv(path: &Path, report: &ForecastReport) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "skill", "nrmse", "mape", "kind", "lag", "epochs", "layers", "neurons", "kernel",
    ])?;
    for outcome in &report.per_skill {
        let coords = coords_fields(&outcome.coords);
        let mut record = vec![
            outcome.skill.clone(),
            format!("{}", outcome.nrmse),
            format!("{}", outcome.mape),
        ];
        record.extend(coords);
        writer.write_record(&record)?;
    }
    let mut mean_row = vec![
        "__mean__".to_string(),
        format!("{}", report.mean_nrmse),
        format!("{}", report.mean_mape),
    ];
    match &report.winner {
        Some(coords) => mean_row.extend(coords_fields(coords)),
        None => mean_row.extend(std::iter::repeat_n(String::new(), 6)),
    }
    writer.write_record(&mean_row)?;
    writer.flush()?;
    Ok(())
}

/// Every evaluated grid point, including diverged ones.
pub fn write_grid_csv(path: &Path, report: &ForecastReport) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "skill", "kind", "lag", "epochs", "layers", "neurons", "kernel", "mean_nrmse",
        "final_loss", "error",
    ])?;
    for outcome in &report.outcomes {
        let mut record = vec![outcome.skill.clone().unwrap_or_default()];
        record.extend(coords_fields(&outcome.coords));
        record.push(outcome.mean_nrmse.map_or(String::new(), |v| format!("{v}")));
        record.push(outcome.final_loss.map_or(String::new(), |v| format!("{v}")));
        record.push(outcome.error.clone().unwrap_or_default());
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Metric rows in the shared long format.
pub fn write_metrics_csv(path: &Path, dataset: &str, report: &ForecastReport) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["dataset", "skill", "metric", "value", "normalizer", "space"])?;
    for (s, outcome) in report.per_skill.iter().enumerate() {
        let actual_col: Vec<f64> = report.actual.iter().map(|row| row[s]).collect();
        let range = actual_col.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - actual_col.iter().cloned().fold(f64::INFINITY, f64::min);
        writer.write_record([
            dataset,
            &outcome.skill,
            "nrmse",
            &format!("{}", outcome.nrmse),
            &format!("{range}"),
            &Space::Level.to_string(),
        ])?;
        writer.write_record([
            dataset,
            &outcome.skill,
            "mape",
            &format!("{}", outcome.mape),
            "",
            &Space::Level.to_string(),
        ])?;
    }
    writer.write_record([
        dataset,
        "__mean__",
        "nrmse",
        &format!("{}", report.mean_nrmse),
        "",
        &Space::Level.to_string(),
    ])?;
    writer.write_record([
        dataset,
        "__mean__",
        "mape",
        &format!("{}", report.mean_mape),
        "",
        &Space::Level.to_string(),
    ])?;
    writer.flush()?;
    Ok(())
}

/// Held-out months with actual and predicted levels for one skill.
pub fn write_predictions_csv(
    path: &Path,
    report: &ForecastReport,
    skill_index: usize,
    epoch_year: i32,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["month", "actual", "predicted"])?;
    for (t, month) in report.test_months.iter().enumerate() {
        writer.write_record([
            format_month(*month, epoch_year),
            format!("{}", report.actual[t][skill_index]),
            format!("{}", report.predicted[t][skill_index]),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Depth-comparison table.
pub fn write_depth_csv(path: &Path, study: &DepthStudy) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["kind", "depth", "mean_nrmse"])?;
    for row in &study.rows {
        writer.write_record([
            row.kind.to_string(),
            row.depth.to_string(),
            format!("{}", row.mean_nrmse),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Scatter of (minimum pairwise correlation, mean NRMSE) per dataset, with
/// the fitted slope on a trailing row.
pub fn write_correlation_csv(
    path: &Path,
    points: &[(String, f64, f64)],
    slope: f64,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["dataset", "min_correlation", "mean_nrmse"])?;
    for (name, correlation, nrmse) in points {
        writer.write_record([
            name.as_str(),
            &format!("{correlation}"),
            &format!("{nrmse}"),
        ])?;
    }
    writer.write_record(["__slope__", &format!("{slope}"), ""])?;
    writer.flush()?;
    Ok(())
}

const CHART_WIDTH: f64 = 640.0;
const CHART_HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 40.0;

fn polyline(values: &[f64], lo: f64, hi: f64, color: &str, dash: &str) -> String {
    let plot_w = CHART_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = CHART_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let span = if hi > lo { hi - lo } else { 1.0 };
    let step = if values.len() > 1 {
        plot_w / (values.len() - 1) as f64
    } else {
        0.0
    };
    let points: Vec<String> = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = MARGIN_LEFT + step * i as f64;
            let y = MARGIN_TOP + plot_h * (1.0 - (v - lo) / span);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    format!(
        "<polyline fill=\"none\" stroke=\"{color}\"{dash} stroke-width=\"1.5\" \
         points=\"{}\"/>",
        points.join(" ")
    )
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// A two-line chart: solid actuals, dashed forecast. Output is plain SVG so
/// tests can assert structure (line count, point count) textually.
pub fn render_series_chart(
    title: &str,
    labels: &[String],
    actual: &[f64],
    predicted: &[f64],
) -> String {
    let all: Vec<f64> = actual.iter().chain(predicted).copied().collect();
    let lo = all.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let first = labels.first().map(String::as_str).unwrap_or("");
    let last = labels.last().map(String::as_str).unwrap_or("");
    let base = CHART_HEIGHT - MARGIN_BOTTOM;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{CHART_WIDTH}\" \
         height=\"{CHART_HEIGHT}\" viewBox=\"0 0 {CHART_WIDTH} {CHART_HEIGHT}\">\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"14\">{}</text>\n",
        CHART_WIDTH / 2.0,
        xml_escape(title)
    ));
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_LEFT}\" y1=\"{base}\" x2=\"{}\" y2=\"{base}\" \
         stroke=\"#333\"/>\n",
        CHART_WIDTH - MARGIN_RIGHT
    ));
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_LEFT}\" y1=\"{MARGIN_TOP}\" x2=\"{MARGIN_LEFT}\" \
         y2=\"{base}\" stroke=\"#333\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{MARGIN_LEFT}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
         text-anchor=\"start\">{}</text>\n",
        base + 16.0,
        xml_escape(first)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
         text-anchor=\"end\">{}</text>\n",
        CHART_WIDTH - MARGIN_RIGHT,
        base + 16.0,
        xml_escape(last)
    ));
    svg.push_str(&format!(
        "<text x=\"8\" y=\"{MARGIN_TOP}\" font-family=\"sans-serif\" \
         font-size=\"11\">{hi:.4}</text>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"8\" y=\"{base}\" font-family=\"sans-serif\" \
         font-size=\"11\">{lo:.4}</text>\n"
    ));
    svg.push_str(&polyline(actual, lo, hi, "#1f77b4", ""));
    svg.push('\n');
    svg.push_str(&polyline(
        predicted,
        lo,
        hi,
        "#d62728",
        " stroke-dasharray=\"6 3\"",
    ));
    svg.push('\n');
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
         fill=\"#1f77b4\">actual</text>\n",
        MARGIN_LEFT + 6.0,
        MARGIN_TOP + 14.0
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
         fill=\"#d62728\">forecast</text>\n",
        MARGIN_LEFT + 6.0,
        MARGIN_TOP + 28.0
    ));
    svg.push_str("</svg>\n");
    svg
}

/// Skill name made safe for use inside a file name.
pub fn artifact_name(skill: &str) -> String {
    skill
        .chars()
        .map(|c| match c {
            '/' | '\\' | ':' | '\0' => '_',
            other => other,
        })
        .collect()
}

/// Writes one chart per skill, `chart_<skill>.svg`.
pub fn write_charts(
    dir: &Path,
    report: &ForecastReport,
    epoch_year: i32,
) -> Result<Vec<std::path::PathBuf>> {
    let labels: Vec<String> = report
        .test_months
        .iter()
        .map(|m| format_month(*m, epoch_year))
        .collect();
    let mut written = Vec::with_capacity(report.skills.len());
    for (s, skill) in report.skills.iter().enumerate() {
        let actual: Vec<f64> = report.actual.iter().map(|row| row[s]).collect();
        let predicted: Vec<f64> = report.predicted.iter().map(|row| row[s]).collect();
        let svg = render_series_chart(
            &format!("{skill} — held-out months ({})", report.experiment),
            &labels,
            &actual,
            &predicted,
        );
        let path = dir.join(format!("chart_{}.svg", artifact_name(skill)));
        std::fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}
