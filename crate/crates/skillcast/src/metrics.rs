//! Forecast scoring: range-normalized RMSE, percentage error, and the
//! cross-series correlation summaries used to interpret multivariate runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The space a metric was computed in. Forecasts are scored in smoothed
/// level space after inversion; transformed space is available for
/// diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Level,
    Transformed,
}

impl std::fmt::Display for Space {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Space::Level => write!(f, "level"),
            Space::Transformed => write!(f, "transformed"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub metric: String,
    pub value: f64,
    /// The normalizing constant (range of the actual series) for NRMSE;
    /// absent for MAPE.
    pub normalizer: Option<f64>,
    pub space: Space,
}

/// Root mean squared error divided by the range (max − min) of the actual
/// series over the evaluation window. Range normalization keeps the metric
/// well-defined for near-zero-mean series, and the divisor is recorded in
/// the result so other normalizers could be compared unambiguously.
pub fn nrmse(predicted: &[f64], actual: &[f64], space: Space) -> Result<MetricResult> {
    if predicted.len() != actual.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} predicted vs {} actual",
            predicted.len(),
            actual.len()
        )));
    }
    if actual.len() < 2 {
        return Err(Error::InvalidInput(
            "need at least two points to compute NRMSE".into(),
        ));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in actual {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    let range = hi - lo;
    if range <= 0.0 {
        return Err(Error::UndefinedNormalization);
    }
    let mse = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a) * (p - a))
        .sum::<f64>()
        / actual.len() as f64;
    Ok(MetricResult {
        metric: "nrmse".into(),
        value: mse.sqrt() / range,
        normalizer: Some(range),
        space,
    })
}

/// Mean absolute percentage error, in percent.
pub fn mape(predicted: &[f64], actual: &[f64], space: Space) -> Result<MetricResult> {
    if predicted.len() != actual.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} predicted vs {} actual",
            predicted.len(),
            actual.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::InvalidInput("empty series".into()));
    }
    let mut acc = 0.0;
    for (i, (p, a)) in predicted.iter().zip(actual).enumerate() {
        if *a == 0.0 {
            return Err(Error::UndefinedMape(i));
        }
        acc += ((p - a) / a).abs();
    }
    Ok(MetricResult {
        metric: "mape".into(),
        value: 100.0 * acc / actual.len() as f64,
        normalizer: None,
        space,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationSummary {
    pub names: Vec<String>,
    /// Symmetric Pearson matrix with unit diagonal.
    pub matrix: Vec<Vec<f64>>,
    pub min_off_diagonal: f64,
}

/// Pairwise Pearson correlations over equally long series.
pub fn correlation_summary(series: &[(String, Vec<f64>)]) -> Result<CorrelationSummary> {
    if series.len() < 2 {
        return Err(Error::InvalidInput(
            "correlation needs at least two series".into(),
        ));
    }
    let len = series[0].1.len();
    if len < 2 {
        return Err(Error::InvalidInput(
            "correlation needs at least two observations".into(),
        ));
    }
    for (name, values) in series {
        if values.len() != len {
            return Err(Error::InvalidInput(format!(
                "series `{name}` has {} observations, expected {len}",
                values.len()
            )));
        }
    }
    // Two-pass: means first, then centered products.
    let n = series.len();
    let means: Vec<f64> = series
        .iter()
        .map(|(_, v)| v.iter().sum::<f64>() / len as f64)
        .collect();
    let sds: Vec<f64> = series
        .iter()
        .zip(&means)
        .map(|((name, v), m)| {
            let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / len as f64;
            if var <= 0.0 {
                Err(Error::UndefinedCorrelation(name.clone()))
            } else {
                Ok(var.sqrt())
            }
        })
        .collect::<Result<_>>()?;

    let mut matrix = vec![vec![0.0; n]; n];
    let mut min_off = f64::INFINITY;
    for i in 0..n {
        matrix[i][i] = 1.0;
        for j in i + 1..n {
            let cov = series[i]
                .1
                .iter()
                .zip(&series[j].1)
                .map(|(a, b)| (a - means[i]) * (b - means[j]))
                .sum::<f64>()
                / len as f64;
            let r = cov / (sds[i] * sds[j]);
            matrix[i][j] = r;
            matrix[j][i] = r;
            min_off = min_off.min(r);
        }
    }
    Ok(CorrelationSummary {
        names: series.iter().map(|(n, _)| n.clone()).collect(),
        matrix,
        min_off_diagonal: min_off,
    })
}

/// Least-squares slope of error against minimum correlation across several
/// experiments: one (min correlation, mean NRMSE) point each.
pub fn correlation_vs_error_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} correlation/error points; need at least 3 for a slope",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxx = points
        .iter()
        .map(|(x, _)| (x - mean_x) * (x - mean_x))
        .sum::<f64>();
    if sxx <= 0.0 {
        return Err(Error::InvalidInput(
            "all correlation values identical; slope undefined".into(),
        ));
    }
    let sxy = points
        .iter()
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum::<f64>();
    Ok(sxy / sxx)
}
