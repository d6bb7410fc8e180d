//! Forecasting models and the experiment designs built on them.

pub mod experiment;
pub mod model;

pub use experiment::{
    layer_depth_study, run_experiment_multivariate, run_experiment_univariate_shared,
    run_experiment_univariate_tuned, DepthRow, DepthStudy, ExperimentGrid, ForecastReport,
    GridCoords, GridPointOutcome, SkillOutcome, ALLOWED_EPOCHS, ALLOWED_HORIZONS, ALLOWED_LAGS,
    ALLOWED_LAYERS, DEFAULT_MAX_POINTS,
};
pub use model::{
    train, ArchitectureBuilder, ArchitectureKind, ArchitectureRegistry, ArchitectureSpec,
    ForecastMode, ForecastModel, ModelCheckpoint, TrainConfig, TrainedModel,
};
