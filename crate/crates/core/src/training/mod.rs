pub mod fit;
pub mod lbfgs;
pub mod pipeline;
pub mod synthetic;

pub use fit::{
    default_lambda_grid, evaluate, fit, objective_and_grad, predict_all, run_experiment, split, train, Examples,
    ExperimentRun, FitOutcome, LambdaScore, LinearModel, Split, Standardizer, TrainConfig, TrainedModel,
};
pub use lbfgs::{lbfgs_minimize, LbfgsConfig, LbfgsResult, LbfgsStatus};
pub use pipeline::{Decoder, Pipeline, PipelineSpec};
