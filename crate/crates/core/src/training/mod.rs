//! Losses, sample weighting, optimization, metrics and the delayed-feedback
//! wait policy.

mod config;
mod loss;
mod metrics;
mod optim;
mod rew;
mod scheduler;
mod trainer;

pub use config::{LossConfig, LossMode, TrainConfig};
pub use loss::{bce, combined_loss, LossOp, LossOutput};
pub use metrics::{auc, evaluate, predict_logits, EvalMetrics, TaskMetrics};
pub use optim::{adagrad_step, Adagrad};
pub use rew::{debias_weight, decayed_exposure_count, rew_weight, sample_weights, RewConfig};
pub use scheduler::{
    delayed_feedback_wait, simulate_feedback, FeedbackSimConfig, FeedbackStep, FeedbackWindowStats,
    SchedulerConfig,
};
pub use trainer::{train, EpochRecord, History};
