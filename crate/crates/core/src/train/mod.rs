//! Loss, optimiser, schedule, checkpoints and the training loop.

mod ablation;
mod adam;
mod checkpoint;
mod loss;
mod schedule;
mod trainer;

pub use ablation::{run_ablation, AblationGrid, AblationReport, AblationResult, AblationRun};
pub use adam::{adam_step, OptimState};
pub use checkpoint::Checkpoint;
pub use loss::{charbonnier, total_loss, total_loss_on_tape, LossTerms, LossWeights, Targets};
pub use schedule::LrSchedule;
pub use trainer::{
    augment_frame, Batch, IterRecord, TrainConfig, TrainSummary, Trainer, CKPT_FINAL, CKPT_LAST, CKPT_LAST_GOOD, METRICS_LOG,
};
