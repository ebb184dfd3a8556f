//! Losses, Adam, the mini-batch training loop, evaluation in original label
//! units and the unpaired t-test used to compare model variants.

mod adam;
mod evaluate;
mod loss;
mod train;
mod ttest;


pub use adam::{adam_step, AdamConfig, AdamState};
pub use evaluate::{evaluate, predict_all, EvalReport};
pub use loss::{task_losses, total_loss};
pub use train::{batch_gradients, loss_log_csv, scaled_loss, train, BatchResult, EpochLoss, TrainConfig, TrainOutcome};
pub use ttest::{unpaired_ttest, TTest};
