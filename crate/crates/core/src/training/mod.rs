//! Optimizers and training loops: single-image fitting and progressive
//! adversarial training.

mod adam;
mod data;
mod discriminator;
mod fit;
mod gan;
mod schedule;

pub use adam::{AdamConfig, AdamState};
pub use data::{blob_dataset, resize_area};
pub use discriminator::{Discriminator, DiscriminatorPass};
pub use fit::{fit_single_image, fit_single_image_with, FitOutcome};
pub use gan::{
    fingerprint, generate_batch_graph, train_adversarial, train_adversarial_from,
    AdversarialOutcome, GanOptions, StageStats,
};
pub use schedule::{Schedule, Stage, DEFAULT_DISCRIMINATOR_LR, DEFAULT_GENERATOR_LR};
