//! Classifier, discriminator and child networks, plus the two scores that
//! drive sampling: class confidence and realism.

mod classifier;
mod discriminator;
mod eval;
mod persist;
mod train;

pub use classifier::{
    class_confidence, class_confidences, predict, train_child, train_classifier,
    ClassifierModel, CHILD_HIDDEN,
};
pub use discriminator::{
    realism_score, realism_scores, train_discriminator, DiscriminatorModel, LabelConvention,
};
pub use eval::{evaluate, EvalReport};
pub use persist::{load_params, save_model, ModelSidecar};
pub use train::{data_fingerprint, fit, Provenance, TrainConfig, TrainOutcome};
