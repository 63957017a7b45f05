//! Pool sub-samplers: random, class-confidence top-K (`cl`), realism top-K
//! (`cr`) and an actor-critic keep/discard policy (`rl`).
//!
//! Samplers work on [`Candidate`] views of a synthetic pool: id, target
//! label and features only.

mod rl;
mod select;

pub use rl::{
    compute_threshold, keep_probabilities, policy_input, rl_apply, rl_train, EpisodeLog,
    PolicyConfig, PolicyTrainState, ScoreWindow, WINDOW_LEN,
};
pub use select::{
    budgets, sample_cl, sample_cr, sample_random, sample_top_k, score_pool, Candidate,
    SamplerConfig, SamplerKind, ScoredEntry, ScoredPool, SelectionResult,
};
