//! The object-pose particle filter over tool/probe pose pairs.

mod filter;
mod loss;

pub use filter::{
    importance_resample, init_pairs, noise_model, prevent_divergence, scope_action, score_population, select_top, ActionOutcome,
    FilterConfig, Observation, OppPair, PairScore, ScopeContext, ScopeError, TraceRow, WrenchMinima,
};
pub use loss::{
    loss_contact, loss_force_align, loss_penetration, loss_wrench, score_consistency, score_opp, world_support,
    LossTerms, LossWeights,
};
