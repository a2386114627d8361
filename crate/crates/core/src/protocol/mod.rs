//! Heralded entangling circuits built from the optics and ensemble primitives.

mod entangler;
mod ghz;
mod linking;

pub use entangler::{
    entangle_pair_exact, entangle_pair_exact_with, entangle_pair_sampled, entangle_trial, pre_detection_mixture, pre_detection_state,
    target_state, Detector, EntangleOutcome, EntangleTrial, HeraldBranch, HeraldPolicy, SampledEntangle,
};
pub use ghz::{
    best_ghz_fidelity, ghz4_exact, ghz_success_probability, ghz_target, GhzCorrection, GhzHerald, GhzOutcome, GhzPattern, RejectedPattern,
};
pub use linking::{link_clusters, link_success_probability, Cluster, LinkOutcome};
