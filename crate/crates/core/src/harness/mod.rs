//! The experimental grid: victim training, adversary training against frozen
//! victims, direct and transfer evaluation, and the natural-walk arm.

mod agent;
mod eval;
mod grid;

pub use agent::{AgentRef, ResolvedAgent};
pub use eval::{
    build_transfer_matrix, evaluate_pair, evaluate_resolved, write_pairings_csv, AdversaryEntry,
    PairingResult, TransferMatrix, DEFAULT_EPISODES, DEFAULT_SEED_BASE,
};
pub use grid::{
    adversary_id, adversary_request, discover_adversaries, discover_victims, run_grid,
    train_adversaries, train_victims, victim_id, victim_request, ArmResult, GridPlan, GridPreset,
    GridResult, RunRecord, HEATMAP_EPISODES,
};
