//! Bootstrapped episodic backward update and its optimistic variants.
//!
//! Every variant trains on whole episodes replayed backward. They differ in
//! how actions are chosen (sampled head, UCB, IDS) and in whether the
//! targets carry the ensemble-disagreement bonus.

mod replay;
mod schedule;
mod strategy;
mod tables;
mod trainer;

pub use replay::EpisodicReplay;
pub use schedule::{epsilon_at, head_for_episode, EpsilonSchedule};
pub use strategy::{
    argmax, argmin, ensemble_moments, ids_choice, select_action, ucb_choice, ExplorationStrategy,
    SelectorParams, StrategyFactory, StrategyRegistry,
};
pub use tables::{
    backward_targets, compute_bonus_tables, BackwardTables, MaskMode, QTable, RunningStd,
    TargetParams,
};
pub use trainer::{
    evaluate_relative_length, relative_lengths, run_training, EpisodeLog, EvalMode, MazePolicy,
    TraceRow, TrainStats, TrainedAgent, Trainer, TrainerConfig, TrainingOutcome,
};
