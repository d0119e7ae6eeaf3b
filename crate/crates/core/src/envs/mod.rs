//! Episodic environments: the stochastic grid maze and a linear MDP.

mod episode;
pub mod linear_mdp;
pub mod maze;

pub use episode::{EpisodeRecord, Transition};
pub use linear_mdp::LinearMdpSpec;
pub use maze::{Direction, EnvState, MazeEnv, MazeSpec};

use crate::error::Result;
use crate::seed::Rng;

/// Result of one environment step as seen by a learning agent.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub observation: Vec<f64>,
    pub reward: f64,
    /// Episode is over (goal or timeout).
    pub done: bool,
    /// Episode ended in an absorbing state (goal), not a timeout.
    pub terminal: bool,
}

/// Discrete-action episodic environment with vector observations.
pub trait EpisodicEnv {
    fn num_actions(&self) -> usize;
    fn observation_dim(&self) -> usize;
    fn reset(&mut self, rng: &mut Rng) -> Vec<f64>;
    fn step(&mut self, action: usize, rng: &mut Rng) -> Result<StepOutcome>;
}
