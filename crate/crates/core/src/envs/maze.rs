//! Stochastic grid maze.
//!
//! The agent starts in the top-left corner and must reach the bottom-right
//! one. Each action slips to one of the two perpendicular directions with
//! probability `slip_prob` each. Bumping into a wall or the border costs −1
//! and leaves the agent in place; reaching the goal pays `goal_reward`.
//!
//! Observations are noisy one-hot encodings of (row, col), resampled on every
//! visit, so revisiting a cell never reproduces the same raw state.

use std::collections::{BTreeSet, VecDeque};

use rand::seq::index;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{EpisodicEnv, StepOutcome};
use crate::error::{Error, Result};
use crate::seed::{rng_from, Rng};

pub type Cell = (usize, usize);

/// Resampling budget for [`generate_maze`].
pub const MAX_GENERATION_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Left = 0,
    Right = 1,
    Up = 2,
    Down = 3,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Left,
        Direction::Right,
        Direction::Up,
        Direction::Down,
    ];

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn perpendicular(self) -> [Direction; 2] {
        match self {
            Direction::Left | Direction::Right => [Direction::Up, Direction::Down],
            Direction::Up | Direction::Down => [Direction::Left, Direction::Right],
        }
    }

    fn delta(self) -> (isize, isize) {
        match self {
            Direction::Left => (0, -1),
            Direction::Right => (0, 1),
            Direction::Up => (-1, 0),
            Direction::Down => (1, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MazeSpec {
    pub width: usize,
    pub height: usize,
    pub walls: BTreeSet<Cell>,
    pub start: Cell,
    pub goal: Cell,
    pub slip_prob: f64,
    pub wall_bump_reward: f64,
    pub goal_reward: f64,
    pub max_steps: usize,
    pub wall_density: f64,
    /// Standard deviation of the per-entry observation noise.
    pub noise_scale: f64,
    /// Seed the wall layout was generated from, if any.
    pub seed: Option<u64>,
}

impl Default for MazeSpec {
    fn default() -> Self {
        Self::empty(10, 10)
    }
}

impl MazeSpec {
    /// A wall-free maze with the default dynamics and rewards.
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            walls: BTreeSet::new(),
            start: (0, 0),
            goal: (height - 1, width - 1),
            slip_prob: 0.1,
            wall_bump_reward: -1.0,
            goal_reward: 1000.0,
            max_steps: 1000,
            wall_density: 0.0,
            noise_scale: 0.1,
            seed: None,
        }
    }

    pub fn num_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn in_bounds(&self, (r, c): Cell) -> bool {
        r < self.height && c < self.width
    }

    pub fn is_open(&self, cell: Cell) -> bool {
        self.in_bounds(cell) && !self.walls.contains(&cell)
    }

    /// Cell reached by moving one step in `dir`, or `None` if that leaves the
    /// grid or hits a wall.
    pub fn neighbor(&self, (r, c): Cell, dir: Direction) -> Option<Cell> {
        let (dr, dc) = dir.delta();
        let nr = r.checked_add_signed(dr)?;
        let nc = c.checked_add_signed(dc)?;
        let next = (nr, nc);
        self.is_open(next).then_some(next)
    }

    pub fn observation_dim(&self) -> usize {
        self.height + self.width
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidInput("maze must have at least one cell".into()));
        }
        if !self.is_open(self.start) || !self.is_open(self.goal) {
            return Err(Error::InvalidInput("start and goal must be open cells".into()));
        }
        if !(0.0..=0.5).contains(&self.slip_prob) {
            return Err(Error::InvalidInput(format!(
                "slip_prob {} outside [0, 0.5]",
                self.slip_prob
            )));
        }
        if self.walls.iter().any(|&w| !self.in_bounds(w)) {
            return Err(Error::InvalidInput("wall outside the grid".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidInput("max_steps must be positive".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: MazeSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// BFS distances (in actions) from `from` to every open cell.
pub fn bfs_distances(spec: &MazeSpec, from: Cell) -> Vec<Option<usize>> {
    let idx = |(r, c): Cell| r * spec.width + c;
    let mut dist = vec![None; spec.num_cells()];
    if !spec.is_open(from) {
        return dist;
    }
    dist[idx(from)] = Some(0);
    let mut queue = VecDeque::from([from]);
    while let Some(cell) = queue.pop_front() {
        let d = dist[idx(cell)].unwrap();
        for dir in Direction::ALL {
            if let Some(n) = spec.neighbor(cell, dir) {
                if dist[idx(n)].is_none() {
                    dist[idx(n)] = Some(d + 1);
                    queue.push_back(n);
                }
            }
        }
    }
    dist
}

/// Minimum number of actions from start to goal, ignoring slips.
pub fn shortest_path_length(spec: &MazeSpec) -> Result<usize> {
    let dist = bfs_distances(spec, spec.start);
    let (r, c) = spec.goal;
    if !spec.is_open(spec.goal) {
        return Err(Error::Unreachable);
    }
    dist[r * spec.width + c].ok_or(Error::Unreachable)
}

/// Samples a solvable 10×10 maze with `round(density · cells)` walls placed
/// uniformly (never on start or goal). Unsolvable layouts are discarded and
/// the whole layout is resampled; if every attempt fails, the last layout is
/// repaired by opening the fewest walls that connect start to goal.
pub fn generate_maze(seed: u64, density: f64) -> Result<MazeSpec> {
    generate_maze_with(MazeSpec::default(), seed, density)
}

/// Like [`generate_maze`] but keeps the geometry and dynamics of `template`.
pub fn generate_maze_with(template: MazeSpec, seed: u64, density: f64) -> Result<MazeSpec> {
    match sample_layouts(template, seed, density, MAX_GENERATION_ATTEMPTS) {
        Ok(spec) => Ok(spec),
        Err((mut spec, Error::GenerationFailure { .. })) => {
            for cell in min_wall_cut(&spec) {
                spec.walls.remove(&cell);
            }
            shortest_path_length(&spec)?;
            Ok(spec)
        }
        Err((_, e)) => Err(e),
    }
}

/// Pure rejection sampling without repair; fails with
/// [`Error::GenerationFailure`] once `attempts` layouts were all unsolvable.
pub fn generate_maze_strict(
    template: MazeSpec,
    seed: u64,
    density: f64,
    attempts: usize,
) -> Result<MazeSpec> {
    sample_layouts(template, seed, density, attempts).map_err(|(_, e)| e)
}

fn sample_layouts(
    template: MazeSpec,
    seed: u64,
    density: f64,
    attempts: usize,
) -> std::result::Result<MazeSpec, (MazeSpec, Error)> {
    let mut spec = template;
    if !(0.0..=0.6).contains(&density) {
        let e = Error::InvalidInput(format!("wall density {density} outside [0, 0.6]"));
        return Err((spec, e));
    }
    spec.walls.clear();
    spec.wall_density = density;
    spec.seed = Some(seed);
    if let Err(e) = spec.validate() {
        return Err((spec, e));
    }

    let candidates: Vec<Cell> = (0..spec.height)
        .flat_map(|r| (0..spec.width).map(move |c| (r, c)))
        .filter(|&cell| cell != spec.start && cell != spec.goal)
        .collect();
    let n_walls = ((density * spec.num_cells() as f64).round() as usize).min(candidates.len());

    let mut rng = rng_from(seed);
    for _ in 0..attempts {
        spec.walls = index::sample(&mut rng, candidates.len(), n_walls)
            .into_iter()
            .map(|i| candidates[i])
            .collect();
        if shortest_path_length(&spec).is_ok() {
            return Ok(spec);
        }
    }
    Err((
        spec,
        Error::GenerationFailure {
            attempts,
            density,
        },
    ))
}

/// Walls on a start-to-goal path that crosses the fewest walls (0-1 BFS,
/// ties broken by direction order).
fn min_wall_cut(spec: &MazeSpec) -> Vec<Cell> {
    let idx = |(r, c): Cell| r * spec.width + c;
    let mut cost = vec![usize::MAX; spec.num_cells()];
    let mut parent: Vec<Option<Cell>> = vec![None; spec.num_cells()];
    let mut deque = VecDeque::from([spec.start]);
    cost[idx(spec.start)] = 0;
    while let Some(cell) = deque.pop_front() {
        for dir in Direction::ALL {
            let (dr, dc) = dir.delta();
            let (Some(r), Some(c)) = (
                cell.0.checked_add_signed(dr),
                cell.1.checked_add_signed(dc),
            ) else {
                continue;
            };
            if !spec.in_bounds((r, c)) {
                continue;
            }
            let w = usize::from(spec.walls.contains(&(r, c)));
            let next = cost[idx(cell)] + w;
            if next < cost[idx((r, c))] {
                cost[idx((r, c))] = next;
                parent[idx((r, c))] = Some(cell);
                if w == 0 {
                    deque.push_front((r, c));
                } else {
                    deque.push_back((r, c));
                }
            }
        }
    }
    let mut cut = Vec::new();
    let mut cur = spec.goal;
    while let Some(p) = parent[idx(cur)] {
        if spec.walls.contains(&cur) {
            cut.push(cur);
        }
        cur = p;
    }
    cut
}

/// Noisy one-hot encoding: a row block of length `height` followed by a
/// column block of length `width`, plus i.i.d. Gaussian noise.
pub fn encode_state(spec: &MazeSpec, (r, c): Cell, rng: &mut Rng) -> Vec<f64> {
    let mut v = vec![0.0; spec.observation_dim()];
    v[r] = 1.0;
    v[spec.height + c] = 1.0;
    if spec.noise_scale > 0.0 {
        for x in v.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *x += spec.noise_scale * z;
        }
    }
    v
}

/// Inverse of [`encode_state`] by block-wise argmax.
pub fn decode_state(spec: &MazeSpec, encoded: &[f64]) -> Cell {
    let argmax = |xs: &[f64]| {
        xs.iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &x)| {
                if x > best.1 {
                    (i, x)
                } else {
                    best
                }
            })
            .0
    };
    (
        argmax(&encoded[..spec.height]),
        argmax(&encoded[spec.height..spec.height + spec.width]),
    )
}

/// Direction actually taken when `intended` is chosen.
pub fn sample_direction(intended: Direction, slip_prob: f64, rng: &mut Rng) -> Direction {
    let u: f64 = rng.random();
    let [p1, p2] = intended.perpendicular();
    if u < 1.0 - 2.0 * slip_prob {
        intended
    } else if u < 1.0 - slip_prob {
        p1
    } else {
        p2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub position: Cell,
    pub steps_taken: usize,
    pub done: bool,
    pub encoded: Vec<f64>,
}

impl EnvState {
    pub fn initial(spec: &MazeSpec, rng: &mut Rng) -> Self {
        Self {
            position: spec.start,
            steps_taken: 0,
            done: spec.start == spec.goal,
            encoded: encode_state(spec, spec.start, rng),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MazeStep {
    pub state: EnvState,
    pub reward: f64,
    pub done: bool,
    pub reached_goal: bool,
    pub realized: Direction,
}

/// Advances the maze by one action.
pub fn step(spec: &MazeSpec, state: &EnvState, action: usize, rng: &mut Rng) -> Result<MazeStep> {
    if state.done {
        return Err(Error::ContractViolation("step called on a finished episode".into()));
    }
    let intended = Direction::from_index(action)
        .ok_or_else(|| Error::InvalidInput(format!("action {action} out of range")))?;
    let realized = sample_direction(intended, spec.slip_prob, rng);
    let (position, mut reward) = match spec.neighbor(state.position, realized) {
        Some(next) => (next, 0.0),
        None => (state.position, spec.wall_bump_reward),
    };
    let steps_taken = state.steps_taken + 1;
    let reached_goal = position == spec.goal;
    if reached_goal {
        reward = spec.goal_reward;
    }
    let done = reached_goal || steps_taken >= spec.max_steps;
    Ok(MazeStep {
        state: EnvState {
            position,
            steps_taken,
            done,
            encoded: encode_state(spec, position, rng),
        },
        reward,
        done,
        reached_goal,
        realized,
    })
}

/// Stateful wrapper implementing [`EpisodicEnv`].
#[derive(Debug, Clone)]
pub struct MazeEnv {
    spec: MazeSpec,
    state: Option<EnvState>,
}

impl MazeEnv {
    pub fn new(spec: MazeSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec, state: None })
    }

    pub fn spec(&self) -> &MazeSpec {
        &self.spec
    }

    pub fn state(&self) -> Option<&EnvState> {
        self.state.as_ref()
    }
}

impl EpisodicEnv for MazeEnv {
    fn num_actions(&self) -> usize {
        Direction::ALL.len()
    }

    fn observation_dim(&self) -> usize {
        self.spec.observation_dim()
    }

    fn reset(&mut self, rng: &mut Rng) -> Vec<f64> {
        let s = EnvState::initial(&self.spec, rng);
        let obs = s.encoded.clone();
        self.state = Some(s);
        obs
    }

    fn step(&mut self, action: usize, rng: &mut Rng) -> Result<StepOutcome> {
        let current = self
            .state
            .as_ref()
            .ok_or_else(|| Error::ContractViolation("step before reset".into()))?;
        let out = step(&self.spec, current, action, rng)?;
        let outcome = StepOutcome {
            observation: out.state.encoded.clone(),
            reward: out.reward,
            done: out.done,
            terminal: out.reached_goal,
        };
        self.state = Some(out.state);
        Ok(outcome)
    }
}
