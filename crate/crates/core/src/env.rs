//! Deterministic episodic gridworld with an optimal and a suboptimal goal,
//! plus the one-hot feature map that turns it into a linear MDP.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{FiniteMdp, ModelTransition};

/// Flat state index, row-major over the grid.
pub type StateId = usize;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("grid must have positive width and height, got {width}x{height}")]
    EmptyGrid { width: usize, height: usize },
    #[error("{name} cell {cell} lies outside the {width}x{height} grid")]
    OutOfBounds {
        name: &'static str,
        cell: Cell,
        width: usize,
        height: usize,
    },
    #[error("start, optimal goal and suboptimal goal must be distinct cells")]
    OverlappingCells,
    #[error("rewards must satisfy R > r >= 0, got R={optimal} r={suboptimal}")]
    BadRewards { optimal: f64, suboptimal: f64 },
    #[error("horizon {horizon} is shorter than the {distance}-step shortest path to the optimal goal")]
    HorizonTooShort { horizon: usize, distance: usize },
    #[error("discount must lie in (0, 1], got {0}")]
    BadDiscount(f64),
    #[error("state {0} is out of range")]
    BadState(StateId),
    #[error("episode is over; call reset before stepping again")]
    EpisodeOver,
}

/// Grid coordinate. `x` grows to the right, `y` grows downwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: Cell) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Up,
    Right,
    Down,
    Left,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Right, Action::Down, Action::Left];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Action> {
        Self::ALL.get(index).copied()
    }

    pub fn arrow(self) -> char {
        match self {
            Action::Up => '^',
            Action::Right => '>',
            Action::Down => 'v',
            Action::Left => '<',
        }
    }
}

/// Missing keys fall back to [`EnvConfig::default`], the warm-up room with
/// `R = 1`, `r = 0.1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub width: usize,
    pub height: usize,
    pub start: Cell,
    pub optimal_goal: Cell,
    pub suboptimal_goal: Cell,
    /// Reward `R` for entering the optimal goal.
    pub optimal_reward: f64,
    /// Reward `r` for entering the suboptimal goal.
    pub suboptimal_reward: f64,
    pub horizon: usize,
    /// Discount used by the agents' targets and by the oracle.
    pub gamma: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self::warm_up(1.0, 0.1)
    }
}

impl EnvConfig {
    /// The 30x30 warm-up room: start in the centre, optimal goal in the
    /// lower-right corner, suboptimal goal a few cells from the start.
    pub fn warm_up(optimal_reward: f64, suboptimal_reward: f64) -> Self {
        Self {
            width: 30,
            height: 30,
            start: Cell::new(15, 15),
            optimal_goal: Cell::new(29, 29),
            suboptimal_goal: Cell::new(12, 12),
            optimal_reward,
            suboptimal_reward,
            horizon: 100,
            gamma: 0.98,
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if self.width == 0 || self.height == 0 {
            return Err(EnvError::EmptyGrid {
                width: self.width,
                height: self.height,
            });
        }
        for (name, cell) in [
            ("start", self.start),
            ("optimal goal", self.optimal_goal),
            ("suboptimal goal", self.suboptimal_goal),
        ] {
            if cell.x >= self.width || cell.y >= self.height {
                return Err(EnvError::OutOfBounds {
                    name,
                    cell,
                    width: self.width,
                    height: self.height,
                });
            }
        }
        if self.start == self.optimal_goal
            || self.start == self.suboptimal_goal
            || self.optimal_goal == self.suboptimal_goal
        {
            return Err(EnvError::OverlappingCells);
        }
        // NaN fails both comparisons.
        if !(self.optimal_reward > self.suboptimal_reward && self.suboptimal_reward >= 0.0) {
            return Err(EnvError::BadRewards {
                optimal: self.optimal_reward,
                suboptimal: self.suboptimal_reward,
            });
        }
        let distance = self.start.manhattan(self.optimal_goal);
        if self.horizon < distance {
            return Err(EnvError::HorizonTooShort {
                horizon: self.horizon,
                distance,
            });
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(EnvError::BadDiscount(self.gamma));
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.width * self.height
    }

    pub fn state_of(&self, cell: Cell) -> StateId {
        cell.y * self.width + cell.x
    }

    pub fn cell_of(&self, state: StateId) -> Cell {
        Cell::new(state % self.width, state / self.width)
    }

    /// Pure dynamics: `(next_state, reward, terminated)`. Moving off the
    /// grid leaves the agent in place.
    pub fn transition(&self, state: StateId, action: Action) -> (StateId, f64, bool) {
        let Cell { x, y } = self.cell_of(state);
        let next = match action {
            Action::Up => Cell::new(x, y.saturating_sub(1)),
            Action::Right => Cell::new((x + 1).min(self.width - 1), y),
            Action::Down => Cell::new(x, (y + 1).min(self.height - 1)),
            Action::Left => Cell::new(x.saturating_sub(1), y),
        };
        let next_state = self.state_of(next);
        if next == self.optimal_goal {
            (next_state, self.optimal_reward, true)
        } else if next == self.suboptimal_goal {
            (next_state, self.suboptimal_reward, true)
        } else {
            (next_state, 0.0, false)
        }
    }

    /// Every `(state, action)` transition of the model, in state-major order.
    pub fn enumerate(&self) -> Vec<ModelTransition> {
        let mut out = Vec::with_capacity(self.n_states() * Action::COUNT);
        for state in 0..self.n_states() {
            for action in Action::ALL {
                let (next_state, reward, terminated) = self.transition(state, action);
                out.push(ModelTransition {
                    state,
                    action: action.index(),
                    next_state,
                    reward,
                    terminated,
                });
            }
        }
        out
    }

    pub fn to_mdp(&self) -> FiniteMdp {
        FiniteMdp::from_transitions(
            self.n_states(),
            Action::COUNT,
            self.state_of(self.start),
            &self.enumerate(),
        )
        .expect("enumeration covers every state-action pair")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next_state: StateId,
    pub reward: f64,
    /// A goal was entered.
    pub terminated: bool,
    /// The step counter reached the horizon.
    pub truncated: bool,
}

impl StepOutcome {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

/// Episodic environment over a finite state and action space.
pub trait EpisodicEnv {
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn horizon(&self) -> usize;
    fn reset(&mut self, rng: &mut crate::Prng) -> StateId;
    fn step(&mut self, action: usize, rng: &mut crate::Prng) -> Result<StepOutcome, EnvError>;
}

#[derive(Debug, Clone)]
pub struct GridNav {
    config: EnvConfig,
    state: StateId,
    steps: usize,
    over: bool,
}

impl GridNav {
    pub fn new(config: EnvConfig) -> Result<Self, EnvError> {
        config.validate()?;
        let state = config.state_of(config.start);
        Ok(Self {
            config,
            state,
            steps: 0,
            over: false,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> StateId {
        self.state
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn reset(&mut self) -> StateId {
        self.state = self.config.state_of(self.config.start);
        self.steps = 0;
        self.over = false;
        self.state
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome, EnvError> {
        if self.over {
            return Err(EnvError::EpisodeOver);
        }
        let (next_state, reward, terminated) = self.config.transition(self.state, action);
        self.steps += 1;
        let truncated = self.steps >= self.config.horizon;
        self.state = next_state;
        self.over = terminated || truncated;
        Ok(StepOutcome {
            next_state,
            reward,
            terminated,
            truncated,
        })
    }
}

impl EpisodicEnv for GridNav {
    fn n_states(&self) -> usize {
        self.config.n_states()
    }

    fn n_actions(&self) -> usize {
        Action::COUNT
    }

    fn horizon(&self) -> usize {
        self.config.horizon
    }

    fn reset(&mut self, _rng: &mut crate::Prng) -> StateId {
        GridNav::reset(self)
    }

    fn step(&mut self, action: usize, _rng: &mut crate::Prng) -> Result<StepOutcome, EnvError> {
        let action = Action::from_index(action).ok_or(EnvError::BadState(action))?;
        GridNav::step(self, action)
    }
}

/// Feature map `phi: S x A -> R^d` with `||phi(s, a)|| <= 1`.
pub trait FeatureMap {
    fn dim(&self) -> usize;
    /// Writes `phi(state, action)` into `out`, which has length `dim()`.
    fn write(&self, state: StateId, action: usize, out: &mut [f64]);

    fn features(&self, state: StateId, action: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.write(state, action, &mut out);
        out
    }
}

/// Indicator features, `d = |S| * |A|`. Any tabular MDP is linear under
/// this map: `mu` is the table of next-state masses, `theta` the reward table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OneHot {
    pub n_states: usize,
    pub n_actions: usize,
}

impl OneHot {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
        }
    }

    pub fn index(&self, state: StateId, action: usize) -> usize {
        state * self.n_actions + action
    }
}

impl FeatureMap for OneHot {
    fn dim(&self) -> usize {
        self.n_states * self.n_actions
    }

    fn write(&self, state: StateId, action: usize, out: &mut [f64]) {
        out.fill(0.0);
        out[self.index(state, action)] = 1.0;
    }
}
