//! Explicit finite MDP models: the common currency between the gridworld
//! enumerator, the exact oracle and the linear agent's test problems.

use rand::Rng;
use thiserror::Error;

use crate::env::{EnvError, EpisodicEnv, StateId, StepOutcome};
use crate::Prng;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("state-action pair ({state}, {action}) has no transition")]
    Incomplete { state: StateId, action: usize },
    #[error("state-action pair ({state}, {action}) appears more than once")]
    Duplicate { state: StateId, action: usize },
    #[error("transition from ({state}, {action}) leads to unknown state {next}")]
    UnknownState {
        state: StateId,
        action: usize,
        next: StateId,
    },
    #[error("probabilities for ({state}, {action}) sum to {total}, expected 1")]
    NotNormalized {
        state: StateId,
        action: usize,
        total: f64,
    },
    #[error("model must have at least one state and one action")]
    Empty,
}

/// One deterministic `(s, a) -> (s', r)` entry of an enumerated model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelTransition {
    pub state: StateId,
    pub action: usize,
    pub next_state: StateId,
    pub reward: f64,
    /// Taking `action` in `state` ends the episode; the continuation value
    /// is zero (an absorbing zero-reward sink).
    pub terminated: bool,
}

/// Stationary finite MDP with per-pair rewards, next-state distributions
/// and termination flags.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMdp {
    n_states: usize,
    n_actions: usize,
    start: StateId,
    rewards: Vec<f64>,
    outcomes: Vec<Vec<(StateId, f64)>>,
    terminal: Vec<bool>,
}

impl FiniteMdp {
    /// Builds a stochastic model. `outcomes[s * n_actions + a]` lists
    /// `(next_state, probability)` pairs.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        start: StateId,
        rewards: Vec<f64>,
        outcomes: Vec<Vec<(StateId, f64)>>,
        terminal: Vec<bool>,
    ) -> Result<Self, ModelError> {
        if n_states == 0 || n_actions == 0 {
            return Err(ModelError::Empty);
        }
        let pairs = n_states * n_actions;
        if start >= n_states {
            return Err(ModelError::UnknownState {
                state: start,
                action: 0,
                next: start,
            });
        }
        for idx in 0..pairs {
            let (state, action) = (idx / n_actions, idx % n_actions);
            let Some(row) = outcomes.get(idx) else {
                return Err(ModelError::Incomplete { state, action });
            };
            if row.is_empty() || idx >= rewards.len() || idx >= terminal.len() {
                return Err(ModelError::Incomplete { state, action });
            }
            let mut total = 0.0;
            for &(next, prob) in row {
                if next >= n_states {
                    return Err(ModelError::UnknownState {
                        state,
                        action,
                        next,
                    });
                }
                total += prob;
            }
            if (total - 1.0).abs() > 1e-9 || row.iter().any(|&(_, p)| p < 0.0) {
                return Err(ModelError::NotNormalized {
                    state,
                    action,
                    total,
                });
            }
        }
        Ok(Self {
            n_states,
            n_actions,
            start,
            rewards,
            outcomes,
            terminal,
        })
    }

    /// Builds a deterministic model from an enumeration; every pair must
    /// appear exactly once.
    pub fn from_transitions(
        n_states: usize,
        n_actions: usize,
        start: StateId,
        transitions: &[ModelTransition],
    ) -> Result<Self, ModelError> {
        if n_states == 0 || n_actions == 0 {
            return Err(ModelError::Empty);
        }
        let pairs = n_states * n_actions;
        let mut rewards = vec![0.0; pairs];
        let mut outcomes: Vec<Vec<(StateId, f64)>> = vec![Vec::new(); pairs];
        let mut terminal = vec![false; pairs];
        for t in transitions {
            if t.state >= n_states || t.action >= n_actions {
                return Err(ModelError::UnknownState {
                    state: t.state,
                    action: t.action,
                    next: t.next_state,
                });
            }
            let idx = t.state * n_actions + t.action;
            if !outcomes[idx].is_empty() {
                return Err(ModelError::Duplicate {
                    state: t.state,
                    action: t.action,
                });
            }
            rewards[idx] = t.reward;
            outcomes[idx].push((t.next_state, 1.0));
            terminal[idx] = t.terminated;
        }
        Self::new(n_states, n_actions, start, rewards, outcomes, terminal)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn start(&self) -> StateId {
        self.start
    }

    pub fn reward(&self, state: StateId, action: usize) -> f64 {
        self.rewards[state * self.n_actions + action]
    }

    pub fn outcomes(&self, state: StateId, action: usize) -> &[(StateId, f64)] {
        &self.outcomes[state * self.n_actions + action]
    }

    pub fn is_terminal(&self, state: StateId, action: usize) -> bool {
        self.terminal[state * self.n_actions + action]
    }

    /// Expected continuation `sum_s' P(s'|s,a) v(s')`, zero on termination.
    pub fn expected_next(&self, state: StateId, action: usize, values: &[f64]) -> f64 {
        if self.is_terminal(state, action) {
            return 0.0;
        }
        self.outcomes(state, action)
            .iter()
            .map(|&(next, prob)| prob * values[next])
            .sum()
    }

    pub fn sample_next<R: Rng + ?Sized>(&self, state: StateId, action: usize, rng: &mut R) -> StateId {
        let row = self.outcomes(state, action);
        if row.len() == 1 {
            return row[0].0;
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for &(next, prob) in row {
            acc += prob;
            if u < acc {
                return next;
            }
        }
        row[row.len() - 1].0
    }

    /// A random model with `n_states` states: sparse stochastic
    /// transitions, rewards in [0, 1] and a few terminating pairs.
    pub fn random<R: Rng + ?Sized>(n_states: usize, n_actions: usize, rng: &mut R) -> Self {
        let pairs = n_states * n_actions;
        let mut rewards = Vec::with_capacity(pairs);
        let mut outcomes = Vec::with_capacity(pairs);
        let mut terminal = Vec::with_capacity(pairs);
        for _ in 0..pairs {
            rewards.push(if rng.gen_bool(0.5) { rng.gen::<f64>() } else { 0.0 });
            let fan_out = rng.gen_range(1..=n_states.min(3));
            let mut weights: Vec<(StateId, f64)> = (0..fan_out)
                .map(|_| (rng.gen_range(0..n_states), rng.gen::<f64>() + 0.05))
                .collect();
            let total: f64 = weights.iter().map(|w| w.1).sum();
            for w in &mut weights {
                w.1 /= total;
            }
            outcomes.push(weights);
            terminal.push(rng.gen_bool(0.1));
        }
        Self::new(n_states, n_actions, 0, rewards, outcomes, terminal)
            .expect("random model is well formed")
    }
}

/// Simulates episodes of a [`FiniteMdp`] from its start state.
#[derive(Debug, Clone)]
pub struct MdpEnv {
    mdp: FiniteMdp,
    horizon: usize,
    state: StateId,
    steps: usize,
    over: bool,
}

impl MdpEnv {
    pub fn new(mdp: FiniteMdp, horizon: usize) -> Self {
        let state = mdp.start();
        Self {
            mdp,
            horizon,
            state,
            steps: 0,
            over: false,
        }
    }

    pub fn mdp(&self) -> &FiniteMdp {
        &self.mdp
    }
}

impl EpisodicEnv for MdpEnv {
    fn n_states(&self) -> usize {
        self.mdp.n_states()
    }

    fn n_actions(&self) -> usize {
        self.mdp.n_actions()
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn reset(&mut self, _rng: &mut Prng) -> StateId {
        self.state = self.mdp.start();
        self.steps = 0;
        self.over = false;
        self.state
    }

    fn step(&mut self, action: usize, rng: &mut Prng) -> Result<StepOutcome, EnvError> {
        if self.over {
            return Err(EnvError::EpisodeOver);
        }
        if action >= self.mdp.n_actions() {
            return Err(EnvError::BadState(action));
        }
        let reward = self.mdp.reward(self.state, action);
        let terminated = self.mdp.is_terminal(self.state, action);
        let next_state = self.mdp.sample_next(self.state, action, rng);
        self.steps += 1;
        let truncated = self.steps >= self.horizon;
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
