//! Tabular agents: plain Q-learning, UCB-Q, a decoupled exploitation head
//! without repositioning, and the repositioning-and-exploration agent.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::env::StateId;
use crate::util::argmax_random_tie;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentMode {
    /// Greedy Q-learning on the task reward only.
    Qlearning,
    /// Q-learning on `reward + bonus`; one table drives behaviour.
    Ucbq,
    /// Bonus-driven behaviour table plus a bonus-free exploitation table
    /// trained on the same transitions.
    Decouple,
    /// Like `Decouple`, but each episode starts by following the
    /// exploitation table for a sampled number of steps.
    Hyper,
}

impl AgentMode {
    pub fn has_exploit_table(self) -> bool {
        matches!(self, AgentMode::Decouple | AgentMode::Hyper)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgentMode::Qlearning => "qlearning",
            AgentMode::Ucbq => "ucbq",
            AgentMode::Decouple => "decouple",
            AgentMode::Hyper => "hyper",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Reposition,
    Explore,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum LearningRate {
    /// `alpha_t = (H + 1) / (H + t)` where `t` is the visit count.
    HorizonDecay,
    Constant { alpha: f64 },
}

impl LearningRate {
    pub fn alpha(&self, horizon: usize, visits: u64) -> f64 {
        match *self {
            LearningRate::HorizonDecay => (horizon as f64 + 1.0) / (horizon as f64 + visits as f64),
            LearningRate::Constant { alpha } => alpha,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabularTransition {
    pub state: StateId,
    pub action: usize,
    pub reward: f64,
    pub next_state: StateId,
    pub terminated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularAgent {
    mode: AgentMode,
    n_states: usize,
    n_actions: usize,
    horizon: usize,
    gamma: f64,
    beta: f64,
    learning_rate: LearningRate,
    optimism: f64,
    q_explore: Vec<f64>,
    q_exploit: Option<Vec<f64>>,
    visits: Vec<u64>,
}

impl TabularAgent {
    /// Tables start at zero. `beta` is ignored (forced to zero) in
    /// Q-learning mode.
    pub fn new(
        mode: AgentMode,
        n_states: usize,
        n_actions: usize,
        horizon: usize,
        gamma: f64,
        beta: f64,
        learning_rate: LearningRate,
    ) -> Self {
        Self::with_optimism(mode, n_states, n_actions, horizon, gamma, beta, learning_rate, 0.0)
    }

    /// Like [`TabularAgent::new`], but the bonus-carrying table starts at
    /// `optimism * beta * sqrt(H)`, i.e. `optimism` first-visit bonuses.
    #[allow(clippy::too_many_arguments)]
    pub fn with_optimism(
        mode: AgentMode,
        n_states: usize,
        n_actions: usize,
        horizon: usize,
        gamma: f64,
        beta: f64,
        learning_rate: LearningRate,
        optimism: f64,
    ) -> Self {
        let pairs = n_states * n_actions;
        let beta = if mode == AgentMode::Qlearning { 0.0 } else { beta };
        let init = optimism * beta * (horizon as f64).sqrt();
        Self {
            mode,
            n_states,
            n_actions,
            horizon,
            gamma,
            beta,
            learning_rate,
            optimism,
            q_explore: vec![init; pairs],
            q_exploit: mode.has_exploit_table().then(|| vec![0.0; pairs]),
            visits: vec![0; pairs],
        }
    }

    pub fn mode(&self) -> AgentMode {
        self.mode
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn optimism(&self) -> f64 {
        self.optimism
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn q_explore(&self) -> &[f64] {
        &self.q_explore
    }

    /// The exploitation table; single-table modes return their only table.
    pub fn q_exploit(&self) -> &[f64] {
        self.q_exploit.as_deref().unwrap_or(&self.q_explore)
    }

    pub fn visits(&self) -> &[u64] {
        &self.visits
    }

    pub fn visit_count(&self, state: StateId, action: usize) -> u64 {
        self.visits[state * self.n_actions + action]
    }

    /// Intrinsic reward `beta * sqrt(H / N)` for visit count `N >= 1`.
    pub fn bonus(&self, visits: u64) -> f64 {
        if self.beta == 0.0 {
            return 0.0;
        }
        self.beta * (self.horizon as f64 / visits as f64).sqrt()
    }

    fn row<'a>(&self, table: &'a [f64], state: StateId) -> &'a [f64] {
        &table[state * self.n_actions..(state + 1) * self.n_actions]
    }

    pub fn select_action<R: Rng + ?Sized>(&self, state: StateId, phase: Phase, rng: &mut R) -> usize {
        let table = match (self.mode, phase) {
            (AgentMode::Hyper, Phase::Reposition) => self.q_exploit(),
            _ => &self.q_explore,
        };
        argmax_random_tie(self.row(table, state), 0.0, rng)
    }

    /// Greedy action of the output (exploitation) policy.
    pub fn exploit_action<R: Rng + ?Sized>(&self, state: StateId, rng: &mut R) -> usize {
        argmax_random_tie(self.row(self.q_exploit(), state), 0.0, rng)
    }

    fn backup(&self, table: &[f64], t: &TabularTransition, extra: f64) -> f64 {
        let future = if t.terminated {
            0.0
        } else {
            self.row(table, t.next_state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
        };
        t.reward + extra + self.gamma * future
    }

    /// Applies one transition and returns the intrinsic reward it earned.
    pub fn observe(&mut self, t: &TabularTransition) -> f64 {
        let idx = t.state * self.n_actions + t.action;
        self.visits[idx] += 1;
        let n = self.visits[idx];
        let alpha = self.learning_rate.alpha(self.horizon, n);
        let bonus = self.bonus(n);

        let target = self.backup(&self.q_explore, t, bonus);
        self.q_explore[idx] += alpha * (target - self.q_explore[idx]);

        if let Some(exploit) = self.q_exploit.take() {
            let target = self.backup(&exploit, t, 0.0);
            let mut exploit = exploit;
            exploit[idx] += alpha * (target - exploit[idx]);
            self.q_exploit = Some(exploit);
        }
        bonus
    }

    /// Writes a table as a CSV matrix: one row per state, one column per action.
    pub fn write_table_csv<W: Write>(&self, table: &[f64], out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<String> = (0..self.n_actions).map(|a| format!("a{a}")).collect();
        w.write_record(&header)?;
        for s in 0..self.n_states {
            w.write_record(self.row(table, s).iter().map(|v| format!("{v}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_visits_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<String> = (0..self.n_actions).map(|a| format!("a{a}")).collect();
        w.write_record(&header)?;
        for s in 0..self.n_states {
            let row = &self.visits[s * self.n_actions..(s + 1) * self.n_actions];
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn set_q_exploit(&mut self, table: Vec<f64>) {
        self.q_exploit = Some(table);
    }
}
