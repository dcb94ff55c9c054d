//! Linear-UCB-Hyper: least-squares value iteration over a feature map with
//! an exploitation head, an optimistic head and a pessimistic head.
//!
//! Each episode first follows the exploitation head for `L` steps, with
//! `L` drawn from a geometric distribution on `{0, 1, ...}`, then the
//! optimistic head for the rest of the horizon. Weights are refit only after
//! episodes with `L = 0`. With `p = 1` every episode explores and refits,
//! which is LSVI-UCB.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{EnvError, EpisodicEnv, FeatureMap, StateId};
use crate::oracle::GreedyPolicy;
use crate::schedules::{LengthMode, RepositionSchedule};
use crate::tabular::Phase;
use crate::util::argmax_random_tie;
use crate::Prng;

/// Tolerance for treating two head values as tied.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LinearError {
    #[error("Gram matrix at step {step} is not positive definite (smallest pivot {pivot:e})")]
    NotPositiveDefinite { step: usize, pivot: f64 },
    #[error("bad linear configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Env(#[from] EnvError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearConfig {
    pub horizon: usize,
    /// Ridge regularizer.
    pub lambda: f64,
    /// Width of the optimistic bonus.
    pub beta: f64,
    /// Width of the pessimistic bonus.
    pub beta_prime: f64,
}

impl LinearConfig {
    pub fn validate(&self) -> Result<(), LinearError> {
        if self.horizon == 0 {
            return Err(LinearError::BadConfig("horizon must be positive".into()));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(LinearError::BadConfig(format!("lambda {} must be positive", self.lambda)));
        }
        if !(self.beta >= 0.0 && self.beta_prime >= 0.0) {
            return Err(LinearError::BadConfig("bonus widths must be non-negative".into()));
        }
        Ok(())
    }
}

/// One step of an episode; `step` is 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearTransition {
    pub step: usize,
    pub state: StateId,
    pub action: usize,
    pub reward: f64,
    pub next_state: StateId,
    pub terminated: bool,
}

/// The three heads and the raw bonus at one `(h, s, a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QHeadEval {
    pub exploit: f64,
    pub optimistic: f64,
    pub pessimistic: f64,
    /// `sqrt(phi^T Lambda^-1 phi)` before scaling.
    pub bonus: f64,
}

/// Per-step record of one refit, written as a JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefitRecord {
    /// 1-based refit counter.
    pub refit: usize,
    /// Episodes in the replay when the refit ran.
    pub episodes: usize,
    /// 1-based step.
    pub step: usize,
    pub samples: u64,
    pub norm_exploit: f64,
    pub norm_optimistic: f64,
    pub norm_pessimistic: f64,
    /// `2 H sqrt(d k / lambda)`.
    pub norm_bound: f64,
    pub min_pivot: f64,
}

impl RefitRecord {
    pub fn within_bound(&self) -> bool {
        let slack = 1e-9;
        self.norm_optimistic <= self.norm_bound + slack && self.norm_pessimistic <= self.norm_bound + slack
    }
}

pub fn write_refits_jsonl<W: Write>(records: &[RefitRecord], mut out: W) -> Result<(), serde_json::Error> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(serde_json::Error::io)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Aggregate {
    count: u64,
    reward_sum: f64,
}

/// Replay key: `(s, a, s', terminated)`.
type Key = (StateId, usize, StateId, bool);

#[derive(Debug, Clone)]
pub struct LinearModel {
    cfg: LinearConfig,
    n_states: usize,
    n_actions: usize,
    dim: usize,
    /// `phi(s, a)` at index `s * A + a`.
    phi: Vec<DVector<f64>>,
    gram: Vec<DMatrix<f64>>,
    replay: Vec<BTreeMap<Key, Aggregate>>,
    episodes: usize,
    refits: usize,
    w_exploit: Vec<DVector<f64>>,
    w_optimistic: Vec<DVector<f64>>,
    w_pessimistic: Vec<DVector<f64>>,
    /// Head tables frozen at the last refit, `[h][s * A + a]`.
    q_exploit: Vec<Vec<f64>>,
    q_optimistic: Vec<Vec<f64>>,
    q_pessimistic: Vec<Vec<f64>>,
    bonus: Vec<Vec<f64>>,
}

fn clip(x: f64, horizon: usize) -> f64 {
    x.clamp(0.0, horizon as f64)
}

impl LinearModel {
    pub fn new<F: FeatureMap + ?Sized>(
        features: &F,
        n_states: usize,
        n_actions: usize,
        cfg: LinearConfig,
    ) -> Result<Self, LinearError> {
        cfg.validate()?;
        let dim = features.dim();
        if dim == 0 {
            return Err(LinearError::BadConfig("feature dimension must be positive".into()));
        }
        let mut phi = Vec::with_capacity(n_states * n_actions);
        for s in 0..n_states {
            for a in 0..n_actions {
                phi.push(DVector::from_vec(features.features(s, a)));
            }
        }
        let h = cfg.horizon;
        let pairs = n_states * n_actions;
        let mut model = Self {
            cfg,
            n_states,
            n_actions,
            dim,
            phi,
            gram: vec![DMatrix::identity(dim, dim) * cfg.lambda; h],
            replay: vec![BTreeMap::new(); h],
            episodes: 0,
            refits: 0,
            w_exploit: vec![DVector::zeros(dim); h],
            w_optimistic: vec![DVector::zeros(dim); h],
            w_pessimistic: vec![DVector::zeros(dim); h],
            q_exploit: vec![vec![0.0; pairs]; h],
            q_optimistic: vec![vec![0.0; pairs]; h],
            q_pessimistic: vec![vec![0.0; pairs]; h],
            bonus: vec![vec![0.0; pairs]; h],
        };
        // fresh heads: Lambda = lambda I, all weights zero
        let inv = DMatrix::identity(dim, dim) / cfg.lambda;
        for step in 0..h {
            model.rebuild_heads(step, &inv);
        }
        Ok(model)
    }

    pub fn config(&self) -> &LinearConfig {
        &self.cfg
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Episodes recorded so far.
    pub fn episodes(&self) -> usize {
        self.episodes
    }

    pub fn refits(&self) -> usize {
        self.refits
    }

    /// Current `Lambda_h`, including every recorded transition.
    pub fn gram(&self, step: usize) -> &DMatrix<f64> {
        &self.gram[step]
    }

    pub fn weights(&self, step: usize) -> (&DVector<f64>, &DVector<f64>, &DVector<f64>) {
        (&self.w_exploit[step], &self.w_optimistic[step], &self.w_pessimistic[step])
    }

    /// Number of replayed samples at `step`.
    pub fn samples(&self, step: usize) -> u64 {
        self.replay[step].values().map(|g| g.count).sum()
    }

    pub fn eval(&self, step: usize, state: StateId, action: usize) -> QHeadEval {
        let i = state * self.n_actions + action;
        QHeadEval {
            exploit: self.q_exploit[step][i],
            optimistic: self.q_optimistic[step][i],
            pessimistic: self.q_pessimistic[step][i],
            bonus: self.bonus[step][i],
        }
    }

    pub fn exploit_table(&self, step: usize) -> &[f64] {
        &self.q_exploit[step]
    }

    pub fn optimistic_table(&self, step: usize) -> &[f64] {
        &self.q_optimistic[step]
    }

    pub fn pessimistic_table(&self, step: usize) -> &[f64] {
        &self.q_pessimistic[step]
    }

    /// Greedy policy of the exploitation head, ties split uniformly.
    pub fn exploit_policy(&self) -> GreedyPolicy {
        GreedyPolicy::per_step(self.q_exploit.clone(), self.n_actions, TIE_TOL)
    }

    fn row<'a>(&self, table: &'a [f64], state: StateId) -> &'a [f64] {
        &table[state * self.n_actions..(state + 1) * self.n_actions]
    }

    /// Greedy action of the phase's head at 0-based `step`.
    pub fn act(&self, state: StateId, step: usize, phase: Phase, rng: &mut Prng) -> usize {
        let table = match phase {
            Phase::Reposition => &self.q_exploit[step],
            Phase::Explore => &self.q_optimistic[step],
        };
        argmax_random_tie(self.row(table, state), TIE_TOL, rng)
    }

    /// Adds a transition to the replay and to `Lambda_h`.
    pub fn record(&mut self, t: &LinearTransition) {
        let phi = &self.phi[t.state * self.n_actions + t.action];
        self.gram[t.step].ger(1.0, phi, phi, 1.0);
        let g = self.replay[t.step]
            .entry((t.state, t.action, t.next_state, t.terminated))
            .or_default();
        g.count += 1;
        g.reward_sum += t.reward;
    }

    /// Marks the end of an episode's recording.
    pub fn finish_episode(&mut self) {
        self.episodes += 1;
    }

    /// `Lambda_h` recomputed from the replay, for cross-checking the
    /// incremental one.
    pub fn gram_from_replay(&self, step: usize) -> DMatrix<f64> {
        let mut g = DMatrix::identity(self.dim, self.dim) * self.cfg.lambda;
        for (&(s, a, _, _), agg) in &self.replay[step] {
            let phi = &self.phi[s * self.n_actions + a];
            g.ger(agg.count as f64, phi, phi, 1.0);
        }
        g
    }

    fn factor(&self, step: usize) -> Result<(Cholesky<f64, Dyn>, f64), LinearError> {
        let chol = Cholesky::new(self.gram[step].clone()).ok_or(LinearError::NotPositiveDefinite {
            step: step + 1,
            pivot: f64::NAN,
        })?;
        let pivot = chol.l_dirty().diagonal().iter().map(|l| l * l).fold(f64::INFINITY, f64::min);
        if pivot.is_nan() || pivot <= self.cfg.lambda * 1e-9 {
            return Err(LinearError::NotPositiveDefinite { step: step + 1, pivot });
        }
        Ok((chol, pivot))
    }

    fn rebuild_heads(&mut self, step: usize, inv: &DMatrix<f64>) {
        let h = self.cfg.horizon;
        for (i, phi) in self.phi.iter().enumerate() {
            let bonus = (inv * phi).dot(phi).max(0.0).sqrt();
            self.bonus[step][i] = bonus;
            self.q_exploit[step][i] = clip(self.w_exploit[step].dot(phi), h);
            self.q_optimistic[step][i] = clip(self.w_optimistic[step].dot(phi) + self.cfg.beta * bonus, h);
            self.q_pessimistic[step][i] = clip(self.w_pessimistic[step].dot(phi) - self.cfg.beta_prime * bonus, h);
        }
    }

    fn max_per_state(&self, table: &[f64]) -> Vec<f64> {
        (0..self.n_states)
            .map(|s| self.row(table, s).iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }

    /// Backward least-squares value iteration over the whole replay.
    pub fn refit(&mut self) -> Result<Vec<RefitRecord>, LinearError> {
        let horizon = self.cfg.horizon;
        self.refits += 1;
        let bound = 2.0 * horizon as f64 * (self.dim as f64 * self.episodes.max(1) as f64 / self.cfg.lambda).sqrt();
        let mut next = [vec![0.0; self.n_states], vec![0.0; self.n_states], vec![0.0; self.n_states]];
        let mut records = Vec::with_capacity(horizon);
        for step in (0..horizon).rev() {
            let (chol, pivot) = self.factor(step)?;
            let mut rhs = [DVector::zeros(self.dim), DVector::zeros(self.dim), DVector::zeros(self.dim)];
            for (&(s, a, s_next, terminated), agg) in &self.replay[step] {
                let phi = &self.phi[s * self.n_actions + a];
                for (head, b) in rhs.iter_mut().enumerate() {
                    let future = if terminated { 0.0 } else { next[head][s_next] };
                    b.axpy(agg.reward_sum + agg.count as f64 * future, phi, 1.0);
                }
            }
            let [r0, r1, r2] = rhs;
            self.w_exploit[step] = chol.solve(&r0);
            self.w_optimistic[step] = chol.solve(&r1);
            self.w_pessimistic[step] = chol.solve(&r2);
            let inv = chol.inverse();
            self.rebuild_heads(step, &inv);
            next = [
                self.max_per_state(&self.q_exploit[step]),
                self.max_per_state(&self.q_optimistic[step]),
                self.max_per_state(&self.q_pessimistic[step]),
            ];
            records.push(RefitRecord {
                refit: self.refits,
                episodes: self.episodes,
                step: step + 1,
                samples: self.samples(step),
                norm_exploit: self.w_exploit[step].norm(),
                norm_optimistic: self.w_optimistic[step].norm(),
                norm_pessimistic: self.w_pessimistic[step].norm(),
                norm_bound: bound,
                min_pivot: pivot,
            });
        }
        records.reverse();
        Ok(records)
    }
}

/// What happened in one episode of [`run_episode_linear`].
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEpisode {
    /// Steps taken with the exploitation head.
    pub reposition_length: usize,
    /// `L = 0`: the episode explored throughout and triggered a refit.
    pub full_exploration: bool,
    pub transitions: Vec<LinearTransition>,
    pub extrinsic_return: f64,
    /// Diagnostics of the refit this episode triggered, if any.
    pub refit: Option<Vec<RefitRecord>>,
}

/// Runs episode `k` (1-based): reposition with the exploitation head for
/// `L^k` steps, explore with the optimistic head afterwards, record every
/// transition, and refit if `L^k = 0`.
pub fn run_episode_linear<E: EpisodicEnv + ?Sized>(
    model: &mut LinearModel,
    env: &mut E,
    schedule: &RepositionSchedule,
    k: usize,
    rng: &mut Prng,
) -> Result<LinearEpisode, LinearError> {
    let draw = schedule.sample(k, LengthMode::Unbounded, rng);
    let mut state = env.reset(rng);
    let mut transitions = Vec::new();
    let mut ret = 0.0;
    for step in 0..model.cfg.horizon {
        let phase = if step < draw.length {
            Phase::Reposition
        } else {
            Phase::Explore
        };
        let action = model.act(state, step, phase, rng);
        let out = env.step(action, rng)?;
        let t = LinearTransition {
            step,
            state,
            action,
            reward: out.reward,
            next_state: out.next_state,
            terminated: out.terminated,
        };
        model.record(&t);
        transitions.push(t);
        ret += out.reward;
        state = out.next_state;
        if out.done() {
            break;
        }
    }
    model.finish_episode();
    let refit = if draw.full_exploration {
        Some(model.refit()?)
    } else {
        None
    };
    Ok(LinearEpisode {
        reposition_length: draw.length,
        full_exploration: draw.full_exploration,
        transitions,
        extrinsic_return: ret,
        refit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::OneHot;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn model(n_states: usize, n_actions: usize, horizon: usize, beta: f64) -> LinearModel {
        let cfg = LinearConfig {
            horizon,
            lambda: 1.0,
            beta,
            beta_prime: beta,
        };
        LinearModel::new(&OneHot::new(n_states, n_actions), n_states, n_actions, cfg).unwrap()
    }

    #[test]
    fn fresh_heads() {
        let m = model(3, 2, 4, 0.7);
        for h in 0..4 {
            for s in 0..3 {
                for a in 0..2 {
                    let e = m.eval(h, s, a);
                    assert_eq!(e.exploit, 0.0);
                    assert_relative_eq!(e.optimistic, 0.7, epsilon = 1e-15);
                    assert_eq!(e.pessimistic, 0.0);
                    assert_relative_eq!(e.bonus, 1.0, epsilon = 1e-15);
                }
            }
        }
        // large beta clips at H
        assert_eq!(model(3, 2, 4, 50.0).eval(0, 0, 0).optimistic, 4.0);
    }

    #[test]
    fn empty_refit_keeps_zero_weights() {
        let mut m = model(2, 2, 3, 0.5);
        let records = m.refit().unwrap();
        assert_eq!(records.len(), 3);
        for h in 0..3 {
            let (w, wo, wp) = m.weights(h);
            assert_eq!(w.norm() + wo.norm() + wp.norm(), 0.0);
            assert_eq!(m.gram(h), &DMatrix::identity(4, 4));
        }
    }

    #[test]
    fn one_point_ridge_solution() {
        // one transition at the last step: Lambda_H = I + e e^T, w_H = e * r / 2
        let mut m = model(3, 2, 2, 0.0);
        let r = 0.8;
        m.record(&LinearTransition {
            step: 1,
            state: 1,
            action: 1,
            reward: r,
            next_state: 2,
            terminated: false,
        });
        m.finish_episode();
        m.refit().unwrap();
        let (w, _, _) = m.weights(1);
        let idx = OneHot::new(3, 2).index(1, 1);
        for i in 0..6 {
            let expect = if i == idx { r / 2.0 } else { 0.0 };
            assert_relative_eq!(w[i], expect, epsilon = 1e-15);
        }
        assert_relative_eq!(m.eval(1, 1, 1).exploit, r / 2.0, epsilon = 1e-15);
        assert_relative_eq!(m.gram(1)[(idx, idx)], 2.0);
        assert_relative_eq!(m.eval(1, 1, 1).bonus, (0.5f64).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn rewarded_action_wins_after_refit() {
        let mut m = model(2, 3, 1, 0.01);
        m.record(&LinearTransition {
            step: 0,
            state: 0,
            action: 2,
            reward: 1.0,
            next_state: 1,
            terminated: true,
        });
        m.finish_episode();
        m.refit().unwrap();
        let mut rng = Prng::seed_from_u64(0);
        for _ in 0..20 {
            assert_eq!(m.act(0, 0, Phase::Explore, &mut rng), 2);
            assert_eq!(m.act(0, 0, Phase::Reposition, &mut rng), 2);
        }
    }

    #[test]
    fn backup_chains_through_steps() {
        // step 0: (0,0) -> 1 with reward 0; step 1: (1,1) rewarded 1
        let mut m = model(2, 2, 2, 0.0);
        for _ in 0..3 {
            m.record(&LinearTransition {
                step: 0,
                state: 0,
                action: 0,
                reward: 0.0,
                next_state: 1,
                terminated: false,
            });
            m.record(&LinearTransition {
                step: 1,
                state: 1,
                action: 1,
                reward: 1.0,
                next_state: 0,
                terminated: false,
            });
            m.finish_episode();
        }
        m.refit().unwrap();
        // Q_2(1,1) = 3/4; Q_1(0,0) = 3 * (3/4) / 4
        assert_relative_eq!(m.eval(1, 1, 1).exploit, 0.75, epsilon = 1e-14);
        assert_relative_eq!(m.eval(0, 0, 0).exploit, 0.5625, epsilon = 1e-14);
    }

    #[test]
    fn incremental_gram_matches_replay() {
        let mut m = model(3, 2, 2, 1.0);
        let mut rng = Prng::seed_from_u64(9);
        use rand::Rng;
        for _ in 0..40 {
            m.record(&LinearTransition {
                step: rng.gen_range(0..2),
                state: rng.gen_range(0..3),
                action: rng.gen_range(0..2),
                reward: rng.gen(),
                next_state: rng.gen_range(0..3),
                terminated: rng.gen_bool(0.2),
            });
        }
        for h in 0..2 {
            assert_eq!(m.gram(h), &m.gram_from_replay(h));
        }
    }

    #[test]
    fn non_spd_gram_is_reported() {
        let mut m = model(2, 1, 1, 0.0);
        m.gram[0][(0, 0)] = -1.0;
        assert!(matches!(m.refit(), Err(LinearError::NotPositiveDefinite { step: 1, .. })));
    }

    #[test]
    fn refit_records_serialize() {
        let mut m = model(2, 2, 2, 0.1);
        m.finish_episode();
        let recs = m.refit().unwrap();
        let mut buf = Vec::new();
        write_refits_jsonl(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("{\"refit\":1,\"episodes\":1,\"step\":1,"));
        assert!(recs.iter().all(RefitRecord::within_bound));
    }

    #[test]
    fn rejects_bad_config() {
        let bad = LinearConfig {
            horizon: 3,
            lambda: 0.0,
            beta: 1.0,
            beta_prime: 1.0,
        };
        assert!(LinearModel::new(&OneHot::new(2, 2), 2, 2, bad).is_err());
    }
}
