//! Exact finite-horizon dynamic programming over enumerated models.
//!
//! Steps are 0-based internally: row `h` of a value table is step `h + 1`
//! of the episode, and row `H` is the all-zero terminal row.

use thiserror::Error;

use crate::env::StateId;
use crate::mdp::FiniteMdp;
use crate::util::argmax_set;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("policy has no entry for step {step}, state {state}")]
    PolicyIncomplete { step: usize, state: StateId },
    #[error("episode {episode} has negative regret {gap:e}; oracle and agent disagree on indexing")]
    NegativeRegret { episode: usize, gap: f64 },
    #[error("horizon must be positive")]
    ZeroHorizon,
}

/// Numerical slack below which a per-episode gap is treated as zero.
pub const REGRET_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub horizon: usize,
    pub gamma: f64,
    pub n_actions: usize,
    /// `v_star[h][s]`, `h` in `0..=H`.
    pub v_star: Vec<Vec<f64>>,
    /// `q_star[h][s * A + a]`, `h` in `0..H`.
    pub q_star: Vec<Vec<f64>>,
}

impl ExactSolution {
    /// `V*_1(s)`.
    pub fn initial_value(&self, state: StateId) -> f64 {
        self.v_star[0][state]
    }

    pub fn q(&self, step: usize, state: StateId, action: usize) -> f64 {
        self.q_star[step][state * self.n_actions + action]
    }

    /// An optimal deterministic policy (lowest-index action among ties).
    pub fn optimal_policy(&self) -> DeterministicPolicy {
        let n_states = self.v_star[0].len();
        let actions = self
            .q_star
            .iter()
            .map(|q| {
                (0..n_states)
                    .map(|s| argmax_set(&q[s * self.n_actions..(s + 1) * self.n_actions], 0.0)[0])
                    .collect()
            })
            .collect();
        DeterministicPolicy { actions }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyValue {
    pub v: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
}

impl PolicyValue {
    pub fn initial_value(&self, state: StateId) -> f64 {
        self.v[0][state]
    }
}

/// A possibly stochastic, possibly step-dependent policy.
pub trait Policy {
    /// Fills `out` (length `A`) with action probabilities at 0-based `step`.
    fn probabilities(&self, step: usize, state: StateId, out: &mut [f64]) -> Result<(), OracleError>;
}

/// `actions[h][s]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicPolicy {
    pub actions: Vec<Vec<usize>>,
}

impl DeterministicPolicy {
    pub fn stationary(actions: Vec<usize>, horizon: usize) -> Self {
        Self {
            actions: vec![actions; horizon],
        }
    }
}

impl Policy for DeterministicPolicy {
    fn probabilities(&self, step: usize, state: StateId, out: &mut [f64]) -> Result<(), OracleError> {
        let a = self
            .actions
            .get(step)
            .and_then(|row| row.get(state))
            .copied()
            .filter(|&a| a < out.len())
            .ok_or(OracleError::PolicyIncomplete { step, state })?;
        out.fill(0.0);
        out[a] = 1.0;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformPolicy;

impl Policy for UniformPolicy {
    fn probabilities(&self, _step: usize, _state: StateId, out: &mut [f64]) -> Result<(), OracleError> {
        let p = 1.0 / out.len() as f64;
        out.fill(p);
        Ok(())
    }
}

/// Greedy on a Q table, splitting mass uniformly over tied maxima: the
/// expected behaviour of an argmax with random tie-breaking.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyPolicy {
    /// One table per step, or a single table reused at every step.
    tables: Vec<Vec<f64>>,
    n_actions: usize,
    tol: f64,
}

impl GreedyPolicy {
    pub fn stationary(table: Vec<f64>, n_actions: usize) -> Self {
        Self {
            tables: vec![table],
            n_actions,
            tol: 0.0,
        }
    }

    pub fn per_step(tables: Vec<Vec<f64>>, n_actions: usize, tol: f64) -> Self {
        Self {
            tables,
            n_actions,
            tol,
        }
    }

    /// Deterministic rollout from `start` following the lowest-index greedy
    /// action; returns visited states including `start`.
    pub fn rollout(&self, mdp: &FiniteMdp, horizon: usize) -> Vec<StateId> {
        let mut s = mdp.start();
        let mut path = vec![s];
        for h in 0..horizon {
            let row = self.row(h, s);
            let a = argmax_set(row, self.tol)[0];
            let done = mdp.is_terminal(s, a);
            s = mdp.outcomes(s, a)[0].0;
            path.push(s);
            if done {
                break;
            }
        }
        path
    }

    fn row(&self, step: usize, state: StateId) -> &[f64] {
        let table = if self.tables.len() == 1 {
            &self.tables[0]
        } else {
            &self.tables[step]
        };
        &table[state * self.n_actions..(state + 1) * self.n_actions]
    }
}

impl Policy for GreedyPolicy {
    fn probabilities(&self, step: usize, state: StateId, out: &mut [f64]) -> Result<(), OracleError> {
        if self.tables.len() != 1 && step >= self.tables.len() {
            return Err(OracleError::PolicyIncomplete { step, state });
        }
        let best = argmax_set(self.row(step, state), self.tol);
        out.fill(0.0);
        let p = 1.0 / best.len() as f64;
        for a in best {
            out[a] = p;
        }
        Ok(())
    }
}

/// Backward induction from `V*_{H+1} = 0`.
pub fn value_iteration(mdp: &FiniteMdp, horizon: usize, gamma: f64) -> Result<ExactSolution, OracleError> {
    if horizon == 0 {
        return Err(OracleError::ZeroHorizon);
    }
    let (n_s, n_a) = (mdp.n_states(), mdp.n_actions());
    let mut v_star = vec![vec![0.0; n_s]; horizon + 1];
    let mut q_star = vec![vec![0.0; n_s * n_a]; horizon];
    for h in (0..horizon).rev() {
        let (head, tail) = v_star.split_at_mut(h + 1);
        let next = &tail[0];
        for s in 0..n_s {
            let mut best = f64::NEG_INFINITY;
            for a in 0..n_a {
                let q = mdp.reward(s, a) + gamma * mdp.expected_next(s, a, next);
                q_star[h][s * n_a + a] = q;
                best = best.max(q);
            }
            head[h][s] = best;
        }
    }
    Ok(ExactSolution {
        horizon,
        gamma,
        n_actions: n_a,
        v_star,
        q_star,
    })
}

/// Exact `V^pi`, `Q^pi` by backward induction.
pub fn policy_evaluation<P: Policy + ?Sized>(
    mdp: &FiniteMdp,
    policy: &P,
    horizon: usize,
    gamma: f64,
) -> Result<PolicyValue, OracleError> {
    if horizon == 0 {
        return Err(OracleError::ZeroHorizon);
    }
    let (n_s, n_a) = (mdp.n_states(), mdp.n_actions());
    let mut v = vec![vec![0.0; n_s]; horizon + 1];
    let mut q = vec![vec![0.0; n_s * n_a]; horizon];
    let mut probs = vec![0.0; n_a];
    for h in (0..horizon).rev() {
        let (head, tail) = v.split_at_mut(h + 1);
        let next = &tail[0];
        for s in 0..n_s {
            policy.probabilities(h, s, &mut probs)?;
            let mut value = 0.0;
            for a in 0..n_a {
                let qa = mdp.reward(s, a) + gamma * mdp.expected_next(s, a, next);
                q[h][s * n_a + a] = qa;
                value += probs[a] * qa;
            }
            head[h][s] = value;
        }
    }
    Ok(PolicyValue { v, q })
}

/// Largest violation of `Q*_h = r + gamma P V*_{h+1}` and `V*_h = max_a Q*_h`,
/// recomputed term by term from the model's outcome lists.
pub fn bellman_residual(mdp: &FiniteMdp, sol: &ExactSolution) -> f64 {
    let n_a = mdp.n_actions();
    let mut worst: f64 = 0.0;
    for h in 0..sol.horizon {
        for s in 0..mdp.n_states() {
            let mut best = f64::NEG_INFINITY;
            for a in 0..n_a {
                let mut continuation = 0.0;
                if !mdp.is_terminal(s, a) {
                    for &(next, prob) in mdp.outcomes(s, a) {
                        continuation += prob * sol.v_star[h + 1][next];
                    }
                }
                let q = sol.q(h, s, a);
                worst = worst.max((q - (mdp.reward(s, a) + sol.gamma * continuation)).abs());
                best = best.max(q);
            }
            worst = worst.max((sol.v_star[h][s] - best).abs());
        }
    }
    for &v in &sol.v_star[sol.horizon] {
        worst = worst.max(v.abs());
    }
    worst
}

/// Cumulative regret `sum_k V*_1(s_1) - V^{pi_k}_1(s_1)`.
pub fn cumulative_regret(v_star: f64, v_pi: &[f64]) -> Result<Vec<f64>, OracleError> {
    let mut total = 0.0;
    v_pi.iter()
        .enumerate()
        .map(|(episode, &v)| {
            let gap = v_star - v;
            if gap < -REGRET_SLACK {
                return Err(OracleError::NegativeRegret { episode, gap });
            }
            total += gap.max(0.0);
            Ok(total)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvConfig;
    use crate::mdp::ModelTransition;
    use approx::assert_relative_eq;

    /// State 0 --a0--> 1 (absorbing, pays 1 per step via a1 terminate).
    fn two_state_chain() -> FiniteMdp {
        let t = |state, action, next_state, reward, terminated| ModelTransition {
            state,
            action,
            next_state,
            reward,
            terminated,
        };
        FiniteMdp::from_transitions(
            2,
            2,
            0,
            &[
                t(0, 0, 1, 0.0, false),
                t(0, 1, 0, 0.0, false),
                t(1, 0, 1, 1.0, true),
                t(1, 1, 1, 0.0, false),
            ],
        )
        .unwrap()
    }

    #[test]
    fn zero_rewards_give_zero_values() {
        let mut cfg = EnvConfig::warm_up(1.0, 0.1);
        cfg.width = 4;
        cfg.height = 4;
        cfg.start = crate::env::Cell::new(0, 0);
        cfg.optimal_goal = crate::env::Cell::new(3, 3);
        cfg.suboptimal_goal = crate::env::Cell::new(1, 1);
        let mut t = cfg.enumerate();
        for x in &mut t {
            x.reward = 0.0;
        }
        let mdp = FiniteMdp::from_transitions(16, 4, 0, &t).unwrap();
        let sol = value_iteration(&mdp, 10, 0.9).unwrap();
        assert!(sol.v_star.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn chain_hand_backup() {
        // h=3: V(1)=1, V(0)=0; h=2: V(0)=max(V3(1), V3(0))=1; h=1: V(0)=1.
        let mdp = two_state_chain();
        let sol = value_iteration(&mdp, 3, 1.0).unwrap();
        assert_eq!(sol.initial_value(0), 1.0);
        assert_eq!(sol.v_star[2][0], 0.0);
        assert_eq!(sol.v_star[1][0], 1.0);
        assert!(bellman_residual(&mdp, &sol) < 1e-12);

        let pi = sol.optimal_policy();
        let vpi = policy_evaluation(&mdp, &pi, 3, 1.0).unwrap();
        assert_eq!(vpi.v, sol.v_star);
    }

    #[test]
    fn chain_uniform_policy() {
        // H = 2, gamma = 1, uniform policy:
        // step 2: V(1) = 0.5, V(0) = 0
        // step 1: Q(0,a0) = V2(1) = 0.5, Q(0,a1) = V2(0) = 0 -> V(0) = 0.25
        //         Q(1,a0) = 1, Q(1,a1) = V2(1) = 0.5 -> V(1) = 0.75
        let mdp = two_state_chain();
        let v = policy_evaluation(&mdp, &UniformPolicy, 2, 1.0).unwrap();
        assert_relative_eq!(v.v[0][0], 0.25);
        assert_relative_eq!(v.v[0][1], 0.75);
        assert_relative_eq!(v.v[1][1], 0.5);
    }

    #[test]
    fn warm_up_optimal_value_is_goal_reward() {
        let mut cfg = EnvConfig::warm_up(1.0, 0.1);
        cfg.gamma = 1.0;
        let mdp = cfg.to_mdp();
        let sol = value_iteration(&mdp, 100, 1.0).unwrap();
        assert_eq!(sol.initial_value(mdp.start()), 1.0);
        assert!(bellman_residual(&mdp, &sol) <= 1e-10);
        // 27 steps are not enough, 28 are
        let short = value_iteration(&mdp, 27, 1.0).unwrap();
        assert!(short.initial_value(mdp.start()) < 1.0);
        let exact = value_iteration(&mdp, 28, 1.0).unwrap();
        assert_eq!(exact.initial_value(mdp.start()), 1.0);
    }

    #[test]
    fn discounting_agrees_when_reward_only_at_termination() {
        let mut cfg = EnvConfig::warm_up(1.0, 0.1);
        cfg.gamma = 0.99;
        let mdp = cfg.to_mdp();
        let undiscounted = value_iteration(&mdp, 100, 1.0).unwrap();
        let discounted = value_iteration(&mdp, 100, 0.99).unwrap();
        // both pick the optimal goal; the discounted value is R * gamma^27
        assert_relative_eq!(
            discounted.initial_value(mdp.start()),
            0.99f64.powi(27),
            epsilon = 1e-12
        );
        let pi = discounted.optimal_policy();
        let v = policy_evaluation(&mdp, &pi, 100, 1.0).unwrap();
        assert_relative_eq!(v.initial_value(mdp.start()), undiscounted.initial_value(mdp.start()));
    }

    #[test]
    fn greedy_policy_splits_ties() {
        let g = GreedyPolicy::stationary(vec![1.0, 1.0, 0.0, 2.0], 2);
        let mut out = [0.0; 2];
        g.probabilities(5, 0, &mut out).unwrap();
        assert_eq!(out, [0.5, 0.5]);
        g.probabilities(5, 1, &mut out).unwrap();
        assert_eq!(out, [0.0, 1.0]);
    }

    #[test]
    fn regret_sequences() {
        assert_eq!(cumulative_regret(1.0, &[1.0, 1.0, 1.0]).unwrap(), vec![0.0; 3]);
        let r = cumulative_regret(1.0, &[0.75; 4]).unwrap();
        assert_eq!(r, vec![0.25, 0.5, 0.75, 1.0]);
        assert!(matches!(
            cumulative_regret(1.0, &[1.1]),
            Err(OracleError::NegativeRegret { .. })
        ));
        // tiny numerical overshoot is tolerated and clamped
        assert_eq!(cumulative_regret(1.0, &[1.0 + 1e-12]).unwrap(), vec![0.0]);
    }

    #[test]
    fn incomplete_policy_rejected() {
        let mdp = two_state_chain();
        let pi = DeterministicPolicy { actions: vec![vec![0]] };
        assert!(matches!(
            policy_evaluation(&mdp, &pi, 1, 1.0),
            Err(OracleError::PolicyIncomplete { step: 0, state: 1 })
        ));
    }
}
