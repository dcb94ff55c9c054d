//! One `(beta, seed)` cell of a tabular experiment.

use rand::SeedableRng;

use super::config::ExperimentConfig;
use super::metrics::{MetricsRecord, SummaryRow, VisitationMatrix};
use super::HarnessError;
use crate::env::{Action, EnvConfig, GridNav};
use crate::mdp::FiniteMdp;
use crate::oracle::{policy_evaluation, GreedyPolicy};
use crate::schedules::LengthMode;
use crate::tabular::{AgentMode, Phase, TabularAgent, TabularTransition};
use crate::Prng;

/// Stream ids carved out of one cell seed.
const TRAIN_STREAM: u64 = 0;
const EVAL_STREAM: u64 = 1;

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub records: Vec<MetricsRecord>,
    pub visitation: VisitationMatrix,
    pub summary: SummaryRow,
    pub agent: TabularAgent,
}

pub fn build_agent(cfg: &ExperimentConfig, beta: f64) -> TabularAgent {
    TabularAgent::with_optimism(
        cfg.agent.mode,
        cfg.env.n_states(),
        Action::COUNT,
        cfg.env.horizon,
        cfg.env.gamma,
        beta,
        cfg.agent.learning_rate,
        cfg.agent.optimism,
    )
}

fn stream(seed: u64, id: u64) -> Prng {
    let mut rng = Prng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// `V^pi_1(start)` of the greedy exploitation policy, ties split uniformly.
pub fn greedy_oracle_value(agent: &TabularAgent, mdp: &FiniteMdp, env: &EnvConfig) -> f64 {
    let policy = GreedyPolicy::stationary(agent.q_exploit().to_vec(), agent.n_actions());
    policy_evaluation(mdp, &policy, env.horizon, env.gamma)
        .expect("stationary policy covers every step")
        .initial_value(mdp.start())
}

/// Rolls the greedy exploitation policy out once without learning; true if
/// it enters the optimal goal.
pub fn greedy_rollout_succeeds(agent: &TabularAgent, env: &mut GridNav, rng: &mut Prng) -> bool {
    let mut s = env.reset();
    loop {
        let a = agent.exploit_action(s, rng);
        let out = env.step(Action::from_index(a).expect("agent acts in range")).expect("episode running");
        if out.terminated {
            return out.next_state == env.config().state_of(env.config().optimal_goal);
        }
        if out.truncated {
            return false;
        }
        s = out.next_state;
    }
}

/// Runs one cell for `cfg.total_steps` environment steps. Fully
/// determined by `(cfg, beta, seed)`.
pub fn run_cell(cfg: &ExperimentConfig, beta: f64, seed: u64) -> Result<CellOutcome, HarnessError> {
    let env_cfg = &cfg.env;
    let mut env = GridNav::new(env_cfg.clone()).map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut eval_env = env.clone();
    let mdp = env_cfg.to_mdp();
    let optimal_state = env_cfg.state_of(env_cfg.optimal_goal);
    let schedule = match cfg.agent.mode {
        AgentMode::Hyper => Some(cfg.reposition_schedule()?),
        _ => None,
    };

    let mut agent = build_agent(cfg, beta);
    let mut rng = stream(seed, TRAIN_STREAM);
    let mut eval_rng = stream(seed, EVAL_STREAM);
    let mut visitation = VisitationMatrix::for_env(env_cfg);
    let mut records = Vec::new();
    let mut steps: u64 = 0;
    let mut next_eval = cfg.eval_every;
    let mut episode = 0;

    while steps < cfg.total_steps {
        episode += 1;
        let (reposition_length, p) = match &schedule {
            Some(s) => {
                let draw = s.sample(episode, LengthMode::Bounded, &mut rng);
                (Some(draw.length), Some(s.p_at(episode)))
            }
            None => (None, None),
        };
        let mut state = env.reset();
        let mut extrinsic = 0.0;
        let mut intrinsic = 0.0;
        let mut success = false;
        let mut length = 0;
        let mut budget_cut = false;
        loop {
            // steps 1..l-1 reposition, steps l.. explore
            let phase = match reposition_length {
                Some(l) if length + 1 < l => Phase::Reposition,
                _ => Phase::Explore,
            };
            let action = agent.select_action(state, phase, &mut rng);
            let out = env
                .step(Action::from_index(action).expect("agent acts in range"))
                .map_err(|e| HarnessError::Assertion(e.to_string()))?;
            visitation.record(state);
            intrinsic += agent.observe(&TabularTransition {
                state,
                action,
                reward: out.reward,
                next_state: out.next_state,
                terminated: out.terminated,
            });
            extrinsic += out.reward;
            length += 1;
            steps += 1;
            if out.terminated && out.next_state == optimal_state {
                success = true;
            }
            state = out.next_state;
            if out.done() {
                break;
            }
            if steps >= cfg.total_steps {
                budget_cut = true;
                break;
            }
        }
        if !intrinsic.is_finite() || agent.q_explore().iter().any(|v| !v.is_finite()) {
            return Err(HarnessError::Assertion(format!("non-finite values in episode {episode}")));
        }
        let greedy_success = greedy_rollout_succeeds(&agent, &mut eval_env, &mut eval_rng);
        let greedy_oracle_value = if steps >= next_eval || steps >= cfg.total_steps {
            while next_eval <= steps {
                next_eval += cfg.eval_every;
            }
            Some(greedy_oracle_value(&agent, &mdp, env_cfg))
        } else {
            None
        };
        records.push(MetricsRecord {
            episode,
            env_steps: steps,
            length,
            extrinsic_return: extrinsic,
            intrinsic_return: intrinsic,
            success,
            greedy_success,
            greedy_oracle_value,
            reposition_length,
            p,
            budget_cut,
        });
    }

    if visitation.total() != steps {
        return Err(HarnessError::Assertion(format!(
            "visitation total {} differs from step count {steps}",
            visitation.total()
        )));
    }
    let summary = summarize(cfg, beta, seed, &records, &agent, &mdp);
    Ok(CellOutcome {
        records,
        visitation,
        summary,
        agent,
    })
}

fn summarize(
    cfg: &ExperimentConfig,
    beta: f64,
    seed: u64,
    records: &[MetricsRecord],
    agent: &TabularAgent,
    mdp: &FiniteMdp,
) -> SummaryRow {
    let complete: Vec<&MetricsRecord> = records.iter().filter(|r| !r.budget_cut).collect();
    let window = &complete[complete.len().saturating_sub(cfg.final_window)..];
    let rate = |f: fn(&MetricsRecord) -> bool| {
        if window.is_empty() {
            0.0
        } else {
            window.iter().filter(|r| f(r)).count() as f64 / window.len() as f64
        }
    };
    let mean_intrinsic = if window.is_empty() {
        0.0
    } else {
        window.iter().map(|r| r.intrinsic_return).sum::<f64>() / window.len() as f64
    };
    SummaryRow {
        mode: cfg.agent.mode.as_str().to_string(),
        beta,
        seed,
        episodes: records.len(),
        final_success_rate: rate(|r| r.greedy_success),
        final_train_success_rate: rate(|r| r.success),
        final_greedy_value: greedy_oracle_value(agent, mdp, &cfg.env),
        mean_intrinsic_return: mean_intrinsic,
    }
}
