//! Python module `hyperx`: GridNav, the tabular agents, the schedules, the
//! exact oracle and the experiment harness.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;

use engine::env::{Cell, EnvConfig, EpisodicEnv};
use engine::harness::config::OPTIMISM;
use engine::harness::{verify, ExperimentConfig, HarnessError, SummaryRow};
use engine::schedules::{self, BetaSchedule, LengthMode};
use engine::tabular::{AgentMode, LearningRate, Phase, TabularTransition};
use engine::Prng;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn harness_err(e: HarnessError) -> PyErr {
    match e {
        HarnessError::Config(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn parse_mode(mode: &str) -> PyResult<AgentMode> {
    match mode {
        "ucbq" => Ok(AgentMode::Ucbq),
        "decouple" => Ok(AgentMode::Decouple),
        "hyper" => Ok(AgentMode::Hyper),
        "qlearning" => Ok(AgentMode::Qlearning),
        _ => Err(PyValueError::new_err(format!("unknown mode `{mode}`"))),
    }
}

/// The grid room. Keyword arguments override the 30x30 warm-up defaults.
#[pyclass(name = "GridNav")]
struct PyGridNav {
    inner: engine::env::GridNav,
    rng: Prng,
}

#[pymethods]
impl PyGridNav {
    #[new]
    #[pyo3(signature = (
        width = 30, height = 30, start = (15, 15), optimal_goal = (29, 29), suboptimal_goal = (12, 12),
        optimal_reward = 1.0, suboptimal_reward = 0.1, horizon = 100, gamma = 0.98, seed = 0
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        width: usize,
        height: usize,
        start: (usize, usize),
        optimal_goal: (usize, usize),
        suboptimal_goal: (usize, usize),
        optimal_reward: f64,
        suboptimal_reward: f64,
        horizon: usize,
        gamma: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let cfg = EnvConfig {
            width,
            height,
            start: Cell::new(start.0, start.1),
            optimal_goal: Cell::new(optimal_goal.0, optimal_goal.1),
            suboptimal_goal: Cell::new(suboptimal_goal.0, suboptimal_goal.1),
            optimal_reward,
            suboptimal_reward,
            horizon,
            gamma,
        };
        Ok(Self {
            inner: engine::env::GridNav::new(cfg).map_err(value_err)?,
            rng: Prng::seed_from_u64(seed),
        })
    }

    #[getter]
    fn n_states(&self) -> usize {
        self.inner.config().n_states()
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.config().horizon
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.config().gamma
    }

    fn state_of(&self, x: usize, y: usize) -> usize {
        self.inner.config().state_of(Cell::new(x, y))
    }

    fn cell_of(&self, state: usize) -> (usize, usize) {
        let c = self.inner.config().cell_of(state);
        (c.x, c.y)
    }

    fn reset(&mut self) -> usize {
        EpisodicEnv::reset(&mut self.inner, &mut self.rng)
    }

    /// Returns `(next_state, reward, terminated, truncated)`.
    fn step(&mut self, action: usize) -> PyResult<(usize, f64, bool, bool)> {
        let out = EpisodicEnv::step(&mut self.inner, action, &mut self.rng).map_err(value_err)?;
        Ok((out.next_state, out.reward, out.terminated, out.truncated))
    }

    /// `V*_h(s)` for `h = 0..=H`, from exact value iteration.
    fn optimal_values(&self) -> PyResult<Vec<Vec<f64>>> {
        let cfg = self.inner.config();
        let sol = engine::oracle::value_iteration(&cfg.to_mdp(), cfg.horizon, cfg.gamma).map_err(value_err)?;
        Ok(sol.v_star)
    }

    /// `V^pi_1(start)` of the greedy policy on a stationary `Q` table,
    /// ties split uniformly.
    fn greedy_value(&self, table: Vec<f64>) -> PyResult<f64> {
        let cfg = self.inner.config();
        if table.len() != cfg.n_states() * 4 {
            return Err(PyValueError::new_err("table must have n_states * 4 entries"));
        }
        let policy = engine::oracle::GreedyPolicy::stationary(table, 4);
        let v = engine::oracle::policy_evaluation(&cfg.to_mdp(), &policy, cfg.horizon, cfg.gamma).map_err(value_err)?;
        Ok(v.initial_value(cfg.state_of(cfg.start)))
    }
}

/// A tabular agent; `mode` is one of `qlearning`, `ucbq`, `decouple`, `hyper`.
#[pyclass(name = "TabularAgent")]
struct PyTabularAgent {
    inner: engine::tabular::TabularAgent,
    rng: Prng,
}

#[pymethods]
impl PyTabularAgent {
    #[new]
    #[pyo3(signature = (mode, n_states, n_actions, horizon, gamma, beta, optimism = OPTIMISM, alpha = None, seed = 0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        mode: &str,
        n_states: usize,
        n_actions: usize,
        horizon: usize,
        gamma: f64,
        beta: f64,
        optimism: f64,
        alpha: Option<f64>,
        seed: u64,
    ) -> PyResult<Self> {
        if n_states == 0 || n_actions == 0 || horizon == 0 {
            return Err(PyValueError::new_err("n_states, n_actions and horizon must be positive"));
        }
        let lr = match alpha {
            Some(alpha) if alpha > 0.0 && alpha <= 1.0 => LearningRate::Constant { alpha },
            Some(alpha) => return Err(PyValueError::new_err(format!("alpha {alpha} not in (0, 1]"))),
            None => LearningRate::HorizonDecay,
        };
        Ok(Self {
            inner: engine::tabular::TabularAgent::with_optimism(
                parse_mode(mode)?,
                n_states,
                n_actions,
                horizon,
                gamma,
                beta,
                lr,
                optimism,
            ),
            rng: Prng::seed_from_u64(seed),
        })
    }

    /// `explore` picks the bonus-carrying table, otherwise the exploitation one.
    #[pyo3(signature = (state, explore = true))]
    fn act(&mut self, state: usize, explore: bool) -> PyResult<usize> {
        if state >= self.inner.n_states() {
            return Err(PyValueError::new_err(format!("state {state} out of range")));
        }
        let phase = if explore { Phase::Explore } else { Phase::Reposition };
        Ok(self.inner.select_action(state, phase, &mut self.rng))
    }

    /// Applies one update; returns the bonus earned.
    fn observe(&mut self, state: usize, action: usize, reward: f64, next_state: usize, terminated: bool) -> PyResult<f64> {
        let n = self.inner.n_states();
        if state >= n || next_state >= n || action >= self.inner.n_actions() {
            return Err(PyValueError::new_err("state or action out of range"));
        }
        Ok(self.inner.observe(&TabularTransition {
            state,
            action,
            reward,
            next_state,
            terminated,
        }))
    }

    #[getter]
    fn q_explore(&self) -> Vec<f64> {
        self.inner.q_explore().to_vec()
    }

    #[getter]
    fn q_exploit(&self) -> Vec<f64> {
        self.inner.q_exploit().to_vec()
    }

    #[getter]
    fn visits(&self) -> Vec<u64> {
        self.inner.visits().to_vec()
    }
}

/// Bounded geometric pmf `P(L = l)` on `{1, ..., H}`.
#[pyfunction]
fn bounded_geom_pmf(p: f64, horizon: usize, l: usize) -> PyResult<f64> {
    schedules::bounded_geom_pmf(p, horizon, l).map_err(value_err)
}

/// Geometric clamped to `H`: `P(min(G, H) = l)`.
#[pyfunction]
fn clamped_geom_pmf(p: f64, horizon: usize, l: usize) -> PyResult<f64> {
    schedules::clamped_geom_pmf(p, horizon, l).map_err(value_err)
}

/// `n` draws of the bounded geometric.
#[pyfunction]
#[pyo3(signature = (p, horizon, n, seed = 0))]
fn sample_bounded_geom(p: f64, horizon: usize, n: usize, seed: u64) -> PyResult<Vec<usize>> {
    use rand::Rng;
    let dist = schedules::BoundedGeometric::new(p, horizon).map_err(value_err)?;
    let mut rng = Prng::seed_from_u64(seed);
    Ok((0..n).map(|_| rng.sample(dist)).collect())
}

/// Repositioning lengths for episodes `1..=episodes` of a linearly decaying schedule.
#[pyfunction]
#[pyo3(signature = (p_start, p_end, decay_episodes, horizon, episodes, seed = 0))]
fn reposition_lengths(
    p_start: f64,
    p_end: f64,
    decay_episodes: usize,
    horizon: usize,
    episodes: usize,
    seed: u64,
) -> PyResult<Vec<usize>> {
    let s = schedules::RepositionSchedule::new(p_start, p_end, schedules::Decay::LinearPerEpisode, decay_episodes, horizon)
        .map_err(value_err)?;
    let mut rng = Prng::seed_from_u64(seed);
    Ok((1..=episodes)
        .map(|k| s.sample(k, LengthMode::Bounded, &mut rng).length)
        .collect())
}

/// `(beta, beta')` from the confidence-width formula.
#[pyfunction]
#[pyo3(signature = (d, horizon, total_steps, delta = 0.1, c_beta = 1.0, c_beta_prime = 1.0))]
fn theory_beta(d: usize, horizon: usize, total_steps: usize, delta: f64, c_beta: f64, c_beta_prime: f64) -> PyResult<(f64, f64)> {
    BetaSchedule {
        c_beta,
        c_beta_prime,
        d,
        horizon,
        total_steps,
        delta,
    }
    .theory_beta()
    .map_err(value_err)
}

fn summary_dict<'py>(py: Python<'py>, s: &SummaryRow) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mode", &s.mode)?;
    d.set_item("beta", s.beta)?;
    d.set_item("seed", s.seed)?;
    d.set_item("episodes", s.episodes)?;
    d.set_item("final_success_rate", s.final_success_rate)?;
    d.set_item("final_train_success_rate", s.final_train_success_rate)?;
    d.set_item("final_greedy_value", s.final_greedy_value)?;
    d.set_item("mean_intrinsic_return", s.mean_intrinsic_return)?;
    Ok(d)
}

/// Runs one training cell from a TOML config string (no files written);
/// returns the summary row as a dict.
#[pyfunction]
#[pyo3(signature = (config = "", beta = 0.01, seed = 0))]
fn run_cell<'py>(py: Python<'py>, config: &str, beta: f64, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let cfg = ExperimentConfig::from_toml_str(config, &[]).map_err(harness_err)?;
    cfg.validate().map_err(harness_err)?;
    let outcome = py
        .detach(|| engine::harness::run_cell(&cfg, beta, seed))
        .map_err(harness_err)?;
    let d = summary_dict(py, &outcome.summary)?;
    d.set_item("visitation_entropy", outcome.visitation.normalized_entropy())?;
    Ok(d)
}

/// Runs the beta x seed grid of a TOML config, writing the usual files.
#[pyfunction]
fn run_sweep<'py>(py: Python<'py>, config: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = ExperimentConfig::from_toml_str(config, &[]).map_err(harness_err)?;
    let (_, outcomes) = py.detach(|| engine::harness::run_experiment(&cfg)).map_err(harness_err)?;
    outcomes.iter().map(|o| summary_dict(py, &o.summary)).collect()
}

/// The invariant suite as `(name, passed, detail)` tuples.
#[pyfunction]
fn verify_invariants(py: Python<'_>) -> PyResult<Vec<(String, bool, String)>> {
    let checks = py.detach(verify::invariant_suite).map_err(harness_err)?;
    Ok(checks.into_iter().map(|c| (c.name, c.passed, c.detail)).collect())
}

#[pymodule]
fn hyperx(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGridNav>()?;
    m.add_class::<PyTabularAgent>()?;
    m.add_function(wrap_pyfunction!(bounded_geom_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(clamped_geom_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(sample_bounded_geom, m)?)?;
    m.add_function(wrap_pyfunction!(reposition_lengths, m)?)?;
    m.add_function(wrap_pyfunction!(theory_beta, m)?)?;
    m.add_function(wrap_pyfunction!(run_cell, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(verify_invariants, m)?)?;
    Ok(())
}
