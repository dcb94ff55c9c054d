//! Exploration workbench for episodic reinforcement learning.
//!
//! * [`env`]: the gridworld with an optimal and a suboptimal goal, and its
//!   one-hot linear-MDP feature map.
//! * [`schedules`]: bounded geometric repositioning lengths, truncation
//!   probability decay, confidence widths.
//! * [`tabular`]: Q-learning, UCB-Q, Decouple and repositioning agents.
//! * [`linear`]: least-squares value iteration with exploitation,
//!   optimistic and pessimistic heads.
//! * [`oracle`]: exact backward induction, policy evaluation and regret.
//! * [`harness`]: experiment configs, sweeps, metrics and the CLI plumbing.

pub mod env;
pub mod harness;
pub mod linear;
pub mod mdp;
pub mod oracle;
pub mod schedules;
pub mod tabular;
pub mod util;

/// The generator used everywhere: ChaCha with 8 rounds, a counter-based
/// stream cipher, so independent streams are cheap to derive.
pub type Prng = rand_chacha::ChaCha8Rng;
