//! Repositioning-length distributions, truncation-probability decay and
//! the confidence-width formulas used by the linear agent.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("truncation probability must lie in (0, 1], got {0}")]
    BadProbability(f64),
    #[error("horizon must be positive")]
    ZeroHorizon,
    #[error("p_end ({end}) must not exceed p_start ({start})")]
    IncreasingDecay { start: f64, end: f64 },
    #[error("total episode count must be positive")]
    ZeroEpisodes,
    #[error("beta schedule parameters are invalid: {0}")]
    BadBetaParameters(&'static str),
}

fn check_p(p: f64) -> Result<(), ScheduleError> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(ScheduleError::BadProbability(p))
    }
}

/// `1 - (1 - p)^H`, the geometric mass on `{1, ..., H}`.
fn bounded_mass(p: f64, horizon: usize) -> f64 {
    if p >= 1.0 {
        1.0
    } else {
        -f64::exp_m1(horizon as f64 * f64::ln_1p(-p))
    }
}

/// `P(L = l)` for the geometric distribution renormalized onto `{1, ..., H}`.
pub fn bounded_geom_pmf(p: f64, horizon: usize, l: usize) -> Result<f64, ScheduleError> {
    check_p(p)?;
    if horizon == 0 {
        return Err(ScheduleError::ZeroHorizon);
    }
    if l == 0 || l > horizon {
        return Ok(0.0);
    }
    let numerator = if p >= 1.0 {
        if l == 1 {
            1.0
        } else {
            0.0
        }
    } else {
        p * f64::exp((l - 1) as f64 * f64::ln_1p(-p))
    };
    Ok(numerator / bounded_mass(p, horizon))
}

/// `P(min(G, H) = l)` for `G ~ Geometric(p)` on `{1, 2, ...}`: the clamped
/// distribution whose tail mass piles up at `H`.
pub fn clamped_geom_pmf(p: f64, horizon: usize, l: usize) -> Result<f64, ScheduleError> {
    check_p(p)?;
    if horizon == 0 {
        return Err(ScheduleError::ZeroHorizon);
    }
    if l == 0 || l > horizon {
        return Ok(0.0);
    }
    if l == horizon {
        // P(G >= H) = (1 - p)^(H - 1)
        return Ok(if p >= 1.0 {
            if horizon == 1 {
                1.0
            } else {
                0.0
            }
        } else {
            f64::exp((horizon - 1) as f64 * f64::ln_1p(-p))
        });
    }
    Ok(p * (1.0 - p).powi(l as i32 - 1))
}

/// Geometric distribution truncated and renormalized to `{1, ..., H}`,
/// sampled by closed-form inversion of its CDF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundedGeometric {
    p: f64,
    horizon: usize,
    mass: f64,
}

impl BoundedGeometric {
    pub fn new(p: f64, horizon: usize) -> Result<Self, ScheduleError> {
        check_p(p)?;
        if horizon == 0 {
            return Err(ScheduleError::ZeroHorizon);
        }
        Ok(Self {
            p,
            horizon,
            mass: bounded_mass(p, horizon),
        })
    }

    pub fn pmf(&self, l: usize) -> f64 {
        bounded_geom_pmf(self.p, self.horizon, l).expect("validated on construction")
    }
}

impl rand::distributions::Distribution<usize> for BoundedGeometric {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.p >= 1.0 || self.horizon == 1 {
            return 1;
        }
        // CDF(l) = (1 - (1-p)^l) / mass; invert for u in [0, 1).
        let u: f64 = rng.gen();
        let l = (f64::ln_1p(-u * self.mass) / f64::ln_1p(-self.p)).ceil();
        (l as usize).clamp(1, self.horizon)
    }
}

/// Geometric distribution on `{0, 1, 2, ...}` with `P(G = 0) = p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricFromZero {
    p: f64,
}

impl GeometricFromZero {
    pub fn new(p: f64) -> Result<Self, ScheduleError> {
        check_p(p)?;
        Ok(Self { p })
    }
}

impl rand::distributions::Distribution<u64> for GeometricFromZero {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        if self.p >= 1.0 {
            return 0;
        }
        // 1 - u lies in (0, 1]
        let u: f64 = 1.0 - rng.gen::<f64>();
        let g = (u.ln() / f64::ln_1p(-self.p)).floor();
        if g >= u64::MAX as f64 {
            u64::MAX
        } else {
            g as u64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decay {
    None,
    LinearPerEpisode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LengthMode {
    /// Bounded geometric on `{1, ..., H}`.
    Bounded,
    /// Geometric on `{0, 1, ...}`, clamped to `H`.
    Unbounded,
}

/// One draw of the repositioning length for an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepositionDraw {
    pub length: usize,
    /// The raw geometric draw was zero: the whole episode explores.
    pub full_exploration: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepositionSchedule {
    pub p_start: f64,
    pub p_end: f64,
    pub decay: Decay,
    pub total_episodes: usize,
    pub horizon: usize,
}

impl RepositionSchedule {
    pub fn new(
        p_start: f64,
        p_end: f64,
        decay: Decay,
        total_episodes: usize,
        horizon: usize,
    ) -> Result<Self, ScheduleError> {
        check_p(p_start)?;
        check_p(p_end)?;
        if p_end > p_start {
            return Err(ScheduleError::IncreasingDecay {
                start: p_start,
                end: p_end,
            });
        }
        if total_episodes == 0 {
            return Err(ScheduleError::ZeroEpisodes);
        }
        if horizon == 0 {
            return Err(ScheduleError::ZeroHorizon);
        }
        Ok(Self {
            p_start,
            p_end,
            decay,
            total_episodes,
            horizon,
        })
    }

    /// Starts at `1 - gamma` and decays linearly to `1 / H`, which reads as
    /// 0.01 -> 0.005 for `gamma = 0.99`, `H = 200`.
    pub fn from_discount(gamma: f64, horizon: usize, total_episodes: usize) -> Result<Self, ScheduleError> {
        let p_start = 1.0 - gamma;
        let p_end = (1.0 / horizon as f64).min(p_start);
        Self::new(p_start, p_end, Decay::LinearPerEpisode, total_episodes, horizon)
    }

    pub fn constant(p: f64, horizon: usize) -> Result<Self, ScheduleError> {
        Self::new(p, p, Decay::None, 1, horizon)
    }

    /// Truncation probability for the 1-based episode `k`; episodes past
    /// `total_episodes` keep the final value.
    pub fn p_at(&self, episode: usize) -> f64 {
        match self.decay {
            Decay::None => self.p_start,
            Decay::LinearPerEpisode => {
                if self.total_episodes <= 1 || episode <= 1 {
                    return self.p_start;
                }
                if episode >= self.total_episodes {
                    return self.p_end;
                }
                let frac = (episode - 1) as f64 / (self.total_episodes - 1) as f64;
                let p = self.p_start + (self.p_end - self.p_start) * frac;
                p.clamp(self.p_end, self.p_start)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, episode: usize, mode: LengthMode, rng: &mut R) -> RepositionDraw {
        let p = self.p_at(episode);
        match mode {
            LengthMode::Bounded => {
                let length = rng.sample(BoundedGeometric::new(p, self.horizon).expect("validated"));
                RepositionDraw {
                    length,
                    full_exploration: false,
                }
            }
            LengthMode::Unbounded => {
                let g = rng.sample(GeometricFromZero::new(p).expect("validated"));
                RepositionDraw {
                    length: g.min(self.horizon as u64) as usize,
                    full_exploration: g == 0,
                }
            }
        }
    }
}

/// Confidence widths `beta = c * d * H * sqrt(ln(2 d T / delta))` for the
/// optimistic head and its pessimistic counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSchedule {
    pub c_beta: f64,
    pub c_beta_prime: f64,
    pub d: usize,
    pub horizon: usize,
    /// Total step budget `T = K * H`.
    pub total_steps: usize,
    pub delta: f64,
}

impl BetaSchedule {
    pub fn validate(&self) -> Result<(), ScheduleError> {
        if !(self.c_beta > 0.0 && self.c_beta_prime > 0.0) {
            return Err(ScheduleError::BadBetaParameters("constants must be positive"));
        }
        if self.d == 0 || self.horizon == 0 || self.total_steps == 0 {
            return Err(ScheduleError::BadBetaParameters("d, H and T must be positive"));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(ScheduleError::BadBetaParameters("delta must lie in (0, 1]"));
        }
        Ok(())
    }

    fn log_factor(&self) -> f64 {
        let arg = 2.0 * self.d as f64 * self.total_steps as f64 / self.delta;
        arg.ln().sqrt()
    }

    pub fn theory_beta(&self) -> Result<(f64, f64), ScheduleError> {
        self.validate()?;
        let base = self.d as f64 * self.horizon as f64 * self.log_factor();
        Ok((self.c_beta * base, self.c_beta_prime * base))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn deterministic_at_p_one() {
        assert_eq!(bounded_geom_pmf(1.0, 7, 1).unwrap(), 1.0);
        assert_eq!(bounded_geom_pmf(1.0, 7, 2).unwrap(), 0.0);
        let mut rng = <crate::Prng as rand::SeedableRng>::seed_from_u64(0);
        let s = RepositionSchedule::constant(1.0, 7).unwrap();
        for k in 1..50 {
            assert_eq!(s.sample(k, LengthMode::Bounded, &mut rng).length, 1);
            let d = s.sample(k, LengthMode::Unbounded, &mut rng);
            assert_eq!(d.length, 0);
            assert!(d.full_exploration);
        }
    }

    #[test]
    fn half_on_three_steps() {
        let v: Vec<f64> = (1..=3).map(|l| bounded_geom_pmf(0.5, 3, l).unwrap()).collect();
        assert_relative_eq!(v[0], 4.0 / 7.0, epsilon = 1e-15);
        assert_relative_eq!(v[1], 2.0 / 7.0, epsilon = 1e-15);
        assert_relative_eq!(v[2], 1.0 / 7.0, epsilon = 1e-15);
        assert_eq!(bounded_geom_pmf(0.5, 3, 0).unwrap(), 0.0);
        assert_eq!(bounded_geom_pmf(0.5, 3, 4).unwrap(), 0.0);
    }

    #[test]
    fn no_spike_at_horizon() {
        let at_h = bounded_geom_pmf(0.01, 200, 200).unwrap();
        let before = bounded_geom_pmf(0.01, 200, 199).unwrap();
        assert!(at_h < 2.0 * before);
        let clamped_h = clamped_geom_pmf(0.01, 200, 200).unwrap();
        let clamped_before = clamped_geom_pmf(0.01, 200, 199).unwrap();
        assert!(clamped_h > 2.0 * clamped_before);
        let total: f64 = (1..=200).map(|l| clamped_geom_pmf(0.01, 200, l).unwrap()).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_zero_probability() {
        assert_eq!(bounded_geom_pmf(0.0, 3, 1), Err(ScheduleError::BadProbability(0.0)));
        assert!(BoundedGeometric::new(0.0, 3).is_err());
        assert!(RepositionSchedule::new(0.01, 0.02, Decay::LinearPerEpisode, 10, 5).is_err());
    }

    #[test]
    fn linear_decay_endpoints() {
        let s = RepositionSchedule::from_discount(0.99, 200, 1000).unwrap();
        assert_relative_eq!(s.p_at(1), 0.01, epsilon = 1e-15);
        assert_relative_eq!(s.p_at(1000), 0.005, epsilon = 1e-15);
        assert_relative_eq!(s.p_at(5000), 0.005, epsilon = 1e-15);
        let mut prev = s.p_at(1);
        for k in 2..=1000 {
            let p = s.p_at(k);
            assert!(p <= prev && p >= 0.005);
            prev = p;
        }
    }

    #[test]
    fn theory_beta_values() {
        let b = BetaSchedule {
            c_beta: 1.0,
            c_beta_prime: 1.0,
            d: 1,
            horizon: 1,
            total_steps: 1,
            delta: 1.0,
        };
        let (beta, beta_prime) = b.theory_beta().unwrap();
        assert_relative_eq!(beta, 2f64.ln().sqrt(), epsilon = 1e-15);
        assert_eq!(beta, beta_prime);

        let doubled = BetaSchedule { horizon: 2, ..b };
        assert_relative_eq!(doubled.theory_beta().unwrap().0, 2.0 * beta, epsilon = 1e-15);

        let mut last = 0.0;
        for delta in [0.5, 1e-2, 1e-4, 1e-8, 1e-16] {
            let v = BetaSchedule { delta, ..b }.theory_beta().unwrap().0;
            assert!(v > last);
            last = v;
        }
        assert!(BetaSchedule { delta: 0.0, ..b }.theory_beta().is_err());
    }

    #[test]
    fn unbounded_zero_has_mass_p() {
        let mut rng = <crate::Prng as rand::SeedableRng>::seed_from_u64(9);
        let g = GeometricFromZero::new(0.3).unwrap();
        let n = 200_000;
        let zeros = (0..n).filter(|_| rng.sample(g) == 0).count();
        assert!((zeros as f64 / n as f64 - 0.3).abs() < 0.005);
    }
}
