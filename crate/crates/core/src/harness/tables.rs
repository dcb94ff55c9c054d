//! Small CSV tables read by the plotting tool: the repositioning-length
//! pmf and cumulative-regret curves.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::verify::regret_curve;
use super::HarnessError;
use crate::schedules::{bounded_geom_pmf, clamped_geom_pmf};

/// Row of `pmf.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfRow {
    pub l: usize,
    /// Geometric renormalized onto `{1, ..., H}`.
    pub bounded: f64,
    /// Geometric with the tail mass lumped at `H`.
    pub clamped: f64,
}

pub fn pmf_table(p: f64, horizon: usize) -> Result<Vec<PmfRow>, HarnessError> {
    let cfg = |e: crate::schedules::ScheduleError| HarnessError::Config(e.to_string());
    (1..=horizon)
        .map(|l| {
            Ok(PmfRow {
                l,
                bounded: bounded_geom_pmf(p, horizon, l).map_err(cfg)?,
                clamped: clamped_geom_pmf(p, horizon, l).map_err(cfg)?,
            })
        })
        .collect()
}

/// Row of `regret.csv`; one per (seed, episode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretRow {
    pub seed: u64,
    /// 1-based.
    pub episode: usize,
    pub cumulative_regret: f64,
}

/// Linear-UCB-Hyper regret curves on the three-state chain.
pub fn regret_table(seeds: &[u64], episodes: usize, p: f64) -> Result<Vec<RegretRow>, HarnessError> {
    let mut rows = Vec::with_capacity(seeds.len() * episodes);
    for &seed in seeds {
        let curve = regret_curve(seed, episodes, p)?;
        rows.extend(curve.into_iter().enumerate().map(|(i, r)| RegretRow {
            seed,
            episode: i + 1,
            cumulative_regret: r,
        }));
    }
    Ok(rows)
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| HarnessError::Assertion(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pmf_table_shows_clamped_spike() {
        let rows = pmf_table(0.01, 100).unwrap();
        let last = rows.last().unwrap();
        assert!(last.clamped > 10.0 * last.bounded);
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("l,bounded,clamped\n1,"));
    }

    #[test]
    fn regret_rows_are_cumulative() {
        let rows = regret_table(&[0, 1], 30, 0.5).unwrap();
        assert_eq!(rows.len(), 60);
        for pair in rows.windows(2).filter(|w| w[0].seed == w[1].seed) {
            assert!(pair[1].cumulative_regret >= pair[0].cumulative_regret);
        }
        assert!(pmf_table(1.5, 10).is_err());
    }
}
