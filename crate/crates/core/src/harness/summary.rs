//! Per-beta sensitivity table built from a sweep's `summary.csv`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::SummaryRow;
use super::sweep::read_summary;
use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub mode: String,
    pub beta: f64,
    pub seeds: usize,
    pub success_mean: f64,
    /// Sample standard deviation; 0 for a single seed.
    pub success_std: f64,
    pub value_mean: f64,
    pub value_std: f64,
    /// Non-empty when this beta has fewer seeds than the best-covered one.
    pub warning: String,
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// One row per `(mode, beta)` in order of first appearance.
pub fn sweep_summary(rows: &[SummaryRow]) -> Vec<SensitivityRow> {
    let mut groups: Vec<(String, f64, Vec<&SummaryRow>)> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|g| g.0 == r.mode && g.1 == r.beta) {
            Some(g) => g.2.push(r),
            None => groups.push((r.mode.clone(), r.beta, vec![r])),
        }
    }
    let full = groups.iter().map(|g| g.2.len()).max().unwrap_or(0);
    groups
        .into_iter()
        .map(|(mode, beta, members)| {
            let success: Vec<f64> = members.iter().map(|r| r.final_success_rate).collect();
            let value: Vec<f64> = members.iter().map(|r| r.final_greedy_value).collect();
            let (success_mean, success_std) = mean_std(&success);
            let (value_mean, value_std) = mean_std(&value);
            let warning = if members.len() < full {
                format!("missing {} of {} seeds", full - members.len(), full)
            } else {
                String::new()
            };
            SensitivityRow {
                mode,
                beta,
                seeds: members.len(),
                success_mean,
                success_std,
                value_mean,
                value_std,
                warning,
            }
        })
        .collect()
}

pub fn summarize_file(path: &Path) -> Result<Vec<SensitivityRow>, HarnessError> {
    Ok(sweep_summary(&read_summary(path)?))
}

pub fn write_sensitivity<W: std::io::Write>(rows: &[SensitivityRow], out: W) -> Result<(), HarnessError> {
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

    fn row(beta: f64, seed: u64, success: f64) -> SummaryRow {
        SummaryRow {
            mode: "ucbq".into(),
            beta,
            seed,
            episodes: 10,
            final_success_rate: success,
            final_train_success_rate: success,
            final_greedy_value: success * 0.5,
            mean_intrinsic_return: 0.0,
        }
    }

    #[test]
    fn hand_computed_sample_std() {
        let rows: Vec<_> = [1.0, 0.0, 1.0, 1.0, 1.0]
            .iter()
            .enumerate()
            .map(|(i, &s)| row(0.01, i as u64, s))
            .collect();
        let t = sweep_summary(&rows);
        assert_eq!(t.len(), 1);
        assert!((t[0].success_mean - 0.8).abs() < 1e-12);
        assert!((t[0].success_std - 0.447).abs() < 5e-4);
        assert!(t[0].warning.is_empty());
    }

    #[test]
    fn single_seed_and_constant_metric() {
        let t = sweep_summary(&[row(1.0, 0, 0.3)]);
        assert_eq!(t[0].success_std, 0.0);
        let t = sweep_summary(&[row(1.0, 0, 0.3), row(1.0, 1, 0.3), row(1.0, 2, 0.3)]);
        assert!((t[0].success_mean - 0.3).abs() < 1e-15);
        assert!(t[0].success_std.abs() < 1e-15);
    }

    #[test]
    fn missing_rows_are_flagged() {
        let rows = vec![row(0.1, 0, 1.0), row(0.1, 1, 1.0), row(1.0, 0, 0.0)];
        let t = sweep_summary(&rows);
        assert_eq!(t.len(), 2);
        assert!(t[0].warning.is_empty());
        assert_eq!(t[1].warning, "missing 1 of 2 seeds");
        let mut buf = Vec::new();
        write_sensitivity(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("mode,beta,seeds,success_mean,success_std,value_mean,value_std,warning\n"));
    }
}
