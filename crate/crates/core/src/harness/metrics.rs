//! Per-episode metrics (JSON lines), visitation matrices and sweep summary
//! rows (CSV).

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::env::{Cell, EnvConfig, StateId};

/// One line of a metrics file. Field order is the serialized key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    /// 1-based episode index.
    pub episode: usize,
    /// Environment steps taken so far, including this episode.
    pub env_steps: u64,
    pub length: usize,
    /// Undiscounted task return: 0, r or R.
    pub extrinsic_return: f64,
    /// Sum of the bonuses earned during the episode.
    pub intrinsic_return: f64,
    /// The training episode entered the optimal goal.
    pub success: bool,
    /// A rollout of the greedy exploitation policy, taken after the
    /// episode without learning, entered the optimal goal.
    pub greedy_success: bool,
    /// `V^pi_1(start)` of the greedy exploitation policy, at evaluation points.
    pub greedy_oracle_value: Option<f64>,
    pub reposition_length: Option<usize>,
    pub p: Option<f64>,
    /// The step budget ran out mid-episode.
    pub budget_cut: bool,
}

pub fn write_jsonl<W: Write>(records: &[MetricsRecord], mut out: W) -> Result<(), serde_json::Error> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(serde_json::Error::io)?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<MetricsRecord>, serde_json::Error> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line.map_err(serde_json::Error::io)?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

/// Visit counts per cell. A step counts the state the action was taken
/// from, so the total equals the number of environment steps; goal cells
/// are only counted if an episode starts there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitationMatrix {
    pub width: usize,
    pub height: usize,
    pub counts: Vec<u64>,
}

impl VisitationMatrix {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            counts: vec![0; width * height],
        }
    }

    pub fn record(&mut self, state: StateId) {
        self.counts[state] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn count(&self, cell: Cell) -> u64 {
        self.counts[cell.y * self.width + cell.x]
    }

    /// Fraction of all visits within Manhattan distance `radius` of `center`.
    pub fn mass_within(&self, center: Cell, radius: usize) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let near: u64 = (0..self.counts.len())
            .filter(|&s| Cell::new(s % self.width, s / self.width).manhattan(center) <= radius)
            .map(|s| self.counts[s])
            .sum();
        near as f64 / total as f64
    }

    /// Shannon entropy of the visit distribution divided by `ln(#cells)`.
    pub fn normalized_entropy(&self) -> f64 {
        let total = self.total() as f64;
        let cells = self.counts.len();
        if total == 0.0 || cells < 2 {
            return 0.0;
        }
        let h: f64 = self
            .counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / total;
                -p * p.ln()
            })
            .sum();
        h / (cells as f64).ln()
    }

    /// `height` rows of `width` comma-separated counts, no header.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for row in self.counts.chunks(self.width) {
            w.write_record(row.iter().map(|c| c.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self, String> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
        let mut counts = Vec::new();
        let mut width = None;
        let mut height = 0;
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| format!("line {}: {e}", line + 1))?;
            if *width.get_or_insert(rec.len()) != rec.len() {
                return Err(format!("line {}: ragged row", line + 1));
            }
            for field in rec.iter() {
                counts.push(field.parse::<u64>().map_err(|e| format!("line {}: {e}", line + 1))?);
            }
            height += 1;
        }
        Ok(Self {
            width: width.unwrap_or(0),
            height,
            counts,
        })
    }

    pub fn for_env(env: &EnvConfig) -> Self {
        Self::new(env.width, env.height)
    }
}

/// One row of the sweep-level CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub mode: String,
    pub beta: f64,
    pub seed: u64,
    pub episodes: usize,
    /// Greedy-evaluation success rate over the final window.
    pub final_success_rate: f64,
    /// Training-episode success rate over the final window.
    pub final_train_success_rate: f64,
    /// `V^pi_1(start)` of the final greedy exploitation policy.
    pub final_greedy_value: f64,
    pub mean_intrinsic_return: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_bounds() {
        let mut m = VisitationMatrix::new(3, 3);
        assert_eq!(m.normalized_entropy(), 0.0);
        m.counts.fill(7);
        assert!((m.normalized_entropy() - 1.0).abs() < 1e-12);
        m.counts.fill(0);
        m.counts[4] = 10;
        assert_eq!(m.normalized_entropy(), 0.0);
    }

    #[test]
    fn radius_mass() {
        let mut m = VisitationMatrix::new(5, 5);
        m.record(0);
        m.record(24);
        m.record(12);
        m.record(12);
        assert_eq!(m.mass_within(Cell::new(2, 2), 1), 0.5);
        assert_eq!(m.mass_within(Cell::new(0, 0), 4), 0.75);
        assert_eq!(m.total(), 4);
    }

    #[test]
    fn visitation_csv_roundtrip() {
        let mut m = VisitationMatrix::new(3, 2);
        m.counts = vec![1, 2, 3, 4, 5, 6];
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "1,2,3\n4,5,6\n");
        assert_eq!(VisitationMatrix::read_csv(&buf[..]).unwrap(), m);
        assert!(VisitationMatrix::read_csv(&b"1,2\n3\n"[..]).is_err());
    }

    #[test]
    fn jsonl_key_order_is_stable() {
        let r = MetricsRecord {
            episode: 1,
            env_steps: 10,
            length: 10,
            extrinsic_return: 0.0,
            intrinsic_return: 0.5,
            success: false,
            greedy_success: false,
            greedy_oracle_value: None,
            reposition_length: Some(3),
            p: Some(0.01),
            budget_cut: false,
        };
        let mut buf = Vec::new();
        write_jsonl(std::slice::from_ref(&r), &mut buf).unwrap();
        let line = String::from_utf8(buf.clone()).unwrap();
        assert!(line.starts_with("{\"episode\":1,\"env_steps\":10,\"length\":10,"));
        assert_eq!(read_jsonl(&buf[..]).unwrap(), vec![r]);
    }
}
