//! Sweeps over the `beta x seed` grid and the files they produce.
//!
//! For each cell `(beta_i, seed_j)` the harness writes
//! `metrics_b{i}_s{seed}.jsonl` and `visitation_b{i}_s{seed}.csv`; the
//! sweep writes one `summary.csv` with a row per cell.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::metrics::{write_jsonl, SummaryRow};
use super::runner::{run_cell, CellOutcome};
use super::HarnessError;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of cell `(beta_index, seed)`: `mix64(mix64(seed) ^ mix64(!beta_index))`.
/// The result seeds a ChaCha8 generator whose stream 0 drives training and
/// stream 1 drives evaluation tie-breaks.
pub fn cell_seed(seed: u64, beta_index: usize) -> u64 {
    mix64(mix64(seed) ^ mix64(!(beta_index as u64)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunFiles {
    pub metrics: Vec<PathBuf>,
    pub visitation: Vec<PathBuf>,
    pub summary: PathBuf,
}

impl RunFiles {
    pub fn all(&self) -> Vec<PathBuf> {
        let mut v = self.metrics.clone();
        v.extend(self.visitation.iter().cloned());
        v.push(self.summary.clone());
        v
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::io(path, e))
}

fn write_cell(dir: &Path, beta_index: usize, outcome: &CellOutcome) -> Result<(PathBuf, PathBuf), HarnessError> {
    let seed = outcome.summary.seed;
    let metrics = dir.join(format!("metrics_b{beta_index}_s{seed}.jsonl"));
    write_jsonl(&outcome.records, create(&metrics)?)?;
    let visitation = dir.join(format!("visitation_b{beta_index}_s{seed}.csv"));
    outcome.visitation.write_csv(create(&visitation)?)?;
    Ok((metrics, visitation))
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>, HarnessError> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<Result<Vec<SummaryRow>, _>>()?;
    Ok(rows)
}

fn run_cells(
    cfg: &ExperimentConfig,
    cells: Vec<(usize, f64, u64)>,
) -> Result<(RunFiles, Vec<CellOutcome>), HarnessError> {
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;

    let job = |&(beta_index, beta, seed): &(usize, f64, u64)| -> Result<(CellOutcome, f64), HarnessError> {
        let started = std::time::Instant::now();
        let mut outcome = run_cell(cfg, beta, cell_seed(seed, beta_index))?;
        outcome.summary.seed = seed;
        Ok((outcome, started.elapsed().as_secs_f64()))
    };
    let results: Vec<Result<(CellOutcome, f64), HarnessError>> = if cfg.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        pool.install(|| cells.par_iter().map(job).collect())
    } else {
        cells.iter().map(job).collect()
    };

    let mut files = RunFiles {
        metrics: Vec::new(),
        visitation: Vec::new(),
        summary: dir.join("summary.csv"),
    };
    let mut outcomes = Vec::new();
    let mut timing = serde_json::Map::new();
    for (result, &(beta_index, _, seed)) in results.into_iter().zip(&cells) {
        let (outcome, secs) = result?;
        let (m, v) = write_cell(dir, beta_index, &outcome)?;
        timing.insert(format!("b{beta_index}_s{seed}"), serde_json::json!(secs));
        files.metrics.push(m);
        files.visitation.push(v);
        outcomes.push(outcome);
    }
    let rows: Vec<SummaryRow> = outcomes.iter().map(|o| o.summary.clone()).collect();
    write_summary(&files.summary, &rows)?;
    if cfg.timing {
        let path = dir.join("timing.json");
        serde_json::to_writer_pretty(create(&path)?, &timing)?;
    }
    Ok((files, outcomes))
}

/// Runs every `(beta, seed)` cell of the config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(RunFiles, Vec<CellOutcome>), HarnessError> {
    cfg.validate()?;
    let cells = cfg
        .betas
        .iter()
        .enumerate()
        .flat_map(|(i, &b)| cfg.seeds.iter().map(move |&s| (i, b, s)))
        .collect();
    run_cells(cfg, cells)
}

/// Runs a single cell: the given beta/seed, or the first of each list.
pub fn run_single(
    cfg: &ExperimentConfig,
    beta_index: usize,
    seed: u64,
) -> Result<(RunFiles, Vec<CellOutcome>), HarnessError> {
    cfg.validate()?;
    let beta = *cfg
        .betas
        .get(beta_index)
        .ok_or_else(|| HarnessError::Config(format!("beta index {beta_index} out of range")))?;
    run_cells(cfg, vec![(beta_index, beta, seed)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn cell_seeds_do_not_alias() {
        let mut seen = HashSet::new();
        for seed in 0..50u64 {
            for b in 0..20 {
                assert!(seen.insert(cell_seed(seed, b)));
            }
        }
    }
}
