use std::fs;
use std::path::Path;
use std::process::Command;

use hyper_explore::harness::metrics::read_jsonl;
use hyper_explore::harness::sweep::read_summary;
use hyper_explore::harness::{run_experiment, ExperimentConfig, VisitationMatrix};

fn small(dir: &Path, betas: Vec<f64>, seeds: Vec<u64>) -> ExperimentConfig {
    ExperimentConfig {
        betas,
        seeds,
        total_steps: 20_000,
        eval_every: 5_000,
        output_dir: dir.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn single_cell_writes_three_files() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(tmp.path(), vec![0.01], vec![4]);
    cfg.agent.mode = hyper_explore::tabular::AgentMode::Qlearning;
    let (files, _) = run_experiment(&cfg).unwrap();
    assert_eq!(files.all().len(), 3);
    assert_eq!(
        listing(tmp.path()),
        ["metrics_b0_s4.jsonl", "summary.csv", "visitation_b0_s4.csv"]
    );
}

#[test]
fn timing_is_opt_in() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(tmp.path(), vec![0.01], vec![0]);
    cfg.timing = true;
    run_experiment(&cfg).unwrap();
    assert_eq!(listing(tmp.path()).len(), 4);
    assert!(tmp.path().join("timing.json").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&small(a.path(), vec![0.01, 1.0], vec![0, 1])).unwrap();
    let mut parallel = small(b.path(), vec![0.01, 1.0], vec![0, 1]);
    parallel.jobs = 2;
    run_experiment(&parallel).unwrap();
    let names = listing(a.path());
    assert_eq!(names, listing(b.path()));
    assert_eq!(names.len(), 9);
    for n in names {
        assert_eq!(
            fs::read(a.path().join(&n)).unwrap(),
            fs::read(b.path().join(&n)).unwrap(),
            "{n} differs"
        );
    }
}

#[test]
fn outputs_parse_back() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(tmp.path(), vec![0.1], vec![2]);
    cfg.agent.mode = hyper_explore::tabular::AgentMode::Hyper;
    let (files, outcomes) = run_experiment(&cfg).unwrap();

    let records = read_jsonl(std::io::BufReader::new(fs::File::open(&files.metrics[0]).unwrap())).unwrap();
    assert_eq!(records, outcomes[0].records);
    assert!(!records.is_empty());
    assert!(records.windows(2).all(|w| w[0].env_steps < w[1].env_steps && w[0].episode + 1 == w[1].episode));
    assert_eq!(records.iter().map(|r| r.length as u64).sum::<u64>(), cfg.total_steps);

    let v = VisitationMatrix::read_csv(fs::File::open(&files.visitation[0]).unwrap()).unwrap();
    assert_eq!(v, outcomes[0].visitation);
    assert_eq!(v.total(), cfg.total_steps);

    let rows = read_summary(&files.summary).unwrap();
    assert_eq!(rows, vec![outcomes[0].summary.clone()]);
    assert_eq!(rows[0].mode, "hyper");
}

fn hyperx(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hyperx")).args(args).output().unwrap()
}

#[test]
fn cli_exit_codes() {
    let out = hyperx(&["oracle", "--env.horizon", "40"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("V*(start=(15, 15))"));

    assert_eq!(hyperx(&["oracle", "--env.nonsense", "1"]).status.code(), Some(1));
    assert_eq!(hyperx(&["oracle", "--env.gamma=1.5"]).status.code(), Some(1));
    assert_eq!(hyperx(&["run", "--config", "/nonexistent/cfg.toml"]).status.code(), Some(1));
}

#[test]
fn cli_run_honours_config_and_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("cfg.toml");
    let out_dir = tmp.path().join("out");
    fs::write(
        &cfg_path,
        format!(
            "betas = [0.5]\nseeds = [9]\ntotal_steps = 4000\neval_every = 1000\noutput_dir = {:?}\n[agent]\nmode = \"hyper\"\n",
            out_dir
        ),
    )
    .unwrap();
    let out = hyperx(&["run", "--config", cfg_path.to_str().unwrap(), "--env.horizon", "30"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_summary(&out_dir.join("summary.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].mode.as_str(), rows[0].beta, rows[0].seed), ("hyper", 0.5, 9));
}

#[test]
fn cli_writes_plot_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let pmf = tmp.path().join("pmf.csv");
    let out = hyperx(&["pmf", "--p", "0.5", "--horizon", "3", "--out", pmf.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&pmf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "l,bounded,clamped");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("1,0.5714285714285714,0.5"));

    let out = hyperx(&["regret", "--episodes", "20", "--seeds", "0,1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("seed,episode,cumulative_regret\n0,1,"));
    assert_eq!(text.lines().count(), 41);

    assert_eq!(hyperx(&["pmf", "--p", "0", "--horizon", "3"]).status.code(), Some(1));
}

#[test]
fn shipped_configs_load() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let full = ExperimentConfig::load(&root.join("warm_up.toml"), &[]).unwrap();
    assert_eq!(full, ExperimentConfig::default());
    let hyper = ExperimentConfig::load(&root.join("hyper_sweep.toml"), &[]).unwrap();
    hyper.validate().unwrap();
    assert_eq!(hyper.agent.mode, hyper_explore::tabular::AgentMode::Hyper);
    assert_eq!(hyper.betas.len(), 6);
}
