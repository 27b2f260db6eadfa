use std::path::Path;
use std::process::{Command, Output};

use fas_surrogate::cli::config::ExperimentConfig;
use fas_surrogate::cli::model_io::load_surrogate;
use fas_surrogate::fem::FineOperator;
use fas_surrogate::mesh::build_hierarchy;
use fas_surrogate::surrogate::train_all;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fas-surrogate")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.cfg");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn report_lines(dir: &Path) -> Vec<String> {
    std::fs::read_to_string(dir.join("fas_report.csv"))
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["solve", "--coarse-op", "sideways"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "no_such_key = 3\n");
    let out = run(&["solve", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_key"));
    let missing = dir.path().join("absent.cfg");
    assert_eq!(run(&["study", "--config", missing.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn solve_with_true_operator_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve", "--coarse-op", "true", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = report_lines(dir.path());
    assert_eq!(lines[0], "fas_iteration,coarse_iterations,relative_residual");
    assert!(lines.len() >= 2 && lines.len() <= 11);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().collect::<Vec<_>>(), lines);
    let last: f64 = lines.last().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!(last <= 1e-6);
}

#[test]
fn seed_changes_initial_guess_and_rerun_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cfg = write_config(dir.path(), "max_cycles = 2\n");
    let a = run(&["solve", "--config", &cfg, "--out", d, "--seed", "7"]);
    let ra = report_lines(dir.path());
    let b = run(&["solve", "--config", &cfg, "--out", d, "--seed", "7"]);
    let rb = report_lines(dir.path());
    let c = run(&["solve", "--config", &cfg, "--out", d, "--seed", "8"]);
    let rc = report_lines(dir.path());
    assert_eq!(a.status.code(), Some(2));
    assert_eq!(b.status.code(), Some(2));
    assert_eq!(c.status.code(), Some(2));
    assert_eq!(ra, rb);
    assert_ne!(ra, rc);
}

#[test]
fn zero_perturbation_converges_immediately() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tau = 0\n");
    let out = run(&["solve", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let lines = report_lines(dir.path());
    assert_eq!(lines.len(), 2);
    let cols: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(cols[0], "1");
    assert_eq!(cols[1], "0");
    assert_eq!(cols[2].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn train_then_solve_outside() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let text = "epochs = 20\nbox_draws = 4\nball_draws = 10\nmax_cycles = 2\n";
    let cfg_path = write_config(dir.path(), text);
    let out = run(&["train", "--config", &cfg_path, "--out", d]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for id in 0..4 {
        assert!(dir.path().join(format!("subdomain_{id}.model")).is_file());
    }
    assert!(dir.path().join("manifest.txt").is_file());

    // the saved networks are exactly what the library trains in-process
    let cfg = ExperimentConfig::parse(text).unwrap();
    let (h, subs) = build_hierarchy(2, 2).unwrap();
    let op = FineOperator::new(&h, cfg.coefficient);
    let fresh = train_all(&op, &subs, None, &cfg.sample_spec().unwrap(), &cfg.training_config()).unwrap();
    let (_, loaded) = load_surrogate(dir.path(), 2, 2, cfg.coefficient).unwrap();
    let x = [0.2, -0.1, 0.05, 0.3, 0.001, -0.002, 0.003, 0.0];
    for (a, b) in fresh.locals.iter().zip(&loaded.locals) {
        assert_eq!(a.net, b.net);
        assert_eq!(a.net.forward(&x).unwrap(), b.net.forward(&x).unwrap());
    }

    let solve = run(&["solve", "--config", &cfg_path, "--out", d, "--coarse-op", "outside"]);
    let code = solve.status.code();
    assert!(code == Some(0) || code == Some(2), "{}", String::from_utf8_lossy(&solve.stderr));
    let lines = report_lines(dir.path());
    assert!(lines.len() >= 2 && lines.len() <= 3);
}

#[test]
fn outside_models_for_another_grid_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cfg = write_config(dir.path(), "epochs = 1\nbox_draws = 1\nball_draws = 2\n");
    assert_eq!(run(&["train", "--config", &cfg, "--out", d]).status.code(), Some(0));
    let other = dir.path().join("other");
    std::fs::create_dir(&other).unwrap();
    let cfg2 = write_config(&other, &format!("ratio = 3\nmodel_dir = {d}\n"));
    let out = run(&["solve", "--config", &cfg2, "--out", other.to_str().unwrap(), "--coarse-op", "outside"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!other.join("fas_report.csv").exists());
    // no models at all
    let empty = tempfile::tempdir().unwrap();
    let out = run(&["solve", "--out", empty.path().to_str().unwrap(), "--coarse-op", "outside"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn tiny_study_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let text = "study_ratios = 2, 3\nstudy_global_sides = 1\nepochs = 3\nbox_draws = 2\nball_draws = 3\n\
                eval_box_draws = 2\neval_ball_draws = 2\n";
    let cfg = write_config(dir.path(), text);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let r = run(&["study", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    }
    let names = ["study_ratio_2.csv", "study_ratio_3.csv", "study_global.csv"];
    assert_eq!(std::fs::read_dir(&a).unwrap().count(), names.len());
    for name in names {
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    let local = std::fs::read_to_string(a.join("study_ratio_2.csv")).unwrap();
    assert_eq!(local.lines().next(), Some("K,delta_B,rel_l2,rel_linf"));
    assert_eq!(local.lines().count(), 11);
    let global = std::fs::read_to_string(a.join("study_global.csv")).unwrap();
    assert_eq!(global.lines().count(), 4);
}
