//! `study`, `train` and `solve` orchestration and CSV output.

use std::path::{Path, PathBuf};

use crate::cli::config::{CoarseOp, ExperimentConfig};
use crate::cli::model_io::{fmt_f64, load_surrogate, save_surrogate, Manifest};
use crate::error::{Error, Result};
use crate::fas::{solve_manufactured, CoarseOperatorKind, FasReport};
use crate::fem::FineOperator;
use crate::mesh::{build_hierarchy, build_transfer};
use crate::surrogate::{
    global_error_study, local_error_study, train_all, ErrorRow, GLOBAL_STUDY_PAIRS, LOCAL_STUDY_PAIRS,
};

pub const STUDY_LOCAL_HEADER: &str = "K,delta_B,rel_l2,rel_linf";
pub const STUDY_GLOBAL_HEADER: &str = "subdomains,K,delta_B,rel_l2,rel_linf";
pub const FAS_REPORT_HEADER: &str = "fas_iteration,coarse_iterations,relative_residual";
pub const FAS_REPORT_NAME: &str = "fas_report.csv";

pub fn study_file_name(ratio: usize) -> String {
    format!("study_ratio_{ratio}.csv")
}

fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut text = String::with_capacity(64 * (rows.len() + 1));
    text.push_str(header);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// `K` is written as the box half-width `a` of `[-a, a]^4`.
pub fn local_rows(rows: &[ErrorRow]) -> Vec<String> {
    rows.iter()
        .map(|r| {
            format!(
                "{},{},{},{}",
                fmt_f64(r.box_half_width),
                fmt_f64(r.ball_radius),
                fmt_f64(r.rel_l2),
                fmt_f64(r.rel_linf)
            )
        })
        .collect()
}

pub fn global_rows(rows: &[ErrorRow]) -> Vec<String> {
    rows.iter()
        .map(|r| {
            format!(
                "{},{},{},{},{}",
                r.subdomains,
                fmt_f64(r.box_half_width),
                fmt_f64(r.ball_radius),
                fmt_f64(r.rel_l2),
                fmt_f64(r.rel_linf)
            )
        })
        .collect()
}

pub fn report_rows(report: &FasReport) -> Vec<String> {
    report
        .cycles
        .iter()
        .enumerate()
        .map(|(i, c)| format!("{},{},{}", i + 1, c.coarse_iterations, fmt_f64(c.relative_residual)))
        .collect()
}

/// Local accuracy tables (one CSV per ratio) and the global table.
pub fn cmd_study(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out)?;
    let settings = cfg.study_settings();
    let mut written = Vec::new();
    for &ratio in &cfg.study_ratios {
        let rows = local_error_study(ratio, &LOCAL_STUDY_PAIRS, &settings)?;
        let path = out.join(study_file_name(ratio));
        write_csv(&path, STUDY_LOCAL_HEADER, &local_rows(&rows))?;
        written.push(path);
    }
    let mut global = Vec::new();
    for &sides in &cfg.study_global_sides {
        global.extend(global_error_study(sides, cfg.ratio, &GLOBAL_STUDY_PAIRS, &settings)?);
    }
    let path = out.join("study_global.csv");
    write_csv(&path, STUDY_GLOBAL_HEADER, &global_rows(&global))?;
    written.push(path);
    Ok(written)
}

/// Trains every subdomain network on the centred box and writes the models.
pub fn cmd_train(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let (h, subs) = build_hierarchy(cfg.subdomains_per_side, cfg.ratio)?;
    let op = FineOperator::new(&h, cfg.coefficient);
    let spec = cfg.sample_spec()?;
    let surrogate = train_all(&op, &subs, None, &spec, &cfg.training_config())?;
    let manifest = Manifest {
        subdomains_per_side: cfg.subdomains_per_side,
        ratio: cfg.ratio,
        coefficient: cfg.coefficient,
        spec,
        training_seed: cfg.training_seed(),
        subdomain_ids: surrogate.locals.iter().map(|l| l.subdomain_id).collect(),
    };
    save_surrogate(out, &manifest, &surrogate)
}

/// Runs FAS on the manufactured problem and writes `fas_report.csv` to `out`.
/// Outside-trained models are read from `model_dir`, or from `out` when unset.
pub fn cmd_solve(cfg: &ExperimentConfig, out: &Path) -> Result<FasReport> {
    let (h, subs) = build_hierarchy(cfg.subdomains_per_side, cfg.ratio)?;
    let transfer = build_transfer(&h);
    let op = FineOperator::new(&h, cfg.coefficient);
    let kind = match cfg.coarse_op {
        CoarseOp::True => CoarseOperatorKind::True,
        CoarseOp::Inside => CoarseOperatorKind::TrainInside {
            spec: cfg.sample_spec()?,
            training: cfg.training_config(),
        },
        CoarseOp::Outside => {
            let dir = cfg.model_dir.as_deref().unwrap_or(out);
            let (_, s) = load_surrogate(dir, cfg.subdomains_per_side, cfg.ratio, cfg.coefficient)?;
            CoarseOperatorKind::Pretrained(s)
        }
    };
    let (_, report) = solve_manufactured(
        &op,
        &transfer,
        &subs,
        cfg.exact_solution,
        &kind,
        &cfg.fas_config(),
        cfg.seed,
    )?;
    ensure_dir(out)?;
    write_csv(&out.join(FAS_REPORT_NAME), FAS_REPORT_HEADER, &report_rows(&report))?;
    Ok(report)
}
