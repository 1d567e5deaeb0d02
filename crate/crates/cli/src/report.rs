//! CSV outputs. Column orders are part of the interface; see the README.

use std::path::Path;

use anyhow::{Context, Result};
use disentangle::policy::HeadType;
use disentangle::trainer::{PatternMetrics, TrainReport};

/// Written where a quantity is undefined, e.g. average gates without successes.
pub const ABSENT: &str = "--";

pub const TRAIN_REPORT_HEADER: [&str; 15] = [
    "update",
    "episodes",
    "samples",
    "mean_return",
    "success_rate",
    "mean_gates",
    "policy_loss",
    "value_loss",
    "entropy",
    "approx_kl",
    "clip_fraction",
    "grad_norm",
    "eval_success_rate",
    "eval_mean_gates",
    "eval_gate_std",
];
pub const METRICS_HEADER: [&str; 7] = [
    "pattern",
    "n_states",
    "successes",
    "success_rate",
    "avg_gates",
    "gate_std",
    "parameters",
];
pub const HISTOGRAM_HEADER: [&str; 5] = ["pattern", "state", "final_mean_entropy", "success", "gates"];
pub const TABLE_HEADER: [&str; 7] = [
    "head",
    "pqc_qubits",
    "pqc_layers",
    "success_percent",
    "avg_gates",
    "gate_std",
    "parameters",
];
pub const SWEEP_HEADER: [&str; 11] = [
    "run",
    "head",
    "pqc_qubits",
    "pqc_layers",
    "parameters",
    "n_states",
    "successes",
    "success_percent",
    "avg_gates",
    "gate_std",
    "status",
];

/// Shortest round-trip form; exponent notation for very small or large values.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| ABSENT.to_string(), num)
}

fn fixed2(v: Option<f64>) -> String {
    v.map_or_else(|| ABSENT.to_string(), |x| format!("{x:.2}"))
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Periodic-evaluation columns stay empty on rows without an evaluation.
pub fn write_train_report(path: &Path, report: &TrainReport) -> Result<()> {
    let rows = report.rows.iter().map(|r| {
        let (es, eg, ed) = match r.eval_success_rate {
            Some(s) => (num(s), opt(r.eval_mean_gates), opt(r.eval_gate_std)),
            None => Default::default(),
        };
        vec![
            r.update.to_string(),
            r.episodes.to_string(),
            r.samples.to_string(),
            num(r.mean_return),
            num(r.success_rate),
            opt(r.mean_gates),
            num(r.policy_loss),
            num(r.value_loss),
            num(r.entropy),
            num(r.approx_kl),
            num(r.clip_fraction),
            num(r.grad_norm),
            es,
            eg,
            ed,
        ]
    });
    write_rows(path, &TRAIN_REPORT_HEADER, rows)
}

pub fn write_timing(path: &Path, report: &TrainReport) -> Result<()> {
    let rows = report
        .wall_clock_seconds
        .iter()
        .enumerate()
        .map(|(k, s)| vec![(k + 1).to_string(), format!("{s:.6}")]);
    write_rows(path, &["update", "seconds"], rows)
}

pub fn metrics_row(m: &PatternMetrics) -> Vec<String> {
    vec![
        m.pattern.clone(),
        m.n_states.to_string(),
        m.successes.to_string(),
        opt(m.success_rate),
        opt(m.mean_gates),
        opt(m.gate_std),
        m.parameter_count.to_string(),
    ]
}

pub fn write_metrics(path: &Path, metrics: &[PatternMetrics]) -> Result<()> {
    write_rows(path, &METRICS_HEADER, metrics.iter().map(metrics_row))
}

pub fn write_histogram(path: &Path, metrics: &[PatternMetrics]) -> Result<()> {
    let rows = metrics.iter().flat_map(|m| {
        (0..m.n_states).map(move |i| {
            vec![
                m.pattern.clone(),
                i.to_string(),
                num(m.final_mean_entropy[i]),
                m.success_flags[i].to_string(),
                m.gate_counts[i].to_string(),
            ]
        })
    });
    write_rows(path, &HISTOGRAM_HEADER, rows)
}

/// Head label and PQC shape as printed in result tables; the classical head
/// has no circuit.
pub fn head_columns(head: HeadType, qubits: usize, layers: usize) -> [String; 3] {
    match head {
        HeadType::Hybrid => [head.to_string(), qubits.to_string(), layers.to_string()],
        HeadType::Mlp => [head.to_string(), ABSENT.into(), ABSENT.into()],
    }
}

pub fn table_row(head: [String; 3], m: &PatternMetrics) -> Vec<String> {
    let [h, q, l] = head;
    vec![
        h,
        q,
        l,
        fixed2(m.success_rate.map(|r| 100.0 * r)),
        fixed2(m.mean_gates),
        fixed2(m.gate_std),
        m.parameter_count.to_string(),
    ]
}

pub fn write_table(path: &Path, rows: Vec<Vec<String>>) -> Result<()> {
    write_rows(path, &TABLE_HEADER, rows)
}

pub fn write_sweep(path: &Path, rows: Vec<Vec<String>>) -> Result<()> {
    write_rows(path, &SWEEP_HEADER, rows)
}
