//! Aggregation over replicates, CSV output and the plotting script.

use super::HarnessError;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Mean, standard error and median of one metric over replicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
    pub median: f64,
}

impl Summary {
    /// `None` for an empty input.
    pub fn of(values: &[f64]) -> Option<Summary> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Some(Summary {
            n,
            mean,
            stderr,
            median: median(values),
        })
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// One CSV row: the key columns of a configuration and a summary.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub keys: Vec<String>,
    pub summary: Option<Summary>,
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v}")).unwrap_or_default()
}

/// Writes `key_names..., n, mean, stderr, median`; empty fields for an
/// undefined summary.
pub fn write_aggregate(path: &Path, key_names: &[&str], rows: &[AggregateRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = key_names.to_vec();
    header.extend(["n", "mean", "stderr", "median"]);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = r.keys.clone();
        rec.push(r.summary.map_or(0, |s| s.n).to_string());
        rec.push(fmt_opt(r.summary.map(|s| s.mean)));
        rec.push(fmt_opt(r.summary.map(|s| s.stderr)));
        rec.push(fmt_opt(r.summary.map(|s| s.median)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Serializes plain records with a header row.
pub fn write_records<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

const PLOT_PRELUDE: &str = r#"#!/usr/bin/env python3
# Renders the CSV files written by the mdpdt harness. Requires matplotlib.
import csv
import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def rows(name):
    with open(os.path.join(HERE, name), newline="") as f:
        return list(csv.DictReader(f))


def num(x):
    return float(x) if x not in ("", None) else float("nan")


def plot_margin_sweep(name):
    data = rows(name)
    groups = defaultdict(list)
    for r in data:
        groups[(r["criterion"], r["test"])].append((num(r["margin"]), num(r["mean"]), num(r["stderr"])))
    criteria = sorted({c for c, _ in groups})
    fig, axes = plt.subplots(1, max(len(criteria), 1), figsize=(5 * max(len(criteria), 1), 4), squeeze=False)
    for ax, crit in zip(axes[0], criteria):
        for (c, test), pts in sorted(groups.items()):
            if c != crit:
                continue
            pts.sort()
            ax.errorbar([p[0] for p in pts], [p[1] for p in pts], yerr=[p[2] for p in pts], marker="o", label=test)
        ax.set_xscale("log")
        ax.set_xlabel("max type I error")
        ax.set_title(crit)
        ax.legend()
    axes[0][0].set_ylabel(name[:-4])
    fig.tight_layout()
    fig.savefig(os.path.join(HERE, name[:-4] + ".png"))


def plot_bars(name, key):
    data = rows(name)
    fig, ax = plt.subplots(figsize=(max(6, len(data)), 4))
    ax.bar([r[key] for r in data], [num(r["mean"]) for r in data], yerr=[num(r["stderr"]) for r in data])
    ax.set_ylabel(name[:-4])
    plt.setp(ax.get_xticklabels(), rotation=30, ha="right")
    fig.tight_layout()
    fig.savefig(os.path.join(HERE, name[:-4] + ".png"))


def plot_trace(name):
    data = rows(name)
    fig, ax = plt.subplots(figsize=(10, 4))
    ax.plot([num(r["t"]) for r in data], [num(r["load"]) for r in data], label="load")
    ax2 = ax.twinx()
    ax2.step([num(r["t"]) for r in data], [num(r["vms"]) for r in data], color="tab:orange", label="vms")
    ax.set_xlabel("step")
    ax.set_ylabel("load")
    ax2.set_ylabel("vms")
    ax.set_title(name[:-4])
    fig.tight_layout()
    fig.savefig(os.path.join(HERE, name[:-4] + ".png"))


def plot_any(name):
    with open(os.path.join(HERE, name), newline="") as f:
        header = next(csv.reader(f), [])
    if "margin" in header:
        plot_margin_sweep(name)
    elif "strategy" in header:
        plot_bars(name, "strategy")
    elif "tree" in header:
        plot_bars(name, "tree")
    elif "agent" in header and "mean" in header:
        plot_bars(name, "agent")
    elif "load" in header and "vms" in header:
        plot_trace(name)


FILES = [
"#;

/// Writes a matplotlib script next to the CSVs. Paths that do not exist
/// are left out; every listed file must live in `dir`.
pub fn emit_plot_script(dir: &Path, csvs: &[PathBuf]) -> Result<PathBuf, HarnessError> {
    let path = dir.join("plot.py");
    let mut f = std::fs::File::create(&path)?;
    f.write_all(PLOT_PRELUDE.as_bytes())?;
    for c in csvs.iter().filter(|c| c.exists()) {
        let name = c
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| HarnessError::InvalidConfig {
                field: "plot".into(),
                message: format!("unusable file name {}", c.display()),
            })?;
        writeln!(f, "    {:?},", name)?;
    }
    f.write_all(b"]\n\nif __name__ == \"__main__\":\n    for name in FILES:\n        plot_any(name)\n")?;
    f.flush()?;
    Ok(path)
}
