//! Trace CSVs, checkpoint summaries and plot data.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use jaguar::solvers::TraceRecord;

use crate::error::{BenchError, Result};
use crate::runner::{MethodResult, ResultBundle};

pub const TRACE_HEADER: &str = "iter,oracle_calls,f_value,f_gap,grad_err,gamma,eta";

/// Shortest round-trip form; scientific notation outside `[1e-4, 1e15)`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn meta_lines(bundle: &ResultBundle, extra: &[(&str, String)]) -> String {
    let mut s = format!(
        "# name={}\n# config_hash={}\n# code_version={}\n",
        bundle.name, bundle.config_hash, bundle.code_version
    );
    for (k, v) in extra {
        let _ = writeln!(s, "# {k}={v}");
    }
    s
}

/// Header-free CSV body of a trace.
pub fn trace_body(trace: &[TraceRecord]) -> String {
    let mut s = String::new();
    for r in trace {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.iter,
            r.oracle_calls,
            fmt_f64(r.f_value),
            opt(r.f_gap),
            opt(r.grad_err),
            fmt_f64(r.gamma),
            opt(r.eta)
        );
    }
    s
}

pub fn trace_csv(bundle: &ResultBundle, method: &str, seed: u64, trace: &[TraceRecord]) -> String {
    let mut s = meta_lines(bundle, &[("method", method.to_string()), ("seed", seed.to_string())]);
    s.push_str(TRACE_HEADER);
    s.push('\n');
    s.push_str(&trace_body(trace));
    s
}

/// Data lines of a CSV, skipping `#` comments and the header row.
pub fn csv_body(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

/// Directory-safe form of a method name.
pub fn method_dir(label: &str) -> String {
    label.replace([':', '/', ' '], "_")
}

/// Gap (or value, without `f*`) of the last record within each checkpoint.
pub fn checkpoint_values(trace: &[TraceRecord], checkpoints: &[u64]) -> Vec<Option<f64>> {
    checkpoints
        .iter()
        .map(|&c| {
            trace
                .iter()
                .take_while(|r| r.oracle_calls <= c)
                .last()
                .map(|r| r.f_gap.unwrap_or(r.f_value))
        })
        .collect()
}

/// Type-7 (linear interpolation) quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub oracle_calls: u64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

/// Median and quartiles across seeds at every checkpoint reached by all
/// seeds.
pub fn summarize(method: &MethodResult) -> Vec<SummaryRow> {
    let per_seed: Vec<Vec<Option<f64>>> = method
        .runs
        .iter()
        .map(|r| checkpoint_values(&r.trace, &method.checkpoints))
        .collect();
    method
        .checkpoints
        .iter()
        .enumerate()
        .filter_map(|(j, &c)| {
            let mut vals: Vec<f64> = per_seed.iter().map(|v| v[j]).collect::<Option<_>>()?;
            vals.sort_by(f64::total_cmp);
            Some(SummaryRow {
                oracle_calls: c,
                median: quantile(&vals, 0.5),
                q25: quantile(&vals, 0.25),
                q75: quantile(&vals, 0.75),
            })
        })
        .collect()
}

fn metric(bundle: &ResultBundle) -> &'static str {
    if bundle.f_star.is_some() {
        "f_gap"
    } else {
        "f_value"
    }
}

fn write(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(BenchError::io(dir))?;
    }
    std::fs::write(path, body).map_err(BenchError::io(path))
}

/// Long-format `method,oracle_calls,median_gap,q25,q75` plus a gnuplot script.
pub fn emit_plotdata(bundle: &ResultBundle, dir: &Path) -> Result<Vec<PathBuf>> {
    if let Some(first) = bundle.methods.first() {
        for m in &bundle.methods[1..] {
            if m.checkpoints != first.checkpoints {
                return Err(BenchError::MismatchedCheckpoints(first.label.clone(), m.label.clone()));
            }
        }
    }
    let meta = meta_lines(bundle, &[("metric", metric(bundle).to_string())]);
    let mut csv = meta.clone();
    csv.push_str("method,oracle_calls,median_gap,q25,q75\n");
    for m in &bundle.methods {
        for row in summarize(m) {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                m.label,
                row.oracle_calls,
                fmt_f64(row.median),
                fmt_f64(row.q25),
                fmt_f64(row.q75)
            );
        }
    }
    let data = dir.join("plotdata.csv");
    write(&data, &csv)?;

    let skip = meta.lines().count() + 1;
    let mut gp = String::new();
    for line in meta.lines() {
        let _ = writeln!(gp, "{line}");
    }
    let ylabel = if bundle.f_star.is_some() { "f(x) - f*" } else { "f(x)" };
    let _ = writeln!(gp, "set datafile separator ','");
    let _ = writeln!(gp, "set logscale y");
    let _ = writeln!(gp, "set xlabel 'zero-order oracle calls'");
    let _ = writeln!(gp, "set ylabel '{ylabel}'");
    let clauses: Vec<String> = bundle
        .methods
        .iter()
        .map(|m| {
            format!(
                "'plotdata.csv' skip {skip} using 2:(strcol(1) eq \"{0}\" ? $3 : 1/0) with lines title \"{0}\"",
                m.label
            )
        })
        .collect();
    let _ = writeln!(gp, "plot {}", clauses.join(", \\\n     "));
    let script = dir.join("plot.gp");
    write(&script, &gp)?;
    Ok(vec![data, script])
}

/// Writes per-seed traces and per-method summaries, then the plot data.
pub fn write_bundle(bundle: &ResultBundle, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for m in &bundle.methods {
        let mdir = dir.join(method_dir(&m.label));
        for run in &m.runs {
            let path = mdir.join(format!("trace_seed{}.csv", run.seed));
            write(&path, &trace_csv(bundle, &m.label, run.seed, &run.trace))?;
            files.push(path);
        }
        let mut meta = vec![("method", m.label.clone()), ("metric", metric(bundle).to_string())];
        // x0 does not depend on the seed
        if let Some(run) = m.runs.first() {
            let f0 = bundle.f_star.map_or(run.f0, |fs| run.f0 - fs);
            meta.push(("F0", fmt_f64(f0)));
        }
        let mut s = meta_lines(bundle, &meta);
        s.push_str("oracle_calls,median_gap,q25,q75\n");
        for row in summarize(m) {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                row.oracle_calls,
                fmt_f64(row.median),
                fmt_f64(row.q25),
                fmt_f64(row.q75)
            );
        }
        let path = mdir.join("summary.csv");
        write(&path, &s)?;
        files.push(path);
    }
    files.extend(emit_plotdata(bundle, dir)?);
    Ok(files)
}

/// Flushes the partial trace of a failed run.
pub fn write_partial(bundle_name: &str, config_hash: &str, dir: &Path, method: &str, seed: u64, trace: &[TraceRecord]) -> Result<PathBuf> {
    let mut s = format!(
        "# name={bundle_name}\n# config_hash={config_hash}\n# code_version={}\n# method={method}\n# seed={seed}\n# status=failed\n",
        crate::runner::CODE_VERSION
    );
    s.push_str(TRACE_HEADER);
    s.push('\n');
    s.push_str(&trace_body(trace));
    let path = dir.join(method_dir(method)).join(format!("trace_seed{seed}.partial.csv"));
    write(&path, &s)?;
    Ok(path)
}
