//! CSV traces, JSON summaries and aggregated curves.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::sim::{RunSummary, Trace, TraceRow};

pub fn trace_header(topk: &[usize]) -> Vec<String> {
    let mut h: Vec<String> = [
        "t",
        "x",
        "y",
        "outcome",
        "instant_regret",
        "cum_regret",
        "rr",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend(topk.iter().map(|k| format!("hr@{k}")));
    h.extend(topk.iter().map(|k| format!("ndcg@{k}")));
    h
}

pub fn write_trace<W: Write>(trace: &Trace, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(trace_header(&trace.topk))?;
    for r in &trace.rows {
        let mut rec = vec![
            r.t.to_string(),
            r.x.to_string(),
            r.y.to_string(),
            u8::from(r.outcome).to_string(),
            r.instant_regret.to_string(),
            r.cum_regret.to_string(),
            r.rr.to_string(),
        ];
        rec.extend(r.hr.iter().map(|v| v.to_string()));
        rec.extend(r.ndcg.iter().map(|v| v.to_string()));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_trace_file(trace: &Trace, path: &Path) -> Result<()> {
    write_trace(trace, BufWriter::new(File::create(path)?))
}

fn parse_field<T: std::str::FromStr>(s: &str, col: &str, line: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Config(format!("trace line {line}: bad {col} value `{s}`")))
}

/// Parses a trace CSV. Warmup and batch flags are not stored in the file
/// and come back as `false`.
pub fn read_trace<R: Read>(r: R) -> Result<Trace> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let topk: Vec<usize> = header
        .iter()
        .filter_map(|h| h.strip_prefix("hr@"))
        .map(|k| parse_field(k, "header", 1))
        .collect::<Result<_>>()?;
    if header != trace_header(&topk) {
        return Err(Error::Config(format!(
            "unexpected trace header `{}`",
            header.join(",")
        )));
    }
    let m = topk.len();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let f = |j: usize| rec.get(j).unwrap_or("");
        let floats = |range: std::ops::Range<usize>| -> Result<Vec<f64>> {
            range.map(|j| parse_field(f(j), &header[j], line)).collect()
        };
        rows.push(TraceRow {
            t: parse_field(f(0), "t", line)?,
            x: parse_field(f(1), "x", line)?,
            y: parse_field(f(2), "y", line)?,
            outcome: parse_field::<u8>(f(3), "outcome", line)? == 1,
            instant_regret: parse_field(f(4), "instant_regret", line)?,
            cum_regret: parse_field(f(5), "cum_regret", line)?,
            rr: parse_field(f(6), "rr", line)?,
            hr: floats(7..7 + m)?,
            ndcg: floats(7 + m..7 + 2 * m)?,
            warmup: false,
            batch_end: false,
        });
    }
    Ok(Trace {
        seed: 0,
        config_digest: String::new(),
        topk,
        rows,
        final_estimate: None,
    })
}

pub fn read_trace_file(path: &Path) -> Result<Trace> {
    read_trace(File::open(path)?)
}

pub fn write_summary<W: Write>(summary: &RunSummary, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, summary)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_summary_file(summary: &RunSummary, path: &Path) -> Result<()> {
    write_summary(summary, BufWriter::new(File::create(path)?))
}

pub fn read_summary_file(path: &Path) -> Result<RunSummary> {
    Ok(serde_json::from_reader(File::open(path)?)?)
}

/// Mean and sample standard deviation of cumulative regret and RR per round
/// across traces of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub t: Vec<usize>,
    pub regret_mean: Vec<f64>,
    pub regret_std: Vec<f64>,
    pub rr_mean: Vec<f64>,
    pub rr_std: Vec<f64>,
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = if n > 1.0 {
        xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

pub fn aggregate(traces: &[Trace]) -> Result<Curve> {
    let first = traces
        .first()
        .ok_or_else(|| Error::Config("no traces to aggregate".into()))?;
    let len = first.rows.len();
    if let Some(bad) = traces.iter().find(|t| t.rows.len() != len) {
        return Err(Error::Config(format!(
            "trace lengths differ: {len} and {}",
            bad.rows.len()
        )));
    }
    let mut c = Curve {
        t: Vec::with_capacity(len),
        regret_mean: Vec::with_capacity(len),
        regret_std: Vec::with_capacity(len),
        rr_mean: Vec::with_capacity(len),
        rr_std: Vec::with_capacity(len),
    };
    for i in 0..len {
        c.t.push(first.rows[i].t);
        let (m, s) = mean_std(traces.iter().map(|tr| tr.rows[i].cum_regret));
        c.regret_mean.push(m);
        c.regret_std.push(s);
        let (m, s) = mean_std(traces.iter().map(|tr| tr.rows[i].rr));
        c.rr_mean.push(m);
        c.rr_std.push(s);
    }
    Ok(c)
}

pub fn write_curve<W: Write>(c: &Curve, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "t",
        "cum_regret_mean",
        "cum_regret_std",
        "rr_mean",
        "rr_std",
    ])?;
    for i in 0..c.t.len() {
        out.write_record([
            c.t[i].to_string(),
            c.regret_mean[i].to_string(),
            c.regret_std[i].to_string(),
            c.rr_mean[i].to_string(),
            c.rr_std[i].to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
