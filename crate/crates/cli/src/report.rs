use std::io::Write;

use anyhow::Result;
use radix_topk::{
    BatchOptions, EngineConfig, InstrumentationSnapshot, RadixValue, ScalePolicy, ScheduleStats,
    SelectionOrder, TopKResult,
};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::args::Format;

#[derive(Clone, Debug, Serialize)]
pub struct ConfigEcho {
    pub dtype: &'static str,
    pub order: SelectionOrder,
    pub engine: EngineConfig,
    pub batch: BatchOptions,
    pub scale: ScalePolicy,
}

#[derive(Clone, Debug, Serialize)]
pub struct TaskDigest {
    pub task: usize,
    pub n: usize,
    pub k: usize,
    pub pivot: Value,
    /// SHA-256 over the normalized (index, value) pairs.
    pub checksum: String,
    pub passes: Option<u64>,
    /// Index of the subtracted element when the run was scaled.
    pub scale_index: Option<usize>,
    pub verified: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub config: ConfigEcho,
    pub tasks: Vec<TaskDigest>,
    pub instrumentation: InstrumentationSnapshot,
    pub schedule: Option<ScheduleStats>,
    pub elapsed_ms: f64,
}

pub fn checksum<T: RadixValue>(r: &TopKResult<T>) -> String {
    let mut h = Sha256::new();
    let mut buf = Vec::with_capacity(16);
    for (&i, &v) in r.indices.iter().zip(&r.values) {
        buf.clear();
        buf.extend_from_slice(&(i as u64).to_le_bytes());
        v.write_le(&mut buf);
        h.update(&buf);
    }
    hex::encode(h.finalize())
}

/// Bit-exact comparison, so -0.0 and +0.0 differ.
pub fn same_result<T: RadixValue>(a: &TopKResult<T>, b: &TopKResult<T>) -> bool {
    a.indices == b.indices
        && a.values.len() == b.values.len()
        && a.values
            .iter()
            .zip(&b.values)
            .all(|(x, y)| x.to_ordered_bits() == y.to_ordered_bits())
}

pub fn add_snapshot(total: &mut InstrumentationSnapshot, s: &InstrumentationSnapshot) {
    let add = |a: &mut Vec<u64>, b: &[u64]| {
        if a.len() < b.len() {
            a.resize(b.len(), 0);
        }
        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
    };
    add(&mut total.flushes_per_worker, &s.flushes_per_worker);
    add(&mut total.drains_per_worker, &s.drains_per_worker);
    total.write_partitions += s.write_partitions;
    total.global_merges += s.global_merges;
    total.elements_scanned += s.elements_scanned;
    total.filter_scanned += s.filter_scanned;
    total.modeled_transactions += s.modeled_transactions;
    total.passes += s.passes;
    total.dispatch_rounds += s.dispatch_rounds;
}

#[derive(Serialize)]
struct TaskRow<'a> {
    task: usize,
    n: usize,
    k: usize,
    pivot: String,
    checksum: &'a str,
    passes: Option<u64>,
    scale_index: Option<usize>,
    verified: Option<bool>,
    total_flushes: u64,
    global_merges: u64,
    elements_scanned: u64,
    modeled_transactions: u64,
    elapsed_ms: f64,
}

pub fn write_report<W: Write>(w: W, report: &RunReport, format: Format) -> Result<()> {
    match format {
        Format::Json => {
            let mut w = w;
            serde_json::to_writer_pretty(&mut w, report)?;
            writeln!(w)?;
        }
        Format::Csv => {
            let mut csv = csv::Writer::from_writer(w);
            let s = &report.instrumentation;
            for t in &report.tasks {
                csv.serialize(TaskRow {
                    task: t.task,
                    n: t.n,
                    k: t.k,
                    pivot: match &t.pivot {
                        Value::String(s) => s.clone(),
                        v => v.to_string(),
                    },
                    checksum: &t.checksum,
                    passes: t.passes,
                    scale_index: t.scale_index,
                    verified: t.verified,
                    total_flushes: s.total_flushes(),
                    global_merges: s.global_merges,
                    elements_scanned: s.elements_scanned,
                    modeled_transactions: s.modeled_transactions,
                    elapsed_ms: report.elapsed_ms,
                })?;
            }
            csv.flush()?;
        }
    }
    Ok(())
}

/// JSON rows or CSV with a header, for the sweep commands.
pub fn write_rows<W: Write, R: Serialize>(w: W, rows: &[R], format: Format) -> Result<()> {
    match format {
        Format::Json => {
            let mut w = w;
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)?;
        }
        Format::Csv => {
            let mut csv = csv::Writer::from_writer(w);
            for r in rows {
                csv.serialize(r)?;
            }
            csv.flush()?;
        }
    }
    Ok(())
}
