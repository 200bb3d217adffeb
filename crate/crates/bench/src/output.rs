use std::io::Write;

use serde::Serialize;

use crate::runs::{DynamicSummary, StaticRun};
use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

pub const STATIC_COLUMNS: [&str; 9] = [
    "load",
    "t",
    "num_conn_t",
    "num_conn_t1",
    "num_rearr",
    "rr",
    "wall_ns",
    "max_chain_len",
    "mean_chain_len",
];

#[derive(Serialize)]
struct StaticRow {
    load: f64,
    t: usize,
    num_conn_t: u64,
    num_conn_t1: u64,
    num_rearr: u64,
    rr: f64,
    wall_ns: u64,
    max_chain_len: usize,
    mean_chain_len: f64,
}

pub fn write_static<W: Write>(out: W, runs: &[StaticRun], format: Format) -> Result<(), BenchError> {
    match format {
        Format::Json => write_json(out, runs),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for run in runs {
                for r in &run.records {
                    w.serialize(StaticRow {
                        load: run.load,
                        t: r.t,
                        num_conn_t: r.num_conn_t,
                        num_conn_t1: r.num_conn_t1,
                        num_rearr: r.num_rearr,
                        rr: r.rr,
                        wall_ns: r.wall_ns,
                        max_chain_len: r.max_chain_len,
                        mean_chain_len: r.mean_chain_len,
                    })?;
                }
            }
            if runs.iter().all(|r| r.records.is_empty()) {
                w.write_record(STATIC_COLUMNS)?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

pub fn write_dynamic<W: Write>(out: W, rows: &[DynamicSummary], format: Format) -> Result<(), BenchError> {
    match format {
        Format::Json => write_json(out, rows),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

fn write_json<W: Write, T: Serialize + ?Sized>(mut out: W, value: &T) -> Result<(), BenchError> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}
