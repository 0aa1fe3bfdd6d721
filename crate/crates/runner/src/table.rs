//! Plain-text per-frame table printed by the benchmark CLI.

use std::fmt::Write;

use crate::bench::FrameStep;

/// Column layout: `frame timestamp`, then `<algo>_duration <algo>_memory
/// <algo>_ATE` for each algorithm. Absent values print as `nan` so every
/// row stays numeric.
#[derive(Clone, Debug)]
pub struct Table {
    names: Vec<String>,
}

fn opt(out: &mut String, v: Option<f64>, decimals: usize) {
    match v {
        Some(v) => write!(out, "\t{v:.decimals$}").unwrap(),
        None => out.push_str("\tnan"),
    }
}

impl Table {
    pub fn new(names: Vec<String>) -> Self {
        Self { names }
    }

    pub fn header(&self) -> String {
        let mut out = String::from("frame\ttimestamp");
        for n in &self.names {
            write!(out, "\t{n}_duration\t{n}_memory\t{n}_ATE").unwrap();
        }
        out
    }

    pub fn row(&self, step: &FrameStep) -> String {
        let mut out = format!("{}\t{:.6}", step.frame, step.timestamp.as_secs_f64());
        for a in &step.algorithms {
            let row = a.row.as_ref();
            opt(&mut out, row.and_then(|r| r.duration), 6);
            opt(&mut out, row.and_then(|r| r.memory).map(|m| m as f64), 0);
            opt(&mut out, row.and_then(|r| r.ate), 10);
        }
        out
    }
}
