//! Line-oriented trace files.
//!
//! One record per iteration, tab-separated, in this order:
//!
//! | field        | content                                            |
//! |--------------|----------------------------------------------------|
//! | iteration    | 1-based iteration number                           |
//! | m1_accuracy  | M1 training accuracy                               |
//! | stop_accuracy| accuracy seen by the stopping rule                 |
//! | cplus        | candidate positive ids, rank order                 |
//! | cminus       | candidate negative ids, ascending                  |
//! | outliers     | ids eliminated this iteration, lowest score first  |
//! | s1           | M1 decisions aligned with `cminus`                 |
//! | s2           | M2 decisions aligned with `cminus`                 |
//! | aggregated   | combined scores aligned with `cminus`              |
//!
//! Lists are comma-separated and may be empty. Floats use the shortest
//! representation that parses back to the same value, so files round-trip
//! exactly. Lines starting with `#` are comments.

use std::fmt::Write as _;

use super::engine::IterationTrace;
use crate::error::{FameError, Result};

pub const TRACE_HEADER: &str =
    "# iteration\tm1_accuracy\tstop_accuracy\tcplus\tcminus\toutliers\ts1\ts2\taggregated";

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    let mut s = String::new();
    for (i, v) in items.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{v}").expect("writing to a String cannot fail");
    }
    s
}

/// Serializes traces with the header line.
pub fn write_trace(traces: &[IterationTrace]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for t in traces {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            t.iteration,
            t.m1_accuracy,
            t.stop_accuracy,
            join(&t.cplus),
            join(&t.cminus),
            join(&t.outliers),
            join(&t.scores_m1),
            join(&t.scores_m2),
            join(&t.aggregated),
        )
        .expect("writing to a String cannot fail");
    }
    out
}

fn split_list<T: std::str::FromStr>(field: &str, line: usize, name: &str) -> Result<Vec<T>> {
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field
        .split(',')
        .map(|s| {
            s.parse()
                .map_err(|_| FameError::line(line, format!("bad value {s:?} in {name}")))
        })
        .collect()
}

fn scalar<T: std::str::FromStr>(field: &str, line: usize, name: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| FameError::line(line, format!("bad {name} {field:?}")))
}

/// Parses the output of [`write_trace`].
pub fn parse_trace(text: &str) -> Result<Vec<IterationTrace>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = raw.split('\t').collect();
        if f.len() != 9 {
            return Err(FameError::line(
                line,
                format!("expected 9 fields, found {}", f.len()),
            ));
        }
        let t = IterationTrace {
            iteration: scalar(f[0], line, "iteration")?,
            m1_accuracy: scalar(f[1], line, "m1_accuracy")?,
            stop_accuracy: scalar(f[2], line, "stop_accuracy")?,
            cplus: split_list(f[3], line, "cplus")?,
            cminus: split_list(f[4], line, "cminus")?,
            outliers: split_list(f[5], line, "outliers")?,
            scores_m1: split_list(f[6], line, "s1")?,
            scores_m2: split_list(f[7], line, "s2")?,
            aggregated: split_list(f[8], line, "aggregated")?,
        };
        if t.aggregated.len() != t.cminus.len() {
            return Err(FameError::line(
                line,
                "aggregated scores do not align with cminus",
            ));
        }
        out.push(t);
    }
    Ok(out)
}
