//! Line-delimited JSON traces: one header line, then one line per snapshot.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::engine::{Params, Trace, TraceHeader, TRACE_FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::state::NodeState;

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    format_version: u32,
    params: Params,
    truncated: bool,
    snapshots: usize,
}

#[derive(Serialize, Deserialize)]
struct SnapshotLine {
    snapshot: usize,
    round: u64,
    nodes: Vec<NodeState>,
}

pub fn write_trace<W: Write>(trace: &Trace, mut w: W) -> Result<()> {
    let header = HeaderLine {
        format_version: trace.header.format_version,
        params: trace.header.params.clone(),
        truncated: trace.truncated,
        snapshots: trace.snapshots.len(),
    };
    serde_json::to_writer(&mut w, &header)?;
    writeln!(w)?;
    for (i, (nodes, &round)) in trace.snapshots.iter().zip(&trace.rounds).enumerate() {
        serde_json::to_writer(&mut w, &SnapshotLine { snapshot: i, round, nodes: nodes.clone() })?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_trace<R: BufRead>(r: R) -> Result<Trace> {
    let mut lines = r.lines();
    let first = lines.next().ok_or_else(|| Error::Parse("empty trace".into()))??;
    let header: HeaderLine = serde_json::from_str(&first)?;
    if header.format_version != TRACE_FORMAT_VERSION {
        return Err(Error::Parse(format!(
            "trace format version {} is not supported (expected {TRACE_FORMAT_VERSION})",
            header.format_version
        )));
    }
    let mut snapshots = Vec::with_capacity(header.snapshots);
    let mut rounds = Vec::with_capacity(header.snapshots);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s: SnapshotLine = serde_json::from_str(&line)?;
        if s.snapshot != snapshots.len() {
            return Err(Error::Parse(format!("snapshot {} out of order", s.snapshot)));
        }
        snapshots.push(s.nodes);
        rounds.push(s.round);
    }
    if snapshots.len() != header.snapshots {
        return Err(Error::Parse(format!(
            "header announces {} snapshots, found {}",
            header.snapshots,
            snapshots.len()
        )));
    }
    Ok(Trace {
        header: TraceHeader { format_version: header.format_version, params: header.params },
        snapshots,
        rounds,
        truncated: header.truncated,
    })
}
