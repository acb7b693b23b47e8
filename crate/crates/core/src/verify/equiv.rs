use serde::{Deserialize, Serialize};

use crate::engine::Trace;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divergence {
    pub snapshot: usize,
    /// Node of the larger ring.
    pub big_node: usize,
    /// Its counterpart in the smaller ring.
    pub small_node: usize,
    pub small_state: String,
    pub big_state: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    /// Snapshots compared, including the initial one.
    pub compared: usize,
    /// The traces had different lengths; only the common prefix was compared.
    pub length_mismatch: bool,
    pub divergence: Option<Divergence>,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.divergence.is_none()
    }
}

/// Compares every node of the larger trace against its counterpart under
/// `correspondence` (indexed by node of the larger trace). Argument order
/// does not matter.
pub fn check_trace_equivalence(first: &Trace, second: &Trace, correspondence: &[usize]) -> EquivalenceReport {
    let width = |t: &Trace| t.snapshots.first().map_or(0, Vec::len);
    let (small, big) = if width(first) <= width(second) { (first, second) } else { (second, first) };
    let compared = small.snapshots.len().min(big.snapshots.len());
    let mut report = EquivalenceReport {
        compared,
        length_mismatch: small.snapshots.len() != big.snapshots.len(),
        divergence: None,
    };
    for i in 0..compared {
        let (s, b) = (&small.snapshots[i], &big.snapshots[i]);
        for (w, &v) in correspondence.iter().enumerate() {
            let (ss, bs) = match (s.get(v), b.get(w)) {
                (Some(x), Some(y)) => (x.canonical(), y.canonical()),
                (x, y) => (
                    x.map_or_else(|| "missing".to_string(), |x| x.canonical()),
                    y.map_or_else(|| "missing".to_string(), |y| y.canonical()),
                ),
            };
            if ss != bs {
                report.divergence = Some(Divergence { snapshot: i, big_node: w, small_node: v, small_state: ss, big_state: bs });
                return report;
            }
        }
    }
    report
}
