//! Centralized checks over recorded traces.
//!
//! Nothing here is used by the protocols; the checker sees global node
//! indices and the port map, which node automata never do.

mod check;
mod equiv;
pub mod faults;
mod iig;

pub use check::{check_trace, Invariant, InvariantReport, Tally, Violation};
pub use equiv::{check_trace_equivalence, Divergence, EquivalenceReport};
pub use iig::{extract_iig, IIGraph};

use crate::message::Verdict;
use crate::topology::TokenAssignment;

/// Ground truth by sorting every token's bit string.
pub fn oracle_collision(a: &TokenAssignment) -> Verdict {
    let mut all: Vec<String> = a.all_tokens().map(|t| t.to_hex()).collect();
    all.sort_unstable();
    if all.windows(2).any(|w| w[0] == w[1]) {
        Verdict::Collision
    } else {
        Verdict::AllDistinct
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_examples() {
        let a = TokenAssignment::from_values(4, &[&[3, 7], &[3]]).unwrap();
        assert_eq!(oracle_collision(&a), Verdict::Collision);
        let a = TokenAssignment::from_values(4, &[&[0]]).unwrap();
        assert_eq!(oracle_collision(&a), Verdict::AllDistinct);
    }
}
