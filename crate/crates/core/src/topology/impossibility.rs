//! The ring pair `C_n` / `C_2n` on which no deterministic algorithm without
//! knowledge of `n` or `k` can decide.
//!
//! `C_n` has nodes `v_1..v_n` (indices `0..n`) where `v_i` holds token `i`.
//! `C_2n` has `v'_1..v'_n` (indices `0..n`) followed by `u_1..u_n`
//! (indices `n..2n`) around the ring, and both `v'_i` and `u_i` hold `i`.
//! Port 1 always leads clockwise and port 2 counter-clockwise, so every
//! node of `C_2n` has exactly the local view of its counterpart in `C_n`.

use std::fmt::Write as _;

use super::{Instance, Topology, TokenAssignment};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Matched,
    /// Swaps ports 1 and 2 on the `u` half of `C_2n`. Negative control.
    Mismatched,
}

#[derive(Clone, Debug)]
pub struct ImpossibilityPair {
    pub small: Instance,
    pub big: Instance,
    /// `correspondence[w]` is the `C_n` node whose view node `w` of `C_2n`
    /// shares.
    pub correspondence: Vec<usize>,
}

fn oriented_ring(n: usize, flipped: impl Fn(usize) -> bool) -> Result<Topology> {
    let neighbors = (0..n)
        .map(|v| {
            let (succ, pred) = ((v + 1) % n, (v + n - 1) % n);
            if flipped(v) {
                vec![pred, succ]
            } else {
                vec![succ, pred]
            }
        })
        .collect();
    Topology::from_port_order(neighbors)
}

pub fn make_impossibility_pair(n: usize) -> Result<ImpossibilityPair> {
    make_impossibility_pair_with(n, Orientation::Matched)
}

pub fn make_impossibility_pair_with(n: usize, orientation: Orientation) -> Result<ImpossibilityPair> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("impossibility pair needs n >= 3, got n = {n}")));
    }
    let len = (usize::BITS - n.leading_zeros()).max(1);
    let values: Vec<u64> = (1..=n as u64).collect();
    let small_lists: Vec<&[u64]> = values.iter().map(std::slice::from_ref).collect();
    let big_lists: Vec<&[u64]> = small_lists.iter().chain(small_lists.iter()).copied().collect();
    let small = Instance {
        topology: oriented_ring(n, |_| false)?,
        tokens: TokenAssignment::from_values(len, &small_lists)?,
    };
    let big = Instance {
        topology: oriented_ring(2 * n, |v| orientation == Orientation::Mismatched && v >= n)?,
        tokens: TokenAssignment::from_values(len, &big_lists)?,
    };
    let correspondence = (0..2 * n).map(|w| w % n).collect();
    Ok(ImpossibilityPair { small, big, correspondence })
}

/// One `big small` pair per line.
pub fn emit_correspondence(map: &[usize]) -> String {
    let mut s = String::new();
    for (w, v) in map.iter().enumerate() {
        writeln!(s, "{w} {v}").unwrap();
    }
    s
}

pub fn parse_correspondence(text: &str) -> Result<Vec<usize>> {
    let mut map = Vec::new();
    for (i, line) in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).enumerate() {
        let f: Vec<usize> = line
            .split_whitespace()
            .map(|x| x.parse().map_err(|_| Error::Parse(format!("bad correspondence line `{line}`"))))
            .collect::<Result<_>>()?;
        if f.len() != 2 || f[0] != i {
            return Err(Error::Parse(format!("correspondence line {} must be `{i} <node>`", i + 1)));
        }
        map.push(f[1]);
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_node_pair() {
        let p = make_impossibility_pair(3).unwrap();
        let vals = |i: &Instance| -> Vec<u64> {
            (0..i.topology.node_count()).map(|v| i.tokens.tokens_at(v)[0].low_u64()).collect()
        };
        assert_eq!(vals(&p.small), vec![1, 2, 3]);
        assert_eq!(vals(&p.big), vec![1, 2, 3, 1, 2, 3]);
        assert_eq!(p.small.tokens.token_len(), 2);
    }

    #[test]
    fn local_views_match() {
        for n in 3..8 {
            let p = make_impossibility_pair(n).unwrap();
            for w in 0..2 * n {
                let v = p.correspondence[w];
                assert_eq!(p.big.topology.degree(w), p.small.topology.degree(v));
                assert_eq!(p.big.tokens.tokens_at(w), p.small.tokens.tokens_at(v));
                for port in 1..=2 {
                    let bw = p.big.topology.peer(w, port);
                    let sv = p.small.topology.peer(v, port);
                    assert_eq!(p.correspondence[bw.node], sv.node);
                    assert_eq!(bw.port, sv.port);
                }
            }
        }
    }

    #[test]
    fn correspondence_of_four() {
        let p = make_impossibility_pair(4).unwrap();
        assert_eq!(p.correspondence, vec![0, 1, 2, 3, 0, 1, 2, 3]);
        let text = emit_correspondence(&p.correspondence);
        assert_eq!(parse_correspondence(&text).unwrap(), p.correspondence);
    }

    #[test]
    fn mismatched_breaks_views() {
        let p = make_impossibility_pair_with(3, Orientation::Mismatched).unwrap();
        assert_ne!(p.big.topology.peer(3, 1).node, 4);
        assert!(make_impossibility_pair(2).is_err());
    }
}
