use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Topology;
use crate::error::{Error, Result};
use crate::rng;
use crate::token::Token;

/// Per-node token multisets, all tokens `token_len` bits long.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenAssignment {
    token_len: u32,
    lists: Vec<Vec<Token>>,
}

impl TokenAssignment {
    pub fn new(token_len: u32, lists: Vec<Vec<Token>>) -> Result<Self> {
        if token_len == 0 {
            return Err(Error::InvalidParameter("token length L must be positive".into()));
        }
        if let Some(bad) = lists.iter().flatten().find(|t| t.len() != token_len) {
            return Err(Error::InvalidParameter(format!(
                "token {bad:?} is not {token_len} bits long"
            )));
        }
        if lists.iter().all(Vec::is_empty) {
            return Err(Error::InvalidParameter("at least one token is required (k >= 1)".into()));
        }
        Ok(TokenAssignment { token_len, lists })
    }

    /// Convenience constructor from small integer values.
    pub fn from_values(token_len: u32, lists: &[&[u64]]) -> Result<Self> {
        let lists = lists
            .iter()
            .map(|l| l.iter().map(|&v| Token::from_u64(token_len, v)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        TokenAssignment::new(token_len, lists)
    }

    pub fn token_len(&self) -> u32 {
        self.token_len
    }

    pub fn node_count(&self) -> usize {
        self.lists.len()
    }

    /// Total number of tokens `k`.
    pub fn k(&self) -> usize {
        self.lists.iter().map(Vec::len).sum()
    }

    pub fn tokens_at(&self, v: usize) -> &[Token] {
        &self.lists[v]
    }

    pub fn lists(&self) -> &[Vec<Token>] {
        &self.lists
    }

    pub fn all_tokens(&self) -> impl Iterator<Item = &Token> {
        self.lists.iter().flatten()
    }

    /// Global minimum token and the first node holding it.
    pub fn min_token(&self) -> (usize, &Token) {
        self.lists
            .iter()
            .enumerate()
            .flat_map(|(v, l)| l.iter().map(move |t| (v, t)))
            .min_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(&b.0)))
            .expect("k >= 1")
    }
}

/// How [`assign_tokens`] draws values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssignMode {
    /// `k` pairwise distinct values.
    Distinct,
    /// `k - count` distinct values, `count` of which appear twice.
    WithDuplicates(usize),
    /// Distinct values, the unique minimum placed at the lowest-index node
    /// of maximum eccentricity.
    AdversarialMinFar,
    /// `k` independent uniform values; repeats are possible and forced once
    /// `k > 2^L`.
    Uniform,
}

fn distinct_values(count: usize, len: u32, seed: u64) -> Result<Vec<Token>> {
    let space_ok = len >= usize::BITS || count <= 1usize << len;
    if !space_ok {
        return Err(Error::InfeasibleAssignment(format!(
            "{count} distinct tokens do not exist with L = {len} (2^L < {count})"
        )));
    }
    let mut rng = rng::stream(seed, "token-values", 0);
    if len <= 20 && count * 2 > 1usize << len {
        let mut all: Vec<u64> = (0..1u64 << len).collect();
        all.shuffle(&mut rng);
        return all[..count].iter().map(|&v| Token::from_u64(len, v)).collect();
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let t = Token::random(len, &mut rng);
        if seen.insert(t.clone()) {
            out.push(t);
        }
    }
    Ok(out)
}

/// Draws `k` tokens of `len` bits and spreads them over the nodes of `t`:
/// the shuffled tokens are dealt round-robin over a random node order.
pub fn assign_tokens(t: &Topology, k: usize, len: u32, mode: AssignMode, seed: u64) -> Result<TokenAssignment> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if len == 0 {
        return Err(Error::InvalidParameter("L must be at least 1".into()));
    }
    let mut values = match mode {
        AssignMode::Distinct | AssignMode::AdversarialMinFar => distinct_values(k, len, seed)?,
        AssignMode::WithDuplicates(count) => {
            if 2 * count > k {
                return Err(Error::InfeasibleAssignment(format!(
                    "{count} duplicated pairs need k >= {}, got k = {k}",
                    2 * count
                )));
            }
            let mut v = distinct_values(k - count, len, seed)?;
            let dup: Vec<Token> = v[..count].to_vec();
            v.extend(dup);
            v
        }
        AssignMode::Uniform => {
            let mut rng = rng::stream(seed, "token-values", 1);
            (0..k).map(|_| Token::random(len, &mut rng)).collect()
        }
    };
    let mut rng = rng::stream(seed, "token-placement", 0);
    values.shuffle(&mut rng);
    let n = t.node_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut lists = vec![Vec::new(); n];
    for (i, tok) in values.into_iter().enumerate() {
        lists[order[i % n]].push(tok);
    }
    if mode == AssignMode::AdversarialMinFar {
        let ecc: Vec<usize> = (0..n).map(|v| t.eccentricity(v)).collect();
        let max = *ecc.iter().max().unwrap();
        let target = ecc.iter().position(|&e| e == max).unwrap();
        let (holder, min) = {
            let a = TokenAssignment { token_len: len, lists: lists.clone() };
            let (h, m) = a.min_token();
            (h, m.clone())
        };
        let pos = lists[holder].iter().position(|x| *x == min).unwrap();
        lists[holder].remove(pos);
        lists[target].push(min);
    }
    TokenAssignment::new(len, lists)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::token::has_duplicate;
    use crate::topology::{make_path, make_random_connected, make_ring};

    #[test]
    fn distinct_on_ring() {
        let t = make_ring(3, 5).unwrap();
        let a = assign_tokens(&t, 3, 8, AssignMode::Distinct, 11).unwrap();
        assert_eq!(a.k(), 3);
        assert!(!has_duplicate(a.all_tokens().cloned()));
        assert!(matches!(
            assign_tokens(&t, 3, 1, AssignMode::Distinct, 11),
            Err(Error::InfeasibleAssignment(_))
        ));
    }

    #[test]
    fn planted_duplicate_on_path() {
        let t = make_path(2, 0).unwrap();
        let a = assign_tokens(&t, 2, 4, AssignMode::WithDuplicates(1), 3).unwrap();
        assert_eq!(a.tokens_at(0), a.tokens_at(1));
        assert_eq!(a.tokens_at(0).len(), 1);
    }

    #[test]
    fn exact_duplicate_count() {
        let t = make_random_connected(10, 0.2, 1).unwrap();
        let a = assign_tokens(&t, 20, 16, AssignMode::WithDuplicates(3), 9).unwrap();
        let mut all: Vec<_> = a.all_tokens().cloned().collect();
        all.sort();
        let repeats = all.windows(2).filter(|w| w[0] == w[1]).count();
        assert_eq!(repeats, 3);
    }

    #[test]
    fn min_far_lands_on_max_eccentricity() {
        let t = make_path(7, 2).unwrap();
        let a = assign_tokens(&t, 5, 12, AssignMode::AdversarialMinFar, 4).unwrap();
        let (holder, _) = a.min_token();
        assert_eq!(holder, 0);
    }

    #[test]
    fn deterministic_given_seed() {
        let t = make_random_connected(12, 0.3, 8).unwrap();
        for mode in [AssignMode::Distinct, AssignMode::Uniform, AssignMode::WithDuplicates(2)] {
            assert_eq!(
                assign_tokens(&t, 9, 10, mode, 77).unwrap(),
                assign_tokens(&t, 9, 10, mode, 77).unwrap()
            );
        }
    }

    #[test]
    fn uniform_forces_collision_past_pigeonhole() {
        let t = make_ring(4, 0).unwrap();
        let a = assign_tokens(&t, 5, 2, AssignMode::Uniform, 1).unwrap();
        assert!(has_duplicate(a.all_tokens().cloned()));
    }
}
