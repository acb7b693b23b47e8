//! Plain-text instance format.
//!
//! ```text
//! # comment
//! n k L
//! u v                 one line per undirected edge
//! ports v: a b c      optional; neighbours of v in port order
//! v: tok tok          one line per node, fixed-width hex tokens
//! ```
//!
//! Without `ports` lines each node numbers its ports by ascending neighbour
//! index. [`emit_instance`] always writes them, so parsing its output gives
//! back the identical port map.

use std::fmt::Write as _;

use super::{Instance, Topology, TokenAssignment};
use crate::error::{Error, Result};
use crate::token::Token;

pub fn emit_instance(inst: &Instance) -> String {
    let t = &inst.topology;
    let a = &inst.tokens;
    let mut s = String::new();
    writeln!(s, "{} {} {}", t.node_count(), a.k(), a.token_len()).unwrap();
    for (u, v) in t.edges() {
        writeln!(s, "{u} {v}").unwrap();
    }
    for v in 0..t.node_count() {
        let list: Vec<String> = t.neighbors(v).iter().map(usize::to_string).collect();
        writeln!(s, "ports {v}: {}", list.join(" ")).unwrap();
    }
    for v in 0..t.node_count() {
        let toks: Vec<String> = a.tokens_at(v).iter().map(Token::to_hex).collect();
        if toks.is_empty() {
            writeln!(s, "{v}:").unwrap();
        } else {
            writeln!(s, "{v}: {}", toks.join(" ")).unwrap();
        }
    }
    s
}

fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::Parse(format!("line {line}: expected a non-negative integer, got `{s}`")))
}

fn node_index(s: &str, n: usize, line: usize) -> Result<usize> {
    let v = parse_usize(s.trim(), line)?;
    if v >= n {
        return Err(Error::Parse(format!("line {line}: node {v} out of range (n = {n})")));
    }
    Ok(v)
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap().trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hl, header) = lines.next().ok_or_else(|| Error::Parse("empty instance".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::Parse(format!("line {hl}: header must be `n k L`")));
    }
    let n = parse_usize(fields[0], hl)?;
    let k = parse_usize(fields[1], hl)?;
    let len = parse_usize(fields[2], hl)? as u32;
    if n == 0 || len == 0 {
        return Err(Error::Parse(format!("line {hl}: n and L must be positive")));
    }

    let mut edges = Vec::new();
    let mut ports: Vec<Option<Vec<usize>>> = vec![None; n];
    let mut lists: Vec<Option<Vec<Token>>> = vec![None; n];
    for (ln, line) in lines {
        if let Some(rest) = line.strip_prefix("ports ") {
            let (v, nbrs) = rest
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("line {ln}: expected `ports v: ...`")))?;
            let v = node_index(v, n, ln)?;
            let list = nbrs
                .split_whitespace()
                .map(|u| node_index(u, n, ln))
                .collect::<Result<Vec<_>>>()?;
            if ports[v].replace(list).is_some() {
                return Err(Error::Parse(format!("line {ln}: duplicate ports line for node {v}")));
            }
        } else if let Some((v, toks)) = line.split_once(':') {
            let v = node_index(v, n, ln)?;
            let list = toks
                .split_whitespace()
                .map(|h| Token::from_hex(len, h).map_err(|e| Error::Parse(format!("line {ln}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if lists[v].replace(list).is_some() {
                return Err(Error::Parse(format!("line {ln}: duplicate token line for node {v}")));
            }
        } else {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 2 {
                return Err(Error::Parse(format!("line {ln}: expected edge `u v`, got `{line}`")));
            }
            edges.push((node_index(f[0], n, ln)?, node_index(f[1], n, ln)?));
        }
    }

    let mut adj = vec![Vec::new(); n];
    for &(u, v) in &edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
    }
    let neighbors = if ports.iter().all(Option::is_none) {
        adj
    } else {
        let mut out = Vec::with_capacity(n);
        for (v, p) in ports.into_iter().enumerate() {
            let p = p.ok_or_else(|| Error::Parse(format!("node {v} has no ports line")))?;
            let mut sorted = p.clone();
            sorted.sort_unstable();
            if sorted != adj[v] {
                return Err(Error::Parse(format!("ports line of node {v} disagrees with the edge list")));
            }
            out.push(p);
        }
        out
    };
    let topology = Topology::from_port_order(neighbors).map_err(|e| Error::Parse(e.to_string()))?;
    if topology.edge_count() != edges.len() {
        return Err(Error::Parse("duplicate edge in edge list".into()));
    }
    let lists: Vec<Vec<Token>> = lists.into_iter().map(Option::unwrap_or_default).collect();
    let tokens = TokenAssignment::new(len, lists).map_err(|e| Error::Parse(e.to_string()))?;
    if tokens.k() != k {
        return Err(Error::Parse(format!("header says k = {k} but {} tokens are listed", tokens.k())));
    }
    Ok(Instance { topology, tokens })
}
