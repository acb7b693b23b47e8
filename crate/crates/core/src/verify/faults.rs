//! Canned trace mutations, three per invariant, used to show that every
//! checker actually fires on the fault class it guards against.

use super::check::{check_trace, Invariant};
use super::iig::extract_iig;
use crate::engine::{run, Algorithm, Knowledge, RunConfig, Trace};
use crate::error::{Error, Result};
use crate::message::{Ele, Verdict};
use crate::state::Core;
use crate::token::{Ident, Token};
use crate::topology::{make_ring, TokenAssignment, Topology};

const LEN: u32 = 8;

#[derive(Clone, Copy)]
pub struct Fault {
    pub target: Invariant,
    pub name: &'static str,
    apply: fn(&mut Trace, &Topology) -> Option<()>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaultOutcome {
    pub target: Invariant,
    pub name: &'static str,
    pub caught: bool,
}

fn core(tr: &mut Trace, i: usize, v: usize) -> &mut Core {
    tr.snapshots[i][v].core_mut()
}

fn last(tr: &Trace) -> usize {
    tr.snapshots.len() - 1
}

/// First snapshot in which every node has quit building.
fn settled(tr: &Trace) -> Option<usize> {
    tr.snapshots.iter().position(|s| s.iter().all(|x| !x.core().build))
}

/// First snapshot holding a verdict, and the node that produced it.
fn decision(tr: &Trace) -> Option<(usize, usize)> {
    let d = tr.snapshots.iter().position(|s| s.iter().any(|x| x.core().res.is_some()))?;
    let root = tr.snapshots[d].iter().position(|x| x.core().res.is_some())?;
    Some((d, root))
}

fn root_at(tr: &Trace, i: usize) -> Option<usize> {
    tr.snapshots[i].iter().position(|x| x.core().parent.is_none())
}

/// A non-root node that itself has a child in the identifier-induced graph.
fn inner_node(tr: &Trace, t: &Topology, i: usize) -> Option<usize> {
    let g = extract_iig(&tr.snapshots[i], t);
    (0..g.node_count()).find(|&v| g.parent[v].is_some() && !g.children(v).is_empty())
}

fn leaf(tr: &Trace, t: &Topology, i: usize) -> Option<usize> {
    let g = extract_iig(&tr.snapshots[i], t);
    (0..g.node_count()).find(|&v| g.parent[v].is_some() && g.children(v).is_empty())
}

fn tok(v: u64) -> Token {
    Token::from_u64(LEN, v).expect("fits")
}

fn flip(v: Verdict) -> Verdict {
    match v {
        Verdict::AllDistinct => Verdict::Collision,
        Verdict::Collision => Verdict::AllDistinct,
    }
}

pub fn catalogue() -> Vec<Fault> {
    use Invariant::*;
    fn f(target: Invariant, name: &'static str, apply: fn(&mut Trace, &Topology) -> Option<()>) -> Fault {
        Fault { target, name, apply }
    }
    vec![
        f(WellFormed, "parent-port-zero", |tr, t| {
            let i = last(tr);
            let v = leaf(tr, t, i)?;
            core(tr, i, v).parent = Some(0);
            Some(())
        }),
        f(WellFormed, "duplicate-child-port", |tr, t| {
            let i = last(tr);
            let v = inner_node(tr, t, i)?;
            core(tr, i, v).children = vec![1, 1];
            Some(())
        }),
        f(WellFormed, "overlong-token", |tr, _| {
            let i = settled(tr)?;
            core(tr, i, 0).x.push_back(Token::zero(LEN + 1));
            Some(())
        }),
        f(RidMonotone, "rid-to-top", |tr, t| {
            let i = last(tr);
            let v = leaf(tr, t, i)?;
            core(tr, i, v).rid = Ident::Top;
            Some(())
        }),
        f(RidMonotone, "rid-revert", |tr, _| {
            let (i, v) = (1..last(tr)).find_map(|i| {
                (0..tr.snapshots[i].len())
                    .find(|&v| tr.snapshots[i][v].core().rid < tr.snapshots[i - 1][v].core().rid)
                    .map(|v| (i, v))
            })?;
            let old = tr.snapshots[i - 1][v].core().rid.clone();
            core(tr, i + 1, v).rid = old;
            Some(())
        }),
        f(RidMonotone, "rid-bump-early", |tr, _| {
            let v = root_at(tr, last(tr))?;
            core(tr, 1, v).rid = Ident::Value(Token::all_ones(LEN));
            Some(())
        }),
        f(PathNonIncreasing, "child-below-parent", |tr, t| {
            let i = last(tr);
            let v = leaf(tr, t, i)?;
            core(tr, i, v).rid = Ident::Value(tok(0));
            Some(())
        }),
        f(PathNonIncreasing, "root-to-top", |tr, _| {
            let i = last(tr);
            let r = root_at(tr, i)?;
            core(tr, i, r).rid = Ident::Top;
            Some(())
        }),
        f(PathNonIncreasing, "inner-below-root", |tr, t| {
            let i = settled(tr)?;
            let v = inner_node(tr, t, i)?;
            core(tr, i, v).rid = Ident::Value(tok(0));
            Some(())
        }),
        f(Forest, "root-points-to-child", |tr, t| {
            let i = last(tr);
            let r = root_at(tr, i)?;
            let g = extract_iig(&tr.snapshots[i], t);
            let c = *g.children(r).first()?;
            core(tr, i, r).parent = t.port_to(r, c);
            Some(())
        }),
        f(Forest, "mutual-parents", |tr, t| {
            let i = settled(tr)?;
            let v = leaf(tr, t, i)?;
            let u = extract_iig(&tr.snapshots[i], t).parent[v]?;
            core(tr, i, u).parent = t.port_to(u, v);
            Some(())
        }),
        f(Forest, "dangling-parent", |tr, t| {
            let i = last(tr);
            let v = leaf(tr, t, i)?;
            core(tr, i, v).parent = Some(t.degree(v) as u32 + 1);
            Some(())
        }),
        f(SubtreeConnected, "gap-top", |tr, t| {
            let i = last(tr);
            let y = inner_node(tr, t, i)?;
            core(tr, i, y).rid = Ident::Top;
            Some(())
        }),
        f(SubtreeConnected, "gap-ones", |tr, t| {
            let i = last(tr);
            let y = inner_node(tr, t, i)?;
            core(tr, i, y).rid = Ident::Value(Token::all_ones(LEN));
            Some(())
        }),
        f(SubtreeConnected, "gap-zero", |tr, t| {
            let i = settled(tr)?;
            let y = inner_node(tr, t, i)?;
            core(tr, i, y).rid = Ident::Value(tok(0));
            Some(())
        }),
        f(TokenConservation, "duplicate-in-flight", |tr, _| {
            let (d, _) = decision(tr)?;
            let (i, v, t) = (1..d).find_map(|i| {
                tr.snapshots[i].iter().enumerate().find_map(|(v, s)| match &s.core().ele {
                    Ele::Token(t) => Some((i, v, t.clone())),
                    _ => None,
                })
            })?;
            core(tr, i, v).x.push_back(t);
            Some(())
        }),
        f(TokenConservation, "vanish", |tr, _| {
            let i = settled(tr)?;
            let v = (0..tr.snapshots[i].len()).find(|&v| !tr.snapshots[i][v].core().x.is_empty())?;
            core(tr, i, v).x.pop_front();
            Some(())
        }),
        f(TokenConservation, "forge", |tr, _| {
            let i = settled(tr)?;
            let v = (0..tr.snapshots[i].len()).find(|&v| !tr.snapshots[i][v].core().x.is_empty())?;
            core(tr, i, v).x[0] = tok(1);
            Some(())
        }),
        f(CountAtDecision, "cnt-plus-one", |tr, _| {
            let (d, r) = decision(tr)?;
            let c = core(tr, d, r);
            c.cnt = Some(c.cnt? + 1);
            Some(())
        }),
        f(CountAtDecision, "cnt-minus-one", |tr, _| {
            let (d, r) = decision(tr)?;
            let c = core(tr, d, r);
            c.cnt = Some(c.cnt? - 1);
            Some(())
        }),
        f(CountAtDecision, "cnt-missing", |tr, _| {
            let (d, r) = decision(tr)?;
            core(tr, d, r).cnt = None;
            Some(())
        }),
        f(ExactlyOnce, "lost-token", |tr, _| {
            let (d, r) = decision(tr)?;
            core(tr, d, r).x.pop_back()?;
            Some(())
        }),
        f(ExactlyOnce, "double-collect", |tr, _| {
            let (d, r) = decision(tr)?;
            let c = core(tr, d, r);
            let t = c.x.front()?.clone();
            c.x.push_back(t);
            Some(())
        }),
        f(ExactlyOnce, "overwritten-token", |tr, _| {
            let (d, r) = decision(tr)?;
            let c = core(tr, d, r);
            c.x[0] = c.x.get(1)?.clone();
            Some(())
        }),
        f(SingleTreeOnDistinct, "cut-subtree", |tr, t| {
            let i = settled(tr)?;
            let v = leaf(tr, t, i)?;
            core(tr, i, v).parent = None;
            Some(())
        }),
        f(SingleTreeOnDistinct, "stray-identifier", |tr, t| {
            let i = settled(tr)?;
            let v = leaf(tr, t, i)?;
            core(tr, i, v).rid = Ident::Top;
            Some(())
        }),
        f(SingleTreeOnDistinct, "wrong-root", |tr, t| {
            let i = settled(tr)?;
            let r = root_at(tr, i)?;
            let c = *extract_iig(&tr.snapshots[i], t).children(r).first()?;
            core(tr, i, r).parent = t.port_to(r, c);
            core(tr, i, c).parent = None;
            Some(())
        }),
        f(ChildrenStable, "child-dropped", |tr, t| {
            let i = last(tr);
            let v = inner_node(tr, t, i)?;
            core(tr, i, v).children.pop()?;
            Some(())
        }),
        f(ChildrenStable, "child-added", |tr, t| {
            let i = last(tr);
            let v = (0..t.node_count()).find(|&v| {
                let c = &tr.snapshots[i][v].core().children;
                !c.is_empty() && c.len() < t.degree(v)
            })?;
            core(tr, i, v).children = (1..=t.degree(v) as u32).collect();
            Some(())
        }),
        f(ChildrenStable, "children-cleared", |tr, _| {
            let i = last(tr);
            let v = (0..tr.snapshots[i].len()).find(|&v| !tr.snapshots[i][v].core().children.is_empty())?;
            core(tr, i, v).children.clear();
            Some(())
        }),
        f(HaltSafety, "neighbour-misses-verdict", |tr, t| {
            let (d, r) = decision(tr)?;
            (d < last(tr)).then_some(())?;
            let u = t.neighbors(r)[0];
            core(tr, d + 1, u).res = None;
            Some(())
        }),
        f(HaltSafety, "neighbour-never-halts", |tr, t| {
            let (d, r) = decision(tr)?;
            (d < last(tr)).then_some(())?;
            let u = t.neighbors(r)[0];
            for i in d + 1..tr.snapshots.len() {
                core(tr, i, u).res = None;
            }
            Some(())
        }),
        f(HaltSafety, "second-hop-misses-verdict", |tr, t| {
            let (d, r) = decision(tr)?;
            let u = t.neighbors(r)[0];
            let w = *t.neighbors(u).iter().find(|&&w| w != r)?;
            (d + 2 <= last(tr)).then_some(())?;
            core(tr, d + 2, w).res = None;
            Some(())
        }),
        f(VerdictAgreement, "one-node-flipped", |tr, _| {
            let i = last(tr);
            let c = core(tr, i, 0);
            c.res = Some(flip(c.res?));
            Some(())
        }),
        f(VerdictAgreement, "one-node-silent", |tr, _| {
            let i = last(tr);
            core(tr, i, 0).res = None;
            Some(())
        }),
        f(VerdictAgreement, "all-flipped", |tr, _| {
            let i = last(tr);
            for v in 0..tr.snapshots[i].len() {
                let c = core(tr, i, v);
                c.res = Some(flip(c.res?));
            }
            Some(())
        }),
    ]
}

/// Clean baseline: a six-node ring with distinct tokens, minimum in the
/// middle of the index range so the final tree has depth three.
pub fn baseline() -> Result<(Trace, TokenAssignment, Topology)> {
    let t = make_ring(6, 11)?;
    let a = TokenAssignment::from_values(LEN, &[&[5], &[9], &[2], &[7, 3], &[4], &[8]])?;
    let out = run(&t, &a, &RunConfig::new(Algorithm::DetSmall, Knowledge::N).with_trace())?;
    let trace = out.trace.expect("full trace requested");
    Ok((trace, a, t))
}

/// Applies every fault to the baseline and reports whether its target
/// checker fired. Fails if the unmutated baseline is not clean.
pub fn self_test() -> Result<Vec<FaultOutcome>> {
    let (trace, a, t) = baseline()?;
    let clean = check_trace(&trace, &a, &t);
    if !clean.passed() {
        return Err(Error::InternalInvariant { round: 0, detail: format!("baseline trace is not clean:\n{}", clean.to_text()) });
    }
    Ok(catalogue()
        .into_iter()
        .map(|f| {
            let mut tr = trace.clone();
            let applied = (f.apply)(&mut tr, &t).is_some();
            let caught = applied && check_trace(&tr, &a, &t).flags(f.target);
            FaultOutcome { target: f.target, name: f.name, caught }
        })
        .collect())
}
