use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::iig::{extract_iig, IIGraph};
use super::oracle_collision;
use crate::engine::{Algorithm, Knowledge, Trace};
use crate::message::{Ele, Verdict};
use crate::state::NodeState;
use crate::token::{Ident, Token};
use crate::topology::{TokenAssignment, Topology};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Invariant {
    WellFormed,
    RidMonotone,
    PathNonIncreasing,
    Forest,
    SubtreeConnected,
    TokenConservation,
    CountAtDecision,
    ExactlyOnce,
    SingleTreeOnDistinct,
    ChildrenStable,
    HaltSafety,
    VerdictAgreement,
}

impl Invariant {
    pub const ALL: [Invariant; 12] = [
        Invariant::WellFormed,
        Invariant::RidMonotone,
        Invariant::PathNonIncreasing,
        Invariant::Forest,
        Invariant::SubtreeConnected,
        Invariant::TokenConservation,
        Invariant::CountAtDecision,
        Invariant::ExactlyOnce,
        Invariant::SingleTreeOnDistinct,
        Invariant::ChildrenStable,
        Invariant::HaltSafety,
        Invariant::VerdictAgreement,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Invariant::WellFormed => "well-formed",
            Invariant::RidMonotone => "rid-monotone",
            Invariant::PathNonIncreasing => "path-non-increasing",
            Invariant::Forest => "forest",
            Invariant::SubtreeConnected => "subtree-connected",
            Invariant::TokenConservation => "token-conservation",
            Invariant::CountAtDecision => "count-at-decision",
            Invariant::ExactlyOnce => "exactly-once",
            Invariant::SingleTreeOnDistinct => "single-tree-on-distinct",
            Invariant::ChildrenStable => "children-stable",
            Invariant::HaltSafety => "halt-safety",
            Invariant::VerdictAgreement => "verdict-agreement",
        }
    }
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub invariant: Invariant,
    /// Index into the trace's snapshots.
    pub snapshot: usize,
    pub round: u64,
    pub nodes: Vec<usize>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nodes: Vec<String> = self.nodes.iter().map(|v| v.to_string()).collect();
        write!(
            f,
            "{} at snapshot {} (round {}), nodes [{}]: {}",
            self.invariant,
            self.snapshot,
            self.round,
            nodes.join(","),
            self.detail
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub checked: u64,
    pub failures: u64,
    pub first: Option<Violation>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub traces: u64,
    pub snapshots: u64,
    /// Some trace ended at the round limit; later rounds went unchecked.
    pub truncated: bool,
    pub tallies: BTreeMap<Invariant, Tally>,
}

impl InvariantReport {
    fn new() -> Self {
        InvariantReport {
            traces: 0,
            snapshots: 0,
            truncated: false,
            tallies: Invariant::ALL.iter().map(|&i| (i, Tally::default())).collect(),
        }
    }

    fn checked(&mut self, inv: Invariant) {
        self.tallies.get_mut(&inv).unwrap().checked += 1;
    }

    fn fail(&mut self, v: Violation) {
        let t = self.tallies.get_mut(&v.invariant).unwrap();
        t.failures += 1;
        if t.first.is_none() {
            t.first = Some(v);
        }
    }

    pub fn failures(&self) -> u64 {
        self.tallies.values().map(|t| t.failures).sum()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }

    pub fn flags(&self, inv: Invariant) -> bool {
        self.tallies.get(&inv).is_some_and(|t| t.failures > 0)
    }

    pub fn first_failure(&self) -> Option<&Violation> {
        self.tallies.values().filter_map(|t| t.first.as_ref()).min_by_key(|v| v.snapshot)
    }

    pub fn merge(&mut self, other: &InvariantReport) {
        self.traces += other.traces;
        self.snapshots += other.snapshots;
        self.truncated |= other.truncated;
        for (inv, t) in &other.tallies {
            let mine = self.tallies.entry(*inv).or_default();
            mine.checked += t.checked;
            mine.failures += t.failures;
            if mine.first.is_none() {
                mine.first = t.first.clone();
            }
        }
    }

    /// Line-oriented text form read by people and by the CLI.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "traces {} snapshots {} truncated {} failures {}\n",
            self.traces,
            self.snapshots,
            self.truncated,
            self.failures()
        );
        for (inv, t) in &self.tallies {
            let status = if t.failures == 0 { "PASS" } else { "FAIL" };
            out.push_str(&format!("{status} {inv} checked {} failures {}\n", t.checked, t.failures));
            if let Some(v) = &t.first {
                out.push_str(&format!("  first: {v}\n"));
            }
        }
        out
    }
}

fn sorted_hex<'a>(ts: impl IntoIterator<Item = &'a Token>) -> Vec<String> {
    let mut v: Vec<String> = ts.into_iter().map(|t| t.to_hex()).collect();
    v.sort_unstable();
    v
}

/// Is `a` a sub-multiset of `b`? Both sorted.
fn sub_multiset(a: &[String], b: &[String]) -> bool {
    let mut j = 0;
    for x in a {
        while j < b.len() && b[j] < *x {
            j += 1;
        }
        if j == b.len() || b[j] != *x {
            return false;
        }
        j += 1;
    }
    true
}

/// Tokens held or in transit towards a parent in one snapshot.
fn tokens_in_system(snap: &[NodeState], token_len: u32) -> Vec<String> {
    let mut all: Vec<&Token> = Vec::new();
    let mut owned: Vec<Token> = Vec::new();
    for s in snap {
        let c = s.core();
        all.extend(c.x.iter());
        match (&c.ele, s.large()) {
            (Ele::Token(t), _) => all.push(t),
            (Ele::Packed(ts), _) => all.extend(ts.iter()),
            (Ele::Pieces(_), Some(l)) => {
                if let Some(t) = &l.ele0 {
                    owned.push(t.narrow(token_len).unwrap_or_else(|| t.clone()));
                }
            }
            _ => {}
        }
    }
    all.extend(owned.iter());
    sorted_hex(all)
}

/// Hashed values plus raw tokens still held, for the randomized protocol.
fn items_in_system(snap: &[NodeState]) -> u64 {
    snap.iter()
        .map(|s| {
            let r = s.rand().expect("randomized trace");
            let in_flight = matches!(r.large.core.ele, Ele::Hashed { .. }) as u64;
            r.large.core.x.len() as u64 + r.hashed.len() as u64 + in_flight
        })
        .sum()
}

struct Ctx<'a> {
    trace: &'a Trace,
    a: &'a TokenAssignment,
    t: &'a Topology,
    algorithm: Algorithm,
    knowledge: Knowledge,
    oracle: Verdict,
    /// Identifier-holding nodes have pairwise distinct identifiers.
    ids_distinct: bool,
    rid_width: u32,
    pieces: u32,
    report: InvariantReport,
}

impl Ctx<'_> {
    fn violation(&mut self, inv: Invariant, i: usize, nodes: Vec<usize>, detail: String) {
        let round = self.trace.rounds.get(i).copied().unwrap_or(0);
        self.report.fail(Violation { invariant: inv, snapshot: i, round, nodes, detail });
    }

    fn check(&mut self, inv: Invariant, i: usize, ok: bool, nodes: impl FnOnce() -> Vec<usize>, detail: impl FnOnce() -> String) {
        self.report.checked(inv);
        if !ok {
            self.violation(inv, i, nodes(), detail());
        }
    }

    fn well_formed(&mut self, i: usize, snap: &[NodeState]) {
        let (t, a) = (self.t, self.a);
        let n = t.node_count();
        for (v, s) in snap.iter().enumerate() {
            let c = s.core();
            let deg = t.degree(v) as u32;
            let mut problems = Vec::new();
            let kind_ok = matches!(
                (self.algorithm, s),
                (Algorithm::DetSmall, NodeState::Small(_))
                    | (Algorithm::DetLarge, NodeState::Large(_))
                    | (Algorithm::Randomized, NodeState::Rand(_))
            );
            if !kind_ok {
                problems.push("state kind does not match algorithm".to_string());
            }
            if c.parent.is_some_and(|p| p == 0 || p > deg) {
                problems.push(format!("parent port {:?} outside 1..={deg}", c.parent));
            }
            if c.children.windows(2).any(|w| w[0] >= w[1]) || c.children.iter().any(|&p| p == 0 || p > deg) {
                problems.push(format!("children {:?} not a sorted subset of 1..={deg}", c.children));
            }
            if c.cnt.is_some_and(|x| x == 0 || x as usize > n) {
                problems.push(format!("cnt {:?} outside 1..={n}", c.cnt));
            }
            if c.x.iter().any(|tok| tok.len() != a.token_len()) {
                problems.push("token of wrong length in x".to_string());
            }
            if let Ident::Value(r) = &c.rid {
                if r.len() != self.rid_width {
                    problems.push(format!("rid width {} != {}", r.len(), self.rid_width));
                }
            }
            if let Some(l) = s.large() {
                let d = deg as usize;
                if l.port_rid.len() != d || l.port_sent.len() != d || l.port_ele.len() != d || l.port_sente.len() != d {
                    problems.push("per-port vectors do not match the degree".to_string());
                }
                if l.sent > self.pieces || l.sente0 >= self.pieces.max(1) {
                    problems.push(format!("positions sent={} sente0={} exceed M={}", l.sent, l.sente0, self.pieces));
                }
            }
            let ok = problems.is_empty();
            self.check(Invariant::WellFormed, i, ok, || vec![v], || problems.join("; "));
        }
    }

    fn structure(&mut self, i: usize, snap: &[NodeState], g: &IIGraph) {
        let n = snap.len();
        if i > 0 {
            let trace = self.trace;
            let prev = &trace.snapshots[i - 1];
            for v in 0..n {
                let (before, after) = (&prev[v].core().rid, &snap[v].core().rid);
                self.check(Invariant::RidMonotone, i, after <= before, || vec![v], || {
                    format!("rid rose from {} to {}", show(before), show(after))
                });
            }
        }

        let cycle = g.find_cycle();
        let ok = g.dangling.is_empty() && cycle.is_none();
        self.check(
            Invariant::Forest,
            i,
            ok,
            || cycle.clone().unwrap_or_else(|| g.dangling.clone()),
            || match &cycle {
                Some(c) => format!("directed cycle of length {}", c.len()),
                None => "parent port leads nowhere".to_string(),
            },
        );

        for v in 0..n {
            if let Some(p) = g.parent[v] {
                let ok = g.rid[v] >= g.rid[p];
                self.check(Invariant::PathNonIncreasing, i, ok, || vec![v, p], || {
                    format!("child rid {} below parent rid {}", show(&g.rid[v]), show(&g.rid[p]))
                });
            }
        }

        if !ok {
            return;
        }
        for r in 0..n {
            if let Some(l) = snap[r].large() {
                if l.sent != self.pieces {
                    continue;
                }
            }
            let mut bad = None;
            for w in g.subtree(r) {
                if g.rid[w] != g.rid[r] {
                    continue;
                }
                let path = g.path_to_root(w);
                let upto = path.iter().position(|&x| x == r).unwrap_or(path.len());
                if let Some(&x) = path[..upto].iter().find(|&&x| g.rid[x] != g.rid[r]) {
                    bad = Some((w, x));
                    break;
                }
            }
            self.check(
                Invariant::SubtreeConnected,
                i,
                bad.is_none(),
                || bad.map(|(w, x)| vec![r, w, x]).unwrap_or_default(),
                || "a node sharing the subtree root's rid hangs below one that does not".to_string(),
            );
        }
    }

    fn conservation(&mut self, i: usize, snap: &[NodeState], initial: &[String], dropped: &mut u64) {
        let (present, total) = if self.algorithm == Algorithm::Randomized {
            (None, items_in_system(snap))
        } else {
            let p = tokens_in_system(snap, self.a.token_len());
            let len = p.len() as u64;
            (Some(p), len)
        };
        let k = initial.len() as u64;
        let subset = match &present {
            Some(p) => sub_multiset(p, initial),
            None => total <= k,
        };
        let now_dropped = k.saturating_sub(total);
        let exact = self.algorithm != Algorithm::Randomized && self.oracle == Verdict::AllDistinct;
        let ok = subset && now_dropped >= *dropped && (!exact || now_dropped == 0);
        let prev = *dropped;
        self.check(Invariant::TokenConservation, i, ok, Vec::new, || {
            if !subset {
                format!("{total} items in the system are not drawn from the {k} initial tokens")
            } else if now_dropped < prev {
                format!("dropped count fell from {prev} to {now_dropped}")
            } else {
                format!("{now_dropped} tokens missing on an all-distinct instance")
            }
        });
        *dropped = (*dropped).max(now_dropped);
    }

    fn decisions(&mut self, i: usize, snap: &[NodeState], g: &IIGraph) {
        let (trace, t, a) = (self.trace, self.t, self.a);
        let prev = &trace.snapshots[i - 1];
        for v in 0..snap.len() {
            if snap[v].core().res.is_none() || prev[v].core().res.is_some() {
                continue;
            }
            let adopted = t.neighbors(v).iter().any(|&u| prev[u].core().res.is_some());
            if adopted {
                continue;
            }
            let tree = g.id_subtree(v);
            let c = snap[v].core();
            let ok = c.parent.is_none() && c.cnt == Some(tree.len() as u32);
            self.check(Invariant::CountAtDecision, i, ok, || vec![v], || {
                format!("root decided with cnt {:?}, parent {:?}, identifier subtree of {}", c.cnt, c.parent, tree.len())
            });

            let expected: Vec<&Token> = tree.iter().flat_map(|&w| a.tokens_at(w)).collect();
            let (ok, detail) = match snap[v].rand() {
                Some(r) => {
                    let want = expected.len() as u64;
                    let ok = r.large.core.x.is_empty() && r.hashed.len() as u64 == want && r.tokcnt == Some(want);
                    (ok, format!("collected {} hashes, tokcnt {:?}, subtree holds {want} tokens", r.hashed.len(), r.tokcnt))
                }
                None => {
                    let got = sorted_hex(c.x.iter());
                    let want = sorted_hex(expected);
                    let ok = got == want;
                    (ok, format!("collected {} tokens, subtree holds {}", got.len(), want.len()))
                }
            };
            self.check(Invariant::ExactlyOnce, i, ok, || vec![v], || detail);
        }
    }

    fn single_tree(&mut self, i: usize, g: &IIGraph) {
        let trace = self.trace;
        let initial = &trace.snapshots[0];
        let min = (0..initial.len()).min_by(|&a, &b| initial[a].core().rid.cmp(&initial[b].core().rid)).unwrap();
        let want = initial[min].core().rid.clone();
        let roots = g.roots();
        let strays: Vec<usize> = (0..g.node_count()).filter(|&v| g.rid[v] != want).collect();
        let ok = roots == [min] && strays.is_empty() && g.is_forest();
        self.check(
            Invariant::SingleTreeOnDistinct,
            i,
            ok,
            || if strays.is_empty() { roots.clone() } else { strays.clone() },
            || format!("roots {roots:?} (expected [{min}]), {} nodes off the minimum identifier", strays.len()),
        );
    }

    fn children_stable(&mut self, i: usize) {
        let (trace, t, pieces) = (self.trace, self.t, self.pieces);
        let snaps = &trace.snapshots;
        let (old, before, now) = (&snaps[i - 2], &snaps[i - 1], &snaps[i]);
        let settled = |w: usize| {
            !old[w].core().build && old[w].large().is_none_or(|l| l.sent == pieces)
        };
        for v in 0..now.len() {
            if !settled(v) || !t.neighbors(v).iter().all(|&u| settled(u)) {
                continue;
            }
            let (a, b) = (&before[v].core().children, &now[v].core().children);
            let ok = a == b;
            self.check(Invariant::ChildrenStable, i, ok, || vec![v], || format!("children changed from {a:?} to {b:?}"));
        }
    }

    fn halt_safety(&mut self, i: usize) {
        let (trace, t) = (self.trace, self.t);
        let (before, now) = (&trace.snapshots[i - 1], &trace.snapshots[i]);
        for v in 0..now.len() {
            for &u in t.neighbors(v) {
                if let Some(r) = before[u].core().res {
                    let got = now[v].core().res;
                    let ok = got.is_some();
                    self.check(Invariant::HaltSafety, i, ok, || vec![u, v], || {
                        format!("neighbour decided {r} but node still has no verdict")
                    });
                }
            }
        }
    }

    fn verdicts(&mut self) {
        let trace = self.trace;
        let last = trace.snapshots.len() - 1;
        let snap = &trace.snapshots[last];
        let res: Vec<Option<Verdict>> = snap.iter().map(|s| s.core().res).collect();
        if self.knowledge == Knowledge::None {
            let deciders: Vec<usize> = (0..res.len()).filter(|&v| res[v].is_some()).collect();
            let ok = deciders.is_empty();
            self.check(Invariant::VerdictAgreement, last, ok, || deciders.clone(), || {
                "a node decided without knowing n or k".to_string()
            });
            return;
        }
        if self.trace.truncated {
            return;
        }
        let missing: Vec<usize> = (0..res.len()).filter(|&v| res[v].is_none()).collect();
        let first = res.iter().flatten().next().copied();
        let split: Vec<usize> = (0..res.len()).filter(|&v| res[v].is_some() && res[v] != first).collect();
        let wrong = match (self.algorithm, first) {
            (_, None) => false,
            (Algorithm::Randomized, Some(Verdict::AllDistinct)) => self.oracle != Verdict::AllDistinct,
            (Algorithm::Randomized, Some(Verdict::Collision)) => false,
            (_, Some(v)) => v != self.oracle,
        };
        let ok = missing.is_empty() && split.is_empty() && !wrong;
        let oracle = self.oracle;
        self.check(
            Invariant::VerdictAgreement,
            last,
            ok,
            || if !missing.is_empty() { missing.clone() } else { split.clone() },
            || format!("{} without verdict, {} disagreeing, verdict {first:?} vs oracle {oracle}", missing.len(), split.len()),
        );
    }
}

fn show(r: &Ident) -> String {
    match r {
        Ident::Value(t) => t.to_hex(),
        Ident::Top => "top".to_string(),
    }
}

/// Evaluates every invariant on every recorded snapshot of `trace`.
pub fn check_trace(trace: &Trace, a: &TokenAssignment, t: &Topology) -> InvariantReport {
    let p = &trace.header.params;
    let oracle = oracle_collision(a);
    let ids_distinct = {
        let first = trace.snapshots.first().map(Vec::as_slice).unwrap_or(&[]);
        let ids: Vec<&Ident> = first.iter().map(|s| &s.core().rid).filter(|r| !r.is_top()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        sorted.dedup();
        sorted.len() == ids.len() && oracle == Verdict::AllDistinct
    };
    let mut cx = Ctx {
        trace,
        a,
        t,
        algorithm: p.algorithm,
        knowledge: p.knowledge,
        oracle,
        ids_distinct,
        rid_width: p.id_bits,
        pieces: p.pieces,
        report: InvariantReport::new(),
    };
    cx.report.traces = 1;
    cx.report.snapshots = trace.snapshots.len() as u64;
    cx.report.truncated = trace.truncated;
    if trace.snapshots.is_empty() {
        return cx.report;
    }

    let initial = sorted_hex(a.all_tokens());
    let mut dropped = 0u64;
    let mut conserving = true;
    let mut tree_checked = false;
    for (i, snap) in trace.snapshots.iter().enumerate() {
        let g = extract_iig(snap, t);
        cx.well_formed(i, snap);
        cx.structure(i, snap, &g);
        if conserving {
            cx.conservation(i, snap, &initial, &mut dropped);
            // a node holding a verdict halts next step and stops receiving
            conserving = snap.iter().all(|s| s.core().res.is_none());
        }
        if i >= 1 {
            cx.decisions(i, snap, &g);
            cx.halt_safety(i);
        }
        if i >= 2 {
            cx.children_stable(i);
        }
        if !tree_checked && snap.iter().all(|s| !s.core().build) {
            tree_checked = true;
            if cx.ids_distinct {
                cx.single_tree(i, &g);
            }
        }
    }
    cx.verdicts();
    cx.report
}
