//! Node automaton states as recorded in traces.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::message::{Ele, HashSeed, Verdict};
use crate::token::{Ident, Token};
use crate::topology::Port;

/// Fields shared by all three protocols.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Core {
    pub build: bool,
    pub x: VecDeque<Token>,
    pub rid: Ident,
    pub parent: Option<Port>,
    /// Sorted ascending.
    pub children: Vec<Port>,
    pub f: bool,
    pub cnt: Option<u32>,
    pub ele: Ele,
    pub res: Option<Verdict>,
}

impl Core {
    pub fn new(inputs: &[Token], rid: Ident) -> Self {
        Core {
            build: true,
            x: inputs.iter().cloned().collect(),
            rid,
            parent: None,
            children: Vec::new(),
            f: false,
            cnt: None,
            ele: Ele::Top,
            res: None,
        }
    }
}

/// Identifier of a node holding `inputs`: the minimum, or ⊤ if empty.
pub fn min_ident(inputs: &[Token]) -> Ident {
    inputs.iter().min().cloned().map_or(Ident::Top, Ident::Value)
}

/// State of the pipelined variant. Identifiers are `M·B` bits wide.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LargeState {
    pub core: Core,
    /// Pieces of the own identifier already sent.
    pub sent: u32,
    /// Per port: received identifier prefix padded with ones.
    pub port_rid: Vec<Ident>,
    pub port_sent: Vec<u32>,
    /// Per port: token being reassembled.
    pub port_ele: Vec<Option<Token>>,
    pub port_sente: Vec<u32>,
    /// Outgoing token being sliced.
    pub ele0: Option<Token>,
    pub sente0: u32,
}

impl LargeState {
    pub fn new(core: Core, degree: usize) -> Self {
        LargeState {
            core,
            sent: 0,
            port_rid: vec![Ident::Top; degree],
            port_sent: vec![0; degree],
            port_ele: vec![None; degree],
            port_sente: vec![0; degree],
            ele0: None,
            sente0: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    Elect,
    SeedBroadcast,
    Aggregate,
    Done,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandState {
    pub large: LargeState,
    pub phase: Phase,
    pub inputs: u64,
    pub tokcnt: Option<u64>,
    pub hash: Option<HashSeed>,
    /// Set once the hash seed has been forwarded.
    pub hash_sent: bool,
    pub hashed: VecDeque<u64>,
    /// Seed this node would broadcast if it ends up a root.
    pub seed_candidate: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeState {
    Small(Core),
    Large(LargeState),
    Rand(RandState),
}

impl NodeState {
    pub fn core(&self) -> &Core {
        match self {
            NodeState::Small(c) => c,
            NodeState::Large(l) => &l.core,
            NodeState::Rand(r) => &r.large.core,
        }
    }

    pub fn core_mut(&mut self) -> &mut Core {
        match self {
            NodeState::Small(c) => c,
            NodeState::Large(l) => &mut l.core,
            NodeState::Rand(r) => &mut r.large.core,
        }
    }

    pub fn large(&self) -> Option<&LargeState> {
        match self {
            NodeState::Small(_) => None,
            NodeState::Large(l) => Some(l),
            NodeState::Rand(r) => Some(&r.large),
        }
    }

    pub fn large_mut(&mut self) -> Option<&mut LargeState> {
        match self {
            NodeState::Small(_) => None,
            NodeState::Large(l) => Some(l),
            NodeState::Rand(r) => Some(&mut r.large),
        }
    }

    pub fn rand(&self) -> Option<&RandState> {
        match self {
            NodeState::Rand(r) => Some(r),
            _ => None,
        }
    }

    /// Canonical serialization used for state identity.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("node state serializes")
    }
}

impl From<Core> for NodeState {
    fn from(c: Core) -> Self {
        NodeState::Small(c)
    }
}

impl From<LargeState> for NodeState {
    fn from(l: LargeState) -> Self {
        NodeState::Large(l)
    }
}

impl From<RandState> for NodeState {
    fn from(r: RandState) -> Self {
        NodeState::Rand(r)
    }
}
