//! The three token-collision protocols.

pub mod hash;
pub mod large;
pub mod rand;
pub mod small;

pub use hash::HashSpec;
pub use large::LargeProtocol;
pub use rand::RandProtocol;
pub use small::SmallProtocol;

use crate::engine::Knowledge;
use crate::message::{RoundMessage, Verdict};
use crate::token::has_duplicate;
use crate::topology::Port;

/// Applies neighbours' verdicts and the `build` conjunction. Returns whether
/// a verdict was adopted.
pub(crate) fn absorb_common(res: &mut Option<crate::message::Verdict>, build: &mut bool, inbox: &[RoundMessage]) -> bool {
    let mut adopted = false;
    for m in inbox {
        if let Some(r) = m.res {
            *res = Some(r);
            adopted = true;
        }
        *build &= m.build;
    }
    adopted
}

/// Ports (1-based) of `inbox` entries satisfying `pred`.
pub(crate) fn ports_where(inbox: &[RoundMessage], mut pred: impl FnMut(usize, &RoundMessage) -> bool) -> Vec<Port> {
    inbox
        .iter()
        .enumerate()
        .filter(|(i, m)| pred(*i, m))
        .map(|(i, _)| i as Port + 1)
        .collect()
}

pub(crate) fn msg(inbox: &[RoundMessage], port: Port) -> &RoundMessage {
    &inbox[port as usize - 1]
}

/// The root's decision rule shared by all protocols.
pub(crate) fn decide<T: Ord + Clone>(
    knowledge: Knowledge,
    n: usize,
    k: usize,
    cnt: u32,
    collected: impl IntoIterator<Item = T>,
) -> Option<Verdict> {
    let items: Vec<T> = collected.into_iter().collect();
    let distinct = !has_duplicate(items.iter().cloned());
    match knowledge {
        Knowledge::None => None,
        Knowledge::N if cnt as usize == n && distinct => Some(Verdict::AllDistinct),
        Knowledge::K if items.len() == k && distinct => Some(Verdict::AllDistinct),
        _ => Some(Verdict::Collision),
    }
}
