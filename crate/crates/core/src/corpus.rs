//! The seeded fuzzing corpus shared by the verification command and the
//! acceptance suite.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{Algorithm, Knowledge, RunConfig};
use crate::error::Result;
use crate::rng;
use crate::topology::{
    assign_tokens, make_dumbbell, make_path, make_random_connected, make_ring, AssignMode, Instance,
};

pub const DEFAULT_SIZE: usize = 500;
pub const DEFAULT_SEED: u64 = 2024;
/// Piece width used for pipelined runs over the corpus.
pub const PIECE_BITS: u32 = 16;
pub const TOKEN_LENGTHS: [u32; 4] = [4, PIECE_BITS, 4 * PIECE_BITS, 16 * PIECE_BITS];
pub const DUPLICATE_COUNTS: [usize; 3] = [0, 1, 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Ring,
    Path,
    Random,
    Dumbbell,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Ring => "ring",
            Family::Path => "path",
            Family::Random => "random",
            Family::Dumbbell => "dumbbell",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Entry {
    pub id: usize,
    pub family: Family,
    pub duplicates: usize,
    pub seed: u64,
    pub instance: Instance,
}

/// `size` instances cycling through families, token lengths and duplicate
/// counts; `n ≤ 32`, `k ≤ 64`.
pub fn generate(size: usize, seed: u64) -> Result<Vec<Entry>> {
    let families = [Family::Ring, Family::Path, Family::Random, Family::Dumbbell];
    let mut out = Vec::with_capacity(size);
    for id in 0..size {
        let mut r = rng::stream(seed, "corpus", id as u64);
        let s: u64 = r.random();
        let family = families[id % 4];
        let len = TOKEN_LENGTHS[(id / 4) % 4];
        let duplicates = DUPLICATE_COUNTS[(id / 16) % 3];
        let topology = match family {
            Family::Ring => make_ring(r.random_range(3..=32), s)?,
            Family::Path => make_path(r.random_range(1..=32), s)?,
            Family::Random => make_random_connected(r.random_range(1..=32), r.random_range(0.05..0.4), s)?,
            Family::Dumbbell => {
                let h = r.random_range(1..=12);
                make_dumbbell(h, r.random_range(0..=32 - 2 * h), s)?
            }
        };
        let distinct_cap = if len < 16 { 1usize << len } else { usize::MAX };
        let k = r.random_range((2 * duplicates).max(1)..=64).min(distinct_cap.saturating_add(duplicates));
        let mode = match duplicates {
            0 if id % 7 == 0 => AssignMode::AdversarialMinFar,
            0 => AssignMode::Distinct,
            d => AssignMode::WithDuplicates(d),
        };
        let tokens = assign_tokens(&topology, k, len, mode, s)?;
        out.push(Entry { id, family, duplicates, seed: s, instance: Instance { topology, tokens } });
    }
    Ok(out)
}

/// Configurations each corpus instance is run under: the small protocol
/// with and without packing where tokens fit a message, and the pipelined
/// protocol with `B = 16`. Knowledge alternates between `n` and `k`.
pub fn configs(e: &Entry) -> Vec<RunConfig> {
    let knowledge = if e.id.is_multiple_of(2) { Knowledge::N } else { Knowledge::K };
    let mut out = Vec::new();
    if e.instance.tokens.token_len() <= PIECE_BITS {
        for pack in [false, true] {
            let mut c = RunConfig::new(Algorithm::DetSmall, knowledge);
            c.pack_tokens = pack;
            c.seed = e.seed;
            out.push(c);
        }
    }
    let mut c = RunConfig::new(Algorithm::DetLarge, knowledge);
    c.bandwidth = Some(PIECE_BITS);
    c.seed = e.seed;
    out.push(c);
    out
}
