//! Per-port messages and their wire size.
//!
//! Field sizes in bits:
//!
//! | field      | size |
//! |------------|------|
//! | `res`      | 2 |
//! | `build`, `ischild`, `f` | 1 each |
//! | `cnt`      | 1 + ⌈log2(n+1)⌉ (presence flag, value) |
//! | `rid` full | 2 + L for a value, 2 for ⊤ |
//! | `rid` window | 2 + ⌈log2(M+1)⌉ + pieces·B (no pieces for ⊤) |
//! | `ele` ⊤ / ⊥ | 2 |
//! | `ele` token | 2 + L |
//! | `ele` packed | 2 + ⌈log2(cap+1)⌉ + count·L |
//! | `ele` pieces | 2 + pieces·B |
//! | `ele` hashed | 2 + width |
//! | `tokcnt`   | 1, plus γ(tokcnt+1) when present |
//! | `seed`     | 1, plus 64 + γ(khat) when present |
//!
//! γ(x) = 2⌊log2 x⌋ + 1 is the Elias gamma length. The two trailing
//! fields only exist in the randomized protocol.

use serde::{Deserialize, Serialize};

use crate::token::{Ident, Token};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Verdict {
    AllDistinct,
    Collision,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::AllDistinct => "all-distinct",
            Verdict::Collision => "collision",
        })
    }
}

/// Convergecast slot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ele {
    /// Something below may still be on its way up.
    Top,
    /// Everything below has been delivered.
    Bottom,
    Token(Token),
    Packed(Vec<Token>),
    /// A window of pieces of the token being streamed.
    Pieces(Vec<u64>),
    Hashed { value: u64, width: u32 },
}

impl Ele {
    pub fn is_bottom(&self) -> bool {
        matches!(self, Ele::Bottom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RidField {
    Full(Ident),
    /// Pieces `pos+1 ..` of the identifier; `None` stands for ⊤.
    Window { pos: u32, pieces: Option<Vec<u64>> },
}

/// Seed broadcast by a root so every node can rebuild the same hash.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashSeed {
    pub seed: u64,
    pub khat: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandAux {
    pub tokcnt: Option<u64>,
    pub hash: Option<HashSeed>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundMessage {
    pub res: Option<Verdict>,
    pub build: bool,
    pub rid: RidField,
    pub ischild: bool,
    pub f: bool,
    pub cnt: Option<u32>,
    pub ele: Ele,
    pub aux: Option<RandAux>,
}

/// Smallest `b` with `2^b >= x`.
pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

fn gamma_len(x: u64) -> u64 {
    debug_assert!(x >= 1);
    2 * (63 - x.leading_zeros()) as u64 + 1
}

/// Run-wide constants the encoding depends on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub n: usize,
    pub token_len: u32,
    /// Piece width `B` for windowed fields.
    pub piece_bits: u32,
    /// Pieces per identifier `M`.
    pub pieces: u32,
    pub pack_cap: u32,
}

impl Layout {
    pub fn cnt_bits(&self) -> u64 {
        1 + ceil_log2(self.n as u64 + 1) as u64
    }

    pub fn pos_bits(&self) -> u64 {
        ceil_log2(self.pieces as u64 + 1) as u64
    }

    pub fn rid_bits(&self, rid: &RidField) -> u64 {
        match rid {
            RidField::Full(Ident::Value(t)) => 2 + t.len() as u64,
            RidField::Full(Ident::Top) => 2,
            RidField::Window { pieces, .. } => {
                2 + self.pos_bits() + pieces.as_ref().map_or(0, |p| p.len() as u64 * self.piece_bits as u64)
            }
        }
    }

    pub fn ele_bits(&self, ele: &Ele) -> u64 {
        match ele {
            Ele::Top | Ele::Bottom => 2,
            Ele::Token(t) => 2 + t.len() as u64,
            Ele::Packed(ts) => {
                2 + ceil_log2(self.pack_cap as u64 + 1) as u64 + ts.iter().map(|t| t.len() as u64).sum::<u64>()
            }
            Ele::Pieces(p) => 2 + p.len() as u64 * self.piece_bits as u64,
            Ele::Hashed { width, .. } => 2 + *width as u64,
        }
    }

    fn aux_bits(aux: &RandAux) -> u64 {
        let tok = 1 + aux.tokcnt.map_or(0, |c| gamma_len(c + 1));
        let seed = 1 + aux.hash.map_or(0, |h| 64 + gamma_len(h.khat.max(1)));
        tok + seed
    }

    /// Per-field sizes, in wire order.
    pub fn field_bits(&self, m: &RoundMessage) -> Vec<(&'static str, u64)> {
        let mut v = vec![
            ("res", 2),
            ("build", 1),
            ("rid", self.rid_bits(&m.rid)),
            ("ischild", 1),
            ("f", 1),
            ("cnt", self.cnt_bits()),
            ("ele", self.ele_bits(&m.ele)),
        ];
        if let Some(aux) = &m.aux {
            v.push(("aux", Self::aux_bits(aux)));
        }
        v
    }

    pub fn message_bits(&self, m: &RoundMessage) -> u64 {
        self.field_bits(m).iter().map(|(_, b)| b).sum()
    }

    /// Bits of every field except `ele`, for a message carrying a full
    /// `token_len`-bit identifier.
    pub fn small_header_bits(&self) -> u64 {
        2 + 1 + (2 + self.token_len as u64) + 1 + 1 + self.cnt_bits()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(n: usize, l: u32) -> Layout {
        Layout { n, token_len: l, piece_bits: l, pieces: 1, pack_cap: 1 }
    }

    fn msg(rid: RidField, ele: Ele) -> RoundMessage {
        RoundMessage { res: None, build: true, rid, ischild: false, f: false, cnt: None, ele, aux: None }
    }

    #[test]
    fn small_message_with_bottom() {
        let lay = layout(8, 8);
        let rid = RidField::Full(Ident::Value(Token::from_u64(8, 3).unwrap()));
        assert_eq!(lay.message_bits(&msg(rid.clone(), Ele::Bottom)), 22);
        let with_tok = msg(rid, Ele::Token(Token::from_u64(8, 9).unwrap()));
        assert_eq!(lay.message_bits(&with_tok), 30);
    }

    #[test]
    fn packed_payload() {
        let lay = Layout { pack_cap: 4, ..layout(8, 4) };
        let toks = vec![Token::zero(4); 4];
        assert_eq!(lay.ele_bits(&Ele::Packed(toks)), 2 + 3 + 16);
        assert_eq!(lay.ele_bits(&Ele::Packed(vec![Token::zero(4)])), 2 + 3 + 4);
    }

    #[test]
    fn window_sizes() {
        let lay = Layout { n: 16, token_len: 64, piece_bits: 16, pieces: 4, pack_cap: 1 };
        let w = RidField::Window { pos: 1, pieces: Some(vec![7]) };
        assert_eq!(lay.rid_bits(&w), 2 + 3 + 16);
        assert_eq!(lay.rid_bits(&RidField::Window { pos: 4, pieces: None }), 5);
        assert_eq!(lay.ele_bits(&Ele::Pieces(vec![1, 2])), 34);
    }

    #[test]
    fn log_and_gamma() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(9), 4);
        assert_eq!(ceil_log2(1 << 40), 40);
        assert_eq!(gamma_len(1), 1);
        assert_eq!(gamma_len(4), 5);
        let aux = RandAux { tokcnt: Some(3), hash: None };
        assert_eq!(Layout::aux_bits(&aux), 1 + 5 + 1);
    }
}
