//! The auto-regressive graph-token grammar: per node, an atom-type token,
//! an optional nonzero charge, an optional positive hydrogen count, then
//! edges to earlier nodes in ascending gap. BOS/EOS wrap the stream.

mod grammar;
mod text;
mod vocab;

pub use grammar::{legal_next_tokens, GrammarState, LegalNext};
pub use text::{parse_token_line, TokenTextError};
pub use vocab::Vocab;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::element::Element;
use crate::molgraph::{implicit_hydrogens, Atom, Bond, BondOrder, MolError, Molecule, NodeOrder};

/// Default cap on stream length; longer molecules are rejected at
/// serialization so decoder buffers stay bounded.
pub const DEFAULT_MAX_LEN: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Token {
    Bos,
    /// Atom type; aromatic atoms are distinct vocabulary entries (written
    /// lowercase in text form).
    Atom { element: Element, aromatic: bool },
    /// Formal charge in [-4, +4], never zero (zero charge is skipped).
    Charge(i8),
    /// Hydrogen count, always >= 1 (zero hydrogens are skipped).
    HCount(u8),
    /// Bond to the node `gap` positions earlier.
    Edge { gap: usize, order: BondOrder },
    Eos,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("stream must begin with <bos>")]
    MissingBos,
    #[error("stream ended without <eos>")]
    MissingEos,
    #[error("token after <eos> at index {at}")]
    AfterEos { at: usize },
    #[error("unexpected {token:?} at index {at}")]
    UnexpectedToken { at: usize, token: Token },
    #[error("edge gap {gap} at index {at} reaches before the first node ({nodes} nodes so far)")]
    EdgeGapOutOfRange { at: usize, gap: usize, nodes: usize },
    #[error("duplicate edge (gap {gap}) at index {at}")]
    DuplicateEdge { at: usize, gap: usize },
    #[error("edge gaps must increase within a node: gap {gap} after {prev} at index {at}")]
    NonIncreasingGap { at: usize, gap: usize, prev: usize },
    #[error("invalid token payload at index {at}: {token:?}")]
    InvalidPayload { at: usize, token: Token },
    #[error("stream of {len} tokens exceeds the limit {max}")]
    TooLong { len: usize, max: usize },
    #[error("molecule error: {0}")]
    Mol(#[from] MolError),
}

/// How hydrogen counts are reconstructed when reading a stream back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HMode {
    /// The HCOUNT token is the count; absent means zero.
    #[default]
    Explicit,
    /// Missing HCOUNT tokens are filled from the default-valence model
    /// (the regime without generated atomic features).
    Inferred,
}

/// A grammar-valid token stream beginning with BOS and ending with EOS.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Token>", into = "Vec<Token>")]
pub struct TokenSeq(Vec<Token>);

impl TokenSeq {
    /// Validate a raw stream (including the implied deserialization).
    pub fn new(tokens: Vec<Token>) -> Result<TokenSeq, GrammarError> {
        deserialize(&tokens, HMode::Explicit)?;
        Ok(TokenSeq(tokens))
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<Token>> for TokenSeq {
    type Error = GrammarError;
    fn try_from(tokens: Vec<Token>) -> Result<Self, Self::Error> {
        TokenSeq::new(tokens)
    }
}

impl From<TokenSeq> for Vec<Token> {
    fn from(seq: TokenSeq) -> Vec<Token> {
        seq.0
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, tok) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{tok}")?;
        }
        Ok(())
    }
}

/// Serialize an ordered molecule with the default length cap.
pub fn serialize(m: &Molecule, order: &NodeOrder) -> Result<TokenSeq, GrammarError> {
    serialize_bounded(m, order, DEFAULT_MAX_LEN)
}

/// Per node in ascending position: ATOM; CHARGE iff nonzero; HCOUNT iff
/// positive; then edges to earlier nodes in ascending gap. Atom maps and
/// stereo annotations are not token material and are dropped.
pub fn serialize_bounded(
    m: &Molecule,
    order: &NodeOrder,
    max_len: usize,
) -> Result<TokenSeq, GrammarError> {
    order
        .check(m)
        .map_err(GrammarError::Mol)?;
    let by_position = order.atoms_by_position();
    let mut tokens = vec![Token::Bos];
    for (pos, &atom_idx) in by_position.iter().enumerate() {
        let atom = m.atom(atom_idx);
        tokens.push(Token::Atom {
            element: atom.element,
            aromatic: atom.aromatic,
        });
        if atom.formal_charge != 0 {
            tokens.push(Token::Charge(atom.formal_charge));
        }
        if atom.hydrogen_count > 0 {
            tokens.push(Token::HCount(atom.hydrogen_count));
        }
        let mut gaps: Vec<(usize, BondOrder)> = m
            .neighbors(atom_idx)
            .iter()
            .filter(|&&v| order.position(v) < pos)
            .map(|&v| {
                (
                    pos - order.position(v),
                    m.bond_between(atom_idx, v).unwrap().order,
                )
            })
            .collect();
        gaps.sort_unstable_by_key(|&(gap, _)| gap);
        for (gap, bond_order) in gaps {
            tokens.push(Token::Edge {
                gap,
                order: bond_order,
            });
        }
    }
    tokens.push(Token::Eos);
    if tokens.len() > max_len {
        return Err(GrammarError::TooLong {
            len: tokens.len(),
            max: max_len,
        });
    }
    Ok(TokenSeq(tokens))
}

/// Rebuild a molecule from a raw token stream, validating the grammar.
///
/// In explicit mode the round trip `deserialize(serialize(m, o))` equals
/// `m` relabeled into position order, up to atom maps and stereo tags.
pub fn deserialize(tokens: &[Token], h_mode: HMode) -> Result<Molecule, GrammarError> {
    let mut state = GrammarState::new();
    let mut atoms: Vec<Atom> = Vec::new();
    let mut explicit_h: Vec<bool> = Vec::new();
    let mut bonds: Vec<Bond> = Vec::new();
    let mut saw_eos = false;
    for (at, &token) in tokens.iter().enumerate() {
        state.step(at, token)?;
        match token {
            Token::Bos | Token::Eos => {
                saw_eos = token == Token::Eos;
            }
            Token::Atom { element, aromatic } => {
                let mut atom = Atom::new(element);
                atom.aromatic = aromatic;
                atoms.push(atom);
                explicit_h.push(false);
            }
            Token::Charge(c) => {
                atoms.last_mut().unwrap().formal_charge = c;
            }
            Token::HCount(h) => {
                atoms.last_mut().unwrap().hydrogen_count = h;
                *explicit_h.last_mut().unwrap() = true;
            }
            Token::Edge { gap, order } => {
                let current = atoms.len() - 1;
                bonds.push(Bond::new(current, current - gap, order));
            }
        }
    }
    if !saw_eos {
        return Err(GrammarError::MissingEos);
    }
    if h_mode == HMode::Inferred {
        let mut orders: Vec<Vec<BondOrder>> = vec![Vec::new(); atoms.len()];
        for b in &bonds {
            orders[b.a].push(b.order);
            orders[b.b].push(b.order);
        }
        for (i, atom) in atoms.iter_mut().enumerate() {
            if !explicit_h[i] {
                atom.hydrogen_count =
                    implicit_hydrogens(atom.element, atom.aromatic, orders[i].iter().copied())
                        .unwrap_or(0);
            }
        }
    }
    Ok(Molecule::new(atoms, bonds)?)
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Bos => f.write_str("<bos>"),
            Token::Eos => f.write_str("<eos>"),
            Token::Atom { element, aromatic } => {
                if *aromatic {
                    write!(f, "A:{}", element.symbol().to_ascii_lowercase())
                } else {
                    write!(f, "A:{}", element.symbol())
                }
            }
            Token::Charge(c) if *c > 0 => write!(f, "C:+{c}"),
            Token::Charge(c) => write!(f, "C:{c}"),
            Token::HCount(h) => write!(f, "H:{h}"),
            Token::Edge { gap, order } => write!(f, "E:{}:{}", gap, order.code()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::{parse_smiles, random_order, ParseMode};

    fn parse(s: &str) -> Molecule {
        parse_smiles(s, ParseMode::Standard).unwrap()
    }

    fn atom(sym: &str) -> Token {
        Token::Atom {
            element: Element::from_symbol(sym).unwrap(),
            aromatic: false,
        }
    }

    fn edge(gap: usize, code: u8) -> Token {
        Token::Edge {
            gap,
            order: BondOrder::from_code(code).unwrap(),
        }
    }

    #[test]
    fn dimethyl_ether_stream() {
        let m = parse("[CH3:1][O:2][CH3:3]");
        let seq = serialize(&m, &NodeOrder::identity(3)).unwrap();
        assert_eq!(
            seq.tokens(),
            &[
                Token::Bos,
                atom("C"),
                Token::HCount(3),
                atom("O"),
                edge(1, 1),
                atom("C"),
                Token::HCount(3),
                edge(1, 1),
                Token::Eos,
            ]
        );
        assert_eq!(seq.to_string(), "<bos> A:C H:3 A:O E:1:1 A:C H:3 E:1:1 <eos>");
    }

    #[test]
    fn ring_edges_ascend_by_gap() {
        let m = parse("C1CC1");
        let seq = serialize(&m, &NodeOrder::identity(3)).unwrap();
        assert_eq!(
            seq.tokens(),
            &[
                Token::Bos,
                atom("C"),
                Token::HCount(2),
                atom("C"),
                Token::HCount(2),
                edge(1, 1),
                atom("C"),
                Token::HCount(2),
                edge(1, 1),
                edge(2, 1),
                Token::Eos,
            ]
        );
    }

    #[test]
    fn ammonium_charge_then_hydrogens() {
        let m = parse("[NH4+]");
        let seq = serialize(&m, &NodeOrder::identity(1)).unwrap();
        assert_eq!(
            seq.tokens(),
            &[Token::Bos, atom("N"), Token::Charge(1), Token::HCount(4), Token::Eos]
        );
    }

    #[test]
    fn round_trip_exact() {
        for smiles in [
            "[CH3:1][O:2][CH3:3]",
            "C1CC1",
            "[NH4+]",
            "c1ccccc1C(=O)[O-]",
            "CC.O.N",
        ] {
            let m = parse(smiles);
            for seed in 0..10 {
                let order = random_order(&m, seed).unwrap();
                let seq = serialize(&m, &order).unwrap();
                let back = deserialize(seq.tokens(), HMode::Explicit).unwrap();
                let expected = m.apply_order(&order).unwrap().structural_core();
                assert_eq!(back, expected, "{smiles} seed {seed}");
            }
        }
    }

    /// The other direction of the bijection: re-serializing a deserialized
    /// stream in identity order reproduces it token for token.
    #[test]
    fn serialize_after_deserialize_is_identity() {
        use crate::beam::random_walk;
        use crate::gentoken::Vocab;
        use rand::SeedableRng;

        let vocab = Vocab::standard(6);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(808);
        for _ in 0..2000 {
            let walk = random_walk(&vocab, true, 30, &mut rng);
            let m = deserialize(&walk, HMode::Explicit).unwrap();
            let again = serialize(&m, &NodeOrder::identity(m.atom_count())).unwrap();
            assert_eq!(again.tokens(), walk.as_slice());
        }
    }

    #[test]
    fn explicit_mode_absent_hcount_means_zero() {
        let tokens = vec![Token::Bos, atom("C"), Token::Eos];
        let m = deserialize(&tokens, HMode::Explicit).unwrap();
        assert_eq!(m.atom(0).hydrogen_count, 0);
        let m = deserialize(&tokens, HMode::Inferred).unwrap();
        assert_eq!(m.atom(0).hydrogen_count, 4);
    }

    #[test]
    fn edge_before_first_node_rejected() {
        let tokens = vec![Token::Bos, atom("C"), edge(1, 1), Token::Eos];
        assert!(matches!(
            deserialize(&tokens, HMode::Explicit),
            Err(GrammarError::EdgeGapOutOfRange { gap: 1, nodes: 1, .. })
        ));
    }

    #[test]
    fn duplicate_edge_rejected() {
        let tokens = vec![
            Token::Bos,
            atom("C"),
            atom("C"),
            edge(1, 1),
            edge(1, 1),
            Token::Eos,
        ];
        assert!(matches!(
            deserialize(&tokens, HMode::Explicit),
            Err(GrammarError::DuplicateEdge { gap: 1, .. })
        ));
    }

    #[test]
    fn charge_before_atom_rejected() {
        let tokens = vec![Token::Bos, Token::Charge(1), Token::Eos];
        assert!(matches!(
            deserialize(&tokens, HMode::Explicit),
            Err(GrammarError::UnexpectedToken { at: 1, .. })
        ));
    }

    #[test]
    fn missing_eos_rejected() {
        let tokens = vec![Token::Bos, atom("C")];
        assert_eq!(
            deserialize(&tokens, HMode::Explicit).unwrap_err(),
            GrammarError::MissingEos
        );
    }

    #[test]
    fn length_cap_enforced() {
        let m = parse(&"C".repeat(200));
        let err = serialize_bounded(&m, &NodeOrder::identity(200), 64).unwrap_err();
        assert!(matches!(err, GrammarError::TooLong { max: 64, .. }));
    }

    #[test]
    fn inferred_mode_fills_valence_hydrogens() {
        // C-C single bond, no hydrogen tokens.
        let tokens = vec![Token::Bos, atom("C"), atom("C"), edge(1, 1), Token::Eos];
        let m = deserialize(&tokens, HMode::Inferred).unwrap();
        assert_eq!(m.atom(0).hydrogen_count, 3);
        assert_eq!(m.atom(1).hydrogen_count, 3);
        // Explicit token still wins in inferred mode.
        let tokens = vec![
            Token::Bos,
            atom("C"),
            Token::HCount(1),
            atom("C"),
            edge(1, 1),
            Token::Eos,
        ];
        let m = deserialize(&tokens, HMode::Inferred).unwrap();
        assert_eq!(m.atom(0).hydrogen_count, 1);
    }
}
