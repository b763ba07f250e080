//! Finite token vocabularies for scorers and decoders.

use std::collections::HashMap;

use super::{LegalNext, Token};
use crate::element::Element;
use crate::molgraph::BondOrder;

/// An indexed token table. Scorer outputs are vectors over a vocabulary;
/// the grammar mask is realized per vocabulary entry.
#[derive(Debug, Clone)]
pub struct Vocab {
    tokens: Vec<Token>,
    index: HashMap<Token, usize>,
}

impl Vocab {
    pub fn from_tokens(tokens: Vec<Token>) -> Vocab {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, &t)| (t, i))
            .collect();
        Vocab { tokens, index }
    }

    /// Organic-subset atoms (with aromatic variants), charges in
    /// [-4, +4] \ {0}, hydrogen counts 1..=6, and edges up to `max_gap`.
    pub fn standard(max_gap: usize) -> Vocab {
        let mut tokens = vec![Token::Bos, Token::Eos];
        let plain = ["B", "C", "N", "O", "F", "P", "S", "Cl", "Br", "I"];
        for sym in plain {
            tokens.push(Token::Atom {
                element: Element::from_symbol(sym).unwrap(),
                aromatic: false,
            });
        }
        for sym in ["B", "C", "N", "O", "P", "S"] {
            tokens.push(Token::Atom {
                element: Element::from_symbol(sym).unwrap(),
                aromatic: true,
            });
        }
        for c in [-4i8, -3, -2, -1, 1, 2, 3, 4] {
            tokens.push(Token::Charge(c));
        }
        for h in 1..=6u8 {
            tokens.push(Token::HCount(h));
        }
        for gap in 1..=max_gap {
            for order in [
                BondOrder::Single,
                BondOrder::Double,
                BondOrder::Triple,
                BondOrder::Aromatic,
            ] {
                tokens.push(Token::Edge { gap, order });
            }
        }
        Vocab::from_tokens(tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, id: usize) -> Token {
        self.tokens[id]
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn id_of(&self, token: &Token) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Per-entry legality under a follow set.
    pub fn legal_mask(&self, legal: &LegalNext) -> Vec<bool> {
        self.tokens.iter().map(|t| legal.allows(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gentoken::legal_next_tokens;

    #[test]
    fn standard_vocab_indexes_itself() {
        let v = Vocab::standard(8);
        assert_eq!(v.id_of(&Token::Bos), Some(0));
        for (i, t) in v.tokens().iter().enumerate() {
            assert_eq!(v.id_of(t), Some(i));
        }
        assert_eq!(v.len(), 2 + 10 + 6 + 8 + 6 + 8 * 4);
    }

    #[test]
    fn mask_matches_follow_set() {
        let v = Vocab::standard(4);
        let legal = legal_next_tokens(&[Token::Bos]).unwrap();
        let mask = v.legal_mask(&legal);
        for (i, allowed) in mask.iter().enumerate() {
            assert_eq!(*allowed, matches!(v.token(i), Token::Atom { .. }));
        }
    }
}
