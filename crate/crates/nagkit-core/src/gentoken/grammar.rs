//! Token-level grammar: an LL(1) state machine whose follow set depends
//! only on the last token tag, the node count, and the last edge gap.

use super::{GrammarError, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Last {
    Start,
    Bos,
    Atom,
    Charge,
    HCount,
    Edge { gap: usize },
    Eos,
}

/// Incremental validator; cheap to clone per decoding hypothesis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrammarState {
    nodes: usize,
    last: Last,
}

impl Default for GrammarState {
    fn default() -> Self {
        Self::new()
    }
}

impl GrammarState {
    pub fn new() -> GrammarState {
        GrammarState {
            nodes: 0,
            last: Last::Start,
        }
    }

    /// Number of ATOM tokens consumed.
    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn finished(&self) -> bool {
        self.last == Last::Eos
    }

    /// Advance by one token; `at` is its stream index, used in errors only.
    pub fn step(&mut self, at: usize, token: Token) -> Result<(), GrammarError> {
        if self.last == Last::Eos {
            return Err(GrammarError::AfterEos { at });
        }
        if self.last == Last::Start {
            return if token == Token::Bos {
                self.last = Last::Bos;
                Ok(())
            } else {
                Err(GrammarError::MissingBos)
            };
        }
        match token {
            Token::Bos => Err(GrammarError::UnexpectedToken { at, token }),
            Token::Atom { .. } => {
                self.nodes += 1;
                self.last = Last::Atom;
                Ok(())
            }
            Token::Charge(c) => {
                if c == 0 || !(-4..=4).contains(&c) {
                    return Err(GrammarError::InvalidPayload { at, token });
                }
                if self.last == Last::Atom {
                    self.last = Last::Charge;
                    Ok(())
                } else {
                    Err(GrammarError::UnexpectedToken { at, token })
                }
            }
            Token::HCount(h) => {
                if h == 0 {
                    return Err(GrammarError::InvalidPayload { at, token });
                }
                if matches!(self.last, Last::Atom | Last::Charge) {
                    self.last = Last::HCount;
                    Ok(())
                } else {
                    Err(GrammarError::UnexpectedToken { at, token })
                }
            }
            Token::Edge { gap, .. } => {
                if gap == 0 {
                    return Err(GrammarError::InvalidPayload { at, token });
                }
                match self.last {
                    Last::Atom | Last::Charge | Last::HCount => {
                        if gap >= self.nodes {
                            return Err(GrammarError::EdgeGapOutOfRange {
                                at,
                                gap,
                                nodes: self.nodes,
                            });
                        }
                        self.last = Last::Edge { gap };
                        Ok(())
                    }
                    Last::Edge { gap: prev } => {
                        if gap == prev {
                            return Err(GrammarError::DuplicateEdge { at, gap });
                        }
                        if gap < prev {
                            return Err(GrammarError::NonIncreasingGap { at, gap, prev });
                        }
                        if gap >= self.nodes {
                            return Err(GrammarError::EdgeGapOutOfRange {
                                at,
                                gap,
                                nodes: self.nodes,
                            });
                        }
                        self.last = Last::Edge { gap };
                        Ok(())
                    }
                    _ => Err(GrammarError::UnexpectedToken { at, token }),
                }
            }
            Token::Eos => {
                if self.nodes >= 1 {
                    self.last = Last::Eos;
                    Ok(())
                } else {
                    Err(GrammarError::UnexpectedToken { at, token })
                }
            }
        }
    }

    /// The exact follow set of the current prefix.
    pub fn legal(&self) -> LegalNext {
        match self.last {
            Last::Start => LegalNext {
                bos: true,
                ..LegalNext::none()
            },
            Last::Eos => LegalNext::none(),
            Last::Bos => LegalNext {
                atom: true,
                ..LegalNext::none()
            },
            Last::Atom | Last::Charge | Last::HCount => LegalNext {
                atom: true,
                eos: true,
                charge: self.last == Last::Atom,
                hcount: matches!(self.last, Last::Atom | Last::Charge),
                edge_gaps: if self.nodes >= 2 { Some((1, self.nodes - 1)) } else { None },
                ..LegalNext::none()
            },
            Last::Edge { gap } => LegalNext {
                atom: true,
                eos: true,
                edge_gaps: if gap + 1 < self.nodes {
                    Some((gap + 1, self.nodes - 1))
                } else {
                    None
                },
                ..LegalNext::none()
            },
        }
    }
}

/// Follow set with bounded parameters: edges carry an inclusive gap window;
/// any bond order is grammatical.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LegalNext {
    pub bos: bool,
    pub atom: bool,
    pub charge: bool,
    pub hcount: bool,
    pub eos: bool,
    /// Inclusive `(min_gap, max_gap)` window, when any edge is legal.
    pub edge_gaps: Option<(usize, usize)>,
}

impl LegalNext {
    fn none() -> LegalNext {
        LegalNext {
            bos: false,
            atom: false,
            charge: false,
            hcount: false,
            eos: false,
            edge_gaps: None,
        }
    }

    pub fn allows(&self, token: &Token) -> bool {
        match token {
            Token::Bos => self.bos,
            Token::Atom { .. } => self.atom,
            Token::Charge(c) => self.charge && *c != 0 && (-4..=4).contains(c),
            Token::HCount(h) => self.hcount && *h >= 1,
            Token::Eos => self.eos,
            Token::Edge { gap, .. } => match self.edge_gaps {
                Some((lo, hi)) => *gap >= lo && *gap <= hi,
                None => false,
            },
        }
    }

    /// True when nothing (not even EOS) may follow; only holds after EOS.
    pub fn is_empty(&self) -> bool {
        !(self.bos || self.atom || self.charge || self.hcount || self.eos)
            && self.edge_gaps.is_none()
    }
}

/// Validate `prefix` and return its follow set.
pub fn legal_next_tokens(prefix: &[Token]) -> Result<LegalNext, GrammarError> {
    let mut state = GrammarState::new();
    for (at, &token) in prefix.iter().enumerate() {
        state.step(at, token)?;
    }
    Ok(state.legal())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::Element;
    use crate::gentoken::{deserialize, HMode};
    use crate::molgraph::BondOrder;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn atom_c() -> Token {
        Token::Atom {
            element: Element::CARBON,
            aromatic: false,
        }
    }

    #[test]
    fn after_bos_only_atom() {
        let legal = legal_next_tokens(&[Token::Bos]).unwrap();
        assert!(legal.atom);
        assert!(!legal.eos && !legal.charge && !legal.hcount && legal.edge_gaps.is_none());
    }

    #[test]
    fn first_atom_has_no_edges() {
        let legal = legal_next_tokens(&[Token::Bos, atom_c()]).unwrap();
        assert!(legal.atom && legal.eos && legal.charge && legal.hcount);
        assert_eq!(legal.edge_gaps, None);
    }

    #[test]
    fn edge_window_shrinks_after_each_edge() {
        let prefix = vec![
            Token::Bos,
            atom_c(),
            atom_c(),
            atom_c(),
            Token::Edge {
                gap: 1,
                order: BondOrder::Single,
            },
        ];
        let legal = legal_next_tokens(&prefix).unwrap();
        assert_eq!(legal.edge_gaps, Some((2, 2)));
        assert!(!legal.charge && !legal.hcount);
    }

    #[test]
    fn inconsistent_prefix_is_an_error() {
        assert!(legal_next_tokens(&[Token::Bos, Token::Charge(1)]).is_err());
        assert!(legal_next_tokens(&[atom_c()]).is_err());
    }

    /// Every stream built by always choosing from the follow set
    /// deserializes; the grammar never dead-ends before EOS is legal.
    #[test]
    fn random_walks_always_deserialize() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let elements = [Element::CARBON, Element::NITROGEN, Element::OXYGEN];
        for _ in 0..10_000 {
            let mut state = GrammarState::new();
            let mut tokens = vec![Token::Bos];
            state.step(0, Token::Bos).unwrap();
            for step in 1..40 {
                let legal = state.legal();
                let mut choices: Vec<Token> = Vec::new();
                if legal.atom {
                    choices.push(Token::Atom {
                        element: *elements.choose(&mut rng).unwrap(),
                        aromatic: false,
                    });
                }
                if legal.charge {
                    choices.push(Token::Charge(*[-1, 1, 2].choose(&mut rng).unwrap()));
                }
                if legal.hcount {
                    choices.push(Token::HCount(rng.gen_range(1..=4)));
                }
                if let Some((lo, hi)) = legal.edge_gaps {
                    choices.push(Token::Edge {
                        gap: rng.gen_range(lo..=hi),
                        order: BondOrder::from_code(rng.gen_range(1..=4)).unwrap(),
                    });
                }
                if legal.eos {
                    choices.push(Token::Eos);
                }
                assert!(!choices.is_empty(), "grammar dead-ended at {tokens:?}");
                // Force EOS when running out of budget, legal everywhere
                // past the first atom.
                let tok = if step == 39 && legal.eos {
                    Token::Eos
                } else {
                    *choices.choose(&mut rng).unwrap()
                };
                state.step(step, tok).unwrap();
                tokens.push(tok);
                if tok == Token::Eos {
                    break;
                }
            }
            assert!(state.finished());
            deserialize(&tokens, HMode::Explicit).unwrap_or_else(|e| {
                panic!("walk failed to deserialize: {e} ({tokens:?})");
            });
        }
    }
}
