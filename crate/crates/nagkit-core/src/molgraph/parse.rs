//! SMILES reader for the organic subset plus brackets, ring closures
//! (including `%nn`), dot-separated fragments, aromatic lowercase, and
//! opaque stereo marks. Isotopes are rejected.

use thiserror::Error;

use super::{implicit_hydrogens, Atom, Bond, BondOrder, MolError, Molecule};
use crate::element::Element;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    #[default]
    Standard,
    /// Reject aromatic (lowercase) atoms and `:` bonds.
    StrictKekulized,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("empty SMILES")]
    Empty,
    #[error("unexpected character `{ch}` at byte {pos}")]
    UnexpectedChar { ch: char, pos: usize },
    #[error("unknown element `{symbol}` at byte {pos}")]
    UnknownElement { symbol: String, pos: usize },
    #[error("element `{symbol}` cannot be aromatic (byte {pos})")]
    AromaticNotAllowed { symbol: String, pos: usize },
    #[error("aromatic atom at byte {pos} in strict-kekulized mode")]
    AromaticInKekulized { pos: usize },
    #[error("invalid charge syntax at byte {pos}")]
    InvalidCharge { pos: usize },
    #[error("formal charge {charge} outside [-4, +4] at byte {pos}")]
    ChargeOutOfRange { charge: i32, pos: usize },
    #[error("isotope annotations are not supported (byte {pos})")]
    IsotopeUnsupported { pos: usize },
    #[error("unclosed bracket atom starting at byte {pos}")]
    UnclosedBracket { pos: usize },
    #[error("unclosed ring closure {label}")]
    UnclosedRing { label: u32 },
    #[error("ring closure {label} bond symbols conflict")]
    RingBondConflict { label: u32 },
    #[error("ring closure {label} forms a self-loop")]
    RingSelfLoop { label: u32 },
    #[error("unbalanced parenthesis at byte {pos}")]
    UnbalancedParen { pos: usize },
    #[error("bond symbol with no preceding atom at byte {pos}")]
    DanglingBond { pos: usize },
    #[error("branch cannot start a fragment (byte {pos})")]
    BranchWithoutAtom { pos: usize },
    #[error("invalid molecular graph: {0}")]
    Graph(#[from] MolError),
}

/// A bond symbol read from the text, before resolution against atom
/// aromaticity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BondSym {
    Single,
    Double,
    Triple,
    Aromatic,
    Up,
    Down,
}

impl BondSym {
    fn from_char(c: char) -> Option<BondSym> {
        match c {
            '-' => Some(BondSym::Single),
            '=' => Some(BondSym::Double),
            '#' => Some(BondSym::Triple),
            ':' => Some(BondSym::Aromatic),
            '/' => Some(BondSym::Up),
            '\\' => Some(BondSym::Down),
            _ => None,
        }
    }

    fn order(self) -> BondOrder {
        match self {
            BondSym::Single | BondSym::Up | BondSym::Down => BondOrder::Single,
            BondSym::Double => BondOrder::Double,
            BondSym::Triple => BondOrder::Triple,
            BondSym::Aromatic => BondOrder::Aromatic,
        }
    }

    fn dir_char(self) -> Option<char> {
        match self {
            BondSym::Up => Some('/'),
            BondSym::Down => Some('\\'),
            _ => None,
        }
    }
}

struct PendingRing {
    atom: usize,
    sym: Option<BondSym>,
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    mode: ParseMode,
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    prev: Option<usize>,
    pending_bond: Option<(BondSym, usize)>,
    branch_stack: Vec<Option<usize>>,
    rings: Vec<(u32, PendingRing)>,
}

/// Parse a single dot-separated SMILES expression into a [`Molecule`].
///
/// Hydrogen counts are fixed here: implicit for bare organic-subset atoms,
/// literal inside brackets. Atom maps are read from `:n` suffixes and kept
/// as-is (duplicates are tolerated; alignment rejects them later).
pub fn parse_smiles(text: &str, mode: ParseMode) -> Result<Molecule, ParseError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(ParseError::Empty);
    }
    let mut p = Parser {
        bytes: trimmed.as_bytes(),
        pos: 0,
        mode,
        atoms: Vec::new(),
        bonds: Vec::new(),
        prev: None,
        pending_bond: None,
        branch_stack: Vec::new(),
        rings: Vec::new(),
    };
    p.run()?;
    p.finish()
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<char> {
        self.bytes.get(self.pos).map(|&b| b as char)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn run(&mut self) -> Result<(), ParseError> {
        while let Some(c) = self.peek() {
            match c {
                '[' => {
                    let atom = self.read_bracket_atom()?;
                    self.add_atom(atom)?;
                }
                'A'..='Z' | 'b' | 'c' | 'n' | 'o' | 'p' | 's' | '*' => {
                    let atom = self.read_bare_atom()?;
                    self.add_atom(atom)?;
                }
                '0'..='9' | '%' => self.read_ring_closure()?,
                '-' | '=' | '#' | ':' | '/' | '\\' => {
                    let pos = self.pos;
                    self.bump();
                    if self.prev.is_none() {
                        return Err(ParseError::DanglingBond { pos });
                    }
                    if self.mode == ParseMode::StrictKekulized && c == ':' {
                        return Err(ParseError::AromaticInKekulized { pos });
                    }
                    self.pending_bond = Some((BondSym::from_char(c).unwrap(), pos));
                }
                '(' => {
                    let pos = self.pos;
                    self.bump();
                    match self.prev {
                        Some(_) => self.branch_stack.push(self.prev),
                        None => return Err(ParseError::BranchWithoutAtom { pos }),
                    }
                }
                ')' => {
                    let pos = self.pos;
                    self.bump();
                    match self.branch_stack.pop() {
                        Some(restored) => self.prev = restored,
                        None => return Err(ParseError::UnbalancedParen { pos }),
                    }
                }
                '.' => {
                    let pos = self.pos;
                    self.bump();
                    if self.pending_bond.is_some() || self.prev.is_none() {
                        return Err(ParseError::UnexpectedChar { ch: '.', pos });
                    }
                    self.prev = None;
                }
                _ => {
                    return Err(ParseError::UnexpectedChar { ch: c, pos: self.pos });
                }
            }
        }
        Ok(())
    }

    fn finish(mut self) -> Result<Molecule, ParseError> {
        if let Some((_, pos)) = self.pending_bond {
            return Err(ParseError::DanglingBond { pos });
        }
        if !self.branch_stack.is_empty() {
            return Err(ParseError::UnbalancedParen { pos: self.pos });
        }
        if let Some((label, _)) = self.rings.first() {
            return Err(ParseError::UnclosedRing { label: *label });
        }
        if self.atoms.is_empty() {
            return Err(ParseError::Empty);
        }
        self.assign_implicit_hydrogens();
        Ok(Molecule::new(self.atoms, self.bonds)?)
    }

    fn add_atom(&mut self, atom: Atom) -> Result<(), ParseError> {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        if let Some(prev) = self.prev {
            let sym = self.pending_bond.take().map(|(s, _)| s);
            self.push_bond(prev, idx, sym)?;
        }
        self.prev = Some(idx);
        Ok(())
    }

    fn push_bond(&mut self, from: usize, to: usize, sym: Option<BondSym>) -> Result<(), ParseError> {
        let order = match sym {
            Some(s) => s.order(),
            None => {
                if self.atoms[from].aromatic && self.atoms[to].aromatic {
                    BondOrder::Aromatic
                } else {
                    BondOrder::Single
                }
            }
        };
        let dir_from = sym.and_then(|s| s.dir_char()).map(|c| (from, c));
        self.bonds.push(Bond {
            a: from.min(to),
            b: from.max(to),
            order,
            dir_from,
        });
        Ok(())
    }

    fn read_ring_closure(&mut self) -> Result<(), ParseError> {
        let pos = self.pos;
        let cur = match self.prev {
            Some(a) => a,
            None => {
                let ch = self.peek().unwrap();
                return Err(ParseError::UnexpectedChar { ch, pos });
            }
        };
        let label = if self.peek() == Some('%') {
            self.bump();
            let mut digits = String::new();
            for _ in 0..2 {
                match self.peek() {
                    Some(d @ '0'..='9') => {
                        digits.push(d);
                        self.bump();
                    }
                    other => {
                        return Err(ParseError::UnexpectedChar {
                            ch: other.unwrap_or(' '),
                            pos: self.pos,
                        })
                    }
                }
            }
            digits.parse::<u32>().unwrap()
        } else {
            let d = self.bump().unwrap();
            d.to_digit(10).unwrap()
        };
        let sym = self.pending_bond.take().map(|(s, _)| s);
        if let Some(open_idx) = self.rings.iter().position(|(l, _)| *l == label) {
            let (_, open) = self.rings.remove(open_idx);
            if open.atom == cur {
                return Err(ParseError::RingSelfLoop { label });
            }
            let resolved = match (open.sym, sym) {
                (None, s) | (s, None) => s,
                (Some(x), Some(y)) if x == y => Some(x),
                _ => return Err(ParseError::RingBondConflict { label }),
            };
            // Direction on a ring bond is anchored at whichever end wrote it.
            let dir_owner = if sym.and_then(BondSym::dir_char).is_some() {
                cur
            } else {
                open.atom
            };
            let order = match resolved {
                Some(s) => s.order(),
                None => {
                    if self.atoms[open.atom].aromatic && self.atoms[cur].aromatic {
                        BondOrder::Aromatic
                    } else {
                        BondOrder::Single
                    }
                }
            };
            let dir_from = resolved.and_then(|s| s.dir_char()).map(|c| (dir_owner, c));
            if self
                .bonds
                .iter()
                .any(|b| b.a == open.atom.min(cur) && b.b == open.atom.max(cur))
            {
                return Err(ParseError::Graph(MolError::DuplicateBond(
                    open.atom.min(cur),
                    open.atom.max(cur),
                )));
            }
            self.bonds.push(Bond {
                a: open.atom.min(cur),
                b: open.atom.max(cur),
                order,
                dir_from,
            });
        } else {
            self.rings.push((label, PendingRing { atom: cur, sym }));
        }
        Ok(())
    }

    fn read_bare_atom(&mut self) -> Result<Atom, ParseError> {
        let pos = self.pos;
        let first = self.bump().unwrap();
        if first == '*' {
            return Err(ParseError::UnknownElement {
                symbol: "*".into(),
                pos,
            });
        }
        let aromatic = first.is_ascii_lowercase();
        if aromatic && self.mode == ParseMode::StrictKekulized {
            return Err(ParseError::AromaticInKekulized { pos });
        }
        // Two-letter organic-subset symbols: Cl and Br only.
        let mut symbol = first.to_ascii_uppercase().to_string();
        if (first == 'C' && self.peek() == Some('l')) || (first == 'B' && self.peek() == Some('r'))
        {
            symbol.push(self.bump().unwrap());
        }
        let element = Element::from_symbol(&symbol).ok_or_else(|| ParseError::UnknownElement {
            symbol: symbol.clone(),
            pos,
        })?;
        if !element.in_organic_subset() {
            return Err(ParseError::UnknownElement { symbol, pos });
        }
        if aromatic && !element.aromatic_allowed() {
            return Err(ParseError::AromaticNotAllowed { symbol, pos });
        }
        let mut atom = Atom::new(element);
        atom.aromatic = aromatic;
        // Implicit hydrogens are assigned after all bonds are known.
        atom.hydrogen_count = u8::MAX;
        Ok(atom)
    }

    fn read_bracket_atom(&mut self) -> Result<Atom, ParseError> {
        let open_pos = self.pos;
        self.bump(); // '['
        if matches!(self.peek(), Some('0'..='9')) {
            return Err(ParseError::IsotopeUnsupported { pos: self.pos });
        }
        let sym_pos = self.pos;
        let mut symbol = String::new();
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() => {
                symbol.push(c);
                self.bump();
            }
            Some(c) => return Err(ParseError::UnexpectedChar { ch: c, pos: self.pos }),
            None => return Err(ParseError::UnclosedBracket { pos: open_pos }),
        }
        // Greedily take a second lowercase letter when it completes a known
        // symbol ([Cl], [Br], [Se], [se], ...); 'H' never extends a symbol
        // here since hydrogen-as-element brackets are not in the dialect.
        if let Some(c) = self.peek() {
            if c.is_ascii_lowercase() {
                let two = format!("{symbol}{c}");
                let cap = format!(
                    "{}{}",
                    two.chars().next().unwrap().to_ascii_uppercase(),
                    &two[1..]
                );
                if Element::from_symbol(&cap).is_some() {
                    symbol.push(c);
                    self.bump();
                }
            }
        }
        let aromatic = symbol.chars().next().unwrap().is_ascii_lowercase();
        if aromatic && self.mode == ParseMode::StrictKekulized {
            return Err(ParseError::AromaticInKekulized { pos: sym_pos });
        }
        let canonical_symbol = if aromatic {
            format!(
                "{}{}",
                symbol.chars().next().unwrap().to_ascii_uppercase(),
                &symbol[1..]
            )
        } else {
            symbol.clone()
        };
        let element =
            Element::from_symbol(&canonical_symbol).ok_or_else(|| ParseError::UnknownElement {
                symbol: symbol.clone(),
                pos: sym_pos,
            })?;
        if element == Element::HYDROGEN {
            return Err(ParseError::UnknownElement { symbol, pos: sym_pos });
        }
        if aromatic && !element.aromatic_allowed() {
            return Err(ParseError::AromaticNotAllowed { symbol, pos: sym_pos });
        }
        let mut atom = Atom::new(element);
        atom.aromatic = aromatic;

        // Fixed field order: chirality, hydrogens, charge, map.
        if self.peek() == Some('@') {
            let mut tag = String::new();
            while self.peek() == Some('@') {
                tag.push('@');
                self.bump();
            }
            if tag.len() > 2 {
                return Err(ParseError::UnexpectedChar { ch: '@', pos: self.pos - 1 });
            }
            atom.stereo_tag = Some(tag);
        }
        if self.peek() == Some('H') {
            self.bump();
            let mut count = 1u8;
            if let Some(d @ '0'..='9') = self.peek() {
                count = d.to_digit(10).unwrap() as u8;
                self.bump();
            }
            atom.hydrogen_count = count;
        }
        if let Some(sign @ ('+' | '-')) = self.peek() {
            let pos = self.pos;
            self.bump();
            let mut magnitude: i32 = 1;
            if let Some(d @ '1'..='9') = self.peek() {
                magnitude = d.to_digit(10).unwrap() as i32;
                self.bump();
            } else {
                while self.peek() == Some(sign) {
                    magnitude += 1;
                    self.bump();
                }
            }
            let charge = if sign == '+' { magnitude } else { -magnitude };
            if !(-4..=4).contains(&charge) {
                return Err(ParseError::ChargeOutOfRange { charge, pos });
            }
            atom.formal_charge = charge as i8;
        }
        if self.peek() == Some(':') {
            self.bump();
            let start = self.pos;
            let mut map: u64 = 0;
            while let Some(d @ '0'..='9') = self.peek() {
                map = map * 10 + d.to_digit(10).unwrap() as u64;
                self.bump();
                if map > u32::MAX as u64 {
                    return Err(ParseError::UnexpectedChar { ch: ':', pos: start });
                }
            }
            if self.pos == start {
                return Err(ParseError::UnexpectedChar {
                    ch: self.peek().unwrap_or(' '),
                    pos: self.pos,
                });
            }
            atom.atom_map = map as u32;
        }
        if self.bump() != Some(']') {
            return Err(ParseError::UnclosedBracket { pos: open_pos });
        }
        Ok(atom)
    }

    /// Resolve the `u8::MAX` placeholders written by `read_bare_atom`.
    fn assign_implicit_hydrogens(&mut self) {
        let mut orders: Vec<Vec<BondOrder>> = vec![Vec::new(); self.atoms.len()];
        for b in &self.bonds {
            orders[b.a].push(b.order);
            orders[b.b].push(b.order);
        }
        for (i, atom) in self.atoms.iter_mut().enumerate() {
            if atom.hydrogen_count == u8::MAX {
                atom.hydrogen_count =
                    implicit_hydrogens(atom.element, atom.aromatic, orders[i].iter().copied())
                        .unwrap_or(0);
            }
        }
    }
}
