//! Chemical element symbols and the default-valence table used for
//! implicit-hydrogen accounting.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A chemical element, stored as its atomic number.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Element(u8);

/// Symbols indexed by atomic number - 1.
const SYMBOLS: [&str; 118] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd",
    "In", "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu",
    "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt",
    "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np",
    "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs",
    "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
];

impl Element {
    pub const HYDROGEN: Element = Element(1);
    pub const BORON: Element = Element(5);
    pub const CARBON: Element = Element(6);
    pub const NITROGEN: Element = Element(7);
    pub const OXYGEN: Element = Element(8);
    pub const FLUORINE: Element = Element(9);
    pub const PHOSPHORUS: Element = Element(15);
    pub const SULFUR: Element = Element(16);
    pub const CHLORINE: Element = Element(17);
    pub const BROMINE: Element = Element(35);
    pub const IODINE: Element = Element(53);

    /// Look up an element by its exact case-sensitive symbol.
    pub fn from_symbol(symbol: &str) -> Option<Element> {
        SYMBOLS
            .iter()
            .position(|&s| s == symbol)
            .map(|i| Element(i as u8 + 1))
    }

    pub fn atomic_number(self) -> u8 {
        self.0
    }

    pub fn symbol(self) -> &'static str {
        SYMBOLS[self.0 as usize - 1]
    }

    /// Default valences for the SMILES organic subset (B, C, N, O, P, S and
    /// the halogens). Atoms of other elements never receive implicit
    /// hydrogens and must be written in brackets.
    pub fn default_valences(self) -> &'static [u8] {
        match self {
            Element::BORON => &[3],
            Element::CARBON => &[4],
            Element::NITROGEN => &[3],
            Element::OXYGEN => &[2],
            Element::PHOSPHORUS => &[3, 5],
            Element::SULFUR => &[2, 4, 6],
            Element::FLUORINE | Element::CHLORINE | Element::BROMINE | Element::IODINE => &[1],
            _ => &[],
        }
    }

    /// Whether the bare (bracket-free) symbol is legal in SMILES.
    pub fn in_organic_subset(self) -> bool {
        !self.default_valences().is_empty()
    }

    /// Whether the element may carry the aromatic (lowercase) flag.
    pub fn aromatic_allowed(self) -> bool {
        matches!(
            self,
            Element::BORON
                | Element::CARBON
                | Element::NITROGEN
                | Element::OXYGEN
                | Element::PHOSPHORUS
                | Element::SULFUR
                | Element(33)
                | Element(34)
                | Element(52)
        )
    }
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

impl TryFrom<String> for Element {
    type Error = String;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Element::from_symbol(&value).ok_or_else(|| format!("unknown element symbol `{value}`"))
    }
}

impl From<Element> for String {
    fn from(e: Element) -> String {
        e.symbol().to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_round_trip() {
        for n in 1..=118u8 {
            let e = Element(n);
            assert_eq!(Element::from_symbol(e.symbol()), Some(e));
        }
        assert_eq!(Element::from_symbol("Xx"), None);
        assert_eq!(Element::from_symbol("c"), None);
    }

    #[test]
    fn organic_subset_valences() {
        assert_eq!(Element::CARBON.default_valences(), &[4]);
        assert_eq!(Element::SULFUR.default_valences(), &[2, 4, 6]);
        assert!(Element::from_symbol("Sn").unwrap().default_valences().is_empty());
        assert!(Element::CHLORINE.in_organic_subset());
        assert!(!Element::from_symbol("Pd").unwrap().in_organic_subset());
    }
}
