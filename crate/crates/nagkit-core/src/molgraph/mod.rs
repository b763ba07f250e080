//! Molecular graph data model: atoms, bonds, node orders, and the encoder
//! input packing, plus a SMILES parser/writer and canonical ordering.

mod canon;
mod encoder;
mod order;
mod parse;
mod write;

pub use canon::{canonical_order, canonical_smiles};
pub use encoder::{encoder_inputs, AtomRow, EncoderInput};
pub use order::{is_dfs_emission_order, random_order};
pub use parse::{parse_smiles, ParseMode};
pub use write::write_smiles;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::element::Element;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MolError {
    #[error("bond endpoint {0} out of range for {1} atoms")]
    BondIndexOutOfRange(usize, usize),
    #[error("self-loop bond on atom {0}")]
    SelfLoop(usize),
    #[error("duplicate bond between atoms {0} and {1}")]
    DuplicateBond(usize, usize),
    #[error("order is not a valid permutation of {0} atoms")]
    InvalidOrder(usize),
    #[error("coordinate list has {got} rows, molecule has {want} atoms")]
    CoordsLengthMismatch { got: usize, want: usize },
    #[error("empty molecule")]
    EmptyMolecule,
}

/// Bond multiplicity. `code` gives the stable wire encoding used by
/// edge matrices and token streams (1/2/3/4).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<BondOrder> {
        match code {
            1 => Some(BondOrder::Single),
            2 => Some(BondOrder::Double),
            3 => Some(BondOrder::Triple),
            4 => Some(BondOrder::Aromatic),
            _ => None,
        }
    }

    /// Integer valence contribution; aromatic bonds count one, with the
    /// shared aromatic contribution accounted separately per atom.
    pub(crate) fn valence_units(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }
}

/// A heavy atom. Hydrogens are counts, not nodes; `stereo_tag` carries the
/// `@` / `@@` annotation verbatim and is never interpreted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub element: Element,
    pub formal_charge: i8,
    pub hydrogen_count: u8,
    pub atom_map: u32,
    pub aromatic: bool,
    pub stereo_tag: Option<String>,
}

impl Atom {
    pub fn new(element: Element) -> Atom {
        Atom {
            element,
            formal_charge: 0,
            hydrogen_count: 0,
            atom_map: 0,
            aromatic: false,
            stereo_tag: None,
        }
    }
}

/// An undirected bond between two distinct atoms. `dir_from` preserves a
/// `/` or `\` mark from the source text: the character as written when the
/// bond is traversed starting at that endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    pub dir_from: Option<(usize, char)>,
}

impl Bond {
    pub fn new(a: usize, b: usize, order: BondOrder) -> Bond {
        Bond {
            a: a.min(b),
            b: a.max(b),
            order,
            dir_from: None,
        }
    }

    pub fn other(&self, atom: usize) -> usize {
        if atom == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// An attributed undirected molecular graph; possibly disconnected
/// (multi-fragment reactant sets). Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    #[serde(skip)]
    adjacency: Vec<Vec<usize>>,
    #[serde(skip)]
    bond_of: BTreeMap<(usize, usize), usize>,
}

impl Molecule {
    pub fn new(atoms: Vec<Atom>, mut bonds: Vec<Bond>) -> Result<Molecule, MolError> {
        let n = atoms.len();
        // Normalize the bond list so equality is structural regardless of
        // the order bonds were discovered in.
        bonds.sort_by_key(|b| (b.a, b.b));
        let mut adjacency = vec![Vec::new(); n];
        let mut bond_of = BTreeMap::new();
        for (i, bond) in bonds.iter().enumerate() {
            if bond.a >= n || bond.b >= n {
                return Err(MolError::BondIndexOutOfRange(bond.a.max(bond.b), n));
            }
            if bond.a == bond.b {
                return Err(MolError::SelfLoop(bond.a));
            }
            if bond_of.insert((bond.a, bond.b), i).is_some() {
                return Err(MolError::DuplicateBond(bond.a, bond.b));
            }
            adjacency[bond.a].push(bond.b);
            adjacency[bond.b].push(bond.a);
        }
        for neighbors in &mut adjacency {
            neighbors.sort_unstable();
        }
        Ok(Molecule {
            atoms,
            bonds,
            adjacency,
            bond_of,
        })
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, idx: usize) -> &Atom {
        &self.atoms[idx]
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    /// Neighbor atom indices, ascending.
    pub fn neighbors(&self, idx: usize) -> &[usize] {
        &self.adjacency[idx]
    }

    /// Heavy-atom degree.
    pub fn degree(&self, idx: usize) -> usize {
        self.adjacency[idx].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.bond_of
            .get(&(a.min(b), a.max(b)))
            .map(|&i| &self.bonds[i])
    }

    /// Connected components, each sorted ascending; components ordered by
    /// smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &v in self.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// The subgraph induced by `atoms` (local indices follow the slice
    /// order). Bonds with an endpoint outside `atoms` are dropped.
    pub fn induced_subgraph(&self, atoms: &[usize]) -> Molecule {
        let mut local = vec![usize::MAX; self.atom_count()];
        for (l, &a) in atoms.iter().enumerate() {
            local[a] = l;
        }
        let picked = atoms.iter().map(|&a| self.atoms[a].clone()).collect();
        let bonds = self
            .bonds
            .iter()
            .filter(|b| local[b.a] != usize::MAX && local[b.b] != usize::MAX)
            .map(|b| Bond {
                a: local[b.a].min(local[b.b]),
                b: local[b.a].max(local[b.b]),
                order: b.order,
                dir_from: b.dir_from.map(|(at, c)| (local[at], c)),
            })
            .collect();
        Molecule::new(picked, bonds).expect("induced subgraph preserves validity")
    }

    /// Copy with atom maps zeroed. Used before canonical comparison against
    /// map-free predictions.
    pub fn without_atom_maps(&self) -> Molecule {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                atom_map: 0,
                ..a.clone()
            })
            .collect();
        Molecule::new(atoms, self.bonds.clone()).expect("relabel preserves validity")
    }

    /// Copy with stereo annotations and atom maps dropped; the structural
    /// core that token streams carry.
    pub fn structural_core(&self) -> Molecule {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                atom_map: 0,
                stereo_tag: None,
                ..a.clone()
            })
            .collect();
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond {
                dir_from: None,
                ..b.clone()
            })
            .collect();
        Molecule::new(atoms, bonds).expect("relabel preserves validity")
    }

    /// Relabel atoms so that the atom at position `p` under `order` becomes
    /// atom index `p`.
    pub fn apply_order(&self, order: &NodeOrder) -> Result<Molecule, MolError> {
        order.check(self)?;
        let n = self.atoms.len();
        let mut atoms = vec![None; n];
        for (idx, atom) in self.atoms.iter().enumerate() {
            atoms[order.position(idx)] = Some(atom.clone());
        }
        let atoms: Vec<Atom> = atoms.into_iter().map(|a| a.unwrap()).collect();
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond {
                a: order.position(b.a).min(order.position(b.b)),
                b: order.position(b.a).max(order.position(b.b)),
                order: b.order,
                dir_from: b.dir_from.map(|(at, c)| (order.position(at), c)),
            })
            .collect();
        Molecule::new(atoms, bonds)
    }

    /// Structural equality ignoring atom maps, stereo annotations, and bond
    /// direction marks.
    pub fn structurally_equal(&self, other: &Molecule) -> bool {
        self.structural_core() == other.structural_core()
    }
}

/// A bijection atom index -> 0-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeOrder(Vec<usize>);

impl NodeOrder {
    /// Build from a positions vector (`positions[atom] = position`),
    /// validating that it is a permutation.
    pub fn from_positions(positions: Vec<usize>) -> Result<NodeOrder, MolError> {
        let n = positions.len();
        let mut seen = vec![false; n];
        for &p in &positions {
            if p >= n || seen[p] {
                return Err(MolError::InvalidOrder(n));
            }
            seen[p] = true;
        }
        Ok(NodeOrder(positions))
    }

    /// Build from the atom sequence listed in position order.
    pub fn from_sequence(atoms_in_order: &[usize]) -> Result<NodeOrder, MolError> {
        let n = atoms_in_order.len();
        let mut positions = vec![usize::MAX; n];
        for (pos, &atom) in atoms_in_order.iter().enumerate() {
            if atom >= n || positions[atom] != usize::MAX {
                return Err(MolError::InvalidOrder(n));
            }
            positions[atom] = pos;
        }
        Ok(NodeOrder(positions))
    }

    pub fn identity(n: usize) -> NodeOrder {
        NodeOrder((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn position(&self, atom: usize) -> usize {
        self.0[atom]
    }

    pub fn positions(&self) -> &[usize] {
        &self.0
    }

    /// Atom indices listed by ascending position.
    pub fn atoms_by_position(&self) -> Vec<usize> {
        let mut atoms = vec![0usize; self.0.len()];
        for (atom, &pos) in self.0.iter().enumerate() {
            atoms[pos] = atom;
        }
        atoms
    }

    pub(crate) fn check(&self, m: &Molecule) -> Result<(), MolError> {
        if self.0.len() != m.atom_count() {
            return Err(MolError::InvalidOrder(m.atom_count()));
        }
        Ok(())
    }
}

/// Implicit hydrogen count per the default-valence convention: the smallest
/// default valence covering the bond-order sum (aromatic atoms consume one
/// extra shared unit), clamped at zero. `None` for elements outside the
/// organic subset.
pub(crate) fn implicit_hydrogens(
    element: Element,
    aromatic: bool,
    bond_orders: impl Iterator<Item = BondOrder>,
) -> Option<u8> {
    let valences = element.default_valences();
    if valences.is_empty() {
        return None;
    }
    let mut consumed: u16 = bond_orders.map(|o| o.valence_units() as u16).sum();
    if aromatic {
        consumed += 1;
    }
    let fitting = valences
        .iter()
        .map(|&v| v as u16)
        .find(|&v| v >= consumed);
    Some(match fitting {
        Some(v) => (v - consumed) as u8,
        None => 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize) -> Molecule {
        let atoms = (0..n).map(|_| Atom::new(Element::CARBON)).collect();
        let bonds = (1..n)
            .map(|i| Bond::new(i - 1, i, BondOrder::Single))
            .collect();
        Molecule::new(atoms, bonds).unwrap()
    }

    #[test]
    fn rejects_self_loop_and_duplicate_bond() {
        let atoms = vec![Atom::new(Element::CARBON), Atom::new(Element::CARBON)];
        let err = Molecule::new(atoms.clone(), vec![Bond::new(0, 0, BondOrder::Single)]);
        assert_eq!(err.unwrap_err(), MolError::SelfLoop(0));
        let err = Molecule::new(
            atoms,
            vec![
                Bond::new(0, 1, BondOrder::Single),
                Bond::new(1, 0, BondOrder::Double),
            ],
        );
        assert_eq!(err.unwrap_err(), MolError::DuplicateBond(0, 1));
    }

    #[test]
    fn node_order_round_trip() {
        let order = NodeOrder::from_sequence(&[2, 0, 1]).unwrap();
        assert_eq!(order.positions(), &[1, 2, 0]);
        assert_eq!(order.atoms_by_position(), vec![2, 0, 1]);
        assert!(NodeOrder::from_positions(vec![0, 0, 1]).is_err());
    }

    #[test]
    fn apply_order_relabels_bonds() {
        let m = chain(3);
        let order = NodeOrder::from_sequence(&[1, 0, 2]).unwrap();
        let relabeled = m.apply_order(&order).unwrap();
        // Old middle atom is now index 0 and bonded to both others.
        assert_eq!(relabeled.degree(0), 2);
        assert_eq!(relabeled.neighbors(0), &[1, 2]);
    }

    #[test]
    fn implicit_h_table() {
        // Bare carbon with one single bond: CH3.
        let h = implicit_hydrogens(Element::CARBON, false, [BondOrder::Single].into_iter());
        assert_eq!(h, Some(3));
        // Aromatic carbon in a ring: two aromatic bonds + shared unit.
        let h = implicit_hydrogens(
            Element::CARBON,
            true,
            [BondOrder::Aromatic, BondOrder::Aromatic].into_iter(),
        );
        assert_eq!(h, Some(1));
        // Furan oxygen: consumption exceeds the valence table, clamps to 0.
        let h = implicit_hydrogens(
            Element::OXYGEN,
            true,
            [BondOrder::Aromatic, BondOrder::Aromatic].into_iter(),
        );
        assert_eq!(h, Some(0));
        // Sulfur picks the smallest fitting valence.
        let h = implicit_hydrogens(
            Element::SULFUR,
            false,
            [BondOrder::Double, BondOrder::Double].into_iter(),
        );
        assert_eq!(h, Some(0));
        let h = implicit_hydrogens(Element::SULFUR, false, [BondOrder::Double].into_iter());
        assert_eq!(h, Some(0));
        assert_eq!(
            implicit_hydrogens(Element::from_symbol("Pd").unwrap(), false, [].into_iter()),
            None
        );
    }
}
