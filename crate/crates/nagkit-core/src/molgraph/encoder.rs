//! Packing an ordered molecule into the per-atom rows, bond-code matrix,
//! and positional encoding consumed by a graph encoder.

use serde::{Deserialize, Serialize};

use super::{MolError, Molecule, NodeOrder};
use crate::element::Element;

/// One atom feature row: (element, formal charge, hydrogen count, degree).
/// Serializes as a JSON array, e.g. `["C", 0, 3, 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomRow(pub Element, pub i8, pub u8, pub u8);

impl AtomRow {
    pub fn element(&self) -> Element {
        self.0
    }
    pub fn charge(&self) -> i8 {
        self.1
    }
    pub fn hydrogens(&self) -> u8 {
        self.2
    }
    pub fn degree(&self) -> u8 {
        self.3
    }
}

/// Encoder-side featurization of a product graph. Rows and matrix axes are
/// arranged by position; `positions[original_atom_index]` recovers the row.
/// Coordinates are an optional pass-through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderInput {
    pub atoms: Vec<AtomRow>,
    /// n x n bond-order codes; 0 = no bond, 1/2/3/4 per [`super::BondOrder`].
    pub edges: Vec<Vec<u8>>,
    pub positions: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<[f64; 3]>>,
}

/// Arrange `m` by `order` into an [`EncoderInput`]. `coords`, when given,
/// must carry one row per atom (indexed like the molecule, not the order).
pub fn encoder_inputs(
    m: &Molecule,
    order: &NodeOrder,
    coords: Option<&[[f64; 3]]>,
) -> Result<EncoderInput, MolError> {
    order.check(m)?;
    let n = m.atom_count();
    if let Some(c) = coords {
        if c.len() != n {
            return Err(MolError::CoordsLengthMismatch {
                got: c.len(),
                want: n,
            });
        }
    }
    let by_position = order.atoms_by_position();
    let atoms = by_position
        .iter()
        .map(|&a| {
            let atom = m.atom(a);
            AtomRow(
                atom.element,
                atom.formal_charge,
                atom.hydrogen_count,
                m.degree(a) as u8,
            )
        })
        .collect();
    let mut edges = vec![vec![0u8; n]; n];
    for bond in m.bonds() {
        let (pa, pb) = (order.position(bond.a), order.position(bond.b));
        edges[pa][pb] = bond.order.code();
        edges[pb][pa] = bond.order.code();
    }
    let coords = coords.map(|c| by_position.iter().map(|&a| c[a]).collect());
    Ok(EncoderInput {
        atoms,
        edges,
        positions: order.positions().to_vec(),
        coords,
    })
}
