//! Product-reactant node alignment: the reactant generation order is a
//! function of the ordered product. Shared atoms (equal nonzero atom maps)
//! come first, transported in product order; non-shared atoms follow via a
//! deterministic expansion from their shared attachment points.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::molgraph::{
    canonical_order, canonical_smiles, random_order, write_smiles, MolError, Molecule, NodeOrder,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlignError {
    #[error("duplicate atom map {map} in {side}")]
    DuplicateAtomMap { map: u32, side: &'static str },
    #[error("molecule error: {0}")]
    Mol(#[from] MolError),
}

/// Outcome of pairing atoms by atom map.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SharedMap {
    /// product atom index -> reactant atom index, over equal nonzero maps.
    pub pairs: BTreeMap<usize, usize>,
    /// Mapped product atoms whose map does not occur in the reactant.
    pub product_only_maps: Vec<usize>,
    /// Product atoms with no atom map at all; treated as non-shared.
    pub unmapped_product: Vec<usize>,
}

/// Pair product and reactant atoms carrying equal nonzero atom maps.
pub fn match_shared(product: &Molecule, reactant: &Molecule) -> Result<SharedMap, AlignError> {
    let product_by_map = map_index(product, "product")?;
    let reactant_by_map = map_index(reactant, "reactant")?;
    let mut shared = SharedMap::default();
    for (map, &p_idx) in &product_by_map {
        match reactant_by_map.get(map) {
            Some(&r_idx) => {
                shared.pairs.insert(p_idx, r_idx);
            }
            None => shared.product_only_maps.push(p_idx),
        }
    }
    shared.unmapped_product = (0..product.atom_count())
        .filter(|&i| product.atom(i).atom_map == 0)
        .collect();
    Ok(shared)
}

fn map_index(m: &Molecule, side: &'static str) -> Result<BTreeMap<u32, usize>, AlignError> {
    let mut by_map = BTreeMap::new();
    for (idx, atom) in m.atoms().iter().enumerate() {
        if atom.atom_map == 0 {
            continue;
        }
        if by_map.insert(atom.atom_map, idx).is_some() {
            return Err(AlignError::DuplicateAtomMap {
                map: atom.atom_map,
                side,
            });
        }
    }
    Ok(by_map)
}

/// An ordered product paired with its uniquely derived reactant order.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPair {
    pub product: Molecule,
    pub product_order: NodeOrder,
    pub reactant: Molecule,
    pub reactant_order: NodeOrder,
    /// product atom index -> reactant atom index.
    pub shared: BTreeMap<usize, usize>,
}

/// Wire form of [`AlignedPair`]: SMILES are written in identity order so
/// that re-parsing reproduces the index space the orders refer to.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlignedPairRecord {
    pub product_smiles: String,
    pub reactant_smiles: String,
    pub product_order: Vec<usize>,
    pub reactant_order: Vec<usize>,
    pub shared: Vec<[usize; 2]>,
}

impl AlignedPair {
    pub fn to_record(&self) -> AlignedPairRecord {
        AlignedPairRecord {
            product_smiles: write_smiles(
                &self.product,
                &NodeOrder::identity(self.product.atom_count()),
            )
            .expect("identity order is valid"),
            reactant_smiles: write_smiles(
                &self.reactant,
                &NodeOrder::identity(self.reactant.atom_count()),
            )
            .expect("identity order is valid"),
            product_order: self.product_order.positions().to_vec(),
            reactant_order: self.reactant_order.positions().to_vec(),
            shared: self.shared.iter().map(|(&p, &r)| [p, r]).collect(),
        }
    }
}

/// Derive the unique reactant order for a given ordered product.
///
/// Shared atoms take positions `0..s` in ascending product position. Then,
/// iterating over shared atoms in that order, a DFS walks into non-shared
/// neighbors (choice key: element, charge, hydrogen count, atom map),
/// appending each newly visited atom. Non-shared components with no shared
/// attachment are appended last, sorted by canonical SMILES, each in
/// canonical order.
pub fn derive_reactant_order(
    product: &Molecule,
    product_order: &NodeOrder,
    reactant: &Molecule,
) -> Result<AlignedPair, AlignError> {
    let shared = match_shared(product, reactant)?;
    let n = reactant.atom_count();

    // Shared reactant atoms in ascending product position.
    let mut shared_sorted: Vec<(usize, usize)> = shared
        .pairs
        .iter()
        .map(|(&p, &r)| (product_order.position(p), r))
        .collect();
    shared_sorted.sort_unstable();

    let mut positions = vec![usize::MAX; n];
    let mut next_pos = 0usize;
    for &(_, r) in &shared_sorted {
        positions[r] = next_pos;
        next_pos += 1;
    }

    // Expansion DFS from each shared atom, in assigned order.
    let neighbor_key = |idx: usize| {
        let a = reactant.atom(idx);
        (
            a.element.atomic_number(),
            a.formal_charge,
            a.hydrogen_count,
            a.atom_map,
            idx,
        )
    };
    for &(_, seed) in &shared_sorted {
        let mut stack = vec![seed];
        while let Some(u) = stack.pop() {
            let mut fresh: Vec<usize> = reactant
                .neighbors(u)
                .iter()
                .copied()
                .filter(|&v| positions[v] == usize::MAX)
                .collect();
            fresh.sort_by_key(|&v| neighbor_key(v));
            // Depth-first into the best-keyed neighbor; revisit `u` for the
            // rest afterwards.
            if let Some(&v) = fresh.first() {
                positions[v] = next_pos;
                next_pos += 1;
                stack.push(u);
                stack.push(v);
            }
        }
    }

    // Remaining components have no shared attachment: canonical order
    // within, components sorted by canonical SMILES.
    let mut leftover_components: Vec<Vec<usize>> = reactant
        .components()
        .into_iter()
        .filter(|comp| comp.iter().all(|&a| positions[a] == usize::MAX))
        .collect();
    if !leftover_components.is_empty() {
        let canon = canonical_order(reactant);
        let mut keyed: Vec<(String, Vec<usize>)> = leftover_components
            .drain(..)
            .map(|comp| (canonical_smiles(&reactant.induced_subgraph(&comp)), comp))
            .collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1[0].cmp(&b.1[0])));
        for (_, comp) in keyed {
            let mut atoms = comp;
            atoms.sort_by_key(|&a| canon.position(a));
            for a in atoms {
                positions[a] = next_pos;
                next_pos += 1;
            }
        }
    }
    debug_assert_eq!(next_pos, n);

    Ok(AlignedPair {
        product: product.clone(),
        product_order: product_order.clone(),
        reactant: reactant.clone(),
        reactant_order: NodeOrder::from_positions(positions)?,
        shared: shared.pairs,
    })
}

/// Augmented training pair: random product order, derived reactant order.
/// Deterministic in `seed`.
pub fn make_training_pair(
    product: &Molecule,
    reactant: &Molecule,
    seed: u64,
) -> Result<AlignedPair, AlignError> {
    let product_order = random_order(product, seed)?;
    derive_reactant_order(product, &product_order, reactant)
}
