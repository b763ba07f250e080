//! Seeded generators for synthetic molecules and atom-mapped reactions.
//! Useful for stress tests and demos where real corpora are unavailable.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::element::Element;
use crate::molgraph::{Atom, Bond, BondOrder, Molecule};

#[derive(Debug, Clone)]
pub struct MolGenConfig {
    pub min_atoms: usize,
    pub max_atoms: usize,
    /// Chance of each candidate extra (ring-forming) edge.
    pub ring_edge_prob: f64,
    /// Chance that an atom carries a +1/-1 formal charge.
    pub charge_prob: f64,
    /// Chance of appending a second, disconnected fragment.
    pub fragment_prob: f64,
}

impl Default for MolGenConfig {
    fn default() -> Self {
        MolGenConfig {
            min_atoms: 1,
            max_atoms: 12,
            ring_edge_prob: 0.15,
            charge_prob: 0.05,
            fragment_prob: 0.2,
        }
    }
}

fn pick_element(rng: &mut ChaCha8Rng) -> Element {
    let roll: f64 = rng.gen();
    if roll < 0.55 {
        Element::CARBON
    } else if roll < 0.70 {
        Element::NITROGEN
    } else if roll < 0.85 {
        Element::OXYGEN
    } else if roll < 0.90 {
        Element::SULFUR
    } else if roll < 0.94 {
        Element::FLUORINE
    } else if roll < 0.97 {
        Element::CHLORINE
    } else {
        Element::BROMINE
    }
}

fn base_valence(e: Element) -> u8 {
    *e.default_valences().last().unwrap_or(&1)
}

/// Atoms plus a random spanning tree, bond orders within valence budgets.
fn random_fragment(rng: &mut ChaCha8Rng, n: usize) -> (Vec<Atom>, Vec<Bond>) {
    let mut atoms: Vec<Atom> = Vec::with_capacity(n);
    let mut budget: Vec<u8> = Vec::with_capacity(n);
    for _ in 0..n {
        let e = pick_element(rng);
        atoms.push(Atom::new(e));
        budget.push(base_valence(e));
    }
    let mut bonds = Vec::new();
    for i in 1..n {
        let candidates: Vec<usize> = (0..i).filter(|&j| budget[j] >= 1).collect();
        let j = if candidates.is_empty() {
            // Saturated prefix: attach to the previous atom anyway; its
            // hydrogen count simply ends up at zero.
            i - 1
        } else {
            candidates[rng.gen_range(0..candidates.len())]
        };
        let units = pick_bond_units(rng, budget[i].min(budget[j]));
        bonds.push(Bond::new(
            i,
            j,
            match units {
                3 => BondOrder::Triple,
                2 => BondOrder::Double,
                _ => BondOrder::Single,
            },
        ));
        budget[i] = budget[i].saturating_sub(units);
        budget[j] = budget[j].saturating_sub(units);
    }
    (atoms, bonds)
}

fn pick_bond_units(rng: &mut ChaCha8Rng, cap: u8) -> u8 {
    let roll: f64 = rng.gen();
    if cap >= 3 && roll > 0.92 {
        3
    } else if cap >= 2 && roll > 0.75 {
        2
    } else {
        1
    }
}

/// A random molecule per `cfg`, deterministic in the RNG state.
pub fn random_molecule(rng: &mut ChaCha8Rng, cfg: &MolGenConfig) -> Molecule {
    let n = rng.gen_range(cfg.min_atoms..=cfg.max_atoms);
    let (mut atoms, mut bonds) = assembled_fragment(rng, n, cfg);
    if cfg.fragment_prob > 0.0 && rng.gen_bool(cfg.fragment_prob) {
        let extra_n = rng.gen_range(1..=3.min(cfg.max_atoms));
        let (extra_atoms, extra_bonds) = assembled_fragment(rng, extra_n, cfg);
        let offset = atoms.len();
        atoms.extend(extra_atoms);
        bonds.extend(extra_bonds.into_iter().map(|b| Bond {
            a: b.a + offset,
            b: b.b + offset,
            order: b.order,
            dir_from: None,
        }));
    }
    Molecule::new(atoms, bonds).expect("generator emits valid graphs")
}

fn assembled_fragment(
    rng: &mut ChaCha8Rng,
    n: usize,
    cfg: &MolGenConfig,
) -> (Vec<Atom>, Vec<Bond>) {
    let (mut atoms, mut bonds) = random_fragment(rng, n);
    // Budget after tree bonds, for ring edges and hydrogen counts.
    let mut budget: Vec<i16> = atoms
        .iter()
        .map(|a| base_valence(a.element) as i16)
        .collect();
    for b in &bonds {
        let units = b.order.valence_units() as i16;
        budget[b.a] -= units;
        budget[b.b] -= units;
    }
    for a in 0..n {
        for b in (a + 2)..n {
            if budget[a] >= 1
                && budget[b] >= 1
                && !bonds.iter().any(|e| (e.a, e.b) == (a.min(b), a.max(b)))
                && rng.gen_bool(cfg.ring_edge_prob)
            {
                bonds.push(Bond::new(a, b, BondOrder::Single));
                budget[a] -= 1;
                budget[b] -= 1;
            }
        }
    }
    for (i, atom) in atoms.iter_mut().enumerate() {
        if rng.gen_bool(cfg.charge_prob) {
            atom.formal_charge = if rng.gen_bool(0.5) { 1 } else { -1 };
        }
        atom.hydrogen_count = budget[i].max(0) as u8;
    }
    (atoms, bonds)
}

/// A synthetic atom-mapped reaction: the product's atoms (maps `1..=n`)
/// all appear in the reactant, which may gain mapped substituent atoms and
/// sometimes a detached fragment.
pub fn random_reaction(rng: &mut ChaCha8Rng) -> (Molecule, Molecule) {
    let cfg = MolGenConfig {
        min_atoms: 3,
        max_atoms: 10,
        fragment_prob: 0.0,
        ..MolGenConfig::default()
    };
    let product = {
        let m = random_molecule(rng, &cfg);
        let atoms = m
            .atoms()
            .iter()
            .enumerate()
            .map(|(i, a)| Atom {
                atom_map: i as u32 + 1,
                ..a.clone()
            })
            .collect();
        Molecule::new(atoms, m.bonds().to_vec()).unwrap()
    };

    let mut atoms: Vec<Atom> = product.atoms().to_vec();
    let mut bonds: Vec<Bond> = product.bonds().to_vec();
    let mut next_map = atoms.len() as u32 + 1;

    // Substituents on atoms that still carry hydrogens.
    let extras = rng.gen_range(0..=3);
    for _ in 0..extras {
        let hosts: Vec<usize> = (0..atoms.len())
            .filter(|&i| atoms[i].hydrogen_count >= 1)
            .collect();
        if hosts.is_empty() {
            break;
        }
        let host = hosts[rng.gen_range(0..hosts.len())];
        let e = pick_element(rng);
        let idx = atoms.len();
        atoms.push(Atom {
            atom_map: next_map,
            hydrogen_count: base_valence(e).saturating_sub(1),
            ..Atom::new(e)
        });
        next_map += 1;
        atoms[host].hydrogen_count -= 1;
        bonds.push(Bond::new(host, idx, BondOrder::Single));
    }

    // Occasionally a detached mapped or unmapped fragment.
    if rng.gen_bool(0.4) {
        let n = rng.gen_range(1..=3);
        let offset = atoms.len();
        let (frag_atoms, frag_bonds) = assembled_fragment(
            rng,
            n,
            &MolGenConfig {
                min_atoms: n,
                max_atoms: n,
                charge_prob: 0.0,
                ..MolGenConfig::default()
            },
        );
        let mapped = rng.gen_bool(0.5);
        for a in frag_atoms {
            atoms.push(Atom {
                atom_map: if mapped { next_map } else { 0 },
                ..a
            });
            if mapped {
                next_map += 1;
            }
        }
        bonds.extend(frag_bonds.into_iter().map(|b| Bond {
            a: b.a + offset,
            b: b.b + offset,
            order: b.order,
            dir_from: None,
        }));
    }

    let reactant = Molecule::new(atoms, bonds).unwrap();
    (product, reactant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::{canonical_smiles, parse_smiles, write_smiles, NodeOrder, ParseMode};

    #[test]
    fn generated_molecules_round_trip_through_smiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let cfg = MolGenConfig::default();
        for _ in 0..300 {
            let m = random_molecule(&mut rng, &cfg);
            let text = write_smiles(&m, &NodeOrder::identity(m.atom_count())).unwrap();
            let back = parse_smiles(&text, ParseMode::Standard).unwrap();
            assert_eq!(
                canonical_smiles(&back),
                canonical_smiles(&m),
                "round trip of {text}"
            );
        }
    }

    #[test]
    fn generated_reactions_share_all_product_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let (product, reactant) = random_reaction(&mut rng);
            let shared = crate::align::match_shared(&product, &reactant).unwrap();
            assert_eq!(shared.pairs.len(), product.atom_count());
            assert!(reactant.atom_count() >= product.atom_count());
        }
    }
}
