//! Canonical atom ordering by iterative neighborhood refinement.
//!
//! Atoms start from the invariant (element, aromatic flag, charge, hydrogen
//! count, degree, atom map, stereo tag) and are refined by sorted neighbor
//! rank/bond multisets until stable. Remaining ties are broken by promoting
//! each candidate of the lowest tied class in turn and keeping the
//! lexicographically smallest rendered fragment, which makes the result
//! invariant under input atom relabeling.

use super::write::write_fragment;
use super::{Molecule, NodeOrder};

/// Relabel-invariant order. Fragments of multi-fragment molecules occupy
/// consecutive position blocks sorted by their canonical SMILES.
pub fn canonical_order(m: &Molecule) -> NodeOrder {
    let components = m.components();
    let mut rendered: Vec<(String, Vec<usize>, Vec<usize>)> = components
        .iter()
        .map(|comp| {
            let sub = m.induced_subgraph(comp);
            let ranks = canonical_ranks(&sub);
            let order = NodeOrder::from_positions(ranks.clone()).expect("ranks are a permutation");
            let text = write_fragment(&sub, &order, &(0..sub.atom_count()).collect::<Vec<_>>());
            (text, ranks, comp.clone())
        })
        .collect();
    rendered.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.2[0].cmp(&b.2[0])));

    let mut positions = vec![0usize; m.atom_count()];
    let mut offset = 0;
    for (_, ranks, back) in &rendered {
        for (local, &orig) in back.iter().enumerate() {
            positions[orig] = offset + ranks[local];
        }
        offset += back.len();
    }
    NodeOrder::from_positions(positions).expect("blocks form a permutation")
}

/// Canonical SMILES: the equality oracle. Fragments are sorted
/// lexicographically and dot-joined; stereo tags ride along verbatim.
pub fn canonical_smiles(m: &Molecule) -> String {
    if m.atom_count() == 0 {
        return String::new();
    }
    super::write_smiles(m, &canonical_order(m)).expect("canonical order is valid")
}

/// Canonical rank (= position) per atom of a connected molecule.
fn canonical_ranks(sub: &Molecule) -> Vec<usize> {
    let n = sub.atom_count();
    if n == 1 {
        return vec![0];
    }
    let init = initial_ranks(sub);
    let refined = refine(sub, init);
    let mut budget = 50_000usize;
    let (_, ranks) = break_ties(sub, refined, &mut budget);
    ranks
}

fn initial_ranks(sub: &Molecule) -> Vec<usize> {
    let keys: Vec<_> = (0..sub.atom_count())
        .map(|i| {
            let a = sub.atom(i);
            (
                a.element.atomic_number(),
                a.aromatic,
                a.formal_charge,
                a.hydrogen_count,
                sub.degree(i),
                a.atom_map,
                a.stereo_tag.clone(),
            )
        })
        .collect();
    dense_ranks(&keys)
}

/// Iterate (rank, sorted neighbor (rank, bond) multiset) to a fixpoint.
fn refine(sub: &Molecule, mut ranks: Vec<usize>) -> Vec<usize> {
    loop {
        let keys: Vec<_> = (0..sub.atom_count())
            .map(|i| {
                let mut neigh: Vec<(usize, u8)> = sub
                    .neighbors(i)
                    .iter()
                    .map(|&v| (ranks[v], sub.bond_between(i, v).unwrap().order.code()))
                    .collect();
                neigh.sort_unstable();
                (ranks[i], neigh)
            })
            .collect();
        let next = dense_ranks(&keys);
        if next == ranks {
            return ranks;
        }
        ranks = next;
    }
}

fn dense_ranks<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(k).unwrap())
        .collect()
}

/// Ranks are a permutation iff every class has one member.
fn first_tied_class(ranks: &[usize]) -> Option<Vec<usize>> {
    let n = ranks.len();
    let mut by_rank: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (atom, &r) in ranks.iter().enumerate() {
        by_rank[r].push(atom);
    }
    by_rank.into_iter().find(|class| class.len() > 1)
}

fn break_ties(sub: &Molecule, ranks: Vec<usize>, budget: &mut usize) -> (String, Vec<usize>) {
    match first_tied_class(&ranks) {
        None => {
            let order = NodeOrder::from_positions(ranks.clone()).expect("distinct ranks");
            let text = write_fragment(sub, &order, &(0..sub.atom_count()).collect::<Vec<_>>());
            (text, ranks)
        }
        Some(class) => {
            let mut best: Option<(String, Vec<usize>)> = None;
            for &candidate in &class {
                let promoted = promote(&ranks, &class, candidate);
                let refined = refine(sub, promoted);
                let result = break_ties(sub, refined, budget);
                best = Some(match best {
                    None => result,
                    Some(b) if result.0 < b.0 => result,
                    Some(b) => b,
                });
                if *budget == 0 {
                    break;
                }
                *budget -= 1;
            }
            best.unwrap()
        }
    }
}

/// Separate `candidate` strictly below its tied peers, preserving all other
/// relative ranks.
fn promote(ranks: &[usize], class: &[usize], candidate: usize) -> Vec<usize> {
    let class_rank = ranks[candidate];
    ranks
        .iter()
        .enumerate()
        .map(|(atom, &r)| {
            let mut r = r * 2;
            if r == class_rank * 2 && atom != candidate && class.contains(&atom) {
                r += 1;
            }
            r
        })
        .collect()
}
