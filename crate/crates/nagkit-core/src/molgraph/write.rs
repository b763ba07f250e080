//! SMILES writer. Emission follows a DFS rooted, per connected component,
//! at the component's lowest-position atom, visiting neighbors in ascending
//! position; components are emitted by ascending lowest position.

use super::{implicit_hydrogens, BondOrder, MolError, Molecule, NodeOrder};

/// Render `m` as SMILES with the atom emission sequence induced by `order`.
///
/// Re-parsing the result yields a molecule with identical canonical form;
/// bracket fields (charge, hydrogens, map, stereo tag) round-trip verbatim.
pub fn write_smiles(m: &Molecule, order: &NodeOrder) -> Result<String, MolError> {
    order.check(m)?;
    let mut components = m.components();
    components.sort_by_key(|comp| comp.iter().map(|&a| order.position(a)).min().unwrap());
    let parts: Vec<String> = components
        .iter()
        .map(|comp| write_fragment(m, order, comp))
        .collect();
    Ok(parts.join("."))
}

struct Closure {
    open_at: usize,
    close_at: usize,
    digit: Option<u32>,
}

/// One connected component in DFS order.
pub(crate) fn write_fragment(m: &Molecule, order: &NodeOrder, component: &[usize]) -> String {
    let root = *component
        .iter()
        .min_by_key(|&&a| order.position(a))
        .unwrap();

    // Pass 1: DFS tree (children in visit order) and ring-closure pairs.
    let mut visited = vec![false; m.atom_count()];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); m.atom_count()];
    let mut parent: Vec<Option<usize>> = vec![None; m.atom_count()];
    let mut closures: Vec<Closure> = Vec::new();
    let mut opens_at: Vec<Vec<usize>> = vec![Vec::new(); m.atom_count()];
    let mut closes_at: Vec<Vec<usize>> = vec![Vec::new(); m.atom_count()];

    visited[root] = true;
    let mut stack: Vec<(usize, Vec<usize>, usize)> = Vec::new();
    let sorted_neighbors = |u: usize| {
        let mut ns = m.neighbors(u).to_vec();
        ns.sort_by_key(|&v| order.position(v));
        ns
    };
    stack.push((root, sorted_neighbors(root), 0));
    while let Some((u, ns, i)) = stack.last_mut() {
        if *i >= ns.len() {
            stack.pop();
            continue;
        }
        let u = *u;
        let v = ns[*i];
        *i += 1;
        if !visited[v] {
            visited[v] = true;
            parent[v] = Some(u);
            children[u].push(v);
            stack.push((v, sorted_neighbors(v), 0));
        } else if parent[u] != Some(v) {
            let dup = closures
                .iter()
                .any(|c| (c.open_at, c.close_at) == (v, u) || (c.open_at, c.close_at) == (u, v));
            if !dup {
                // v was emitted earlier: it opens, u closes.
                let id = closures.len();
                closures.push(Closure {
                    open_at: v,
                    close_at: u,
                    digit: None,
                });
                opens_at[v].push(id);
                closes_at[u].push(id);
            }
        }
    }

    // Pass 2: emit, allocating ring digits with reuse.
    let mut out = String::new();
    let mut free_digits: Vec<u32> = Vec::new();
    let mut next_digit: u32 = 1;
    emit_atom(
        m,
        root,
        None,
        &children,
        &opens_at,
        &closes_at,
        &mut closures,
        &mut free_digits,
        &mut next_digit,
        &mut out,
    );
    out
}

#[allow(clippy::too_many_arguments)]
fn emit_atom(
    m: &Molecule,
    u: usize,
    from: Option<usize>,
    children: &[Vec<usize>],
    opens_at: &[Vec<usize>],
    closes_at: &[Vec<usize>],
    closures: &mut [Closure],
    free_digits: &mut Vec<u32>,
    next_digit: &mut u32,
    out: &mut String,
) {
    if let Some(p) = from {
        out.push_str(&bond_text(m, p, u));
    }
    out.push_str(&atom_text(m, u));
    let mut freed_here: Vec<u32> = Vec::new();
    for &id in &closes_at[u] {
        let c = &closures[id];
        out.push_str(&bond_text(m, c.open_at, c.close_at));
        let digit = c.digit.expect("closure digit allocated at open");
        push_digit(out, digit);
        freed_here.push(digit);
    }
    for &id in &opens_at[u] {
        let digit = free_digits.pop().unwrap_or_else(|| {
            let d = *next_digit;
            *next_digit += 1;
            d
        });
        closures[id].digit = Some(digit);
        push_digit(out, digit);
    }
    // A digit freed here becomes reusable only past this atom, so one atom
    // never prints the same digit as both a close and a fresh open.
    free_digits.extend(freed_here);
    let kids = &children[u];
    for (i, &v) in kids.iter().enumerate() {
        let last = i + 1 == kids.len();
        if !last {
            out.push('(');
        }
        emit_atom(
            m, v, Some(u), children, opens_at, closes_at, closures, free_digits, next_digit,
            out,
        );
        if !last {
            out.push(')');
        }
    }
}

fn push_digit(out: &mut String, digit: u32) {
    if digit < 10 {
        out.push_str(&digit.to_string());
    } else {
        out.push('%');
        out.push_str(&format!("{digit:02}"));
    }
}

/// Bond text for traversal `from` -> `to`; empty when the default bond of
/// that atom pair already matches.
fn bond_text(m: &Molecule, from: usize, to: usize) -> String {
    let bond = m
        .bond_between(from, to)
        .expect("bond exists along traversal");
    let both_aromatic = m.atom(from).aromatic && m.atom(to).aromatic;
    match bond.order {
        BondOrder::Single => {
            if let Some((anchor, mark)) = bond.dir_from {
                let mark = if anchor == from { mark } else { flip(mark) };
                mark.to_string()
            } else if both_aromatic {
                "-".to_string()
            } else {
                String::new()
            }
        }
        BondOrder::Double => "=".to_string(),
        BondOrder::Triple => "#".to_string(),
        BondOrder::Aromatic => {
            if both_aromatic {
                String::new()
            } else {
                ":".to_string()
            }
        }
    }
}

fn flip(mark: char) -> char {
    if mark == '/' {
        '\\'
    } else {
        '/'
    }
}

fn atom_text(m: &Molecule, idx: usize) -> String {
    let atom = m.atom(idx);
    let implicit = implicit_hydrogens(
        atom.element,
        atom.aromatic,
        m.neighbors(idx)
            .iter()
            .map(|&v| m.bond_between(idx, v).unwrap().order),
    );
    let bare_symbol_ok = if atom.aromatic {
        matches!(
            atom.element.symbol(),
            "B" | "C" | "N" | "O" | "P" | "S"
        )
    } else {
        atom.element.in_organic_subset()
    };
    let needs_bracket = atom.formal_charge != 0
        || atom.atom_map != 0
        || atom.stereo_tag.is_some()
        || !bare_symbol_ok
        || implicit != Some(atom.hydrogen_count);

    let symbol = if atom.aromatic {
        atom.element.symbol().to_ascii_lowercase()
    } else {
        atom.element.symbol().to_string()
    };
    if !needs_bracket {
        return symbol;
    }
    let mut s = String::from("[");
    s.push_str(&symbol);
    if let Some(tag) = &atom.stereo_tag {
        s.push_str(tag);
    }
    match atom.hydrogen_count {
        0 => {}
        1 => s.push('H'),
        n => {
            s.push('H');
            s.push_str(&n.to_string());
        }
    }
    match atom.formal_charge {
        0 => {}
        1 => s.push('+'),
        -1 => s.push('-'),
        c if c > 0 => s.push_str(&format!("+{c}")),
        c => s.push_str(&format!("{c}")),
    }
    if atom.atom_map != 0 {
        s.push_str(&format!(":{}", atom.atom_map));
    }
    s.push(']');
    s
}
