//! Scalar atoms of null bracket algebra: inner products `(a.b)` and angular
//! or square brackets over symbol sequences, held in canonical form.
//!
//! Canonicalization implements the bracket symmetry laws: a square-bracket
//! shift flips the sign, reversion preserves it, and angular brackets are
//! invariant under both. The canonical representative is the lexicographic
//! minimum over the shift/reversal orbit, with the accumulated sign returned
//! to the caller. Length-4 square brackets are determinants and are
//! additionally canonicalized under full antisymmetry (sorted sequence with
//! the permutation parity as sign).
//!
//! Atoms that are identically zero are detected here: adjacent equal null
//! symbols (cyclically, since shifts make the ends adjacent), repeated
//! symbols in a length-4 square bracket, and sequences whose symmetry orbit
//! forces a sign conflict.

use crate::cga::{Multivector, Q};
use crate::sym::{Symbols, VecSym};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(
    Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize,
)]
pub enum BracketKind {
    Angular,
    Square,
}

/// A canonical bracket atom. Construct only through [`canonicalize`] so the
/// canonical-form invariant holds.
#[derive(
    Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize,
)]
pub struct BracketAtom {
    pub kind: BracketKind,
    pub seq: Vec<VecSym>,
}

/// A canonical scalar atom.
#[derive(
    Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize,
)]
pub enum Atom {
    /// Inner product of two symbols, stored with `a <= b`.
    Inner(VecSym, VecSym),
    Bracket(BracketAtom),
}

/// Result of canonicalizing a proposed atom.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Canon {
    /// The atom is identically zero.
    Zero,
    /// The atom is the constant 1 (empty angular bracket).
    One,
    /// A canonical atom together with the sign relating it to the input.
    Atom(Atom, i32),
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum AtomError {
    #[error("square bracket of odd length {0}: encoding bug")]
    OddSquareBracket(usize),
}

/// Canonicalize an inner product `(a.b)`.
pub fn canon_inner(a: VecSym, b: VecSym, syms: &Symbols) -> Canon {
    if a == b && syms.is_null(a) {
        return Canon::Zero;
    }
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    Canon::Atom(Atom::Inner(a, b), 1)
}

fn has_cyclic_adjacent_null_pair(seq: &[VecSym], syms: &Symbols) -> bool {
    let k = seq.len();
    if k < 2 {
        return false;
    }
    (0..k).any(|i| {
        let a = seq[i];
        let b = seq[(i + 1) % k];
        a == b && syms.is_null(a)
    })
}

fn sort_with_parity(seq: &[VecSym]) -> (Vec<VecSym>, i32) {
    let mut v = seq.to_vec();
    let mut sign = 1;
    // Insertion sort, counting transpositions.
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    (v, sign)
}

/// Canonicalize a bracket over `seq`. Returns the canonical atom and the
/// sign `s` such that `input = s * canonical`.
pub fn canonicalize(
    kind: BracketKind,
    seq: &[VecSym],
    syms: &Symbols,
) -> Result<Canon, AtomError> {
    let k = seq.len();
    match kind {
        BracketKind::Square => {
            if k % 2 == 1 {
                return Err(AtomError::OddSquareBracket(k));
            }
            if k < 4 {
                // Grade-4 part of a product of fewer than 4 vectors is 0.
                return Ok(Canon::Zero);
            }
        }
        BracketKind::Angular => {
            if k == 0 {
                return Ok(Canon::One);
            }
            if k % 2 == 1 {
                // Odd products of vectors have no scalar part.
                return Ok(Canon::Zero);
            }
        }
    }
    if has_cyclic_adjacent_null_pair(seq, syms) {
        return Ok(Canon::Zero);
    }
    if kind == BracketKind::Angular && k == 2 {
        return Ok(canon_inner(seq[0], seq[1], syms));
    }
    if kind == BracketKind::Square && k == 4 {
        // Determinant: fully antisymmetric.
        let mut uniq = seq.to_vec();
        uniq.sort_unstable();
        uniq.dedup();
        if uniq.len() < 4 {
            return Ok(Canon::Zero);
        }
        let (sorted, sign) = sort_with_parity(seq);
        return Ok(Canon::Atom(
            Atom::Bracket(BracketAtom {
                kind,
                seq: sorted,
            }),
            sign,
        ));
    }
    // Orbit closure under three moves:
    //   * cyclic shift: sign flips per shift for the square kind (k is even
    //     here, so a full cycle is sign-neutral and cyclic application of
    //     the other moves is sound);
    //   * reversal: sign +1 for both kinds;
    //   * null sandwich swap: for null a, a x y a = -(a y x a), since
    //     x y + y x = 2 (x.y) and a a = 0.
    // variant = orbit_sign * input, so input = orbit_sign * variant
    // (signs are +-1). A sign conflict anywhere forces the atom to vanish.
    let mut seen: BTreeMap<Vec<VecSym>, i32> = BTreeMap::new();
    seen.insert(seq.to_vec(), 1);
    let mut queue: Vec<(Vec<VecSym>, i32)> = vec![(seq.to_vec(), 1)];
    while let Some((v, s)) = queue.pop() {
        let mut nexts: Vec<(Vec<VecSym>, i32)> = Vec::new();
        let mut rot = v.clone();
        rot.rotate_left(1);
        nexts.push((rot, if kind == BracketKind::Square { -s } else { s }));
        nexts.push((v.iter().rev().cloned().collect(), s));
        for i in 0..k {
            if v[i] == v[(i + 3) % k] && syms.is_null(v[i]) {
                let mut w = v.clone();
                w.swap((i + 1) % k, (i + 2) % k);
                nexts.push((w, -s));
            }
        }
        for (w, ws) in nexts {
            match seen.get(&w) {
                Some(old) if *old != ws => return Ok(Canon::Zero),
                Some(_) => {}
                None => {
                    seen.insert(w.clone(), ws);
                    queue.push((w, ws));
                }
            }
        }
    }
    let (min_seq, min_sign) = seen
        .iter()
        .next()
        .map(|(v, s)| (v.clone(), *s))
        .unwrap();
    Ok(Canon::Atom(
        Atom::Bracket(BracketAtom {
            kind,
            seq: min_seq,
        }),
        min_sign,
    ))
}

/// Exact evaluation of an atom under an assignment of every symbol to a
/// multivector vector.
pub fn eval_atom(atom: &Atom, assign: &BTreeMap<VecSym, Multivector>) -> Q {
    match atom {
        Atom::Inner(a, b) => assign[a].inner(&assign[b]),
        Atom::Bracket(b) => {
            let chain: Vec<Multivector> =
                b.seq.iter().map(|s| assign[s].clone()).collect();
            match b.kind {
                BracketKind::Angular => crate::cga::angular_bracket_num(&chain),
                BracketKind::Square => crate::cga::square_bracket_num(&chain),
            }
        }
    }
}

/// Render an atom in the trace format: `(1.2)`, `[1 2 3 4]`, `<1 2 3 4>`.
pub fn render_atom(atom: &Atom, syms: &Symbols) -> String {
    match atom {
        Atom::Inner(a, b) => format!("({}.{})", syms.name(*a), syms.name(*b)),
        Atom::Bracket(b) => {
            let names: Vec<String> = b.seq.iter().map(|s| syms.name(*s)).collect();
            match b.kind {
                BracketKind::Square => format!("[{}]", names.join(" ")),
                BracketKind::Angular => format!("<{}>", names.join(" ")),
            }
        }
    }
}
