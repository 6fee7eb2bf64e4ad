//! Duality and meet-product rules: commutation of a vector with the dual of
//! a blade containing it, cancellation of dual pairs, null duality (turning a
//! pair of circle duals into a reduced meet), the two expansion splits of the
//! reduced meet, and the double-line combination of two meets sharing a line.

use super::{rotate_to, wrap_is_zero, WrapTerm};
use crate::atom::BracketKind;
use crate::cga::q;
use crate::chain::{Chain, Item, ScalarWrap};
use crate::poly::NbaPoly;
use crate::sym::{SymDef, Symbols, VecSym};

/// Which of the reduced meet's two expansions to use. The left split is the
/// defining (exact) one; the right split holds modulo the meet's base vector
/// and needs a context that annihilates it.
#[derive(Clone, Copy, PartialEq, Eq, Debug, serde::Serialize, serde::Deserialize)]
pub enum Split {
    Left,
    Right,
}

/// Whether the item denotes the dual of something representable: the dual of
/// a vector, or a wedge-dual composite (the dual of a 3-blade). Returns the
/// undualized item.
fn undual(item: &Item, syms: &Symbols) -> Option<Item> {
    match item {
        Item::DualVec(s) => Some(Item::Vec(*s)),
        Item::Vec(s) => match syms.def(*s) {
            SymDef::WedgeDual(t) => Some(Item::Blade3(*t)),
            _ => None,
        },
        _ => None,
    }
}

/// `1 (1^2^3)~ = -(1^2^3)~ 1`: a vector anticommutes with the dual of a
/// blade containing it. Position `i` and its cyclic successor must be the
/// vector and the wedge-dual composite, in either order.
pub fn dual_symmetry(
    w: &ScalarWrap,
    i: usize,
    syms: &Symbols,
) -> Option<(ScalarWrap, i32)> {
    let n = w.chain.len();
    if n < 2 {
        return None;
    }
    let j = (i + 1) % n;
    let contains = |wd: VecSym, v: VecSym| match syms.def(wd) {
        SymDef::WedgeDual(t) => t.contains(&v),
        _ => false,
    };
    let fits = match (&w.chain.0[i % n], &w.chain.0[j]) {
        (Item::Vec(a), Item::Vec(b)) => contains(*a, *b) || contains(*b, *a),
        _ => false,
    };
    if !fits {
        return None;
    }
    let mut items = w.chain.0.clone();
    items.swap(i % n, j);
    Some((
        ScalarWrap {
            kind: w.kind,
            chain: Chain(items),
        },
        -1,
    ))
}

/// Cancel a pair of dual items: `A~ u1 .. uk B~ = (-1)^k A u1 .. uk B`
/// (all chain items have odd grade). Positions `i < j` must both hold dual
/// items (a vector's dual, or a wedge-dual composite which undualizes to its
/// 3-blade).
pub fn dual_pair_cancel(
    w: &ScalarWrap,
    i: usize,
    j: usize,
    syms: &Symbols,
) -> Option<(ScalarWrap, i32)> {
    if i >= j || j >= w.chain.len() {
        return None;
    }
    let a = undual(&w.chain.0[i], syms)?;
    let b = undual(&w.chain.0[j], syms)?;
    let mut items = w.chain.0.clone();
    items[i] = a;
    items[j] = b;
    let k = j - i - 1;
    Some((
        ScalarWrap {
            kind: w.kind,
            chain: Chain(items),
        },
        if k % 2 == 0 { 1 } else { -1 },
    ))
}

fn parity_to_front(t: &[VecSym; 3], s: VecSym) -> Option<(i32, [VecSym; 2])> {
    match t.iter().position(|x| *x == s)? {
        0 => Some((1, [t[1], t[2]])),
        1 => Some((-1, [t[0], t[2]])),
        _ => Some((1, [t[0], t[1]])),
    }
}

/// Null duality: for null `p` and blades sharing the vector `base`,
/// `p (base^2^3)~ (base^2'^3')~ p
///  = -p base {(2^3) v_base (2'^3')}~ p`
/// (the overall sign follows this crate's dual and meet orientations).
/// The four-item pattern starts at position `i` (cyclically); the caller
/// names the shared base (the triples may share more than one vector).
/// The symbol table gains the reduced-meet composite.
pub fn null_duality(
    w: &ScalarWrap,
    i: usize,
    base: VecSym,
    syms: &mut Symbols,
) -> Option<(ScalarWrap, i32)> {
    let n = w.chain.len();
    if n < 4 {
        return None;
    }
    let at = |k: usize| &w.chain.0[(i + k) % n];
    let p = match at(0) {
        Item::Vec(s) if syms.is_null(*s) => *s,
        _ => return None,
    };
    if at(3) != &Item::Vec(p) {
        return None;
    }
    let triple = |item: &Item| match item {
        Item::Vec(s) => match syms.def(*s) {
            SymDef::WedgeDual(t) => Some(*t),
            _ => None,
        },
        _ => None,
    };
    let t1 = triple(at(1))?;
    let t2 = triple(at(2))?;
    let (par1, left) = parity_to_front(&t1, base)?;
    let (par2, right) = parity_to_front(&t2, base)?;
    let meet = syms.reduced_meet(left, right, base);
    let (rot, rot_sign) = rotate_to(w, i % n);
    let mut items = vec![
        Item::Vec(p),
        Item::Vec(base),
        Item::DualVec(meet),
        Item::Vec(p),
    ];
    items.extend_from_slice(&rot.chain.0[4..]);
    Some((
        ScalarWrap {
            kind: w.kind,
            chain: Chain(items),
        },
        -rot_sign * par1 * par2,
    ))
}

/// Expand a reduced-meet definition into bracket-weighted vectors.
/// Left split: `[b l0 r0 r1] l1 - [b l1 r0 r1] l0` (exact);
/// right split: `[b l0 l1 r1] r0 - [b l0 l1 r0] r1` (modulo `b`).
pub fn expand_meet(
    def: &SymDef,
    split: Split,
    syms: &Symbols,
) -> Option<Vec<(NbaPoly, VecSym)>> {
    let (left, right, base) = match def {
        SymDef::ReducedMeet { left, right, base } => (left, right, *base),
        _ => return None,
    };
    let br = |seq: [VecSym; 4]| {
        NbaPoly::bracket(BracketKind::Square, &seq, syms).expect("even bracket")
    };
    Some(match split {
        Split::Left => vec![
            (br([base, left[0], right[0], right[1]]), left[1]),
            (br([base, left[1], right[0], right[1]]).neg(), left[0]),
        ],
        Split::Right => vec![
            (br([base, left[0], left[1], right[1]]), right[0]),
            (br([base, left[0], left[1], right[0]]).neg(), right[1]),
        ],
    })
}

/// Expand a reduced-meet item (plain or dualized) in place. For the right
/// split, the surrounding chain must annihilate the residual multiple of the
/// meet's base: this is checked by substituting the base vector at the locus
/// and requiring the wrap to vanish structurally (only plain meet items are
/// eligible).
pub fn expand_meet_item(
    w: &ScalarWrap,
    i: usize,
    split: Split,
    syms: &Symbols,
) -> Option<Vec<WrapTerm>> {
    let (sym, dualized) = match w.chain.0.get(i)? {
        Item::Vec(s) => (*s, false),
        Item::DualVec(s) => (*s, true),
        _ => return None,
    };
    let def = syms.def(sym).clone();
    if split == Split::Right {
        let base = match &def {
            SymDef::ReducedMeet { base, .. } => *base,
            _ => return None,
        };
        if dualized {
            return None;
        }
        let mut probe = w.chain.0.clone();
        probe[i] = Item::Vec(base);
        let probe_wrap = ScalarWrap {
            kind: w.kind,
            chain: Chain(probe),
        };
        if !wrap_is_zero(&probe_wrap, syms) {
            return None;
        }
    }
    let parts = expand_meet(&def, split, syms)?;
    Some(
        parts
            .into_iter()
            .map(|(coeff, v)| {
                let mut items = w.chain.0.clone();
                items[i] = if dualized {
                    Item::DualVec(v)
                } else {
                    Item::Vec(v)
                };
                (
                    coeff,
                    ScalarWrap {
                        kind: w.kind,
                        chain: Chain(items),
                    },
                )
            })
            .collect(),
    )
}

/// Double-line combination: two neighboring reduced meets over the same base
/// `b`, sharing their left wedge `a1^a2` and one right-hand vector `s`,
/// flanked by `b` on both sides:
/// `b {(a1^a2) v_b (x^s)} {(a1^a2) v_b (y^s)} b
///  = -[b y x s][b a1 a2 s] * b a1 a2 b`.
pub fn double_line(
    w: &ScalarWrap,
    i: usize,
    syms: &Symbols,
) -> Option<Vec<WrapTerm>> {
    let n = w.chain.len();
    if n < 4 {
        return None;
    }
    let at = |k: isize| &w.chain.0[(i as isize + k).rem_euclid(n as isize) as usize];
    let meet_def = |item: &Item| match item {
        Item::Vec(s) => match syms.def(*s) {
            SymDef::ReducedMeet { left, right, base } => {
                Some((*left, *right, *base))
            }
            _ => None,
        },
        _ => None,
    };
    let (l1, r1, b1) = meet_def(at(0))?;
    let (l2, r2, b2) = meet_def(at(1))?;
    if b1 != b2 {
        return None;
    }
    let b = b1;
    if at(-1) != &Item::Vec(b) || at(2) != &Item::Vec(b) {
        return None;
    }
    // Shared left wedge, up to order.
    let left_sign = if l2 == l1 {
        1
    } else if l2 == [l1[1], l1[0]] {
        -1
    } else {
        return None;
    };
    // One shared vector between the right wedges.
    let mut pick = None;
    for s in r1 {
        if r2.contains(&s) {
            if pick.is_some() {
                return None;
            }
            pick = Some(s);
        }
    }
    let s = pick?;
    let orient = |r: &[VecSym; 2]| -> (i32, VecSym) {
        if r[1] == s {
            (1, r[0])
        } else {
            (-1, r[1])
        }
    };
    let (sx, x) = orient(&r1);
    let (sy, y) = orient(&r2);
    let sign = left_sign * sx * sy;
    let br = |seq: [VecSym; 4]| {
        NbaPoly::bracket(BracketKind::Square, &seq, syms).expect("even bracket")
    };
    let coeff = br([b, y, x, s])
        .mul(&br([b, l1[0], l1[1], s]))
        .scale(&q(-(sign as i64), 1));
    let (rot, rot_sign) = rotate_to(w, i);
    let mut items = vec![Item::Vec(l1[0]), Item::Vec(l1[1])];
    items.extend_from_slice(&rot.chain.0[2..]);
    Some(vec![(
        coeff.scale(&q(rot_sign as i64, 1)),
        ScalarWrap {
            kind: w.kind,
            chain: Chain(items),
        },
    )])
}
