//! The rewrite-rule catalogue over long geometric-product chains and bracket
//! polynomials.
//!
//! Every rule is locus-explicit: the caller names the position it applies
//! to, and the strategy layer decides where and when. Each rule's output is
//! sound by construction and additionally verified numerically by the
//! engine on every proof step.

pub mod expand;
pub mod factor;
pub mod meet;
pub mod norm;

use crate::atom::BracketKind;
use crate::cga::{Multivector, Q};
use crate::chain::{Item, ScalarWrap};
use crate::poly::NbaPoly;
use crate::sym::{Symbols, VecSym};
use std::collections::BTreeMap;

/// Stable rule identifiers, rendered verbatim in proof traces.
pub const RULE_NULL_SYMMETRY: &str = "null-symmetry";
pub const RULE_NULL_EXPAND: &str = "null-expand";
pub const RULE_QUARTET: &str = "quartet";
pub const RULE_SEXTET: &str = "sextet";
pub const RULE_RATIONAL_SEXTET: &str = "rational-sextet";
pub const RULE_RATIONAL_OCTET: &str = "rational-octet";
pub const RULE_CLIFFORD_FACTOR: &str = "clifford-factor";
pub const RULE_GP_CONTRACT: &str = "gp-contract";
pub const RULE_IB_CONTRACT: &str = "ib-contract";
pub const RULE_NULL_DUALITY: &str = "null-duality";
pub const RULE_MEET_EXPAND_L: &str = "meet-expand-L";
pub const RULE_MEET_EXPAND_R: &str = "meet-expand-R";
pub const RULE_DUAL_SYMMETRY: &str = "dual-symmetry";
pub const RULE_WEDGE_EXPAND: &str = "wedge-expand";
pub const RULE_DOUBLE_LINE: &str = "double-line";

/// A coefficient-weighted wrap; a rewrite step turns one wrap into a sum of
/// these.
pub type WrapTerm = (NbaPoly, ScalarWrap);

/// Whether the wrap is identically zero by local structure: two cyclically
/// adjacent equal null vectors annihilate (11 = 0, reachable by shift), and
/// a chain with an odd number of items (all odd-grade) has neither scalar
/// nor pseudoscalar part.
pub fn wrap_is_zero(w: &ScalarWrap, syms: &Symbols) -> bool {
    let n = w.chain.len();
    if n % 2 == 1 {
        return true;
    }
    if w.kind == BracketKind::Square && n < 4 {
        return true;
    }
    (0..n).any(|i| {
        let (a, b) = (&w.chain.0[i], &w.chain.0[(i + 1) % n]);
        match (a, b) {
            (Item::Vec(x), Item::Vec(y)) => x == y && syms.is_null(*x),
            _ => false,
        }
    })
}

/// Convert an all-vector wrap into a polynomial atom (canonicalized).
/// `None` if the chain still contains non-vector items.
pub fn wrap_to_poly(w: &ScalarWrap, syms: &Symbols) -> Option<NbaPoly> {
    let seq = w.chain.as_vec_syms()?;
    Some(NbaPoly::bracket(w.kind, &seq, syms).expect("even chain"))
}

/// Exact value of a weighted-wrap sum at an assignment.
pub fn eval_terms(terms: &[WrapTerm], assign: &BTreeMap<VecSym, Multivector>) -> Q {
    let mut total = Q::from(num_bigint::BigInt::from(0));
    for (coeff, wrap) in terms {
        total += coeff.evaluate(assign) * wrap.eval(assign);
    }
    total
}

/// Rotate the wrap so that position `i` comes first; returns the sign
/// relating the original to the rotated wrap.
pub fn rotate_to(w: &ScalarWrap, i: usize) -> (ScalarWrap, i32) {
    let mut cur = w.clone();
    let mut sign = 1;
    for _ in 0..(i % w.chain.len().max(1)) {
        let (next, s) = cur.shift_left();
        sign *= s;
        cur = next;
    }
    (cur, sign)
}
