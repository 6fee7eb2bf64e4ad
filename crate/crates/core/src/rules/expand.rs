//! Expansion rules driven by a repeated null vector in the chain: null
//! symmetry and expansion, the trigonometric quartet and sextet expansions,
//! the rational sextet and octet expansions, and the multilinear expansion
//! of a 3-blade item.

use super::{rotate_to, WrapTerm};
use crate::atom::{canonicalize, Atom, BracketKind, Canon};
use crate::cga::q;
use crate::chain::{Chain, Item, ScalarWrap};
use crate::poly::NbaPoly;
use crate::sym::{Symbols, VecSym};

fn vec_at(w: &ScalarWrap, i: usize) -> Option<VecSym> {
    match w.chain.0.get(i % w.chain.len())? {
        Item::Vec(s) => Some(*s),
        _ => None,
    }
}

/// Null symmetry `1 2 3 1 = -1 3 2 1`: positions `i..i+3` (cyclically) must
/// be `a x y a` with `a` a null vector; swaps `x`,`y` and returns the sign
/// relating the original wrap to the result.
pub fn null_swap(
    w: &ScalarWrap,
    i: usize,
    syms: &Symbols,
) -> Option<(ScalarWrap, i32)> {
    let n = w.chain.len();
    if n < 4 {
        return None;
    }
    let a = vec_at(w, i)?;
    if !syms.is_null(a) || vec_at(w, i + 3) != Some(a) {
        return None;
    }
    let mut items = w.chain.0.clone();
    items.swap((i + 1) % n, (i + 2) % n);
    Some((
        ScalarWrap {
            kind: w.kind,
            chain: Chain(items),
        },
        -1,
    ))
}

/// Null expansion at position `i`: `a x a -> 2 (a.x) a` or
/// `a x y a -> 2 (a.x) y a - 2 (a.y) x a`, for null `a`. The returned terms
/// sum (with their coefficients) to the original wrap's value.
pub fn null_expand(
    w: &ScalarWrap,
    i: usize,
    syms: &Symbols,
) -> Option<Vec<WrapTerm>> {
    let n = w.chain.len();
    let a = vec_at(w, i)?;
    if !syms.is_null(a) {
        return None;
    }
    if n >= 3 && vec_at(w, i + 2) == Some(a) {
        let x = vec_at(w, i + 1)?;
        let (rot, sign) = rotate_to(w, i % n);
        // a x a rest -> 2 (a.x) a rest
        let mut items = rot.chain.0.clone();
        items.drain(0..2); // drop a, x; keep the second a
        let coeff = NbaPoly::inner(a, x, syms)
            .scale(&q(2 * sign as i64, 1));
        return Some(vec![(
            coeff,
            ScalarWrap {
                kind: w.kind,
                chain: Chain(items),
            },
        )]);
    }
    if n >= 4 && vec_at(w, i + 3) == Some(a) {
        let x = vec_at(w, i + 1)?;
        let y = vec_at(w, i + 2)?;
        let (rot, sign) = rotate_to(w, i % n);
        // a x y a rest -> 2 (a.x) y a rest - 2 (a.y) x a rest
        let tail: Vec<Item> = rot.chain.0[3..].to_vec();
        let with = |mid: VecSym| {
            let mut items = vec![Item::Vec(mid)];
            items.extend(tail.iter().cloned());
            ScalarWrap {
                kind: w.kind,
                chain: Chain(items),
            }
        };
        return Some(vec![
            (
                NbaPoly::inner(a, x, syms).scale(&q(2 * sign as i64, 1)),
                with(y),
            ),
            (
                NbaPoly::inner(a, y, syms).scale(&q(-2 * sign as i64, 1)),
                with(x),
            ),
        ]);
    }
    None
}

fn atom_poly(kind: BracketKind, seq: &[VecSym], syms: &Symbols) -> NbaPoly {
    NbaPoly::bracket(kind, seq, syms).expect("even bracket")
}

/// Trigonometric quartet expansion at position `i`: the chain (after
/// rotation) must read `a x1 x2 x3 a rest` with `a` null and the first five
/// items vectors. Square kind:
/// `[chain] = 2 <a x1 x2 x3> [a rest] + 2 [a x1 x2 x3] <a rest>`;
/// angular kind analogously with a minus.
pub fn quartet_expand(
    w: &ScalarWrap,
    i: usize,
    syms: &Symbols,
) -> Option<Vec<WrapTerm>> {
    let n = w.chain.len();
    if n < 6 {
        return None;
    }
    let a = vec_at(w, i)?;
    if !syms.is_null(a) || vec_at(w, i + 4) != Some(a) {
        return None;
    }
    let x1 = vec_at(w, i + 1)?;
    let x2 = vec_at(w, i + 2)?;
    let x3 = vec_at(w, i + 3)?;
    let (rot, sign) = rotate_to(w, i % n);
    let head = [a, x1, x2, x3];
    let tail_chain = Chain(rot.chain.0[4..].to_vec());
    let ang_head = atom_poly(BracketKind::Angular, &head, syms);
    let sq_head = atom_poly(BracketKind::Square, &head, syms);
    let two = q(2 * sign as i64, 1);
    Some(match w.kind {
        BracketKind::Square => vec![
            (ang_head.scale(&two), ScalarWrap::square(tail_chain.clone())),
            (sq_head.scale(&two), ScalarWrap::angular(tail_chain)),
        ],
        BracketKind::Angular => vec![
            (ang_head.scale(&two), ScalarWrap::angular(tail_chain.clone())),
            (sq_head.scale(&two).neg(), ScalarWrap::square(tail_chain)),
        ],
    })
}

/// Trigonometric sextet expansion at position `i`: chain reads
/// `a x1 x2 a x3 x4 a rest` with `a` null. Square kind:
/// `[chain] = 2 [a x1 x2 a x3 x4] <a rest> + 2 <a x1 x2 a x3 x4> [a rest]`;
/// angular kind with a minus. The trailing block must be nonempty.
pub fn sextet_expand(
    w: &ScalarWrap,
    i: usize,
    syms: &Symbols,
) -> Option<Vec<WrapTerm>> {
    let n = w.chain.len();
    if n < 8 {
        return None;
    }
    let a = vec_at(w, i)?;
    if !syms.is_null(a)
        || vec_at(w, i + 3) != Some(a)
        || vec_at(w, i + 6) != Some(a)
    {
        return None;
    }
    let x1 = vec_at(w, i + 1)?;
    let x2 = vec_at(w, i + 2)?;
    let x3 = vec_at(w, i + 4)?;
    let x4 = vec_at(w, i + 5)?;
    let (rot, sign) = rotate_to(w, i % n);
    let head = [a, x1, x2, a, x3, x4];
    let tail_chain = Chain(rot.chain.0[6..].to_vec());
    let ang_head = atom_poly(BracketKind::Angular, &head, syms);
    let sq_head = atom_poly(BracketKind::Square, &head, syms);
    let two = q(2 * sign as i64, 1);
    Some(match w.kind {
        BracketKind::Square => vec![
            (sq_head.scale(&two), ScalarWrap::angular(tail_chain.clone())),
            (ang_head.scale(&two), ScalarWrap::square(tail_chain)),
        ],
        BracketKind::Angular => vec![
            (ang_head.scale(&two), ScalarWrap::angular(tail_chain.clone())),
            (sq_head.scale(&two).neg(), ScalarWrap::square(tail_chain)),
        ],
    })
}

/// A rational expansion: the wrap equals `numerator / denominator`, with
/// the denominator a single canonical bracket atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalExpansion {
    pub numerator: NbaPoly,
    pub denominator: Atom,
}

fn denom_atom(seq: &[VecSym], syms: &Symbols) -> Option<(Atom, i32)> {
    match canonicalize(BracketKind::Square, seq, syms).ok()? {
        Canon::Atom(atom, sign) => Some((atom, sign)),
        _ => None,
    }
}

/// Rational sextet expansion: chain is six vectors `1..6` with `2,3,5,6`
/// null. Square kind:
/// `[123456] = -2 ((2.3)[1256][3456] + (5.6)[1236][2345]) / [2356]`;
/// angular kind:
/// `<123456> = -2 ((2.3)<1256>[3456] + (5.6)<1236>[2345]) / [2356]`.
pub fn rational_sextet(w: &ScalarWrap, syms: &Symbols) -> Option<RationalExpansion> {
    if w.chain.len() != 6 {
        return None;
    }
    let v = w.chain.as_vec_syms()?;
    let (n1, n2, n3, n4, n5, n6) = (v[0], v[1], v[2], v[3], v[4], v[5]);
    for s in [n2, n3, n5, n6] {
        if !syms.is_null(s) {
            return None;
        }
    }
    let (denom, dsign) = denom_atom(&[n2, n3, n5, n6], syms)?;
    let sq = |s: &[VecSym]| atom_poly(BracketKind::Square, s, syms);
    let ang = |s: &[VecSym]| atom_poly(BracketKind::Angular, s, syms);
    let x = match w.kind {
        BracketKind::Square => NbaPoly::inner(n2, n3, syms)
            .mul(&sq(&[n1, n2, n5, n6]))
            .mul(&sq(&[n3, n4, n5, n6]))
            .add(
                &NbaPoly::inner(n5, n6, syms)
                    .mul(&sq(&[n1, n2, n3, n6]))
                    .mul(&sq(&[n2, n3, n4, n5])),
            ),
        BracketKind::Angular => NbaPoly::inner(n2, n3, syms)
            .mul(&ang(&[n1, n2, n5, n6]))
            .mul(&sq(&[n3, n4, n5, n6]))
            .add(
                &NbaPoly::inner(n5, n6, syms)
                    .mul(&ang(&[n1, n2, n3, n6]))
                    .mul(&sq(&[n2, n3, n4, n5])),
            ),
    };
    Some(RationalExpansion {
        numerator: x.scale(&q(-2 * dsign as i64, 1)),
        denominator: denom,
    })
}

/// Rational octet expansion: four 8-vector patterns. With positions
/// `p0..p7`, the first shape requires `p0 = p4`, `p1 = p5` (reading
/// `1 2 3 4 1 2 5 6`), the second `p0 = p4`, `p2 = p6` (reading
/// `1 3 2 4 1 5 2 6`); each in square and angular kinds. Nulls: `1,2,3,5`
/// of the template.
pub fn rational_octet(w: &ScalarWrap, syms: &Symbols) -> Option<RationalExpansion> {
    if w.chain.len() != 8 {
        return None;
    }
    let p = w.chain.as_vec_syms()?;
    let sq = |s: &[VecSym]| atom_poly(BracketKind::Square, s, syms);
    let ang = |s: &[VecSym]| atom_poly(BracketKind::Angular, s, syms);
    let inner = |a: VecSym, b: VecSym| NbaPoly::inner(a, b, syms);
    if p[0] == p[4] && p[1] == p[5] {
        // Template 1 2 3 4 1 2 5 6: 1=p0, 2=p1, 3=p2, 4=p3, 5=p6, 6=p7.
        let (s1, s2, s3, s4, s5, s6) = (p[0], p[1], p[2], p[3], p[6], p[7]);
        for s in [s1, s2, s3, s5] {
            if !syms.is_null(s) {
                return None;
            }
        }
        let (denom, dsign) = denom_atom(&[s1, s2, s3, s5], syms)?;
        // 1/2 [12341256][1235] = (2.3)[1256][125134] - (2.5)[1234][123156]
        let long1 = [s1, s2, s5, s1, s3, s4];
        let long2 = [s1, s2, s3, s1, s5, s6];
        let x = match w.kind {
            BracketKind::Square => inner(s2, s3)
                .mul(&sq(&[s1, s2, s5, s6]))
                .mul(&sq(&long1))
                .sub(&inner(s2, s5).mul(&sq(&[s1, s2, s3, s4])).mul(&sq(&long2))),
            BracketKind::Angular => inner(s2, s3)
                .mul(&ang(&[s1, s2, s5, s6]))
                .mul(&sq(&long1))
                .sub(&inner(s2, s5).mul(&sq(&[s1, s2, s3, s4])).mul(&ang(&long2))),
        };
        return Some(RationalExpansion {
            numerator: x.scale(&q(2 * dsign as i64, 1)),
            denominator: denom,
        });
    }
    if p[0] == p[4] && p[2] == p[6] {
        // Template 1 3 2 4 1 5 2 6: 1=p0, 3=p1, 2=p2, 4=p3, 5=p5, 6=p7.
        let (s1, s3, s2, s4, s5, s6) = (p[0], p[1], p[2], p[3], p[5], p[7]);
        for s in [s1, s2, s3, s5] {
            if !syms.is_null(s) {
                return None;
            }
        }
        let (denom, dsign) = denom_atom(&[s1, s3, s2, s5], syms)?;
        // 1/2 [13241526][1325]
        //   = 2 (1.5)(2.5)[1324][1326] - 2 (1.3)(2.3)[1524][1526];
        // same shape in the angular kind with the trailing bracket angular.
        let t1 = inner(s1, s5)
            .mul(&inner(s2, s5))
            .mul(&sq(&[s1, s3, s2, s4]));
        let t2 = inner(s1, s3)
            .mul(&inner(s2, s3))
            .mul(&sq(&[s1, s5, s2, s4]));
        let x = match w.kind {
            BracketKind::Square => t1
                .mul(&sq(&[s1, s3, s2, s6]))
                .sub(&t2.mul(&sq(&[s1, s5, s2, s6]))),
            BracketKind::Angular => t1
                .mul(&ang(&[s1, s3, s2, s6]))
                .sub(&t2.mul(&ang(&[s1, s5, s2, s6]))),
        };
        return Some(RationalExpansion {
            numerator: x.scale(&q(4 * dsign as i64, 1)),
            denominator: denom,
        });
    }
    None
}

/// Multilinear expansion of a 3-blade item:
/// `a^b^c = (abc - cba)/2`, giving two weighted wraps.
pub fn wedge_expand(w: &ScalarWrap, i: usize) -> Option<Vec<WrapTerm>> {
    let [a, b, c] = match w.chain.0.get(i)? {
        Item::Blade3(t) => *t,
        _ => return None,
    };
    let replace = |seq: [VecSym; 3]| {
        let mut items = w.chain.0.clone();
        items.splice(i..=i, seq.into_iter().map(Item::Vec));
        ScalarWrap {
            kind: w.kind,
            chain: Chain(items),
        }
    };
    Some(vec![
        (NbaPoly::constant(q(1, 2)), replace([a, b, c])),
        (NbaPoly::constant(q(-1, 2)), replace([c, b, a])),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::testutil::{random_assign, setup};
    use crate::rules::{eval_terms, wrap_is_zero};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn null_swap_sound_and_pattern_checked() {
        let (syms, p) = setup(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // 1 2 3 1: swap -> -(1 3 2 1)
        let w = ScalarWrap::square(Chain::of_vecs(&[p[0], p[1], p[2], p[0]]));
        let (sw, sign) = null_swap(&w, 0, &syms).unwrap();
        assert_eq!(sign, -1);
        assert_eq!(
            sw.chain.as_vec_syms().unwrap(),
            vec![p[0], p[2], p[1], p[0]]
        );
        for _ in 0..20 {
            let assign = random_assign(&syms, &mut rng);
            assert_eq!(w.eval(&assign), -sw.eval(&assign));
        }
        // No repeated null around the position: no-op.
        let w2 = ScalarWrap::square(Chain::of_vecs(&[p[0], p[1], p[2], p[3]]));
        assert!(null_swap(&w2, 0, &syms).is_none());
    }

    #[test]
    fn null_swap_wraps_cyclically() {
        let (syms, p) = setup(4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // Pattern a x y a at positions 4,5,0,1 (crossing the boundary):
        // a = p1 at 4 and 1, x = p2 at 5, y = p3 at 0.
        let w = ScalarWrap::square(Chain::of_vecs(&[
            p[3], p[1], p[2], p[0], p[1], p[2],
        ]));
        let (sw, sign) = null_swap(&w, 4, &syms).unwrap();
        assert_eq!(sign, -1);
        assert_eq!(
            sw.chain.as_vec_syms().unwrap(),
            vec![p[2], p[1], p[2], p[0], p[1], p[3]]
        );
        for _ in 0..20 {
            let assign = random_assign(&syms, &mut rng);
            assert_eq!(w.eval(&assign), -sw.eval(&assign));
        }
    }

    #[test]
    fn null_expand_three_pattern() {
        let (syms, p) = setup(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // 1 2 1 3 -> 2 (1.2) 1 3
        let w = ScalarWrap::square(Chain::of_vecs(&[p[0], p[1], p[0], p[2]]));
        let terms = null_expand(&w, 0, &syms).unwrap();
        assert_eq!(terms.len(), 1);
        for _ in 0..20 {
            let assign = random_assign(&syms, &mut rng);
            assert_eq!(w.eval(&assign), eval_terms(&terms, &assign));
        }
    }

    #[test]
    fn null_expand_four_pattern() {
        let (syms, p) = setup(4);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        // 1 2 3 1 4 … with wrap: verify on a 6-chain and at a nonzero locus.
        let w = ScalarWrap::square(Chain::of_vecs(&[
            p[3], p[0], p[1], p[2], p[0], p[3],
        ]));
        let terms = null_expand(&w, 1, &syms).unwrap();
        assert_eq!(terms.len(), 2);
        for _ in 0..20 {
            let assign = random_assign(&syms, &mut rng);
            assert_eq!(w.eval(&assign), eval_terms(&terms, &assign));
        }
    }

    #[test]
    fn quartet_sound_both_kinds() {
        let (syms, p) = setup(5);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for kind in [BracketKind::Square, BracketKind::Angular] {
            let w = ScalarWrap {
                kind,
                chain: Chain::of_vecs(&[p[0], p[1], p[2], p[3], p[0], p[4], p[1], p[2]]),
            };
            let terms = quartet_expand(&w, 0, &syms).unwrap();
            assert_eq!(terms.len(), 2);
            for _ in 0..20 {
                let assign = random_assign(&syms, &mut rng);
                assert_eq!(w.eval(&assign), eval_terms(&terms, &assign), "{kind:?}");
            }
        }
    }

    #[test]
    fn quartet_at_rotated_locus() {
        let (syms, p) = setup(5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        // Pattern a x1 x2 x3 a at positions 5,6,7,0,1 (crossing the
        // boundary): a = p0 at 5 and 1.
        let w = ScalarWrap::square(Chain::of_vecs(&[
            p[4], p[0], p[1], p[2], p[3], p[0], p[1], p[2],
        ]));
        let terms = quartet_expand(&w, 5, &syms).unwrap();
        assert_eq!(terms.len(), 2);
        for _ in 0..20 {
            let assign = random_assign(&syms, &mut rng);
            assert_eq!(w.eval(&assign), eval_terms(&terms, &assign));
        }
    }

    #[test]
    fn sextet_sound_both_kinds() {
        let (syms, p) = setup(6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for kind in [BracketKind::Square, BracketKind::Angular] {
            let w = ScalarWrap {
                kind,
                chain: Chain::of_vecs(&[
                    p[0], p[1], p[2], p[0], p[3], p[4], p[0], p[5], p[1], p[2],
                ]),
            };
            let terms = sextet_expand(&w, 0, &syms).unwrap();
            for _ in 0..20 {
                let assign = random_assign(&syms, &mut rng);
                assert_eq!(w.eval(&assign), eval_terms(&terms, &assign), "{kind:?}");
            }
        }
        // Trailing block required: an 1231451-shaped chain of length 7 is
        // odd (zero wrap), and length 8 with the third `a` last wraps to a
        // cyclic adjacency — the rule demands n >= 8 with a nonempty tail.
        let w = ScalarWrap::square(Chain::of_vecs(&[
            p[0], p[1], p[2], p[0], p[3], p[4], p[0],
        ]));
        assert!(sextet_expand(&w, 0, &syms).is_none() || wrap_is_zero(&w, &syms));
    }

    #[test]
    fn rational_sextet_sound() {
        let (syms, p) = setup(6);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for kind in [BracketKind::Square, BracketKind::Angular] {
            let w = ScalarWrap {
                kind,
                chain: Chain::of_vecs(&[p[0], p[1], p[2], p[3], p[4], p[5]]),
            };
            let r = rational_sextet(&w, &syms).unwrap();
            for _ in 0..20 {
                let assign = random_assign(&syms, &mut rng);
                let denom = crate::atom::eval_atom(&r.denominator, &assign);
                assert_eq!(
                    w.eval(&assign) * denom,
                    r.numerator.evaluate(&assign),
                    "{kind:?}"
                );
            }
        }
    }

    #[test]
    fn rational_octet_first_shape_sound() {
        let (syms, p) = setup(6);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for kind in [BracketKind::Square, BracketKind::Angular] {
            // 1 2 3 4 1 2 5 6
            let w = ScalarWrap {
                kind,
                chain: Chain::of_vecs(&[
                    p[0], p[1], p[2], p[3], p[0], p[1], p[4], p[5],
                ]),
            };
            let r = rational_octet(&w, &syms).unwrap();
            for _ in 0..20 {
                let assign = random_assign(&syms, &mut rng);
                let denom = crate::atom::eval_atom(&r.denominator, &assign);
                assert_eq!(
                    w.eval(&assign) * denom,
                    r.numerator.evaluate(&assign),
                    "{kind:?}"
                );
            }
        }
    }

    #[test]
    fn rational_octet_second_shape_sound() {
        let (syms, p) = setup(6);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for kind in [BracketKind::Square, BracketKind::Angular] {
            // 1 3 2 4 1 5 2 6
            let w = ScalarWrap {
                kind,
                chain: Chain::of_vecs(&[
                    p[0], p[2], p[1], p[3], p[0], p[4], p[1], p[5],
                ]),
            };
            let r = rational_octet(&w, &syms).unwrap();
            for _ in 0..20 {
                let assign = random_assign(&syms, &mut rng);
                let denom = crate::atom::eval_atom(&r.denominator, &assign);
                assert_eq!(
                    w.eval(&assign) * denom,
                    r.numerator.evaluate(&assign),
                    "{kind:?}"
                );
            }
        }
    }

    #[test]
    fn wedge_expand_sound() {
        let (syms, p) = setup(4);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = ScalarWrap::square(Chain(vec![
            Item::Vec(p[0]),
            Item::Blade3([p[1], p[2], p[3]]),
            Item::Vec(p[1]),
            Item::Blade3([p[0], p[2], p[3]]),
        ]));
        let terms = wedge_expand(&w, 1).unwrap();
        assert_eq!(terms.len(), 2);
        for _ in 0..20 {
            let assign = random_assign(&syms, &mut rng);
            assert_eq!(w.eval(&assign), eval_terms(&terms, &assign));
        }
    }
}
