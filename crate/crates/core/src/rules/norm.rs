//! Brute-force normal form: expand every composite item structurally, then
//! reduce each all-vector chain to a polynomial over inner products and
//! length-4 brackets by the vector-times-blade contraction recursion.
//!
//! This is deliberately strategy-free and slow; the engine uses it only as
//! an independent symbolic cross-check of strategy-driven derivations.

use crate::atom::BracketKind;
use crate::cga::qi;
use crate::chain::{Item, ScalarWrap};
use crate::poly::NbaPoly;
use crate::sym::{SymDef, Symbols, VecSym};
use std::collections::BTreeMap;

use super::meet::{expand_meet, Split};

fn is_dual_item(it: &Item, syms: &Symbols) -> bool {
    match it {
        Item::DualVec(_) => true,
        Item::Vec(s) => matches!(syms.def(*s), SymDef::WedgeDual(_)),
        Item::Blade3(_) => false,
    }
}

fn undual_item(it: &Item, syms: &Symbols) -> Item {
    match it {
        Item::DualVec(s) => Item::Vec(*s),
        Item::Vec(s) => match syms.def(*s) {
            SymDef::WedgeDual(t) => Item::Blade3(*t),
            _ => unreachable!("not a dual item"),
        },
        Item::Blade3(_) => unreachable!("not a dual item"),
    }
}

fn splice(items: &[Item], i: usize, with: &[Item]) -> Vec<Item> {
    let mut out = Vec::with_capacity(items.len() + with.len() - 1);
    out.extend_from_slice(&items[..i]);
    out.extend_from_slice(with);
    out.extend_from_slice(&items[i + 1..]);
    out
}

/// One structural reduction step: `Ok(Some(..))` replaces the chain by a
/// weighted sum of chains, `Ok(None)` means the chain is already all
/// vectors, `Err(())` means an unpaired dual remains and the chain cannot
/// be normalized.
fn step(
    items: &[Item],
    syms: &Symbols,
) -> Result<Option<Vec<(NbaPoly, Vec<Item>)>>, ()> {
    let half = crate::cga::q(1, 2);
    for (i, it) in items.iter().enumerate() {
        match it {
            Item::Blade3([a, b, c]) => {
                // a^b^c = (abc - cba)/2.
                let fwd = [Item::Vec(*a), Item::Vec(*b), Item::Vec(*c)];
                let bwd = [Item::Vec(*c), Item::Vec(*b), Item::Vec(*a)];
                return Ok(Some(vec![
                    (NbaPoly::constant(half.clone()), splice(items, i, &fwd)),
                    (
                        NbaPoly::constant(-half),
                        splice(items, i, &bwd),
                    ),
                ]));
            }
            Item::Vec(s) | Item::DualVec(s) => match syms.def(*s).clone() {
                SymDef::Nullify { inner, base } => {
                    // N_b(m) = (1/2) m b m; the dual rides on the last
                    // factor.
                    let last = match it {
                        Item::DualVec(_) => Item::DualVec(inner),
                        _ => Item::Vec(inner),
                    };
                    let unfold = [Item::Vec(inner), Item::Vec(base), last];
                    return Ok(Some(vec![(
                        NbaPoly::constant(half),
                        splice(items, i, &unfold),
                    )]));
                }
                def @ SymDef::ReducedMeet { .. } => {
                    let parts =
                        expand_meet(&def, Split::Left, syms).expect("meet def");
                    return Ok(Some(
                        parts
                            .into_iter()
                            .map(|(coeff, v)| {
                                let rep = match it {
                                    Item::DualVec(_) => Item::DualVec(v),
                                    _ => Item::Vec(v),
                                };
                                (coeff, splice(items, i, &[rep]))
                            })
                            .collect(),
                    ));
                }
                _ => {}
            },
        }
    }
    // No structural composite left; cancel the first pair of duals.
    let duals: Vec<usize> = items
        .iter()
        .enumerate()
        .filter(|(_, it)| is_dual_item(it, syms))
        .map(|(i, _)| i)
        .collect();
    if duals.len() >= 2 {
        let (i, j) = (duals[0], duals[1]);
        let mut out = items.to_vec();
        out[i] = undual_item(&items[i], syms);
        out[j] = undual_item(&items[j], syms);
        let sign = if (j - i - 1) % 2 == 0 { 1 } else { -1 };
        return Ok(Some(vec![(NbaPoly::constant(qi(sign)), out)]));
    }
    if items.iter().any(|it| matches!(it, Item::DualVec(_))) {
        return Err(());
    }
    Ok(None)
}

/// Scalar (grade-0) or pseudoscalar-coefficient (grade-4) part of a product
/// of plain vectors, as a polynomial over inner products and determinants.
/// Built right-to-left with `x B = x _| B + x ^ B` for a vector against a
/// blade; states are (wedge, accumulated coefficient) pairs.
fn vector_chain_poly(kind: BracketKind, seq: &[VecSym], syms: &Symbols) -> NbaPoly {
    let mut states: BTreeMap<Vec<VecSym>, NbaPoly> = BTreeMap::new();
    states.insert(Vec::new(), NbaPoly::one());
    for &x in seq.iter().rev() {
        let mut next: BTreeMap<Vec<VecSym>, NbaPoly> = BTreeMap::new();
        let mut bump = |key: Vec<VecSym>, add: NbaPoly| {
            let slot = next.entry(key).or_insert_with(NbaPoly::zero);
            *slot = slot.add(&add);
        };
        for (wedge, c) in &states {
            for (idx, &y) in wedge.iter().enumerate() {
                let inner = NbaPoly::inner(x, y, syms);
                if inner.is_zero() {
                    continue;
                }
                let mut rest = wedge.clone();
                rest.remove(idx);
                let sgn = if idx % 2 == 0 { 1 } else { -1 };
                bump(rest, c.mul(&inner).scale(&qi(sgn)));
            }
            if !wedge.contains(&x) {
                let mut ext = Vec::with_capacity(wedge.len() + 1);
                ext.push(x);
                ext.extend(wedge);
                bump(ext, c.clone());
            }
        }
        states = next;
    }
    let mut total = NbaPoly::zero();
    for (wedge, c) in &states {
        match kind {
            BracketKind::Angular if wedge.is_empty() => {
                total = total.add(c);
            }
            BracketKind::Square if wedge.len() == 4 => {
                let det = NbaPoly::bracket(BracketKind::Square, wedge, syms)
                    .expect("even bracket");
                total = total.add(&c.mul(&det));
            }
            _ => {}
        }
    }
    total
}

/// Full normalization of a wrapped chain to a bracket polynomial. `None`
/// when an unpaired dual item blocks the reduction.
pub fn expand_all(w: &ScalarWrap, syms: &Symbols) -> Option<NbaPoly> {
    let mut stack: Vec<(NbaPoly, Vec<Item>)> =
        vec![(NbaPoly::one(), w.chain.0.clone())];
    let mut total = NbaPoly::zero();
    while let Some((coeff, items)) = stack.pop() {
        if coeff.is_zero() {
            continue;
        }
        match step(&items, syms) {
            Err(()) => return None,
            Ok(Some(parts)) => {
                for (c, chain) in parts {
                    stack.push((coeff.mul(&c), chain));
                }
            }
            Ok(None) => {
                let seq: Vec<VecSym> = items
                    .iter()
                    .map(|it| match it {
                        Item::Vec(s) => *s,
                        _ => unreachable!("step leaves only vectors"),
                    })
                    .collect();
                total = total.add(&coeff.mul(&vector_chain_poly(w.kind, &seq, syms)));
            }
        }
    }
    Some(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Chain;
    use crate::rules::testutil::{random_assign, setup};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_matches_eval(w: &ScalarWrap, syms: &Symbols, seed: u64) {
        let p = expand_all(w, syms).expect("normalizes");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let assign = random_assign(syms, &mut rng);
            assert_eq!(p.evaluate(&assign), w.eval(&assign), "{}", w.render(syms));
        }
    }

    #[test]
    fn angular_pair_is_inner_product() {
        let (syms, p) = setup(2);
        let w = ScalarWrap::angular(Chain::of_vecs(&[p[0], p[1]]));
        assert_eq!(
            expand_all(&w, &syms).unwrap(),
            NbaPoly::inner(p[0], p[1], &syms)
        );
    }

    #[test]
    fn square_quadruple_is_determinant() {
        let (syms, p) = setup(4);
        let w = ScalarWrap::square(Chain::of_vecs(&[p[0], p[2], p[1], p[3]]));
        assert_eq!(
            expand_all(&w, &syms).unwrap(),
            NbaPoly::bracket(BracketKind::Square, &[p[0], p[2], p[1], p[3]], &syms)
                .unwrap()
        );
    }

    #[test]
    fn random_plain_chains_match_direct_evaluation() {
        let (syms, p) = setup(5);
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for trial in 0..12 {
            let len = [6, 7, 8][trial % 3];
            let seq: Vec<VecSym> =
                (0..len).map(|_| p[rng.gen_range(0..p.len())]).collect();
            for kind in [BracketKind::Angular, BracketKind::Square] {
                let w = ScalarWrap {
                    kind,
                    chain: Chain::of_vecs(&seq),
                };
                assert_matches_eval(&w, &syms, 100 + trial as u64);
            }
        }
    }

    #[test]
    fn doubly_degenerate_octet_collapses_to_single_term() {
        // [5 1 2 3 6 3 4 1] = -4 (1.5)(3.6) [1 2 3 4].
        let (syms, p) = setup(6);
        let w = ScalarWrap::square(Chain::of_vecs(&[
            p[4], p[0], p[1], p[2], p[5], p[2], p[3], p[0],
        ]));
        let got = expand_all(&w, &syms).unwrap();
        let expected = NbaPoly::inner(p[0], p[4], &syms)
            .mul(&NbaPoly::inner(p[2], p[5], &syms))
            .mul(&NbaPoly::bracket(
                BracketKind::Square,
                &[p[0], p[1], p[2], p[3]],
                &syms,
            )
            .unwrap())
            .scale(&crate::cga::q(-4, 1));
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        for _ in 0..20 {
            let assign = random_assign(&syms, &mut rng);
            assert_eq!(got.evaluate(&assign), expected.evaluate(&assign));
        }
    }

    #[test]
    fn nullified_wedge_dual_center_reduces() {
        // A circumcenter: N_e((1^2^3)~) inside a chain; the two dual copies
        // cancel and the blades expand.
        let (mut syms, p) = setup(4);
        let e = syms.infinity();
        let wd = syms.wedge_dual(p[0], p[1], p[2]);
        let c = syms.nullify(wd, e);
        for kind in [BracketKind::Angular, BracketKind::Square] {
            let w = ScalarWrap {
                kind,
                chain: Chain::of_vecs(&[c, p[3], e, p[3]]),
            };
            assert_matches_eval(&w, &syms, 63);
        }
    }

    #[test]
    fn nullified_meet_intersection_reduces() {
        let (mut syms, p) = setup(5);
        let m = syms.reduced_meet([p[1], p[2]], [p[3], p[4]], p[0]);
        let x = syms.nullify(m, p[0]);
        let w = ScalarWrap::angular(Chain::of_vecs(&[x, p[1], x, p[2]]));
        assert_matches_eval(&w, &syms, 64);
    }

    #[test]
    fn paired_meet_duals_reduce() {
        let (mut syms, p) = setup(6);
        let m1 = syms.reduced_meet([p[1], p[2]], [p[3], p[4]], p[0]);
        let m2 = syms.reduced_meet([p[1], p[3]], [p[2], p[5]], p[0]);
        let w = ScalarWrap {
            kind: BracketKind::Angular,
            chain: Chain(vec![
                Item::Vec(p[0]),
                Item::DualVec(m1),
                Item::Vec(p[0]),
                Item::Vec(p[5]),
                Item::DualVec(m2),
                Item::Vec(p[4]),
            ]),
        };
        assert_matches_eval(&w, &syms, 65);
    }

    #[test]
    fn lone_dual_is_rejected() {
        let (syms, p) = setup(3);
        let w = ScalarWrap {
            kind: BracketKind::Angular,
            chain: Chain(vec![
                Item::Vec(p[0]),
                Item::DualVec(p[1]),
                Item::Vec(p[2]),
                Item::Vec(p[0]),
            ]),
        };
        assert!(expand_all(&w, &syms).is_none());
    }

    #[test]
    fn blade_items_expand() {
        let (syms, p) = setup(5);
        let w = ScalarWrap {
            kind: BracketKind::Square,
            chain: Chain(vec![
                Item::Vec(p[0]),
                Item::Blade3([p[1], p[2], p[3]]),
                Item::Blade3([p[1], p[4], p[2]]),
                Item::Vec(p[0]),
            ]),
        };
        assert_matches_eval(&w, &syms, 66);
    }

    #[test]
    fn agrees_with_structured_expansions() {
        // Same chain through the quartet rule and through normalization.
        let (syms, p) = setup(7);
        let w = ScalarWrap::square(Chain::of_vecs(&[
            p[0], p[1], p[2], p[0], p[3], p[4], p[5], p[6],
        ]));
        let direct = expand_all(&w, &syms).unwrap();
        let structured = crate::rules::expand::null_expand(&w, 0, &syms).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        for _ in 0..20 {
            let assign = random_assign(&syms, &mut rng);
            let via_rule: crate::cga::Q = structured
                .iter()
                .map(|(c, wr)| c.evaluate(&assign) * wr.eval(&assign))
                .sum();
            assert_eq!(direct.evaluate(&assign), via_rule);
        }
    }
}
