//! Long geometric-product chains and their scalar wrappers.
//!
//! A chain is an ordered product of items. Most items are single vectors
//! (grade 1), but two grade-3 item shapes arise while collapsing dual pairs:
//! the dual `v~` of a vector and a plain 3-blade `a^b^c`. All item shapes
//! have odd grade, which keeps the shift sign rule uniform: a square-bracket
//! shift flips the sign, an angular shift does not.

use crate::atom::BracketKind;
use crate::cga::{Multivector, Q};
use crate::sym::{Symbols, VecSym};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Item {
    /// A single vector (grade 1). Composite symbols (wedge duals, meets,
    /// nullifications) also denote vectors.
    Vec(VecSym),
    /// The dual `v~` of a vector (grade 3).
    DualVec(VecSym),
    /// A 3-blade `a ^ b ^ c` (grade 3).
    Blade3([VecSym; 3]),
}

impl Item {
    /// Sign picked up by this item under reversion: odd-grade blades of
    /// grade 3 reverse to minus themselves, vectors are fixed.
    pub fn reversion_sign(&self) -> i32 {
        match self {
            Item::Vec(_) => 1,
            Item::DualVec(_) | Item::Blade3(_) => -1,
        }
    }

    pub fn eval(&self, assign: &BTreeMap<VecSym, Multivector>) -> Multivector {
        match self {
            Item::Vec(s) => assign[s].clone(),
            Item::DualVec(s) => assign[s].dual(),
            Item::Blade3([a, b, c]) => assign[a].outer(&assign[b]).outer(&assign[c]),
        }
    }

    pub fn render(&self, syms: &Symbols) -> String {
        match self {
            Item::Vec(s) => syms.name(*s),
            Item::DualVec(s) => format!("{}~", syms.name(*s)),
            Item::Blade3([a, b, c]) => format!(
                "({}^{}^{})",
                syms.name(*a),
                syms.name(*b),
                syms.name(*c)
            ),
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default, Serialize, Deserialize)]
pub struct Chain(pub Vec<Item>);

impl Chain {
    pub fn of_vecs(vs: &[VecSym]) -> Chain {
        Chain(vs.iter().map(|v| Item::Vec(*v)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The symbols of all-vector chains; `None` if any item is not a plain
    /// vector.
    pub fn as_vec_syms(&self) -> Option<Vec<VecSym>> {
        self.0
            .iter()
            .map(|i| match i {
                Item::Vec(s) => Some(*s),
                _ => None,
            })
            .collect()
    }

    pub fn eval(&self, assign: &BTreeMap<VecSym, Multivector>) -> Multivector {
        let mut acc = Multivector::scalar(Q::from(num_bigint::BigInt::from(1)));
        for item in &self.0 {
            acc = acc.gp(&item.eval(assign));
        }
        acc
    }

    pub fn render(&self, syms: &Symbols) -> String {
        self.0
            .iter()
            .map(|i| i.render(syms))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// `<chain>` or `[chain]`: the grade-0 part, or the pseudoscalar coordinate
/// of the grade-4 part, of the chain's product.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct ScalarWrap {
    pub kind: BracketKind,
    pub chain: Chain,
}

impl ScalarWrap {
    pub fn square(chain: Chain) -> Self {
        ScalarWrap {
            kind: BracketKind::Square,
            chain,
        }
    }

    pub fn angular(chain: Chain) -> Self {
        ScalarWrap {
            kind: BracketKind::Angular,
            chain,
        }
    }

    pub fn eval(&self, assign: &BTreeMap<VecSym, Multivector>) -> Q {
        let product = self.chain.eval(assign);
        match self.kind {
            BracketKind::Angular => product.scalar_part(),
            BracketKind::Square => product.coeff(0b1111),
        }
    }

    /// Rotate the chain left by one item; returns the sign relating the
    /// original to the rotated wrap (`original = sign * rotated`). All item
    /// shapes are odd-grade, so square brackets flip sign, angular do not.
    pub fn shift_left(&self) -> (ScalarWrap, i32) {
        let mut items = self.chain.0.clone();
        if items.is_empty() {
            return (self.clone(), 1);
        }
        items.rotate_left(1);
        let sign = match self.kind {
            BracketKind::Square => -1,
            BracketKind::Angular => 1,
        };
        (
            ScalarWrap {
                kind: self.kind,
                chain: Chain(items),
            },
            sign,
        )
    }

    /// Reverse the chain; returns the sign relating the original to the
    /// reversed wrap. Vectors reverse freely; grade-3 items pick up a minus
    /// each.
    pub fn reverse(&self) -> (ScalarWrap, i32) {
        let items: Vec<Item> = self.chain.0.iter().rev().cloned().collect();
        let sign = self
            .chain
            .0
            .iter()
            .map(|i| i.reversion_sign())
            .product::<i32>();
        (
            ScalarWrap {
                kind: self.kind,
                chain: Chain(items),
            },
            sign,
        )
    }

    pub fn render(&self, syms: &Symbols) -> String {
        match self.kind {
            BracketKind::Square => format!("[{}]", self.chain.render(syms)),
            BracketKind::Angular => format!("<{}>", self.chain.render(syms)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cga::{random_null, random_point};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize) -> (Symbols, Vec<VecSym>) {
        let mut syms = Symbols::new();
        let pts = (1..=n).map(|i| syms.point(&i.to_string())).collect();
        (syms, pts)
    }

    fn random_assign(syms: &Symbols, rng: &mut ChaCha8Rng) -> BTreeMap<VecSym, Multivector> {
        syms.iter()
            .map(|(s, _)| {
                let mv = if s == syms.infinity() {
                    Multivector::einf()
                } else {
                    random_null(rng)
                };
                (s, mv)
            })
            .collect()
    }

    fn random_chain(pts: &[VecSym], rng: &mut ChaCha8Rng, len: usize) -> Chain {
        let items = (0..len)
            .map(|_| {
                let pick = |rng: &mut ChaCha8Rng| pts[rng.gen_range(0..pts.len())];
                match rng.gen_range(0..3) {
                    0 => Item::Vec(pick(rng)),
                    1 => Item::DualVec(pick(rng)),
                    _ => Item::Blade3([pick(rng), pick(rng), pick(rng)]),
                }
            })
            .collect();
        Chain(items)
    }

    #[test]
    fn wrap_matches_bracket_oracles() {
        let (syms, pts) = setup(4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let assign = random_assign(&syms, &mut rng);
        let chain = Chain::of_vecs(&pts);
        let vs: Vec<Multivector> = pts.iter().map(|p| assign[p].clone()).collect();
        assert_eq!(
            ScalarWrap::square(chain.clone()).eval(&assign),
            crate::cga::square_bracket_num(&vs)
        );
        assert_eq!(
            ScalarWrap::angular(chain).eval(&assign),
            crate::cga::angular_bracket_num(&vs)
        );
    }

    #[test]
    fn shift_and_reversal_signs_are_sound() {
        let (syms, pts) = setup(5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for trial in 0..40 {
            let len = 2 + (trial % 3) * 2;
            let chain = random_chain(&pts, &mut rng, len);
            let assign = random_assign(&syms, &mut rng);
            for kind in [BracketKind::Square, BracketKind::Angular] {
                let w = ScalarWrap { kind, chain: chain.clone() };
                let v = w.eval(&assign);
                let (shifted, s) = w.shift_left();
                // Shift soundness needs the rotated item to have odd grade,
                // which all item shapes do.
                assert_eq!(
                    v,
                    shifted.eval(&assign) * Q::from(num_bigint::BigInt::from(s)),
                    "shift {kind:?} {}",
                    w.render(&syms)
                );
                let (rev, rs) = w.reverse();
                assert_eq!(
                    v,
                    rev.eval(&assign) * Q::from(num_bigint::BigInt::from(rs)),
                    "reverse {kind:?} {}",
                    w.render(&syms)
                );
            }
        }
    }

    #[test]
    fn dual_vec_item_evaluates_to_dual() {
        let (syms, pts) = setup(1);
        let mut assign = BTreeMap::new();
        assign.insert(syms.infinity(), Multivector::einf());
        assign.insert(pts[0], random_point(&mut ChaCha8Rng::seed_from_u64(1)).mv);
        let item = Item::DualVec(pts[0]);
        assert_eq!(item.eval(&assign), assign[&pts[0]].dual());
    }

    #[test]
    fn rendering() {
        let (syms, pts) = setup(3);
        let chain = Chain(vec![
            Item::Vec(syms.infinity()),
            Item::Vec(pts[0]),
            Item::DualVec(pts[1]),
            Item::Blade3([pts[0], pts[1], pts[2]]),
        ]);
        assert_eq!(
            ScalarWrap::square(chain).render(&syms),
            "[e 1 2~ (1^2^3)]"
        );
    }
}
