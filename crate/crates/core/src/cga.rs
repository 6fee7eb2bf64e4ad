//! Exact-rational geometric algebra of 4D Minkowski space and the conformal
//! embedding of the Euclidean plane.
//!
//! This is the semantic ground truth for the whole crate: every symbolic
//! rewrite elsewhere is checked against evaluation through this module.
//!
//! Internally multivectors are stored over an orthogonal generator basis
//! `(e1, e2, ep, em)` with squares `(+1, +1, +1, -1)`, so that the product of
//! two basis blades is always a signed basis blade. The null pair of the
//! conformal model is recovered as
//!
//! ```text
//! e0 = (em + ep) / 2        e  = em - ep
//! ```
//!
//! which gives `e0*e0 = e*e = 0` and `e0 . e = -1`, the normalization used
//! throughout.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Exact rational scalar used everywhere in the crate.
pub type Q = BigRational;

/// Convenience constructor for small rationals.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Convenience constructor for small integers as rationals.
pub fn qi(n: i64) -> Q {
    Q::from(BigInt::from(n))
}

/// Squares of the four orthogonal generators `(e1, e2, ep, em)`.
const GEN_SQUARE: [i8; 4] = [1, 1, 1, -1];

/// Blade index: bitmask over the four orthogonal generators.
pub type Blade = u8;

/// Pseudoscalar blade `e1 e2 ep em`.
const I4_BLADE: Blade = 0b1111;

fn reorder_sign(a: Blade, b: Blade) -> i8 {
    // Count transpositions needed to interleave the generators of `b` into `a`.
    let mut a = a >> 1;
    let mut swaps = 0u32;
    while a != 0 {
        swaps += (a & b).count_ones();
        a >>= 1;
    }
    if swaps % 2 == 0 {
        1
    } else {
        -1
    }
}

fn blade_mul(a: Blade, b: Blade) -> (Blade, i8) {
    let mut sign = reorder_sign(a, b);
    let common = a & b;
    for i in 0..4 {
        if common & (1 << i) != 0 {
            sign *= GEN_SQUARE[i as usize];
        }
    }
    (a ^ b, sign)
}

/// An element of the 16-dimensional geometric algebra, with exact rational
/// coefficients. Absent blades are zero.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct Multivector {
    coeffs: BTreeMap<Blade, Q>,
}

impl Multivector {
    pub fn zero() -> Self {
        Multivector::default()
    }

    pub fn scalar(v: Q) -> Self {
        let mut m = Multivector::default();
        m.set(0, v);
        m
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn set(&mut self, blade: Blade, v: Q) {
        if v.is_zero() {
            self.coeffs.remove(&blade);
        } else {
            self.coeffs.insert(blade, v);
        }
    }

    fn addto(&mut self, blade: Blade, v: &Q) {
        if v.is_zero() {
            return;
        }
        let cur = self.coeffs.entry(blade).or_insert_with(Q::zero);
        *cur += v;
        if cur.is_zero() {
            self.coeffs.remove(&blade);
        }
    }

    pub fn coeff(&self, blade: Blade) -> Q {
        self.coeffs.get(&blade).cloned().unwrap_or_else(Q::zero)
    }

    pub fn blades(&self) -> impl Iterator<Item = (Blade, &Q)> {
        self.coeffs.iter().map(|(b, c)| (*b, c))
    }

    /// Orthogonal generator `e1`.
    pub fn e1() -> Self {
        let mut m = Multivector::default();
        m.set(0b0001, Q::one());
        m
    }

    /// Orthogonal generator `e2`.
    pub fn e2() -> Self {
        let mut m = Multivector::default();
        m.set(0b0010, Q::one());
        m
    }

    /// Null origin vector `e0 = (em + ep)/2`.
    pub fn e0() -> Self {
        let mut m = Multivector::default();
        m.set(0b0100, q(1, 2));
        m.set(0b1000, q(1, 2));
        m
    }

    /// Point at infinity `e = em - ep`.
    pub fn einf() -> Self {
        let mut m = Multivector::default();
        m.set(0b0100, qi(-1));
        m.set(0b1000, Q::one());
        m
    }

    /// The fixed pseudoscalar `I4 = e0 ^ e1 ^ e2 ^ e`.
    pub fn pseudoscalar() -> Self {
        Multivector::e0()
            .outer(&Multivector::e1())
            .outer(&Multivector::e2())
            .outer(&Multivector::einf())
    }

    /// `I4^{-1}`; since `I4 * I4 = -1` this is just `-I4`.
    pub fn pseudoscalar_inv() -> Self {
        Multivector::pseudoscalar().neg()
    }

    pub fn neg(&self) -> Self {
        let mut m = Multivector::default();
        for (b, c) in &self.coeffs {
            m.set(*b, -c.clone());
        }
        m
    }

    pub fn add(&self, rhs: &Multivector) -> Self {
        let mut m = self.clone();
        for (b, c) in &rhs.coeffs {
            m.addto(*b, c);
        }
        m
    }

    pub fn sub(&self, rhs: &Multivector) -> Self {
        self.add(&rhs.neg())
    }

    pub fn scale(&self, s: &Q) -> Self {
        let mut m = Multivector::default();
        for (b, c) in &self.coeffs {
            m.set(*b, c * s);
        }
        m
    }

    /// The geometric product.
    pub fn gp(&self, rhs: &Multivector) -> Self {
        let mut m = Multivector::default();
        for (ba, ca) in &self.coeffs {
            for (bb, cb) in &rhs.coeffs {
                let (blade, sign) = blade_mul(*ba, *bb);
                let mut v = ca * cb;
                if sign < 0 {
                    v = -v;
                }
                m.addto(blade, &v);
            }
        }
        m
    }

    /// The outer (exterior) product: blade products restricted to disjoint
    /// generator sets.
    pub fn outer(&self, rhs: &Multivector) -> Self {
        let mut m = Multivector::default();
        for (ba, ca) in &self.coeffs {
            for (bb, cb) in &rhs.coeffs {
                if ba & bb != 0 {
                    continue;
                }
                let (blade, sign) = blade_mul(*ba, *bb);
                let mut v = ca * cb;
                if sign < 0 {
                    v = -v;
                }
                m.addto(blade, &v);
            }
        }
        m
    }

    /// Projection onto the grade-`i` blades. Panics if `i > 4`.
    pub fn grade_part(&self, i: u32) -> Self {
        assert!(i <= 4, "grade out of range: {i}");
        let mut m = Multivector::default();
        for (b, c) in &self.coeffs {
            if b.count_ones() == i {
                m.set(*b, c.clone());
            }
        }
        m
    }

    pub fn scalar_part(&self) -> Q {
        self.coeff(0)
    }

    /// Inner product of two vectors: the grade-0 part of their geometric
    /// product.
    pub fn inner(&self, rhs: &Multivector) -> Q {
        self.gp(rhs).scalar_part()
    }

    /// The dual `A~ = A * I4^{-1}`.
    pub fn dual(&self) -> Self {
        self.gp(&Multivector::pseudoscalar_inv())
    }

    pub fn is_vector(&self) -> bool {
        self.coeffs.keys().all(|b| b.count_ones() == 1)
    }
}

impl fmt::Debug for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let names = ["e1", "e2", "ep", "em"];
        let mut first = true;
        for (b, c) in &self.coeffs {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for i in 0..4 {
                if b & (1 << i) != 0 {
                    write!(f, "{}", names[i as usize])?;
                }
            }
        }
        Ok(())
    }
}

/// A Euclidean point together with its conformal representative.
#[derive(Clone, Debug)]
pub struct EmbeddedPoint {
    pub x: Q,
    pub y: Q,
    pub mv: Multivector,
}

/// Embed a plane point: `p = e0 + x e1 + y e2 + ((x^2+y^2)/2) e`.
///
/// The result is null and satisfies `p . e = -1`.
pub fn embed_point(x: Q, y: Q) -> EmbeddedPoint {
    let half = q(1, 2);
    let norm = (&x * &x + &y * &y) * half;
    let mv = Multivector::e0()
        .add(&Multivector::e1().scale(&x))
        .add(&Multivector::e2().scale(&y))
        .add(&Multivector::einf().scale(&norm));
    EmbeddedPoint { x, y, mv }
}

/// Geometric product of a whole sequence of multivectors, left to right.
pub fn chain_product(vs: &[Multivector]) -> Multivector {
    let mut acc = Multivector::scalar(Q::one());
    for v in vs {
        acc = acc.gp(v);
    }
    acc
}

/// Square bracket of a chain: the `I4`-coordinate of the grade-4 part of the
/// chain product. Chains too short (or of odd length) give 0 by grade
/// accounting.
pub fn square_bracket_num(vs: &[Multivector]) -> Q {
    chain_product(vs).coeff(I4_BLADE)
}

/// Angular bracket of a chain: the grade-0 part of the chain product.
pub fn angular_bracket_num(vs: &[Multivector]) -> Q {
    chain_product(vs).scalar_part()
}

/// Result of [`full_angle_tan`]: a finite tangent or the right-angle marker.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FullAngleTan {
    Finite(Q),
    /// The angular bracket vanished: the full angle is a right angle.
    Infinite,
}

#[derive(Debug, thiserror::Error)]
pub enum CgaError {
    #[error("degenerate input: points must be pairwise distinct")]
    DegenerateInput,
}

/// Tangent of the full angle at `p2` from ray `p2 p1` to ray `p2 p3`,
/// computed as the ratio of the square to the angular bracket of `e p1 p2 p3`.
pub fn full_angle_tan(
    p1: &EmbeddedPoint,
    p2: &EmbeddedPoint,
    p3: &EmbeddedPoint,
) -> Result<FullAngleTan, CgaError> {
    let distinct = |a: &EmbeddedPoint, b: &EmbeddedPoint| a.x != b.x || a.y != b.y;
    if !distinct(p1, p2) || !distinct(p2, p3) || !distinct(p1, p3) {
        return Err(CgaError::DegenerateInput);
    }
    let chain = [
        Multivector::einf(),
        p1.mv.clone(),
        p2.mv.clone(),
        p3.mv.clone(),
    ];
    let num = square_bracket_num(&chain);
    let den = angular_bracket_num(&chain);
    if den.is_zero() {
        Ok(FullAngleTan::Infinite)
    } else {
        Ok(FullAngleTan::Finite(num / den))
    }
}

/// Draw a random rational with numerator in `[-bound, bound]` and
/// denominator in `[1, dbound]`.
pub fn random_q<R: rand::Rng>(rng: &mut R, bound: i64, dbound: i64) -> Q {
    let n = rng.gen_range(-bound..=bound);
    let d = rng.gen_range(1..=dbound);
    q(n, d)
}

/// Random embedded point with small rational coordinates.
pub fn random_point<R: rand::Rng>(rng: &mut R) -> EmbeddedPoint {
    embed_point(random_q(rng, 50, 20), random_q(rng, 50, 20))
}

/// Random null vector: a random point rescaled by a random nonzero rational
/// (so it is generically not e-normalized).
pub fn random_null<R: rand::Rng>(rng: &mut R) -> Multivector {
    let p = random_point(rng);
    let mut s = random_q(rng, 20, 7);
    if s.is_zero() {
        s = Q::one();
    }
    p.mv.scale(&s)
}

/// Random multivector with coefficients on every blade.
pub fn random_multivector<R: rand::Rng>(rng: &mut R) -> Multivector {
    let mut m = Multivector::default();
    for blade in 0u8..16 {
        m.set(blade, random_q(rng, 9, 5));
    }
    m
}

/// Sign helper used by callers that track exact signs.
pub fn q_sign(v: &Q) -> i32 {
    if v.is_zero() {
        0
    } else if v.is_positive() {
        1
    } else {
        -1
    }
}
