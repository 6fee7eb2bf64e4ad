//! Polynomials of null bracket algebra: sums of exact-rational coefficients
//! times multisets of atoms, plus the ledger of extracted scalar factors.

use crate::atom::{
    canon_inner, canonicalize, eval_atom, render_atom, Atom, AtomError, BracketKind, Canon,
};
use crate::cga::{Multivector, Q};
use crate::sym::{Symbols, VecSym};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A product of atoms, stored sorted (multiset).
#[derive(
    Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default, Serialize, Deserialize,
)]
pub struct Monomial(pub Vec<Atom>);

impl Monomial {
    pub fn new(mut atoms: Vec<Atom>) -> Self {
        atoms.sort();
        Monomial(atoms)
    }

    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn mul(&self, rhs: &Monomial) -> Monomial {
        let mut v = self.0.clone();
        v.extend(rhs.0.iter().cloned());
        Monomial::new(v)
    }
}

/// A polynomial: merged terms, no zero coefficients.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct NbaPoly {
    terms: BTreeMap<Monomial, Q>,
}

impl NbaPoly {
    pub fn zero() -> Self {
        NbaPoly::default()
    }

    pub fn constant(c: Q) -> Self {
        let mut p = NbaPoly::default();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn one() -> Self {
        NbaPoly::constant(Q::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Q)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        let cur = self.terms.entry(m).or_insert_with(Q::zero);
        *cur += c;
        if cur.is_zero() {
            let key: Vec<_> = self
                .terms
                .iter()
                .filter(|(_, v)| v.is_zero())
                .map(|(k, _)| k.clone())
                .collect();
            for k in key {
                self.terms.remove(&k);
            }
        }
    }

    /// Monomial with a single atom, folding in the canonicalization result.
    pub fn from_canon(c: Canon) -> NbaPoly {
        match c {
            Canon::Zero => NbaPoly::zero(),
            Canon::One => NbaPoly::one(),
            Canon::Atom(atom, sign) => {
                let mut p = NbaPoly::default();
                p.add_term(Monomial::new(vec![atom]), Q::from(BigInt::from(sign)));
                p
            }
        }
    }

    pub fn inner(a: VecSym, b: VecSym, syms: &Symbols) -> NbaPoly {
        NbaPoly::from_canon(canon_inner(a, b, syms))
    }

    pub fn bracket(
        kind: BracketKind,
        seq: &[VecSym],
        syms: &Symbols,
    ) -> Result<NbaPoly, AtomError> {
        Ok(NbaPoly::from_canon(canonicalize(kind, seq, syms)?))
    }

    pub fn add(&self, rhs: &NbaPoly) -> NbaPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> NbaPoly {
        let mut out = NbaPoly::default();
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), -c.clone());
        }
        out
    }

    pub fn sub(&self, rhs: &NbaPoly) -> NbaPoly {
        self.add(&rhs.neg())
    }

    pub fn scale(&self, s: &Q) -> NbaPoly {
        if s.is_zero() {
            return NbaPoly::zero();
        }
        let mut out = NbaPoly::default();
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, rhs: &NbaPoly) -> NbaPoly {
        let mut out = NbaPoly::default();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    /// Exact evaluation under a full symbol assignment.
    pub fn evaluate(&self, assign: &BTreeMap<VecSym, Multivector>) -> Q {
        let mut total = Q::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for atom in &m.0 {
                v *= eval_atom(atom, assign);
            }
            total += v;
        }
        total
    }

    /// Apply a symbol substitution, re-canonicalizing every atom.
    /// Returns an error only if a square bracket of odd length would arise
    /// (impossible for permutations).
    pub fn map_symbols(
        &self,
        f: &dyn Fn(VecSym) -> VecSym,
        syms: &Symbols,
    ) -> Result<NbaPoly, AtomError> {
        let mut out = NbaPoly::zero();
        for (m, c) in &self.terms {
            let mut term = NbaPoly::constant(c.clone());
            for atom in &m.0 {
                let p = match atom {
                    Atom::Inner(a, b) => NbaPoly::inner(f(*a), f(*b), syms),
                    Atom::Bracket(b) => {
                        let seq: Vec<VecSym> = b.seq.iter().map(|s| f(*s)).collect();
                        NbaPoly::bracket(b.kind, &seq, syms)?
                    }
                };
                term = term.mul(&p);
            }
            out = out.add(&term);
        }
        Ok(out)
    }

    /// Render in the trace format, terms in canonical order.
    pub fn render(&self, syms: &Symbols) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let mag = c.abs();
            if i == 0 {
                if c.is_negative() {
                    out.push('-');
                }
            } else if c.is_negative() {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            let mut pieces: Vec<String> = Vec::new();
            if !mag.is_one() || m.0.is_empty() {
                pieces.push(mag.to_string());
            }
            for atom in &m.0 {
                pieces.push(render_atom(atom, syms));
            }
            out.push_str(&pieces.join(" "));
        }
        out
    }
}

fn q_gcd(a: &Q, b: &Q) -> Q {
    // gcd over rationals: gcd of numerators over lcm of denominators.
    let num = a.numer().gcd(b.numer());
    let den = a.denom().lcm(b.denom());
    Q::new(num, den)
}

/// One extracted factor, with the step at which it was removed.
#[derive(Clone, Debug)]
pub struct LedgerEntry {
    pub factor: NbaPoly,
    pub step: usize,
    pub note: String,
}

/// The ordered record of scalar factors removed during a derivation. The
/// value of the original expression is the product of all entries times the
/// residual.
#[derive(Clone, Debug, Default)]
pub struct FactorLedger {
    pub entries: Vec<LedgerEntry>,
}

impl FactorLedger {
    pub fn push(&mut self, factor: NbaPoly, step: usize, note: &str) {
        self.entries.push(LedgerEntry {
            factor,
            step,
            note: note.to_string(),
        });
    }

    /// Exact product of all entries at an assignment.
    pub fn evaluate(&self, assign: &BTreeMap<VecSym, Multivector>) -> Q {
        let mut v = Q::one();
        for entry in &self.entries {
            v *= entry.factor.evaluate(assign);
        }
        v
    }

    pub fn render(&self, syms: &Symbols) -> String {
        self.entries
            .iter()
            .map(|entry| entry.factor.render(syms))
            .collect::<Vec<_>>()
            .join(" * ")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PolyError {
    #[error("cannot extract factors from the zero polynomial")]
    ZeroPolynomial,
}

/// Remove rational and atom-level common factors from `p`, recording them in
/// the ledger; returns the cofactor. For a single-term polynomial the single
/// longest bracket atom is retained as the cofactor and everything else is
/// extracted, mirroring how derivations keep the longest chain as the
/// running expression.
pub fn extract_common_factor(
    p: &NbaPoly,
    ledger: &mut FactorLedger,
    step: usize,
    note: &str,
) -> Result<NbaPoly, PolyError> {
    if p.is_zero() {
        return Err(PolyError::ZeroPolynomial);
    }
    if p.term_count() == 1 {
        let (m, c) = p.terms.iter().next().unwrap();
        // Retain the longest bracket atom (ties: the later one in atom
        // order); extract the coefficient and all other atoms.
        let keep = m
            .0
            .iter()
            .enumerate()
            .filter_map(|(i, a)| match a {
                Atom::Bracket(b) => Some((b.seq.len(), i)),
                Atom::Inner(..) => None,
            })
            .max()
            .map(|(_, i)| i);
        let Some(keep) = keep else {
            // No bracket atom: nothing sensible to retain; leave unchanged.
            return Ok(p.clone());
        };
        let extracted_atoms: Vec<Atom> = m
            .0
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != keep)
            .map(|(_, a)| a.clone())
            .collect();
        if extracted_atoms.is_empty() && c.is_one() {
            return Ok(p.clone());
        }
        let mut factor = NbaPoly::default();
        factor.add_term(Monomial::new(extracted_atoms), c.clone());
        ledger.push(factor, step, note);
        let mut cofactor = NbaPoly::default();
        cofactor.add_term(Monomial::new(vec![m.0[keep].clone()]), Q::one());
        return Ok(cofactor);
    }
    // Rational content, signed so the cofactor's first term is positive.
    let mut content = Q::zero();
    for (_, c) in p.terms.iter() {
        content = q_gcd(&content, c);
    }
    if p.terms.values().next().unwrap().is_negative() {
        content = -content;
    }
    // Common atom multiset: intersect across terms.
    let mut common: Vec<Atom> = p.terms.keys().next().unwrap().0.clone();
    for (m, _) in p.terms.iter().skip(1) {
        let mut remaining = m.0.clone();
        common.retain(|a| {
            if let Some(pos) = remaining.iter().position(|b| b == a) {
                remaining.remove(pos);
                true
            } else {
                false
            }
        });
    }
    if content.is_one() && common.is_empty() {
        return Ok(p.clone());
    }
    let mut factor = NbaPoly::default();
    factor.add_term(Monomial::new(common.clone()), content.clone());
    ledger.push(factor, step, note);
    let mut cofactor = NbaPoly::default();
    for (m, c) in p.terms.iter() {
        let mut atoms = m.0.clone();
        for a in &common {
            let pos = atoms.iter().position(|b| b == a).unwrap();
            atoms.remove(pos);
        }
        cofactor.add_term(Monomial::new(atoms), c / &content);
    }
    Ok(cofactor)
}
