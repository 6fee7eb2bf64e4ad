//! Symbol table for the vectors appearing in a configuration: named null
//! points, the point at infinity `e`, and composite vectors produced by
//! constructors (wedge duals, reduced meets, nullifications).
//!
//! Symbols are interned once per configuration; the interning order (with `e`
//! always first) is the total symbol order used for canonical forms, so
//! derivations and traces are reproducible.

use serde::{Deserialize, Serialize};

/// Handle to an interned symbol. Ordering is the symbol order: `e` first,
/// then declaration order.
#[derive(
    Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize,
)]
pub struct VecSym(pub u32);

/// Definition of a symbol: what kind of vector it denotes.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum SymDef {
    /// The point at infinity `e`.
    Infinity,
    /// A named point (free or constructed); always null.
    Point { name: String },
    /// `(a ^ b ^ c)~`: the dual of a 3-blade, a vector in the 2D conformal
    /// model. Not null in general.
    WedgeDual([VecSym; 3]),
    /// `(l0 ^ l1) v_base (r0 ^ r1)`: reduced meet of two wedges modulo the
    /// base vector. Not null in general.
    ReducedMeet {
        left: [VecSym; 2],
        right: [VecSym; 2],
        base: VecSym,
    },
    /// `N_base(inner) = (1/2) inner * base * inner`: nullification of a
    /// vector with respect to a null base. Always null.
    Nullify { inner: VecSym, base: VecSym },
}

/// Interner mapping symbols to definitions. Slot 0 is always `e`.
#[derive(Clone, Debug, Default)]
pub struct Symbols {
    defs: Vec<SymDef>,
}

impl Symbols {
    /// Fresh table containing only `e`.
    pub fn new() -> Self {
        Symbols {
            defs: vec![SymDef::Infinity],
        }
    }

    /// Rebuild a table from a definition list (as serialized in a trace).
    /// `None` unless slot 0 is `e` and every definition only references
    /// earlier slots.
    pub fn from_defs(defs: Vec<SymDef>) -> Option<Self> {
        if defs.first() != Some(&SymDef::Infinity) {
            return None;
        }
        for (i, def) in defs.iter().enumerate() {
            let refs: Vec<VecSym> = match def {
                SymDef::Infinity | SymDef::Point { .. } => Vec::new(),
                SymDef::WedgeDual(t) => t.to_vec(),
                SymDef::ReducedMeet { left, right, base } => {
                    let mut v = left.to_vec();
                    v.extend_from_slice(right);
                    v.push(*base);
                    v
                }
                SymDef::Nullify { inner, base } => vec![*inner, *base],
            };
            if refs.iter().any(|r| r.0 as usize >= i) {
                return None;
            }
        }
        Some(Symbols { defs })
    }

    /// The definition list, in symbol order.
    pub fn defs(&self) -> &[SymDef] {
        &self.defs
    }

    /// The point at infinity.
    pub fn infinity(&self) -> VecSym {
        VecSym(0)
    }

    fn intern(&mut self, def: SymDef) -> VecSym {
        if let Some(i) = self.defs.iter().position(|d| *d == def) {
            return VecSym(i as u32);
        }
        self.defs.push(def);
        VecSym((self.defs.len() - 1) as u32)
    }

    /// Declare a named point. Re-declaring the same name returns the same
    /// handle; callers that must reject redeclaration check `lookup` first.
    pub fn point(&mut self, name: &str) -> VecSym {
        self.intern(SymDef::Point {
            name: name.to_string(),
        })
    }

    pub fn wedge_dual(&mut self, a: VecSym, b: VecSym, c: VecSym) -> VecSym {
        self.intern(SymDef::WedgeDual([a, b, c]))
    }

    pub fn reduced_meet(
        &mut self,
        left: [VecSym; 2],
        right: [VecSym; 2],
        base: VecSym,
    ) -> VecSym {
        self.intern(SymDef::ReducedMeet { left, right, base })
    }

    pub fn nullify(&mut self, inner: VecSym, base: VecSym) -> VecSym {
        self.intern(SymDef::Nullify { inner, base })
    }

    pub fn lookup(&self, name: &str) -> Option<VecSym> {
        if name == "e" {
            return Some(VecSym(0));
        }
        self.defs.iter().position(|d| match d {
            SymDef::Point { name: n } => n == name,
            _ => false,
        })
        .map(|i| VecSym(i as u32))
    }

    pub fn def(&self, s: VecSym) -> &SymDef {
        &self.defs[s.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VecSym, &SymDef)> {
        self.defs
            .iter()
            .enumerate()
            .map(|(i, d)| (VecSym(i as u32), d))
    }

    /// Whether the symbol denotes a null vector.
    pub fn is_null(&self, s: VecSym) -> bool {
        match self.def(s) {
            SymDef::Infinity | SymDef::Point { .. } | SymDef::Nullify { .. } => true,
            SymDef::WedgeDual(_) | SymDef::ReducedMeet { .. } => false,
        }
    }

    /// Display name: `e`, the point name, or a structural description for
    /// composites.
    pub fn name(&self, s: VecSym) -> String {
        match self.def(s) {
            SymDef::Infinity => "e".to_string(),
            SymDef::Point { name } => name.clone(),
            SymDef::WedgeDual([a, b, c]) => {
                format!("({}^{}^{})~", self.name(*a), self.name(*b), self.name(*c))
            }
            SymDef::ReducedMeet { left, right, base } => format!(
                "{{({}^{})v_{}({}^{})}}",
                self.name(left[0]),
                self.name(left[1]),
                self.name(*base),
                self.name(right[0]),
                self.name(right[1])
            ),
            SymDef::Nullify { inner, base } => {
                format!("N_{}({})", self.name(*base), self.name(*inner))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e_is_first_and_null() {
        let syms = Symbols::new();
        assert_eq!(syms.infinity(), VecSym(0));
        assert!(syms.is_null(syms.infinity()));
        assert_eq!(syms.name(syms.infinity()), "e");
        assert_eq!(syms.lookup("e"), Some(VecSym(0)));
    }

    #[test]
    fn declaration_order_is_symbol_order() {
        let mut syms = Symbols::new();
        let a = syms.point("1");
        let b = syms.point("2'");
        assert!(syms.infinity() < a && a < b);
        assert_eq!(syms.lookup("2'"), Some(b));
        assert_eq!(syms.point("1"), a);
    }

    #[test]
    fn composite_nullity() {
        let mut syms = Symbols::new();
        let e = syms.infinity();
        let a = syms.point("1");
        let b = syms.point("2");
        let c = syms.point("3");
        let wd = syms.wedge_dual(a, b, c);
        assert!(!syms.is_null(wd));
        let m = syms.reduced_meet([a, b], [b, c], e);
        assert!(!syms.is_null(m));
        let n = syms.nullify(m, e);
        assert!(syms.is_null(n));
        assert_eq!(syms.name(n), "N_e({(1^2)v_e(2^3)})");
        assert_eq!(syms.name(wd), "(1^2^3)~");
    }
}
