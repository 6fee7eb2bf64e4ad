//! The derivation engine: breadth-ranked elimination, expansion and
//! factorization over scalar-wrapped product chains.
//!
//! A derivation keeps the conclusion as a sum of coefficient-weighted chains
//! plus an atomized polynomial, together with a ledger of extracted scalar
//! factors. Rules are applied by a fixed priority: milestone factor
//! extraction, null duality, adjacent meet-pair collapses, globally ranked
//! lone-meet expansion, dual-pair cancellation, wedge expansion, null
//! contraction, and atomization. Every committed step is verified exactly on
//! random rational samples: the ledger product times the current state must
//! reproduce the conclusion value.

use crate::atom::{canonicalize, eval_atom, render_atom, Atom, BracketAtom, BracketKind, Canon};
use crate::cga::{q, qi, Multivector, Q};
use crate::chain::{Chain, Item, ScalarWrap};
use crate::construct::{
    random_instance, resolve_composites, ConcludeMode, Configuration, ConstructError, Constructor,
};
use crate::poly::{extract_common_factor, FactorLedger, Monomial, NbaPoly};
use crate::rules::expand::{null_expand, null_swap, quartet_expand, wedge_expand};
use crate::rules::factor::{clifford_factor, gp_contract, inner_bracket_contract};
use crate::rules::meet::{double_line, dual_pair_cancel, expand_meet_item, null_duality, Split};
use crate::rules::{
    eval_terms, rotate_to, wrap_is_zero, wrap_to_poly, WrapTerm, RULE_CLIFFORD_FACTOR,
    RULE_DOUBLE_LINE, RULE_GP_CONTRACT, RULE_IB_CONTRACT, RULE_MEET_EXPAND_L, RULE_MEET_EXPAND_R,
    RULE_NULL_DUALITY, RULE_WEDGE_EXPAND,
};
use crate::sym::{SymDef, Symbols, VecSym};
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Strategy-level rule identifiers (the locus-level rules keep the
/// identifiers exported by [`crate::rules`]).
pub const RULE_REARRANGE: &str = "rearrange";
pub const RULE_ELIMINATE: &str = "eliminate";
pub const RULE_EXTRACT: &str = "extract";
pub const RULE_REDUCE: &str = "reduce";
pub const RULE_ATOMIZE: &str = "atomize";
pub const RULE_MEET_PAIR: &str = "meet-pair";
pub const RULE_MEET_PAIR_SPLIT: &str = "meet-pair-split";
pub const RULE_DUAL_PAIR: &str = "dual-pair-cancel";
pub const RULE_ELIMINATE_ATOM: &str = "eliminate-atom";

/// Default seed for sampling; fixed so traces are reproducible.
pub const DEFAULT_SEED: u64 = 0x5eed_ba5e;
/// Default number of verification samples per proof.
pub const DEFAULT_SAMPLES: usize = 3;

const CHAIN_STEP_LIMIT: usize = 600;
const POLY_STEP_LIMIT: usize = 200;
const SAMPLE_TRIES: usize = 2000;

/// The result of a derivation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// The conclusion holds: it vanishes, or carries the removed-hypothesis
    /// bracket as a factor (the rest living in the ledger).
    Proved,
    /// Fully reduced but not resolved: conclusion = ledger * residual.
    ReducedTo(NbaPoly),
    /// Some chains could not be processed; the polynomial is the atomized
    /// part only.
    Stuck(NbaPoly),
}

/// One committed derivation step, with the full state after it.
#[derive(Clone, Debug)]
pub struct ProofStep {
    pub index: usize,
    pub rule: &'static str,
    pub locus: usize,
    pub before_terms: usize,
    pub after_terms: usize,
    pub note: String,
    /// Chain terms after the step.
    pub terms: Vec<WrapTerm>,
    /// Atomized polynomial after the step.
    pub done: NbaPoly,
    /// Ledger length after the step.
    pub ledger_len: usize,
}

/// A finished derivation: steps, extracted factors, residual, and the grown
/// symbol table (the configuration's table plus any interned meets).
#[derive(Clone, Debug)]
pub struct ProofTrace {
    pub steps: Vec<ProofStep>,
    pub outcome: Outcome,
    pub ledger: FactorLedger,
    pub residual: NbaPoly,
    /// Maximum number of terms (chains plus atomized monomials) over the
    /// whole derivation, the initial state included.
    pub max_terms: usize,
    pub syms: Symbols,
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("sampling failed: {0}")]
    Sample(#[from] ConstructError),
    #[error("step {step} failed exact verification on sample {sample}")]
    Verification { step: usize, sample: usize },
    #[error("internal: {0}")]
    Internal(String),
}

/// Mutable derivation state: the sum of weighted chains still being worked
/// on, the atomized part, the factor ledger, and the recorded steps.
#[derive(Default)]
struct ChainState {
    terms: Vec<WrapTerm>,
    done: NbaPoly,
    ledger: FactorLedger,
    steps: Vec<ProofStep>,
    max_terms: usize,
}

struct Derivation<'a> {
    cfg: &'a Configuration,
    /// Grown copy of the configuration's symbol table (null duality interns
    /// reduced meets).
    syms: Symbols,
    /// Exact random instances, extended to every interned symbol.
    samples: Vec<BTreeMap<VecSym, Multivector>>,
    /// Constructed name -> (inner, base) of its nullification body.
    name_parts: BTreeMap<VecSym, (VecSym, VecSym)>,
    /// Bracket atoms whose elimination already failed (do not retry).
    failed_atoms: BTreeSet<BracketAtom>,
}

/// Run the derivation for a configuration, verifying every step exactly on
/// `n_samples` random rational instances drawn from `seed`.
pub fn prove(cfg: &Configuration, n_samples: usize, seed: u64) -> Result<ProofTrace, EngineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    for _ in 0..n_samples.max(1) {
        samples.push(random_instance(cfg, &mut rng, SAMPLE_TRIES)?);
    }
    let mut name_parts = BTreeMap::new();
    for c in &cfg.constructed {
        match cfg.syms.def(c.body) {
            SymDef::Nullify { inner, base } => {
                name_parts.insert(c.name, (*inner, *base));
            }
            _ => {
                return Err(EngineError::Internal(
                    "constructed body is not a nullification".into(),
                ))
            }
        }
    }
    let mut der = Derivation {
        cfg,
        syms: cfg.syms.clone(),
        samples,
        name_parts,
        failed_atoms: BTreeSet::new(),
    };

    let conclusion = ScalarWrap {
        kind: cfg.conclusion.kind,
        chain: Chain::of_vecs(&cfg.conclusion.seq),
    };
    let targets: Vec<Q> = der.samples.iter().map(|s| conclusion.eval(s)).collect();
    let mut st = ChainState {
        terms: vec![(NbaPoly::one(), conclusion)],
        max_terms: 1,
        ..Default::default()
    };

    // Rearrange the conclusion so constructed points neighbor the points
    // they were built from.
    let (wrap, sign, note) = rearrange_conclusion(cfg);
    st.terms = vec![(NbaPoly::constant(qi(sign)), wrap)];
    der.finish_step(&mut st, &targets, true, RULE_REARRANGE, 0, 1, note)?;

    der.eliminate_names(&mut st, &targets)?;
    der.chain_loop(&mut st, &targets, true)?;

    if !st.terms.is_empty() {
        let residual = st.done.clone();
        return Ok(ProofTrace {
            steps: st.steps,
            outcome: Outcome::Stuck(residual.clone()),
            ledger: st.ledger,
            residual,
            max_terms: st.max_terms,
            syms: der.syms,
        });
    }

    der.poly_phase(&mut st, &targets)?;

    let (outcome, residual) = match &cfg.conclusion.mode {
        ConcludeMode::Zero => {
            if st.done.is_zero() {
                (Outcome::Proved, NbaPoly::zero())
            } else {
                (Outcome::ReducedTo(st.done.clone()), st.done.clone())
            }
        }
        ConcludeMode::FactorOf(seq) => {
            let factor = NbaPoly::bracket(BracketKind::Square, seq, &der.syms)
                .map_err(|e| EngineError::Internal(e.to_string()))?;
            match proportion(&st.done, &factor) {
                Some(mu) => {
                    if !mu.is_one() {
                        st.ledger.push(
                            NbaPoly::constant(mu),
                            st.steps.len(),
                            "residual orientation",
                        );
                    }
                    (Outcome::Proved, factor)
                }
                None => (Outcome::ReducedTo(st.done.clone()), st.done.clone()),
            }
        }
    };
    Ok(ProofTrace {
        steps: st.steps,
        outcome,
        ledger: st.ledger,
        residual,
        max_terms: st.max_terms,
        syms: der.syms,
    })
}

// ---------------------------------------------------------------------------
// Chain helpers.

fn vec_at(w: &ScalarWrap, i: usize) -> Option<VecSym> {
    let n = w.chain.len();
    if n == 0 {
        return None;
    }
    match w.chain.0[i % n] {
        Item::Vec(s) => Some(s),
        _ => None,
    }
}

fn is_plain(syms: &Symbols, s: VecSym) -> bool {
    matches!(syms.def(s), SymDef::Infinity | SymDef::Point { .. })
}

fn chain_plain(w: &ScalarWrap, syms: &Symbols) -> bool {
    w.chain
        .0
        .iter()
        .all(|it| matches!(it, Item::Vec(s) if is_plain(syms, *s)))
}

/// Rotation with the lexicographically least item sequence;
/// `value(w) = sign * value(canonical)`.
fn canonical_rotation(w: &ScalarWrap) -> (ScalarWrap, i32) {
    let n = w.chain.len();
    if n == 0 {
        return (w.clone(), 1);
    }
    let mut best: Option<(ScalarWrap, i32)> = None;
    for r in 0..n {
        let (rot, s) = rotate_to(w, r);
        if best.as_ref().map(|(b, _)| rot.chain < b.chain).unwrap_or(true) {
            best = Some((rot, s));
        }
    }
    best.unwrap()
}

/// First position of a directly contractible three-pattern `a x a` with `a`
/// null and `x` a plain point (composite middles are left to the meet and
/// dual rules).
fn find_three(w: &ScalarWrap, syms: &Symbols) -> Option<usize> {
    let n = w.chain.len();
    if n < 4 {
        return None;
    }
    (0..n).find(|&i| {
        let Some(a) = vec_at(w, i) else { return false };
        syms.is_null(a)
            && vec_at(w, i + 2) == Some(a)
            && vec_at(w, i + 1).map(|x| is_plain(syms, x)).unwrap_or(false)
    })
}

fn find_quartet(w: &ScalarWrap, syms: &Symbols) -> Option<usize> {
    let n = w.chain.len();
    if n < 8 {
        return None;
    }
    (0..n).find(|&i| {
        let Some(a) = vec_at(w, i) else { return false };
        syms.is_null(a)
            && vec_at(w, i + 4) == Some(a)
            && (1..4).all(|k| vec_at(w, i + k).is_some())
    })
}

/// Exhaustive null contraction of a single weighted chain: structural zeros
/// are dropped, direct three-patterns contract, a null-symmetry swap is
/// taken when it creates one, and long all-plain chains fall back to the
/// quartet expansion. Returns the equivalent (possibly empty) sum.
pub fn reduce_full(term: WrapTerm, syms: &Symbols) -> Vec<WrapTerm> {
    let (mut coeff, mut wrap) = term;
    loop {
        if coeff.is_zero() || wrap_is_zero(&wrap, syms) {
            return Vec::new();
        }
        if let Some(i) = find_three(&wrap, syms) {
            let mut parts = null_expand(&wrap, i, syms).expect("three-pattern");
            debug_assert_eq!(parts.len(), 1);
            let (c, w2) = parts.remove(0);
            coeff = coeff.mul(&c);
            wrap = w2;
            continue;
        }
        // One null-symmetry swap that creates a direct three-pattern.
        let n = wrap.chain.len();
        let mut swapped = None;
        for i in 0..n {
            if let Some((w2, s)) = null_swap(&wrap, i, syms) {
                if find_three(&w2, syms).is_some() {
                    swapped = Some((w2, s));
                    break;
                }
            }
        }
        if let Some((w2, s)) = swapped {
            coeff = coeff.scale(&qi(s as i64));
            wrap = w2;
            continue;
        }
        if chain_plain(&wrap, syms) && n >= 8 {
            if let Some(i) = find_quartet(&wrap, syms) {
                let parts = quartet_expand(&wrap, i, syms).expect("quartet");
                let mut out = Vec::new();
                for (c, w2) in parts {
                    out.extend(reduce_full((coeff.mul(&c), w2), syms));
                }
                return out;
            }
            let mut swapped = None;
            for i in 0..n {
                if let Some((w2, s)) = null_swap(&wrap, i, syms) {
                    if find_quartet(&w2, syms).is_some() {
                        swapped = Some((w2, s));
                        break;
                    }
                }
            }
            if let Some((w2, s)) = swapped {
                coeff = coeff.scale(&qi(s as i64));
                wrap = w2;
                continue;
            }
        }
        return vec![(coeff, wrap)];
    }
}

/// `p = mu * f` for a single rational `mu`, if such exists.
fn proportion(p: &NbaPoly, f: &NbaPoly) -> Option<Q> {
    if f.is_zero() || p.term_count() != f.term_count() {
        return None;
    }
    let (m0, c0) = f.terms().next()?;
    let pc = p
        .terms()
        .find(|(m, _)| *m == m0)
        .map(|(_, c)| c.clone())
        .unwrap_or_else(Q::zero);
    if pc.is_zero() {
        return None;
    }
    let mu = pc / c0.clone();
    if &f.scale(&mu) == p {
        Some(mu)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Conclusion rearrangement.

fn perm_parity(p: &[usize]) -> i64 {
    let mut inv = 0;
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            if b == a {
                continue;
            }
            for c in 0..4 {
                if c == a || c == b {
                    continue;
                }
                let d = 6 - a - b - c;
                out.push([a, b, c, d]);
            }
        }
    }
    out
}

/// The set of points a constructed point should neighbor: the arguments of
/// its constructor's wedges (the meet base excluded).
fn relevant_neighbors(cfg: &Configuration) -> BTreeMap<VecSym, BTreeSet<VecSym>> {
    let mut out = BTreeMap::new();
    for c in &cfg.constructed {
        let set: BTreeSet<VecSym> = match &c.ctor {
            Constructor::Center(t) => t.iter().copied().collect(),
            Constructor::CircleMeet { first, second, .. } => {
                first.iter().chain(second.iter()).copied().collect()
            }
            Constructor::LineMeet { first, second } => {
                first.iter().chain(second.iter()).copied().collect()
            }
        };
        out.insert(c.name, set);
    }
    out
}

/// Rearrange the conclusion bracket so constructed points sit next to the
/// points they were built from: length-4 square brackets range over all
/// permutations (with determinant parity), everything else over the
/// shift/reversal orbit. The original order is kept when it already attains
/// the maximal neighbor score; otherwise the lexicographically least
/// maximizer is chosen. Returns (wrap, sign, note) with
/// `original = sign * wrap`.
fn rearrange_conclusion(cfg: &Configuration) -> (ScalarWrap, i64, String) {
    let seq = &cfg.conclusion.seq;
    let kind = cfg.conclusion.kind;
    let relevant = relevant_neighbors(cfg);
    let score = |cand: &[VecSym]| -> usize {
        let n = cand.len();
        if n < 2 {
            return 0;
        }
        cand.iter()
            .enumerate()
            .filter_map(|(p, s)| {
                relevant.get(s).map(|set| {
                    let l = cand[(p + n - 1) % n];
                    let r = cand[(p + 1) % n];
                    usize::from(set.contains(&l)) + usize::from(set.contains(&r))
                })
            })
            .sum()
    };

    let mut cands: Vec<(Vec<VecSym>, i64)> = Vec::new();
    if seq.len() == 4 && kind == BracketKind::Square {
        for p in permutations4() {
            let cand: Vec<VecSym> = p.iter().map(|&k| seq[k]).collect();
            cands.push((cand, perm_parity(&p)));
        }
    } else {
        let w0 = ScalarWrap {
            kind,
            chain: Chain::of_vecs(seq),
        };
        let n = seq.len().max(1);
        for r in 0..n {
            let (rot, s) = rotate_to(&w0, r);
            cands.push((rot.chain.as_vec_syms().unwrap(), s as i64));
        }
        let (rev, rs) = w0.reverse();
        for r in 0..n {
            let (rot, s) = rotate_to(&rev, r);
            cands.push((rot.chain.as_vec_syms().unwrap(), (rs * s) as i64));
        }
    }

    let best_score = cands.iter().map(|(c, _)| score(c)).max().unwrap_or(0);
    if score(seq) == best_score {
        return (
            ScalarWrap {
                kind,
                chain: Chain::of_vecs(seq),
            },
            1,
            "kept conclusion order".into(),
        );
    }
    let (cand, sign) = cands
        .into_iter()
        .filter(|(c, _)| score(c) == best_score)
        .min_by_key(|(c, _)| c.iter().map(|s| s.0).collect::<Vec<u32>>())
        .unwrap();
    let note = format!("neighbor score {best_score}");
    (
        ScalarWrap {
            kind,
            chain: Chain::of_vecs(&cand),
        },
        sign,
        note,
    )
}

// ---------------------------------------------------------------------------
// Lone-meet split ranking.

/// One candidate expansion of a reduced-meet item, ranked by the distance to
/// the nearest plain neighbor belonging to the wedge the split separates.
pub struct ExpansionPlan {
    pub split: Split,
    pub first_relevant: usize,
    pub evidence: String,
}

impl<'a> Derivation<'a> {
    fn meet_sym_at(&self, w: &ScalarWrap, i: usize) -> Option<(VecSym, bool)> {
        match w.chain.0.get(i)? {
            Item::Vec(s) if matches!(self.syms.def(*s), SymDef::ReducedMeet { .. }) => {
                Some((*s, false))
            }
            Item::DualVec(s) if matches!(self.syms.def(*s), SymDef::ReducedMeet { .. }) => {
                Some((*s, true))
            }
            _ => None,
        }
    }

    fn meet_def(&self, s: VecSym) -> Option<([VecSym; 2], [VecSym; 2], VecSym)> {
        match self.syms.def(s) {
            SymDef::ReducedMeet { left, right, base } => Some((*left, *right, *base)),
            _ => None,
        }
    }

    fn plain_vec_at(&self, w: &ScalarWrap, i: usize) -> Option<VecSym> {
        let s = vec_at(w, i)?;
        is_plain(&self.syms, s).then_some(s)
    }

    fn rank_splits(&self, w: &ScalarWrap, i: usize) -> Vec<ExpansionPlan> {
        let n = w.chain.len();
        let (sym, dualized) = self.meet_sym_at(w, i).expect("meet item");
        let (left, right, _) = self.meet_def(sym).expect("meet def");
        let splits: &[Split] = if dualized {
            &[Split::Left]
        } else {
            &[Split::Left, Split::Right]
        };
        let mut plans: Vec<ExpansionPlan> = splits
            .iter()
            .map(|&split| {
                let sep = match split {
                    Split::Left => left,
                    Split::Right => right,
                };
                let mut first_relevant = usize::MAX;
                let mut witness = None;
                for d in 1..=(n / 2) {
                    let mut positions = vec![(i + n - d) % n, (i + d) % n];
                    positions.dedup();
                    for pos in positions {
                        if pos == i {
                            continue;
                        }
                        if let Some(s) = self.plain_vec_at(w, pos) {
                            if sep.contains(&s) && first_relevant == usize::MAX {
                                first_relevant = d;
                                witness = Some(s);
                            }
                        }
                    }
                }
                let evidence = match witness {
                    Some(s) => format!(
                        "{} wedge: {} at distance {}",
                        match split {
                            Split::Left => "left",
                            Split::Right => "right",
                        },
                        self.syms.name(s),
                        first_relevant
                    ),
                    None => "no relevant neighbor".to_string(),
                };
                ExpansionPlan {
                    split,
                    first_relevant,
                    evidence,
                }
            })
            .collect();
        plans.sort_by_key(|p| p.first_relevant);
        plans
    }

    // -----------------------------------------------------------------------
    // Step bookkeeping.

    fn verify(&self, st: &ChainState, targets: &[Q]) -> Result<(), EngineError> {
        for (k, sample) in self.samples.iter().enumerate() {
            let value = st.ledger.evaluate(sample)
                * (eval_terms(&st.terms, sample) + st.done.evaluate(sample));
            if value != targets[k] {
                return Err(EngineError::Verification {
                    step: st.steps.len(),
                    sample: k,
                });
            }
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn finish_step(
        &self,
        st: &mut ChainState,
        targets: &[Q],
        main: bool,
        rule: &'static str,
        locus: usize,
        before_terms: usize,
        note: String,
    ) -> Result<(), EngineError> {
        st.terms.retain(|(c, _)| !c.is_zero());
        self.verify(st, targets)?;
        st.max_terms = st.max_terms.max(st.terms.len() + st.done.term_count());
        if main {
            st.steps.push(ProofStep {
                index: st.steps.len(),
                rule,
                locus,
                before_terms,
                after_terms: st.terms.len(),
                note,
                terms: st.terms.clone(),
                done: st.done.clone(),
                ledger_len: st.ledger.entries.len(),
            });
        }
        Ok(())
    }

    fn extend_samples(&mut self) {
        for sample in &mut self.samples {
            *sample = resolve_composites(&self.syms, sample);
        }
    }

    // -----------------------------------------------------------------------
    // Fixed steps: constructed-point elimination.

    fn eliminate_names(&mut self, st: &mut ChainState, targets: &[Q]) -> Result<(), EngineError> {
        let order: Vec<VecSym> = self.cfg.constructed.iter().map(|c| c.name).collect();
        for name in order {
            let (inner, base) = self.name_parts[&name];
            let (coeff, wrap) = st.terms[0].clone();
            let occurrences = wrap
                .chain
                .0
                .iter()
                .filter(|it| **it == Item::Vec(name))
                .count();
            if occurrences == 0 {
                continue;
            }
            let mut items = Vec::with_capacity(wrap.chain.len() + 2 * occurrences);
            for it in &wrap.chain.0 {
                if *it == Item::Vec(name) {
                    items.extend([Item::Vec(inner), Item::Vec(base), Item::Vec(inner)]);
                } else {
                    items.push(*it);
                }
            }
            let mut c = coeff;
            for _ in 0..occurrences {
                c = c.scale(&q(1, 2));
            }
            st.terms[0] = (
                c,
                ScalarWrap {
                    kind: wrap.kind,
                    chain: Chain(items),
                },
            );
            let note = format!(
                "{} = (1/2) {} {} {}",
                self.syms.name(name),
                self.syms.name(inner),
                self.syms.name(base),
                self.syms.name(inner)
            );
            self.finish_step(st, targets, true, RULE_ELIMINATE, 0, 1, note)?;
        }
        Ok(())
    }

    // -----------------------------------------------------------------------
    // The priority loop.

    fn chain_loop(
        &mut self,
        st: &mut ChainState,
        targets: &[Q],
        main: bool,
    ) -> Result<(), EngineError> {
        let mut guard = 0;
        loop {
            if st.terms.is_empty() {
                return Ok(());
            }
            guard += 1;
            if guard > CHAIN_STEP_LIMIT {
                return Err(EngineError::Internal("chain step limit exceeded".into()));
            }
            if !self.step_once(st, targets, main)? {
                return Ok(());
            }
        }
    }

    fn step_once(
        &mut self,
        st: &mut ChainState,
        targets: &[Q],
        main: bool,
    ) -> Result<bool, EngineError> {
        if main && self.try_milestone(st, targets)? {
            return Ok(true);
        }
        if self.try_null_duality(st, targets, main)? {
            return Ok(true);
        }
        if self.try_meet_pairs(st, targets, main)? {
            return Ok(true);
        }
        if self.try_lone_meet(st, targets, main)? {
            return Ok(true);
        }
        if self.try_dual_pair(st, targets, main)? {
            return Ok(true);
        }
        if self.try_wedge(st, targets, main)? {
            return Ok(true);
        }
        if self.try_reduce(st, targets, main)? {
            return Ok(true);
        }
        if self.try_atomize(st, targets, main)? {
            return Ok(true);
        }
        Ok(false)
    }

    /// Milestone: a single composite-free chain with a nontrivial
    /// coefficient moves its coefficient into the ledger.
    fn try_milestone(&self, st: &mut ChainState, targets: &[Q]) -> Result<bool, EngineError> {
        if st.terms.len() != 1 {
            return Ok(false);
        }
        let (coeff, wrap) = &st.terms[0];
        if !chain_plain(wrap, &self.syms) || *coeff == NbaPoly::one() {
            return Ok(false);
        }
        let factor = coeff.clone();
        st.terms[0].0 = NbaPoly::one();
        st.ledger.push(factor, st.steps.len(), "retained factor");
        self.finish_step(
            st,
            targets,
            true,
            RULE_EXTRACT,
            0,
            1,
            "retained scalar factor".into(),
        )?;
        Ok(true)
    }

    fn wd_triple_at(&self, w: &ScalarWrap, i: usize) -> Option<[VecSym; 3]> {
        let s = vec_at(w, i)?;
        match self.syms.def(s) {
            SymDef::WedgeDual(t) => Some(*t),
            _ => None,
        }
    }

    fn try_null_duality(
        &mut self,
        st: &mut ChainState,
        targets: &[Q],
        main: bool,
    ) -> Result<bool, EngineError> {
        for ti in 0..st.terms.len() {
            let (coeff, w) = st.terms[ti].clone();
            let n = w.chain.len();
            if n < 4 {
                continue;
            }
            for i in 0..n {
                let Some(p) = vec_at(&w, i) else { continue };
                if !self.syms.is_null(p) || vec_at(&w, i + 3) != Some(p) {
                    continue;
                }
                let Some(t1) = self.wd_triple_at(&w, i + 1) else {
                    continue;
                };
                let Some(t2) = self.wd_triple_at(&w, i + 2) else {
                    continue;
                };
                let shared: Vec<VecSym> =
                    t1.iter().copied().filter(|s| t2.contains(s)).collect();
                if shared.is_empty() {
                    continue;
                }
                // The base is the shared vector occurring in the most
                // wedge-dual triples of the whole chain (ties: least id).
                let count = |b: VecSym| {
                    (0..n)
                        .filter_map(|k| self.wd_triple_at(&w, k))
                        .filter(|t| t.contains(&b))
                        .count()
                };
                let base = shared
                    .into_iter()
                    .max_by_key(|b| (count(*b), std::cmp::Reverse(b.0)))
                    .unwrap();
                let Some((w2, sign)) = null_duality(&w, i, base, &mut self.syms) else {
                    continue;
                };
                self.extend_samples();
                let before = st.terms.len();
                st.terms[ti] = (coeff.scale(&qi(sign as i64)), w2);
                let note = format!("meet through {}", self.syms.name(base));
                self.finish_step(st, targets, main, RULE_NULL_DUALITY, i, before, note)?;
                return Ok(true);
            }
        }
        Ok(false)
    }

    // -----------------------------------------------------------------------
    // Adjacent meet pairs.

    fn try_meet_pairs(
        &mut self,
        st: &mut ChainState,
        targets: &[Q],
        main: bool,
    ) -> Result<bool, EngineError> {
        for ti in 0..st.terms.len() {
            let (coeff, w) = st.terms[ti].clone();
            let n = w.chain.len();
            if n < 6 {
                continue;
            }
            let plain_meet = |i: usize| {
                matches!(self.meet_sym_at(&w, i), Some((_, false)))
            };
            let pairs: Vec<usize> = (0..n)
                .filter(|&i| plain_meet(i) && plain_meet((i + 1) % n))
                .collect();
            if pairs.is_empty() {
                continue;
            }
            for &i in &pairs {
                if let Some(parts) = double_line(&w, i, &self.syms) {
                    let new: Vec<WrapTerm> = parts
                        .into_iter()
                        .map(|(c, w2)| (coeff.mul(&c), w2))
                        .filter(|(c, _)| !c.is_zero())
                        .collect();
                    let before = st.terms.len();
                    st.terms.splice(ti..=ti, new);
                    self.finish_step(
                        st,
                        targets,
                        main,
                        RULE_DOUBLE_LINE,
                        i,
                        before,
                        "meets share a line".into(),
                    )?;
                    return Ok(true);
                }
            }
            // A qualifying pair collapses into a single chain with a shared
            // cofactor. In the main derivation the cofactor is a global
            // ledger factor, which is only sound for a single-term state.
            if !main || st.terms.len() == 1 {
                for &i in &pairs {
                    if let Some((shared, g, note)) = self.try_g_merge(&w, i) {
                        let before = st.terms.len();
                        if main {
                            st.ledger.push(g, st.steps.len(), &note);
                            st.terms[ti] = (coeff.clone(), shared);
                        } else {
                            st.terms[ti] = (coeff.mul(&g), shared);
                        }
                        self.finish_step(st, targets, main, RULE_MEET_PAIR, i, before, note)?;
                        return Ok(true);
                    }
                }
            }
            // Fall back: expand both meets of the first pair simultaneously,
            // taking the split combination with the fewest (then shortest)
            // surviving terms.
            if let Some((survivors, note)) = self.ranked_pair_expand(&coeff, &w, pairs[0]) {
                let before = st.terms.len();
                st.terms.splice(ti..=ti, survivors);
                self.finish_step(
                    st,
                    targets,
                    main,
                    RULE_MEET_PAIR_SPLIT,
                    pairs[0],
                    before,
                    note,
                )?;
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// A meet pair qualifies for collapse when each meet is flanked (on the
    /// outside) by the other's base vector and each meet has a wedge
    /// containing the flank: expanding both by those wedges makes every
    /// survivor reduce to a rotation of one shared chain, and the adjusted
    /// bracket coefficients sum to the pair's cofactor.
    fn try_g_merge(&self, w: &ScalarWrap, i: usize) -> Option<(ScalarWrap, NbaPoly, String)> {
        let n = w.chain.len();
        let j = (i + 1) % n;
        let (mi, _) = self.meet_sym_at(w, i)?;
        let (mj, _) = self.meet_sym_at(w, j)?;
        let (l1, r1, b1) = self.meet_def(mi)?;
        let (l2, r2, b2) = self.meet_def(mj)?;
        let u = self.plain_vec_at(w, (i + n - 1) % n)?;
        let v = self.plain_vec_at(w, (j + 1) % n)?;
        if u != b1 || v != b2 {
            return None;
        }
        let sx = if l1.contains(&v) {
            Split::Left
        } else if r1.contains(&v) {
            Split::Right
        } else {
            return None;
        };
        let sy = if l2.contains(&u) {
            Split::Left
        } else if r2.contains(&u) {
            Split::Right
        } else {
            return None;
        };
        let t1 = expand_meet_item(w, i, sx, &self.syms)?;
        let mut shared: Option<ScalarWrap> = None;
        let mut g = NbaPoly::zero();
        for (c1, w1) in t1 {
            let t2 = expand_meet_item(&w1, j, sy, &self.syms)?;
            for (c2, w2) in t2 {
                let c = c1.mul(&c2);
                if c.is_zero() {
                    continue;
                }
                let reduced = reduce_full((c, w2), &self.syms);
                if reduced.is_empty() {
                    continue;
                }
                if reduced.len() != 1 {
                    return None;
                }
                let (rc, rw) = reduced.into_iter().next().unwrap();
                let (canon, sign) = canonical_rotation(&rw);
                match &shared {
                    None => shared = Some(canon),
                    Some(s) if *s == canon => {}
                    _ => return None,
                }
                g = g.add(&rc.scale(&qi(sign as i64)));
            }
        }
        let shared = shared?;
        if g.is_zero() {
            return None;
        }
        let note = format!(
            "collapsed pair {} {}",
            self.syms.name(mi),
            self.syms.name(mj)
        );
        Some((shared, g, note))
    }

    fn split_name(s: Split) -> &'static str {
        match s {
            Split::Left => "L",
            Split::Right => "R",
        }
    }

    fn ranked_pair_expand(
        &self,
        coeff: &NbaPoly,
        w: &ScalarWrap,
        i: usize,
    ) -> Option<(Vec<WrapTerm>, String)> {
        let n = w.chain.len();
        let j = (i + 1) % n;
        let combos = [
            (Split::Left, Split::Left),
            (Split::Left, Split::Right),
            (Split::Right, Split::Left),
            (Split::Right, Split::Right),
        ];
        let mut best: Option<(usize, (usize, usize), Vec<WrapTerm>)> = None;
        for (ci, (sa, sb)) in combos.iter().enumerate() {
            let Some(t1) = expand_meet_item(w, i, *sa, &self.syms) else {
                continue;
            };
            let mut all = Vec::new();
            let mut legal = true;
            for (c1, w1) in &t1 {
                match expand_meet_item(w1, j, *sb, &self.syms) {
                    None => {
                        legal = false;
                        break;
                    }
                    Some(t2) => {
                        for (c2, w2) in t2 {
                            all.push((c1.mul(&c2), w2));
                        }
                    }
                }
            }
            if !legal {
                continue;
            }
            let mut survivors = Vec::new();
            let mut total = 0usize;
            for (c, w2) in all {
                let cc = coeff.mul(&c);
                if cc.is_zero() {
                    continue;
                }
                let reduced = reduce_full((cc.clone(), w2.clone()), &self.syms);
                if reduced.is_empty() {
                    continue;
                }
                total += reduced.iter().map(|(_, rw)| rw.chain.len()).sum::<usize>();
                survivors.push((cc, w2));
            }
            let score = (survivors.len(), total);
            if best.as_ref().map(|(_, bs, _)| score < *bs).unwrap_or(true) {
                best = Some((ci, score, survivors));
            }
        }
        let (ci, _, survivors) = best?;
        let note = format!(
            "splits {}/{}",
            Self::split_name(combos[ci].0),
            Self::split_name(combos[ci].1)
        );
        Some((survivors, note))
    }

    // -----------------------------------------------------------------------
    // Lone meets: globally ranked expansion.

    fn try_lone_meet(
        &mut self,
        st: &mut ChainState,
        targets: &[Q],
        main: bool,
    ) -> Result<bool, EngineError> {
        type Key = (usize, usize, usize, usize, usize);
        let mut best: Option<(Key, Vec<WrapTerm>, Split, String)> = None;
        for (ti, (coeff, w)) in st.terms.iter().enumerate() {
            for i in 0..w.chain.len() {
                if self.meet_sym_at(w, i).is_none() {
                    continue;
                }
                let plans = self.rank_splits(w, i);
                for (pi, plan) in plans.iter().enumerate() {
                    let Some(parts) = expand_meet_item(w, i, plan.split, &self.syms) else {
                        continue;
                    };
                    let mut survivors = Vec::new();
                    let mut total = 0usize;
                    for (c, w2) in parts {
                        let cc = coeff.mul(&c);
                        if cc.is_zero() {
                            continue;
                        }
                        let reduced = reduce_full((cc.clone(), w2.clone()), &self.syms);
                        if reduced.is_empty() {
                            continue;
                        }
                        total += reduced.iter().map(|(_, rw)| rw.chain.len()).sum::<usize>();
                        survivors.push((cc, w2));
                    }
                    let key = (survivors.len(), total, ti, i, pi);
                    if best.as_ref().map(|(bk, ..)| key < *bk).unwrap_or(true) {
                        best = Some((key, survivors, plan.split, plan.evidence.clone()));
                    }
                }
            }
        }
        let Some((key, survivors, split, note)) = best else {
            return Ok(false);
        };
        let (_, _, ti, locus, _) = key;
        let before = st.terms.len();
        st.terms.splice(ti..=ti, survivors);
        let rule = match split {
            Split::Left => RULE_MEET_EXPAND_L,
            Split::Right => RULE_MEET_EXPAND_R,
        };
        self.finish_step(st, targets, main, rule, locus, before, note)?;
        Ok(true)
    }

    // -----------------------------------------------------------------------
    // Dual pairs and wedges.

    fn undual_able(&self, item: &Item) -> bool {
        match item {
            Item::DualVec(_) => true,
            Item::Vec(s) => matches!(self.syms.def(*s), SymDef::WedgeDual(_)),
            Item::Blade3(_) => false,
        }
    }

    fn try_dual_pair(
        &mut self,
        st: &mut ChainState,
        targets: &[Q],
        main: bool,
    ) -> Result<bool, EngineError> {
        for ti in 0..st.terms.len() {
            let (coeff, w) = st.terms[ti].clone();
            let duals: Vec<usize> = (0..w.chain.len())
                .filter(|&k| self.undual_able(&w.chain.0[k]))
                .collect();
            if duals.len() < 2 {
                continue;
            }
            let (i, j) = (duals[0], duals[1]);
            let Some((w2, sign)) = dual_pair_cancel(&w, i, j, &self.syms) else {
                continue;
            };
            let before = st.terms.len();
            st.terms[ti] = (coeff.scale(&qi(sign as i64)), w2);
            self.finish_step(
                st,
                targets,
                main,
                RULE_DUAL_PAIR,
                i,
                before,
                format!("pair at {i},{j}"),
            )?;
            return Ok(true);
        }
        Ok(false)
    }

    fn try_wedge(
        &mut self,
        st: &mut ChainState,
        targets: &[Q],
        main: bool,
    ) -> Result<bool, EngineError> {
        for ti in 0..st.terms.len() {
            let (coeff, w) = st.terms[ti].clone();
            let Some(k) = w
                .chain
                .0
                .iter()
                .position(|it| matches!(it, Item::Blade3(_)))
            else {
                continue;
            };
            let parts = wedge_expand(&w, k).expect("blade item");
            let new: Vec<WrapTerm> = parts
                .into_iter()
                .map(|(c, w2)| (coeff.mul(&c), w2))
                .filter(|(c, w2)| !c.is_zero() && !wrap_is_zero(w2, &self.syms))
                .collect();
            let before = st.terms.len();
            st.terms.splice(ti..=ti, new);
            self.finish_step(
                st,
                targets,
                main,
                RULE_WEDGE_EXPAND,
                k,
                before,
                "blade to chains".into(),
            )?;
            return Ok(true);
        }
        Ok(false)
    }

    // -----------------------------------------------------------------------
    // Contraction and atomization.

    fn try_reduce(
        &mut self,
        st: &mut ChainState,
        targets: &[Q],
        main: bool,
    ) -> Result<bool, EngineError> {
        let mut changed = false;
        let mut new_terms = Vec::new();
        for t in &st.terms {
            let reduced = reduce_full(t.clone(), &self.syms);
            if reduced.len() != 1 || reduced[0] != *t {
                changed = true;
            }
            new_terms.extend(reduced);
        }
        if !changed {
            return Ok(false);
        }
        let before = st.terms.len();
        st.terms = new_terms;
        self.finish_step(
            st,
            targets,
            main,
            RULE_REDUCE,
            0,
            before,
            "null contraction".into(),
        )?;
        Ok(true)
    }

    fn try_atomize(
        &mut self,
        st: &mut ChainState,
        targets: &[Q],
        main: bool,
    ) -> Result<bool, EngineError> {
        if st.terms.is_empty()
            || !st.terms.iter().all(|(_, w)| chain_plain(w, &self.syms))
        {
            return Ok(false);
        }
        let mut add = NbaPoly::zero();
        for (c, w) in &st.terms {
            let p = wrap_to_poly(w, &self.syms)
                .ok_or_else(|| EngineError::Internal("atomize on non-vector chain".into()))?;
            add = add.add(&c.mul(&p));
        }
        let before = st.terms.len();
        st.done = st.done.add(&add);
        st.terms.clear();
        self.finish_step(
            st,
            targets,
            main,
            RULE_ATOMIZE,
            0,
            before,
            "chains to atoms".into(),
        )?;
        Ok(true)
    }

    // -----------------------------------------------------------------------
    // The polynomial phase.

    fn poly_phase(&mut self, st: &mut ChainState, targets: &[Q]) -> Result<(), EngineError> {
        let mut guard = 0;
        loop {
            guard += 1;
            if guard > POLY_STEP_LIMIT || st.done.is_zero() {
                break;
            }
            // Common-factor extraction.
            {
                let before_entries = st.ledger.entries.len();
                let cof =
                    extract_common_factor(&st.done, &mut st.ledger, st.steps.len(), "common factor")
                        .map_err(|e| EngineError::Internal(e.to_string()))?;
                if st.ledger.entries.len() > before_entries {
                    st.done = cof;
                    self.finish_step(
                        st,
                        targets,
                        true,
                        RULE_EXTRACT,
                        0,
                        0,
                        "common factor".into(),
                    )?;
                    continue;
                }
            }
            // Eliminate constructed points hiding inside bracket atoms.
            if let Some(atom) = self.find_name_atom(&st.done) {
                match self.eliminate_atom(&atom, targets.len()) {
                    Some(rep) => {
                        let a = Atom::Bracket(atom.clone());
                        st.done = substitute_atom(&st.done, &a, &rep);
                        let note = format!(
                            "{} := {}",
                            render_atom(&a, &self.syms),
                            rep.render(&self.syms)
                        );
                        self.finish_step(st, targets, true, RULE_ELIMINATE_ATOM, 0, 0, note)?;
                    }
                    None => {
                        self.failed_atoms.insert(atom);
                    }
                }
                continue;
            }
            // Pairwise Clifford factorization, then the syzygy contractions.
            if st.done.term_count() >= 2 {
                if let Some((new, template)) = clifford_merge_once(&st.done, &self.syms) {
                    st.done = new;
                    self.finish_step(
                        st,
                        targets,
                        true,
                        RULE_CLIFFORD_FACTOR,
                        0,
                        0,
                        template.into(),
                    )?;
                    continue;
                }
            }
            if let Some(new) = gp_contract(&st.done, &self.syms) {
                st.done = new;
                self.finish_step(
                    st,
                    targets,
                    true,
                    RULE_GP_CONTRACT,
                    0,
                    0,
                    "determinant syzygy".into(),
                )?;
                continue;
            }
            if let Some(new) = inner_bracket_contract(&st.done, &self.syms) {
                st.done = new;
                self.finish_step(
                    st,
                    targets,
                    true,
                    RULE_IB_CONTRACT,
                    0,
                    0,
                    "inner-bracket syzygy".into(),
                )?;
                continue;
            }
            break;
        }
        Ok(())
    }

    fn find_name_atom(&self, p: &NbaPoly) -> Option<BracketAtom> {
        for (m, _) in p.terms() {
            for a in &m.0 {
                if let Atom::Bracket(b) = a {
                    if b.seq.iter().any(|s| self.name_parts.contains_key(s))
                        && !self.failed_atoms.contains(b)
                    {
                        return Some(b.clone());
                    }
                }
            }
        }
        None
    }

    /// Rewrite a bracket atom containing constructed points as a polynomial
    /// over simpler atoms: unfold one (or, if that stays multi-term, all)
    /// of its constructed points into its nullification chain and run the
    /// chain pipeline on the result. Verified against the atom's exact
    /// values.
    fn eliminate_atom(&mut self, atom: &BracketAtom, _n_samples: usize) -> Option<NbaPoly> {
        let names: Vec<VecSym> = atom
            .seq
            .iter()
            .copied()
            .filter(|s| self.name_parts.contains_key(s))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if names.is_empty() {
            return None;
        }
        let targets: Vec<Q> = self
            .samples
            .iter()
            .map(|s| eval_atom(&Atom::Bracket(atom.clone()), s))
            .collect();
        let first = self.run_atom_strategy(atom, &names[..1], &targets);
        if let Some(p) = &first {
            if p.term_count() <= 1 && !self.poly_has_names(p) {
                return first;
            }
        }
        let all = if names.len() > 1 {
            self.run_atom_strategy(atom, &names, &targets)
        } else {
            None
        };
        // Prefer replacements free of constructed points (so the elimination
        // terminates in one pass per atom), then fewer terms.
        let quality = |p: &NbaPoly| (self.poly_has_names(p), p.term_count());
        match (first, all) {
            (Some(a), Some(b)) => {
                if quality(&b) < quality(&a) {
                    Some(b)
                } else {
                    Some(a)
                }
            }
            (Some(a), None) => Some(a),
            (None, b) => b,
        }
    }

    fn poly_has_names(&self, p: &NbaPoly) -> bool {
        p.terms().any(|(m, _)| {
            m.0.iter().any(|a| match a {
                Atom::Bracket(b) => b.seq.iter().any(|s| self.name_parts.contains_key(s)),
                Atom::Inner(x, y) => {
                    self.name_parts.contains_key(x) || self.name_parts.contains_key(y)
                }
            })
        })
    }

    fn run_atom_strategy(
        &mut self,
        atom: &BracketAtom,
        subset: &[VecSym],
        targets: &[Q],
    ) -> Option<NbaPoly> {
        let mut coeff = NbaPoly::one();
        let mut items = Vec::new();
        for &s in &atom.seq {
            if subset.contains(&s) {
                let (inner, base) = self.name_parts[&s];
                items.extend([Item::Vec(inner), Item::Vec(base), Item::Vec(inner)]);
                coeff = coeff.scale(&q(1, 2));
            } else {
                items.push(Item::Vec(s));
            }
        }
        let wrap = ScalarWrap {
            kind: atom.kind,
            chain: Chain(items),
        };
        self.sub_derive((coeff, wrap), targets)
    }

    /// Run the chain pipeline on one weighted chain, in subsidiary mode (no
    /// ledger, no milestones; pair cofactors merge into the coefficient).
    /// After atomization, merge remaining terms pairwise where possible.
    fn sub_derive(&mut self, term: WrapTerm, targets: &[Q]) -> Option<NbaPoly> {
        let mut st = ChainState {
            terms: vec![term],
            max_terms: 1,
            ..Default::default()
        };
        self.chain_loop(&mut st, targets, false).ok()?;
        if !st.terms.is_empty() {
            return None;
        }
        let mut done = st.done;
        loop {
            if done.term_count() <= 1 {
                break;
            }
            if let Some((new, _)) = clifford_merge_once(&done, &self.syms) {
                done = new;
                continue;
            }
            if let Some(new) = gp_contract(&done, &self.syms) {
                done = new;
                continue;
            }
            if let Some(new) = inner_bracket_contract(&done, &self.syms) {
                done = new;
                continue;
            }
            break;
        }
        for (k, sample) in self.samples.iter().enumerate() {
            if done.evaluate(sample) != targets[k] {
                return None;
            }
        }
        Some(done)
    }
}

/// Replace every occurrence of an atom (including powers) by a polynomial.
pub fn substitute_atom(p: &NbaPoly, atom: &Atom, rep: &NbaPoly) -> NbaPoly {
    let mut out = NbaPoly::zero();
    for (m, c) in p.terms() {
        let k = m.0.iter().filter(|a| *a == atom).count();
        if k == 0 {
            out.add_term(m.clone(), c.clone());
            continue;
        }
        let rest: Vec<Atom> = m.0.iter().filter(|a| *a != atom).cloned().collect();
        let mut t = NbaPoly::zero();
        t.add_term(Monomial::new(rest), c.clone());
        for _ in 0..k {
            t = t.mul(rep);
        }
        out = out.add(&t);
    }
    out
}

/// Merge one pair of terms via Clifford factorization, if any pair factors
/// and the merge strictly reduces the term count.
pub fn clifford_merge_once(p: &NbaPoly, syms: &Symbols) -> Option<(NbaPoly, &'static str)> {
    let terms: Vec<(Monomial, Q)> = p.terms().map(|(m, c)| (m.clone(), c.clone())).collect();
    for i in 0..terms.len() {
        for j in (i + 1)..terms.len() {
            let mut pair = NbaPoly::zero();
            pair.add_term(terms[i].0.clone(), terms[i].1.clone());
            pair.add_term(terms[j].0.clone(), terms[j].1.clone());
            let Some(f) = clifford_factor(&pair, syms) else {
                continue;
            };
            let Some(wp) = wrap_to_poly(&f.wrap, syms) else {
                continue;
            };
            let new = p.sub(&pair).add(&f.coeff.mul(&wp));
            if new.term_count() < p.term_count() {
                return Some((new, f.template));
            }
        }
    }
    None
}

/// Pseudo-divide a chain by a basis of four vectors at the position holding
/// `v`: substitutes each basis vector for `v` with its cofactor bracket and
/// contracts. Returns `(numerator, basis_atom)` with
/// `value(basis_atom) * value(w) = value(numerator)`.
pub fn pseudodivide(
    w: &ScalarWrap,
    v: VecSym,
    basis: &[VecSym; 4],
    syms: &Symbols,
) -> Option<(NbaPoly, Atom)> {
    let pos = w.chain.0.iter().position(|it| *it == Item::Vec(v))?;
    let (datom, dsign) = match canonicalize(BracketKind::Square, basis, syms).ok()? {
        Canon::Atom(a, s) => (a, s),
        _ => return None,
    };
    let mut numerator = NbaPoly::zero();
    for k in 0..4 {
        let mut seq = vec![v];
        seq.extend(
            basis
                .iter()
                .enumerate()
                .filter(|(idx, _)| *idx != k)
                .map(|(_, b)| *b),
        );
        let coeff = NbaPoly::bracket(BracketKind::Square, &seq, syms)
            .ok()?
            .scale(&qi(if k % 2 == 0 { 1 } else { -1 }));
        let mut items = w.chain.0.clone();
        items[pos] = Item::Vec(basis[k]);
        let w2 = ScalarWrap {
            kind: w.kind,
            chain: Chain(items),
        };
        for (rc, rw) in reduce_full((coeff, w2), syms) {
            numerator = numerator.add(&rc.mul(&wrap_to_poly(&rw, syms)?));
        }
    }
    Some((numerator.scale(&qi(dsign as i64)), datom))
}

/// Whether two polynomials are images of each other under a symbol swap:
/// `+1` if mapping `a` gives `b`, `-1` if it gives `-b`.
pub fn check_equivalence_symmetry(
    a: &NbaPoly,
    b: &NbaPoly,
    swap: &BTreeMap<VecSym, VecSym>,
    syms: &Symbols,
) -> Option<i32> {
    let f = |s: VecSym| swap.get(&s).copied().unwrap_or(s);
    let mapped = a.map_symbols(&f, syms).ok()?;
    if &mapped == b {
        Some(1)
    } else if mapped == b.neg() {
        Some(-1)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Serialization and independent verification.

/// A polynomial as stored in a trace file: terms of (atoms, coefficient).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolyDump(pub Vec<(Vec<Atom>, String)>);

impl PolyDump {
    pub fn from_poly(p: &NbaPoly) -> Self {
        PolyDump(
            p.terms()
                .map(|(m, c)| (m.0.clone(), c.to_string()))
                .collect(),
        )
    }

    pub fn to_poly(&self) -> Option<NbaPoly> {
        let mut p = NbaPoly::zero();
        for (atoms, c) in &self.0 {
            p.add_term(Monomial::new(atoms.clone()), c.parse::<Q>().ok()?);
        }
        Some(p)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepDump {
    pub index: usize,
    pub rule: String,
    pub locus: usize,
    pub before_terms: usize,
    pub after_terms: usize,
    pub note: String,
    pub terms: Vec<(PolyDump, ScalarWrap)>,
    pub done: PolyDump,
    pub ledger_len: usize,
}

/// A serialized proof trace: enough to re-verify every step against fresh
/// samples without re-running the strategy.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceDump {
    pub defs: Vec<SymDef>,
    pub conclusion_kind: BracketKind,
    pub conclusion_seq: Vec<VecSym>,
    pub steps: Vec<StepDump>,
    pub ledger: Vec<(PolyDump, usize, String)>,
    pub residual: PolyDump,
    pub outcome: String,
    pub max_terms: usize,
}

pub fn outcome_tag(outcome: &Outcome) -> &'static str {
    match outcome {
        Outcome::Proved => "proved",
        Outcome::ReducedTo(_) => "reduced",
        Outcome::Stuck(_) => "stuck",
    }
}

pub fn dump_trace(trace: &ProofTrace, cfg: &Configuration) -> TraceDump {
    TraceDump {
        defs: trace.syms.defs().to_vec(),
        conclusion_kind: cfg.conclusion.kind,
        conclusion_seq: cfg.conclusion.seq.clone(),
        steps: trace
            .steps
            .iter()
            .map(|s| StepDump {
                index: s.index,
                rule: s.rule.to_string(),
                locus: s.locus,
                before_terms: s.before_terms,
                after_terms: s.after_terms,
                note: s.note.clone(),
                terms: s
                    .terms
                    .iter()
                    .map(|(c, w)| (PolyDump::from_poly(c), w.clone()))
                    .collect(),
                done: PolyDump::from_poly(&s.done),
                ledger_len: s.ledger_len,
            })
            .collect(),
        ledger: trace
            .ledger
            .entries
            .iter()
            .map(|e| (PolyDump::from_poly(&e.factor), e.step, e.note.clone()))
            .collect(),
        residual: PolyDump::from_poly(&trace.residual),
        outcome: outcome_tag(&trace.outcome).to_string(),
        max_terms: trace.max_terms,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error("malformed trace: {0}")]
    Malformed(String),
    #[error("trace symbol table does not extend the configuration's")]
    SymbolMismatch,
    #[error("sampling failed: {0}")]
    Sample(String),
    #[error("step {step} does not preserve the conclusion value (sample {sample})")]
    StepMismatch { step: usize, sample: usize },
    #[error("ledger and residual do not reproduce the conclusion (sample {sample})")]
    FinalMismatch { sample: usize },
}

/// Re-verify a dumped trace against fresh random instances of the
/// configuration: at every step the ledger prefix times the recorded state
/// must equal the conclusion value, and for resolved outcomes the full
/// ledger times the residual must as well.
pub fn verify_trace(
    cfg: &Configuration,
    dump: &TraceDump,
    n_samples: usize,
    seed: u64,
) -> Result<(), VerifyError> {
    let syms = Symbols::from_defs(dump.defs.clone())
        .ok_or_else(|| VerifyError::Malformed("bad symbol table".into()))?;
    if syms.len() < cfg.syms.len() || &syms.defs()[..cfg.syms.len()] != cfg.syms.defs() {
        return Err(VerifyError::SymbolMismatch);
    }
    let ledger: Vec<NbaPoly> = dump
        .ledger
        .iter()
        .map(|(p, _, _)| {
            p.to_poly()
                .ok_or_else(|| VerifyError::Malformed("bad ledger entry".into()))
        })
        .collect::<Result<_, _>>()?;
    let residual = dump
        .residual
        .to_poly()
        .ok_or_else(|| VerifyError::Malformed("bad residual".into()))?;
    let steps: Vec<(Vec<(NbaPoly, ScalarWrap)>, NbaPoly, usize)> = dump
        .steps
        .iter()
        .map(|s| {
            if s.ledger_len > ledger.len() {
                return Err(VerifyError::Malformed("ledger length out of range".into()));
            }
            let terms = s
                .terms
                .iter()
                .map(|(c, w)| {
                    c.to_poly()
                        .map(|p| (p, w.clone()))
                        .ok_or_else(|| VerifyError::Malformed("bad coefficient".into()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let done = s
                .done
                .to_poly()
                .ok_or_else(|| VerifyError::Malformed("bad polynomial".into()))?;
            Ok((terms, done, s.ledger_len))
        })
        .collect::<Result<_, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for si in 0..n_samples.max(1) {
        let base = random_instance(cfg, &mut rng, SAMPLE_TRIES)
            .map_err(|e| VerifyError::Sample(e.to_string()))?;
        let full = resolve_composites(&syms, &base);
        let target = ScalarWrap {
            kind: dump.conclusion_kind,
            chain: Chain::of_vecs(&dump.conclusion_seq),
        }
        .eval(&full);
        for (k, (terms, done, ledger_len)) in steps.iter().enumerate() {
            let mut sum = done.evaluate(&full);
            for (c, w) in terms {
                sum += c.evaluate(&full) * w.eval(&full);
            }
            let mut lv = Q::one();
            for entry in &ledger[..*ledger_len] {
                lv *= entry.evaluate(&full);
            }
            if lv * sum != target {
                return Err(VerifyError::StepMismatch {
                    step: k,
                    sample: si,
                });
            }
        }
        if dump.outcome != "stuck" {
            let mut lv = Q::one();
            for entry in &ledger {
                lv *= entry.evaluate(&full);
            }
            if lv * residual.evaluate(&full) != target {
                return Err(VerifyError::FinalMismatch { sample: si });
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Rendering.

pub fn render_step(step: &ProofStep, ledger: &FactorLedger, syms: &Symbols) -> String {
    let mut parts: Vec<String> = step
        .terms
        .iter()
        .map(|(c, w)| format!("{} {}", c.render(syms), w.render(syms)))
        .collect();
    if !step.done.is_zero() || parts.is_empty() {
        parts.push(step.done.render(syms));
    }
    let mut line = format!(
        "{:>3} {:<16} {}",
        step.index,
        step.rule,
        parts.join(" + ")
    );
    if step.ledger_len > 0 {
        let l = ledger.entries[..step.ledger_len]
            .iter()
            .map(|e| e.factor.render(syms))
            .collect::<Vec<_>>()
            .join(" * ");
        line.push_str(&format!("  {{ledger: {l}}}"));
    }
    line
}

pub fn render_trace(trace: &ProofTrace) -> String {
    let syms = &trace.syms;
    let mut out = String::new();
    for step in &trace.steps {
        out.push_str(&render_step(step, &trace.ledger, syms));
        out.push('\n');
    }
    match &trace.outcome {
        Outcome::Proved => out.push_str("outcome: proved\n"),
        Outcome::ReducedTo(p) => {
            out.push_str(&format!("outcome: reduced to {}\n", p.render(syms)))
        }
        Outcome::Stuck(p) => out.push_str(&format!("outcome: stuck at {}\n", p.render(syms))),
    }
    if !trace.ledger.entries.is_empty() {
        out.push_str(&format!("ledger: {}\n", trace.ledger.render(syms)));
    }
    out.push_str(&format!("residual: {}\n", trace.residual.render(syms)));
    out.push_str(&format!("max terms: {}\n", trace.max_terms));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::parse_config;

    fn load(name: &str) -> Configuration {
        let path = format!("{}/../../configs/{name}.nba", env!("CARGO_MANIFEST_DIR"));
        let text = std::fs::read_to_string(&path).unwrap();
        parse_config(&text).unwrap()
    }

    #[test]
    fn reduce_full_contracts_adjacent_null_repeats() {
        let mut syms = Symbols::new();
        let e = syms.infinity();
        let p: Vec<VecSym> = (1..=4).map(|i| syms.point(&i.to_string())).collect();
        // [1 2 1 3] -> 2 (1.2) [1 3]: square of length 2 is zero.
        let w = ScalarWrap::square(Chain::of_vecs(&[p[0], p[1], p[0], p[2]]));
        assert!(reduce_full((NbaPoly::one(), w), &syms).is_empty());
        // [e 1 e 2 3 4] -> 2 (e.1) [e 2 3 4].
        let w = ScalarWrap::square(Chain::of_vecs(&[e, p[0], e, p[1], p[2], p[3]]));
        let out = reduce_full((NbaPoly::one(), w.clone()), &syms);
        assert_eq!(out.len(), 1);
        assert_eq!(
            out[0].1.chain.as_vec_syms().unwrap(),
            vec![e, p[1], p[2], p[3]]
        );
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let assign = crate::rules::testutil::random_assign(&syms, &mut rng);
            assert_eq!(w.eval(&assign), eval_terms(&out, &assign));
        }
    }

    #[test]
    fn reduce_full_uses_swap_lookahead() {
        let mut syms = Symbols::new();
        let e = syms.infinity();
        let p: Vec<VecSym> = (1..=4).map(|i| syms.point(&i.to_string())).collect();
        // [e 2 2' e 3 1 1' 2']-shaped: the cyclic swap at the end creates a
        // direct pattern.
        let w = ScalarWrap::square(Chain::of_vecs(&[
            e, p[1], p[3], e, p[2], p[0], p[1], p[3],
        ]));
        let out = reduce_full((NbaPoly::one(), w.clone()), &syms);
        assert!(!out.is_empty());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let assign = crate::rules::testutil::random_assign(&syms, &mut rng);
            assert_eq!(w.eval(&assign), eval_terms(&out, &assign));
        }
    }

    #[test]
    fn null_unexpand_recovers_doubled_chain() {
        use crate::rules::factor::clifford_factor;
        let mut syms = Symbols::new();
        let e = syms.infinity();
        let p1 = syms.point("1");
        let p3 = syms.point("3");
        let p4 = syms.point("4");
        let p5 = syms.point("5");
        // 4 (e.3) [e 1 4 5] - 4 (e.4) [e 1 3 5] is the expansion of a
        // 6-chain bracket with a doubled e; the factorizer must recover it
        // even though the 4-brackets were stored fully sorted.
        let mut p =
            NbaPoly::bracket(BracketKind::Square, &[e, p1, p4, p5], &syms).unwrap();
        p = p.mul(&NbaPoly::inner(e, p3, &syms)).scale(&qi(4));
        let mut q2 =
            NbaPoly::bracket(BracketKind::Square, &[e, p1, p3, p5], &syms).unwrap();
        q2 = q2.mul(&NbaPoly::inner(e, p4, &syms)).scale(&qi(-4));
        let f = clifford_factor(&p.add(&q2), &syms).expect("pair factors");
        let chain = f.wrap.chain.as_vec_syms().unwrap();
        assert_eq!(chain.len(), 6);
        assert_eq!(chain.iter().filter(|s| **s == e).count(), 2);
    }

    fn proved_trace(name: &str) -> ProofTrace {
        let cfg = load(name);
        prove(&cfg, 2, DEFAULT_SEED).unwrap()
    }

    #[test]
    fn three_circles_single_term_throughout() {
        let trace = proved_trace("three-circles");
        assert_eq!(trace.outcome, Outcome::Proved, "{}", render_trace(&trace));
        assert_eq!(trace.max_terms, 1);
        assert_eq!(trace.residual.render(&trace.syms), "[e 1 2 3]");
        assert_eq!(
            trace.ledger.render(&trace.syms),
            "-1/32 [0 1 2 3] [0 1 2 3] * -32 (e.0) (e.0) (0.1) (0.2) (0.3)"
        );
    }

    #[test]
    fn secants_reduces_to_rotated_hexagon() {
        let trace = proved_trace("secants");
        assert_eq!(trace.max_terms, 1);
        assert_eq!(trace.residual.render(&trace.syms), "[e 2 2' 1' 1 3]");
        assert_eq!(
            trace.ledger.render(&trace.syms),
            "1/2 [e 1 3 1'] [e 3 1' 2'] * 2 (e.2') * -1"
        );
        match &trace.outcome {
            Outcome::ReducedTo(p) => {
                assert_eq!(p.render(&trace.syms), "[e 2 2' 1' 1 3]")
            }
            other => panic!("expected reduction, got {other:?}"),
        }
    }

    #[test]
    fn triangle_circles_reduces_to_alternating_hexagon() {
        let trace = proved_trace("triangle-circles");
        assert_eq!(trace.max_terms, 1);
        assert_eq!(trace.residual.render(&trace.syms), "[1 2' 3 1' 2 3']");
        assert_eq!(
            trace.ledger.render(&trace.syms),
            "-1/2 [1 1' 2' 3'] [2 1' 2' 3']"
        );
        assert!(matches!(trace.outcome, Outcome::ReducedTo(_)));
    }

    #[test]
    fn miquel4_proof_pins_ledger() {
        let trace = proved_trace("miquel4");
        assert_eq!(trace.outcome, Outcome::Proved, "{}", render_trace(&trace));
        assert_eq!(trace.max_terms, 1);
        assert_eq!(trace.residual.render(&trace.syms), "[1 2 3 4]");
        assert_eq!(
            trace.ledger.render(&trace.syms),
            "1/4 [1 2 5 6] [1 4 5 6] [2 3 5 6] [3 4 5 6] * -4 (1.5) (3.6)"
        );
    }

    #[test]
    fn miquel5_proof_structure() {
        let trace = proved_trace("miquel5");
        assert_eq!(trace.outcome, Outcome::Proved, "{}", render_trace(&trace));
        assert_eq!(trace.max_terms, 3);
        assert!(trace.residual.is_zero());
        // Stage structure: the three meet pairs collapse first, the
        // derivation passes through the three-term middle state, and the
        // endgame pits the atomized [1 2 3 4 3' 1'] bracket against the
        // doubled octet before the final factorization cancels everything.
        let meet_pairs = trace
            .steps
            .iter()
            .filter(|s| s.rule == RULE_MEET_PAIR)
            .count();
        assert_eq!(meet_pairs, 3);
        assert!(trace.steps.iter().any(|s| s.rule == RULE_MEET_PAIR_SPLIT));
        assert!(trace
            .steps
            .iter()
            .any(|s| s.terms.len() + s.done.term_count() == 3));
        let rendered: Vec<String> = trace
            .steps
            .iter()
            .map(|s| render_step(s, &trace.ledger, &trace.syms))
            .collect();
        assert!(rendered.iter().any(|r| r.contains("[1 2 3 4 3' 1']")));
        assert!(rendered.iter().any(|r| r.contains("[e 2 1 5 e 3 4 5]")));
        assert_eq!(
            trace.steps.last().unwrap().rule,
            crate::rules::RULE_CLIFFORD_FACTOR
        );
    }

    #[test]
    fn trace_roundtrip_verifies_and_rejects_tampering() {
        let cfg = load("miquel4");
        let trace = prove(&cfg, 2, DEFAULT_SEED).unwrap();
        let dump = dump_trace(&trace, &cfg);
        let json = serde_json::to_string(&dump).unwrap();
        let back: TraceDump = serde_json::from_str(&json).unwrap();
        verify_trace(&cfg, &back, 3, DEFAULT_SEED ^ 1).unwrap();
        // Corrupt one step's state: verification must notice.
        let mut bad = back.clone();
        let mid = bad.steps.len() / 2;
        bad.steps[mid].done.0.push((Vec::new(), "7".to_string()));
        assert!(verify_trace(&cfg, &bad, 3, DEFAULT_SEED ^ 1).is_err());
        // Corrupt the residual: the final check must notice.
        let mut bad = back.clone();
        bad.residual.0.push((Vec::new(), "1".to_string()));
        assert!(verify_trace(&cfg, &bad, 3, DEFAULT_SEED ^ 1).is_err());
    }

    #[test]
    fn prove_smoke_three_circles() {
        let cfg = load("three-circles");
        let trace = prove(&cfg, 2, DEFAULT_SEED).unwrap();
        assert_eq!(trace.outcome, Outcome::Proved, "{}", render_trace(&trace));
    }
}
