//! Geometric constructions: the center and intersection constructors, exact
//! numeric instantiation of whole configurations, and the configuration DSL.

use crate::cga::{embed_point, Multivector, Q};
use crate::sym::{SymDef, Symbols, VecSym};
use num_traits::Zero;
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error)]
pub enum ConstructError {
    #[error("constructor arguments must be distinct")]
    RepeatedArgument,
    #[error("degenerate sample: {0}")]
    Degenerate(String),
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("line {line}, col {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

/// A geometric constructor as written in a configuration file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Constructor {
    /// Center of the circle through three points.
    Center([VecSym; 3]),
    /// Second intersection of circles `base a b` and `base a' b'`.
    CircleMeet {
        base: VecSym,
        first: [VecSym; 2],
        second: [VecSym; 2],
    },
    /// Intersection of lines `a b` and `c d` (a circle meet based at `e`).
    LineMeet {
        first: [VecSym; 2],
        second: [VecSym; 2],
    },
}

/// A constructed point: the named null symbol occurring in conclusions, its
/// constructor, and the composite chain symbol it unfolds to.
#[derive(Clone, Debug)]
pub struct Constructed {
    pub name: VecSym,
    pub ctor: Constructor,
    pub body: VecSym,
}

/// Whether the conclusion bracket must vanish or merely contain the removed
/// hypothesis bracket as a factor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConcludeMode {
    Zero,
    FactorOf(Vec<VecSym>),
}

#[derive(Clone, Debug)]
pub struct Conclusion {
    pub kind: crate::atom::BracketKind,
    pub seq: Vec<VecSym>,
    pub mode: ConcludeMode,
}

/// A parsed configuration: free points, constructions in declaration order,
/// optional removed hypotheses, and the conclusion.
#[derive(Clone, Debug)]
pub struct Configuration {
    pub syms: Symbols,
    pub free: Vec<VecSym>,
    pub constructed: Vec<Constructed>,
    pub removed: Vec<Vec<VecSym>>,
    pub conclusion: Conclusion,
}

/// `center(a b c) = N_e((a ^ b ^ c)~)`: the center of the circle through
/// three points.
pub fn center_expr(
    syms: &mut Symbols,
    a: VecSym,
    b: VecSym,
    c: VecSym,
) -> Result<VecSym, ConstructError> {
    if a == b || a == c || b == c {
        return Err(ConstructError::RepeatedArgument);
    }
    let e = syms.infinity();
    let wd = syms.wedge_dual(a, b, c);
    Ok(syms.nullify(wd, e))
}

/// `p a b  meet  p a' b' = N_p((a ^ b) v_p (a' ^ b'))`: the second
/// intersection of two circles (or lines, when `p` or a wedge slot is `e`)
/// through the shared point `p`.
pub fn circle_meet_expr(
    syms: &mut Symbols,
    p: VecSym,
    ab: (VecSym, VecSym),
    ab2: (VecSym, VecSym),
) -> Result<VecSym, ConstructError> {
    let args = [p, ab.0, ab.1, ab2.0, ab2.1];
    for i in 0..args.len() {
        for j in (i + 1)..args.len() {
            if args[i] == args[j] {
                return Err(ConstructError::RepeatedArgument);
            }
        }
    }
    let m = syms.reduced_meet([ab.0, ab.1], [ab2.0, ab2.1], p);
    Ok(syms.nullify(m, p))
}

/// Numeric value of one composite definition, given values for everything it
/// references. The reduced meet uses its defining (left) split, which is
/// exact.
fn composite_value(
    def: &SymDef,
    val: &BTreeMap<VecSym, Multivector>,
) -> Multivector {
    match def {
        SymDef::Infinity | SymDef::Point { .. } => {
            unreachable!("plain symbols are assigned, not computed")
        }
        SymDef::WedgeDual([a, b, c]) => {
            val[a].outer(&val[b]).outer(&val[c]).dual()
        }
        SymDef::ReducedMeet { left, right, base } => {
            let bracket = |s: &[&Multivector]| {
                crate::cga::square_bracket_num(&[
                    s[0].clone(),
                    s[1].clone(),
                    s[2].clone(),
                    s[3].clone(),
                ])
            };
            let b = &val[base];
            let (l0, l1) = (&val[&left[0]], &val[&left[1]]);
            let (r0, r1) = (&val[&right[0]], &val[&right[1]]);
            let c1 = bracket(&[b, l0, r0, r1]);
            let c2 = bracket(&[b, l1, r0, r1]);
            l1.scale(&c1).sub(&l0.scale(&c2))
        }
        SymDef::Nullify { inner, base } => {
            let m = &val[inner];
            let half = crate::cga::q(1, 2);
            m.gp(&val[base]).gp(m).grade_part(1).scale(&half)
        }
    }
}

/// Extend an assignment of the plain symbols (points and `e`) to every
/// composite symbol, evaluating constructors in interning order.
pub fn resolve_composites(
    syms: &Symbols,
    plain: &BTreeMap<VecSym, Multivector>,
) -> BTreeMap<VecSym, Multivector> {
    let mut val = plain.clone();
    for (s, def) in syms.iter() {
        if val.contains_key(&s) {
            continue;
        }
        let v = composite_value(def, &val);
        val.insert(s, v);
    }
    val
}

/// Whether two vectors are proportional (represent the same projective
/// point).
pub fn proportional(a: &Multivector, b: &Multivector) -> bool {
    // Cross-ratio of coefficients: a*s = b*t for the first nonzero slots.
    let mut ratio: Option<(Q, Q)> = None;
    for blade in 0u8..16 {
        let ca = a.coeff(blade);
        let cb = b.coeff(blade);
        match &ratio {
            None => {
                if !ca.is_zero() || !cb.is_zero() {
                    if ca.is_zero() || cb.is_zero() {
                        return false;
                    }
                    ratio = Some((ca, cb));
                }
            }
            Some((ra, rb)) => {
                if &ca * rb != &cb * ra {
                    return false;
                }
            }
        }
    }
    ratio.is_some()
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Word(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    LAngle,
    RAngle,
    Colon,
    Eq,
}

fn tokenize(raw: &str, line: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = raw.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            '#' => break,
            c if c.is_whitespace() => i += 1,
            '(' => {
                out.push((Tok::LParen, col));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, col));
                i += 1;
            }
            '[' => {
                out.push((Tok::LBrack, col));
                i += 1;
            }
            ']' => {
                out.push((Tok::RBrack, col));
                i += 1;
            }
            '<' => {
                out.push((Tok::LAngle, col));
                i += 1;
            }
            '>' => {
                out.push((Tok::RAngle, col));
                i += 1;
            }
            ':' => {
                out.push((Tok::Colon, col));
                i += 1;
            }
            '=' => {
                out.push((Tok::Eq, col));
                i += 1;
            }
            c if c.is_ascii_alphanumeric() || c == '\'' || c == '-' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric()
                        || chars[i] == '\''
                        || chars[i] == '-')
                {
                    i += 1;
                }
                out.push((Tok::Word(chars[start..i].iter().collect()), col));
            }
            other => {
                return Err(ParseError {
                    line,
                    col,
                    msg: format!("unexpected character '{other}'"),
                })
            }
        }
    }
    Ok(out)
}

fn valid_name(name: &str) -> bool {
    let stem = name.trim_end_matches('\'');
    !stem.is_empty() && stem.chars().all(|c| c.is_ascii_alphanumeric()) && name != "e"
}

struct LineParser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    line: usize,
}

impl<'a> LineParser<'a> {
    fn err(&self, msg: impl Into<String>) -> ParseError {
        let col = self
            .toks
            .get(self.pos)
            .map(|(_, c)| *c)
            .unwrap_or_else(|| self.toks.last().map(|(_, c)| c + 1).unwrap_or(1));
        ParseError {
            line: self.line,
            col,
            msg: msg.into(),
        }
    }

    fn next(&mut self) -> Option<&'a Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t);
        self.pos += 1;
        t
    }

    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn word(&mut self, what: &str) -> Result<&'a str, ParseError> {
        match self.peek() {
            Some(Tok::Word(w)) => {
                self.pos += 1;
                Ok(w)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn end(&self) -> Result<(), ParseError> {
        if self.pos == self.toks.len() {
            Ok(())
        } else {
            Err(self.err("trailing tokens"))
        }
    }

    /// A known symbol name (declared earlier, or `e`).
    fn symbol(&mut self, syms: &Symbols) -> Result<VecSym, ParseError> {
        let w = self.word("symbol name")?;
        syms.lookup(w)
            .ok_or_else(|| self.err(format!("unknown symbol '{w}'")))
    }

    fn pair(&mut self, syms: &Symbols) -> Result<[VecSym; 2], ParseError> {
        self.expect(&Tok::LParen, "'('")?;
        let a = self.symbol(syms)?;
        let b = self.symbol(syms)?;
        self.expect(&Tok::RParen, "')'")?;
        Ok([a, b])
    }

    fn bracket_seq(
        &mut self,
        syms: &Symbols,
    ) -> Result<(crate::atom::BracketKind, Vec<VecSym>), ParseError> {
        let (open, close, kind) = match self.peek() {
            Some(Tok::LBrack) => (Tok::LBrack, Tok::RBrack, crate::atom::BracketKind::Square),
            Some(Tok::LAngle) => (Tok::LAngle, Tok::RAngle, crate::atom::BracketKind::Angular),
            _ => return Err(self.err("expected '[' or '<'")),
        };
        self.expect(&open, "bracket")?;
        let mut seq = Vec::new();
        while self.peek() != Some(&close) {
            seq.push(self.symbol(syms)?);
        }
        self.expect(&close, "closing bracket")?;
        if seq.is_empty() {
            return Err(self.err("empty bracket"));
        }
        Ok((kind, seq))
    }
}

/// Parse a configuration file. Lines: `free`, `point`, `removed`,
/// `conclude`; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Configuration, ParseError> {
    let mut syms = Symbols::new();
    let mut free: Vec<VecSym> = Vec::new();
    let mut constructed: Vec<Constructed> = Vec::new();
    let mut removed: Vec<Vec<VecSym>> = Vec::new();
    let mut conclusion: Option<Conclusion> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let toks = tokenize(raw, line)?;
        if toks.is_empty() {
            continue;
        }
        let mut p = LineParser {
            toks: &toks,
            pos: 0,
            line,
        };
        let head = p.word("directive")?;
        match head {
            "free" => {
                let mut any = false;
                while p.peek().is_some() {
                    let name = p.word("point name")?;
                    if !valid_name(name) {
                        return Err(p.err(format!("invalid name '{name}'")));
                    }
                    if syms.lookup(name).is_some() {
                        return Err(p.err(format!("redeclaration of '{name}'")));
                    }
                    free.push(syms.point(name));
                    any = true;
                }
                if !any {
                    return Err(p.err("free line declares no points"));
                }
            }
            "point" => {
                let name = p.word("point name")?.to_string();
                if !valid_name(&name) {
                    return Err(p.err(format!("invalid name '{name}'")));
                }
                if syms.lookup(&name).is_some() {
                    return Err(p.err(format!("redeclaration of '{name}'")));
                }
                p.expect(&Tok::Eq, "'='")?;
                let kind = p.word("constructor")?;
                let ctor = match kind {
                    "center" => {
                        p.expect(&Tok::LParen, "'('")?;
                        let a = p.symbol(&syms)?;
                        let b = p.symbol(&syms)?;
                        let c = p.symbol(&syms)?;
                        p.expect(&Tok::RParen, "')'")?;
                        Constructor::Center([a, b, c])
                    }
                    "linemeet" => {
                        let first = p.pair(&syms)?;
                        let second = p.pair(&syms)?;
                        Constructor::LineMeet { first, second }
                    }
                    "circlemeet" => {
                        let base = p.symbol(&syms)?;
                        p.expect(&Tok::Colon, "':'")?;
                        let first = p.pair(&syms)?;
                        let second = p.pair(&syms)?;
                        Constructor::CircleMeet {
                            base,
                            first,
                            second,
                        }
                    }
                    other => {
                        return Err(p.err(format!("unknown constructor '{other}'")))
                    }
                };
                p.end()?;
                let body = match &ctor {
                    Constructor::Center([a, b, c]) => {
                        center_expr(&mut syms, *a, *b, *c)
                    }
                    Constructor::CircleMeet {
                        base,
                        first,
                        second,
                    } => circle_meet_expr(
                        &mut syms,
                        *base,
                        (first[0], first[1]),
                        (second[0], second[1]),
                    ),
                    Constructor::LineMeet { first, second } => {
                        let e = syms.infinity();
                        circle_meet_expr(
                            &mut syms,
                            e,
                            (first[0], first[1]),
                            (second[0], second[1]),
                        )
                    }
                }
                .map_err(|e| p.err(e.to_string()))?;
                let name_sym = syms.point(&name);
                constructed.push(Constructed {
                    name: name_sym,
                    ctor,
                    body,
                });
            }
            "removed" => {
                let (kind, seq) = p.bracket_seq(&syms)?;
                if kind != crate::atom::BracketKind::Square {
                    return Err(p.err("removed hypothesis must be a square bracket"));
                }
                p.end()?;
                removed.push(seq);
            }
            "conclude" => {
                if conclusion.is_some() {
                    return Err(p.err("duplicate conclude line"));
                }
                let (kind, seq) = p.bracket_seq(&syms)?;
                let mode = match p.peek() {
                    Some(Tok::Eq) => {
                        p.next();
                        let z = p.word("'0'")?;
                        if z != "0" {
                            return Err(p.err("expected '0'"));
                        }
                        ConcludeMode::Zero
                    }
                    Some(Tok::Word(w)) if w == "factor-of" => {
                        p.next();
                        let (fk, fseq) = p.bracket_seq(&syms)?;
                        if fk != crate::atom::BracketKind::Square {
                            return Err(p.err("factor must be a square bracket"));
                        }
                        ConcludeMode::FactorOf(fseq)
                    }
                    _ => return Err(p.err("expected '= 0' or 'factor-of [..]'")),
                };
                p.end()?;
                conclusion = Some(Conclusion { kind, seq, mode });
            }
            other => {
                return Err(p.err(format!("unknown directive '{other}'")));
            }
        }
    }
    let conclusion = conclusion.ok_or(ParseError {
        line: text.lines().count() + 1,
        col: 1,
        msg: "missing conclude line".to_string(),
    })?;
    Ok(Configuration {
        syms,
        free,
        constructed,
        removed,
        conclusion,
    })
}

/// Regenerate the DSL text of a configuration. `parse_config` of the output
/// reproduces the configuration.
pub fn render_config(c: &Configuration) -> String {
    let mut out = String::new();
    let name = |s: VecSym| c.syms.name(s);
    let names = |seq: &[VecSym]| {
        seq.iter().map(|s| name(*s)).collect::<Vec<_>>().join(" ")
    };
    out.push_str(&format!("free {}\n", names(&c.free)));
    for ctr in &c.constructed {
        let rhs = match &ctr.ctor {
            Constructor::Center(t) => format!("center ({})", names(t)),
            Constructor::LineMeet { first, second } => {
                format!("linemeet ({}) ({})", names(first), names(second))
            }
            Constructor::CircleMeet {
                base,
                first,
                second,
            } => format!(
                "circlemeet {} : ({}) ({})",
                name(*base),
                names(first),
                names(second)
            ),
        };
        out.push_str(&format!("point {} = {}\n", name(ctr.name), rhs));
    }
    for r in &c.removed {
        out.push_str(&format!("removed [{}]\n", names(r)));
    }
    let body = match c.conclusion.kind {
        crate::atom::BracketKind::Square => format!("[{}]", names(&c.conclusion.seq)),
        crate::atom::BracketKind::Angular => format!("<{}>", names(&c.conclusion.seq)),
    };
    match &c.conclusion.mode {
        ConcludeMode::Zero => out.push_str(&format!("conclude {body} = 0\n")),
        ConcludeMode::FactorOf(f) => {
            out.push_str(&format!("conclude {body} factor-of [{}]\n", names(f)))
        }
    }
    out
}

/// Exact instantiation of a configuration from rational coordinates for the
/// free points. Every symbol (including constructed names and their
/// composite bodies) gets a value; degenerate samples are reported for
/// resampling.
pub fn instantiate(
    config: &Configuration,
    sample: &BTreeMap<VecSym, (Q, Q)>,
) -> Result<BTreeMap<VecSym, Multivector>, ConstructError> {
    let mut val: BTreeMap<VecSym, Multivector> = BTreeMap::new();
    val.insert(config.syms.infinity(), Multivector::einf());
    for &f in &config.free {
        let (x, y) = sample.get(&f).ok_or_else(|| {
            ConstructError::Degenerate(format!(
                "free point {} not sampled",
                config.syms.name(f)
            ))
        })?;
        val.insert(f, embed_point(x.clone(), y.clone()).mv);
    }
    for i in 0..config.free.len() {
        for j in (i + 1)..config.free.len() {
            if proportional(&val[&config.free[i]], &val[&config.free[j]]) {
                return Err(ConstructError::Degenerate(
                    "coincident free points".to_string(),
                ));
            }
        }
    }
    let body_of: BTreeMap<VecSym, VecSym> =
        config.constructed.iter().map(|c| (c.name, c.body)).collect();
    for (s, def) in config.syms.iter() {
        if val.contains_key(&s) {
            continue;
        }
        match def {
            SymDef::Point { name } => {
                // A constructed name takes the value of its body, which is
                // interned (and therefore computed) before the name.
                let body = body_of.get(&s).ok_or_else(|| {
                    ConstructError::Degenerate(format!(
                        "point {name} has no sample and no constructor"
                    ))
                })?;
                let v = val[body].clone();
                val.insert(s, v);
            }
            _ => {
                let v = composite_value(def, &val);
                val.insert(s, v);
            }
        }
    }
    for ctr in &config.constructed {
        let v = &val[&ctr.name];
        if v.is_zero() {
            return Err(ConstructError::Degenerate(format!(
                "constructor for {} vanished",
                config.syms.name(ctr.name)
            )));
        }
        let bad_limit = match &ctr.ctor {
            // Collinear inputs push the center to infinity.
            Constructor::Center(_) => Multivector::einf(),
            // Parallel lines meet at infinity.
            Constructor::LineMeet { .. } => Multivector::einf(),
            // A tangent pair returns the base point instead of a proper
            // second intersection.
            Constructor::CircleMeet { base, .. } => val[base].clone(),
        };
        if proportional(v, &bad_limit) {
            return Err(ConstructError::Degenerate(format!(
                "degenerate intersection for {}",
                config.syms.name(ctr.name)
            )));
        }
    }
    Ok(val)
}

/// Sample free points with small rationals, rejection-resampling on
/// degeneracy.
pub fn random_instance<R: rand::Rng>(
    config: &Configuration,
    rng: &mut R,
    max_tries: usize,
) -> Result<BTreeMap<VecSym, Multivector>, ConstructError> {
    for _ in 0..max_tries {
        let sample: BTreeMap<VecSym, (Q, Q)> = config
            .free
            .iter()
            .map(|&f| {
                (
                    f,
                    (
                        crate::cga::random_q(rng, 50, 20),
                        crate::cga::random_q(rng, 50, 20),
                    ),
                )
            })
            .collect();
        match instantiate(config, &sample) {
            Ok(v) => return Ok(v),
            Err(ConstructError::Degenerate(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(ConstructError::Degenerate(
        "resampling budget exhausted".to_string(),
    ))
}
