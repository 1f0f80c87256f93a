//! Hash-consed CTL* formulas over the core connectives `¬ ∧ X U A`.
//!
//! Surface syntax (`true false | -> <-> F G E`) is eliminated while parsing, so
//! every [`FormulaId`] denotes a core-syntax term. Structurally identical terms
//! are interned once and share an identifier.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FormulaId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomId(pub u32);

/// One core-syntax node. `True` is a reserved constant rather than an atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    True,
    Atom(AtomId),
    Not(FormulaId),
    And(FormulaId, FormulaId),
    Next(FormulaId),
    Until(FormulaId, FormulaId),
    All(FormulaId),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("unexpected character {ch:?} at position {pos}")]
    UnknownToken { pos: usize, ch: char },
    #[error("syntax error at position {pos}: expected {expected}, found {found}")]
    Syntax {
        pos: usize,
        expected: &'static str,
        found: String,
    },
    #[error("`{name}` at position {pos} is reserved and cannot be used as an atom")]
    ReservedAtom { pos: usize, name: String },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::UnknownToken { pos, .. }
            | ParseError::Syntax { pos, .. }
            | ParseError::ReservedAtom { pos, .. } => *pos,
        }
    }
}

/// Interning table for formulas and atom names.
#[derive(Debug, Clone, Default)]
pub struct FormulaTable {
    kinds: Vec<Kind>,
    sizes: Vec<u64>,
    index: HashMap<Kind, FormulaId>,
    atoms: Vec<String>,
    atom_index: HashMap<String, AtomId>,
}

impl FormulaTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn kind(&self, f: FormulaId) -> Kind {
        self.kinds[f.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn atom_name(&self, a: AtomId) -> &str {
        &self.atoms[a.0 as usize]
    }

    pub fn atom_id(&self, name: &str) -> Option<AtomId> {
        self.atom_index.get(name).copied()
    }

    /// Number of core-syntax nodes of the term tree (shared subterms counted
    /// once per occurrence). Saturates at `u64::MAX`.
    pub fn size(&self, f: FormulaId) -> u64 {
        self.sizes[f.0 as usize]
    }

    fn intern(&mut self, kind: Kind) -> FormulaId {
        if let Some(&id) = self.index.get(&kind) {
            return id;
        }
        let size = match kind {
            Kind::True | Kind::Atom(_) => 1,
            Kind::Not(a) | Kind::Next(a) | Kind::All(a) => 1u64.saturating_add(self.size(a)),
            Kind::And(a, b) | Kind::Until(a, b) => 1u64
                .saturating_add(self.size(a))
                .saturating_add(self.size(b)),
        };
        let id = FormulaId(self.kinds.len() as u32);
        self.kinds.push(kind);
        self.sizes.push(size);
        self.index.insert(kind, id);
        id
    }

    pub fn truth(&mut self) -> FormulaId {
        self.intern(Kind::True)
    }

    pub fn falsity(&mut self) -> FormulaId {
        let t = self.truth();
        self.not(t)
    }

    pub fn atom(&mut self, name: &str) -> FormulaId {
        let id = match self.atom_index.get(name) {
            Some(&a) => a,
            None => {
                let a = AtomId(self.atoms.len() as u32);
                self.atoms.push(name.to_string());
                self.atom_index.insert(name.to_string(), a);
                a
            }
        };
        self.intern(Kind::Atom(id))
    }

    pub fn not(&mut self, f: FormulaId) -> FormulaId {
        self.intern(Kind::Not(f))
    }

    pub fn and(&mut self, a: FormulaId, b: FormulaId) -> FormulaId {
        self.intern(Kind::And(a, b))
    }

    pub fn next(&mut self, f: FormulaId) -> FormulaId {
        self.intern(Kind::Next(f))
    }

    pub fn until(&mut self, a: FormulaId, b: FormulaId) -> FormulaId {
        self.intern(Kind::Until(a, b))
    }

    pub fn all(&mut self, f: FormulaId) -> FormulaId {
        self.intern(Kind::All(f))
    }

    /// `a ∨ b` as `¬(¬a ∧ ¬b)`.
    pub fn or(&mut self, a: FormulaId, b: FormulaId) -> FormulaId {
        let na = self.not(a);
        let nb = self.not(b);
        let c = self.and(na, nb);
        self.not(c)
    }

    /// `a → b` as `¬(a ∧ ¬b)`.
    pub fn implies(&mut self, a: FormulaId, b: FormulaId) -> FormulaId {
        let nb = self.not(b);
        let c = self.and(a, nb);
        self.not(c)
    }

    pub fn iff(&mut self, a: FormulaId, b: FormulaId) -> FormulaId {
        let l = self.implies(a, b);
        let r = self.implies(b, a);
        self.and(l, r)
    }

    /// `F a` as `true U a`.
    pub fn eventually(&mut self, f: FormulaId) -> FormulaId {
        let t = self.truth();
        self.until(t, f)
    }

    /// `G a` as `¬(true U ¬a)`.
    pub fn always(&mut self, f: FormulaId) -> FormulaId {
        let nf = self.not(f);
        let ev = self.eventually(nf);
        self.not(ev)
    }

    /// `E a` as `¬A¬a`.
    pub fn exists(&mut self, f: FormulaId) -> FormulaId {
        let nf = self.not(f);
        let a = self.all(nf);
        self.not(a)
    }

    pub fn contains_all(&self, f: FormulaId) -> bool {
        match self.kind(f) {
            Kind::True | Kind::Atom(_) => false,
            Kind::All(_) => true,
            Kind::Not(a) | Kind::Next(a) => self.contains_all(a),
            Kind::And(a, b) | Kind::Until(a, b) => self.contains_all(a) || self.contains_all(b),
        }
    }

    pub fn parse(&mut self, text: &str) -> Result<FormulaId, ParseError> {
        let tokens = lex(text)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            table: self,
            end: text.chars().count(),
        };
        let f = parser.iff()?;
        match parser.peek() {
            None => Ok(f),
            Some((pos, tok)) => Err(ParseError::Syntax {
                pos,
                expected: "end of input",
                found: tok.to_string(),
            }),
        }
    }

    /// Fully parenthesised core-syntax rendering; reparses to the same id.
    pub fn render(&self, f: FormulaId) -> String {
        let mut out = String::new();
        self.render_into(f, &mut out);
        out
    }

    fn render_into(&self, f: FormulaId, out: &mut String) {
        match self.kind(f) {
            Kind::True => out.push_str("true"),
            Kind::Atom(a) => out.push_str(self.atom_name(a)),
            Kind::Not(a) => {
                out.push('~');
                self.render_into(a, out);
            }
            Kind::Next(a) => {
                out.push_str("X ");
                self.render_into(a, out);
            }
            Kind::All(a) => {
                out.push_str("A ");
                self.render_into(a, out);
            }
            Kind::And(a, b) => {
                out.push('(');
                self.render_into(a, out);
                out.push_str(" & ");
                self.render_into(b, out);
                out.push(')');
            }
            Kind::Until(a, b) => {
                out.push('(');
                self.render_into(a, out);
                out.push_str(" U ");
                self.render_into(b, out);
                out.push(')');
            }
        }
    }

    pub fn display(&self, f: FormulaId) -> Rendered<'_> {
        Rendered { table: self, f }
    }
}

pub struct Rendered<'a> {
    table: &'a FormulaTable,
    f: FormulaId,
}

impl fmt::Display for Rendered<'_> {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        out.write_str(&self.table.render(self.f))
    }
}

/// Parses a formula file: one formula per line, `#` starts a comment line,
/// blank lines are skipped. Returns `(line number, formula)` pairs.
pub fn parse_formula_file(
    table: &mut FormulaTable,
    contents: &str,
) -> Result<Vec<(usize, FormulaId)>, (usize, ParseError)> {
    let mut out = Vec::new();
    for (n, line) in contents.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let f = table.parse(trimmed).map_err(|e| (n + 1, e))?;
        out.push((n + 1, f));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Ident(String),
    True,
    False,
    Not,
    All,
    Exists,
    Next,
    Future,
    Globally,
    Until,
    And,
    Or,
    Implies,
    Iff,
    LParen,
    RParen,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Token::Ident(name) => return write!(f, "`{name}`"),
            Token::True => "`true`",
            Token::False => "`false`",
            Token::Not => "`~`",
            Token::All => "`A`",
            Token::Exists => "`E`",
            Token::Next => "`X`",
            Token::Future => "`F`",
            Token::Globally => "`G`",
            Token::Until => "`U`",
            Token::And => "`&`",
            Token::Or => "`|`",
            Token::Implies => "`->`",
            Token::Iff => "`<->`",
            Token::LParen => "`(`",
            Token::RParen => "`)`",
        };
        f.write_str(s)
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '~' | '!' | '¬' => Token::Not,
            '&' | '∧' => Token::And,
            '|' | '∨' => Token::Or,
            '(' => Token::LParen,
            ')' => Token::RParen,
            '→' => Token::Implies,
            '↔' => Token::Iff,
            '-' if chars.get(i + 1) == Some(&'>') => {
                i += 1;
                Token::Implies
            }
            '<' if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') => {
                i += 2;
                Token::Iff
            }
            'A' => Token::All,
            'E' => Token::Exists,
            'X' => Token::Next,
            'F' => Token::Future,
            'G' => Token::Globally,
            'U' => Token::Until,
            c if c.is_ascii_lowercase() => {
                let mut j = i;
                while j < chars.len()
                    && (chars[j].is_ascii_lowercase() || chars[j].is_ascii_digit() || chars[j] == '_')
                {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                i = j - 1;
                match word.as_str() {
                    "true" => Token::True,
                    "false" => Token::False,
                    _ => Token::Ident(word),
                }
            }
            ch => return Err(ParseError::UnknownToken { pos: i, ch }),
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser<'t> {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    table: &'t mut FormulaTable,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<(usize, &Token)> {
        self.tokens.get(self.pos).map(|(p, t)| (*p, t))
    }

    fn eat(&mut self, tok: &Token) -> bool {
        if self.peek().map(|(_, t)| t) == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &'static str) -> ParseError {
        match self.peek() {
            Some((pos, tok)) => ParseError::Syntax {
                pos,
                expected,
                found: tok.to_string(),
            },
            None => ParseError::Syntax {
                pos: self.end,
                expected,
                found: "end of input".to_string(),
            },
        }
    }

    fn iff(&mut self) -> Result<FormulaId, ParseError> {
        let mut lhs = self.implication()?;
        while self.eat(&Token::Iff) {
            let rhs = self.implication()?;
            lhs = self.table.iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> Result<FormulaId, ParseError> {
        let lhs = self.disjunction()?;
        if self.eat(&Token::Implies) {
            let rhs = self.implication()?;
            return Ok(self.table.implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<FormulaId, ParseError> {
        let mut lhs = self.conjunction()?;
        while self.eat(&Token::Or) {
            let rhs = self.conjunction()?;
            lhs = self.table.or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<FormulaId, ParseError> {
        let mut lhs = self.until()?;
        while self.eat(&Token::And) {
            let rhs = self.until()?;
            lhs = self.table.and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<FormulaId, ParseError> {
        let lhs = self.unary()?;
        if self.eat(&Token::Until) {
            let rhs = self.until()?;
            return Ok(self.table.until(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<FormulaId, ParseError> {
        let Some((_, tok)) = self.peek() else {
            return Err(self.error("a formula"));
        };
        let tok = tok.clone();
        self.pos += 1;
        let f = match tok {
            Token::Not => {
                let a = self.unary()?;
                self.table.not(a)
            }
            Token::All => {
                let a = self.unary()?;
                self.table.all(a)
            }
            Token::Exists => {
                let a = self.unary()?;
                self.table.exists(a)
            }
            Token::Next => {
                let a = self.unary()?;
                self.table.next(a)
            }
            Token::Future => {
                let a = self.unary()?;
                self.table.eventually(a)
            }
            Token::Globally => {
                let a = self.unary()?;
                self.table.always(a)
            }
            Token::True => self.table.truth(),
            Token::False => self.table.falsity(),
            Token::Ident(name) => self.table.atom(&name),
            Token::LParen => {
                let inner = self.iff()?;
                if !self.eat(&Token::RParen) {
                    return Err(self.error("`)`"));
                }
                inner
            }
            _ => {
                self.pos -= 1;
                return Err(self.error("a formula"));
            }
        };
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjunction_maps_directly() {
        let mut t = FormulaTable::new();
        let f = t.parse("p & ~p").unwrap();
        let p = t.atom("p");
        let np = t.not(p);
        assert_eq!(t.kind(f), Kind::And(p, np));
    }

    #[test]
    fn exists_next_desugars() {
        let mut t = FormulaTable::new();
        let f = t.parse("E X p").unwrap();
        let p = t.atom("p");
        let xp = t.next(p);
        let nxp = t.not(xp);
        let anxp = t.all(nxp);
        assert_eq!(f, t.not(anxp));
    }

    #[test]
    fn afgq_matches_core_form() {
        let mut t = FormulaTable::new();
        let f = t.parse("A F G q").unwrap();
        let g = t.parse("AFGq").unwrap();
        assert_eq!(f, g);
        let q = t.atom("q");
        let gq = t.always(q);
        let fgq = t.eventually(gq);
        assert_eq!(f, t.all(fgq));
        assert_eq!(t.size(f), 8);
    }

    #[test]
    fn benchmark_lengths_match_table() {
        let mut t = FormulaTable::new();
        let f = t.parse("AFGq -> AFAGq").unwrap();
        assert_eq!(t.size(f), 20);
        let g = t.parse("~(AFGq -> AFAGq)").unwrap();
        assert_eq!(t.size(g), 21);
        let h = t.parse("AFGAFGq -> AFAGAFAGq").unwrap();
        assert_eq!(t.size(h), 35);
    }

    #[test]
    fn precedence_and_associativity() {
        let mut t = FormulaTable::new();
        let a = t.parse("p U q U r").unwrap();
        let b = t.parse("p U (q U r)").unwrap();
        assert_eq!(a, b);
        let c = t.parse("p & q | r").unwrap();
        let d = t.parse("(p & q) | r").unwrap();
        assert_eq!(c, d);
        let e = t.parse("p -> q -> r").unwrap();
        let f = t.parse("p -> (q -> r)").unwrap();
        assert_eq!(e, f);
        let g = t.parse("~p U q").unwrap();
        let h = t.parse("(~p) U q").unwrap();
        assert_eq!(g, h);
        let i = t.parse("p U q & r").unwrap();
        let j = t.parse("(p U q) & r").unwrap();
        assert_eq!(i, j);
    }

    #[test]
    fn render_round_trips() {
        let mut t = FormulaTable::new();
        for src in ["p & q", "A(p U q)", "F p", "G ~p", "E X p <-> q", "false | true", "~~p"] {
            let f = t.parse(src).unwrap();
            let r = t.render(f);
            assert_eq!(t.parse(&r).unwrap(), f, "{src} rendered as {r}");
        }
        let f = t.parse("F p").unwrap();
        let tr = t.truth();
        let p = t.atom("p");
        assert_eq!(f, t.until(tr, p));
    }

    #[test]
    fn errors_carry_positions() {
        let mut t = FormulaTable::new();
        assert_eq!(t.parse("p & $").unwrap_err().position(), 4);
        assert!(matches!(t.parse("p &").unwrap_err(), ParseError::Syntax { pos: 3, .. }));
        assert!(matches!(t.parse("(p").unwrap_err(), ParseError::Syntax { .. }));
        assert!(matches!(t.parse("p q").unwrap_err(), ParseError::Syntax { pos: 2, .. }));
        assert!(matches!(t.parse("P").unwrap_err(), ParseError::UnknownToken { pos: 0, ch: 'P' }));
    }

    #[test]
    fn formula_file_skips_comments() {
        let mut t = FormulaTable::new();
        let parsed = parse_formula_file(&mut t, "# header\n\np\n  # more\nq & r\n").unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].0, 3);
        assert_eq!(parsed[1].0, 5);
        let err = parse_formula_file(&mut t, "p\n&\n").unwrap_err();
        assert_eq!(err.0, 2);
    }
}
