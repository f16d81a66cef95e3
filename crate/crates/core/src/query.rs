//! Query language and triple-pattern extraction.
//!
//! The accepted language is a small SELECT subset:
//!
//! ```text
//! SELECT ?v1 ?v2 ... WHERE { s p o . s p o . ... }
//! ```
//!
//! Keywords are case-insensitive, literals are double-quoted, IRIs are bare
//! tokens and every pattern is terminated by `.`. Variable predicates are
//! accepted here; rejecting them is the enforcement layer's job.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::term::{unescape, Term, TermError};

/// A query variable. The stored name excludes the `?` sigil.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Variable(String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Option<Self> {
        let name = name.into();
        let name = name.strip_prefix('?').map(str::to_string).unwrap_or(name);
        if !name.is_empty() && name.chars().all(is_var_char) {
            Some(Self(name))
        } else {
            None
        }
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

fn is_var_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

/// One position of a triple pattern.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PatternTerm {
    Const(Term),
    Var(Variable),
}

impl PatternTerm {
    pub fn is_variable(&self) -> bool {
        matches!(self, PatternTerm::Var(_))
    }

    pub fn as_const(&self) -> Option<&Term> {
        match self {
            PatternTerm::Const(t) => Some(t),
            PatternTerm::Var(_) => None,
        }
    }

    pub fn as_var(&self) -> Option<&Variable> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Const(_) => None,
        }
    }
}

impl From<Term> for PatternTerm {
    fn from(t: Term) -> Self {
        PatternTerm::Const(t)
    }
}

impl From<Variable> for PatternTerm {
    fn from(v: Variable) -> Self {
        PatternTerm::Var(v)
    }
}

impl fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Const(t) => t.fmt(f),
            PatternTerm::Var(v) => v.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    pub fn new(
        subject: impl Into<PatternTerm>,
        predicate: impl Into<PatternTerm>,
        object: impl Into<PatternTerm>,
    ) -> Self {
        Self {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
        }
    }

    /// The pattern with every position a fresh variable.
    pub fn any() -> Self {
        let v = |n: &str| PatternTerm::Var(Variable(n.to_string()));
        Self::new(v("s"), v("p"), v("o"))
    }

    pub fn positions(&self) -> [&PatternTerm; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        self.positions().into_iter().filter_map(PatternTerm::as_var)
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    projected: Vec<Variable>,
    patterns: Vec<TriplePattern>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("a query needs at least one pattern")]
    NoPatterns,
    #[error("a query needs at least one projected variable")]
    NoProjection,
    #[error("variable {0} is projected twice")]
    DuplicateProjection(Variable),
    #[error("projected variable {0} does not occur in any pattern")]
    UnboundProjection(Variable),
}

impl Query {
    pub fn new(projected: Vec<Variable>, patterns: Vec<TriplePattern>) -> Result<Self, QueryError> {
        if projected.is_empty() {
            return Err(QueryError::NoProjection);
        }
        if patterns.is_empty() {
            return Err(QueryError::NoPatterns);
        }
        let mut seen = BTreeSet::new();
        for v in &projected {
            if !seen.insert(v) {
                return Err(QueryError::DuplicateProjection(v.clone()));
            }
        }
        let bound: BTreeSet<&Variable> = patterns.iter().flat_map(|p| p.variables()).collect();
        if let Some(v) = projected.iter().find(|v| !bound.contains(v)) {
            return Err(QueryError::UnboundProjection(v.clone()));
        }
        Ok(Self {
            projected,
            patterns,
        })
    }

    pub fn projected(&self) -> &[Variable] {
        &self.projected
    }

    pub fn patterns(&self) -> &[TriplePattern] {
        &self.patterns
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT")?;
        for v in &self.projected {
            write!(f, " {v}")?;
        }
        f.write_str(" WHERE {")?;
        for p in &self.patterns {
            write!(f, " {p} .")?;
        }
        f.write_str(" }")
    }
}

/// A parse failure with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Bare(String),
    Var(Variable),
    Literal(String),
    LBrace,
    RBrace,
    Dot,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Bare(s) => write!(f, "`{s}`"),
            Tok::Var(v) => write!(f, "`{v}`"),
            Tok::Literal(_) => f.write_str("literal"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Dot => f.write_str("`.`"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    column: usize,
}

impl Pos {
    fn error(self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }
}

fn is_bare_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '{' | '}' | '"')
}

fn tokenize(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut toks = Vec::new();
    let mut chars = text.chars().peekable();
    let mut pos = Pos { line: 1, column: 1 };

    let advance = |c: char, pos: &mut Pos| {
        if c == '\n' {
            pos.line += 1;
            pos.column = 1;
        } else {
            pos.column += 1;
        }
    };

    while let Some(&c) = chars.peek() {
        let start = pos;
        if c.is_whitespace() {
            chars.next();
            advance(c, &mut pos);
            continue;
        }
        match c {
            '{' | '}' => {
                chars.next();
                advance(c, &mut pos);
                toks.push((if c == '{' { Tok::LBrace } else { Tok::RBrace }, start));
            }
            '"' => {
                chars.next();
                advance(c, &mut pos);
                let mut raw = String::new();
                let mut closed = false;
                while let Some(c) = chars.next() {
                    advance(c, &mut pos);
                    match c {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\\' => {
                            raw.push(c);
                            if let Some(n) = chars.next() {
                                advance(n, &mut pos);
                                raw.push(n);
                            }
                        }
                        c => raw.push(c),
                    }
                }
                if !closed {
                    return Err(start.error("unterminated literal"));
                }
                let value = unescape(&raw);
                if value.is_empty() {
                    return Err(start.error("empty literal"));
                }
                toks.push((Tok::Literal(value), start));
            }
            _ => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if !is_bare_char(c) {
                        break;
                    }
                    word.push(c);
                    chars.next();
                    advance(c, &mut pos);
                }
                // A trailing dot terminates the pattern rather than belonging
                // to the token: `cell1.` is `cell1` followed by `.`.
                let mut trailing = None;
                if word.len() > 1 && word.ends_with('.') {
                    let stripped = word.trim_end_matches('.');
                    if !stripped.is_empty() {
                        let dots = word.len() - stripped.len();
                        let first_dot_col = pos.column - dots;
                        trailing = Some((dots, first_dot_col));
                        word.truncate(stripped.len());
                    }
                }
                let tok = if word == "." {
                    Tok::Dot
                } else if let Some(name) = word.strip_prefix('?') {
                    match Variable::new(name) {
                        Some(v) => Tok::Var(v),
                        None => return Err(start.error(format!("invalid variable `{word}`"))),
                    }
                } else {
                    Tok::Bare(word)
                };
                toks.push((tok, start));
                if let Some((dots, col)) = trailing {
                    for i in 0..dots {
                        toks.push((
                            Tok::Dot,
                            Pos {
                                line: pos.line,
                                column: col + i,
                            },
                        ));
                    }
                }
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    idx: usize,
    end: Pos,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.idx).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<(Tok, Pos)> {
        let t = self.toks.get(self.idx).cloned();
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        match self.peek() {
            Some(tok) => self.pos().error(format!("expected {expected}, found {tok}")),
            None => self.pos().error(format!("expected {expected}, found end of input")),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Bare(w)) if w.eq_ignore_ascii_case(kw) => {
                self.idx += 1;
                Ok(())
            }
            _ => Err(self.unexpected(kw)),
        }
    }

    fn expect(&mut self, want: Tok, label: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.idx += 1;
            Ok(())
        } else {
            Err(self.unexpected(label))
        }
    }

    fn pattern_term(&mut self) -> Result<PatternTerm, ParseError> {
        let pos = self.pos();
        let term_err = |e: TermError| pos.error(e.to_string());
        match self.peek() {
            Some(Tok::Var(_) | Tok::Bare(_) | Tok::Literal(_)) => {}
            _ => return Err(self.unexpected("a term or variable")),
        }
        match self.next() {
            Some((Tok::Var(v), _)) => Ok(PatternTerm::Var(v)),
            Some((Tok::Bare(w), _)) => Term::iri(w).map(PatternTerm::Const).map_err(term_err),
            Some((Tok::Literal(l), _)) => Term::literal(l).map(PatternTerm::Const).map_err(term_err),
            _ => unreachable!("checked by peek"),
        }
    }
}

/// Parses query text. Never panics; every rejection is a [`ParseError`].
pub fn parse_query(text: &str) -> Result<Query, ParseError> {
    let toks = tokenize(text)?;
    let end = {
        let line = text.split('\n').count();
        let column = text.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        Pos { line, column }
    };
    let mut p = Parser { toks, idx: 0, end };

    p.keyword("SELECT")?;
    let mut projected = Vec::new();
    while let Some(Tok::Var(v)) = p.peek() {
        projected.push((v.clone(), p.pos()));
        p.idx += 1;
    }
    if projected.is_empty() {
        return Err(p.unexpected("a projected variable"));
    }
    p.keyword("WHERE")?;
    p.expect(Tok::LBrace, "`{`")?;

    let mut patterns = Vec::new();
    loop {
        if p.peek() == Some(&Tok::RBrace) {
            if patterns.is_empty() {
                return Err(p.unexpected("a triple pattern"));
            }
            p.idx += 1;
            break;
        }
        let subject = p.pattern_term()?;
        let predicate = p.pattern_term()?;
        let object = p.pattern_term()?;
        p.expect(Tok::Dot, "`.`")?;
        patterns.push(TriplePattern {
            subject,
            predicate,
            object,
        });
    }
    if p.peek().is_some() {
        return Err(p.unexpected("end of input"));
    }

    let positions: Vec<Pos> = projected.iter().map(|(_, pos)| *pos).collect();
    let vars: Vec<Variable> = projected.into_iter().map(|(v, _)| v).collect();
    Query::new(vars.clone(), patterns).map_err(|e| {
        let at = match &e {
            QueryError::DuplicateProjection(v) => vars.iter().rposition(|x| x == v),
            QueryError::UnboundProjection(v) => vars.iter().position(|x| x == v),
            _ => None,
        };
        at.map(|i| positions[i]).unwrap_or(Pos { line: 1, column: 1 }).error(e.to_string())
    })
}

/// The query's triple patterns, in source order, duplicates included.
pub fn extract_triple_patterns(q: &Query) -> Vec<TriplePattern> {
    q.patterns.clone()
}

/// Each pattern's predicate position paired with its index.
pub fn requested_predicates(p_req: &[TriplePattern]) -> Vec<(usize, PatternTerm)> {
    p_req
        .iter()
        .enumerate()
        .map(|(i, p)| (i, p.predicate.clone()))
        .collect()
}
