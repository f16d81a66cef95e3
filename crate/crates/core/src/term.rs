//! RDF-style terms and triples.
//!
//! A [`Term`] is either a bare IRI token (no whitespace) or a double-quoted
//! literal. Stored [`Triple`]s never contain variables; variables only exist
//! in query patterns (see [`crate::query`]).

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("term text must not be empty")]
    Empty,
    #[error("IRI `{0}` contains whitespace")]
    Whitespace(String),
    #[error("{0} must be an IRI, found literal {1}")]
    NotAnIri(&'static str, String),
    #[error("unknown knowledge class `{0}` (expected `static` or `dynamic`)")]
    UnknownClass(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TermKind {
    Iri,
    Literal,
}

/// A constant term. Equality is kind + text; ordering is by text first so
/// that result rows sort by what the user sees.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    kind: TermKind,
    text: String,
}

impl Term {
    pub fn iri(text: impl Into<String>) -> Result<Self, TermError> {
        let text = text.into();
        if text.is_empty() {
            return Err(TermError::Empty);
        }
        if text.chars().any(char::is_whitespace) {
            return Err(TermError::Whitespace(text));
        }
        Ok(Self {
            kind: TermKind::Iri,
            text,
        })
    }

    pub fn literal(text: impl Into<String>) -> Result<Self, TermError> {
        let text = text.into();
        if text.is_empty() {
            return Err(TermError::Empty);
        }
        Ok(Self {
            kind: TermKind::Literal,
            text,
        })
    }

    pub fn kind(&self) -> TermKind {
        self.kind
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn is_iri(&self) -> bool {
        self.kind == TermKind::Iri
    }

    /// Parses the rendered form produced by `Display`: a double-quoted
    /// literal (with `\"` and `\\` escapes) or a bare IRI.
    pub fn parse(token: &str) -> Result<Self, TermError> {
        match token.strip_prefix('"').and_then(|t| t.strip_suffix('"')) {
            Some(inner) if token.len() >= 2 => Self::literal(unescape(inner)),
            _ => Self::iri(token),
        }
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        self.text
            .cmp(&other.text)
            .then_with(|| self.kind.cmp(&other.kind))
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TermKind::Iri => f.write_str(&self.text),
            TermKind::Literal => write!(f, "\"{}\"", escape(&self.text)),
        }
    }
}

pub(crate) fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

pub(crate) fn unescape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

/// Static knowledge is deployment-time (ontologies, agent definitions);
/// dynamic knowledge is runtime state such as session resource identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum KnowledgeClass {
    #[default]
    Static,
    Dynamic,
}

impl KnowledgeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            KnowledgeClass::Static => "static",
            KnowledgeClass::Dynamic => "dynamic",
        }
    }
}

impl std::str::FromStr for KnowledgeClass {
    type Err = TermError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "static" => Ok(KnowledgeClass::Static),
            "dynamic" => Ok(KnowledgeClass::Dynamic),
            other => Err(TermError::UnknownClass(other.to_string())),
        }
    }
}

/// A stored fact. Subject and predicate are always IRIs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
    pub class: KnowledgeClass,
}

impl Triple {
    pub fn new(
        subject: Term,
        predicate: Term,
        object: Term,
        class: KnowledgeClass,
    ) -> Result<Self, TermError> {
        if !subject.is_iri() {
            return Err(TermError::NotAnIri("subject", subject.to_string()));
        }
        if !predicate.is_iri() {
            return Err(TermError::NotAnIri("predicate", predicate.to_string()));
        }
        Ok(Self {
            subject,
            predicate,
            object,
            class,
        })
    }

    /// Convenience constructor for all-IRI static triples.
    pub fn iris(s: &str, p: &str, o: &str) -> Result<Self, TermError> {
        Self::new(Term::iri(s)?, Term::iri(p)?, Term::iri(o)?, KnowledgeClass::Static)
    }

    pub fn with_class(mut self, class: KnowledgeClass) -> Self {
        self.class = class;
        self
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {}",
            self.subject,
            self.predicate,
            self.object,
            self.class.as_str()
        )
    }
}
