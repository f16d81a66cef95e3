//! In-memory triple store with named graphs.
//!
//! The knowledge base, the security ontology and every agent's
//! authorization profile live in one store as disjoint named graphs, so
//! revoking an agent is a single whole-graph retraction.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::query::{PatternTerm, TriplePattern};
use crate::term::{KnowledgeClass, Term, TermError, Triple};

/// Identifier of an agent. Non-empty, no whitespace (it is used as the
/// subject IRI of the agent's profile assertions).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(String);

impl AgentId {
    pub fn new(id: impl Into<String>) -> Result<Self, TermError> {
        let id = id.into();
        Term::iri(id.as_str())?;
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_term(&self) -> Term {
        Term::iri(self.0.as_str()).expect("validated at construction")
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GraphName {
    Kb,
    Ontology,
    AuthProfile(AgentId),
}

type Key = (Term, Term, Term);

#[derive(Debug, Clone, Default)]
pub struct TripleStore {
    graphs: HashMap<GraphName, BTreeMap<Key, KnowledgeClass>>,
}

impl TripleStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts `t` into `graph`, creating the graph if needed. Returns
    /// `false` when the fact was already present; its original knowledge
    /// class is kept.
    pub fn insert(&mut self, graph: GraphName, t: Triple) -> bool {
        let key = (t.subject, t.predicate, t.object);
        let g = self.graphs.entry(graph).or_default();
        if g.contains_key(&key) {
            return false;
        }
        g.insert(key, t.class);
        true
    }

    /// Removes every triple in `graph`, returning how many were removed.
    pub fn retract_graph(&mut self, graph: &GraphName) -> usize {
        self.graphs.remove(graph).map_or(0, |g| g.len())
    }

    /// All triples of `graph` unifying with `pattern`, in (s, p, o) order.
    /// Variables match any term; a variable repeated inside the pattern
    /// must bind the same term at each occurrence.
    pub fn match_pattern(&self, graph: &GraphName, pattern: &TriplePattern) -> Vec<Triple> {
        let Some(g) = self.graphs.get(graph) else {
            return Vec::new();
        };
        g.iter()
            .filter(|((s, p, o), _)| unifies(pattern, s, p, o))
            .map(|((s, p, o), class)| Triple {
                subject: s.clone(),
                predicate: p.clone(),
                object: o.clone(),
                class: *class,
            })
            .collect()
    }

    pub fn contains(&self, graph: &GraphName, s: &Term, p: &Term, o: &Term) -> bool {
        self.graphs
            .get(graph)
            .is_some_and(|g| g.contains_key(&(s.clone(), p.clone(), o.clone())))
    }

    pub fn len(&self, graph: &GraphName) -> usize {
        self.graphs.get(graph).map_or(0, |g| g.len())
    }

    pub fn is_empty(&self, graph: &GraphName) -> bool {
        self.len(graph) == 0
    }

    pub fn triples(&self, graph: &GraphName) -> Vec<Triple> {
        self.match_pattern(graph, &TriplePattern::any())
    }

    pub fn graph_names(&self) -> impl Iterator<Item = &GraphName> {
        self.graphs.keys()
    }
}

fn unifies(pattern: &TriplePattern, s: &Term, p: &Term, o: &Term) -> bool {
    let mut bound: [(Option<&str>, &Term); 3] = [(None, s), (None, p), (None, o)];
    for (i, (pos, term)) in pattern.positions().into_iter().zip([s, p, o]).enumerate() {
        match pos {
            PatternTerm::Const(c) => {
                if c != term {
                    return false;
                }
            }
            PatternTerm::Var(v) => {
                if bound[..i]
                    .iter()
                    .any(|(name, t)| *name == Some(v.name()) && *t != term)
                {
                    return false;
                }
                bound[i] = (Some(v.name()), term);
            }
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

/// Splits a line into whitespace-separated tokens, keeping double-quoted
/// literals (with `\"` escapes) intact. Stops at an unquoted `#`.
pub(crate) fn split_tokens(line: &str) -> Result<Vec<String>, String> {
    let mut tokens = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c == '#' {
            break;
        }
        let mut tok = String::new();
        if c == '"' {
            tok.push(chars.next().unwrap());
            let mut closed = false;
            while let Some(c) = chars.next() {
                tok.push(c);
                if c == '\\' {
                    if let Some(n) = chars.next() {
                        tok.push(n);
                    }
                } else if c == '"' {
                    closed = true;
                    break;
                }
            }
            if !closed {
                return Err("unterminated literal".to_string());
            }
        } else {
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() {
                    break;
                }
                tok.push(c);
                chars.next();
            }
        }
        tokens.push(tok);
    }
    Ok(tokens)
}

/// Parses the KB text format: one `<s> <p> <o> [static|dynamic]` per line,
/// `#` comments, class defaulting to static.
pub fn parse_kb(text: &str) -> Result<Vec<Triple>, FormatError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let err = |message: String| FormatError {
            line: i + 1,
            message,
        };
        let toks = split_tokens(line).map_err(err)?;
        if toks.is_empty() {
            continue;
        }
        if !(3..=4).contains(&toks.len()) {
            return Err(err(format!(
                "expected `<subject> <predicate> <object> [static|dynamic]`, found {} fields",
                toks.len()
            )));
        }
        let term = |t: &str| Term::parse(t).map_err(|e| err(e.to_string()));
        let class = match toks.get(3) {
            Some(c) => c.parse().map_err(|e: TermError| err(e.to_string()))?,
            None => KnowledgeClass::Static,
        };
        let triple = Triple::new(term(&toks[0])?, term(&toks[1])?, term(&toks[2])?, class)
            .map_err(|e| err(e.to_string()))?;
        out.push(triple);
    }
    Ok(out)
}
