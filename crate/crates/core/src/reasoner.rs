//! Policy decision point: sub-property inference over an agent's granted
//! predicates and the security ontology.
//!
//! The only inference rule is
//!
//! ```text
//! CanAccess(A, p) <- CanAccess(A, q) AND subPropertyOf(p, q)
//! ```
//!
//! run to fixpoint: granting a parent predicate grants all of its
//! (transitive) sub-properties, never the other way round.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::query::{PatternTerm, TriplePattern};
use crate::session::Session;
use crate::store::{split_tokens, AgentId, FormatError, GraphName, TripleStore};
use crate::term::{Term, Triple};

/// Predicate linking an agent to a granted predicate in its profile graph.
pub const CAN_ACCESS: &str = "canAccess";
/// Predicate used when the ontology is materialized into the store.
pub const SUB_PROPERTY_OF: &str = "subPropertyOf";
/// Predicate used when admin scopes are materialized into the store.
pub const ADMIN_SCOPE: &str = "adminScope";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RoleName(String);

impl RoleName {
    pub fn new(name: impl Into<String>) -> Option<Self> {
        let name = name.into();
        (!name.is_empty() && !name.chars().any(char::is_whitespace)).then_some(Self(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RoleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("sub-property cycle through {}", .0.iter().map(Term::to_string).collect::<Vec<_>>().join(" -> "))]
pub struct CycleError(pub Vec<Term>);

/// The global security ontology. Immutable and acyclic by construction.
#[derive(Debug, Clone, Default)]
pub struct Ontology {
    edges: BTreeSet<(Term, Term)>,
    parents: HashMap<Term, Vec<Term>>,
    children: HashMap<Term, Vec<Term>>,
    admin_scopes: BTreeSet<RoleName>,
}

impl Ontology {
    /// Builds an ontology from `(child, parent)` sub-property edges,
    /// rejecting any cycle (including self-loops).
    pub fn new(
        edges: impl IntoIterator<Item = (Term, Term)>,
        admin_scopes: impl IntoIterator<Item = RoleName>,
    ) -> Result<Self, CycleError> {
        let edges: BTreeSet<(Term, Term)> = edges.into_iter().collect();
        let mut parents: HashMap<Term, Vec<Term>> = HashMap::new();
        let mut children: HashMap<Term, Vec<Term>> = HashMap::new();
        for (child, parent) in &edges {
            parents.entry(child.clone()).or_default().push(parent.clone());
            children.entry(parent.clone()).or_default().push(child.clone());
        }
        find_cycle(&parents).map_or(Ok(()), |c| Err(CycleError(c)))?;
        Ok(Self {
            edges,
            parents,
            children,
            admin_scopes: admin_scopes.into_iter().collect(),
        })
    }

    pub fn edges(&self) -> impl Iterator<Item = &(Term, Term)> {
        self.edges.iter()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn admin_scopes(&self) -> &BTreeSet<RoleName> {
        &self.admin_scopes
    }

    pub fn is_admin_scope(&self, role: &RoleName) -> bool {
        self.admin_scopes.contains(role)
    }

    /// Materializes the ontology as triples for the store's ontology graph.
    pub fn to_triples(&self) -> Vec<Triple> {
        let sub = Term::iri(SUB_PROPERTY_OF).expect("constant IRI");
        let admin = Term::iri(ADMIN_SCOPE).expect("constant IRI");
        let mut out: Vec<Triple> = self
            .edges
            .iter()
            .filter(|(c, _)| c.is_iri())
            .map(|(c, p)| Triple::new(c.clone(), sub.clone(), p.clone(), Default::default()))
            .filter_map(Result::ok)
            .collect();
        for role in &self.admin_scopes {
            if let Ok(t) = Triple::new(
                Term::iri(role.as_str()).expect("roles have no whitespace"),
                admin.clone(),
                Term::iri("true").expect("constant IRI"),
                Default::default(),
            ) {
                out.push(t);
            }
        }
        out
    }
}

/// Depth-first search for a cycle in the child -> parent relation.
fn find_cycle(parents: &HashMap<Term, Vec<Term>>) -> Option<Vec<Term>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    let mut marks: HashMap<&Term, Mark> = HashMap::new();
    let mut starts: Vec<&Term> = parents.keys().collect();
    starts.sort();

    for start in starts {
        if marks.contains_key(start) {
            continue;
        }
        // Explicit stack of (node, next parent index) to avoid recursion depth limits.
        let mut stack: Vec<(&Term, usize)> = vec![(start, 0)];
        marks.insert(start, Mark::Open);
        while let Some((node, idx)) = stack.last_mut() {
            let next = parents.get(*node).and_then(|ps| ps.get(*idx));
            *idx += 1;
            match next {
                None => {
                    marks.insert(*node, Mark::Done);
                    stack.pop();
                }
                Some(parent) => match marks.get(parent) {
                    Some(Mark::Done) => {}
                    Some(Mark::Open) => {
                        let from = stack.iter().position(|(n, _)| *n == parent).unwrap_or(0);
                        let mut cycle: Vec<Term> =
                            stack[from..].iter().map(|(n, _)| (*n).clone()).collect();
                        cycle.push(parent.clone());
                        return Some(cycle);
                    }
                    None => {
                        marks.insert(parent, Mark::Open);
                        stack.push((parent, 0));
                    }
                },
            }
        }
    }
    None
}

#[derive(Debug, Error)]
pub enum OntologyLoadError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Cycle(#[from] CycleError),
}

/// Parses the ontology text format: `sub <child> <parent>` and
/// `admin-scope <role>` lines, `#` comments.
pub fn parse_ontology(text: &str) -> Result<Ontology, OntologyLoadError> {
    let mut edges = Vec::new();
    let mut admins = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let err = |message: String| FormatError {
            line: i + 1,
            message,
        };
        let toks = split_tokens(line).map_err(err)?;
        match toks.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
            [] => {}
            ["sub", child, parent] => {
                let child = Term::iri(*child).map_err(|e| err(e.to_string()))?;
                let parent = Term::iri(*parent).map_err(|e| err(e.to_string()))?;
                edges.push((child, parent));
            }
            ["admin-scope", role] => {
                admins.push(RoleName::new(*role).ok_or_else(|| err(format!("bad role `{role}`")))?);
            }
            _ => {
                return Err(err(format!(
                    "expected `sub <child> <parent>` or `admin-scope <role>`, found `{}`",
                    line.trim()
                ))
                .into())
            }
        }
    }
    Ok(Ontology::new(edges, admins)?)
}

/// An agent's dynamic authorization graph, read from its profile graph in
/// the store (the store is the single source of truth).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthProfile {
    pub agent_id: AgentId,
    pub role: RoleName,
    pub granted: BTreeSet<Term>,
}

impl AuthProfile {
    pub fn load(store: &TripleStore, agent_id: &AgentId, role: &RoleName) -> Self {
        let pattern = TriplePattern::new(
            agent_id.as_term(),
            Term::iri(CAN_ACCESS).expect("constant IRI"),
            PatternTerm::Var(crate::query::Variable::new("p").expect("valid name")),
        );
        let granted = store
            .match_pattern(&GraphName::AuthProfile(agent_id.clone()), &pattern)
            .into_iter()
            .map(|t| t.object)
            .collect();
        Self {
            agent_id: agent_id.clone(),
            role: role.clone(),
            granted,
        }
    }

    pub fn is_active(&self) -> bool {
        !self.granted.is_empty()
    }
}

/// Granted predicates plus every transitive sub-property of them.
pub fn closure(granted: &BTreeSet<Term>, o: &Ontology) -> BTreeSet<Term> {
    let mut out = granted.clone();
    let mut frontier: Vec<&Term> = granted.iter().collect();
    while let Some(node) = frontier.pop() {
        for child in o.children.get(node).into_iter().flatten() {
            if out.insert(child.clone()) {
                frontier.push(child);
            }
        }
    }
    out
}

/// `G_auth ∪ O ⊢ CanAccess(agent, p)`: true iff `p` or one of its
/// ancestors under sub-property is granted.
pub fn inference_check(agent: &AuthProfile, p: &Term, o: &Ontology) -> bool {
    let mut seen: BTreeSet<&Term> = BTreeSet::new();
    let mut frontier = vec![p];
    while let Some(node) = frontier.pop() {
        if agent.granted.contains(node) {
            return true;
        }
        for parent in o.parents.get(node).into_iter().flatten() {
            if seen.insert(parent) {
                frontier.push(parent);
            }
        }
    }
    false
}

/// The hybrid authorization predicate
/// `Auth(A, s, p, o) <- Req(A, p) ∧ Profile(A, p) ∧ Role(A, R)`.
///
/// `request` is the pattern list currently being enforced (it supplies
/// `Req`); the profile is read from the store at call time.
pub fn auth_decision(
    session: &Session,
    request: &[TriplePattern],
    p: &Term,
    store: &TripleStore,
    onto: &Ontology,
    now: DateTime<Utc>,
) -> bool {
    let role_bound = session.is_live(now);
    let requested = request
        .iter()
        .any(|t| t.predicate.as_const() == Some(p));
    role_bound && requested && {
        let profile = AuthProfile::load(store, session.agent_id(), session.role());
        inference_check(&profile, p, onto)
    }
}
