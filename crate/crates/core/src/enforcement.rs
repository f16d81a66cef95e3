//! Policy enforcement point.
//!
//! [`enforce`] runs the full per-query pipeline:
//!
//! 1. validate the session (revoked or expired sessions are denied outright);
//! 2. parse the query and extract its triple patterns;
//! 3. for each pattern in order: a variable predicate is denied unless the
//!    agent's role has administrative ontology scope; a constant predicate
//!    must pass the inference check, and a failure logs a violation and
//!    revokes the session;
//! 4. execute the query over the knowledge base;
//! 5. prune rows outside the agent's intent/domain context.
//!
//! Wildcard probes are denied without touching session state. Inference
//! failures are treated as compromise and kill the session.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Utc};
use parking_lot::RwLock;

use crate::audit::{AuditEvent, AuditLog};
use crate::query::{
    extract_triple_patterns, parse_query, requested_predicates, ParseError, PatternTerm, Query,
    TriplePattern, Variable,
};
use crate::reasoner::{auth_decision, Ontology};
use crate::session::{Session, Validity};
use crate::store::{GraphName, TripleStore};
use crate::term::Term;

/// Reserved predicate tying an instance to an intent.
pub const ASSOCIATED_WITH_INTENT: &str = "associatedWithIntent";
/// Reserved predicate tying an instance to a domain.
pub const IN_DOMAIN: &str = "inDomain";

/// The operational instance an agent is restricted to. Empty sets mean no
/// instance is declared, so only unassociated data is visible.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AgentContext {
    pub intent_ids: BTreeSet<Term>,
    pub domain_ids: BTreeSet<Term>,
}

impl AgentContext {
    fn admits(&self, t: &Term) -> bool {
        self.intent_ids.contains(t) || self.domain_ids.contains(t)
    }
}

/// One solution row. Ordered entry-wise by (variable name, term), which
/// gives the deterministic row order of query results.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Binding(BTreeMap<Variable, Term>);

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, v: &Variable) -> Option<&Term> {
        self.0.get(v)
    }

    pub fn insert(&mut self, v: Variable, t: Term) -> Option<Term> {
        self.0.insert(v, t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Variable, &Term)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The term at `pos` under this binding, if it is bound or constant.
    pub fn resolve<'a>(&'a self, pos: &'a PatternTerm) -> Option<&'a Term> {
        match pos {
            PatternTerm::Const(t) => Some(t),
            PatternTerm::Var(v) => self.0.get(v),
        }
    }

    fn substitute(&self, p: &TriplePattern) -> TriplePattern {
        let sub = |pos: &PatternTerm| match self.resolve(pos) {
            Some(t) => PatternTerm::Const(t.clone()),
            None => pos.clone(),
        };
        TriplePattern {
            subject: sub(&p.subject),
            predicate: sub(&p.predicate),
            object: sub(&p.object),
        }
    }
}

impl FromIterator<(Variable, Term)> for Binding {
    fn from_iter<I: IntoIterator<Item = (Variable, Term)>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DenialReason {
    /// The session was revoked before this query.
    Revoked,
    /// The session outlived its time bound.
    Expired,
    /// Pattern `index` has a variable predicate and the role has no
    /// administrative scope.
    VariablePredicate { index: usize },
    Parse(ParseError),
}

impl DenialReason {
    pub fn code(&self) -> &'static str {
        match self {
            DenialReason::Revoked => "revoked",
            DenialReason::Expired => "expired",
            DenialReason::VariablePredicate { .. } => "variable-predicate",
            DenialReason::Parse(_) => "parse-error",
        }
    }
}

impl fmt::Display for DenialReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DenialReason::Revoked => f.write_str("session revoked"),
            DenialReason::Expired => f.write_str("session expired"),
            DenialReason::VariablePredicate { index } => {
                write!(f, "variable predicate in pattern {index}")
            }
            DenialReason::Parse(e) => write!(f, "parse error at {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Allowed(Vec<Binding>),
    AccessDenied(DenialReason),
    /// Carries the first predicate that failed the inference check.
    SessionRevoked(Term),
}

impl Outcome {
    pub fn kind(&self) -> OutcomeKind {
        match self {
            Outcome::Allowed(_) => OutcomeKind::Allowed,
            Outcome::AccessDenied(_) => OutcomeKind::AccessDenied,
            Outcome::SessionRevoked(_) => OutcomeKind::SessionRevoked,
        }
    }

    pub fn rows(&self) -> Option<&[Binding]> {
        match self {
            Outcome::Allowed(rows) => Some(rows),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutcomeKind {
    Allowed,
    AccessDenied,
    SessionRevoked,
}

impl OutcomeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeKind::Allowed => "allowed",
            OutcomeKind::AccessDenied => "access-denied",
            OutcomeKind::SessionRevoked => "session-revoked",
        }
    }
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for OutcomeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "allowed" => Ok(OutcomeKind::Allowed),
            "access-denied" | "accessdenied" | "denied" => Ok(OutcomeKind::AccessDenied),
            "session-revoked" | "sessionrevoked" | "revoked" => Ok(OutcomeKind::SessionRevoked),
            other => Err(format!("unknown outcome `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuardDecision {
    Pass,
    Deny,
}

/// Denies a variable predicate unless the session's role holds
/// administrative ontology scope.
pub fn wildcard_guard(pattern: &TriplePattern, session: &Session, onto: &Ontology) -> GuardDecision {
    if pattern.predicate.is_variable() && !onto.is_admin_scope(session.role()) {
        GuardDecision::Deny
    } else {
        GuardDecision::Pass
    }
}

/// All full solutions of the conjunctive `patterns` over the KB graph:
/// every variable of every pattern is bound. Deduplicated and sorted.
pub fn solve(patterns: &[TriplePattern], store: &TripleStore) -> Vec<Binding> {
    let mut partial = vec![Binding::new()];
    for pattern in patterns {
        let mut next = Vec::new();
        for row in &partial {
            let ground = row.substitute(pattern);
            for t in store.match_pattern(&GraphName::Kb, &ground) {
                let mut extended = row.clone();
                for (pos, term) in ground.positions().into_iter().zip([t.subject, t.predicate, t.object]) {
                    if let PatternTerm::Var(v) = pos {
                        extended.insert(v.clone(), term);
                    }
                }
                next.push(extended);
            }
        }
        partial = next;
        if partial.is_empty() {
            break;
        }
    }
    partial.sort();
    partial.dedup();
    partial
}

/// Restricts rows to `vars`, deduplicating and sorting the result.
pub fn project(rows: &[Binding], vars: &[Variable]) -> Vec<Binding> {
    let mut out: Vec<Binding> = rows
        .iter()
        .map(|row| {
            vars.iter()
                .filter_map(|v| row.get(v).map(|t| (v.clone(), t.clone())))
                .collect()
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Runs `q` against the KB graph and returns its projected rows.
pub fn execute_query(q: &Query, store: &TripleStore) -> Vec<Binding> {
    project(&solve(q.patterns(), store), q.projected())
}

/// Context association objects of `subject` in the KB.
fn associations(subject: &Term, store: &TripleStore) -> Vec<Term> {
    [ASSOCIATED_WITH_INTENT, IN_DOMAIN]
        .into_iter()
        .flat_map(|p| {
            let pattern = TriplePattern::new(
                subject.clone(),
                Term::iri(p).expect("constant IRI"),
                Variable::new("ctx").expect("valid name"),
            );
            store.match_pattern(&GraphName::Kb, &pattern)
        })
        .map(|t| t.object)
        .collect()
}

/// Keeps a row iff every subject term of `patterns` under the row either
/// has no intent/domain association in the KB or has one inside `ctx`.
/// `rows` must be full solutions of `patterns` (see [`solve`]).
pub fn apply_contextual_pruning(
    patterns: &[TriplePattern],
    rows: Vec<Binding>,
    ctx: &AgentContext,
    store: &TripleStore,
) -> Vec<Binding> {
    let mut verdicts: BTreeMap<Term, bool> = BTreeMap::new();
    let mut in_scope = |subject: &Term| {
        *verdicts.entry(subject.clone()).or_insert_with(|| {
            let assoc = associations(subject, store);
            assoc.is_empty() || assoc.iter().any(|a| ctx.admits(a))
        })
    };
    rows.into_iter()
        .filter(|row| {
            patterns
                .iter()
                .filter_map(|p| row.resolve(&p.subject))
                .all(&mut in_scope)
        })
        .collect()
}

/// Enforces one agent query end to end. Never fails: every problem is an
/// [`Outcome`]. Callers must serialize calls per session.
pub fn enforce(
    session: &mut Session,
    query_text: &str,
    store: &RwLock<TripleStore>,
    onto: &Ontology,
    audit: &AuditLog,
    now: DateTime<Utc>,
) -> Outcome {
    let agent = session.agent_id().clone();

    if session.needs_expiry(now) {
        let removed = {
            let mut w = store.write();
            let n = w.len(&GraphName::AuthProfile(agent.clone()));
            session.validate(now, &mut w);
            n
        };
        audit.log(
            now,
            &agent,
            AuditEvent::Revocation,
            None,
            format!("session expired; {removed} profile assertions retracted"),
        );
    }
    let deny = |reason: DenialReason, predicate: Option<Term>| {
        audit.log(now, &agent, AuditEvent::Denial, predicate, reason.to_string());
        Outcome::AccessDenied(reason)
    };
    match session.status(now) {
        Validity::Active => {}
        Validity::Revoked => return deny(DenialReason::Revoked, None),
        Validity::Expired => return deny(DenialReason::Expired, None),
    }

    let query = match parse_query(query_text) {
        Ok(q) => q,
        Err(e) => return deny(DenialReason::Parse(e), None),
    };
    let patterns = extract_triple_patterns(&query);

    // Guard pass first: a wildcard probe is denied without sanction even
    // when another pattern would fail the inference check.
    let requested = requested_predicates(&patterns);
    for (index, predicate) in &requested {
        if predicate.is_variable() && wildcard_guard(&patterns[*index], session, onto) == GuardDecision::Deny {
            return deny(DenialReason::VariablePredicate { index: *index }, None);
        }
    }

    let kb = store.read();
    let violation = requested.into_iter().find_map(|(_, predicate)| match predicate {
        PatternTerm::Const(p) if !auth_decision(session, &patterns, &p, &kb, onto, now) => Some(p),
        _ => None,
    });

    if let Some(p) = violation {
        drop(kb);
        tracing::warn!(agent = %agent, predicate = %p, "authorization violation; revoking session");
        audit.log(
            now,
            &agent,
            AuditEvent::Violation,
            Some(p.clone()),
            format!("predicate {p} not entailed by profile"),
        );
        let removed = session.revoke(&mut store.write());
        audit.log(
            now,
            &agent,
            AuditEvent::Revocation,
            Some(p.clone()),
            format!("{removed} profile assertions retracted"),
        );
        return Outcome::SessionRevoked(p);
    }

    let full = solve(&patterns, &kb);
    let pruned = apply_contextual_pruning(&patterns, full, session.context(), &kb);
    drop(kb);
    let rows = project(&pruned, query.projected());
    audit.log(
        now,
        &agent,
        AuditEvent::Allowed,
        None,
        format!("{} rows", rows.len()),
    );
    Outcome::Allowed(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reasoner::{parse_ontology, RoleName};
    use crate::session::{parse_role_policy, register, AgentDescriptor, SessionState};
    use crate::store::{parse_kb, AgentId};
    use chrono::{Duration, TimeZone};

    fn iri(s: &str) -> Term {
        Term::iri(s).unwrap()
    }

    fn var(s: &str) -> Variable {
        Variable::new(s).unwrap()
    }

    fn now() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2026, 5, 1, 12, 0, 0).unwrap()
    }

    const KB: &str = "\
agentM monitors cell1
agentM monitors cell2
agentO actuates cell1
cell1 associatedWithIntent intent7 dynamic
cell2 associatedWithIntent intent9 dynamic
cell1 hasLatency \"12ms\" dynamic
cell2 hasLatency \"30ms\" dynamic
";

    struct Fixture {
        store: RwLock<TripleStore>,
        onto: Ontology,
        audit: AuditLog,
    }

    fn fixture() -> Fixture {
        let mut store = TripleStore::new();
        for t in parse_kb(KB).unwrap() {
            store.insert(GraphName::Kb, t);
        }
        Fixture {
            store: RwLock::new(store),
            onto: parse_ontology("sub hasLatency observes\nadmin-scope Admin\n").unwrap(),
            audit: AuditLog::new(),
        }
    }

    fn session(f: &Fixture, id: &str, role: &str, req: &[&str], intents: &[&str]) -> Session {
        let policy = parse_role_policy(
            "role Monitor monitors observes hasLatency\nrole Admin monitors\nrole Optimizer actuates\n",
        )
        .unwrap();
        let desc = AgentDescriptor {
            agent_id: AgentId::new(id).unwrap(),
            role: RoleName::new(role).unwrap(),
            requested_predicates: req.iter().map(|s| iri(s)).collect(),
            context: AgentContext {
                intent_ids: intents.iter().map(|s| iri(s)).collect(),
                domain_ids: BTreeSet::new(),
            },
        };
        register(desc, &policy, &mut f.store.write(), now(), Duration::seconds(3600)).unwrap()
    }

    fn row(pairs: &[(&str, &str)]) -> Binding {
        pairs.iter().map(|(v, t)| (var(v), iri(t))).collect()
    }

    #[test]
    fn guard_examples() {
        let f = fixture();
        let mon = session(&f, "M", "Monitor", &["monitors"], &[]);
        let admin = session(&f, "Adm", "Admin", &["monitors"], &[]);
        let wild = TriplePattern::new(var("x"), var("p"), iri("cell1"));
        let fixed = TriplePattern::new(var("x"), iri("monitors"), var("y"));
        let all = TriplePattern::new(var("x"), var("p"), var("y"));
        assert_eq!(wildcard_guard(&wild, &mon, &f.onto), GuardDecision::Deny);
        assert_eq!(wildcard_guard(&fixed, &mon, &f.onto), GuardDecision::Pass);
        assert_eq!(wildcard_guard(&all, &admin, &f.onto), GuardDecision::Pass);
    }

    #[test]
    fn execute_single_match_and_empty_kb() {
        let mut store = TripleStore::new();
        store.insert(GraphName::Kb, crate::term::Triple::iris("agentM", "monitors", "cell1").unwrap());
        let q = parse_query("SELECT ?x WHERE { ?x monitors cell1 . }").unwrap();
        assert_eq!(execute_query(&q, &store), vec![row(&[("x", "agentM")])]);
        assert!(execute_query(&q, &TripleStore::new()).is_empty());
    }

    #[test]
    fn execute_join_sorted_and_deduplicated() {
        let f = fixture();
        let q = parse_query("SELECT ?a WHERE { ?a monitors ?c . ?c associatedWithIntent ?i . }").unwrap();
        assert_eq!(execute_query(&q, &f.store.read()), vec![row(&[("a", "agentM")])]);
        let q = parse_query("SELECT ?c ?a WHERE { ?a ?p ?c . ?c associatedWithIntent intent7 . }").unwrap();
        assert_eq!(
            execute_query(&q, &f.store.read()),
            vec![row(&[("a", "agentM"), ("c", "cell1")]), row(&[("a", "agentO"), ("c", "cell1")])]
        );
    }

    #[test]
    fn pruning_examples() {
        let f = fixture();
        let store = f.store.read();
        let pats = vec![TriplePattern::new(var("c"), iri("hasLatency"), var("l"))];
        let rows = solve(&pats, &store);
        assert_eq!(rows.len(), 2);

        let ctx7 = AgentContext {
            intent_ids: BTreeSet::from([iri("intent7")]),
            ..Default::default()
        };
        let kept = apply_contextual_pruning(&pats, rows.clone(), &ctx7, &store);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].get(&var("c")), Some(&iri("cell1")));

        let ctx9_only = AgentContext {
            intent_ids: BTreeSet::from([iri("intentX")]),
            ..Default::default()
        };
        assert!(apply_contextual_pruning(&pats, rows, &ctx9_only, &store).is_empty());

        // agentM has no associations; it survives any context.
        let pats = vec![TriplePattern::new(var("a"), iri("monitors"), iri("cell1"))];
        let rows = solve(&pats, &store);
        assert_eq!(apply_contextual_pruning(&pats, rows, &AgentContext::default(), &store).len(), 1);
    }

    #[test]
    fn domain_ids_also_admit() {
        let f = fixture();
        let store = f.store.read();
        let pats = vec![TriplePattern::new(iri("cell2"), iri("hasLatency"), var("l"))];
        let ctx = AgentContext {
            domain_ids: BTreeSet::from([iri("intent9")]),
            ..Default::default()
        };
        assert_eq!(apply_contextual_pruning(&pats, solve(&pats, &store), &ctx, &store).len(), 1);
    }

    #[test]
    fn enforce_allowed_with_pruning() {
        let f = fixture();
        let mut s = session(&f, "M", "Monitor", &["monitors", "observes"], &["intent7"]);
        let out = enforce(&mut s, "SELECT ?c ?l WHERE { ?c hasLatency ?l . }", &f.store, &f.onto, &f.audit, now());
        let rows = out.rows().expect("allowed");
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].get(&var("c")), Some(&iri("cell1")));
        assert_eq!(f.audit.count(AuditEvent::Allowed), 1);
    }

    #[test]
    fn enforce_violation_revokes() {
        let f = fixture();
        let mut s = session(&f, "M", "Monitor", &["monitors"], &["intent7"]);
        let out = enforce(&mut s, "SELECT ?x WHERE { ?x actuates ?y . }", &f.store, &f.onto, &f.audit, now());
        assert_eq!(out, Outcome::SessionRevoked(iri("actuates")));
        assert_eq!(s.state(), SessionState::Revoked);
        assert!(f.store.read().is_empty(&GraphName::AuthProfile(s.agent_id().clone())));
        let events: Vec<_> = f.audit.records().iter().map(|r| r.event).collect();
        assert_eq!(events, [AuditEvent::Violation, AuditEvent::Revocation]);
        assert_eq!(f.audit.records()[0].predicate, Some(iri("actuates")));

        let again = enforce(&mut s, "SELECT ?x WHERE { ?x monitors cell1 . }", &f.store, &f.onto, &f.audit, now());
        assert_eq!(again, Outcome::AccessDenied(DenialReason::Revoked));
    }

    #[test]
    fn first_violation_is_reported() {
        let f = fixture();
        let mut s = session(&f, "M", "Monitor", &["monitors"], &[]);
        let out = enforce(
            &mut s,
            "SELECT ?x WHERE { ?x monitors ?c . ?x grounds ?c . ?x actuates ?c . }",
            &f.store,
            &f.onto,
            &f.audit,
            now(),
        );
        assert_eq!(out, Outcome::SessionRevoked(iri("grounds")));
        assert_eq!(f.audit.count(AuditEvent::Violation), 1);
    }

    #[test]
    fn enforce_wildcard_denied_without_mutation() {
        let f = fixture();
        let mut s = session(&f, "M", "Monitor", &["monitors"], &[]);
        let before = f.store.read().triples(&GraphName::AuthProfile(s.agent_id().clone()));
        let out = enforce(&mut s, "SELECT ?x WHERE { ?x ?p cell1 . }", &f.store, &f.onto, &f.audit, now());
        assert_eq!(out, Outcome::AccessDenied(DenialReason::VariablePredicate { index: 0 }));
        assert_eq!(s.state(), SessionState::Active);
        assert_eq!(f.store.read().triples(&GraphName::AuthProfile(s.agent_id().clone())), before);
        assert_eq!(f.audit.count(AuditEvent::Denial), 1);
        assert_eq!(f.audit.count(AuditEvent::Violation), 0);
    }

    #[test]
    fn wildcard_check_precedes_later_violation() {
        let f = fixture();
        let mut s = session(&f, "M", "Monitor", &["monitors"], &[]);
        let out = enforce(
            &mut s,
            "SELECT ?x WHERE { ?x ?p cell1 . ?x actuates ?y . }",
            &f.store,
            &f.onto,
            &f.audit,
            now(),
        );
        assert_eq!(out.kind(), OutcomeKind::AccessDenied);
        assert_eq!(s.state(), SessionState::Active);
    }

    #[test]
    fn wildcard_denied_even_after_earlier_violation() {
        let f = fixture();
        let mut s = session(&f, "M", "Monitor", &["monitors"], &[]);
        let out = enforce(
            &mut s,
            "SELECT ?x WHERE { ?x actuates ?y . ?x ?p cell1 . }",
            &f.store,
            &f.onto,
            &f.audit,
            now(),
        );
        assert_eq!(out, Outcome::AccessDenied(DenialReason::VariablePredicate { index: 1 }));
        assert_eq!(s.state(), SessionState::Active);
        assert_eq!(f.audit.count(AuditEvent::Violation), 0);
    }

    #[test]
    fn admin_wildcard_is_executed_and_pruned() {
        let f = fixture();
        let mut s = session(&f, "Adm", "Admin", &["monitors"], &["intent7"]);
        let out = enforce(&mut s, "SELECT ?p ?o WHERE { cell2 ?p ?o . }", &f.store, &f.onto, &f.audit, now());
        assert_eq!(out, Outcome::Allowed(vec![]));
        let out = enforce(&mut s, "SELECT ?p WHERE { cell1 ?p intent7 . }", &f.store, &f.onto, &f.audit, now());
        assert_eq!(out, Outcome::Allowed(vec![row(&[("p", "associatedWithIntent")])]));
    }

    #[test]
    fn parse_error_is_a_denial() {
        let f = fixture();
        let mut s = session(&f, "M", "Monitor", &["monitors"], &[]);
        let out = enforce(&mut s, "SELECT ?x WHERE {", &f.store, &f.onto, &f.audit, now());
        assert!(matches!(out, Outcome::AccessDenied(DenialReason::Parse(_))));
        assert_eq!(s.state(), SessionState::Active);
    }

    #[test]
    fn expired_session_is_denied_and_retracted() {
        let f = fixture();
        let mut s = session(&f, "M", "Monitor", &["monitors"], &[]);
        let later = now() + Duration::seconds(3600);
        let out = enforce(&mut s, "SELECT ?x WHERE { ?x monitors cell1 . }", &f.store, &f.onto, &f.audit, later);
        assert_eq!(out, Outcome::AccessDenied(DenialReason::Expired));
        assert!(f.store.read().is_empty(&GraphName::AuthProfile(s.agent_id().clone())));
        assert_eq!(f.audit.count(AuditEvent::Revocation), 1);
        enforce(&mut s, "SELECT ?x WHERE { ?x monitors cell1 . }", &f.store, &f.onto, &f.audit, later);
        assert_eq!(f.audit.count(AuditEvent::Revocation), 1);
    }

    #[test]
    fn determinism() {
        let f = fixture();
        let mut s = session(&f, "M", "Monitor", &["monitors", "observes"], &["intent7", "intent9"]);
        let q = "SELECT ?c ?l WHERE { ?c hasLatency ?l . agentM monitors ?c . }";
        let a = enforce(&mut s, q, &f.store, &f.onto, &f.audit, now());
        let b = enforce(&mut s, q, &f.store, &f.onto, &f.audit, now());
        assert_eq!(a, b);
        assert_eq!(a.rows().unwrap().len(), 2);
    }
}
