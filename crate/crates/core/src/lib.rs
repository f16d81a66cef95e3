//! Triple-level zero-trust authorization for knowledge-graph agent queries.
//!
//! Every agent query is broken into triple patterns; each constant
//! predicate must be entailed by the agent's authorization profile plus the
//! security ontology's sub-property hierarchy, variable predicates are
//! refused outside administrative scope, results are pruned to the agent's
//! intent/domain context, and an authorization violation retracts the
//! agent's whole profile on the spot.
//!
//! ```
//! use triplegate::{parse_kb, parse_role_policy, AgentDescriptor, AgentContext, AgentId,
//!     Engine, Outcome, RoleName, Term};
//!
//! let engine = Engine::builder()
//!     .kb(parse_kb("agentM monitors cell1\nagentO actuates cell1\n").unwrap())
//!     .policies(parse_role_policy("role Monitor monitors\n").unwrap())
//!     .build();
//! let session = engine.register(AgentDescriptor {
//!     agent_id: AgentId::new("monitor-1").unwrap(),
//!     role: RoleName::new("Monitor").unwrap(),
//!     requested_predicates: [Term::iri("monitors").unwrap()].into(),
//!     context: AgentContext::default(),
//! }).unwrap();
//!
//! let ok = engine.enforce(&session.token, "SELECT ?a WHERE { ?a monitors cell1 . }").unwrap();
//! assert_eq!(ok.rows().unwrap().len(), 1);
//!
//! let pivot = engine.enforce(&session.token, "SELECT ?a WHERE { ?a actuates cell1 . }").unwrap();
//! assert!(matches!(pivot, Outcome::SessionRevoked(_)));
//! ```

pub mod audit;
pub mod engine;
pub mod enforcement;
pub mod query;
pub mod reasoner;
pub mod session;
pub mod store;
pub mod term;

pub use audit::{AuditEvent, AuditFilter, AuditLog, AuditRecord};
pub use engine::{Clock, Engine, EngineBuilder, EngineError, ManualClock, SessionInfo, SystemClock};
pub use enforcement::{
    apply_contextual_pruning, enforce, execute_query, project, solve, wildcard_guard, AgentContext,
    Binding, DenialReason, GuardDecision, Outcome, OutcomeKind,
};
pub use query::{
    extract_triple_patterns, parse_query, requested_predicates, ParseError, PatternTerm, Query,
    QueryError, TriplePattern, Variable,
};
pub use reasoner::{
    auth_decision, closure, inference_check, parse_ontology, AuthProfile, CycleError, Ontology,
    OntologyLoadError, RoleName,
};
pub use session::{
    parse_descriptor, parse_role_policy, register, AgentDescriptor, RegistrationError,
    RolePolicies, RolePolicy, Session, SessionState, SessionToken, Validity,
};
pub use store::{parse_kb, AgentId, FormatError, GraphName, TripleStore};
pub use term::{KnowledgeClass, Term, TermError, TermKind, Triple};
