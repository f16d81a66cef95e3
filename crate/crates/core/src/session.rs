//! Agent registration, profile derivation and session lifecycle.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Duration, Utc};
use rand::RngCore;
use thiserror::Error;

use crate::enforcement::AgentContext;
use crate::reasoner::{RoleName, CAN_ACCESS};
use crate::store::{split_tokens, AgentId, FormatError, GraphName, TripleStore};
use crate::term::{KnowledgeClass, Term, Triple};

pub const DEFAULT_TTL_SECONDS: i64 = 3600;

/// What an agent presents at registration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentDescriptor {
    pub agent_id: AgentId,
    pub role: RoleName,
    pub requested_predicates: BTreeSet<Term>,
    pub context: AgentContext,
}

/// Opaque 128-bit session token rendered as 32 lowercase hex digits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SessionToken(String);

impl SessionToken {
    pub fn generate() -> Self {
        let mut bytes = [0u8; 16];
        rand::thread_rng().fill_bytes(&mut bytes);
        Self(bytes.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn from_string(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SessionToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionState {
    Active,
    Revoked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validity {
    Active,
    Revoked,
    Expired,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub session_id: SessionToken,
    pub agent: AgentDescriptor,
    pub granted: BTreeSet<Term>,
    state: SessionState,
    expired: bool,
    pub created_at: DateTime<Utc>,
    pub expires_at: DateTime<Utc>,
}

impl Session {
    pub fn agent_id(&self) -> &AgentId {
        &self.agent.agent_id
    }

    pub fn role(&self) -> &RoleName {
        &self.agent.role
    }

    pub fn context(&self) -> &AgentContext {
        &self.agent.context
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    /// Active and not yet expired at `now`. Does not mutate.
    pub fn is_live(&self, now: DateTime<Utc>) -> bool {
        self.state == SessionState::Active && now < self.expires_at
    }

    /// Marks the session revoked and retracts the agent's profile graph.
    /// Returns the number of assertions removed; 0 on repeat calls.
    pub fn revoke(&mut self, store: &mut TripleStore) -> usize {
        if self.state == SessionState::Revoked {
            return 0;
        }
        self.state = SessionState::Revoked;
        store.retract_graph(&GraphName::AuthProfile(self.agent.agent_id.clone()))
    }

    /// Checks the session at `now`. The first call observing expiry
    /// retracts the profile exactly like [`Session::revoke`]; the
    /// session then stays expired.
    pub fn validate(&mut self, now: DateTime<Utc>, store: &mut TripleStore) -> Validity {
        if self.needs_expiry(now) {
            self.revoke(store);
            self.expired = true;
        }
        self.status(now)
    }

    /// The validity at `now` without applying a pending expiry retraction.
    pub fn status(&self, now: DateTime<Utc>) -> Validity {
        match self.state {
            SessionState::Revoked if self.expired => Validity::Expired,
            SessionState::Revoked => Validity::Revoked,
            SessionState::Active if now >= self.expires_at => Validity::Expired,
            SessionState::Active => Validity::Active,
        }
    }

    /// Whether an expiry retraction is due and has not been applied yet.
    pub fn needs_expiry(&self, now: DateTime<Utc>) -> bool {
        self.state == SessionState::Active && now >= self.expires_at
    }
}

/// The predicates a role may ever be granted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RolePolicy {
    pub role: RoleName,
    pub allowed_predicates: BTreeSet<Term>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RolePolicies(BTreeMap<RoleName, BTreeSet<Term>>);

impl RolePolicies {
    pub fn new(policies: impl IntoIterator<Item = RolePolicy>) -> Self {
        let mut map: BTreeMap<RoleName, BTreeSet<Term>> = BTreeMap::new();
        for p in policies {
            map.entry(p.role).or_default().extend(p.allowed_predicates);
        }
        Self(map)
    }

    pub fn allowed(&self, role: &RoleName) -> Option<&BTreeSet<Term>> {
        self.0.get(role)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn roles(&self) -> impl Iterator<Item = &RoleName> {
        self.0.keys()
    }
}

/// Parses `role <name> <predicate> [<predicate> ...]` lines.
pub fn parse_role_policy(text: &str) -> Result<RolePolicies, FormatError> {
    let mut seen = BTreeSet::new();
    let mut policies = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let err = |message: String| FormatError {
            line: i + 1,
            message,
        };
        let toks = split_tokens(line).map_err(err)?;
        let Some((kw, rest)) = toks.split_first() else {
            continue;
        };
        if kw != "role" || rest.len() < 2 {
            return Err(err(
                "expected `role <name> <predicate> [<predicate> ...]`".to_string(),
            ));
        }
        let role = RoleName::new(rest[0].as_str())
            .ok_or_else(|| err(format!("bad role name `{}`", rest[0])))?;
        if !seen.insert(role.clone()) {
            return Err(err(format!("role `{role}` declared twice")));
        }
        let allowed_predicates = rest[1..]
            .iter()
            .map(|p| Term::iri(p.as_str()).map_err(|e| err(e.to_string())))
            .collect::<Result<_, _>>()?;
        policies.push(RolePolicy {
            role,
            allowed_predicates,
        });
    }
    Ok(RolePolicies::new(policies))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistrationError {
    #[error("agent `{0}` already has an active session")]
    DuplicateAgent(AgentId),
    #[error("role `{0}` is not defined in the role policy")]
    UnknownRole(RoleName),
    #[error("none of the requested predicates is allowed for role `{0}`")]
    EmptyGrant(RoleName),
}

/// Registers an agent: grants `requested ∩ allowed(role)` and writes one
/// `(agent, canAccess, p)` assertion per granted predicate into the
/// agent's profile graph.
pub fn register(
    desc: AgentDescriptor,
    policy: &RolePolicies,
    store: &mut TripleStore,
    now: DateTime<Utc>,
    ttl: Duration,
) -> Result<Session, RegistrationError> {
    let graph = GraphName::AuthProfile(desc.agent_id.clone());
    if !store.is_empty(&graph) {
        return Err(RegistrationError::DuplicateAgent(desc.agent_id));
    }
    let allowed = policy
        .allowed(&desc.role)
        .ok_or_else(|| RegistrationError::UnknownRole(desc.role.clone()))?;
    let granted: BTreeSet<Term> = desc
        .requested_predicates
        .intersection(allowed)
        .cloned()
        .collect();
    if granted.is_empty() {
        return Err(RegistrationError::EmptyGrant(desc.role));
    }

    let subject = desc.agent_id.as_term();
    let can_access = Term::iri(CAN_ACCESS).expect("constant IRI");
    for p in &granted {
        let t = Triple::new(subject.clone(), can_access.clone(), p.clone(), KnowledgeClass::Dynamic)
            .expect("agent id and canAccess are IRIs");
        store.insert(graph.clone(), t);
    }

    Ok(Session {
        session_id: SessionToken::generate(),
        agent: desc,
        granted,
        state: SessionState::Active,
        expired: false,
        created_at: now,
        expires_at: now + ttl,
    })
}

/// Parses an agent descriptor file: `key = value` lines with keys `agent`,
/// `role`, `request`, `intent` and `domain`. The last three take
/// space-separated lists and may repeat.
pub fn parse_descriptor(text: &str) -> Result<AgentDescriptor, FormatError> {
    let mut agent = None;
    let mut role = None;
    let mut requested = BTreeSet::new();
    let mut context = AgentContext::default();
    let mut last_line = 0;
    for (i, line) in text.lines().enumerate() {
        last_line = i + 1;
        let err = |message: String| FormatError {
            line: i + 1,
            message,
        };
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err("expected `key = value`".to_string()))?;
        let (key, value) = (key.trim(), value.trim());
        let terms = || {
            value
                .split_whitespace()
                .map(|t| Term::iri(t).map_err(|e| err(e.to_string())))
                .collect::<Result<Vec<_>, _>>()
        };
        match key {
            "agent" => agent = Some(AgentId::new(value).map_err(|e| err(e.to_string()))?),
            "role" => {
                role = Some(RoleName::new(value).ok_or_else(|| err(format!("bad role `{value}`")))?)
            }
            "request" => requested.extend(terms()?),
            "intent" => context.intent_ids.extend(terms()?),
            "domain" => context.domain_ids.extend(terms()?),
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }
    let missing = |what: &str| FormatError {
        line: last_line,
        message: format!("descriptor is missing `{what}`"),
    };
    let agent_id = agent.ok_or_else(|| missing("agent"))?;
    let role = role.ok_or_else(|| missing("role"))?;
    if requested.is_empty() {
        return Err(missing("request"));
    }
    Ok(AgentDescriptor {
        agent_id,
        role,
        requested_predicates: requested,
        context,
    })
}
