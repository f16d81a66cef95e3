//! Thread-safe engine tying the store, ontology, role policy, sessions
//! and audit log together.
//!
//! Locking: the store sits behind one reader/writer lock; each session has
//! its own mutex, held for the whole of an enforce or revoke call, so calls
//! for one session serialize while distinct sessions run concurrently.

use std::collections::HashMap;
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use parking_lot::{Mutex, RwLock};
use thiserror::Error;

use crate::audit::{AuditEvent, AuditFilter, AuditLog, AuditRecord};
use crate::enforcement::{enforce, Outcome};
use crate::reasoner::Ontology;
use crate::session::{
    register, AgentDescriptor, RegistrationError, RolePolicies, Session, SessionToken, Validity,
};
use crate::store::{AgentId, GraphName, TripleStore};
use crate::term::Triple;

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// A clock that only moves when told to.
#[derive(Debug)]
pub struct ManualClock(Mutex<DateTime<Utc>>);

impl ManualClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        Self(Mutex::new(start))
    }

    pub fn set(&self, t: DateTime<Utc>) {
        *self.0.lock() = t;
    }

    pub fn advance(&self, d: Duration) {
        *self.0.lock() += d;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.0.lock()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Registration(#[from] RegistrationError),
    #[error("unknown session token")]
    UnknownToken,
}

/// What a caller learns about a session after registering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionInfo {
    pub token: SessionToken,
    pub agent_id: AgentId,
    pub granted: Vec<crate::term::Term>,
    pub created_at: DateTime<Utc>,
    pub expires_at: DateTime<Utc>,
}

impl From<&Session> for SessionInfo {
    fn from(s: &Session) -> Self {
        Self {
            token: s.session_id.clone(),
            agent_id: s.agent_id().clone(),
            granted: s.granted.iter().cloned().collect(),
            created_at: s.created_at,
            expires_at: s.expires_at,
        }
    }
}

pub struct Engine {
    store: RwLock<TripleStore>,
    ontology: Ontology,
    policies: RolePolicies,
    audit: AuditLog,
    sessions: RwLock<HashMap<SessionToken, Arc<Mutex<Session>>>>,
    active: Mutex<HashMap<AgentId, SessionToken>>,
    ttl: Duration,
    clock: Arc<dyn Clock>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("sessions", &self.sessions.read().len())
            .field("ttl", &self.ttl)
            .finish_non_exhaustive()
    }
}

pub struct EngineBuilder {
    kb: Vec<Triple>,
    ontology: Ontology,
    policies: RolePolicies,
    ttl: Duration,
    clock: Arc<dyn Clock>,
    audit: AuditLog,
}

impl EngineBuilder {
    pub fn kb(mut self, triples: impl IntoIterator<Item = Triple>) -> Self {
        self.kb.extend(triples);
        self
    }

    pub fn ontology(mut self, o: Ontology) -> Self {
        self.ontology = o;
        self
    }

    pub fn policies(mut self, p: RolePolicies) -> Self {
        self.policies = p;
        self
    }

    pub fn ttl(mut self, ttl: Duration) -> Self {
        self.ttl = ttl;
        self
    }

    pub fn clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn audit(mut self, audit: AuditLog) -> Self {
        self.audit = audit;
        self
    }

    pub fn build(self) -> Engine {
        let mut store = TripleStore::new();
        for t in self.kb {
            store.insert(GraphName::Kb, t);
        }
        for t in self.ontology.to_triples() {
            store.insert(GraphName::Ontology, t);
        }
        Engine {
            store: RwLock::new(store),
            ontology: self.ontology,
            policies: self.policies,
            audit: self.audit,
            sessions: RwLock::new(HashMap::new()),
            active: Mutex::new(HashMap::new()),
            ttl: self.ttl,
            clock: self.clock,
        }
    }
}

impl Engine {
    pub fn builder() -> EngineBuilder {
        EngineBuilder {
            kb: Vec::new(),
            ontology: Ontology::default(),
            policies: RolePolicies::default(),
            ttl: Duration::seconds(crate::session::DEFAULT_TTL_SECONDS),
            clock: Arc::new(SystemClock),
            audit: AuditLog::new(),
        }
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    pub fn ontology(&self) -> &Ontology {
        &self.ontology
    }

    pub fn policies(&self) -> &RolePolicies {
        &self.policies
    }

    pub fn audit_log(&self) -> &AuditLog {
        &self.audit
    }

    pub fn store(&self) -> &RwLock<TripleStore> {
        &self.store
    }

    fn session(&self, token: &SessionToken) -> Result<Arc<Mutex<Session>>, EngineError> {
        self.sessions
            .read()
            .get(token)
            .cloned()
            .ok_or(EngineError::UnknownToken)
    }

    /// Applies a due expiry retraction and logs it.
    fn expire_if_due(&self, session: &mut Session, now: DateTime<Utc>) {
        if session.needs_expiry(now) {
            let mut store = self.store.write();
            let removed = store.len(&GraphName::AuthProfile(session.agent_id().clone()));
            session.validate(now, &mut store);
            drop(store);
            self.audit.log(
                now,
                session.agent_id(),
                AuditEvent::Revocation,
                None,
                format!("session expired; {removed} profile assertions retracted"),
            );
        }
    }

    pub fn register(&self, desc: AgentDescriptor) -> Result<SessionInfo, EngineError> {
        let now = self.now();
        let mut active = self.active.lock();
        if let Some(token) = active.get(&desc.agent_id).cloned() {
            let existing = self.session(&token)?;
            let mut existing = existing.lock();
            self.expire_if_due(&mut existing, now);
            if existing.status(now) == Validity::Active {
                return Err(RegistrationError::DuplicateAgent(desc.agent_id).into());
            }
            active.remove(&desc.agent_id);
        }

        let session = register(desc, &self.policies, &mut self.store.write(), now, self.ttl)?;
        let info = SessionInfo::from(&session);
        self.audit.log(
            now,
            &info.agent_id,
            AuditEvent::Registration,
            None,
            format!(
                "role {} granted {}",
                session.role(),
                info.granted.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" ")
            ),
        );
        active.insert(info.agent_id.clone(), info.token.clone());
        self.sessions
            .write()
            .insert(info.token.clone(), Arc::new(Mutex::new(session)));
        Ok(info)
    }

    pub fn enforce(&self, token: &SessionToken, query_text: &str) -> Result<Outcome, EngineError> {
        let session = self.session(token)?;
        let mut session = session.lock();
        let now = self.now();
        Ok(enforce(
            &mut session,
            query_text,
            &self.store,
            &self.ontology,
            &self.audit,
            now,
        ))
    }

    /// Revokes the session and retracts its profile. Idempotent: repeat
    /// calls return 0 and log nothing.
    pub fn revoke(&self, token: &SessionToken) -> Result<usize, EngineError> {
        let session = self.session(token)?;
        let mut session = session.lock();
        let now = self.now();
        self.expire_if_due(&mut session, now);
        if session.status(now) != Validity::Active {
            return Ok(0);
        }
        let removed = session.revoke(&mut self.store.write());
        self.audit.log(
            now,
            session.agent_id(),
            AuditEvent::Revocation,
            None,
            format!("explicit revoke; {removed} profile assertions retracted"),
        );
        Ok(removed)
    }

    pub fn validate(&self, token: &SessionToken) -> Result<Validity, EngineError> {
        let session = self.session(token)?;
        let mut session = session.lock();
        let now = self.now();
        self.expire_if_due(&mut session, now);
        Ok(session.status(now))
    }

    pub fn session_info(&self, token: &SessionToken) -> Result<SessionInfo, EngineError> {
        Ok(SessionInfo::from(&*self.session(token)?.lock()))
    }

    pub fn query_log(&self, filter: &AuditFilter) -> Vec<AuditRecord> {
        self.audit.query_log(filter)
    }
}
