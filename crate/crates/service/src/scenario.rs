//! Scripted end-to-end scenarios.
//!
//! One step per line, `#` comments:
//!
//! ```text
//! register <descriptor-file> [ok|duplicate-agent|unknown-role|empty-grant]
//! query <agent-id> <allowed|denied|revoked> <query text...>
//! revoke <agent-id> [<expected-count>]
//! advance <seconds>
//! assert-audit <event> <count>
//! ```
//!
//! Descriptor paths resolve against the script's directory. `assert-audit`
//! counts records of that event kind in the whole log so far.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{Duration, Utc};
use thiserror::Error;
use triplegate::{
    parse_descriptor, AgentDescriptor, AgentId, AuditEvent, Engine, EngineError, ManualClock,
    OutcomeKind, RegistrationError, SessionToken,
};

use crate::config::{ConfigError, EngineConfig, LoadedInputs};

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("{path}:{line}: {message}")]
    Syntax {
        path: String,
        line: usize,
        message: String,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegisterExpectation {
    Ok,
    DuplicateAgent,
    UnknownRole,
    EmptyGrant,
}

impl RegisterExpectation {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "ok" => Self::Ok,
            "duplicate-agent" => Self::DuplicateAgent,
            "unknown-role" => Self::UnknownRole,
            "empty-grant" => Self::EmptyGrant,
            _ => return None,
        })
    }

    fn of(result: &Result<(), EngineError>) -> Option<Self> {
        match result {
            Ok(()) => Some(Self::Ok),
            Err(EngineError::Registration(RegistrationError::DuplicateAgent(_))) => Some(Self::DuplicateAgent),
            Err(EngineError::Registration(RegistrationError::UnknownRole(_))) => Some(Self::UnknownRole),
            Err(EngineError::Registration(RegistrationError::EmptyGrant(_))) => Some(Self::EmptyGrant),
            Err(EngineError::UnknownToken) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Register {
        descriptor: AgentDescriptor,
        expect: RegisterExpectation,
    },
    Query {
        agent: AgentId,
        expect: OutcomeKind,
        query: String,
    },
    Revoke {
        agent: AgentId,
        expect_count: Option<usize>,
    },
    Advance {
        seconds: i64,
    },
    AssertAudit {
        event: AuditEvent,
        count: usize,
    },
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Register { descriptor, .. } => {
                write!(f, "register {} as {}", descriptor.agent_id, descriptor.role)
            }
            Step::Query { agent, expect, query } => write!(f, "query {agent} expecting {expect}: {query}"),
            Step::Revoke { agent, .. } => write!(f, "revoke {agent}"),
            Step::Advance { seconds } => write!(f, "advance clock {seconds}s"),
            Step::AssertAudit { event, count } => write!(f, "assert {count} {event} record(s)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptLine {
    pub line: usize,
    pub step: Step,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScenarioScript {
    pub name: String,
    pub steps: Vec<ScriptLine>,
}

impl ScenarioScript {
    pub fn load(path: &Path) -> Result<Self, ScriptError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScriptError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::parse(&name, &text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn parse(name: &str, text: &str, base_dir: &Path) -> Result<Self, ScriptError> {
        let mut steps = Vec::new();
        let mut registered: BTreeSet<AgentId> = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| ScriptError::Syntax {
                path: name.to_string(),
                line,
                message,
            };
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (cmd, rest) = trimmed.split_once(char::is_whitespace).unwrap_or((trimmed, ""));
            let rest = rest.trim();
            let args: Vec<&str> = rest.split_whitespace().collect();
            let agent = |s: &str| AgentId::new(s).map_err(|e| err(e.to_string()));
            let known = |a: &AgentId, registered: &BTreeSet<AgentId>| {
                if registered.contains(a) {
                    Ok(())
                } else {
                    Err(err(format!("agent `{a}` is used before any register step")))
                }
            };
            let step = match (cmd, args.as_slice()) {
                ("register", [file, expect @ ..]) if expect.len() <= 1 => {
                    let path = base_dir.join(file);
                    let text = std::fs::read_to_string(&path).map_err(|source| ScriptError::Io {
                        path: path.clone(),
                        source,
                    })?;
                    let descriptor =
                        parse_descriptor(&text).map_err(|e| err(format!("{}: {e}", path.display())))?;
                    let expect = match expect.first() {
                        None => RegisterExpectation::Ok,
                        Some(e) => RegisterExpectation::parse(e)
                            .ok_or_else(|| err(format!("unknown registration expectation `{e}`")))?,
                    };
                    registered.insert(descriptor.agent_id.clone());
                    Step::Register { descriptor, expect }
                }
                ("query", [a, expect, _, ..]) => {
                    let agent = agent(a)?;
                    known(&agent, &registered)?;
                    let expect: OutcomeKind = expect.parse().map_err(err)?;
                    // Everything after the expectation, verbatim.
                    let after_agent = rest[a.len()..].trim_start();
                    let query = after_agent[expect_len(after_agent)..].trim().to_string();
                    Step::Query { agent, expect, query }
                }
                ("revoke", [a, count @ ..]) if count.len() <= 1 => {
                    let agent = agent(a)?;
                    known(&agent, &registered)?;
                    let expect_count = count
                        .first()
                        .map(|c| c.parse().map_err(|_| err(format!("bad count `{c}`"))))
                        .transpose()?;
                    Step::Revoke { agent, expect_count }
                }
                ("advance", [secs]) => Step::Advance {
                    seconds: secs
                        .parse()
                        .ok()
                        .filter(|s: &i64| *s >= 0)
                        .ok_or_else(|| err(format!("bad seconds `{secs}`")))?,
                },
                ("assert-audit", [event, count]) => Step::AssertAudit {
                    event: event.parse().map_err(err)?,
                    count: count.parse().map_err(|_| err(format!("bad count `{count}`")))?,
                },
                _ => return Err(err(format!("cannot parse step `{trimmed}`"))),
            };
            steps.push(ScriptLine { line, step });
        }
        Ok(Self {
            name: name.to_string(),
            steps,
        })
    }
}

fn expect_len(s: &str) -> usize {
    s.find(char::is_whitespace).unwrap_or(s.len())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepReport {
    pub line: usize,
    pub description: String,
    pub passed: bool,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioReport {
    pub name: String,
    pub steps: Vec<StepReport>,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.steps.iter().all(|s| s.passed)
    }

    pub fn failure(&self) -> Option<&StepReport> {
        self.steps.iter().find(|s| !s.passed)
    }
}

impl fmt::Display for ScenarioReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            writeln!(
                f,
                "[{}] line {}: {} -> {}",
                if s.passed { "ok" } else { "FAIL" },
                s.line,
                s.description,
                s.message
            )?;
        }
        write!(
            f,
            "scenario {}: {}",
            self.name,
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

/// Runs `script` against a fresh engine built from `config`, on a manual
/// clock so `advance` steps are exact.
pub fn run_scenario(script: &ScenarioScript, config: &EngineConfig) -> Result<ScenarioReport, ScriptError> {
    let inputs = LoadedInputs::load(config)?;
    let clock = Arc::new(ManualClock::new(Utc::now()));
    let engine = inputs.engine(config, Some(clock.clone()))?;
    Ok(run_scenario_on(script, &engine, &clock))
}

/// Runs `script` against an existing engine, stopping at the first failed
/// step.
pub fn run_scenario_on(script: &ScenarioScript, engine: &Engine, clock: &ManualClock) -> ScenarioReport {
    let mut tokens: HashMap<AgentId, SessionToken> = HashMap::new();
    let mut steps = Vec::new();
    for ScriptLine { line, step } in &script.steps {
        let (passed, message) = run_step(step, engine, clock, &mut tokens);
        steps.push(StepReport {
            line: *line,
            description: step.to_string(),
            passed,
            message,
        });
        if !passed {
            break;
        }
    }
    ScenarioReport {
        name: script.name.clone(),
        steps,
    }
}

fn run_step(
    step: &Step,
    engine: &Engine,
    clock: &ManualClock,
    tokens: &mut HashMap<AgentId, SessionToken>,
) -> (bool, String) {
    match step {
        Step::Register { descriptor, expect } => {
            let result = engine.register(descriptor.clone()).map(|info| {
                tokens.insert(info.agent_id.clone(), info.token.clone());
            });
            let got = RegisterExpectation::of(&result);
            let message = match &result {
                Ok(()) => "registered".to_string(),
                Err(e) => e.to_string(),
            };
            (got == Some(*expect), message)
        }
        Step::Query { agent, expect, query } => {
            let Some(token) = tokens.get(agent) else {
                return (false, format!("agent `{agent}` has no session"));
            };
            match engine.enforce(token, query) {
                Ok(outcome) => {
                    let detail = match &outcome {
                        triplegate::Outcome::Allowed(rows) => format!("{} rows", rows.len()),
                        triplegate::Outcome::AccessDenied(r) => r.to_string(),
                        triplegate::Outcome::SessionRevoked(p) => format!("violating predicate {p}"),
                    };
                    (outcome.kind() == *expect, format!("{}: {detail}", outcome.kind()))
                }
                Err(e) => (false, e.to_string()),
            }
        }
        Step::Revoke { agent, expect_count } => {
            let Some(token) = tokens.get(agent) else {
                return (false, format!("agent `{agent}` has no session"));
            };
            match engine.revoke(token) {
                Ok(n) => (
                    expect_count.is_none_or(|c| c == n),
                    format!("{n} assertions removed"),
                ),
                Err(e) => (false, e.to_string()),
            }
        }
        Step::Advance { seconds } => {
            clock.advance(Duration::seconds(*seconds));
            (true, format!("now {}", clock_now(clock)))
        }
        Step::AssertAudit { event, count } => {
            let got = engine.audit_log().count(*event);
            (got == *count, format!("{got} {event} record(s)"))
        }
    }
}

fn clock_now(clock: &ManualClock) -> String {
    use triplegate::Clock;
    clock.now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}
