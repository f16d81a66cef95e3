//! Command-line driver.
//!
//! Exit codes: 0 success, 1 denial or scenario failure, 2 usage or
//! configuration error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use triplegate::{parse_descriptor, GraphName, Outcome};

use crate::config::{build_engine, EngineConfig, LoadedInputs};
use crate::scenario::{run_scenario, ScenarioScript};

#[derive(Debug, Parser)]
#[command(name = "triplegate", version, about = "Triple-level authorization engine for knowledge-graph agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Serve the JSON API.
    Serve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `listen_address` from the config.
        #[arg(long)]
        listen: Option<String>,
    },
    /// Parse and validate every input referenced by the config.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a scenario script against a fresh engine.
    Scenario {
        #[arg(long)]
        config: PathBuf,
        script: PathBuf,
    },
    /// Register one agent and enforce one query.
    Query {
        #[arg(long)]
        config: PathBuf,
        /// Agent descriptor file.
        #[arg(long)]
        agent: PathBuf,
        query: String,
    },
}

const OK: u8 = 0;
const DENIED: u8 = 1;
const USAGE: u8 = 2;

pub fn main<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    ExitCode::from(run(args, &mut stdout.lock(), &mut stderr.lock()))
}

/// Runs the CLI with explicit output streams and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    match cli.command {
        Command::Serve { config, listen } => serve(&config, listen, err),
        Command::Check { config } => check(&config, out, err),
        Command::Scenario { config, script } => scenario(&config, &script, out, err),
        Command::Query { config, agent, query: text } => one_shot(&config, &agent, &text, out, err),
    }
}

fn load_config(path: &Path, err: &mut dyn Write) -> Option<EngineConfig> {
    match EngineConfig::load(path) {
        Ok(c) => Some(c),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            None
        }
    }
}

fn serve(config: &Path, listen: Option<String>, err: &mut dyn Write) -> u8 {
    let Some(cfg) = load_config(config, err) else {
        return USAGE;
    };
    let engine = match build_engine(&cfg) {
        Ok(e) => Arc::new(e),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return USAGE;
        }
    };
    let addr = listen.unwrap_or(cfg.listen_address);
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start runtime: {e}");
            return USAGE;
        }
    };
    let _ = writeln!(err, "serving on {addr}");
    match runtime.block_on(crate::api::serve(engine, &addr)) {
        Ok(()) => OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            USAGE
        }
    }
}

fn check(config: &Path, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let Some(cfg) = load_config(config, err) else {
        return USAGE;
    };
    match LoadedInputs::load(&cfg) {
        Ok(inputs) => {
            let dynamic = inputs
                .kb
                .iter()
                .filter(|t| t.class == triplegate::KnowledgeClass::Dynamic)
                .count();
            let _ = writeln!(
                out,
                "triples: {} ({} static, {} dynamic)",
                inputs.kb.len(),
                inputs.kb.len() - dynamic,
                dynamic
            );
            let _ = writeln!(out, "sub-property edges: {}", inputs.ontology.edge_count());
            let _ = writeln!(out, "admin scopes: {}", inputs.ontology.admin_scopes().len());
            let _ = writeln!(out, "roles: {}", inputs.policies.len());
            OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            USAGE
        }
    }
}

fn scenario(config: &Path, script: &Path, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let Some(cfg) = load_config(config, err) else {
        return USAGE;
    };
    let script = match ScenarioScript::load(script) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return USAGE;
        }
    };
    match run_scenario(&script, &cfg) {
        Ok(report) => {
            let _ = writeln!(out, "{report}");
            if report.passed() {
                OK
            } else {
                DENIED
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            USAGE
        }
    }
}

fn one_shot(config: &Path, agent: &Path, query: &str, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let Some(cfg) = load_config(config, err) else {
        return USAGE;
    };
    let descriptor = match std::fs::read_to_string(agent)
        .map_err(|e| e.to_string())
        .and_then(|t| parse_descriptor(&t).map_err(|e| e.to_string()))
    {
        Ok(d) => d,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", agent.display());
            return USAGE;
        }
    };
    let engine = match build_engine(&cfg) {
        Ok(e) => e,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return USAGE;
        }
    };
    let info = match engine.register(descriptor) {
        Ok(info) => info,
        Err(e) => {
            let _ = writeln!(out, "registration refused: {e}");
            return DENIED;
        }
    };
    let granted: Vec<String> = info.granted.iter().map(|t| t.to_string()).collect();
    let _ = writeln!(out, "registered {} granted [{}]", info.agent_id, granted.join(", "));

    let outcome = engine
        .enforce(&info.token, query)
        .expect("token was just issued");
    match &outcome {
        Outcome::Allowed(rows) => {
            let _ = writeln!(out, "allowed: {} rows", rows.len());
            for row in rows {
                let cells: Vec<String> = row.iter().map(|(v, t)| format!("{v}={t}")).collect();
                let _ = writeln!(out, "  {}", cells.join(" "));
            }
            OK
        }
        Outcome::AccessDenied(reason) => {
            let _ = writeln!(out, "access denied: {reason}");
            DENIED
        }
        Outcome::SessionRevoked(p) => {
            let remaining = engine
                .store()
                .read()
                .len(&GraphName::AuthProfile(info.agent_id.clone()));
            let _ = writeln!(
                out,
                "session revoked: predicate {p} is not authorized ({remaining} profile assertions remain)"
            );
            DENIED
        }
    }
}
