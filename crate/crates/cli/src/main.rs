//! `dfc`: compile policies, check routes, run routes against stub services
//! and benchmark the decision point.
//!
//! Exit codes: 0 success / valid route, 1 policy violation (`check`) or a
//! dropped or errored run (`run`), 2 usage or input error.

mod manifest;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use dfc_core::compiler::{compile, CompiledPolicy};
use dfc_core::logic::parse_term;
use dfc_core::pdp::{bench_decide, format_csv, BenchConfig};
use dfc_core::policy::{parse_policy, Effect};
use dfc_core::route::{parse_route, Route};
use dfc_core::runtime::{Engine, Env, RunConfig, RunOutcome, RunStatus};
use dfc_core::verifier::{render_verdict, verify_with, VerifyOptions};
use serde::Serialize;

use manifest::Manifest;

#[derive(Parser, Debug)]
#[command(name = "dfc", version, about = "Data-flow control for message routes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compile a policy and dump its clauses.
    Compile {
        policy: PathBuf,
        /// Write the clause dump here instead of standard output.
        #[arg(long)]
        emit_clauses: Option<PathBuf>,
    },
    /// Statically check a route against a policy.
    Check {
        route: PathBuf,
        policy: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// One counterexample per violating path instead of per rule and
        /// statement.
        #[arg(long)]
        all_paths: bool,
        /// Refuse messages no rule matches.
        #[arg(long)]
        default_deny: bool,
    },
    /// Execute routes with stub services.
    Run {
        #[arg(long)]
        policy: PathBuf,
        /// Stub-service manifest (TOML).
        #[arg(long)]
        services: PathBuf,
        /// Append audit records (JSON lines) here.
        #[arg(long)]
        audit: Option<PathBuf>,
        /// Global variables, loaded before and saved after the runs (JSON).
        #[arg(long)]
        env: Option<PathBuf>,
        /// Start from empty global variables even if the env file exists.
        #[arg(long)]
        env_reset: bool,
        /// Run routes one after another on shared global variables instead
        /// of concurrently on copies.
        #[arg(long)]
        sequential: bool,
        #[arg(long)]
        default_deny: bool,
        /// Resolution depth limit for choice conditions.
        #[arg(long, default_value_t = 10_000)]
        depth_limit: usize,
        #[arg(required = true)]
        routes: Vec<PathBuf>,
    },
    /// Benchmark decision time and memory; prints CSV.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [100, 500, 1000, 5000])]
        rules: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [1])]
        labels: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure that maps to exit code 2.
#[derive(Debug)]
struct InputError(anyhow::Error);

fn input<T>(r: Result<T>) -> std::result::Result<T, InputError> {
    r.map_err(InputError)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_policy(path: &Path) -> Result<CompiledPolicy> {
    let text = read(path)?;
    let ast = parse_policy(&text).with_context(|| format!("{}", path.display()))?;
    Ok(compile(&ast))
}

fn load_route(path: &Path) -> Result<Route> {
    let text = read(path)?;
    parse_route(&text).with_context(|| format!("{}", path.display()))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn default_effect(deny: bool) -> Effect {
    if deny {
        Effect::Drop
    } else {
        Effect::Allow
    }
}

fn load_env(path: Option<&Path>, reset: bool) -> Result<Env> {
    let Some(path) = path else {
        return Ok(Env::new());
    };
    if reset || !path.exists() {
        return Ok(Env::new());
    }
    let raw: BTreeMap<String, String> = serde_json::from_str(&read(path)?)
        .with_context(|| format!("{}: expected an object of term strings", path.display()))?;
    raw.into_iter()
        .map(|(k, v)| {
            let t = parse_term(&v).with_context(|| format!("{}: {k}", path.display()))?;
            Ok((k, t))
        })
        .collect()
}

fn save_env(path: &Path, env: &Env) -> Result<()> {
    let raw: BTreeMap<&String, String> = env.iter().map(|(k, v)| (k, v.to_string())).collect();
    let text = serde_json::to_string_pretty(&raw)? + "\n";
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

#[derive(Serialize)]
struct RunReport<'a> {
    #[serde(flatten)]
    outcome: &'a RunOutcome,
    sinks: BTreeMap<String, Vec<String>>,
}

fn run(cli: Cli) -> std::result::Result<u8, InputError> {
    match cli.command {
        Command::Compile {
            policy,
            emit_clauses,
        } => {
            let p = input(load_policy(&policy))?;
            input(write_out(emit_clauses.as_deref(), &p.to_clause_text()))?;
            Ok(0)
        }
        Command::Check {
            route,
            policy,
            format,
            all_paths,
            default_deny,
        } => {
            let r = input(load_route(&route))?;
            let p = input(load_policy(&policy))?;
            let report = verify_with(
                &r,
                &p,
                VerifyOptions {
                    default_effect: default_effect(default_deny),
                    all_paths,
                },
            );
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            let text = match format {
                Format::Text => render_verdict(&report.verdict, r.name()),
                Format::Json => {
                    serde_json::to_string_pretty(&report).expect("reports serialize") + "\n"
                }
            };
            input(write_out(None, &text))?;
            Ok(if report.verdict.is_valid() { 0 } else { 1 })
        }
        Command::Run {
            policy,
            services,
            audit,
            env,
            env_reset,
            sequential,
            default_deny,
            depth_limit,
            routes,
        } => {
            let p = input(load_policy(&policy))?;
            let manifest = input(read(&services).and_then(|t| {
                Manifest::parse(&t).with_context(|| format!("{}", services.display()))
            }))?;
            let (registry, sinks) = input(manifest.services())?;
            let obligations = input(manifest.obligations())?;
            let trigger = input(manifest.input())?;
            let routes: Vec<Route> = input(routes.iter().map(|r| load_route(r)).collect())?;
            let mut delta = input(load_env(env.as_deref(), env_reset))?;
            let engine = Engine::new(&p, &registry, &obligations).with_config(RunConfig {
                default_effect: default_effect(default_deny),
                depth_limit,
                ..RunConfig::default()
            });

            let outcomes: Vec<RunOutcome> = if sequential || routes.len() == 1 {
                let mut out = Vec::new();
                for r in &routes {
                    out.push(input(
                        engine.execute(r, trigger.clone(), &mut delta).map_err(Into::into),
                    )?);
                }
                out
            } else {
                let results: Vec<_> = std::thread::scope(|s| {
                    let handles: Vec<_> = routes
                        .iter()
                        .map(|r| {
                            let mut local = delta.clone();
                            let engine = &engine;
                            let trigger = trigger.clone();
                            s.spawn(move || engine.execute(r, trigger, &mut local).map(|o| (o, local)))
                        })
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("route threads do not panic"))
                        .collect()
                });
                let mut out = Vec::new();
                for res in results {
                    let (o, local) = input(res.map_err(Into::into))?;
                    // later routes win on shared keys
                    delta.extend(local);
                    out.push(o);
                }
                out
            };

            if let Some(path) = &env {
                input(save_env(path, &delta))?;
            }
            if let Some(path) = &audit {
                let text: String = outcomes.iter().map(RunOutcome::audit_jsonl).collect();
                input(fs::write(path, text).with_context(|| format!("cannot write {}", path.display())))?;
            }
            let sinks = sinks.lock().unwrap_or_else(|e| e.into_inner()).clone();
            let mut text = String::new();
            for o in &outcomes {
                let report = RunReport {
                    outcome: o,
                    sinks: sinks.clone(),
                };
                text.push_str(&serde_json::to_string(&report).expect("outcomes serialize"));
                text.push('\n');
            }
            input(write_out(None, &text))?;
            let ok = outcomes.iter().all(|o| o.status == RunStatus::Completed);
            Ok(if ok { 0 } else { 1 })
        }
        Command::Bench {
            rules,
            labels,
            trials,
            seed,
            out,
        } => {
            if rules.is_empty() || labels.is_empty() || rules.contains(&0) || labels.contains(&0) {
                return Err(InputError(anyhow::anyhow!("rule and label counts must be positive")));
            }
            let rows = bench_decide(&BenchConfig {
                rules,
                labels,
                trials,
                seed,
            });
            input(write_out(out.as_deref(), &format_csv(&rows)))?;
            Ok(0)
        }
    }
}

/// The error chain joined by `: `, skipping causes already spelled out by
/// the message above them.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

#[global_allocator]
static ALLOC: dfc_core::pdp::CountingAllocator = dfc_core::pdp::CountingAllocator;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(InputError(e)) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(2)
        }
    }
}
