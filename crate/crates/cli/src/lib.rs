//! Batch front end for the `sasdp` library.
//!
//! Every command writes its artifact to `--out` (or stdout) together with a
//! `<out>.manifest.json` sidecar from which `sasdp replay` reproduces the
//! run bit for bit.

pub mod args;
pub mod commands;
pub mod error;
pub mod json;
pub mod manifest;
pub mod suites;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

use args::{Cli, Command, GlobalOpts, ReplayArgs};
use commands::{check_inputs, execute, Outcome};
use error::{CliError, CliResult};
use manifest::{sha256_hex, write_artifacts, RunManifest, ARTIFACT_VERSION};

/// Parses `args` (program name first), runs the command and returns the exit code:
/// 0 on success, 1 on numeric, search or validation failure, 2 on usage or parse errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Replay(r) => replay(r, &cli.global),
        command => execute(&cli.global, command).and_then(|o| emit(&cli.global, command, o, None)),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("sasdp: {e}");
            e.exit_code()
        }
    }
}

/// Writes the outcome and returns whether the command's own checks passed.
/// With `expected`, the fresh output digests must equal the recorded ones.
fn emit(
    global: &GlobalOpts,
    command: &Command,
    outcome: Outcome,
    expected: Option<&RunManifest>,
) -> CliResult<bool> {
    let mut manifest = RunManifest::new(global, command);
    manifest.inputs = outcome.inputs.clone();
    if let Some(recorded) = expected {
        check_inputs(&recorded.inputs, &outcome.inputs)?;
    }
    match &global.out {
        Some(out) => manifest = write_artifacts(out, &outcome.artifacts, manifest)?,
        None => {
            for a in &outcome.artifacts {
                manifest
                    .outputs
                    .insert(a.role.to_string(), sha256_hex(&a.bytes));
            }
            let primary = outcome
                .artifacts
                .iter()
                .find(|a| a.suffix.is_none())
                .expect("primary artifact");
            std::io::stdout().write_all(&primary.bytes)?;
        }
    }
    if let Some(recorded) = expected {
        for (role, digest) in &recorded.outputs {
            if manifest.outputs.get(role) != Some(digest) {
                return Err(CliError::Failure(format!(
                    "replay diverged: output {role} differs from the recorded run"
                )));
            }
        }
    }
    Ok(outcome.success)
}

fn replay(r: &ReplayArgs, global: &GlobalOpts) -> CliResult<bool> {
    let recorded = RunManifest::read(&r.manifest)?;
    if recorded.artifact_version != ARTIFACT_VERSION {
        eprintln!(
            "sasdp: manifest was written by version {}, replaying with {ARTIFACT_VERSION}",
            recorded.artifact_version
        );
    }
    let replay_global = recorded.global_opts(global.out.clone());
    let outcome = execute(&replay_global, &recorded.parameters)?;
    emit(
        &replay_global,
        &recorded.parameters,
        outcome,
        Some(&recorded),
    )
}
