//! Config files: flat `key = value` lines naming subcommand flags.
//!
//! Entries become flags inserted right after the subcommand name, so any flag
//! given on the command line comes later and overrides them.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgAction, CommandFactory};

use crate::args::Cli;
use crate::error::CliError;

/// Global flags that take a value, so their value is not a subcommand name.
const GLOBAL_WITH_VALUE: &[&str] = &["--config", "--workers"];

pub fn expand_argv(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let Some((at, name)) = subcommand_position(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let flags = flags_from_config(&text, &name, &path)?;
    let mut out = argv;
    out.splice(at + 1..at + 1, flags.into_iter().map(OsString::from));
    Ok(out)
}

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1).map(|a| a.to_string_lossy());
    while let Some(a) = it.next() {
        if a == "--" {
            break;
        }
        if a == "--config" {
            return it.next().map(|v| PathBuf::from(v.as_ref()));
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

fn subcommand_position(argv: &[OsString]) -> Option<(usize, String)> {
    let cmd = Cli::command();
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].to_string_lossy();
        if GLOBAL_WITH_VALUE.contains(&a.as_ref()) {
            i += 2;
            continue;
        }
        if a.starts_with('-') {
            i += 1;
            continue;
        }
        return cmd
            .find_subcommand(a.as_ref())
            .map(|s| (i, s.get_name().to_string()));
    }
    None
}

fn flags_from_config(text: &str, subcommand: &str, path: &Path) -> Result<Vec<String>, CliError> {
    let cmd = Cli::command();
    let sub = cmd.find_subcommand(subcommand).expect("known subcommand");
    let bad =
        |line: usize, msg: String| CliError::Usage(format!("{}:{line}: {msg}", path.display()));
    let mut flags = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(n + 1, "expected `key = value`".into()))?;
        let key = key.trim().replace('_', "-");
        let value = unquote(value.trim());
        if key == "workers" {
            flags.push(format!("--workers={value}"));
            continue;
        }
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()) && key != "config")
            .ok_or_else(|| bad(n + 1, format!("unknown key '{key}' for {subcommand}")))?;
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value {
                "true" => flags.push(format!("--{key}")),
                "false" => {}
                _ => return Err(bad(n + 1, format!("'{key}' takes true or false"))),
            }
        } else {
            flags.push(format!("--{key}={value}"));
        }
    }
    Ok(flags)
}

fn unquote(v: &str) -> &str {
    for q in ['"', '\''] {
        if let Some(inner) = v.strip_prefix(q).and_then(|s| s.strip_suffix(q)) {
            return inner;
        }
    }
    v
}
