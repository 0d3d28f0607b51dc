//! Flat `key = value` configuration files.
//!
//! Keys are flag names without the leading dashes (`t_grid` and `t-grid`
//! are the same key). Entries before any `[section]` header, or under
//! `[common]`, apply to every command; entries under `[couple]` and so on
//! apply to that command only. The key `command` selects the subcommand
//! when none is given on the command line. `#` and `;` start comments.
//!
//! File entries are turned into flags and appended to the command line
//! unless the same flag is already present there, so flags take
//! precedence over the file and the file over built-in defaults.

use std::ffi::OsString;
use std::fmt;
use std::path::Path;

/// A problem with the configuration, reported with exit status 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub section: Option<String>,
    pub key: String,
    pub value: String,
}

pub fn parse(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut section = None;
    let mut entries = Vec::new();
    for (number, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim().to_ascii_lowercase();
            section = (name != "common").then_some(name);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("line {}: expected `key = value`, got `{line}`", number + 1)))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(ConfigError(format!("line {}: empty key", number + 1)));
        }
        entries.push(Entry { section: section.clone(), key, value: value.trim().to_string() });
    }
    Ok(entries)
}

fn to_strings(argv: Vec<OsString>) -> Result<Vec<String>, ConfigError> {
    argv.into_iter()
        .map(|a| a.into_string().map_err(|a| ConfigError(format!("argument {a:?} is not valid UTF-8"))))
        .collect()
}

/// Path given with `--config PATH` or `--config=PATH`.
fn config_path(args: &[String]) -> Result<Option<String>, ConfigError> {
    for (i, a) in args.iter().enumerate() {
        if a == "--config" {
            return args
                .get(i + 1)
                .cloned()
                .map(Some)
                .ok_or_else(|| ConfigError("--config needs a path".into()));
        }
        if let Some(path) = a.strip_prefix("--config=") {
            return Ok(Some(path.to_string()));
        }
    }
    Ok(None)
}

/// Position of the subcommand: the first token after the program name that
/// is neither a flag nor the value of `--config`.
fn subcommand_index(args: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if a == "--config" {
            i += 2;
            continue;
        }
        if !a.starts_with('-') {
            return Some(i);
        }
        i += 1;
    }
    None
}

fn has_flag(args: &[String], flag: &str) -> bool {
    args.iter().any(|a| a == flag || a.starts_with(&format!("{flag}=")))
}

/// Merges the configuration file named on the command line, if any, into
/// the arguments.
pub fn merge(argv: Vec<OsString>) -> Result<Vec<String>, ConfigError> {
    let mut args = to_strings(argv)?;
    let Some(path) = config_path(&args)? else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| ConfigError(format!("cannot read config file {path}: {e}")))?;
    let entries = parse(&text)?;
    let sub = match subcommand_index(&args) {
        Some(i) => i,
        None => {
            let command = entries
                .iter()
                .find(|e| e.key == "command" && e.section.is_none())
                .ok_or_else(|| ConfigError("no command on the command line or in the config file".into()))?;
            args.push(command.value.clone());
            args.len() - 1
        }
    };
    let command = args[sub].clone();
    let mut injected = Vec::new();
    for entry in &entries {
        if entry.key == "command" || entry.key == "config" {
            continue;
        }
        if entry.section.as_deref().is_some_and(|s| s != command) {
            continue;
        }
        let flag = format!("--{}", entry.key);
        if has_flag(&args[sub..], &flag) || has_flag(&injected, &flag) {
            continue;
        }
        match entry.value.as_str() {
            "true" => injected.push(flag),
            "false" => {}
            value => injected.push(format!("{flag}={value}")),
        }
    }
    args.extend(injected);
    Ok(args)
}
