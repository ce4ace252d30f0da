//! Config-file expansion and input path resolution.
//!
//! A config file holds `key=value` lines, where a key is the long name of a
//! flag (`epochs=20`, `--mode=oracle-coarse`). Its entries are spliced into
//! the argument list right after the subcommand, skipping any flag that is
//! also given on the command line, so explicit flags always win.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

pub const DATA_DIR_VAR: &str = "LINKER_DATA_DIR";

/// Global options that consume the next argument.
const GLOBAL_VALUE_FLAGS: [&str; 4] = ["--seed", "--threads", "--log-level", "--config"];

/// Resolves a relative input path that does not exist against
/// `$LINKER_DATA_DIR`. Anything else is returned unchanged.
pub fn resolve_input(raw: &str) -> Result<PathBuf, String> {
    Ok(resolve_with(
        Path::new(raw),
        std::env::var_os(DATA_DIR_VAR).as_deref().map(Path::new),
    ))
}

fn resolve_with(path: &Path, data_dir: Option<&Path>) -> PathBuf {
    if path.is_absolute() || path.exists() {
        return path.to_path_buf();
    }
    match data_dir.map(|d| d.join(path)) {
        Some(p) if p.exists() => p,
        _ => path.to_path_buf(),
    }
}

pub fn parse_config(text: &str) -> anyhow::Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected key=value, got {line:?}", i + 1);
        };
        let key = key.trim().trim_start_matches("--");
        if key.is_empty() || key.contains(char::is_whitespace) {
            bail!("line {}: bad key {key:?}", i + 1);
        }
        out.push((key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

fn flag_of(arg: &str) -> Option<&str> {
    let rest = arg.strip_prefix("--")?;
    Some(rest.split_once('=').map_or(rest, |(k, _)| k))
}

/// Finds the `--config` value and the position of the subcommand.
fn scan(args: &[String]) -> (Option<String>, Option<usize>) {
    let mut config = None;
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if a == "--" {
            break;
        }
        if let Some(v) = a.strip_prefix("--config=") {
            config = Some(v.to_string());
        } else if GLOBAL_VALUE_FLAGS.contains(&a.as_str()) {
            if a == "--config" {
                config = args.get(i + 1).cloned();
            }
            i += 1;
        } else if !a.starts_with('-') {
            return (config, Some(i));
        }
        i += 1;
    }
    (config, None)
}

/// Returns `args` with the entries of the `--config` file, if any, spliced in.
pub fn expand_args(args: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let args: Vec<String> = args
        .into_iter()
        .map(|a| {
            a.into_string()
                .map_err(|a| anyhow::anyhow!("argument {a:?} is not valid UTF-8"))
        })
        .collect::<anyhow::Result<_>>()?;
    let (config, sub) = scan(&args);
    // a later --config after the subcommand is also honoured
    let config = config.or_else(|| {
        let start = sub.unwrap_or(args.len());
        args[start..]
            .windows(2)
            .find(|w| w[0] == "--config")
            .map(|w| w[1].clone())
            .or_else(|| {
                args[start..]
                    .iter()
                    .find_map(|a| a.strip_prefix("--config=").map(str::to_string))
            })
    });
    let (Some(config), Some(sub)) = (config, sub) else {
        return Ok(args.into_iter().map(OsString::from).collect());
    };
    let path = resolve_input(&config).expect("infallible");
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {}", path.display()))?;
    let entries = parse_config(&text).with_context(|| format!("in config {}", path.display()))?;
    let given: Vec<&str> = args.iter().filter_map(|a| flag_of(a)).collect();
    let mut injected = Vec::new();
    for (key, value) in entries {
        if key == "config" || given.contains(&key.as_str()) {
            continue;
        }
        match value.as_str() {
            "true" => injected.push(format!("--{key}")),
            "false" => {}
            _ => injected.push(format!("--{key}={value}")),
        }
    }
    let mut out = args;
    out.splice(sub + 1..sub + 1, injected);
    Ok(out.into_iter().map(OsString::from).collect())
}
