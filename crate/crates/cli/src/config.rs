//! Flat `key=value` config files, spliced into argv as flags.
//!
//! `epochs=5` becomes `--epochs 5`; `force=true` becomes `--force` and
//! `false` drops the key. Lines starting with `#` are comments, so a run's
//! `manifest.txt` doubles as a config file.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use crate::commands::CliError;

const SUBCOMMANDS: [&str; 6] = ["ingest", "synth", "embed", "experiment", "analyze", "baseline"];

/// Replaces `--config FILE` with the flags the file defines, placed right
/// after the subcommand so later command-line flags override them.
pub fn expand(mut args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some((at, path, width)) = find_config(&args) else {
        return Ok(args);
    };
    args.drain(at..at + width);
    let flags = parse_file(Path::new(&path))?;
    let insert_at = args
        .iter()
        .skip(1)
        .position(|a| a.to_str().is_some_and(|s| SUBCOMMANDS.contains(&s)))
        .map(|i| i + 2)
        .unwrap_or(args.len());
    args.splice(insert_at..insert_at, flags);
    Ok(args)
}

fn find_config(args: &[OsString]) -> Option<(usize, OsString, usize)> {
    for (i, arg) in args.iter().enumerate().skip(1) {
        let s = arg.to_string_lossy();
        if s == "--config" {
            return args.get(i + 1).map(|v| (i, v.clone(), 2));
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some((i, OsString::from(v), 1));
        }
    }
    None
}

fn parse_file(path: &Path) -> Result<Vec<OsString>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse(&text).map_err(|(line, msg)| CliError::Usage(format!("{}:{line}: {msg}", path.display())))
}

pub fn parse(text: &str) -> Result<Vec<OsString>, (usize, String)> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err((i + 1, "expected key=value".into()));
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err((i + 1, format!("bad key `{key}`")));
        }
        if key == "config" {
            return Err((i + 1, "config files cannot include other config files".into()));
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            "true" => out.push(flag.into()),
            "false" => {}
            _ => {
                out.push(flag.into());
                out.push(value.into());
            }
        }
    }
    Ok(out)
}
