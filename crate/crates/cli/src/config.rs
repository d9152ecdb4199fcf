//! `key = value` config files layered under command-line flags.
//!
//! Each key names a long flag of the chosen subcommand (`g_max` and `g-max`
//! are the same key). A key is applied only if the flag is absent from the
//! command line, by appending it to the argument list before parsing, so
//! config values go through exactly the same validation as flags.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::CommandFactory;

use crate::args::Cli;

/// Parses config text into `(key, value)` pairs. `#` starts a comment,
/// `[section]` lines are ignored, and values may be quoted.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value", no + 1))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            bail!("line {}: empty key", no + 1);
        }
        let value = value.trim();
        let value = value
            .strip_prefix('"')
            .and_then(|v| v.strip_suffix('"'))
            .or_else(|| value.strip_prefix('\'').and_then(|v| v.strip_suffix('\'')))
            .unwrap_or(value);
        out.push((key, value.to_owned()));
    }
    Ok(out)
}

fn strip_comment(line: &str) -> &str {
    let mut quote = None;
    for (i, c) in line.char_indices() {
        match (c, quote) {
            ('"' | '\'', None) => quote = Some(c),
            (c, Some(q)) if c == q => quote = None,
            ('#', None) => return &line[..i],
            _ => {}
        }
    }
    line
}

/// Location of `--config` in raw arguments.
fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            return None;
        }
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

fn flag_given(args: &[OsString], long: &str) -> bool {
    let bare = format!("--{long}");
    let eq = format!("--{long}=");
    args.iter().skip(1).any(|a| {
        let s = a.to_string_lossy();
        s == bare || s.starts_with(&eq)
    })
}

fn long_names(arg: &clap::Arg) -> Vec<&str> {
    arg.get_long().into_iter().chain(arg.get_all_aliases().unwrap_or_default()).collect()
}

/// Appends config-file values for flags the user did not pass. Returns the
/// original arguments when no `--config` is present.
pub fn overlay(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let pairs = parse(&text).with_context(|| format!("in config {}", path.display()))?;

    let cmd = Cli::command();
    let sub_name = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).find(|a| cmd.find_subcommand(a).is_some());
    let Some(sub_name) = sub_name else {
        // let clap report the missing subcommand
        return Ok(args);
    };
    let sub = cmd.find_subcommand(&sub_name).expect("found above");

    let mut out = args.clone();
    for (key, value) in pairs {
        if key == "config" {
            bail!("config files cannot nest --config");
        }
        let arg = sub
            .get_arguments()
            .find(|a| long_names(a).contains(&key.as_str()))
            .ok_or_else(|| anyhow!("config key {key:?} is not a flag of `{sub_name}`"))?;
        if long_names(arg).iter().any(|name| flag_given(&args, name)) {
            continue;
        }
        if arg.get_action().takes_values() {
            out.push(format!("--{key}={value}").into());
        } else {
            match value.as_str() {
                "true" => out.push(format!("--{key}").into()),
                "false" => {}
                other => bail!("config key {key:?} expects true or false, got {other:?}"),
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_key_values() {
        let pairs = parse("# defaults\n[compress]\ntau = 1e-3\ng_max=64 # coarse\nname = \"a # b\"\n\n").unwrap();
        assert_eq!(
            pairs,
            [("tau".into(), "1e-3".into()), ("g-max".into(), "64".into()), ("name".into(), "a # b".into())]
        );
        assert!(parse("just text").is_err());
    }

    #[test]
    fn flags_take_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.conf");
        std::fs::write(&cfg, "rho = 0.3\ntau = 1e-2\nbaseline = true\n").unwrap();
        let args = os(&["umc", "compress", "--config", cfg.to_str().unwrap(), "--tau", "1e-4"]);
        let out = overlay(args).unwrap();
        let tail: Vec<String> = out[4..].iter().map(|a| a.to_string_lossy().into_owned()).collect();
        assert_eq!(tail, ["--tau", "1e-4", "--rho=0.3", "--baseline"]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.conf");
        std::fs::write(&cfg, "nonsense = 1\n").unwrap();
        assert!(overlay(os(&["umc", "verify", "--config", cfg.to_str().unwrap()])).is_err());
    }
}
