//! JSON config files are spliced into argv as flags placed right after the
//! subcommand, so anything typed on the command line later overrides them.
//!
//! Top-level keys apply to every subcommand that has a flag of that name;
//! an object keyed by a subcommand name applies to that subcommand only.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::Path;

use anyhow::Context;
use clap::CommandFactory;
use serde_json::{Map, Value};

use crate::args::Cli;
use crate::Invalid;

fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}

fn flags_of(sub: &clap::Command) -> BTreeSet<String> {
    sub.get_arguments()
        .filter_map(|a| a.get_long().map(str::to_string))
        .filter(|l| l != "config" && l != "jobs")
        .collect()
}

fn push_value(out: &mut Vec<OsString>, flag: &str, v: &Value) -> anyhow::Result<()> {
    let scalar = |v: &Value| -> anyhow::Result<String> {
        match v {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            other => Err(Invalid(format!(
                "config value for `{flag}` must be a string or number, got {other}"
            ))
            .into()),
        }
    };
    match v {
        Value::Null | Value::Bool(false) => {}
        Value::Bool(true) => out.push(format!("--{flag}").into()),
        Value::Array(items) => {
            if !items.is_empty() {
                out.push(format!("--{flag}").into());
                for item in items {
                    out.push(scalar(item)?.into());
                }
            }
        }
        other => {
            out.push(format!("--{flag}").into());
            out.push(scalar(other)?.into());
        }
    }
    Ok(())
}

/// Returns `argv` with the config file's values inserted.
pub fn expand(argv: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let root: Map<String, Value> = serde_json::from_str(&text).map_err(|e| {
        Invalid(format!(
            "config {} is not a JSON object: {e}",
            path.display()
        ))
    })?;

    let cmd = Cli::command();
    let names: Vec<String> = cmd
        .get_subcommands()
        .map(|s| s.get_name().to_string())
        .collect();
    let Some(pos) = argv
        .iter()
        .position(|a| names.iter().any(|n| a.to_str() == Some(n)))
    else {
        return Ok(argv);
    };
    let name = argv[pos].to_string_lossy().into_owned();
    let sub = cmd
        .find_subcommand(&name)
        .expect("name came from the command");
    let own = flags_of(sub);
    let any: BTreeSet<String> = cmd.get_subcommands().flat_map(flags_of).collect();

    let mut merged: Vec<(String, Value)> = Vec::new();
    for (key, value) in &root {
        if names.contains(key) {
            continue;
        }
        let flag = key.replace('_', "-");
        if key == "config" || key == "jobs" {
            if key == "jobs" {
                merged.push((flag, value.clone()));
            }
            continue;
        }
        if !any.contains(&flag) {
            return Err(Invalid(format!("unknown config key `{key}`")).into());
        }
        if own.contains(&flag) {
            merged.push((flag, value.clone()));
        }
    }
    if let Some(section) = root.get(&name) {
        let section = section
            .as_object()
            .ok_or_else(|| Invalid(format!("config section `{name}` must be an object")))?;
        for (key, value) in section {
            let flag = key.replace('_', "-");
            if !own.contains(&flag) && flag != "jobs" {
                return Err(Invalid(format!("`{name}` has no option `{key}`")).into());
            }
            merged.retain(|(f, _)| *f != flag);
            merged.push((flag, value.clone()));
        }
    }

    let mut injected = Vec::new();
    for (flag, value) in &merged {
        push_value(&mut injected, flag, value)?;
    }
    let mut out = argv[..=pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn config_flags_precede_user_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(
            &cfg,
            r#"{"k": 5, "rho": 3, "smooth": {"bins": 8, "support_only": true}}"#,
        )
        .unwrap();
        let argv = os(&[
            "curvitopo",
            "--config",
            cfg.to_str().unwrap(),
            "smooth",
            "--k",
            "2",
        ]);
        let got = expand(argv).unwrap();
        let got: Vec<String> = got
            .iter()
            .map(|s| s.to_string_lossy().into_owned())
            .collect();
        let tail = &got[3..];
        assert_eq!(
            tail,
            [
                "smooth",
                "--k",
                "5",
                "--bins",
                "8",
                "--support-only",
                "--k",
                "2"
            ]
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"kk": 5}"#).unwrap();
        let err = expand(os(&[
            "curvitopo",
            "--config",
            cfg.to_str().unwrap(),
            "thin",
        ]))
        .unwrap_err();
        assert!(err.downcast_ref::<Invalid>().is_some());
        std::fs::write(&cfg, r#"{"thin": {"k": 5}}"#).unwrap();
        assert!(expand(os(&[
            "curvitopo",
            "--config",
            cfg.to_str().unwrap(),
            "thin"
        ]))
        .is_err());
    }
}
