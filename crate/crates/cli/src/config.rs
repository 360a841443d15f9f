//! Config-file defaults merged into the command line.
//!
//! A config file is TOML: top-level keys set global flags and a table named
//! after the subcommand sets its flags, e.g.
//!
//! ```toml
//! data = "dataset"
//! [variance]
//! station = "berkeley"
//! schedule = "berkeley"
//! holiday = ["2018-05-28"]
//! ```
//!
//! Flags given on the command line take precedence over the file.

use std::path::Path;

use clap::CommandFactory;

use crate::args::Cli;
use crate::CliError;

/// Returns `argv` extended with flags from `config` that it does not already set.
pub fn merge(argv: &[String], config: &Path, subcommand: &str) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(config).map_err(|e| urbmag::Error::io(config, e))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| CliError::Usage(format!("{}: {e}", config.display())))?;
    let root = Cli::command();
    let sub = root
        .find_subcommand(subcommand)
        .ok_or_else(|| CliError::Usage(format!("unknown subcommand '{subcommand}'")))?;

    let mut extra = Vec::new();
    for (key, value) in &table {
        if let toml::Value::Table(t) = value {
            if key == subcommand {
                for (k, v) in t {
                    push_flag(&mut extra, sub, k, v, argv, config)?;
                }
            } else if root.find_subcommand(key).is_none() {
                return Err(CliError::Usage(format!("{}: unknown table [{key}]", config.display())));
            }
            continue;
        }
        push_flag(&mut extra, &root, key, value, argv, config)?;
    }
    let mut out = argv.to_vec();
    out.extend(extra);
    Ok(out)
}

fn push_flag(
    out: &mut Vec<String>,
    cmd: &clap::Command,
    key: &str,
    value: &toml::Value,
    argv: &[String],
    config: &Path,
) -> Result<(), CliError> {
    let long = key.replace('_', "-");
    let arg = cmd
        .get_arguments()
        .find(|a| a.get_long() == Some(long.as_str()) && long != "config")
        .ok_or_else(|| CliError::Usage(format!("{}: unknown key '{key}'", config.display())))?;
    let flag = format!("--{long}");
    let set_on_cli = argv.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
    if set_on_cli {
        return Ok(());
    }
    let takes_value = arg.get_action().takes_values();
    let scalar = |v: &toml::Value| -> Result<String, CliError> {
        match v {
            toml::Value::String(s) => Ok(s.clone()),
            toml::Value::Integer(i) => Ok(i.to_string()),
            toml::Value::Float(f) => Ok(f.to_string()),
            toml::Value::Boolean(b) => Ok(b.to_string()),
            other => Err(CliError::Usage(format!(
                "{}: key '{key}' has unsupported value {other}",
                config.display()
            ))),
        }
    };
    match value {
        toml::Value::Boolean(b) if !takes_value => {
            if *b {
                out.push(flag);
            }
        }
        toml::Value::Array(items) => {
            for v in items {
                out.push(format!("{flag}={}", scalar(v)?));
            }
        }
        v => out.push(format!("{flag}={}", scalar(v)?)),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_without_overriding() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(
            &p,
            "data = \"d\"\nout = \"o\"\n[variance]\nstation = \"s\"\nbin_seconds = 600\nholiday = [\"2018-05-28\", \"2018-07-04\"]\n[psd]\nsegment = 4\n",
        )
        .unwrap();
        let argv: Vec<String> = ["urbmag", "variance", "--out", "cli"].map(String::from).to_vec();
        let merged = merge(&argv, &p, "variance").unwrap();
        let expected = ["--data=d", "--bin-seconds=600", "--holiday=2018-05-28", "--holiday=2018-07-04", "--station=s"];
        assert_eq!(merged[4..], expected.map(String::from));
        assert!(!merged.contains(&"--out=o".to_string()));
        let bad = dir.path().join("bad.toml");
        std::fs::write(&bad, "[variance]\nbogus = 1\n").unwrap();
        assert!(matches!(merge(&argv, &bad, "variance"), Err(CliError::Usage(_))));
    }
}
