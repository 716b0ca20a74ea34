//! `key = value` config files merged underneath command-line flags.
//!
//! Entries become `--key value` arguments inserted right after the
//! subcommand, so any flag repeated on the command line wins.

use std::ffi::OsString;
use std::fs;

use crate::error::CliError;

/// Parse a config file body into flag arguments.
pub fn parse_config(body: &str, origin: &str) -> Result<Vec<OsString>, CliError> {
    let mut args = Vec::new();
    for (n, raw) in body.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("{origin}:{}: expected key = value, got '{line}'", n + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim();
        if key.is_empty() {
            return Err(CliError::Input(format!("{origin}:{}: empty key", n + 1)));
        }
        match value {
            "true" => args.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                args.push(format!("--{key}").into());
                args.push(value.into());
            }
        }
    }
    Ok(args)
}

/// Strip `--config PATH` / `--config=PATH` from `argv` and splice the file's
/// entries in after the subcommand name.
pub fn merge_config(argv: Vec<OsString>, subcommands: &[&str]) -> Result<Vec<OsString>, CliError> {
    let mut path = None;
    let mut rest = Vec::with_capacity(argv.len());
    let mut iter = argv.into_iter();
    while let Some(arg) = iter.next() {
        let text = arg.to_string_lossy();
        if text == "--config" {
            let value = iter.next().ok_or_else(|| CliError::Input("--config needs a path".into()))?;
            path = Some(value);
        } else if let Some(value) = text.strip_prefix("--config=") {
            path = Some(OsString::from(value));
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let origin = path.to_string_lossy().into_owned();
    let body = fs::read_to_string(&path).map_err(|e| CliError::Input(format!("cannot read config {origin}: {e}")))?;
    let extra = parse_config(&body, &origin)?;
    let at = rest
        .iter()
        .position(|a| subcommands.contains(&a.to_string_lossy().as_ref()))
        .map(|i| i + 1)
        .ok_or_else(|| CliError::Input("--config needs a subcommand".into()))?;
    rest.splice(at..at, extra);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn entries_become_flags() {
        let args = parse_config("# comment\nseed = 4\nper_bin = true\nbatch-norm = false\n\n", "x").unwrap();
        assert_eq!(args, os(&["--seed", "4", "--per-bin"]));
        assert!(parse_config("seed 4", "x").is_err());
    }

    #[test]
    fn config_goes_before_user_flags() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.cfg");
        fs::write(&file, "seed = 1\n").unwrap();
        let argv = os(&["odrpo", "train", "--config", file.to_str().unwrap(), "--seed", "9"]);
        let merged = merge_config(argv, &["train"]).unwrap();
        assert_eq!(merged, os(&["odrpo", "train", "--seed", "1", "--seed", "9"]));
    }
}
