//! `--config FILE`: a JSON object whose keys mirror long flag names.
//!
//! Config values are spliced into the argument list right after the
//! subcommand name. A key is skipped when the same flag already appears on
//! the command line, so explicit flags always win.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use serde_json::Value;

use super::CliError;

/// Extracts the `--config` path from raw arguments without full parsing.
pub(super) fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().skip(1);
    while let Some(arg) = it.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

fn flag_present(args: &[OsString], flag: &str) -> bool {
    let with_eq = format!("{flag}=");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&with_eq)
    })
}

/// Returns `args` with config-file flags inserted after the subcommand.
pub(super) fn merge_config(args: Vec<OsString>, subcommands: &[String]) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args) else { return Ok(args) };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let Value::Object(obj) = serde_json::from_str::<Value>(&text)
        .map_err(|e| CliError::Usage(format!("config {} is not valid JSON: {e}", path.display())))?
    else {
        return Err(CliError::Usage(format!("config {} must be a JSON object", path.display())));
    };

    let mut extra: Vec<OsString> = Vec::new();
    for (key, value) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag == "--config" {
            return Err(CliError::Usage("config files cannot nest --config".into()));
        }
        if flag_present(&args, &flag) {
            continue;
        }
        let scalar = |v: &Value| -> Result<String, CliError> {
            match v {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                _ => Err(CliError::Usage(format!("config key {key:?}: unsupported value {v}"))),
            }
        };
        match &value {
            Value::Bool(true) => extra.push(flag.into()),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                for item in items {
                    extra.push(flag.clone().into());
                    extra.push(scalar(item)?.into());
                }
            }
            other => {
                extra.push(flag.into());
                extra.push(scalar(other)?.into());
            }
        }
    }

    let at = args
        .iter()
        .position(|a| subcommands.iter().any(|s| a.to_string_lossy() == s.as_str()))
        .ok_or_else(|| CliError::Usage("no subcommand given".into()))?;
    let mut merged = args;
    merged.splice(at + 1..at + 1, extra);
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        fs::write(
            &cfg,
            r#"{"ratio": 0.5, "seed": 9, "corpus": ["a.txt", "b.txt"], "byte_level": true, "dedup": false}"#,
        )
        .unwrap();
        let args = os(&["tipa", "--config", cfg.to_str().unwrap(), "gen-mtipa", "--seed", "1"]);
        let merged = merge_config(args, &["gen-mtipa".to_string()]).unwrap();
        let merged: Vec<String> = merged.iter().map(|s| s.to_string_lossy().into_owned()).collect();
        assert_eq!(
            merged[3..],
            ["gen-mtipa", "--byte-level", "--corpus", "a.txt", "--corpus", "b.txt", "--ratio", "0.5", "--seed", "1"]
        );
    }

    #[test]
    fn rejects_non_object() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        fs::write(&cfg, "[1]").unwrap();
        let args = os(&["tipa", "diff", &format!("--config={}", cfg.display())]);
        assert!(matches!(merge_config(args, &["diff".into()]), Err(CliError::Usage(_))));
    }
}
