//! `--config` support: file values become flags placed ahead of the user's
//! own flags, which then override them.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::Value;

const SUBCOMMANDS: [&str; 8] = [
    "generate",
    "build",
    "score",
    "rank",
    "eval",
    "sweep",
    "export-graph",
    "discord",
];

fn config_path(argv: &[String]) -> Option<String> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

fn load(path: &Path) -> Result<serde_json::Map<String, Value>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("{}: cannot read config", path.display()))?;
    let value: Value = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).with_context(|| format!("{}: invalid JSON", path.display()))?
    } else {
        let table: toml::Table = toml::from_str(&text).with_context(|| format!("{}: invalid TOML", path.display()))?;
        serde_json::to_value(table)?
    };
    match value {
        Value::Object(map) => Ok(map),
        _ => bail!("{}: config must be a table of flag values", path.display()),
    }
}

fn push_flag(out: &mut Vec<String>, key: &str, value: &Value) -> Result<()> {
    let flag = format!("--{}", key.replace('_', "-"));
    match value {
        Value::Bool(true) => out.push(flag),
        Value::Bool(false) | Value::Null => {}
        Value::Number(n) => out.extend([flag, n.to_string()]),
        Value::String(s) => out.extend([flag, s.clone()]),
        Value::Array(items) => {
            for v in items {
                push_flag(out, key, v)?;
            }
        }
        Value::Object(_) => bail!("config key `{key}` holds a table, expected a flag value"),
    }
    Ok(())
}

/// Rewrites `argv` so the config file's values precede the subcommand's
/// own flags.
pub fn expand(argv: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let Some(at) = argv.iter().skip(1).position(|a| SUBCOMMANDS.contains(&a.as_str())) else {
        return Ok(argv);
    };
    let at = at + 1;
    let map = load(Path::new(&path))?;
    let sub = argv[at].as_str();
    let mut tokens = Vec::new();
    for (k, v) in &map {
        if !v.is_object() && k != "config" {
            push_flag(&mut tokens, k, v)?;
        }
    }
    if let Some(Value::Object(section)) = map.get(sub) {
        for (k, v) in section {
            push_flag(&mut tokens, k, v)?;
        }
    }
    let mut out = argv[..=at].to_vec();
    out.extend(tokens);
    out.extend_from_slice(&argv[at + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn no_config_is_untouched() {
        let a = args("s2g build --l 5");
        assert_eq!(expand(a.clone()).unwrap(), a);
    }

    #[test]
    fn section_and_top_level_values_precede_user_flags() {
        let mut f = tempfile::Builder::new().suffix(".toml").tempfile().unwrap();
        writeln!(f, "seed = 3\n[build]\nl = 80\nkeep_self_loops = true\nr = 40\n[score]\nlq = 9").unwrap();
        let path = f.path().display().to_string();
        let out = expand(args(&format!("s2g --config {path} build --l 100"))).unwrap();
        assert_eq!(
            out,
            args(&format!(
                "s2g --config {path} build --seed 3 --keep-self-loops --l 80 --r 40 --l 100"
            ))
        );
    }

    #[test]
    fn json_config() {
        let mut f = tempfile::Builder::new().suffix(".json").tempfile().unwrap();
        write!(f, r#"{{"rank": {{"k": 4}}}}"#).unwrap();
        let path = f.path().display().to_string();
        let out = expand(args(&format!("s2g rank --config={path}"))).unwrap();
        assert_eq!(out, args(&format!("s2g rank --k 4 --config={path}")));
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(expand(args("s2g --config /nonexistent/x.toml build")).is_err());
    }
}
