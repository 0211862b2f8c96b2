//! Flags supplied through a JSON config file.

use std::ffi::OsString;
use std::path::Path;

use serde_json::Value;

use crate::error::CliError;

/// Appends flags from the `--config` file to `argv`.
///
/// Keys name long flags (`grid_len` or `grid-len`). Flags already present on
/// the command line win. `true` becomes a bare switch, `false` and `null`
/// are dropped, and arrays repeat the flag once per element.
pub fn apply(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    let Value::Object(map) = value else {
        return Err(CliError::Usage(format!("config {}: expected a JSON object", path.display())));
    };

    let mut out = argv;
    let present: Vec<String> = out.iter().filter_map(|a| a.to_str().map(str::to_owned)).collect();
    for (key, value) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag == "--config" || present.iter().any(|a| a == &flag || a.starts_with(&format!("{flag}="))) {
            continue;
        }
        let items = match value {
            Value::Array(items) => items,
            other => vec![other],
        };
        for item in items {
            match item {
                Value::Bool(true) => out.push(flag.clone().into()),
                Value::Bool(false) | Value::Null => {}
                Value::String(s) => out.extend([flag.clone().into(), s.into()]),
                Value::Number(n) => out.extend([flag.clone().into(), n.to_string().into()]),
                other => {
                    return Err(CliError::Usage(format!(
                        "config key `{key}`: unsupported value {other}"
                    )))
                }
            }
        }
    }
    Ok(out)
}

fn config_path(argv: &[OsString]) -> Option<std::path::PathBuf> {
    let mut iter = argv.iter();
    while let Some(arg) = iter.next() {
        let s = arg.to_str()?;
        if s == "--config" {
            return iter.next().map(|p| Path::new(p).to_path_buf());
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}
