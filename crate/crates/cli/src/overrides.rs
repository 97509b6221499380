//! `key=value` overrides applied to the JSON form of a scenario.
//!
//! Keys are dotted paths into the document (`model.laws.a`, `run.t_end`,
//! `kernels.coagulation.k1`). A path whose first segment is not a top-level
//! section is looked up one level down, so `laws.a` means `model.laws.a` and
//! `t_end` means `run.t_end`. Values are parsed as JSON when possible and
//! taken as strings otherwise.

use coagfrag::ScenarioConfig;
use serde_json::Value;

use crate::CliError;

fn parse_pair(raw: &str) -> Result<(&str, Value), CliError> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override `{raw}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Usage(format!(
            "override `{raw}` has an empty key"
        )));
    }
    let value = value.trim();
    let parsed = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
    Ok((key, parsed))
}

/// Full path for `key`, resolving the one-level shorthand.
fn resolve(root: &Value, key: &str) -> Result<Vec<String>, CliError> {
    let segments: Vec<String> = key.split('.').map(str::to_string).collect();
    let head = &segments[0];
    if root.get(head).is_some() {
        return Ok(segments);
    }
    let sections: Vec<&String> = root
        .as_object()
        .map(|o| {
            o.iter()
                .filter(|(_, v)| v.get(head).is_some())
                .map(|(k, _)| k)
                .collect()
        })
        .unwrap_or_default();
    match sections.as_slice() {
        [section] => Ok(std::iter::once((*section).clone())
            .chain(segments)
            .collect()),
        [] => Err(CliError::Usage(format!(
            "override key `{key}` matches no config field"
        ))),
        _ => Err(CliError::Usage(format!(
            "override key `{key}` is ambiguous between sections {}",
            sections
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        ))),
    }
}

fn set(root: &mut Value, path: &[String], value: Value, key: &str) -> Result<(), CliError> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut node = root;
    for seg in parents {
        node = node
            .get_mut(seg)
            .ok_or_else(|| CliError::Usage(format!("override key `{key}`: no field `{seg}`")))?;
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| CliError::Usage(format!("override key `{key}` does not name a field")))?;
    if !obj.contains_key(last) {
        return Err(CliError::Usage(format!(
            "override key `{key}`: no field `{last}`"
        )));
    }
    obj.insert(last.clone(), value);
    Ok(())
}

/// Applies `overrides` in order and re-validates the result.
pub fn apply(cfg: &ScenarioConfig, overrides: &[String]) -> Result<ScenarioConfig, CliError> {
    if overrides.is_empty() {
        return Ok(cfg.clone());
    }
    let mut doc = serde_json::to_value(cfg).map_err(coagfrag::Error::from)?;
    for raw in overrides {
        let (key, value) = parse_pair(raw)?;
        let path = resolve(&doc, key)?;
        set(&mut doc, &path, value, key)?;
    }
    let out: ScenarioConfig = serde_json::from_value(doc).map_err(coagfrag::Error::from)?;
    out.validate()?;
    Ok(out)
}
