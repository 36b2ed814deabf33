//! Flat `key = value` config files. Keys are the long flag names; values on
//! the command line win over the file.

use std::collections::BTreeMap;
use std::path::Path;

use toml::Value;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path, allowed: &[&str]) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text, allowed).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn parse(text: &str, allowed: &[&str]) -> Result<Self, String> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| e.message().to_string())?;
        let mut values = BTreeMap::new();
        for (key, value) in table {
            if !allowed.contains(&key.as_str()) {
                return Err(format!("unknown key `{key}` (allowed: {})", allowed.join(", ")));
            }
            let text = flatten(&value).ok_or_else(|| format!("key `{key}` must be a string, number, boolean or list of those"))?;
            values.insert(key, text);
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// The command-line value if given, else the file's value parsed with
    /// `parse`.
    pub fn pick<T>(
        &self,
        cli: Option<T>,
        key: &str,
        parse: impl FnOnce(&str) -> Result<T, String>,
    ) -> Result<Option<T>, String> {
        match (cli, self.get(key)) {
            (Some(v), _) => Ok(Some(v)),
            (None, Some(s)) => parse(s).map(Some).map_err(|e| format!("config key `{key}`: {e}")),
            (None, None) => Ok(None),
        }
    }
}

fn flatten(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Integer(i) => Some(i.to_string()),
        Value::Float(f) => Some(f.to_string()),
        Value::Boolean(b) => Some(b.to_string()),
        Value::Array(items) => {
            let parts: Option<Vec<String>> = items
                .iter()
                .map(|v| match v {
                    Value::Array(_) => None,
                    v => flatten(v),
                })
                .collect();
            Some(parts?.join(","))
        }
        _ => None,
    }
}
