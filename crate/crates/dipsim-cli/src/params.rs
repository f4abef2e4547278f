//! `--param key=value` handling.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::CliError;

/// Protocol parameters; every key must be one the protocol declares.
#[derive(Clone, Debug, Default)]
pub struct Params(BTreeMap<String, String>);

impl Params {
    pub fn parse(pairs: &[String]) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for p in pairs {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("parameter `{p}` is not key=value")))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(CliError::Config(format!("parameter `{p}` has an empty key")));
            }
            if map.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("parameter `{k}` given twice")));
            }
        }
        Ok(Self(map))
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.0.insert(key.into(), value);
    }

    /// Rejects keys outside `allowed`.
    pub fn restrict(&self, protocol: &str, allowed: &[&str]) -> Result<(), CliError> {
        match self.0.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(CliError::Config(format!(
                "protocol `{protocol}` takes no parameter `{k}` (known: {})",
                if allowed.is_empty() { "none".into() } else { allowed.join(", ") }
            ))),
            None => Ok(()),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.opt(key)?.unwrap_or(default))
    }

    pub fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.0
            .get(key)
            .map(|v| v.parse().map_err(|_| CliError::Config(format!("parameter `{key}`: cannot parse `{v}`"))))
            .transpose()
    }

    pub fn str(&self, key: &str, default: &str) -> String {
        self.0.get(key).cloned().unwrap_or_else(|| default.into())
    }
}
