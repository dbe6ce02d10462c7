//! Declarative `key = value` configuration and flag resolution.
//!
//! A config file holds one `key = value` pair per line; `#` starts a
//! comment, blank lines are ignored and keys use the long flag names
//! (`sigma-w`, `max-iterations`; underscores are accepted). Keys that a
//! command does not use are ignored so one file can drive a whole pipeline.
//!
//! Every command resolves each setting as flag, then file, then default,
//! and records the resolved value. The record is embedded in every output
//! and is itself a valid config file, so any run can be replayed.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use crate::error::{usage, CliError, CliResult};

/// Environment variable consulted for `seed` when neither flag nor file set it.
pub const SEED_ENV: &str = "CSKL_SEED";

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

fn normalize_key(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl Config {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| CliError::Config {
                line,
                message: format!("expected 'key = value', got '{content}'"),
            })?;
            let key = normalize_key(key);
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
                return Err(CliError::Config {
                    line,
                    message: format!("invalid key '{key}'"),
                });
            }
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::Config {
                    line,
                    message: format!("duplicate key '{key}'"),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }
}

/// Resolves settings for one command and records what was used.
#[derive(Debug)]
pub struct Resolver {
    file: Config,
    used: BTreeMap<String, String>,
}

impl Resolver {
    pub fn new(file: Config) -> Self {
        Self {
            file,
            used: BTreeMap::new(),
        }
    }

    /// Flag value, else the file value, else `None`.
    pub fn optional<T>(&mut self, key: &str, flag: Option<T>) -> CliResult<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(text) => Some(
                    text.parse::<T>()
                        .map_err(|e| usage(format!("config key '{key}': {e}")))?,
                ),
                None => None,
            },
        };
        if let Some(v) = &value {
            self.record(key, v);
        }
        Ok(value)
    }

    pub fn or_default<T>(&mut self, key: &str, flag: Option<T>, default: T) -> CliResult<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        match self.optional(key, flag)? {
            Some(v) => Ok(v),
            None => {
                self.record(key, &default);
                Ok(default)
            }
        }
    }

    pub fn required<T>(&mut self, key: &str, flag: Option<T>) -> CliResult<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.optional(key, flag)?
            .ok_or_else(|| usage(format!("missing required setting --{key}")))
    }

    /// Boolean switches: set if the flag is present or the file says `true`.
    pub fn switch(&mut self, key: &str, flag: bool) -> CliResult<bool> {
        let on = flag || self.optional::<bool>(key, None)?.unwrap_or(false);
        self.record(key, on);
        Ok(on)
    }

    /// Seed: flag, file, then the environment, then 0.
    pub fn seed(&mut self, key: &str, flag: Option<u64>) -> CliResult<u64> {
        if let Some(s) = self.optional(key, flag)? {
            return Ok(s);
        }
        let seed = match std::env::var(SEED_ENV) {
            Ok(text) => text
                .trim()
                .parse::<u64>()
                .map_err(|e| usage(format!("{SEED_ENV}: {e}")))?,
            Err(_) => 0,
        };
        self.record(key, seed);
        Ok(seed)
    }

    pub fn record(&mut self, key: &str, value: impl Display) {
        self.used.insert(key.to_string(), value.to_string());
    }

    pub fn settings(&self) -> &BTreeMap<String, String> {
        &self.used
    }

    /// The resolved settings as a config file.
    pub fn to_config_text(&self) -> String {
        self.used.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Comma-separated list of numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct NumberList(pub Vec<f64>);

impl FromStr for NumberList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("'{t}': {e}"))
                    .and_then(|v| if v.is_finite() { Ok(v) } else { Err(format!("'{t}' is not finite")) })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(NumberList)
    }
}

impl Display for NumberList {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(f64::to_string).collect();
        f.write_str(&parts.join(","))
    }
}
