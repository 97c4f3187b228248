//! Flat key-value run configuration: one `key = value` per line, optional
//! `[section]` grouping headers (cosmetic), `#` comments.  Every key a
//! subcommand understands has a documented default; unknown keys are
//! rejected at load so typos cannot silently fall back to defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

/// A configuration error that must map to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Display) -> anyhow::Error {
    anyhow::Error::new(ConfigError(format!("{msg}")))
}

/// Key table of one subcommand: `(key, default)`.  A default of `None` means
/// the key is required when the subcommand runs.
pub type KeySpec = &'static [(&'static str, Option<&'static str>)];

/// Resolved configuration: defaults, overlaid by the file, overlaid by
/// `--set key=value` flags.  The resolved map is echoed into the manifest.
#[derive(Debug, Clone)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Build from an optional file and a list of `key=value` overrides.
    pub fn load(spec: KeySpec, path: Option<&Path>, sets: &[String]) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (key, default) in spec {
            if let Some(d) = default {
                values.insert((*key).to_string(), (*d).to_string());
            }
        }
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config file {}", path.display()))?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                if line.starts_with('[') {
                    if !line.ends_with(']') || line.len() < 3 {
                        return Err(config_err(format_args!(
                            "malformed section header on line {}: `{raw}`",
                            lineno + 1
                        )));
                    }
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    config_err(format_args!(
                        "expected `key = value` on line {}: `{raw}`",
                        lineno + 1
                    ))
                })?;
                Self::insert_checked(spec, &mut values, key.trim(), value.trim())?;
            }
        }
        for set in sets {
            let (key, value) = set.split_once('=').ok_or_else(|| {
                config_err(format_args!("--set expects key=value, got `{set}`"))
            })?;
            Self::insert_checked(spec, &mut values, key.trim(), value.trim())?;
        }
        Ok(RunConfig { values })
    }

    fn insert_checked(
        spec: KeySpec,
        values: &mut BTreeMap<String, String>,
        key: &str,
        value: &str,
    ) -> Result<()> {
        if !spec.iter().any(|(k, _)| *k == key) {
            return Err(config_err(format_args!(
                "unknown configuration key `{key}` (known: {})",
                spec.iter()
                    .map(|(k, _)| *k)
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
        values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Force a value (used by convenience flags such as `--rho`).
    pub fn set(&mut self, key: &str, value: impl Display) {
        self.values.insert(key.to_string(), format!("{value}"));
    }

    fn raw(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| config_err(format_args!("missing configuration key `{key}`")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let raw = self.raw(key)?;
        raw.parse::<f64>()
            .map_err(|_| config_err(format_args!("key `{key}`: `{raw}` is not a number")))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let raw = self.raw(key)?;
        raw.parse::<usize>()
            .map_err(|_| config_err(format_args!("key `{key}`: `{raw}` is not a non-negative integer")))
    }

    pub fn i64(&self, key: &str) -> Result<i64> {
        let raw = self.raw(key)?;
        raw.parse::<i64>()
            .map_err(|_| config_err(format_args!("key `{key}`: `{raw}` is not an integer")))
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        let raw = self.raw(key)?;
        match raw {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(config_err(format_args!(
                "key `{key}`: `{raw}` is not a boolean (true/false)"
            ))),
        }
    }

    pub fn str(&self, key: &str) -> Result<&str> {
        self.raw(key)
    }

    /// The resolved key-value map, for the manifest.
    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}

/// A core failure carried through anyhow with its class intact.
#[derive(Debug)]
pub struct CoreFailure {
    pub class: CoreClass,
    msg: String,
}

impl Display for CoreFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.msg)
    }
}

impl std::error::Error for CoreFailure {}

/// Re-wrap a core error so the exit-code mapping in main can see it.
pub fn core_err(e: jetstab_core::Error) -> anyhow::Error {
    anyhow::Error::new(CoreFailure {
        class: CoreClass::from(&e),
        msg: e.to_string(),
    })
}

/// The class of a core failure, carried through anyhow for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoreClass {
    Config,
    Numeric,
    NonConvergence,
}

impl Display for CoreClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CoreClass::Config => write!(f, "configuration error"),
            CoreClass::Numeric => write!(f, "numeric failure"),
            CoreClass::NonConvergence => write!(f, "non-convergence"),
        }
    }
}

impl From<&jetstab_core::Error> for CoreClass {
    fn from(e: &jetstab_core::Error) -> Self {
        match e {
            jetstab_core::Error::Config(_) => CoreClass::Config,
            jetstab_core::Error::Numeric(_) => CoreClass::Numeric,
            jetstab_core::Error::NonConvergence(_) => CoreClass::NonConvergence,
        }
    }
}

/// Exit code of an error per the contract: 2 config, 3 numeric, 4 reported
/// non-convergence.
pub fn exit_code(e: &anyhow::Error) -> i32 {
    for cause in e.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 2;
        }
        if let Some(failure) = cause.downcast_ref::<CoreFailure>() {
            return match failure.class {
                CoreClass::Config => 2,
                CoreClass::Numeric => 3,
                CoreClass::NonConvergence => 4,
            };
        }
    }
    3
}
