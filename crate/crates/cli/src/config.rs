//! Flat `key = value` config files, flag/file/default precedence, and the
//! effective-config record embedded in every artifact.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::CliError;

/// Parse a flat config file: one `key = value` per line, `#` comments.
pub fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::input(format!(
                "{}:{}: expected `key = value`",
                path.display(),
                lineno + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Resolves each parameter as flag > config file > default, recording the
/// final value so artifacts can embed the full effective configuration.
pub struct Resolver {
    file: BTreeMap<String, String>,
    effective: RefCell<BTreeMap<String, String>>,
}

impl Resolver {
    pub fn new(file: BTreeMap<String, String>) -> Self {
        Self {
            file,
            effective: RefCell::new(BTreeMap::new()),
        }
    }

    fn record(&self, key: &str, value: impl Display) {
        self.effective
            .borrow_mut()
            .insert(key.to_string(), value.to_string());
    }

    fn file_value<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.file.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                CliError::input(format!("config key `{key}`: cannot parse `{raw}`"))
            }),
        }
    }

    /// Flag value if given, else config-file value, else the default.
    pub fn get<T: FromStr + Display>(
        &self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, CliError> {
        let value = match flag {
            Some(v) => v,
            None => self.file_value(key)?.unwrap_or(default),
        };
        self.record(key, &value);
        Ok(value)
    }

    /// Flag or config-file value; `None` when absent everywhere.
    pub fn get_opt<T: FromStr + Display>(
        &self,
        key: &str,
        flag: Option<T>,
    ) -> Result<Option<T>, CliError> {
        let value = match flag {
            Some(v) => Some(v),
            None => self.file_value(key)?,
        };
        if let Some(v) = &value {
            self.record(key, v);
        }
        Ok(value)
    }

    /// A parameter that must be supplied by flag or file.
    pub fn require<T: FromStr + Display>(
        &self,
        key: &str,
        flag: Option<T>,
    ) -> Result<T, CliError> {
        self.get_opt(key, flag)?
            .ok_or_else(|| CliError::input(format!("missing required parameter `--{key}`")))
    }

    /// A required input path; must exist at validation time.
    pub fn require_path(&self, key: &str, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
        let path: PathBuf = self.require(key, flag.map(PathDisplay))?.0;
        if !path.exists() {
            return Err(CliError::input(format!(
                "input file does not exist: {}",
                path.display()
            )));
        }
        Ok(path)
    }

    pub fn effective(&self) -> BTreeMap<String, String> {
        self.effective.borrow().clone()
    }
}

/// PathBuf wrapper so paths flow through the FromStr/Display plumbing.
pub struct PathDisplay(pub PathBuf);

impl FromStr for PathDisplay {
    type Err = std::convert::Infallible;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(Self(PathBuf::from(s)))
    }
}

impl Display for PathDisplay {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0.display())
    }
}
