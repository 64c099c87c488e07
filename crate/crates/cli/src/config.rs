//! Flat `key=value` configuration with flag-over-file precedence.
//!
//! Resolution order for every setting: command-line flag, then the config
//! file (`--config` or `$NEWSFLOW_CONFIG`), then the built-in default.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;

/// Error in how the tool was invoked (bad flag value, missing required
/// setting, malformed config file). Mapped to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage_err(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

/// Keys a config file may define; anything else is rejected so typos fail
/// loudly instead of silently falling back to defaults.
const KNOWN_KEYS: [&str; 17] = [
    "beta",
    "coarse-th",
    "corpus",
    "embeddings",
    "end",
    "fine-th",
    "groups",
    "k",
    "max-iters",
    "mu-floor",
    "out-dir",
    "seed",
    "seed-window",
    "seeds",
    "start",
    "threads",
    "tol",
];

/// Parsed config file contents (possibly empty when no file was given).
#[derive(Debug, Default)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<FileConfig> {
        let text = fs::read_to_string(path)
            .map_err(|e| usage_err(format!("cannot read config file {}: {e}", path.display())))?;
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                usage_err(format!(
                    "{}:{}: expected key=value, found {line:?}",
                    path.display(),
                    idx + 1
                ))
            })?;
            let key = key.trim();
            let value = value.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(usage_err(format!(
                    "{}:{}: unknown config key {key:?}",
                    path.display(),
                    idx + 1
                )));
            }
            values.insert(key.to_string(), value.to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// Settings context shared by every command: the loaded config file plus the
/// globally applicable resolved values.
pub struct Ctx {
    pub file: FileConfig,
    pub out_dir: PathBuf,
    pub threads: usize,
}

impl Ctx {
    /// Flag value, else config-file value parsed as `T`, else `None`.
    pub fn opt<T>(&self, flag: Option<T>, key: &str) -> anyhow::Result<Option<T>>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                usage_err(format!("config key {key}: invalid value {raw:?}: {e}"))
            }),
        }
    }

    /// Like [`Ctx::opt`] but the setting is mandatory.
    pub fn require<T>(&self, flag: Option<T>, key: &str) -> anyhow::Result<T>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        self.opt(flag, key)?.ok_or_else(|| {
            usage_err(format!("missing required setting --{key} (flag or config file)"))
        })
    }

    pub fn opt_path(&self, flag: &Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.clone()
            .or_else(|| self.file.get(key).map(PathBuf::from))
    }

    pub fn require_path(&self, flag: &Option<PathBuf>, key: &str) -> anyhow::Result<PathBuf> {
        self.opt_path(flag, key).ok_or_else(|| {
            usage_err(format!("missing required setting --{key} (flag or config file)"))
        })
    }

    pub fn date(&self, flag: Option<NaiveDate>, key: &str) -> anyhow::Result<NaiveDate> {
        self.require(flag, key)
    }
}

/// Parse `YYYY-MM-DD`, the only accepted date format.
pub fn parse_date(s: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|_| format!("expected a YYYY-MM-DD date, found {s:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_values_comments_and_blanks() {
        let f = write_temp("# header\n\nbeta = 0.5\nseed=42\n");
        let cfg = FileConfig::load(f.path()).unwrap();
        assert_eq!(cfg.get("beta"), Some("0.5"));
        assert_eq!(cfg.get("seed"), Some("42"));
        assert_eq!(cfg.get("k"), None);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        let f = write_temp("betta = 0.5\n");
        assert!(FileConfig::load(f.path()).is_err());
        let f = write_temp("just some words\n");
        assert!(FileConfig::load(f.path()).is_err());
    }

    #[test]
    fn flag_beats_file_beats_default() {
        let f = write_temp("beta = 0.7\n");
        let ctx = Ctx {
            file: FileConfig::load(f.path()).unwrap(),
            out_dir: PathBuf::from("."),
            threads: 1,
        };
        assert_eq!(ctx.opt(Some(0.9f64), "beta").unwrap(), Some(0.9));
        assert_eq!(ctx.opt::<f64>(None, "beta").unwrap(), Some(0.7));
        assert_eq!(ctx.opt::<f64>(None, "fine-th").unwrap(), None);
    }

    #[test]
    fn date_parsing() {
        assert!(parse_date("2019-01-28").is_ok());
        assert!(parse_date("01/28/2019").is_err());
    }
}
