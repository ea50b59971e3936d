use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum alias length in bytes.
pub const MAX_ALIAS_LEN: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AliasError {
    #[error("alias is empty")]
    Empty,
    #[error("alias `{0}` is longer than {MAX_ALIAS_LEN} characters")]
    TooLong(String),
    #[error("alias `{0}` contains characters outside [A-Za-z0-9_-]")]
    InvalidChar(String),
}

/// Case-sensitive agent nickname matching `[A-Za-z0-9_-]{1,64}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Alias(String);

impl Alias {
    pub fn new(name: impl Into<String>) -> Result<Self, AliasError> {
        let name = name.into();
        if name.is_empty() {
            return Err(AliasError::Empty);
        }
        if name.len() > MAX_ALIAS_LEN {
            return Err(AliasError::TooLong(name));
        }
        if !name
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
        {
            return Err(AliasError::InvalidChar(name));
        }
        Ok(Alias(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Alias {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Alias {
    type Err = AliasError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Alias::new(s)
    }
}

impl TryFrom<String> for Alias {
    type Error = AliasError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Alias::new(value)
    }
}

impl From<Alias> for String {
    fn from(value: Alias) -> Self {
        value.0
    }
}

impl AsRef<str> for Alias {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_valid_names() {
        for name in ["orchestrator", "T1", "ns-main", "C_9", &"a".repeat(64)] {
            assert!(Alias::new(name).is_ok(), "{name}");
        }
    }

    #[test]
    fn rejects_invalid_names() {
        assert_eq!(Alias::new(""), Err(AliasError::Empty));
        assert!(matches!(Alias::new("a".repeat(65)), Err(AliasError::TooLong(_))));
        assert!(matches!(Alias::new("has space"), Err(AliasError::InvalidChar(_))));
        assert!(matches!(Alias::new("dot.ted"), Err(AliasError::InvalidChar(_))));
    }

    #[test]
    fn case_sensitive() {
        assert_ne!(Alias::new("T1").unwrap(), Alias::new("t1").unwrap());
    }

    #[test]
    fn serde_rejects_invalid() {
        assert!(serde_json::from_str::<Alias>("\"bad alias\"").is_err());
        let a: Alias = serde_json::from_str("\"T2\"").unwrap();
        assert_eq!(a.as_str(), "T2");
    }
}
