//! Normalized diagnosis code identifiers.

use std::borrow::Borrow;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("empty diagnosis code")]
pub struct EmptyCode;

/// A diagnosis code in canonical form: uppercase, no dots, no surrounding
/// whitespace. `I20.0`, `i200` and ` I200 ` all normalize to `I200`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CodeId(String);

impl CodeId {
    pub fn new(raw: &str) -> Result<Self, EmptyCode> {
        let code: String = raw
            .trim()
            .chars()
            .filter(|c| *c != '.')
            .flat_map(char::to_uppercase)
            .collect();
        if code.is_empty() {
            Err(EmptyCode)
        } else {
            Ok(CodeId(code))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for CodeId {
    type Err = EmptyCode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CodeId::new(s)
    }
}

impl fmt::Display for CodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for CodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for CodeId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Builds a code list from string literals. Panics on empty entries; meant
/// for fixtures and examples.
pub fn codes<I, S>(raw: I) -> Vec<CodeId>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    raw.into_iter()
        .map(|s| CodeId::new(s.as_ref()).expect("non-empty code"))
        .collect()
}
