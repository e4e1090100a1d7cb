// SPDX-License-Identifier: Apache-2.0

use std::fmt;

/// A tagged runtime failure. The tag names the evaluation rule that gave up.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{tag}: {detail}")]
pub struct Fault {
    pub tag: &'static str,
    pub detail: String,
}

impl Fault {
    pub fn new(tag: &'static str, detail: impl Into<String>) -> Fault {
        Fault {
            tag,
            detail: detail.into(),
        }
    }
}

/// Three-way result: a meaningful value, nothing, or a tagged error.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome<T> {
    Some(T),
    None,
    Error(Fault),
}

impl<T> Outcome<T> {
    pub fn error(tag: &'static str, detail: impl Into<String>) -> Outcome<T> {
        Outcome::Error(Fault::new(tag, detail))
    }

    pub fn is_some(&self) -> bool {
        matches!(self, Outcome::Some(_))
    }

    pub fn is_error(&self) -> bool {
        matches!(self, Outcome::Error(_))
    }

    pub fn some(self) -> Option<T> {
        match self {
            Outcome::Some(v) => Some(v),
            _ => None,
        }
    }

    /// Collapses `None` into a fault carrying `tag`.
    pub fn into_result(self, tag: &'static str) -> Result<T, Fault> {
        match self {
            Outcome::Some(v) => Ok(v),
            Outcome::None => Err(Fault::new(tag, "no value")),
            Outcome::Error(e) => Err(e),
        }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Outcome<U> {
        match self {
            Outcome::Some(v) => Outcome::Some(f(v)),
            Outcome::None => Outcome::None,
            Outcome::Error(e) => Outcome::Error(e),
        }
    }

    pub fn unwrap(self) -> T
    where
        T: fmt::Debug,
    {
        match self {
            Outcome::Some(v) => v,
            Outcome::None => panic!("called unwrap on Outcome::None"),
            Outcome::Error(e) => panic!("called unwrap on Outcome::Error({e})"),
        }
    }
}

impl<T> From<Result<T, Fault>> for Outcome<T> {
    fn from(r: Result<T, Fault>) -> Outcome<T> {
        match r {
            Ok(v) => Outcome::Some(v),
            Err(e) => Outcome::Error(e),
        }
    }
}
