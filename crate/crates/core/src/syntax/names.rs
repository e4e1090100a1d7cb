// SPDX-License-Identifier: Apache-2.0

//! Identifier to address table built by the loader.

use std::collections::BTreeMap;

use crate::types::LabelAddress;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeclKind {
    Var,
    Par,
    Fun,
    Contract,
    Struct,
    /// Used but never declared.
    Free,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decl {
    pub addr: LabelAddress,
    pub kind: DeclKind,
    pub name: String,
}

/// Scoped identifiers and their addresses. Keys are dotted scope paths such
/// as `Token.transfer.amount`; global names have no prefix.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Names {
    pub(crate) decls: BTreeMap<String, Decl>,
    pub(crate) display: BTreeMap<LabelAddress, String>,
    pub(crate) name_count: BTreeMap<String, usize>,
}

impl Names {
    pub(crate) fn insert(&mut self, key: String, d: Decl) {
        if !self.display.contains_key(&d.addr) {
            *self.name_count.entry(d.name.clone()).or_default() += 1;
            self.display.insert(d.addr, d.name.clone());
        }
        self.decls.insert(key, d);
    }

    /// Declaration under a fully qualified key.
    pub fn get(&self, key: &str) -> Option<&Decl> {
        self.decls.get(key)
    }

    /// Address of a fully qualified identifier.
    pub fn addr(&self, key: &str) -> Option<LabelAddress> {
        self.decls.get(key).map(|d| d.addr)
    }

    /// Address of the first declaration whose plain name is `name`.
    pub fn find(&self, name: &str) -> Option<LabelAddress> {
        self.decls.values().find(|d| d.name == name).map(|d| d.addr)
    }

    pub fn name_of(&self, a: LabelAddress) -> Option<&str> {
        self.display.get(&a).map(String::as_str)
    }

    /// A name that identifies `a` on its own, if there is one.
    pub fn unique_name_of(&self, a: LabelAddress) -> Option<&str> {
        let n = self.name_of(a)?;
        (self.name_count.get(n) == Some(&1)).then_some(n)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Decl)> {
        self.decls.iter()
    }

    pub fn len(&self) -> usize {
        self.decls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decls.is_empty()
    }
}
