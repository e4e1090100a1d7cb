// SPDX-License-Identifier: Apache-2.0

//! Contract and function modules: subtyping and member resolution.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::ast::Statement;
use crate::outcome::Outcome;
use crate::types::LabelAddress;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModuleKind {
    Contract,
    Function,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleInfo {
    pub kind: ModuleKind,
    /// Contracts: inherited contracts in declared order. Functions: the owner.
    pub parents: Vec<String>,
    pub members: BTreeMap<String, LabelAddress>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModuleContext {
    pub modules: BTreeMap<String, ModuleInfo>,
    /// Modules visible from each module; the last entry is the nearest.
    pub imports: BTreeMap<String, Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Qualifier {
    None,
    This,
    Explicit(String),
}

impl ModuleContext {
    pub fn add_contract(&mut self, name: &str, inherits: &[&str]) {
        self.modules.insert(
            name.to_string(),
            ModuleInfo {
                kind: ModuleKind::Contract,
                parents: inherits.iter().map(|s| s.to_string()).collect(),
                members: BTreeMap::new(),
            },
        );
    }

    pub fn add_function(&mut self, name: &str, owner: &str) {
        self.modules.insert(
            name.to_string(),
            ModuleInfo {
                kind: ModuleKind::Function,
                parents: vec![owner.to_string()],
                members: BTreeMap::new(),
            },
        );
        if let Some(c) = self.modules.get_mut(owner) {
            c.members.entry(name.to_string()).or_insert(LabelAddress::NIL);
        }
    }

    pub fn add_member(&mut self, module: &str, id: &str, a: LabelAddress) {
        if let Some(m) = self.modules.get_mut(module) {
            m.members.insert(id.to_string(), a);
        }
    }

    pub fn set_imports(&mut self, module: &str, imports: &[&str]) {
        self.imports
            .insert(module.to_string(), imports.iter().map(|s| s.to_string()).collect());
    }

    pub fn owner(&self, function: &str) -> Option<&str> {
        let m = self.modules.get(function)?;
        (m.kind == ModuleKind::Function)
            .then(|| m.parents.first().map(String::as_str))
            .flatten()
    }

    /// Builds the context from declarations. `name_of` maps addresses back
    /// to identifiers; unnamed addresses use their rendering.
    pub fn from_program(program: &Statement, name_of: &dyn Fn(LabelAddress) -> Option<String>) -> ModuleContext {
        let name = |a: LabelAddress| name_of(a).unwrap_or_else(|| a.to_string());
        let mut ctx = ModuleContext::default();
        for item in program.seq_items() {
            let Statement::Contract(id, inherits, body) = item else {
                continue;
            };
            let Some(c) = id.address() else { continue };
            let cname = name(c);
            let parents: Vec<String> = inherits.iter().map(|a| name(*a)).collect();
            ctx.modules.insert(
                cname.clone(),
                ModuleInfo {
                    kind: ModuleKind::Contract,
                    parents: parents.clone(),
                    members: BTreeMap::new(),
                },
            );
            ctx.imports.insert(cname.clone(), parents);
            for m in body.seq_items() {
                match m {
                    Statement::Var(_, e) => {
                        if let Some(a) = e.address() {
                            ctx.add_member(&cname, &name(a), a);
                        }
                    }
                    Statement::Struct(tag, _) => ctx.add_member(&cname, &name(*tag), *tag),
                    Statement::Fun(d) | Statement::Funs(d, _) => {
                        fun_module(&mut ctx, &cname, &d.id, &d.pars, &name);
                    }
                    Statement::Modifier(fid, pars, _) => fun_module(&mut ctx, &cname, fid, pars, &name),
                    _ => {}
                }
            }
        }
        // Functions see their contract's ancestors, then the contract itself.
        let fns: Vec<(String, String)> = ctx
            .modules
            .iter()
            .filter(|(_, m)| m.kind == ModuleKind::Function)
            .filter_map(|(n, m)| Some((n.clone(), m.parents.first()?.clone())))
            .collect();
        for (f, c) in fns {
            let mut chain = ctx.ancestors(&c);
            chain.reverse();
            chain.push(c);
            ctx.imports.insert(f, chain);
        }
        ctx
    }

    /// Strict ancestors of a contract, breadth first in declared order.
    pub fn ancestors(&self, c: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::from([c.to_string()]);
        let mut queue: VecDeque<String> = self
            .modules
            .get(c)
            .map(|m| m.parents.iter().cloned().collect())
            .unwrap_or_default();
        while let Some(p) = queue.pop_front() {
            if !seen.insert(p.clone()) {
                continue;
            }
            if let Some(m) = self.modules.get(&p) {
                queue.extend(m.parents.iter().cloned());
            }
            out.push(p);
        }
        out
    }
}

fn fun_module(
    ctx: &mut ModuleContext,
    cname: &str,
    fid: &crate::ast::Expr,
    pars: &[crate::ast::Expr],
    name: &dyn Fn(LabelAddress) -> String,
) {
    let Some(f) = fid.address() else { return };
    let fname = name(f);
    ctx.add_function(&fname, cname);
    ctx.add_member(cname, &fname, f);
    for p in pars {
        if let Some(a) = p.address() {
            ctx.add_member(&fname, &name(a), a);
        }
    }
}

/// Reflexive-transitive closure of inheritance and function ownership.
pub fn subtype(ctx: &ModuleContext, a: &str, b: &str) -> bool {
    if a == b {
        return true;
    }
    let mut seen = BTreeSet::new();
    let mut stack = vec![a.to_string()];
    while let Some(m) = stack.pop() {
        if m == b {
            return true;
        }
        if !seen.insert(m.clone()) {
            continue;
        }
        if let Some(info) = ctx.modules.get(&m) {
            stack.extend(info.parents.iter().cloned());
        }
    }
    false
}

/// Resolves an identifier used in `current` to its address.
pub fn resolve_call(ctx: &ModuleContext, current: &str, id: &str, q: &Qualifier) -> Outcome<LabelAddress> {
    let Some(cur) = ctx.modules.get(current) else {
        return Outcome::error("invalid-module", format!("{current} is not a module"));
    };
    let lookup = |m: &str| ctx.modules.get(m).and_then(|i| i.members.get(id)).copied();
    match q {
        Qualifier::None => {
            if let Some(a) = cur.members.get(id) {
                return Outcome::Some(*a);
            }
            let imports = ctx.imports.get(current).map(Vec::as_slice).unwrap_or(&[]);
            for m in imports.iter().rev() {
                if let Some(a) = lookup(m) {
                    return Outcome::Some(a);
                }
            }
            Outcome::error("unresolved", format!("{id} is not visible from {current}"))
        }
        Qualifier::This => {
            if cur.kind != ModuleKind::Function {
                return Outcome::error("this-outside-function", format!("{current} is not a function"));
            }
            let Some(c) = ctx.owner(current) else {
                return Outcome::error("this-outside-function", format!("{current} has no contract"));
            };
            std::iter::once(c.to_string())
                .chain(ctx.ancestors(c))
                .find_map(|m| lookup(&m))
                .map_or_else(
                    || Outcome::error("unresolved", format!("this.{id} is not a member of {c}")),
                    Outcome::Some,
                )
        }
        Qualifier::Explicit(m) => {
            let visible = m == current || ctx.imports.get(current).is_some_and(|imps| imps.iter().any(|x| x == m));
            if !visible || !ctx.modules.contains_key(m) {
                return Outcome::error("invalid-module", format!("{m} is not visible from {current}"));
            }
            lookup(m).map_or_else(
                || Outcome::error("unresolved", format!("{m}.{id} does not exist")),
                Outcome::Some,
            )
        }
    }
}

/// Inheritance lists agree as sets.
pub fn inherit_check<T: Ord + Clone>(ctx_inherits: &[T], declared: &[T]) -> bool {
    let a: BTreeSet<T> = ctx_inherits.iter().cloned().collect();
    let b: BTreeSet<T> = declared.iter().cloned().collect();
    a == b
}
