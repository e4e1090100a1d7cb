// SPDX-License-Identifier: Apache-2.0

//! Loader for the surface notation: names become addresses, constructor
//! lists become ASTs.
//!
//! Declarations are collected first so that forward references resolve.
//! Each declaration gets the next free address in source order; functions
//! and modifiers take two (the second is the return slot). Names used but
//! never declared are allocated afterwards in order of first use.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_bigint::BigInt;

use crate::ast::{Access, BinClass, BinOp, Expr, FunDecl, Statement, UnClass, UnOp};
use crate::desugar;
use crate::types::{ArrayIndex, ByteSize, IntSize, LabelAddress, LolisaMapType, LolisaType, MapArrayIndex, Signedness};
use crate::value::{FieldArg, FieldHead, IntVal, MapKey, RefId, RefKind, Value};

use super::names::{Decl, DeclKind, Names};
use super::sexp::{read_all, ParseError, Sexp};

/// A loaded program together with its identifier table.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceProgram {
    pub source: String,
    pub statement: Statement,
    pub names: Names,
}

type R<T> = Result<T, ParseError>;

fn err<T>(s: &Sexp, msg: impl Into<String>) -> R<T> {
    Err(ParseError::new(s.pos(), msg))
}

const SEP: &str = ";;";
const PATH_NOISE: [&str; 6] = ["~>", "~>>", "->>", "\\\\", "\\\\\\", "\\"];

/// Parses and loads a whole program.
pub fn parse(src: &str) -> R<SurfaceProgram> {
    let items = read_all(src)?;
    if items.is_empty() {
        return Err(ParseError::new(Default::default(), "empty program"));
    }
    let mut l = Loader::default();
    l.cursor = LabelAddress::USER_BASE;
    for it in &items {
        l.prescan(it);
    }
    for part in split_seq(&items)? {
        l.collect(part, &[])?;
    }
    let statement = l.seq(&items)?;
    Ok(SurfaceProgram {
        source: src.to_string(),
        statement,
        names: l.names,
    })
}

/// Number of top-level statements in `src`.
pub fn read_item_count(src: &str) -> R<usize> {
    let items = read_all(src)?;
    Ok(split_seq(&items)?.len())
}

/// Parses a type on its own; names must be raw addresses.
pub fn parse_type(src: &str) -> R<LolisaType> {
    let items = read_all(src)?;
    let [one] = items.as_slice() else {
        return Err(ParseError::new(Default::default(), "expected exactly one type"));
    };
    Loader::default().ty(one)
}

/// Parses an expression on its own against a name table.
pub fn parse_expr(src: &str, names: &Names) -> R<Expr> {
    let items = read_all(src)?;
    let [one] = items.as_slice() else {
        return Err(ParseError::new(Default::default(), "expected exactly one expression"));
    };
    let top = names.iter().map(|(_, d)| d.addr.0 + 2).max().unwrap_or(0);
    let mut l = Loader {
        names: names.clone(),
        cursor: top.max(LabelAddress::USER_BASE),
        ..Loader::default()
    };
    l.expr(one)
}

/// `_0xmsg`, `_Oxmsg` or `_0x0000002a`.
pub fn literal_address(s: &str) -> Option<LabelAddress> {
    let rest = s.strip_prefix("_0x").or_else(|| s.strip_prefix("_Ox"))?;
    if let Some(a) = LabelAddress::from_special_name(rest) {
        return Some(a);
    }
    if rest.len() == 8 && rest.chars().all(|c| c.is_ascii_hexdigit()) {
        return u32::from_str_radix(rest, 16).ok().map(LabelAddress);
    }
    None
}

fn builtin(name: &str) -> Option<LabelAddress> {
    match name {
        "send" | "transfer" => Some(LabelAddress::SEND),
        "call" => Some(LabelAddress::CALL),
        _ => None,
    }
}

fn split_seq(items: &[Sexp]) -> R<Vec<&Sexp>> {
    let mut out = Vec::new();
    let mut expect_item = true;
    for it in items {
        if it.is_atom(SEP) {
            if expect_item {
                return err(it, "';;' needs a statement on both sides");
            }
            expect_item = true;
        } else {
            if !expect_item {
                return err(it, "statements must be separated by ';;'");
            }
            out.push(it);
            expect_item = false;
        }
    }
    match items.last() {
        Some(last) if expect_item => err(last, "';;' needs a statement on both sides"),
        None => Err(ParseError::new(Default::default(), "empty statement sequence")),
        _ => Ok(out),
    }
}

/// A parenthesised `a ;; b ;; ...` group, as opposed to a constructor form
/// whose trailing body happens to contain separators.
fn is_group(xs: &[Sexp]) -> bool {
    let starts_stmt = match xs.first() {
        Some(Sexp::Atom(a, _)) => matches!(a.as_str(), "Snil" | "Throw" | "Fstop" | "Break" | "Continue"),
        Some(_) => true,
        None => false,
    };
    starts_stmt && xs.iter().any(|x| x.is_atom(SEP))
}

struct FunHeader<'a> {
    access: Option<Access>,
    constant: bool,
    payable: bool,
    name: &'a Sexp,
    ret: &'a Sexp,
    params: &'a Sexp,
    modis: &'a Sexp,
    body: &'a [Sexp],
}

fn access_of(s: &Sexp) -> Option<Access> {
    if let Some(a) = s.atom() {
        return Access::from_name(a);
    }
    match s.list() {
        Some([h, a]) if h.is_atom("Some") => a.atom().and_then(Access::from_name),
        _ => None,
    }
}

fn fun_header(xs: &[Sexp]) -> R<FunHeader<'_>> {
    let mut h = FunHeader {
        access: None,
        constant: false,
        payable: false,
        name: &xs[0],
        ret: &xs[0],
        params: &xs[0],
        modis: &xs[0],
        body: &[],
    };
    let mut i = 1;
    while let Some(x) = xs.get(i) {
        if let Some(a) = access_of(x) {
            h.access = Some(a);
        } else if x.is_atom("constant") {
            h.constant = true;
        } else if x.is_atom("payable") {
            h.payable = true;
        } else {
            break;
        }
        i += 1;
    }
    if xs.len() < i + 5 {
        return err(
            &xs[0],
            "function needs a name, return type, parameters, modifiers and a body",
        );
    }
    h.name = &xs[i];
    h.ret = &xs[i + 1];
    h.params = &xs[i + 2];
    h.modis = &xs[i + 3];
    h.body = &xs[i + 4..];
    if h.params.list().is_none() || h.modis.list().is_none() {
        return err(&xs[0], "parameters and modifiers are written as lists");
    }
    Ok(h)
}

/// `x`, `(Some x)` or `None`.
fn opt_name(s: &Sexp) -> R<Option<&Sexp>> {
    if s.is_atom("None") {
        return Ok(None);
    }
    if s.atom().is_some() {
        return Ok(Some(s));
    }
    match s.list() {
        Some([h, x]) if h.is_atom("Some") && x.atom().is_some() => Ok(Some(x)),
        _ => err(s, "expected an identifier"),
    }
}

fn name_text(s: &Sexp) -> R<&str> {
    match s.atom() {
        Some(a) if a != SEP => Ok(a),
        _ => err(s, "expected an identifier"),
    }
}

fn parse_int_literal(a: &str) -> Option<(BigInt, bool)> {
    let (digits, unsigned) = match a.strip_suffix('u') {
        Some(d) => (d, true),
        None => (a, false),
    };
    let body = digits.strip_prefix('-').unwrap_or(digits);
    if body.is_empty() || !body.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    digits.parse::<BigInt>().ok().map(|v| (v, unsigned))
}

fn parse_float_literal(a: &str) -> Option<f64> {
    let numeric = a.chars().next().is_some_and(|c| c.is_ascii_digit() || c == '-');
    if numeric && (a.contains('.') || a.contains('e') || a.contains("inf") || a.contains("NaN")) {
        a.parse().ok()
    } else {
        None
    }
}

fn op_of(s: &Sexp) -> Option<&str> {
    match s {
        Sexp::Op(o, _) => Some(o),
        _ => None,
    }
}

#[derive(Default)]
struct Loader {
    names: Names,
    reserved: BTreeSet<u32>,
    cursor: u32,
    parents: BTreeMap<String, Vec<String>>,
    /// Declared types with the scope they were written in.
    types: BTreeMap<String, (Option<Sexp>, Vec<String>)>,
    scope: Vec<String>,
}

fn key(scope: &[String], name: &str) -> String {
    if scope.is_empty() {
        name.to_string()
    } else {
        format!("{}.{name}", scope.join("."))
    }
}

impl Loader {
    // ---- pass 0: raw addresses written in the source are never handed out

    fn prescan(&mut self, s: &Sexp) {
        match s {
            Sexp::Atom(a, _) => {
                if let Some(addr) = literal_address(a) {
                    self.reserved.insert(addr.0);
                }
            }
            Sexp::List(xs, _) => {
                let head = s.head();
                if matches!(head, Some("Fun" | "Funs" | "Modifier")) {
                    let name = if head == Some("Modifier") {
                        xs.get(1)
                    } else {
                        fun_header(xs).ok().map(|h| h.name)
                    };
                    if let Some(addr) = name.and_then(Sexp::atom).and_then(literal_address) {
                        self.reserved.insert(addr.0.wrapping_add(1));
                    }
                }
                for x in xs {
                    self.prescan(x);
                }
            }
            _ => {}
        }
    }

    fn alloc(&mut self, slots: u32, at: &Sexp) -> R<LabelAddress> {
        loop {
            let a = self.cursor;
            if a.saturating_add(slots) >= LabelAddress::DYNAMIC_BASE {
                return err(at, "out of identifier addresses");
            }
            if (a..a + slots).all(|x| !self.reserved.contains(&x)) {
                self.cursor = a + slots;
                return Ok(LabelAddress(a));
            }
            self.cursor += 1;
        }
    }

    // ---- pass 1: declarations

    fn declare(&mut self, scope: &[String], name: &Sexp, kind: DeclKind, ty: Option<&Sexp>) -> R<()> {
        let text = name_text(name)?;
        if literal_address(text).is_some() {
            return Ok(());
        }
        let k = key(scope, text);
        if self.names.get(&k).is_some() {
            return err(name, format!("{text} already exists"));
        }
        let slots = if kind == DeclKind::Fun { 2 } else { 1 };
        let addr = self.alloc(slots, name)?;
        self.names.insert(
            k.clone(),
            Decl {
                addr,
                kind,
                name: text.to_string(),
            },
        );
        self.types.insert(k, (ty.cloned(), scope.to_vec()));
        Ok(())
    }

    fn collect(&mut self, s: &Sexp, scope: &[String]) -> R<()> {
        let Some(xs) = s.list() else { return Ok(()) };
        if is_group(xs) {
            for x in xs.iter().filter(|x| !x.is_atom(SEP)) {
                self.collect(x, scope)?;
            }
            return Ok(());
        }
        match s.head() {
            Some("Contract") => {
                let [_, name, parents, body @ ..] = xs else {
                    return err(s, "contract needs a name, a parent list and a body");
                };
                self.declare(scope, name, DeclKind::Contract, None)?;
                let ps = parents
                    .list()
                    .ok_or_else(|| ParseError::new(parents.pos(), "parents are written as a list"))?;
                let ps: Vec<String> = ps.iter().map(|p| name_text(p).map(str::to_string)).collect::<R<_>>()?;
                let cname = name_text(name)?.to_string();
                self.parents.insert(cname.clone(), ps);
                let inner = [scope, &[cname]].concat();
                for b in body.iter().filter(|x| !x.is_atom(SEP)) {
                    self.collect(b, &inner)?;
                }
            }
            Some(h @ ("Fun" | "Funs")) => {
                let hd = fun_header(xs)?;
                let ret = (h == "Fun").then_some(hd.ret);
                self.declare(scope, hd.name, DeclKind::Fun, ret)?;
                let inner = [scope, &[name_text(hd.name)?.to_string()]].concat();
                self.collect_params(hd.params, &inner)?;
                for b in hd.body.iter().filter(|x| !x.is_atom(SEP)) {
                    self.collect(b, &inner)?;
                }
            }
            Some("Modifier") => {
                let [_, name, params, body @ ..] = xs else {
                    return err(s, "modifier needs a name, parameters and a body");
                };
                self.declare(scope, name, DeclKind::Fun, None)?;
                let inner = [scope, &[name_text(name)?.to_string()]].concat();
                self.collect_params(params, &inner)?;
                for b in body.iter().filter(|x| !x.is_atom(SEP)) {
                    self.collect(b, &inner)?;
                }
            }
            Some("Var") => {
                let Some(e) = xs.last().filter(|_| xs.len() >= 2) else {
                    return err(s, "Var needs an identifier");
                };
                match e.list() {
                    Some([h, x, t]) if h.is_atom("Evar") => {
                        if let Some(x) = opt_name(x)? {
                            self.declare(scope, x, DeclKind::Var, Some(t))?;
                        }
                    }
                    _ => return err(e, "Var declares an (Evar name type)"),
                }
            }
            Some("Struct") => {
                let Some(name) = xs.get(1) else {
                    return err(s, "Struct needs a name");
                };
                self.declare(scope, name, DeclKind::Struct, None)?;
            }
            _ => {
                for x in xs {
                    self.collect(x, scope)?;
                }
            }
        }
        Ok(())
    }

    fn collect_params(&mut self, params: &Sexp, scope: &[String]) -> R<()> {
        let Some(ps) = params.list() else {
            return err(params, "parameters are written as a list");
        };
        for p in ps {
            match p.list() {
                Some([h, x, t]) if h.is_atom("Epar") => {
                    if let Some(x) = opt_name(x)? {
                        self.declare(scope, x, DeclKind::Par, Some(t))?;
                    }
                }
                _ => return err(p, "parameters are (Epar name type)"),
            }
        }
        Ok(())
    }

    // ---- pass 2: name resolution

    /// Innermost declaration visible from the current scope: the function,
    /// then its contract, the contract's ancestors, then globals.
    fn lookup(&self, name: &str) -> Option<(String, Decl)> {
        let found = |k: String| self.names.get(&k).map(|d| (k.clone(), d.clone()));
        for depth in (1..=self.scope.len()).rev() {
            if let Some(hit) = found(key(&self.scope[..depth], name)) {
                return Some(hit);
            }
            if depth == 1 {
                let c = &self.scope[0];
                let mut seen = BTreeSet::from([c.clone()]);
                let mut q: VecDeque<String> = self.parents.get(c).cloned().unwrap_or_default().into();
                while let Some(p) = q.pop_front() {
                    if !seen.insert(p.clone()) {
                        continue;
                    }
                    if let Some(hit) = found(key(&[p.clone()], name)) {
                        return Some(hit);
                    }
                    q.extend(self.parents.get(&p).cloned().unwrap_or_default());
                }
            }
        }
        found(name.to_string())
    }

    /// Address for a name in identifier position, allocating if unknown.
    fn resolve(&mut self, s: &Sexp, slots: u32) -> R<LabelAddress> {
        let text = name_text(s)?;
        if let Some(a) = literal_address(text) {
            return Ok(a);
        }
        if let Some((_, d)) = self.lookup(text) {
            return Ok(d.addr);
        }
        if let Some(a) = builtin(text) {
            return Ok(a);
        }
        let addr = self.alloc(slots, s)?;
        self.names.insert(
            text.to_string(),
            Decl {
                addr,
                kind: DeclKind::Free,
                name: text.to_string(),
            },
        );
        Ok(addr)
    }

    fn opt_resolve(&mut self, s: &Sexp, slots: u32) -> R<Option<LabelAddress>> {
        match opt_name(s)? {
            Some(x) => self.resolve(x, slots).map(Some),
            None => Ok(None),
        }
    }

    fn declared_type(&mut self, k: &str) -> R<Option<LolisaType>> {
        let Some((Some(t), scope)) = self.types.get(k).cloned() else {
            return Ok(None);
        };
        let saved = std::mem::replace(&mut self.scope, scope);
        let r = self.ty(&t);
        self.scope = saved;
        r.map(Some)
    }

    fn with_scope<T>(&mut self, name: &Sexp, f: impl FnOnce(&mut Self) -> R<T>) -> R<T> {
        self.scope.push(name_text(name)?.to_string());
        let r = f(self);
        self.scope.pop();
        r
    }

    // ---- statements

    fn seq(&mut self, items: &[Sexp]) -> R<Statement> {
        let parts = split_seq(items)?;
        let stmts = parts.into_iter().map(|p| self.stmt(p)).collect::<R<Vec<_>>>()?;
        Ok(Statement::seq_all(stmts))
    }

    fn stmt(&mut self, s: &Sexp) -> R<Statement> {
        let xs = match s {
            Sexp::Atom(a, _) => {
                return match a.as_str() {
                    "Snil" => Ok(Statement::Snil),
                    "Throw" => Ok(Statement::Throw),
                    "Fstop" => Ok(Statement::Fstop),
                    "Break" => Ok(Statement::Break),
                    "Continue" => Ok(Statement::Continue),
                    other => err(s, format!("expected a statement, found {other}")),
                }
            }
            Sexp::List(xs, _) => xs,
            _ => return err(s, "expected a statement"),
        };
        if xs.is_empty() {
            return err(s, "empty statement");
        }
        if is_group(xs) {
            return self.seq(xs);
        }
        if xs.len() == 1 {
            if xs[0].is_atom("Returns") {
                return Ok(Statement::Returns(Vec::new()));
            }
            return self.stmt(&xs[0]);
        }
        let Some(head) = s.head() else {
            return err(s, "expected a statement constructor");
        };
        let arity = |n: usize| -> R<()> {
            if xs.len() == n + 1 {
                Ok(())
            } else {
                err(s, format!("{head} takes {n} arguments"))
            }
        };
        match head {
            "Var" => {
                let access = match xs.len() {
                    2 => None,
                    3 => {
                        Some(access_of(&xs[1]).ok_or_else(|| ParseError::new(xs[1].pos(), "unknown access modifier"))?)
                    }
                    _ => return err(s, "Var takes an optional access modifier and an identifier"),
                };
                Ok(Statement::Var(access, self.expr(&xs[xs.len() - 1])?))
            }
            "Struct" => {
                let tag = self.resolve(&xs[1], 1)?;
                let mut members = Vec::new();
                for m in &xs[2..] {
                    match m.list() {
                        Some([t, n]) => members.push((self.ty(t)?, name_text(n)?.to_string())),
                        _ => return err(m, "struct members are (type name)"),
                    }
                }
                Ok(Statement::Struct(tag, members))
            }
            "Assignv" => {
                arity(2)?;
                Ok(Statement::Assignv(self.expr(&xs[1])?, self.expr(&xs[2])?))
            }
            "Return" => {
                arity(1)?;
                Ok(Statement::Return(self.expr(&xs[1])?))
            }
            "Returns" => Ok(Statement::Returns(self.exprs(&xs[1..])?)),
            "Seq" => {
                arity(2)?;
                Ok(Statement::seq(self.stmt(&xs[1])?, self.stmt(&xs[2])?))
            }
            "If" => {
                arity(3)?;
                Ok(Statement::if_(
                    self.expr(&xs[1])?,
                    self.stmt(&xs[2])?,
                    self.stmt(&xs[3])?,
                ))
            }
            "Loop_while" => {
                arity(2)?;
                Ok(Statement::while_(self.expr(&xs[1])?, self.stmt(&xs[2])?))
            }
            "Loop_for" => {
                arity(4)?;
                Ok(Statement::LoopFor(
                    Box::new(self.stmt(&xs[1])?),
                    self.expr(&xs[2])?,
                    Box::new(self.stmt(&xs[3])?),
                    Box::new(self.stmt(&xs[4])?),
                ))
            }
            "Fun_call" => {
                let callee = self.callee(&xs[1])?;
                Ok(Statement::FunCall(callee, self.call_args(&xs[2..])?))
            }
            "Contract" => self.contract(s, xs),
            "Fun" | "Funs" => self.function(xs),
            "Modifier" => {
                let [_, name, params, body @ ..] = xs.as_slice() else {
                    return err(s, "modifier needs a name, parameters and a body");
                };
                let a = self.resolve(name, 2)?;
                let (pars, body) = self.with_scope(name, |l| Ok((l.params(params)?, l.seq(body)?)))?;
                Ok(Statement::Modifier(
                    Expr::fun(a, LolisaType::Tundef),
                    pars,
                    Box::new(body),
                ))
            }
            "requires" => {
                arity(1)?;
                Ok(desugar::requires(self.expr(&xs[1])?))
            }
            "Incr" => {
                arity(1)?;
                Ok(desugar::incr(self.expr(&xs[1])?))
            }
            "Decr" => {
                arity(1)?;
                Ok(desugar::decr(self.expr(&xs[1])?))
            }
            "Assign_op" => {
                arity(3)?;
                let class = op_of(&xs[1])
                    .and_then(BinClass::from_symbol)
                    .ok_or_else(|| ParseError::new(xs[1].pos(), "expected a binary operator such as (+)"))?;
                Ok(desugar::op_assign(class, self.expr(&xs[2])?, self.expr(&xs[3])?))
            }
            "Do_while" => {
                arity(2)?;
                Ok(desugar::do_while(self.stmt(&xs[1])?, self.expr(&xs[2])?))
            }
            "New" => {
                let c = name_text(&xs[1])?;
                let k = key(&[c.to_string()], "constructor");
                let Some(d) = self.names.get(&k).cloned() else {
                    return err(&xs[1], format!("contract {c} has no constructor"));
                };
                let ret = self.declared_type(&k)?.unwrap_or(LolisaType::Tundef);
                let args = self.call_args(&xs[2..])?;
                Ok(desugar::new_contract(Expr::fun(d.addr, ret), args))
            }
            "Assign_call" => {
                if xs.len() < 3 {
                    return err(s, "Assign_call needs a target and a function");
                }
                let v = self.expr(&xs[1])?;
                let f = self.callee(&xs[2])?;
                let args = self.call_args(&xs[3..])?;
                Ok(desugar::assign_call(v, f, args))
            }
            other => err(s, format!("unknown statement {other}")),
        }
    }

    fn contract(&mut self, s: &Sexp, xs: &[Sexp]) -> R<Statement> {
        let [_, name, parents, body @ ..] = xs else {
            return err(s, "contract needs a name, a parent list and a body");
        };
        let a = self.resolve(name, 1)?;
        let mut ps = Vec::new();
        for p in parents.list().unwrap_or(&[]) {
            let text = name_text(p)?;
            let addr = match literal_address(text) {
                Some(x) => x,
                None => match self.names.get(text) {
                    Some(d) if d.kind == DeclKind::Contract => d.addr,
                    _ => return err(p, format!("unknown contract {text}")),
                },
            };
            ps.push(addr);
        }
        let body = self.with_scope(name, |l| l.seq(body))?;
        Ok(Statement::Contract(Expr::con(a), ps, Box::new(body)))
    }

    fn function(&mut self, xs: &[Sexp]) -> R<Statement> {
        let h = fun_header(xs)?;
        let a = self.resolve(h.name, 2)?;
        let is_fun = xs[0].is_atom("Fun");
        let (ret, rets) = if is_fun {
            (self.ty(h.ret)?, Vec::new())
        } else {
            let ts = h
                .ret
                .list()
                .ok_or_else(|| ParseError::new(h.ret.pos(), "Funs returns a list of types"))?;
            (
                LolisaType::Tundef,
                ts.iter().map(|t| self.ty(t)).collect::<R<Vec<_>>>()?,
            )
        };
        let (pars, modis, body) = self.with_scope(h.name, |l| {
            let pars = l.params(h.params)?;
            let modis = l.exprs(h.modis.list().unwrap_or(&[]))?;
            Ok((pars, modis, l.seq(h.body)?))
        })?;
        let d = Box::new(FunDecl {
            access: h.access,
            constant: h.constant,
            payable: h.payable,
            id: Expr::fun(a, ret),
            pars,
            modis,
            body: Box::new(body),
        });
        Ok(if is_fun {
            Statement::Fun(d)
        } else {
            Statement::Funs(d, rets)
        })
    }

    fn params(&mut self, params: &Sexp) -> R<Vec<Expr>> {
        params
            .list()
            .ok_or_else(|| ParseError::new(params.pos(), "parameters are written as a list"))?
            .iter()
            .map(|p| self.expr(p))
            .collect()
    }

    fn exprs(&mut self, xs: &[Sexp]) -> R<Vec<Expr>> {
        xs.iter().map(|x| self.expr(x)).collect()
    }

    /// Call arguments; the `(pccons e rest)` / `pcnil` spelling is accepted.
    fn call_args(&mut self, xs: &[Sexp]) -> R<Vec<Expr>> {
        let mut out = Vec::new();
        for x in xs {
            self.pc_list(x, &mut out)?;
        }
        Ok(out)
    }

    fn pc_list(&mut self, x: &Sexp, out: &mut Vec<Expr>) -> R<()> {
        if x.is_atom("pcnil") {
            return Ok(());
        }
        match x.list() {
            Some([h, e, rest]) if h.is_atom("pccons") => {
                out.push(self.expr(e)?);
                self.pc_list(rest, out)
            }
            _ => {
                out.push(self.expr(x)?);
                Ok(())
            }
        }
    }

    fn callee(&mut self, s: &Sexp) -> R<Expr> {
        if let Some(a) = s.atom() {
            if let Some(b) = builtin(a) {
                if self.lookup(a).is_none() {
                    return Ok(Expr::fun(b, LolisaType::Tbool));
                }
            }
        }
        self.expr(s)
    }

    // ---- expressions

    fn expr(&mut self, s: &Sexp) -> R<Expr> {
        match s {
            Sexp::Atom(a, _) => self.atom_expr(s, a),
            Sexp::Str(v, _) => Ok(Expr::constant(Value::Vstring(v.clone()))),
            Sexp::Op(o, _) => err(s, format!("operator ({o}) needs operands")),
            Sexp::List(xs, _) => self.list_expr(s, xs),
        }
    }

    fn atom_expr(&mut self, s: &Sexp, a: &str) -> R<Expr> {
        if let Some(v) = self.scalar_literal(s, a)? {
            return Ok(Expr::constant(v));
        }
        if literal_address(a).is_some() {
            return err(s, format!("write the kind of {a}, for example (Evar {a} Tint)"));
        }
        let Some((k, d)) = self.lookup(a) else {
            if let Some(b) = builtin(a) {
                return Ok(Expr::fun(b, LolisaType::Tbool));
            }
            return err(s, format!("unknown identifier {a}"));
        };
        let t = self.declared_type(&k)?;
        match d.kind {
            DeclKind::Var => Ok(Expr::var(d.addr, t.unwrap_or(LolisaType::Tundef))),
            DeclKind::Par => Ok(Expr::par(d.addr, t.unwrap_or(LolisaType::Tundef))),
            DeclKind::Fun => Ok(Expr::fun(d.addr, t.unwrap_or(LolisaType::Tundef))),
            DeclKind::Contract => Ok(Expr::con(d.addr)),
            DeclKind::Struct => err(s, format!("{a} is a struct, not a value")),
            DeclKind::Free => err(s, format!("unknown identifier {a}")),
        }
    }

    fn scalar_literal(&mut self, s: &Sexp, a: &str) -> R<Option<Value>> {
        if let Some((v, unsigned)) = parse_int_literal(a) {
            let sign = if unsigned {
                Signedness::Unsigned
            } else {
                Signedness::Signed
            };
            let iv = IntVal::checked(sign, IntSize::I64, v).map_err(|f| ParseError::new(s.pos(), f.to_string()))?;
            return Ok(Some(Value::Vint(iv)));
        }
        if let Some(x) = parse_float_literal(a) {
            return Ok(Some(Value::Vfloat(x)));
        }
        Ok(match a {
            "true" => Some(Value::Vbool(true)),
            "false" => Some(Value::Vbool(false)),
            "Vundef" => Some(Value::Vundef),
            _ => None,
        })
    }

    fn list_expr(&mut self, s: &Sexp, xs: &[Sexp]) -> R<Expr> {
        match xs {
            [] => return err(s, "empty expression"),
            [one] => return self.expr(one),
            [Sexp::Op(o, _), e] => {
                let class = match o.as_str() {
                    "-" => UnClass::Neg,
                    "~" => UnClass::BitNot,
                    "!" => UnClass::Not,
                    _ => return err(s, format!("({o}) is not a unary operator")),
                };
                return Ok(Expr::unary(class, self.expr(e)?));
            }
            [c, e] if c.head() == Some("cast") => {
                let t = self.cast_target(c)?;
                return Ok(Expr::unary(UnClass::Cast(t), self.expr(e)?));
            }
            [_, Sexp::Op(..), _, ..] => return self.infix(s, xs),
            _ => {}
        }
        let head = s.head().unwrap_or("");
        match head {
            "Evar" | "Epar" | "Efun" => {
                let [_, x, t] = xs else {
                    return err(s, format!("{head} takes a name and a type"));
                };
                let slots = if head == "Efun" { 2 } else { 1 };
                let a = self.opt_resolve(x, slots)?;
                let t = self.ty(t)?;
                let (kind, t0) = match head {
                    "Evar" => (crate::ast::ExprKind::Evar(a), LolisaType::Tvid(a)),
                    "Epar" => (crate::ast::ExprKind::Epar(a), LolisaType::Tpid(a)),
                    _ => (crate::ast::ExprKind::Efun(a), LolisaType::Tfid(a)),
                };
                Ok(Expr::new(kind, t0, t))
            }
            "Econ" => {
                let [_, x] = xs else {
                    return err(s, "Econ takes a name");
                };
                let a = self.opt_resolve(x, 1)?;
                let t = LolisaType::Tcid(a);
                Ok(Expr::new(crate::ast::ExprKind::Econ(a), t.clone(), t))
            }
            "Econst" => {
                let [_, v] = xs else {
                    return err(s, "Econst takes a value");
                };
                Ok(Expr::constant(self.value(v)?))
            }
            "Estruct" => {
                let tag = self.resolve(&xs[1], 1)?;
                Ok(Expr::estruct(tag, self.exprs(&xs[2..])?))
            }
            "Emodifier" => {
                let m = self.callee(&xs[1])?;
                let args = xs[2..].iter().map(|a| self.field_arg(a)).collect::<R<Vec<_>>>()?;
                Ok(Expr::modifier(m, args))
            }
            "Ebop" => {
                let [_, o, tin, tout, l, r] = xs else {
                    return err(s, "Ebop takes an operator, two types and two operands");
                };
                let class = op_of(o)
                    .and_then(BinClass::from_symbol)
                    .ok_or_else(|| ParseError::new(o.pos(), "expected a binary operator"))?;
                let op = BinOp::raw(class, self.ty(tin)?, self.ty(tout)?);
                Ok(Expr::bop(op, self.expr(l)?, self.expr(r)?))
            }
            "Euop" => {
                let [_, o, tin, tout, e] = xs else {
                    return err(s, "Euop takes an operator, two types and an operand");
                };
                let class = match (op_of(o), o.head()) {
                    (Some("-"), _) => UnClass::Neg,
                    (Some("~"), _) => UnClass::BitNot,
                    (Some("!"), _) => UnClass::Not,
                    (_, Some("cast")) => UnClass::Cast(self.cast_target(o)?),
                    _ => return err(o, "expected a unary operator"),
                };
                let op = UnOp::raw(class, self.ty(tin)?, self.ty(tout)?);
                Ok(Expr::uop(op, self.expr(e)?))
            }
            h if is_value_ctor(h) => Ok(Expr::constant(self.value(s)?)),
            _ => err(s, "expected an expression"),
        }
    }

    fn cast_target(&mut self, c: &Sexp) -> R<LolisaType> {
        match c.list() {
            Some([_, t]) => self.ty(t),
            _ => err(c, "cast takes a target type: ((cast Tint) e)"),
        }
    }

    fn infix(&mut self, s: &Sexp, xs: &[Sexp]) -> R<Expr> {
        if xs.len() % 2 == 0 {
            return err(s, "an operator chain alternates operands and operators");
        }
        let mut operands = Vec::new();
        let mut ops = Vec::new();
        for (i, x) in xs.iter().enumerate() {
            if i % 2 == 0 {
                operands.push(self.expr(x)?);
            } else {
                let class = op_of(x)
                    .and_then(BinClass::from_symbol)
                    .ok_or_else(|| ParseError::new(x.pos(), "expected a binary operator such as (+)"))?;
                ops.push(class);
            }
        }
        let mut out: Vec<Expr> = Vec::new();
        let mut stack: Vec<BinClass> = Vec::new();
        let reduce = |out: &mut Vec<Expr>, op: BinClass| {
            let r = out.pop().expect("operand");
            let l = out.pop().expect("operand");
            out.push(Expr::binary(op, l, r));
        };
        let mut operands = operands.into_iter();
        out.push(operands.next().expect("chain has an operand"));
        for (op, e) in ops.into_iter().zip(operands) {
            while let Some(top) = stack.last().copied() {
                if top.precedence() < op.precedence() {
                    break;
                }
                stack.pop();
                reduce(&mut out, top);
            }
            stack.push(op);
            out.push(e);
        }
        while let Some(top) = stack.pop() {
            reduce(&mut out, top);
        }
        Ok(out.pop().expect("reduced"))
    }

    // ---- values

    fn value(&mut self, s: &Sexp) -> R<Value> {
        match s {
            Sexp::Atom(a, _) => match self.scalar_literal(s, a)? {
                Some(v) => Ok(v),
                None => err(s, format!("expected a value, found {a}")),
            },
            Sexp::Str(v, _) => Ok(Value::Vstring(v.clone())),
            Sexp::Op(..) => err(s, "expected a value"),
            Sexp::List(xs, _) => self.value_list(s, xs),
        }
    }

    fn value_list(&mut self, s: &Sexp, xs: &[Sexp]) -> R<Value> {
        let head = s.head().unwrap_or("");
        let n = xs.len();
        match head {
            "Vint" if n == 2 || n == 3 => {
                let v = self.bigint(&xs[1])?;
                let (sign, size) = if n == 3 {
                    match self.ty(&xs[2])? {
                        LolisaType::Tint(sign, size) => (sign, size),
                        _ => return err(&xs[2], "Vint needs an integer type"),
                    }
                } else {
                    (Signedness::Signed, IntSize::I64)
                };
                let iv = IntVal::checked(sign, size, v).map_err(|f| ParseError::new(s.pos(), f.to_string()))?;
                Ok(Value::Vint(iv))
            }
            "Vuint" if n == 2 => {
                let v = self.bigint(&xs[1])?;
                let iv = IntVal::checked(Signedness::Unsigned, IntSize::I64, v)
                    .map_err(|f| ParseError::new(s.pos(), f.to_string()))?;
                Ok(Value::Vint(iv))
            }
            "Vbool" if n == 2 => match xs[1].atom() {
                Some("true") => Ok(Value::Vbool(true)),
                Some("false") => Ok(Value::Vbool(false)),
                _ => err(&xs[1], "expected true or false"),
            },
            "Vfloat" if n == 2 => match xs[1].atom().and_then(|a| a.parse::<f64>().ok()) {
                Some(x) => Ok(Value::Vfloat(x)),
                None => err(&xs[1], "expected a float"),
            },
            "Vstring" if n == 2 => match &xs[1] {
                Sexp::Str(v, _) => Ok(Value::Vstring(v.clone())),
                _ => err(&xs[1], "expected a string"),
            },
            "Vbyte" if n == 3 => {
                let size = xs[1]
                    .atom()
                    .and_then(ByteSize::from_name)
                    .ok_or_else(|| ParseError::new(xs[1].pos(), "expected a byte width such as B4"))?;
                let hex = xs[2].atom().and_then(|a| a.strip_prefix("0x")).unwrap_or("");
                if hex.len() != 2 * size.len() || !hex.chars().all(|c| c.is_ascii_hexdigit()) {
                    return err(&xs[2], format!("expected 0x and {} hex digits", 2 * size.len()));
                }
                let bytes = (0..size.len())
                    .map(|i| u8::from_str_radix(&hex[2 * i..2 * i + 2], 16).expect("hex checked"))
                    .collect();
                Ok(Value::Vbyte(size, bytes))
            }
            "Vundef" if n == 1 => Ok(Value::Vundef),
            "Vstruct" if n == 3 => Ok(Value::Vstruct(self.resolve(&xs[1], 1)?, self.resolve(&xs[2], 1)?)),
            "Vref" if n == 3 => {
                let kind = match xs[1].atom() {
                    Some("Vvid") => RefKind::Vvid,
                    Some("Vpid") => RefKind::Vpid,
                    Some("Vfid") => RefKind::Vfid,
                    Some("Vcid") => RefKind::Vcid,
                    _ => return err(&xs[1], "expected Vvid, Vpid, Vfid or Vcid"),
                };
                let slots = if kind == RefKind::Vfid { 2 } else { 1 };
                let addr = self.resolve(&xs[2], slots)?;
                Ok(Value::Vref(RefId { kind, addr }))
            }
            "Varray" if n == 4 => Ok(Value::Varray {
                name: self.resolve(&xs[1], 1)?,
                index: self.array_index(&xs[2])?,
                elem: self.ty(&xs[3])?,
            }),
            "Vmap" | "@Vmap" if n == 5 || n == 6 => {
                let key_ty = self.key_ty(&xs[1])?;
                let val_ty = self.ty(&xs[2])?;
                let name = self.resolve(&xs[3], 1)?;
                let key = self.map_key(&xs[4])?;
                let snd = match xs.get(5) {
                    None => None,
                    Some(x) if x.is_atom("None") => None,
                    Some(x) => {
                        let inner = match x.list() {
                            Some([h, v]) if h.is_atom("Some") => v,
                            _ => x,
                        };
                        Some(Box::new(self.value(inner)?))
                    }
                };
                Ok(Value::Vmap {
                    name,
                    key,
                    key_ty,
                    val_ty,
                    snd,
                })
            }
            "Vfield" if (4..=6).contains(&n) => {
                let t0 = self.ty(&xs[1])?;
                let mut i = 2;
                let t1 = if is_head(&xs[2]) {
                    t0.clone()
                } else {
                    i = 3;
                    self.ty(&xs[2])?
                };
                let Some(h) = xs.get(i) else {
                    return err(s, "Vfield needs a head");
                };
                let head = self.field_head(h)?;
                let Some(p) = xs.get(i + 1) else {
                    return err(s, "Vfield needs a member path");
                };
                let mems = path(p)?;
                let opars = match xs.get(i + 2) {
                    None => None,
                    Some(x) if x.is_atom("None") => None,
                    Some(x) => match x.list() {
                        Some([h, rest @ ..]) if h.is_atom("Some") => {
                            let mut args = Vec::new();
                            for a in rest {
                                if a.is_atom("nil") {
                                    continue;
                                }
                                args.push(self.field_arg(a)?);
                            }
                            Some(args)
                        }
                        _ => return err(x, "arguments are None or (Some arg ...)"),
                    },
                };
                if xs.len() > i + 3 {
                    return err(s, "too many Vfield arguments");
                }
                Ok(Value::Vfield {
                    t0,
                    t1,
                    head,
                    mems,
                    opars,
                })
            }
            _ => err(s, format!("malformed value {head}")),
        }
    }

    fn bigint(&self, s: &Sexp) -> R<BigInt> {
        match s.atom().and_then(|a| a.parse::<BigInt>().ok()) {
            Some(v) => Ok(v),
            None => err(s, "expected an integer"),
        }
    }

    /// Modifier and method arguments: values, or names of variables and
    /// parameters, which pass by reference.
    fn field_arg(&mut self, s: &Sexp) -> R<FieldArg> {
        if let Some(a) = s.atom() {
            if self.scalar_literal(s, a)?.is_none() && literal_address(a).is_none() {
                if let Some((_, d)) = self.lookup(a) {
                    let kind = match d.kind {
                        DeclKind::Var => RefKind::Vvid,
                        DeclKind::Par => RefKind::Vpid,
                        DeclKind::Fun => RefKind::Vfid,
                        DeclKind::Contract => RefKind::Vcid,
                        _ => return err(s, format!("{a} cannot be passed")),
                    };
                    return Ok(FieldArg(Value::Vref(RefId { kind, addr: d.addr })));
                }
                return err(s, format!("unknown identifier {a}"));
            }
        }
        Ok(FieldArg(self.value(s)?))
    }

    fn field_head(&mut self, s: &Sexp) -> R<FieldHead> {
        let xs = s.list().unwrap_or(&[]);
        match s.head() {
            Some("Fstruct") if xs.len() == 3 => {
                Ok(FieldHead::Fstruct(self.resolve(&xs[1], 1)?, self.resolve(&xs[2], 1)?))
            }
            Some("Fmap") if xs.len() == 3 || xs.len() == 4 => {
                let name = self.resolve(&xs[1], 1)?;
                let key = self.map_key(&xs[2])?;
                let snd = match xs.get(3) {
                    None => None,
                    Some(x) if x.is_atom("None") => None,
                    Some(x) => Some(Box::new(self.value(x)?)),
                };
                Ok(FieldHead::Fmap(name, key, snd))
            }
            Some("Farray") if xs.len() == 3 => {
                Ok(FieldHead::Farray(self.resolve(&xs[1], 1)?, self.array_index(&xs[2])?))
            }
            _ => err(s, "expected (Fstruct T x), (Fmap m key) or (Farray a i)"),
        }
    }

    fn map_key(&mut self, s: &Sexp) -> R<MapKey> {
        let xs = s.list().unwrap_or(&[]);
        // An optional key type may precede the operands, as in
        // `(Mvar_id Iuint index)`; it is implied by the mapping.
        match (s.head(), xs.len()) {
            (Some("Mconst_id"), 2) => Ok(MapKey::MconstId(Box::new(self.value(&xs[1])?))),
            (Some("Mvar_id"), 2) => Ok(MapKey::MvarId(self.resolve(&xs[1], 1)?)),
            (Some("Mvar_id"), 3) => Ok(MapKey::MvarId(self.resolve(&xs[2], 1)?)),
            (Some("Mstr_id"), 3) => Ok(MapKey::MstrId(self.resolve(&xs[1], 1)?, path(&xs[2])?)),
            (Some("Mstr_id"), 4) => Ok(MapKey::MstrId(self.resolve(&xs[2], 1)?, path(&xs[3])?)),
            (Some("Marray_id"), 3) => Ok(MapKey::MarrayId(
                self.resolve(&xs[1], 1)?,
                self.map_array_index(&xs[2])?,
            )),
            (Some("Mmap_id"), 3) => Ok(MapKey::MmapId(
                self.resolve(&xs[1], 1)?,
                Box::new(self.map_key(&xs[2])?),
            )),
            _ => err(s, "expected a mapping key such as (Mvar_id x)"),
        }
    }

    fn array_index(&mut self, s: &Sexp) -> R<ArrayIndex> {
        if let Some(n) = s.atom().and_then(|a| a.parse::<u64>().ok()) {
            return Ok(ArrayIndex::ConstId(n));
        }
        let xs = s.list().unwrap_or(&[]);
        match (s.head(), xs.len()) {
            (Some("Aconst_id"), 2) => match xs[1].atom().and_then(|a| a.parse::<u64>().ok()) {
                Some(n) => Ok(ArrayIndex::ConstId(n)),
                None => err(&xs[1], "expected a natural number"),
            },
            (Some("Avar_id"), 2) => Ok(ArrayIndex::VarId(self.resolve(&xs[1], 1)?)),
            (Some("Astr_id"), 3) => Ok(ArrayIndex::StrId(self.resolve(&xs[1], 1)?, path(&xs[2])?)),
            (Some("Amap_id"), 3) => Ok(ArrayIndex::MapId(
                self.resolve(&xs[1], 1)?,
                Box::new(self.map_array_index(&xs[2])?),
            )),
            (Some("Aarray_id"), 3) => Ok(ArrayIndex::ArrayId(
                self.resolve(&xs[1], 1)?,
                Box::new(self.array_index(&xs[2])?),
            )),
            _ => err(s, "expected an array index such as (Aconst_id 10)"),
        }
    }

    fn map_array_index(&mut self, s: &Sexp) -> R<MapArrayIndex> {
        match self.array_index(s)? {
            ArrayIndex::ConstId(n) => Ok(MapArrayIndex::ConstId(n)),
            ArrayIndex::VarId(a) => Ok(MapArrayIndex::VarId(a)),
            ArrayIndex::StrId(a, m) => Ok(MapArrayIndex::StrId(a, m)),
            ArrayIndex::ArrayId(a, i) => Ok(MapArrayIndex::ArrayId(
                a,
                Box::new(narrow(&i).ok_or_else(|| ParseError::new(s.pos(), "mapping index inside a key"))?),
            )),
            ArrayIndex::MapId(..) => err(s, "a key index cannot itself use a mapping"),
        }
    }

    // ---- types

    fn ty(&mut self, s: &Sexp) -> R<LolisaType> {
        use LolisaType as T;
        if let Some(a) = s.atom() {
            return match a {
                "Tundef" => Ok(T::Tundef),
                "Tint" => Ok(T::int()),
                "Tuint" => Ok(T::uint()),
                "Tbool" => Ok(T::Tbool),
                "Tstring" => Ok(T::Tstring),
                "Tfloat" => Ok(T::Tfloat),
                "Tstt" => Ok(T::Tstt),
                "Tmodi" => Ok(T::Tmodi),
                "Taddress" | "TAddress" => Ok(T::address()),
                _ => err(s, format!("unknown type {a}")),
            };
        }
        let xs = s.list().unwrap_or(&[]);
        let opt = |l: &mut Self, x: &Sexp, slots: u32| l.opt_resolve(x, slots);
        match (s.head(), xs.len()) {
            (Some("Tint"), 3) => {
                let size = xs[1].atom().and_then(IntSize::from_name);
                let sign = match xs[2].atom() {
                    Some("Signed") => Some(Signedness::Signed),
                    Some("Unsigned") => Some(Signedness::Unsigned),
                    _ => None,
                };
                match (size, sign) {
                    (Some(z), Some(g)) => Ok(T::Tint(g, z)),
                    _ => err(s, "expected (Tint I64 Signed) or similar"),
                }
            }
            (Some("Tbytes"), 2) => match xs[1].atom().and_then(ByteSize::from_name) {
                Some(b) => Ok(T::Tbytes(b)),
                None => err(&xs[1], "expected a byte width such as B4"),
            },
            (Some("Tstruct"), 2) => Ok(T::Tstruct(self.resolve(&xs[1], 1)?)),
            (Some("Tvid"), 2) => Ok(T::Tvid(opt(self, &xs[1], 1)?)),
            (Some("Tpid"), 2) => Ok(T::Tpid(opt(self, &xs[1], 1)?)),
            (Some("Tfid"), 2) => Ok(T::Tfid(opt(self, &xs[1], 2)?)),
            (Some("Tcid"), 2) => Ok(T::Tcid(opt(self, &xs[1], 1)?)),
            (Some("Tarray"), 3) => Ok(T::array(self.array_index(&xs[1])?, self.ty(&xs[2])?)),
            (Some("Tmap"), 3) => Ok(T::map(self.key_ty(&xs[1])?, self.ty(&xs[2])?)),
            _ => err(s, "malformed type"),
        }
    }

    /// Key types: `Iaddress`, `(Iint I8 Signed)`, or the `T` spelling.
    fn key_ty(&mut self, s: &Sexp) -> R<LolisaMapType> {
        let renamed = rename_head(s);
        let t = self.ty(&renamed)?;
        LolisaMapType::from_type(&t).ok_or_else(|| ParseError::new(s.pos(), "type cannot be a mapping key"))
    }
}

fn narrow(i: &ArrayIndex) -> Option<MapArrayIndex> {
    Some(match i {
        ArrayIndex::ConstId(n) => MapArrayIndex::ConstId(*n),
        ArrayIndex::VarId(a) => MapArrayIndex::VarId(*a),
        ArrayIndex::StrId(a, m) => MapArrayIndex::StrId(*a, m.clone()),
        ArrayIndex::ArrayId(a, i) => MapArrayIndex::ArrayId(*a, Box::new(narrow(i)?)),
        ArrayIndex::MapId(..) => return None,
    })
}

fn rename_head(s: &Sexp) -> Sexp {
    let swap = |a: &str| match a.strip_prefix('I') {
        Some(rest) if rest.chars().next().is_some_and(|c| c.is_ascii_lowercase()) => format!("T{rest}"),
        _ => a.to_string(),
    };
    match s {
        Sexp::Atom(a, p) => Sexp::Atom(swap(a), *p),
        Sexp::List(xs, p) if !xs.is_empty() => {
            let mut ys = xs.clone();
            if let Sexp::Atom(a, q) = &xs[0] {
                ys[0] = Sexp::Atom(swap(a), *q);
            }
            // Element types of key arrays are key types too.
            if xs[0].is_atom("Iarray") && ys.len() == 3 {
                ys[2] = rename_head(&xs[2]);
            }
            Sexp::List(ys, *p)
        }
        other => other.clone(),
    }
}

fn is_head(s: &Sexp) -> bool {
    matches!(s.head(), Some("Fstruct" | "Fmap" | "Farray"))
}

fn is_value_ctor(h: &str) -> bool {
    matches!(
        h,
        "Vint"
            | "Vuint"
            | "Vbool"
            | "Vfloat"
            | "Vstring"
            | "Vbyte"
            | "Vundef"
            | "Vstruct"
            | "Vref"
            | "Varray"
            | "Vmap"
            | "@Vmap"
            | "Vfield"
    )
}

/// Member path: `(sender ~> send)`; separators and terminators are optional.
fn path(s: &Sexp) -> R<Vec<String>> {
    if let Some(a) = s.atom() {
        return Ok(vec![a.to_string()]);
    }
    let Some(xs) = s.list() else {
        return err(s, "expected a member path");
    };
    let mut out = Vec::new();
    for x in xs {
        let Some(a) = x.atom() else {
            return err(x, "member names are identifiers");
        };
        if !PATH_NOISE.contains(&a) {
            out.push(a.to_string());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::ExprKind;

    #[test]
    fn assignment_of_variables() {
        let p = parse("(Assignv (Evar a Tuint) (Evar b Tuint))").unwrap();
        let Statement::Assignv(l, r) = &p.statement else {
            panic!()
        };
        assert_eq!(l.t1, LolisaType::uint());
        assert_ne!(l.address(), r.address());
        assert_eq!(p.names.find("a"), Some(LabelAddress::user(0)));
    }

    #[test]
    fn var_with_bare_access() {
        let p = parse("(Var public (Evar index Tuint))").unwrap();
        assert!(matches!(p.statement, Statement::Var(Some(Access::Public), _)));
    }

    #[test]
    fn duplicate_declaration_fails() {
        let e = parse("(Var (Evar a Tint)) ;; (Var (Evar a Tbool))").unwrap_err();
        assert!(e.msg.contains("a already exists"), "{e}");
        // Different scopes are fine.
        parse("(Var (Evar a Tint)) ;; (Contract C () (Var (Evar a Tint)))").unwrap();
    }

    #[test]
    fn separator_builds_right_nested_seq() {
        let p = parse("Snil ;; Throw ;; Fstop").unwrap();
        let Statement::Seq(a, _) = &p.statement else { panic!() };
        assert_eq!(**a, Statement::Snil);
    }

    #[test]
    fn infix_precedence() {
        let p = parse("(Var (Evar x Tint)) ;; (Assignv x (1 (+) 2 (*) 3))").unwrap();
        let items = p.statement.seq_items();
        let Statement::Assignv(_, r) = items[1] else { panic!() };
        let ExprKind::Ebop(op, _, rhs) = &r.kind else { panic!() };
        assert_eq!(op.class, BinClass::Add);
        assert!(matches!(&rhs.kind, ExprKind::Ebop(o, ..) if o.class == BinClass::Mul));
    }

    #[test]
    fn function_scopes_shadow() {
        let src = "(Var (Evar x Tint)) ;; (Contract C () (Fun f Tint ((Epar x Tbool)) () (Return x)))";
        let p = parse(src).unwrap();
        let outer = p.names.addr("x").unwrap();
        let inner = p.names.addr("C.f.x").unwrap();
        assert_ne!(outer, inner);
        let f = p.names.addr("C.f").unwrap();
        assert_eq!(inner, LabelAddress(f.0 + 2));
    }

    #[test]
    fn figure_style_map_read() {
        let src = "(Var (Evar indexes (Tmap Iaddress Tuint))) ;; (Var (Evar msg (Tstruct _0xmsg))) ;;
                   (Var (Some public) (Evar (Some index) Tuint)) ;;
                   (Assignv (Evar (Some index) Tuint)
                     (Econst (@Vmap Iaddress Tuint indexes (Mstr_id Iaddress msg (sender ~>> \\\\)) None)))";
        let p = parse(src).unwrap();
        let items = p.statement.seq_items();
        assert!(matches!(items[3], Statement::Assignv(..)));
    }

    #[test]
    fn raw_addresses_are_kept_and_skipped() {
        let p = parse("(Var (Evar _0x00000010 Tint)) ;; (Var (Evar y Tint))").unwrap();
        assert_eq!(p.names.find("y"), Some(LabelAddress::user(1)));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse("Snil ;;\n  (Bogus)").unwrap_err();
        assert_eq!(e.pos.line, 2);
        assert!(parse("(If x").is_err());
    }
}
