// SPDX-License-Identifier: Apache-2.0

//! Static checking: expression index discipline and statement formation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ast::{bin_catalog, Expr, ExprKind, FunDecl, Statement, UnOp};
use crate::types::{final_type, is_normal_form, LabelAddress, LolisaType, StructContext};
use crate::value::{FieldArg, Value};

/// The formation rule a rejected term violates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    ConstForm,
    VarIndex,
    ParIndex,
    FunIndex,
    ConIndex,
    AnnotationMismatch,
    StructArgs,
    ModifierIndex,
    ModifierTarget,
    OperatorCatalog,
    OperandType,
    OperatorResult,
    VarDeclaresVariable,
    StructMembers,
    AssignType,
    AssignTarget,
    ConditionType,
    SeqHeadIsSeq,
    NestedFunctionDeclaration,
    NestedContract,
    CallArgModifier,
    CallTarget,
    ParamKind,
    ModifierList,
    ContractId,
    DuplicateMember,
    LoopEscape,
    ReturnType,
}

impl Rule {
    pub fn tag(self) -> &'static str {
        match self {
            Rule::ConstForm => "const-form",
            Rule::VarIndex => "var-index",
            Rule::ParIndex => "par-index",
            Rule::FunIndex => "fun-index",
            Rule::ConIndex => "con-index",
            Rule::AnnotationMismatch => "annotation-mismatch",
            Rule::StructArgs => "struct-args",
            Rule::ModifierIndex => "modifier-index",
            Rule::ModifierTarget => "modifier-target",
            Rule::OperatorCatalog => "operator-catalog",
            Rule::OperandType => "operand-type",
            Rule::OperatorResult => "operator-result",
            Rule::VarDeclaresVariable => "var-declares-variable",
            Rule::StructMembers => "struct-members",
            Rule::AssignType => "assign-type",
            Rule::AssignTarget => "assign-target",
            Rule::ConditionType => "condition-type",
            Rule::SeqHeadIsSeq => "seq-head-is-seq",
            Rule::NestedFunctionDeclaration => "nested-function-declaration",
            Rule::NestedContract => "nested-contract",
            Rule::CallArgModifier => "call-arg-modifier",
            Rule::CallTarget => "call-target",
            Rule::ParamKind => "param-kind",
            Rule::ModifierList => "modifier-list",
            Rule::ContractId => "contract-id",
            Rule::DuplicateMember => "duplicate-member",
            Rule::LoopEscape => "loop-escape",
            Rule::ReturnType => "return-type",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{rule}: {detail}")]
pub struct TypeError {
    pub rule: Rule,
    pub detail: String,
}

fn fail<T>(rule: Rule, detail: impl Into<String>) -> Result<T, TypeError> {
    Err(TypeError {
        rule,
        detail: detail.into(),
    })
}

/// Declared types gathered from a program: variables and parameters,
/// function return types, and struct layouts.
#[derive(Clone, Debug, Default)]
pub struct CheckContext {
    pub vars: BTreeMap<LabelAddress, LolisaType>,
    pub funs: BTreeMap<LabelAddress, LolisaType>,
    pub structs: StructContext,
    pub contracts: BTreeSet<LabelAddress>,
}

impl CheckContext {
    /// Collects declarations from the library and the program.
    pub fn from_program(program: &Statement, lib: &Statement) -> CheckContext {
        let mut ctx = CheckContext::default();
        ctx.collect(lib);
        ctx.collect(program);
        ctx
    }

    fn collect(&mut self, s: &Statement) {
        match s {
            Statement::Var(_, e) => {
                if let (ExprKind::Evar(Some(a)), true) = (&e.kind, true) {
                    self.vars.entry(*a).or_insert_with(|| e.t1.clone());
                }
            }
            Statement::Struct(tag, ms) => {
                self.structs.entry(*tag).or_insert_with(|| ms.clone());
            }
            Statement::Contract(id, _, body) => {
                if let Some(a) = id.address() {
                    self.contracts.insert(a);
                }
                self.collect(body);
            }
            Statement::Fun(d) | Statement::Funs(d, _) => self.collect_fun(d),
            Statement::Modifier(id, pars, body) => {
                if let Some(a) = id.address() {
                    self.funs.entry(a).or_insert(LolisaType::Tundef);
                }
                self.collect_pars(pars);
                self.collect(body);
            }
            Statement::Seq(a, b) => {
                self.collect(a);
                self.collect(b);
            }
            Statement::If(_, a, b) => {
                self.collect(a);
                self.collect(b);
            }
            Statement::LoopWhile(_, b) => self.collect(b),
            Statement::LoopFor(i, _, st, b) => {
                self.collect(i);
                self.collect(st);
                self.collect(b);
            }
            _ => {}
        }
    }

    fn collect_fun(&mut self, d: &FunDecl) {
        if let Some(a) = d.id.address() {
            self.funs.entry(a).or_insert_with(|| d.id.t1.clone());
        }
        self.collect_pars(&d.pars);
        self.collect(&d.body);
    }

    fn collect_pars(&mut self, pars: &[Expr]) {
        for p in pars {
            if let ExprKind::Epar(Some(a)) = p.kind {
                self.vars.entry(a).or_insert_with(|| p.t1.clone());
            }
        }
    }
}

/// Checks an expression and returns its `(current, final)` type indices.
pub fn check_expr(ctx: &CheckContext, e: &Expr) -> Result<(LolisaType, LolisaType), TypeError> {
    match &e.kind {
        ExprKind::Econst(v) => {
            let t = final_type(&v.carried_type());
            if e.t0 != t || e.t1 != t || !is_normal_form(&t) {
                return fail(Rule::ConstForm, "a constant is indexed by the final type of its value");
            }
            check_value(ctx, v)?;
        }
        ExprKind::Evar(a) => {
            if e.t0 != LolisaType::Tvid(*a) {
                return fail(Rule::VarIndex, "a variable's current index must be Tvid of its address");
            }
            declared(ctx, *a, &e.t1)?;
        }
        ExprKind::Epar(a) => {
            if e.t0 != LolisaType::Tpid(*a) {
                return fail(
                    Rule::ParIndex,
                    "a parameter's current index must be Tpid of its address",
                );
            }
            declared(ctx, *a, &e.t1)?;
        }
        ExprKind::Efun(a) => {
            if e.t0 != LolisaType::Tfid(*a) {
                return fail(Rule::FunIndex, "a function's current index must be Tfid of its address");
            }
            if let Some(t) = a.and_then(|a| ctx.funs.get(&a)) {
                if *t != e.t1 {
                    return fail(
                        Rule::AnnotationMismatch,
                        "function used at a type other than its return type",
                    );
                }
            }
        }
        ExprKind::Econ(a) => {
            let t = LolisaType::Tcid(*a);
            if e.t0 != t || e.t1 != t {
                return fail(Rule::ConIndex, "a contract is indexed by Tcid of its address");
            }
        }
        ExprKind::Estruct(tag, pars) => {
            let t = LolisaType::Tstruct(*tag);
            if e.t0 != t || e.t1 != t {
                return fail(Rule::StructArgs, "a struct expression is indexed by its struct type");
            }
            for p in pars {
                check_expr(ctx, p)?;
            }
            if let Some(layout) = ctx.structs.get(tag) {
                if layout.len() != pars.len() {
                    return fail(Rule::StructArgs, format!("{tag} has {} members", layout.len()));
                }
                for ((mt, name), p) in layout.iter().zip(pars) {
                    if final_type(mt) != final_type(&p.t1) {
                        return fail(Rule::StructArgs, format!("member {name} has the wrong type"));
                    }
                }
            }
        }
        ExprKind::Emodifier(f, args) => {
            if e.t0 != LolisaType::Tmodi || e.t1 != LolisaType::Tmodi {
                return fail(Rule::ModifierIndex, "a modifier application is indexed by Tmodi");
            }
            if !matches!(f.kind, ExprKind::Efun(_)) {
                return fail(Rule::ModifierTarget, "a modifier application names a function");
            }
            check_expr(ctx, f)?;
            for FieldArg(v) in args {
                check_value(ctx, v)?;
            }
        }
        ExprKind::Ebop(op, l, r) => {
            check_expr(ctx, l)?;
            check_expr(ctx, r)?;
            if !bin_catalog().contains(op) {
                return fail(
                    Rule::OperatorCatalog,
                    format!("({}) is not defined on this type", op.class.symbol()),
                );
            }
            if final_type(&l.t1) != op.in_ty || final_type(&r.t1) != op.in_ty {
                return fail(
                    Rule::OperandType,
                    format!("({}) needs operands of its input type", op.class.symbol()),
                );
            }
            if e.t0 != op.out_ty || e.t1 != op.out_ty {
                return fail(Rule::OperatorResult, "an operation is indexed by its result type");
            }
        }
        ExprKind::Euop(op, x) => {
            check_expr(ctx, x)?;
            if UnOp::new(op.class.clone(), op.in_ty.clone()).as_ref() != Some(op) {
                return fail(
                    Rule::OperatorCatalog,
                    format!("({}) is not defined on this type", op.class.symbol()),
                );
            }
            if final_type(&x.t1) != op.in_ty {
                return fail(Rule::OperandType, "operand does not have the operator's input type");
            }
            if e.t0 != op.out_ty || e.t1 != op.out_ty {
                return fail(Rule::OperatorResult, "an operation is indexed by its result type");
            }
        }
    }
    Ok((e.t0.clone(), e.t1.clone()))
}

fn declared(ctx: &CheckContext, a: Option<LabelAddress>, t: &LolisaType) -> Result<(), TypeError> {
    match a.and_then(|a| ctx.vars.get(&a)) {
        Some(d) if d != t => fail(
            Rule::AnnotationMismatch,
            format!(
                "{} is declared with another type",
                a.map(|a| a.to_string()).unwrap_or_default()
            ),
        ),
        _ => Ok(()),
    }
}

fn check_value(ctx: &CheckContext, v: &Value) -> Result<(), TypeError> {
    match v {
        Value::Vstruct(tag, _) => {
            if !ctx.structs.is_empty() && !ctx.structs.contains_key(tag) {
                return fail(Rule::ConstForm, format!("{tag} is not a declared struct"));
            }
        }
        Value::Vfield { opars: Some(args), .. } => {
            for FieldArg(a) in args {
                check_value(ctx, a)?;
            }
        }
        Value::Vmap { snd: Some(s), .. } => check_value(ctx, s)?,
        _ => {}
    }
    Ok(())
}

/// Where a statement sits, for the declaration-placement rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Nesting {
    Top,
    Contract,
    /// Inside a function, modifier, branch or loop body.
    Body,
}

#[derive(Clone, Debug)]
struct Frame {
    nesting: Nesting,
    in_loop: bool,
    ret: Option<Vec<LolisaType>>,
}

/// Checks a whole program against declarations gathered from it and `lib`.
pub fn check_program(program: &Statement, lib: &Statement) -> Result<(), TypeError> {
    let ctx = CheckContext::from_program(program, lib);
    check_stmt(&ctx, program, Nesting::Top)
}

/// Checks a statement placed at `nesting`.
pub fn check_stmt(ctx: &CheckContext, s: &Statement, nesting: Nesting) -> Result<(), TypeError> {
    let f = Frame {
        nesting,
        in_loop: false,
        ret: None,
    };
    stmt(ctx, s, &f)
}

fn cond(ctx: &CheckContext, c: &Expr) -> Result<(), TypeError> {
    check_expr(ctx, c)?;
    if final_type(&c.t1) != LolisaType::Tbool {
        return fail(Rule::ConditionType, "conditions must be Tbool");
    }
    Ok(())
}

fn body_frame(f: &Frame, in_loop: bool) -> Frame {
    Frame {
        nesting: Nesting::Body,
        in_loop: f.in_loop || in_loop,
        ret: f.ret.clone(),
    }
}

fn stmt(ctx: &CheckContext, s: &Statement, f: &Frame) -> Result<(), TypeError> {
    match s {
        Statement::Snil | Statement::Throw | Statement::Fstop => Ok(()),
        Statement::Break | Statement::Continue => {
            if f.in_loop {
                Ok(())
            } else {
                fail(Rule::LoopEscape, "break and continue belong inside loops")
            }
        }
        Statement::Var(_, e) => {
            if !matches!(e.kind, ExprKind::Evar(_)) {
                return fail(Rule::VarDeclaresVariable, "Var declares an Evar");
            }
            check_expr(ctx, e).map(|_| ())
        }
        Statement::Struct(_, ms) => {
            let mut seen = BTreeSet::new();
            if ms.is_empty() {
                return fail(Rule::StructMembers, "a struct needs at least one member");
            }
            for (t, n) in ms {
                if *t == LolisaType::Tundef {
                    return fail(Rule::StructMembers, format!("member {n} has no type"));
                }
                if !seen.insert(n) {
                    return fail(Rule::StructMembers, format!("member {n} is declared twice"));
                }
            }
            Ok(())
        }
        Statement::Assignv(l, r) => {
            let assignable = matches!(
                &l.kind,
                ExprKind::Evar(_)
                    | ExprKind::Epar(_)
                    | ExprKind::Econst(Value::Vmap { .. })
                    | ExprKind::Econst(Value::Varray { .. })
            );
            if !assignable {
                return fail(
                    Rule::AssignTarget,
                    "only variables, parameters, mapping and array entries are assignable",
                );
            }
            check_expr(ctx, l)?;
            check_expr(ctx, r)?;
            if final_type(&l.t1) != final_type(&r.t1) {
                return fail(Rule::AssignType, "both sides of an assignment need the same final type");
            }
            Ok(())
        }
        Statement::Return(e) => {
            check_expr(ctx, e)?;
            if let Some(rets) = &f.ret {
                if rets.len() == 1 && rets[0] != LolisaType::Tundef && final_type(&rets[0]) != final_type(&e.t1) {
                    return fail(Rule::ReturnType, "returned value does not match the declared type");
                }
            }
            Ok(())
        }
        Statement::Returns(es) => {
            for e in es {
                check_expr(ctx, e)?;
            }
            Ok(())
        }
        Statement::Seq(a, b) => {
            if matches!(**a, Statement::Seq(..)) {
                return fail(
                    Rule::SeqHeadIsSeq,
                    "the first element of a sequence cannot be a sequence",
                );
            }
            stmt(ctx, a, f)?;
            stmt(ctx, b, f)
        }
        Statement::If(c, t, e) => {
            cond(ctx, c)?;
            let inner = body_frame(f, false);
            stmt(ctx, t, &inner)?;
            stmt(ctx, e, &inner)
        }
        Statement::LoopWhile(c, b) => {
            cond(ctx, c)?;
            stmt(ctx, b, &body_frame(f, true))
        }
        Statement::LoopFor(i, c, st, b) => {
            let outer = body_frame(f, false);
            stmt(ctx, i, &outer)?;
            cond(ctx, c)?;
            let inner = body_frame(f, true);
            stmt(ctx, st, &inner)?;
            stmt(ctx, b, &inner)
        }
        Statement::FunCall(id, args) => {
            let callable = matches!(id.kind, ExprKind::Efun(_) | ExprKind::Econst(Value::Vfield { .. }));
            if !callable {
                return fail(Rule::CallTarget, "calls name a function or a method field");
            }
            check_expr(ctx, id)?;
            for a in args {
                if a.is_modifier() {
                    return fail(
                        Rule::CallArgModifier,
                        "a modifier application cannot be a call argument",
                    );
                }
                check_expr(ctx, a)?;
            }
            Ok(())
        }
        Statement::Contract(id, _, body) => {
            if f.nesting != Nesting::Top {
                return fail(Rule::NestedContract, "contracts are declared at the top level only");
            }
            if !matches!(id.kind, ExprKind::Econ(_)) {
                return fail(Rule::ContractId, "a contract is named by an Econ");
            }
            check_expr(ctx, id)?;
            let mut seen = BTreeSet::new();
            for m in body.seq_items() {
                let a = match m {
                    Statement::Var(_, e) => e.address(),
                    Statement::Fun(d) | Statement::Funs(d, _) => d.id.address(),
                    Statement::Modifier(f, ..) => f.address(),
                    Statement::Struct(tag, _) => Some(*tag),
                    _ => None,
                };
                if let Some(a) = a {
                    if !seen.insert(a) {
                        return fail(Rule::DuplicateMember, format!("{a} is declared twice in one contract"));
                    }
                }
            }
            let inner = Frame {
                nesting: Nesting::Contract,
                in_loop: false,
                ret: None,
            };
            stmt(ctx, body, &inner)
        }
        Statement::Fun(d) => function(ctx, d, vec![d.id.t1.clone()], f),
        Statement::Funs(d, ts) => function(ctx, d, ts.clone(), f),
        Statement::Modifier(id, pars, body) => {
            declaration_site(f)?;
            if !matches!(id.kind, ExprKind::Efun(_)) {
                return fail(Rule::FunIndex, "a modifier is named by an Efun");
            }
            params(ctx, pars)?;
            stmt(ctx, body, &fun_frame(vec![LolisaType::Tundef]))
        }
    }
}

fn declaration_site(f: &Frame) -> Result<(), TypeError> {
    if f.nesting == Nesting::Body {
        return fail(
            Rule::NestedFunctionDeclaration,
            "functions and modifiers cannot be declared inside bodies",
        );
    }
    Ok(())
}

fn fun_frame(ret: Vec<LolisaType>) -> Frame {
    Frame {
        nesting: Nesting::Body,
        in_loop: false,
        ret: Some(ret),
    }
}

fn params(ctx: &CheckContext, pars: &[Expr]) -> Result<(), TypeError> {
    for p in pars {
        if !matches!(p.kind, ExprKind::Epar(_)) {
            return fail(Rule::ParamKind, "parameters are Epar expressions");
        }
        check_expr(ctx, p)?;
    }
    Ok(())
}

fn function(ctx: &CheckContext, d: &FunDecl, rets: Vec<LolisaType>, f: &Frame) -> Result<(), TypeError> {
    declaration_site(f)?;
    if !matches!(d.id.kind, ExprKind::Efun(_)) {
        return fail(Rule::FunIndex, "a function is named by an Efun");
    }
    check_expr(ctx, &d.id)?;
    params(ctx, &d.pars)?;
    for m in &d.modis {
        if !m.is_modifier() {
            return fail(Rule::ModifierList, "a modifier list holds modifier applications only");
        }
        check_expr(ctx, m)?;
    }
    stmt(ctx, &d.body, &fun_frame(rets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{BinClass, BinOp};

    fn ctx() -> CheckContext {
        CheckContext::default()
    }

    #[test]
    fn constants_check() {
        let e = Expr::constant(Value::Vbool(true));
        assert_eq!(check_expr(&ctx(), &e).unwrap(), (LolisaType::Tbool, LolisaType::Tbool));
    }

    #[test]
    fn string_plus_int_is_rejected() {
        let op = BinOp::new(BinClass::Add, LolisaType::int()).unwrap();
        let e = Expr::bop(
            op,
            Expr::constant(Value::Vstring("error".into())),
            Expr::constant(Value::int(1)),
        );
        assert_eq!(check_expr(&ctx(), &e).unwrap_err().rule, Rule::OperandType);
    }

    #[test]
    fn seq_head_cannot_be_seq() {
        let s = Statement::seq(Statement::seq(Statement::Snil, Statement::Snil), Statement::Snil);
        assert_eq!(
            check_stmt(&ctx(), &s, Nesting::Top).unwrap_err().rule,
            Rule::SeqHeadIsSeq
        );
    }

    #[test]
    fn string_condition_is_rejected() {
        let s = Statement::if_(
            Expr::constant(Value::Vstring("error".into())),
            Statement::Snil,
            Statement::Snil,
        );
        assert_eq!(
            check_stmt(&ctx(), &s, Nesting::Top).unwrap_err().rule,
            Rule::ConditionType
        );
    }

    #[test]
    fn break_needs_a_loop() {
        assert_eq!(
            check_stmt(&ctx(), &Statement::Break, Nesting::Top).unwrap_err().rule,
            Rule::LoopEscape
        );
        let w = Statement::while_(Expr::constant(Value::Vbool(true)), Statement::Break);
        assert!(check_stmt(&ctx(), &w, Nesting::Top).is_ok());
    }
}
