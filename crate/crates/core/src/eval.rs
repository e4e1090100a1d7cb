// SPDX-License-Identifier: Apache-2.0

//! Big-step evaluation of expressions, statements and whole programs.

use std::collections::BTreeSet;

use num_bigint::{BigInt, Sign};
use num_traits::{ToPrimitive, Zero};

use crate::ast::{BinClass, BinOp, Expr, ExprKind, FunDecl, Statement, StmtKind, UnClass, UnOp};
use crate::check::check_program;
use crate::env::{env_check, init_env, set_env, set_gas, Env, GasTable, StatementOutcome};
use crate::memory::{
    allocate, init_re, init_var, initial_value, read_chck, read_dir, write_check, write_dir, Block, BlockInfo,
    MemoryState, Stamp,
};
use crate::outcome::{Fault, Outcome};
use crate::types::{LabelAddress, LolisaType};
use crate::value::{
    array_slot, bucket_lookup, corresponds, eval_field, eval_map_key, eval_value_r, FieldArg, FieldOwner, FieldValue,
    IntVal, MapKey, MapMemoryValue, MemoryValue, Value,
};

/// Why a `stop` ends execution rather than letting the sequence continue.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Halt {
    Throw,
    Fstop,
    Gas,
    Env,
    Modifier,
    CallFailed,
}

impl Halt {
    pub fn name(self) -> &'static str {
        match self {
            Halt::Throw => "throw",
            Halt::Fstop => "fstop",
            Halt::Gas => "gas",
            Halt::Env => "env",
            Halt::Modifier => "modifier",
            Halt::CallFailed => "call-failed",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExecResult {
    pub sigma: MemoryState,
    pub env: Env,
    pub outcome: StatementOutcome,
    pub halt: Option<Halt>,
    pub fault: Option<Fault>,
}

impl ExecResult {
    fn new(sigma: MemoryState, env: Env, outcome: StatementOutcome) -> ExecResult {
        ExecResult {
            sigma,
            env,
            outcome,
            halt: None,
            fault: None,
        }
    }

    fn halted(sigma: MemoryState, env: Env, h: Halt) -> ExecResult {
        ExecResult {
            halt: Some(h),
            ..ExecResult::new(sigma, env, StatementOutcome::Stop)
        }
    }

    fn error(sigma: MemoryState, env: Env, f: Fault) -> ExecResult {
        ExecResult {
            fault: Some(f),
            ..ExecResult::new(sigma, env, StatementOutcome::Error)
        }
    }

    /// True when a sequence may go on to its next statement.
    pub fn continues(&self) -> bool {
        match self.outcome {
            StatementOutcome::Normal => true,
            StatementOutcome::Stop => self.halt.is_none(),
            _ => false,
        }
    }

    pub fn gas_exhausted(&self) -> bool {
        self.halt == Some(Halt::Gas)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceEntry {
    pub id: usize,
    pub kind: StmtKind,
    pub pre_gas: u64,
    pub outcome: Option<StatementOutcome>,
    pub dump: Option<String>,
}

/// Append-only record of executed statements.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, k: StmtKind) -> usize {
        self.entries.iter().filter(|e| e.kind == k).count()
    }
}

pub fn is_true(v: &MemoryValue) -> bool {
    matches!(v, MemoryValue::Bool(Some(true)))
}

pub fn is_false(v: &MemoryValue) -> bool {
    matches!(v, MemoryValue::Bool(Some(false)))
}

const MAX_CALL_DEPTH: usize = 200;

/// Evaluation state shared across one program run.
#[derive(Clone, Debug)]
pub struct Interpreter {
    pub table: GasTable,
    pub sigma_init: MemoryState,
    pub trace: Trace,
    pub record_trace: bool,
    pub dump_in_trace: bool,
    contracts: BTreeSet<LabelAddress>,
    depth: usize,
}

impl Interpreter {
    pub fn new(table: GasTable, sigma_init: MemoryState) -> Interpreter {
        Interpreter {
            table,
            sigma_init,
            trace: Trace::default(),
            record_trace: true,
            dump_in_trace: false,
            contracts: BTreeSet::new(),
            depth: 0,
        }
    }

    /// Declares which addresses are contracts, for inheritance checks.
    pub fn with_contracts(mut self, contracts: impl IntoIterator<Item = LabelAddress>) -> Interpreter {
        self.contracts = contracts.into_iter().collect();
        self
    }

    fn trace_begin(&mut self, kind: StmtKind, pre_gas: u64, sigma: &MemoryState) -> Option<usize> {
        if !self.record_trace {
            return None;
        }
        let id = self.trace.entries.len();
        let dump = self.dump_in_trace.then(|| crate::dump::dump_state(sigma));
        self.trace.entries.push(TraceEntry {
            id,
            kind,
            pre_gas,
            outcome: None,
            dump,
        });
        Some(id)
    }

    fn trace_end(&mut self, slot: Option<usize>, r: &ExecResult) {
        if let Some(i) = slot {
            self.trace.entries[i].outcome = Some(r.outcome.clone());
        }
    }

    /// Environment and gas gate run before every statement.
    fn gate(
        &mut self,
        sigma: &MemoryState,
        env: &Env,
        fenv: &Env,
        s: &Statement,
    ) -> Result<(Env, Option<usize>), ExecResult> {
        if !env_check(env, fenv) {
            let h = if env.gas <= fenv.gas { Halt::Gas } else { Halt::Env };
            return Err(ExecResult::halted(sigma.clone(), env.clone(), h));
        }
        match set_gas(s, env, &self.table) {
            Outcome::Some(e) => {
                let slot = self.trace_begin(s.kind(), env.gas, sigma);
                Ok((e, slot))
            }
            _ => Err(ExecResult::halted(sigma.clone(), env.clone(), Halt::Gas)),
        }
    }

    pub fn eval_stmt(&mut self, sigma: &MemoryState, env: &Env, fenv: &Env, s: &Statement) -> ExecResult {
        let (env1, slot) = match self.gate(sigma, env, fenv, s) {
            Ok(x) => x,
            Err(r) => return r,
        };
        let r = self.step(sigma, &env1, fenv, s, slot);
        self.trace_end(slot, &r);
        r
    }

    fn step(&mut self, sigma: &MemoryState, env: &Env, fenv: &Env, s: &Statement, slot: Option<usize>) -> ExecResult {
        let err = |f: Fault| ExecResult::error(sigma.clone(), env.clone(), f);
        let normal = |st: MemoryState| ExecResult::new(st, env.clone(), StatementOutcome::Normal);
        match s {
            Statement::Snil => ExecResult::new(sigma.clone(), env.clone(), StatementOutcome::Stop),
            Statement::Throw => ExecResult::halted(self.sigma_init.clone(), env.clone(), Halt::Throw),
            Statement::Fstop => {
                // Scope returns to the frame's; the remaining gas is kept.
                let e = fenv.with_gas(env.gas);
                ExecResult::halted(sigma.clone(), e, Halt::Fstop)
            }
            Statement::Break => ExecResult::new(sigma.clone(), env.clone(), StatementOutcome::Break),
            Statement::Continue => ExecResult::new(sigma.clone(), env.clone(), StatementOutcome::Continue),
            Statement::Var(oacc, e) => {
                let Some(a) = e.address() else {
                    return err(Fault::new("var", "declaration has no address"));
                };
                match init_var(sigma, env, fenv, *oacc, &e.t1, a) {
                    Outcome::Some(st) => normal(st),
                    Outcome::None => err(Fault::new("var", "no state")),
                    Outcome::Error(f) => err(f),
                }
            }
            Statement::Struct(tag, mems) => normal(write_dir(sigma, *tag, MemoryValue::StrType(*tag, mems.clone()))),
            Statement::Assignv(l, r) => match self.assign(sigma, env, fenv, l, r) {
                Ok((st, e2)) => ExecResult::new(st, e2, StatementOutcome::Normal),
                Err(AssignFail::Fault(f)) => err(f),
                Err(AssignFail::Call(r)) => r,
            },
            Statement::Return(e) => match eval_expr_r(sigma, env, fenv, e) {
                Outcome::Some(v) => {
                    let st = match fenv.dom_current {
                        Some(f) if is_function(sigma, f) => write_dir(sigma, f.succ(), v),
                        _ => sigma.clone(),
                    };
                    ExecResult::new(st, set_env(env, 1, fenv.dom_current), StatementOutcome::Exit)
                }
                Outcome::Error(f) => err(f),
                Outcome::None => err(Fault::new("return", "no value")),
            },
            Statement::Returns(es) => {
                let mut vs = Vec::with_capacity(es.len());
                for e in es {
                    match eval_expr_r(sigma, env, fenv, e).into_result("returns") {
                        Ok(v) => vs.push(v),
                        Err(f) => return err(f),
                    }
                }
                let tys = es.iter().map(|e| e.t1.clone()).collect();
                let st = match fenv.dom_current {
                    Some(f) if is_function(sigma, f) => write_dir(sigma, f.succ(), MemoryValue::Types(tys, vs)),
                    _ => sigma.clone(),
                };
                ExecResult::new(st, set_env(env, 1, fenv.dom_current), StatementOutcome::Exit)
            }
            Statement::Seq(a, b) => {
                if matches!(**a, Statement::Seq(..)) {
                    return err(Fault::new("seq-head-is-seq", "a sequence cannot start with a sequence"));
                }
                let r = self.eval_stmt(sigma, env, fenv, a);
                if !r.continues() {
                    return r;
                }
                self.eval_stmt(&r.sigma, &r.env, fenv, b)
            }
            Statement::If(c, t, e) => match eval_expr_r(sigma, env, fenv, c) {
                Outcome::Some(v) if is_true(&v) => self.eval_stmt(sigma, env, fenv, t),
                Outcome::Some(v) if is_false(&v) => self.eval_stmt(sigma, env, fenv, e),
                Outcome::Some(v) => err(Fault::new(
                    "if-condition",
                    format!("condition evaluated to {}", v.constructor_name()),
                )),
                Outcome::Error(f) => err(f),
                Outcome::None => err(Fault::new("if-condition", "no value")),
            },
            Statement::LoopWhile(c, body) => self.run_loop(sigma, env, fenv, s, None, c, body, slot),
            Statement::LoopFor(init, c, stepst, body) => {
                let r = self.eval_stmt(sigma, env, fenv, init);
                if !r.continues() {
                    return r;
                }
                self.run_loop(&r.sigma, &r.env, fenv, s, Some(stepst), c, body, slot)
            }
            Statement::Contract(id, inherits, body) => {
                let Some(c) = id.address() else {
                    return err(Fault::new("contract", "contract has no address"));
                };
                let known: Vec<LabelAddress> = inherits
                    .iter()
                    .copied()
                    .filter(|p| self.contracts.contains(p))
                    .collect();
                if !crate::modules::inherit_check(&known, inherits) {
                    return err(Fault::new(
                        "inherit-check",
                        format!("{c} inherits an undeclared contract"),
                    ));
                }
                let members = direct_members(body);
                let st = write_dir(
                    sigma,
                    c,
                    MemoryValue::Cid {
                        id: c,
                        members,
                        inherits: inherits.clone(),
                    },
                );
                let inner = set_env(env, 1, Some(c));
                let r = self.eval_stmt(&st, &inner, fenv, body);
                match (&r.outcome, r.halt) {
                    (StatementOutcome::Normal | StatementOutcome::Stop, None) => {
                        ExecResult::new(r.sigma, env.with_gas(r.env.gas), StatementOutcome::Normal)
                    }
                    _ => r,
                }
            }
            Statement::Fun(d) => self.declare_function(sigma, env, d, s),
            Statement::Funs(d, _) => self.declare_function(sigma, env, d, s),
            Statement::Modifier(id, _, _) => {
                let Some(f) = id.address() else {
                    return err(Fault::new("modifier", "modifier has no address"));
                };
                let st = declare_block(sigma, env, f, None, s);
                match init_re(&st, f.succ(), &[LolisaType::Tundef]) {
                    Outcome::Some(st) => normal(st),
                    _ => err(Fault::new("modifier", "cannot reserve the return slot")),
                }
            }
            Statement::FunCall(id, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    match eval_expr_r(sigma, env, fenv, a).into_result("call-argument") {
                        Ok(v) => vals.push(v),
                        Err(f) => return err(f),
                    }
                }
                let target = match call_target(sigma, env, fenv, id, args) {
                    Ok(t) => t,
                    Err(f) => return err(f),
                };
                if vals.is_empty() {
                    if let Some(opars) = &target.opars {
                        match eval_field_args(sigma, env, opars) {
                            Ok(v) => vals = v,
                            Err(f) => return err(f),
                        }
                    }
                }
                self.invoke(sigma, env, fenv, &target, vals).0
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn run_loop(
        &mut self,
        sigma: &MemoryState,
        env: &Env,
        fenv: &Env,
        s: &Statement,
        stepst: Option<&Statement>,
        c: &Expr,
        body: &Statement,
        first_slot: Option<usize>,
    ) -> ExecResult {
        let mut slots = vec![first_slot];
        let mut st = sigma.clone();
        let mut e = env.clone();
        let fin = |me: &mut Interpreter, slots: &[Option<usize>], r: ExecResult| {
            for sl in slots.iter().skip(1) {
                me.trace_end(*sl, &r);
            }
            r
        };
        loop {
            match eval_expr_r(&st, &e, fenv, c) {
                Outcome::Some(v) if is_true(&v) => {}
                Outcome::Some(v) if is_false(&v) => {
                    let r = ExecResult::new(st, e, StatementOutcome::Stop);
                    return fin(self, &slots, r);
                }
                Outcome::Some(v) => {
                    let r = ExecResult::error(
                        st,
                        e,
                        Fault::new(
                            "loop-condition",
                            format!("condition evaluated to {}", v.constructor_name()),
                        ),
                    );
                    return fin(self, &slots, r);
                }
                Outcome::Error(f) => return fin(self, &slots, ExecResult::error(st, e, f)),
                Outcome::None => {
                    return fin(
                        self,
                        &slots,
                        ExecResult::error(st, e, Fault::new("loop-condition", "no value")),
                    )
                }
            }
            let r = self.eval_stmt(&st, &e, fenv, body);
            match (&r.outcome, r.halt) {
                (StatementOutcome::Normal | StatementOutcome::Continue, _) | (StatementOutcome::Stop, None) => {}
                (StatementOutcome::Break, _) => {
                    let r = ExecResult::new(r.sigma, r.env, StatementOutcome::Stop);
                    return fin(self, &slots, r);
                }
                _ => return fin(self, &slots, r),
            }
            st = r.sigma;
            e = r.env;
            if let Some(step) = stepst {
                let r = self.eval_stmt(&st, &e, fenv, step);
                if !r.continues() {
                    return fin(self, &slots, r);
                }
                st = r.sigma;
                e = r.env;
            }
            // The loop statement is evaluated again: gate and charge it.
            match self.gate(&st, &e, fenv, s) {
                Ok((e2, slot)) => {
                    e = e2;
                    slots.push(slot);
                }
                Err(r) => return fin(self, &slots, r),
            }
        }
    }

    fn declare_function(&mut self, sigma: &MemoryState, env: &Env, d: &FunDecl, s: &Statement) -> ExecResult {
        let Some(f) = d.id.address() else {
            return ExecResult::error(sigma.clone(), env.clone(), Fault::new("fun", "function has no address"));
        };
        let st = declare_block(sigma, env, f, d.access, s);
        let rets = s.return_types().unwrap_or_default();
        match init_re(&st, f.succ(), &rets) {
            Outcome::Some(st) => ExecResult::new(st, env.clone(), StatementOutcome::Normal),
            _ => ExecResult::error(
                sigma.clone(),
                env.clone(),
                Fault::new("fun", "cannot reserve the return slot"),
            ),
        }
    }

    /// Runs a call. The second component is the value produced by the call
    /// when the callee is a native.
    fn invoke(
        &mut self,
        sigma: &MemoryState,
        env: &Env,
        fenv: &Env,
        target: &CallTarget,
        args: Vec<MemoryValue>,
    ) -> (ExecResult, Option<MemoryValue>) {
        if let Some(native) = crate::stdlib::native(target.fun) {
            return match native(sigma, env, target.receiver.as_ref(), &args) {
                Ok((st, v)) => (ExecResult::new(st, env.clone(), StatementOutcome::Normal), Some(v)),
                Err(f) => (ExecResult::error(sigma.clone(), env.clone(), f), None),
            };
        }
        (self.call(sigma, env, fenv, target.fun, args), None)
    }

    /// Calls a user function or modifier stored at `f`.
    pub fn call(
        &mut self,
        sigma: &MemoryState,
        env: &Env,
        fenv: &Env,
        f: LabelAddress,
        args: Vec<MemoryValue>,
    ) -> ExecResult {
        let decl = match read_chck(sigma, env, &LolisaType::Tfid(Some(f)), f) {
            Outcome::Some(MemoryValue::Stmt(s)) => *s,
            _ => return ExecResult::halted(sigma.clone(), env.clone(), Halt::CallFailed),
        };
        if self.depth >= MAX_CALL_DEPTH {
            return ExecResult::error(
                sigma.clone(),
                env.clone(),
                Fault::new("call-depth", "too many nested calls"),
            );
        }
        let (pars, modis, body) = match &decl {
            Statement::Fun(d) | Statement::Funs(d, _) => (d.pars.clone(), d.modis.clone(), (*d.body).clone()),
            Statement::Modifier(_, pars, body) => (pars.clone(), Vec::new(), (**body).clone()),
            _ => return ExecResult::halted(sigma.clone(), env.clone(), Halt::CallFailed),
        };
        let rets = decl.return_types().unwrap_or_default();
        let mut caller = env.clone();
        // Guards run first; their effects are discarded.
        for m in &modis {
            let ExprKind::Emodifier(mf, margs) = &m.kind else {
                return ExecResult::error(
                    sigma.clone(),
                    caller,
                    Fault::new("modifier", "not a modifier application"),
                );
            };
            let Some(ma) = mf.address() else {
                return ExecResult::error(sigma.clone(), caller, Fault::new("modifier", "modifier has no address"));
            };
            let vals = match eval_field_args(sigma, &caller, margs) {
                Ok(v) => v,
                Err(e) => return ExecResult::error(sigma.clone(), caller, e),
            };
            let r = self.call(sigma, &caller, fenv, ma, vals);
            caller = caller.with_gas(r.env.gas);
            match (&r.outcome, r.halt) {
                (StatementOutcome::Error, _) => return ExecResult { env: caller, ..r },
                (_, Some(Halt::Throw | Halt::Modifier)) => {
                    return ExecResult::halted(sigma.clone(), caller, Halt::Modifier);
                }
                (_, Some(Halt::Gas | Halt::Env)) => return ExecResult { env: caller, ..r },
                _ => {}
            }
        }
        let callee = set_env(&caller, 0, Some(f));
        let cfenv = callee.with_gas(fenv.gas);
        let mut st = sigma.clone();
        for p in &pars {
            let Some(pa) = p.address() else {
                return ExecResult::error(sigma.clone(), caller, Fault::new("set-par", "parameter has no address"));
            };
            match init_var(&st, &callee, &cfenv, None, &p.t1, pa) {
                Outcome::Some(s2) => st = s2,
                Outcome::Error(e) => return ExecResult::error(sigma.clone(), caller, e),
                Outcome::None => {}
            }
        }
        st = match set_par(&st, &pars, &args) {
            Outcome::Some(s2) => s2,
            Outcome::Error(e) => return ExecResult::error(sigma.clone(), caller, e),
            Outcome::None => st,
        };
        st = match init_re(&st, f.succ(), &rets) {
            Outcome::Some(s2) => s2,
            _ => st,
        };
        self.depth += 1;
        let r = self.eval_stmt(&st, &callee, &cfenv, &body);
        self.depth -= 1;
        let back = caller.with_gas(r.env.gas);
        match (&r.outcome, r.halt) {
            (StatementOutcome::Error, _) => ExecResult { env: back, ..r },
            (StatementOutcome::Break | StatementOutcome::Continue, _) => ExecResult::error(
                r.sigma,
                back,
                Fault::new("loop-escape", "break or continue outside a loop"),
            ),
            (_, None | Some(Halt::Fstop)) => ExecResult::new(r.sigma, back, StatementOutcome::Normal),
            (_, Some(h)) => ExecResult::halted(r.sigma, back, h),
        }
    }

    fn assign(
        &mut self,
        sigma: &MemoryState,
        env: &Env,
        fenv: &Env,
        l: &Expr,
        r: &Expr,
    ) -> Result<(MemoryState, Env), AssignFail> {
        // A bundled method on the right is called first and its result read.
        if let ExprKind::Econst(v @ Value::Vfield { opars: Some(opars), .. }) = &r.kind {
            if let FieldValue::Method { fun, receiver, .. } = eval_field(sigma, env, v).map_err(AssignFail::Fault)? {
                let fun = fun.ok_or_else(|| AssignFail::Fault(Fault::new("assign-call", "null function")))?;
                let args = eval_field_args(sigma, env, opars).map_err(AssignFail::Fault)?;
                let target = CallTarget {
                    fun,
                    receiver: Some(receiver),
                    opars: None,
                };
                let (res, native_val) = self.invoke(sigma, env, fenv, &target, args);
                if !matches!(res.outcome, StatementOutcome::Normal) {
                    return Err(AssignFail::Call(res));
                }
                let val = match native_val {
                    Some(v) => v,
                    None => unwrap_types(
                        read_dir(&res.sigma, fun.succ())
                            .into_result("assign-call")
                            .map_err(AssignFail::Fault)?,
                    ),
                };
                let (st, addr) = eval_expr_l(&res.sigma, &res.env, fenv, l)
                    .into_result("assign")
                    .map_err(AssignFail::Fault)?;
                let st = store(&st, &res.env, &l.t1, addr, val).map_err(AssignFail::Fault)?;
                return Ok((st, res.env));
            }
        }
        let v = eval_expr_r(sigma, env, fenv, r)
            .into_result("assign")
            .map_err(AssignFail::Fault)?;
        let (st, addr) = eval_expr_l(sigma, env, fenv, l)
            .into_result("assign")
            .map_err(AssignFail::Fault)?;
        let st = store(&st, env, &l.t1, addr, v).map_err(AssignFail::Fault)?;
        Ok((st, env.clone()))
    }
}

enum AssignFail {
    Fault(Fault),
    Call(ExecResult),
}

/// The resolved callee of a call statement.
#[derive(Clone, Debug, PartialEq)]
pub struct CallTarget {
    pub fun: LabelAddress,
    pub receiver: Option<FieldOwner>,
    pub opars: Option<Vec<FieldArg>>,
}

fn call_target(sigma: &MemoryState, env: &Env, fenv: &Env, id: &Expr, args: &[Expr]) -> Result<CallTarget, Fault> {
    match &id.kind {
        ExprKind::Efun(Some(f)) => {
            // A direct built-in call takes its receiver as the first argument.
            let receiver = if crate::stdlib::native(*f).is_some() {
                args.first()
                    .and_then(|a| eval_expr_l(sigma, env, fenv, a).some())
                    .map(|(_, base)| FieldOwner { base, path: Vec::new() })
            } else {
                None
            };
            Ok(CallTarget {
                fun: *f,
                receiver,
                opars: None,
            })
        }
        ExprKind::Econst(v @ Value::Vfield { .. }) => match eval_field(sigma, env, v)? {
            FieldValue::Method {
                fun: Some(fun),
                receiver,
                args,
            } => Ok(CallTarget {
                fun,
                receiver: Some(receiver),
                opars: args,
            }),
            FieldValue::Method { fun: None, .. } => Err(Fault::new("fun-call", "null function pointer")),
            FieldValue::Plain(_) => Err(Fault::new("fun-call", "member is not a function")),
        },
        _ => Err(Fault::new("fun-call", "callee is not a function identifier")),
    }
}

fn is_function(sigma: &MemoryState, f: LabelAddress) -> bool {
    sigma.block(f).is_some_and(|b| matches!(b.info.ty, LolisaType::Tfid(_)))
}

fn unwrap_types(v: MemoryValue) -> MemoryValue {
    match v {
        MemoryValue::Types(_, mut vs) if vs.len() == 1 => vs.pop().unwrap_or(MemoryValue::Undef),
        other => other,
    }
}

/// Stores a declaration's body at its address with the declaring scope.
fn declare_block(
    sigma: &MemoryState,
    env: &Env,
    f: LabelAddress,
    access: Option<crate::ast::Access>,
    s: &Statement,
) -> MemoryState {
    let mut out = sigma.clone();
    out.insert_block(
        f,
        Block {
            value: MemoryValue::Stmt(Box::new(s.clone())),
            info: BlockInfo {
                alloc: crate::memory::Alloc::Occupy,
                access: access.unwrap_or(crate::ast::Access::Public),
                ty: LolisaType::Tfid(Some(f)),
            },
            stamp: Stamp::of(env),
        },
    );
    out
}

fn direct_members(body: &Statement) -> Vec<LabelAddress> {
    body.seq_items()
        .into_iter()
        .filter_map(|m| match m {
            Statement::Var(_, e) => e.address(),
            Statement::Struct(tag, _) => Some(*tag),
            Statement::Fun(d) | Statement::Funs(d, _) => d.id.address(),
            Statement::Modifier(id, ..) => id.address(),
            _ => None,
        })
        .collect()
}

/// Evaluates untyped arguments; variable references are dereferenced.
pub fn eval_field_args(sigma: &MemoryState, env: &Env, args: &[FieldArg]) -> Result<Vec<MemoryValue>, Fault> {
    args.iter()
        .map(|FieldArg(v)| match v {
            Value::Vref(r) if matches!(r.kind, crate::value::RefKind::Vvid | crate::value::RefKind::Vpid) => {
                let ty = sigma
                    .block(r.addr)
                    .map(|b| b.info.ty.clone())
                    .ok_or_else(|| Fault::new("argument", format!("{} is not allocated", r.addr)))?;
                read_chck(sigma, env, &ty, r.addr).into_result("argument")
            }
            other => eval_value_r(sigma, env, other),
        })
        .collect()
}

/// Binds call inputs to parameters positionally.
pub fn set_par(sigma: &MemoryState, fparams: &[Expr], inputs: &[MemoryValue]) -> Outcome<MemoryState> {
    if inputs.len() > fparams.len() {
        return Outcome::error(
            "set-par",
            format!("{} arguments for {} parameters", inputs.len(), fparams.len()),
        );
    }
    let mut st = sigma.clone();
    for (p, v) in fparams.iter().zip(inputs) {
        let Some(a) = p.address() else {
            return Outcome::error("set-par", "parameter has no address");
        };
        if !corresponds(&p.t1, v) {
            return Outcome::error(
                "set-par",
                format!("{} does not fit parameter type {:?}", v.constructor_name(), p.t1),
            );
        }
        st = write_dir(&st, a, v.clone());
    }
    Outcome::Some(st)
}

/// Writes `v` at `addr`; mapping buckets keep their key and link.
fn store(
    sigma: &MemoryState,
    env: &Env,
    ty: &LolisaType,
    addr: LabelAddress,
    v: MemoryValue,
) -> Result<MemoryState, Fault> {
    let block = sigma
        .block(addr)
        .ok_or_else(|| Fault::new("write-unallocated", format!("{addr} is not allocated")))?;
    if let MemoryValue::Map(next, Some(pair)) = &block.value {
        if !crate::memory::permitted(sigma, env, block) {
            return Err(Fault::new(
                "write-access",
                format!("{addr} is not writable from this scope"),
            ));
        }
        if !corresponds(&block.info.ty, &v) || !corresponds(&crate::types::final_type(ty), &v) {
            return Err(Fault::new(
                "write-type",
                format!("cannot store {} in a {:?} entry", v.constructor_name(), block.info.ty),
            ));
        }
        let updated = MemoryValue::Map(*next, Some(Box::new((pair.0.clone(), v))));
        return Ok(write_dir(sigma, addr, updated));
    }
    let expect = if crate::types::is_normal_form(ty) {
        ty.clone()
    } else {
        block.info.ty.clone()
    };
    write_check(sigma, env, &expect, addr, v).into_result("write")
}

/// Address of an l-value. Assigning through a mapping creates the entry,
/// so the state may grow.
pub fn eval_expr_l(sigma: &MemoryState, env: &Env, fenv: &Env, e: &Expr) -> Outcome<(MemoryState, LabelAddress)> {
    let _ = fenv;
    match &e.kind {
        ExprKind::Evar(a) | ExprKind::Epar(a) | ExprKind::Efun(a) | ExprKind::Econ(a) => match a {
            Some(a) => Outcome::Some((sigma.clone(), *a)),
            None => Outcome::error("lexp-null", "identifier has no address"),
        },
        ExprKind::Econst(Value::Varray { index, elem, name }) => array_lhs(sigma, env, *name, index, elem)
            .map(|a| (sigma.clone(), a))
            .into(),
        ExprKind::Econst(Value::Vmap {
            name,
            key,
            key_ty,
            val_ty,
            snd,
        }) => map_lhs(sigma.clone(), env, *name, key, key_ty, val_ty, snd.as_deref()).into(),
        ExprKind::Econst(_) => Outcome::error("lexp-other-cons", "constant is not assignable"),
        ExprKind::Emodifier(..) => Outcome::error("exp-modifier", "modifier application in expression position"),
        ExprKind::Estruct(..) | ExprKind::Ebop(..) | ExprKind::Euop(..) => {
            Outcome::error("lexp-invalid", "expression is not assignable")
        }
    }
}

fn array_lhs(
    sigma: &MemoryState,
    env: &Env,
    name: LabelAddress,
    index: &crate::types::ArrayIndex,
    elem: &LolisaType,
) -> Result<LabelAddress, Fault> {
    let a = array_slot(sigma, env, name, index)?;
    match elem {
        LolisaType::Tarray(next, inner) => array_lhs(sigma, env, a, next, inner),
        _ => Ok(a),
    }
}

fn map_lhs(
    mut sigma: MemoryState,
    env: &Env,
    name: LabelAddress,
    key: &MapKey,
    key_ty: &crate::types::LolisaMapType,
    val_ty: &LolisaType,
    snd: Option<&Value>,
) -> Result<(MemoryState, LabelAddress), Fault> {
    let k = eval_map_key(&sigma, env, key)?;
    if !corresponds(&crate::types::final_type(&key_ty.embed()), k.get()) {
        return Err(Fault::new("map-key", "key does not match the mapping key type"));
    }
    let head =
        read_chck(&sigma, env, &LolisaType::map(key_ty.clone(), val_ty.clone()), name).into_result("map-head")?;
    let bucket = match bucket_lookup(&sigma, &head, &k)? {
        Some((a, _)) => a,
        None => {
            let a = insert_bucket(&mut sigma, env, name, &head, k, val_ty)?;
            a
        }
    };
    match snd {
        None => Ok((sigma, bucket)),
        Some(Value::Vmap {
            key: k2,
            key_ty: kt2,
            val_ty: vt2,
            snd: s2,
            ..
        }) => {
            let inner = match read_dir(&sigma, bucket).into_result("map-lhs")? {
                MemoryValue::Map(_, Some(pair)) => match pair.1 {
                    MemoryValue::Map(h, None) => h,
                    _ => return Err(Fault::new("map-dimension", "entry is not a mapping")),
                },
                _ => return Err(Fault::new("map-lhs", "not a mapping entry")),
            };
            map_lhs(sigma, env, inner, k2, kt2, vt2, s2.as_deref())
        }
        Some(_) => Err(Fault::new("map-dimension", "next dimension is not a mapping")),
    }
}

/// Prepends a fresh entry for `key` holding the initial value of `val_ty`.
pub fn insert_bucket(
    sigma: &mut MemoryState,
    env: &Env,
    name: LabelAddress,
    head: &MemoryValue,
    key: MapMemoryValue,
    val_ty: &LolisaType,
) -> Result<LabelAddress, Fault> {
    let MemoryValue::Map(first, None) = head else {
        return Err(Fault::new("map-insert", "not a mapping head"));
    };
    let hb = sigma
        .block(name)
        .cloned()
        .ok_or_else(|| Fault::new("map-insert", "mapping head is not allocated"))?;
    let access = hb.info.access;
    let stamp = hb.stamp;
    let value = match val_ty {
        LolisaType::Tmap(..) => {
            let h = sigma.alloc_dynamic(1)?;
            sigma.insert_block(
                h,
                Block {
                    value: MemoryValue::Map(LabelAddress::NIL, None),
                    info: BlockInfo {
                        alloc: crate::memory::Alloc::Occupy,
                        access,
                        ty: val_ty.clone(),
                    },
                    stamp,
                },
            );
            MemoryValue::Map(h, None)
        }
        t => initial_value(sigma, env, access, stamp, t)?,
    };
    let a = sigma.alloc_dynamic(1)?;
    sigma.insert_block(
        a,
        Block {
            value: MemoryValue::Map(*first, Some(Box::new((key, value)))),
            info: BlockInfo {
                alloc: crate::memory::Alloc::Occupy,
                access,
                ty: val_ty.clone(),
            },
            stamp,
        },
    );
    *sigma = write_dir(sigma, name, MemoryValue::Map(a, None));
    Ok(a)
}

/// Value of an expression. Never changes the state.
pub fn eval_expr_r(sigma: &MemoryState, env: &Env, fenv: &Env, e: &Expr) -> Outcome<MemoryValue> {
    eval_r(sigma, env, fenv, e).into()
}

fn eval_r(sigma: &MemoryState, env: &Env, fenv: &Env, e: &Expr) -> Result<MemoryValue, Fault> {
    match &e.kind {
        ExprKind::Econst(v) => eval_value_r(sigma, env, v),
        ExprKind::Estruct(tag, pars) => {
            let mut ms = Vec::with_capacity(pars.len());
            for p in pars {
                ms.push(eval_r(sigma, env, fenv, p)?);
            }
            Ok(MemoryValue::Str(*tag, ms))
        }
        ExprKind::Evar(a) | ExprKind::Epar(a) => {
            let a = a.ok_or_else(|| Fault::new("rexp-null", "identifier has no address"))?;
            read_chck(sigma, env, &e.t1, a).into_result("rexp-addr")
        }
        ExprKind::Econ(a) => {
            let a = a.ok_or_else(|| Fault::new("rexp-null", "identifier has no address"))?;
            read_chck(sigma, env, &e.t1, a).into_result("rexp-addr")
        }
        ExprKind::Efun(a) => {
            let a = a.ok_or_else(|| Fault::new("rexp-null", "identifier has no address"))?;
            let v = read_chck(sigma, env, &e.t1, a.succ()).into_result("rexp-fun")?;
            Ok(unwrap_types(v))
        }
        ExprKind::Emodifier(..) => Err(Fault::new(
            "exp-modifier",
            "modifier application in expression position",
        )),
        ExprKind::Ebop(op, l, r) => {
            let a = eval_r(sigma, env, fenv, l)?;
            let b = eval_r(sigma, env, fenv, r)?;
            eval_bop(sigma, op, &a, &b).into_result("bop")
        }
        ExprKind::Euop(op, x) => {
            let a = eval_r(sigma, env, fenv, x)?;
            eval_uop(sigma, op, &a).into_result("uop")
        }
    }
}

fn int_out(x: &IntVal, v: BigInt) -> Result<MemoryValue, Fault> {
    Ok(MemoryValue::Int(Some(IntVal::checked(x.sign, x.size, v)?)))
}

fn shift_amount(y: &IntVal) -> Result<usize, Fault> {
    y.v.to_usize()
        .filter(|n| *n <= 256)
        .ok_or_else(|| Fault::new("bop-shift", format!("shift amount {} out of range", y.v)))
}

/// Binary operation on payloads.
pub fn eval_bop(sigma: &MemoryState, op: &BinOp, a: &MemoryValue, b: &MemoryValue) -> Outcome<MemoryValue> {
    let _ = sigma;
    bop(op.class, a, b).into()
}

fn bop(class: BinClass, a: &MemoryValue, b: &MemoryValue) -> Result<MemoryValue, Fault> {
    use BinClass::*;
    use MemoryValue as M;
    let bool_out = |v: bool| Ok(M::Bool(Some(v)));
    let unsupported = || {
        Err(Fault::new(
            "bop-operands",
            format!(
                "{} is not defined on {} and {}",
                class.symbol(),
                a.constructor_name(),
                b.constructor_name()
            ),
        ))
    };
    match (a, b) {
        (M::Int(Some(x)), M::Int(Some(y))) => {
            if x.sign != y.sign || x.size != y.size {
                return Err(Fault::new("bop-width", "operands have different integer types"));
            }
            match class {
                Add => int_out(x, &x.v + &y.v),
                Sub => int_out(x, &x.v - &y.v),
                Mul => int_out(x, &x.v * &y.v),
                Div | Mod if y.v.is_zero() => Err(Fault::new("bop-div-zero", "division by zero")),
                Div => int_out(x, &x.v / &y.v),
                Mod => int_out(x, &x.v % &y.v),
                Shl => int_out(x, &x.v << shift_amount(y)?),
                Shr => int_out(x, &x.v >> shift_amount(y)?),
                BitAnd => int_out(x, &x.v & &y.v),
                BitOr => int_out(x, &x.v | &y.v),
                BitXor => int_out(x, &x.v ^ &y.v),
                Lt => bool_out(x.v < y.v),
                Le => bool_out(x.v <= y.v),
                Gt => bool_out(x.v > y.v),
                Ge => bool_out(x.v >= y.v),
                Eq => bool_out(x.v == y.v),
                Ne => bool_out(x.v != y.v),
                And | Or => unsupported(),
            }
        }
        (M::Float(Some(x)), M::Float(Some(y))) => {
            let f = |v: f64| {
                if v.is_finite() {
                    Ok(M::Float(Some(v)))
                } else {
                    Err(Fault::new("bop-float", "result is not finite"))
                }
            };
            match class {
                Add => f(x + y),
                Sub => f(x - y),
                Mul => f(x * y),
                Div | Mod if *y == 0.0 => Err(Fault::new("bop-div-zero", "division by zero")),
                Div => f(x / y),
                Mod => f(x % y),
                Lt => bool_out(x < y),
                Le => bool_out(x <= y),
                Gt => bool_out(x > y),
                Ge => bool_out(x >= y),
                Eq => bool_out(x == y),
                Ne => bool_out(x != y),
                _ => unsupported(),
            }
        }
        (M::Bool(Some(x)), M::Bool(Some(y))) => match class {
            And => bool_out(*x && *y),
            Or => bool_out(*x || *y),
            Eq => bool_out(x == y),
            Ne => bool_out(x != y),
            _ => unsupported(),
        },
        (M::String(Some(x)), M::String(Some(y))) => match class {
            Eq => bool_out(x == y),
            Ne => bool_out(x != y),
            _ => unsupported(),
        },
        (M::Byte(Some((bx, x))), M::Byte(Some((by, y)))) if bx == by => {
            let zip = |f: fn(u8, u8) -> u8| Ok(M::Byte(Some((*bx, x.iter().zip(y).map(|(p, q)| f(*p, *q)).collect()))));
            match class {
                BitAnd => zip(|p, q| p & q),
                BitOr => zip(|p, q| p | q),
                BitXor => zip(|p, q| p ^ q),
                Eq => bool_out(x == y),
                Ne => bool_out(x != y),
                _ => unsupported(),
            }
        }
        (M::Str(tx, x), M::Str(ty, y)) => match class {
            Eq => bool_out(tx == ty && x == y),
            Ne => bool_out(!(tx == ty && x == y)),
            _ => unsupported(),
        },
        _ => unsupported(),
    }
}

/// Unary operation on a payload.
pub fn eval_uop(sigma: &MemoryState, op: &UnOp, a: &MemoryValue) -> Outcome<MemoryValue> {
    let _ = sigma;
    uop(&op.class, a).into()
}

fn uop(class: &UnClass, a: &MemoryValue) -> Result<MemoryValue, Fault> {
    use MemoryValue as M;
    let unsupported = || {
        Err(Fault::new(
            "uop-operand",
            format!("{} is not defined on {}", class.symbol(), a.constructor_name()),
        ))
    };
    match (class, a) {
        (UnClass::Neg, M::Int(Some(x))) => int_out(x, -&x.v),
        (UnClass::Neg, M::Float(Some(x))) => Ok(M::Float(Some(-x))),
        (UnClass::BitNot, M::Int(Some(x))) => match x.sign {
            crate::types::Signedness::Signed => int_out(x, -&x.v - 1),
            crate::types::Signedness::Unsigned => {
                let (_, hi) = crate::value::int_bounds(x.sign, x.size);
                int_out(x, hi - &x.v)
            }
        },
        (UnClass::BitNot, M::Byte(Some((b, bytes)))) => Ok(M::Byte(Some((*b, bytes.iter().map(|x| !x).collect())))),
        (UnClass::Not, M::Bool(Some(x))) => Ok(M::Bool(Some(!x))),
        (UnClass::Cast(t), v) => cast(t, v),
        _ => unsupported(),
    }
}

fn cast(target: &LolisaType, v: &MemoryValue) -> Result<MemoryValue, Fault> {
    use MemoryValue as M;
    match (target, v) {
        (LolisaType::Tint(s, sz), M::Int(Some(x))) => Ok(M::Int(Some(IntVal::checked(*s, *sz, x.v.clone())?))),
        (LolisaType::Tbytes(b), M::Int(Some(x))) => {
            if x.v.sign() == Sign::Minus {
                return Err(Fault::new("cast", "negative value cannot become bytes"));
            }
            let raw = x.v.to_bytes_be().1;
            let raw = if x.v.is_zero() { Vec::new() } else { raw };
            if raw.len() > b.len() {
                return Err(Fault::new("cast", "value does not fit the byte width"));
            }
            let mut out = vec![0u8; b.len() - raw.len()];
            out.extend(raw);
            Ok(M::Byte(Some((*b, out))))
        }
        (LolisaType::Tint(s, sz), M::Byte(Some((_, bytes)))) => {
            let v = BigInt::from_bytes_be(Sign::Plus, bytes);
            Ok(M::Int(Some(IntVal::checked(*s, *sz, v)?)))
        }
        (t, v) if corresponds(t, v) && !matches!(v, M::Int(None) | M::Bool(None) | M::Byte(None)) => Ok(v.clone()),
        _ => Err(Fault::new(
            "cast",
            format!("cannot cast {} to {target:?}", v.constructor_name()),
        )),
    }
}

/// Allocates every declared identifier and runs the library so built-ins are
/// resident. The returned state is the throw target.
pub fn init_mem(program: &Statement, lib: &Statement) -> Outcome<MemoryState> {
    let sigma = match allocate(program, lib) {
        Outcome::Some(s) => s,
        other => return other,
    };
    let mut it = Interpreter::new(GasTable::default(), sigma.clone());
    it.record_trace = false;
    let env = Env::global(u64::MAX);
    let fenv = Env::global(0);
    let r = it.eval_stmt(&sigma, &env, &fenv, lib);
    match (&r.outcome, r.halt) {
        (StatementOutcome::Error, _) => Outcome::Error(r.fault.unwrap_or(Fault::new("init-mem", "library failed"))),
        (_, Some(h)) => Outcome::error("init-mem", format!("library halted: {}", h.name())),
        _ => Outcome::Some(r.sigma),
    }
}

/// Settings for a whole-program run.
#[derive(Clone, Debug)]
pub struct ExecOptions {
    pub budget: u64,
    pub limit: u64,
    pub table: GasTable,
    /// Function called after the program with `opars`, if any.
    pub entry: Option<LabelAddress>,
    pub opars: Vec<MemoryValue>,
    pub record_trace: bool,
    pub dump_in_trace: bool,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            budget: 1_000_000,
            limit: 0,
            table: GasTable::default(),
            entry: None,
            opars: Vec::new(),
            record_trace: true,
            dump_in_trace: false,
        }
    }
}

/// Full run: static check, memory setup, environment setup, then the program.
pub fn exec_program(program: &Statement, lib: &Statement, opts: &ExecOptions) -> (ExecResult, Trace, MemoryState) {
    let (env, fenv) = init_env(program, opts.budget, opts.limit);
    if let Err(e) = check_program(program, lib) {
        let f = Fault::new("type-check", e.to_string());
        return (
            ExecResult::error(MemoryState::new(), env, f),
            Trace::default(),
            MemoryState::new(),
        );
    }
    let sigma = match init_mem(program, lib) {
        Outcome::Some(s) => s,
        Outcome::Error(f) => {
            return (
                ExecResult::error(MemoryState::new(), env, f),
                Trace::default(),
                MemoryState::new(),
            )
        }
        Outcome::None => {
            return (
                ExecResult::error(MemoryState::new(), env, Fault::new("init-mem", "no state")),
                Trace::default(),
                MemoryState::new(),
            )
        }
    };
    let mut contracts = env.inhers.clone();
    let (lib_env, _) = init_env(lib, 0, 0);
    contracts.extend(lib_env.inhers);
    let mut it = Interpreter::new(opts.table.clone(), sigma.clone()).with_contracts(contracts);
    it.record_trace = opts.record_trace;
    it.dump_in_trace = opts.dump_in_trace;
    let mut r = it.eval_stmt(&sigma, &env, &fenv, program);
    if let Some(f) = opts.entry {
        if r.continues() || r.outcome == StatementOutcome::Exit {
            let e = set_env(&r.env, 2, None);
            r = it.call(&r.sigma, &e, &fenv, f, opts.opars.clone());
        }
    }
    (r, it.trace, sigma)
}
