// SPDX-License-Identifier: Apache-2.0

//! Source to result: parse, check, execute.

use crate::ast::Statement;
use crate::check::{check_program, TypeError};
use crate::env::StatementOutcome;
use crate::eval::{exec_program, ExecOptions, ExecResult, Halt, Trace};
use crate::memory::MemoryState;
use crate::stdlib::build_stdlib;
use crate::syntax::{parse, read_item_count, Names, ParseError};
use crate::types::LabelAddress;

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("type error: {0}")]
    Type(#[from] TypeError),
}

/// A checked program together with its library and name table.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub program: Statement,
    pub lib: Statement,
    pub names: Names,
}

impl Loaded {
    /// The function called after the program body, by plain name.
    pub fn entry(&self, name: &str) -> Option<LabelAddress> {
        self.names.find(name)
    }
}

/// Parses `lib` (optional) and `src` into one name space and checks both.
/// Library items run before the program, after the built-in structs.
pub fn load(src: &str, lib: Option<&str>) -> Result<Loaded, LoadError> {
    let (text, lib_items) = match lib {
        Some(l) if !l.trim().is_empty() => (format!("{l}\n;;\n{src}"), read_item_count(l)?),
        _ => (src.to_string(), 0),
    };
    let parsed = parse(&text)?;
    let items: Vec<Statement> = parsed.statement.seq_items().into_iter().cloned().collect();
    let (user_lib, program) = items.split_at(lib_items.min(items.len()));
    let std = build_stdlib().declarations;
    let mut lib_stmts: Vec<Statement> = std.seq_items().into_iter().cloned().collect();
    lib_stmts.extend(user_lib.iter().cloned());
    let lib = Statement::seq_all(lib_stmts);
    let program = Statement::seq_all(program.to_vec());
    check_program(&program, &lib)?;
    Ok(Loaded {
        program,
        lib,
        names: parsed.names,
    })
}

/// Runs a loaded program. Returns the final result, the trace and the
/// initial state.
pub fn run(loaded: &Loaded, opts: &ExecOptions) -> (ExecResult, Trace, MemoryState) {
    exec_program(&loaded.program, &loaded.lib, opts)
}

/// Process exit status for a finished run: 3 when gas ran out, 2 for an
/// error outcome, 0 otherwise (stop, exit, throw).
pub fn exit_code(r: &ExecResult) -> i32 {
    match (&r.outcome, r.halt) {
        (_, Some(Halt::Gas)) => 3,
        (StatementOutcome::Error, _) | (_, Some(Halt::CallFailed)) => 2,
        _ => 0,
    }
}
