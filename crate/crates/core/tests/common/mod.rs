// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use lolisa_core::env::Env;
use lolisa_core::eval::{eval_expr_r, ExecOptions, ExecResult, Trace};
use lolisa_core::memory::MemoryState;
use lolisa_core::run::{load, run, Loaded};
use lolisa_core::syntax::parse_expr;
use lolisa_core::value::MemoryValue;

pub const ICO: &str = include_str!("../fixtures/ico.lol");

/// Starting state for the sale: the sender is privileged, the privileged
/// window is [0, 3] and the quota is 100.
pub fn ico_preamble(now: u64, value: i64) -> String {
    format!(
        r"(Assignv msg (Estruct _0xmsg (Estruct _0xaddress 19 100 (Econst (Vref Vfid _0xsend)) 0) {value})) ;;
(Assignv safe (Estruct _0xaddress 7 1000 (Econst (Vref Vfid _0xsend)) 0)) ;;
(Assignv (Econst (@Vmap Iaddress Tbool privileges (Mstr_id Iaddress msg (sender)) None)) true) ;;
(Assignv (Econst (@Vmap Iaddress Tuint indexes (Mstr_id Iaddress msg (sender)) None)) 1u) ;;
(Assignv (Econst (@Vmap Iuint Tuint deposits (Mconst_id 1u) None)) 0u) ;;
(Assignv privilegeOpen 0u) ;;
(Assignv privilegeClose 3u) ;;
(Assignv privilegeQuota 100u) ;;
(Assignv subscription 0u) ;;
(Assignv TOKEN_TARGET_AMOUNT 1000u) ;;
(Assignv now {now}u)"
    )
}

pub struct Run {
    pub loaded: Loaded,
    pub result: ExecResult,
    pub trace: Trace,
    pub init: MemoryState,
}

impl Run {
    /// Reads an expression in the final state.
    pub fn read(&self, expr: &str) -> MemoryValue {
        let e = parse_expr(expr, &self.loaded.names).expect("expression parses");
        let env = Env::global(0);
        eval_expr_r(&self.result.sigma, &env, &env, &e).unwrap()
    }
}

pub fn run_source(src: &str, entry: Option<&str>, opts: ExecOptions) -> Run {
    let loaded = load(src, None).unwrap_or_else(|e| panic!("{e}"));
    let opts = ExecOptions {
        entry: entry.and_then(|n| loaded.entry(n)),
        ..opts
    };
    let (result, trace, init) = run(&loaded, &opts);
    Run {
        loaded,
        result,
        trace,
        init,
    }
}

pub fn run_ico(now: u64, value: i64) -> Run {
    let src = format!("{ICO}\n;;\n{}", ico_preamble(now, value));
    run_source(&src, Some("fallback"), ExecOptions::default())
}
