// SPDX-License-Identifier: Apache-2.0

//! Execution environments and gas accounting.

use std::collections::BTreeMap;

use crate::ast::{Statement, StmtKind};
use crate::outcome::{Fault, Outcome};
use crate::types::LabelAddress;
use crate::value::MemoryValue;

/// Scope and gas record. In `fenv` the gas slot holds the gas limit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Env {
    pub inhers: Vec<LabelAddress>,
    pub dom_super: Option<LabelAddress>,
    pub dom_current: Option<LabelAddress>,
    /// 0 local, 1 contract member, 2 global.
    pub dom_level: u8,
    pub gas: u64,
}

impl Env {
    pub fn global(gas: u64) -> Env {
        Env {
            inhers: Vec::new(),
            dom_super: None,
            dom_current: None,
            dom_level: 2,
            gas,
        }
    }

    pub fn set_env(&self, level: u8, dom: Option<LabelAddress>) -> Env {
        set_env(self, level, dom)
    }

    pub fn with_gas(&self, gas: u64) -> Env {
        Env { gas, ..self.clone() }
    }
}

pub fn set_env(env: &Env, level: u8, dom: Option<LabelAddress>) -> Env {
    if env.dom_level == level && env.dom_current == dom {
        return env.clone();
    }
    Env {
        dom_level: level.min(2),
        dom_super: env.dom_current,
        dom_current: dom,
        ..env.clone()
    }
}

/// Gas must stay above the limit, and an env whose domain equals the
/// frame's domain must also share its level.
pub fn env_check(env: &Env, fenv: &Env) -> bool {
    let congruent = !(env.dom_current == fenv.dom_current && env.dom_level != fenv.dom_level);
    env.gas > fenv.gas && congruent
}

/// Per-statement-kind gas costs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GasTable {
    cost: BTreeMap<StmtKind, u64>,
}

impl Default for GasTable {
    fn default() -> Self {
        let mut cost = BTreeMap::new();
        for k in StmtKind::ALL {
            cost.insert(k, 1);
        }
        cost.insert(StmtKind::Snil, 0);
        GasTable { cost }
    }
}

impl GasTable {
    pub fn cost(&self, k: StmtKind) -> u64 {
        self.cost.get(&k).copied().unwrap_or(1)
    }

    /// Sets a cost. `Snil` always stays free.
    pub fn set(&mut self, k: StmtKind, c: u64) {
        if k != StmtKind::Snil {
            self.cost.insert(k, c);
        }
    }

    pub fn min_positive_cost(&self) -> Option<u64> {
        self.cost.values().copied().filter(|c| *c > 0).min()
    }
}

/// Deducts the statement's cost; `None` when the gas does not cover it.
pub fn set_gas(s: &Statement, env: &Env, table: &GasTable) -> Outcome<Env> {
    let c = table.cost(s.kind());
    match env.gas.checked_sub(c) {
        Some(g) => Outcome::Some(env.with_gas(g)),
        None => Outcome::None,
    }
}

/// Builds `(env, fenv)`: identical scopes, `env` holding the budget and
/// `fenv` the limit.
pub fn init_env(program: &Statement, budget: u64, limit: u64) -> (Env, Env) {
    let mut inhers = Vec::new();
    collect_contracts(program, &mut inhers);
    let base = Env {
        inhers,
        ..Env::global(0)
    };
    (base.with_gas(budget), base.with_gas(limit))
}

fn collect_contracts(s: &Statement, out: &mut Vec<LabelAddress>) {
    match s {
        Statement::Contract(id, _, body) => {
            if let Some(c) = id.address() {
                out.push(c);
            }
            collect_contracts(body, out);
        }
        Statement::Seq(a, b) => {
            collect_contracts(a, out);
            collect_contracts(b, out);
        }
        _ => {}
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StatementOutcome {
    Normal,
    Stop,
    Error,
    Exit,
    ExitWith(MemoryValue),
    Continue,
    Break,
}

impl StatementOutcome {
    pub fn name(&self) -> &'static str {
        match self {
            StatementOutcome::Normal => "normal",
            StatementOutcome::Stop => "stop",
            StatementOutcome::Error => "error",
            StatementOutcome::Exit => "exit",
            StatementOutcome::ExitWith(_) => "exit_with",
            StatementOutcome::Continue => "continue",
            StatementOutcome::Break => "break",
        }
    }
}

/// Gas settings read from a `key=value` file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GasConfig {
    pub table: GasTable,
    pub budget: Option<u64>,
    pub limit: Option<u64>,
}

impl GasConfig {
    /// Parses `gas.<Kind>=n`, `gas.budget=n` and `gas.limit=n` lines. Blank
    /// lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<GasConfig, Fault> {
        let mut cfg = GasConfig::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| Fault::new("gas-config", format!("line {}: {msg}", no + 1));
            let (k, v) = line.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            let v: u64 = v.trim().parse().map_err(|_| bad("value is not a natural number"))?;
            let key = k
                .trim()
                .strip_prefix("gas.")
                .ok_or_else(|| bad("keys start with gas."))?;
            match key {
                "budget" => cfg.budget = Some(v),
                "limit" => cfg.limit = Some(v),
                kind => {
                    let k = StmtKind::from_name(kind).ok_or_else(|| bad(&format!("unknown statement kind {kind}")))?;
                    cfg.table.set(k, v);
                }
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snil_is_free() {
        let t = GasTable::default();
        let e = Env::global(5);
        assert_eq!(set_gas(&Statement::Snil, &e, &t).unwrap().gas, 5);
        let s = Statement::if_(
            crate::ast::Expr::constant(crate::value::Value::Vbool(true)),
            Statement::Snil,
            Statement::Snil,
        );
        assert_eq!(set_gas(&s, &e, &t).unwrap().gas, 4);
    }

    #[test]
    fn exhausted_gas_gives_none() {
        let mut t = GasTable::default();
        t.set(StmtKind::Throw, 3);
        assert_eq!(set_gas(&Statement::Throw, &Env::global(2), &t), Outcome::None);
    }

    #[test]
    fn env_check_cases() {
        let e = Env::global(10);
        assert!(env_check(&e, &e.with_gas(0)));
        assert!(!env_check(&e, &e.with_gas(10)));
        let mut f = e.with_gas(0);
        f.dom_level = 1;
        assert!(!env_check(&e, &f));
    }

    #[test]
    fn set_env_moves_current_to_super() {
        let c = LabelAddress::user(1);
        let e = Env::global(1).set_env(1, Some(c));
        assert_eq!((e.dom_level, e.dom_current, e.dom_super), (1, Some(c), None));
        assert_eq!(e.set_env(1, Some(c)), e);
    }

    #[test]
    fn config_parsing() {
        let cfg = GasConfig::parse("# costs\ngas.If=3\ngas.budget = 40\ngas.limit=2\ngas.Snil=9\n").unwrap();
        assert_eq!(cfg.table.cost(StmtKind::If), 3);
        assert_eq!(cfg.table.cost(StmtKind::Snil), 0);
        assert_eq!((cfg.budget, cfg.limit), (Some(40), Some(2)));
        assert!(GasConfig::parse("gas.Nope=1").is_err());
        assert!(GasConfig::parse("budget=1").is_err());
    }
}
