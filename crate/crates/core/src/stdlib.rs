// SPDX-License-Identifier: Apache-2.0

//! Built-in structs and functions resident at the special addresses.

use std::collections::BTreeMap;

use num_bigint::BigInt;

use crate::ast::{Expr, Statement};
use crate::env::Env;
use crate::memory::{read_chck, read_dir, write_dir, MemoryState};
use crate::outcome::Fault;
use crate::types::{LabelAddress, LolisaType};
use crate::value::{chain_length, struct_layout, FieldOwner, IntVal, MemoryValue};

/// The library program plus the name of every built-in it binds.
#[derive(Clone, Debug, PartialEq)]
pub struct StdlibImage {
    pub declarations: Statement,
    pub bindings: BTreeMap<&'static str, LabelAddress>,
}

pub fn address_layout() -> Vec<(LolisaType, String)> {
    vec![
        (LolisaType::int(), "addr".into()),
        (LolisaType::int(), "balance".into()),
        (LolisaType::Tfid(Some(LabelAddress::SEND)), "send".into()),
        (LolisaType::int(), "gas".into()),
    ]
}

pub fn msg_layout() -> Vec<(LolisaType, String)> {
    vec![
        (LolisaType::address(), "sender".into()),
        (LolisaType::int(), "values".into()),
    ]
}

pub fn block_layout() -> Vec<(LolisaType, String)> {
    vec![
        (LolisaType::int(), "number".into()),
        (LolisaType::int(), "timestamp".into()),
    ]
}

/// Struct layouts for `msg`, `address` and `block`. `send` and `call` are
/// run natively by the interpreter, so their blocks stay empty until used.
pub fn build_stdlib() -> StdlibImage {
    let declarations = Statement::seq_all(vec![
        Statement::Struct(LabelAddress::ADDRESS, address_layout()),
        Statement::Struct(LabelAddress::MSG, msg_layout()),
        Statement::Struct(LabelAddress::BLOCK, block_layout()),
    ]);
    let bindings = BTreeMap::from([
        ("address", LabelAddress::ADDRESS),
        ("msg", LabelAddress::MSG),
        ("block", LabelAddress::BLOCK),
        ("send", LabelAddress::SEND),
        ("transfer", LabelAddress::SEND),
        ("send_re", LabelAddress::SEND_RE),
        ("call", LabelAddress::CALL),
    ]);
    StdlibImage { declarations, bindings }
}

/// `requires(e)`: continue when `e` holds, throw otherwise.
pub fn requires(e: Expr) -> Statement {
    Statement::if_(e, Statement::Snil, Statement::Throw)
}

/// Number of entries in the mapping stored at `name`.
pub fn length(sigma: &MemoryState, env: &Env, name: LabelAddress) -> Result<u64, Fault> {
    let ty = sigma
        .block(name)
        .map(|b| b.info.ty.clone())
        .ok_or_else(|| Fault::new("length", format!("{name} is not allocated")))?;
    if !matches!(ty, LolisaType::Tmap(..)) {
        return Err(Fault::new("length", format!("{name} is not a mapping")));
    }
    let head = read_chck(sigma, env, &ty, name).into_result("length")?;
    chain_length(sigma, &head)
}

pub type Native =
    fn(&MemoryState, &Env, Option<&FieldOwner>, &[MemoryValue]) -> Result<(MemoryState, MemoryValue), Fault>;

/// The native implementation behind a built-in function address.
pub fn native(f: LabelAddress) -> Option<Native> {
    match f {
        LabelAddress::SEND => Some(send),
        LabelAddress::CALL => Some(call),
        _ => None,
    }
}

/// `a.send(v)`: debits `a.balance` by `v` when it suffices and logs the
/// transfer at `_0xsend_re`; a shortfall logs a failed entry.
pub fn send(
    sigma: &MemoryState,
    env: &Env,
    receiver: Option<&FieldOwner>,
    args: &[MemoryValue],
) -> Result<(MemoryState, MemoryValue), Fault> {
    let _ = env;
    let amount = match args.last() {
        Some(MemoryValue::Int(Some(i))) => i.clone(),
        Some(other) => {
            return Err(Fault::new(
                "send",
                format!("amount is {}, not an integer", other.constructor_name()),
            ))
        }
        None => return Err(Fault::new("send", "missing amount")),
    };
    let owner = receiver.ok_or_else(|| Fault::new("send", "no receiving address"))?;
    let account = owner_value(sigma, owner)?;
    let MemoryValue::Str(tag, fields) = &account else {
        return Err(Fault::new("send", "receiver is not an address"));
    };
    let layout = struct_layout(sigma, *tag)?;
    let pos = |n: &str| layout.iter().position(|(_, m)| m == n);
    let (Some(bal_i), Some(addr_i)) = (pos("balance"), pos("addr")) else {
        return Err(Fault::new("send", "receiver has no balance"));
    };
    let balance = match fields.get(bal_i) {
        Some(MemoryValue::Int(Some(b))) => Some(b.clone()),
        _ => None,
    };
    let addr = fields.get(addr_i).cloned().unwrap_or(MemoryValue::Undef);
    let mut log = match read_dir(sigma, LabelAddress::SEND_RE).into_result("send")? {
        MemoryValue::SendRe(entries) => entries,
        _ => Vec::new(),
    };
    let ok = amount.v >= BigInt::from(0) && balance.as_ref().is_some_and(|b| b.v >= amount.v);
    let mut out = sigma.clone();
    if ok {
        let b = balance.expect("checked above");
        let nb = IntVal::checked(b.sign, b.size, &b.v - &amount.v)?;
        let mut fields = fields.clone();
        fields[bal_i] = MemoryValue::Int(Some(nb));
        out = replace_owner_value(&out, owner, MemoryValue::Str(*tag, fields))?;
        log.push(Some(vec![addr, MemoryValue::Int(Some(amount))]));
    } else {
        log.push(None);
    }
    out = write_dir(&out, LabelAddress::SEND_RE, MemoryValue::SendRe(log));
    Ok((out, MemoryValue::Bool(Some(ok))))
}

/// `call(args..)`: records the arguments at `_0xcall` and reports success.
pub fn call(
    sigma: &MemoryState,
    env: &Env,
    receiver: Option<&FieldOwner>,
    args: &[MemoryValue],
) -> Result<(MemoryState, MemoryValue), Fault> {
    let _ = (env, receiver);
    let mut tys: Vec<LolisaType> = args.iter().map(payload_type).collect();
    tys.push(LolisaType::Tbool);
    let mut vs = args.to_vec();
    vs.push(MemoryValue::Bool(Some(true)));
    let out = write_dir(sigma, LabelAddress::CALL, MemoryValue::Types(tys, vs));
    Ok((out, MemoryValue::Bool(Some(true))))
}

/// Best type for a payload; used when recording untyped call arguments.
pub fn payload_type(v: &MemoryValue) -> LolisaType {
    match v {
        MemoryValue::Int(Some(i)) => i.ty(),
        MemoryValue::Int(None) => LolisaType::int(),
        MemoryValue::Bool(_) => LolisaType::Tbool,
        MemoryValue::Float(_) => LolisaType::Tfloat,
        MemoryValue::String(_) => LolisaType::Tstring,
        MemoryValue::Byte(Some((b, _))) => LolisaType::Tbytes(*b),
        MemoryValue::Str(tag, _) => LolisaType::Tstruct(*tag),
        _ => LolisaType::Tundef,
    }
}

fn owner_value(sigma: &MemoryState, owner: &FieldOwner) -> Result<MemoryValue, Fault> {
    let base = crate::value::payload_at(sigma, owner.base)?;
    crate::value::member_path(sigma, &base, &owner.path)
}

fn replace_owner_value(sigma: &MemoryState, owner: &FieldOwner, v: MemoryValue) -> Result<MemoryState, Fault> {
    let stored = read_dir(sigma, owner.base).into_result("send")?;
    let updated = match stored {
        MemoryValue::Map(next, Some(pair)) => {
            let inner = set_path(sigma, &pair.1, &owner.path, v)?;
            MemoryValue::Map(next, Some(Box::new((pair.0, inner))))
        }
        other => set_path(sigma, &other, &owner.path, v)?,
    };
    Ok(write_dir(sigma, owner.base, updated))
}

fn set_path(sigma: &MemoryState, cur: &MemoryValue, path: &[String], v: MemoryValue) -> Result<MemoryValue, Fault> {
    let Some((head, rest)) = path.split_first() else {
        return Ok(v);
    };
    let MemoryValue::Str(tag, fields) = cur else {
        return Err(Fault::new("field", format!("member {head} of a non-struct value")));
    };
    let layout = struct_layout(sigma, *tag)?;
    let i = layout
        .iter()
        .position(|(_, n)| n == head)
        .ok_or_else(|| Fault::new("field", format!("no member {head} in {tag}")))?;
    let mut fields = fields.clone();
    let inner = fields
        .get(i)
        .ok_or_else(|| Fault::new("field", format!("member {head} missing from instance")))?;
    fields[i] = set_path(sigma, inner, rest, v)?;
    Ok(MemoryValue::Str(*tag, fields))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bindings_cover_builtins() {
        let img = build_stdlib();
        for k in ["msg", "address", "block", "send", "call", "send_re"] {
            assert!(img.bindings.contains_key(k), "{k}");
        }
    }

    #[test]
    fn payload_types() {
        assert_eq!(payload_type(&MemoryValue::uint(3)), LolisaType::uint());
        assert_eq!(payload_type(&MemoryValue::Bool(None)), LolisaType::Tbool);
    }
}
