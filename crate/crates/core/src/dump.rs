// SPDX-License-Identifier: Apache-2.0

//! Text rendering of a memory state, one field per line.
//!
//! Layout: the built-in fields first (`m_init`, `m_send`, `m_send_re`,
//! `m_msg`, `m_address`, `m_throw`, `m_call`, `m_block`), then every other
//! block in ascending address order. Unoccupied blocks render as `initData`.

use std::fmt::Write;

use crate::memory::{Alloc, Block, MemoryState};
use crate::syntax::Printer;
use crate::types::LabelAddress;
use crate::value::{MemoryValue, RefKind};

const LEADING: [LabelAddress; 5] = [
    LabelAddress::INIT,
    LabelAddress::SEND,
    LabelAddress::SEND_RE,
    LabelAddress::MSG,
    LabelAddress::ADDRESS,
];
const TRAILING: [LabelAddress; 2] = [LabelAddress::CALL, LabelAddress::BLOCK];

/// Renders the whole state.
pub fn dump_state(sigma: &MemoryState) -> String {
    let mut out = String::new();
    let line = |out: &mut String, a: LabelAddress, b: Option<&Block>| {
        let _ = writeln!(out, "{} := {};", field_name(a), render_block(b));
    };
    for a in LEADING {
        line(&mut out, a, sigma.block(a));
    }
    let _ = writeln!(out, "m_throw := {};", sigma.throw_flag());
    for a in TRAILING {
        line(&mut out, a, sigma.block(a));
    }
    for (a, b) in sigma.blocks() {
        if !a.is_reserved() {
            line(&mut out, *a, Some(b));
        }
    }
    out
}

/// `m_msg` for built-ins, `m_0x00000010` otherwise.
pub fn field_name(a: LabelAddress) -> String {
    match a.special_name() {
        Some(n) => format!("m_{n}"),
        None => format!("m{a}"),
    }
}

/// One block: `initData` when unoccupied, else the payload followed by the
/// owning module, level, access and allocation flag.
pub fn render_block(b: Option<&Block>) -> String {
    let Some(b) = b else {
        return "initData".into();
    };
    if b.info.alloc == Alloc::Unoccupy {
        return "initData".into();
    }
    let dom = match b.stamp.dom {
        Some(d) => format!("(Some {})", addr(d)),
        None => "None".into(),
    };
    match &b.value {
        MemoryValue::StrType(tag, members) => {
            let p = Printer::new(None);
            let mut mems = String::from("str_nil");
            for (ty, name) in members.iter().rev() {
                mems = format!("(str_mem {} (Nvar {name}) {mems})", o_spelled(&p.ty(ty)));
            }
            let owner = b.stamp.dom.map_or_else(|| addr(*tag), addr);
            format!(
                "Str_type {} {mems} {owner} {} {}",
                addr(*tag),
                b.stamp.level,
                b.info.alloc.name()
            )
        }
        v => format!(
            "{} {dom} {} {} {}",
            render_payload(v),
            b.stamp.level,
            b.info.access.name(),
            b.info.alloc.name()
        ),
    }
}

fn addr(a: LabelAddress) -> String {
    if a == LabelAddress::NIL {
        return "nil".into();
    }
    o_spelled(&a.to_string())
}

// Dumps spell address literals with a letter O.
fn o_spelled(s: &str) -> String {
    s.replace("_0x", "_Ox")
}

fn opt<T>(x: &Option<T>, f: impl Fn(&T) -> String) -> String {
    match x {
        Some(v) => format!("(Some {})", f(v)),
        None => "None".into(),
    }
}

fn list(xs: impl IntoIterator<Item = String>) -> String {
    format!("[{}]", xs.into_iter().collect::<Vec<_>>().join("; "))
}

/// A payload on its own.
pub fn render_payload(v: &MemoryValue) -> String {
    let p = Printer::new(None);
    match v {
        MemoryValue::Undef => "Undef".into(),
        MemoryValue::Int(i) => format!(
            "Int {}",
            opt(i, |i| format!("(INT {} {:?} {})", i.size.name(), i.sign, i.v))
        ),
        MemoryValue::Bool(b) => format!("Bool {}", opt(b, |b| b.to_string())),
        MemoryValue::Byte(b) => format!(
            "Byte {}",
            opt(b, |(sz, bytes)| {
                let hex: String = bytes.iter().map(|x| format!("{x:02x}")).collect();
                format!("({} 0x{hex})", sz.name())
            })
        ),
        MemoryValue::Float(x) => format!("Float {}", opt(x, |x| format!("{x:?}"))),
        MemoryValue::String(s) => format!("String {}", opt(s, |s| format!("{s:?}"))),
        MemoryValue::Ptr(kind, a) => {
            let k = match kind {
                RefKind::Vvid => "Vid",
                RefKind::Vpid => "Pid",
                RefKind::Vfid => "Fid",
                RefKind::Vcid => "Cid",
            };
            format!("{k} {}", opt(a, |a| addr(*a)))
        }
        MemoryValue::Stmt(s) => {
            let text = p.stmt(s, 0);
            let flat: Vec<&str> = text.lines().map(str::trim).collect();
            format!("Stmt {}", o_spelled(&flat.join(" ")))
        }
        MemoryValue::Str(tag, fields) => format!("Str {} {}", addr(*tag), list(fields.iter().map(render_payload))),
        MemoryValue::StrType(tag, members) => format!(
            "Str_type {} {}",
            addr(*tag),
            list(members.iter().map(|(t, n)| format!("{} {n}", o_spelled(&p.ty(t)))))
        ),
        MemoryValue::Cid { id, members, inherits } => format!(
            "Cid {} {} {}",
            addr(*id),
            list(members.iter().map(|a| addr(*a))),
            list(inherits.iter().map(|a| addr(*a)))
        ),
        MemoryValue::Map(link, None) => format!("Map {} None", addr(*link)),
        MemoryValue::Map(link, Some(pair)) => format!(
            "Map {} (Some (i{}, {}))",
            addr(*link),
            render_payload(pair.0.get()),
            render_payload(&pair.1)
        ),
        MemoryValue::Types(tys, vs) => format!(
            "Types {} {}",
            list(tys.iter().map(|t| o_spelled(&p.ty(t)))),
            list(vs.iter().map(render_payload))
        ),
        MemoryValue::SendRe(entries) => format!(
            "Send_re {}",
            list(entries.iter().map(|e| opt(e, |vs| list(vs.iter().map(render_payload)))))
        ),
        MemoryValue::Array(first, n) => format!("Array {} {n}", addr(*first)),
    }
}
