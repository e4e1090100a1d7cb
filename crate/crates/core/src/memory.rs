// SPDX-License-Identifier: Apache-2.0

//! The formal memory space: blocks addressed by label addresses.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::ast::{Access, Statement};
use crate::env::Env;
use crate::outcome::{Fault, Outcome};
use crate::types::{LabelAddress, LolisaType};
use crate::value::{block_compatible, initial_scalar, struct_layout, MemoryValue};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Alloc {
    Occupy,
    Unoccupy,
}

impl Alloc {
    pub fn name(self) -> &'static str {
        match self {
            Alloc::Occupy => "occupy",
            Alloc::Unoccupy => "unoccupy",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockInfo {
    pub alloc: Alloc,
    pub access: Access,
    pub ty: LolisaType,
}

impl BlockInfo {
    pub fn free(ty: LolisaType) -> BlockInfo {
        BlockInfo {
            alloc: Alloc::Unoccupy,
            access: Access::Public,
            ty,
        }
    }
}

/// Scope that owns a block: the declaring module and its level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stamp {
    pub dom: Option<LabelAddress>,
    pub level: u8,
}

impl Stamp {
    pub const GLOBAL: Stamp = Stamp { dom: None, level: 2 };

    pub fn of(env: &Env) -> Stamp {
        Stamp {
            dom: env.dom_current,
            level: env.dom_level,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub value: MemoryValue,
    pub info: BlockInfo,
    pub stamp: Stamp,
}

/// Persistent memory state. Clones share storage until written.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryState {
    blocks: Arc<BTreeMap<LabelAddress, Block>>,
    throw_flag: bool,
    next_dynamic: u32,
    /// Module graph: function to owning contract, contract to parents.
    parents: Arc<BTreeMap<LabelAddress, Vec<LabelAddress>>>,
}

impl Default for MemoryState {
    fn default() -> Self {
        MemoryState::new()
    }
}

impl MemoryState {
    /// A state holding only the unoccupied special blocks.
    pub fn new() -> MemoryState {
        let mut blocks = BTreeMap::new();
        for a in LabelAddress::SPECIAL {
            blocks.insert(
                a,
                Block {
                    value: MemoryValue::Undef,
                    info: BlockInfo::free(LolisaType::Tundef),
                    stamp: Stamp::GLOBAL,
                },
            );
        }
        MemoryState {
            blocks: Arc::new(blocks),
            throw_flag: false,
            next_dynamic: LabelAddress::DYNAMIC_BASE,
            parents: Arc::new(BTreeMap::new()),
        }
    }

    pub fn block(&self, a: LabelAddress) -> Option<&Block> {
        self.blocks.get(&a)
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&LabelAddress, &Block)> {
        self.blocks.iter()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn throw_flag(&self) -> bool {
        self.throw_flag
    }

    pub fn set_throw_flag(&mut self, v: bool) {
        self.throw_flag = v;
    }

    pub fn insert_block(&mut self, a: LabelAddress, b: Block) {
        Arc::make_mut(&mut self.blocks).insert(a, b);
    }

    fn block_mut(&mut self, a: LabelAddress) -> Option<&mut Block> {
        Arc::make_mut(&mut self.blocks).get_mut(&a)
    }

    /// Reserves `n` contiguous addresses in the dynamic region.
    pub fn alloc_dynamic(&mut self, n: u64) -> Result<LabelAddress, Fault> {
        let n32 = u32::try_from(n).map_err(|_| Fault::new("alloc", "allocation too large"))?;
        let start = self.next_dynamic;
        let end = start
            .checked_add(n32)
            .filter(|e| *e < LabelAddress::NIL.0)
            .ok_or_else(|| Fault::new("alloc", "dynamic region exhausted"))?;
        self.next_dynamic = end;
        Ok(LabelAddress(start))
    }

    pub fn set_parents(&mut self, module: LabelAddress, parents: Vec<LabelAddress>) {
        Arc::make_mut(&mut self.parents).insert(module, parents);
    }

    pub fn parents_of(&self, module: LabelAddress) -> &[LabelAddress] {
        self.parents.get(&module).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Reflexive-transitive closure of the module graph.
    pub fn is_submodule(&self, a: LabelAddress, b: LabelAddress) -> bool {
        let mut seen = BTreeSet::new();
        let mut stack = vec![a];
        while let Some(m) = stack.pop() {
            if m == b {
                return true;
            }
            if seen.insert(m) {
                stack.extend(self.parents_of(m).iter().copied());
            }
        }
        false
    }
}

/// Whether `env` may touch a block.
pub fn permitted(sigma: &MemoryState, env: &Env, b: &Block) -> bool {
    let Some(owner) = b.stamp.dom else {
        return true;
    };
    match b.info.access {
        Access::Public => true,
        Access::Protected => env.dom_current.is_some_and(|d| sigma.is_submodule(d, owner)),
        Access::Private => env
            .dom_current
            .is_some_and(|d| d == owner || (!is_contract(sigma, d) && sigma.parents_of(d).first() == Some(&owner))),
    }
}

fn is_contract(sigma: &MemoryState, a: LabelAddress) -> bool {
    sigma.block(a).is_some_and(|b| matches!(b.info.ty, LolisaType::Tcid(_)))
}

/// Checked read: allocation, occupancy, access, and type agreement.
pub fn read_chck(sigma: &MemoryState, env: &Env, ty: &LolisaType, a: LabelAddress) -> Outcome<MemoryValue> {
    let Some(b) = sigma.block(a) else {
        return Outcome::error("read-unallocated", format!("{a} is not allocated"));
    };
    if b.info.alloc != Alloc::Occupy {
        return Outcome::error("read-unoccupied", format!("{a} is not occupied"));
    }
    if !permitted(sigma, env, b) {
        return Outcome::error("read-access", format!("{a} is not accessible from this scope"));
    }
    if !block_compatible(ty, &b.value) {
        return Outcome::error(
            "read-type",
            format!("{a} holds {}, expected {ty:?}", b.value.constructor_name()),
        );
    }
    Outcome::Some(b.value.clone())
}

/// Unchecked read.
pub fn read_dir(sigma: &MemoryState, a: LabelAddress) -> Outcome<MemoryValue> {
    match sigma.block(a) {
        Some(b) => Outcome::Some(b.value.clone()),
        None => Outcome::error("read-unallocated", format!("{a} is not allocated")),
    }
}

/// Unchecked write; marks the block occupied. Creates the block if absent.
pub fn write_dir(sigma: &MemoryState, a: LabelAddress, v: MemoryValue) -> MemoryState {
    let mut out = sigma.clone();
    match out.block_mut(a) {
        Some(b) => {
            b.value = v;
            b.info.alloc = Alloc::Occupy;
        }
        None => out.insert_block(
            a,
            Block {
                value: v,
                info: BlockInfo {
                    alloc: Alloc::Occupy,
                    access: Access::Public,
                    ty: LolisaType::Tundef,
                },
                stamp: Stamp::GLOBAL,
            },
        ),
    }
    out
}

/// Checked write: allocation, access, and type agreement with the block.
pub fn write_check(
    sigma: &MemoryState,
    env: &Env,
    ty: &LolisaType,
    a: LabelAddress,
    v: MemoryValue,
) -> Outcome<MemoryState> {
    if a.is_reserved() {
        return Outcome::error("write-special", format!("{a} is a built-in block"));
    }
    let Some(b) = sigma.block(a) else {
        return Outcome::error("write-unallocated", format!("{a} is not allocated"));
    };
    if !permitted(sigma, env, b) {
        return Outcome::error("write-access", format!("{a} is not writable from this scope"));
    }
    if !crate::value::corresponds(&b.info.ty, &v) || !crate::value::corresponds(ty, &v) {
        return Outcome::error(
            "write-type",
            format!("cannot store {} in a {:?} block", v.constructor_name(), b.info.ty),
        );
    }
    Outcome::Some(write_dir(sigma, a, v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OffsetOp {
    Plus,
    Minus,
}

/// Address of an array element relative to the descriptor at `base`.
/// `Minus` counts back from the last element.
pub fn address_offset(sigma: &MemoryState, op: OffsetOp, offset: u64, base: LabelAddress) -> Outcome<LabelAddress> {
    let Some(b) = sigma.block(base) else {
        return Outcome::error("array-offset", format!("{base} is not allocated"));
    };
    let MemoryValue::Array(first, len) = b.value else {
        return Outcome::error("array-offset", format!("{base} is not an array"));
    };
    if offset >= len {
        return Outcome::error("array-offset", format!("index {offset} out of range 0..{len}"));
    }
    let rel = match op {
        OffsetOp::Plus => offset,
        OffsetOp::Minus => len - 1 - offset,
    };
    Outcome::Some(LabelAddress(first.0 + rel as u32))
}

/// Builds the initial payload of type `t`, allocating array elements and
/// inner mapping heads as needed.
pub fn initial_value(
    sigma: &mut MemoryState,
    env: &Env,
    access: Access,
    stamp: Stamp,
    t: &LolisaType,
) -> Result<MemoryValue, Fault> {
    match t {
        LolisaType::Tstruct(tag) => {
            let layout =
                struct_layout(sigma, *tag).map_err(|_| Fault::new("init-var", format!("unknown struct {tag}")))?;
            let mut members = Vec::with_capacity(layout.len());
            for (mt, _) in &layout {
                members.push(initial_value(sigma, env, access, stamp, mt)?);
            }
            Ok(MemoryValue::Str(*tag, members))
        }
        LolisaType::Tarray(idx, elem) => {
            let n = crate::value::eval_array_index(sigma, env, idx).into_result("init-var")?;
            if n == 0 || **elem == LolisaType::Tundef {
                return Err(Fault::new("init-var", "array type is not well formed"));
            }
            let first = sigma.alloc_dynamic(n)?;
            for i in 0..n {
                let v = initial_value(sigma, env, access, stamp, elem)?;
                sigma.insert_block(
                    LabelAddress(first.0 + i as u32),
                    Block {
                        value: v,
                        info: BlockInfo {
                            alloc: Alloc::Occupy,
                            access,
                            ty: (**elem).clone(),
                        },
                        stamp,
                    },
                );
            }
            Ok(MemoryValue::Array(first, n))
        }
        other => Ok(initial_scalar(other)),
    }
}

/// Declares a variable at `a`: fresh block info and its initial payload.
pub fn init_var(
    sigma: &MemoryState,
    env: &Env,
    fenv: &Env,
    oacc: Option<Access>,
    t: &LolisaType,
    a: LabelAddress,
) -> Outcome<MemoryState> {
    let _ = fenv;
    if a.is_reserved() {
        return Outcome::error("init-var", format!("{a} is a built-in block"));
    }
    let access = oacc.unwrap_or(Access::Public);
    let stamp = Stamp::of(env);
    let mut out = sigma.clone();
    let v = match initial_value(&mut out, env, access, stamp, t) {
        Ok(v) => v,
        Err(e) => return Outcome::Error(e),
    };
    out.insert_block(
        a,
        Block {
            value: v,
            info: BlockInfo {
                alloc: Alloc::Occupy,
                access,
                ty: t.clone(),
            },
            stamp,
        },
    );
    Outcome::Some(out)
}

/// Places the return placeholder for `tys` in the slot `lambda`.
pub fn init_re(sigma: &MemoryState, lambda: LabelAddress, tys: &[LolisaType]) -> Outcome<MemoryState> {
    let vals = tys.iter().map(initial_scalar).collect();
    Outcome::Some(write_dir(sigma, lambda, MemoryValue::Types(tys.to_vec(), vals)))
}

/// Every address a program declares, with the type of its block.
pub fn declared_blocks(s: &Statement) -> Result<Vec<(LabelAddress, LolisaType)>, Fault> {
    let mut out = Vec::new();
    collect_decls(s, &mut out)?;
    Ok(out)
}

fn need_addr(e: &crate::ast::Expr, what: &str) -> Result<LabelAddress, Fault> {
    e.address()
        .ok_or_else(|| Fault::new("init-mem", format!("{what} has no address")))
}

fn collect_decls(s: &Statement, out: &mut Vec<(LabelAddress, LolisaType)>) -> Result<(), Fault> {
    match s {
        Statement::Var(_, e) => out.push((need_addr(e, "variable")?, e.t1.clone())),
        Statement::Struct(tag, _) => out.push((*tag, LolisaType::Tstruct(*tag))),
        Statement::Contract(id, _, body) => {
            let c = need_addr(id, "contract")?;
            out.push((c, LolisaType::Tcid(Some(c))));
            collect_decls(body, out)?;
        }
        Statement::Modifier(id, pars, body) => {
            fun_like(id, pars, LolisaType::Tundef, out)?;
            collect_decls(body, out)?;
        }
        Statement::Fun(d) => {
            fun_like(&d.id, &d.pars, d.id.t1.clone(), out)?;
            collect_decls(&d.body, out)?;
        }
        Statement::Funs(d, _) => {
            fun_like(&d.id, &d.pars, LolisaType::Tundef, out)?;
            collect_decls(&d.body, out)?;
        }
        Statement::Seq(a, b) => {
            collect_decls(a, out)?;
            collect_decls(b, out)?;
        }
        Statement::If(_, a, b) => {
            collect_decls(a, out)?;
            collect_decls(b, out)?;
        }
        Statement::LoopFor(i, _, st, b) => {
            collect_decls(i, out)?;
            collect_decls(st, out)?;
            collect_decls(b, out)?;
        }
        Statement::LoopWhile(_, b) => collect_decls(b, out)?,
        _ => {}
    }
    Ok(())
}

fn fun_like(
    id: &crate::ast::Expr,
    pars: &[crate::ast::Expr],
    ret: LolisaType,
    out: &mut Vec<(LabelAddress, LolisaType)>,
) -> Result<(), Fault> {
    let f = need_addr(id, "function")?;
    out.push((f, LolisaType::Tfid(Some(f))));
    out.push((f.succ(), ret));
    for p in pars {
        out.push((need_addr(p, "parameter")?, p.t1.clone()));
    }
    Ok(())
}

/// Module graph edges: functions and modifiers to their contract, contracts
/// to their parents.
pub fn module_edges(s: &Statement) -> Vec<(LabelAddress, Vec<LabelAddress>)> {
    let mut out = Vec::new();
    edges(s, None, &mut out);
    out
}

fn edges(s: &Statement, owner: Option<LabelAddress>, out: &mut Vec<(LabelAddress, Vec<LabelAddress>)>) {
    match s {
        Statement::Contract(id, inherits, body) => {
            if let Some(c) = id.address() {
                out.push((c, inherits.clone()));
                edges(body, Some(c), out);
            }
        }
        Statement::Fun(d) | Statement::Funs(d, _) => {
            if let (Some(f), Some(c)) = (d.id.address(), owner) {
                out.push((f, vec![c]));
            }
        }
        Statement::Modifier(id, ..) => {
            if let (Some(f), Some(c)) = (id.address(), owner) {
                out.push((f, vec![c]));
            }
        }
        Statement::Seq(a, b) | Statement::If(_, a, b) => {
            edges(a, owner, out);
            edges(b, owner, out);
        }
        _ => {}
    }
}

/// Allocates a block for every identifier declared in `lib` then `program`.
/// Library declarations may use built-in addresses; program ones may not.
/// Two declarations of one address must agree on its type.
pub fn allocate(program: &Statement, lib: &Statement) -> Outcome<MemoryState> {
    allocate_r(program, lib).into()
}

fn allocate_r(program: &Statement, lib: &Statement) -> Result<MemoryState, Fault> {
    let mut sigma = MemoryState::new();
    let mut seen: BTreeMap<LabelAddress, LolisaType> = BTreeMap::new();
    for (from_lib, s) in [(true, lib), (false, program)] {
        for (a, t) in declared_blocks(s)? {
            if a == LabelAddress::NIL || (!from_lib && a.is_reserved()) {
                return Err(Fault::new("init-mem", format!("{a} is reserved")));
            }
            if let Some(prev) = seen.get(&a) {
                if *prev != t {
                    return Err(Fault::new("init-mem", format!("{a} already exists")));
                }
                continue;
            }
            seen.insert(a, t.clone());
            if a.is_reserved() {
                continue;
            }
            sigma.insert_block(
                a,
                Block {
                    value: MemoryValue::Undef,
                    info: BlockInfo::free(t),
                    stamp: Stamp::GLOBAL,
                },
            );
        }
        for (m, ps) in module_edges(s) {
            sigma.set_parents(m, ps);
        }
    }
    Ok(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Expr;

    fn env() -> Env {
        Env::global(100)
    }

    fn declare_uint(a: LabelAddress) -> MemoryState {
        let s = Statement::Var(None, Expr::var(a, LolisaType::uint()));
        allocate(&s, &Statement::Snil).unwrap()
    }

    #[test]
    fn declared_block_starts_unoccupied() {
        let a = LabelAddress::user(0);
        let s = declare_uint(a);
        assert_eq!(s.block(a).unwrap().info.alloc, Alloc::Unoccupy);
        assert!(read_chck(&s, &env(), &LolisaType::uint(), a).is_error());
    }

    #[test]
    fn write_check_rejects_wrong_constructor() {
        let a = LabelAddress::user(0);
        let s = declare_uint(a);
        let s = init_var(&s, &env(), &env(), None, &LolisaType::uint(), a).unwrap();
        assert!(write_check(&s, &env(), &LolisaType::uint(), a, MemoryValue::Bool(Some(true))).is_error());
        let s2 = write_check(&s, &env(), &LolisaType::uint(), a, MemoryValue::uint(4)).unwrap();
        assert_eq!(read_dir(&s2, a).unwrap(), MemoryValue::uint(4));
    }

    #[test]
    fn offsets_stay_in_range() {
        let a = LabelAddress::user(0);
        let t = LolisaType::array(crate::types::ArrayIndex::ConstId(3), LolisaType::Tbool);
        let s = allocate(&Statement::Var(None, Expr::var(a, t.clone())), &Statement::Snil).unwrap();
        let s = init_var(&s, &env(), &env(), None, &t, a).unwrap();
        let MemoryValue::Array(first, 3) = read_dir(&s, a).unwrap() else {
            panic!()
        };
        assert_eq!(address_offset(&s, OffsetOp::Plus, 0, a).unwrap(), first);
        assert_eq!(
            address_offset(&s, OffsetOp::Plus, 2, a).unwrap(),
            LabelAddress(first.0 + 2)
        );
        assert_eq!(
            address_offset(&s, OffsetOp::Minus, 0, a).unwrap(),
            LabelAddress(first.0 + 2)
        );
        assert!(address_offset(&s, OffsetOp::Plus, 3, a).is_error());
    }

    #[test]
    fn conflicting_declarations_fail() {
        let a = LabelAddress::user(0);
        let s = Statement::seq(
            Statement::Var(None, Expr::var(a, LolisaType::uint())),
            Statement::Var(None, Expr::var(a, LolisaType::Tbool)),
        );
        assert!(allocate(&s, &Statement::Snil).is_error());
    }

    #[test]
    fn private_blocks_need_the_owner() {
        let c = LabelAddress::user(0);
        let d = LabelAddress::user(1);
        let f = LabelAddress::user(2);
        let mut s = MemoryState::new();
        s.set_parents(f, vec![c]);
        s.set_parents(d, vec![c]);
        s.insert_block(
            d,
            Block {
                value: MemoryValue::Undef,
                info: BlockInfo::free(LolisaType::Tcid(Some(d))),
                stamp: Stamp::GLOBAL,
            },
        );
        let b = Block {
            value: MemoryValue::uint(1),
            info: BlockInfo {
                alloc: Alloc::Occupy,
                access: Access::Private,
                ty: LolisaType::uint(),
            },
            stamp: Stamp { dom: Some(c), level: 1 },
        };
        let in_f = env().set_env(0, Some(f));
        let in_d = env().set_env(1, Some(d));
        assert!(permitted(&s, &in_f, &b));
        assert!(!permitted(&s, &in_d, &b));
        let prot = Block {
            info: BlockInfo {
                access: Access::Protected,
                ..b.info.clone()
            },
            ..b.clone()
        };
        assert!(permitted(&s, &in_d, &prot));
        assert!(!permitted(&s, &env(), &prot));
    }
}
