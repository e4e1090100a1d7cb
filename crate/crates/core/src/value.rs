// SPDX-License-Identifier: Apache-2.0

//! Source-level values, memory payloads, and value evaluation.

use num_bigint::BigInt;
use num_traits::{One, Signed as _, ToPrimitive, Zero};

use crate::ast::Statement;
use crate::env::Env;
use crate::memory::{read_chck, read_dir, MemoryState};
use crate::outcome::{Fault, Outcome};
use crate::types::{
    final_type, is_normal_form, ArrayIndex, ByteSize, IntSize, LabelAddress, LolisaMapType, LolisaType, MapArrayIndex,
    Signedness,
};

/// An integer tagged with its declared width.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IntVal {
    pub sign: Signedness,
    pub size: IntSize,
    pub v: BigInt,
}

impl IntVal {
    /// Builds the value, failing when it does not fit the width.
    pub fn checked(sign: Signedness, size: IntSize, v: BigInt) -> Result<IntVal, Fault> {
        if fits(sign, size, &v) {
            Ok(IntVal { sign, size, v })
        } else {
            Err(Fault::new(
                "int-overflow",
                format!("{v} does not fit {} {:?}", size.name(), sign),
            ))
        }
    }

    pub fn int(v: i64) -> IntVal {
        IntVal {
            sign: Signedness::Signed,
            size: IntSize::I64,
            v: BigInt::from(v),
        }
    }

    pub fn uint(v: u64) -> IntVal {
        IntVal {
            sign: Signedness::Unsigned,
            size: IntSize::I64,
            v: BigInt::from(v),
        }
    }

    pub fn ty(&self) -> LolisaType {
        LolisaType::Tint(self.sign, self.size)
    }
}

pub fn int_bounds(sign: Signedness, size: IntSize) -> (BigInt, BigInt) {
    let bits = size.bits();
    match sign {
        Signedness::Unsigned => (BigInt::zero(), (BigInt::one() << bits) - 1),
        Signedness::Signed => (-(BigInt::one() << (bits - 1)), (BigInt::one() << (bits - 1)) - 1),
    }
}

pub fn fits(sign: Signedness, size: IntSize, v: &BigInt) -> bool {
    let (lo, hi) = int_bounds(sign, size);
    *v >= lo && *v <= hi
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RefKind {
    Vvid,
    Vpid,
    Vfid,
    Vcid,
}

impl RefKind {
    pub fn name(self) -> &'static str {
        match self {
            RefKind::Vvid => "Vvid",
            RefKind::Vpid => "Vpid",
            RefKind::Vfid => "Vfid",
            RefKind::Vcid => "Vcid",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RefId {
    pub kind: RefKind,
    pub addr: LabelAddress,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MapKey {
    MconstId(Box<Value>),
    MvarId(LabelAddress),
    MstrId(LabelAddress, Vec<String>),
    MarrayId(LabelAddress, MapArrayIndex),
    MmapId(LabelAddress, Box<MapKey>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum FieldHead {
    /// Struct type tag, then the instance address.
    Fstruct(LabelAddress, LabelAddress),
    Fmap(LabelAddress, MapKey, Option<Box<Value>>),
    Farray(LabelAddress, ArrayIndex),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Vundef,
    Vint(IntVal),
    Vbool(bool),
    Vfloat(f64),
    Vbyte(ByteSize, Vec<u8>),
    Vstring(String),
    Vstruct(LabelAddress, LabelAddress),
    Vref(RefId),
    Varray {
        index: ArrayIndex,
        elem: LolisaType,
        name: LabelAddress,
    },
    Vmap {
        name: LabelAddress,
        key: MapKey,
        key_ty: LolisaMapType,
        val_ty: LolisaType,
        snd: Option<Box<Value>>,
    },
    Vfield {
        t0: LolisaType,
        t1: LolisaType,
        head: FieldHead,
        mems: Vec<String>,
        opars: Option<Vec<FieldArg>>,
    },
}

/// Untyped argument carried by field accesses and modifier applications.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldArg(pub Value);

impl Value {
    /// The type index of the value.
    pub fn carried_type(&self) -> LolisaType {
        match self {
            Value::Vundef => LolisaType::Tundef,
            Value::Vint(i) => i.ty(),
            Value::Vbool(_) => LolisaType::Tbool,
            Value::Vfloat(_) => LolisaType::Tfloat,
            Value::Vbyte(b, _) => LolisaType::Tbytes(*b),
            Value::Vstring(_) => LolisaType::Tstring,
            Value::Vstruct(tag, _) => LolisaType::Tstruct(*tag),
            Value::Vref(r) => match r.kind {
                RefKind::Vvid => LolisaType::Tvid(Some(r.addr)),
                RefKind::Vpid => LolisaType::Tpid(Some(r.addr)),
                RefKind::Vfid => LolisaType::Tfid(Some(r.addr)),
                RefKind::Vcid => LolisaType::Tcid(Some(r.addr)),
            },
            Value::Varray { index, elem, .. } => LolisaType::array(index.clone(), elem.clone()),
            Value::Vmap { key_ty, val_ty, .. } => LolisaType::map(key_ty.clone(), val_ty.clone()),
            Value::Vfield { t1, .. } => t1.clone(),
        }
    }

    pub fn is_normal_form(&self) -> bool {
        !matches!(
            self,
            Value::Varray { .. } | Value::Vmap { .. } | Value::Vfield { .. } | Value::Vstruct(..)
        )
    }

    pub fn int(v: i64) -> Value {
        Value::Vint(IntVal::int(v))
    }

    pub fn uint(v: u64) -> Value {
        Value::Vint(IntVal::uint(v))
    }
}

/// Payload of a memory block.
#[derive(Clone, Debug, PartialEq)]
pub enum MemoryValue {
    Undef,
    Int(Option<IntVal>),
    Bool(Option<bool>),
    Byte(Option<(ByteSize, Vec<u8>)>),
    Float(Option<f64>),
    String(Option<String>),
    Ptr(RefKind, Option<LabelAddress>),
    Stmt(Box<Statement>),
    /// Struct instance: type tag and member payloads in declaration order.
    Str(LabelAddress, Vec<MemoryValue>),
    /// Struct layout stored at the struct's tag.
    StrType(LabelAddress, Vec<(LolisaType, String)>),
    /// Contract record: members declared in the body and inherited contracts.
    Cid {
        id: LabelAddress,
        members: Vec<LabelAddress>,
        inherits: Vec<LabelAddress>,
    },
    /// Mapping head (`pair == None`, `link` is the first bucket) or bucket
    /// (`pair == Some`, `link` is the next bucket). `NIL` ends the chain.
    Map(LabelAddress, Option<Box<(MapMemoryValue, MemoryValue)>>),
    Types(Vec<LolisaType>, Vec<MemoryValue>),
    SendRe(Vec<Option<Vec<MemoryValue>>>),
    /// Array descriptor: address of element 0 and element count.
    Array(LabelAddress, u64),
}

/// A payload usable as a mapping key: anything but a mapping or a send log.
#[derive(Clone, Debug, PartialEq)]
pub struct MapMemoryValue(MemoryValue);

impl MapMemoryValue {
    pub fn new(v: MemoryValue) -> Result<MapMemoryValue, Fault> {
        if contains_map_or_send(&v) {
            Err(Fault::new("map-key", "mapping keys cannot hold mappings or send logs"))
        } else {
            Ok(MapMemoryValue(v))
        }
    }

    pub fn get(&self) -> &MemoryValue {
        &self.0
    }
}

fn contains_map_or_send(v: &MemoryValue) -> bool {
    match v {
        MemoryValue::Map(..) | MemoryValue::SendRe(_) => true,
        MemoryValue::Str(_, ms) => ms.iter().any(contains_map_or_send),
        MemoryValue::Types(_, vs) => vs.iter().any(contains_map_or_send),
        _ => false,
    }
}

impl MemoryValue {
    pub fn int(v: i64) -> MemoryValue {
        MemoryValue::Int(Some(IntVal::int(v)))
    }

    pub fn uint(v: u64) -> MemoryValue {
        MemoryValue::Int(Some(IntVal::uint(v)))
    }

    pub fn constructor_name(&self) -> &'static str {
        match self {
            MemoryValue::Undef => "Undef",
            MemoryValue::Int(_) => "Int",
            MemoryValue::Bool(_) => "Bool",
            MemoryValue::Byte(_) => "Byte",
            MemoryValue::Float(_) => "Float",
            MemoryValue::String(_) => "String",
            MemoryValue::Ptr(..) => "Ptr",
            MemoryValue::Stmt(_) => "Stmt",
            MemoryValue::Str(..) => "Str",
            MemoryValue::StrType(..) => "StrType",
            MemoryValue::Cid { .. } => "Cid",
            MemoryValue::Map(..) => "Map",
            MemoryValue::Types(..) => "Types",
            MemoryValue::SendRe(_) => "SendRe",
            MemoryValue::Array(..) => "Array",
        }
    }
}

/// The correspondence between a normal-form type and a payload constructor.
pub fn corresponds(t: &LolisaType, v: &MemoryValue) -> bool {
    use LolisaType as T;
    use MemoryValue as M;
    match (t, v) {
        (T::Tundef, M::Undef) => true,
        (T::Tint(s, sz), M::Int(i)) => i.as_ref().is_none_or(|i| i.sign == *s && i.size == *sz),
        (T::Tbool, M::Bool(_)) => true,
        (T::Tfloat, M::Float(_)) => true,
        (T::Tstring, M::String(_)) => true,
        (T::Tbytes(b), M::Byte(x)) => x.as_ref().is_none_or(|(b2, _)| b2 == b),
        (T::Tstruct(tag), M::Str(tag2, _)) => tag == tag2,
        (T::Tstruct(tag), M::StrType(tag2, _)) => tag == tag2,
        (T::Tvid(_), M::Ptr(RefKind::Vvid, _)) => true,
        (T::Tpid(_), M::Ptr(RefKind::Vpid, _)) => true,
        (T::Tfid(_), M::Ptr(RefKind::Vfid, _)) => true,
        (T::Tfid(_), M::Stmt(_)) => true,
        (T::Tcid(_), M::Ptr(RefKind::Vcid, _)) => true,
        (T::Tcid(_), M::Cid { .. }) => true,
        (T::Tstt | T::Tmodi, M::Stmt(_)) => true,
        (T::Tarray(..), M::Array(..)) => true,
        (T::Tmap(..), M::Map(..)) => true,
        _ => false,
    }
}

/// Block-level compatibility: like `corresponds`, but also lets a typed
/// return slot hold its `Types` placeholder.
pub fn block_compatible(t: &LolisaType, v: &MemoryValue) -> bool {
    match v {
        MemoryValue::Types(ts, vs) => ts.len() == vs.len(),
        MemoryValue::SendRe(_) => true,
        _ => corresponds(t, v),
    }
}

/// The absent value of a scalar type. Aggregates need memory to build and are
/// handled by `init_var`.
pub fn initial_scalar(t: &LolisaType) -> MemoryValue {
    use LolisaType as T;
    match t {
        T::Tundef | T::Tstt | T::Tmodi => MemoryValue::Undef,
        T::Tint(..) => MemoryValue::Int(None),
        T::Tbool => MemoryValue::Bool(None),
        T::Tstring => MemoryValue::String(None),
        T::Tfloat => MemoryValue::Float(None),
        T::Tbytes(_) => MemoryValue::Byte(None),
        T::Tvid(a) => MemoryValue::Ptr(RefKind::Vvid, *a),
        T::Tpid(a) => MemoryValue::Ptr(RefKind::Vpid, *a),
        T::Tfid(a) => MemoryValue::Ptr(RefKind::Vfid, *a),
        T::Tcid(a) => MemoryValue::Ptr(RefKind::Vcid, *a),
        T::Tstruct(tag) => MemoryValue::Str(*tag, Vec::new()),
        T::Tarray(..) => MemoryValue::Array(LabelAddress::NIL, 0),
        T::Tmap(..) => MemoryValue::Map(LabelAddress::NIL, None),
    }
}

/// Maps a normal-form value to its payload.
pub fn value_to_memory(v: &Value) -> Result<MemoryValue, Fault> {
    Ok(match v {
        Value::Vundef => MemoryValue::Undef,
        Value::Vint(i) => MemoryValue::Int(Some(IntVal::checked(i.sign, i.size, i.v.clone())?)),
        Value::Vbool(b) => MemoryValue::Bool(Some(*b)),
        Value::Vfloat(f) => MemoryValue::Float(Some(*f)),
        Value::Vbyte(b, bytes) => {
            if bytes.len() != b.len() {
                return Err(Fault::new("value-cons", "byte literal length differs from its size"));
            }
            MemoryValue::Byte(Some((*b, bytes.clone())))
        }
        Value::Vstring(s) => MemoryValue::String(Some(s.clone())),
        Value::Vref(r) => MemoryValue::Ptr(r.kind, Some(r.addr)),
        _ => return Err(Fault::new("value-cons", "value is not in normal form")),
    })
}

/// Evaluates an array index to a natural number.
pub fn eval_array_index(sigma: &MemoryState, env: &Env, idx: &ArrayIndex) -> Outcome<u64> {
    array_index(sigma, env, idx).into()
}

fn array_index(sigma: &MemoryState, env: &Env, idx: &ArrayIndex) -> Result<u64, Fault> {
    let mv = match idx {
        ArrayIndex::ConstId(n) => return Ok(*n),
        ArrayIndex::VarId(a) => read_any(sigma, env, *a)?,
        ArrayIndex::StrId(a, mems) => {
            let base = read_any(sigma, env, *a)?;
            member_path(sigma, &base, mems)?
        }
        ArrayIndex::MapId(a, inner) => {
            let key = array_index(sigma, env, &inner.embed())?;
            let head = read_any(sigma, env, *a)?;
            let k = MapMemoryValue::new(int_like(&head, key)?)?;
            let (_, v) = find_bucket(sigma, &head, &k)?;
            v
        }
        ArrayIndex::ArrayId(a, inner) => {
            let i = array_index(sigma, env, inner)?;
            let addr = element_address(sigma, *a, i)?;
            read_dir(sigma, addr).into_result("index")?
        }
    };
    as_natural(&mv)
}

fn int_like(head: &MemoryValue, n: u64) -> Result<MemoryValue, Fault> {
    // Dynamic arrays use signed 64-bit keys.
    match head {
        MemoryValue::Map(..) => Ok(MemoryValue::Int(Some(IntVal::int(
            i64::try_from(n).map_err(|_| Fault::new("index", "key out of range"))?,
        )))),
        _ => Err(Fault::new("index", "index base is not a mapping")),
    }
}

fn as_natural(mv: &MemoryValue) -> Result<u64, Fault> {
    match mv {
        MemoryValue::Int(Some(i)) if !i.v.is_negative() => {
            i.v.to_u64().ok_or_else(|| Fault::new("index", "index too large"))
        }
        MemoryValue::Int(Some(_)) => Err(Fault::new("index", "negative index")),
        MemoryValue::Int(None) => Err(Fault::new("index", "uninitialised index")),
        other => Err(Fault::new(
            "index",
            format!("index evaluates to {}", other.constructor_name()),
        )),
    }
}

/// Reads a block with allocation, occupancy and access checks but accepting
/// whatever payload it holds.
fn read_any(sigma: &MemoryState, env: &Env, a: LabelAddress) -> Result<MemoryValue, Fault> {
    let ty = sigma
        .block(a)
        .map(|b| b.info.ty.clone())
        .ok_or_else(|| Fault::new("read", format!("{a} is not allocated")))?;
    read_chck(sigma, env, &ty, a).into_result("read")
}

/// Address of element `i` of the array whose descriptor lives at `base`.
pub fn element_address(sigma: &MemoryState, base: LabelAddress, i: u64) -> Result<LabelAddress, Fault> {
    crate::memory::address_offset(sigma, crate::memory::OffsetOp::Plus, i, base).into_result("array-offset")
}

/// Payload found at an address, looking through a mapping bucket to its value.
pub fn payload_at(sigma: &MemoryState, a: LabelAddress) -> Result<MemoryValue, Fault> {
    match read_dir(sigma, a).into_result("read")? {
        MemoryValue::Map(_, Some(pair)) => Ok(pair.1.clone()),
        other => Ok(other),
    }
}

/// Walks a member path inside a struct payload.
pub fn member_path(sigma: &MemoryState, base: &MemoryValue, mems: &[String]) -> Result<MemoryValue, Fault> {
    let mut cur = base.clone();
    for m in mems {
        cur = member(sigma, &cur, m)?.1;
    }
    Ok(cur)
}

/// Looks up one member: returns its declared type and payload.
pub fn member(sigma: &MemoryState, v: &MemoryValue, name: &str) -> Result<(LolisaType, MemoryValue), Fault> {
    let MemoryValue::Str(tag, fields) = v else {
        return Err(Fault::new("field", format!("member {name} of a non-struct value")));
    };
    let layout = struct_layout(sigma, *tag)?;
    // `transfer` is another spelling of `send`.
    let pos = layout
        .iter()
        .position(|(_, n)| n == name)
        .or_else(|| {
            (name == "transfer")
                .then(|| layout.iter().position(|(_, n)| n == "send"))
                .flatten()
        })
        .ok_or_else(|| Fault::new("field", format!("no member {name} in {tag}")))?;
    let ty = layout[pos].0.clone();
    let val = fields
        .get(pos)
        .cloned()
        .ok_or_else(|| Fault::new("field", format!("member {name} missing from instance")))?;
    Ok((ty, val))
}

pub fn struct_layout(sigma: &MemoryState, tag: LabelAddress) -> Result<Vec<(LolisaType, String)>, Fault> {
    match sigma.block(tag).map(|b| &b.value) {
        Some(MemoryValue::StrType(_, mems)) => Ok(mems.clone()),
        _ => Err(Fault::new("field", format!("no struct layout at {tag}"))),
    }
}

/// Walks a mapping chain from its head payload; returns the bucket address
/// and the stored value.
pub fn find_bucket(
    sigma: &MemoryState,
    head: &MemoryValue,
    key: &MapMemoryValue,
) -> Result<(LabelAddress, MemoryValue), Fault> {
    bucket_lookup(sigma, head, key)?.ok_or_else(|| Fault::new("map-lookup", "key not present"))
}

/// Like `find_bucket` but reports an absent key as `None`.
pub fn bucket_lookup(
    sigma: &MemoryState,
    head: &MemoryValue,
    key: &MapMemoryValue,
) -> Result<Option<(LabelAddress, MemoryValue)>, Fault> {
    let MemoryValue::Map(first, None) = head else {
        return Err(Fault::new("map-lookup", "not a mapping head"));
    };
    let mut at = *first;
    let mut steps = 0usize;
    while at != LabelAddress::NIL {
        let bucket = read_dir(sigma, at).into_result("map-lookup")?;
        let MemoryValue::Map(next, Some(pair)) = bucket else {
            return Err(Fault::new("map-lookup", format!("broken chain at {at}")));
        };
        if pair.0 == *key {
            return Ok(Some((at, pair.1.clone())));
        }
        at = next;
        steps += 1;
        if steps > sigma.len() {
            return Err(Fault::new("map-lookup", "cyclic chain"));
        }
    }
    Ok(None)
}

/// Number of buckets in a mapping chain.
pub fn chain_length(sigma: &MemoryState, head: &MemoryValue) -> Result<u64, Fault> {
    let MemoryValue::Map(first, None) = head else {
        return Err(Fault::new("length", "not a mapping head"));
    };
    let mut at = *first;
    let mut n = 0u64;
    while at != LabelAddress::NIL {
        match read_dir(sigma, at).into_result("length")? {
            MemoryValue::Map(next, Some(_)) => at = next,
            _ => return Err(Fault::new("length", "broken chain")),
        }
        n += 1;
        if n as usize > sigma.len() {
            return Err(Fault::new("length", "cyclic chain"));
        }
    }
    Ok(n)
}

/// Locates the bucket whose key equals `key` in the mapping `name`.
pub fn map_addr(
    sigma: &MemoryState,
    env: &Env,
    key_ty: &LolisaMapType,
    name: LabelAddress,
    head: &MemoryValue,
    key: &MapMemoryValue,
) -> Outcome<LabelAddress> {
    if !corresponds(&final_type(&key_ty.embed()), key.get()) {
        return Outcome::error("map-key", "key does not match the mapping key type");
    }
    let _ = (env, name);
    find_bucket(sigma, head, key).map(|(a, _)| a).into()
}

/// Value stored in a mapping bucket.
pub fn map_get(mv: &MemoryValue) -> Outcome<MemoryValue> {
    match mv {
        MemoryValue::Map(_, Some(pair)) => Outcome::Some(pair.1.clone()),
        _ => Outcome::error("map-get", "payload is not a mapping bucket"),
    }
}

/// Where a struct member lives: a base block and the member path inside it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldOwner {
    pub base: LabelAddress,
    pub path: Vec<String>,
}

/// Result of resolving a field access.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldValue {
    Plain(MemoryValue),
    /// A member function pointer bundled with its receiver and arguments.
    Method {
        fun: Option<LabelAddress>,
        receiver: FieldOwner,
        args: Option<Vec<FieldArg>>,
    },
}

/// Walks `path` from the struct instance at `a_init` whose layout is at
/// `a_type`. Returns the owner of the final member and its payload.
pub fn mems_find(
    sigma: &MemoryState,
    path: &[String],
    a_init: LabelAddress,
    a_type: LabelAddress,
) -> Outcome<(FieldOwner, MemoryValue)> {
    mems_find_r(sigma, path, a_init, a_type).into()
}

fn mems_find_r(
    sigma: &MemoryState,
    path: &[String],
    a_init: LabelAddress,
    a_type: LabelAddress,
) -> Result<(FieldOwner, MemoryValue), Fault> {
    if path.is_empty() {
        return Err(Fault::new("field", "empty member path"));
    }
    let base = payload_at(sigma, a_init)?;
    match &base {
        MemoryValue::Str(tag, _) if *tag == a_type => {}
        MemoryValue::Str(tag, _) => {
            return Err(Fault::new(
                "field",
                format!("instance has type {tag}, expected {a_type}"),
            ))
        }
        other => {
            return Err(Fault::new(
                "field",
                format!("{a_init} holds {}, not a struct", other.constructor_name()),
            ))
        }
    }
    let mut cur = base;
    for (i, m) in path.iter().enumerate() {
        let (ty, v) = member(sigma, &cur, m)?;
        let last = i + 1 == path.len();
        if !last && matches!(ty, LolisaType::Tfid(_)) {
            return Err(Fault::new("field", "a member path cannot pass through a function"));
        }
        cur = v;
    }
    let owner = FieldOwner {
        base: a_init,
        path: path[..path.len() - 1].to_vec(),
    };
    Ok((owner, cur))
}

/// Evaluates a value against memory. Never changes `sigma`.
pub fn eval_value(sigma: &MemoryState, env: &Env, fenv: &Env, v: &Value) -> Outcome<MemoryValue> {
    let _ = fenv;
    eval_value_r(sigma, env, v).into()
}

pub(crate) fn eval_value_r(sigma: &MemoryState, env: &Env, v: &Value) -> Result<MemoryValue, Fault> {
    match v {
        Value::Varray { index, elem, name } => eval_array(sigma, env, *name, index, elem),
        Value::Vmap {
            name,
            key,
            key_ty,
            val_ty,
            snd,
        } => eval_map(sigma, env, *name, key, key_ty, val_ty, snd.as_deref()),
        Value::Vstruct(tag, inst) => {
            read_chck(sigma, env, &LolisaType::Tstruct(*tag), *inst).into_result("struct-read")
        }
        Value::Vfield { t1, .. } => match eval_field(sigma, env, v)? {
            // Integer members are read at the annotated width and sign.
            FieldValue::Plain(MemoryValue::Int(Some(i))) => match final_type(t1) {
                LolisaType::Tint(sign, size) => Ok(MemoryValue::Int(Some(IntVal::checked(sign, size, i.v)?))),
                _ => Ok(MemoryValue::Int(Some(i))),
            },
            FieldValue::Plain(mv) => Ok(mv),
            FieldValue::Method { fun, .. } => Ok(MemoryValue::Ptr(RefKind::Vfid, fun)),
        },
        nf => value_to_memory(nf),
    }
}

fn eval_array(
    sigma: &MemoryState,
    env: &Env,
    name: LabelAddress,
    index: &ArrayIndex,
    elem: &LolisaType,
) -> Result<MemoryValue, Fault> {
    let addr = array_slot(sigma, env, name, index)?;
    match elem {
        // The element is itself an array: its type carries the next index.
        LolisaType::Tarray(next, inner) => eval_array(sigma, env, addr, next, inner),
        t => read_chck(sigma, env, t, addr).into_result("array-read"),
    }
}

/// Address of `name[index]` after evaluating the index.
pub fn array_slot(
    sigma: &MemoryState,
    env: &Env,
    name: LabelAddress,
    index: &ArrayIndex,
) -> Result<LabelAddress, Fault> {
    let off = array_index(sigma, env, index)?;
    element_address(sigma, name, off)
}

/// Evaluates a mapping key to a key payload.
pub fn eval_map_key(sigma: &MemoryState, env: &Env, key: &MapKey) -> Result<MapMemoryValue, Fault> {
    let mv = match key {
        MapKey::MconstId(v) => {
            if !is_normal_form(&v.carried_type()) {
                return Err(Fault::new("map-key", "constant key is not in normal form"));
            }
            value_to_memory(v)?
        }
        MapKey::MvarId(a) => read_any(sigma, env, *a)?,
        MapKey::MstrId(a, mems) => {
            let base = read_any(sigma, env, *a)?;
            member_path(sigma, &base, mems)?
        }
        MapKey::MarrayId(a, idx) => {
            let addr = array_slot(sigma, env, *a, &idx.embed())?;
            read_dir(sigma, addr).into_result("map-key")?
        }
        MapKey::MmapId(name, inner) => {
            let k = eval_map_key(sigma, env, inner)?;
            let head = read_any(sigma, env, *name)?;
            find_bucket(sigma, &head, &k)?.1
        }
    };
    if is_absent(&mv) {
        return Err(Fault::new("map-key", "key is uninitialised"));
    }
    MapMemoryValue::new(mv)
}

fn is_absent(mv: &MemoryValue) -> bool {
    matches!(
        mv,
        MemoryValue::Int(None)
            | MemoryValue::Bool(None)
            | MemoryValue::Float(None)
            | MemoryValue::String(None)
            | MemoryValue::Byte(None)
    )
}

fn eval_map(
    sigma: &MemoryState,
    env: &Env,
    name: LabelAddress,
    key: &MapKey,
    key_ty: &LolisaMapType,
    val_ty: &LolisaType,
    snd: Option<&Value>,
) -> Result<MemoryValue, Fault> {
    let k = eval_map_key(sigma, env, key)?;
    let head = read_chck(sigma, env, &LolisaType::map(key_ty.clone(), val_ty.clone()), name).into_result("map-head")?;
    let bucket = map_addr(sigma, env, key_ty, name, &head, &k).into_result("map-lookup")?;
    let stored = map_get(&read_dir(sigma, bucket).into_result("map-lookup")?).into_result("map-get")?;
    match (snd, &stored) {
        (
            Some(Value::Vmap {
                key: k2,
                key_ty: kt2,
                val_ty: vt2,
                snd: s2,
                ..
            }),
            MemoryValue::Map(inner, None),
        ) => {
            // Next dimension: the stored head names the inner mapping.
            eval_map(
                sigma,
                env,
                *inner_head(sigma, *inner, stored.clone())?,
                k2,
                kt2,
                vt2,
                s2.as_deref(),
            )
        }
        (Some(_), _) => Err(Fault::new("map-dimension", "next dimension is not a mapping")),
        (None, mv) if corresponds(&final_type(val_ty), mv) => Ok(mv.clone()),
        (None, mv) => Err(Fault::new(
            "map-value",
            format!(
                "stored {} does not match {:?}",
                mv.constructor_name(),
                final_type(val_ty)
            ),
        )),
    }
}

// Inner mapping heads are stored inline in the bucket as `Map(head, None)`
// where `head` is the address of a standalone head block.
fn inner_head(sigma: &MemoryState, head: LabelAddress, _stored: MemoryValue) -> Result<Box<LabelAddress>, Fault> {
    match sigma.block(head) {
        Some(b) if matches!(b.value, MemoryValue::Map(_, None)) => Ok(Box::new(head)),
        _ => Err(Fault::new("map-dimension", format!("no inner mapping head at {head}"))),
    }
}

/// Resolves a field access to its payload or a bundled method.
pub fn eval_field(sigma: &MemoryState, env: &Env, v: &Value) -> Result<FieldValue, Fault> {
    let Value::Vfield { head, mems, opars, .. } = v else {
        return Err(Fault::new("field", "not a field access"));
    };
    let (a_init, a_type) = resolve_head(sigma, env, head)?;
    if let FieldHead::Fstruct(..) = head {
        // The instance must be readable from the current scope.
        read_chck(sigma, env, &LolisaType::Tstruct(a_type), a_init).into_result("field")?;
    }
    let (owner, mv) = mems_find_r(sigma, mems, a_init, a_type)?;
    match mv {
        MemoryValue::Ptr(RefKind::Vfid, fun) => Ok(FieldValue::Method {
            fun,
            receiver: owner,
            args: opars.clone(),
        }),
        other => Ok(FieldValue::Plain(other)),
    }
}

/// Resolves a field head to (instance address, struct type address).
fn resolve_head(sigma: &MemoryState, env: &Env, head: &FieldHead) -> Result<(LabelAddress, LabelAddress), Fault> {
    match head {
        FieldHead::Fstruct(tag, inst) => Ok((*inst, *tag)),
        FieldHead::Fmap(name, key, _) => {
            let k = eval_map_key(sigma, env, key)?;
            let head = read_any(sigma, env, *name)?;
            let (bucket, v) = find_bucket(sigma, &head, &k)?;
            match v {
                MemoryValue::Str(tag, _) => Ok((bucket, tag)),
                _ => Err(Fault::new("field", "mapping value is not a struct")),
            }
        }
        FieldHead::Farray(name, idx) => {
            let addr = array_slot(sigma, env, *name, idx)?;
            match read_dir(sigma, addr).into_result("field")? {
                MemoryValue::Str(tag, _) => Ok((addr, tag)),
                _ => Err(Fault::new("field", "array element is not a struct")),
            }
        }
    }
}
