// SPDX-License-Identifier: Apache-2.0

//! The type-annotation language: value types, mapping-key types, array indices
//! and label addresses.

use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Signedness {
    Signed,
    Unsigned,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IntSize {
    I8,
    I16,
    I32,
    I64,
    I128,
    I256,
}

impl IntSize {
    pub const ALL: [IntSize; 6] = [
        IntSize::I8,
        IntSize::I16,
        IntSize::I32,
        IntSize::I64,
        IntSize::I128,
        IntSize::I256,
    ];

    pub fn bits(self) -> u32 {
        match self {
            IntSize::I8 => 8,
            IntSize::I16 => 16,
            IntSize::I32 => 32,
            IntSize::I64 => 64,
            IntSize::I128 => 128,
            IntSize::I256 => 256,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IntSize::I8 => "I8",
            IntSize::I16 => "I16",
            IntSize::I32 => "I32",
            IntSize::I64 => "I64",
            IntSize::I128 => "I128",
            IntSize::I256 => "I256",
        }
    }

    pub fn from_name(s: &str) -> Option<IntSize> {
        IntSize::ALL.into_iter().find(|sz| sz.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ByteSize {
    B4,
    B8,
    B16,
    B32,
}

impl ByteSize {
    pub const ALL: [ByteSize; 4] = [ByteSize::B4, ByteSize::B8, ByteSize::B16, ByteSize::B32];

    pub fn len(self) -> usize {
        match self {
            ByteSize::B4 => 4,
            ByteSize::B8 => 8,
            ByteSize::B16 => 16,
            ByteSize::B32 => 32,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ByteSize::B4 => "B4",
            ByteSize::B8 => "B8",
            ByteSize::B16 => "B16",
            ByteSize::B32 => "B32",
        }
    }

    pub fn from_name(s: &str) -> Option<ByteSize> {
        ByteSize::ALL.into_iter().find(|b| b.name() == s)
    }
}

/// Opaque 32-bit memory address. The low range up to `USER_BASE` is
/// reserved for the built-in blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelAddress(pub u32);

impl LabelAddress {
    pub const INIT: LabelAddress = LabelAddress(0);
    pub const SEND: LabelAddress = LabelAddress(1);
    pub const SEND_RE: LabelAddress = LabelAddress(2);
    pub const CALL: LabelAddress = LabelAddress(3);
    pub const MSG: LabelAddress = LabelAddress(4);
    pub const ADDRESS: LabelAddress = LabelAddress(5);
    pub const BLOCK: LabelAddress = LabelAddress(6);

    /// First address handed out to program identifiers.
    pub const USER_BASE: u32 = 0x10;
    /// First address of the region used for array elements and mapping buckets.
    pub const DYNAMIC_BASE: u32 = 0x8000_0000;
    /// Chain terminator for mapping buckets; never allocated.
    pub const NIL: LabelAddress = LabelAddress(u32::MAX);

    pub const SPECIAL: [LabelAddress; 7] = [
        LabelAddress::INIT,
        LabelAddress::SEND,
        LabelAddress::SEND_RE,
        LabelAddress::CALL,
        LabelAddress::MSG,
        LabelAddress::ADDRESS,
        LabelAddress::BLOCK,
    ];

    pub fn user(n: u32) -> LabelAddress {
        LabelAddress(LabelAddress::USER_BASE + n)
    }

    pub fn is_reserved(self) -> bool {
        self.0 < LabelAddress::USER_BASE
    }

    pub fn special_name(self) -> Option<&'static str> {
        Some(match self {
            LabelAddress::INIT => "init",
            LabelAddress::SEND => "send",
            LabelAddress::SEND_RE => "send_re",
            LabelAddress::CALL => "call",
            LabelAddress::MSG => "msg",
            LabelAddress::ADDRESS => "address",
            LabelAddress::BLOCK => "block",
            _ => return None,
        })
    }

    pub fn from_special_name(s: &str) -> Option<LabelAddress> {
        LabelAddress::SPECIAL.into_iter().find(|a| a.special_name() == Some(s))
    }

    /// Successor token, used for function return slots.
    pub fn succ(self) -> LabelAddress {
        LabelAddress(self.0.wrapping_add(1))
    }
}

impl fmt::Display for LabelAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.special_name() {
            Some(name) => write!(f, "_0x{name}"),
            None => write!(f, "_0x{:08x}", self.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArrayIndex {
    ConstId(u64),
    VarId(LabelAddress),
    StrId(LabelAddress, Vec<String>),
    MapId(LabelAddress, Box<MapArrayIndex>),
    ArrayId(LabelAddress, Box<ArrayIndex>),
}

/// Array index usable inside mapping-key types; it has no mapping constructor.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MapArrayIndex {
    ConstId(u64),
    VarId(LabelAddress),
    StrId(LabelAddress, Vec<String>),
    ArrayId(LabelAddress, Box<MapArrayIndex>),
}

impl MapArrayIndex {
    pub fn embed(&self) -> ArrayIndex {
        match self {
            MapArrayIndex::ConstId(n) => ArrayIndex::ConstId(*n),
            MapArrayIndex::VarId(a) => ArrayIndex::VarId(*a),
            MapArrayIndex::StrId(a, m) => ArrayIndex::StrId(*a, m.clone()),
            MapArrayIndex::ArrayId(a, i) => ArrayIndex::ArrayId(*a, Box::new(i.embed())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LolisaType {
    Tundef,
    Tint(Signedness, IntSize),
    Tbool,
    Tstring,
    Tfloat,
    Tbytes(ByteSize),
    Tstt,
    Tmodi,
    Tstruct(LabelAddress),
    Tvid(Option<LabelAddress>),
    Tpid(Option<LabelAddress>),
    Tfid(Option<LabelAddress>),
    Tcid(Option<LabelAddress>),
    Tarray(ArrayIndex, Box<LolisaType>),
    Tmap(LolisaMapType, Box<LolisaType>),
}

/// Key types of mappings. Mirrors `LolisaType` without mapping, statement
/// and modifier constructors.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LolisaMapType {
    Iundef,
    Iint(Signedness, IntSize),
    Ibool,
    Istring,
    Ifloat,
    Ibytes(ByteSize),
    Istruct(LabelAddress),
    Ivid(Option<LabelAddress>),
    Ipid(Option<LabelAddress>),
    Ifid(Option<LabelAddress>),
    Icid(Option<LabelAddress>),
    Iarray(MapArrayIndex, Box<LolisaMapType>),
}

impl LolisaType {
    /// Signed 64-bit integer.
    pub fn int() -> LolisaType {
        LolisaType::Tint(Signedness::Signed, IntSize::I64)
    }

    /// Unsigned 64-bit integer.
    pub fn uint() -> LolisaType {
        LolisaType::Tint(Signedness::Unsigned, IntSize::I64)
    }

    pub fn address() -> LolisaType {
        LolisaType::Tstruct(LabelAddress::ADDRESS)
    }

    /// Dynamic arrays are mappings keyed by signed 64-bit integers.
    pub fn dynamic_array(elem: LolisaType) -> LolisaType {
        LolisaType::Tmap(LolisaMapType::Iint(Signedness::Signed, IntSize::I64), Box::new(elem))
    }

    pub fn array(index: ArrayIndex, elem: LolisaType) -> LolisaType {
        LolisaType::Tarray(index, Box::new(elem))
    }

    pub fn map(key: LolisaMapType, val: LolisaType) -> LolisaType {
        LolisaType::Tmap(key, Box::new(val))
    }

    pub fn is_int(&self) -> bool {
        matches!(self, LolisaType::Tint(..))
    }
}

impl LolisaMapType {
    pub fn address() -> LolisaMapType {
        LolisaMapType::Istruct(LabelAddress::ADDRESS)
    }

    pub fn int() -> LolisaMapType {
        LolisaMapType::Iint(Signedness::Signed, IntSize::I64)
    }

    pub fn uint() -> LolisaMapType {
        LolisaMapType::Iint(Signedness::Unsigned, IntSize::I64)
    }

    /// Constructor renaming into the value-type universe.
    pub fn embed(&self) -> LolisaType {
        use LolisaMapType as M;
        use LolisaType as T;
        match self {
            M::Iundef => T::Tundef,
            M::Iint(s, sz) => T::Tint(*s, *sz),
            M::Ibool => T::Tbool,
            M::Istring => T::Tstring,
            M::Ifloat => T::Tfloat,
            M::Ibytes(b) => T::Tbytes(*b),
            M::Istruct(a) => T::Tstruct(*a),
            M::Ivid(a) => T::Tvid(*a),
            M::Ipid(a) => T::Tpid(*a),
            M::Ifid(a) => T::Tfid(*a),
            M::Icid(a) => T::Tcid(*a),
            M::Iarray(i, t) => T::Tarray(i.embed(), Box::new(t.embed())),
        }
    }

    /// Inverse of `embed` where one exists.
    pub fn from_type(t: &LolisaType) -> Option<LolisaMapType> {
        use LolisaMapType as M;
        use LolisaType as T;
        Some(match t {
            T::Tundef => M::Iundef,
            T::Tint(s, sz) => M::Iint(*s, *sz),
            T::Tbool => M::Ibool,
            T::Tstring => M::Istring,
            T::Tfloat => M::Ifloat,
            T::Tbytes(b) => M::Ibytes(*b),
            T::Tstruct(a) => M::Istruct(*a),
            T::Tvid(a) => M::Ivid(*a),
            T::Tpid(a) => M::Ipid(*a),
            T::Tfid(a) => M::Ifid(*a),
            T::Tcid(a) => M::Icid(*a),
            T::Tarray(i, t) => M::Iarray(array_index_to_map(i)?, Box::new(M::from_type(t)?)),
            T::Tmap(..) | T::Tstt | T::Tmodi => return None,
        })
    }
}

fn array_index_to_map(i: &ArrayIndex) -> Option<MapArrayIndex> {
    Some(match i {
        ArrayIndex::ConstId(n) => MapArrayIndex::ConstId(*n),
        ArrayIndex::VarId(a) => MapArrayIndex::VarId(*a),
        ArrayIndex::StrId(a, m) => MapArrayIndex::StrId(*a, m.clone()),
        ArrayIndex::ArrayId(a, i) => MapArrayIndex::ArrayId(*a, Box::new(array_index_to_map(i)?)),
        ArrayIndex::MapId(..) => return None,
    })
}

/// True iff the type is neither an array nor a mapping.
pub fn is_normal_form(t: &LolisaType) -> bool {
    !matches!(t, LolisaType::Tarray(..) | LolisaType::Tmap(..))
}

/// Strips array and mapping wrappers down to the element type.
pub fn final_type(t: &LolisaType) -> LolisaType {
    match t {
        LolisaType::Tarray(_, inner) | LolisaType::Tmap(_, inner) => final_type(inner),
        other => other.clone(),
    }
}

/// Struct layouts known to the checker, keyed by struct tag.
pub type StructContext = std::collections::BTreeMap<LabelAddress, Vec<(LolisaType, String)>>;

/// Well-formedness of a type. Normal forms are always well-formed; array
/// sizes are evaluated against `sigma` and must be positive.
pub fn well_formed_type(
    sigma: &crate::memory::MemoryState,
    structs: &StructContext,
    theta: &BTreeSet<LabelAddress>,
    t: &LolisaType,
) -> bool {
    match t {
        LolisaType::Tarray(idx, inner) => {
            if **inner == LolisaType::Tundef || !well_formed_type(sigma, structs, theta, inner) {
                return false;
            }
            let env = crate::env::Env::global(0);
            matches!(
                crate::value::eval_array_index(sigma, &env, idx),
                crate::outcome::Outcome::Some(n) if n > 0
            )
        }
        LolisaType::Tmap(k, v) => {
            well_formed_map_type(sigma, structs, theta, k) && well_formed_type(sigma, structs, theta, v)
        }
        _ => true,
    }
}

fn well_formed_map_type(
    sigma: &crate::memory::MemoryState,
    structs: &StructContext,
    theta: &BTreeSet<LabelAddress>,
    t: &LolisaMapType,
) -> bool {
    match t {
        LolisaMapType::Iarray(idx, inner) => {
            **inner != LolisaMapType::Iundef
                && well_formed_map_type(sigma, structs, theta, inner)
                && well_formed_type(
                    sigma,
                    structs,
                    theta,
                    &LolisaType::Tarray(idx.embed(), Box::new(LolisaType::Tbool)),
                )
        }
        _ => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_forms() {
        assert!(is_normal_form(&LolisaType::Tbool));
        assert!(!is_normal_form(&LolisaType::array(
            ArrayIndex::ConstId(10),
            LolisaType::Tbool
        )));
        assert!(!is_normal_form(&LolisaType::map(
            LolisaMapType::Ibool,
            LolisaType::Tbool
        )));
    }

    #[test]
    fn final_type_strips_nested_wrappers() {
        let t = LolisaType::map(
            LolisaMapType::int(),
            LolisaType::array(ArrayIndex::ConstId(2), LolisaType::int()),
        );
        assert_eq!(final_type(&t), LolisaType::int());
        assert_eq!(
            final_type(&LolisaType::array(ArrayIndex::ConstId(10), LolisaType::Tbool)),
            LolisaType::Tbool
        );
        assert_eq!(final_type(&LolisaType::Tbool), LolisaType::Tbool);
    }

    #[test]
    fn address_rendering() {
        assert_eq!(LabelAddress::MSG.to_string(), "_0xmsg");
        assert_eq!(LabelAddress::user(0).to_string(), "_0x00000010");
        assert!(LabelAddress::BLOCK < LabelAddress::user(0));
        assert_eq!(LabelAddress::from_special_name("send_re"), Some(LabelAddress::SEND_RE));
    }

    #[test]
    fn map_type_embedding_round_trips() {
        let m = LolisaMapType::Iarray(MapArrayIndex::ConstId(3), Box::new(LolisaMapType::Ibool));
        assert_eq!(LolisaMapType::from_type(&m.embed()), Some(m));
        assert_eq!(LolisaMapType::from_type(&LolisaType::Tstt), None);
    }
}
