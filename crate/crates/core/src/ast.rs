// SPDX-License-Identifier: Apache-2.0

//! Expression and statement trees, plus the operator catalog.

use crate::types::{ByteSize, IntSize, LabelAddress, LolisaType, Signedness};
use crate::value::{FieldArg, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Access {
    Public,
    Protected,
    Private,
}

impl Access {
    pub fn name(self) -> &'static str {
        match self {
            Access::Public => "public",
            Access::Protected => "protected",
            Access::Private => "private",
        }
    }

    pub fn from_name(s: &str) -> Option<Access> {
        match s {
            "public" => Some(Access::Public),
            "protected" => Some(Access::Protected),
            "private" => Some(Access::Private),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinClass {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Shl,
    Shr,
    BitAnd,
    BitOr,
    BitXor,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinClass {
    pub const ALL: [BinClass; 18] = [
        BinClass::Add,
        BinClass::Sub,
        BinClass::Mul,
        BinClass::Div,
        BinClass::Mod,
        BinClass::Shl,
        BinClass::Shr,
        BinClass::BitAnd,
        BinClass::BitOr,
        BinClass::BitXor,
        BinClass::Lt,
        BinClass::Le,
        BinClass::Gt,
        BinClass::Ge,
        BinClass::Eq,
        BinClass::Ne,
        BinClass::And,
        BinClass::Or,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinClass::Add => "+",
            BinClass::Sub => "-",
            BinClass::Mul => "*",
            BinClass::Div => "/",
            BinClass::Mod => "%",
            BinClass::Shl => "<<",
            BinClass::Shr => ">>",
            BinClass::BitAnd => "&",
            BinClass::BitOr => "|",
            BinClass::BitXor => "^",
            BinClass::Lt => "<",
            BinClass::Le => "<=",
            BinClass::Gt => ">",
            BinClass::Ge => ">=",
            BinClass::Eq => "==",
            BinClass::Ne => "!=",
            BinClass::And => "&&",
            BinClass::Or => "||",
        }
    }

    pub fn from_symbol(s: &str) -> Option<BinClass> {
        BinClass::ALL.into_iter().find(|c| c.symbol() == s)
    }

    pub fn is_relational(self) -> bool {
        matches!(
            self,
            BinClass::Lt | BinClass::Le | BinClass::Gt | BinClass::Ge | BinClass::Eq | BinClass::Ne
        )
    }

    /// Binding strength for infix chains; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinClass::Or => 1,
            BinClass::And => 2,
            BinClass::Eq | BinClass::Ne => 3,
            BinClass::Lt | BinClass::Le | BinClass::Gt | BinClass::Ge => 4,
            BinClass::BitOr => 5,
            BinClass::BitXor => 6,
            BinClass::BitAnd => 7,
            BinClass::Shl | BinClass::Shr => 8,
            BinClass::Add | BinClass::Sub => 9,
            BinClass::Mul | BinClass::Div | BinClass::Mod => 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinOp {
    pub class: BinClass,
    pub in_ty: LolisaType,
    pub out_ty: LolisaType,
}

impl BinOp {
    /// Catalog lookup by symbol and operand type.
    pub fn new(class: BinClass, in_ty: LolisaType) -> Option<BinOp> {
        bin_catalog()
            .into_iter()
            .find(|op| op.class == class && op.in_ty == in_ty)
    }

    /// Builds an operator outside the catalog. The checker rejects these.
    pub fn raw(class: BinClass, in_ty: LolisaType, out_ty: LolisaType) -> BinOp {
        BinOp { class, in_ty, out_ty }
    }
}

fn int_types() -> Vec<LolisaType> {
    let mut v = Vec::new();
    for sign in [Signedness::Signed, Signedness::Unsigned] {
        for size in IntSize::ALL {
            v.push(LolisaType::Tint(sign, size));
        }
    }
    v
}

/// Every concrete binary operator instance.
pub fn bin_catalog() -> Vec<BinOp> {
    use BinClass::*;
    let mut ops = Vec::new();
    let mut add = |classes: &[BinClass], t: &LolisaType| {
        for c in classes {
            let out = if c.is_relational() {
                LolisaType::Tbool
            } else {
                t.clone()
            };
            ops.push(BinOp {
                class: *c,
                in_ty: t.clone(),
                out_ty: out,
            });
        }
    };
    for t in int_types() {
        add(
            &[
                Add, Sub, Mul, Div, Mod, Shl, Shr, BitAnd, BitOr, BitXor, Lt, Le, Gt, Ge, Eq, Ne,
            ],
            &t,
        );
    }
    add(&[Add, Sub, Mul, Div, Lt, Le, Gt, Ge, Eq, Ne], &LolisaType::Tfloat);
    add(&[And, Or, Eq, Ne], &LolisaType::Tbool);
    add(&[Eq, Ne], &LolisaType::Tstring);
    for b in ByteSize::ALL {
        add(&[BitAnd, BitOr, BitXor, Eq, Ne], &LolisaType::Tbytes(b));
    }
    add(&[Eq, Ne], &LolisaType::address());
    ops
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum UnClass {
    Neg,
    BitNot,
    Not,
    Cast(LolisaType),
}

impl UnClass {
    pub fn symbol(&self) -> &'static str {
        match self {
            UnClass::Neg => "-",
            UnClass::BitNot => "~",
            UnClass::Not => "!",
            UnClass::Cast(_) => "cast",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UnOp {
    pub class: UnClass,
    pub in_ty: LolisaType,
    pub out_ty: LolisaType,
}

impl UnOp {
    pub fn new(class: UnClass, in_ty: LolisaType) -> Option<UnOp> {
        let ok = match &class {
            UnClass::Neg => in_ty.is_int() || in_ty == LolisaType::Tfloat,
            UnClass::BitNot => in_ty.is_int() || matches!(in_ty, LolisaType::Tbytes(_)),
            UnClass::Not => in_ty == LolisaType::Tbool,
            UnClass::Cast(target) => cast_allowed(&in_ty, target),
        };
        if !ok {
            return None;
        }
        let out_ty = match &class {
            UnClass::Cast(target) => target.clone(),
            _ => in_ty.clone(),
        };
        Some(UnOp { class, in_ty, out_ty })
    }

    pub fn raw(class: UnClass, in_ty: LolisaType, out_ty: LolisaType) -> UnOp {
        UnOp { class, in_ty, out_ty }
    }
}

pub fn cast_allowed(from: &LolisaType, to: &LolisaType) -> bool {
    use LolisaType::{Tbytes, Tint};
    matches!(
        (from, to),
        (Tint(..), Tint(..)) | (Tint(..), Tbytes(_)) | (Tbytes(_), Tint(..))
    ) || (from == to && crate::types::is_normal_form(from))
}

/// Every unary operator instance, casts included.
pub fn un_catalog() -> Vec<UnOp> {
    let mut scalars = int_types();
    scalars.push(LolisaType::Tfloat);
    scalars.push(LolisaType::Tbool);
    for b in ByteSize::ALL {
        scalars.push(LolisaType::Tbytes(b));
    }
    let mut ops = Vec::new();
    for t in &scalars {
        for c in [UnClass::Neg, UnClass::BitNot, UnClass::Not] {
            ops.extend(UnOp::new(c, t.clone()));
        }
        for target in &scalars {
            ops.extend(UnOp::new(UnClass::Cast(target.clone()), t.clone()));
        }
    }
    ops
}

/// An expression with its current (`t0`) and final (`t1`) type indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub t0: LolisaType,
    pub t1: LolisaType,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Econst(Value),
    Estruct(LabelAddress, Vec<Expr>),
    Emodifier(Box<Expr>, Vec<FieldArg>),
    Ebop(BinOp, Box<Expr>, Box<Expr>),
    Euop(UnOp, Box<Expr>),
    /// The declared type is `t1`.
    Evar(Option<LabelAddress>),
    Epar(Option<LabelAddress>),
    Efun(Option<LabelAddress>),
    Econ(Option<LabelAddress>),
}

impl Expr {
    pub fn new(kind: ExprKind, t0: LolisaType, t1: LolisaType) -> Expr {
        Expr { kind, t0, t1 }
    }

    pub fn constant(v: Value) -> Expr {
        let t = crate::types::final_type(&v.carried_type());
        Expr::new(ExprKind::Econst(v), t.clone(), t)
    }

    pub fn var(a: LabelAddress, t: LolisaType) -> Expr {
        Expr::new(ExprKind::Evar(Some(a)), LolisaType::Tvid(Some(a)), t)
    }

    pub fn par(a: LabelAddress, t: LolisaType) -> Expr {
        Expr::new(ExprKind::Epar(Some(a)), LolisaType::Tpid(Some(a)), t)
    }

    pub fn fun(a: LabelAddress, t: LolisaType) -> Expr {
        Expr::new(ExprKind::Efun(Some(a)), LolisaType::Tfid(Some(a)), t)
    }

    pub fn con(a: LabelAddress) -> Expr {
        let t = LolisaType::Tcid(Some(a));
        Expr::new(ExprKind::Econ(Some(a)), t.clone(), t)
    }

    pub fn estruct(tag: LabelAddress, pars: Vec<Expr>) -> Expr {
        let t = LolisaType::Tstruct(tag);
        Expr::new(ExprKind::Estruct(tag, pars), t.clone(), t)
    }

    pub fn modifier(f: Expr, args: Vec<FieldArg>) -> Expr {
        Expr::new(
            ExprKind::Emodifier(Box::new(f), args),
            LolisaType::Tmodi,
            LolisaType::Tmodi,
        )
    }

    pub fn bop(op: BinOp, l: Expr, r: Expr) -> Expr {
        let t = op.out_ty.clone();
        Expr::new(ExprKind::Ebop(op, Box::new(l), Box::new(r)), t.clone(), t)
    }

    pub fn uop(op: UnOp, e: Expr) -> Expr {
        let t = op.out_ty.clone();
        Expr::new(ExprKind::Euop(op, Box::new(e)), t.clone(), t)
    }

    /// Binary operation with the operator picked from the catalog by the
    /// operands' final types; falls back to an uncatalogued operator.
    pub fn binary(class: BinClass, l: Expr, r: Expr) -> Expr {
        let lt = crate::types::final_type(&l.t1);
        let rt = crate::types::final_type(&r.t1);
        let op = BinOp::new(class, lt.clone())
            .or_else(|| BinOp::new(class, rt.clone()))
            .unwrap_or_else(|| {
                let out = if class.is_relational() {
                    LolisaType::Tbool
                } else {
                    lt.clone()
                };
                BinOp::raw(class, lt, out)
            });
        Expr::bop(op, l, r)
    }

    pub fn unary(class: UnClass, e: Expr) -> Expr {
        let t = crate::types::final_type(&e.t1);
        let op = UnOp::new(class.clone(), t.clone()).unwrap_or_else(|| {
            let out = match &class {
                UnClass::Cast(target) => target.clone(),
                _ => t.clone(),
            };
            UnOp::raw(class, t, out)
        });
        Expr::uop(op, e)
    }

    pub fn address(&self) -> Option<LabelAddress> {
        match self.kind {
            ExprKind::Evar(a) | ExprKind::Epar(a) | ExprKind::Efun(a) | ExprKind::Econ(a) => a,
            _ => None,
        }
    }

    pub fn is_modifier(&self) -> bool {
        matches!(self.kind, ExprKind::Emodifier(..))
    }
}

/// Shared shape of function declarations.
#[derive(Clone, Debug, PartialEq)]
pub struct FunDecl {
    pub access: Option<Access>,
    pub constant: bool,
    pub payable: bool,
    /// An `Efun` whose final type is the return type.
    pub id: Expr,
    pub pars: Vec<Expr>,
    pub modis: Vec<Expr>,
    pub body: Box<Statement>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Statement {
    Var(Option<Access>, Expr),
    Struct(LabelAddress, Vec<(LolisaType, String)>),
    Assignv(Expr, Expr),
    Return(Expr),
    Returns(Vec<Expr>),
    Throw,
    Snil,
    Fstop,
    Break,
    Continue,
    Contract(Expr, Vec<LabelAddress>, Box<Statement>),
    Modifier(Expr, Vec<Expr>, Box<Statement>),
    Fun(Box<FunDecl>),
    Funs(Box<FunDecl>, Vec<LolisaType>),
    FunCall(Expr, Vec<Expr>),
    LoopFor(Box<Statement>, Expr, Box<Statement>, Box<Statement>),
    LoopWhile(Expr, Box<Statement>),
    Seq(Box<Statement>, Box<Statement>),
    If(Expr, Box<Statement>, Box<Statement>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StmtKind {
    Var,
    Struct,
    Assignv,
    Return,
    Returns,
    Throw,
    Snil,
    Fstop,
    Break,
    Continue,
    Contract,
    Modifier,
    Fun,
    Funs,
    FunCall,
    LoopFor,
    LoopWhile,
    Seq,
    If,
}

impl StmtKind {
    pub const ALL: [StmtKind; 19] = [
        StmtKind::Var,
        StmtKind::Struct,
        StmtKind::Assignv,
        StmtKind::Return,
        StmtKind::Returns,
        StmtKind::Throw,
        StmtKind::Snil,
        StmtKind::Fstop,
        StmtKind::Break,
        StmtKind::Continue,
        StmtKind::Contract,
        StmtKind::Modifier,
        StmtKind::Fun,
        StmtKind::Funs,
        StmtKind::FunCall,
        StmtKind::LoopFor,
        StmtKind::LoopWhile,
        StmtKind::Seq,
        StmtKind::If,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StmtKind::Var => "Var",
            StmtKind::Struct => "Struct",
            StmtKind::Assignv => "Assignv",
            StmtKind::Return => "Return",
            StmtKind::Returns => "Returns",
            StmtKind::Throw => "Throw",
            StmtKind::Snil => "Snil",
            StmtKind::Fstop => "Fstop",
            StmtKind::Break => "Break",
            StmtKind::Continue => "Continue",
            StmtKind::Contract => "Contract",
            StmtKind::Modifier => "Modifier",
            StmtKind::Fun => "Fun",
            StmtKind::Funs => "Funs",
            StmtKind::FunCall => "Fun_call",
            StmtKind::LoopFor => "Loop_for",
            StmtKind::LoopWhile => "Loop_while",
            StmtKind::Seq => "Seq",
            StmtKind::If => "If",
        }
    }

    pub fn from_name(s: &str) -> Option<StmtKind> {
        StmtKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl Statement {
    pub fn kind(&self) -> StmtKind {
        match self {
            Statement::Var(..) => StmtKind::Var,
            Statement::Struct(..) => StmtKind::Struct,
            Statement::Assignv(..) => StmtKind::Assignv,
            Statement::Return(_) => StmtKind::Return,
            Statement::Returns(_) => StmtKind::Returns,
            Statement::Throw => StmtKind::Throw,
            Statement::Snil => StmtKind::Snil,
            Statement::Fstop => StmtKind::Fstop,
            Statement::Break => StmtKind::Break,
            Statement::Continue => StmtKind::Continue,
            Statement::Contract(..) => StmtKind::Contract,
            Statement::Modifier(..) => StmtKind::Modifier,
            Statement::Fun(_) => StmtKind::Fun,
            Statement::Funs(..) => StmtKind::Funs,
            Statement::FunCall(..) => StmtKind::FunCall,
            Statement::LoopFor(..) => StmtKind::LoopFor,
            Statement::LoopWhile(..) => StmtKind::LoopWhile,
            Statement::Seq(..) => StmtKind::Seq,
            Statement::If(..) => StmtKind::If,
        }
    }

    pub fn seq(a: Statement, b: Statement) -> Statement {
        Statement::Seq(Box::new(a), Box::new(b))
    }

    /// Right-nested sequence of the given statements; `Snil` when empty.
    pub fn seq_all(items: Vec<Statement>) -> Statement {
        let mut it = items.into_iter().rev();
        let Some(mut acc) = it.next() else {
            return Statement::Snil;
        };
        for s in it {
            acc = Statement::seq(s, acc);
        }
        acc
    }

    pub fn if_(c: Expr, t: Statement, e: Statement) -> Statement {
        Statement::If(c, Box::new(t), Box::new(e))
    }

    pub fn while_(c: Expr, body: Statement) -> Statement {
        Statement::LoopWhile(c, Box::new(body))
    }

    /// Flattens a right-nested sequence into its elements.
    pub fn seq_items(&self) -> Vec<&Statement> {
        let mut out = Vec::new();
        let mut cur = self;
        while let Statement::Seq(a, b) = cur {
            out.push(a.as_ref());
            cur = b;
        }
        out.push(cur);
        out
    }

    /// True for function, modifier and contract declarations.
    pub fn is_declaration_module(&self) -> bool {
        matches!(
            self,
            Statement::Fun(_) | Statement::Funs(..) | Statement::Modifier(..) | Statement::Contract(..)
        )
    }

    /// Return types of a function-like declaration.
    pub fn return_types(&self) -> Option<Vec<LolisaType>> {
        match self {
            Statement::Fun(d) => Some(vec![d.id.t1.clone()]),
            Statement::Funs(_, ts) => Some(ts.clone()),
            Statement::Modifier(..) => Some(vec![LolisaType::Tundef]),
            _ => None,
        }
    }
}
