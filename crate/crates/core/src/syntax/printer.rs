// SPDX-License-Identifier: Apache-2.0

//! Canonical rendering of ASTs in the surface notation. Loading the output
//! gives back the same tree.

use crate::ast::{Expr, ExprKind, FunDecl, Statement, UnClass};
use crate::types::{ArrayIndex, IntSize, LabelAddress, LolisaMapType, LolisaType, MapArrayIndex, Signedness};
use crate::value::{FieldArg, FieldHead, MapKey, Value};

use super::names::Names;

/// Renders with names where they are unambiguous and raw addresses
/// everywhere else.
pub struct Printer<'a> {
    names: Option<&'a Names>,
}

const INDENT: &str = "  ";

impl<'a> Printer<'a> {
    pub fn new(names: Option<&'a Names>) -> Printer<'a> {
        Printer { names }
    }

    pub fn addr(&self, a: LabelAddress) -> String {
        if a.special_name().is_some() {
            return a.to_string();
        }
        match self.names.and_then(|n| n.unique_name_of(a)) {
            Some(n) if plain_identifier(n) => n.to_string(),
            _ => a.to_string(),
        }
    }

    fn opt_addr(&self, a: Option<LabelAddress>) -> String {
        match a {
            Some(a) => self.addr(a),
            None => "None".into(),
        }
    }

    pub fn ty(&self, t: &LolisaType) -> String {
        use LolisaType as T;
        match t {
            T::Tundef => "Tundef".into(),
            T::Tint(Signedness::Signed, IntSize::I64) => "Tint".into(),
            T::Tint(Signedness::Unsigned, IntSize::I64) => "Tuint".into(),
            T::Tint(s, z) => format!("(Tint {} {s:?})", z.name()),
            T::Tbool => "Tbool".into(),
            T::Tstring => "Tstring".into(),
            T::Tfloat => "Tfloat".into(),
            T::Tbytes(b) => format!("(Tbytes {})", b.name()),
            T::Tstt => "Tstt".into(),
            T::Tmodi => "Tmodi".into(),
            T::Tstruct(a) if *a == LabelAddress::ADDRESS => "Taddress".into(),
            T::Tstruct(a) => format!("(Tstruct {})", self.addr(*a)),
            T::Tvid(a) => format!("(Tvid {})", self.opt_addr(*a)),
            T::Tpid(a) => format!("(Tpid {})", self.opt_addr(*a)),
            T::Tfid(a) => format!("(Tfid {})", self.opt_addr(*a)),
            T::Tcid(a) => format!("(Tcid {})", self.opt_addr(*a)),
            T::Tarray(i, e) => format!("(Tarray {} {})", self.index(i), self.ty(e)),
            T::Tmap(k, v) => format!("(Tmap {} {})", self.key_ty(k), self.ty(v)),
        }
    }

    pub fn key_ty(&self, k: &LolisaMapType) -> String {
        match k {
            LolisaMapType::Iarray(i, e) => format!("(Iarray {} {})", self.map_index(i), self.key_ty(e)),
            other => {
                let s = self.ty(&other.embed());
                match s.strip_prefix("(T") {
                    Some(rest) => format!("(I{rest}"),
                    None => format!("I{}", &s[1..]),
                }
            }
        }
    }

    pub fn index(&self, i: &ArrayIndex) -> String {
        match i {
            ArrayIndex::ConstId(n) => format!("(Aconst_id {n})"),
            ArrayIndex::VarId(a) => format!("(Avar_id {})", self.addr(*a)),
            ArrayIndex::StrId(a, m) => format!("(Astr_id {} {})", self.addr(*a), path(m)),
            ArrayIndex::MapId(a, k) => format!("(Amap_id {} {})", self.addr(*a), self.map_index(k)),
            ArrayIndex::ArrayId(a, k) => format!("(Aarray_id {} {})", self.addr(*a), self.index(k)),
        }
    }

    fn map_index(&self, i: &MapArrayIndex) -> String {
        self.index(&i.embed())
    }

    fn key(&self, k: &MapKey) -> String {
        match k {
            MapKey::MconstId(v) => format!("(Mconst_id {})", self.value(v)),
            MapKey::MvarId(a) => format!("(Mvar_id {})", self.addr(*a)),
            MapKey::MstrId(a, m) => format!("(Mstr_id {} {})", self.addr(*a), path(m)),
            MapKey::MarrayId(a, i) => format!("(Marray_id {} {})", self.addr(*a), self.map_index(i)),
            MapKey::MmapId(a, k) => format!("(Mmap_id {} {})", self.addr(*a), self.key(k)),
        }
    }

    fn head(&self, h: &FieldHead) -> String {
        match h {
            FieldHead::Fstruct(t, x) => format!("(Fstruct {} {})", self.addr(*t), self.addr(*x)),
            FieldHead::Fmap(m, k, None) => format!("(Fmap {} {})", self.addr(*m), self.key(k)),
            FieldHead::Fmap(m, k, Some(v)) => format!("(Fmap {} {} {})", self.addr(*m), self.key(k), self.value(v)),
            FieldHead::Farray(a, i) => format!("(Farray {} {})", self.addr(*a), self.index(i)),
        }
    }

    pub fn value(&self, v: &Value) -> String {
        match v {
            Value::Vundef => "Vundef".into(),
            Value::Vint(i) => match (i.sign, i.size) {
                (Signedness::Signed, IntSize::I64) => i.v.to_string(),
                (Signedness::Unsigned, IntSize::I64) => format!("{}u", i.v),
                _ => format!("(Vint {} {})", i.v, self.ty(&i.ty())),
            },
            Value::Vbool(b) => b.to_string(),
            Value::Vfloat(x) => format!("(Vfloat {x:?})"),
            Value::Vbyte(b, bytes) => {
                let hex: String = bytes.iter().map(|x| format!("{x:02x}")).collect();
                format!("(Vbyte {} 0x{hex})", b.name())
            }
            Value::Vstring(s) => quote(s),
            Value::Vstruct(t, x) => format!("(Vstruct {} {})", self.addr(*t), self.addr(*x)),
            Value::Vref(r) => format!("(Vref {} {})", r.kind.name(), self.addr(r.addr)),
            Value::Varray { index, elem, name } => {
                format!("(Varray {} {} {})", self.addr(*name), self.index(index), self.ty(elem))
            }
            Value::Vmap {
                name,
                key,
                key_ty,
                val_ty,
                snd,
            } => {
                let tail = match snd {
                    Some(s) => format!(" {}", self.value(s)),
                    None => String::new(),
                };
                format!(
                    "(Vmap {} {} {} {}{tail})",
                    self.key_ty(key_ty),
                    self.ty(val_ty),
                    self.addr(*name),
                    self.key(key)
                )
            }
            Value::Vfield {
                t0,
                t1,
                head,
                mems,
                opars,
            } => {
                let tys = if t0 == t1 {
                    self.ty(t0)
                } else {
                    format!("{} {}", self.ty(t0), self.ty(t1))
                };
                let args = match opars {
                    None => "None".to_string(),
                    Some(xs) => {
                        let mut s = String::from("(Some");
                        for FieldArg(a) in xs {
                            s.push(' ');
                            s.push_str(&self.value(a));
                        }
                        s.push(')');
                        s
                    }
                };
                format!("(Vfield {tys} {} {} {args})", self.head(head), path(mems))
            }
        }
    }

    pub fn expr(&self, e: &Expr) -> String {
        match &e.kind {
            ExprKind::Evar(a) => format!("(Evar {} {})", self.opt_addr(*a), self.ty(&e.t1)),
            ExprKind::Epar(a) => format!("(Epar {} {})", self.opt_addr(*a), self.ty(&e.t1)),
            ExprKind::Efun(a) => format!("(Efun {} {})", self.opt_addr(*a), self.ty(&e.t1)),
            ExprKind::Econ(a) => format!("(Econ {})", self.opt_addr(*a)),
            ExprKind::Econst(v) => self.value(v),
            ExprKind::Estruct(t, es) => {
                let mut s = format!("(Estruct {}", self.addr(*t));
                for x in es {
                    s.push(' ');
                    s.push_str(&self.expr(x));
                }
                s.push(')');
                s
            }
            ExprKind::Emodifier(m, args) => {
                let mut s = format!("(Emodifier {}", self.expr(m));
                for FieldArg(a) in args {
                    s.push(' ');
                    s.push_str(&self.value(a));
                }
                s.push(')');
                s
            }
            ExprKind::Ebop(op, l, r) => {
                let canonical = Expr::binary(op.class, (**l).clone(), (**r).clone());
                if canonical == *e {
                    format!("({} ({}) {})", self.expr(l), op.class.symbol(), self.expr(r))
                } else {
                    format!(
                        "(Ebop ({}) {} {} {} {})",
                        op.class.symbol(),
                        self.ty(&op.in_ty),
                        self.ty(&op.out_ty),
                        self.expr(l),
                        self.expr(r)
                    )
                }
            }
            ExprKind::Euop(op, x) => {
                let sym = match &op.class {
                    UnClass::Cast(t) => format!("(cast {})", self.ty(t)),
                    c => format!("({})", c.symbol()),
                };
                let canonical = Expr::unary(op.class.clone(), (**x).clone());
                if canonical == *e {
                    format!("({sym} {})", self.expr(x))
                } else {
                    format!(
                        "(Euop {sym} {} {} {})",
                        self.ty(&op.in_ty),
                        self.ty(&op.out_ty),
                        self.expr(x)
                    )
                }
            }
        }
    }

    /// A program: top-level items separated by `;;`, one per line.
    pub fn program(&self, s: &Statement) -> String {
        let mut out = self.items(s, 0);
        out.push('\n');
        out
    }

    fn items(&self, s: &Statement, depth: usize) -> String {
        let pad = INDENT.repeat(depth);
        s.seq_items()
            .iter()
            .map(|x| format!("{pad}{}", self.stmt(x, depth)))
            .collect::<Vec<_>>()
            .join(" ;;\n")
    }

    /// One statement; nested bodies are indented below `depth`.
    pub fn stmt(&self, s: &Statement, depth: usize) -> String {
        let inner = depth + 1;
        let pad = INDENT.repeat(inner);
        let block = |b: &Statement| -> String {
            match b {
                Statement::Seq(..) => {
                    let body = self.items(b, inner + 1);
                    format!("\n{pad}(\n{body})")
                }
                other => format!("\n{pad}{}", self.stmt(other, inner)),
            }
        };
        match s {
            Statement::Snil => "Snil".into(),
            Statement::Throw => "Throw".into(),
            Statement::Fstop => "Fstop".into(),
            Statement::Break => "Break".into(),
            Statement::Continue => "Continue".into(),
            Statement::Var(acc, e) => match acc {
                Some(a) => format!("(Var {} {})", a.name(), self.expr(e)),
                None => format!("(Var {})", self.expr(e)),
            },
            Statement::Struct(t, ms) => {
                let mut out = format!("(Struct {}", self.addr(*t));
                for (ty, m) in ms {
                    out.push_str(&format!(" ({} {m})", self.ty(ty)));
                }
                out.push(')');
                out
            }
            Statement::Assignv(l, r) => format!("(Assignv {} {})", self.expr(l), self.expr(r)),
            Statement::Return(e) => format!("(Return {})", self.expr(e)),
            Statement::Returns(es) => {
                let xs: Vec<String> = es.iter().map(|e| self.expr(e)).collect();
                format!("(Returns {})", xs.join(" ")).replace("(Returns )", "(Returns)")
            }
            Statement::Seq(..) => {
                let body = self.items(s, inner);
                format!("(\n{body})")
            }
            Statement::If(c, t, e) => format!("(If {}{}{})", self.expr(c), block(t), block(e)),
            Statement::LoopWhile(c, b) => format!("(Loop_while {}{})", self.expr(c), block(b)),
            Statement::LoopFor(i, c, st, b) => {
                format!("(Loop_for{}\n{pad}{}{}{})", block(i), self.expr(c), block(st), block(b))
            }
            Statement::FunCall(f, args) => {
                let mut out = format!("(Fun_call {}", self.expr(f));
                for a in args {
                    out.push(' ');
                    out.push_str(&self.expr(a));
                }
                out.push(')');
                out
            }
            Statement::Contract(id, parents, body) => {
                let ps: Vec<String> = parents.iter().map(|p| self.addr(*p)).collect();
                format!(
                    "(Contract {} ({})\n{})",
                    self.contract_name(id),
                    ps.join(" "),
                    self.items(body, inner)
                )
            }
            Statement::Modifier(id, pars, body) => format!(
                "(Modifier {} ({})\n{})",
                self.opt_addr(id.address()),
                self.exprs(pars),
                self.items(body, inner)
            ),
            Statement::Fun(d) => self.function("Fun", d, &self.ty(&d.id.t1), inner),
            Statement::Funs(d, ts) => {
                let tys: Vec<String> = ts.iter().map(|t| self.ty(t)).collect();
                self.function("Funs", d, &format!("({})", tys.join(" ")), inner)
            }
        }
    }

    fn contract_name(&self, id: &Expr) -> String {
        self.opt_addr(id.address())
    }

    fn exprs(&self, es: &[Expr]) -> String {
        es.iter().map(|e| self.expr(e)).collect::<Vec<_>>().join(" ")
    }

    fn function(&self, ctor: &str, d: &FunDecl, ret: &str, inner: usize) -> String {
        let mut head = String::from(ctor);
        if let Some(a) = d.access {
            head.push(' ');
            head.push_str(a.name());
        }
        if d.constant {
            head.push_str(" constant");
        }
        if d.payable {
            head.push_str(" payable");
        }
        format!(
            "({head} {} {ret} ({}) ({})\n{})",
            self.opt_addr(d.id.address()),
            self.exprs(&d.pars),
            self.exprs(&d.modis),
            self.items(&d.body, inner)
        )
    }
}

fn path(m: &[String]) -> String {
    format!("({})", m.join(" ~> "))
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Names that load back as themselves in identifier position.
fn plain_identifier(n: &str) -> bool {
    let mut cs = n.chars();
    cs.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !matches!(n, "None" | "Some" | "nil")
        && !n.starts_with("_0x")
        && !n.starts_with("_Ox")
}

/// Renders a whole program.
pub fn render(s: &Statement, names: Option<&Names>) -> String {
    Printer::new(names).program(s)
}

pub fn render_expr(e: &Expr, names: Option<&Names>) -> String {
    Printer::new(names).expr(e)
}

pub fn render_type(t: &LolisaType) -> String {
    Printer::new(None).ty(t)
}
