// SPDX-License-Identifier: Apache-2.0

//! Surface conveniences expressed with core statements only.

use num_bigint::BigInt;

use crate::ast::{BinClass, Expr, Statement};
use crate::types::{final_type, LolisaType};
use crate::value::{IntVal, Value};

/// `requires(e)`.
pub fn requires(e: Expr) -> Statement {
    crate::stdlib::requires(e)
}

/// `x++`.
pub fn incr(x: Expr) -> Statement {
    let one = one_like(&x);
    op_assign(BinClass::Add, x, one)
}

/// `x--`.
pub fn decr(x: Expr) -> Statement {
    let one = one_like(&x);
    op_assign(BinClass::Sub, x, one)
}

/// `x op= e`.
pub fn op_assign(class: BinClass, x: Expr, e: Expr) -> Statement {
    Statement::Assignv(x.clone(), Expr::binary(class, x, e))
}

/// `do body while (c)`: one unconditional pass, then the loop.
pub fn do_while(body: Statement, c: Expr) -> Statement {
    Statement::seq(body.clone(), Statement::while_(c, body))
}

/// `new C(args)`: a call of the contract's constructor.
pub fn new_contract(constructor: Expr, args: Vec<Expr>) -> Statement {
    Statement::FunCall(constructor, args)
}

/// `v = f(args)`: call, then read the return slot through `Efun`.
pub fn assign_call(v: Expr, f: Expr, args: Vec<Expr>) -> Statement {
    Statement::seq(Statement::FunCall(f.clone(), args), Statement::Assignv(v, f))
}

/// The constant 1 at the type of `x`.
fn one_like(x: &Expr) -> Expr {
    match final_type(&x.t1) {
        LolisaType::Tint(sign, size) => Expr::constant(Value::Vint(IntVal {
            sign,
            size,
            v: BigInt::from(1),
        })),
        LolisaType::Tfloat => Expr::constant(Value::Vfloat(1.0)),
        _ => Expr::constant(Value::int(1)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::LabelAddress;

    #[test]
    fn incr_keeps_the_operand_type() {
        let x = Expr::var(LabelAddress::user(0), LolisaType::uint());
        let Statement::Assignv(_, rhs) = incr(x) else { panic!() };
        assert_eq!(rhs.t1, LolisaType::uint());
    }

    #[test]
    fn do_while_runs_body_first() {
        let s = do_while(Statement::Fstop, Expr::constant(Value::Vbool(false)));
        let items = s.seq_items();
        assert_eq!(*items[0], Statement::Fstop);
        assert!(matches!(items[1], Statement::LoopWhile(..)));
    }
}
