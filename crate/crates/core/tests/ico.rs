// SPDX-License-Identifier: Apache-2.0

mod common;

use common::run_ico;
use lolisa_core::dump::dump_state;
use lolisa_core::env::StatementOutcome;
use lolisa_core::eval::Halt;
use lolisa_core::value::MemoryValue;

#[test]
fn outside_the_window_throws_back_to_the_initial_state() {
    let r = run_ico(4, 50);
    assert_eq!(r.result.halt, Some(Halt::Throw));
    assert_eq!(dump_state(&r.result.sigma), dump_state(&r.init));
}

#[test]
fn inside_the_window_records_the_deposit() {
    let r = run_ico(2, 50);
    assert_eq!(r.result.outcome, StatementOutcome::Normal, "{:?}", r.result.fault);
    assert_eq!(r.result.halt, None);
    assert_eq!(r.read("(Evar subscription Tuint)"), MemoryValue::uint(50));
    assert_eq!(
        r.read("(Econst (@Vmap Iuint Tuint deposits (Mconst_id 1u) None))"),
        MemoryValue::uint(50)
    );
    assert_eq!(
        r.read("(Econst (Vfield Tint (Fstruct _0xaddress safe) (balance) None))"),
        MemoryValue::int(950)
    );
    let d = dump_state(&r.result.sigma);
    assert!(
        d.contains("m_send_re := Send_re [(Some [Int (Some (INT I64 Signed 7)); Int (Some (INT I64 Unsigned 50))])]"),
        "{d}"
    );
}

#[test]
fn deposits_over_quota_are_capped_and_refunded() {
    let r = run_ico(2, 150);
    assert_eq!(r.result.outcome, StatementOutcome::Normal, "{:?}", r.result.fault);
    assert_eq!(r.read("(Evar subscription Tuint)"), MemoryValue::uint(100));
    assert_eq!(
        r.read("(Econst (@Vmap Iuint Tuint deposits (Mconst_id 1u) None))"),
        MemoryValue::uint(100)
    );
    assert_eq!(
        r.read("(Econst (Vfield Tint (Fstruct _0xaddress safe) (balance) None))"),
        MemoryValue::int(900)
    );
    // The refund of 50 is sent through msg.sender.
    assert_eq!(
        r.read("(Econst (Vfield Tint (Fstruct _0xmsg msg) (sender balance) None))"),
        MemoryValue::int(50)
    );
}

#[test]
fn before_the_window_also_throws() {
    // The window opens at 0, so only a later close matters; move it.
    let src = format!(
        "{}\n;;\n{} ;;\n(Assignv privilegeOpen 3u)",
        common::ICO,
        common::ico_preamble(2, 50)
    );
    let r = common::run_source(&src, Some("fallback"), Default::default());
    assert_eq!(r.result.halt, Some(Halt::Throw));
    assert_eq!(dump_state(&r.result.sigma), dump_state(&r.init));
}
