// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::{Command, Output};

fn write(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lolisa-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn lolisa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lolisa")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const COUNTER: &str = "(Var public (Evar n Tuint)) ;;
(Contract Counter ()
  (Fun public fallback Tundef () ()
    (Assignv n (n (+) 1u)))) ;;
(Assignv n 41u)";

#[test]
fn run_calls_fallback_and_dumps() {
    let p = write("counter.lol", COUNTER);
    let o = lolisa(&["run", p.to_str().unwrap(), "--dump"]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let out = stdout(&o);
    assert!(out.contains("Int (Some (INT I64 Unsigned 42))"), "{out}");
    assert!(out.contains("m_throw := false;"));
    assert!(out.trim_end().ends_with(|c: char| c.is_ascii_digit()));
}

#[test]
fn no_entry_skips_fallback() {
    let p = write("counter2.lol", COUNTER);
    let o = lolisa(&["run", p.to_str().unwrap(), "--dump", "--no-entry"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("Int (Some (INT I64 Unsigned 41))"));
}

#[test]
fn gas_exhaustion_exits_3() {
    let lib = write("loop-lib.lol", "(Var (Evar x Tint)) ;; (Assignv x 0)");
    let p = write("loop.lol", "(Loop_while true (Assignv x (x (+) 1)))");
    let o = lolisa(&[
        "run",
        p.to_str().unwrap(),
        "--lib",
        lib.to_str().unwrap(),
        "--gas-budget",
        "50",
        "--trace",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.contains("LoopWhile")).count(), 25, "{out}");
    assert!(out.contains("halt gas"));
}

#[test]
fn gas_table_file_sets_costs() {
    let p = write(
        "loop3.lol",
        "(Var (Evar x Tint)) ;; (Assignv x 0) ;; (Loop_while true (Assignv x (x (+) 1)))",
    );
    let t = write("gas.cfg", "# costs\ngas.Assignv=4\ngas.budget=52\n");
    let o = lolisa(&[
        "run",
        p.to_str().unwrap(),
        "--gas-table",
        t.to_str().unwrap(),
        "--trace",
    ]);
    assert_eq!(o.status.code(), Some(3));
    // Var 1 + Seq nodes + first assignment leave 52 - 7 for rounds of 5.
    let rounds = stdout(&o).lines().filter(|l| l.contains("LoopWhile")).count();
    assert!((8..=10).contains(&rounds), "{rounds}");
    let bad = write("bad.cfg", "gas.Nope=1\n");
    let o = lolisa(&["run", p.to_str().unwrap(), "--gas-table", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn runtime_error_exits_2() {
    let p = write("div.lol", "(Var (Evar x Tint)) ;; (Assignv x (1 (/) 0))");
    let o = lolisa(&["run", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("div-zero"));
}

#[test]
fn throw_exits_0_with_initial_state() {
    let p = write("throw.lol", "(Var (Evar x Tint)) ;; (Assignv x 5) ;; Throw");
    let o = lolisa(&["run", p.to_str().unwrap(), "--dump"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("halt throw"), "{out}");
    assert!(!out.contains("INT I64 Signed 5"));
}

#[test]
fn check_reports_rule_and_exits_1() {
    let p = write("bad.lol", "(Var (Evar b Tbool)) ;; (Assignv b 4)");
    let o = lolisa(&["check", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("assign-type"));
    let ok = write("good.lol", "(Var (Evar b Tbool)) ;; (Assignv b true)");
    let o = lolisa(&["check", ok.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn parse_error_exits_1() {
    let p = write("broken.lol", "(Assignv x");
    assert_eq!(lolisa(&["run", p.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(lolisa(&["fmt", p.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn fmt_is_a_fixed_point() {
    let p = write("fmt.lol", COUNTER);
    let once = stdout(&lolisa(&["fmt", p.to_str().unwrap()]));
    let q = write("fmt2.lol", &once);
    let twice = stdout(&lolisa(&["fmt", q.to_str().unwrap()]));
    assert_eq!(once, twice);
    assert!(once.contains("Contract"));
}

#[test]
fn missing_file_exits_1() {
    assert_eq!(lolisa(&["check", "/nonexistent/x.lol"]).status.code(), Some(1));
}
