// SPDX-License-Identifier: Apache-2.0

//! The ten acceptance criteria. Each prints one PASS/FAIL line; the test
//! fails if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use lolisa_core::ast::{BinClass, BinOp, Expr, Statement, StmtKind, UnClass, UnOp};
use lolisa_core::check::{check_expr, CheckContext, Rule};
use lolisa_core::dump::dump_state;
use lolisa_core::env::{Env, GasTable, StatementOutcome};
use lolisa_core::eval::{eval_bop, eval_expr_r, ExecOptions, Halt, Interpreter};
use lolisa_core::memory::{read_chck, read_dir, write_check, write_dir, Alloc, Block, BlockInfo, MemoryState, Stamp};
use lolisa_core::modules::{resolve_call, ModuleContext, Qualifier};
use lolisa_core::outcome::Outcome;
use lolisa_core::run::{exit_code, load, run, LoadError};
use lolisa_core::types::{final_type, ByteSize, LabelAddress, LolisaType};
use lolisa_core::value::{corresponds, MemoryValue, Value};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Verdict = Result<String, String>;

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("type safety to depth 4", type_safety),
        ("rejection corpus", rejection_corpus),
        ("operator table", operator_table),
        ("throw and requires", throw_and_requires),
        ("gas-bounded termination", gas_termination),
        ("modifier gating", modifier_gating),
        ("module access", module_access),
        ("mapping/array oracle", container_oracle),
        ("sale fixture", sale_fixture),
        ("memory laws", memory_laws),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let v = f();
        let secs = t.elapsed().as_secs_f64();
        match &v {
            Ok(d) => println!("criterion {:>2} PASS  {name} ({d}; {secs:.2}s)", i + 1),
            Err(d) => {
                println!("criterion {:>2} FAIL  {name} ({d}; {secs:.2}s)", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- 1

fn occupied(value: MemoryValue, ty: LolisaType) -> Block {
    Block {
        value,
        info: BlockInfo {
            alloc: Alloc::Occupy,
            access: lolisa_core::ast::Access::Public,
            ty,
        },
        stamp: Stamp::GLOBAL,
    }
}

/// Ten user blocks; the enumerated expressions read the first two.
fn ten_block_state() -> MemoryState {
    let mut s = MemoryState::new();
    let blocks = [
        (MemoryValue::int(7), LolisaType::int()),
        (MemoryValue::Bool(Some(true)), LolisaType::Tbool),
        (MemoryValue::int(-3), LolisaType::int()),
        (MemoryValue::Bool(Some(false)), LolisaType::Tbool),
        (MemoryValue::uint(9), LolisaType::uint()),
        (MemoryValue::int(i64::MAX), LolisaType::int()),
        (MemoryValue::int(0), LolisaType::int()),
        (MemoryValue::String(Some("s".into())), LolisaType::Tstring),
        (MemoryValue::Float(Some(1.5)), LolisaType::Tfloat),
        (MemoryValue::Bool(Some(true)), LolisaType::Tbool),
    ];
    for (i, (v, t)) in blocks.into_iter().enumerate() {
        s.insert_block(LabelAddress::user(i as u32), occupied(v, t));
    }
    s
}

struct Alphabet {
    int_un: Vec<UnOp>,
    bool_un: Vec<UnOp>,
    int_bin: Vec<BinOp>,
    cmp_bin: Vec<BinOp>,
    bool_bin: Vec<BinOp>,
}

fn alphabet() -> Alphabet {
    let int = LolisaType::int();
    let b = LolisaType::Tbool;
    let bin = |c: BinClass, t: &LolisaType| BinOp::new(c, t.clone()).expect("catalog op");
    let arith = [
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
    ];
    let cmp = [
        BinClass::Lt,
        BinClass::Le,
        BinClass::Gt,
        BinClass::Ge,
        BinClass::Eq,
        BinClass::Ne,
    ];
    Alphabet {
        int_un: [UnClass::Neg, UnClass::BitNot, UnClass::Cast(int.clone())]
            .into_iter()
            .map(|c| UnOp::new(c, int.clone()).unwrap())
            .collect(),
        bool_un: [UnClass::Not, UnClass::Cast(b.clone())]
            .into_iter()
            .map(|c| UnOp::new(c, b.clone()).unwrap())
            .collect(),
        int_bin: arith.iter().map(|c| bin(*c, &int)).collect(),
        cmp_bin: cmp.iter().map(|c| bin(*c, &int)).collect(),
        bool_bin: [BinClass::And, BinClass::Or, BinClass::Eq, BinClass::Ne]
            .iter()
            .map(|c| bin(*c, &b))
            .collect(),
    }
}

/// All expressions of depth at most `depth` (leaves have depth 1).
fn grow(a: &Alphabet, ints: Vec<Expr>, bools: Vec<Expr>, depth: usize) -> (Vec<Expr>, Vec<Expr>) {
    let (mut is, mut bs) = (ints.clone(), bools.clone());
    for _ in 1..depth {
        let (pi, pb) = (is.clone(), bs.clone());
        let mut ni = ints.clone();
        let mut nb = bools.clone();
        for e in &pi {
            ni.extend(a.int_un.iter().map(|u| Expr::uop(u.clone(), e.clone())));
        }
        for e in &pb {
            nb.extend(a.bool_un.iter().map(|u| Expr::uop(u.clone(), e.clone())));
        }
        for l in &pi {
            for r in &pi {
                ni.extend(a.int_bin.iter().map(|o| Expr::bop(o.clone(), l.clone(), r.clone())));
                nb.extend(a.cmp_bin.iter().map(|o| Expr::bop(o.clone(), l.clone(), r.clone())));
            }
        }
        for l in &pb {
            for r in &pb {
                nb.extend(a.bool_bin.iter().map(|o| Expr::bop(o.clone(), l.clone(), r.clone())));
            }
        }
        is = ni;
        bs = nb;
    }
    (is, bs)
}

const ARITHMETIC_FAULTS: [&str; 4] = ["bop-div-zero", "int-overflow", "bop-shift", "cast"];

struct Tally {
    total: usize,
    values: usize,
    faults: usize,
}

fn judge(ctx: &CheckContext, sigma: &MemoryState, env: &Env, e: &Expr, t: &mut Tally) -> Result<(), String> {
    let (_, t1) = check_expr(ctx, e).map_err(|err| format!("generated expression rejected: {err}"))?;
    t.total += 1;
    match eval_expr_r(sigma, env, env, e) {
        Outcome::Some(v) => {
            let fin = final_type(&t1);
            let exact = match (&fin, &v) {
                (LolisaType::Tint(s, z), MemoryValue::Int(Some(i))) => i.sign == *s && i.size == *z,
                (LolisaType::Tbool, MemoryValue::Bool(Some(_))) => true,
                _ => false,
            };
            ensure(corresponds(&fin, &v) && exact, || {
                format!("{e:?} produced {v:?} at {fin:?}")
            })?;
            t.values += 1;
        }
        Outcome::Error(f) => {
            ensure(ARITHMETIC_FAULTS.contains(&f.tag), || format!("stuck: {f} for {e:?}"))?;
            t.faults += 1;
        }
        Outcome::None => return Err(format!("no outcome for {e:?}")),
    }
    Ok(())
}

fn type_safety() -> Verdict {
    let start = Instant::now();
    let sigma = ten_block_state();
    let env = Env::global(0);
    let ctx = CheckContext::default();
    let a = alphabet();
    let x = Expr::var(LabelAddress::user(0), LolisaType::int());
    let b = Expr::var(LabelAddress::user(1), LolisaType::Tbool);
    let int_leaves = vec![x.clone(), Expr::constant(Value::int(3))];
    let bool_leaves = vec![b.clone(), Expr::constant(Value::Vbool(false))];
    let mut t = Tally {
        total: 0,
        values: 0,
        faults: 0,
    };
    // Every expression up to depth 3 over two leaves per type.
    let (i3, b3) = grow(&a, int_leaves.clone(), bool_leaves.clone(), 3);
    for e in i3.iter().chain(&b3) {
        judge(&ctx, &sigma, &env, e, &mut t)?;
    }
    // Depth 4: every root operator over a depth-3 subterm (variable leaves)
    // and a leaf, in both operand positions.
    let (si, sb) = grow(&a, vec![x], vec![b], 3);
    for d in &si {
        for u in &a.int_un {
            judge(&ctx, &sigma, &env, &Expr::uop(u.clone(), d.clone()), &mut t)?;
        }
        for l in &int_leaves {
            for o in a.int_bin.iter().chain(&a.cmp_bin) {
                judge(&ctx, &sigma, &env, &Expr::bop(o.clone(), d.clone(), l.clone()), &mut t)?;
                judge(&ctx, &sigma, &env, &Expr::bop(o.clone(), l.clone(), d.clone()), &mut t)?;
            }
        }
    }
    for d in &sb {
        for u in &a.bool_un {
            judge(&ctx, &sigma, &env, &Expr::uop(u.clone(), d.clone()), &mut t)?;
        }
        for l in &bool_leaves {
            for o in &a.bool_bin {
                judge(&ctx, &sigma, &env, &Expr::bop(o.clone(), d.clone(), l.clone()), &mut t)?;
                judge(&ctx, &sigma, &env, &Expr::bop(o.clone(), l.clone(), d.clone()), &mut t)?;
            }
        }
    }
    ensure(start.elapsed() < Duration::from_secs(30), || "slower than 30s".into())?;
    Ok(format!(
        "{} expressions, {} values, {} arithmetic faults, 0 stuck",
        t.total, t.values, t.faults
    ))
}

// ---------------------------------------------------------------- 2

fn rejection_corpus() -> Verdict {
    let contract_if = "(Contract C () (Fun public f Tundef () () (If true (Fun g Tundef () () Snil) Snil)))";
    let contract_if_ok =
        "(Contract C () (Fun public g Tundef () () Snil) ;; (Fun public f Tundef () () (If true (Fun_call g) Snil)))";
    let modi = "(Contract C () (Modifier m () Snil) ;; (Fun public g Tundef ((Epar p Tint)) () Snil) ;; (Fun public f Tundef () () (Fun_call g (Emodifier m))))";
    let modi_ok = "(Contract C () (Modifier m () Snil) ;; (Fun public g Tundef ((Epar p Tint)) () Snil) ;; (Fun public f Tundef () () (Fun_call g 1)))";
    let corpus: [(&str, &str, &str, &[Rule]); 6] = [
        (
            "bool b = 4",
            "(Var (Evar b Tbool)) ;; (Assignv b 4)",
            "(Var (Evar b Tbool)) ;; (Assignv b true)",
            &[Rule::AssignType],
        ),
        (
            "if (\"error\")",
            "(If \"error\" Snil Snil)",
            "(If true Snil Snil)",
            &[Rule::ConditionType],
        ),
        (
            "\"error\" + 1",
            "(Var (Evar x Tint)) ;; (Assignv x (\"error\" (+) 1))",
            "(Var (Evar x Tint)) ;; (Assignv x (2 (+) 1))",
            &[Rule::OperatorCatalog, Rule::OperandType],
        ),
        (
            "Seq(Seq(a,b),c)",
            "(Seq (Seq Snil Snil) Snil)",
            "(Seq Snil (Seq Snil Snil))",
            &[Rule::SeqHeadIsSeq],
        ),
        (
            "function declared in an If body",
            contract_if,
            contract_if_ok,
            &[Rule::NestedFunctionDeclaration],
        ),
        ("modifier as call argument", modi, modi_ok, &[Rule::CallArgModifier]),
    ];
    let mut tags = Vec::new();
    for (name, bad, good, rules) in corpus {
        match load(bad, None) {
            Err(LoadError::Type(e)) if rules.contains(&e.rule) => tags.push(e.rule.tag()),
            Err(e) => return Err(format!("{name}: rejected for the wrong reason: {e}")),
            Ok(_) => return Err(format!("{name}: accepted")),
        }
        load(good, None).map_err(|e| format!("{name}: twin rejected: {e}"))?;
    }
    Ok(format!("6/6 rejected [{}], 6/6 twins accepted", tags.join(", ")))
}

// ---------------------------------------------------------------- 3

fn operator_table() -> Verdict {
    let s = MemoryState::new();
    let samples = [
        ("Int", MemoryValue::int(6)),
        ("Float", MemoryValue::Float(Some(1.5))),
        ("Bool", MemoryValue::Bool(Some(true))),
        ("String", MemoryValue::String(Some("a".into()))),
        ("Byte", MemoryValue::Byte(Some((ByteSize::B4, vec![0, 0, 0, 1])))),
        ("Undef", MemoryValue::Undef),
        (
            "Ptr",
            MemoryValue::Ptr(lolisa_core::value::RefKind::Vvid, Some(LabelAddress::user(0))),
        ),
        ("IntAbsent", MemoryValue::Int(None)),
    ];
    let add_int = BinOp::new(BinClass::Add, LolisaType::int()).unwrap();
    let add_float = BinOp::new(BinClass::Add, LolisaType::Tfloat).unwrap();
    let mut cases = 0;
    for (ln, l) in &samples {
        for (rn, r) in &samples {
            let op = if *ln == "Float" { &add_float } else { &add_int };
            let expect_ok = (*ln == "Int" && *rn == "Int") || (*ln == "Float" && *rn == "Float");
            let out = eval_bop(&s, op, l, r);
            cases += 1;
            match (expect_ok, &out) {
                (true, Outcome::Some(_)) | (false, Outcome::Error(_)) => {}
                _ => return Err(format!("{ln} + {rn}: got {out:?}")),
            }
        }
    }
    let zero_cases = [
        (
            BinClass::Div,
            LolisaType::int(),
            MemoryValue::int(5),
            MemoryValue::int(0),
        ),
        (
            BinClass::Mod,
            LolisaType::int(),
            MemoryValue::int(5),
            MemoryValue::int(0),
        ),
        (
            BinClass::Div,
            LolisaType::Tfloat,
            MemoryValue::Float(Some(5.0)),
            MemoryValue::Float(Some(0.0)),
        ),
        (
            BinClass::Div,
            LolisaType::uint(),
            MemoryValue::uint(5),
            MemoryValue::uint(0),
        ),
        (
            BinClass::Mod,
            LolisaType::uint(),
            MemoryValue::uint(5),
            MemoryValue::uint(0),
        ),
    ];
    for (c, t, l, r) in zero_cases {
        let op = BinOp::new(c, t).unwrap();
        cases += 1;
        ensure(eval_bop(&s, &op, &l, &r).is_error(), || {
            format!("{c:?} by zero did not fail")
        })?;
    }
    let sum = eval_bop(&s, &add_int, &MemoryValue::int(6), &MemoryValue::int(6));
    ensure(sum == Outcome::Some(MemoryValue::int(12)), || {
        format!("6 + 6 = {sum:?}")
    })?;
    ensure(cases <= 100, || format!("{cases} cases"))?;
    Ok(format!("{cases} cases"))
}

// ---------------------------------------------------------------- 4

fn fuzz_program(seed: u64) -> (String, String) {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.gen_range(2..6);
    let mut items = Vec::new();
    let mut vars = Vec::new();
    for i in 0..n {
        let (ty, lit): (&str, Box<dyn Fn(&mut StdRng) -> String>) = match rng.gen_range(0..3) {
            0 => ("Tint", Box::new(|r: &mut StdRng| r.gen_range(-50i64..50).to_string())),
            1 => (
                "Tuint",
                Box::new(|r: &mut StdRng| format!("{}u", r.gen_range(0u64..50))),
            ),
            _ => ("Tbool", Box::new(|r: &mut StdRng| r.gen_bool(0.5).to_string())),
        };
        let name = format!("v{i}");
        items.push(format!("(Var public (Evar {name} {ty}))"));
        items.push(format!("(Assignv {name} {})", lit(&mut rng)));
        vars.push((name, ty, lit));
    }
    items.push("(Var public (Evar m (Tmap Iuint Tuint)))".into());
    for _ in 0..rng.gen_range(0..4) {
        items.push(format!(
            "(Assignv (Econst (@Vmap Iuint Tuint m (Mconst_id {}u) None)) {}u)",
            rng.gen_range(0..5u64),
            rng.gen_range(0..100u64)
        ));
    }
    for _ in 0..rng.gen_range(0..4) {
        let k = rng.gen_range(0..vars.len());
        let (name, _, lit) = &vars[k];
        let v = lit(&mut rng);
        items.push(format!("(If true (Assignv {name} {v}) Snil)"));
    }
    let k = rng.gen_range(0..vars.len());
    let (name, _, lit) = &vars[k];
    let tail = format!("(Assignv {name} {})", lit(&mut rng));
    (items.join(" ;;\n"), tail)
}

fn final_dump(src: &str) -> Result<(String, String, Option<Halt>), String> {
    let l = load(src, None).map_err(|e| e.to_string())?;
    let (r, _, init) = run(&l, &ExecOptions::default());
    if let Some(f) = &r.fault {
        return Err(format!("fault {f}"));
    }
    Ok((dump_state(&r.sigma), dump_state(&init), r.halt))
}

fn throw_and_requires() -> Verdict {
    for seed in 0..20 {
        let (p, s) = fuzz_program(seed);
        let (thrown, init, h) = final_dump(&format!("{p} ;;\nThrow"))?;
        ensure(h == Some(Halt::Throw) && thrown == init, || {
            format!("seed {seed}: Throw did not restore")
        })?;
        let (req_false, _, h2) = final_dump(&format!("{p} ;;\n(requires false)"))?;
        ensure(h2 == Some(Halt::Throw) && req_false == thrown, || {
            format!("seed {seed}: requires(false) differs from Throw")
        })?;
        let (with_req, _, _) = final_dump(&format!("{p} ;;\n(requires true) ;;\n{s}"))?;
        let (plain, _, _) = final_dump(&format!("{p} ;;\n{s}"))?;
        ensure(with_req == plain, || {
            format!("seed {seed}: requires(true); s differs from s")
        })?;
        ensure(plain != init, || format!("seed {seed}: program left no trace"))?;
    }
    Ok("20 programs".into())
}

// ---------------------------------------------------------------- 5

fn gas_termination() -> Verdict {
    let lib = "(Var (Evar x Tint)) ;; (Assignv x 0)";
    let prog = "(Loop_while true (Assignv x (x (+) 1)))";
    let l = load(prog, Some(lib)).map_err(|e| e.to_string())?;
    let opts = ExecOptions {
        budget: 50,
        limit: 0,
        table: GasTable::default(),
        ..ExecOptions::default()
    };
    let (r, trace, _) = run(&l, &opts);
    let code = exit_code(&r);
    ensure(code == 3, || {
        format!("exit code {code}, halt {:?}, fault {:?}", r.halt, r.fault)
    })?;
    let iterations = trace.count(StmtKind::Assignv);
    let per_iter = opts.table.cost(StmtKind::LoopWhile) + opts.table.cost(StmtKind::Assignv);
    let expected = opts.budget / per_iter;
    ensure(iterations <= 50, || format!("{iterations} iterations"))?;
    let loop_entries = trace.count(StmtKind::LoopWhile);
    ensure(
        iterations.abs_diff(expected as usize) <= 1 && loop_entries.abs_diff(expected as usize) <= 1,
        || format!("{iterations} iterations, {loop_entries} loop entries, expected {expected}"),
    )?;
    Ok(format!(
        "exit 3 after {iterations} iterations, {loop_entries} traced loop rounds, budget/cost = {expected}"
    ))
}

// ---------------------------------------------------------------- 6

const GATE: &str = "(Var public (Evar owner Tbool)) ;;
(Var public (Evar open Tbool)) ;;
(Var public (Evar x Tint)) ;;
(Contract Gate ()
  (Modifier onlyOwner () (requires owner)) ;;
  (Modifier whenOpen () (requires open)) ;;
  (Fun public fallback Tundef () ((Emodifier onlyOwner) (Emodifier whenOpen))
    (Assignv x 1)))";

fn modifier_gating() -> Verdict {
    for (owner, open) in [(true, true), (true, false), (false, true), (false, false)] {
        let src = format!("{GATE} ;;\n(Assignv owner {owner}) ;;\n(Assignv open {open}) ;;\n(Assignv x 0)");
        let l = load(&src, None).map_err(|e| e.to_string())?;
        let (before, _, _) = run(&l, &ExecOptions::default());
        let opts = ExecOptions {
            entry: l.entry("fallback"),
            ..ExecOptions::default()
        };
        let (after, _, _) = run(&l, &opts);
        let x = l.names.addr("x").ok_or("x is not declared")?;
        let x_val = read_dir(&after.sigma, x).unwrap();
        if owner && open {
            ensure(
                after.outcome == StatementOutcome::Normal && x_val == MemoryValue::int(1),
                || format!("passing guards: outcome {:?}, x = {x_val:?}", after.outcome),
            )?;
        } else {
            ensure(
                after.outcome == StatementOutcome::Stop
                    && after.halt == Some(Halt::Modifier)
                    && dump_state(&after.sigma) == dump_state(&before.sigma),
                || format!("guards ({owner}, {open}): body ran or state changed"),
            )?;
        }
    }
    Ok("1 of 4 guard combinations runs the body; 3 leave the entry state".into())
}

// ---------------------------------------------------------------- 7

const MODULES: &str = "(Contract A () (Var (Evar x Tint)) ;; (Var (Evar y Tint))) ;;
(Contract B (A) (Var (Evar x Tint)) ;; (Var (Evar z Tint))) ;;
(Contract C (A B) (Var (Evar w Tint)) ;; (Fun public f Tundef ((Epar p Tint)) () Snil))";

/// Independent reading of the six access rules over a hand-written table
/// of the fixture.
fn oracle(
    members: &BTreeMap<&str, BTreeMap<&str, LabelAddress>>,
    imports: &BTreeMap<&str, Vec<&str>>,
    chain: &BTreeMap<&str, Vec<&str>>,
    cur: &str,
    id: &str,
    q: &Qualifier,
) -> Option<LabelAddress> {
    let has = |m: &str| members.get(m).and_then(|ms| ms.get(id)).copied();
    let mut fired: Vec<Option<LabelAddress>> = Vec::new();
    match q {
        // SING / MULT-IN
        Qualifier::None if has(cur).is_some() => fired.push(has(cur)),
        // MULT-NOT-IN: the latest import holding the id.
        Qualifier::None => {
            let mut best = None;
            for m in &imports[cur] {
                if let Some(a) = has(m) {
                    best = Some(a);
                }
            }
            fired.push(best);
        }
        // MULT-OUT
        Qualifier::Explicit(m) => {
            let visible = m == cur || imports[cur].iter().any(|x| x == m);
            fired.push(if visible { has(m) } else { None });
        }
        // THIS-T / THIS-F
        Qualifier::This => fired.push(chain.get(cur).and_then(|c| c.iter().find_map(|m| has(m)))),
    }
    assert_eq!(fired.len(), 1, "exactly one rule applies");
    fired[0]
}

fn module_access() -> Verdict {
    let p = lolisa_core::syntax::parse(MODULES).map_err(|e| e.to_string())?;
    let names = p.names.clone();
    let ctx = ModuleContext::from_program(&p.statement, &|a| names.name_of(a).map(String::from));
    let at = |k: &str| names.addr(k).unwrap();
    let members = BTreeMap::from([
        ("A", BTreeMap::from([("x", at("A.x")), ("y", at("A.y"))])),
        ("B", BTreeMap::from([("x", at("B.x")), ("z", at("B.z"))])),
        ("C", BTreeMap::from([("w", at("C.w")), ("f", at("C.f"))])),
        ("f", BTreeMap::from([("p", at("C.f.p"))])),
    ]);
    let imports = BTreeMap::from([
        ("A", vec![]),
        ("B", vec!["A"]),
        ("C", vec!["A", "B"]),
        // A function sees its contract last, its ancestors before it.
        ("f", vec!["B", "A", "C"]),
    ]);
    let chain = BTreeMap::from([("f", vec!["C", "A", "B"])]);
    let mods = ["A", "B", "C", "f"];
    let ids = ["x", "y", "z", "w", "f", "p", "q"];
    let mut quals = vec![Qualifier::None, Qualifier::This, Qualifier::Explicit("Z".into())];
    quals.extend(mods.iter().map(|m| Qualifier::Explicit(m.to_string())));
    let mut n = 0;
    for cur in mods {
        for id in ids {
            for q in &quals {
                let want = oracle(&members, &imports, &chain, cur, id, q);
                let got = resolve_call(&ctx, cur, id, q);
                let agree = match (&want, &got) {
                    (Some(a), Outcome::Some(b)) => a == b,
                    (None, Outcome::Error(_)) => true,
                    _ => false,
                };
                ensure(agree, || format!("{cur} / {id} / {q:?}: oracle {want:?}, got {got:?}"))?;
                n += 1;
            }
        }
    }
    Ok(format!("{n} triples agree"))
}

// ---------------------------------------------------------------- 8

#[derive(Clone, Debug)]
enum Shape {
    Map(Box<Shape>),
    Array(u64, Box<Shape>),
    Leaf,
}

impl Shape {
    fn ty(&self) -> String {
        match self {
            Shape::Leaf => "Tuint".into(),
            Shape::Map(inner) => format!("(Tmap Iuint {})", inner.ty()),
            Shape::Array(n, inner) => format!("(Tarray {n} {})", inner.ty()),
        }
    }

    fn depth(&self) -> usize {
        match self {
            Shape::Leaf => 0,
            Shape::Map(i) | Shape::Array(_, i) => 1 + i.depth(),
        }
    }
}

/// `name[k0][k1]...` as a surface expression.
fn access(name: &str, shape: &Shape, keys: &[u64]) -> String {
    fn val(name: &str, shape: &Shape, keys: &[u64]) -> String {
        match shape {
            Shape::Map(inner) => {
                let snd = if keys.len() > 1 {
                    format!("(Some {})", val(name, inner, &keys[1..]))
                } else {
                    "None".into()
                };
                format!("(@Vmap Iuint {} {name} (Mconst_id {}u) {snd})", inner.ty(), keys[0])
            }
            Shape::Array(_, inner) => {
                // The element type carries the next index.
                let elem = index_type(inner, &keys[1..]);
                format!("(Varray {name} {} {elem})", keys[0])
            }
            Shape::Leaf => unreachable!(),
        }
    }
    fn index_type(shape: &Shape, keys: &[u64]) -> String {
        match shape {
            Shape::Array(_, inner) => format!("(Tarray {} {})", keys[0], index_type(inner, &keys[1..])),
            other => other.ty(),
        }
    }
    format!("(Econst {})", val(name, shape, keys))
}

fn random_shape(rng: &mut StdRng, map: bool) -> Shape {
    let d = rng.gen_range(1..=3);
    let mut s = Shape::Leaf;
    for _ in 0..d {
        s = if map {
            Shape::Map(Box::new(s))
        } else {
            Shape::Array(rng.gen_range(1..=8), Box::new(s))
        };
    }
    s
}

fn bounds(shape: &Shape) -> Vec<u64> {
    match shape {
        Shape::Leaf => vec![],
        Shape::Map(i) => [vec![8], bounds(i)].concat(),
        Shape::Array(n, i) => [vec![*n], bounds(i)].concat(),
    }
}

fn container_oracle() -> Verdict {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let (mut reads, mut errors) = (0usize, 0usize);
    for script in 0..500 {
        let is_map = script % 2 == 0;
        let shape = random_shape(&mut rng, is_map);
        let bs = bounds(&shape);
        let mut oracle: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
        let mut items = vec![format!("(Var public (Evar c {}))", shape.ty())];
        for _ in 0..rng.gen_range(1..=8) {
            let keys: Vec<u64> = bs.iter().map(|b| rng.gen_range(0..*b)).collect();
            let v = rng.gen_range(0..1000u64);
            items.push(format!("(Assignv {} {v}u)", access("c", &shape, &keys)));
            oracle.insert(keys, v);
        }
        let src = items.join(" ;;\n");
        let l = load(&src, None).map_err(|e| format!("script {script}: {e}\n{src}"))?;
        let (r, _, _) = run(&l, &ExecOptions::default());
        ensure(r.fault.is_none(), || format!("script {script}: {:?}\n{src}", r.fault))?;
        let env = Env::global(0);
        // Probe every written key, plus random and out-of-range ones.
        let mut probes: Vec<Vec<u64>> = oracle.keys().cloned().collect();
        for _ in 0..6 {
            probes.push(bs.iter().map(|b| rng.gen_range(0..b + 2)).collect());
        }
        for keys in probes {
            let e = lolisa_core::syntax::parse_expr(&access("c", &shape, &keys), &l.names)
                .map_err(|e| format!("script {script}: {e}"))?;
            let got = eval_expr_r(&r.sigma, &env, &env, &e);
            let in_range = keys.iter().zip(&bs).all(|(k, b)| k < b);
            let want = oracle.get(&keys).copied();
            let ok = match (&got, want) {
                (Outcome::Some(v), Some(w)) => *v == MemoryValue::uint(w),
                // Arrays hold initial (absent) integers where nothing was written.
                (Outcome::Some(MemoryValue::Int(None)), None) => !is_map && in_range,
                (Outcome::Error(_), None) => is_map || !in_range,
                _ => false,
            };
            ensure(ok, || {
                format!(
                    "script {script} depth {} keys {keys:?}: got {got:?}, oracle {want:?}\n{src}",
                    shape.depth()
                )
            })?;
            reads += 1;
            if got.is_error() {
                errors += 1;
            }
        }
    }
    Ok(format!("500 scripts, {reads} reads, {errors} expected errors"))
}

// ---------------------------------------------------------------- 9

fn sale_fixture() -> Verdict {
    let start = Instant::now();
    let closed = common::run_ico(4, 50);
    ensure(closed.result.halt == Some(Halt::Throw), || {
        format!("now = 4: halt {:?}", closed.result.halt)
    })?;
    ensure(dump_state(&closed.result.sigma) == dump_state(&closed.init), || {
        "now = 4: final dump differs from the initial state".into()
    })?;
    let open = common::run_ico(2, 50);
    ensure(
        open.result.outcome == StatementOutcome::Normal && open.result.halt.is_none(),
        || {
            format!(
                "now = 2: {:?} {:?} {:?}",
                open.result.outcome, open.result.halt, open.result.fault
            )
        },
    )?;
    let sub = open.read("(Evar subscription Tuint)");
    let dep = open.read("(Econst (@Vmap Iuint Tuint deposits (Mconst_id 1u) None))");
    let safe = open.read("(Econst (Vfield Tint (Fstruct _0xaddress safe) (balance) None))");
    // Hand trace: quota 100, nothing deposited yet, so finalLimit = 100 and
    // the whole 50 goes through: deposits[1] = 0 + 50, subscription = 0 + 50,
    // and the safe sends 50 out of 1000.
    ensure(
        sub == MemoryValue::uint(50) && dep == MemoryValue::uint(50) && safe == MemoryValue::int(950),
        || format!("now = 2: subscription {sub:?}, deposits {dep:?}, safe {safe:?}"),
    )?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(5), || format!("{elapsed:?}"))?;
    Ok("closed window restores the initial state; open window deposits 50".into())
}

// ---------------------------------------------------------------- 10

#[derive(Clone, Debug)]
enum MemOp {
    Write(u32, MemoryValue),
    Checked(u32, MemoryValue),
}

fn payload() -> impl Strategy<Value = MemoryValue> {
    prop_oneof![
        any::<i64>().prop_map(MemoryValue::int),
        any::<u64>().prop_map(MemoryValue::uint),
        any::<bool>().prop_map(|b| MemoryValue::Bool(Some(b))),
        "[a-z]{0,4}".prop_map(|s| MemoryValue::String(Some(s))),
        Just(MemoryValue::Int(None)),
    ]
}

fn mem_op() -> impl Strategy<Value = MemOp> {
    // Addresses 0..8 include the built-ins; 0x10.. are the program's.
    let addr = prop_oneof![0u32..8, 0x10u32..0x18];
    prop_oneof![
        (addr.clone(), payload()).prop_map(|(a, v)| MemOp::Write(a, v)),
        (addr, payload()).prop_map(|(a, v)| MemOp::Checked(a, v)),
    ]
}

const LAW_PROGRAM: &str = "(Var public (Evar a Tint)) ;; (Var public (Evar b Tuint)) ;;
(Var private (Evar c Tbool)) ;; (Var public (Evar d Tstring)) ;; (Var public (Evar e Tint))";

fn laws(init: &MemoryState, init_dump: &str, ops: &[MemOp]) -> Result<(), TestCaseError> {
    let env = Env::global(0);
    let types = [
        LolisaType::int(),
        LolisaType::uint(),
        LolisaType::Tbool,
        LolisaType::Tstring,
    ];
    let mut s = init.clone();
    for op in ops {
        let (a, next) = match op {
            MemOp::Write(a, v) => {
                let a = LabelAddress(*a);
                let n = write_dir(&s, a, v.clone());
                // Read after write.
                prop_assert_eq!(read_dir(&n, a), Outcome::Some(v.clone()));
                (a, n)
            }
            MemOp::Checked(a, v) => {
                let a = LabelAddress(*a);
                let ty = lolisa_core::stdlib::payload_type(v);
                match write_check(&s, &env, &ty, a, v.clone()) {
                    Outcome::Some(n) => {
                        prop_assert!(!a.is_reserved(), "checked write reached a built-in block");
                        prop_assert_eq!(read_dir(&n, a), Outcome::Some(v.clone()));
                        (a, n)
                    }
                    _ => (a, s.clone()),
                }
            }
        };
        // Frame: every other block is untouched.
        for (b, blk) in s.blocks() {
            if *b != a {
                prop_assert_eq!(next.block(*b), Some(blk));
            }
        }
        // Checked reads agree with direct reads.
        for (b, _) in next.blocks() {
            for t in &types {
                if let Outcome::Some(v) = read_chck(&next, &env, t, *b) {
                    prop_assert_eq!(read_dir(&next, *b), Outcome::Some(v));
                }
            }
        }
        s = next;
    }
    // The snapshot is never disturbed, and Throw returns to it.
    prop_assert_eq!(dump_state(init), init_dump);
    let mut it = Interpreter::new(GasTable::default(), init.clone());
    let r = it.eval_stmt(&s, &Env::global(10), &Env::global(0), &Statement::Throw);
    prop_assert_eq!(dump_state(&r.sigma), init_dump);
    Ok(())
}

fn memory_laws() -> Verdict {
    let l = load(LAW_PROGRAM, None).map_err(|e| e.to_string())?;
    let init = match lolisa_core::eval::init_mem(&l.program, &l.lib) {
        Outcome::Some(s) => s,
        other => return Err(format!("init_mem: {other:?}")),
    };
    let again = lolisa_core::eval::init_mem(&l.program, &l.lib).unwrap();
    let init_dump = dump_state(&init);
    ensure(dump_state(&again) == init_dump, || "init_mem is not repeatable".into())?;
    let mut runner = TestRunner::new(Config {
        cases: 10_000,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&prop::collection::vec(mem_op(), 1..12), |ops| {
            laws(&init, &init_dump, &ops)
        })
        .map_err(|e| e.to_string())?;
    Ok("10000 operation sequences".into())
}
