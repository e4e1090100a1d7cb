// SPDX-License-Identifier: Apache-2.0

//! Workloads shared by the benchmarks.

use lolisa_core::eval::ExecOptions;
use lolisa_core::run::{load, Loaded};

/// A `while` loop that increments a counter until gas runs out.
pub fn counting_loop() -> Loaded {
    load(
        "(Loop_while true (Assignv x (x (+) 1)))",
        Some("(Var (Evar x Tint)) ;; (Assignv x 0)"),
    )
    .expect("loop workload")
}

/// `n` writes into a mapping, each followed by a read-modify-write.
pub fn map_writes(n: usize) -> Loaded {
    let mut items = vec!["(Var public (Evar m (Tmap Iuint Tuint)))".to_string()];
    for k in 0..n {
        let slot = format!("(Econst (@Vmap Iuint Tuint m (Mconst_id {k}u) None))");
        items.push(format!("(Assignv {slot} {k}u)"));
        items.push(format!("(Assignv {slot} ({slot} (+) 1u))"));
    }
    load(&items.join(" ;;\n"), None).expect("map workload")
}

/// A contract whose entry function is gated by two modifiers.
pub fn gated_call() -> (Loaded, ExecOptions) {
    let src = "(Var public (Evar owner Tbool)) ;; (Var public (Evar x Tint)) ;;
(Contract Gate ()
  (Modifier onlyOwner () (requires owner)) ;;
  (Modifier positive () (requires (x (>=) 0))) ;;
  (Fun public fallback Tundef () ((Emodifier onlyOwner) (Emodifier positive))
    (Assignv x (x (+) 1)))) ;;
(Assignv owner true) ;; (Assignv x 0)";
    let l = load(src, None).expect("gated workload");
    let opts = ExecOptions {
        entry: l.entry("fallback"),
        record_trace: false,
        ..ExecOptions::default()
    };
    (l, opts)
}

/// Source text of `n` variable declarations with assignments, for parsing.
pub fn declarations(n: usize) -> String {
    (0..n)
        .map(|i| format!("(Var public (Evar v{i} Tuint)) ;;\n(Assignv v{i} ({i}u (+) 1u))"))
        .collect::<Vec<_>>()
        .join(" ;;\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use lolisa_core::env::StatementOutcome;
    use lolisa_core::run::run;

    #[test]
    fn workloads_run() {
        let (l, o) = gated_call();
        assert_eq!(run(&l, &o).0.outcome, StatementOutcome::Normal);
        assert_eq!(
            run(&map_writes(4), &ExecOptions::default()).0.outcome,
            StatementOutcome::Normal
        );
        let opts = ExecOptions {
            budget: 100,
            ..ExecOptions::default()
        };
        assert!(run(&counting_loop(), &opts).0.gas_exhausted());
        assert!(load(&declarations(3), None).is_ok());
    }
}
