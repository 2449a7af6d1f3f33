//! Runtime semantics, checked on both executors at once: each program runs
//! under the interpreter and compiled, and the two must agree as well as
//! match the expected result.

mod common;

use tiger::driver::{self, Observed};

fn both(src: &str, stdin: &[u8]) -> (String, Observed) {
    let prog = driver::front(src).unwrap_or_else(|d| panic!("{src}: {d:?}"));
    let d = driver::diff(&prog, stdin, Some(5_000_000));
    assert!(d.agrees(), "{src}: {}", d.explain());
    (
        String::from_utf8_lossy(&d.interp.stdout).into_owned(),
        d.interp.observed,
    )
}

fn value(src: &str) -> i64 {
    match both(src, b"").1 {
        Observed::Exit(n) => n,
        other => panic!("{src}: {other}"),
    }
}

fn trap(src: &str) -> String {
    match both(src, b"").1 {
        Observed::Trap(kind) => kind,
        other => panic!("{src}: expected a trap, got {other}"),
    }
}

#[test]
fn arithmetic_wraps_and_truncates() {
    assert_eq!(value("2 + 3"), 5);
    assert_eq!(value("7 / -2"), -3);
    assert_eq!(value("-7 / 2"), -3);
    assert_eq!(
        value("9223372036854775807 + 1 = -9223372036854775807 - 1"),
        1
    );
    assert_eq!(
        value("let var m := -9223372036854775807 - 1 in m / -1 = m end"),
        1
    );
    assert_eq!(trap("8 / 0"), "DIV_ZERO");
}

#[test]
fn truthiness_and_comparisons() {
    assert_eq!(value("if 0 then 1 else 2"), 2);
    assert_eq!(value("if -5 then 1 else 2"), 1);
    assert_eq!(
        value("(3 < 4) + (4 <= 4) + (5 > 6) + (\"ab\" < \"b\") + (\"\" = \"\")"),
        4
    );
    assert_eq!(value("\"abc\" >= \"abd\""), 0);
}

#[test]
fn short_circuit_skips_side_effects() {
    let src = "let var n := 0 function bump(): int = (n := n + 1; 1) in \
               (0 & bump()); (1 | bump()); (1 & bump()); (0 | bump()); n end";
    assert_eq!(value(src), 2);
    assert_eq!(value("0 & 1 / 0"), 0);
    assert_eq!(value("3 | 1 / 0"), 1);
}

#[test]
fn sequences_and_unit_values() {
    let (out, obs) = both("(print(\"a\"); print(\"b\"); 3)", b"");
    assert_eq!(out, "ab");
    assert_eq!(obs, Observed::Exit(3));
    assert_eq!(value("()"), 0);
    assert_eq!(value("let in end"), 0);
}

#[test]
fn for_bounds_are_evaluated_once() {
    let src = "let var calls := 0 var hi := 3 \
               function bound(): int = (calls := calls + 1; hi) \
               var s := 0 \
               in for i := 1 to bound() do (hi := 100; s := s + i); s * 10 + calls end";
    assert_eq!(value(src), 61);
    assert_eq!(
        value("let var s := 0 in for i := 5 to 1 do s := s + 1; s end"),
        0
    );
}

#[test]
fn for_loop_reaching_max_int_terminates() {
    let src = "let var n := 0 in \
               for i := 9223372036854775805 to 9223372036854775807 do n := n + 1; n end";
    assert_eq!(value(src), 3);
}

#[test]
fn break_leaves_only_the_nearest_loop() {
    let src = "let var s := 0 in \
               for i := 1 to 3 do (for j := 1 to 100 do (if j > 2 then break; s := s + 1); s := s + 100); \
               s end";
    assert_eq!(value(src), 306);
    assert_eq!(
        value("let var i := 0 in while 1 do (i := i + 1; if i = 7 then break); i end"),
        7
    );
}

#[test]
fn records_and_arrays_are_references() {
    let src = "let type p = {x: int} var a := p{x = 1} var b := a in b.x := 9; a.x end";
    assert_eq!(value(src), 9);
    let src = "let type v = array of int var a := v[3] of 0 var b := a in b[2] := 4; a[2] end";
    assert_eq!(value(src), 4);
    let src =
        "let type p = {x: int} var a := p{x = 1} var b := p{x = 1} in (a = b) * 10 + (a = a) end";
    assert_eq!(value(src), 1);
    let src = "let type v = array of int var a := v[2] of 5 in a[0] := 1; a[0] + a[1] end";
    assert_eq!(value(src), 6);
}

#[test]
fn runtime_faults() {
    assert_eq!(
        trap("let type v = array of int var a := v[3] of 0 in a[3] end"),
        "INDEX_OOB"
    );
    assert_eq!(
        trap("let type v = array of int var a := v[3] of 0 in a[-1] end"),
        "INDEX_OOB"
    );
    assert_eq!(
        trap("let type p = {x: int} var a : p := nil in a.x end"),
        "NIL_DEREF"
    );
    assert_eq!(
        trap("let type v = array of int in v[-1] of 0; 0 end"),
        "BAD_ARG"
    );
    assert_eq!(trap("chr(300)"), "BAD_ARG");
    assert_eq!(trap("size(substring(\"abc\", 2, 2))"), "BAD_ARG");
}

#[test]
fn nested_functions_reach_enclosing_frames() {
    let src = "let var total := 0 \
               function outer(a: int): int = \
                 let var local := a * 10 \
                     function middle(b: int): int = \
                       let function inner(c: int): int = (total := total + 1; a + b + c + local) \
                       in inner(b) + inner(1) end \
                 in middle(2) end \
               in outer(3) * 100 + total end";
    // inner(2) = 3+2+2+30 = 37, inner(1) = 36
    assert_eq!(value(src), 7302);
}

#[test]
fn nested_function_mutation_is_shared() {
    let src = "let function counter(start: int): int = \
                 let var n := start \
                     function step() = n := n + 1 \
                 in step(); step(); step(); n end \
               in counter(10) end";
    assert_eq!(value(src), 13);
}

#[test]
fn recursion_through_static_links() {
    let src = "let function fib(n: int): int = \
                 let function go(k: int, a: int, b: int): int = \
                   if k = n then a else go(k + 1, b, a + b) \
                 in go(0, 0, 1) end \
               in fib(50) - 12586269025 end";
    assert_eq!(value(src), 0);
    let src = "let function even(n: int): int = if n = 0 then 1 else odd(n - 1) \
                   function odd(n: int): int = if n = 0 then 0 else even(n - 1) \
               in even(1000) * 10 + odd(7) end";
    assert_eq!(value(src), 11);
}

#[test]
fn shadowing_follows_static_scope() {
    let src = "let var x := 1 function f(): int = x in let var x := 2 in f() * 10 + x end end";
    assert_eq!(value(src), 12);
}

#[test]
fn stdin_is_shared_by_both_paths() {
    let src = "let var a := getchar() var b := getchar() var c := getchar() \
               in print(c); print(b); print(a); size(c) end";
    let (out, obs) = both(src, b"xy");
    assert_eq!(out, "yx");
    assert_eq!(obs, Observed::Exit(0));
}

#[test]
fn exit_stops_everything() {
    let (out, obs) = both("(print(\"a\"); exit(3); print(\"b\"))", b"");
    assert_eq!(out, "a");
    assert_eq!(obs, Observed::Exit(3));
}

#[test]
fn oracles_are_sound() {
    // Known solution counts for small boards.
    let counts: Vec<usize> = (1..=8).map(common::queens_oracle).collect();
    assert_eq!(counts, [1, 0, 0, 2, 10, 4, 40, 92]);
    let sorted = common::mergesort_oracle();
    let values: Vec<i64> = sorted.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(values.len(), 100);
    assert!(values.windows(2).all(|w| w[0] <= w[1]));
    assert!(values.iter().all(|v| (0..1000).contains(v)));
}
