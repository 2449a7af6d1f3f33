//! Randomized properties: interpreter and compiled code agree on generated
//! programs, printing round-trips, diagnostics stay inside the source, and
//! every phase is deterministic.

use proptest::prelude::*;

use tiger::driver;
use tiger::frontend::{parse_source, pretty, tokenize};
use tiger::semant;
use tiger::vm;

/// Program shape, generated without regard to scope. Indices are resolved
/// against whatever is visible when the tree is rendered, so every tree
/// renders to a closed, well-typed program.
#[derive(Clone, Debug)]
enum G {
    Lit(i64),
    Var(usize),
    Bin(usize, Box<G>, Box<G>),
    Neg(Box<G>),
    If(Box<G>, Box<G>, Box<G>),
    Let(Box<G>, Box<G>),
    Assign(usize, Box<G>, Box<G>),
    Fun(Box<G>, Box<G>),
    Call(usize, Box<G>),
    For(u8, Box<G>),
    Print(Box<G>, Box<G>),
    Rec(Box<G>, Box<G>),
}

const OPS: [&str; 12] = [
    "+", "-", "*", "/", "=", "<>", "<", "<=", ">", ">=", "&", "|",
];

fn tree() -> impl Strategy<Value = G> {
    let leaf = prop_oneof![
        prop_oneof![-3i64..20, Just(i64::MAX), Just(i64::MIN + 1)].prop_map(G::Lit),
        any::<usize>().prop_map(G::Var),
    ];
    leaf.prop_recursive(5, 48, 3, |inner| {
        let b = move || inner.clone().prop_map(Box::new);
        prop_oneof![
            (0..OPS.len(), b(), b()).prop_map(|(o, l, r)| G::Bin(o, l, r)),
            b().prop_map(G::Neg),
            (b(), b(), b()).prop_map(|(c, t, e)| G::If(c, t, e)),
            (b(), b()).prop_map(|(i, body)| G::Let(i, body)),
            (any::<usize>(), b(), b()).prop_map(|(v, e, rest)| G::Assign(v, e, rest)),
            (b(), b()).prop_map(|(body, rest)| G::Fun(body, rest)),
            (any::<usize>(), b()).prop_map(|(f, a)| G::Call(f, a)),
            (0u8..4, b()).prop_map(|(k, body)| G::For(k, body)),
            (b(), b()).prop_map(|(a, rest)| G::Print(a, rest)),
            (b(), b()).prop_map(|(a, b)| G::Rec(a, b)),
        ]
    })
}

#[derive(Clone, Default)]
struct Scope {
    /// (name, assignable)
    vars: Vec<(String, bool)>,
    funs: Vec<String>,
}

struct Render {
    fresh: usize,
}

impl Render {
    fn name(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    fn exp(&mut self, g: &G, sc: &Scope) -> String {
        match g {
            G::Lit(n) if *n < 0 => format!("(-{})", n.unsigned_abs()),
            G::Lit(n) => n.to_string(),
            G::Var(i) => match sc.vars.get(i % sc.vars.len().max(1)) {
                Some((v, _)) => v.clone(),
                None => (i % 7).to_string(),
            },
            G::Bin(o, l, r) => {
                format!("({} {} {})", self.exp(l, sc), OPS[*o], self.exp(r, sc))
            }
            G::Neg(e) => format!("(-{})", self.exp(e, sc)),
            G::If(c, t, e) => format!(
                "(if {} then {} else {})",
                self.exp(c, sc),
                self.exp(t, sc),
                self.exp(e, sc)
            ),
            G::Let(init, body) => {
                let v = self.name("v");
                let init = self.exp(init, sc);
                let mut inner = sc.clone();
                inner.vars.push((v.clone(), true));
                format!("let var {v} := {init} in {} end", self.exp(body, &inner))
            }
            G::Assign(i, e, rest) => {
                let targets: Vec<&String> =
                    sc.vars.iter().filter(|(_, a)| *a).map(|(v, _)| v).collect();
                let rhs = self.exp(e, sc);
                let rest = self.exp(rest, sc);
                match targets.get(i % targets.len().max(1)) {
                    Some(v) => format!("({v} := {rhs}; {rest})"),
                    None => format!("({rhs}; {rest})"),
                }
            }
            G::Fun(body, rest) => {
                let f = self.name("f");
                let p = self.name("p");
                let mut inner = sc.clone();
                inner.vars.push((p.clone(), true));
                let body = self.exp(body, &inner);
                let mut after = sc.clone();
                after.funs.push(f.clone());
                format!(
                    "let function {f}({p}: int): int = {body} in {} end",
                    self.exp(rest, &after)
                )
            }
            G::Call(i, arg) => {
                let arg = self.exp(arg, sc);
                match sc.funs.get(i % sc.funs.len().max(1)) {
                    Some(f) => format!("{f}({arg})"),
                    None => format!("(-{arg})"),
                }
            }
            G::For(k, body) => {
                let acc = self.name("acc");
                let i = self.name("i");
                let mut inner = sc.clone();
                inner.vars.push((acc.clone(), true));
                inner.vars.push((i.clone(), false));
                format!(
                    "let var {acc} := 0 in (for {i} := 0 to {k} do {acc} := {acc} + {}; {acc}) end",
                    self.exp(body, &inner)
                )
            }
            G::Print(a, rest) => format!(
                "(print(if {} < 0 then \"-\" else \"+\"); {})",
                self.exp(a, sc),
                self.exp(rest, sc)
            ),
            G::Rec(a, b) => {
                let r = self.name("r");
                let a = self.exp(a, sc);
                let b = self.exp(b, sc);
                format!(
                    "let type {r}t = {{x: int, y: int}} var {r} := {r}t{{x = {a}, y = {b}}} \
                     in {r}.y := {r}.y + 1; {r}.x - {r}.y end"
                )
            }
        }
    }
}

fn render(g: &G) -> String {
    Render { fresh: 0 }.exp(g, &Scope::default())
}

/// Arbitrary token soup, mostly but not always well-formed.
fn soup() -> impl Strategy<Value = String> {
    let token = prop_oneof![
        Just("let"),
        Just("in"),
        Just("end"),
        Just("var"),
        Just("x"),
        Just("y"),
        Just(":="),
        Just("1"),
        Just("42"),
        Just("+"),
        Just("-"),
        Just("*"),
        Just("("),
        Just(")"),
        Just(";"),
        Just("if"),
        Just("then"),
        Just("else"),
        Just("while"),
        Just("do"),
        Just("\"s\\n\""),
        Just("&"),
        Just("|"),
        Just("<"),
        Just("="),
        Just("\n"),
        Just("/* c */"),
        Just("nil"),
        Just("["),
        Just("]"),
        Just("of"),
        Just("."),
        Just("{"),
        Just("}"),
        Just(","),
        Just("type"),
        Just("function"),
        Just(":"),
        Just("int"),
        Just("#"),
    ];
    prop::collection::vec(token, 0..30).prop_map(|ts| ts.join(" "))
}

fn within(src: &str, line: u32, column: u32) -> bool {
    let lines: Vec<&str> = src.split('\n').collect();
    (line as usize) >= 1
        && (line as usize) <= lines.len()
        && column >= 1
        && (column as usize) <= lines[line as usize - 1].chars().count() + 1
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 300, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn generated_programs_agree(g in tree()) {
        let src = render(&g);
        let prog = driver::front(&src).map_err(|d| TestCaseError::fail(format!("{src}\n{d:?}")))?;
        let d = driver::diff(&prog, b"", Some(200_000));
        prop_assert!(d.agrees(), "{}\n{}", src, d.explain());
    }

    #[test]
    fn execution_is_deterministic(g in tree()) {
        let prog = driver::front(&render(&g)).unwrap();
        let (a, b) = (driver::run_interp(&prog, b"", None), driver::run_interp(&prog, b"", None));
        prop_assert!(a.same(&b));
        let (a, b) = (driver::run_compiled(&prog, b"", None), driver::run_compiled(&prog, b"", None));
        prop_assert!(a.same(&b));
    }

    #[test]
    fn generated_programs_round_trip(g in tree()) {
        let first = parse_source(&render(&g)).unwrap();
        let printed = pretty(&first);
        prop_assert!(tokenize(&printed).is_ok());
        prop_assert_eq!(parse_source(&printed).unwrap(), first);
    }

    #[test]
    fn soup_round_trips_or_reports_inside_source(src in soup()) {
        match parse_source(&src) {
            Ok(first) => {
                let printed = pretty(&first);
                prop_assert!(tokenize(&printed).is_ok(), "{}", printed);
                prop_assert_eq!(parse_source(&printed).unwrap(), first.clone());
                let (a, b) = (semant::analyze(&first), semant::analyze(&first));
                prop_assert_eq!(&a.diagnostics, &b.diagnostics);
                for d in &a.diagnostics {
                    prop_assert!(within(&src, d.pos.line, d.pos.column), "{} in {:?}", d, src);
                }
            }
            Err(diags) => {
                prop_assert!(!diags.is_empty());
                for d in &diags {
                    prop_assert!(within(&src, d.pos.line, d.pos.column), "{} in {:?}", d, src);
                }
            }
        }
    }

    #[test]
    fn budget_counts_exactly(m in 0usize..40, budget in 0u64..100) {
        let mut text = String::from(".fun main 0 0\n");
        for k in 0..m {
            text.push_str(&format!("  ldc {k}\n  pop\n"));
        }
        text.push_str("  ldc 7\n  halt\n.end\n");
        let module = vm::assemble(&text).unwrap();
        let total = 2 * m as u64 + 2;
        let (_, outcome) = vm::execute_bytes(&module, b"", Some(budget));
        match outcome {
            vm::Outcome::Exit(7) => prop_assert!(budget >= total),
            vm::Outcome::Trap(t) => {
                prop_assert_eq!(t.kind, vm::TrapKind::StepBudget);
                prop_assert!(budget < total);
                prop_assert_eq!(t.index as u64, budget);
            }
            other => prop_assert!(false, "{:?}", other),
        }
    }
}
