//! End-to-end tests of the `tiger` binary: streams, exit statuses and the
//! diagnostic line format.

mod common;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn tiger_in(dir: &Path, args: &[&str], stdin: &[u8]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_tiger"))
        .args(args)
        .current_dir(dir)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin).unwrap();
    child.wait_with_output().unwrap()
}

fn tiger(args: &[&str], stdin: &[u8]) -> Output {
    tiger_in(&common::corpus_dir(), args, stdin)
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tiger-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn check_reports_golden_diagnostic() {
    let out = tiger_in(&golden_dir(), &["check", "bad.tig"], b"");
    let expected = std::fs::read_to_string(golden_dir().join("bad.stderr")).unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(text(&out.stderr), expected);
    assert!(out.stdout.is_empty());
}

#[test]
fn diagnostic_line_shape() {
    let out = tiger(&["check", "-"], b"let var v := nil in 0 end");
    assert_eq!(out.status.code(), Some(1));
    let line = text(&out.stderr);
    let line = line.trim_end();
    let (file, rest) = line.split_once(':').unwrap();
    assert_eq!(file, "<stdin>");
    let parts: Vec<&str> = rest.splitn(3, ':').collect();
    assert_eq!(parts[0], "1");
    assert_eq!(parts[1], "14");
    assert!(
        parts[2].starts_with(" error[NIL_UNCONSTRAINED]: "),
        "{line}"
    );
}

#[test]
fn check_is_silent_on_success() {
    let out = tiger(&["check", "queens.tig"], b"");
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty() && out.stderr.is_empty());
}

#[test]
fn syntax_errors_are_static_errors() {
    let out = tiger(&["check", "-"], b"let var in end");
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("error["));
    let out = tiger(&["run", "-"], b"\"open");
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("error[UNTERMINATED_STRING]"));
}

#[test]
fn pretty_reads_stdin() {
    let out = tiger(&["pretty", "-"], b"1+2");
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(text(&out.stdout), "(1 + 2)\n");
}

#[test]
fn diff_passes_on_corpus_program() {
    let out = tiger(&["diff", "hello.tig"], b"");
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(text(&out.stdout), "PASS\n");
}

#[test]
fn run_writes_program_output_only_to_stdout() {
    let out = tiger(&["run", "echo.tig", "--stdin-file", "echo.in"], b"ignored");
    assert_eq!(out.status.code(), Some(42 & 0xff));
    assert_eq!(
        text(&out.stdout),
        "HELLO, TIGER!\nSECOND LINE WITH MIXED CASE\n"
    );
    assert!(out.stderr.is_empty());
}

#[test]
fn run_reads_piped_stdin() {
    let out = tiger(&["run", "echo.tig"], b"ab");
    assert_eq!(text(&out.stdout), "AB");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_builtin_sets_status() {
    let out = tiger(&["run", "exit_code.tig"], b"");
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(text(&out.stdout), "i\ni\ni\ni\ntoo big\n");
}

#[test]
fn runtime_trap_exits_two() {
    let out = tiger(&["run", "div_zero.tig"], b"");
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(text(&out.stdout), "3\n5\n:\n");
    assert!(text(&out.stderr).contains("error[DIV_ZERO]"));
}

#[test]
fn compile_then_exec() {
    let asm = scratch("queens.tvm");
    let asm_arg = asm.to_string_lossy().into_owned();
    let out = tiger(&["compile", "queens.tig", "-o", &asm_arg], b"");
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let listing = std::fs::read_to_string(&asm).unwrap();
    assert!(listing.starts_with(".module queens\n"));
    let out = tiger(&["exec", &asm_arg], b"");
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(text(&out.stdout), "92\n");
}

#[test]
fn compile_to_stdout() {
    let out = tiger(&["compile", "-"], b"print(\"hi\")");
    assert_eq!(out.status.code(), Some(0));
    let listing = text(&out.stdout);
    assert!(listing.contains(".str 0 \"hi\""), "{listing}");
    assert!(listing.contains(".fun main 0"));
}

#[test]
fn compile_refuses_ill_typed_programs() {
    let out = tiger_in(&golden_dir(), &["compile", "bad.tig"], b"");
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn exec_reports_assembler_errors() {
    let out = tiger(&["exec", "-"], b".fun main 0 0\n  frobnicate\n.end\n");
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("error[UNKNOWN_MNEMONIC]"));
    let out = tiger(&["exec", "-"], b".fun f 0 0\n  ret\n.end\n");
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("error[MISSING_MAIN]"));
}

#[test]
fn exec_traps_exit_two() {
    let out = tiger(
        &["exec", "-"],
        b".fun main 0 0\n  ldc 1\n  ldc 0\n  idiv\n  halt\n.end\n",
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("DIV_ZERO"));
}

#[test]
fn budget_stops_every_executor() {
    let src = b"while 1 do ()";
    for cmd in ["run", "diff"] {
        let out = tiger(&[cmd, "-", "--budget", "1000"], src);
        if cmd == "diff" {
            assert_eq!(out.status.code(), Some(0));
            assert_eq!(text(&out.stdout), "PASS\n");
        } else {
            assert_eq!(out.status.code(), Some(2));
            assert!(text(&out.stderr).contains("STEP_BUDGET"));
        }
    }
    let out = tiger(
        &["exec", "-", "--budget", "50"],
        b".fun main 0 0\ntop:\n  goto top\n.end\n",
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("STEP_BUDGET"));
}

#[test]
fn no_typecheck_arms_dynamic_checks() {
    let src = b"let var s := \"a\" in s + 1 end";
    let out = tiger(&["run", "-"], src);
    assert_eq!(out.status.code(), Some(1));
    let out = tiger(&["run", "--no-typecheck", "-"], src);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("error[BAD_TAG]"));
}

#[test]
fn usage_errors_exit_three() {
    assert_eq!(tiger(&[], b"").status.code(), Some(3));
    assert_eq!(tiger(&["frobnicate"], b"").status.code(), Some(3));
    assert_eq!(tiger(&["run"], b"").status.code(), Some(3));
    assert_eq!(
        tiger(&["run", "--budget", "many", "x.tig"], b"")
            .status
            .code(),
        Some(3)
    );
    let out = tiger(&["check", "no/such/file.tig"], b"");
    assert_eq!(out.status.code(), Some(3));
    assert!(text(&out.stderr).contains("cannot read"));
    assert_eq!(tiger(&["--help"], b"").status.code(), Some(0));
}
