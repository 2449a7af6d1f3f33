//! Helpers shared by the integration tests: corpus loading, the AST
//! coverage census, and the host-side oracles.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use tiger::ast::{Decl, DeclKind, Exp, ExpKind, LValue, LValueKind, TypeSpecKind};

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

pub struct Program {
    pub name: String,
    pub path: PathBuf,
    pub source: String,
    /// Contents of the sibling `.in` file, empty when there is none.
    pub stdin: Vec<u8>,
}

fn tig_files(dir: &Path) -> Vec<PathBuf> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap_or_else(|e| panic!("cannot list {}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "tig"))
        .collect();
    paths.sort();
    paths
}

pub fn corpus() -> Vec<Program> {
    tig_files(&corpus_dir())
        .into_iter()
        .map(|path| {
            let name = path.file_stem().unwrap().to_string_lossy().into_owned();
            let source = fs::read_to_string(&path).unwrap();
            let stdin = fs::read(path.with_extension("in")).unwrap_or_default();
            Program {
                name,
                path,
                source,
                stdin,
            }
        })
        .collect()
}

pub struct Negative {
    pub name: String,
    pub source: String,
    pub code: String,
    pub line: u32,
    pub column: u32,
}

/// Negative programs, each headed by `/* expect: CODE line:col */`.
pub fn error_corpus() -> Vec<Negative> {
    tig_files(&corpus_dir().join("errors"))
        .into_iter()
        .map(|path| {
            let source = fs::read_to_string(&path).unwrap();
            let header = source.lines().next().unwrap_or_default();
            let body = header
                .strip_prefix("/* expect: ")
                .and_then(|h| h.strip_suffix(" */"))
                .unwrap_or_else(|| panic!("{}: missing expect header", path.display()));
            let (code, at) = body.split_once(' ').unwrap();
            let (line, column) = at.split_once(':').unwrap();
            Negative {
                name: path.file_stem().unwrap().to_string_lossy().into_owned(),
                code: code.to_string(),
                line: line.parse().unwrap(),
                column: column.parse().unwrap(),
                source,
            }
        })
        .collect()
}

/// Every grammar production the corpus must exercise.
pub const PRODUCTIONS: &[&str] = &[
    "exp:int",
    "exp:string",
    "exp:nil",
    "exp:lvalue",
    "exp:assign",
    "exp:seq",
    "exp:neg",
    "exp:call",
    "exp:record",
    "exp:array",
    "exp:if",
    "exp:ifelse",
    "exp:while",
    "exp:for",
    "exp:break",
    "exp:let",
    "op:+",
    "op:-",
    "op:*",
    "op:/",
    "op:=",
    "op:<>",
    "op:<",
    "op:<=",
    "op:>",
    "op:>=",
    "op:&",
    "op:|",
    "lvalue:simple",
    "lvalue:field",
    "lvalue:subscript",
    "decl:type",
    "decl:var",
    "decl:var-typed",
    "decl:function",
    "decl:procedure",
    "ty:name",
    "ty:record",
    "ty:array",
];

/// Counts production occurrences. Deliberately a plain recursive match
/// rather than one of the library's visitors.
pub fn census(exp: &Exp, counts: &mut BTreeMap<String, usize>) {
    let mut bump = |k: &str| *counts.entry(k.to_string()).or_default() += 1;
    match &exp.kind {
        ExpKind::Int(_) => bump("exp:int"),
        ExpKind::Str(_) => bump("exp:string"),
        ExpKind::Nil => bump("exp:nil"),
        ExpKind::Var(lv) => {
            bump("exp:lvalue");
            census_lvalue(lv, counts);
        }
        ExpKind::Assign(lv, rhs) => {
            bump("exp:assign");
            census_lvalue(lv, counts);
            census(rhs, counts);
        }
        ExpKind::Seq(es) => {
            bump("exp:seq");
            es.iter().for_each(|e| census(e, counts));
        }
        ExpKind::Op(l, op, r) => {
            bump(&format!("op:{op}"));
            census(l, counts);
            census(r, counts);
        }
        ExpKind::Neg(e) => {
            bump("exp:neg");
            census(e, counts);
        }
        ExpKind::Call(_, args) => {
            bump("exp:call");
            args.iter().for_each(|e| census(e, counts));
        }
        ExpKind::Record(_, fields) => {
            bump("exp:record");
            fields.iter().for_each(|f| census(&f.value, counts));
        }
        ExpKind::Array(_, n, init) => {
            bump("exp:array");
            census(n, counts);
            census(init, counts);
        }
        ExpKind::If(t, a) => {
            bump("exp:if");
            census(t, counts);
            census(a, counts);
        }
        ExpKind::IfElse(t, a, b) => {
            bump("exp:ifelse");
            census(t, counts);
            census(a, counts);
            census(b, counts);
        }
        ExpKind::While(t, b) => {
            bump("exp:while");
            census(t, counts);
            census(b, counts);
        }
        ExpKind::For(_, lo, hi, b) => {
            bump("exp:for");
            census(lo, counts);
            census(hi, counts);
            census(b, counts);
        }
        ExpKind::Break => bump("exp:break"),
        ExpKind::Let(decls, body) => {
            bump("exp:let");
            decls.iter().for_each(|d| census_decl(d, counts));
            body.iter().for_each(|e| census(e, counts));
        }
    }
}

fn census_lvalue(lv: &LValue, counts: &mut BTreeMap<String, usize>) {
    let mut bump = |k: &str| *counts.entry(k.to_string()).or_default() += 1;
    match &lv.kind {
        LValueKind::Simple(_) => bump("lvalue:simple"),
        LValueKind::Field(base, _) => {
            bump("lvalue:field");
            census_lvalue(base, counts);
        }
        LValueKind::Subscript(base, idx) => {
            bump("lvalue:subscript");
            census_lvalue(base, counts);
            census(idx, counts);
        }
    }
}

fn census_decl(d: &Decl, counts: &mut BTreeMap<String, usize>) {
    let mut bump = |k: &str| *counts.entry(k.to_string()).or_default() += 1;
    match &d.kind {
        DeclKind::Type(_, spec) => {
            bump("decl:type");
            bump(match spec.kind {
                TypeSpecKind::Name(_) => "ty:name",
                TypeSpecKind::Record(_) => "ty:record",
                TypeSpecKind::Array(_) => "ty:array",
            });
        }
        DeclKind::Var(_, ty, init) => {
            bump(if ty.is_some() {
                "decl:var-typed"
            } else {
                "decl:var"
            });
            census(init, counts);
        }
        DeclKind::Fun(f) => {
            bump(if f.result.is_some() {
                "decl:function"
            } else {
                "decl:procedure"
            });
            census(&f.body, counts);
        }
    }
}

/// Counts n-queens solutions by trying every permutation of row indices
/// and rejecting those with two queens on a diagonal.
pub fn queens_oracle(n: usize) -> usize {
    fn permute(rows: &mut Vec<usize>, k: usize, count: &mut usize) {
        if k == rows.len() {
            let ok = (0..rows.len())
                .all(|a| (a + 1..rows.len()).all(|b| rows[a].abs_diff(rows[b]) != b - a));
            *count += ok as usize;
            return;
        }
        for i in k..rows.len() {
            rows.swap(k, i);
            permute(rows, k + 1, count);
            rows.swap(k, i);
        }
    }
    let mut rows: Vec<usize> = (0..n).collect();
    let mut count = 0;
    permute(&mut rows, 0, &mut count);
    count
}

/// The input sequence the mergesort program generates, sorted on the host.
pub fn mergesort_oracle() -> String {
    let mut seed: i64 = 12345;
    let mut values: Vec<i64> = (0..100)
        .map(|_| {
            seed = (seed * 1_103_515_245 + 12_345).rem_euclid(1 << 31);
            (seed >> 16) % 1000
        })
        .collect();
    values.sort_unstable();
    values.iter().map(|v| format!("{v}\n")).collect()
}
