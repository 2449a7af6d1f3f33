//! Assembly text to modules, and modules to executable form.

use std::collections::HashMap;
use std::rc::Rc;

use crate::ast::Pos;
use crate::diag::{Code, Diagnostic};
use crate::frontend::{tokenize, Literal, TokenKind};

use super::{BuiltinOp, Cmp, Function, Instr, Instruction, Line, Module};

/// A module with labels resolved to instruction indices and call targets
/// resolved to function indices.
#[derive(Debug)]
pub struct AssembledModule {
    pub name: String,
    pub strings: Vec<Rc<[u8]>>,
    pub procs: Vec<Proc>,
    pub main: usize,
}

#[derive(Debug)]
pub struct Proc {
    pub name: String,
    pub nparams: u32,
    pub nlocals: u32,
    pub code: Vec<Instr<usize, usize>>,
}

/// Source lines of a parsed module, kept for resolution diagnostics.
struct Lines {
    module: Module,
    fun_lines: Vec<Pos>,
    body_lines: Vec<Vec<Pos>>,
}

fn word_columns(text: &str) -> Vec<(u32, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s as u32 + 1, &text[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s as u32 + 1, &text[s..]));
    }
    out
}

fn is_label_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '$')
        && !s.starts_with('.')
}

/// Splits a `.str` operand into the quoted literal and what follows it.
fn split_quoted(rest: &str) -> Option<(&str, &str)> {
    let bytes = rest.as_bytes();
    if bytes.first() != Some(&b'"') {
        return None;
    }
    let mut i = 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'"' => return Some((&rest[..=i], &rest[i + 1..])),
            _ => i += 1,
        }
    }
    None
}

fn parse_string_literal(quoted: &str) -> Option<Vec<u8>> {
    let tokens = tokenize(quoted).ok()?;
    match tokens.as_slice() {
        [t, eof] if t.kind == TokenKind::Str && eof.kind == TokenKind::Eof => match &t.literal {
            Literal::Str(bytes) => Some(bytes.clone()),
            _ => None,
        },
        _ => None,
    }
}

struct Parser {
    diags: Vec<Diagnostic>,
}

impl Parser {
    fn error(&mut self, pos: Pos, code: Code, message: impl Into<String>) {
        self.diags.push(Diagnostic::new(pos, code, message));
    }

    fn number<T: std::str::FromStr>(
        &mut self,
        word: Option<&(u32, &str)>,
        line: u32,
        what: &str,
    ) -> Option<T> {
        match word {
            Some((col, text)) => match text.parse() {
                Ok(n) => Some(n),
                Err(_) => {
                    self.error(
                        Pos::new(line, *col),
                        Code::BadOperand,
                        format!("{what} expected, found '{text}'"),
                    );
                    None
                }
            },
            None => {
                self.error(
                    Pos::new(line, 1),
                    Code::BadOperand,
                    format!("missing {what}"),
                );
                None
            }
        }
    }

    fn instruction(&mut self, words: &[(u32, &str)], line: u32) -> Option<Instruction> {
        use Instr::*;
        let (col, m) = words[0];
        let ops = &words[1..];
        let want = |n: usize| ops.len() == n;
        let pos = Pos::new(line, col);
        let zero: Option<Instruction> = match m {
            "ldnil" => Some(Ldnil),
            "iadd" => Some(Iadd),
            "isub" => Some(Isub),
            "imul" => Some(Imul),
            "idiv" => Some(Idiv),
            "ineg" => Some(Ineg),
            "refeq" => Some(Refeq),
            "dup" => Some(Dup),
            "pop" => Some(Pop),
            "ret" => Some(Ret),
            "retv" => Some(Retv),
            "newarr" => Some(Newarr),
            "aget" => Some(Aget),
            "aset" => Some(Aset),
            "halt" => Some(Halt),
            _ => Cmp::ALL.into_iter().find(|c| c.mnemonic() == m).map(Icmp),
        };
        if let Some(ins) = zero {
            if !want(0) {
                self.error(pos, Code::BadOperand, format!("'{m}' takes no operands"));
                return None;
            }
            return Some(ins);
        }
        let arity = match m {
            "ldc" | "lds" | "iload" | "istore" | "aload" | "astore" | "newrec" | "getf"
            | "setf" | "goto" | "brz" | "brnz" => 1,
            "call" | "builtin" => 2,
            _ => {
                self.error(
                    pos,
                    Code::UnknownMnemonic,
                    format!("unknown mnemonic '{m}'"),
                );
                return None;
            }
        };
        if !want(arity) {
            self.error(
                pos,
                Code::BadOperand,
                format!("'{m}' takes {arity} operand(s)"),
            );
            return None;
        }
        let label = |s: &str| s.to_string();
        Some(match m {
            "ldc" => Ldc(self.number(ops.first(), line, "integer")?),
            "lds" => Lds(self.number(ops.first(), line, "pool index")?),
            "iload" => Iload(self.number(ops.first(), line, "slot")?),
            "istore" => Istore(self.number(ops.first(), line, "slot")?),
            "aload" => Aload(self.number(ops.first(), line, "slot")?),
            "astore" => Astore(self.number(ops.first(), line, "slot")?),
            "newrec" => Newrec(self.number(ops.first(), line, "field count")?),
            "getf" => Getf(self.number(ops.first(), line, "field index")?),
            "setf" => Setf(self.number(ops.first(), line, "field index")?),
            "goto" | "brz" | "brnz" => {
                let (c, l) = ops[0];
                if !is_label_name(l) {
                    self.error(
                        Pos::new(line, c),
                        Code::BadOperand,
                        format!("bad label '{l}'"),
                    );
                    return None;
                }
                match m {
                    "goto" => Goto(label(l)),
                    "brz" => Brz(label(l)),
                    _ => Brnz(label(l)),
                }
            }
            "call" => {
                let (c, f) = ops[0];
                if !is_label_name(f) {
                    self.error(
                        Pos::new(line, c),
                        Code::BadOperand,
                        format!("bad function name '{f}'"),
                    );
                    return None;
                }
                Call(label(f), self.number(ops.get(1), line, "argument count")?)
            }
            "builtin" => {
                let (c, name) = ops[0];
                let Some(op) = BuiltinOp::from_name(name) else {
                    self.error(
                        Pos::new(line, c),
                        Code::BadOperand,
                        format!("unknown builtin '{name}'"),
                    );
                    return None;
                };
                let n: u32 = self.number(ops.get(1), line, "argument count")?;
                if n != op.arity() {
                    self.error(
                        Pos::new(line, ops[1].0),
                        Code::BadOperand,
                        format!("builtin '{name}' takes {} argument(s)", op.arity()),
                    );
                    return None;
                }
                Builtin(op, n)
            }
            _ => unreachable!(),
        })
    }

    fn parse(&mut self, text: &str) -> Lines {
        let mut module = Module::default();
        let mut fun_lines = Vec::new();
        let mut body_lines = Vec::new();
        let mut current: Option<(Function, Pos, Vec<Pos>)> = None;
        let mut last_line = 1;
        for (n, raw) in text.lines().enumerate() {
            let line = n as u32 + 1;
            last_line = line;
            let trimmed = raw.trim_start();
            if let Some(rest) = trimmed.strip_prefix(".str") {
                let col = (raw.len() - trimmed.len()) as u32 + 1;
                let pos = Pos::new(line, col);
                let rest = rest.trim_start();
                let (k, rest) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
                let literal = split_quoted(rest.trim_start()).and_then(|(q, after)| {
                    let after = after.trim_start();
                    if after.is_empty() || after.starts_with(';') {
                        parse_string_literal(q)
                    } else {
                        None
                    }
                });
                match (k.parse::<usize>(), literal) {
                    (Ok(k), Some(bytes)) if k == module.strings.len() => module.strings.push(bytes),
                    (Ok(k), Some(_)) => self.error(
                        pos,
                        Code::BadOperand,
                        format!(
                            "string pool index {k} out of sequence; expected {}",
                            module.strings.len()
                        ),
                    ),
                    _ => self.error(pos, Code::BadOperand, "malformed string constant"),
                }
                continue;
            }
            let code = raw.split(';').next().unwrap_or("");
            let words = word_columns(code);
            let Some(&(col, first)) = words.first() else {
                continue;
            };
            let pos = Pos::new(line, col);
            match first {
                ".module" => match words.as_slice() {
                    [_, (_, name)] => module.name = name.to_string(),
                    _ => self.error(pos, Code::BadOperand, ".module takes one name"),
                },
                ".fun" => {
                    if current.is_some() {
                        self.error(pos, Code::BadOperand, "nested .fun; missing .end");
                    }
                    let header = match words.as_slice() {
                        [_, (c, name), np, nl] => {
                            let np: Option<u32> = self.number(Some(np), line, "parameter count");
                            let nl: Option<u32> = self.number(Some(nl), line, "local count");
                            match (np, nl) {
                                (Some(np), Some(nl)) if nl < np => {
                                    self.error(
                                        pos,
                                        Code::BadOperand,
                                        "fewer locals than parameters",
                                    );
                                    None
                                }
                                (Some(np), Some(nl)) if is_label_name(name) => {
                                    Some((name.to_string(), np, nl))
                                }
                                (Some(_), Some(_)) => {
                                    self.error(
                                        Pos::new(line, *c),
                                        Code::BadOperand,
                                        format!("bad function name '{name}'"),
                                    );
                                    None
                                }
                                _ => None,
                            }
                        }
                        _ => {
                            self.error(
                                pos,
                                Code::BadOperand,
                                ".fun takes a name, a parameter count and a local count",
                            );
                            None
                        }
                    };
                    let (name, nparams, nlocals) = header.unwrap_or_else(|| ("?".into(), 0, 0));
                    current = Some((
                        Function {
                            name,
                            nparams,
                            nlocals,
                            body: Vec::new(),
                        },
                        pos,
                        Vec::new(),
                    ));
                }
                ".end" => match current.take() {
                    Some((f, fpos, lines)) => {
                        module.functions.push(f);
                        fun_lines.push(fpos);
                        body_lines.push(lines);
                    }
                    None => self.error(pos, Code::BadOperand, ".end without .fun"),
                },
                _ if first.starts_with('.') => self.error(
                    pos,
                    Code::UnknownMnemonic,
                    format!("unknown directive '{first}'"),
                ),
                _ => {
                    let Some((func, _, lines)) = current.as_mut() else {
                        self.error(pos, Code::BadOperand, "instruction outside of a function");
                        continue;
                    };
                    if let Some(label) = first.strip_suffix(':') {
                        if words.len() != 1 || !is_label_name(label) {
                            self.error(pos, Code::BadOperand, format!("malformed label '{first}'"));
                            continue;
                        }
                        func.body.push(Line::Label(label.to_string()));
                        lines.push(pos);
                    } else if let Some(ins) = self.instruction(&words, line) {
                        func.body.push(Line::Ins(ins));
                        lines.push(pos);
                    }
                }
            }
        }
        if let Some((f, fpos, lines)) = current {
            self.error(
                Pos::new(last_line, 1),
                Code::BadOperand,
                format!("function '{}' is missing .end", f.name),
            );
            module.functions.push(f);
            fun_lines.push(fpos);
            body_lines.push(lines);
        }
        Lines {
            module,
            fun_lines,
            body_lines,
        }
    }

    fn resolve(&mut self, lines: Lines) -> Option<AssembledModule> {
        let Lines {
            module,
            fun_lines,
            body_lines,
        } = lines;
        let mut index = HashMap::new();
        for (i, f) in module.functions.iter().enumerate() {
            if index.insert(f.name.as_str(), i).is_some() {
                self.error(
                    fun_lines[i],
                    Code::DuplicateLabel,
                    format!("function '{}' defined twice", f.name),
                );
            }
        }
        let main = index.get("main").copied();
        match main {
            None => self.error(
                Pos::new(1, 1),
                Code::MissingMain,
                "module has no 'main' function",
            ),
            Some(m) if module.functions[m].nparams != 0 => {
                self.error(fun_lines[m], Code::BadOperand, "'main' takes no parameters")
            }
            _ => {}
        }
        let mut procs = Vec::new();
        for (fi, func) in module.functions.iter().enumerate() {
            let lines = &body_lines[fi];
            let mut labels = HashMap::new();
            let mut count = 0;
            for (li, line) in func.body.iter().enumerate() {
                match line {
                    Line::Label(l) => {
                        if labels.insert(l.as_str(), count).is_some() {
                            self.error(
                                lines[li],
                                Code::DuplicateLabel,
                                format!("label '{l}' defined twice"),
                            );
                        }
                    }
                    Line::Ins(_) => count += 1,
                }
            }
            let mut code = Vec::with_capacity(count);
            for (li, line) in func.body.iter().enumerate() {
                let Line::Ins(ins) = line else { continue };
                let pos = lines[li];
                match ins {
                    Instr::Iload(k) | Instr::Istore(k) | Instr::Aload(k) | Instr::Astore(k)
                        if *k >= func.nlocals =>
                    {
                        self.error(
                            pos,
                            Code::BadOperand,
                            format!("slot {k} exceeds the {} declared locals", func.nlocals),
                        );
                    }
                    Instr::Lds(k) if *k as usize >= module.strings.len() => {
                        self.error(pos, Code::BadOperand, format!("no string constant {k}"));
                    }
                    _ => {}
                }
                let resolved = map_targets(
                    ins,
                    |l| {
                        labels.get(l.as_str()).copied().ok_or_else(|| {
                            (
                                Code::NoSuchLabel,
                                format!("no label '{l}' in function '{}'", func.name),
                            )
                        })
                    },
                    |f, n| match index.get(f.as_str()) {
                        Some(&callee) if module.functions[callee].nparams == n => Ok(callee),
                        Some(&callee) => Err((
                            Code::BadOperand,
                            format!(
                                "'{f}' takes {} argument(s)",
                                module.functions[callee].nparams
                            ),
                        )),
                        None => Err((Code::NoSuchLabel, format!("no function '{f}'"))),
                    },
                );
                let resolved = resolved
                    .map_err(|(code, msg)| self.error(pos, code, msg))
                    .ok();
                if let Some(r) = resolved {
                    code.push(r);
                }
            }
            procs.push(Proc {
                name: func.name.clone(),
                nparams: func.nparams,
                nlocals: func.nlocals,
                code,
            });
        }
        if !self.diags.is_empty() {
            return None;
        }
        Some(AssembledModule {
            name: module.name,
            strings: module.strings.into_iter().map(Rc::from).collect(),
            procs,
            main: main?,
        })
    }
}

type Unresolved = (Code, String);

fn map_targets(
    ins: &Instruction,
    label: impl Fn(&String) -> Result<usize, Unresolved>,
    func: impl Fn(&String, u32) -> Result<usize, Unresolved>,
) -> Result<Instr<usize, usize>, Unresolved> {
    use Instr::*;
    Ok(match ins {
        Ldc(n) => Ldc(*n),
        Lds(k) => Lds(*k),
        Ldnil => Ldnil,
        Iload(k) => Iload(*k),
        Istore(k) => Istore(*k),
        Aload(k) => Aload(*k),
        Astore(k) => Astore(*k),
        Iadd => Iadd,
        Isub => Isub,
        Imul => Imul,
        Idiv => Idiv,
        Ineg => Ineg,
        Icmp(c) => Icmp(*c),
        Refeq => Refeq,
        Dup => Dup,
        Pop => Pop,
        Goto(l) => Goto(label(l)?),
        Brz(l) => Brz(label(l)?),
        Brnz(l) => Brnz(label(l)?),
        Call(f, n) => Call(func(f, *n)?, *n),
        Ret => Ret,
        Retv => Retv,
        Newrec(n) => Newrec(*n),
        Getf(i) => Getf(*i),
        Setf(i) => Setf(*i),
        Newarr => Newarr,
        Aget => Aget,
        Aset => Aset,
        Builtin(op, n) => Builtin(*op, *n),
        Halt => Halt,
    })
}

/// Parses assembly text without resolving labels.
pub fn parse_module(text: &str) -> Result<Module, Vec<Diagnostic>> {
    let mut p = Parser { diags: Vec::new() };
    let lines = p.parse(text);
    if p.diags.is_empty() {
        Ok(lines.module)
    } else {
        Err(p.diags)
    }
}

/// Parses and links assembly text. Diagnostics are positioned by line.
pub fn assemble(text: &str) -> Result<AssembledModule, Vec<Diagnostic>> {
    let mut p = Parser { diags: Vec::new() };
    let lines = p.parse(text);
    match p.resolve(lines) {
        Some(m) => Ok(m),
        None => {
            p.diags.sort_by_key(|d| (d.pos.line, d.pos.column));
            Err(p.diags)
        }
    }
}
