//! The target machine: a small stack VM with a textual assembly format.
//!
//! A module is a string pool plus a list of functions. Each function has
//! `nparams` argument slots followed by scratch locals, all word sized, and
//! its own operand stack segment. Branch labels are local to a function.

mod asm;
mod builtins;
mod exec;

use std::fmt;

use crate::frontend::escape_string;

pub use asm::{assemble, parse_module, AssembledModule};
pub use builtins::{call_builtin, Fault};
pub use exec::{execute, execute_bytes, Outcome, Trap, TrapKind, Value, MAX_HEAP_WORDS};

/// One instruction. `L` is the branch-target type and `F` the call-target
/// type: label names in text form, indices once assembled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instr<L, F> {
    Ldc(i64),
    Lds(u32),
    Ldnil,
    Iload(u32),
    Istore(u32),
    Aload(u32),
    Astore(u32),
    Iadd,
    Isub,
    Imul,
    Idiv,
    Ineg,
    Icmp(Cmp),
    Refeq,
    Dup,
    Pop,
    Goto(L),
    Brz(L),
    Brnz(L),
    Call(F, u32),
    Ret,
    Retv,
    Newrec(u32),
    Getf(u32),
    Setf(u32),
    Newarr,
    Aget,
    Aset,
    Builtin(BuiltinOp, u32),
    Halt,
}

pub type Instruction = Instr<String, String>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cmp {
    pub const ALL: [Cmp; 6] = [Cmp::Eq, Cmp::Ne, Cmp::Lt, Cmp::Le, Cmp::Gt, Cmp::Ge];

    pub fn mnemonic(self) -> &'static str {
        match self {
            Cmp::Eq => "icmpeq",
            Cmp::Ne => "icmpne",
            Cmp::Lt => "icmplt",
            Cmp::Le => "icmple",
            Cmp::Gt => "icmpgt",
            Cmp::Ge => "icmpge",
        }
    }

    pub fn test(self, a: i64, b: i64) -> bool {
        match self {
            Cmp::Eq => a == b,
            Cmp::Ne => a != b,
            Cmp::Lt => a < b,
            Cmp::Le => a <= b,
            Cmp::Gt => a > b,
            Cmp::Ge => a >= b,
        }
    }
}

/// Runtime library entry points callable with `builtin name n`. `strcmp`
/// is internal: the code generator uses it for string comparisons.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BuiltinOp {
    Print,
    Flush,
    Getchar,
    Ord,
    Chr,
    Size,
    Substring,
    Concat,
    Not,
    Exit,
    Strcmp,
}

impl BuiltinOp {
    pub const ALL: [BuiltinOp; 11] = [
        BuiltinOp::Print,
        BuiltinOp::Flush,
        BuiltinOp::Getchar,
        BuiltinOp::Ord,
        BuiltinOp::Chr,
        BuiltinOp::Size,
        BuiltinOp::Substring,
        BuiltinOp::Concat,
        BuiltinOp::Not,
        BuiltinOp::Exit,
        BuiltinOp::Strcmp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinOp::Print => "print",
            BuiltinOp::Flush => "flush",
            BuiltinOp::Getchar => "getchar",
            BuiltinOp::Ord => "ord",
            BuiltinOp::Chr => "chr",
            BuiltinOp::Size => "size",
            BuiltinOp::Substring => "substring",
            BuiltinOp::Concat => "concat",
            BuiltinOp::Not => "not",
            BuiltinOp::Exit => "exit",
            BuiltinOp::Strcmp => "strcmp",
        }
    }

    pub fn from_name(name: &str) -> Option<BuiltinOp> {
        BuiltinOp::ALL.into_iter().find(|b| b.name() == name)
    }

    pub fn arity(self) -> u32 {
        match self {
            BuiltinOp::Flush | BuiltinOp::Getchar => 0,
            BuiltinOp::Print
            | BuiltinOp::Ord
            | BuiltinOp::Chr
            | BuiltinOp::Size
            | BuiltinOp::Not
            | BuiltinOp::Exit => 1,
            BuiltinOp::Concat | BuiltinOp::Strcmp => 2,
            BuiltinOp::Substring => 3,
        }
    }

    pub fn returns_value(self) -> bool {
        !matches!(self, BuiltinOp::Print | BuiltinOp::Flush | BuiltinOp::Exit)
    }
}

impl<L, F> Instr<L, F> {
    pub fn mnemonic(&self) -> &'static str {
        use Instr::*;
        match self {
            Ldc(_) => "ldc",
            Lds(_) => "lds",
            Ldnil => "ldnil",
            Iload(_) => "iload",
            Istore(_) => "istore",
            Aload(_) => "aload",
            Astore(_) => "astore",
            Iadd => "iadd",
            Isub => "isub",
            Imul => "imul",
            Idiv => "idiv",
            Ineg => "ineg",
            Icmp(c) => c.mnemonic(),
            Refeq => "refeq",
            Dup => "dup",
            Pop => "pop",
            Goto(_) => "goto",
            Brz(_) => "brz",
            Brnz(_) => "brnz",
            Call(..) => "call",
            Ret => "ret",
            Retv => "retv",
            Newrec(_) => "newrec",
            Getf(_) => "getf",
            Setf(_) => "setf",
            Newarr => "newarr",
            Aget => "aget",
            Aset => "aset",
            Builtin(..) => "builtin",
            Halt => "halt",
        }
    }

    /// Operand-stack effect as `(pops, pushes)`. `returns` says whether a
    /// call target produces a value.
    pub fn stack_effect(&self, returns: impl Fn(&F) -> bool) -> (u32, u32) {
        use Instr::*;
        match self {
            Ldc(_) | Lds(_) | Ldnil | Iload(_) | Aload(_) | Newrec(_) => (0, 1),
            Dup => (1, 2),
            Istore(_) | Astore(_) | Pop | Brz(_) | Brnz(_) | Retv | Halt => (1, 0),
            Iadd | Isub | Imul | Idiv | Icmp(_) | Refeq | Newarr | Aget => (2, 1),
            Ineg | Getf(_) => (1, 1),
            Goto(_) | Ret => (0, 0),
            Setf(_) => (2, 0),
            Aset => (3, 0),
            Call(f, n) => (*n, returns(f) as u32),
            Builtin(op, n) => (*n, op.returns_value() as u32),
        }
    }

    /// The branch target, if any.
    pub fn target(&self) -> Option<&L> {
        match self {
            Instr::Goto(l) | Instr::Brz(l) | Instr::Brnz(l) => Some(l),
            _ => None,
        }
    }

    /// True when control never continues to the next instruction.
    pub fn ends_block(&self) -> bool {
        matches!(
            self,
            Instr::Goto(_) | Instr::Ret | Instr::Retv | Instr::Halt
        )
    }
}

impl<L: fmt::Display, F: fmt::Display> fmt::Display for Instr<L, F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Instr::*;
        let m = self.mnemonic();
        match self {
            Ldc(n) => write!(f, "{m} {n}"),
            Lds(k) | Iload(k) | Istore(k) | Aload(k) | Astore(k) | Newrec(k) | Getf(k)
            | Setf(k) => write!(f, "{m} {k}"),
            Goto(l) | Brz(l) | Brnz(l) => write!(f, "{m} {l}"),
            Call(target, n) => write!(f, "{m} {target} {n}"),
            Builtin(op, n) => write!(f, "{m} {} {n}", op.name()),
            _ => f.write_str(m),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Line {
    Label(String),
    Ins(Instruction),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Function {
    pub name: String,
    pub nparams: u32,
    pub nlocals: u32,
    pub body: Vec<Line>,
}

/// A module in text form: what the code generator produces and what the
/// assembler parses back.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Module {
    pub name: String,
    pub strings: Vec<Vec<u8>>,
    pub functions: Vec<Function>,
}

impl Module {
    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }
}

/// Renders the assembly text accepted by [`assemble`].
pub fn render(module: &Module) -> String {
    let mut out = String::new();
    out.push_str(&format!(".module {}\n", module.name));
    for (k, s) in module.strings.iter().enumerate() {
        out.push_str(&format!(".str {k} {}\n", escape_string(s)));
    }
    for func in &module.functions {
        out.push_str(&format!(
            "\n.fun {} {} {}\n",
            func.name, func.nparams, func.nlocals
        ));
        for line in &func.body {
            match line {
                Line::Label(l) => out.push_str(&format!("{l}:\n")),
                Line::Ins(i) => out.push_str(&format!("  {i}\n")),
            }
        }
        out.push_str(".end\n");
    }
    out
}

impl fmt::Display for Module {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}
