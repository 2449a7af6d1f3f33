use std::fmt;
use std::io::{Read, Write};
use std::rc::Rc;

use crate::stdlib::{MAX_ARRAY_LEN, MAX_CALL_DEPTH};

use super::asm::AssembledModule;
use super::builtins::{call_builtin, Fault};
use super::Instr;

/// Total heap words (record fields plus array elements) the machine will
/// allocate before trapping. There is no collector.
pub const MAX_HEAP_WORDS: usize = 1 << 25;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Str(Rc<[u8]>),
    Ref(usize),
    Nil,
}

impl Value {
    fn tag(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Str(_) => "string",
            Value::Ref(_) => "reference",
            Value::Nil => "nil",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TrapKind {
    DivZero,
    NilDeref,
    IndexOob,
    StackUnderflow,
    BadTag,
    NoSuchLabel,
    StepBudget,
    BadArg,
    HeapExhausted,
    StackOverflow,
}

impl TrapKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TrapKind::DivZero => "DIV_ZERO",
            TrapKind::NilDeref => "NIL_DEREF",
            TrapKind::IndexOob => "INDEX_OOB",
            TrapKind::StackUnderflow => "STACK_UNDERFLOW",
            TrapKind::BadTag => "BAD_TAG",
            TrapKind::NoSuchLabel => "NO_SUCH_LABEL",
            TrapKind::StepBudget => "STEP_BUDGET",
            TrapKind::BadArg => "BAD_ARG",
            TrapKind::HeapExhausted => "HEAP_EXHAUSTED",
            TrapKind::StackOverflow => "STACK_OVERFLOW",
        }
    }
}

impl fmt::Display for TrapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trap {
    pub kind: TrapKind,
    pub function: String,
    /// Index of the faulting instruction within its function.
    pub index: usize,
    pub message: String,
}

impl fmt::Display for Trap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "trap[{}] in {} at instruction {}: {}",
            self.kind, self.function, self.index, self.message
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Exit(i64),
    Trap(Trap),
}

enum Obj {
    Record(Vec<Value>),
    Array(Vec<Value>),
}

struct Frame {
    proc: usize,
    pc: usize,
    locals: usize,
    stack: usize,
}

enum Stop {
    Trap(TrapKind, String),
    Exit(i64),
}

type Step<T = ()> = Result<T, Stop>;

fn trap<T>(kind: TrapKind, message: impl Into<String>) -> Step<T> {
    Err(Stop::Trap(kind, message.into()))
}

struct Machine<'m, 'io> {
    module: &'m AssembledModule,
    frames: Vec<Frame>,
    stack: Vec<Value>,
    locals: Vec<Value>,
    heap: Vec<Obj>,
    heap_words: usize,
    input: &'io mut dyn Read,
    output: &'io mut dyn Write,
}

impl Machine<'_, '_> {
    fn frame(&self) -> &Frame {
        self.frames.last().expect("no active frame")
    }

    fn pop(&mut self) -> Step<Value> {
        if self.stack.len() <= self.frame().stack {
            return trap(TrapKind::StackUnderflow, "operand stack is empty");
        }
        Ok(self.stack.pop().unwrap())
    }

    fn pop_int(&mut self) -> Step<i64> {
        match self.pop()? {
            Value::Int(n) => Ok(n),
            v => trap(TrapKind::BadTag, format!("expected int, found {}", v.tag())),
        }
    }

    fn local(&mut self, k: u32) -> &mut Value {
        let at = self.frame().locals + k as usize;
        &mut self.locals[at]
    }

    fn alloc(&mut self, obj: Obj) -> Step<Value> {
        let words = match &obj {
            Obj::Record(f) => f.len(),
            Obj::Array(e) => e.len(),
        };
        if self.heap_words + words > MAX_HEAP_WORDS {
            return trap(TrapKind::HeapExhausted, "heap exhausted");
        }
        self.heap_words += words;
        self.heap.push(obj);
        Ok(Value::Ref(self.heap.len() - 1))
    }

    fn record(&mut self, v: Value, field: u32) -> Step<&mut Value> {
        let at = match v {
            Value::Ref(at) => at,
            Value::Nil => return trap(TrapKind::NilDeref, "field access on nil"),
            v => return trap(TrapKind::BadTag, format!("field access on {}", v.tag())),
        };
        match &mut self.heap[at] {
            Obj::Record(fields) if (field as usize) < fields.len() => {
                Ok(&mut fields[field as usize])
            }
            _ => trap(TrapKind::BadTag, format!("no field {field} in object")),
        }
    }

    fn element(&mut self, v: Value, index: Value) -> Step<&mut Value> {
        let at = match v {
            Value::Ref(at) => at,
            Value::Nil => return trap(TrapKind::NilDeref, "subscript of nil"),
            v => return trap(TrapKind::BadTag, format!("subscript on {}", v.tag())),
        };
        let Value::Int(i) = index else {
            return trap(TrapKind::BadTag, format!("index is {}", index.tag()));
        };
        let Obj::Array(elems) = &mut self.heap[at] else {
            return trap(TrapKind::BadTag, "subscript on a record");
        };
        let len = elems.len();
        match usize::try_from(i) {
            Ok(k) if k < len => Ok(&mut elems[k]),
            _ => trap(
                TrapKind::IndexOob,
                format!("index {i} out of bounds for array of length {len}"),
            ),
        }
    }

    fn jump(&mut self, target: usize) {
        self.frames.last_mut().unwrap().pc = target;
    }

    /// Leaves the current function, returning the exit code when it was
    /// `main`.
    fn leave(&mut self, result: Option<Value>) -> Step<Option<i64>> {
        let frame = self.frames.pop().unwrap();
        self.stack.truncate(frame.stack);
        self.locals.truncate(frame.locals);
        if self.frames.is_empty() {
            return Ok(Some(match result {
                Some(Value::Int(n)) => n,
                _ => 0,
            }));
        }
        if let Some(v) = result {
            self.stack.push(v);
        }
        Ok(None)
    }

    fn step(&mut self, ins: &Instr<usize, usize>) -> Step<Option<i64>> {
        use Instr::*;
        match ins {
            Ldc(n) => self.stack.push(Value::Int(*n)),
            Lds(k) => self
                .stack
                .push(Value::Str(self.module.strings[*k as usize].clone())),
            Ldnil => self.stack.push(Value::Nil),
            Iload(k) => match self.local(*k).clone() {
                v @ Value::Int(_) => self.stack.push(v),
                v => return trap(TrapKind::BadTag, format!("iload of {}", v.tag())),
            },
            Aload(k) => match self.local(*k).clone() {
                Value::Int(_) => return trap(TrapKind::BadTag, "aload of int"),
                v => self.stack.push(v),
            },
            Istore(k) => {
                let n = self.pop_int()?;
                *self.local(*k) = Value::Int(n);
            }
            Astore(k) => match self.pop()? {
                Value::Int(_) => return trap(TrapKind::BadTag, "astore of int"),
                v => *self.local(*k) = v,
            },
            Iadd | Isub | Imul | Idiv | Icmp(_) => {
                let b = self.pop_int()?;
                let a = self.pop_int()?;
                let r = match ins {
                    Iadd => a.wrapping_add(b),
                    Isub => a.wrapping_sub(b),
                    Imul => a.wrapping_mul(b),
                    Idiv if b == 0 => return trap(TrapKind::DivZero, "division by zero"),
                    Idiv => a.wrapping_div(b),
                    Icmp(c) => c.test(a, b) as i64,
                    _ => unreachable!(),
                };
                self.stack.push(Value::Int(r));
            }
            Ineg => {
                let a = self.pop_int()?;
                self.stack.push(Value::Int(a.wrapping_neg()));
            }
            Refeq => {
                let b = self.pop()?;
                let a = self.pop()?;
                match (&a, &b) {
                    (Value::Ref(_) | Value::Nil, Value::Ref(_) | Value::Nil) => {
                        self.stack.push(Value::Int((a == b) as i64))
                    }
                    _ => {
                        return trap(
                            TrapKind::BadTag,
                            format!("refeq on {} and {}", a.tag(), b.tag()),
                        )
                    }
                }
            }
            Dup => {
                let v = self.pop()?;
                self.stack.push(v.clone());
                self.stack.push(v);
            }
            Pop => {
                self.pop()?;
            }
            Goto(t) => self.jump(*t),
            Brz(t) | Brnz(t) => {
                let v = self.pop_int()?;
                if (v == 0) == matches!(ins, Brz(_)) {
                    self.jump(*t);
                }
            }
            Call(f, n) => {
                if self.frames.len() > MAX_CALL_DEPTH {
                    return trap(
                        TrapKind::StackOverflow,
                        format!("call nesting exceeds {MAX_CALL_DEPTH}"),
                    );
                }
                let n = *n as usize;
                if self.stack.len() < self.frame().stack + n {
                    return trap(TrapKind::StackUnderflow, "missing call arguments");
                }
                let callee = &self.module.procs[*f];
                let base = self.stack.len() - n;
                let locals = self.locals.len();
                self.locals.extend(self.stack.drain(base..));
                self.locals
                    .resize(locals + callee.nlocals as usize, Value::Nil);
                self.frames.push(Frame {
                    proc: *f,
                    pc: 0,
                    locals,
                    stack: self.stack.len(),
                });
            }
            Ret => return self.leave(None),
            Retv => {
                let v = self.pop()?;
                return self.leave(Some(v));
            }
            Newrec(n) => {
                let v = self.alloc(Obj::Record(vec![Value::Nil; *n as usize]))?;
                self.stack.push(v);
            }
            Getf(i) => {
                let r = self.pop()?;
                let v = self.record(r, *i)?.clone();
                self.stack.push(v);
            }
            Setf(i) => {
                let v = self.pop()?;
                let r = self.pop()?;
                *self.record(r, *i)? = v;
            }
            Newarr => {
                let init = self.pop()?;
                let n = self.pop_int()?;
                if n < 0 {
                    return trap(TrapKind::BadArg, format!("negative array size {n}"));
                }
                if n > MAX_ARRAY_LEN {
                    return trap(
                        TrapKind::HeapExhausted,
                        format!("array of {n} elements exceeds the heap limit"),
                    );
                }
                let v = self.alloc(Obj::Array(vec![init; n as usize]))?;
                self.stack.push(v);
            }
            Aget => {
                let i = self.pop()?;
                let a = self.pop()?;
                let v = self.element(a, i)?.clone();
                self.stack.push(v);
            }
            Aset => {
                let v = self.pop()?;
                let i = self.pop()?;
                let a = self.pop()?;
                *self.element(a, i)? = v;
            }
            Builtin(op, n) => {
                let n = *n as usize;
                if self.stack.len() < self.frame().stack + n {
                    return trap(TrapKind::StackUnderflow, "missing builtin arguments");
                }
                let args: Vec<Value> = self.stack.drain(self.stack.len() - n..).collect();
                match call_builtin(*op, &args, self.input, self.output) {
                    Ok(Some(v)) => self.stack.push(v),
                    Ok(None) => {}
                    Err(Fault::Exit(code)) => return Err(Stop::Exit(code)),
                    Err(Fault::Trap(kind, msg)) => return trap(kind, msg),
                }
            }
            Halt => return Err(Stop::Exit(self.pop_int()?)),
        }
        Ok(None)
    }
}

/// Runs `main` to completion, a trap, or the step budget. Exactly `budget`
/// instructions execute before a `STEP_BUDGET` trap.
pub fn execute(
    module: &AssembledModule,
    input: &mut dyn Read,
    output: &mut dyn Write,
    budget: Option<u64>,
) -> Outcome {
    let main = &module.procs[module.main];
    let mut m = Machine {
        module,
        frames: vec![Frame {
            proc: module.main,
            pc: 0,
            locals: 0,
            stack: 0,
        }],
        stack: Vec::new(),
        locals: vec![Value::Nil; main.nlocals as usize],
        heap: Vec::new(),
        heap_words: 0,
        input,
        output,
    };
    let mut steps = 0u64;
    let outcome = loop {
        let (proc, pc) = {
            let f = m.frame();
            (f.proc, f.pc)
        };
        let code = &module.procs[proc].code;
        let make_trap = |kind, message| {
            Outcome::Trap(Trap {
                kind,
                function: module.procs[proc].name.clone(),
                index: pc,
                message,
            })
        };
        if budget.is_some_and(|b| steps >= b) {
            break make_trap(
                TrapKind::StepBudget,
                format!("step budget of {steps} exhausted"),
            );
        }
        let Some(ins) = code.get(pc) else {
            break make_trap(
                TrapKind::NoSuchLabel,
                "control fell off the end of the function".into(),
            );
        };
        steps += 1;
        m.frames.last_mut().unwrap().pc = pc + 1;
        match m.step(ins) {
            Ok(None) => {}
            Ok(Some(code)) => break Outcome::Exit(code),
            Err(Stop::Exit(code)) => break Outcome::Exit(code),
            Err(Stop::Trap(kind, message)) => break make_trap(kind, message),
        }
    };
    m.output.flush().ok();
    outcome
}

/// Runs with in-memory streams and returns the captured output.
pub fn execute_bytes(
    module: &AssembledModule,
    stdin: &[u8],
    budget: Option<u64>,
) -> (Vec<u8>, Outcome) {
    let mut input = stdin;
    let mut out = Vec::new();
    let outcome = execute(module, &mut input, &mut out, budget);
    (out, outcome)
}
