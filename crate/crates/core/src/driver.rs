//! Glue shared by the command line and the test suites: the static
//! pipeline, both execution paths, and their comparison.

use std::fmt;

use crate::ast::Exp;
use crate::codegen;
use crate::diag::Diagnostic;
use crate::frontend::parse_source;
use crate::interp::{self, Limits, Value};
use crate::semant;
use crate::vm;

/// Stack given to the thread that runs the tree-walking interpreter. Deep
/// Tiger recursion is deep Rust recursion there.
pub const INTERP_STACK: usize = 1 << 30;

/// Runs `f` on a thread with a large stack.
pub fn with_big_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(INTERP_STACK)
            .spawn_scoped(s, f)
            .expect("failed to spawn interpreter thread")
            .join()
            .unwrap_or_else(|e| std::panic::resume_unwind(e))
    })
}

/// Parses and analyzes; returns every diagnostic on failure.
pub fn front(source: &str) -> Result<Exp, Vec<Diagnostic>> {
    let program = parse_source(source)?;
    let analysis = semant::analyze(&program);
    if analysis.is_ok() {
        Ok(program)
    } else {
        Err(analysis.diagnostics)
    }
}

/// Compiles a checked program to assembly text.
pub fn compile_text(program: &Exp, module_name: &str) -> String {
    let mut module = codegen::compile(program);
    module.name = module_name.to_string();
    codegen::render(&module)
}

/// How a run ended, in terms both executors share.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Observed {
    Exit(i64),
    /// A runtime fault, by code name (`DIV_ZERO`, `STEP_BUDGET`, ...).
    Trap(String),
}

impl fmt::Display for Observed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observed::Exit(n) => write!(f, "exit({n})"),
            Observed::Trap(kind) => write!(f, "trap({kind})"),
        }
    }
}

pub fn observe_interp(outcome: &interp::Outcome) -> Observed {
    match outcome {
        interp::Outcome::Normal(Value::Int(n)) => Observed::Exit(*n),
        interp::Outcome::Normal(_) => Observed::Exit(0),
        interp::Outcome::Exit(n) => Observed::Exit(*n),
        interp::Outcome::RuntimeError(d) => Observed::Trap(d.code.as_str().to_string()),
        interp::Outcome::BudgetExceeded => Observed::Trap("STEP_BUDGET".into()),
    }
}

pub fn observe_vm(outcome: &vm::Outcome) -> Observed {
    match outcome {
        vm::Outcome::Exit(n) => Observed::Exit(*n),
        vm::Outcome::Trap(t) => Observed::Trap(t.kind.as_str().to_string()),
    }
}

#[derive(Clone, Debug)]
pub struct Run {
    pub stdout: Vec<u8>,
    pub observed: Observed,
    /// The runtime diagnostic or trap report, when there is one.
    pub detail: Option<String>,
}

impl Run {
    pub fn same(&self, other: &Run) -> bool {
        self.stdout == other.stdout && self.observed == other.observed
    }
}

/// Interpreter half of a differential run.
pub fn run_interp(program: &Exp, stdin: &[u8], budget: Option<u64>) -> Run {
    with_big_stack(|| {
        let (stdout, outcome) = interp::run_bytes(
            program,
            stdin,
            Limits {
                step_budget: budget,
            },
        );
        let detail = match &outcome {
            interp::Outcome::RuntimeError(d) => Some(d.to_string()),
            _ => None,
        };
        Run {
            stdout,
            observed: observe_interp(&outcome),
            detail,
        }
    })
}

/// Compiler half: compile, render, assemble the text, execute.
pub fn run_compiled(program: &Exp, stdin: &[u8], budget: Option<u64>) -> Run {
    let text = compile_text(program, "main");
    let module = vm::assemble(&text)
        .unwrap_or_else(|d| panic!("generated assembly does not assemble: {d:?}\n{text}"));
    let (stdout, outcome) = vm::execute_bytes(&module, stdin, budget);
    let detail = match &outcome {
        vm::Outcome::Trap(t) => Some(t.to_string()),
        vm::Outcome::Exit(_) => None,
    };
    Run {
        stdout,
        observed: observe_vm(&outcome),
        detail,
    }
}

#[derive(Clone, Debug)]
pub struct Diff {
    pub interp: Run,
    pub compiled: Run,
}

impl Diff {
    pub fn agrees(&self) -> bool {
        self.interp.same(&self.compiled)
    }

    /// A short account of the first difference.
    pub fn explain(&self) -> String {
        if self.interp.observed != self.compiled.observed {
            return format!(
                "outcome differs: interpreter {}, compiled {}",
                self.interp.observed, self.compiled.observed
            );
        }
        let (a, b) = (&self.interp.stdout, &self.compiled.stdout);
        let at = a.iter().zip(b.iter()).take_while(|(x, y)| x == y).count();
        if a == b {
            "identical".into()
        } else {
            format!(
                "stdout differs at byte {at}: interpreter wrote {} bytes, compiled wrote {}",
                a.len(),
                b.len()
            )
        }
    }
}

/// Runs a checked program both ways on the same input.
pub fn diff(program: &Exp, stdin: &[u8], budget: Option<u64>) -> Diff {
    Diff {
        interp: run_interp(program, stdin, budget),
        compiled: run_compiled(program, stdin, budget),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deep_recursion_fits_the_interpreter_stack() {
        let src = "let function d(n: int): int = if n = 0 then 0 else 1 + d(n - 1) in d(9999) end";
        let prog = front(src).unwrap();
        let d = diff(&prog, b"", None);
        assert!(d.agrees(), "{}", d.explain());
        assert_eq!(d.interp.observed, Observed::Exit(9999));
        let src = "let function d(n: int): int = if n = 0 then 0 else 1 + d(n - 1) in d(10000) end";
        let d = diff(&front(src).unwrap(), b"", None);
        assert_eq!(d.interp.observed, Observed::Trap("STACK_OVERFLOW".into()));
        assert!(d.agrees(), "{}", d.explain());
    }

    #[test]
    fn traps_compare_by_kind() {
        let d = diff(&front("(print(\"x\"); 1 / 0)").unwrap(), b"", None);
        assert!(d.agrees());
        assert_eq!(d.compiled.stdout, b"x");
        assert_eq!(d.compiled.observed, Observed::Trap("DIV_ZERO".into()));
    }
}
