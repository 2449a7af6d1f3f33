use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tiger::diag::Diagnostic;
use tiger::driver::{self, with_big_stack};
use tiger::frontend::{parse_source, pretty};
use tiger::interp::{self, Limits, Value};
use tiger::semant;
use tiger::vm;

const STATIC_ERROR: u8 = 1;
const RUNTIME_ERROR: u8 = 2;
const USAGE_ERROR: u8 = 3;

/// Tiger toolkit: pretty-printer, checker, interpreter, compiler and VM.
#[derive(Parser)]
#[command(name = "tiger", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the program in canonical form.
    Pretty(Input),
    /// Report static errors; silent when the program is well formed.
    Check(Input),
    /// Interpret a program.
    Run {
        #[command(flatten)]
        input: Input,
        /// Skip the analyzer and rely on dynamic checks alone.
        #[arg(long)]
        no_typecheck: bool,
        #[command(flatten)]
        exec: ExecOpts,
    },
    /// Compile a program to VM assembly.
    Compile {
        #[command(flatten)]
        input: Input,
        /// Output path; standard output when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Assemble and execute a `.tvm` file.
    Exec {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        exec: ExecOpts,
    },
    /// Run a program with the interpreter and compiled, and compare.
    Diff {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        exec: ExecOpts,
    },
}

#[derive(Args)]
struct Input {
    /// Source path, or `-` for standard input.
    path: String,
}

#[derive(Args)]
struct ExecOpts {
    /// Stop after this many steps.
    #[arg(long)]
    budget: Option<u64>,
    /// Read program input from this file instead of standard input.
    #[arg(long)]
    stdin_file: Option<PathBuf>,
}

struct Failure(u8);

type Outcome = Result<u8, Failure>;

impl Input {
    fn display_name(&self) -> &str {
        if self.path == "-" {
            "<stdin>"
        } else {
            &self.path
        }
    }

    fn read(&self) -> Result<String, Failure> {
        let result = if self.path == "-" {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).map(|_| s)
        } else {
            fs::read_to_string(&self.path)
        };
        result.map_err(|e| {
            eprintln!("tiger: cannot read {}: {e}", self.display_name());
            Failure(USAGE_ERROR)
        })
    }
}

impl ExecOpts {
    /// Program input: the named file, or whatever is left on stdin.
    fn stdin(&self) -> Result<Vec<u8>, Failure> {
        match &self.stdin_file {
            Some(path) => fs::read(path).map_err(|e| {
                eprintln!("tiger: cannot read {}: {e}", path.display());
                Failure(USAGE_ERROR)
            }),
            None => {
                let mut buf = Vec::new();
                io::stdin().read_to_end(&mut buf).ok();
                Ok(buf)
            }
        }
    }
}

fn report(file: &str, diags: &[Diagnostic]) -> Failure {
    for d in diags {
        eprintln!("{}", d.render(file));
    }
    Failure(STATIC_ERROR)
}

/// Process status for a program exit code.
fn status(code: i64) -> u8 {
    (code & 0xff) as u8
}

fn module_name(input: &Input) -> String {
    Path::new(&input.path)
        .file_stem()
        .and_then(|s| s.to_str())
        .filter(|s| input.path != "-" && !s.is_empty() && !s.contains(char::is_whitespace))
        .unwrap_or("main")
        .to_string()
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Pretty(input) => {
            let src = input.read()?;
            let prog = parse_source(&src).map_err(|d| report(input.display_name(), &d))?;
            print!("{}", pretty(&prog));
            Ok(0)
        }
        Command::Check(input) => {
            let src = input.read()?;
            driver::front(&src).map_err(|d| report(input.display_name(), &d))?;
            Ok(0)
        }
        Command::Run {
            input,
            no_typecheck,
            exec,
        } => {
            let src = input.read()?;
            let file = input.display_name();
            let prog = parse_source(&src).map_err(|d| report(file, &d))?;
            if !no_typecheck {
                let analysis = semant::analyze(&prog);
                if !analysis.is_ok() {
                    return Err(report(file, &analysis.diagnostics));
                }
            }
            let stdin = exec.stdin()?;
            let limits = Limits {
                step_budget: exec.budget,
            };
            let result = with_big_stack(|| {
                let mut input = stdin.as_slice();
                let stdout = io::stdout();
                let mut out = stdout.lock();
                match interp::run(&prog, &mut input, &mut out, limits) {
                    interp::Outcome::Normal(Value::Int(n)) => Ok(status(n)),
                    interp::Outcome::Normal(_) => Ok(0),
                    interp::Outcome::Exit(n) => Ok(status(n)),
                    interp::Outcome::RuntimeError(d) => Err(d.render(file)),
                    interp::Outcome::BudgetExceeded => {
                        Err(format!("{file}: error[STEP_BUDGET]: step budget exhausted"))
                    }
                }
            });
            result.map_err(|msg| {
                eprintln!("{msg}");
                Failure(RUNTIME_ERROR)
            })
        }
        Command::Compile { input, output } => {
            let src = input.read()?;
            let prog = driver::front(&src).map_err(|d| report(input.display_name(), &d))?;
            let text = driver::compile_text(&prog, &module_name(&input));
            match output {
                Some(path) => fs::write(&path, text).map_err(|e| {
                    eprintln!("tiger: cannot write {}: {e}", path.display());
                    Failure(USAGE_ERROR)
                })?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::Exec { input, exec } => {
            let text = input.read()?;
            let module = vm::assemble(&text).map_err(|d| report(input.display_name(), &d))?;
            let stdin = exec.stdin()?;
            let stdout = io::stdout();
            let mut out = stdout.lock();
            match vm::execute(&module, &mut stdin.as_slice(), &mut out, exec.budget) {
                vm::Outcome::Exit(n) => Ok(status(n)),
                vm::Outcome::Trap(t) => {
                    out.flush().ok();
                    eprintln!("{}: {t}", input.display_name());
                    Err(Failure(RUNTIME_ERROR))
                }
            }
        }
        Command::Diff { input, exec } => {
            let src = input.read()?;
            let prog = driver::front(&src).map_err(|d| report(input.display_name(), &d))?;
            let stdin = exec.stdin()?;
            let d = driver::diff(&prog, &stdin, exec.budget);
            if d.agrees() {
                println!("PASS");
                Ok(0)
            } else {
                println!("FAIL");
                eprintln!("{}: {}", input.display_name(), d.explain());
                Err(Failure(RUNTIME_ERROR))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE_ERROR } else { 0 };
            e.print().ok();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) | Err(Failure(code)) => ExitCode::from(code),
    }
}
