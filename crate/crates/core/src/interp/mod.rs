//! Tree-walking interpreter: the executable reference semantics.
//!
//! Environments are chains of immutable-shape scopes whose variable entries
//! hold shared mutable cells, so nested functions see (and update) the
//! enclosing locals in force where they were declared. Every tag assumption
//! is checked at run time; on analyzer-approved programs those checks never
//! fire.

mod builtins;
mod value;

use std::cell::RefCell;
use std::collections::HashMap;
use std::io::{Read, Write};
use std::rc::{Rc, Weak};

use crate::ast::*;
use crate::diag::{Code, Diagnostic};
use crate::stdlib::{self, BuiltinSig, MAX_ARRAY_LEN, MAX_CALL_DEPTH};

pub use builtins::{call_builtin, BuiltinFault};
pub use value::{ArrayCell, RecordCell, Value};

#[derive(Clone, Copy, Debug, Default)]
pub struct Limits {
    /// Maximum number of expression evaluations; `None` is unlimited.
    pub step_budget: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Normal(Value),
    RuntimeError(Diagnostic),
    Exit(i64),
    BudgetExceeded,
}

enum Unwind {
    Break(Pos),
    Error(Diagnostic),
    Exit(i64),
    Budget,
}

type Eval = Result<Value, Unwind>;

fn fault(pos: Pos, code: Code, message: impl Into<String>) -> Unwind {
    Unwind::Error(Diagnostic::new(pos, code, message))
}

fn bad_tag(pos: Pos, message: impl Into<String>) -> Unwind {
    fault(pos, Code::BadTag, message)
}

enum Entry<'a> {
    Var {
        cell: Rc<RefCell<Value>>,
        assignable: bool,
    },
    Fun {
        decl: &'a FunDecl,
        // The declaring scope owns this entry, and a function can only be
        // reached through that scope, so the link is alive at every call.
        env: Weak<Scope<'a>>,
    },
    Builtin(&'static BuiltinSig),
}

#[derive(Default)]
struct Scope<'a> {
    parent: Option<Rc<Scope<'a>>>,
    vars: RefCell<HashMap<Symbol, Entry<'a>>>,
    types: HashMap<Symbol, &'a TypeSpec>,
}

type Env<'a> = Rc<Scope<'a>>;

fn lookup_var<'e, 'a>(
    mut scope: &'e Scope<'a>,
    name: Symbol,
) -> Option<std::cell::Ref<'e, Entry<'a>>> {
    loop {
        let vars = scope.vars.borrow();
        if vars.contains_key(&name) {
            return Some(std::cell::Ref::map(vars, |v| &v[&name]));
        }
        scope = scope.parent.as_deref()?;
    }
}

fn lookup_type<'a>(mut scope: &Scope<'a>, name: Symbol) -> bool {
    if name == Symbol::intern("int") || name == Symbol::intern("string") {
        return true;
    }
    loop {
        if scope.types.contains_key(&name) {
            return true;
        }
        match scope.parent.as_deref() {
            Some(p) => scope = p,
            None => return false,
        }
    }
}

/// A location that has been computed but not yet read or written. Nil and
/// bounds faults surface only when the location is used.
enum Place {
    Cell {
        cell: Rc<RefCell<Value>>,
        assignable: bool,
        name: Symbol,
    },
    Field {
        base: Value,
        field: Symbol,
        pos: Pos,
    },
    Elem {
        base: Value,
        index: Value,
        pos: Pos,
    },
}

pub struct Interpreter<'a, 'io> {
    env: Env<'a>,
    input: &'io mut dyn Read,
    output: &'io mut dyn Write,
    steps: u64,
    budget: Option<u64>,
    depth: usize,
}

/// Runs `program`, reading `getchar` input from `input` and writing program
/// output to `output`.
pub fn run(program: &Exp, input: &mut dyn Read, output: &mut dyn Write, limits: Limits) -> Outcome {
    let mut base = Scope::default();
    for sig in &stdlib::BUILTINS {
        base.vars
            .get_mut()
            .insert(Symbol::intern(sig.name), Entry::Builtin(sig));
    }
    let mut interp = Interpreter {
        env: Rc::new(base),
        input,
        output,
        steps: 0,
        budget: limits.step_budget,
        depth: 0,
    };
    let result = interp.eval(program);
    let _ = interp.output.flush();
    match result {
        Ok(v) => Outcome::Normal(v),
        Err(Unwind::Error(d)) => Outcome::RuntimeError(d),
        Err(Unwind::Exit(code)) => Outcome::Exit(code),
        Err(Unwind::Budget) => Outcome::BudgetExceeded,
        Err(Unwind::Break(pos)) => Outcome::RuntimeError(Diagnostic::new(
            pos,
            Code::BreakOutsideLoop,
            "break outside of a loop",
        )),
    }
}

/// Runs with in-memory streams and returns the captured output.
pub fn run_bytes(program: &Exp, stdin: &[u8], limits: Limits) -> (Vec<u8>, Outcome) {
    let mut input = stdin;
    let mut out = Vec::new();
    let outcome = run(program, &mut input, &mut out, limits);
    (out, outcome)
}

impl<'a, 'io> Interpreter<'a, 'io> {
    fn eval(&mut self, e: &'a Exp) -> Eval {
        self.steps += 1;
        if matches!(self.budget, Some(b) if self.steps > b) {
            return Err(Unwind::Budget);
        }
        e.accept_static(self)
    }

    fn value(&mut self, e: &'a Exp) -> Eval {
        match self.eval(e)? {
            Value::Unit => Err(bad_tag(e.pos, "expression produced no value")),
            v => Ok(v),
        }
    }

    fn int(&mut self, e: &'a Exp) -> Result<i64, Unwind> {
        match self.eval(e)? {
            Value::Int(n) => Ok(n),
            other => Err(bad_tag(
                e.pos,
                format!("expected int, found {}", other.tag()),
            )),
        }
    }

    fn push_scope(&mut self, scope: Scope<'a>) {
        self.env = Rc::new(scope);
    }

    fn child(&self) -> Scope<'a> {
        Scope {
            parent: Some(self.env.clone()),
            ..Scope::default()
        }
    }

    fn bind_var(&mut self, name: Symbol, value: Value, assignable: bool) {
        let scope = self.child();
        scope.vars.borrow_mut().insert(
            name,
            Entry::Var {
                cell: Rc::new(RefCell::new(value)),
                assignable,
            },
        );
        self.push_scope(scope);
    }

    fn read(&mut self, place: Place) -> Eval {
        match place {
            Place::Cell { cell, .. } => Ok(cell.borrow().clone()),
            Place::Field { base, field, pos } => match base {
                Value::Record(r) => r
                    .fields
                    .borrow()
                    .iter()
                    .find(|(n, _)| *n == field)
                    .map(|(_, v)| v.clone())
                    .ok_or_else(|| bad_tag(pos, format!("record has no field '{field}'"))),
                Value::Nil => Err(fault(
                    pos,
                    Code::NilDeref,
                    format!("field '{field}' of nil"),
                )),
                other => Err(bad_tag(pos, format!("field access on {}", other.tag()))),
            },
            Place::Elem { base, index, pos } => {
                let (arr, i) = self.element(base, index, pos)?;
                let v = arr.elems.borrow()[i].clone();
                Ok(v)
            }
        }
    }

    fn write(&mut self, place: Place, value: Value, pos: Pos) -> Result<(), Unwind> {
        match place {
            Place::Cell {
                cell,
                assignable,
                name,
            } => {
                if !assignable {
                    return Err(fault(
                        pos,
                        Code::AssignLoopVar,
                        format!("assignment to for-loop counter '{name}'"),
                    ));
                }
                *cell.borrow_mut() = value;
            }
            Place::Field {
                base,
                field,
                pos: fpos,
            } => match base {
                Value::Record(r) => {
                    let mut fields = r.fields.borrow_mut();
                    match fields.iter_mut().find(|(n, _)| *n == field) {
                        Some(slot) => slot.1 = value,
                        None => {
                            return Err(bad_tag(fpos, format!("record has no field '{field}'")))
                        }
                    }
                }
                Value::Nil => {
                    return Err(fault(
                        fpos,
                        Code::NilDeref,
                        format!("field '{field}' of nil"),
                    ))
                }
                other => return Err(bad_tag(fpos, format!("field access on {}", other.tag()))),
            },
            Place::Elem {
                base,
                index,
                pos: epos,
            } => {
                let (arr, i) = self.element(base, index, epos)?;
                arr.elems.borrow_mut()[i] = value;
            }
        }
        Ok(())
    }

    fn element(
        &self,
        base: Value,
        index: Value,
        pos: Pos,
    ) -> Result<(Rc<ArrayCell>, usize), Unwind> {
        let arr = match base {
            Value::Array(a) => a,
            Value::Nil => return Err(fault(pos, Code::NilDeref, "subscript of nil")),
            other => return Err(bad_tag(pos, format!("subscript on {}", other.tag()))),
        };
        let Value::Int(i) = index else {
            return Err(bad_tag(pos, format!("index is {}", index.tag())));
        };
        let len = arr.elems.borrow().len();
        if i < 0 || i as u64 >= len as u64 {
            return Err(fault(
                pos,
                Code::IndexOob,
                format!("index {i} out of bounds for array of length {len}"),
            ));
        }
        Ok((arr, i as usize))
    }

    fn call(&mut self, pos: Pos, name: Symbol, args: &'a [Exp]) -> Eval {
        enum Callee<'a> {
            Fun(&'a FunDecl, Weak<Scope<'a>>),
            Builtin(&'static BuiltinSig),
        }
        let callee = match lookup_var(&self.env, name).as_deref() {
            None => {
                return Err(fault(
                    pos,
                    Code::UndeclaredFun,
                    format!("undeclared function '{name}'"),
                ))
            }
            Some(Entry::Var { .. }) => {
                return Err(fault(
                    pos,
                    Code::NotCallable,
                    format!("'{name}' is not a function"),
                ))
            }
            Some(Entry::Fun { decl, env }) => Callee::Fun(decl, env.clone()),
            Some(Entry::Builtin(sig)) => Callee::Builtin(sig),
        };
        let mut values = Vec::with_capacity(args.len());
        for a in args {
            values.push(self.value(a)?);
        }
        match callee {
            Callee::Builtin(sig) => call_builtin(sig.name, &values, self.input, self.output)
                .map_err(|f| match f {
                    BuiltinFault::Exit(code) => Unwind::Exit(code),
                    BuiltinFault::Trap(code, msg) => fault(pos, code, msg),
                }),
            Callee::Fun(decl, env) => {
                if decl.formals.len() != values.len() {
                    return Err(bad_tag(
                        pos,
                        format!("'{name}' takes {} argument(s)", decl.formals.len()),
                    ));
                }
                if self.depth == MAX_CALL_DEPTH {
                    return Err(fault(
                        pos,
                        Code::StackOverflow,
                        format!("call nesting exceeds {MAX_CALL_DEPTH}"),
                    ));
                }
                let defining = env.upgrade().expect("function outlived its scope");
                let frame = Scope {
                    parent: Some(defining),
                    ..Scope::default()
                };
                for (formal, v) in decl.formals.iter().zip(values) {
                    frame.vars.borrow_mut().insert(
                        formal.name,
                        Entry::Var {
                            cell: Rc::new(RefCell::new(v)),
                            assignable: true,
                        },
                    );
                }
                let saved = std::mem::replace(&mut self.env, Rc::new(frame));
                self.depth += 1;
                let result = self.eval(&decl.body);
                self.depth -= 1;
                self.env = saved;
                match result {
                    Err(Unwind::Break(bpos)) => Err(fault(
                        bpos,
                        Code::BreakOutsideLoop,
                        "break outside of a loop",
                    )),
                    other => other,
                }
            }
        }
    }

    fn compare(&self, pos: Pos, oper: Oper, l: &Value, r: &Value) -> Result<bool, Unwind> {
        use std::cmp::Ordering;
        let ord: Option<Ordering> = match (l, r) {
            (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
            (Value::Str(a), Value::Str(b)) => Some(a.as_ref().cmp(b.as_ref())),
            _ => None,
        };
        if let Some(ord) = ord {
            return Ok(match oper {
                Oper::Eq => ord == Ordering::Equal,
                Oper::Ne => ord != Ordering::Equal,
                Oper::Lt => ord == Ordering::Less,
                Oper::Le => ord != Ordering::Greater,
                Oper::Gt => ord == Ordering::Greater,
                Oper::Ge => ord != Ordering::Less,
                _ => unreachable!(),
            });
        }
        let refs = matches!(l, Value::Record(_) | Value::Array(_) | Value::Nil)
            && matches!(r, Value::Record(_) | Value::Array(_) | Value::Nil);
        if refs && oper.is_equality() {
            let same = l == r;
            return Ok(if oper == Oper::Eq { same } else { !same });
        }
        Err(bad_tag(
            pos,
            format!("cannot compare {} with {} using '{oper}'", l.tag(), r.tag()),
        ))
    }

    fn run_loop_body(&mut self, body: &'a Exp) -> Result<bool, Unwind> {
        match self.eval(body) {
            Ok(_) => Ok(true),
            Err(Unwind::Break(_)) => Ok(false),
            Err(e) => Err(e),
        }
    }

    fn declare_functions(&mut self, group: &'a [Decl]) {
        let scope = Rc::new(self.child());
        for d in group {
            let DeclKind::Fun(f) = &d.kind else {
                unreachable!("function group holds only functions")
            };
            scope.vars.borrow_mut().insert(
                f.name,
                Entry::Fun {
                    decl: f,
                    env: Rc::downgrade(&scope),
                },
            );
        }
        self.env = scope;
    }
}

// The visitor borrows nodes for the lifetime of the program so closures can
// keep pointing at their bodies.
trait AcceptStatic<'a> {
    fn accept_static<'io>(&'a self, v: &mut Interpreter<'a, 'io>) -> Eval;
}

impl<'a> AcceptStatic<'a> for Exp {
    fn accept_static<'io>(&'a self, v: &mut Interpreter<'a, 'io>) -> Eval {
        let pos = self.pos;
        match &self.kind {
            ExpKind::Int(n) => Ok(Value::Int(*n)),
            ExpKind::Str(s) => Ok(Value::str(s)),
            ExpKind::Nil => Ok(Value::Nil),
            ExpKind::Var(lv) => {
                let place = v.place(lv)?;
                v.read(place)
            }
            ExpKind::Assign(target, rhs) => {
                let place = v.place(target)?;
                let value = v.value(rhs)?;
                v.write(place, value, pos)?;
                Ok(Value::Unit)
            }
            ExpKind::Seq(exps) => v.sequence(exps),
            ExpKind::Op(l, oper, r) => v.op(pos, l, *oper, r),
            ExpKind::Neg(e) => Ok(Value::Int(v.int(e)?.wrapping_neg())),
            ExpKind::Call(name, args) => v.call(pos, *name, args),
            ExpKind::Record(ty, fields) => {
                if !lookup_type(&v.env, *ty) {
                    return Err(fault(
                        pos,
                        Code::UndeclaredType,
                        format!("undeclared type '{ty}'"),
                    ));
                }
                let mut values = Vec::with_capacity(fields.len());
                for f in fields {
                    values.push((f.name, v.value(&f.value)?));
                }
                Ok(Value::Record(Rc::new(RecordCell {
                    fields: RefCell::new(values),
                })))
            }
            ExpKind::Array(ty, size, init) => {
                if !lookup_type(&v.env, *ty) {
                    return Err(fault(
                        pos,
                        Code::UndeclaredType,
                        format!("undeclared type '{ty}'"),
                    ));
                }
                let n = v.int(size)?;
                let init = v.value(init)?;
                if n < 0 {
                    return Err(fault(pos, Code::BadArg, format!("negative array size {n}")));
                }
                if n > MAX_ARRAY_LEN {
                    return Err(fault(
                        pos,
                        Code::HeapExhausted,
                        format!("array of {n} elements exceeds the heap limit"),
                    ));
                }
                Ok(Value::Array(Rc::new(ArrayCell {
                    elems: RefCell::new(vec![init; n as usize]),
                })))
            }
            ExpKind::If(test, then) => {
                if v.int(test)? != 0 {
                    v.eval(then)?;
                }
                Ok(Value::Unit)
            }
            ExpKind::IfElse(test, then, els) => {
                if v.int(test)? != 0 {
                    v.eval(then)
                } else {
                    v.eval(els)
                }
            }
            ExpKind::While(test, body) => {
                while v.int(test)? != 0 {
                    if !v.run_loop_body(body)? {
                        break;
                    }
                }
                Ok(Value::Unit)
            }
            ExpKind::For(var, lo, hi, body) => {
                let lo = v.int(lo)?;
                let hi = v.int(hi)?;
                let saved = v.env.clone();
                v.bind_var(*var, Value::Int(lo), false);
                let cell = match lookup_var(&v.env, *var).as_deref() {
                    Some(Entry::Var { cell, .. }) => cell.clone(),
                    _ => unreachable!("counter just bound"),
                };
                let mut i = lo;
                let result = (|| {
                    if lo > hi {
                        return Ok(());
                    }
                    loop {
                        *cell.borrow_mut() = Value::Int(i);
                        if !v.run_loop_body(body)? || i == hi {
                            return Ok(());
                        }
                        i += 1;
                    }
                })();
                v.env = saved;
                result.map(|()| Value::Unit)
            }
            ExpKind::Break => Err(Unwind::Break(pos)),
            ExpKind::Let(decls, body) => {
                let saved = v.env.clone();
                let result = v.let_body(decls, body);
                v.env = saved;
                result
            }
        }
    }
}

impl<'a, 'io> Interpreter<'a, 'io> {
    fn sequence(&mut self, exps: &'a [Exp]) -> Eval {
        let mut last = Value::Unit;
        for e in exps {
            last = self.eval(e)?;
        }
        Ok(last)
    }

    fn let_body(&mut self, decls: &'a [Decl], body: &'a [Exp]) -> Eval {
        for group in decl_groups(decls) {
            match &group[0].kind {
                DeclKind::Type(..) => {
                    let mut scope = self.child();
                    for d in group {
                        if let DeclKind::Type(name, spec) = &d.kind {
                            scope.types.insert(*name, spec);
                        }
                    }
                    self.push_scope(scope);
                }
                DeclKind::Var(name, _, init) => {
                    let value = self.value(init)?;
                    self.bind_var(*name, value, true);
                }
                DeclKind::Fun(_) => self.declare_functions(group),
            }
        }
        self.sequence(body)
    }

    fn op(&mut self, pos: Pos, left: &'a Exp, oper: Oper, right: &'a Exp) -> Eval {
        match oper {
            Oper::And => {
                if self.int(left)? == 0 {
                    return Ok(Value::Int(0));
                }
                return Ok(Value::Int(self.int(right)?));
            }
            Oper::Or => {
                if self.int(left)? != 0 {
                    return Ok(Value::Int(1));
                }
                return Ok(Value::Int(self.int(right)?));
            }
            _ => {}
        }
        let l = self.value(left)?;
        let r = self.value(right)?;
        if oper.is_comparison() {
            return Ok(Value::Int(self.compare(pos, oper, &l, &r)? as i64));
        }
        let (Value::Int(a), Value::Int(b)) = (&l, &r) else {
            return Err(bad_tag(
                pos,
                format!("operator '{oper}' applied to {} and {}", l.tag(), r.tag()),
            ));
        };
        let (a, b) = (*a, *b);
        Ok(Value::Int(match oper {
            Oper::Plus => a.wrapping_add(b),
            Oper::Minus => a.wrapping_sub(b),
            Oper::Times => a.wrapping_mul(b),
            Oper::Divide => {
                if b == 0 {
                    return Err(fault(pos, Code::DivZero, "division by zero"));
                }
                a.wrapping_div(b)
            }
            _ => unreachable!(),
        }))
    }

    fn place(&mut self, lv: &'a LValue) -> Result<Place, Unwind> {
        match &lv.kind {
            LValueKind::Simple(name) => match lookup_var(&self.env, *name).as_deref() {
                Some(Entry::Var { cell, assignable }) => Ok(Place::Cell {
                    cell: cell.clone(),
                    assignable: *assignable,
                    name: *name,
                }),
                Some(_) => Err(bad_tag(
                    lv.pos,
                    format!("'{name}' is a function, not a variable"),
                )),
                None => Err(fault(
                    lv.pos,
                    Code::UndeclaredVar,
                    format!("undeclared variable '{name}'"),
                )),
            },
            LValueKind::Field(base, field) => {
                let base_place = self.place(base)?;
                let base = self.read(base_place)?;
                Ok(Place::Field {
                    base,
                    field: *field,
                    pos: lv.pos,
                })
            }
            LValueKind::Subscript(base, index) => {
                let base_place = self.place(base)?;
                let base = self.read(base_place)?;
                let index = self.value(index)?;
                Ok(Place::Elem {
                    base,
                    index,
                    pos: lv.pos,
                })
            }
        }
    }
}
