//! Static checking as evaluation over types.
//!
//! The analyzer walks the tree exactly as the interpreter does, but its
//! "values" are [`Type`]s and its environments bind names to types and
//! signatures. A fault is reported once and the offending expression takes
//! the `Error` type, which is compatible with everything, so one mistake does
//! not cascade into many diagnostics.

pub mod types;

use crate::ast::*;
use crate::diag::{Code, Diagnostic};
use crate::stdlib::{self, Prim};
use crate::symtab::ScopedTable;

pub use types::{lookup_type, Type, TypeStore};

#[derive(Clone, Debug)]
pub enum SemEntry {
    Var {
        ty: Type,
        assignable: bool,
    },
    Fun {
        formals: Vec<(Symbol, Type)>,
        result: Type,
    },
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Options {
    /// Accept `nil = nil` and `nil <> nil`, where no record type constrains
    /// either side. Rejected with `NIL_UNCONSTRAINED` by default.
    pub allow_nil_comparison: bool,
}

pub struct Analysis {
    pub diagnostics: Vec<Diagnostic>,
    pub program_type: Type,
    pub types: TypeStore,
}

impl Analysis {
    pub fn is_ok(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

pub fn analyze(program: &Exp) -> Analysis {
    analyze_with(program, Options::default())
}

pub fn analyze_with(program: &Exp, options: Options) -> Analysis {
    let mut a = Analyzer::new(options);
    let ty = program.accept(&mut a);
    let program_type = if a.diags.is_empty() { ty } else { Type::Error };
    Analysis {
        diagnostics: a.diags,
        program_type,
        types: a.store,
    }
}

pub fn prim_type(p: Prim) -> Type {
    match p {
        Prim::Int => Type::Int,
        Prim::String => Type::String,
        Prim::Unit => Type::Unit,
    }
}

struct Analyzer {
    store: TypeStore,
    venv: ScopedTable<SemEntry>,
    tenv: ScopedTable<Type>,
    diags: Vec<Diagnostic>,
    loop_depth: usize,
    options: Options,
}

impl Analyzer {
    fn new(options: Options) -> Self {
        let mut venv = ScopedTable::new();
        for sig in &stdlib::BUILTINS {
            let formals = sig
                .params
                .iter()
                .enumerate()
                .map(|(i, &p)| (Symbol::intern(&format!("arg{i}")), prim_type(p)))
                .collect();
            venv.put(
                Symbol::intern(sig.name),
                SemEntry::Fun {
                    formals,
                    result: prim_type(sig.result),
                },
            );
        }
        Analyzer {
            store: TypeStore::new(),
            venv,
            tenv: TypeStore::base_tenv(),
            diags: Vec::new(),
            loop_depth: 0,
            options,
        }
    }

    fn error(&mut self, pos: Pos, code: Code, message: impl Into<String>) -> Type {
        self.diags.push(Diagnostic::new(pos, code, message));
        Type::Error
    }

    fn actual(&self, ty: Type) -> Type {
        self.store.actual(ty)
    }

    fn describe(&self, ty: Type) -> String {
        self.store.describe(ty)
    }

    /// Checks `e` in a position that needs a value.
    fn value(&mut self, e: &Exp) -> Type {
        let ty = e.accept(self);
        if self.store.is_unit(ty) {
            return self.error(e.pos, Code::VoidValue, "expression produces no value");
        }
        ty
    }

    fn int_operand(&self, ty: Type) -> bool {
        matches!(self.actual(ty), Type::Int | Type::Error)
    }

    fn require_unit(&mut self, body: &Exp, ty: Type, what: &str) {
        if !matches!(self.actual(ty), Type::Unit | Type::Error) {
            let found = self.describe(ty);
            self.error(
                body.pos,
                Code::BodyNotUnit,
                format!("{what} must produce no value, found {found}"),
            );
        }
    }

    fn condition(&mut self, test: &Exp) {
        let ty = self.value(test);
        if !self.int_operand(ty) {
            let found = self.describe(ty);
            self.error(
                test.pos,
                Code::CondNotInt,
                format!("condition must be int, found {found}"),
            );
        }
    }

    fn lookup_type(&mut self, name: Symbol, pos: Pos) -> Type {
        let diags = &mut self.diags;
        types::lookup_type(&self.tenv, name, pos, &mut |d| diags.push(d))
    }

    fn begin_scope(&mut self) {
        self.venv.begin_scope();
        self.tenv.begin_scope();
    }

    fn end_scope(&mut self) {
        self.venv.end_scope();
        self.tenv.end_scope();
    }

    fn type_group(&mut self, group: &[Decl]) {
        let diags = &mut self.diags;
        self.store
            .declare_type_group(&mut self.tenv, group, &mut |d| diags.push(d));
    }

    fn fun_group(&mut self, group: &[Decl]) {
        let funs: Vec<(&FunDecl, Pos)> = group
            .iter()
            .map(|d| match &d.kind {
                DeclKind::Fun(f) => (f, d.pos),
                _ => unreachable!("function group holds only functions"),
            })
            .collect();

        let mut headers = Vec::with_capacity(funs.len());
        for (i, (f, pos)) in funs.iter().enumerate() {
            if funs[..i].iter().any(|(g, _)| g.name == f.name) {
                self.error(
                    *pos,
                    Code::DuplicateName,
                    format!("function '{}' declared twice in the same group", f.name),
                );
            }
            let mut formals = Vec::with_capacity(f.formals.len());
            for (j, p) in f.formals.iter().enumerate() {
                if f.formals[..j].iter().any(|q| q.name == p.name) {
                    self.error(
                        p.pos,
                        Code::DuplicateName,
                        format!("parameter '{}' declared twice", p.name),
                    );
                }
                let ty = self.lookup_type(p.ty, p.pos);
                formals.push((p.name, ty));
            }
            let result = match f.result {
                Some(r) => self.lookup_type(r, *pos),
                None => Type::Unit,
            };
            self.venv.put(
                f.name,
                SemEntry::Fun {
                    formals: formals.clone(),
                    result,
                },
            );
            headers.push((formals, result));
        }

        for ((f, _), (formals, result)) in funs.iter().zip(headers) {
            self.begin_scope();
            for (name, ty) in formals {
                self.venv.put(
                    name,
                    SemEntry::Var {
                        ty,
                        assignable: true,
                    },
                );
            }
            let saved = std::mem::replace(&mut self.loop_depth, 0);
            if self.store.is_unit(result) {
                let ty = f.body.accept(self);
                self.require_unit(&f.body, ty, "procedure body");
            } else {
                let ty = self.value(&f.body);
                if !self.store.compatible(result, ty) {
                    let (want, found) = (self.describe(result), self.describe(ty));
                    self.error(
                        f.body.pos,
                        Code::AssignType,
                        format!("function '{}' must return {want}, body has {found}", f.name),
                    );
                }
            }
            self.loop_depth = saved;
            self.end_scope();
        }
    }

    fn var_decl(&mut self, pos: Pos, name: Symbol, declared: Option<Symbol>, init: &Exp) {
        let init_ty = self.value(init);
        let ty = match declared {
            Some(tname) => {
                let want = self.lookup_type(tname, pos);
                if !self.store.compatible(want, init_ty) {
                    let (w, f) = (self.describe(want), self.describe(init_ty));
                    self.error(
                        init.pos,
                        Code::AssignType,
                        format!("cannot initialize '{name}' of type {w} with {f}"),
                    );
                }
                want
            }
            None => {
                if self.actual(init_ty) == Type::Nil {
                    self.error(
                        init.pos,
                        Code::NilUnconstrained,
                        format!("'{name}' initialized with nil needs a declared record type"),
                    )
                } else {
                    init_ty
                }
            }
        };
        self.venv.put(
            name,
            SemEntry::Var {
                ty,
                assignable: true,
            },
        );
    }

    fn join_branches(&mut self, pos: Pos, then: Type, els: Type) -> Type {
        let (a, b) = (self.actual(then), self.actual(els));
        if a == Type::Error {
            return els;
        }
        if b == Type::Error {
            return then;
        }
        if self.store.compatible(a, b) {
            return if a == Type::Nil { els } else { then };
        }
        if self.store.compatible(b, a) {
            return els;
        }
        let (x, y) = (self.describe(then), self.describe(els));
        self.error(
            pos,
            Code::IfElseBranchMismatch,
            format!("branches of if-then-else differ: {x} versus {y}"),
        )
    }
}

impl ExpVisitor for Analyzer {
    type Output = Type;

    fn visit_int(&mut self, _: Pos, _: i64) -> Type {
        Type::Int
    }

    fn visit_str(&mut self, _: Pos, _: &[u8]) -> Type {
        Type::String
    }

    fn visit_nil(&mut self, _: Pos) -> Type {
        Type::Nil
    }

    fn visit_var(&mut self, _: Pos, var: &LValue) -> Type {
        var.accept(self).0
    }

    fn visit_assign(&mut self, pos: Pos, target: &LValue, value: &Exp) -> Type {
        let (want, assignable) = target.accept(self);
        let found = self.value(value);
        if !assignable {
            self.error(
                pos,
                Code::AssignLoopVar,
                "cannot assign to a for-loop counter",
            );
        } else if !self.store.compatible(want, found) {
            let (w, f) = (self.describe(want), self.describe(found));
            self.error(pos, Code::AssignType, format!("cannot assign {f} to {w}"));
        }
        Type::Unit
    }

    fn visit_seq(&mut self, _: Pos, exps: &[Exp]) -> Type {
        let mut ty = Type::Unit;
        for e in exps {
            ty = e.accept(self);
        }
        ty
    }

    fn visit_op(&mut self, pos: Pos, left: &Exp, oper: Oper, right: &Exp) -> Type {
        let l = self.value(left);
        let r = self.value(right);
        let (a, b) = (self.actual(l), self.actual(r));
        if !oper.is_comparison() {
            if !self.int_operand(a) || !self.int_operand(b) {
                let (x, y) = (self.describe(l), self.describe(r));
                self.error(
                    pos,
                    Code::OperandType,
                    format!("operator '{oper}' needs int operands, found {x} and {y}"),
                );
            }
            return Type::Int;
        }
        let ok = match (a, b) {
            (Type::Error, _) | (_, Type::Error) => true,
            (Type::Int, Type::Int) | (Type::String, Type::String) => true,
            _ if !oper.is_equality() => false,
            (Type::Record(x), Type::Record(y)) => x == y,
            (Type::Array(x), Type::Array(y)) => x == y,
            (Type::Record(_), Type::Nil) | (Type::Nil, Type::Record(_)) => true,
            (Type::Nil, Type::Nil) => {
                if !self.options.allow_nil_comparison {
                    self.error(
                        pos,
                        Code::NilUnconstrained,
                        "comparing nil with nil: no record type constrains either side",
                    );
                }
                true
            }
            _ => false,
        };
        if !ok {
            let (x, y) = (self.describe(l), self.describe(r));
            self.error(
                pos,
                Code::ComparisonType,
                format!("cannot compare {x} with {y} using '{oper}'"),
            );
        }
        Type::Int
    }

    fn visit_neg(&mut self, pos: Pos, operand: &Exp) -> Type {
        let ty = self.value(operand);
        if !self.int_operand(ty) {
            let found = self.describe(ty);
            self.error(
                pos,
                Code::OperandType,
                format!("unary '-' needs an int operand, found {found}"),
            );
        }
        Type::Int
    }

    fn visit_call(&mut self, pos: Pos, name: Symbol, args: &[Exp]) -> Type {
        let arg_types: Vec<Type> = args.iter().map(|a| self.value(a)).collect();
        match self.venv.get(name).cloned() {
            None => self.error(
                pos,
                Code::UndeclaredFun,
                format!("undeclared function '{name}'"),
            ),
            Some(SemEntry::Var { .. }) => self.error(
                pos,
                Code::NotAFun,
                format!("'{name}' is a variable, not a function"),
            ),
            Some(SemEntry::Fun { formals, result }) => {
                if formals.len() != args.len() {
                    self.error(
                        pos,
                        Code::ArityMismatch,
                        format!(
                            "'{name}' expects {} argument(s), got {}",
                            formals.len(),
                            args.len()
                        ),
                    );
                } else {
                    for ((arg, found), (param, want)) in args.iter().zip(arg_types).zip(formals) {
                        if !self.store.compatible(want, found) {
                            let (w, f) = (self.describe(want), self.describe(found));
                            self.error(
                                arg.pos,
                                Code::ArgType,
                                format!("argument '{param}' of '{name}' expects {w}, found {f}"),
                            );
                        }
                    }
                }
                result
            }
        }
    }

    fn visit_record(&mut self, pos: Pos, ty: Symbol, fields: &[FieldInit]) -> Type {
        let declared = self.lookup_type(ty, pos);
        let values: Vec<Type> = fields.iter().map(|f| self.value(&f.value)).collect();
        let id = match self.actual(declared) {
            Type::Error => return Type::Error,
            Type::Record(id) => id,
            _ => {
                return self.error(
                    pos,
                    Code::NotARecord,
                    format!("'{ty}' is not a record type"),
                )
            }
        };
        let expected: Vec<(Symbol, Type)> = self.store.record_fields(id).to_vec();
        let mut unknown = false;
        let mut misplaced = fields.len() != expected.len();
        for (i, (init, found)) in fields.iter().zip(values).enumerate() {
            let Some((_, want)) = self.store.field(id, init.name) else {
                unknown = true;
                self.error(
                    init.pos,
                    Code::FieldUnknown,
                    format!("record type '{ty}' has no field '{}'", init.name),
                );
                continue;
            };
            if expected.get(i).map(|(n, _)| *n) != Some(init.name) {
                misplaced = true;
            }
            if !self.store.compatible(want, found) {
                let (w, f) = (self.describe(want), self.describe(found));
                self.error(
                    init.pos,
                    Code::AssignType,
                    format!("field '{}' expects {w}, found {f}", init.name),
                );
            }
        }
        if misplaced && !unknown {
            let names: Vec<&str> = expected.iter().map(|(n, _)| n.name()).collect();
            self.error(
                pos,
                Code::FieldOrder,
                format!(
                    "record '{ty}' must list fields exactly as declared: {}",
                    names.join(", ")
                ),
            );
        }
        declared
    }

    fn visit_array(&mut self, pos: Pos, ty: Symbol, size: &Exp, init: &Exp) -> Type {
        let declared = self.lookup_type(ty, pos);
        let size_ty = self.value(size);
        let init_ty = self.value(init);
        if !self.int_operand(size_ty) {
            let found = self.describe(size_ty);
            self.error(
                size.pos,
                Code::IndexNotInt,
                format!("array size must be int, found {found}"),
            );
        }
        match self.actual(declared) {
            Type::Error => Type::Error,
            Type::Array(id) => {
                let elem = self.store.array_elem(id);
                if !self.store.compatible(elem, init_ty) {
                    let (w, f) = (self.describe(elem), self.describe(init_ty));
                    self.error(
                        init.pos,
                        Code::AssignType,
                        format!("array elements are {w}, initializer is {f}"),
                    );
                }
                declared
            }
            _ => self.error(
                pos,
                Code::NotAnArray,
                format!("'{ty}' is not an array type"),
            ),
        }
    }

    fn visit_if(&mut self, _: Pos, test: &Exp, then: &Exp) -> Type {
        self.condition(test);
        let ty = then.accept(self);
        self.require_unit(then, ty, "if-then without else");
        Type::Unit
    }

    fn visit_if_else(&mut self, pos: Pos, test: &Exp, then: &Exp, els: &Exp) -> Type {
        self.condition(test);
        let a = then.accept(self);
        let b = els.accept(self);
        self.join_branches(pos, a, b)
    }

    fn visit_while(&mut self, _: Pos, test: &Exp, body: &Exp) -> Type {
        self.condition(test);
        self.loop_depth += 1;
        let ty = body.accept(self);
        self.loop_depth -= 1;
        self.require_unit(body, ty, "while body");
        Type::Unit
    }

    fn visit_for(&mut self, _: Pos, var: Symbol, lo: &Exp, hi: &Exp, body: &Exp) -> Type {
        for bound in [lo, hi] {
            let ty = self.value(bound);
            if !self.int_operand(ty) {
                let found = self.describe(ty);
                self.error(
                    bound.pos,
                    Code::OperandType,
                    format!("for-loop bound must be int, found {found}"),
                );
            }
        }
        self.begin_scope();
        self.venv.put(
            var,
            SemEntry::Var {
                ty: Type::Int,
                assignable: false,
            },
        );
        self.loop_depth += 1;
        let ty = body.accept(self);
        self.loop_depth -= 1;
        self.end_scope();
        self.require_unit(body, ty, "for body");
        Type::Unit
    }

    fn visit_break(&mut self, pos: Pos) -> Type {
        if self.loop_depth == 0 {
            self.error(pos, Code::BreakOutsideLoop, "break outside of a loop");
        }
        Type::Unit
    }

    fn visit_let(&mut self, _: Pos, decls: &[Decl], body: &[Exp]) -> Type {
        self.begin_scope();
        for group in decl_groups(decls) {
            match &group[0].kind {
                DeclKind::Type(..) => self.type_group(group),
                DeclKind::Fun(_) => self.fun_group(group),
                DeclKind::Var(name, ty, init) => self.var_decl(group[0].pos, *name, *ty, init),
            }
        }
        let mut ty = Type::Unit;
        for e in body {
            ty = e.accept(self);
        }
        self.end_scope();
        ty
    }
}

impl LValueVisitor for Analyzer {
    /// The location's type and whether it may be assigned.
    type Output = (Type, bool);

    fn visit_simple(&mut self, pos: Pos, name: Symbol) -> (Type, bool) {
        match self.venv.get(name) {
            Some(SemEntry::Var { ty, assignable }) => (*ty, *assignable),
            Some(SemEntry::Fun { .. }) => (
                self.error(
                    pos,
                    Code::NotAVar,
                    format!("'{name}' is a function, not a variable"),
                ),
                true,
            ),
            None => (
                self.error(
                    pos,
                    Code::UndeclaredVar,
                    format!("undeclared variable '{name}'"),
                ),
                true,
            ),
        }
    }

    fn visit_field(&mut self, pos: Pos, base: &LValue, field: Symbol) -> (Type, bool) {
        let (ty, _) = base.accept(self);
        let ty = match self.actual(ty) {
            Type::Error => Type::Error,
            Type::Record(id) => match self.store.field(id, field) {
                Some((_, t)) => t,
                None => {
                    let r = self.describe(ty);
                    self.error(
                        pos,
                        Code::FieldUnknown,
                        format!("{r} has no field '{field}'"),
                    )
                }
            },
            _ => {
                let found = self.describe(ty);
                self.error(
                    pos,
                    Code::NotARecord,
                    format!("field access '.{field}' on {found}, which is not a record"),
                )
            }
        };
        (ty, true)
    }

    fn visit_subscript(&mut self, pos: Pos, base: &LValue, index: &Exp) -> (Type, bool) {
        let (ty, _) = base.accept(self);
        let index_ty = self.value(index);
        if !self.int_operand(index_ty) {
            let found = self.describe(index_ty);
            self.error(
                index.pos,
                Code::IndexNotInt,
                format!("array index must be int, found {found}"),
            );
        }
        let ty = match self.actual(ty) {
            Type::Error => Type::Error,
            Type::Array(id) => self.store.array_elem(id),
            _ => {
                let found = self.describe(ty);
                self.error(
                    pos,
                    Code::NotAnArray,
                    format!("subscript on {found}, which is not an array"),
                )
            }
        };
        (ty, true)
    }
}
