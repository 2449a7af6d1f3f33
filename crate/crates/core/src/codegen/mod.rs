//! Code generation: the interpreter's traversal again, this time over
//! frame resources instead of runtime values.
//!
//! Each Tiger function becomes a flat VM function. A nested function takes
//! a static link in slot 0: the frame record of the function that declares
//! it. Frame records hold that function's own static link in field 0 and
//! its escaping variables after it, so an outer variable is reached with
//! `aload 0` and one `getf 0` per extra level.

mod check;
mod escape;
mod frame;

use std::collections::HashMap;

use crate::ast::*;
use crate::semant::{lookup_type, prim_type, Type, TypeStore};
use crate::stdlib;
use crate::symtab::ScopedTable;
use crate::vm::{BuiltinOp, Cmp, Function, Instr, Instruction, Line, Module};

pub use check::check;
pub use escape::{key, Escapes, MAIN};
pub use frame::{Access, Frame, Home};

pub type CodeModule = Module;

/// What the code generator knows about a name.
#[derive(Clone, Debug)]
pub enum GenEntry {
    Var {
        access: Access,
        /// Nesting level of the declaring function; the top level is 0.
        level: u32,
    },
    Fun {
        formals: Vec<Type>,
        result: Type,
        label: String,
        /// Level of the function whose frame is passed as the static link.
        level: u32,
    },
    Builtin {
        op: BuiltinOp,
        result: Type,
    },
}

/// Frame bookkeeping recorded when a function is finished.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameStat {
    pub function: String,
    pub params: u32,
    pub end_at_exit: u32,
    pub high_water: u32,
}

/// Compiles a program that passed analysis.
pub fn compile(program: &Exp) -> CodeModule {
    compile_with_stats(program).0
}

pub fn compile_with_stats(program: &Exp) -> (CodeModule, Vec<FrameStat>) {
    let escapes = Escapes::analyze(program);
    let mut g = Gen::new(&escapes);
    g.main(program);
    let mut functions = g.done;
    functions.rotate_right(1);
    (
        Module {
            name: "main".into(),
            strings: g.strings,
            functions,
        },
        g.stats,
    )
}

pub fn render(module: &CodeModule) -> String {
    crate::vm::render(module)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Load,
    /// Emit only what must precede the stored value.
    Address,
}

/// How to finish a store once the value is on the stack.
struct Loc {
    ty: Type,
    store: Option<Instruction>,
}

struct FunCtx {
    label: String,
    level: u32,
    frame: Frame,
    body: Vec<Line>,
    depth: u32,
    loops: Vec<(String, u32)>,
    /// Slot holding this function's frame record and the index of the
    /// `newrec` that allocates it.
    record: Option<(u32, usize)>,
    fields: u32,
}

impl FunCtx {
    fn new(label: String, level: u32, params: u32) -> FunCtx {
        FunCtx {
            label,
            level,
            frame: Frame::new(params),
            body: Vec::new(),
            depth: 0,
            loops: Vec::new(),
            record: None,
            fields: 0,
        }
    }
}

struct Gen<'e> {
    escapes: &'e Escapes,
    store: TypeStore,
    venv: ScopedTable<GenEntry>,
    tenv: ScopedTable<Type>,
    strings: Vec<Vec<u8>>,
    pool: HashMap<Vec<u8>, u32>,
    done: Vec<Function>,
    stats: Vec<FrameStat>,
    ctx: FunCtx,
    labels: u32,
    mode: Mode,
}

fn ignore(_: crate::diag::Diagnostic) {
    panic!("code generation reached a program that does not type-check")
}

impl<'e> Gen<'e> {
    fn new(escapes: &'e Escapes) -> Self {
        let mut venv = ScopedTable::new();
        for sig in &stdlib::BUILTINS {
            let op = BuiltinOp::from_name(sig.name).expect("every library function has an op");
            venv.put(
                Symbol::intern(sig.name),
                GenEntry::Builtin {
                    op,
                    result: prim_type(sig.result),
                },
            );
        }
        Gen {
            escapes,
            store: TypeStore::new(),
            venv,
            tenv: TypeStore::base_tenv(),
            strings: Vec::new(),
            pool: HashMap::new(),
            done: Vec::new(),
            stats: Vec::new(),
            ctx: FunCtx::new("main".into(), 0, 0),
            labels: 0,
            mode: Mode::Load,
        }
    }

    // ----- emission -----

    fn emit(&mut self, ins: Instruction) {
        let (pops, pushes) = ins.stack_effect(|_| unreachable!("calls go through emit_call"));
        self.ctx.depth = self.ctx.depth - pops + pushes;
        self.ctx.body.push(Line::Ins(ins));
    }

    fn emit_call(&mut self, label: String, nargs: u32, returns: bool) {
        self.ctx.depth = self.ctx.depth - nargs + returns as u32;
        self.ctx.body.push(Line::Ins(Instr::Call(label, nargs)));
    }

    /// Emits without touching the tracked depth, for code on a path that
    /// leaves the current expression.
    fn emit_detached(&mut self, ins: Instruction) {
        self.ctx.body.push(Line::Ins(ins));
    }

    fn label(&mut self, l: &str) {
        self.ctx.body.push(Line::Label(l.to_string()));
    }

    fn fresh(&mut self, stem: &str) -> String {
        self.labels += 1;
        format!("{stem}{}", self.labels)
    }

    fn string(&mut self, s: &[u8]) -> u32 {
        if let Some(&k) = self.pool.get(s) {
            return k;
        }
        let k = self.strings.len() as u32;
        self.strings.push(s.to_vec());
        self.pool.insert(s.to_vec(), k);
        k
    }

    // ----- types -----

    fn actual(&self, ty: Type) -> Type {
        self.store.actual(ty)
    }

    fn is_unit(&self, ty: Type) -> bool {
        self.store.is_unit(ty)
    }

    fn ty(&self, name: Symbol) -> Type {
        self.actual(lookup_type(&self.tenv, name, Pos::default(), &mut ignore))
    }

    fn gen(&mut self, e: &Exp) -> Type {
        let ty = e.accept(self);
        self.actual(ty)
    }

    /// Generates `e` for effect only.
    fn discard(&mut self, e: &Exp) {
        let ty = self.gen(e);
        if !self.is_unit(ty) {
            self.emit(Instr::Pop);
        }
    }

    fn load_op(&self, ty: Type, slot: u32) -> Instruction {
        if self.actual(ty) == Type::Int {
            Instr::Iload(slot)
        } else {
            Instr::Aload(slot)
        }
    }

    fn store_op(&self, ty: Type, slot: u32) -> Instruction {
        if self.actual(ty) == Type::Int {
            Instr::Istore(slot)
        } else {
            Instr::Astore(slot)
        }
    }

    // ----- frames and static links -----

    /// Pushes the frame record of the enclosing function at `level`.
    fn frame_pointer(&mut self, level: u32) {
        if level == self.ctx.level {
            let (slot, _) = self.ctx.record.expect("function has no frame record");
            self.emit(Instr::Aload(slot));
        } else {
            assert!(level < self.ctx.level, "frame pointer to an inner level");
            self.emit(Instr::Aload(0));
            for _ in level + 1..self.ctx.level {
                self.emit(Instr::Getf(0));
            }
        }
    }

    /// Allocates a home for a variable declared in the current function.
    fn allocate(&mut self, var_key: usize, ty: Type) -> Access {
        if self.escapes.escapes(var_key) {
            assert!(
                self.ctx.record.is_some(),
                "escaping variable without a frame record"
            );
            self.ctx.fields += 1;
            Access {
                offset: self.ctx.fields - 1,
                ty,
                home: Home::Field,
            }
        } else {
            Access {
                offset: self.ctx.frame.alloc_local(),
                ty,
                home: Home::Slot,
            }
        }
    }

    fn release(&mut self, access: Access) {
        if access.home == Home::Slot {
            self.ctx.frame.pop_local(access.offset);
        }
    }

    fn bind(&mut self, name: Symbol, access: Access) {
        let level = self.ctx.level;
        self.venv.put(name, GenEntry::Var { access, level });
    }

    fn load_var(&mut self, access: Access, level: u32) {
        match access.home {
            Home::Slot => {
                assert_eq!(
                    level, self.ctx.level,
                    "slot variable used from an inner function"
                );
                self.emit(self.load_op(access.ty, access.offset));
            }
            Home::Field => {
                self.frame_pointer(level);
                self.emit(Instr::Getf(access.offset));
            }
        }
    }

    /// Emits the part of a store that precedes the value and returns the
    /// instruction that completes it.
    fn store_prefix(&mut self, access: Access, level: u32) -> Instruction {
        match access.home {
            Home::Slot => self.store_op(access.ty, access.offset),
            Home::Field => {
                self.frame_pointer(level);
                Instr::Setf(access.offset)
            }
        }
    }

    fn open_record(&mut self, static_link: Instruction) {
        let slot = self.ctx.frame.alloc_local();
        let at = self.ctx.body.len();
        self.emit(Instr::Newrec(0));
        self.emit(Instr::Dup);
        self.emit(static_link);
        self.emit(Instr::Setf(0));
        self.emit(Instr::Astore(slot));
        self.ctx.record = Some((slot, at));
        self.ctx.fields = 1;
    }

    fn close_frame(&mut self) {
        if let Some((slot, at)) = self.ctx.record {
            self.ctx.body[at] = Line::Ins(Instr::Newrec(self.ctx.fields));
            self.ctx.frame.pop_local(slot);
        }
        self.stats.push(FrameStat {
            function: self.ctx.label.clone(),
            params: self.ctx.frame.params(),
            end_at_exit: self.ctx.frame.frame_end(),
            high_water: self.ctx.frame.high_water(),
        });
    }

    fn main(&mut self, program: &Exp) {
        if self.escapes.has_nested(MAIN) {
            self.open_record(Instr::Ldnil);
        }
        let ty = self.gen(program);
        if ty != Type::Int {
            if !self.is_unit(ty) {
                self.emit(Instr::Pop);
            }
            self.emit(Instr::Ldc(0));
        }
        self.emit(Instr::Halt);
        self.close_frame();
        let nlocals = self.ctx.frame.high_water();
        let body = std::mem::take(&mut self.ctx.body);
        self.done.push(Function {
            name: "main".into(),
            nparams: 0,
            nlocals,
            body,
        });
    }

    fn function(&mut self, f: &FunDecl, label: String, formals: &[Type], result: Type) {
        let level = self.ctx.level + 1;
        let params = f.formals.len() as u32 + 1;
        let outer = std::mem::replace(&mut self.ctx, FunCtx::new(label, level, params));
        self.venv.begin_scope();
        self.tenv.begin_scope();
        if self.escapes.has_nested(key(f)) {
            self.open_record(Instr::Aload(0));
        }
        for (j, (p, &ty)) in f.formals.iter().zip(formals).enumerate() {
            let slot = j as u32 + 1;
            if self.escapes.escapes(key(p)) {
                let access = self.allocate(key(p), ty);
                let (rec, _) = self.ctx.record.unwrap();
                self.emit(Instr::Aload(rec));
                self.emit(self.load_op(ty, slot));
                self.emit(Instr::Setf(access.offset));
                self.bind(p.name, access);
            } else {
                let access = Access {
                    offset: slot,
                    ty,
                    home: Home::Slot,
                };
                self.bind(p.name, access);
            }
        }
        let body = self.gen(&f.body);
        if self.is_unit(result) {
            if !self.is_unit(body) {
                self.emit(Instr::Pop);
            }
            self.emit(Instr::Ret);
        } else {
            self.emit(Instr::Retv);
        }
        self.close_frame();
        self.tenv.end_scope();
        self.venv.end_scope();
        let ctx = std::mem::replace(&mut self.ctx, outer);
        self.done.push(Function {
            name: ctx.label,
            nparams: params,
            nlocals: ctx.frame.high_water(),
            body: ctx.body,
        });
    }

    fn fun_group(&mut self, group: &[Decl]) {
        let mut headers = Vec::with_capacity(group.len());
        for d in group {
            let DeclKind::Fun(f) = &d.kind else {
                unreachable!("function group holds only functions")
            };
            let formals: Vec<Type> = f.formals.iter().map(|p| self.ty(p.ty)).collect();
            let result = f.result.map_or(Type::Unit, |r| self.ty(r));
            let label = self.fresh(&format!("{}_", f.name));
            self.venv.put(
                f.name,
                GenEntry::Fun {
                    formals: formals.clone(),
                    result,
                    label: label.clone(),
                    level: self.ctx.level,
                },
            );
            headers.push((f, label, formals, result));
        }
        for (f, label, formals, result) in headers {
            self.function(f, label, &formals, result);
        }
    }

    fn compare(&mut self, oper: Oper, left: Type, right: Type) {
        let cmp = match oper {
            Oper::Eq => Cmp::Eq,
            Oper::Ne => Cmp::Ne,
            Oper::Lt => Cmp::Lt,
            Oper::Le => Cmp::Le,
            Oper::Gt => Cmp::Gt,
            Oper::Ge => Cmp::Ge,
            _ => unreachable!(),
        };
        let operand = if left == Type::Nil { right } else { left };
        match operand {
            Type::Int => self.emit(Instr::Icmp(cmp)),
            Type::String => {
                self.emit(Instr::Builtin(BuiltinOp::Strcmp, 2));
                self.emit(Instr::Ldc(0));
                self.emit(Instr::Icmp(cmp));
            }
            _ => {
                self.emit(Instr::Refeq);
                if oper == Oper::Ne {
                    self.emit(Instr::Ldc(0));
                    self.emit(Instr::Icmp(Cmp::Eq));
                }
            }
        }
    }
}

impl ExpVisitor for Gen<'_> {
    type Output = Type;

    fn visit_int(&mut self, _: Pos, value: i64) -> Type {
        self.emit(Instr::Ldc(value));
        Type::Int
    }

    fn visit_str(&mut self, _: Pos, value: &[u8]) -> Type {
        let k = self.string(value);
        self.emit(Instr::Lds(k));
        Type::String
    }

    fn visit_nil(&mut self, _: Pos) -> Type {
        self.emit(Instr::Ldnil);
        Type::Nil
    }

    fn visit_var(&mut self, _: Pos, var: &LValue) -> Type {
        let saved = std::mem::replace(&mut self.mode, Mode::Load);
        let loc = var.accept(self);
        self.mode = saved;
        loc.ty
    }

    fn visit_assign(&mut self, _: Pos, target: &LValue, value: &Exp) -> Type {
        let saved = std::mem::replace(&mut self.mode, Mode::Address);
        let loc = target.accept(self);
        self.mode = saved;
        self.gen(value);
        self.emit(loc.store.expect("address mode yields a store"));
        Type::Unit
    }

    fn visit_seq(&mut self, _: Pos, exps: &[Exp]) -> Type {
        let Some((last, init)) = exps.split_last() else {
            return Type::Unit;
        };
        for e in init {
            self.discard(e);
        }
        self.gen(last)
    }

    fn visit_op(&mut self, _: Pos, left: &Exp, oper: Oper, right: &Exp) -> Type {
        match oper {
            Oper::And | Oper::Or => {
                let other = self.fresh("L");
                let end = self.fresh("L");
                self.gen(left);
                self.emit(Instr::Brz(other.clone()));
                let depth = self.ctx.depth;
                if oper == Oper::And {
                    self.gen(right);
                    self.emit(Instr::Goto(end.clone()));
                    self.ctx.depth = depth;
                    self.label(&other);
                    self.emit(Instr::Ldc(0));
                } else {
                    self.emit(Instr::Ldc(1));
                    self.emit(Instr::Goto(end.clone()));
                    self.ctx.depth = depth;
                    self.label(&other);
                    self.gen(right);
                }
                self.label(&end);
            }
            _ if oper.is_arithmetic() => {
                self.gen(left);
                self.gen(right);
                self.emit(match oper {
                    Oper::Plus => Instr::Iadd,
                    Oper::Minus => Instr::Isub,
                    Oper::Times => Instr::Imul,
                    _ => Instr::Idiv,
                });
            }
            _ => {
                let l = self.gen(left);
                let r = self.gen(right);
                self.compare(oper, l, r);
            }
        }
        Type::Int
    }

    fn visit_neg(&mut self, _: Pos, operand: &Exp) -> Type {
        self.gen(operand);
        self.emit(Instr::Ineg);
        Type::Int
    }

    fn visit_call(&mut self, _: Pos, name: Symbol, args: &[Exp]) -> Type {
        match self.venv.get(name).cloned() {
            Some(GenEntry::Builtin { op, result }) => {
                for a in args {
                    self.gen(a);
                }
                self.emit(Instr::Builtin(op, args.len() as u32));
                result
            }
            Some(GenEntry::Fun {
                result,
                label,
                level,
                ..
            }) => {
                self.frame_pointer(level);
                for a in args {
                    self.gen(a);
                }
                let returns = !self.is_unit(result);
                self.emit_call(label, args.len() as u32 + 1, returns);
                self.actual(result)
            }
            _ => panic!("call to '{name}', which is not a function"),
        }
    }

    fn visit_record(&mut self, _: Pos, ty: Symbol, fields: &[FieldInit]) -> Type {
        let rty = self.ty(ty);
        let Type::Record(id) = rty else {
            panic!("record literal of non-record type '{ty}'")
        };
        let n = self.store.record_fields(id).len() as u32;
        self.emit(Instr::Newrec(n));
        for f in fields {
            let (i, _) = self
                .store
                .field(id, f.name)
                .expect("field checked by the analyzer");
            self.emit(Instr::Dup);
            self.gen(&f.value);
            self.emit(Instr::Setf(i as u32));
        }
        rty
    }

    fn visit_array(&mut self, _: Pos, ty: Symbol, size: &Exp, init: &Exp) -> Type {
        let aty = self.ty(ty);
        self.gen(size);
        self.gen(init);
        self.emit(Instr::Newarr);
        aty
    }

    fn visit_if(&mut self, _: Pos, test: &Exp, then: &Exp) -> Type {
        let end = self.fresh("L");
        self.gen(test);
        self.emit(Instr::Brz(end.clone()));
        self.discard(then);
        self.label(&end);
        Type::Unit
    }

    fn visit_if_else(&mut self, _: Pos, test: &Exp, then: &Exp, els: &Exp) -> Type {
        let other = self.fresh("L");
        let end = self.fresh("L");
        self.gen(test);
        self.emit(Instr::Brz(other.clone()));
        let depth = self.ctx.depth;
        let a = self.gen(then);
        self.emit(Instr::Goto(end.clone()));
        self.ctx.depth = depth;
        self.label(&other);
        let b = self.gen(els);
        self.label(&end);
        if a == Type::Nil {
            b
        } else {
            a
        }
    }

    fn visit_while(&mut self, _: Pos, test: &Exp, body: &Exp) -> Type {
        let top = self.fresh("L");
        let end = self.fresh("L");
        self.label(&top);
        self.gen(test);
        self.emit(Instr::Brz(end.clone()));
        self.ctx.loops.push((end.clone(), self.ctx.depth));
        self.discard(body);
        self.ctx.loops.pop();
        self.emit(Instr::Goto(top));
        self.label(&end);
        Type::Unit
    }

    fn visit_for(&mut self, _: Pos, var: Symbol, lo: &Exp, hi: &Exp, body: &Exp) -> Type {
        let top = self.fresh("L");
        let end = self.fresh("L");
        let level = self.ctx.level;
        let counter = self.allocate(key(lo), Type::Int);
        let limit = self.ctx.frame.alloc_local();

        let store = self.store_prefix(counter, level);
        self.gen(lo);
        self.emit(store);
        self.gen(hi);
        self.emit(Instr::Istore(limit));
        self.load_var(counter, level);
        self.emit(Instr::Iload(limit));
        self.emit(Instr::Icmp(Cmp::Gt));
        self.emit(Instr::Brnz(end.clone()));

        self.label(&top);
        self.venv.begin_scope();
        self.bind(var, counter);
        self.ctx.loops.push((end.clone(), self.ctx.depth));
        self.discard(body);
        self.ctx.loops.pop();
        self.venv.end_scope();

        // Test before incrementing so that hi = max int terminates.
        self.load_var(counter, level);
        self.emit(Instr::Iload(limit));
        self.emit(Instr::Icmp(Cmp::Eq));
        self.emit(Instr::Brnz(end.clone()));
        let store = self.store_prefix(counter, level);
        self.load_var(counter, level);
        self.emit(Instr::Ldc(1));
        self.emit(Instr::Iadd);
        self.emit(store);
        self.emit(Instr::Goto(top));
        self.label(&end);

        self.ctx.frame.pop_local(limit);
        self.release(counter);
        Type::Unit
    }

    fn visit_break(&mut self, _: Pos) -> Type {
        let (end, depth) = self
            .ctx
            .loops
            .last()
            .cloned()
            .expect("break outside a loop");
        for _ in depth..self.ctx.depth {
            self.emit_detached(Instr::Pop);
        }
        self.emit_detached(Instr::Goto(end));
        Type::Unit
    }

    fn visit_let(&mut self, _: Pos, decls: &[Decl], body: &[Exp]) -> Type {
        self.venv.begin_scope();
        self.tenv.begin_scope();
        let mut locals = Vec::new();
        for group in decl_groups(decls) {
            let decl = &group[0];
            match &decl.kind {
                DeclKind::Type(..) => {
                    self.store
                        .declare_type_group(&mut self.tenv, group, &mut ignore);
                }
                DeclKind::Var(name, declared, init) => {
                    let declared = declared.map(|t| self.ty(t));
                    // The store prefix must precede the value, so the home is
                    // chosen before the initializer's type is known.
                    let mut access = self.allocate(key(decl), declared.unwrap_or(Type::Unit));
                    let level = self.ctx.level;
                    let prefix = match access.home {
                        Home::Field => {
                            self.frame_pointer(level);
                            None
                        }
                        Home::Slot => Some(access.offset),
                    };
                    let init_ty = self.gen(init);
                    access.ty = declared.unwrap_or(init_ty);
                    self.emit(match prefix {
                        None => Instr::Setf(access.offset),
                        Some(slot) => self.store_op(access.ty, slot),
                    });
                    self.bind(*name, access);
                    locals.push(access);
                }
                DeclKind::Fun(_) => self.fun_group(group),
            }
        }
        let ty = self.visit_seq(Pos::default(), body);
        for access in locals.into_iter().rev() {
            self.release(access);
        }
        self.tenv.end_scope();
        self.venv.end_scope();
        ty
    }
}

impl LValueVisitor for Gen<'_> {
    type Output = Loc;

    fn visit_simple(&mut self, _: Pos, name: Symbol) -> Loc {
        let Some(GenEntry::Var { access, level }) = self.venv.get(name).cloned() else {
            panic!("'{name}' is not a variable")
        };
        match self.mode {
            Mode::Load => {
                self.load_var(access, level);
                Loc {
                    ty: access.ty,
                    store: None,
                }
            }
            Mode::Address => Loc {
                ty: access.ty,
                store: Some(self.store_prefix(access, level)),
            },
        }
    }

    fn visit_field(&mut self, _: Pos, base: &LValue, field: Symbol) -> Loc {
        let mode = std::mem::replace(&mut self.mode, Mode::Load);
        let base_ty = base.accept(self).ty;
        self.mode = mode;
        let Type::Record(id) = self.actual(base_ty) else {
            panic!("field access on a non-record")
        };
        let (i, ty) = self
            .store
            .field(id, field)
            .expect("field checked by the analyzer");
        let i = i as u32;
        match mode {
            Mode::Load => {
                self.emit(Instr::Getf(i));
                Loc { ty, store: None }
            }
            Mode::Address => Loc {
                ty,
                store: Some(Instr::Setf(i)),
            },
        }
    }

    fn visit_subscript(&mut self, _: Pos, base: &LValue, index: &Exp) -> Loc {
        let mode = std::mem::replace(&mut self.mode, Mode::Load);
        let base_ty = base.accept(self).ty;
        self.gen(index);
        self.mode = mode;
        let Type::Array(id) = self.actual(base_ty) else {
            panic!("subscript of a non-array")
        };
        let ty = self.store.array_elem(id);
        match mode {
            Mode::Load => {
                self.emit(Instr::Aget);
                Loc { ty, store: None }
            }
            Mode::Address => Loc {
                ty,
                store: Some(Instr::Aset),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;
    use crate::vm::{assemble, execute_bytes, Outcome};

    fn main_code(src: &str) -> Vec<Instruction> {
        let module = compile(&parse_source(src).unwrap());
        module.functions[0]
            .body
            .iter()
            .filter_map(|l| match l {
                Line::Ins(i) => Some(i.clone()),
                Line::Label(_) => None,
            })
            .collect()
    }

    fn exec(src: &str) -> (String, Outcome) {
        let prog = parse_source(src).unwrap();
        assert!(crate::semant::analyze(&prog).is_ok(), "{src}");
        let (module, stats) = compile_with_stats(&prog);
        check(&module, &stats).unwrap();
        let text = render(&module);
        let asm = assemble(&text).unwrap_or_else(|d| panic!("{text}\n{d:?}"));
        let (out, outcome) = execute_bytes(&asm, b"", None);
        (String::from_utf8(out).unwrap(), outcome)
    }

    #[test]
    fn literal_is_one_push() {
        assert_eq!(main_code("7"), vec![Instr::Ldc(7), Instr::Halt]);
    }

    #[test]
    fn load_and_store_follow_mode() {
        let code = main_code("let var a := 0 var b := 0 var c := 0 var x := 5 in x; x := 1 end");
        assert!(code.contains(&Instr::Iload(3)));
        let at = code.iter().position(|i| *i == Instr::Ldc(1)).unwrap();
        assert_eq!(code[at + 1], Instr::Istore(3));
        // No load of x before its assignment.
        assert_eq!(code[at - 1], Instr::Pop);
    }

    #[test]
    fn print_hi() {
        assert_eq!(exec("print(\"hi\")"), ("hi".into(), Outcome::Exit(0)));
    }

    #[test]
    fn programs_run_on_the_vm() {
        assert_eq!(
            exec("let var s := 0 in (for i := 1 to 10 do s := s + i; s) end").1,
            Outcome::Exit(55)
        );
        assert_eq!(
            exec("let function f(n:int):int = if n = 0 then 1 else n * f(n-1) in f(5) end").1,
            Outcome::Exit(120)
        );
        assert_eq!(
            exec("(0 & (print(\"no\"); 1)) | (print(\"yes\"); 0)").0,
            "yes"
        );
        assert_eq!(exec("3 & 5").1, Outcome::Exit(5));
        assert_eq!(exec("\"abc\" < \"abd\"").1, Outcome::Exit(1));
        assert_eq!(exec("\"abc\" <> \"abc\"").1, Outcome::Exit(0));
    }

    #[test]
    fn static_links_reach_outer_frames() {
        let src = "let var x := 1 \
                   function get(): int = x \
                   function bump() = x := x + 1 \
                   in bump(); bump(); let var x := 100 in get() end end";
        assert_eq!(exec(src).1, Outcome::Exit(3));
        let src = "let function outer(n: int): int = \
                     let var acc := 0 \
                         function add(k: int) = \
                           let function deeper() = acc := acc + k + n * 0 in deeper() end \
                     in for i := 1 to n do add(i); acc end \
                   in outer(4) end";
        assert_eq!(exec(src).1, Outcome::Exit(10));
        let src =
            "for i := 1 to 3 do let function show() = print(chr(ord(\"0\") + i)) in show() end";
        assert_eq!(exec(src).0, "123");
    }

    #[test]
    fn break_discards_pending_operands() {
        let src = "let type r = {f: int} var v := r{f = 0} var n := 0 in \
                   while 1 do (n := n + 1; v.f := (if n = 3 then break; n)); n * 10 + v.f end";
        assert_eq!(exec(src).1, Outcome::Exit(32));
    }

    #[test]
    fn for_loop_at_max_int_terminates() {
        let src = "let var c := 0 in for i := 9223372036854775806 to 9223372036854775807 do c := c + 1; c end";
        assert_eq!(exec(src).1, Outcome::Exit(2));
    }
}
