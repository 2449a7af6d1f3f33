//! Abstract syntax for Tiger programs.
//!
//! Every node carries a [`Pos`], but structural equality ignores positions so
//! that a reparsed pretty-printed program compares equal to the original.
//!
//! Traversal goes through the visitor traits at the bottom of this module.
//! Each trait has exactly one required method per node variant, so a phase
//! that forgets a variant does not compile.

use std::collections::HashMap;
use std::fmt;
use std::sync::{LazyLock, Mutex};

/// An interned identifier.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(u32);

struct Interner {
    ids: HashMap<&'static str, u32>,
    names: Vec<&'static str>,
}

static INTERNER: LazyLock<Mutex<Interner>> = LazyLock::new(|| {
    Mutex::new(Interner {
        ids: HashMap::new(),
        names: Vec::new(),
    })
});

impl Symbol {
    /// Returns the unique handle for `text`. Safe to call from any thread.
    pub fn intern(text: &str) -> Symbol {
        let mut table = INTERNER.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(&id) = table.ids.get(text) {
            return Symbol(id);
        }
        // Interned spellings live for the whole process.
        let name: &'static str = Box::leak(text.to_owned().into_boxed_str());
        let id = table.names.len() as u32;
        table.names.push(name);
        table.ids.insert(name, id);
        Symbol(id)
    }

    pub fn id(self) -> u32 {
        self.0
    }

    pub fn name(self) -> &'static str {
        let table = INTERNER.lock().unwrap_or_else(|e| e.into_inner());
        table.names[self.0 as usize]
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// 1-based line and column of the first character of a construct.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl Pos {
    pub fn new(line: u32, column: u32) -> Pos {
        debug_assert!(line >= 1 && column >= 1);
        Pos { line, column }
    }
}

impl Default for Pos {
    fn default() -> Self {
        Pos { line: 1, column: 1 }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Oper {
    Plus,
    Minus,
    Times,
    Divide,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl Oper {
    pub const ALL: [Oper; 12] = [
        Oper::Plus,
        Oper::Minus,
        Oper::Times,
        Oper::Divide,
        Oper::Eq,
        Oper::Ne,
        Oper::Lt,
        Oper::Le,
        Oper::Gt,
        Oper::Ge,
        Oper::And,
        Oper::Or,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Oper::Plus => "+",
            Oper::Minus => "-",
            Oper::Times => "*",
            Oper::Divide => "/",
            Oper::Eq => "=",
            Oper::Ne => "<>",
            Oper::Lt => "<",
            Oper::Le => "<=",
            Oper::Gt => ">",
            Oper::Ge => ">=",
            Oper::And => "&",
            Oper::Or => "|",
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, Oper::Plus | Oper::Minus | Oper::Times | Oper::Divide)
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            Oper::Eq | Oper::Ne | Oper::Lt | Oper::Le | Oper::Gt | Oper::Ge
        )
    }

    pub fn is_equality(self) -> bool {
        matches!(self, Oper::Eq | Oper::Ne)
    }
}

impl fmt::Display for Oper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct Exp {
    pub kind: ExpKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExpKind {
    Int(i64),
    /// Fully escape-decoded contents; strings are byte sequences.
    Str(Vec<u8>),
    Nil,
    Var(Box<LValue>),
    Assign(Box<LValue>, Box<Exp>),
    Seq(Vec<Exp>),
    Op(Box<Exp>, Oper, Box<Exp>),
    Neg(Box<Exp>),
    Call(Symbol, Vec<Exp>),
    Record(Symbol, Vec<FieldInit>),
    Array(Symbol, Box<Exp>, Box<Exp>),
    If(Box<Exp>, Box<Exp>),
    IfElse(Box<Exp>, Box<Exp>, Box<Exp>),
    While(Box<Exp>, Box<Exp>),
    For(Symbol, Box<Exp>, Box<Exp>, Box<Exp>),
    Break,
    Let(Vec<Decl>, Vec<Exp>),
}

impl PartialEq for Exp {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Exp {
    pub fn new(kind: ExpKind, pos: Pos) -> Exp {
        Exp { kind, pos }
    }

    pub fn accept<V: ExpVisitor + ?Sized>(&self, v: &mut V) -> V::Output {
        let pos = self.pos;
        match &self.kind {
            ExpKind::Int(n) => v.visit_int(pos, *n),
            ExpKind::Str(s) => v.visit_str(pos, s),
            ExpKind::Nil => v.visit_nil(pos),
            ExpKind::Var(lv) => v.visit_var(pos, lv),
            ExpKind::Assign(lv, rhs) => v.visit_assign(pos, lv, rhs),
            ExpKind::Seq(exps) => v.visit_seq(pos, exps),
            ExpKind::Op(l, op, r) => v.visit_op(pos, l, *op, r),
            ExpKind::Neg(e) => v.visit_neg(pos, e),
            ExpKind::Call(name, args) => v.visit_call(pos, *name, args),
            ExpKind::Record(ty, fields) => v.visit_record(pos, *ty, fields),
            ExpKind::Array(ty, size, init) => v.visit_array(pos, *ty, size, init),
            ExpKind::If(test, then) => v.visit_if(pos, test, then),
            ExpKind::IfElse(test, then, els) => v.visit_if_else(pos, test, then, els),
            ExpKind::While(test, body) => v.visit_while(pos, test, body),
            ExpKind::For(var, lo, hi, body) => v.visit_for(pos, *var, lo, hi, body),
            ExpKind::Break => v.visit_break(pos),
            ExpKind::Let(decls, body) => v.visit_let(pos, decls, body),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FieldInit {
    pub name: Symbol,
    pub value: Exp,
    pub pos: Pos,
}

impl PartialEq for FieldInit {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.value == other.value
    }
}

#[derive(Clone, Debug)]
pub struct LValue {
    pub kind: LValueKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LValueKind {
    Simple(Symbol),
    Field(Box<LValue>, Symbol),
    Subscript(Box<LValue>, Box<Exp>),
}

impl PartialEq for LValue {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl LValue {
    pub fn new(kind: LValueKind, pos: Pos) -> LValue {
        LValue { kind, pos }
    }

    pub fn accept<V: LValueVisitor + ?Sized>(&self, v: &mut V) -> V::Output {
        let pos = self.pos;
        match &self.kind {
            LValueKind::Simple(name) => v.visit_simple(pos, *name),
            LValueKind::Field(base, field) => v.visit_field(pos, base, *field),
            LValueKind::Subscript(base, index) => v.visit_subscript(pos, base, index),
        }
    }
}

/// `name : type_name`, used for record type fields and function formals.
#[derive(Clone, Debug)]
pub struct TypedField {
    pub name: Symbol,
    pub ty: Symbol,
    pub pos: Pos,
}

impl PartialEq for TypedField {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.ty == other.ty
    }
}

#[derive(Clone, Debug)]
pub struct Decl {
    pub kind: DeclKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DeclKind {
    Type(Symbol, TypeSpec),
    Var(Symbol, Option<Symbol>, Exp),
    Fun(FunDecl),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunDecl {
    pub name: Symbol,
    pub formals: Vec<TypedField>,
    pub result: Option<Symbol>,
    pub body: Exp,
}

impl PartialEq for Decl {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Decl {
    pub fn new(kind: DeclKind, pos: Pos) -> Decl {
        Decl { kind, pos }
    }

    pub fn accept<V: DeclVisitor + ?Sized>(&self, v: &mut V) -> V::Output {
        let pos = self.pos;
        match &self.kind {
            DeclKind::Type(name, spec) => v.visit_type_decl(pos, *name, spec),
            DeclKind::Var(name, ty, init) => v.visit_var_decl(pos, *name, *ty, init),
            DeclKind::Fun(f) => v.visit_fun_decl(pos, f),
        }
    }

    pub fn is_type(&self) -> bool {
        matches!(self.kind, DeclKind::Type(..))
    }

    pub fn is_fun(&self) -> bool {
        matches!(self.kind, DeclKind::Fun(..))
    }
}

#[derive(Clone, Debug)]
pub struct TypeSpec {
    pub kind: TypeSpecKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TypeSpecKind {
    Name(Symbol),
    Record(Vec<TypedField>),
    Array(Symbol),
}

impl PartialEq for TypeSpec {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl TypeSpec {
    pub fn new(kind: TypeSpecKind, pos: Pos) -> TypeSpec {
        TypeSpec { kind, pos }
    }

    pub fn accept<V: TypeSpecVisitor + ?Sized>(&self, v: &mut V) -> V::Output {
        let pos = self.pos;
        match &self.kind {
            TypeSpecKind::Name(name) => v.visit_name_ty(pos, *name),
            TypeSpecKind::Record(fields) => v.visit_record_ty(pos, fields),
            TypeSpecKind::Array(elem) => v.visit_array_ty(pos, *elem),
        }
    }
}

/// Splits a declaration list into maximal runs of consecutive type
/// declarations, consecutive function declarations, and single variable
/// declarations. Runs are the unit of mutual recursion.
pub fn decl_groups(decls: &[Decl]) -> Vec<&[Decl]> {
    let mut groups = Vec::new();
    let mut start = 0;
    while start < decls.len() {
        let first = &decls[start];
        let mut end = start + 1;
        if first.is_type() || first.is_fun() {
            while end < decls.len()
                && decls[end].is_type() == first.is_type()
                && decls[end].is_fun() == first.is_fun()
            {
                end += 1;
            }
        }
        groups.push(&decls[start..end]);
        start = end;
    }
    groups
}

pub trait ExpVisitor {
    type Output;

    fn visit_int(&mut self, pos: Pos, value: i64) -> Self::Output;
    fn visit_str(&mut self, pos: Pos, value: &[u8]) -> Self::Output;
    fn visit_nil(&mut self, pos: Pos) -> Self::Output;
    fn visit_var(&mut self, pos: Pos, var: &LValue) -> Self::Output;
    fn visit_assign(&mut self, pos: Pos, target: &LValue, value: &Exp) -> Self::Output;
    fn visit_seq(&mut self, pos: Pos, exps: &[Exp]) -> Self::Output;
    fn visit_op(&mut self, pos: Pos, left: &Exp, oper: Oper, right: &Exp) -> Self::Output;
    fn visit_neg(&mut self, pos: Pos, operand: &Exp) -> Self::Output;
    fn visit_call(&mut self, pos: Pos, name: Symbol, args: &[Exp]) -> Self::Output;
    fn visit_record(&mut self, pos: Pos, ty: Symbol, fields: &[FieldInit]) -> Self::Output;
    fn visit_array(&mut self, pos: Pos, ty: Symbol, size: &Exp, init: &Exp) -> Self::Output;
    fn visit_if(&mut self, pos: Pos, test: &Exp, then: &Exp) -> Self::Output;
    fn visit_if_else(&mut self, pos: Pos, test: &Exp, then: &Exp, els: &Exp) -> Self::Output;
    fn visit_while(&mut self, pos: Pos, test: &Exp, body: &Exp) -> Self::Output;
    fn visit_for(&mut self, pos: Pos, var: Symbol, lo: &Exp, hi: &Exp, body: &Exp) -> Self::Output;
    fn visit_break(&mut self, pos: Pos) -> Self::Output;
    fn visit_let(&mut self, pos: Pos, decls: &[Decl], body: &[Exp]) -> Self::Output;
}

pub trait LValueVisitor {
    type Output;

    fn visit_simple(&mut self, pos: Pos, name: Symbol) -> Self::Output;
    fn visit_field(&mut self, pos: Pos, base: &LValue, field: Symbol) -> Self::Output;
    fn visit_subscript(&mut self, pos: Pos, base: &LValue, index: &Exp) -> Self::Output;
}

pub trait DeclVisitor {
    type Output;

    fn visit_type_decl(&mut self, pos: Pos, name: Symbol, spec: &TypeSpec) -> Self::Output;
    fn visit_var_decl(
        &mut self,
        pos: Pos,
        name: Symbol,
        ty: Option<Symbol>,
        init: &Exp,
    ) -> Self::Output;
    fn visit_fun_decl(&mut self, pos: Pos, decl: &FunDecl) -> Self::Output;
}

pub trait TypeSpecVisitor {
    type Output;

    fn visit_name_ty(&mut self, pos: Pos, name: Symbol) -> Self::Output;
    fn visit_record_ty(&mut self, pos: Pos, fields: &[TypedField]) -> Self::Output;
    fn visit_array_ty(&mut self, pos: Pos, elem: Symbol) -> Self::Output;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(n: i64) -> Exp {
        Exp::new(ExpKind::Int(n), Pos::default())
    }

    #[test]
    fn intern_is_idempotent_and_injective() {
        assert_eq!(Symbol::intern("x"), Symbol::intern("x"));
        assert_ne!(Symbol::intern("x"), Symbol::intern("y"));
        let w = Symbol::intern("while");
        assert_eq!(w.name(), "while");
    }

    #[test]
    fn intern_from_many_threads() {
        let handles: Vec<_> = (0..8)
            .map(|i| std::thread::spawn(move || Symbol::intern(&format!("t{}", i % 2))))
            .collect();
        let syms: Vec<Symbol> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        assert_eq!(syms[0], syms[2]);
        assert_eq!(syms[1], syms[3]);
        assert_ne!(syms[0], syms[1]);
    }

    #[test]
    fn equality_ignores_positions() {
        let a = Exp::new(ExpKind::Int(1), Pos::new(1, 1));
        let b = Exp::new(ExpKind::Int(1), Pos::new(9, 4));
        assert_eq!(a, b);
        assert_ne!(a, int(2));
    }

    /// Counts every node it is dispatched to; recursion is the handler's job.
    struct Depth;

    impl ExpVisitor for Depth {
        type Output = usize;
        fn visit_int(&mut self, _: Pos, _: i64) -> usize {
            1
        }
        fn visit_str(&mut self, _: Pos, _: &[u8]) -> usize {
            1
        }
        fn visit_nil(&mut self, _: Pos) -> usize {
            1
        }
        fn visit_var(&mut self, _: Pos, _: &LValue) -> usize {
            1
        }
        fn visit_assign(&mut self, _: Pos, _: &LValue, v: &Exp) -> usize {
            1 + v.accept(self)
        }
        fn visit_seq(&mut self, _: Pos, exps: &[Exp]) -> usize {
            1 + exps.iter().map(|e| e.accept(self)).max().unwrap_or(0)
        }
        fn visit_op(&mut self, _: Pos, l: &Exp, _: Oper, r: &Exp) -> usize {
            1 + l.accept(self).max(r.accept(self))
        }
        fn visit_neg(&mut self, _: Pos, e: &Exp) -> usize {
            1 + e.accept(self)
        }
        fn visit_call(&mut self, _: Pos, _: Symbol, args: &[Exp]) -> usize {
            1 + args.iter().map(|e| e.accept(self)).max().unwrap_or(0)
        }
        fn visit_record(&mut self, _: Pos, _: Symbol, _: &[FieldInit]) -> usize {
            1
        }
        fn visit_array(&mut self, _: Pos, _: Symbol, _: &Exp, _: &Exp) -> usize {
            1
        }
        fn visit_if(&mut self, _: Pos, _: &Exp, _: &Exp) -> usize {
            1
        }
        fn visit_if_else(&mut self, _: Pos, _: &Exp, _: &Exp, _: &Exp) -> usize {
            1
        }
        fn visit_while(&mut self, _: Pos, _: &Exp, _: &Exp) -> usize {
            1
        }
        fn visit_for(&mut self, _: Pos, _: Symbol, _: &Exp, _: &Exp, _: &Exp) -> usize {
            1
        }
        fn visit_break(&mut self, _: Pos) -> usize {
            1
        }
        fn visit_let(&mut self, _: Pos, _: &[Decl], _: &[Exp]) -> usize {
            1
        }
    }

    #[test]
    fn dispatch_is_single_and_handler_driven() {
        assert_eq!(int(7).accept(&mut Depth), 1);
        let sum = Exp::new(
            ExpKind::Op(Box::new(int(1)), Oper::Plus, Box::new(int(2))),
            Pos::default(),
        );
        assert_eq!(sum.accept(&mut Depth), 2);
    }

    #[test]
    fn decl_groups_split_on_kind_changes() {
        let p = Pos::default();
        let t = |n: &str| {
            Decl::new(
                DeclKind::Type(
                    Symbol::intern(n),
                    TypeSpec::new(TypeSpecKind::Name(Symbol::intern("int")), p),
                ),
                p,
            )
        };
        let v = |n: &str| Decl::new(DeclKind::Var(Symbol::intern(n), None, int(0)), p);
        let f = |n: &str| {
            Decl::new(
                DeclKind::Fun(FunDecl {
                    name: Symbol::intern(n),
                    formals: vec![],
                    result: None,
                    body: Exp::new(ExpKind::Seq(vec![]), p),
                }),
                p,
            )
        };
        let decls = vec![t("a"), t("b"), v("x"), v("y"), f("f"), f("g"), t("c")];
        let sizes: Vec<usize> = decl_groups(&decls).iter().map(|g| g.len()).collect();
        assert_eq!(sizes, vec![2, 1, 1, 2, 1]);
    }
}
