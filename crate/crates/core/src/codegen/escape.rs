//! Finds the variables that nested functions reach into.
//!
//! A variable escapes when it is referenced from a function nested inside
//! the one that declares it. Escaping variables live in a heap-allocated
//! frame record instead of a local slot. Only functions that declare other
//! functions need such a record, because only their callees can chase a
//! static link back to them.

use std::collections::HashSet;

use crate::ast::*;
use crate::symtab::ScopedTable;

/// Identity of an AST node for the duration of one compilation.
pub fn key<T>(node: &T) -> usize {
    node as *const T as usize
}

/// Key standing for the program's top level.
pub const MAIN: usize = 0;

#[derive(Clone, Copy)]
enum Bind {
    Var { key: usize, level: usize },
    Fun,
}

#[derive(Debug, Default)]
pub struct Escapes {
    escaping: HashSet<usize>,
    nesting: HashSet<usize>,
}

impl Escapes {
    pub fn analyze(program: &Exp) -> Escapes {
        let mut w = Walker {
            env: ScopedTable::new(),
            funs: vec![MAIN],
            out: Escapes::default(),
        };
        w.exp(program);
        w.out
    }

    /// Whether the variable declared by the node with key `var` escapes.
    /// Keys are a `Decl` for `var` declarations, a `TypedField` for
    /// parameters and the lower-bound expression for `for` counters.
    pub fn escapes(&self, var: usize) -> bool {
        self.escaping.contains(&var)
    }

    /// Whether the function (a `FunDecl` key, or [`MAIN`]) declares nested
    /// functions and so needs a frame record.
    pub fn has_nested(&self, fun: usize) -> bool {
        self.nesting.contains(&fun)
    }
}

struct Walker {
    env: ScopedTable<Bind>,
    funs: Vec<usize>,
    out: Escapes,
}

impl Walker {
    fn level(&self) -> usize {
        self.funs.len() - 1
    }

    fn bind_var(&mut self, name: Symbol, key: usize) {
        let level = self.level();
        self.env.put(name, Bind::Var { key, level });
    }

    fn exp(&mut self, e: &Exp) {
        match &e.kind {
            ExpKind::Int(_) | ExpKind::Str(_) | ExpKind::Nil | ExpKind::Break => {}
            ExpKind::Var(lv) => self.lvalue(lv),
            ExpKind::Assign(lv, v) => {
                self.lvalue(lv);
                self.exp(v);
            }
            ExpKind::Seq(es) | ExpKind::Call(_, es) => es.iter().for_each(|e| self.exp(e)),
            ExpKind::Op(l, _, r)
            | ExpKind::Array(_, l, r)
            | ExpKind::While(l, r)
            | ExpKind::If(l, r) => {
                self.exp(l);
                self.exp(r);
            }
            ExpKind::Neg(x) => self.exp(x),
            ExpKind::Record(_, fields) => fields.iter().for_each(|f| self.exp(&f.value)),
            ExpKind::IfElse(t, a, b) => {
                self.exp(t);
                self.exp(a);
                self.exp(b);
            }
            ExpKind::For(var, lo, hi, body) => {
                self.exp(lo);
                self.exp(hi);
                self.env.begin_scope();
                self.bind_var(*var, key(&**lo));
                self.exp(body);
                self.env.end_scope();
            }
            ExpKind::Let(decls, body) => {
                self.env.begin_scope();
                for group in decl_groups(decls) {
                    self.group(group);
                }
                body.iter().for_each(|e| self.exp(e));
                self.env.end_scope();
            }
        }
    }

    fn group(&mut self, group: &[Decl]) {
        match &group[0].kind {
            DeclKind::Type(..) => {}
            DeclKind::Var(name, _, init) => {
                self.exp(init);
                self.bind_var(*name, key(&group[0]));
            }
            DeclKind::Fun(_) => {
                self.out.nesting.insert(*self.funs.last().unwrap());
                let funs: Vec<&FunDecl> = group
                    .iter()
                    .filter_map(|d| match &d.kind {
                        DeclKind::Fun(f) => Some(f),
                        _ => None,
                    })
                    .collect();
                for f in &funs {
                    self.env.put(f.name, Bind::Fun);
                }
                for f in funs {
                    self.funs.push(key(f));
                    self.env.begin_scope();
                    for p in &f.formals {
                        self.bind_var(p.name, key(p));
                    }
                    self.exp(&f.body);
                    self.env.end_scope();
                    self.funs.pop();
                }
            }
        }
    }

    fn lvalue(&mut self, lv: &LValue) {
        match &lv.kind {
            LValueKind::Simple(name) => {
                if let Some(Bind::Var { key, level }) = self.env.get(*name).copied() {
                    if level < self.level() {
                        self.out.escaping.insert(key);
                    }
                }
            }
            LValueKind::Field(base, _) => self.lvalue(base),
            LValueKind::Subscript(base, index) => {
                self.lvalue(base);
                self.exp(index);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;

    fn let_decls(e: &Exp) -> &[Decl] {
        match &e.kind {
            ExpKind::Let(decls, _) => decls,
            _ => panic!("not a let"),
        }
    }

    #[test]
    fn only_variables_used_by_inner_functions_escape() {
        let prog = parse_source(
            "let var a := 1 var b := 2 var a2 := 0 \
             function f(p: int, q: int): int = \
               let function g(): int = a + p in g() + b * 0 + q end \
             in f(1, 2) end",
        )
        .unwrap();
        let esc = Escapes::analyze(&prog);
        let decls = let_decls(&prog);
        assert!(esc.escapes(key(&decls[0])));
        assert!(esc.escapes(key(&decls[1])));
        assert!(!esc.escapes(key(&decls[2])));
        let DeclKind::Fun(f) = &decls[3].kind else {
            panic!()
        };
        assert!(esc.escapes(key(&f.formals[0])));
        assert!(!esc.escapes(key(&f.formals[1])));
        assert!(esc.has_nested(MAIN));
        assert!(esc.has_nested(key(f)));
    }

    #[test]
    fn shadowing_is_respected() {
        let prog = parse_source("let var x := 1 function f(x: int): int = x in f(x) end").unwrap();
        let esc = Escapes::analyze(&prog);
        let decls = let_decls(&prog);
        assert!(!esc.escapes(key(&decls[0])));
        let DeclKind::Fun(f) = &decls[1].kind else {
            panic!()
        };
        assert!(!esc.escapes(key(&f.formals[0])));
        assert!(!esc.has_nested(key(f)));
    }

    #[test]
    fn loop_counters_can_escape() {
        let prog =
            parse_source("for i := 1 to 3 do let function f(): int = i in f(); () end").unwrap();
        let ExpKind::For(_, lo, _, _) = &prog.kind else {
            panic!()
        };
        assert!(Escapes::analyze(&prog).escapes(key(&**lo)));
    }
}
