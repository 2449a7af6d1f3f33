//! The abstract value domain of the analyzer.
//!
//! Record and array types are identified by the index of their definition
//! in a [`TypeStore`], which gives name equivalence: two textually identical
//! record declarations produce distinct types.

use crate::ast::{Decl, DeclKind, Pos, Symbol, TypeSpecKind};
use crate::diag::{Code, Diagnostic};
use crate::symtab::ScopedTable;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RecordId(u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ArrayId(u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NameId(u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    String,
    Nil,
    Unit,
    /// Poison: compatible with everything, never reported twice.
    Error,
    Record(RecordId),
    Array(ArrayId),
    /// A declared alias, resolved once its declaration group completes.
    Name(NameId),
}

struct RecordDef {
    name: Symbol,
    fields: Vec<(Symbol, Type)>,
}

struct ArrayDef {
    name: Symbol,
    elem: Type,
}

struct NameDef {
    name: Symbol,
    resolved: Option<Type>,
}

#[derive(Default)]
pub struct TypeStore {
    records: Vec<RecordDef>,
    arrays: Vec<ArrayDef>,
    names: Vec<NameDef>,
}

impl TypeStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn new_record(&mut self, name: Symbol, fields: Vec<(Symbol, Type)>) -> Type {
        self.records.push(RecordDef { name, fields });
        Type::Record(RecordId(self.records.len() as u32 - 1))
    }

    pub fn new_array(&mut self, name: Symbol, elem: Type) -> Type {
        self.arrays.push(ArrayDef { name, elem });
        Type::Array(ArrayId(self.arrays.len() as u32 - 1))
    }

    fn new_name(&mut self, name: Symbol) -> NameId {
        self.names.push(NameDef {
            name,
            resolved: None,
        });
        NameId(self.names.len() as u32 - 1)
    }

    fn resolve(&mut self, id: NameId, ty: Type) {
        let slot = &mut self.names[id.0 as usize].resolved;
        assert!(slot.is_none(), "alias resolved twice");
        *slot = Some(ty);
    }

    /// Strips aliases. An alias that never resolved (part of a cycle, or
    /// still under construction) reads as `Error`.
    pub fn actual(&self, mut ty: Type) -> Type {
        // Bounded by the number of aliases; a resolved chain cannot loop.
        for _ in 0..=self.names.len() {
            match ty {
                Type::Name(id) => match self.names[id.0 as usize].resolved {
                    Some(next) => ty = next,
                    None => return Type::Error,
                },
                other => return other,
            }
        }
        Type::Error
    }

    pub fn record_fields(&self, id: RecordId) -> &[(Symbol, Type)] {
        &self.records[id.0 as usize].fields
    }

    /// Declaration-order index and type of a record field.
    pub fn field(&self, id: RecordId, name: Symbol) -> Option<(usize, Type)> {
        self.record_fields(id)
            .iter()
            .position(|(f, _)| *f == name)
            .map(|i| (i, self.record_fields(id)[i].1))
    }

    pub fn array_elem(&self, id: ArrayId) -> Type {
        self.arrays[id.0 as usize].elem
    }

    /// `found` may be used where `expected` is required.
    pub fn compatible(&self, expected: Type, found: Type) -> bool {
        match (self.actual(expected), self.actual(found)) {
            (Type::Error, _) | (_, Type::Error) => true,
            (Type::Record(_), Type::Nil) => true,
            (a, b) => a == b,
        }
    }

    pub fn describe(&self, ty: Type) -> String {
        match ty {
            Type::Int => "int".into(),
            Type::String => "string".into(),
            Type::Nil => "nil".into(),
            Type::Unit => "no value".into(),
            Type::Error => "<error>".into(),
            Type::Record(id) => format!("record '{}'", self.records[id.0 as usize].name),
            Type::Array(id) => format!("array '{}'", self.arrays[id.0 as usize].name),
            Type::Name(id) => match self.names[id.0 as usize].resolved {
                Some(t) => self.describe(t),
                None => format!("'{}'", self.names[id.0 as usize].name),
            },
        }
    }

    pub fn is_int(&self, ty: Type) -> bool {
        self.actual(ty) == Type::Int
    }

    pub fn is_unit(&self, ty: Type) -> bool {
        self.actual(ty) == Type::Unit
    }

    /// Base type environment: `int` and `string`.
    pub fn base_tenv() -> ScopedTable<Type> {
        let mut tenv = ScopedTable::new();
        tenv.put(Symbol::intern("int"), Type::Int);
        tenv.put(Symbol::intern("string"), Type::String);
        tenv
    }

    /// Enters one maximal run of type declarations into `tenv`.
    ///
    /// All headers are bound first so the run may be mutually recursive.
    /// Alias chains that close on themselves without passing through a
    /// record or array constructor are reported once per cycle and resolve
    /// to `Error`.
    pub fn declare_type_group(
        &mut self,
        tenv: &mut ScopedTable<Type>,
        group: &[Decl],
        report: &mut dyn FnMut(Diagnostic),
    ) {
        let mut ids = Vec::with_capacity(group.len());
        for (i, decl) in group.iter().enumerate() {
            let DeclKind::Type(name, _) = &decl.kind else {
                panic!("declare_type_group on a non-type declaration")
            };
            if group[..i]
                .iter()
                .any(|d| matches!(&d.kind, DeclKind::Type(n, _) if n == name))
            {
                report(Diagnostic::new(
                    decl.pos,
                    Code::DuplicateName,
                    format!("type '{name}' declared twice in the same group"),
                ));
            }
            let id = self.new_name(*name);
            tenv.put(*name, Type::Name(id));
            ids.push(id);
        }

        let mut translated = Vec::with_capacity(group.len());
        for decl in group {
            let DeclKind::Type(name, spec) = &decl.kind else {
                unreachable!()
            };
            let ty = match &spec.kind {
                TypeSpecKind::Name(target) => lookup_type(tenv, *target, spec.pos, report),
                TypeSpecKind::Record(fields) => {
                    let mut resolved = Vec::with_capacity(fields.len());
                    for (i, f) in fields.iter().enumerate() {
                        if fields[..i].iter().any(|g| g.name == f.name) {
                            report(Diagnostic::new(
                                f.pos,
                                Code::DuplicateName,
                                format!("field '{}' declared twice", f.name),
                            ));
                        }
                        resolved.push((f.name, lookup_type(tenv, f.ty, f.pos, report)));
                    }
                    self.new_record(*name, resolved)
                }
                TypeSpecKind::Array(elem) => {
                    let elem = lookup_type(tenv, *elem, spec.pos, report);
                    self.new_array(*name, elem)
                }
            };
            translated.push(ty);
        }

        let index_of = |t: Type| match t {
            Type::Name(id) => ids.iter().position(|&x| x == id),
            _ => None,
        };
        let mut cyclic = vec![false; group.len()];
        let mut doomed = vec![false; group.len()];
        for start in 0..group.len() {
            let mut path = vec![start];
            let mut cur = start;
            while let Some(next) = index_of(translated[cur]) {
                if let Some(at) = path.iter().position(|&p| p == next) {
                    let cycle = &path[at..];
                    for &m in cycle {
                        cyclic[m] = true;
                    }
                    doomed[start] = true;
                    if cycle.contains(&start) && cycle.iter().min() == Some(&start) {
                        let DeclKind::Type(name, _) = &group[start].kind else {
                            unreachable!()
                        };
                        report(Diagnostic::new(
                            group[start].pos,
                            Code::TypeCycle,
                            format!("type alias '{name}' is defined in terms of itself"),
                        ));
                    }
                    break;
                }
                path.push(next);
                cur = next;
            }
        }
        for (i, id) in ids.into_iter().enumerate() {
            let ty = if cyclic[i] || doomed[i] {
                Type::Error
            } else {
                translated[i]
            };
            self.resolve(id, ty);
        }
    }
}

/// Looks a type name up, reporting `UNDECLARED_TYPE` when it is unbound.
pub fn lookup_type(
    tenv: &ScopedTable<Type>,
    name: Symbol,
    pos: Pos,
    report: &mut dyn FnMut(Diagnostic),
) -> Type {
    tenv.get(name).copied().unwrap_or_else(|| {
        report(Diagnostic::new(
            pos,
            Code::UndeclaredType,
            format!("undeclared type '{name}'"),
        ));
        Type::Error
    })
}
