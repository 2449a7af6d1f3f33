//! Scoped symbol table with an undo journal.
//!
//! `end_scope` only touches the bindings made since the matching
//! `begin_scope`, so its cost is proportional to that scope's size.

use std::collections::HashMap;

use crate::ast::Symbol;

enum Mark {
    Scope,
    Bound(Symbol),
}

pub struct ScopedTable<E> {
    bindings: HashMap<Symbol, Vec<E>>,
    journal: Vec<Mark>,
    depth: usize,
}

impl<E> Default for ScopedTable<E> {
    fn default() -> Self {
        ScopedTable {
            bindings: HashMap::new(),
            journal: Vec::new(),
            depth: 0,
        }
    }
}

impl<E> ScopedTable<E> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: Symbol) -> Option<&E> {
        self.bindings.get(&key).and_then(|stack| stack.last())
    }

    /// Binds `key` in the current scope. Re-binding in the same scope makes
    /// the newer value the visible one.
    pub fn put(&mut self, key: Symbol, value: E) {
        self.bindings.entry(key).or_default().push(value);
        self.journal.push(Mark::Bound(key));
    }

    pub fn begin_scope(&mut self) {
        self.journal.push(Mark::Scope);
        self.depth += 1;
    }

    /// Panics when no scope is open.
    pub fn end_scope(&mut self) {
        assert!(self.depth > 0, "end_scope without matching begin_scope");
        while let Some(mark) = self.journal.pop() {
            match mark {
                Mark::Scope => break,
                Mark::Bound(key) => {
                    let stack = self.bindings.get_mut(&key).expect("journaled key");
                    stack.pop();
                    if stack.is_empty() {
                        self.bindings.remove(&key);
                    }
                }
            }
        }
        self.depth -= 1;
    }

    pub fn depth(&self) -> usize {
        self.depth
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(name: &str) -> Symbol {
        Symbol::intern(name)
    }

    #[test]
    fn get_put_and_shadowing() {
        let mut t = ScopedTable::new();
        assert_eq!(t.get(s("x")), None);
        t.put(s("x"), 'a');
        assert_eq!(t.get(s("x")), Some(&'a'));
        t.begin_scope();
        t.put(s("x"), 'b');
        assert_eq!(t.get(s("x")), Some(&'b'));
        t.end_scope();
        assert_eq!(t.get(s("x")), Some(&'a'));
    }

    #[test]
    fn latest_wins_in_one_scope() {
        let mut t = ScopedTable::new();
        t.put(s("x"), 1);
        t.put(s("x"), 2);
        assert_eq!(t.get(s("x")), Some(&2));
        t.put(s("y"), 3);
        assert_eq!(t.get(s("x")), Some(&2));
    }

    #[test]
    fn scopes_restore_state() {
        let mut t = ScopedTable::new();
        t.begin_scope();
        t.put(s("x"), 1);
        t.end_scope();
        assert_eq!(t.get(s("x")), None);

        t.put(s("x"), 1);
        t.begin_scope();
        t.put(s("y"), 2);
        t.put(s("x"), 3);
        t.put(s("x"), 4);
        t.end_scope();
        assert_eq!(t.get(s("y")), None);
        assert_eq!(t.get(s("x")), Some(&1));

        t.begin_scope();
        t.end_scope();
        assert_eq!(t.get(s("x")), Some(&1));
        assert_eq!(t.depth(), 0);
    }

    #[test]
    #[should_panic(expected = "end_scope without matching begin_scope")]
    fn end_scope_at_depth_zero_faults() {
        ScopedTable::<i32>::new().end_scope();
    }
}
