use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use crate::ast::Symbol;

/// Runtime values. Records and arrays are heap cells compared by identity.
#[derive(Clone)]
pub enum Value {
    Int(i64),
    Str(Rc<[u8]>),
    Record(Rc<RecordCell>),
    Array(Rc<ArrayCell>),
    Nil,
    Unit,
}

pub struct RecordCell {
    pub fields: RefCell<Vec<(Symbol, Value)>>,
}

pub struct ArrayCell {
    pub elems: RefCell<Vec<Value>>,
}

impl Value {
    pub fn str(bytes: &[u8]) -> Value {
        Value::Str(Rc::from(bytes))
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Str(_) => "string",
            Value::Record(_) => "record",
            Value::Array(_) => "array",
            Value::Nil => "nil",
            Value::Unit => "no value",
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Record(a), Value::Record(b)) => Rc::ptr_eq(a, b),
            (Value::Array(a), Value::Array(b)) => Rc::ptr_eq(a, b),
            (Value::Nil, Value::Nil) | (Value::Unit, Value::Unit) => true,
            _ => false,
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Str(s) => write!(f, "{:?}", String::from_utf8_lossy(s)),
            Value::Record(r) => write!(f, "<record {:p}>", Rc::as_ptr(r)),
            Value::Array(a) => write!(
                f,
                "<array {:p} len {}>",
                Rc::as_ptr(a),
                a.elems.borrow().len()
            ),
            Value::Nil => f.write_str("nil"),
            Value::Unit => f.write_str("()"),
        }
    }
}
