//! The VM's own runtime library. Kept separate from the interpreter's so
//! the two can be checked against each other.

use std::io::{ErrorKind, Read, Write};
use std::rc::Rc;

use super::exec::{TrapKind, Value};
use super::BuiltinOp;

#[derive(Clone, Debug, PartialEq)]
pub enum Fault {
    Trap(TrapKind, String),
    Exit(i64),
}

fn string(bytes: &[u8]) -> Option<Value> {
    Some(Value::Str(Rc::from(bytes)))
}

fn read_byte(input: &mut dyn Read) -> Option<u8> {
    let mut buf = [0u8];
    loop {
        match input.read(&mut buf) {
            Ok(0) => return None,
            Ok(_) => return Some(buf[0]),
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(_) => return None,
        }
    }
}

/// Runs one library call. `None` means the call produces no value.
pub fn call_builtin(
    op: BuiltinOp,
    args: &[Value],
    input: &mut dyn Read,
    output: &mut dyn Write,
) -> Result<Option<Value>, Fault> {
    let bad_arg = |msg: String| Err(Fault::Trap(TrapKind::BadArg, msg));
    match (op, args) {
        (BuiltinOp::Print, [Value::Str(s)]) => {
            output.write_all(s).ok();
            Ok(None)
        }
        (BuiltinOp::Flush, []) => {
            output.flush().ok();
            Ok(None)
        }
        (BuiltinOp::Getchar, []) => match read_byte(input) {
            Some(b) => Ok(string(&[b])),
            None => Ok(string(b"")),
        },
        (BuiltinOp::Ord, [Value::Str(s)]) => Ok(Some(Value::Int(match s.first() {
            Some(&b) => i64::from(b),
            None => -1,
        }))),
        (BuiltinOp::Chr, [Value::Int(i)]) => {
            if (0..=255).contains(i) {
                Ok(string(&[*i as u8]))
            } else {
                bad_arg(format!("chr argument {i} not in 0..255"))
            }
        }
        (BuiltinOp::Size, [Value::Str(s)]) => Ok(Some(Value::Int(s.len() as i64))),
        (BuiltinOp::Substring, [Value::Str(s), Value::Int(first), Value::Int(n)]) => {
            let (first, n) = (*first, *n);
            match (usize::try_from(first), usize::try_from(n)) {
                (Ok(f), Ok(k)) if f.checked_add(k).is_some_and(|end| end <= s.len()) => {
                    Ok(string(&s[f..f + k]))
                }
                _ => bad_arg(format!(
                    "substring of length {n} at {first} in a string of length {}",
                    s.len()
                )),
            }
        }
        (BuiltinOp::Concat, [Value::Str(a), Value::Str(b)]) => {
            Ok(string(&[a.as_ref(), b.as_ref()].concat()))
        }
        (BuiltinOp::Not, [Value::Int(i)]) => Ok(Some(Value::Int(if *i == 0 { 1 } else { 0 }))),
        (BuiltinOp::Exit, [Value::Int(code)]) => Err(Fault::Exit(*code)),
        (BuiltinOp::Strcmp, [Value::Str(a), Value::Str(b)]) => {
            Ok(Some(Value::Int(a.cmp(b) as i64)))
        }
        _ => Err(Fault::Trap(
            TrapKind::BadTag,
            format!("bad arguments to builtin '{}'", op.name()),
        )),
    }
}
