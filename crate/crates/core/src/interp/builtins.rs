//! The standard library over interpreter values.

use std::io::{Read, Write};

use crate::diag::Code;

use super::value::Value;

#[derive(Clone, Debug, PartialEq)]
pub enum BuiltinFault {
    Trap(Code, String),
    Exit(i64),
}

fn bad_tag(name: &str, args: &[Value]) -> BuiltinFault {
    let tags: Vec<&str> = args.iter().map(Value::tag).collect();
    BuiltinFault::Trap(
        Code::BadTag,
        format!("{name} applied to ({})", tags.join(", ")),
    )
}

/// Applies the named builtin. Output write failures are ignored so that a
/// closed pipe cannot change program behaviour.
pub fn call_builtin(
    name: &str,
    args: &[Value],
    input: &mut dyn Read,
    output: &mut dyn Write,
) -> Result<Value, BuiltinFault> {
    use Value::*;
    match (name, args) {
        ("print", [Str(s)]) => {
            let _ = output.write_all(s);
            Ok(Unit)
        }
        ("flush", []) => {
            let _ = output.flush();
            Ok(Unit)
        }
        ("getchar", []) => {
            let mut byte = [0u8; 1];
            loop {
                return match input.read(&mut byte) {
                    Ok(1) => Ok(Value::str(&byte)),
                    Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
                    _ => Ok(Value::str(b"")),
                };
            }
        }
        ("ord", [Str(s)]) => Ok(Int(s.first().map_or(-1, |&b| b as i64))),
        ("chr", [Int(i)]) => match u8::try_from(*i) {
            Ok(b) => Ok(Value::str(&[b])),
            Err(_) => Err(BuiltinFault::Trap(
                Code::BadArg,
                format!("chr({i}) is outside 0..255"),
            )),
        },
        ("size", [Str(s)]) => Ok(Int(s.len() as i64)),
        ("substring", [Str(s), Int(first), Int(n)]) => {
            let len = s.len() as i64;
            if *first < 0 || *n < 0 || first.saturating_add(*n) > len {
                return Err(BuiltinFault::Trap(
                    Code::BadArg,
                    format!("substring({first}, {n}) out of range for length {len}"),
                ));
            }
            let start = *first as usize;
            Ok(Value::str(&s[start..start + *n as usize]))
        }
        ("concat", [Str(a), Str(b)]) => {
            let mut joined = Vec::with_capacity(a.len() + b.len());
            joined.extend_from_slice(a);
            joined.extend_from_slice(b);
            Ok(Value::str(&joined))
        }
        ("not", [Int(i)]) => Ok(Int((*i == 0) as i64)),
        ("exit", [Int(code)]) => Err(BuiltinFault::Exit(*code)),
        _ => Err(bad_tag(name, args)),
    }
}
