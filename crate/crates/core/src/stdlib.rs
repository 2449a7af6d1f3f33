//! Signatures of the standard library functions.
//!
//! The interpreter and the VM each implement these independently; the
//! analyzer and code generator bind them from this table.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Prim {
    Int,
    String,
    Unit,
}

#[derive(Clone, Copy, Debug)]
pub struct BuiltinSig {
    pub name: &'static str,
    pub params: &'static [Prim],
    pub result: Prim,
}

use Prim::*;

pub const BUILTINS: [BuiltinSig; 10] = [
    BuiltinSig {
        name: "print",
        params: &[String],
        result: Unit,
    },
    BuiltinSig {
        name: "flush",
        params: &[],
        result: Unit,
    },
    BuiltinSig {
        name: "getchar",
        params: &[],
        result: String,
    },
    BuiltinSig {
        name: "ord",
        params: &[String],
        result: Int,
    },
    BuiltinSig {
        name: "chr",
        params: &[Int],
        result: String,
    },
    BuiltinSig {
        name: "size",
        params: &[String],
        result: Int,
    },
    BuiltinSig {
        name: "substring",
        params: &[String, Int, Int],
        result: String,
    },
    BuiltinSig {
        name: "concat",
        params: &[String, String],
        result: String,
    },
    BuiltinSig {
        name: "not",
        params: &[Int],
        result: Int,
    },
    BuiltinSig {
        name: "exit",
        params: &[Int],
        result: Unit,
    },
];

pub fn lookup(name: &str) -> Option<&'static BuiltinSig> {
    BUILTINS.iter().find(|b| b.name == name)
}

/// Arrays longer than this are refused with `HEAP_EXHAUSTED` by both the
/// interpreter and the VM.
pub const MAX_ARRAY_LEN: i64 = 1 << 22;

/// Nesting limit for user function calls. The call that would exceed it
/// fails with `STACK_OVERFLOW` in both executors.
pub const MAX_CALL_DEPTH: usize = 10_000;
