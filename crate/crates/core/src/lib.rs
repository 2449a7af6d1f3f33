//! A toolkit for the Tiger language: parser, pretty-printer, reference
//! interpreter, type checker, stack-machine code generator and VM.

pub mod ast;
pub mod codegen;
pub mod diag;
pub mod driver;
pub mod frontend;
pub mod interp;
pub mod semant;
pub mod stdlib;
pub mod symtab;
pub mod vm;
