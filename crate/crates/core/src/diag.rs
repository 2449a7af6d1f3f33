//! Positioned diagnostics shared by the front end, the analyzer, the
//! interpreter and the assembler.

use std::fmt;

use crate::ast::Pos;

macro_rules! codes {
    ($($(#[$doc:meta])* $variant:ident => $text:literal,)*) => {
        /// The closed set of diagnostic codes.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Code {
            $($(#[$doc])* $variant,)*
        }

        impl Code {
            pub const ALL: &'static [Code] = &[$(Code::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(Code::$variant => $text,)*
                }
            }

            pub fn parse(text: &str) -> Option<Code> {
                match text {
                    $($text => Some(Code::$variant),)*
                    _ => None,
                }
            }
        }
    };
}

codes! {
    // lexical
    IllegalChar => "ILLEGAL_CHAR",
    UnterminatedString => "UNTERMINATED_STRING",
    UnterminatedComment => "UNTERMINATED_COMMENT",
    BadEscape => "BAD_ESCAPE",
    IntOverflow => "INT_OVERFLOW",
    // syntactic
    UnexpectedToken => "UNEXPECTED_TOKEN",
    MissingDelimiter => "MISSING_DELIMITER",
    MalformedDecl => "MALFORMED_DECL",
    // static semantics
    UndeclaredVar => "UNDECLARED_VAR",
    UndeclaredType => "UNDECLARED_TYPE",
    UndeclaredFun => "UNDECLARED_FUN",
    NotAVar => "NOT_A_VAR",
    NotAFun => "NOT_A_FUN",
    OperandType => "OPERAND_TYPE",
    ComparisonType => "COMPARISON_TYPE",
    IfElseBranchMismatch => "IFELSE_BRANCH_MISMATCH",
    CondNotInt => "COND_NOT_INT",
    BodyNotUnit => "BODY_NOT_UNIT",
    AssignType => "ASSIGN_TYPE",
    AssignLoopVar => "ASSIGN_LOOPVAR",
    ArityMismatch => "ARITY_MISMATCH",
    ArgType => "ARG_TYPE",
    FieldUnknown => "FIELD_UNKNOWN",
    FieldOrder => "FIELD_ORDER",
    NotARecord => "NOT_A_RECORD",
    NotAnArray => "NOT_AN_ARRAY",
    IndexNotInt => "INDEX_NOT_INT",
    TypeCycle => "TYPE_CYCLE",
    DuplicateName => "DUPLICATE_NAME",
    BreakOutsideLoop => "BREAK_OUTSIDE_LOOP",
    NilUnconstrained => "NIL_UNCONSTRAINED",
    VoidValue => "VOID_VALUE",
    // runtime
    DivZero => "DIV_ZERO",
    NilDeref => "NIL_DEREF",
    IndexOob => "INDEX_OOB",
    BadArg => "BAD_ARG",
    BadTag => "BAD_TAG",
    NotCallable => "NOT_CALLABLE",
    HeapExhausted => "HEAP_EXHAUSTED",
    StackOverflow => "STACK_OVERFLOW",
    // assembler
    UnknownMnemonic => "UNKNOWN_MNEMONIC",
    BadOperand => "BAD_OPERAND",
    DuplicateLabel => "DUPLICATE_LABEL",
    NoSuchLabel => "NO_SUCH_LABEL",
    MissingMain => "MISSING_MAIN",
}

impl Code {
    /// The codes `semant` may report.
    pub const SEMANTIC: &'static [Code] = &[
        Code::UndeclaredVar,
        Code::UndeclaredType,
        Code::UndeclaredFun,
        Code::NotAVar,
        Code::NotAFun,
        Code::OperandType,
        Code::ComparisonType,
        Code::IfElseBranchMismatch,
        Code::CondNotInt,
        Code::BodyNotUnit,
        Code::AssignType,
        Code::AssignLoopVar,
        Code::ArityMismatch,
        Code::ArgType,
        Code::FieldUnknown,
        Code::FieldOrder,
        Code::NotARecord,
        Code::NotAnArray,
        Code::IndexNotInt,
        Code::TypeCycle,
        Code::DuplicateName,
        Code::BreakOutsideLoop,
        Code::NilUnconstrained,
        Code::VoidValue,
    ];

    /// Runtime faults that a well-typed program can never raise. Seeing one
    /// after a clean analysis means the analyzer let something through.
    pub fn is_type_fault(self) -> bool {
        matches!(
            self,
            Code::BadTag
                | Code::NotCallable
                | Code::AssignLoopVar
                | Code::BreakOutsideLoop
                | Code::UndeclaredVar
                | Code::UndeclaredType
                | Code::UndeclaredFun
        )
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub pos: Pos,
    pub code: Code,
    pub message: String,
}

impl Diagnostic {
    pub fn new(pos: Pos, code: Code, message: impl Into<String>) -> Diagnostic {
        let message = message.into();
        debug_assert!(!message.is_empty());
        Diagnostic { pos, code, message }
    }

    /// `<file>:<line>:<col>: error[<CODE>]: <message>`
    pub fn render(&self, file: &str) -> String {
        format!(
            "{}:{}:{}: error[{}]: {}",
            file, self.pos.line, self.pos.column, self.code, self.message
        )
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: error[{}]: {}", self.pos, self.code, self.message)
    }
}

impl std::error::Error for Diagnostic {}
