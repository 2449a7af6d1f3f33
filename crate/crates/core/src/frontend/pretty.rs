//! Canonical source printer.
//!
//! Operator applications are fully parenthesised. Expressions whose syntax
//! is open on the right (`if`, `while`, `for`, `:=`, `t[n] of e`) are wrapped
//! in parentheses whenever they appear where trailing tokens could be
//! absorbed by them, so reparsing the output reproduces the same tree.

use crate::ast::*;

const INDENT: &str = "  ";

pub fn pretty(program: &Exp) -> String {
    let mut p = Printer {
        out: String::new(),
        indent: 0,
    };
    program.accept(&mut p);
    p.out.push('\n');
    p.out
}

struct Printer {
    out: String,
    indent: usize,
}

/// True when trailing tokens after the printed form could be swallowed by
/// the expression itself.
fn open_ended(e: &Exp) -> bool {
    match &e.kind {
        ExpKind::Assign(..)
        | ExpKind::If(..)
        | ExpKind::IfElse(..)
        | ExpKind::While(..)
        | ExpKind::For(..)
        | ExpKind::Array(..) => true,
        ExpKind::Neg(inner) => open_ended(inner),
        _ => false,
    }
}

pub fn escape_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() + 2);
    s.push('"');
    for &b in bytes {
        match b {
            b'"' => s.push_str("\\\""),
            b'\\' => s.push_str("\\\\"),
            b'\n' => s.push_str("\\n"),
            b'\t' => s.push_str("\\t"),
            0x20..=0x7e => s.push(b as char),
            _ => s.push_str(&format!("\\{b:03}")),
        }
    }
    s.push('"');
    s
}

impl Printer {
    fn newline(&mut self) {
        self.out.push('\n');
        for _ in 0..self.indent {
            self.out.push_str(INDENT);
        }
    }

    fn text(&mut self, s: &str) {
        self.out.push_str(s);
    }

    /// Prints `e` in a position where it must not absorb what follows.
    fn closed(&mut self, e: &Exp) {
        if open_ended(e) {
            self.text("(");
            e.accept(self);
            self.text(")");
        } else {
            e.accept(self);
        }
    }

    fn block(&mut self, e: &Exp) {
        self.indent += 1;
        self.newline();
        e.accept(self);
        self.indent -= 1;
    }

    fn fields(&mut self, fields: &[TypedField]) {
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.text(", ");
            }
            self.text(&format!("{}: {}", f.name, f.ty));
        }
    }
}

impl ExpVisitor for Printer {
    type Output = ();

    fn visit_int(&mut self, _: Pos, value: i64) {
        self.text(&value.to_string());
    }

    fn visit_str(&mut self, _: Pos, value: &[u8]) {
        let s = escape_string(value);
        self.text(&s);
    }

    fn visit_nil(&mut self, _: Pos) {
        self.text("nil");
    }

    fn visit_var(&mut self, _: Pos, var: &LValue) {
        var.accept(self);
    }

    fn visit_assign(&mut self, _: Pos, target: &LValue, value: &Exp) {
        target.accept(self);
        self.text(" := ");
        value.accept(self);
    }

    fn visit_seq(&mut self, _: Pos, exps: &[Exp]) {
        match exps {
            [] => self.text("()"),
            [only] => {
                self.text("(");
                only.accept(self);
                self.text(")");
            }
            _ => {
                self.text("(");
                self.indent += 1;
                for (i, e) in exps.iter().enumerate() {
                    self.newline();
                    e.accept(self);
                    if i + 1 < exps.len() {
                        self.text(";");
                    }
                }
                self.indent -= 1;
                self.newline();
                self.text(")");
            }
        }
    }

    fn visit_op(&mut self, _: Pos, left: &Exp, oper: Oper, right: &Exp) {
        self.text("(");
        self.closed(left);
        self.text(&format!(" {oper} "));
        self.closed(right);
        self.text(")");
    }

    fn visit_neg(&mut self, _: Pos, operand: &Exp) {
        self.text("-");
        match operand.kind {
            ExpKind::Int(_) | ExpKind::Var(_) | ExpKind::Call(..) | ExpKind::Op(..) => {
                operand.accept(self)
            }
            _ => {
                self.text("(");
                operand.accept(self);
                self.text(")");
            }
        }
    }

    fn visit_call(&mut self, _: Pos, name: Symbol, args: &[Exp]) {
        self.text(&format!("{name}("));
        for (i, a) in args.iter().enumerate() {
            if i > 0 {
                self.text(", ");
            }
            a.accept(self);
        }
        self.text(")");
    }

    fn visit_record(&mut self, _: Pos, ty: Symbol, fields: &[FieldInit]) {
        self.text(&format!("{ty} {{"));
        for (i, f) in fields.iter().enumerate() {
            self.text(if i == 0 { " " } else { ", " });
            self.text(&format!("{} = ", f.name));
            f.value.accept(self);
        }
        self.text(if fields.is_empty() { "}" } else { " }" });
    }

    fn visit_array(&mut self, _: Pos, ty: Symbol, size: &Exp, init: &Exp) {
        self.text(&format!("{ty}["));
        size.accept(self);
        self.text("] of ");
        init.accept(self);
    }

    fn visit_if(&mut self, _: Pos, test: &Exp, then: &Exp) {
        self.text("if ");
        test.accept(self);
        self.text(" then");
        self.block(then);
    }

    fn visit_if_else(&mut self, _: Pos, test: &Exp, then: &Exp, els: &Exp) {
        self.text("if ");
        test.accept(self);
        self.text(" then");
        self.indent += 1;
        self.newline();
        // An open-ended then-branch would capture this `else`.
        self.closed(then);
        self.indent -= 1;
        self.newline();
        self.text("else");
        self.block(els);
    }

    fn visit_while(&mut self, _: Pos, test: &Exp, body: &Exp) {
        self.text("while ");
        test.accept(self);
        self.text(" do");
        self.block(body);
    }

    fn visit_for(&mut self, _: Pos, var: Symbol, lo: &Exp, hi: &Exp, body: &Exp) {
        self.text(&format!("for {var} := "));
        lo.accept(self);
        self.text(" to ");
        hi.accept(self);
        self.text(" do");
        self.block(body);
    }

    fn visit_break(&mut self, _: Pos) {
        self.text("break");
    }

    fn visit_let(&mut self, _: Pos, decls: &[Decl], body: &[Exp]) {
        self.text("let");
        self.indent += 1;
        for d in decls {
            self.newline();
            d.accept(self);
        }
        self.indent -= 1;
        self.newline();
        self.text("in");
        self.indent += 1;
        for (i, e) in body.iter().enumerate() {
            self.newline();
            e.accept(self);
            if i + 1 < body.len() {
                self.text(";");
            }
        }
        self.indent -= 1;
        self.newline();
        self.text("end");
    }
}

impl LValueVisitor for Printer {
    type Output = ();

    fn visit_simple(&mut self, _: Pos, name: Symbol) {
        self.text(name.name());
    }

    fn visit_field(&mut self, _: Pos, base: &LValue, field: Symbol) {
        base.accept(self);
        self.text(&format!(".{field}"));
    }

    fn visit_subscript(&mut self, _: Pos, base: &LValue, index: &Exp) {
        base.accept(self);
        self.text("[");
        index.accept(self);
        self.text("]");
    }
}

impl DeclVisitor for Printer {
    type Output = ();

    fn visit_type_decl(&mut self, _: Pos, name: Symbol, spec: &TypeSpec) {
        self.text(&format!("type {name} = "));
        spec.accept(self);
    }

    fn visit_var_decl(&mut self, _: Pos, name: Symbol, ty: Option<Symbol>, init: &Exp) {
        match ty {
            Some(t) => self.text(&format!("var {name}: {t} := ")),
            None => self.text(&format!("var {name} := ")),
        }
        init.accept(self);
    }

    fn visit_fun_decl(&mut self, _: Pos, decl: &FunDecl) {
        self.text(&format!("function {}(", decl.name));
        self.fields(&decl.formals);
        self.text(")");
        if let Some(r) = decl.result {
            self.text(&format!(": {r}"));
        }
        self.text(" =");
        self.block(&decl.body);
    }
}

impl TypeSpecVisitor for Printer {
    type Output = ();

    fn visit_name_ty(&mut self, _: Pos, name: Symbol) {
        self.text(name.name());
    }

    fn visit_record_ty(&mut self, _: Pos, fields: &[TypedField]) {
        self.text("{");
        self.fields(fields);
        self.text("}");
    }

    fn visit_array_ty(&mut self, _: Pos, elem: Symbol) {
        self.text(&format!("array of {elem}"));
    }
}
