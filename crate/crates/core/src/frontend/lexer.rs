use crate::ast::Pos;
use crate::diag::{Code, Diagnostic};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TokenKind {
    // keywords
    Array,
    Break,
    Do,
    Else,
    End,
    For,
    Function,
    If,
    In,
    Let,
    Nil,
    Of,
    Then,
    To,
    Type,
    Var,
    While,
    // punctuation
    Comma,
    Colon,
    Semicolon,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Dot,
    Plus,
    Minus,
    Star,
    Slash,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Amp,
    Pipe,
    Assign,
    // literals and names
    Int,
    Str,
    Id,
    Eof,
}

impl TokenKind {
    fn keyword(word: &str) -> Option<TokenKind> {
        use TokenKind::*;
        Some(match word {
            "array" => Array,
            "break" => Break,
            "do" => Do,
            "else" => Else,
            "end" => End,
            "for" => For,
            "function" => Function,
            "if" => If,
            "in" => In,
            "let" => Let,
            "nil" => Nil,
            "of" => Of,
            "then" => Then,
            "to" => To,
            "type" => Type,
            "var" => Var,
            "while" => While,
            _ => return None,
        })
    }

    pub fn describe(self) -> &'static str {
        use TokenKind::*;
        match self {
            Array => "'array'",
            Break => "'break'",
            Do => "'do'",
            Else => "'else'",
            End => "'end'",
            For => "'for'",
            Function => "'function'",
            If => "'if'",
            In => "'in'",
            Let => "'let'",
            Nil => "'nil'",
            Of => "'of'",
            Then => "'then'",
            To => "'to'",
            Type => "'type'",
            Var => "'var'",
            While => "'while'",
            Comma => "','",
            Colon => "':'",
            Semicolon => "';'",
            LParen => "'('",
            RParen => "')'",
            LBracket => "'['",
            RBracket => "']'",
            LBrace => "'{'",
            RBrace => "'}'",
            Dot => "'.'",
            Plus => "'+'",
            Minus => "'-'",
            Star => "'*'",
            Slash => "'/'",
            Eq => "'='",
            Ne => "'<>'",
            Lt => "'<'",
            Le => "'<='",
            Gt => "'>'",
            Ge => "'>='",
            Amp => "'&'",
            Pipe => "'|'",
            Assign => "':='",
            Int => "integer literal",
            Str => "string literal",
            Id => "identifier",
            Eof => "end of input",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Literal {
    None,
    Int(i64),
    Str(Vec<u8>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub literal: Literal,
    pub pos: Pos,
}

struct Lexer<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    i: usize,
    line: u32,
    column: u32,
    diags: Vec<Diagnostic>,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).map(|&(_, c)| c)
    }

    fn peek2(&self) -> Option<char> {
        self.chars.get(self.i + 1).map(|&(_, c)| c)
    }

    fn pos(&self) -> Pos {
        Pos::new(self.line, self.column)
    }

    fn offset(&self) -> usize {
        self.chars.get(self.i).map_or(self.src.len(), |&(o, _)| o)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&mut self, pos: Pos, code: Code, message: impl Into<String>) {
        self.diags.push(Diagnostic::new(pos, code, message));
    }

    /// Skips a comment whose opening `/*` has already been consumed.
    fn skip_comment(&mut self, start: Pos) {
        let mut depth = 1;
        while depth > 0 {
            match self.bump() {
                None => {
                    self.error(start, Code::UnterminatedComment, "unterminated comment");
                    return;
                }
                Some('/') if self.peek() == Some('*') => {
                    self.bump();
                    depth += 1;
                }
                Some('*') if self.peek() == Some('/') => {
                    self.bump();
                    depth -= 1;
                }
                Some(_) => {}
            }
        }
    }

    fn string(&mut self, start: Pos) -> Option<Vec<u8>> {
        let mut out = Vec::new();
        let mut ok = true;
        loop {
            let here = self.pos();
            match self.bump() {
                None => {
                    self.error(
                        start,
                        Code::UnterminatedString,
                        "unterminated string literal",
                    );
                    return None;
                }
                Some('"') => break,
                Some('\\') => match self.bump() {
                    Some('n') => out.push(b'\n'),
                    Some('t') => out.push(b'\t'),
                    Some('"') => out.push(b'"'),
                    Some('\\') => out.push(b'\\'),
                    Some('^') => match self.bump() {
                        Some(c @ '@'..='_') => out.push(c as u8 - b'@'),
                        Some('?') => out.push(127),
                        _ => {
                            self.error(here, Code::BadEscape, "bad control-character escape");
                            ok = false;
                        }
                    },
                    Some(d) if d.is_ascii_digit() => {
                        let mut value = d.to_digit(10).unwrap();
                        let mut digits = 1;
                        while digits < 3 {
                            match self.peek() {
                                Some(c) if c.is_ascii_digit() => {
                                    self.bump();
                                    value = value * 10 + c.to_digit(10).unwrap();
                                    digits += 1;
                                }
                                _ => break,
                            }
                        }
                        if digits == 3 && value <= 255 {
                            out.push(value as u8);
                        } else {
                            self.error(
                                here,
                                Code::BadEscape,
                                "numeric escape must be three decimal digits no greater than 255",
                            );
                            ok = false;
                        }
                    }
                    None => {
                        self.error(
                            start,
                            Code::UnterminatedString,
                            "unterminated string literal",
                        );
                        return None;
                    }
                    Some(c) => {
                        self.error(here, Code::BadEscape, format!("unknown escape '\\{c}'"));
                        ok = false;
                    }
                },
                Some(c) => {
                    let mut buf = [0u8; 4];
                    out.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
                }
            }
        }
        ok.then_some(out)
    }

    fn run(mut self) -> Result<Vec<Token>, Vec<Diagnostic>> {
        use TokenKind::*;
        let mut tokens = Vec::new();
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            let pos = self.pos();
            let start = self.offset();
            if c == '/' && self.peek2() == Some('*') {
                self.bump();
                self.bump();
                self.skip_comment(pos);
                continue;
            }
            let (kind, literal) = if c.is_ascii_alphabetic() {
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                    self.bump();
                }
                let word = &self.src[start..self.offset()];
                (TokenKind::keyword(word).unwrap_or(Id), Literal::None)
            } else if c.is_ascii_digit() {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.bump();
                }
                let text = &self.src[start..self.offset()];
                match text.parse::<i64>() {
                    Ok(n) => (Int, Literal::Int(n)),
                    Err(_) => {
                        self.error(pos, Code::IntOverflow, "integer literal out of range");
                        continue;
                    }
                }
            } else if c == '"' {
                self.bump();
                match self.string(pos) {
                    Some(bytes) => (Str, Literal::Str(bytes)),
                    None => continue,
                }
            } else {
                self.bump();
                let next = self.peek();
                let kind = match (c, next) {
                    (':', Some('=')) => Assign,
                    ('<', Some('>')) => Ne,
                    ('<', Some('=')) => Le,
                    ('>', Some('=')) => Ge,
                    _ => match c {
                        ',' => Comma,
                        ':' => Colon,
                        ';' => Semicolon,
                        '(' => LParen,
                        ')' => RParen,
                        '[' => LBracket,
                        ']' => RBracket,
                        '{' => LBrace,
                        '}' => RBrace,
                        '.' => Dot,
                        '+' => Plus,
                        '-' => Minus,
                        '*' => Star,
                        '/' => Slash,
                        '=' => Eq,
                        '<' => Lt,
                        '>' => Gt,
                        '&' => Amp,
                        '|' => Pipe,
                        _ => {
                            self.error(pos, Code::IllegalChar, format!("illegal character {c:?}"));
                            continue;
                        }
                    },
                };
                if matches!(kind, Assign | Ne | Le | Ge) {
                    self.bump();
                }
                (kind, Literal::None)
            };
            tokens.push(Token {
                kind,
                lexeme: self.src[start..self.offset()].to_owned(),
                literal,
                pos,
            });
        }
        tokens.push(Token {
            kind: Eof,
            lexeme: String::new(),
            literal: Literal::None,
            pos: self.pos(),
        });
        if self.diags.is_empty() {
            Ok(tokens)
        } else {
            Err(self.diags)
        }
    }
}

/// Splits source text into tokens, ending with an `Eof` token.
pub fn tokenize(source: &str) -> Result<Vec<Token>, Vec<Diagnostic>> {
    Lexer {
        src: source,
        chars: source.char_indices().collect(),
        i: 0,
        line: 1,
        column: 1,
        diags: Vec::new(),
    }
    .run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenKind::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().iter().map(|t| t.kind).collect()
    }

    fn first_error(src: &str) -> Diagnostic {
        tokenize(src).unwrap_err().remove(0)
    }

    #[test]
    fn let_binding() {
        let toks = tokenize("let x := 10").unwrap();
        assert_eq!(
            toks.iter().map(|t| t.kind).collect::<Vec<_>>(),
            vec![Let, Id, Assign, Int, Eof]
        );
        assert_eq!(toks[1].lexeme, "x");
        assert_eq!(toks[3].literal, Literal::Int(10));
        assert_eq!(toks[2].pos, Pos::new(1, 7));
    }

    #[test]
    fn nested_comments() {
        assert_eq!(kinds("/* a /* nested */ still comment */1"), vec![Int, Eof]);
    }

    #[test]
    fn escapes_decode() {
        let toks = tokenize("\"a\\n\"").unwrap();
        assert_eq!(toks[0].literal, Literal::Str(b"a\n".to_vec()));
        let toks = tokenize(r#""\t\"\\\065\^A\^?""#).unwrap();
        assert_eq!(
            toks[0].literal,
            Literal::Str(vec![9, b'"', b'\\', 65, 1, 127])
        );
    }

    #[test]
    fn operators_take_longest_match() {
        assert_eq!(
            kinds("<> <= >= := < > = : &|"),
            vec![Ne, Le, Ge, Assign, Lt, Gt, Eq, Colon, Amp, Pipe, Eof]
        );
    }

    #[test]
    fn positions_track_lines() {
        let toks = tokenize("a\n  b").unwrap();
        assert_eq!(toks[1].pos, Pos::new(2, 3));
    }

    #[test]
    fn lexical_errors() {
        assert_eq!(first_error("\"abc").code, Code::UnterminatedString);
        assert_eq!(first_error("/* /* */").code, Code::UnterminatedComment);
        let e = first_error("x # y");
        assert_eq!((e.code, e.pos), (Code::IllegalChar, Pos::new(1, 3)));
        assert_eq!(first_error(r#""\q""#).code, Code::BadEscape);
        assert_eq!(first_error(r#""\25x""#).code, Code::BadEscape);
        assert_eq!(first_error(r#""\256""#).code, Code::BadEscape);
        assert_eq!(first_error("9223372036854775808").code, Code::IntOverflow);
        assert!(tokenize("9223372036854775807").is_ok());
    }

    #[test]
    fn keywords_are_whole_words() {
        assert_eq!(kinds("iffy if_ do2"), vec![Id, Id, Id, Eof]);
        assert_eq!(kinds("while"), vec![While, Eof]);
    }
}
