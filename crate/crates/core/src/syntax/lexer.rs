use num_bigint::BigInt;

use crate::diag::{Code, Diagnostic, FileId, SourceSpan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Type,
    Group,
    Union,
    Bit,
    Null,
    Stream,
    Streamlet,
    Impl,
    External,
    Instance,
    For,
    In,
    If,
    Assert,
    Int,
    Float,
    String,
    Bool,
    ClockDomain,
    Of,
    True,
    False,
    Import,
}

impl Keyword {
    pub fn from_ident(s: &str) -> Option<Keyword> {
        use Keyword::*;
        Some(match s {
            "type" => Type,
            "Group" => Group,
            "Union" => Union,
            "Bit" => Bit,
            "Null" => Null,
            "Stream" => Stream,
            "streamlet" => Streamlet,
            "impl" => Impl,
            "external" => External,
            "instance" => Instance,
            "for" => For,
            "in" => In,
            "if" => If,
            "assert" => Assert,
            "int" => Int,
            "float" => Float,
            "string" => String,
            "bool" => Bool,
            "clockdomain" => ClockDomain,
            "of" => Of,
            "true" => True,
            "false" => False,
            "import" => Import,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        use Keyword::*;
        match self {
            Type => "type",
            Group => "Group",
            Union => "Union",
            Bit => "Bit",
            Null => "Null",
            Stream => "Stream",
            Streamlet => "streamlet",
            Impl => "impl",
            External => "external",
            Instance => "instance",
            For => "for",
            In => "in",
            If => "if",
            Assert => "assert",
            Int => "int",
            Float => "float",
            String => "string",
            Bool => "bool",
            ClockDomain => "clockdomain",
            Of => "of",
            True => "true",
            False => "false",
            Import => "import",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Keyword(Keyword),
    Int(BigInt),
    Float(f64),
    Str(String),
    Semi,
    Comma,
    Colon,
    Dot,
    Assign,
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Lt,
    Gt,
    Le,
    Ge,
    EqEq,
    NotEq,
    FatArrow,
    Arrow,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    AndAnd,
    OrOr,
    Bang,
    At,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Keyword(k) => format!("keyword `{}`", k.as_str()),
            Tok::Int(i) => format!("integer `{i}`"),
            Tok::Float(f) => format!("float `{f}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Eof => "end of file".to_string(),
            other => format!("`{}`", punct_str(other)),
        }
    }
}

fn punct_str(t: &Tok) -> &'static str {
    match t {
        Tok::Semi => ";",
        Tok::Comma => ",",
        Tok::Colon => ":",
        Tok::Dot => ".",
        Tok::Assign => "=",
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LBracket => "[",
        Tok::RBracket => "]",
        Tok::Lt => "<",
        Tok::Gt => ">",
        Tok::Le => "<=",
        Tok::Ge => ">=",
        Tok::EqEq => "==",
        Tok::NotEq => "!=",
        Tok::FatArrow => "=>",
        Tok::Arrow => "->",
        Tok::Plus => "+",
        Tok::Minus => "-",
        Tok::Star => "*",
        Tok::Slash => "/",
        Tok::Caret => "^",
        Tok::AndAnd => "&&",
        Tok::OrOr => "||",
        Tok::Bang => "!",
        Tok::At => "@",
        _ => "?",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    file: FileId,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span_from(&self, line: u32, col: u32, len: u32) -> SourceSpan {
        SourceSpan::new(self.file, line, col, len)
    }
}

/// Splits source text into tokens. Comments (`//` and `/* */`) and
/// whitespace are skipped. The returned list always ends with `Eof`.
pub fn tokenize(text: &str, file: FileId) -> Result<Vec<Token>, Diagnostic> {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        file,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        // whitespace and comments
        loop {
            match cur.peek() {
                Some(c) if c.is_whitespace() => {
                    cur.bump();
                }
                Some('/') if cur.peek2() == Some('/') => {
                    while let Some(c) = cur.peek() {
                        if c == '\n' {
                            break;
                        }
                        cur.bump();
                    }
                }
                Some('/') if cur.peek2() == Some('*') => {
                    let (l, c) = (cur.line, cur.col);
                    cur.bump();
                    cur.bump();
                    let mut closed = false;
                    while let Some(ch) = cur.bump() {
                        if ch == '*' && cur.peek() == Some('/') {
                            cur.bump();
                            closed = true;
                            break;
                        }
                    }
                    if !closed {
                        return Err(Diagnostic::error(
                            Code::E001,
                            "unterminated block comment",
                            cur.span_from(l, c, 2),
                        ));
                    }
                }
                _ => break,
            }
        }
        let (line, col) = (cur.line, cur.col);
        let Some(c) = cur.bump() else {
            out.push(Token {
                tok: Tok::Eof,
                span: cur.span_from(line, col, 0),
            });
            return Ok(out);
        };
        let tok = match c {
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::from(c);
                while let Some(n) = cur.peek() {
                    if n.is_ascii_alphanumeric() || n == '_' {
                        s.push(n);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                match Keyword::from_ident(&s) {
                    Some(k) => Tok::Keyword(k),
                    None => Tok::Ident(s),
                }
            }
            c if c.is_ascii_digit() => lex_number(&mut cur, c, line, col)?,
            '"' => {
                let mut s = String::new();
                loop {
                    match cur.bump() {
                        None | Some('\n') => {
                            return Err(Diagnostic::error(
                                Code::E001,
                                "unterminated string literal",
                                cur.span_from(line, col, 1),
                            ))
                        }
                        Some('"') => break,
                        Some('\\') => match cur.bump() {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some('\\') => s.push('\\'),
                            Some('"') => s.push('"'),
                            other => {
                                return Err(Diagnostic::error(
                                    Code::E001,
                                    format!("invalid escape sequence `\\{}`", other.unwrap_or(' ')),
                                    cur.span_from(line, col, 1),
                                ))
                            }
                        },
                        Some(ch) => s.push(ch),
                    }
                }
                Tok::Str(s)
            }
            ';' => Tok::Semi,
            ',' => Tok::Comma,
            ':' => Tok::Colon,
            '.' => Tok::Dot,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '+' => Tok::Plus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '@' => Tok::At,
            '=' => match cur.peek() {
                Some('=') => {
                    cur.bump();
                    Tok::EqEq
                }
                Some('>') => {
                    cur.bump();
                    Tok::FatArrow
                }
                _ => Tok::Assign,
            },
            '-' => {
                if cur.peek() == Some('>') {
                    cur.bump();
                    Tok::Arrow
                } else {
                    Tok::Minus
                }
            }
            '<' => {
                if cur.peek() == Some('=') {
                    cur.bump();
                    Tok::Le
                } else {
                    Tok::Lt
                }
            }
            '>' => {
                if cur.peek() == Some('=') {
                    cur.bump();
                    Tok::Ge
                } else {
                    Tok::Gt
                }
            }
            '!' => {
                if cur.peek() == Some('=') {
                    cur.bump();
                    Tok::NotEq
                } else {
                    Tok::Bang
                }
            }
            '&' if cur.peek() == Some('&') => {
                cur.bump();
                Tok::AndAnd
            }
            '|' if cur.peek() == Some('|') => {
                cur.bump();
                Tok::OrOr
            }
            other => {
                return Err(Diagnostic::error(
                    Code::E001,
                    format!("unexpected character `{other}`"),
                    cur.span_from(line, col, 1),
                ))
            }
        };
        let len = if cur.line == line { cur.col - col } else { 1 };
        out.push(Token {
            tok,
            span: cur.span_from(line, col, len),
        });
    }
}

fn lex_number(cur: &mut Cursor<'_>, first: char, line: u32, col: u32) -> Result<Tok, Diagnostic> {
    let mut s = String::from(first);
    let mut is_float = false;
    while let Some(n) = cur.peek() {
        if n.is_ascii_digit() {
            s.push(n);
            cur.bump();
        } else {
            break;
        }
    }
    if cur.peek() == Some('.') && cur.peek2().is_some_and(|c| c.is_ascii_digit()) {
        is_float = true;
        s.push('.');
        cur.bump();
        while let Some(n) = cur.peek() {
            if n.is_ascii_digit() {
                s.push(n);
                cur.bump();
            } else {
                break;
            }
        }
    }
    if matches!(cur.peek(), Some('e') | Some('E')) {
        let next = cur.peek2();
        let signed = matches!(next, Some('+') | Some('-'));
        let digit_follows = if signed {
            let mut it = cur.chars.clone();
            it.next();
            it.next();
            it.next().is_some_and(|c| c.is_ascii_digit())
        } else {
            next.is_some_and(|c| c.is_ascii_digit())
        };
        if digit_follows {
            is_float = true;
            s.push('e');
            cur.bump();
            if signed {
                s.push(cur.bump().unwrap());
            }
            while let Some(n) = cur.peek() {
                if n.is_ascii_digit() {
                    s.push(n);
                    cur.bump();
                } else {
                    break;
                }
            }
        }
    }
    if is_float {
        s.parse::<f64>().map(Tok::Float).map_err(|_| {
            Diagnostic::error(
                Code::E001,
                format!("malformed float literal `{s}`"),
                SourceSpan::new(cur.file, line, col, s.chars().count() as u32),
            )
        })
    } else {
        Ok(Tok::Int(s.parse::<BigInt>().expect("digits parse as integer")))
    }
}
