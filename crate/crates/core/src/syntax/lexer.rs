use super::SyntaxError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    /// Unquoted lowercase identifier, including keywords.
    Ident(String),
    QAtom(String),
    Var(String),
    Wild,
    Int(i128),
    Str(String),
    Pid(u64),
    LBrack,
    RBrack,
    LSync,
    RSync,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Dot,
    Bang,
    Query,
    Colon,
    Slash,
    Amp,
    Plus,
    Minus,
    Star,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::QAtom(s) => format!("atom '{s}'"),
            Tok::Var(s) => format!("variable {s}"),
            Tok::Wild => "`_`".into(),
            Tok::Int(n) => format!("integer {n}"),
            Tok::Str(_) => "string".into(),
            Tok::Pid(n) => format!("pid <{n}>"),
            other => format!("`{}`", symbol(other)),
        }
    }
}

fn symbol(t: &Tok) -> &'static str {
    match t {
        Tok::LBrack => "[",
        Tok::RBrack => "]",
        Tok::LSync => "[|",
        Tok::RSync => "|]",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::Comma => ",",
        Tok::Dot => ".",
        Tok::Bang => "!",
        Tok::Query => "?",
        Tok::Colon => ":",
        Tok::Slash => "/",
        Tok::Amp => "&",
        Tok::Plus => "+",
        Tok::Minus => "-",
        Tok::Star => "*",
        Tok::Eq => "=",
        Tok::Ne => "!=",
        Tok::Lt => "<",
        Tok::Gt => ">",
        Tok::Le => "<=",
        Tok::Ge => ">=",
        _ => "?",
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub pos: Pos,
}

pub(crate) struct Lexed {
    pub toks: Vec<Spanned>,
    /// Position of the last character, used for end-of-input errors.
    pub end: Pos,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
    last: Pos,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        self.last = Pos { line: self.line, col: self.col };
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }
}

fn err(pos: Pos, msg: impl Into<String>) -> SyntaxError {
    SyntaxError::Syntax { line: pos.line, col: pos.col, message: msg.into() }
}

fn quoted(cur: &mut Cursor<'_>, close: char, start: Pos) -> Result<String, SyntaxError> {
    let mut out = String::new();
    loop {
        match cur.bump() {
            None => return Err(err(start, "unterminated quoted text")),
            Some(c) if c == close => return Ok(out),
            Some('\\') => {
                let esc_pos = cur.pos();
                match cur.bump() {
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some('r') => out.push('\r'),
                    Some(c @ ('\\' | '\'' | '"')) => out.push(c),
                    _ => return Err(err(esc_pos, "invalid escape sequence")),
                }
            }
            Some(c) => out.push(c),
        }
    }
}

pub(crate) fn lex(text: &str) -> Result<Lexed, SyntaxError> {
    let mut cur = Cursor { chars: text.chars().peekable(), line: 1, col: 1, last: Pos { line: 1, col: 1 } };
    let mut toks = Vec::new();
    while let Some(c) = cur.peek() {
        let pos = cur.pos();
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '#' {
            while let Some(c) = cur.bump() {
                if c == '\n' {
                    break;
                }
            }
            continue;
        }
        cur.bump();
        let tok = match c {
            '[' => {
                if cur.peek() == Some('|') {
                    cur.bump();
                    Tok::LSync
                } else {
                    Tok::LBrack
                }
            }
            '|' => {
                if cur.peek() == Some(']') {
                    cur.bump();
                    Tok::RSync
                } else {
                    return Err(err(pos, "expected `|]`"));
                }
            }
            ']' => Tok::RBrack,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            '?' => Tok::Query,
            ':' => Tok::Colon,
            '&' => Tok::Amp,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '!' => {
                if cur.peek() == Some('=') {
                    cur.bump();
                    Tok::Ne
                } else {
                    Tok::Bang
                }
            }
            '/' => {
                if cur.peek() == Some('=') {
                    cur.bump();
                    Tok::Ne
                } else {
                    Tok::Slash
                }
            }
            '=' => {
                if cur.peek() == Some('<') {
                    cur.bump();
                    Tok::Le
                } else {
                    Tok::Eq
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
            '<' => match cur.peek() {
                Some('=') => {
                    cur.bump();
                    Tok::Le
                }
                Some(d) if d.is_ascii_digit() => {
                    let mut digits = String::new();
                    while let Some(d) = cur.peek().filter(char::is_ascii_digit) {
                        digits.push(d);
                        cur.bump();
                    }
                    if cur.peek() != Some('>') {
                        return Err(err(pos, "unterminated pid literal"));
                    }
                    cur.bump();
                    Tok::Pid(digits.parse().map_err(|_| err(pos, "pid out of range"))?)
                }
                _ => Tok::Lt,
            },
            '"' => Tok::Str(quoted(&mut cur, '"', pos)?),
            '\'' => Tok::QAtom(quoted(&mut cur, '\'', pos)?),
            d if d.is_ascii_digit() => {
                let mut digits = String::from(d);
                while let Some(d) = cur.peek().filter(char::is_ascii_digit) {
                    digits.push(d);
                    cur.bump();
                }
                let n: i128 = digits.parse().map_err(|_| err(pos, "integer out of range"))?;
                if n > i64::MAX as i128 + 1 {
                    return Err(err(pos, "integer out of range"));
                }
                Tok::Int(n)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut word = String::from(c);
                while let Some(d) = cur.peek().filter(|d| d.is_ascii_alphanumeric() || *d == '_' || *d == '@') {
                    word.push(d);
                    cur.bump();
                }
                if word == "_" {
                    Tok::Wild
                } else if c.is_ascii_uppercase() || c == '_' {
                    Tok::Var(word)
                } else {
                    Tok::Ident(word)
                }
            }
            other => return Err(err(pos, format!("unexpected character {other:?}"))),
        };
        toks.push(Spanned { tok, pos });
    }
    Ok(Lexed { toks, end: cur.last })
}
