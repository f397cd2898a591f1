use std::fmt;

use super::SyntaxError;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Tok {
    /// `$name`, stored without the sigil.
    Var(String),
    /// Bare or namespaced name: `foreach`, `self`, `Vec\map`.
    Ident(String),
    Int(i64),
    Str(String),
    Punct(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Var(v) => write!(f, "${v}"),
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Int(i) => write!(f, "{i}"),
            Tok::Str(s) => write!(f, "'{s}'"),
            Tok::Punct(p) => write!(f, "{p}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub start: (u32, u32),
    pub end: (u32, u32),
}

// Longest first.
const PUNCTS: &[&str] = &[
    "===", "!==", "==>", "<?hh", "==", "!=", "<=", ">=", "=>", "->", "::", ".=", "+=", "&&", "||",
    "(", ")", "{", "}", "[", "]", ",", ";", "=", "<", ">", "+", "-", "*", "/", "%", ".", "?", ":",
];

/// Splits `src` into tokens. Comments (`//`, `#`, `/* */`) and the `<?hh`
/// header are dropped.
pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut lx = Lexer {
        chars: src.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    while let Some(t) = lx.next_token()? {
        if t.tok != Tok::Punct("<?hh") {
            out.push(t);
        }
    }
    Ok(out)
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
}

impl Lexer {
    fn peek(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek(0)?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn here(&self) -> (u32, u32) {
        (self.line, self.col)
    }

    fn skip_trivia(&mut self) -> Result<(), SyntaxError> {
        loop {
            match (self.peek(0), self.peek(1)) {
                (Some(c), _) if c.is_whitespace() => {
                    self.bump();
                }
                (Some('/'), Some('/')) | (Some('#'), _) => {
                    while let Some(c) = self.peek(0) {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                (Some('/'), Some('*')) => {
                    let start = self.here();
                    self.bump();
                    self.bump();
                    loop {
                        match (self.peek(0), self.peek(1)) {
                            (Some('*'), Some('/')) => {
                                self.bump();
                                self.bump();
                                break;
                            }
                            (Some(_), _) => {
                                self.bump();
                            }
                            (None, _) => {
                                return Err(SyntaxError::at(start, start, "unterminated comment"))
                            }
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn next_token(&mut self) -> Result<Option<Token>, SyntaxError> {
        self.skip_trivia()?;
        let start = self.here();
        let Some(c) = self.peek(0) else {
            return Ok(None);
        };
        let tok = if c == '$' {
            self.bump();
            let name = self.word();
            if name.is_empty() {
                return Err(SyntaxError::at(start, self.here(), "expected variable name after `$`"));
            }
            Tok::Var(name)
        } else if c.is_ascii_alphabetic() || c == '_' || c == '\\' {
            Tok::Ident(self.path())
        } else if c.is_ascii_digit() {
            let digits = self.word();
            let value = digits
                .parse::<i64>()
                .map_err(|_| SyntaxError::at(start, self.here(), format!("bad integer `{digits}`")))?;
            Tok::Int(value)
        } else if c == '\'' || c == '"' {
            self.string(c, start)?
        } else {
            let rest: String = self.chars[self.pos..].iter().take(4).collect();
            let Some(p) = PUNCTS.iter().find(|p| rest.starts_with(**p)) else {
                return Err(SyntaxError::at(start, start, format!("unexpected character `{c}`")));
            };
            for _ in 0..p.len() {
                self.bump();
            }
            Tok::Punct(p)
        };
        Ok(Some(Token {
            tok,
            start,
            end: self.here(),
        }))
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0) {
            if c.is_ascii_alphanumeric() || c == '_' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn path(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0) {
            if c.is_ascii_alphanumeric() || c == '_' || c == '\\' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn string(&mut self, quote: char, start: (u32, u32)) -> Result<Tok, SyntaxError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                Some('\\') => match self.bump() {
                    Some(c) => s.push(c),
                    None => break,
                },
                Some(c) if c == quote => return Ok(Tok::Str(s)),
                Some(c) => s.push(c),
                None => break,
            }
        }
        Err(SyntaxError::at(start, self.here(), "unterminated string literal"))
    }
}
