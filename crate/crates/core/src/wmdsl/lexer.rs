use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name(String),
    Int(i64),
    Str(String),
    /// Raw body of an f-string; the parser splits out `{expr}` parts.
    FStr(String),
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const OPS: &[&str] = &[
    "**=", "//=", "==", "!=", "<=", ">=", "+=", "-=", "*=", "%=", "//", "**", "->", "(", ")", "[", "]", "{", "}", ",",
    ":", ".", ";", "+", "-", "*", "/", "%", "<", ">", "=",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    Lexer {
        chars: src.chars().collect(),
        at: 0,
        line: 1,
        col: 1,
        out: Vec::new(),
        indents: vec![0],
        depth: 0,
    }
    .run()
}

struct Lexer {
    chars: Vec<char>,
    at: usize,
    line: usize,
    col: usize,
    out: Vec<Token>,
    indents: Vec<usize>,
    depth: usize,
}

impl Lexer {
    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.at + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.at).copied()?;
        self.at += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, line: usize, col: usize, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line,
            col,
            message: msg.into(),
        }
    }

    fn push(&mut self, tok: Tok, line: usize, col: usize) {
        self.out.push(Token { tok, line, col });
    }

    fn last_is_newline(&self) -> bool {
        matches!(
            self.out.last().map(|t| &t.tok),
            None | Some(Tok::Newline) | Some(Tok::Indent) | Some(Tok::Dedent)
        )
    }

    fn run(mut self) -> Result<Vec<Token>, ParseError> {
        let mut at_line_start = true;
        while self.at < self.chars.len() {
            if at_line_start && self.depth == 0 {
                at_line_start = false;
                if self.handle_indent()? {
                    at_line_start = true;
                    continue;
                }
            }
            let c = self.peek(0).unwrap_or('\n');
            let (line, col) = (self.line, self.col);
            match c {
                '\n' => {
                    self.bump();
                    if self.depth == 0 {
                        if !self.last_is_newline() {
                            self.push(Tok::Newline, line, col);
                        }
                        at_line_start = true;
                    }
                }
                ' ' | '\t' | '\r' => {
                    self.bump();
                }
                '#' => {
                    while self.peek(0).is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                }
                '\\' if self.peek(1) == Some('\n') => {
                    self.bump();
                    self.bump();
                }
                '"' | '\'' => {
                    let s = self.string()?;
                    self.push(Tok::Str(s), line, col);
                }
                'f' | 'F' if matches!(self.peek(1), Some('"') | Some('\'')) => {
                    self.bump();
                    let s = self.string()?;
                    self.push(Tok::FStr(s), line, col);
                }
                c if c.is_ascii_digit() => {
                    let mut text = String::new();
                    while let Some(d) = self.peek(0).filter(|d| d.is_ascii_digit() || *d == '_') {
                        if d != '_' {
                            text.push(d);
                        }
                        self.bump();
                    }
                    if self.peek(0).is_some_and(|c| c == '.' || c.is_alphabetic()) {
                        return Err(self.err(line, col, "only integer literals are supported"));
                    }
                    let v = text
                        .parse::<i64>()
                        .map_err(|_| self.err(line, col, "integer literal out of range"))?;
                    self.push(Tok::Int(v), line, col);
                }
                c if c.is_alphabetic() || c == '_' => {
                    let mut text = String::new();
                    while let Some(d) = self.peek(0).filter(|d| d.is_alphanumeric() || *d == '_') {
                        text.push(d);
                        self.bump();
                    }
                    self.push(Tok::Name(text), line, col);
                }
                _ => {
                    let op = OPS
                        .iter()
                        .find(|op| op.chars().enumerate().all(|(i, oc)| self.peek(i) == Some(oc)))
                        .ok_or_else(|| self.err(line, col, format!("unexpected character `{c}`")))?;
                    for _ in 0..op.len() {
                        self.bump();
                    }
                    match *op {
                        "(" | "[" | "{" => self.depth += 1,
                        ")" | "]" | "}" => {
                            self.depth = self
                                .depth
                                .checked_sub(1)
                                .ok_or_else(|| self.err(line, col, format!("unmatched `{op}`")))?
                        }
                        _ => {}
                    }
                    self.push(Tok::Op(op), line, col);
                }
            }
        }
        if self.depth > 0 {
            return Err(self.err(self.line, self.col, "unclosed bracket at end of input"));
        }
        if !self.last_is_newline() {
            self.push(Tok::Newline, self.line, self.col);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(Tok::Dedent, self.line, self.col);
        }
        self.push(Tok::Eof, self.line, self.col);
        Ok(self.out)
    }

    /// Measures indentation at the start of a logical line. Returns true when
    /// the line was blank or a comment and has been consumed.
    fn handle_indent(&mut self) -> Result<bool, ParseError> {
        let mut width = 0;
        while let Some(c) = self.peek(0) {
            match c {
                ' ' => width += 1,
                '\t' => width = (width / 4 + 1) * 4,
                '\r' => {}
                _ => break,
            }
            self.bump();
        }
        match self.peek(0) {
            None => return Ok(true),
            Some('\n') => {
                self.bump();
                return Ok(true);
            }
            Some('#') => {
                while self.peek(0).is_some_and(|c| c != '\n') {
                    self.bump();
                }
                self.bump();
                return Ok(true);
            }
            _ => {}
        }
        let current = *self.indents.last().unwrap_or(&0);
        if width > current {
            self.indents.push(width);
            self.push(Tok::Indent, self.line, self.col);
        } else if width < current {
            while *self.indents.last().unwrap_or(&0) > width {
                self.indents.pop();
                self.push(Tok::Dedent, self.line, self.col);
            }
            if *self.indents.last().unwrap_or(&0) != width {
                return Err(self.err(self.line, self.col, "inconsistent dedent"));
            }
        }
        Ok(false)
    }

    fn string(&mut self) -> Result<String, ParseError> {
        let (line, col) = (self.line, self.col);
        let quote = self.bump().unwrap_or('"');
        let triple = self.peek(0) == Some(quote) && self.peek(1) == Some(quote);
        if triple {
            self.bump();
            self.bump();
        }
        let mut out = String::new();
        loop {
            let c = self.bump().ok_or_else(|| self.err(line, col, "unterminated string"))?;
            if c == quote {
                if !triple {
                    break;
                }
                if self.peek(0) == Some(quote) && self.peek(1) == Some(quote) {
                    self.bump();
                    self.bump();
                    break;
                }
                out.push(c);
                continue;
            }
            match c {
                '\n' if !triple => return Err(self.err(line, col, "unterminated string")),
                '\\' => {
                    let e = self.bump().ok_or_else(|| self.err(line, col, "unterminated string"))?;
                    out.push(match e {
                        'n' => '\n',
                        't' => '\t',
                        other => other,
                    });
                }
                c => out.push(c),
            }
        }
        Ok(out)
    }
}
