use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Sexp {
    Atom { text: String, line: usize, col: usize },
    List { items: Vec<Sexp>, line: usize, col: usize },
}

impl Sexp {
    pub fn location(&self) -> (usize, usize) {
        match self {
            Sexp::Atom { line, col, .. } | Sexp::List { line, col, .. } => (*line, *col),
        }
    }

    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom { text, .. } => Some(text),
            Sexp::List { .. } => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List { items, .. } => Some(items),
            Sexp::Atom { .. } => None,
        }
    }

    /// Lowercased head atom of a list, if any.
    pub fn head(&self) -> Option<String> {
        self.list()?.first()?.atom().map(str::to_ascii_lowercase)
    }
}

/// Reads every top-level s-expression in `text`. `;` starts a comment.
pub fn read_all(text: &str) -> Result<Vec<Sexp>, ParseError> {
    let mut stack: Vec<(Vec<Sexp>, usize, usize)> = Vec::new();
    let mut top = Vec::new();
    let mut line = 1;
    let mut col = 0;
    let mut chars = text.chars().peekable();
    let mut atom = String::new();
    let mut atom_at = (0, 0);

    fn flush(atom: &mut String, at: (usize, usize), stack: &mut [(Vec<Sexp>, usize, usize)], top: &mut Vec<Sexp>) {
        if atom.is_empty() {
            return;
        }
        let node = Sexp::Atom {
            text: std::mem::take(atom),
            line: at.0,
            col: at.1,
        };
        match stack.last_mut() {
            Some((items, _, _)) => items.push(node),
            None => top.push(node),
        }
    }

    while let Some(c) = chars.next() {
        col += 1;
        match c {
            '\n' => {
                flush(&mut atom, atom_at, &mut stack, &mut top);
                line += 1;
                col = 0;
            }
            ';' => {
                flush(&mut atom, atom_at, &mut stack, &mut top);
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' => {
                flush(&mut atom, atom_at, &mut stack, &mut top);
                stack.push((Vec::new(), line, col));
            }
            ')' => {
                flush(&mut atom, atom_at, &mut stack, &mut top);
                let (items, l, c0) = stack.pop().ok_or(ParseError::Syntax {
                    line,
                    col,
                    expected: "no unmatched `)`".into(),
                })?;
                let node = Sexp::List {
                    items,
                    line: l,
                    col: c0,
                };
                match stack.last_mut() {
                    Some((parent, _, _)) => parent.push(node),
                    None => top.push(node),
                }
            }
            c if c.is_whitespace() => flush(&mut atom, atom_at, &mut stack, &mut top),
            c => {
                if atom.is_empty() {
                    atom_at = (line, col);
                }
                atom.push(c);
            }
        }
    }
    flush(&mut atom, atom_at, &mut stack, &mut top);
    if let Some((_, l, c)) = stack.last() {
        return Err(ParseError::Syntax {
            line: *l,
            col: *c,
            expected: "closing `)` before end of input".into(),
        });
    }
    Ok(top)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_and_strips_comments() {
        let out = read_all("(a (b c) ; comment (x\n d)").unwrap();
        assert_eq!(out.len(), 1);
        let items = out[0].list().unwrap();
        assert_eq!(items.len(), 3);
        assert_eq!(items[2].atom(), Some("d"));
        assert_eq!(items[2].location(), (2, 2));
    }

    #[test]
    fn unbalanced_parens_are_errors() {
        assert!(matches!(
            read_all("(a (b)"),
            Err(ParseError::Syntax { line: 1, col: 1, .. })
        ));
        assert!(read_all("a)").is_err());
    }
}
