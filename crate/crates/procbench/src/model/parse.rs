//! Recursive-descent parser for the process-tree notation.
//!
//! Grammar:
//!
//! ```text
//! tree := leaf | op '(' tree (',' tree)* ')'
//! op   := '->' | 'X' | '+' | '*'
//! leaf := quoted-label | 'tau'
//! ```
//!
//! Labels are single-quoted; `\'` and `\\` escape the quote and backslash.

use super::{Activity, ProcessTree};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: found {found}, expected {}", expected.join(" | "))]
    Syntax {
        offset: usize,
        found: String,
        expected: Vec<&'static str>,
    },
    #[error("loop at byte {offset} has {found} children, expected exactly 2 (do-part, redo-part)")]
    LoopArity { offset: usize, found: usize },
    #[error("activity label at byte {offset} is empty")]
    EmptyLabel { offset: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    SeqOp,
    ChoiceOp,
    ParallelOp,
    LoopOp,
    Open,
    Close,
    Comma,
    Silent,
    Label(String),
    End,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::SeqOp => "'->'".into(),
            Token::ChoiceOp => "'X'".into(),
            Token::ParallelOp => "'+'".into(),
            Token::LoopOp => "'*'".into(),
            Token::Open => "'('".into(),
            Token::Close => "')'".into(),
            Token::Comma => "','".into(),
            Token::Silent => "'tau'".into(),
            Token::Label(l) => format!("label '{l}'"),
            Token::End => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    input: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(input: &'a str) -> Self {
        Lexer {
            input: input.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.input.len() && self.input[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Next token plus the byte offset where it starts.
    fn next_token(&mut self) -> Result<(Token, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.pos >= self.input.len() {
            return Ok((Token::End, start));
        }
        let b = self.input[self.pos];
        match b {
            b'(' => {
                self.pos += 1;
                Ok((Token::Open, start))
            }
            b')' => {
                self.pos += 1;
                Ok((Token::Close, start))
            }
            b',' => {
                self.pos += 1;
                Ok((Token::Comma, start))
            }
            b'+' => {
                self.pos += 1;
                Ok((Token::ParallelOp, start))
            }
            b'*' => {
                self.pos += 1;
                Ok((Token::LoopOp, start))
            }
            b'X' => {
                self.pos += 1;
                Ok((Token::ChoiceOp, start))
            }
            b'-' => {
                if self.input.get(self.pos + 1) == Some(&b'>') {
                    self.pos += 2;
                    Ok((Token::SeqOp, start))
                } else {
                    Err(self.unexpected(start))
                }
            }
            b't' => {
                if self.input[self.pos..].starts_with(b"tau")
                    && !matches!(
                        self.input.get(self.pos + 3),
                        Some(c) if c.is_ascii_alphanumeric() || *c == b'_'
                    )
                {
                    self.pos += 3;
                    Ok((Token::Silent, start))
                } else {
                    Err(self.unexpected(start))
                }
            }
            b'\'' => {
                self.pos += 1;
                let mut label = String::new();
                loop {
                    match self.input.get(self.pos) {
                        None => {
                            return Err(ParseError::Syntax {
                                offset: self.pos,
                                found: "end of input".into(),
                                expected: vec!["closing quote"],
                            })
                        }
                        Some(b'\'') => {
                            self.pos += 1;
                            break;
                        }
                        Some(b'\\') => {
                            self.pos += 1;
                            match self.input.get(self.pos) {
                                None => {
                                    return Err(ParseError::Syntax {
                                        offset: self.pos,
                                        found: "end of input".into(),
                                        expected: vec!["escaped character"],
                                    })
                                }
                                Some(&c) => {
                                    label.push(c as char);
                                    self.pos += 1;
                                }
                            }
                        }
                        Some(_) => {
                            // Consume one full UTF-8 scalar so multi-byte
                            // labels survive round-trips.
                            let rest = std::str::from_utf8(&self.input[self.pos..])
                                .expect("input is valid UTF-8");
                            let ch = rest.chars().next().expect("non-empty");
                            label.push(ch);
                            self.pos += ch.len_utf8();
                        }
                    }
                }
                Ok((Token::Label(label), start))
            }
            _ => Err(self.unexpected(start)),
        }
    }

    fn unexpected(&self, offset: usize) -> ParseError {
        let found = match std::str::from_utf8(&self.input[offset..]) {
            Ok(rest) => rest
                .chars()
                .next()
                .map(|c| format!("'{c}'"))
                .unwrap_or_else(|| "end of input".into()),
            Err(_) => "invalid UTF-8".into(),
        };
        ParseError::Syntax {
            offset,
            found,
            expected: vec!["'->'", "'X'", "'+'", "'*'", "'tau'", "quoted label"],
        }
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    lookahead: Option<(Token, usize)>,
}

impl<'a> Parser<'a> {
    fn new(input: &'a str) -> Self {
        Parser {
            lexer: Lexer::new(input),
            lookahead: None,
        }
    }

    fn advance(&mut self) -> Result<(Token, usize), ParseError> {
        match self.lookahead.take() {
            Some(t) => Ok(t),
            None => self.lexer.next_token(),
        }
    }

    fn expect(&mut self, want: Token, describe: &'static str) -> Result<usize, ParseError> {
        let (tok, offset) = self.advance()?;
        if tok == want {
            Ok(offset)
        } else {
            Err(ParseError::Syntax {
                offset,
                found: tok.describe(),
                expected: vec![describe],
            })
        }
    }

    fn tree(&mut self) -> Result<ProcessTree, ParseError> {
        let (tok, offset) = self.advance()?;
        match tok {
            Token::Label(label) => {
                let activity =
                    Activity::new(label).map_err(|_| ParseError::EmptyLabel { offset })?;
                Ok(ProcessTree::Leaf(activity))
            }
            Token::Silent => Ok(ProcessTree::Silent),
            Token::SeqOp => Ok(ProcessTree::Sequence(self.children()?)),
            Token::ChoiceOp => Ok(ProcessTree::Choice(self.children()?)),
            Token::ParallelOp => Ok(ProcessTree::Parallel(self.children()?)),
            Token::LoopOp => {
                let children = self.children()?;
                if children.len() != 2 {
                    return Err(ParseError::LoopArity {
                        offset,
                        found: children.len(),
                    });
                }
                let mut it = children.into_iter();
                let do_part = it.next().expect("two children");
                let redo_part = it.next().expect("two children");
                Ok(ProcessTree::Loop(Box::new(do_part), Box::new(redo_part)))
            }
            other => Err(ParseError::Syntax {
                offset,
                found: other.describe(),
                expected: vec!["'->'", "'X'", "'+'", "'*'", "'tau'", "quoted label"],
            }),
        }
    }

    fn children(&mut self) -> Result<Vec<ProcessTree>, ParseError> {
        self.expect(Token::Open, "'('")?;
        let mut children = vec![self.tree()?];
        loop {
            let (tok, offset) = self.advance()?;
            match tok {
                Token::Comma => children.push(self.tree()?),
                Token::Close => return Ok(children),
                other => {
                    return Err(ParseError::Syntax {
                        offset,
                        found: other.describe(),
                        expected: vec!["','", "')'"],
                    })
                }
            }
        }
    }
}

/// Parses a complete process-tree expression; trailing input is an error.
pub fn parse_tree(input: &str) -> Result<ProcessTree, ParseError> {
    let mut parser = Parser::new(input);
    let tree = parser.tree()?;
    let (tok, offset) = parser.advance()?;
    if tok != Token::End {
        return Err(ParseError::Syntax {
            offset,
            found: tok.describe(),
            expected: vec!["end of input"],
        });
    }
    Ok(tree)
}

/// Parses one tree from the start of `input`, returning it with the byte
/// offset of the first unconsumed character. Used to extract trees embedded
/// in surrounding free text.
pub fn parse_tree_prefix(input: &str) -> Result<(ProcessTree, usize), ParseError> {
    let mut parser = Parser::new(input);
    let tree = parser.tree()?;
    let consumed = match parser.lookahead {
        Some((_, offset)) => offset,
        None => parser.lexer.pos,
    };
    Ok((tree, consumed))
}
