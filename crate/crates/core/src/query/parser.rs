use std::fmt;

use super::GraphQuery;
use crate::graph::Direction;

/// Parse failure with the byte offset of the offending token.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct SyntaxError {
    pub offset: usize,
    pub expected: Vec<&'static str>,
    pub found: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "syntax error at byte {}: expected {}, found {}",
            self.offset,
            self.expected.join(" or "),
            self.found
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Str(String),
    Int(String),
    Arrow,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => w.clone(),
            Tok::Str(s) => format!("{s:?}"),
            Tok::Int(d) => d.clone(),
            Tok::Arrow => "->".into(),
        }
    }
}

const QUERY_START: [&str; 4] = ["REACHABLE", "SHORTEST", "PREREQ", "NEIGHBORS"];
const END: &str = "end of input";

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    peeked: Option<Option<(usize, Tok)>>,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            pos: 0,
            peeked: None,
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn lex(&mut self) -> Result<Option<(usize, Tok)>, SyntaxError> {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
        let start = self.pos;
        let Some(c) = trimmed.chars().next() else {
            return Ok(None);
        };
        let take_while = |pred: fn(char) -> bool| trimmed.find(|ch: char| !pred(ch)).unwrap_or(trimmed.len());
        let tok = if c == '"' {
            let mut value = String::new();
            let mut chars = trimmed.char_indices().skip(1);
            let mut end = None;
            while let Some((i, ch)) = chars.next() {
                match ch {
                    '"' => {
                        end = Some(i + 1);
                        break;
                    }
                    '\\' => match chars.next() {
                        Some((_, esc)) => value.push(esc),
                        None => break,
                    },
                    _ => value.push(ch),
                }
            }
            let Some(len) = end else {
                return Err(SyntaxError {
                    offset: start,
                    expected: vec!["closing quote"],
                    found: END.into(),
                });
            };
            self.pos += len;
            Tok::Str(value)
        } else if c.is_ascii_digit() {
            let len = take_while(|ch| ch.is_ascii_digit());
            self.pos += len;
            Tok::Int(trimmed[..len].to_string())
        } else if c.is_alphabetic() || c == '_' {
            let len = take_while(|ch| ch.is_alphanumeric() || ch == '_');
            self.pos += len;
            Tok::Word(trimmed[..len].to_string())
        } else if trimmed.starts_with("->") {
            self.pos += 2;
            Tok::Arrow
        } else {
            return Err(SyntaxError {
                offset: start,
                expected: vec!["token"],
                found: format!("{c:?}"),
            });
        };
        Ok(Some((start, tok)))
    }

    fn peek(&mut self) -> Result<&Option<(usize, Tok)>, SyntaxError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lex()?);
        }
        Ok(self.peeked.as_ref().expect("just filled"))
    }

    fn next(&mut self) -> Result<Option<(usize, Tok)>, SyntaxError> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lex(),
        }
    }

    fn end_offset(&self) -> usize {
        self.src.len()
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
}

impl<'a> Parser<'a> {
    fn fail(&self, tok: Option<(usize, Tok)>, expected: Vec<&'static str>) -> SyntaxError {
        match tok {
            Some((offset, t)) => SyntaxError {
                offset,
                expected,
                found: t.describe(),
            },
            None => SyntaxError {
                offset: self.lex.end_offset(),
                expected,
                found: END.into(),
            },
        }
    }

    /// Consumes a keyword from `options` and returns its index.
    fn keyword(&mut self, options: &[&'static str]) -> Result<usize, SyntaxError> {
        let tok = self.lex.next()?;
        if let Some((_, Tok::Word(w))) = &tok {
            if let Some(i) = options.iter().position(|k| k.eq_ignore_ascii_case(w)) {
                return Ok(i);
            }
        }
        Err(self.fail(tok, options.to_vec()))
    }

    fn name(&mut self) -> Result<String, SyntaxError> {
        match self.lex.next()? {
            Some((_, Tok::Str(s))) if !s.is_empty() => Ok(s),
            Some((offset, Tok::Str(_))) => Err(SyntaxError {
                offset,
                expected: vec!["non-empty concept name"],
                found: "\"\"".into(),
            }),
            tok => Err(self.fail(tok, vec!["quoted concept name"])),
        }
    }

    fn arrow(&mut self) -> Result<(), SyntaxError> {
        match self.lex.next()? {
            Some((_, Tok::Arrow)) => Ok(()),
            tok => Err(self.fail(tok, vec!["->"])),
        }
    }

    fn count(&mut self) -> Result<u32, SyntaxError> {
        match self.lex.next()? {
            Some((offset, Tok::Int(d))) => match d.parse::<u32>() {
                Ok(n) if n >= 1 => Ok(n),
                _ => Err(SyntaxError {
                    offset,
                    expected: vec!["positive integer"],
                    found: d,
                }),
            },
            tok => Err(self.fail(tok, vec!["positive integer"])),
        }
    }

    fn query(&mut self) -> Result<GraphQuery, SyntaxError> {
        Ok(match self.keyword(&QUERY_START)? {
            k @ (0 | 1) => {
                let from = self.name()?;
                self.arrow()?;
                let to = self.name()?;
                if k == 0 {
                    GraphQuery::Reachable { from, to }
                } else {
                    GraphQuery::ShortestPath { from, to }
                }
            }
            2 => {
                let concept = self.name()?;
                self.keyword(&["DEPTH"])?;
                GraphQuery::Prerequisites {
                    concept,
                    depth: self.count()?,
                }
            }
            _ => {
                let concept = self.name()?;
                let direction = if self.keyword(&["IN", "OUT"])? == 0 {
                    Direction::In
                } else {
                    Direction::Out
                };
                self.keyword(&["HOPS"])?;
                GraphQuery::Neighbors {
                    concept,
                    direction,
                    hops: self.count()?,
                }
            }
        })
    }
}

/// Parses exactly one query; trailing input is an error.
pub fn parse(input: &str) -> Result<GraphQuery, SyntaxError> {
    let mut p = Parser { lex: Lexer::new(input) };
    let q = p.query()?;
    match p.lex.next()? {
        None => Ok(q),
        tok => Err(p.fail(tok, vec![END])),
    }
}

/// Parses a script of one or more queries separated by whitespace. Lines
/// starting with a code fence are ignored.
pub fn parse_script(input: &str) -> Result<Vec<GraphQuery>, SyntaxError> {
    let mut cleaned = String::with_capacity(input.len());
    for line in input.split_inclusive('\n') {
        if line.trim_start().starts_with("```") {
            // blank the line byte-for-byte so offsets still index `input`
            let body = line.trim_end_matches('\n');
            cleaned.extend(std::iter::repeat_n(' ', body.len()));
            cleaned.push_str(&line[body.len()..]);
        } else {
            cleaned.push_str(line);
        }
    }
    let mut p = Parser {
        lex: Lexer::new(&cleaned),
    };
    let mut out = vec![p.query()?];
    while p.lex.peek()?.is_some() {
        out.push(p.query()?);
    }
    Ok(out)
}
