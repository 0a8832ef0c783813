use std::collections::HashMap;
use std::sync::Arc;

use super::{AtomPattern, Constant, FactSet, GroundAtom, Program, Rule, Term};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Implies,
    Eof,
}

#[derive(Clone, Copy, Debug)]
struct Pos {
    line: usize,
    column: usize,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    fn next_token(&mut self) -> Result<(Tok, Pos)> {
        loop {
            match self.chars.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('%') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        let pos = self.pos();
        let Some(&c) = self.chars.peek() else {
            return Ok((Tok::Eof, pos));
        };
        let tok = match c {
            '(' => {
                self.bump();
                Tok::LParen
            }
            ')' => {
                self.bump();
                Tok::RParen
            }
            ',' => {
                self.bump();
                Tok::Comma
            }
            '.' => {
                self.bump();
                Tok::Dot
            }
            ':' => {
                self.bump();
                if self.chars.peek() == Some(&'-') {
                    self.bump();
                    Tok::Implies
                } else {
                    return Err(syntax(pos, "expected `:-`"));
                }
            }
            c if is_ident_char(c) => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if !is_ident_char(c) {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Tok::Ident(s)
            }
            other => return Err(syntax(pos, &format!("unexpected character `{other}`"))),
        };
        Ok((tok, pos))
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn is_variable(name: &str) -> bool {
    name.chars()
        .next()
        .is_some_and(|c| c.is_uppercase() || c == '_')
}

fn syntax(pos: Pos, message: &str) -> Error {
    Error::Syntax {
        line: pos.line,
        column: pos.column,
        message: message.to_string(),
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    pos: Pos,
    arities: HashMap<String, usize>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Result<Self> {
        let mut lexer = Lexer::new(text);
        let (tok, pos) = lexer.next_token()?;
        Ok(Parser {
            lexer,
            tok,
            pos,
            arities: HashMap::new(),
        })
    }

    fn advance(&mut self) -> Result<()> {
        let (tok, pos) = self.lexer.next_token()?;
        self.tok = tok;
        self.pos = pos;
        Ok(())
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if self.tok == want {
            self.advance()
        } else {
            Err(syntax(self.pos, &format!("expected {what}, found {:?}", self.tok)))
        }
    }

    fn atom(&mut self) -> Result<(AtomPattern, Pos)> {
        let start = self.pos;
        let Tok::Ident(name) = self.tok.clone() else {
            return Err(syntax(self.pos, &format!("expected a predicate, found {:?}", self.tok)));
        };
        if is_variable(&name) && name.starts_with('_') {
            return Err(syntax(start, "predicate names cannot start with `_`"));
        }
        self.advance()?;
        let mut terms = Vec::new();
        if self.tok == Tok::LParen {
            self.advance()?;
            if self.tok != Tok::RParen {
                loop {
                    let Tok::Ident(t) = self.tok.clone() else {
                        return Err(syntax(self.pos, &format!("expected a term, found {:?}", self.tok)));
                    };
                    terms.push(if is_variable(&t) {
                        Term::Var(Arc::from(t.as_str()))
                    } else {
                        Term::Const(Constant::new(&t))
                    });
                    self.advance()?;
                    if self.tok == Tok::Comma {
                        self.advance()?;
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen, "`)`")?;
        }
        match self.arities.get(&name) {
            Some(&a) if a != terms.len() => {
                return Err(Error::Arity {
                    predicate: name,
                    expected: a,
                    found: terms.len(),
                    line: start.line,
                    column: start.column,
                })
            }
            Some(_) => {}
            None => {
                self.arities.insert(name.clone(), terms.len());
            }
        }
        Ok((
            AtomPattern {
                predicate: Arc::from(name.as_str()),
                terms,
            },
            start,
        ))
    }
}

/// Parses a program text into rules and ground facts.
///
/// Every predicate that occurs is declared in the returned program.
pub fn parse_program(text: &str) -> Result<(Program, FactSet)> {
    let mut p = Parser::new(text)?;
    let mut program = Program::default();
    let mut facts = FactSet::new();
    while p.tok != Tok::Eof {
        let (head, head_pos) = p.atom()?;
        match p.tok {
            Tok::Dot => {
                p.advance()?;
                let mut args = Vec::with_capacity(head.terms.len());
                for t in &head.terms {
                    match t {
                        Term::Const(c) => args.push(c.clone()),
                        Term::Var(v) => {
                            return Err(syntax(head_pos, &format!("fact contains variable `{v}`")))
                        }
                    }
                }
                program.declare(&head.predicate, args.len())?;
                facts.insert(GroundAtom::from_parts(head.predicate, args));
            }
            Tok::Implies => {
                p.advance()?;
                let mut body = vec![p.atom()?.0];
                while p.tok == Tok::Comma {
                    p.advance()?;
                    body.push(p.atom()?.0);
                }
                p.expect(Tok::Dot, "`.`")?;
                let rule = Rule { head, body };
                if let Some(v) = rule.unsafe_variable() {
                    return Err(Error::UnsafeRule {
                        variable: v.to_string(),
                        line: head_pos.line,
                        column: head_pos.column,
                    });
                }
                program.add_rule(rule)?;
            }
            _ => return Err(syntax(p.pos, &format!("expected `.` or `:-`, found {:?}", p.tok))),
        }
    }
    Ok((program, facts))
}

/// Parses facts that must fit an existing program's vocabulary.
///
/// Rules in the text are accepted only if the program already has them.
pub fn parse_facts_for(program: &Program, text: &str) -> Result<FactSet> {
    let (other, facts) = parse_program(text)?;
    for rule in other.rules() {
        if !program.rules().contains(rule) {
            return Err(Error::Config(format!(
                "rule `{rule}` is not part of the reference program"
            )));
        }
    }
    for f in &facts {
        program.check_atom(f)?;
    }
    Ok(facts)
}

/// Parses one ground atom such as `Edge(a,b)`, with or without a final dot.
pub fn parse_atom(text: &str) -> Result<GroundAtom> {
    let trimmed = text.trim();
    let owned;
    let text = if trimmed.ends_with('.') {
        trimmed
    } else {
        owned = format!("{trimmed}.");
        &owned
    };
    let (program, facts) = parse_program(text)?;
    if !program.rules().is_empty() || facts.len() != 1 {
        return Err(Error::Syntax {
            line: 1,
            column: 1,
            message: format!("expected a single ground atom, found `{trimmed}`"),
        });
    }
    Ok(facts.into_iter().next().expect("one fact"))
}
