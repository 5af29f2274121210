use std::collections::HashMap;

use thiserror::Error;

use super::lexer::{tokenize, Token, TokenKind};
use crate::graph::{looks_like_variable, AmrGraph, Concept, Constant, Relation, Role, Target, Variable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParseErrorKind {
    UnbalancedParens,
    DuplicateVariableDefinition,
    DanglingReentrancy,
    EmptyNode,
    MalformedRole,
}

/// Offsets are character offsets into the parsed text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unbalanced parentheses at offset {offset}")]
    UnbalancedParens { offset: usize },
    #[error("variable `{var}` is defined twice (offset {offset})")]
    DuplicateVariableDefinition { var: String, offset: usize },
    #[error("variable `{var}` is used but never defined (offset {offset})")]
    DanglingReentrancy { var: String, offset: usize },
    #[error("node without a valid variable and concept at offset {offset}")]
    EmptyNode { offset: usize },
    #[error("malformed role `{role}` at offset {offset}")]
    MalformedRole { role: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::UnbalancedParens { offset }
            | ParseError::DuplicateVariableDefinition { offset, .. }
            | ParseError::DanglingReentrancy { offset, .. }
            | ParseError::EmptyNode { offset }
            | ParseError::MalformedRole { offset, .. } => *offset,
        }
    }

    pub fn kind(&self) -> ParseErrorKind {
        match self {
            ParseError::UnbalancedParens { .. } => ParseErrorKind::UnbalancedParens,
            ParseError::DuplicateVariableDefinition { .. } => ParseErrorKind::DuplicateVariableDefinition,
            ParseError::DanglingReentrancy { .. } => ParseErrorKind::DanglingReentrancy,
            ParseError::EmptyNode { .. } => ParseErrorKind::EmptyNode,
            ParseError::MalformedRole { .. } => ParseErrorKind::MalformedRole,
        }
    }
}

enum Pending {
    Resolved(Target),
    /// Bare token whose meaning depends on the full set of definitions.
    Atom { token: String, offset: usize },
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    instances: Vec<(Variable, Concept)>,
    defined: HashMap<Variable, usize>,
    relations: Vec<(Variable, Role, Pending)>,
}

/// Parses exactly one PENMAN expression.
pub fn parse(text: &str) -> Result<AmrGraph, ParseError> {
    let mut p = Parser {
        tokens: tokenize(text),
        pos: 0,
        instances: Vec::new(),
        defined: HashMap::new(),
        relations: Vec::new(),
    };
    let root = match p.tokens.first() {
        None => return Err(ParseError::EmptyNode { offset: 0 }),
        Some(Token { kind: TokenKind::LParen, .. }) => p.node()?,
        Some(t) => return Err(ParseError::UnbalancedParens { offset: t.offset }),
    };
    if let Some(extra) = p.tokens.get(p.pos) {
        return Err(ParseError::UnbalancedParens { offset: extra.offset });
    }
    p.finish(root)
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn unclosed(&self, open: usize) -> ParseError {
        ParseError::UnbalancedParens { offset: open }
    }

    fn node(&mut self) -> Result<Variable, ParseError> {
        let open = self.next().expect("caller checked for `(`").offset;
        let var = match self.next() {
            None => return Err(self.unclosed(open)),
            Some(Token { kind: TokenKind::Symbol(s), offset }) => {
                Variable::new(s).ok_or(ParseError::EmptyNode { offset })?
            }
            Some(t) => return Err(ParseError::EmptyNode { offset: t.offset }),
        };
        match self.next() {
            Some(Token { kind: TokenKind::Slash, .. }) => {}
            None => return Err(self.unclosed(open)),
            Some(t) => return Err(ParseError::EmptyNode { offset: t.offset }),
        }
        let concept = match self.next() {
            Some(Token { kind: TokenKind::Symbol(s), offset }) => {
                Concept::new(s).ok_or(ParseError::EmptyNode { offset })?
            }
            None => return Err(self.unclosed(open)),
            Some(t) => return Err(ParseError::EmptyNode { offset: t.offset }),
        };
        let var_offset = self.tokens[self.pos - 3].offset;
        if self.defined.contains_key(&var) {
            return Err(ParseError::DuplicateVariableDefinition { var: var.to_string(), offset: var_offset });
        }
        self.defined.insert(var.clone(), var_offset);
        self.instances.push((var.clone(), concept));

        loop {
            let Some(tok) = self.next() else {
                return Err(self.unclosed(open));
            };
            let role = match tok.kind {
                TokenKind::RParen => return Ok(var),
                TokenKind::Role(label) => match Role::new(label.clone()) {
                    Some(r) => r,
                    None => return Err(ParseError::MalformedRole { role: label, offset: tok.offset }),
                },
                _ => {
                    return Err(ParseError::MalformedRole { role: tok.text(), offset: tok.offset });
                }
            };
            let value = match self.peek().cloned() {
                None => return Err(self.unclosed(open)),
                Some(Token { kind: TokenKind::LParen, .. }) => {
                    let child = self.node()?;
                    Pending::Resolved(Target::Node(child))
                }
                Some(Token { kind: TokenKind::Str { value, terminated }, .. }) => {
                    self.pos += 1;
                    if !terminated {
                        return Err(self.unclosed(open));
                    }
                    Pending::Resolved(Target::Const(Constant::Str(value)))
                }
                Some(Token { kind: TokenKind::Symbol(s), offset }) => {
                    self.pos += 1;
                    Pending::Atom { token: s, offset }
                }
                Some(_) => {
                    return Err(ParseError::MalformedRole { role: role.to_string(), offset: tok.offset });
                }
            };
            self.relations.push((var.clone(), role, value));
        }
    }

    fn finish(self, root: Variable) -> Result<AmrGraph, ParseError> {
        let mut relations = Vec::with_capacity(self.relations.len());
        for (source, role, value) in self.relations {
            let target = match value {
                Pending::Resolved(t) => t,
                Pending::Atom { token, offset } => {
                    let as_var = Variable::new(token.clone());
                    match as_var {
                        Some(v) if self.defined.contains_key(&v) => Target::Node(v),
                        _ if looks_like_variable(&token) => {
                            return Err(ParseError::DanglingReentrancy { var: token, offset });
                        }
                        _ => Target::Const(Constant::from_bare(&token)),
                    }
                }
            };
            relations.push(Relation { source, role, target });
        }
        Ok(AmrGraph { root, instances: self.instances.into_iter().collect(), relations })
    }
}
