//! Codepoint-based tokenizer shared by the strict parser and the repair pass.

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    LParen,
    RParen,
    Slash,
    /// Anything starting with `:`; syntax is checked by the consumer.
    Role(String),
    /// Quoted string, unescaped. `terminated` is false when the input ended
    /// before the closing quote.
    Str { value: String, terminated: bool },
    /// Any other run of non-delimiter characters.
    Symbol(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Character (not byte) offset of the first codepoint.
    pub offset: usize,
}

impl Token {
    /// Source-like rendering used when rebuilding token streams.
    pub fn text(&self) -> String {
        match &self.kind {
            TokenKind::LParen => "(".into(),
            TokenKind::RParen => ")".into(),
            TokenKind::Slash => "/".into(),
            TokenKind::Role(r) => r.clone(),
            TokenKind::Str { value, .. } => crate::graph::Constant::Str(value.clone()).to_string(),
            TokenKind::Symbol(s) => s.clone(),
        }
    }
}

fn is_delimiter(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '"' | '/')
}

pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '(' => {
                tokens.push(Token { kind: TokenKind::LParen, offset: start });
                i += 1;
            }
            ')' => {
                tokens.push(Token { kind: TokenKind::RParen, offset: start });
                i += 1;
            }
            '/' => {
                tokens.push(Token { kind: TokenKind::Slash, offset: start });
                i += 1;
            }
            '"' => {
                i += 1;
                let mut value = String::new();
                let mut terminated = false;
                while i < chars.len() {
                    match chars[i] {
                        '\\' if i + 1 < chars.len() => {
                            value.push(chars[i + 1]);
                            i += 2;
                        }
                        '"' => {
                            terminated = true;
                            i += 1;
                            break;
                        }
                        other => {
                            value.push(other);
                            i += 1;
                        }
                    }
                }
                tokens.push(Token { kind: TokenKind::Str { value, terminated }, offset: start });
            }
            _ => {
                while i < chars.len() && !is_delimiter(chars[i]) {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let kind = if word.starts_with(':') { TokenKind::Role(word) } else { TokenKind::Symbol(word) };
                tokens.push(Token { kind, offset: start });
            }
        }
    }
    tokens
}
