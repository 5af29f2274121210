//! PENMAN reading and writing.
//!
//! The codec handles exactly one graph expression; `#` metadata lines belong
//! to the corpus layer.

pub mod lexer;
mod parse;
mod serialize;

pub use parse::{parse, ParseError, ParseErrorKind};
pub use serialize::{layout, serialize, LayoutChild, LayoutNode, SerializationStyle, SerializeError};
