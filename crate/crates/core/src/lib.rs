//! Toolkit for dialogue-adapted Abstract Meaning Representation.
//!
//! Graphs are read and written in PENMAN notation ([`penman`]), checked
//! against the dialogue extension inventory ([`schema`]), compared with
//! Smatch ([`smatch`]), linked across utterances ([`links`]), reduced to
//! standard AMR ([`compat`]) and prepared for or recovered from sequence
//! models ([`seq2seq`]). [`corpus`] handles corpus files.

pub mod compat;
pub mod corpus;
pub mod graph;
pub mod links;
pub mod penman;
pub mod schema;
pub mod seq2seq;
pub mod smatch;
pub mod triple;

pub use corpus::{CorpusEntry, UtteranceId};
pub use graph::{AmrGraph, Concept, Constant, Relation, Role, Target, Variable};
pub use penman::{parse, serialize, ParseError, SerializationStyle};
