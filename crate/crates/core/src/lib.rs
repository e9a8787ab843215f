//! Natural-logic inference over Universal Dependencies parses.
//!
//! A premise is rewritten step by step (lexical substitutions, phrasal insertions and deletions,
//! syntactic variations), each step licensed by the monotonicity polarity of the words it
//! touches. If a rewrite path reaches the hypothesis the pair is an entailment; otherwise the
//! pair is checked for contradiction signatures, and failing that it is neutral.
//!
//! ```no_run
//! use std::sync::Arc;
//! use monolog_core::{conllu, Engine, EngineConfig, KnowledgeBase};
//!
//! let p = conllu::parse_single(&std::fs::read_to_string("premise.conllu").unwrap()).unwrap();
//! let h = conllu::parse_single(&std::fs::read_to_string("hypothesis.conllu").unwrap()).unwrap();
//! let engine = Engine::offline(Arc::new(KnowledgeBase::bundled()), EngineConfig::default());
//! let result = engine.classify(&p, &h).unwrap();
//! println!("{}", result.label);
//! ```

pub mod chunker;
pub mod cli;
pub mod config;
pub mod conllu;
pub mod contradiction;
pub mod error;
pub mod eval;
pub mod generation;
pub mod graph;
pub mod kb;
pub mod polarity;
pub mod scoring;
pub mod search;
pub mod sentence;

pub use error::{Error, Result};
pub use kb::KnowledgeBase;
pub use search::{Engine, EngineConfig, Inference, Label, SearchConfig};
pub use sentence::{Sentence, UDToken};
