//! Task-oriented dialog with slot-value independent encoder-decoder models.
//!
//! The pipeline is: recognize entities in the raw dialog, replace them by
//! occurrence-ordered slot tokens such as `[LOCATION-0]` ([`entity`]), let a
//! neural encoder-decoder predict the next system utterance over those
//! tokens ([`model`]), then resolve the slots and any `[kb-search]` query
//! against the transit knowledge base ([`kb`]) to produce surface text.
//!
//! See the crate's `examples/` directory for one runnable program per
//! capability.

pub mod autodiff;
pub mod entity;
pub mod kb;
pub mod corpus;
pub mod model;
pub mod eval;
pub mod service;
