//! Differentiable probabilistic Datalog for kinship reasoning.
//!
//! The crate derives multi-hop kinship relations from weighted fact bases,
//! tracking top-k proof provenance so that answer probabilities are exact
//! weighted model counts over the underlying fact and rule variables. The
//! counts are differentiable, which lets [`learner`] fit composite rule
//! weights from answer-only supervision, regularized by integrity
//! constraints expressed as semantic loss.

pub mod datagen;
pub mod engine;
pub mod learner;
pub mod logic;
pub mod manifest;
pub mod parser;
pub mod provenance;
