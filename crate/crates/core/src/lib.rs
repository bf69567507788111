//! Composer attribution for **kern scores.
//!
//! The pipeline parses scores ([`kern`]), encodes them as sparse binary
//! tensors ([`encode`]), and trains pooled convolutional classifiers
//! ([`models`]) on a small reverse-mode differentiation engine
//! ([`autodiff`]). [`harness`] runs the cross-validated experiments;
//! [`corpus`] knows the reference collection and writes synthetic scores.

pub mod kern;
pub mod encode;
pub mod autodiff;
pub mod models;
pub mod harness;
pub mod corpus;
