//! Preposition embeddings from (word, word, preposition) co-occurrence tensors.
//!
//! The pipeline counts a sparse `N x N x (K+1)` tensor from raw text
//! ([`corpus`]), factors `log(1+X)` with Orth-ALS or a weighted
//! decomposition ([`factorize`]), answers geometric queries over the
//! resulting vectors ([`embeddings`]), and feeds them to two downstream
//! classifiers: preposition selection ([`select`]) and prepositional
//! attachment ([`attach`]), both built on the small learners in [`learn`].

pub mod attach;
pub mod corpus;
pub mod embeddings;
pub mod factorize;
pub mod learn;
pub mod lexicon;
pub mod linalg;
pub mod select;
pub mod synth;
