//! Multivariate infinitely divisible distributions given by Lévy triplets:
//! validation and truncation of Lévy measures, characteristic functions,
//! moment-existence oracles driven by the truncated measure, samplers for
//! compound-Poisson and variance-mixture families, and self-decomposability
//! classification of the positive-mixing stable mixture family.

pub mod mixture;
pub mod quad;
pub mod rng;
pub mod scalar_law;
pub mod special;
pub mod triplet;
