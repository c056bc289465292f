// Negated float comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bcalculus;
pub mod cli;
pub mod crank_nicolson;
pub mod curve;
pub mod decay;
pub mod error;
pub mod grid;
pub mod lyapunov;
pub mod matrix;
pub mod optimize;
pub mod quadrature;
pub mod rng;
pub mod scenario;
pub mod special;
pub mod spectral_calculus;
pub mod spectrum;
pub mod suite;
pub mod verdict;
