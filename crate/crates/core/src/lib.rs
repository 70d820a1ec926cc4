//! stratnet: training and evaluation of classifiers that are robust to
//! strategic opponents — attackers whose perturbations maximize an explicit
//! utility over prediction outcomes rather than raw error.
//!
//! The crate covers the full desk-scale pipeline: a small dense-network
//! engine with exact gradients ([`nn`]), utility matrices and incentive
//! uncertainty sets ([`utility`]), the attack family from untargeted PGD to
//! sequential `[0,1]`-utility responses ([`attack`]), training loops
//! ([`train`]), measurement machinery ([`eval`]), utility inference from
//! attack logs ([`infer`]), dataset handling ([`data`]), and a config-driven
//! experiment runner ([`cli`]).

pub mod attack;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod infer;
pub mod nn;
pub mod report;
pub mod rng;
pub mod train;
pub mod utility;

pub use error::{Error, Result};
