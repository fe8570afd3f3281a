//! Numerical machinery for mixed q-Gaussian algebras.
//!
//! The crate is organised bottom-up:
//!
//! * [`combinatorics`]: set partitions, pair partitions and crossings.
//! * [`moments`]: structure matrices, the pair-partition moment formula,
//!   Wick inner products and the Wick decomposition of generator products.
//! * [`fock`]: the truncated mixed q-Fock space with its creation,
//!   annihilation, number and Ornstein–Uhlenbeck operators.
//! * [`spinmodel`]: random-sign spin systems, symbolic word reduction,
//!   traces and their expectations, the derivation into the doubled
//!   algebra, the gradient form and a Pauli-type matrix representation.
//! * [`analysis`]: normalized Schatten norms and the inequality harnesses
//!   (hypercontractivity, log-Sobolev, Riesz, Khintchine, Poincaré, CLT).
//! * [`cli`]: the reproducible experiment runner behind the `mixedq` binary.

pub mod analysis;
pub mod cli;
pub mod combinatorics;
pub mod error;
pub mod fock;
pub mod moments;
pub mod spinmodel;

pub use error::{Error, Result};
pub use moments::{StructureMatrix, WickWord};
