//! Finite spin model: generators `x_i(k)` that square to one and commute up
//! to random signs `eps`, together with the derivation and gradient form.

pub mod clt;
pub mod element;
pub mod epsilon;
pub mod matrix;
pub mod word;

pub use clt::{
    clt_bruteforce, clt_exact, clt_expectation, clt_monte_carlo, clt_statistic, exact_cost, CltMode,
    ExpectationProfile, DEFAULT_BUDGET,
};
pub use element::{
    conditional_expectation, derivation, gradient_form, gradient_form_via_derivation, in_derivation_span,
    number_operator_spin, ou_spin, sqrt_number_operator, subsets_up_to, SpinElement,
};
pub use epsilon::{derive_seed, sample_epsilon, EpsilonTable, Letter, Scheme};
pub use matrix::{matrix_representation, normalized_trace, HermitianMatrix, PauliMonomial, Representation};
pub use word::{expected_trace, reduce, reduce_random_schedule, trace, SpinWord, SymbolicTrace};
