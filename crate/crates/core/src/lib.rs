//! Tree interpolation for quantified SMT formulas from instantiation-based
//! resolution proofs.
//!
//! The pipeline is: parse a [`problem::TreeProblem`] and a [`proof::Proof`],
//! check the proof, pick a [`colour::Colouring`], compute one partial tree
//! interpolant per proof node with [`interp::Interpolator`], and optionally
//! validate every vector with [`validate::check_all`].

#[cfg(test)]
mod fixtures;
pub mod formula;
pub mod terms;
pub mod colour;
pub mod interp;
pub mod oracle;
pub mod pipeline;
pub mod problem;
pub mod simplify;
pub mod proof;
pub mod syntax;
#[doc(hidden)]
pub mod testing;
pub mod validate;
