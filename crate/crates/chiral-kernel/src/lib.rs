//! Computational kernel for chiral conformal field theory on the circle.
//!
//! The crate has two halves that meet in the middle:
//!
//! * a *geometric* half — the Möbius group acting on `S¹` ([`mobius`]), the
//!   group of once-differentiable piecewise Möbius transformations and its
//!   vector fields ([`pcw`]), and Fourier-side machinery for circle functions
//!   with the `‖·‖₃⁄₂` norm ([`fourier`]);
//! * an *algebraic* half — Virasoro lowest-weight modules over exact
//!   rationals ([`verma`]), lowest-weight ladder representations of the
//!   universal cover of the Möbius group ([`sl2`]), the U(1) current module
//!   and the Sugawara construction ([`heisenberg`]), and truncated smeared
//!   stress-energy operators with energy-bound verification ([`smeared`]).
//!
//! Every computation is finite and checkable: identities that hold exactly
//! are tested in exact rational arithmetic, identities that involve square
//! roots or eigenvalues are tested in binary64 against stated tolerances.
//!
//! The `examples/` directory contains one runnable example per capability;
//! the `chiral-kernel` binary exposes the same operations as subcommands
//! with JSON output (see [`cli`]).

pub mod cli;
pub mod exact;
pub mod fourier;
pub mod heisenberg;
pub mod mobius;
pub mod pcw;
pub mod sl2;
pub mod smeared;
pub mod verma;

/// Absolute tolerance for geometric comparisons on the circle.
pub const TOL_GEO: f64 = 1e-10;

/// Tolerance at which closed-form geometric identities must hold.
pub const TOL_EXACT: f64 = 1e-12;
