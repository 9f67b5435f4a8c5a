//! Nonlocality quantification for bipartite quantum states.
//!
//! The quantifier is the smallest white-noise fraction λ for which
//! λ·I/d + (1−λ)·ρ has a Bose-symmetric (M_a, M_b) extension; such an
//! extension certifies a local-hidden-variable model for M_a and M_b
//! measurement settings. The value is obtained from a single semidefinite
//! program solved by the interior-point engine in [`sdpsolve`].
//!
//! Modules:
//! - [`matcore`]: dense complex linear algebra (Kronecker products, partial
//!   traces, Jacobi eigensolvers, Gell-Mann bases).
//! - [`states`]: density matrices and the state families used in sweeps.
//! - [`sdpsolve`]: standard-form SDP engine, dual views, and an
//!   alternating-projection feasibility oracle.
//! - [`extension`]: symmetric-extension programs and the quantifier.
//! - [`metrics`]: CHSH, CGLMP, concurrence, entanglement of formation and
//!   reduced-state entropies.

// `!(x <= tol)` rejects NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod extension;
pub mod matcore;
pub mod metrics;
pub mod sdpsolve;
pub mod states;

pub use error::{Error, Result};
