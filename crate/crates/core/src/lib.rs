//! Secrecy transmission over K parallel Rayleigh wiretap channels.
//!
//! The crate is organised bottom-up:
//!
//! * [`channels`]: ensemble parameters, unit conversions and seeded gain sampling.
//! * [`outage`]: secrecy-outage probabilities for coding per sub-message (CPS)
//!   and coding across sub-messages (CAS), with Gaussian codebooks and with a
//!   constellation-constrained rate function.
//! * [`alloc`]: power/rate allocation: the closed-form CPS allocator, the CPS
//!   and CAS rate maximisers and the waterfilling / equal-power / selection
//!   baselines.
//! * [`codes`]: union bounds, the sphere-packing bound, SNR threshold solvers,
//!   BPSK capacity and the per-realization fading CER estimate.
//! * [`secgap`]: security gap and equivocation metrics built on the above.
//!
//! All core APIs take linear quantities. Decibels only appear at the edges
//! through [`channels::db_to_linear`] and [`channels::linear_to_db`].

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alloc;
pub mod channels;
pub mod codes;
pub mod error;
pub mod numeric;
pub mod outage;
pub mod secgap;

pub use error::{Error, Result};
