//! Configuration-model random multigraphs and their Poisson surrogate.
//!
//! * [`degrees`]: validated degree sequences and generator families.
//! * [`sampler`]: uniform half-edge pairings and the collision count `Z`
//!   (loops plus pairs of parallel edges).
//! * [`surrogate`]: the independent-Poisson surrogate `Ẑ`, its closed-form
//!   `P(Ẑ = 0)`, exact moments via cumulants, and direct sampling.
//! * [`exact`]: brute-force enumeration and finite-`N` closed forms.
//! * [`moments`]: Stirling/cumulant conversions and the `h_m` polynomials.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod degrees;
pub mod error;
pub mod exact;
pub mod moments;
pub mod rng;
pub mod sampler;
pub mod surrogate;

pub use degrees::{BipartiteDegreePair, DegreeSequence};
pub use error::{Error, Result};
pub use exact::ExactSummary;
pub use sampler::{CollisionStats, Pairing};
pub use surrogate::SurrogateModel;
