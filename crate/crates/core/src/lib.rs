//! Nested lattice codes for two-way relay line networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`lattice`]: exact arithmetic on scaled cubic lattices (quantizer, `mod Λ`,
//!   second moment, the integer and real scaling identities).
//! - [`field`]: prime-field messages and the message ↔ codeword map built by
//!   Construction A, plus the linear-combination identities as executable checks.
//! - [`scheme`]: encoders, the point-to-point and decode-the-sum lattice
//!   decoders, and the re-distribution transform.
//! - [`netsim`]: the line-network channel, the block-Markov relay protocol
//!   (one relay, two relays, K relays, half duplex) and a Monte Carlo harness.
//! - [`rates`]: closed-form achievable rates, power truncation, the cut-set
//!   outer bound and the gap certificate.
//!
//! Every protocol-path lattice point is an integer vector times a rational
//! scale; floating point only enters once channel noise is added.

pub mod error;
pub mod field;
pub mod lattice;
pub mod netsim;
pub mod rates;
pub mod rational;
pub mod scheme;

pub use error::{Error, Result};
pub use field::{CombinationKey, FieldElement, MessageSlot, Stream};
pub use lattice::{CodePoint, LatticeSpec, RealVector};
pub use rational::Rational;
