//! Random-step Markov representations of stationary processes.
//!
//! A *random-step Markov process* is a stationary process `(X_i)` coupled
//! with an independent process of look-back distances `(L_i)` so that,
//! conditioned on `{L_0 = n}`, the law of the present given the entire past
//! equals its law given only the `n` most recent states. This crate builds
//! such representations:
//!
//! * [`decompose`] turns any uniform martingale on a finite alphabet
//!   (conditional oracle plus a variation bound) into a *deterministic*
//!   representation, in a general variant and a finite-expected-look-back
//!   variant.
//! * [`determinize`] converts representations with distribution-valued
//!   tables into deterministic ones through binary digit expansions keyed
//!   by injective index functions.
//! * [`ratio`] builds distribution-valued representations with a prescribed
//!   look-back law from a log-continuity (ratio) condition.
//! * [`model`] carries conditional models, variation and ratio coefficients,
//!   stationary solving, simulation, and a catalog of worked processes.
//!
//! All construction algebra runs over a pluggable scalar: exact rationals
//! ([`value::Exact`]) by default, `f64` where tolerances are acceptable.
//! The crate is `no_std` (with `alloc`); IO, file formats and the command
//! line live in the companion `rsm-cli` crate.

#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod decompose;
pub mod determinize;
pub mod error;
pub mod measure;
pub mod model;
pub mod ratio;
pub mod simulate;
pub mod value;
pub mod words;

pub use error::{Error, Result};
pub use value::{Exact, Value};
pub use words::{Alphabet, Word};
