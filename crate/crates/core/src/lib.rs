//! Private information retrieval over product-matrix regenerating codes.
//!
//! [`galois`] provides prime-field arithmetic and dense matrices,
//! [`nested_rs`] the Reed-Solomon and monomial-exponent codes,
//! [`pm_codes`] the MBR and MSR storage codes with encoding, data
//! reconstruction and node repair. The PIR protocols live in [`pir_mbr`]
//! and [`pir_msr`], both driven by the column-layered engine in
//! [`layered`].

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod galois;
pub mod layered;
pub mod nested_rs;
pub mod pir_mbr;
pub mod pir_msr;
pub mod pm_codes;

pub use error::{Error, Result};
pub use galois::{Elem, Field, Mat};
pub use pm_codes::{CodeParams, Family, Geometry};
