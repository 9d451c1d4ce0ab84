#![cfg_attr(not(feature = "std"), no_std)]
extern crate alloc;

pub mod error;
mod float;
pub mod linalg;
pub mod lp;
pub mod inference;
pub mod mds;
pub mod rng;
pub mod synthdata;
