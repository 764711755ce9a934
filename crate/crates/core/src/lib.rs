//! Adaptive sliding-mode control with a boundary-layer adaptation law,
//! baseline controllers, benchmark plants and a fixed-step simulation
//! harness that checks the law's closed-form bounds numerically.
//!
//! ```
//! let l = asmc::presets::load_with("regulation-smooth", None, Some(1.0)).unwrap();
//! let log = asmc::sim::run_scenario(&l.scenario).unwrap();
//! assert_eq!(log.len(), 10_001);
//! ```

// `!(a > b)` is used on purpose so that NaN parameters are rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controllers;
pub mod error;
pub mod math;
pub mod plants;
pub mod presets;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
