//! Three-user erasure source broadcast with feedback.
//!
//! The crate has two halves. The analysis half computes closed-form
//! quantities: absorbing Markov reward processes ([`absorbing_mrp`]), the
//! latency linear programs of the instantly-decodable scheme
//! ([`feedback_lp`]) and the Markov model of the chaining algorithm
//! ([`chaining`]). The simulation half ([`sim`]) runs the coding pipeline over
//! a seeded erasure channel so the analysis can be checked against it.
//!
//! ```
//! use erasure_bcast::feedback_lp::{solve_uncoded_lp, ChannelTriple};
//!
//! let eps = ChannelTriple::new([0.2, 0.2, 0.2]).unwrap();
//! let sol = solve_uncoded_lp(&eps).unwrap();
//! assert!((sol.t[0] - 0.0336022).abs() < 1e-6);
//! ```

pub mod absorbing_mrp;
pub mod chaining;
pub mod cli;
pub mod error;
pub mod feedback_lp;
pub mod linalg;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use linalg::Matrix;
