//! Performance evaluation of stochastic bipartite matching models under the
//! first-come-first-matched policy.
//!
//! Each time slot one customer and one server arrive, with classes drawn
//! from `λ` and `μ`. An incoming item is matched with the longest-waiting
//! compatible item of the other side, if any; otherwise the incoming pair is
//! matched together when compatible, and the remaining items wait.
//!
//! * [`model`]: classes, compatibility graph, arrival probabilities,
//!   independent sets and stability.
//! * [`solver`]: exact stationary probabilities of the set of unmatched
//!   classes and the metrics derived from them.
//! * [`sim`]: slot-by-slot simulation of the matching policy.
//! * [`oracle`]: truncated summation of the product-form measure over
//!   explicit states, used to cross-check the solver.
//! * [`specfile`]: the TOML model description read by the CLI.
//!
//! The same formulas hold verbatim for the continuous-time variant in which
//! pairs arrive as a unit-rate Poisson process, since its jump chain is the
//! chain analysed here.

pub mod cli;
pub mod error;
pub mod model;
pub mod oracle;
pub mod sim;
pub mod solver;
pub mod specfile;
pub mod transition;

pub use transition::{PerTransition, TransitionType};

pub use error::{Error, Result};
