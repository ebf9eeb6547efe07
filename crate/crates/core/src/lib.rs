//! Anytime coalition structure generation with worst-case guarantees.
//!
//! The crate searches the coalition structure graph of a characteristic
//! function game and reports, at every checkpoint, a bound `k` such that the
//! optimal welfare is at most `k` times the best welfare seen so far.
//!
//! * [`game`]: coalitions, games and coalition structures.
//! * [`partition`]: level-wise enumeration of the graph and exact counting.
//! * [`search`]: exhaustive, bottom-two, bottom-two-then-top-down, splitting
//!   and merging searches, all producing checkpoint traces.
//! * [`bounds`]: closed-form bounds and a brute-force worst-case oracle.
//! * [`adversarial`]: games that make the bounds tight.
//! * [`protocol`]: simulation of distributed search with random audits.
//! * [`io`]: text formats for games, structures, traces and generator names.
//! * [`verify`]: self-checks used by the command-line `verify` subcommand.

pub mod adversarial;
pub mod bounds;
pub mod error;
pub mod game;
pub mod io;
pub mod partition;
pub mod protocol;
pub mod search;
pub mod verify;

pub use error::{Error, Result};
pub use game::{AgentCount, Coalition, CoalitionStructure, Game};
