//! Classical simulation of Grover-mixer QAOA with threshold and standard
//! phase separators.
//!
//! The Grover mixer assigns equal amplitudes to all feasible states that
//! share an objective value, so after a one-off enumeration of the feasible
//! set ([`spectrum`]) every evaluation runs over the distinct objective values
//! only. With a threshold phase separator this collapses further to two
//! amplitudes ([`thresh`]), which admits closed-form angles, a minimal round
//! count, and cheap outer-loop searches ([`search`]). The standard phase
//! separator is handled by [`standard`]. [`statevec`] is a brute-force
//! reference over the full feasible basis and is used to cross-check both.
//!
//! Bit convention used throughout: bit `i` of a state mask is vertex `i`;
//! a set bit means the vertex is selected.

pub mod enumerate;
pub mod error;
pub mod graphs;
pub mod harness;
pub mod schedule;
pub mod search;
pub mod spectrum;
pub mod standard;
pub mod statevec;
pub mod thresh;

pub use error::{Error, Result};
pub use graphs::{BitString, Graph, ProblemInstance, ProblemKind};
pub use schedule::{AngleSchedule, ScheduleShape};
pub use spectrum::{ObjectiveSpectrum, ThresholdSplit};
pub use thresh::{RunResult, TwoLevelState};
