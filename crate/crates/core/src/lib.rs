//! Mining refactoring idioms from MiniHack code.
//!
//! The pipeline runs source text through [`frontend`] (parse), [`typeinfer`]
//! (variable roles), [`dataflow`] (per-block σ tables), [`dftree`]
//! (canonical labeled trees), [`ptsg`] (Gibbs-sampled tree substitution
//! grammar) and [`idioms`] (prune, rank, match, report). [`corpus`] builds
//! inputs and [`cli`] wires it all into the `idiom-forge` binary.

pub mod cli;
pub mod corpus;
pub mod dataflow;
pub mod dftree;
pub mod frontend;
pub mod idioms;
pub mod ptsg;
pub mod typeinfer;
