//! Analysis of probabilistic concurrent systems: a trace monoid acting
//! partially on a finite set of states.
//!
//! The pipeline goes from the combinatorics of traces ([`trace`]) through the
//! system and its Möbius matrix ([`system`]), the characteristic root and
//! normalized valuation ([`spectral`]), the Markov chain of state-and-cliques
//! ([`markov`]), the graph of state-and-cliques ([`dsc`]) and ergodic
//! constants ([`ergodic`]). [`oracle`] holds brute-force cross-checks and
//! [`presets`] the reference systems. [`report`] runs everything at once,
//! [`model`] reads and writes JSON model files and [`cli`] is the command-line
//! front end.

pub mod poly;
pub mod roots;
pub mod trace;
pub mod system;
pub mod presets;
pub mod spectral;
pub mod markov;
pub mod dsc;
pub mod ergodic;
pub mod oracle;
pub mod model;
pub mod report;
pub mod cli;
