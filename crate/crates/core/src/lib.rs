//! Symbolic verifier for a timed broadcast process calculus with local,
//! lossy broadcast and a discrete global clock.
//!
//! Layers, bottom up: [`messages`] (terms and deduction), [`syntax`]
//! (processes and networks), [`lts`] (operational semantics), [`equivalence`]
//! (bounded weak simulation), [`tgndc`] (attacker composition and the timed
//! non-interference check), [`protocols`] (sensor-network key management
//! encodings) and [`dsl`] (text format).

pub mod dsl;
pub mod equivalence;
pub mod lts;
pub mod messages;
pub mod protocols;
pub mod report;
pub mod syntax;
pub mod tgndc;
