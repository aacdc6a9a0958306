//! Operational semantics for string diagrams: sorted terms, structural
//! congruence via canonical hypergraph forms, GSOS-style transition
//! derivation, bisimilarity checking and a small process-calculus front end.

pub mod algebra;
pub mod bisim;
pub mod diagram;
pub mod proccalc;
pub mod sos;
pub mod syntax;
