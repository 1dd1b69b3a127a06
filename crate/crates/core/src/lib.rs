//! Eventual families of sets, multifamilies and their limits, together with an
//! almost-cyclic sequential solver for common fixed-point problems whose traces
//! are analyzed with the same family calculus.

pub mod intseq;
pub mod families;
pub mod multisets;
pub mod setlimits;
pub mod cfp;
pub mod analysis;
pub mod checks;
pub mod demos;
pub mod sampling;
