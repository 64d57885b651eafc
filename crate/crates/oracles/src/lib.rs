//! Reference implementations used only by tests. Each one recomputes a
//! quantity by a route that shares no code with `qsim-core`; `sample` draws
//! the random circuits they are checked on.

pub mod dense;
pub mod exact;
pub mod gaussian;
pub mod ledger;
pub mod lu;
pub mod mechanics;
pub mod sample;
