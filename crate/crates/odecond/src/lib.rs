//! Relative-error condition numbers of the map `y0 -> exp(tA) y0` for a real
//! linear ODE `y' = Ay`: exact values, their large-`t` asymptotic form and the
//! oscillation envelopes that bound it.

pub mod error;
pub mod linalg;
pub mod spectral;
pub mod oscillator;
pub mod minimax;
pub mod condition;
pub mod cli;
