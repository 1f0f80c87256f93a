//! Satisfiability checking for CTL* formulas with a hue/colour tableau.

pub mod closure;
pub mod formula;
pub mod fulfil;
pub mod hue;
pub mod model;
pub mod tableau;
pub mod search;
