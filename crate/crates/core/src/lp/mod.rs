//! Linear-programming lower-bound oracle.

pub mod oracle;
pub mod simplex;

pub use oracle::{build_lp, sandwich_check, solve_lp, LpInstance, SandwichReport};
