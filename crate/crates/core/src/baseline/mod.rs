//! Reference solvers used to judge the Cayley-free method: the Cayley-based
//! two-step method it replaces, and a Newton iteration on exact SVDs.

mod alg1;
mod newton;

pub use alg1::{
    alg1_initial_state, alg1_outer_step, alg1_skew_pair, alg1_solve, alg1_solve_tracked, cayley_orthogonalize,
    Alg1State,
};
pub use newton::{newton_exact_solve, newton_exact_solve_tracked};
