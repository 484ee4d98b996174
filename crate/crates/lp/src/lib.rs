//! Self-contained linear and mixed-integer linear programming.
//!
//! [`solve_lp`] runs a two-phase bounded-variable primal simplex on a dense
//! tableau; [`solve_mip`] wraps it in best-bound branch-and-bound. Both are
//! deterministic: pivoting and branching rules are fixed, so re-solving an
//! instance reproduces the same basis and the same incumbent.

mod branch_bound;
mod error;
mod lp_format;
mod problem;
mod simplex;

pub use branch_bound::{solve_mip, solve_mip_with, MipOptions};
pub use error::LpError;
pub use lp_format::write_lp_format;
pub use problem::{Constraint, LinearProgram, MipProblem, Relation, Sense, Solution, SolveStatus};
pub use simplex::{solve_lp, solve_lp_with, LpOptions};

/// Seam for plugging a different MILP engine behind the same interface.
pub trait MipSolver: Send + Sync {
    fn solve(&self, mip: &MipProblem) -> Result<Solution, LpError>;
}

/// The in-house branch-and-bound engine.
#[derive(Clone, Copy, Debug, Default)]
pub struct BranchAndBound {
    pub options: MipOptions,
}

impl BranchAndBound {
    pub fn new(options: MipOptions) -> Self {
        Self { options }
    }
}

impl MipSolver for BranchAndBound {
    fn solve(&self, mip: &MipProblem) -> Result<Solution, LpError> {
        solve_mip_with(mip, &self.options)
    }
}
