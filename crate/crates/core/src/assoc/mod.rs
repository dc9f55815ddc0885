//! User-association optimization: assembles the net-utility program
//! over rates, bandwidths and interference levels, solves its multipath
//! relaxation by separable augmented-Lagrangian dual decomposition with
//! subgradient dual ascent, certifies it against a weak-duality upper
//! bound, and truncates to a single serving cell per mobile.

pub mod problem;
pub mod solver;
pub mod subproblems;
pub mod truncate;

pub use problem::{assemble, ConstraintMatrix, Problem, RowId, ThetaLayout};
pub use solver::{dual_ascent, DualState, SolveOutput, SolverConfig, StepRule, TraceRow};
pub use truncate::truncate_single_path;

/// A (multipath or single-path) operating point of the program.
#[derive(Debug, Clone)]
pub struct Solution {
    /// Full variable vector in layout order (r, rBS, rMS, w, z);
    /// rates in Mbps, bandwidth in MHz, interference in noise units.
    pub theta: Vec<f64>,
    pub net_utility: f64,
    /// Maximum relative constraint violation.
    pub feasibility: f64,
    /// True when every mobile draws rate from at most one cell.
    pub single_path: bool,
    pub per_ms_rate_mbps: Vec<f64>,
    pub per_bs_rate_mbps: Vec<f64>,
    /// Mobiles left with zero rate (their utility uses the floor).
    pub zero_rate_ms: usize,
}

impl Solution {
    /// Total rate carried by third-party cells, Mbps.
    pub fn femto_carried_mbps(&self, problem: &Problem) -> f64 {
        self.per_bs_rate_mbps
            .iter()
            .zip(&problem.graph.bs_is_femto)
            .filter(|(_, femto)| **femto)
            .map(|(r, _)| r)
            .sum()
    }
}
