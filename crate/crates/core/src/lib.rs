//! Generalized stochastic dominance testing for multidimensional
//! mixed-scale samples.
//!
//! Observations may combine cardinal dimensions (differences carry
//! meaning) with ordinal ones (only the level order does). A utility
//! assignment over the pooled observed points is admissible when it
//! respects componentwise dominance and the partial exchange-intensity
//! information; one group dominates another in sample when its expected
//! utility is at least as large under every admissible assignment. That
//! infimum is a linear program, and its permutation distribution yields
//! a nonparametric test, regularized through a separation margin and
//! robustified against contamination of the empirical measures.
//!
//! The pipeline: [`model::build_pooled`] → [`constraints::build_constraints`]
//! → [`lp`] statistics → [`permutation::run_test`].

pub mod constraints;
pub mod lp;
pub mod model;
pub mod permutation;
mod simplex;

pub use constraints::{build_constraints, constraint_stats, ConstraintRow, ConstraintSet, ConstraintStats, Provenance};
pub use lp::{
    gamma_extreme_points, gamma_shift, solve_gamma_shortcut, solve_robust_enumeration,
    solve_statistic, solve_xi_star, EmpiricalPair, LpEngine, LpError,
};
pub use model::{
    build_pooled, r1_compare, r2_compare, ModelError, Point, PooledSample, R1Order, R2Order,
    ScaleSchema,
};
pub use permutation::{
    pvalue_curve, reversed_test, run_test, CurvePoint, ResampleMode, TestConfig, TestError,
    TestReport,
};
pub use simplex::{DualSimplex, LpBackend, LpProblem, LpRow, SolveOutcome, SolveStatus};
