//! Transference plans, c-transforms and the almost-sure conjugacy check.

pub mod conjugacy;
pub mod cost;
pub mod ext;
pub mod plan;
pub mod prices;
pub mod simplex;

pub use conjugacy::{verify_conjugacy, ConjugacyReport, Defects, FiberGap, Violation, CONJUGACY_TOL};
pub use cost::{CostFunction, CostMatrix};
pub use plan::{TransferencePlan, MARGINAL_TOL};
pub use prices::{c_transform_phi, c_transform_psi, price_difference, PricePair};
pub use simplex::{solve_plan, solve_plan_with, SolvedPlan};
