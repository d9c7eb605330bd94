//! Disintegration of discrete joint measures on products of metric spaces.
//!
//! A probability `zeta` on `X x Y` is split into fiber measures `nu_x` on `Y`
//! so that `zeta(C) = int nu_x(C_x) mu(dx)`. Fibers come either from the
//! conditional-distribution oracle ([`exact_disintegration`]) or from
//! shrinking-ball ratios over a countable lattice of balls
//! ([`estimated_disintegration`]). On top of that sit iterated integration in
//! both orders ([`fubini`]) and the almost-sure conjugacy check for
//! competitive prices in optimal transport ([`transport`]).

pub mod disintegration;
pub mod error;
pub mod fixtures;
pub mod fubini;
pub mod io;
pub mod lattice;
pub mod measure;
pub mod metric;
pub mod sum;
pub mod transport;

pub use disintegration::{
    ball_ratio, estimated_disintegration, exact_disintegration, outer_measure, CoverTarget, Disintegration,
    EstimateConfig, ExceptionReason, FiberFunctional, FiberMeasure, OuterFlag, OuterMeasure, RatioConfig,
    RatioEstimate, RatioProbe, Regime, ScaleSchedule,
};
pub use error::{Error, Result};
pub use fubini::{
    integrability_report, iterated_xy, iterated_xy_checked, iterated_yx, iterated_yx_checked, simple_approximation,
    IntegrabilityReport, Iterated, SimpleFunction,
};
pub use lattice::{Generator, GeneratorKind, LatticeSet};
pub use measure::{
    integrate, marginal_x, marginal_y, slice_x, slice_y, DiscreteMeasure, Entry, JointMeasure, PairFunction, PairPoint,
    PointCloud, ProductSet,
};
pub use metric::{Metric, Radius};
pub use transport::{
    c_transform_phi, c_transform_psi, solve_plan, verify_conjugacy, ConjugacyReport, CostFunction, CostMatrix,
    PricePair, SolvedPlan, TransferencePlan,
};
