//! Numerical bifurcation analysis for a quartic predator-prey system with a
//! Holling type-III functional response and predator competition.
//!
//! The toolkit finds and classifies singular points (finite and at
//! infinity), locates limit cycles through Poincaré return maps and
//! displacement functions, evaluates displacement derivatives by divergence
//! and wedge-product integrals, estimates cycle multiplicity, traces
//! one-parameter cycle families with fold detection, and runs randomized
//! audits of the maximum number of nested cycles around a singular point.
//!
//! Entry points by capability:
//!
//! - [`vectorfield`]: the system, its rotated variant, Jacobians, rotation
//!   determinants.
//! - [`equilibria`]: finite and infinite singular points, Poincaré indices,
//!   index-theorem audits.
//! - [`flow`]: adaptive integration with section-crossing events, return
//!   maps.
//! - [`cycles`]: limit cycle location, stability, displacement derivatives,
//!   multiplicity.
//! - [`continuation`]: one-parameter cycle families, folds, the two-cycle
//!   scenario, and the max-cycles audit.
//! - [`cli`]: the command-line front end with JSON/CSV/SVG output.
//!
//! The runnable examples under `examples/` demonstrate one capability each;
//! see the README for the full tour.

pub mod cli;
pub mod continuation;
pub mod cycles;
pub mod equilibria;
pub mod error;
pub mod fixtures;
pub mod flow;
pub mod polynomial;
pub mod vectorfield;

pub use error::{
    AuditError, ContinuationError, CycleError, FlowError, IndexError, InfinityError, ParamError,
};
pub use vectorfield::{
    FieldValue, Mat2, ParamName, PhasePoint, PlanarField, RotationParam, SystemParams,
};
