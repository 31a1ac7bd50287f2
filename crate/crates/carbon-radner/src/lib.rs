//! Equilibrium analytics for a multi-firm emissions cap-and-trade market.
//!
//! Firms face quadratic abatement costs and Gaussian emission shocks with a
//! common factor; a regulator issues allowances equal to a fraction of
//! expected business-as-usual emissions and charges a penalty per uncovered
//! ton at settlement. The crate computes the competitive equilibrium in
//! closed form up to a small fixed-point problem: optimal abatement plans,
//! the allowance price process and its moments, and first-order sensitivities
//! and elasticities of every output with respect to every model parameter.
//! A Monte Carlo simulator provides an independent check on the analytics.

pub mod calibrate;
pub mod config_file;
pub mod error;
pub mod foc;
pub mod gauss;
pub mod mc;
pub mod model;
pub mod price;
pub mod sensitivity;
pub mod solver;
pub mod tables;
pub mod targets;

pub use error::{Error, Result};
pub use model::{AbatementPlan, FirmParams, MarketConfig, RegulatoryParams};
pub use solver::{solve_reduced, EquilibriumSolution};
