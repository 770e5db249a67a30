//! Analysis of 3-dimensional Lorentz metrics given in chart coordinates:
//! curvature towers, finite-order Killing generators, local Killing algebra
//! classification and a handful of explicit model constructions.

pub mod curvature;
pub mod dsl;
pub mod jet;
pub mod killing;
pub mod lie;
pub mod psl2;
pub mod rank;
pub mod scenarios;
pub mod selftest;

pub use dsl::{DslError, MetricSpec, ScalarExpr};
pub use jet::{Jet, JetError, MultiIndex, MAX_ORDER};
pub use killing::{GeneratorSpace, IsotropyKind, IsotropyType, KillingGenerator};
pub use lie::{ClassLabel, GroupElement, LieAlgebra4};
pub use rank::RankDecision;
