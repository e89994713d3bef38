//! Diagram expansion of the infinite-volume stationary state.
//!
//! Each diagram is evaluated in closed form as a chain of resolvents
//! `R(E) = −(G|_{range P(E)})^{-1}` and couplings `V(Γ)` on its minimal
//! support, in coordinates adapted to the single-site stationary states.

mod basis;
mod diagram;
mod evaluate;
mod quadrature;
mod resolvent;

pub use basis::{projection, AdaptedBases, ProjectionOperator, SiteBasis};
pub use diagram::{check_diagram, enumerate_diagrams, Diagram, Enumeration};
pub use evaluate::{correlation_estimate, stationary_expectation, stationary_term, CertifiedValue};
pub use quadrature::{quadrature_term, QuadratureGrid, MAX_QUADRATURE_ORDER};
pub use resolvent::{resolvent, resolvent_quadrature, RCOND_FLOOR};
