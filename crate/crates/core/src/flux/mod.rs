//! Divergence-theorem fluxes of the stress tensor: planar circles and the
//! cap/strip/slice surgery of spheres around the spine.

mod circle;
mod plan;
mod sphere;
mod study;

pub use circle::{flux_circle_2d, ArcWindow, CircleFlux};
pub use plan::{make_surgery_plan, Schedule, SliceGeometry, SurgeryPlan, PANEL_ORDER};
pub use sphere::{flux_sphere_3d, FluxDecomposition, RegionFlux, SliceFlux};
pub use study::{convergence_study, ConvergenceRow, ConvergenceTable};
