//! The HV metric between 1D signals: alternating minimization over
//! horizontal (velocity) and vertical (source) deformations.

mod flow;
mod metric;
mod newton;
mod subproblems;
mod types;

pub use flow::{integrate_flow, solve_fz_given_v, FlowMap};
pub use metric::{
    evaluate_action, hv_distance, hv_distance_with, hv_gradient_f0, hvc_distance, hvc_gradient_f0, SourceStep,
};
pub use subproblems::{half_level_derivatives, solve_f_given_v, solve_v_given_f, solve_v_level, source_from};
pub use types::{trapezoid_weights, ComplexGridSignal, Field, GridSignal, HvParams, HvPath, HvResult};
