//! Boundary charts, the effective surface operator and the boundary trial state.
//!
//! Conventions used throughout:
//!
//! * the magnetic momentum is −ih∇ − A; −ih∇ + A has the same spectrum (complex conjugation);
//! * y₃ is the distance along the inward normal, Φ̃(y′, y₃) = Φ(y′) − y₃ n(y′), and t = y₃/h;
//! * the potential is put in the normal gauge Ã₃ ≡ 0;
//! * the effective operator acts in L²(D, |G|^{1/2} dy′), the surface measure of the chart, and
//!   the transverse modes are normalized against |g(y′, ht)|^{1/2} / |G(y′)|^{1/2}.

mod chart;
mod coefficients;
mod operator;
mod trial;

pub use chart::{
    build_chart, BoundaryGauge, BoundarySample, ChartData, ChartSpec, CollarMetric, NodeFrame, PlanarGauge,
    VectorPotential,
};
pub use coefficients::{assemble_coefficients, EffectiveCoefficients};
pub use operator::{effective_assembly, effective_spectrum, EffectiveAssembly};
pub use trial::{variational_upper_bound, TrialEstimate, DEFAULT_TRIAL_RHO};
