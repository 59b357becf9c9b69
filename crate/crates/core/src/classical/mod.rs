//! Phase-space counterpart: impulsive kicks generated by `eps A(q, p) P_i`,
//! Monte Carlo pointer correlations, and their weak-coupling limit written
//! with Poisson brackets.

mod ensemble;
mod flow;
mod observable;
mod quadrature;

pub use ensemble::{
    classical_correlation_mc, classical_rhs, ClassicalEnsemble, ClassicalModel, ClassicalRhs, GaussianDensity,
    McEstimate, MC_SHARDS, MIN_MC_SAMPLES,
};
pub use flow::{flow, kick, PhaseSpacePoint, PointerIndex, DIVERGENCE_BOUND, LEAPFROG_SUBSTEPS};
pub use observable::{
    poisson_bracket, ClassicalObservable, LinearForm, Monomial, ObservableKind, PhaseFn, Polynomial, QuadraticForm,
    FD_STEP,
};
pub use quadrature::{gauss_hermite, GAUSS_HERMITE_ORDER};
