//! Random walks on the chambers of central hyperplane arrangements.
//!
//! A walk picks a face `F` from a probability measure `w` on the faces and
//! moves from chamber `C` to the projection `FC`. Everything here is
//! combinatorial: faces are sign vectors over `{+, -, 0}` and the action is
//! the coordinate-wise "first non-zero wins" product.
//!
//! The crate is `no_std` (it needs `alloc`) and covers:
//!
//! - [`arrangement`]: sign vectors, the face product, braid and Boolean
//!   arrangements, custom arrangements, weighted face sets.
//! - [`walk`]: chamber simulation, the stopping time `T` (first time the
//!   product of the picked faces is a chamber), Monte Carlo survival curves.
//! - [`exact`]: transition matrices, stationary laws, exact separation and
//!   total-variation distance, inclusion-exclusion for `P(T > t)`, coupling
//!   parameters and cutoff predictions.
//! - [`gallery`]: the card-shuffling and hypercube families, plus the
//!   Tsetlin-library bound machinery.
//! - [`glauber`]: heat-bath Glauber dynamics on monotone spin systems.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod arrangement;
mod error;
pub mod exact;
pub mod gallery;
pub mod glauber;
pub mod math;
pub mod matrix;
pub mod walk;

pub use arrangement::{
    build_boolean, build_braid, check_separating, face_product, is_chamber,
    partition_to_sign_vector, Arrangement, FamilyTag, Limits, Sign, SignVector, WeightedFaceSet,
};
pub use error::{Error, Result};
pub use exact::{
    coupling_parameters, cutoff_prediction, separation_distance, stationary_solve,
    stationary_without_replacement, survival_exact, total_variation, transition_matrix,
    ChamberDistribution, CouplingParameters, CutoffPrediction,
};
pub use gallery::{Family, TsetlinSpec};
pub use glauber::{
    check_monotone, conditional_at_site, coupon_survival_uniform, glauber_separation_exact,
    glauber_step, ising_system, monotone_lower_bounds, MonotoneSystem,
};
pub use walk::{estimate_survival, sample_stopping_time, simulate_chamber_at, SurvivalEstimate};
