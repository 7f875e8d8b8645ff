//! Initial data, the free evolution at the center, and observables of the
//! reconstructed wave function.

mod center;
mod datum;
mod observables;

pub use center::{free_regular_at_center, free_singular_at_center, SingularAtCenter};
pub use datum::{InitialDatum, ModelParams, RegularProfile, BOUNDARY_CONST, KAPPA};
pub use observables::{
    boundary_residual, energy, h_half_seminorm, mass, observe, reconstruct_spectral, MomentumGrid,
    ObservableSeries, SpectralField,
};
