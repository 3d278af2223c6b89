pub mod bessel;
pub mod cavity;
pub mod closed_form;
pub mod cycles;
pub mod drive;
pub mod ensemble;
pub mod error;
pub mod ode;
pub mod perturbation;
pub mod profile;
pub mod symplectic;
pub mod verify;

pub use error::{Error, Result};
pub use profile::{FrequencyProfile, MonotoneCubic};
pub use symplectic::{
    bogoliubov_energy, compose, final_energy, final_energy_general, gain_factor, to_bogoliubov, BogoliubovPair,
    EvolutionMatrix, MomentTriple, StationaryState,
};
