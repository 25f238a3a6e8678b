//! Exact computations on small instances: generators, stationary laws,
//! absorption probabilities of the dual, and one-step identity checks.

pub mod absorption;
pub mod duality;
pub mod generator;
pub mod martingale;
pub mod ninja;

pub use absorption::{
    absorption_distribution, all_absorbed_at_n, all_absorbed_table, single_particle_absorption, AbsorptionTable,
};
pub use duality::{check_generator_duality, duality_function};
pub use generator::{build_sep_generator, solve_stationary, stationary_distribution, RateMatrix, StationaryDistribution};
pub use martingale::{check_two_particle_martingales, MartingaleResiduals};
pub use ninja::{check_ninja_coupling, ninja_absorption_law, NinjaCouplingResiduals, NinjaLaw};
