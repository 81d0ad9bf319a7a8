//! The distance-to-boundary tilted chain: a reversible walk confined to a
//! cube, whose stationary law rises from ~1/L^(d+1) near the cube's face
//! to ~1/L^d in the bulk.
//!
//! The pieces fit together as follows. [`TiltedProfile`] holds the radial
//! stationary law (one mass per distance-to-boundary level, constant on
//! each level by symmetry). [`TiltedGenerator`] materializes the jump
//! rates `Q(x, y) = sqrt(pi(y)/pi(x))`, for which the profile is exactly
//! reversible; [`simulate_tilted`] runs the continuous-time chain.
//! [`level_kernel`] is the induced birth-death chain of the
//! distance-to-boundary coordinate. [`canonical_path_bound`] and
//! [`spectral_gap`] bound and compute the generator's relaxation rate, and
//! [`effective_resistance`] gives escape probabilities through the
//! electrical-network identity. [`rn_weight`] converts probabilities under
//! the tilted chain into probabilities under the plain edge-rate walk via
//! an exact likelihood ratio. The experiment drivers
//! ([`hitting_tail_experiment`], [`local_time_concentration_experiment`],
//! [`good_event_experiment`]) produce the Monte Carlo summaries the
//! acceptance suite checks against those exact quantities.

mod experiments;
mod generator;
mod level;
mod profile;
mod resistance;
mod spectral;

pub use experiments::{
    good_event_experiment, hitting_tail_experiment, local_time_concentration_experiment,
    GoodEventReport, HittingTailReport, LocalTimeReport,
};
pub use generator::{rn_log_weight, rn_weight, simulate_tilted, TiltedGenerator};
pub use level::{level_kernel, level_weights};
pub use profile::{build_profile, TiltedProfile, DEFAULT_SMOOTHING_FLOOR};
pub use resistance::{effective_resistance, escape_frequency, Network, ResistanceReport};
pub use spectral::{canonical_path_bound, spectral_gap};
