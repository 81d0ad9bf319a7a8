//! The penalized-walk model: which functional of the walk's range is being
//! exponentially penalized, over which path ensemble, at which inverse
//! temperature. Everything downstream (exact summation, Monte Carlo,
//! scaling studies) is parameterized by a [`GibbsConfig`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::grid::OccupancyGrid;
use crate::lattice::path::OccupationField;

/// Which range functional multiplies -beta in the exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HamiltonianVariant {
    /// Penalize the size of the range's inner vertex boundary.
    #[serde(rename = "boundary")]
    BoundarySize,
    /// Penalize the total local time spent on the range's inner vertex
    /// boundary. In the fixed-step ensemble "local time" means the visit
    /// count.
    #[serde(rename = "boundary-local-time")]
    BoundaryLocalTime,
    /// Keep only paths whose every visited site carries local time at least
    /// beta (a hard constraint, not an exponential tilt). Requires the
    /// continuous-time ensemble.
    #[serde(rename = "conditioned")]
    ConditionedLocalTime,
}

/// Which reference path measure the weight tilts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Ensemble {
    /// A fixed number of jumps, each uniform over the 2d directions; no
    /// holding times.
    DiscreteSkeleton { steps: u64 },
    /// A rate-1 continuous-time walk observed up to a fixed horizon; the
    /// jump count is Poisson and the holds are exchangeable.
    ContinuousTime { horizon: f64 },
}

impl Ensemble {
    /// The natural time scale: step count or horizon.
    pub fn time_scale(&self) -> f64 {
        match self {
            Ensemble::DiscreteSkeleton { steps } => *steps as f64,
            Ensemble::ContinuousTime { horizon } => *horizon,
        }
    }
}

/// Full model specification. `dim` is carried for manifests and dispatch;
/// the geometry routines are monomorphized over it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub dim: usize,
    pub variant: HamiltonianVariant,
    pub ensemble: Ensemble,
    pub beta: f64,
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.dim) {
            return Err(Error::Config(format!(
                "dimension {} unsupported (1..=4)",
                self.dim
            )));
        }
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(Error::Config(format!(
                "beta must be finite and >= 0, got {}",
                self.beta
            )));
        }
        match self.ensemble {
            Ensemble::DiscreteSkeleton { steps } => {
                if steps == 0 {
                    return Err(Error::Config("steps must be >= 1".into()));
                }
                if self.variant == HamiltonianVariant::ConditionedLocalTime {
                    return Err(Error::Config(
                        "the local-time floor constraint needs real holding times; \
                         use the continuous-time ensemble"
                            .into(),
                    ));
                }
            }
            Ensemble::ContinuousTime { horizon } => {
                if !horizon.is_finite() || horizon <= 0.0 {
                    return Err(Error::Config(format!(
                        "horizon must be finite and > 0, got {horizon}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Energy of a single path under a given variant: a real number for the two
/// exponential tilts, a feasibility bit for the hard constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyValue {
    Real(f64),
    Indicator(bool),
}

impl EnergyValue {
    /// The unnormalized Gibbs factor this energy contributes at `beta`.
    pub fn weight(&self, beta: f64) -> f64 {
        match self {
            EnergyValue::Real(h) => (-beta * h).exp(),
            EnergyValue::Indicator(ok) => {
                if *ok {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// ln of [`Self::weight`]; -inf for an infeasible path.
    pub fn log_weight(&self, beta: f64) -> f64 {
        match self {
            EnergyValue::Real(h) => -beta * h,
            EnergyValue::Indicator(ok) => {
                if *ok {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            EnergyValue::Real(h) => Some(*h),
            EnergyValue::Indicator(_) => None,
        }
    }
}

/// Energy of an occupation field. `beta` enters only through the hard
/// constraint's local-time floor.
pub fn energy<const D: usize>(
    variant: HamiltonianVariant,
    field: &OccupationField<D>,
    beta: f64,
) -> EnergyValue {
    match variant {
        HamiltonianVariant::BoundarySize => EnergyValue::Real(field.boundary_size() as f64),
        HamiltonianVariant::BoundaryLocalTime => EnergyValue::Real(field.boundary_local_time()),
        HamiltonianVariant::ConditionedLocalTime => {
            EnergyValue::Indicator(field.min_local_time() >= beta)
        }
    }
}

/// Energy read off an incrementally maintained occupancy grid; must agree
/// with [`energy`] on the same configuration.
pub fn energy_from_grid<const D: usize>(
    variant: HamiltonianVariant,
    grid: &OccupancyGrid<D>,
    beta: f64,
) -> EnergyValue {
    match variant {
        HamiltonianVariant::BoundarySize => EnergyValue::Real(grid.boundary_size() as f64),
        HamiltonianVariant::BoundaryLocalTime => EnergyValue::Real(grid.boundary_local_time()),
        HamiltonianVariant::ConditionedLocalTime => {
            EnergyValue::Indicator(grid.min_local_time() >= beta)
        }
    }
}

/// Unnormalized Gibbs factor of one path configuration.
pub fn gibbs_weight<const D: usize>(
    variant: HamiltonianVariant,
    field: &OccupationField<D>,
    beta: f64,
) -> f64 {
    energy(variant, field, beta).weight(beta)
}
