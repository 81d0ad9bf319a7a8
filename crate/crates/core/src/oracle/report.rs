//! Self-describing oracle answers: the partition value together with the
//! tilted expectations of the standard observables, tagged with the model
//! configuration they answer for. This is the exchange format between the
//! exact enumerators, the samplers that are tested against them, and the
//! command-line `oracle` verb.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{Ensemble, GibbsConfig, HamiltonianVariant};
use crate::oracle::enumerate::{enumerate_depth_tables, enumerate_skeletons_parallel};
use crate::oracle::{continuous_partition, poisson_masses, SkeletonTable};

/// Deepest Poisson level the small-horizon summation will retain.
pub const MAX_TRUNCATION_DEPTH: usize = 13;

/// An exact evaluation of the penalized-walk model at one configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleResult {
    /// The configuration this result answers for.
    pub config: GibbsConfig,
    /// Step count or time horizon, echoed from the ensemble.
    pub n_or_t: f64,
    /// The partition value E[exp(-beta H)] over the reference ensemble.
    pub z: f64,
    /// ln of the partition value (computed directly, not via `z.ln()`,
    /// so it stays finite deep into the quenched regime).
    pub log_z: f64,
    /// Tilted means of the standard observables, keyed like the sampler's
    /// trace summaries ("H" or "Htilde", "diam", "volume", "ext1"..).
    pub expectations: BTreeMap<String, f64>,
    /// Certified bound on the truncation error of `z`; zero when the sum
    /// was exhaustive (fixed-step ensembles).
    pub truncation_bound: f64,
}

impl OracleResult {
    /// The key under which this configuration's energy expectation lives.
    pub fn energy_key(variant: HamiltonianVariant) -> &'static str {
        match variant {
            HamiltonianVariant::BoundarySize => "H",
            HamiltonianVariant::BoundaryLocalTime => "Htilde",
            HamiltonianVariant::ConditionedLocalTime => "conditioned_ok",
        }
    }

    /// Mean energy recorded in `expectations`.
    pub fn expect_energy(&self) -> Option<f64> {
        self.expectations
            .get(Self::energy_key(self.config.variant))
            .copied()
    }
}

fn discrete_from_table<const D: usize>(
    config: &GibbsConfig,
    table: &SkeletonTable<D>,
) -> OracleResult {
    let beta = config.beta;
    let mut expectations = BTreeMap::new();
    expectations.insert(
        OracleResult::energy_key(config.variant).to_string(),
        table.expect_energy(beta),
    );
    expectations.insert("diam".to_string(), table.expect_diameter(beta));
    expectations.insert("volume".to_string(), table.expect_volume(beta));
    for (i, e) in table.expect_extents(beta).iter().enumerate() {
        expectations.insert(format!("ext{}", i + 1), *e);
    }
    OracleResult {
        config: *config,
        n_or_t: config.ensemble.time_scale(),
        z: table.partition(beta),
        log_z: table.log_partition(beta),
        expectations,
        truncation_bound: 0.0,
    }
}

/// Exact evaluation of a fixed-step configuration by exhaustive enumeration
/// of all (2d)^n skeletons. Refuses (with the estimated cost) when the leaf
/// count exceeds the enumeration budget.
pub fn discrete_oracle(config: &GibbsConfig) -> Result<OracleResult> {
    config.validate()?;
    let steps = match config.ensemble {
        Ensemble::DiscreteSkeleton { steps } => steps,
        Ensemble::ContinuousTime { .. } => {
            return Err(Error::config(
                "the exhaustive oracle sums over fixed-step skeletons; \
                 use the small-horizon oracle for continuous time",
            ))
        }
    };
    match config.dim {
        1 => Ok(discrete_from_table(
            config,
            &enumerate_skeletons_parallel::<1>(steps, config.variant)?,
        )),
        2 => Ok(discrete_from_table(
            config,
            &enumerate_skeletons_parallel::<2>(steps, config.variant)?,
        )),
        3 => Ok(discrete_from_table(
            config,
            &enumerate_skeletons_parallel::<3>(steps, config.variant)?,
        )),
        4 => Ok(discrete_from_table(
            config,
            &enumerate_skeletons_parallel::<4>(steps, config.variant)?,
        )),
        d => Err(Error::config(format!("dimension {d} unsupported"))),
    }
}

/// Exact evaluation of a small-horizon continuous-time configuration by
/// conditioning on the Poisson jump count and truncating at `k_max` levels.
/// The returned `truncation_bound` certifies `z`: discarded levels carry
/// total probability `P(K > k_max)` and per-path weight at most e^{-beta}.
/// Refuses when the Poisson tail at the deepest affordable level still
/// exceeds `tolerance`.
pub fn continuous_oracle(config: &GibbsConfig, k_max: usize, tolerance: f64) -> Result<OracleResult> {
    config.validate()?;
    let horizon = match config.ensemble {
        Ensemble::ContinuousTime { horizon } => horizon,
        Ensemble::DiscreteSkeleton { .. } => {
            return Err(Error::config(
                "the small-horizon oracle sums over Poisson jump counts; \
                 use the exhaustive oracle for fixed-step ensembles",
            ))
        }
    };
    if config.variant != HamiltonianVariant::BoundarySize {
        return Err(Error::config(
            "the small-horizon oracle covers the boundary-size penalty",
        ));
    }
    if k_max > MAX_TRUNCATION_DEPTH {
        return Err(Error::config(format!(
            "truncation depth {k_max} exceeds the {MAX_TRUNCATION_DEPTH}-level cap"
        )));
    }
    if !(tolerance > 0.0) {
        return Err(Error::config(format!(
            "tolerance must be > 0, got {tolerance}"
        )));
    }
    let (_, tail) = poisson_masses(horizon, k_max);
    if tail > tolerance {
        return Err(Error::resource(format!(
            "jump-count tail {tail:.3e} beyond level {k_max} exceeds the requested \
             tolerance {tolerance:.3e}; shrink the horizon (currently {horizon})"
        )));
    }
    let tables = match config.dim {
        1 => enumerate_depth_tables::<1>(k_max as u64)?,
        2 => enumerate_depth_tables::<2>(k_max as u64)?,
        3 => enumerate_depth_tables::<3>(k_max as u64)?,
        4 => enumerate_depth_tables::<4>(k_max as u64)?,
        d => return Err(Error::config(format!("dimension {d} unsupported"))),
    };
    let beta = config.beta;
    let (z, bound) = continuous_partition(&tables, horizon, beta)?;
    // Mean energy from the same level sums. The retained levels are exact;
    // the discarded numerator mass is not certified here (the certificate
    // covers z), which is why only the energy mean is reported.
    let degree = (2 * config.dim) as f64;
    let (masses, _) = poisson_masses(horizon, k_max);
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, hist) in tables.by_depth.iter().enumerate() {
        let scale = masses[k] / degree.powi(k as i32);
        for (h, c) in hist {
            let w = scale * *c as f64 * (-beta * *h as f64).exp();
            num += *h as f64 * w;
            den += w;
        }
    }
    let mut expectations = BTreeMap::new();
    expectations.insert(
        OracleResult::energy_key(config.variant).to_string(),
        num / den,
    );
    Ok(OracleResult {
        config: *config,
        n_or_t: horizon,
        z,
        log_z: z.ln(),
        expectations,
        truncation_bound: bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::path::{sample_walk, OccupationField};
    use crate::rng::SeedSplitter;

    fn skeleton_config(dim: usize, steps: u64, beta: f64) -> GibbsConfig {
        GibbsConfig {
            dim,
            variant: HamiltonianVariant::BoundarySize,
            ensemble: Ensemble::DiscreteSkeleton { steps },
            beta,
        }
    }

    fn continuous_config(dim: usize, horizon: f64, beta: f64) -> GibbsConfig {
        GibbsConfig {
            dim,
            variant: HamiltonianVariant::BoundarySize,
            ensemble: Ensemble::ContinuousTime { horizon },
            beta,
        }
    }

    #[test]
    fn zero_beta_normalizes_to_one() {
        let r = discrete_oracle(&skeleton_config(2, 5, 0.0)).unwrap();
        assert!((r.z - 1.0).abs() < 1e-12);
        assert!(r.log_z.abs() < 1e-12);
        assert_eq!(r.truncation_bound, 0.0);
        assert_eq!(r.n_or_t, 5.0);
    }

    #[test]
    fn one_step_walks_boil_down_to_a_two_site_exponential() {
        for beta in [0.0, 0.5, 1.0, 2.0] {
            let r = discrete_oracle(&skeleton_config(2, 1, beta)).unwrap();
            assert!((r.z - (-2.0 * beta).exp()).abs() < 1e-14);
            assert!((r.expectations["H"] - 2.0).abs() < 1e-12);
            assert!((r.expectations["volume"] - 2.0).abs() < 1e-12);
            assert!((r.expectations["diam"] - 1.0).abs() < 1e-12);
            // One step along a uniformly chosen axis: each axis's extent
            // averages 1/d.
            assert!((r.expectations["ext1"] - 0.5).abs() < 1e-12);
            assert!((r.expectations["ext2"] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn three_step_plane_value_matches_the_histogram_closed_form() {
        // 64 skeletons: 4 of energy 2, 24 of energy 3, 36 of energy 4.
        let r = discrete_oracle(&skeleton_config(2, 3, 1.0)).unwrap();
        let closed = (4.0 * (-2.0f64).exp() + 24.0 * (-3.0f64).exp() + 36.0 * (-4.0f64).exp()) / 64.0;
        assert!((r.z - closed).abs() <= 1e-15);
        // An independently structured enumerator must agree to 1e-12 before
        // this value counts as ground truth.
        let naive = crate::oracle::enumerate_skeletons_naive::<2>(3, HamiltonianVariant::BoundarySize)
            .unwrap();
        assert!((naive.partition(1.0) - r.z).abs() < 1e-12);
    }

    #[test]
    fn partition_never_exceeds_the_single_site_weight() {
        // Every path's range has at least one boundary site, so
        // z <= exp(-beta) <= 1 at every nonnegative beta.
        for beta in [0.0, 0.3, 1.0, 4.0] {
            for steps in [1, 4, 7] {
                let r = discrete_oracle(&skeleton_config(2, steps, beta)).unwrap();
                assert!(r.z <= (-beta).exp() + 1e-14, "z {} at beta {beta}", r.z);
                assert!(r.z > 0.0);
            }
        }
    }

    #[test]
    fn partition_decreases_strictly_in_beta() {
        let mut last = f64::INFINITY;
        for k in 0..6 {
            let r = discrete_oracle(&skeleton_config(2, 6, 0.5 * k as f64)).unwrap();
            assert!(r.z < last);
            last = r.z;
        }
    }

    #[test]
    fn quenched_log_partition_slope_recovers_the_ground_state() {
        // -log z / beta decreases to the minimal reachable energy (2 for
        // plane walks) as beta grows; the gap is at most n log(2d) / beta.
        let coarse = discrete_oracle(&skeleton_config(2, 6, 100.0)).unwrap();
        let fine = discrete_oracle(&skeleton_config(2, 6, 200.0)).unwrap();
        let slack = 6.0 * 4.0f64.ln();
        let at = |r: &OracleResult, beta: f64| -r.log_z / beta;
        assert!(at(&coarse, 100.0) >= 2.0 - 1e-9);
        assert!(at(&coarse, 100.0) <= 2.0 + slack / 100.0);
        assert!(at(&fine, 200.0) <= at(&coarse, 100.0) + 1e-12);
        assert!(at(&fine, 200.0) <= 2.0 + slack / 200.0);
    }

    #[test]
    fn visit_weighted_energies_land_under_their_own_key() {
        let mut c = skeleton_config(2, 4, 0.8);
        c.variant = HamiltonianVariant::BoundaryLocalTime;
        let r = discrete_oracle(&c).unwrap();
        assert!(r.expectations.contains_key("Htilde"));
        assert!(!r.expectations.contains_key("H"));
        assert_eq!(r.expect_energy(), Some(r.expectations["Htilde"]));
        // Each of the five skeleton positions deposits one visit and at
        // n = 4 at most one site can be interior, so the energy is >= 4.
        assert!(r.expect_energy().unwrap() >= 4.0);
    }

    #[test]
    fn oversized_requests_are_refused_with_a_resource_error() {
        assert!(matches!(
            discrete_oracle(&skeleton_config(2, 14, 1.0)),
            Err(Error::Resource(_))
        ));
        assert!(matches!(
            discrete_oracle(&skeleton_config(3, 11, 1.0)),
            Err(Error::Resource(_))
        ));
        // Mismatched ensembles are configuration errors, not resource ones.
        assert!(matches!(
            discrete_oracle(&continuous_config(2, 2.0, 1.0)),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            continuous_oracle(&skeleton_config(2, 3, 1.0), 8, 1e-6),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn vanishing_horizon_pins_the_walk_at_the_origin() {
        // As t -> 0 the walk never jumps: the range is one site of energy 1,
        // so z -> exp(-beta).
        for beta in [0.5, 1.0, 2.0] {
            let r = continuous_oracle(&continuous_config(2, 1e-8, beta), 4, 1e-6).unwrap();
            assert!((r.z - (-beta).exp()).abs() < 1e-6);
            assert!((r.expectations["H"] - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_beta_continuous_value_is_one_up_to_the_certificate() {
        let r = continuous_oracle(&continuous_config(2, 1.5, 0.0), 13, 1e-6).unwrap();
        assert!(r.z <= 1.0 + 1e-12);
        assert!(r.z + r.truncation_bound >= 1.0 - 1e-12);
    }

    #[test]
    fn small_horizon_value_is_certified_and_matches_monte_carlo() {
        let r = continuous_oracle(&continuous_config(2, 2.0, 1.0), 13, 1e-6).unwrap();
        assert!(r.truncation_bound < 1e-6, "bound {}", r.truncation_bound);
        assert!(r.z > 0.0 && r.z < (-1.0f64).exp());

        // Plain Monte Carlo of exp(-beta H) over free rate-1 walks.
        let runs = 40_000u64;
        let split = SeedSplitter::new(20240822);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 0..runs {
            let mut rng = split.stream(i);
            let path = sample_walk::<2>(2.0, &mut rng).unwrap();
            let field = OccupationField::from_path(&path).unwrap();
            let w = (-(field.boundary_size() as f64)).exp();
            sum += w;
            sumsq += w * w;
        }
        let mean = sum / runs as f64;
        let var = (sumsq / runs as f64 - mean * mean).max(0.0);
        let se = (var / runs as f64).sqrt();
        assert!(
            (r.z - mean).abs() <= 3.0 * se + r.truncation_bound,
            "oracle {} vs monte carlo {mean} (se {se})",
            r.z
        );
    }

    #[test]
    fn unreachable_tolerances_are_resource_errors() {
        // At horizon 30 the jump count overwhelmingly exceeds 13 levels.
        assert!(matches!(
            continuous_oracle(&continuous_config(2, 30.0, 1.0), 13, 1e-6),
            Err(Error::Resource(_))
        ));
        // And depths beyond the cap are refused outright.
        assert!(matches!(
            continuous_oracle(&continuous_config(2, 1.0, 1.0), 14, 1e-6),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn results_round_trip_through_json() {
        let r = discrete_oracle(&skeleton_config(2, 3, 1.0)).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        let back: OracleResult = serde_json::from_str(&s).unwrap();
        assert_eq!(back.config, r.config);
        assert_eq!(back.z, r.z);
        assert_eq!(back.expectations, r.expectations);
    }
}
