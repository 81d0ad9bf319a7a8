//! Exact (enumeration-based) answers for small systems. Every skeleton path
//! of a given length is visited once and aggregated into per-energy buckets,
//! after which partition functions and tilted expectations at any inverse
//! temperature are exact finite sums. A second, structurally independent
//! enumerator ([`naive`]) recomputes everything from scratch at each leaf so
//! the two can be compared term by term.

pub mod enumerate;
pub mod exit;
pub mod naive;
pub mod report;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::gibbs::HamiltonianVariant;
use crate::stats::KahanSum;

pub use enumerate::{enumerate_depth_tables, enumerate_skeletons, enumerate_skeletons_parallel};
pub use exit::{exit_rate, exit_tail_bound, exit_time_tail, exit_time_tail_uniformized};
pub use naive::enumerate_skeletons_naive;
pub use report::{continuous_oracle, discrete_oracle, OracleResult, MAX_TRUNCATION_DEPTH};

/// Hard ceiling on the number of leaves an exact enumeration may touch
/// (2^26 ~ 6.7e7: a few seconds of work).
pub const MAX_ENUMERATION_LEAVES: u128 = 1 << 26;

pub(crate) fn check_enumeration_budget(dim: usize, steps: u64) -> Result<()> {
    let degree = 2 * dim as u128;
    let leaves = degree
        .checked_pow(u32::try_from(steps).unwrap_or(u32::MAX))
        .unwrap_or(u128::MAX);
    if leaves > MAX_ENUMERATION_LEAVES {
        return Err(Error::Resource(format!(
            "exact enumeration of (2*{dim})^{steps} paths exceeds the \
             {MAX_ENUMERATION_LEAVES}-leaf budget"
        )));
    }
    Ok(())
}

pub(crate) fn check_skeleton_variant(variant: HamiltonianVariant) -> Result<()> {
    if variant == HamiltonianVariant::ConditionedLocalTime {
        return Err(Error::Config(
            "the local-time floor constraint has no skeleton energy; \
             enumerate the boundary or boundary-local-time variants"
                .into(),
        ));
    }
    Ok(())
}

/// Aggregates over all skeleton paths sharing one (integer) energy value.
#[derive(Debug, Clone, Copy)]
pub struct EnergyBucket<const D: usize> {
    /// Number of paths with this energy.
    pub count: u64,
    /// Sum of range sizes over those paths.
    pub volume_sum: u64,
    /// Per-axis sums of range extents (max - min per coordinate).
    pub extent_sums: [u64; D],
    /// Compensated sum of range diameters.
    pub diameter_sum: KahanSum,
}

impl<const D: usize> Default for EnergyBucket<D> {
    fn default() -> Self {
        Self {
            count: 0,
            volume_sum: 0,
            extent_sums: [0; D],
            diameter_sum: KahanSum::new(),
        }
    }
}

impl<const D: usize> EnergyBucket<D> {
    pub fn absorb(&mut self, other: &EnergyBucket<D>) {
        self.count += other.count;
        self.volume_sum += other.volume_sum;
        for i in 0..D {
            self.extent_sums[i] += other.extent_sums[i];
        }
        self.diameter_sum.merge(&other.diameter_sum);
    }
}

/// Exact per-energy histogram of every skeleton path of a fixed length.
/// Evaluating the model at any inverse temperature is then a finite sum over
/// at most a few dozen buckets.
#[derive(Debug, Clone)]
pub struct SkeletonTable<const D: usize> {
    pub steps: u64,
    pub variant: HamiltonianVariant,
    pub buckets: BTreeMap<u64, EnergyBucket<D>>,
}

impl<const D: usize> SkeletonTable<D> {
    pub fn new(steps: u64, variant: HamiltonianVariant) -> Self {
        Self {
            steps,
            variant,
            buckets: BTreeMap::new(),
        }
    }

    pub fn total_paths(&self) -> u64 {
        self.buckets.values().map(|b| b.count).sum()
    }

    pub fn min_energy(&self) -> Option<u64> {
        self.buckets.keys().next().copied()
    }

    pub fn max_energy(&self) -> Option<u64> {
        self.buckets.keys().next_back().copied()
    }

    pub fn merge(&mut self, other: &SkeletonTable<D>) {
        debug_assert_eq!(self.steps, other.steps);
        debug_assert_eq!(self.variant, other.variant);
        for (h, b) in &other.buckets {
            self.buckets.entry(*h).or_default().absorb(b);
        }
    }

    /// Boltzmann factors shifted by the ground-state energy, paired with
    /// their buckets; the shift keeps everything finite at large beta.
    fn shifted_weights(&self, beta: f64) -> Vec<(f64, &EnergyBucket<D>)> {
        let h0 = self.min_energy().unwrap_or(0);
        self.buckets
            .iter()
            .map(|(h, b)| ((-beta * (h - h0) as f64).exp(), b))
            .collect()
    }

    /// ln of the partition value: ln E[exp(-beta H)] over uniform skeletons.
    pub fn log_partition(&self, beta: f64) -> f64 {
        let h0 = self.min_energy().unwrap_or(0) as f64;
        let mut s = KahanSum::new();
        for (w, b) in self.shifted_weights(beta) {
            s.add(b.count as f64 * w);
        }
        -beta * h0 + s.value().ln() - self.steps as f64 * ((2 * D) as f64).ln()
    }

    /// E[exp(-beta H)] over uniform skeletons, exactly (up to rounding).
    pub fn partition(&self, beta: f64) -> f64 {
        self.log_partition(beta).exp()
    }

    fn tilted_mean(&self, beta: f64, numerator: impl Fn(&EnergyBucket<D>, u64) -> f64) -> f64 {
        let mut num = KahanSum::new();
        let mut den = KahanSum::new();
        for ((w, b), h) in self.shifted_weights(beta).iter().zip(self.buckets.keys()) {
            num.add(numerator(b, *h) * w);
            den.add(b.count as f64 * w);
        }
        num.value() / den.value()
    }

    /// Mean energy under the tilted measure at `beta`.
    pub fn expect_energy(&self, beta: f64) -> f64 {
        self.tilted_mean(beta, |b, h| h as f64 * b.count as f64)
    }

    /// Mean range size under the tilted measure.
    pub fn expect_volume(&self, beta: f64) -> f64 {
        self.tilted_mean(beta, |b, _| b.volume_sum as f64)
    }

    /// Mean range diameter under the tilted measure.
    pub fn expect_diameter(&self, beta: f64) -> f64 {
        self.tilted_mean(beta, |b, _| b.diameter_sum.value())
    }

    /// Mean per-axis extents under the tilted measure.
    pub fn expect_extents(&self, beta: f64) -> [f64; D] {
        std::array::from_fn(|i| self.tilted_mean(beta, |b, _| b.extent_sums[i] as f64))
    }
}

/// Poisson(t) masses for k = 0..=kmax plus the exact remaining tail mass.
pub fn poisson_masses(t: f64, kmax: usize) -> (Vec<f64>, f64) {
    let mut masses = Vec::with_capacity(kmax + 1);
    let mut p = (-t).exp();
    let mut total = KahanSum::new();
    for k in 0..=kmax {
        masses.push(p);
        total.add(p);
        p *= t / (k + 1) as f64;
    }
    (masses, (1.0 - total.value()).max(0.0))
}

/// Boundary-size histograms of skeleton prefixes at every depth
/// 0..=max_depth; depth 0 is the empty path (range = the origin, energy 1).
#[derive(Debug, Clone)]
pub struct DepthTables {
    pub dim: usize,
    pub by_depth: Vec<BTreeMap<u64, u64>>,
}

/// Partition value of the continuous-time boundary-penalized model at small
/// horizons, with a certified truncation bound. Conditioning on the jump
/// count K makes the holds irrelevant (the boundary energy is a function of
/// the skeleton alone), so
///   Z(t, beta) = sum_k P(K = k) * E[exp(-beta H) | K = k],
/// truncated at the deepest enumerated level. Every path has energy >= 1,
/// so the discarded mass contributes at most P(K > kmax) * exp(-beta).
pub fn continuous_partition(tables: &DepthTables, horizon: f64, beta: f64) -> Result<(f64, f64)> {
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::Config(format!(
            "horizon must be finite and > 0, got {horizon}"
        )));
    }
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::Config(format!("beta must be >= 0, got {beta}")));
    }
    let kmax = tables.by_depth.len() - 1;
    let degree = (2 * tables.dim) as f64;
    let (masses, tail) = poisson_masses(horizon, kmax);
    let mut z = KahanSum::new();
    for (k, hist) in tables.by_depth.iter().enumerate() {
        let mut level = KahanSum::new();
        for (h, c) in hist {
            level.add(*c as f64 * (-beta * *h as f64).exp());
        }
        z.add(masses[k] * level.value() / degree.powi(k as i32));
    }
    Ok((z.value(), tail * (-beta).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::HamiltonianVariant::{BoundaryLocalTime, BoundarySize};

    #[test]
    fn one_step_partition_is_a_pure_two_site_exponential() {
        // A single step always produces a two-site range whose boundary is
        // both sites, so Z_1(beta) = exp(-2 beta) exactly.
        let table = enumerate_skeletons::<2>(1, BoundarySize).unwrap();
        assert_eq!(table.total_paths(), 4);
        assert_eq!(table.buckets.len(), 1);
        assert_eq!(table.buckets[&2].count, 4);
        for beta in [0.0, 0.4, 1.0, 3.0] {
            let z = table.partition(beta);
            assert!((z - (-2.0 * beta).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn three_step_histogram_and_partition_match_hand_count() {
        // 64 three-step plane paths: 4 stay on two sites (energy 2), 24
        // visit three (energy 3), 36 visit four (energy 4); no interior
        // site is possible below five cells, so energy = volume here.
        let table = enumerate_skeletons::<2>(3, BoundarySize).unwrap();
        assert_eq!(table.total_paths(), 64);
        let counts: Vec<(u64, u64)> =
            table.buckets.iter().map(|(h, b)| (*h, b.count)).collect();
        assert_eq!(counts, vec![(2, 4), (3, 24), (4, 36)]);
        assert_eq!(table.buckets[&2].volume_sum, 8);
        assert_eq!(table.buckets[&3].volume_sum, 72);
        assert_eq!(table.buckets[&4].volume_sum, 144);
        // The 4 two-site paths split evenly across axes: extent sums (2, 2).
        assert_eq!(table.buckets[&2].extent_sums, [2, 2]);
        assert!((table.buckets[&2].diameter_sum.value() - 4.0).abs() < 1e-12);
        for beta in [0.3f64, 1.0, 2.5] {
            let analytic = (4.0 * (-2.0 * beta).exp()
                + 24.0 * (-3.0 * beta).exp()
                + 36.0 * (-4.0 * beta).exp())
                / 64.0;
            assert!((table.partition(beta) - analytic).abs() <= 1e-14 * analytic);
        }
    }

    #[test]
    fn partition_is_one_at_zero_beta_and_decreases() {
        let table = enumerate_skeletons::<2>(6, BoundarySize).unwrap();
        assert!((table.partition(0.0) - 1.0).abs() < 1e-12);
        let mut last = f64::INFINITY;
        for k in 0..8 {
            let z = table.partition(0.4 * k as f64);
            assert!(z < last || (k == 0 && z <= last));
            last = z;
        }
    }

    #[test]
    fn one_dimensional_ranges_always_have_two_endpoints() {
        // In d=1 the range of any walk with >= 1 step is an interval with
        // exactly two boundary sites, so Z = exp(-2 beta) at every length.
        let table = enumerate_skeletons::<1>(6, BoundarySize).unwrap();
        assert_eq!(table.buckets.len(), 1);
        assert_eq!(table.min_energy(), Some(2));
        assert!((table.partition(0.9) - (-1.8f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn log_partition_slope_equals_minus_mean_energy() {
        let table = enumerate_skeletons::<2>(7, BoundarySize).unwrap();
        for beta in [0.2, 0.8, 1.6] {
            let h = 1e-4;
            let slope =
                (table.log_partition(beta + h) - table.log_partition(beta - h)) / (2.0 * h);
            let mean = table.expect_energy(beta);
            assert!(
                (slope + mean).abs() < 1e-6,
                "thermodynamic identity broken at beta={beta}: {slope} vs -{mean}"
            );
        }
    }

    #[test]
    fn deep_quench_concentrates_on_the_ground_state() {
        let table = enumerate_skeletons::<2>(6, BoundarySize).unwrap();
        assert_eq!(table.min_energy(), Some(2));
        let e = table.expect_energy(16.0);
        assert!((e - 2.0).abs() < 1e-2, "E[H] at deep quench was {e}");
        // Volume follows: the two-site see-saw is the only survivor.
        assert!((table.expect_volume(16.0) - 2.0).abs() < 1e-2);
    }

    #[test]
    fn visit_weighted_variant_has_energy_at_least_step_count_plus_one() {
        // Every one of the n+1 skeleton positions deposits one visit, and
        // with fewer than five cells every site is boundary, so at n <= 3
        // the visit-weighted energy is exactly n + 1.
        let table = enumerate_skeletons::<2>(3, BoundaryLocalTime).unwrap();
        assert_eq!(table.buckets.len(), 1);
        assert_eq!(table.min_energy(), Some(4));
        // At n = 6 the best strategy parks weight on an interior site: the
        // tip-center-tip walk over the plus shape visits the center three
        // times, leaving one visit on each of the four tips.
        let table = enumerate_skeletons::<2>(6, BoundaryLocalTime).unwrap();
        assert_eq!(table.min_energy(), Some(4));
        assert_eq!(table.total_paths(), 4096);
    }

    #[test]
    fn conditioned_variant_is_refused_by_skeleton_enumeration() {
        use crate::gibbs::HamiltonianVariant::ConditionedLocalTime;
        assert!(matches!(
            enumerate_skeletons::<2>(3, ConditionedLocalTime),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn enumeration_budget_is_enforced() {
        assert!(matches!(
            enumerate_skeletons::<2>(14, BoundarySize),
            Err(Error::Resource(_))
        ));
        assert!(matches!(
            enumerate_skeletons::<3>(11, BoundarySize),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn depth_tables_level_counts_and_root() {
        let tables = enumerate_depth_tables::<2>(5).unwrap();
        assert_eq!(tables.by_depth.len(), 6);
        // Depth 0: the lone empty path, range = one site, energy 1.
        assert_eq!(tables.by_depth[0], BTreeMap::from([(1u64, 1u64)]));
        for (k, hist) in tables.by_depth.iter().enumerate() {
            let total: u64 = hist.values().sum();
            assert_eq!(total, 4u64.pow(k as u32));
        }
        assert_eq!(
            tables.by_depth[3],
            BTreeMap::from([(2u64, 4u64), (3, 24), (4, 36)])
        );
    }

    #[test]
    fn continuous_partition_is_certified_and_consistent() {
        let deep = enumerate_depth_tables::<2>(12).unwrap();
        let shallow = enumerate_depth_tables::<2>(8).unwrap();
        for (t, beta) in [(0.5, 1.0), (1.0, 1.0), (2.0, 0.7)] {
            let (zd, ed) = continuous_partition(&deep, t, beta).unwrap();
            let (zs, es) = continuous_partition(&shallow, t, beta).unwrap();
            assert!(ed < es, "deeper truncation must certify tighter");
            assert!(
                (zd - zs).abs() <= es + 1e-15,
                "truncations disagree beyond certificate at t={t}"
            );
            assert!(zd > 0.0 && zd < 1.0);
        }
        // At beta = 0 the partition value is exactly the retained Poisson
        // mass, so value + tail certificate brackets 1.
        let (z0, e0) = continuous_partition(&deep, 1.0, 0.0).unwrap();
        assert!(z0 <= 1.0 + 1e-12 && z0 + e0 >= 1.0 - 1e-12);
    }

    #[test]
    fn continuous_partition_rejects_bad_inputs() {
        let tables = enumerate_depth_tables::<2>(4).unwrap();
        assert!(continuous_partition(&tables, 0.0, 1.0).is_err());
        assert!(continuous_partition(&tables, -1.0, 1.0).is_err());
        assert!(continuous_partition(&tables, 1.0, -0.1).is_err());
        assert!(continuous_partition(&tables, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn poisson_masses_sum_to_one() {
        let (m, tail) = poisson_masses(3.0, 40);
        let total: f64 = m.iter().sum::<f64>() + tail;
        assert!((total - 1.0).abs() < 1e-12);
        assert!(tail < 1e-12);
        assert!((m[0] - (-3.0f64).exp()).abs() < 1e-15);
    }
}
