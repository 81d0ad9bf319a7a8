//! Continuous-time nearest-neighbor walks and their occupation fields.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::{add, check_site, neighbors, unit_step, Site};
use crate::error::{Error, Result};

/// A continuous-time nearest-neighbor path: a start site, then a list of
/// (hold, step) events — wait `hold`, then move by the unit vector `step` —
/// truncated at `horizon`. The final hold (time spent at the last site) is
/// implicit: `horizon - sum(holds)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpPath<const D: usize> {
    pub start: Site<D>,
    pub events: Vec<(f64, Site<D>)>,
    pub horizon: f64,
}

impl<const D: usize> JumpPath<D> {
    pub fn jump_count(&self) -> usize {
        self.events.len()
    }

    /// Time spent at the final site (the hold split at the horizon).
    pub fn final_hold(&self) -> f64 {
        self.horizon - self.events.iter().map(|(h, _)| h).sum::<f64>()
    }

    /// The visited positions in order: start, then one per jump.
    pub fn positions(&self) -> Vec<Site<D>> {
        let mut out = Vec::with_capacity(self.events.len() + 1);
        let mut z = self.start;
        out.push(z);
        for (_, step) in &self.events {
            z = add(z, *step);
            out.push(z);
        }
        out
    }

    /// Hold durations aligned with `positions()` (last entry is the final
    /// hold at the horizon).
    pub fn holds(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.events.iter().map(|(h, _)| *h).collect();
        out.push(self.final_hold());
        out
    }
}

/// Samples the canonical continuous-time walk from the origin: total jump
/// rate 1 (holds are independent mean-1 exponentials, jump count is
/// Poisson(t)-distributed), steps uniform over the 2d unit vectors.
pub fn sample_walk<const D: usize>(horizon: f64, rng: &mut impl Rng) -> Result<JumpPath<D>> {
    sample_walk_with_rate(horizon, 1.0, rng)
}

/// Samples the walk that jumps across each adjacent edge at rate 1 (total
/// rate 2d). This is the reference walk under which the change-of-measure
/// weight formula is an exact likelihood ratio.
pub fn sample_walk_edge_rate<const D: usize>(
    horizon: f64,
    rng: &mut impl Rng,
) -> Result<JumpPath<D>> {
    sample_walk_with_rate(horizon, (2 * D) as f64, rng)
}

fn sample_walk_with_rate<const D: usize>(
    horizon: f64,
    total_rate: f64,
    rng: &mut impl Rng,
) -> Result<JumpPath<D>> {
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::Config(format!("horizon must be finite and >= 0, got {horizon}")));
    }
    if D == 0 {
        return Err(Error::Config("dimension must be >= 1".into()));
    }
    let exp = Exp::new(total_rate).map_err(|e| Error::Config(format!("bad rate: {e}")))?;
    let mut events = Vec::new();
    let mut elapsed = 0.0f64;
    let mut z = [0i64; D];
    loop {
        let hold: f64 = exp.sample(rng);
        if elapsed + hold >= horizon {
            break;
        }
        elapsed += hold;
        let k = rng.gen_range(0..2 * D);
        let step = unit_step::<D>(k);
        z = add(z, step);
        check_site(&z)?;
        events.push((hold, step));
    }
    Ok(JumpPath {
        start: [0i64; D],
        events,
        horizon,
    })
}

/// Occupation measure of a path: accumulated local time per visited site,
/// with the visited set and its inner vertex boundary cached.
#[derive(Debug, Clone)]
pub struct OccupationField<const D: usize> {
    local_time: HashMap<Site<D>, f64>,
    boundary: Vec<Site<D>>,
}

impl<const D: usize> OccupationField<D> {
    /// Occupation of a continuous-time path (local time = total hold time).
    pub fn from_path(path: &JumpPath<D>) -> Result<Self> {
        if path.final_hold() < -1e-9 * path.horizon.max(1.0) {
            return Err(Error::Domain(
                "path holds exceed the horizon: negative final hold".into(),
            ));
        }
        let mut local_time: HashMap<Site<D>, f64> = HashMap::new();
        let mut z = path.start;
        for (hold, step) in &path.events {
            *local_time.entry(z).or_insert(0.0) += hold;
            z = add(z, *step);
        }
        *local_time.entry(z).or_insert(0.0) += path.final_hold().max(0.0);
        Ok(Self::from_local_times(local_time))
    }

    /// Occupation of a discrete skeleton: local time = visit multiplicity.
    pub fn from_positions(positions: &[Site<D>]) -> Self {
        let mut local_time: HashMap<Site<D>, f64> = HashMap::new();
        for z in positions {
            *local_time.entry(*z).or_insert(0.0) += 1.0;
        }
        Self::from_local_times(local_time)
    }

    fn from_local_times(local_time: HashMap<Site<D>, f64>) -> Self {
        let mut boundary: Vec<Site<D>> = local_time
            .keys()
            .filter(|z| neighbors(**z).any(|n| !local_time.contains_key(&n)))
            .copied()
            .collect();
        boundary.sort_unstable();
        OccupationField {
            local_time,
            boundary,
        }
    }

    pub fn local_time(&self, z: &Site<D>) -> f64 {
        self.local_time.get(z).copied().unwrap_or(0.0)
    }

    pub fn visited(&self) -> impl Iterator<Item = &Site<D>> {
        self.local_time.keys()
    }

    pub fn visited_count(&self) -> usize {
        self.local_time.len()
    }

    pub fn total_time(&self) -> f64 {
        crate::stats::kahan_total(self.local_time.values().copied())
    }

    pub fn min_local_time(&self) -> f64 {
        self.local_time
            .values()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Inner vertex boundary of the visited set (sorted).
    pub fn boundary(&self) -> &[Site<D>] {
        &self.boundary
    }

    pub fn boundary_size(&self) -> usize {
        self.boundary.len()
    }

    /// Sum of local times over the inner boundary.
    pub fn boundary_local_time(&self) -> f64 {
        crate::stats::kahan_total(self.boundary.iter().map(|z| self.local_time[z]))
    }

    pub fn sites(&self) -> Vec<Site<D>> {
        let mut v: Vec<Site<D>> = self.local_time.keys().copied().collect();
        v.sort_unstable();
        v
    }
}
