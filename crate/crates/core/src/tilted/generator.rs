//! The continuous-time generator attached to a profile, its exactness
//! checks, trajectory simulation, and the likelihood ratio back to the
//! plain edge-rate walk.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::Exp1;

use super::profile::TiltedProfile;
use crate::error::{Error, Result};
use crate::lattice::path::{JumpPath, OccupationField};
use crate::lattice::{neighbors, sub, Site};
use crate::stats::KahanSum;

/// Sparse jump rates `Q(x, y) = sqrt(pi(y)/pi(x))` over the profile's
/// support, with per-site exit rates. The profile is reversible for these
/// rates by construction; the residual methods measure how exactly the
/// floating-point table realizes that.
#[derive(Debug, Clone)]
pub struct TiltedGenerator<const D: usize> {
    sites: Vec<Site<D>>,
    index: HashMap<Site<D>, usize>,
    pi: Vec<f64>,
    /// Outgoing rates per site: (neighbor site index, rate).
    rates: Vec<Vec<(u32, f64)>>,
    exit: Vec<f64>,
}

impl<const D: usize> TiltedGenerator<D> {
    pub fn new(profile: &TiltedProfile<D>) -> Self {
        let sites = profile.support_sites();
        let index: HashMap<Site<D>, usize> =
            sites.iter().enumerate().map(|(i, z)| (*z, i)).collect();
        let pi: Vec<f64> = sites.iter().map(|z| profile.density(z)).collect();
        let mut rates = Vec::with_capacity(sites.len());
        let mut exit = Vec::with_capacity(sites.len());
        for (i, z) in sites.iter().enumerate() {
            let mut out = Vec::with_capacity(2 * D);
            let mut q = 0.0f64;
            for n in neighbors(*z) {
                if let Some(&j) = index.get(&n) {
                    let rate = (pi[j] / pi[i]).sqrt();
                    q += rate;
                    out.push((j as u32, rate));
                }
            }
            rates.push(out);
            exit.push(q);
        }
        TiltedGenerator {
            sites,
            index,
            pi,
            rates,
            exit,
        }
    }

    pub fn site_count(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[Site<D>] {
        &self.sites
    }

    pub fn index_of(&self, z: &Site<D>) -> Option<usize> {
        self.index.get(z).copied()
    }

    pub fn site(&self, i: usize) -> Site<D> {
        self.sites[i]
    }

    pub fn stationary(&self, i: usize) -> f64 {
        self.pi[i]
    }

    pub fn exit_rate(&self, i: usize) -> f64 {
        self.exit[i]
    }

    pub fn outgoing(&self, i: usize) -> &[(u32, f64)] {
        &self.rates[i]
    }

    /// Largest absolute detailed-balance defect over all directed edges:
    /// `|pi(x) Q(x,y) - pi(y) Q(y,x)|` (both sides are
    /// `sqrt(pi(x) pi(y))` analytically).
    pub fn detailed_balance_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, out) in self.rates.iter().enumerate() {
            for &(j, r_ij) in out {
                let j = j as usize;
                if j < i {
                    continue;
                }
                let r_ji = self.rates[j]
                    .iter()
                    .find(|(k, _)| *k as usize == i)
                    .map(|(_, r)| *r)
                    .expect("adjacency is symmetric");
                worst = worst.max((self.pi[i] * r_ij - self.pi[j] * r_ji).abs());
            }
        }
        worst
    }

    /// Largest absolute stationarity defect over sites: the net
    /// probability flux `sum_x pi(x) Q(x,y) - pi(y) q(y)` into each site.
    pub fn stationarity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (j, out) in self.rates.iter().enumerate() {
            let mut influx = KahanSum::new();
            for &(i, _) in out {
                let i = i as usize;
                // pi(x) Q(x,y) = sqrt(pi(x) pi(y)), computed from the
                // stored reverse rate to test the table as built.
                let r_ij = self.rates[i]
                    .iter()
                    .find(|(k, _)| *k as usize == j)
                    .map(|(_, r)| *r)
                    .expect("adjacency is symmetric");
                influx.add(self.pi[i] * r_ij);
            }
            influx.add(-self.pi[j] * self.exit[j]);
            worst = worst.max(influx.value().abs());
        }
        worst
    }

    /// Runs the chain from `start` for `horizon` time units.
    pub fn simulate_from(
        &self,
        start: Site<D>,
        horizon: f64,
        rng: &mut impl Rng,
    ) -> Result<JumpPath<D>> {
        if !(horizon >= 0.0) || !horizon.is_finite() {
            return Err(Error::config(format!(
                "horizon must be finite and >= 0, got {horizon}"
            )));
        }
        let mut cur = self
            .index_of(&start)
            .ok_or_else(|| Error::domain(format!("start site {start:?} carries no mass")))?;
        let mut events = Vec::new();
        let mut elapsed = 0.0f64;
        loop {
            let q = self.exit[cur];
            let e: f64 = rng.sample(Exp1);
            let hold = e / q;
            if elapsed + hold >= horizon {
                break;
            }
            elapsed += hold;
            let mut draw = rng.gen::<f64>() * q;
            let out = &self.rates[cur];
            let mut next = out[out.len() - 1].0 as usize;
            for &(j, r) in out {
                draw -= r;
                if draw < 0.0 {
                    next = j as usize;
                    break;
                }
            }
            events.push((hold, sub(self.sites[next], self.sites[cur])));
            cur = next;
        }
        Ok(JumpPath {
            start,
            events,
            horizon,
        })
    }
}

/// Runs the tilted chain from the cube's center for `horizon` time units.
pub fn simulate_tilted<const D: usize>(
    profile: &TiltedProfile<D>,
    horizon: f64,
    rng: &mut impl Rng,
) -> Result<JumpPath<D>> {
    TiltedGenerator::new(profile).simulate_from([0i64; D], horizon, rng)
}

/// Log of the likelihood ratio between the plain edge-rate walk and the
/// tilted chain on a trajectory confined to the support:
/// `ln f(X_0) - ln f(X_t) + sum_x (Δf/f)(x) · L(t, x)` with
/// `f = sqrt(pi)` and `Δf(x) = sum_{y~x} (f(y) - f(x))` over all 2d
/// neighbors (f vanishes off the support).
pub fn rn_log_weight<const D: usize>(
    profile: &TiltedProfile<D>,
    path: &JumpPath<D>,
) -> Result<f64> {
    let positions = path.positions();
    for z in &positions {
        if profile.density(z) == 0.0 {
            return Err(Error::domain(format!(
                "path leaves the profile support at {z:?}; the likelihood ratio \
                 formula is valid only for confined paths"
            )));
        }
    }
    let field = OccupationField::from_path(path)?;
    let f = |z: &Site<D>| profile.density(z).sqrt();
    let start = positions[0];
    let end = *positions.last().expect("nonempty");
    let mut log_w = KahanSum::new();
    log_w.add(f(&start).ln());
    log_w.add(-f(&end).ln());
    for x in field.visited() {
        let fx = f(x);
        let mut lap_over_f = -((2 * D) as f64);
        for y in neighbors(*x) {
            lap_over_f += f(&y) / fx;
        }
        log_w.add(lap_over_f * field.local_time(x));
    }
    Ok(log_w.value())
}

/// The likelihood ratio itself; see [`rn_log_weight`].
pub fn rn_weight<const D: usize>(profile: &TiltedProfile<D>, path: &JumpPath<D>) -> Result<f64> {
    Ok(rn_log_weight(profile, path)?.exp())
}
