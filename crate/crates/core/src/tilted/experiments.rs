//! Monte Carlo experiments on the confined dynamics: hitting-time tails,
//! local-time concentration, and the joint occupation/boundary control
//! event. All replicas start at the center of the support, run in
//! parallel, and draw their randomness from per-replica streams so that
//! results are independent of the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::path::{JumpPath, OccupationField};
use crate::lattice::{add, Site};
use crate::rng::SeedSplitter;
use crate::stats::{mean, ols, wilson_interval};

use super::generator::TiltedGenerator;
use super::profile::TiltedProfile;

/// z-score used for every Wilson interval reported by the experiments.
const WILSON_Z: f64 = 1.96;

/// Empirical tail of the first hitting time of a target site.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HittingTailReport {
    /// Coordinates of the target site.
    pub target: Vec<i64>,
    pub runs: u64,
    pub t_grid: Vec<f64>,
    /// Fraction of replicas that had not hit the target by each grid time.
    pub survival: Vec<f64>,
    /// Wilson interval for each survival estimate.
    pub survival_wilson: Vec<(f64, f64)>,
    /// Exponential rate fitted to the positive part of the survival
    /// curve by least squares on the log scale; absent when fewer than
    /// two grid points are usable.
    pub fitted_rate: Option<f64>,
    /// Theory-scale rate to compare against: the stationary mass of the
    /// target, divided by log(half-width) in the planar case.
    pub comparison_rate: f64,
}

/// Empirical deviation probabilities of the normalized local time
/// `L(t, y) / (pi(y) t)` around 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalTimeReport {
    pub target: Vec<i64>,
    pub runs: u64,
    pub horizon: f64,
    /// `pi(y) * t`: the ergodic prediction for the local time.
    pub expected_local_time: f64,
    pub mean_ratio: f64,
    pub delta_grid: Vec<f64>,
    /// Per delta: fraction of replicas with `|ratio - 1| >= delta`.
    pub deviation_probability: Vec<f64>,
    pub deviation_wilson: Vec<(f64, f64)>,
}

/// Frequencies of the occupation-control event (every shell's local time
/// below its threshold), the boundary-control event (range boundary below
/// its threshold), and their intersection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoodEventReport {
    pub runs: u64,
    pub horizon: f64,
    pub beta: f64,
    pub half_width: i64,
    /// Multiplier `C'` in the shell threshold `C' * pi(shell) * t`.
    pub occupation_threshold: f64,
    /// Multiplier `C''` in the boundary threshold `C'' * L^(d-1)`.
    pub boundary_threshold: f64,
    pub occupation_frequency: f64,
    pub boundary_frequency: f64,
    pub good_frequency: f64,
    pub good_wilson: (f64, f64),
    pub mean_boundary_size: f64,
    /// Mean number of box sites the trajectory never visited.
    pub mean_unvisited: f64,
}

fn require_runs(n_runs: u64) -> Result<()> {
    if n_runs == 0 {
        return Err(Error::config("experiments need at least one run"));
    }
    Ok(())
}

fn require_grid(name: &str, grid: &[f64], minimum: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::config(format!("{name} grid is empty")));
    }
    for pair in grid.windows(2) {
        if !(pair[1] > pair[0]) {
            return Err(Error::config(format!(
                "{name} grid must be strictly increasing, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    if !grid.iter().all(|v| v.is_finite() && *v >= minimum) {
        return Err(Error::config(format!(
            "{name} grid entries must be finite and at least {minimum}"
        )));
    }
    Ok(())
}

fn require_in_support<const D: usize>(profile: &TiltedProfile<D>, y: &Site<D>) -> Result<()> {
    if profile.level_of(y).is_none() {
        return Err(Error::domain(format!(
            "target {y:?} is outside the support of the profile"
        )));
    }
    Ok(())
}

/// First time the path sits on `y`, if any. The start counts at time 0.
fn hitting_time<const D: usize>(path: &JumpPath<D>, y: &Site<D>) -> Option<f64> {
    if path.start == *y {
        return Some(0.0);
    }
    let mut cur = path.start;
    let mut t = 0.0f64;
    for (hold, step) in &path.events {
        t += hold;
        cur = add(cur, *step);
        if cur == *y {
            return Some(t);
        }
    }
    None
}

/// Total hold time the path spends at `y`.
fn local_time_at<const D: usize>(path: &JumpPath<D>, y: &Site<D>) -> f64 {
    let mut cur = path.start;
    let mut total = 0.0f64;
    for (hold, step) in &path.events {
        if cur == *y {
            total += hold;
        }
        cur = add(cur, *step);
    }
    if cur == *y {
        total += path.final_hold();
    }
    total
}

/// Survival curve of the first hitting time of `y` under the confined
/// dynamics started at the center, with a log-linear rate fit and the
/// stationary-mass comparison scale.
pub fn hitting_tail_experiment<const D: usize>(
    profile: &TiltedProfile<D>,
    y: &Site<D>,
    t_grid: &[f64],
    n_runs: u64,
    seed: u64,
) -> Result<HittingTailReport> {
    require_runs(n_runs)?;
    require_grid("time", t_grid, 0.0)?;
    require_in_support(profile, y)?;
    let horizon = *t_grid.last().expect("grid checked nonempty");
    let generator = TiltedGenerator::new(profile);
    let splitter = SeedSplitter::new(seed);
    let center = [0i64; D];
    let times: Vec<Option<f64>> = (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = splitter.substream(0, i);
            let path = generator.simulate_from(center, horizon, &mut rng)?;
            Ok(hitting_time(&path, y))
        })
        .collect::<Result<_>>()?;
    let mut survival = Vec::with_capacity(t_grid.len());
    let mut survival_wilson = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let alive = times
            .iter()
            .filter(|h| h.map_or(true, |time| time > t))
            .count() as u64;
        survival.push(alive as f64 / n_runs as f64);
        survival_wilson.push(wilson_interval(alive, n_runs, WILSON_Z));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (t, s) in t_grid.iter().zip(&survival) {
        if *s > 0.0 {
            xs.push(*t);
            ys.push(s.ln());
        }
    }
    let fitted_rate = ols(&xs, &ys).map(|fit| -fit.slope);
    let pi_y = profile.density(y);
    let comparison_rate = if D >= 3 {
        pi_y
    } else {
        pi_y / (profile.half_width() as f64).ln()
    };
    Ok(HittingTailReport {
        target: y.to_vec(),
        runs: n_runs,
        t_grid: t_grid.to_vec(),
        survival,
        survival_wilson,
        fitted_rate,
        comparison_rate,
    })
}

/// Deviation probabilities of the normalized local time of `y` at horizon
/// `t`. The horizon must be at least `mixing_multiple * L² log L` so the
/// chain has time to equilibrate; smaller horizons are refused.
pub fn local_time_concentration_experiment<const D: usize>(
    profile: &TiltedProfile<D>,
    y: &Site<D>,
    t: f64,
    delta_grid: &[f64],
    n_runs: u64,
    seed: u64,
    mixing_multiple: f64,
) -> Result<LocalTimeReport> {
    require_runs(n_runs)?;
    require_grid("deviation", delta_grid, f64::MIN_POSITIVE)?;
    require_in_support(profile, y)?;
    if !(mixing_multiple.is_finite() && mixing_multiple > 0.0) {
        return Err(Error::config(format!(
            "mixing multiple {mixing_multiple} must be positive and finite"
        )));
    }
    let l = profile.half_width() as f64;
    let threshold = mixing_multiple * l * l * l.ln();
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::config(format!("horizon {t} must be positive and finite")));
    }
    if t < threshold {
        return Err(Error::config(format!(
            "horizon {t} is below the mixing requirement {threshold:.3} \
             (= {mixing_multiple} * L² log L at half-width {l})"
        )));
    }
    let generator = TiltedGenerator::new(profile);
    let splitter = SeedSplitter::new(seed);
    let center = [0i64; D];
    let pi_y = profile.density(y);
    let expected = pi_y * t;
    let ratios: Vec<f64> = (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = splitter.substream(0, i);
            let path = generator.simulate_from(center, t, &mut rng)?;
            Ok(local_time_at(&path, y) / expected)
        })
        .collect::<Result<_>>()?;
    let mut deviation_probability = Vec::with_capacity(delta_grid.len());
    let mut deviation_wilson = Vec::with_capacity(delta_grid.len());
    for &delta in delta_grid {
        let hits = ratios.iter().filter(|r| (*r - 1.0).abs() >= delta).count() as u64;
        deviation_probability.push(hits as f64 / n_runs as f64);
        deviation_wilson.push(wilson_interval(hits, n_runs, WILSON_Z));
    }
    Ok(LocalTimeReport {
        target: y.to_vec(),
        runs: n_runs,
        horizon: t,
        expected_local_time: expected,
        mean_ratio: mean(&ratios),
        delta_grid: delta_grid.to_vec(),
        deviation_probability,
        deviation_wilson,
    })
}

/// Smallest half-width whose box-growth exponent covers `t / beta`; the
/// experiment requires the profile to be built at exactly this width.
fn required_half_width(ratio: f64, d: usize) -> i64 {
    let guess = ratio.powf(1.0 / (d as f64 + 1.0)).floor() as i64 - 2;
    let mut m = guess.max(1);
    while (m as f64).powi(d as i32 + 1) < ratio * (1.0 - 1e-12) {
        m += 1;
    }
    m
}

/// Frequencies of the shell-occupation and boundary control events at
/// horizon `t` with penalty strength `beta`, on the profile matched to
/// the scaling width `ceil((t/beta)^(1/(d+1)))`.
pub fn good_event_experiment<const D: usize>(
    profile: &TiltedProfile<D>,
    t: f64,
    beta: f64,
    occupation_threshold: f64,
    boundary_threshold: f64,
    n_runs: u64,
    seed: u64,
) -> Result<GoodEventReport> {
    require_runs(n_runs)?;
    for (name, v) in [
        ("horizon", t),
        ("penalty strength", beta),
        ("occupation threshold", occupation_threshold),
        ("boundary threshold", boundary_threshold),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::config(format!("{name} {v} must be positive and finite")));
        }
    }
    let l = profile.half_width();
    let required = required_half_width(t / beta, D);
    if l != required {
        return Err(Error::config(format!(
            "half-width {l} does not match the scaling width {required} \
             for horizon {t} and penalty strength {beta}"
        )));
    }
    let shell_mass: Vec<f64> = (1..=l as usize)
        .map(|r| profile.shell_mass(r).expect("shell levels are in range"))
        .collect();
    let generator = TiltedGenerator::new(profile);
    let splitter = SeedSplitter::new(seed);
    let center = [0i64; D];
    let box_sites = (2 * l + 1).pow(D as u32) as f64;
    struct RunOutcome {
        occupation: bool,
        boundary: bool,
        boundary_size: usize,
        visited: usize,
    }
    let outcomes: Vec<RunOutcome> = (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = splitter.substream(0, i);
            let path = generator.simulate_from(center, t, &mut rng)?;
            let mut shell_time = vec![0.0f64; l as usize + 1];
            let mut cur = path.start;
            for (hold, step) in &path.events {
                let level = profile.level_of(&cur).expect("trajectory stays in support");
                shell_time[level as usize] += hold;
                cur = add(cur, *step);
            }
            let level = profile.level_of(&cur).expect("trajectory stays in support");
            shell_time[level as usize] += path.final_hold();
            let occupation = (1..=l as usize)
                .all(|r| shell_time[r] < occupation_threshold * shell_mass[r - 1] * t);
            let field = OccupationField::from_path(&path)?;
            let cap = boundary_threshold * (l as f64).powi(D as i32 - 1);
            Ok(RunOutcome {
                occupation,
                boundary: field.boundary_size() as f64 <= cap,
                boundary_size: field.boundary_size(),
                visited: field.visited_count(),
            })
        })
        .collect::<Result<_>>()?;
    let occ = outcomes.iter().filter(|o| o.occupation).count() as u64;
    let bnd = outcomes.iter().filter(|o| o.boundary).count() as u64;
    let good = outcomes
        .iter()
        .filter(|o| o.occupation && o.boundary)
        .count() as u64;
    let boundary_sizes: Vec<f64> = outcomes.iter().map(|o| o.boundary_size as f64).collect();
    let unvisited: Vec<f64> = outcomes.iter().map(|o| box_sites - o.visited as f64).collect();
    Ok(GoodEventReport {
        runs: n_runs,
        horizon: t,
        beta,
        half_width: l,
        occupation_threshold,
        boundary_threshold,
        occupation_frequency: occ as f64 / n_runs as f64,
        boundary_frequency: bnd as f64 / n_runs as f64,
        good_frequency: good as f64 / n_runs as f64,
        good_wilson: wilson_interval(good, n_runs, WILSON_Z),
        mean_boundary_size: mean(&boundary_sizes),
        mean_unvisited: mean(&unvisited),
    })
}
