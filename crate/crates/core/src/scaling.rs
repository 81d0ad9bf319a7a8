//! Scaling studies across (time, beta) grids: batched chain runs with
//! reproducible per-point seeding, log-log exponent fits with bootstrap
//! confidence intervals, thermodynamic integration of the log partition
//! value, and a minimal-extent tail comparison against the one-dimensional
//! exit-time bound.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{GibbsConfig, HamiltonianVariant};
use crate::lattice::boundary::snapshot_string;
use crate::rng::SeedSplitter;
use crate::sampler::{run_chain_capturing, ChainState, InitKind, MoveMix, Schedule};
use crate::stats::{ols, percentile, wilson_interval, Summary};

/// Bootstrap resamples behind every exponent confidence interval.
pub const BOOTSTRAP_RESAMPLES: usize = 2000;
/// Minimum number of grid points a power-law fit will accept.
pub const MIN_FIT_RECORDS: usize = 4;
/// Minimum max/min ratio of the predictor across the fitted records
/// (1.5 decades).
pub const MIN_PREDICTOR_RATIO: f64 = 31.622776601683793;
/// Normal quantile behind the reported binomial intervals (95%).
const WILSON_Z: f64 = 1.96;

/// One completed chain run at one grid point, in a form that serializes
/// losslessly: the configuration, the seed that reproduces it, per-observable
/// summaries, the per-sample minimum range extent, and the final shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: GibbsConfig,
    pub seed: u64,
    /// Per-observable mean / standard error / effective sample size, keyed
    /// like the trace summaries ("H", "Htilde", "diam", "volume", "ext1"..).
    pub summaries: BTreeMap<String, Summary>,
    /// Minimum over axes of the range extents, one entry per retained sample.
    pub min_extents: Vec<u64>,
    /// Site-set export of the final path's range (one site per line).
    pub shape_snapshot: Option<String>,
}

impl RunRecord {
    pub fn summary(&self, key: &str) -> Option<&Summary> {
        self.summaries.get(key)
    }

    /// Step count or horizon of this record's ensemble.
    pub fn time_scale(&self) -> f64 {
        self.config.ensemble.time_scale()
    }
}

/// A failed grid point: its position in the grid and the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointFailure {
    pub index: usize,
    pub message: String,
}

/// Outcome of a sweep: the completed records (in grid order) plus any
/// per-point failures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub records: Vec<RunRecord>,
    pub failures: Vec<PointFailure>,
}

fn run_point_dim<const D: usize>(
    config: &GibbsConfig,
    mix: &MoveMix,
    schedule: &Schedule,
    seed: u64,
) -> Result<RunRecord> {
    let splitter = SeedSplitter::new(seed);
    let mut rng = splitter.stream(0);
    let state = ChainState::<D>::init(config, InitKind::Zigzag, &mut rng)?;
    let (trace, final_state) = run_chain_capturing(state, mix, schedule, &mut rng)?;
    let min_extents = trace
        .rows
        .iter()
        .map(|r| r.extents.iter().copied().min().unwrap_or(0))
        .collect();
    let shape_snapshot = Some(snapshot_string(&final_state.positions()));
    Ok(RunRecord {
        config: *config,
        seed,
        summaries: trace.summaries,
        min_extents,
        shape_snapshot,
    })
}

fn run_point(
    config: &GibbsConfig,
    mix: &MoveMix,
    schedule: &Schedule,
    seed: u64,
) -> Result<RunRecord> {
    match config.dim {
        1 => run_point_dim::<1>(config, mix, schedule, seed),
        2 => run_point_dim::<2>(config, mix, schedule, seed),
        3 => run_point_dim::<3>(config, mix, schedule, seed),
        4 => run_point_dim::<4>(config, mix, schedule, seed),
        d => Err(Error::config(format!("dimension {d} unsupported (1..=4)"))),
    }
}

/// Runs one chain per grid point (in parallel, one seed per point) and
/// collects the records. A failing point is reported in `failures` without
/// aborting the rest; only a sweep in which every point failed is an error.
/// Each point is reproducible on its own from (config, seed).
pub fn sweep(
    grid: &[GibbsConfig],
    mix: &MoveMix,
    schedule: &Schedule,
    seeds: &[u64],
) -> Result<SweepReport> {
    if grid.is_empty() {
        return Err(Error::config("sweep grid is empty"));
    }
    if seeds.len() != grid.len() {
        return Err(Error::config(format!(
            "one seed per grid point: {} configs vs {} seeds",
            grid.len(),
            seeds.len()
        )));
    }
    mix.validate()?;
    schedule.validate()?;
    let outcomes: Vec<Result<RunRecord>> = grid
        .par_iter()
        .zip(seeds.par_iter())
        .map(|(config, &seed)| run_point(config, mix, schedule, seed))
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (index, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(record) => records.push(record),
            Err(e) => failures.push(PointFailure {
                index,
                message: e.to_string(),
            }),
        }
    }
    if records.is_empty() {
        return Err(Error::config(format!(
            "all {} sweep points failed; first failure: {}",
            grid.len(),
            failures[0].message
        )));
    }
    Ok(SweepReport { records, failures })
}

/// Which observable a power-law fit regresses on the predictor t/beta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitObservable {
    Diameter,
    Volume,
}

impl FitObservable {
    pub fn key(self) -> &'static str {
        match self {
            FitObservable::Diameter => "diam",
            FitObservable::Volume => "volume",
        }
    }
}

/// A fitted power law: log(observable) = intercept + slope * log(t/beta),
/// with a bootstrap 95% confidence interval for the slope and the (t, beta)
/// grid it was fitted on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub observable: String,
    pub slope: f64,
    pub intercept: f64,
    /// Percentile-bootstrap 95% interval, widened (if necessary) to contain
    /// the point estimate.
    pub ci: (f64, f64),
    /// (time scale, beta) of each fitted record.
    pub grid: Vec<(f64, f64)>,
}

/// Log-log least squares of an observable's mean against t/beta, with a
/// nonparametric bootstrap over records for the slope interval. Requires at
/// least [`MIN_FIT_RECORDS`] records spanning 1.5 decades of t/beta.
pub fn fit_exponent(
    records: &[RunRecord],
    observable: FitObservable,
    bootstrap_seed: u64,
) -> Result<ExponentFit> {
    if records.len() < MIN_FIT_RECORDS {
        return Err(Error::config(format!(
            "power-law fit needs at least {MIN_FIT_RECORDS} records, got {}",
            records.len()
        )));
    }
    let key = observable.key();
    let mut xs = Vec::with_capacity(records.len());
    let mut ys = Vec::with_capacity(records.len());
    let mut grid = Vec::with_capacity(records.len());
    let mut pred_min = f64::INFINITY;
    let mut pred_max = 0.0f64;
    for r in records {
        let beta = r.config.beta;
        if !(beta > 0.0) {
            return Err(Error::config(
                "the predictor t/beta needs beta > 0 on every record",
            ));
        }
        let t = r.time_scale();
        let predictor = t / beta;
        let mean = r
            .summary(key)
            .ok_or_else(|| Error::config(format!("record lacks a \"{key}\" summary")))?
            .mean;
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(Error::config(format!(
                "log-log fit needs positive finite means; \"{key}\" was {mean}"
            )));
        }
        pred_min = pred_min.min(predictor);
        pred_max = pred_max.max(predictor);
        xs.push(predictor.ln());
        ys.push(mean.ln());
        grid.push((t, beta));
    }
    if pred_max / pred_min < MIN_PREDICTOR_RATIO * (1.0 - 1e-12) {
        return Err(Error::config(format!(
            "predictor span {:.3}x is below the required 1.5 decades ({MIN_PREDICTOR_RATIO:.1}x)",
            pred_max / pred_min
        )));
    }
    let fit = ols(&xs, &ys).ok_or_else(|| Error::numerical("degenerate predictor grid"))?;

    let mut rng = SeedSplitter::new(bootstrap_seed).stream(0);
    let n = records.len();
    let mut slopes = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut bx = vec![0.0; n];
    let mut by = vec![0.0; n];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        for i in 0..n {
            let j = rng.gen_range(0..n);
            bx[i] = xs[j];
            by[i] = ys[j];
        }
        if let Some(f) = ols(&bx, &by) {
            if f.slope.is_finite() {
                slopes.push(f.slope);
            }
        }
    }
    if slopes.len() < BOOTSTRAP_RESAMPLES / 2 {
        return Err(Error::numerical(
            "bootstrap slopes were degenerate in most resamples",
        ));
    }
    slopes.sort_unstable_by(f64::total_cmp);
    // Percentile interval, expanded by the small-sample normal band around
    // the point estimate (the raw percentile interval is too narrow at a
    // handful of records); the union keeps whatever asymmetry the bootstrap
    // distribution shows while restoring near-nominal coverage.
    let boot_mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
    let boot_var = slopes.iter().map(|s| (s - boot_mean).powi(2)).sum::<f64>()
        / (slopes.len() - 1) as f64;
    let widen = 1.96 * (n as f64 / (n as f64 - 2.0)).sqrt() * boot_var.sqrt();
    let lo = percentile(&slopes, 0.025).min(fit.slope - widen);
    let hi = percentile(&slopes, 0.975).max(fit.slope + widen);
    Ok(ExponentFit {
        observable: key.to_string(),
        slope: fit.slope,
        intercept: fit.intercept,
        ci: (lo.min(fit.slope), hi.max(fit.slope)),
        grid,
    })
}

/// Thermodynamic-integration estimate of the log partition value, with its
/// ingredients exposed for inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermoEstimate {
    pub log_z: f64,
    /// Monte Carlo standard error propagated through the quadrature weights
    /// (grid points are independent chains).
    pub se: f64,
    /// Richardson estimate of the trapezoid discretization error
    /// (|full - half-grid| / 3).
    pub discretization_bound: f64,
    pub beta_grid: Vec<f64>,
    pub energy_means: Vec<f64>,
    pub energy_ses: Vec<f64>,
}

fn trapezoid_weights(xs: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; xs.len()];
    for i in 0..xs.len().saturating_sub(1) {
        let h = xs[i + 1] - xs[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}

/// log Z(beta) = -integral of the mean energy from 0 to beta, by trapezoid
/// quadrature over chain runs at each grid point. The grid must start at 0,
/// increase strictly to the target beta, and (for beta > 0) have an odd
/// length of at least 5 so a half-resolution grid can certify the quadrature
/// error; an estimate coarser than `tolerance` is refused with a refinement
/// suggestion rather than returned.
pub fn estimate_log_z(
    config: &GibbsConfig,
    beta_grid: &[f64],
    mix: &MoveMix,
    schedule: &Schedule,
    seeds: &[u64],
    tolerance: f64,
) -> Result<ThermoEstimate> {
    config.validate()?;
    if config.variant == HamiltonianVariant::ConditionedLocalTime {
        return Err(Error::config(
            "the hard-constraint variant is not an exponential tilt; \
             there is no energy integrand in beta",
        ));
    }
    if !(tolerance > 0.0) || !tolerance.is_finite() {
        return Err(Error::config(format!(
            "tolerance must be finite and > 0, got {tolerance}"
        )));
    }
    if beta_grid.is_empty() {
        return Err(Error::config("beta grid is empty"));
    }
    if beta_grid[0] != 0.0 {
        return Err(Error::config("beta grid must start at 0"));
    }
    for pair in beta_grid.windows(2) {
        if !(pair[1] > pair[0]) || !pair[1].is_finite() {
            return Err(Error::config("beta grid must increase strictly"));
        }
    }
    let last = *beta_grid.last().expect("nonempty");
    if (last - config.beta).abs() > 1e-12 * config.beta.max(1.0) {
        return Err(Error::config(format!(
            "beta grid must end at the target beta {} (ends at {last})",
            config.beta
        )));
    }
    if seeds.len() != beta_grid.len() {
        return Err(Error::config(format!(
            "one seed per grid point: {} betas vs {} seeds",
            beta_grid.len(),
            seeds.len()
        )));
    }
    if config.beta > 0.0 && (beta_grid.len() < 5 || beta_grid.len() % 2 == 0) {
        return Err(Error::config(format!(
            "beta grid needs an odd length of at least 5 so the quadrature \
             error can be estimated on the half grid; got {}",
            beta_grid.len()
        )));
    }
    mix.validate()?;
    schedule.validate()?;

    let configs: Vec<GibbsConfig> = beta_grid
        .iter()
        .map(|&b| GibbsConfig { beta: b, ..*config })
        .collect();
    let records: Vec<RunRecord> = configs
        .par_iter()
        .zip(seeds.par_iter())
        .map(|(c, &s)| run_point(c, mix, schedule, s))
        .collect::<Result<Vec<RunRecord>>>()?;

    let key = match config.variant {
        HamiltonianVariant::BoundarySize => "H",
        HamiltonianVariant::BoundaryLocalTime => "Htilde",
        HamiltonianVariant::ConditionedLocalTime => unreachable!("rejected above"),
    };
    let mut means = Vec::with_capacity(records.len());
    let mut ses = Vec::with_capacity(records.len());
    for r in &records {
        let s = r
            .summary(key)
            .ok_or_else(|| Error::numerical(format!("run lacks a \"{key}\" summary")))?;
        if !s.mean.is_finite() {
            return Err(Error::numerical(format!(
                "energy mean at beta {} was {}",
                r.config.beta, s.mean
            )));
        }
        means.push(s.mean);
        ses.push(s.se);
    }

    let w_full = trapezoid_weights(beta_grid);
    let integral: f64 = w_full.iter().zip(&means).map(|(w, m)| w * m).sum();
    let se = w_full
        .iter()
        .zip(&ses)
        .map(|(w, s)| (w * s) * (w * s))
        .sum::<f64>()
        .sqrt();

    let discretization_bound = if beta_grid.len() >= 3 {
        let half_xs: Vec<f64> = beta_grid.iter().step_by(2).copied().collect();
        let half_ms: Vec<f64> = means.iter().step_by(2).copied().collect();
        let w_half = trapezoid_weights(&half_xs);
        let half: f64 = w_half.iter().zip(&half_ms).map(|(w, m)| w * m).sum();
        (integral - half).abs() / 3.0
    } else {
        0.0
    };
    if discretization_bound > tolerance {
        return Err(Error::config(format!(
            "quadrature error estimate {discretization_bound:.3e} exceeds the requested \
             tolerance {tolerance:.3e}; refine the beta grid to ~{} points \
             (halve the spacing) and rerun",
            2 * beta_grid.len() - 1
        )));
    }

    Ok(ThermoEstimate {
        log_z: -integral,
        se,
        discretization_bound,
        beta_grid: beta_grid.to_vec(),
        energy_means: means,
        energy_ses: ses,
    })
}

/// One record's minimal-extent tail compared against the exit-time bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtentTailRow {
    pub time_scale: f64,
    pub beta: f64,
    pub samples: usize,
    /// Fraction of retained samples whose minimal axis extent was <= the
    /// threshold.
    pub empirical: f64,
    /// 95% binomial interval around `empirical`.
    pub wilson: (f64, f64),
    /// (n+1) exp(c s - lambda(n) t), capped at 1: the exit-time tail shape
    /// for a width-(n+1) interval, scaled by the calibrated surface term.
    pub bound: f64,
}

/// Minimal-extent tail probabilities across records, against the predicted
/// decay shape with one constant calibrated on the smallest time scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtentTailReport {
    /// The extent threshold n the rows test.
    pub threshold: u64,
    /// Calibrated coefficient of the surface term t^{1-2/(d+1)} beta^{2/(d+1)}.
    pub surface_constant: f64,
    /// One row per record, ordered by increasing time scale.
    pub rows: Vec<ExtentTailRow>,
}

fn surface_term(config: &GibbsConfig) -> f64 {
    let d = config.dim as f64;
    let t = config.ensemble.time_scale();
    t.powf(1.0 - 2.0 / (d + 1.0)) * config.beta.powf(2.0 / (d + 1.0))
}

/// Compares each record's empirical P(min-extent <= threshold) against the
/// exit-time tail shape (n+1) exp(c s - lambda t), where lambda is the
/// spectral rate of a width-(n+1) interval and the coefficient c of the
/// surface term s is calibrated so the bound touches the empirical value
/// (floored at 1/(samples+1)) on the smallest-time record. Records must
/// carry per-sample extents and positive beta.
pub fn extent_tail_check(records: &[RunRecord], threshold: u64) -> Result<ExtentTailReport> {
    if records.is_empty() {
        return Err(Error::config("no records to check"));
    }
    for r in records {
        if r.min_extents.is_empty() {
            return Err(Error::config(
                "records must carry per-sample extents (rerun with samples > 0)",
            ));
        }
        if !(r.config.beta > 0.0) {
            return Err(Error::config("extent tails need beta > 0 on every record"));
        }
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| records[a].time_scale().total_cmp(&records[b].time_scale()));

    let width = (threshold + 1) as f64;
    let lambda = 1.0 - (PI / width).cos();
    let empirical_of = |r: &RunRecord| {
        let hits = r.min_extents.iter().filter(|&&m| m <= threshold).count();
        (hits, r.min_extents.len())
    };

    let first = &records[order[0]];
    let (hits0, n0) = empirical_of(first);
    let target = (hits0 as f64 / n0 as f64).max(1.0 / (n0 as f64 + 1.0));
    let s0 = surface_term(&first.config);
    let t0 = first.time_scale();
    let surface_constant = ((target / width).ln() + lambda * t0) / s0;

    let rows = order
        .iter()
        .map(|&i| {
            let r = &records[i];
            let (hits, n) = empirical_of(r);
            let s = surface_term(&r.config);
            let t = r.time_scale();
            let bound = (width * (surface_constant * s - lambda * t).exp()).min(1.0);
            ExtentTailRow {
                time_scale: t,
                beta: r.config.beta,
                samples: n,
                empirical: hits as f64 / n as f64,
                wilson: wilson_interval(hits as u64, n as u64, WILSON_Z),
                bound,
            }
        })
        .collect();
    Ok(ExtentTailReport {
        threshold,
        surface_constant,
        rows,
    })
}
