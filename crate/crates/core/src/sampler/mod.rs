//! Markov-chain sampling of the boundary-penalized walk measures.
//!
//! The chain state is the walk's step sequence — held as explicit positions
//! plus, in the continuous-time ensemble, one holding time per position —
//! together with an incrementally maintained occupancy grid and a cached
//! energy. All observables are translation-invariant, so the coordinate
//! anchor is a bookkeeping choice; it is periodically re-centered to keep
//! coordinates small and to reset floating-point drift in the local-time
//! aggregates.
//!
//! Four reversible move families are mixed:
//!
//! * **reptation** — delete a step at one end, append a uniform step at the
//!   other (the holding time travels with its path index), Metropolis
//!   accepted; irreducible on its own;
//! * **single-step heat bath** — pick a step uniformly and resample it from
//!   its exact conditional law given the others: the 2d candidate
//!   directions are weighted by their full Gibbs factors; irreducible on
//!   its own;
//! * **pivot** — apply a random non-identity lattice symmetry to all steps
//!   on one side of a random index, Metropolis accepted (not irreducible
//!   alone; mixes large-scale shape);
//! * **hold resampling** — redraw a contiguous block of holding times from
//!   their conditional law given the skeleton and the block total (a flat
//!   Dirichlet); exact for the boundary-size energy, Metropolis-corrected
//!   for the local-time energies. Continuous-time ensemble only; in the
//!   fixed-step ensemble the move is skipped and counted.
//!
//! Whichever side of the chosen index is shorter is the side that moves
//! (for heat bath and pivot); this is a pure choice of coordinate
//! representative and does not change the sampled law, but it makes the
//! cost per move O(min(k, n+1-k)) instead of O(n).
//!
//! In the continuous-time ensemble the jump count is drawn once at
//! initialization and then held fixed: a single chain targets the measure
//! conditioned on that jump count. Ensemble-level estimates average
//! independently seeded chains whose jump counts are drawn from the
//! reference Poisson law — a deliberate approximation that avoids
//! transdimensional moves; the penalty tilts the true jump-count marginal
//! away from Poisson, so observables that vary strongly with the jump
//! count carry a small bias at fixed horizon.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{energy_from_grid, Ensemble, EnergyValue, GibbsConfig, HamiltonianVariant};
use crate::lattice::boundary::diameter_of_points;
use crate::lattice::grid::OccupancyGrid;
use crate::lattice::{add, check_site, sub, unit_step, LatticeSymmetry, Site};
use crate::stats::{summarize, Summary};

mod conditioned;
mod moves;

pub use conditioned::{conditioned_sample, ConditionedMethod, ConditionedRun};
pub use moves::MoveOutcome;

/// Sweeps between coordinate re-anchoring / grid rebuilds.
const REANCHOR_SWEEPS: u64 = 512;

/// Accepted moves between full bookkeeping rechecks in debug builds.
const RECHECK_ACCEPTED: u64 = 10_000;

/// The move families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MoveKind {
    Reptation,
    HeatBath,
    Pivot,
    HoldResample,
}

impl MoveKind {
    pub const ALL: [MoveKind; 4] = [
        MoveKind::Reptation,
        MoveKind::HeatBath,
        MoveKind::Pivot,
        MoveKind::HoldResample,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            MoveKind::Reptation => "reptation",
            MoveKind::HeatBath => "heat-bath",
            MoveKind::Pivot => "pivot",
            MoveKind::HoldResample => "hold-resample",
        }
    }
}

/// Relative weights of the move families. Only ratios matter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoveMix {
    pub reptation: f64,
    pub heat_bath: f64,
    pub pivot: f64,
    pub hold_resample: f64,
}

impl Default for MoveMix {
    fn default() -> Self {
        MoveMix {
            reptation: 0.90,
            heat_bath: 0.045,
            pivot: 0.045,
            hold_resample: 0.01,
        }
    }
}

impl MoveMix {
    /// Mix for long chains: heat bath and pivot cost O(n) per move, so their
    /// share is cut and cheap reptation dominates.
    pub fn large_system() -> Self {
        MoveMix {
            reptation: 0.985,
            heat_bath: 0.005,
            pivot: 0.005,
            hold_resample: 0.005,
        }
    }

    fn weights(&self) -> [f64; 4] {
        [self.reptation, self.heat_bath, self.pivot, self.hold_resample]
    }

    pub fn validate(&self) -> Result<()> {
        for (w, kind) in self.weights().iter().zip(MoveKind::ALL) {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::Config(format!(
                    "move weight for {} must be finite and >= 0, got {w}",
                    kind.label()
                )));
            }
        }
        let total: f64 = self.weights().iter().sum();
        if total <= 0.0 {
            return Err(Error::Config("move mix has no positive weight".into()));
        }
        if self.reptation + self.heat_bath <= 0.0 {
            return Err(Error::Config(
                "move mix needs positive weight on a family that is irreducible \
                 on its own (reptation or single-step heat bath)"
                    .into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn sample(&self, rng: &mut impl Rng) -> MoveKind {
        let w = self.weights();
        let total: f64 = w.iter().sum();
        let r = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        for (wi, kind) in w.iter().zip(MoveKind::ALL) {
            acc += wi;
            if r < acc {
                return kind;
            }
        }
        MoveKind::HoldResample
    }
}

/// Sweep schedule: `burn_in` discarded sweeps, then `samples` trace rows
/// recorded every `thinning` sweeps. One sweep is `max(1, jump count)`
/// elementary moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub burn_in: u64,
    pub samples: u64,
    pub thinning: u64,
}

impl Schedule {
    pub fn new(burn_in: u64, samples: u64, thinning: u64) -> Self {
        Schedule {
            burn_in,
            samples,
            thinning,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thinning == 0 {
            return Err(Error::Config("thinning must be >= 1".into()));
        }
        if self.total_sweeps().is_none() {
            return Err(Error::Config("schedule sweep count overflows".into()));
        }
        Ok(())
    }

    fn total_sweeps(&self) -> Option<u64> {
        self.samples
            .checked_mul(self.thinning)
            .and_then(|x| x.checked_add(self.burn_in))
    }
}

/// Initial path shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    /// Space-filling boustrophedon inside a near-minimal cube: a compact,
    /// low-energy start.
    Zigzag,
    /// A simple-random-walk path: a spread-out, high-energy start. Agreement
    /// between the two inits is the standard equilibration check.
    RandomWalk,
}

/// One recorded observation of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    /// Sweeps completed when the row was recorded.
    pub sweep: u64,
    /// Inner vertex boundary size of the range.
    pub boundary: u64,
    /// Local time carried by the inner boundary (visit count in the
    /// fixed-step ensemble).
    pub boundary_local_time: f64,
    /// Euclidean diameter of the range.
    pub diameter: f64,
    /// Number of visited sites.
    pub volume: u64,
    /// Per-axis extents (max - min) of the range.
    pub extents: Vec<u64>,
    /// Whether every visited site carries local time >= beta.
    pub conditioned_ok: bool,
}

impl TraceRow {
    pub fn csv_header(dim: usize) -> String {
        let mut cols = vec!["sweep".into(), "H".into(), "Htilde".into(), "diam".into(), "volume".into()];
        for i in 1..=dim {
            cols.push(format!("ext{i}"));
        }
        cols.push("conditioned_ok".into());
        cols.join(",")
    }

    pub fn csv_line(&self) -> String {
        let mut cols = vec![
            self.sweep.to_string(),
            self.boundary.to_string(),
            self.boundary_local_time.to_string(),
            self.diameter.to_string(),
            self.volume.to_string(),
        ];
        for e in &self.extents {
            cols.push(e.to_string());
        }
        cols.push(if self.conditioned_ok { "1" } else { "0" }.to_string());
        cols.join(",")
    }
}

/// Per-family move counters. `accepted` counts proposals that changed the
/// state; `skipped` counts draws of a family that does not apply to the
/// current state (hold resampling without holds, side moves on a path with
/// too few steps).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveStats {
    pub proposed: u64,
    pub accepted: u64,
    pub skipped: u64,
}

/// Output of one chain run: the thinned trace, autocorrelation-aware
/// summaries per observable, and move statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunTrace {
    pub dim: usize,
    /// The (fixed) jump count of this chain.
    pub jump_count: u64,
    pub rows: Vec<TraceRow>,
    /// Keyed by observable name (see [`observable_keys`]).
    pub summaries: BTreeMap<String, Summary>,
    /// Keyed by move-family label.
    pub move_stats: BTreeMap<String, MoveStats>,
    /// True when produced by a biased shortcut (the constrained conditioned
    /// chain) rather than an exact method.
    pub heuristic: bool,
}

impl RunTrace {
    pub fn summary(&self, key: &str) -> Option<&Summary> {
        self.summaries.get(key)
    }

    /// Extracts one observable column from the trace.
    pub fn column(&self, key: &str) -> Option<Vec<f64>> {
        column_values(&self.rows, self.dim, key)
    }
}

/// The observable columns recorded per row, in trace order.
pub fn observable_keys(dim: usize) -> Vec<String> {
    let mut keys = vec!["H".into(), "Htilde".into(), "diam".into(), "volume".into()];
    for i in 1..=dim {
        keys.push(format!("ext{i}"));
    }
    keys.push("conditioned_ok".into());
    keys
}

fn column_values(rows: &[TraceRow], dim: usize, key: &str) -> Option<Vec<f64>> {
    let get: Box<dyn Fn(&TraceRow) -> f64> = match key {
        "H" => Box::new(|r: &TraceRow| r.boundary as f64),
        "Htilde" => Box::new(|r: &TraceRow| r.boundary_local_time),
        "diam" => Box::new(|r: &TraceRow| r.diameter),
        "volume" => Box::new(|r: &TraceRow| r.volume as f64),
        "conditioned_ok" => Box::new(|r: &TraceRow| if r.conditioned_ok { 1.0 } else { 0.0 }),
        _ => {
            let idx = key.strip_prefix("ext")?.parse::<usize>().ok()?;
            if idx == 0 || idx > dim {
                return None;
            }
            Box::new(move |r: &TraceRow| r.extents[idx - 1] as f64)
        }
    };
    Some(rows.iter().map(|r| get(r)).collect())
}

/// Chain state: the path (positions plus optional holds), the occupancy
/// grid kept consistent move by move, and the cached energy of the current
/// configuration.
#[derive(Debug, Clone)]
pub struct ChainState<const D: usize> {
    config: GibbsConfig,
    positions: VecDeque<Site<D>>,
    holds: Option<VecDeque<f64>>,
    grid: OccupancyGrid<D>,
    energy_cache: EnergyValue,
    accepted_total: u64,
    scratch: Vec<Site<D>>,
    symmetries: Vec<LatticeSymmetry<D>>,
}

impl<const D: usize> ChainState<D> {
    /// Builds a state from an explicit path. The path must be a
    /// nearest-neighbor sequence; holds are required in the continuous-time
    /// ensemble (nonnegative, summing to the horizon) and forbidden in the
    /// fixed-step ensemble. A hard-constraint configuration must start
    /// feasible.
    pub fn new(
        config: &GibbsConfig,
        positions: Vec<Site<D>>,
        holds: Option<Vec<f64>>,
    ) -> Result<Self> {
        config.validate()?;
        if config.dim != D {
            return Err(Error::Config(format!(
                "config dimension {} does not match state dimension {D}",
                config.dim
            )));
        }
        if positions.is_empty() {
            return Err(Error::Config("path must have at least one position".into()));
        }
        for z in &positions {
            check_site(z)?;
        }
        for w in positions.windows(2) {
            let step = sub(w[1], w[0]);
            let l1: i64 = step.iter().map(|c| c.abs()).sum();
            if l1 != 1 {
                return Err(Error::Config(format!(
                    "positions are not a nearest-neighbor path: step {step:?}"
                )));
            }
        }
        match config.ensemble {
            Ensemble::DiscreteSkeleton { steps } => {
                if positions.len() as u64 != steps + 1 {
                    return Err(Error::Config(format!(
                        "fixed-step path needs {} positions, got {}",
                        steps + 1,
                        positions.len()
                    )));
                }
                if holds.is_some() {
                    return Err(Error::Config(
                        "the fixed-step ensemble carries no holding times".into(),
                    ));
                }
            }
            Ensemble::ContinuousTime { horizon } => {
                let hs = holds.as_ref().ok_or_else(|| {
                    Error::Config("the continuous-time ensemble needs holding times".into())
                })?;
                if hs.len() != positions.len() {
                    return Err(Error::Config(format!(
                        "need one hold per position: {} holds for {} positions",
                        hs.len(),
                        positions.len()
                    )));
                }
                let mut total = 0.0;
                for h in hs {
                    if !h.is_finite() || *h < 0.0 {
                        return Err(Error::Config(format!(
                            "holds must be finite and >= 0, got {h}"
                        )));
                    }
                    total += h;
                }
                if (total - horizon).abs() > 1e-9 * horizon.max(1.0) {
                    return Err(Error::Config(format!(
                        "holds sum to {total}, horizon is {horizon}"
                    )));
                }
            }
        }
        let grid = match &holds {
            Some(hs) => OccupancyGrid::from_positions(&positions, Some(hs)),
            // Unit holds: grid local time then equals the visit count.
            None => {
                let unit = vec![1.0; positions.len()];
                OccupancyGrid::from_positions(&positions, Some(&unit))
            }
        };
        let energy_cache = energy_from_grid(config.variant, &grid, config.beta);
        if energy_cache == EnergyValue::Indicator(false) {
            return Err(Error::Domain(
                "initial path violates the local-time floor".into(),
            ));
        }
        Ok(ChainState {
            config: *config,
            positions: positions.into(),
            holds: holds.map(Into::into),
            grid,
            energy_cache,
            accepted_total: 0,
            scratch: Vec::new(),
            symmetries: LatticeSymmetry::all_non_identity(),
        })
    }

    /// Draws an initial state: the jump count is the configured step count
    /// in the fixed-step ensemble and Poisson(horizon) in the continuous
    /// one (capped so equal holds satisfy a hard local-time floor), with
    /// the path shape given by `kind` and holds split equally.
    pub fn init(config: &GibbsConfig, kind: InitKind, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let (jumps, holds) = match config.ensemble {
            Ensemble::DiscreteSkeleton { steps } => (steps as usize, None),
            Ensemble::ContinuousTime { horizon } => {
                let mut k = draw_poisson(horizon, rng);
                if config.variant == HamiltonianVariant::ConditionedLocalTime {
                    if horizon < config.beta {
                        return Err(Error::Domain(format!(
                            "horizon {horizon} is below the local-time floor {}: \
                             every path is infeasible",
                            config.beta
                        )));
                    }
                    if config.beta > 0.0 {
                        let kmax = (horizon / config.beta).floor() as usize - 1;
                        k = k.min(kmax);
                    }
                }
                let h = horizon / (k + 1) as f64;
                (k, Some(vec![h; k + 1]))
            }
        };
        let positions = match kind {
            InitKind::Zigzag => zigzag_path::<D>(jumps + 1),
            InitKind::RandomWalk => random_walk_path::<D>(jumps + 1, rng),
        };
        Self::new(config, positions, holds)
    }

    pub fn config(&self) -> &GibbsConfig {
        &self.config
    }

    /// Number of jumps (steps) in the path.
    pub fn n(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn energy(&self) -> EnergyValue {
        self.energy_cache
    }

    pub fn grid(&self) -> &OccupancyGrid<D> {
        &self.grid
    }

    pub fn positions(&self) -> Vec<Site<D>> {
        self.positions.iter().copied().collect()
    }

    pub fn holds(&self) -> Option<Vec<f64>> {
        self.holds.as_ref().map(|h| h.iter().copied().collect())
    }

    /// Local time attached to path index `i` (1 per visit when there are no
    /// holds, so that grid local times count visits).
    fn hold_at(&self, i: usize) -> f64 {
        match &self.holds {
            Some(h) => h[i],
            None => 1.0,
        }
    }

    fn log_weight_now(&self) -> f64 {
        energy_from_grid(self.config.variant, &self.grid, self.config.beta)
            .log_weight(self.config.beta)
    }

    fn refresh_energy(&mut self) {
        self.energy_cache = energy_from_grid(self.config.variant, &self.grid, self.config.beta);
    }

    /// Re-centers coordinates at the range's bounding-box midpoint and
    /// rebuilds the grid from scratch: bounds coordinate drift and resets
    /// accumulated floating-point error in the local-time aggregates.
    pub fn reanchor(&mut self) {
        let mut lo = [i64::MAX; D];
        let mut hi = [i64::MIN; D];
        for z in &self.positions {
            for i in 0..D {
                lo[i] = lo[i].min(z[i]);
                hi[i] = hi[i].max(z[i]);
            }
        }
        let center: Site<D> = std::array::from_fn(|i| (lo[i] + hi[i]) / 2);
        let shifted: Vec<Site<D>> = self.positions.iter().map(|z| sub(*z, center)).collect();
        let holds_vec: Option<Vec<f64>> = self.holds.as_ref().map(|h| h.iter().copied().collect());
        let unit;
        let holds_slice: &[f64] = match &holds_vec {
            Some(h) => h,
            None => {
                unit = vec![1.0; shifted.len()];
                &unit
            }
        };
        self.grid = OccupancyGrid::from_positions(&shifted, Some(holds_slice));
        self.positions = shifted.into();
        self.refresh_energy();
    }

    /// Records the current configuration. Fails with a state dump if the
    /// local-time aggregates have gone non-finite.
    fn trace_row(&self, sweep: u64) -> Result<TraceRow> {
        let htilde = self.grid.boundary_local_time();
        let total = self.grid.total_local_time();
        if !htilde.is_finite() || !total.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite energy at sweep {sweep}: boundary local time {htilde}, \
                 total {total}; state: {}",
                self.dump()
            )));
        }
        let boundary_pts = self.grid.boundary_sites();
        let extents = self
            .grid
            .extents()
            .map(|e| e.to_vec())
            .unwrap_or_else(|| vec![0; D]);
        Ok(TraceRow {
            sweep,
            boundary: self.grid.boundary_size(),
            boundary_local_time: htilde,
            diameter: diameter_of_points(&boundary_pts),
            volume: self.grid.volume(),
            extents,
            conditioned_ok: self.grid.min_local_time() >= self.config.beta,
        })
    }

    fn dump(&self) -> String {
        let head: Vec<Site<D>> = self.positions.iter().take(32).copied().collect();
        format!(
            "jumps={}, volume={}, boundary={}, first positions {:?}{}",
            self.n(),
            self.grid.volume(),
            self.grid.boundary_size(),
            head,
            if self.positions.len() > 32 { ", ..." } else { "" }
        )
    }

    /// Checks the incrementally maintained grid against a from-scratch
    /// rebuild: exact equality for occupancy and boundary counts, tight
    /// tolerance for the floating-point local-time aggregates. Panics on
    /// violation (this is an internal invariant, not an input error).
    pub fn verify_bookkeeping(&self) {
        let positions: Vec<Site<D>> = self.positions.iter().copied().collect();
        let holds_vec: Option<Vec<f64>> = self.holds.as_ref().map(|h| h.iter().copied().collect());
        let unit;
        let holds_slice: &[f64] = match &holds_vec {
            Some(h) => h,
            None => {
                unit = vec![1.0; positions.len()];
                &unit
            }
        };
        let rebuilt = OccupancyGrid::from_positions(&positions, Some(holds_slice));
        assert_eq!(
            self.grid.volume(),
            rebuilt.volume(),
            "incremental volume diverged from rebuild"
        );
        assert_eq!(
            self.grid.boundary_size(),
            rebuilt.boundary_size(),
            "incremental boundary count diverged from rebuild"
        );
        let tol = 1e-8 * rebuilt.total_local_time().abs().max(1.0);
        assert!(
            (self.grid.total_local_time() - rebuilt.total_local_time()).abs() <= tol,
            "incremental total local time drifted: {} vs {}",
            self.grid.total_local_time(),
            rebuilt.total_local_time()
        );
        assert!(
            (self.grid.boundary_local_time() - rebuilt.boundary_local_time()).abs() <= tol,
            "incremental boundary local time drifted: {} vs {}",
            self.grid.boundary_local_time(),
            rebuilt.boundary_local_time()
        );
        let a = self.grid.cells();
        let b = rebuilt.cells();
        assert_eq!(a.len(), b.len(), "cell lists differ in length");
        for ((za, ca, la), (zb, cb, lb)) in a.iter().zip(&b) {
            assert_eq!((za, ca), (zb, cb), "cell occupancy diverged at {za:?}");
            assert!(
                (la - lb).abs() <= tol,
                "cell local time drifted at {za:?}: {la} vs {lb}"
            );
        }
    }
}

fn draw_poisson(lambda: f64, rng: &mut impl Rng) -> usize {
    let pois = Poisson::new(lambda).expect("validated horizon");
    let draw: f64 = pois.sample(rng);
    draw as usize
}

/// Boustrophedon path of `len` positions inside a near-minimal cube:
/// consecutive positions are lattice neighbors, all positions distinct.
fn zigzag_path<const D: usize>(len: usize) -> Vec<Site<D>> {
    let mut side = 1i64;
    while (side.pow(D as u32) as usize) < len {
        side += 1;
    }
    (0..len)
        .map(|m| {
            // Serpentine order, highest axis first: an odd layer index
            // reverses the enumeration of the sub-block below it, so
            // consecutive indices are always lattice neighbors.
            let mut coords = [0i64; D];
            let mut r = m as i64;
            for i in (0..D).rev() {
                let block = side.pow(i as u32);
                let q = r / block;
                r %= block;
                coords[i] = q;
                if q % 2 == 1 {
                    r = block - 1 - r;
                }
            }
            coords
        })
        .collect()
}

/// Simple-random-walk path of `len` positions from the origin.
fn random_walk_path<const D: usize>(len: usize, rng: &mut impl Rng) -> Vec<Site<D>> {
    let mut out = Vec::with_capacity(len);
    let mut z = [0i64; D];
    out.push(z);
    for _ in 1..len {
        z = add(z, unit_step::<D>(rng.gen_range(0..2 * D)));
        out.push(z);
    }
    out
}

/// Runs a chain from a freshly drawn initial state.
pub fn run_chain<const D: usize>(
    config: &GibbsConfig,
    mix: &MoveMix,
    schedule: &Schedule,
    init: InitKind,
    rng: &mut impl Rng,
) -> Result<RunTrace> {
    let state = ChainState::<D>::init(config, init, rng)?;
    run_chain_with_state(state, mix, schedule, rng)
}

/// Runs a chain from an explicit state (used for pinned-jump-count tests
/// and the constrained conditioned sampler).
pub fn run_chain_with_state<const D: usize>(
    state: ChainState<D>,
    mix: &MoveMix,
    schedule: &Schedule,
    rng: &mut impl Rng,
) -> Result<RunTrace> {
    run_chain_capturing(state, mix, schedule, rng).map(|(trace, _)| trace)
}

/// Runs a chain and hands back the final state alongside the trace, so
/// callers can export the terminal shape.
pub fn run_chain_capturing<const D: usize>(
    mut state: ChainState<D>,
    mix: &MoveMix,
    schedule: &Schedule,
    rng: &mut impl Rng,
) -> Result<(RunTrace, ChainState<D>)> {
    mix.validate()?;
    schedule.validate()?;
    let moves_per_sweep = state.n().max(1) as u64;
    let total_sweeps = schedule.total_sweeps().expect("validated schedule");
    let mut rows = Vec::with_capacity(schedule.samples as usize);
    let mut stats: BTreeMap<String, MoveStats> = MoveKind::ALL
        .iter()
        .map(|k| (k.label().to_string(), MoveStats::default()))
        .collect();
    for sweep in 1..=total_sweeps {
        for _ in 0..moves_per_sweep {
            let (kind, outcome) = state.apply_random_move(mix, rng);
            let entry = stats.get_mut(kind.label()).expect("all kinds present");
            entry.proposed += 1;
            match outcome {
                MoveOutcome::Accepted => entry.accepted += 1,
                MoveOutcome::Rejected => {}
                MoveOutcome::Skipped => entry.skipped += 1,
            }
        }
        if sweep > schedule.burn_in && (sweep - schedule.burn_in) % schedule.thinning == 0 {
            rows.push(state.trace_row(sweep)?);
        }
        if sweep % REANCHOR_SWEEPS == 0 {
            state.reanchor();
        }
    }
    let mut summaries = BTreeMap::new();
    for key in observable_keys(D) {
        let col = column_values(&rows, D, &key).expect("known key");
        summaries.insert(key, summarize(&col));
    }
    let trace = RunTrace {
        dim: D,
        jump_count: state.n() as u64,
        rows,
        summaries,
        move_stats: stats,
        heuristic: false,
    };
    Ok((trace, state))
}
