//! The four move families. Every move mutates the path and the occupancy
//! grid together, evaluates the new configuration through the grid's O(1)
//! aggregates, and restores the exact previous configuration on rejection.
//!
//! For the side-translating moves (heat bath, pivot) the side that moves is
//! always the shorter one. On the level of step sequences — the chain's
//! real state space, since every observable is translation-invariant —
//! shifting the prefix or the suffix realizes the same update, so the
//! choice is a coordinate convention, not a change of proposal law; it
//! caps the work per move at O(min(k, n+1-k)) grid updates.

use rand::Rng;
use rand_distr::Exp1;

use super::{ChainState, MoveKind, MoveMix};
use crate::gibbs::HamiltonianVariant;
use crate::lattice::{add, sub, unit_step, Site};

/// What a single elementary move did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveOutcome {
    /// The state changed.
    Accepted,
    /// A proposal was evaluated and the old state kept.
    Rejected,
    /// The family does not apply to the current state (no holds to
    /// resample, or too few steps for the move to act on).
    Skipped,
}

impl<const D: usize> ChainState<D> {
    /// Draws a move family from the mix and applies one elementary move.
    pub fn apply_random_move(
        &mut self,
        mix: &MoveMix,
        rng: &mut impl Rng,
    ) -> (MoveKind, MoveOutcome) {
        let kind = mix.sample(rng);
        let outcome = match kind {
            MoveKind::Reptation => self.reptation_move(rng),
            MoveKind::HeatBath => self.heat_bath_move(rng),
            MoveKind::Pivot => self.pivot_move(rng),
            MoveKind::HoldResample => self.hold_resample_move(rng),
        };
        if outcome == MoveOutcome::Accepted {
            self.accepted_total += 1;
            if cfg!(debug_assertions) && self.accepted_total % super::RECHECK_ACCEPTED == 0 {
                self.verify_bookkeeping();
            }
        }
        (kind, outcome)
    }

    /// Metropolis test of the current (already mutated) configuration
    /// against the log-weight of the previous one.
    fn metropolis_accept(&self, old_lw: f64, rng: &mut impl Rng) -> bool {
        let delta = self.log_weight_now() - old_lw;
        if delta >= 0.0 {
            true
        } else {
            rng.gen::<f64>() < delta.exp()
        }
    }

    /// Translates positions `lo..=hi` by `v`, keeping the grid consistent.
    fn translate_side(&mut self, lo: usize, hi: usize, v: Site<D>) {
        for i in lo..=hi {
            let z = self.positions[i];
            let h = self.hold_at(i);
            self.grid.remove_visit(z, h);
        }
        for i in lo..=hi {
            let z = add(self.positions[i], v);
            let h = self.hold_at(i);
            self.positions[i] = z;
            self.grid.add_visit(z, h);
        }
    }

    /// Deletes a step at one end and appends a uniform step at the other;
    /// the hold at the deleted end travels to the new end (holds are
    /// exchangeable under the reference law, so the map is
    /// measure-preserving). Metropolis accepted.
    fn reptation_move(&mut self, rng: &mut impl Rng) -> MoveOutcome {
        let n = self.n();
        if n == 0 {
            return MoveOutcome::Skipped;
        }
        let old_lw = self.energy_cache.log_weight(self.config.beta);
        let forward = rng.gen_bool(0.5);
        let step = unit_step::<D>(rng.gen_range(0..2 * D));
        if forward {
            let old_end = *self.positions.front().expect("nonempty");
            let hold = self.hold_at(0);
            let new_site = add(*self.positions.back().expect("nonempty"), step);
            self.grid.remove_visit(old_end, hold);
            self.grid.add_visit(new_site, hold);
            self.positions.pop_front();
            self.positions.push_back(new_site);
            if let Some(h) = self.holds.as_mut() {
                let v = h.pop_front().expect("aligned holds");
                h.push_back(v);
            }
            if self.metropolis_accept(old_lw, rng) {
                self.refresh_energy();
                MoveOutcome::Accepted
            } else {
                self.positions.pop_back();
                self.positions.push_front(old_end);
                if let Some(h) = self.holds.as_mut() {
                    let v = h.pop_back().expect("aligned holds");
                    h.push_front(v);
                }
                self.grid.remove_visit(new_site, hold);
                self.grid.add_visit(old_end, hold);
                MoveOutcome::Rejected
            }
        } else {
            let old_end = *self.positions.back().expect("nonempty");
            let hold = self.hold_at(self.positions.len() - 1);
            let new_site = add(*self.positions.front().expect("nonempty"), step);
            self.grid.remove_visit(old_end, hold);
            self.grid.add_visit(new_site, hold);
            self.positions.pop_back();
            self.positions.push_front(new_site);
            if let Some(h) = self.holds.as_mut() {
                let v = h.pop_back().expect("aligned holds");
                h.push_front(v);
            }
            if self.metropolis_accept(old_lw, rng) {
                self.refresh_energy();
                MoveOutcome::Accepted
            } else {
                self.positions.pop_front();
                self.positions.push_back(old_end);
                if let Some(h) = self.holds.as_mut() {
                    let v = h.pop_front().expect("aligned holds");
                    h.push_back(v);
                }
                self.grid.remove_visit(new_site, hold);
                self.grid.add_visit(old_end, hold);
                MoveOutcome::Rejected
            }
        }
    }

    /// Resamples a uniformly chosen step from its exact conditional law:
    /// the 2d candidate directions are weighted by the Gibbs factor of the
    /// full configuration they produce. Never rejects; the outcome is
    /// `Accepted` when the drawn direction differs from the current one.
    fn heat_bath_move(&mut self, rng: &mut impl Rng) -> MoveOutcome {
        let n = self.n();
        if n == 0 {
            return MoveOutcome::Skipped;
        }
        let k = rng.gen_range(1..=n);
        let delta_old = sub(self.positions[k], self.positions[k - 1]);
        let (move_suffix, lo, hi) = if n + 1 - k <= k {
            (true, k, n)
        } else {
            (false, 0, k - 1)
        };
        // Walk through the candidates by translating the moving side from
        // its current displacement to each candidate's displacement.
        let mut logw = [f64::NEG_INFINITY; 8];
        let mut applied = [0i64; D];
        for c in 0..2 * D {
            let target = if move_suffix {
                sub(unit_step::<D>(c), delta_old)
            } else {
                sub(delta_old, unit_step::<D>(c))
            };
            let shift = sub(target, applied);
            if shift != [0i64; D] {
                self.translate_side(lo, hi, shift);
                applied = target;
            }
            logw[c] = self.log_weight_now();
        }
        let mut top = f64::NEG_INFINITY;
        for &lw in logw.iter().take(2 * D) {
            if lw > top {
                top = lw;
            }
        }
        let mut weights = [0f64; 8];
        let mut total = 0.0;
        for c in 0..2 * D {
            let w = (logw[c] - top).exp();
            weights[c] = w;
            total += w;
        }
        let r = rng.gen::<f64>() * total;
        let mut chosen = 2 * D - 1;
        let mut acc = 0.0;
        for (c, w) in weights.iter().enumerate().take(2 * D) {
            acc += w;
            if r < acc {
                chosen = c;
                break;
            }
        }
        let target = if move_suffix {
            sub(unit_step::<D>(chosen), delta_old)
        } else {
            sub(delta_old, unit_step::<D>(chosen))
        };
        let shift = sub(target, applied);
        if shift != [0i64; D] {
            self.translate_side(lo, hi, shift);
        }
        self.refresh_energy();
        if unit_step::<D>(chosen) == delta_old {
            MoveOutcome::Rejected
        } else {
            MoveOutcome::Accepted
        }
    }

    /// Applies a random non-identity lattice symmetry to the steps on one
    /// side of a uniformly chosen interior index, Metropolis accepted.
    fn pivot_move(&mut self, rng: &mut impl Rng) -> MoveOutcome {
        let n = self.n();
        if n < 2 {
            return MoveOutcome::Skipped;
        }
        let j = rng.gen_range(1..n);
        let g = self.symmetries[rng.gen_range(0..self.symmetries.len())];
        let (lo, hi) = if n - j <= j { (j + 1, n) } else { (0, j - 1) };
        let pivot = self.positions[j];
        let old_lw = self.energy_cache.log_weight(self.config.beta);
        let mut saved = std::mem::take(&mut self.scratch);
        saved.clear();
        saved.extend((lo..=hi).map(|i| self.positions[i]));
        for i in lo..=hi {
            let z = self.positions[i];
            let h = self.hold_at(i);
            self.grid.remove_visit(z, h);
        }
        for i in lo..=hi {
            let z = add(pivot, g.apply(sub(saved[i - lo], pivot)));
            let h = self.hold_at(i);
            self.positions[i] = z;
            self.grid.add_visit(z, h);
        }
        let outcome = if self.metropolis_accept(old_lw, rng) {
            self.refresh_energy();
            MoveOutcome::Accepted
        } else {
            for i in lo..=hi {
                let z = self.positions[i];
                let h = self.hold_at(i);
                self.grid.remove_visit(z, h);
            }
            for i in lo..=hi {
                let z = saved[i - lo];
                let h = self.hold_at(i);
                self.positions[i] = z;
                self.grid.add_visit(z, h);
            }
            MoveOutcome::Rejected
        };
        self.scratch = saved;
        outcome
    }

    /// Redraws a contiguous block of holding times from the flat Dirichlet
    /// law conditioned on the block total. Exact (always accepted) for the
    /// boundary-size energy, which ignores holds; Metropolis-corrected for
    /// the local-time energies. Applies only when holds exist and the path
    /// has at least two positions.
    fn hold_resample_move(&mut self, rng: &mut impl Rng) -> MoveOutcome {
        if self.holds.is_none() {
            return MoveOutcome::Skipped;
        }
        let len_total = self.positions.len();
        if len_total < 2 {
            return MoveOutcome::Skipped;
        }
        let block_len = rng.gen_range(2..=len_total.min(8));
        let a = rng.gen_range(0..=len_total - block_len);
        let mut old = [0f64; 8];
        let mut fresh = [0f64; 8];
        let mut total = 0.0;
        {
            let holds = self.holds.as_ref().expect("checked above");
            for (m, o) in old.iter_mut().enumerate().take(block_len) {
                *o = holds[a + m];
                total += *o;
            }
        }
        let mut s = 0.0;
        for f in fresh.iter_mut().take(block_len) {
            let e: f64 = rng.sample(Exp1);
            *f = e;
            s += e;
        }
        if !(s > 0.0) {
            return MoveOutcome::Skipped;
        }
        for f in fresh.iter_mut().take(block_len) {
            *f = total * *f / s;
        }
        let free = self.config.variant == HamiltonianVariant::BoundarySize;
        let old_lw = self.energy_cache.log_weight(self.config.beta);
        self.apply_hold_block(a, block_len, &fresh);
        if free {
            self.refresh_energy();
            return MoveOutcome::Accepted;
        }
        if self.metropolis_accept(old_lw, rng) {
            self.refresh_energy();
            MoveOutcome::Accepted
        } else {
            self.apply_hold_block(a, block_len, &old);
            MoveOutcome::Rejected
        }
    }

    fn apply_hold_block(&mut self, a: usize, block_len: usize, values: &[f64; 8]) {
        for m in 0..block_len {
            let i = a + m;
            let z = self.positions[i];
            let prev = self.holds.as_ref().expect("holds present")[i];
            let dh = values[m] - prev;
            self.grid.add_hold(z, dh);
            self.holds.as_mut().expect("holds present")[i] = values[m];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::{Ensemble, GibbsConfig};
    use crate::lattice::path::OccupationField;
    use crate::rng::SeedSplitter;
    use crate::sampler::InitKind;
    use std::collections::HashMap;

    fn skeleton_config(dim: usize, steps: u64, beta: f64) -> GibbsConfig {
        GibbsConfig {
            dim,
            variant: HamiltonianVariant::BoundarySize,
            ensemble: Ensemble::DiscreteSkeleton { steps },
            beta,
        }
    }

    fn skeleton_mix() -> MoveMix {
        MoveMix {
            reptation: 0.5,
            heat_bath: 0.3,
            pivot: 0.2,
            hold_resample: 0.0,
        }
    }

    /// Encodes a fixed-step path as a base-2d integer over its steps.
    fn state_id<const D: usize>(state: &ChainState<D>) -> u32 {
        let pos = state.positions();
        let mut id = 0u32;
        for w in pos.windows(2) {
            let step = sub(w[1], w[0]);
            let mut dir = usize::MAX;
            for c in 0..2 * D {
                if unit_step::<D>(c) == step {
                    dir = c;
                }
            }
            id = id * (2 * D as u32) + dir as u32;
        }
        id
    }

    fn decode_positions<const D: usize>(mut id: u32, steps: usize) -> Vec<Site<D>> {
        let mut dirs = vec![0usize; steps];
        for slot in (0..steps).rev() {
            dirs[slot] = (id % (2 * D as u32)) as usize;
            id /= 2 * D as u32;
        }
        let mut out = vec![[0i64; D]];
        for dir in dirs {
            let last = *out.last().unwrap();
            out.push(add(last, unit_step::<D>(dir)));
        }
        out
    }

    /// Exact stationary probabilities over all step sequences of a small
    /// fixed-step system.
    fn exact_distribution(steps: usize, beta: f64) -> Vec<f64> {
        let count = 4u32.pow(steps as u32);
        let mut weights = Vec::with_capacity(count as usize);
        let mut z = 0.0;
        for id in 0..count {
            let pos = decode_positions::<2>(id, steps);
            let field = OccupationField::from_positions(&pos);
            let w = (-beta * field.boundary_size() as f64).exp();
            weights.push(w);
            z += w;
        }
        weights.iter_mut().for_each(|w| *w /= z);
        weights
    }

    /// The chain's empirical state distribution on a 16-state system
    /// converges to the exact Gibbs law.
    #[test]
    fn empirical_distribution_matches_gibbs_on_a_tiny_system() {
        let steps = 2usize;
        let beta = 0.9;
        let config = skeleton_config(2, steps as u64, beta);
        let mix = skeleton_mix();
        let mut rng = SeedSplitter::new(2024).stream(0);
        let mut state = ChainState::<2>::init(&config, InitKind::Zigzag, &mut rng).unwrap();
        let exact = exact_distribution(steps, beta);
        let moves = 200_000usize;
        let burn = 5_000usize;
        let mut counts = vec![0u64; exact.len()];
        for m in 0..moves {
            state.apply_random_move(&mix, &mut rng);
            if m >= burn {
                counts[state_id(&state) as usize] += 1;
            }
        }
        let total = (moves - burn) as f64;
        let tv: f64 = counts
            .iter()
            .zip(&exact)
            .map(|(c, p)| (*c as f64 / total - p).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.025, "total variation {tv} too large");
    }

    /// Detailed balance, checked empirically: over a long run the observed
    /// flow a -> b matches the reverse flow b -> a for every frequently
    /// crossed pair of the 256-state system.
    #[test]
    fn transition_flows_are_symmetric_in_equilibrium() {
        let steps = 4usize;
        let beta = 0.7;
        let config = skeleton_config(2, steps as u64, beta);
        let mix = skeleton_mix();
        let mut rng = SeedSplitter::new(31337).stream(0);
        let mut state = ChainState::<2>::init(&config, InitKind::Zigzag, &mut rng).unwrap();
        let moves = 2_000_000usize;
        let burn = 20_000usize;
        let mut flows: HashMap<(u32, u32), u64> = HashMap::new();
        let mut prev = state_id(&state);
        for m in 0..moves {
            state.apply_random_move(&mix, &mut rng);
            let cur = state_id(&state);
            if m >= burn && cur != prev {
                *flows.entry((prev, cur)).or_insert(0) += 1;
            }
            prev = cur;
        }
        let mut checked = 0usize;
        for (&(a, b), &nab) in &flows {
            if a >= b {
                continue;
            }
            let nba = flows.get(&(b, a)).copied().unwrap_or(0);
            let sum = nab + nba;
            if sum < 200 {
                continue;
            }
            checked += 1;
            let diff = (nab as f64 - nba as f64).abs();
            assert!(
                diff <= 5.0 * (sum as f64).sqrt(),
                "flow asymmetry between {a} and {b}: {nab} vs {nba}"
            );
        }
        assert!(checked > 50, "too few well-crossed pairs: {checked}");
    }

    /// Same stationarity check in three dimensions against enumeration.
    #[test]
    fn stationary_mean_matches_enumeration_in_three_dimensions() {
        use crate::oracle::enumerate::enumerate_skeletons;
        let steps = 6u64;
        let beta = 0.6;
        let config = skeleton_config(3, steps, beta);
        let table = enumerate_skeletons::<3>(steps, HamiltonianVariant::BoundarySize).unwrap();
        let exact = table.expect_energy(beta);
        let mix = skeleton_mix();
        let schedule = crate::sampler::Schedule::new(400, 5000, 2);
        let mut rng = SeedSplitter::new(404).stream(0);
        let trace =
            crate::sampler::run_chain::<3>(&config, &mix, &schedule, InitKind::Zigzag, &mut rng)
                .unwrap();
        let h = trace.summary("H").unwrap();
        assert!(
            (h.mean - exact).abs() <= 3.0 * h.se,
            "E[H] {} vs exact {exact} (se {})",
            h.mean,
            h.se
        );
    }

    /// Hold resampling preserves the total time exactly (up to float
    /// rounding) and keeps the incremental grid consistent.
    #[test]
    fn hold_resampling_conserves_total_time() {
        let horizon = 5.0;
        let config = GibbsConfig {
            dim: 2,
            variant: HamiltonianVariant::BoundaryLocalTime,
            ensemble: Ensemble::ContinuousTime { horizon },
            beta: 0.9,
        };
        let positions = crate::sampler::zigzag_path::<2>(7);
        let holds = vec![horizon / 7.0; 7];
        let mut state = ChainState::new(&config, positions, Some(holds)).unwrap();
        let mix = MoveMix {
            reptation: 0.2,
            heat_bath: 0.1,
            pivot: 0.1,
            hold_resample: 0.6,
        };
        let mut rng = SeedSplitter::new(505).stream(0);
        for _ in 0..20_000 {
            state.apply_random_move(&mix, &mut rng);
        }
        let total: f64 = state.holds().unwrap().iter().sum();
        assert!(
            (total - horizon).abs() <= 1e-9 * horizon,
            "holds sum drifted to {total}"
        );
        assert!((state.grid().total_local_time() - horizon).abs() <= 1e-8 * horizon);
        assert!(state.grid().boundary_local_time() <= horizon + 1e-9);
        state.verify_bookkeeping();
    }

    /// Long mixed runs keep the incremental bookkeeping exact in both
    /// ensembles.
    #[test]
    fn bookkeeping_survives_long_mixed_runs() {
        let config = skeleton_config(2, 15, 0.8);
        let mix = skeleton_mix();
        let mut rng = SeedSplitter::new(606).stream(0);
        let mut state = ChainState::<2>::init(&config, InitKind::RandomWalk, &mut rng).unwrap();
        for _ in 0..50_000 {
            state.apply_random_move(&mix, &mut rng);
        }
        state.verify_bookkeeping();

        let config = GibbsConfig {
            dim: 2,
            variant: HamiltonianVariant::BoundaryLocalTime,
            ensemble: Ensemble::ContinuousTime { horizon: 8.0 },
            beta: 0.5,
        };
        let mut rng = SeedSplitter::new(607).stream(0);
        let mut state = ChainState::<2>::init(&config, InitKind::Zigzag, &mut rng).unwrap();
        for _ in 0..50_000 {
            state.apply_random_move(&MoveMix::default(), &mut rng);
        }
        state.verify_bookkeeping();
    }

    /// A hard-constraint chain never leaves the feasible set.
    #[test]
    fn conditioned_chain_stays_feasible() {
        let config = GibbsConfig {
            dim: 2,
            variant: HamiltonianVariant::ConditionedLocalTime,
            ensemble: Ensemble::ContinuousTime { horizon: 4.0 },
            beta: 0.8,
        };
        let mut rng = SeedSplitter::new(707).stream(0);
        let mut state = ChainState::<2>::init(&config, InitKind::Zigzag, &mut rng).unwrap();
        let mix = MoveMix::default();
        for m in 0..20_000 {
            state.apply_random_move(&mix, &mut rng);
            if m % 500 == 0 {
                let floor = state.grid().min_local_time();
                assert!(
                    floor >= config.beta - 1e-9,
                    "chain left the feasible set: min local time {floor}"
                );
            }
        }
        state.verify_bookkeeping();
    }

    /// The heat bath draws each candidate direction with its exact
    /// conditional probability: on a single-step path in the plane all
    /// four directions give the same energy, so the draw must be uniform.
    #[test]
    fn heat_bath_is_uniform_when_energies_tie() {
        let config = skeleton_config(2, 1, 1.3);
        let mix = MoveMix {
            reptation: 0.0,
            heat_bath: 1.0,
            pivot: 0.0,
            hold_resample: 0.0,
        };
        let mut rng = SeedSplitter::new(808).stream(0);
        let mut state = ChainState::<2>::init(&config, InitKind::Zigzag, &mut rng).unwrap();
        let mut counts = [0u64; 4];
        let draws = 40_000usize;
        for _ in 0..draws {
            state.apply_random_move(&mix, &mut rng);
            counts[state_id(&state) as usize] += 1;
        }
        for (c, count) in counts.iter().enumerate() {
            let p = *count as f64 / draws as f64;
            assert!(
                (p - 0.25).abs() < 0.02,
                "direction {c} drawn with frequency {p}"
            );
        }
    }
}
