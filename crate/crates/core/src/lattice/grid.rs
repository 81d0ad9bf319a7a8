//! Dense occupancy grid with O(d) incremental maintenance of the visited
//! set, its inner vertex boundary, per-site local times, and per-axis slice
//! occupancy. This is the bookkeeping core of both the chain sampler and
//! the exhaustive skeleton enumeration.
//!
//! Invariants maintained:
//! * `count[z]`  = multiplicity of path indices (or visits) at `z`;
//! * `ext[z]`    = number of the 2d neighbors of `z` that are unoccupied
//!                 (meaningful only while `count[z] > 0`);
//! * a cell is on the inner boundary iff occupied with `ext > 0`;
//! * `boundary_count`, `boundary_ltime`, `volume`, `total_ltime`, and the
//!   per-axis occupied-slice counts are exact aggregates of the above.

use super::Site;

#[derive(Debug, Clone)]
pub struct OccupancyGrid<const D: usize> {
    origin: [i64; D],
    dims: [usize; D],
    strides: [usize; D],
    count: Vec<u32>,
    ext: Vec<u8>,
    ltime: Vec<f64>,
    volume: u64,
    boundary_count: u64,
    boundary_ltime: f64,
    total_ltime: f64,
    axis_occ: Vec<Vec<u32>>,
}

impl<const D: usize> OccupancyGrid<D> {
    /// Empty grid covering `[center - half, center + half]^d`.
    pub fn new(center: Site<D>, half: usize) -> Self {
        let origin: [i64; D] = std::array::from_fn(|i| center[i] - half as i64);
        let dims = [2 * half + 1; D];
        Self::with_box(origin, dims)
    }

    fn with_box(origin: [i64; D], dims: [usize; D]) -> Self {
        let mut strides = [0usize; D];
        let mut s = 1usize;
        for i in 0..D {
            strides[i] = s;
            s = s.checked_mul(dims[i]).expect("grid too large");
        }
        OccupancyGrid {
            origin,
            dims,
            strides,
            count: vec![0; s],
            ext: vec![0; s],
            ltime: vec![0.0; s],
            volume: 0,
            boundary_count: 0,
            boundary_ltime: 0.0,
            total_ltime: 0.0,
            axis_occ: (0..D).map(|i| vec![0; dims[i]]).collect(),
        }
    }

    /// Builds a grid sized to a position list, with optional per-index holds.
    pub fn from_positions(positions: &[Site<D>], holds: Option<&[f64]>) -> Self {
        let mut lo = [i64::MAX; D];
        let mut hi = [i64::MIN; D];
        for z in positions {
            for i in 0..D {
                lo[i] = lo[i].min(z[i]);
                hi[i] = hi[i].max(z[i]);
            }
        }
        if positions.is_empty() {
            lo = [0; D];
            hi = [0; D];
        }
        let origin: [i64; D] = std::array::from_fn(|i| lo[i] - 2);
        let dims: [usize; D] = std::array::from_fn(|i| (hi[i] - lo[i]) as usize + 5);
        let mut g = Self::with_box(origin, dims);
        for (i, z) in positions.iter().enumerate() {
            let h = holds.map(|hs| hs[i]).unwrap_or(0.0);
            g.add_visit(*z, h);
        }
        g
    }

    #[inline]
    fn index(&self, z: &Site<D>) -> Option<usize> {
        let mut idx = 0usize;
        for i in 0..D {
            let rel = z[i] - self.origin[i];
            if rel < 0 || rel as usize >= self.dims[i] {
                return None;
            }
            idx += rel as usize * self.strides[i];
        }
        Some(idx)
    }

    fn site_at(&self, mut idx: usize) -> Site<D> {
        let mut z = [0i64; D];
        for i in (0..D).rev() {
            let rel = idx / self.strides[i];
            idx -= rel * self.strides[i];
            z[i] = self.origin[i] + rel as i64;
        }
        z
    }

    #[inline]
    fn count_at(&self, z: &Site<D>) -> u32 {
        match self.index(z) {
            Some(i) => self.count[i],
            None => 0,
        }
    }

    /// Grows the box so `z` fits, copying existing cells. Amortized rare.
    fn grow_to_include(&mut self, z: &Site<D>) {
        let mut lo = self.origin;
        let mut hi: [i64; D] = std::array::from_fn(|i| self.origin[i] + self.dims[i] as i64 - 1);
        for i in 0..D {
            let pad = (self.dims[i] / 2).max(8) as i64;
            if z[i] < lo[i] {
                lo[i] = z[i] - pad;
            }
            if z[i] > hi[i] {
                hi[i] = z[i] + pad;
            }
        }
        let dims: [usize; D] = std::array::from_fn(|i| (hi[i] - lo[i]) as usize + 1);
        let mut fresh = Self::with_box(lo, dims);
        for idx in 0..self.count.len() {
            if self.count[idx] > 0 {
                let site = self.site_at(idx);
                let nidx = fresh.index(&site).expect("grown box covers old box");
                fresh.count[nidx] = self.count[idx];
                fresh.ext[nidx] = self.ext[idx];
                fresh.ltime[nidx] = self.ltime[idx];
                for i in 0..D {
                    fresh.axis_occ[i][(site[i] - lo[i]) as usize] += 1;
                }
            }
        }
        fresh.volume = self.volume;
        fresh.boundary_count = self.boundary_count;
        fresh.boundary_ltime = self.boundary_ltime;
        fresh.total_ltime = self.total_ltime;
        *self = fresh;
    }

    /// Adds one visit at `z` carrying local time `hold`.
    pub fn add_visit(&mut self, z: Site<D>, hold: f64) {
        let idx = match self.index(&z) {
            Some(i) => i,
            None => {
                self.grow_to_include(&z);
                self.index(&z).unwrap()
            }
        };
        if self.count[idx] == 0 {
            self.occupy(idx, &z);
        }
        self.count[idx] += 1;
        if hold != 0.0 {
            self.ltime[idx] += hold;
            self.total_ltime += hold;
            if self.ext[idx] > 0 {
                self.boundary_ltime += hold;
            }
        }
    }

    /// Removes one visit at `z` carrying local time `hold`.
    pub fn remove_visit(&mut self, z: Site<D>, hold: f64) {
        let idx = self.index(&z).expect("removing a visit outside the grid");
        debug_assert!(self.count[idx] > 0, "removing an unoccupied cell");
        if hold != 0.0 {
            self.ltime[idx] -= hold;
            self.total_ltime -= hold;
            if self.ext[idx] > 0 {
                self.boundary_ltime -= hold;
            }
        }
        self.count[idx] -= 1;
        if self.count[idx] == 0 {
            self.unoccupy(idx, &z);
        }
    }

    /// Adds `dt` of local time at an occupied cell (hold resampling).
    pub fn add_hold(&mut self, z: Site<D>, dt: f64) {
        let idx = self.index(&z).expect("hold outside the grid");
        debug_assert!(self.count[idx] > 0, "hold at an unoccupied cell");
        self.ltime[idx] += dt;
        self.total_ltime += dt;
        if self.ext[idx] > 0 {
            self.boundary_ltime += dt;
        }
    }

    fn occupy(&mut self, idx: usize, z: &Site<D>) {
        let mut ext = 0u8;
        for k in 0..2 * D {
            let mut n = *z;
            n[k / 2] += if k % 2 == 0 { 1 } else { -1 };
            match self.index(&n) {
                Some(nidx) if self.count[nidx] > 0 => {
                    let e = self.ext[nidx];
                    debug_assert!(e > 0);
                    self.ext[nidx] = e - 1;
                    if e == 1 {
                        self.boundary_count -= 1;
                        self.boundary_ltime -= self.ltime[nidx];
                    }
                }
                _ => ext += 1,
            }
        }
        self.ext[idx] = ext;
        self.volume += 1;
        if ext > 0 {
            self.boundary_count += 1;
            self.boundary_ltime += self.ltime[idx];
        }
        for i in 0..D {
            self.axis_occ[i][(z[i] - self.origin[i]) as usize] += 1;
        }
    }

    fn unoccupy(&mut self, idx: usize, z: &Site<D>) {
        // Clean up residual float drift so a re-occupied cell starts at 0.
        let resid = self.ltime[idx];
        if resid != 0.0 {
            self.total_ltime -= resid;
            if self.ext[idx] > 0 {
                self.boundary_ltime -= resid;
            }
            self.ltime[idx] = 0.0;
        }
        if self.ext[idx] > 0 {
            self.boundary_count -= 1;
        }
        self.volume -= 1;
        for k in 0..2 * D {
            let mut n = *z;
            n[k / 2] += if k % 2 == 0 { 1 } else { -1 };
            if let Some(nidx) = self.index(&n) {
                if self.count[nidx] > 0 {
                    let e = self.ext[nidx];
                    self.ext[nidx] = e + 1;
                    if e == 0 {
                        self.boundary_count += 1;
                        self.boundary_ltime += self.ltime[nidx];
                    }
                }
            }
        }
        for i in 0..D {
            self.axis_occ[i][(z[i] - self.origin[i]) as usize] -= 1;
        }
    }

    pub fn volume(&self) -> u64 {
        self.volume
    }

    /// Inner vertex boundary size of the occupied set.
    pub fn boundary_size(&self) -> u64 {
        self.boundary_count
    }

    /// Total local time on the inner vertex boundary.
    pub fn boundary_local_time(&self) -> f64 {
        self.boundary_ltime
    }

    pub fn total_local_time(&self) -> f64 {
        self.total_ltime
    }

    pub fn count_of(&self, z: &Site<D>) -> u32 {
        self.count_at(z)
    }

    pub fn local_time_of(&self, z: &Site<D>) -> f64 {
        match self.index(z) {
            Some(i) => self.ltime[i],
            None => 0.0,
        }
    }

    /// Per-axis extents of the occupied set (None when empty).
    pub fn extents(&self) -> Option<[u64; D]> {
        if self.volume == 0 {
            return None;
        }
        Some(std::array::from_fn(|i| {
            let occ = &self.axis_occ[i];
            let lo = occ.iter().position(|&c| c > 0).unwrap();
            let hi = occ.iter().rposition(|&c| c > 0).unwrap();
            (hi - lo) as u64
        }))
    }

    pub fn occupied_sites(&self) -> Vec<Site<D>> {
        let mut out = Vec::with_capacity(self.volume as usize);
        for idx in 0..self.count.len() {
            if self.count[idx] > 0 {
                out.push(self.site_at(idx));
            }
        }
        out
    }

    pub fn boundary_sites(&self) -> Vec<Site<D>> {
        let mut out = Vec::with_capacity(self.boundary_count as usize);
        for idx in 0..self.count.len() {
            if self.count[idx] > 0 && self.ext[idx] > 0 {
                out.push(self.site_at(idx));
            }
        }
        out
    }

    /// Minimum local time over occupied cells (+inf when empty).
    pub fn min_local_time(&self) -> f64 {
        let mut best = f64::INFINITY;
        for idx in 0..self.count.len() {
            if self.count[idx] > 0 && self.ltime[idx] < best {
                best = self.ltime[idx];
            }
        }
        best
    }

    /// Occupied cells with multiplicities and local times (for consistency
    /// checks against a from-scratch rebuild).
    pub fn cells(&self) -> Vec<(Site<D>, u32, f64)> {
        let mut out = Vec::with_capacity(self.volume as usize);
        for idx in 0..self.count.len() {
            if self.count[idx] > 0 {
                out.push((self.site_at(idx), self.count[idx], self.ltime[idx]));
            }
        }
        out.sort_unstable_by_key(|(z, _, _)| *z);
        out
    }
}
