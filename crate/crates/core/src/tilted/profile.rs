//! The radial stationary profile on the cube.
//!
//! Sites are graded by their distance to the cube's boundary face: level r
//! collects the sites at distance exactly r from the face of the cube of
//! half-width L, i.e. the surface of the concentric sub-cube of half-width
//! L - r. The mass per site depends only on the level: linear-over-log²
//! growth up to half depth, then a quadratic continuation to the center.
//! The log is floored at a smoothing parameter; the floor's default (2, in
//! natural log) is the smallest value for which the level masses are
//! provably nondecreasing — a floor of 1 makes r/log²r dip between r = e
//! and r = e², and `build_profile` rejects any floor whose built table
//! comes out non-monotone rather than silently shipping it.
//!
//! Mass is zero on the outermost ring (level 0) and outside the cube, so
//! the support is the open sub-cube of half-width L - 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::stats::kahan_total;

/// Default log-smoothing floor (natural log), the smallest choice that
/// keeps the level masses nondecreasing.
pub const DEFAULT_SMOOTHING_FLOOR: f64 = 2.0;

/// Radial stationary law on the cube `[-L, L]^d`: per-site mass `mu[r-1]`
/// at distance-to-boundary level `r`, for `1 <= r <= L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltedProfile<const D: usize> {
    half_width: i64,
    smoothing_floor: f64,
    /// Normalization constant: `mu_r = normalization * base_r`.
    normalization: f64,
    /// Per-site mass at level r (index r - 1), already normalized.
    mu: Vec<f64>,
    /// Number of sites at level r (index r - 1).
    shell_sizes: Vec<u64>,
}

/// Builds the profile for half-width `l` with the given log-smoothing
/// floor (natural log; see [`DEFAULT_SMOOTHING_FLOOR`]).
pub fn build_profile<const D: usize>(l: i64, smoothing_floor: f64) -> Result<TiltedProfile<D>> {
    if D == 0 {
        return Err(Error::config("dimension must be >= 1"));
    }
    if l < 4 {
        return Err(Error::config(format!("half-width {l} too small (need >= 4)")));
    }
    if !(smoothing_floor > 0.0) || !smoothing_floor.is_finite() {
        return Err(Error::config(format!(
            "smoothing floor must be positive and finite, got {smoothing_floor}"
        )));
    }
    let shell_sizes: Vec<u64> = (1..=l).map(|r| shell_count::<D>(l, r)).collect();
    let lf = l as f64;
    let smooth = |x: f64| x.ln().max(smoothing_floor);
    let ld1 = lf.powi(D as i32 + 1);
    let ld2 = lf.powi(D as i32 + 2);
    let half = lf / 2.0;
    let base_at_half = half / (ld1 * smooth(half).powi(2));
    let base: Vec<f64> = (1..=l)
        .map(|r| {
            let rf = r as f64;
            if rf <= half {
                rf / (ld1 * smooth(rf).powi(2))
            } else {
                base_at_half + (rf - half) * (rf - half) / ld2
            }
        })
        .collect();
    for w in base.windows(2) {
        if !(w[1] >= w[0] * (1.0 - 1e-15)) {
            return Err(Error::config(format!(
                "smoothing floor {smoothing_floor} makes the level masses non-monotone \
                 ({} then {}); the smallest monotone floor is {DEFAULT_SMOOTHING_FLOOR}",
                w[0], w[1]
            )));
        }
    }
    let total = kahan_total(
        base.iter()
            .zip(&shell_sizes)
            .map(|(b, s)| b * *s as f64),
    );
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::numerical(format!(
            "profile mass degenerate before normalization: {total}"
        )));
    }
    let normalization = 1.0 / total;
    let mu = base.iter().map(|b| b * normalization).collect();
    Ok(TiltedProfile {
        half_width: l,
        smoothing_floor,
        normalization,
        mu,
        shell_sizes,
    })
}

/// Number of sites at distance-to-boundary level `r`: the surface of the
/// sub-cube of half-width `l - r` (one site when `r = l`).
fn shell_count<const D: usize>(l: i64, r: i64) -> u64 {
    let h = l - r;
    let cube = |w: i64| -> u64 { ((2 * w + 1) as u64).pow(D as u32) };
    if h == 0 {
        1
    } else {
        cube(h) - cube(h - 1)
    }
}

impl<const D: usize> TiltedProfile<D> {
    /// Uniform profile on the same support (every level mass equal); used
    /// as the analytically solvable reference network.
    pub fn flat(l: i64) -> Result<Self> {
        if D == 0 {
            return Err(Error::config("dimension must be >= 1"));
        }
        if l < 4 {
            return Err(Error::config(format!("half-width {l} too small (need >= 4)")));
        }
        let shell_sizes: Vec<u64> = (1..=l).map(|r| shell_count::<D>(l, r)).collect();
        let support: u64 = shell_sizes.iter().sum();
        let mass = 1.0 / support as f64;
        Ok(TiltedProfile {
            half_width: l,
            smoothing_floor: f64::INFINITY,
            normalization: mass,
            mu: vec![mass; l as usize],
            shell_sizes,
        })
    }

    pub fn half_width(&self) -> i64 {
        self.half_width
    }

    pub fn dim(&self) -> usize {
        D
    }

    pub fn smoothing_floor(&self) -> f64 {
        self.smoothing_floor
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Per-site mass at level `r` (`1 <= r <= half_width`).
    pub fn mu(&self, r: usize) -> Result<f64> {
        if r == 0 || r > self.mu.len() {
            return Err(Error::domain(format!(
                "level {r} outside 1..={}",
                self.mu.len()
            )));
        }
        Ok(self.mu[r - 1])
    }

    /// Number of sites at level `r`.
    pub fn shell_size(&self, r: usize) -> Result<u64> {
        if r == 0 || r > self.shell_sizes.len() {
            return Err(Error::domain(format!(
                "level {r} outside 1..={}",
                self.shell_sizes.len()
            )));
        }
        Ok(self.shell_sizes[r - 1])
    }

    /// Total mass of level `r` (shell size times per-site mass).
    pub fn shell_mass(&self, r: usize) -> Result<f64> {
        Ok(self.shell_size(r)? as f64 * self.mu(r)?)
    }

    /// Distance-to-boundary level of a site, if it carries mass.
    pub fn level_of(&self, z: &Site<D>) -> Option<usize> {
        let m = z.iter().map(|c| c.abs()).max().expect("D >= 1");
        if m <= self.half_width - 1 {
            Some((self.half_width - m) as usize)
        } else {
            None
        }
    }

    /// Per-site stationary mass (zero off the support).
    pub fn density(&self, z: &Site<D>) -> f64 {
        match self.level_of(z) {
            Some(r) => self.mu[r - 1],
            None => 0.0,
        }
    }

    /// Number of sites carrying mass.
    pub fn support_count(&self) -> u64 {
        self.shell_sizes.iter().sum()
    }

    /// All sites carrying mass, in lexicographic order.
    pub fn support_sites(&self) -> Vec<Site<D>> {
        let o = self.half_width - 1;
        let side = (2 * o + 1) as usize;
        let count = side.pow(D as u32);
        let mut out = Vec::with_capacity(count);
        let mut z = [-o; D];
        loop {
            out.push(z);
            // Odometer increment, last axis fastest, so output is
            // lexicographic.
            let mut axis = D;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if z[axis] < o {
                    z[axis] += 1;
                    for c in z.iter_mut().skip(axis + 1) {
                        *c = -o;
                    }
                    break;
                }
            }
        }
    }

    /// Total mass; 1 up to accumulated rounding.
    pub fn total_mass(&self) -> f64 {
        kahan_total(
            self.mu
                .iter()
                .zip(&self.shell_sizes)
                .map(|(m, s)| m * *s as f64),
        )
    }
}
