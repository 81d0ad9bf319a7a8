//! Core lattice geometry: sites of the d-dimensional integer lattice,
//! nearest-neighbor structure, lattice symmetries, and the continuous-time
//! walk / occupation machinery built on top of them.
//!
//! Dimension is a compile-time constant (`const D: usize`); runtime dispatch
//! over the supported dimensions lives at the call sites (CLI, sweeps).

pub mod boundary;
pub mod grid;
pub mod path;

use crate::error::{Error, Result};

/// A lattice site. The coordinate type is a fixed-width signed integer;
/// operations that move sites enforce [`COORD_BOUND`].
pub type Site<const D: usize> = [i64; D];

/// Safety bound on coordinate magnitude (2^30). Squared distances of
/// in-bound site pairs then fit comfortably in i128 arithmetic, and any walk
/// that drifts this far is a configuration bug, not physics.
pub const COORD_BOUND: i64 = 1 << 30;

/// Checks the coordinate safety bound.
pub fn check_site<const D: usize>(z: &Site<D>) -> Result<()> {
    for &c in z.iter() {
        if c.abs() > COORD_BOUND {
            return Err(Error::Domain(format!(
                "site coordinate {c} exceeds safety bound {COORD_BOUND}"
            )));
        }
    }
    Ok(())
}

/// Iterator over the 2d nearest neighbors of a site. Allocation-free.
#[derive(Debug, Clone)]
pub struct Neighbors<const D: usize> {
    base: Site<D>,
    k: usize,
}

impl<const D: usize> Iterator for Neighbors<D> {
    type Item = Site<D>;

    #[inline]
    fn next(&mut self) -> Option<Site<D>> {
        if self.k >= 2 * D {
            return None;
        }
        let axis = self.k / 2;
        let sign = if self.k % 2 == 0 { 1 } else { -1 };
        self.k += 1;
        let mut z = self.base;
        z[axis] += sign;
        Some(z)
    }
}

#[inline]
pub fn neighbors<const D: usize>(z: Site<D>) -> Neighbors<D> {
    Neighbors { base: z, k: 0 }
}

#[inline]
pub fn add<const D: usize>(a: Site<D>, b: Site<D>) -> Site<D> {
    std::array::from_fn(|i| a[i] + b[i])
}

#[inline]
pub fn sub<const D: usize>(a: Site<D>, b: Site<D>) -> Site<D> {
    std::array::from_fn(|i| a[i] - b[i])
}

/// Squared Euclidean distance in i128 (never overflows for in-bound sites).
#[inline]
pub fn dist2<const D: usize>(a: &Site<D>, b: &Site<D>) -> i128 {
    let mut s: i128 = 0;
    for i in 0..D {
        let d = (a[i] - b[i]) as i128;
        s += d * d;
    }
    s
}

/// The unit step in direction `k` (k in 0..2D): axis k/2, sign + for even k.
#[inline]
pub fn unit_step<const D: usize>(k: usize) -> Site<D> {
    debug_assert!(k < 2 * D);
    let mut z = [0i64; D];
    z[k / 2] = if k % 2 == 0 { 1 } else { -1 };
    z
}

/// A symmetry of the lattice fixing the origin: a signed coordinate
/// permutation (hyperoctahedral group element), `v -> (sign_i * v[perm_i])_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeSymmetry<const D: usize> {
    pub perm: [usize; D],
    pub flip: [bool; D],
}

impl<const D: usize> LatticeSymmetry<D> {
    pub fn identity() -> Self {
        LatticeSymmetry {
            perm: std::array::from_fn(|i| i),
            flip: [false; D],
        }
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| p == i) && self.flip.iter().all(|&f| !f)
    }

    #[inline]
    pub fn apply(&self, v: Site<D>) -> Site<D> {
        std::array::from_fn(|i| {
            let x = v[self.perm[i]];
            if self.flip[i] {
                -x
            } else {
                x
            }
        })
    }

    /// All 2^d d! group elements.
    pub fn all() -> Vec<Self> {
        let mut perms: Vec<[usize; D]> = Vec::new();
        let mut base: [usize; D] = std::array::from_fn(|i| i);
        heap_permutations(&mut base, D, &mut perms);
        let mut out = Vec::with_capacity(perms.len() << D);
        for perm in perms {
            for mask in 0u32..(1 << D) {
                let flip: [bool; D] = std::array::from_fn(|i| mask & (1 << i) != 0);
                out.push(LatticeSymmetry { perm, flip });
            }
        }
        out
    }

    /// The 2^d d! − 1 non-identity elements (the pivot-move proposal set).
    pub fn all_non_identity() -> Vec<Self> {
        Self::all().into_iter().filter(|g| !g.is_identity()).collect()
    }
}

fn heap_permutations<const D: usize>(a: &mut [usize; D], k: usize, out: &mut Vec<[usize; D]>) {
    if k <= 1 {
        out.push(*a);
        return;
    }
    for i in 0..k {
        heap_permutations(a, k - 1, out);
        if k % 2 == 0 {
            a.swap(i, k - 1);
        } else {
            a.swap(0, k - 1);
        }
    }
}
