//! The induced birth–death chain of the distance-to-boundary coordinate.
//!
//! For the tilted chain on the cube, every jump changes the
//! distance-to-boundary level by exactly ±1, with probabilities that
//! depend only on the neighboring level masses — even on the cube's
//! diagonals, where a site has several neighbors per adjacent level, the
//! up/down rate totals still reduce to the same two-mass formula. The
//! boundary rows use reflected masses: level 1 reuses its own mass below,
//! level L reuses its own mass above.

use crate::error::{Error, Result};

use super::profile::TiltedProfile;

/// Mass at level `r` extended by reflection to `r = 0` and `r = L + 1`.
fn mu_ext<const D: usize>(profile: &TiltedProfile<D>, r: usize) -> f64 {
    let l = profile.half_width() as usize;
    let clamped = r.clamp(1, l);
    profile.mu(clamped).expect("clamped to range")
}

/// Transition probabilities `(up, down)` of the level chain at row `r`:
/// up moves deeper into the cube (level r + 1), down moves toward the
/// face. Valid for `1 <= r <= L` with reflecting conventions at the ends.
pub fn level_kernel<const D: usize>(
    profile: &TiltedProfile<D>,
    r: usize,
) -> Result<(f64, f64)> {
    let l = profile.half_width() as usize;
    if r == 0 || r > l {
        return Err(Error::domain(format!("level {r} outside 1..={l}")));
    }
    let below = mu_ext(profile, r - 1).sqrt();
    let above = mu_ext(profile, r + 1).sqrt();
    let up = above / (below + above);
    let down = below / (below + above);
    Ok((up, down))
}

/// Reversible weights of the level chain,
/// `sqrt(mu_r) (sqrt(mu_{r-1}) + sqrt(mu_{r+1}))` for `r = 1..=L`.
pub fn level_weights<const D: usize>(profile: &TiltedProfile<D>) -> Vec<f64> {
    let l = profile.half_width() as usize;
    (1..=l)
        .map(|r| {
            let here = mu_ext(profile, r).sqrt();
            here * (mu_ext(profile, r - 1).sqrt() + mu_ext(profile, r + 1).sqrt())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tilted::profile::{build_profile, DEFAULT_SMOOTHING_FLOOR};

    #[test]
    fn kernel_rows_are_probabilities() {
        let p = build_profile::<2>(16, DEFAULT_SMOOTHING_FLOOR).unwrap();
        for r in 1..=16 {
            let (up, down) = level_kernel(&p, r).unwrap();
            assert!(up > 0.0 && down > 0.0);
            assert!((up + down - 1.0).abs() <= 1e-15, "row {r}");
        }
        assert!(matches!(level_kernel(&p, 0), Err(Error::Domain(_))));
        assert!(matches!(level_kernel(&p, 17), Err(Error::Domain(_))));
    }

    /// The stated weights are reversible for the kernel:
    /// w_r K(r, r+1) = w_{r+1} K(r+1, r), both sides sqrt(mu_r mu_{r+1}).
    #[test]
    fn weights_are_reversible_for_the_kernel() {
        let p = build_profile::<2>(16, DEFAULT_SMOOTHING_FLOOR).unwrap();
        let w = level_weights(&p);
        for r in 1..16 {
            let (up, _) = level_kernel(&p, r).unwrap();
            let (_, down_next) = level_kernel(&p, r + 1).unwrap();
            let lhs = w[r - 1] * up;
            let rhs = w[r] * down_next;
            assert!(
                (lhs - rhs).abs() <= 1e-15 * lhs.max(rhs),
                "row {r}: {lhs} vs {rhs}"
            );
            let expect = (p.mu(r).unwrap() * p.mu(r + 1).unwrap()).sqrt();
            assert!((lhs - expect).abs() <= 1e-14 * expect);
        }
    }

    #[test]
    fn flat_profile_gives_a_symmetric_walk() {
        let p = TiltedProfile::<2>::flat(8).unwrap();
        for r in 1..=8 {
            let (up, down) = level_kernel(&p, r).unwrap();
            assert_eq!(up, 0.5, "row {r}");
            assert_eq!(down, 0.5, "row {r}");
        }
    }

    /// Deep in the cube the masses grow, so the level chain drifts inward
    /// (upward) everywhere on a built profile.
    #[test]
    fn built_profile_drifts_inward() {
        let p = build_profile::<2>(32, DEFAULT_SMOOTHING_FLOOR).unwrap();
        for r in 1..=32 {
            let (up, down) = level_kernel(&p, r).unwrap();
            assert!(up >= down - 1e-15, "row {r}: up {up} down {down}");
        }
    }
}
