//! Reference enumeration that recomputes every observable from scratch at
//! every leaf, using the hash-based geometry routines instead of the
//! incremental occupancy grid. Slow on purpose: it shares no bookkeeping
//! with [`super::enumerate`], so term-by-term agreement between the two is
//! a real check of the incremental machinery.

use std::collections::HashSet;

use crate::error::Result;
use crate::gibbs::HamiltonianVariant;
use crate::lattice::boundary::{diameter, extents, inner_boundary};
use crate::lattice::path::OccupationField;
use crate::lattice::{add, unit_step, Site};

use super::{check_enumeration_budget, check_skeleton_variant, SkeletonTable};

fn record_leaf<const D: usize>(
    variant: HamiltonianVariant,
    positions: &[Site<D>],
    table: &mut SkeletonTable<D>,
) -> Result<()> {
    let set: HashSet<Site<D>> = positions.iter().copied().collect();
    let key = match variant {
        HamiltonianVariant::BoundarySize => inner_boundary(&set).len() as u64,
        HamiltonianVariant::BoundaryLocalTime => {
            let field = OccupationField::from_positions(positions);
            field.boundary_local_time().round() as u64
        }
        HamiltonianVariant::ConditionedLocalTime => unreachable!("rejected by validation"),
    };
    let ext = extents(&set)?;
    let diam = diameter(&set)?;
    let bucket = table.buckets.entry(key).or_default();
    bucket.count += 1;
    bucket.volume_sum += set.len() as u64;
    for i in 0..D {
        bucket.extent_sums[i] += ext[i];
    }
    bucket.diameter_sum.add(diam);
    Ok(())
}

fn descend<const D: usize>(
    variant: HamiltonianVariant,
    steps_left: u64,
    positions: &mut Vec<Site<D>>,
    table: &mut SkeletonTable<D>,
) -> Result<()> {
    if steps_left == 0 {
        return record_leaf(variant, positions, table);
    }
    for dir in 0..2 * D {
        let z = add(*positions.last().unwrap(), unit_step::<D>(dir));
        positions.push(z);
        descend(variant, steps_left - 1, positions, table)?;
        positions.pop();
    }
    Ok(())
}

/// From-scratch-per-leaf enumeration of every skeleton path of `steps`
/// jumps. Same output type and same traversal order as the fast driver,
/// with none of its incremental state.
pub fn enumerate_skeletons_naive<const D: usize>(
    steps: u64,
    variant: HamiltonianVariant,
) -> Result<SkeletonTable<D>> {
    check_skeleton_variant(variant)?;
    check_enumeration_budget(D, steps)?;
    let mut table = SkeletonTable::new(steps, variant);
    let mut positions = vec![[0i64; D]];
    descend(variant, steps, &mut positions, &mut table)?;
    Ok(table)
}
