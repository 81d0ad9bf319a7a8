//! Boundary structure, diameter, extents, and the site-set snapshot format.

use std::collections::{HashSet, VecDeque};

use super::{dist2, neighbors, Site};
use crate::error::{Error, Result};

/// Inner vertex boundary: sites of `set` with at least one of their 2d
/// neighbors outside `set`. Returned sorted lexicographically.
pub fn inner_boundary<const D: usize>(set: &HashSet<Site<D>>) -> Vec<Site<D>> {
    let mut out: Vec<Site<D>> = set
        .iter()
        .filter(|z| neighbors(**z).any(|n| !set.contains(&n)))
        .copied()
        .collect();
    out.sort_unstable();
    out
}

/// Outer vertex boundary and outer edge boundary of a finite set, both taken
/// with respect to the unbounded exterior component only: sites enclosed in
/// holes do not count. Computed by flood fill over the complement inside the
/// bounding box padded by one layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OuterBoundary<const D: usize> {
    /// Sites of `set` adjacent to the unbounded exterior component (sorted).
    pub sites: Vec<Site<D>>,
    /// Directed edges (inside site, exterior neighbor), sorted.
    pub edges: Vec<(Site<D>, Site<D>)>,
}

pub fn outer_boundary<const D: usize>(set: &HashSet<Site<D>>) -> Result<OuterBoundary<D>> {
    if set.is_empty() {
        return Err(Error::Domain("outer boundary of the empty set".into()));
    }
    let mut lo = [i64::MAX; D];
    let mut hi = [i64::MIN; D];
    for z in set {
        for i in 0..D {
            lo[i] = lo[i].min(z[i]);
            hi[i] = hi[i].max(z[i]);
        }
    }
    // Pad by one: every exterior cell touching the set lies in the padded
    // box, and the padded shell is connected, so one BFS finds the whole
    // unbounded component's trace inside the box.
    for i in 0..D {
        lo[i] -= 1;
        hi[i] += 1;
    }
    let inside_box = |z: &Site<D>| (0..D).all(|i| lo[i] <= z[i] && z[i] <= hi[i]);
    let start = lo;
    debug_assert!(!set.contains(&start));
    let mut exterior: HashSet<Site<D>> = HashSet::new();
    exterior.insert(start);
    let mut queue = VecDeque::new();
    queue.push_back(start);
    while let Some(z) = queue.pop_front() {
        for n in neighbors(z) {
            if inside_box(&n) && !set.contains(&n) && exterior.insert(n) {
                queue.push_back(n);
            }
        }
    }
    let mut sites = Vec::new();
    let mut edges = Vec::new();
    for z in set {
        let mut touches = false;
        for n in neighbors(*z) {
            if exterior.contains(&n) {
                touches = true;
                edges.push((*z, n));
            }
        }
        if touches {
            sites.push(*z);
        }
    }
    sites.sort_unstable();
    edges.sort_unstable();
    Ok(OuterBoundary { sites, edges })
}

/// Euclidean diameter of a finite set of sites: sqrt of the maximum squared
/// distance over pairs (0 for a singleton). For large sets the maximum is
/// attained on the inner boundary (the farthest pair are convex-hull
/// vertices, each of which has a neighbor outside the set), so the scan is
/// restricted to it.
pub fn diameter<const D: usize>(set: &HashSet<Site<D>>) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::Domain("diameter of the empty set".into()));
    }
    if set.len() > 2048 {
        let bd = inner_boundary(set);
        return Ok(diameter_of_points(&bd));
    }
    let pts: Vec<Site<D>> = set.iter().copied().collect();
    Ok(diameter_of_points(&pts))
}

/// Diameter of a point list (no dedup assumed). Quadratic scan in general;
/// in the plane, large lists are first reduced to their convex hull (the
/// farthest pair are hull vertices), which keeps trace recording on big
/// ranges cheap.
pub fn diameter_of_points<const D: usize>(pts: &[Site<D>]) -> f64 {
    if D == 2 && pts.len() > 512 {
        let planar: Vec<[i64; 2]> = pts.iter().map(|z| [z[0], z[1]]).collect();
        let hull = convex_hull_2d(&planar);
        return diameter_brute(&hull);
    }
    diameter_brute(pts)
}

fn diameter_brute<const D: usize>(pts: &[Site<D>]) -> f64 {
    let mut best: i128 = 0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = dist2(&pts[i], &pts[j]);
            if d > best {
                best = d;
            }
        }
    }
    (best as f64).sqrt()
}

/// Convex hull by Andrew's monotone chain (collinear points dropped).
/// Exact integer arithmetic; returns hull vertices in boundary order.
fn convex_hull_2d(pts: &[[i64; 2]]) -> Vec<[i64; 2]> {
    let mut p: Vec<[i64; 2]> = pts.to_vec();
    p.sort_unstable();
    p.dedup();
    if p.len() <= 2 {
        return p;
    }
    let cross = |o: &[i64; 2], a: &[i64; 2], b: &[i64; 2]| -> i128 {
        let ax = (a[0] - o[0]) as i128;
        let ay = (a[1] - o[1]) as i128;
        let bx = (b[0] - o[0]) as i128;
        let by = (b[1] - o[1]) as i128;
        ax * by - ay * bx
    };
    let mut lower: Vec<[i64; 2]> = Vec::with_capacity(p.len());
    for z in &p {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], z) <= 0 {
            lower.pop();
        }
        lower.push(*z);
    }
    let mut upper: Vec<[i64; 2]> = Vec::with_capacity(p.len());
    for z in p.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], z) <= 0 {
            upper.pop();
        }
        upper.push(*z);
    }
    // Each chain's last point is the other's first; drop both duplicates.
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Per-axis extents (max - min of each coordinate over the set).
pub fn extents<const D: usize>(set: &HashSet<Site<D>>) -> Result<[u64; D]> {
    if set.is_empty() {
        return Err(Error::Domain("extents of the empty set".into()));
    }
    let mut lo = [i64::MAX; D];
    let mut hi = [i64::MIN; D];
    for z in set {
        for i in 0..D {
            lo[i] = lo[i].min(z[i]);
            hi[i] = hi[i].max(z[i]);
        }
    }
    Ok(std::array::from_fn(|i| (hi[i] - lo[i]) as u64))
}

/// Serializes a site set in the snapshot format: one line per site,
/// space-separated integer coordinates, sorted lexicographically.
pub fn snapshot_string<const D: usize>(sites: &[Site<D>]) -> String {
    let mut sorted: Vec<Site<D>> = sites.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut out = String::new();
    for z in &sorted {
        let line: Vec<String> = z.iter().map(|c| c.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Parses the snapshot format back into a sorted site list.
pub fn parse_snapshot<const D: usize>(text: &str) -> Result<Vec<Site<D>>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut z = [0i64; D];
        let mut count = 0;
        for (i, tok) in line.split_whitespace().enumerate() {
            if i >= D {
                return Err(Error::Domain(format!(
                    "snapshot line {}: expected {D} coordinates",
                    lineno + 1
                )));
            }
            z[i] = tok.parse::<i64>().map_err(|e| {
                Error::Domain(format!("snapshot line {}: {e}", lineno + 1))
            })?;
            count = i + 1;
        }
        if count != D {
            return Err(Error::Domain(format!(
                "snapshot line {}: expected {D} coordinates, got {count}",
                lineno + 1
            )));
        }
        super::check_site(&z)?;
        out.push(z);
    }
    out.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set_of<const D: usize>(v: &[Site<D>]) -> HashSet<Site<D>> {
        v.iter().copied().collect()
    }

    #[test]
    fn singleton_boundaries() {
        let s = set_of(&[[0i64, 0]]);
        assert_eq!(inner_boundary(&s), vec![[0, 0]]);
        let ob = outer_boundary(&s).unwrap();
        assert_eq!(ob.sites, vec![[0, 0]]);
        assert_eq!(ob.edges.len(), 4);
        assert_eq!(diameter(&s).unwrap(), 0.0);
        assert_eq!(extents(&s).unwrap(), [0, 0]);
    }

    #[test]
    fn empty_set_is_a_domain_error() {
        let s: HashSet<Site<2>> = HashSet::new();
        assert!(diameter(&s).is_err());
        assert!(extents(&s).is_err());
        assert!(outer_boundary(&s).is_err());
    }

    #[test]
    fn filled_square_boundaries() {
        // 5x5 block: inner boundary = 16 perimeter sites, all of them touch
        // the exterior; interior 3x3 is not on any boundary.
        let mut v = Vec::new();
        for x in 0..5i64 {
            for y in 0..5i64 {
                v.push([x, y]);
            }
        }
        let s = set_of(&v);
        let ib = inner_boundary(&s);
        assert_eq!(ib.len(), 16);
        let ob = outer_boundary(&s).unwrap();
        assert_eq!(ob.sites.len(), 16);
        // Edge boundary: 4 sides of 5 edges each, corners contribute twice.
        assert_eq!(ob.edges.len(), 20);
        assert_eq!(extents(&s).unwrap(), [4, 4]);
        assert_eq!(diameter(&s).unwrap(), 32f64.sqrt());
    }

    #[test]
    fn hole_interior_is_not_outer_boundary() {
        // 5x5 block minus the center: the hole's walls are inner boundary
        // but not outer boundary (not reachable from infinity).
        let mut v = Vec::new();
        for x in 0..5i64 {
            for y in 0..5i64 {
                if (x, y) != (2, 2) {
                    v.push([x, y]);
                }
            }
        }
        let s = set_of(&v);
        let ib = inner_boundary(&s);
        assert_eq!(ib.len(), 16 + 4);
        let ob = outer_boundary(&s).unwrap();
        assert_eq!(ob.sites.len(), 16);
        assert!(ob.edges.iter().all(|(_, ext)| !s.contains(ext)));
    }

    #[test]
    fn diameter_boundary_reduction_agrees_with_brute_force() {
        // An L-shaped blob exercises the reduction path indirectly: check
        // that restricting to the inner boundary cannot change the answer.
        let mut v = Vec::new();
        for x in 0..20i64 {
            for y in 0..4i64 {
                v.push([x, y]);
            }
        }
        for y in 4..20i64 {
            for x in 0..4i64 {
                v.push([x, y]);
            }
        }
        let s = set_of(&v);
        let all: Vec<Site<2>> = s.iter().copied().collect();
        let brute = diameter_of_points(&all);
        let via_boundary = diameter_of_points(&inner_boundary(&s));
        assert_eq!(brute, via_boundary);
        assert_eq!(diameter(&s).unwrap(), brute);
    }

    #[test]
    fn hull_reduction_matches_pairwise_scan_on_a_big_cloud() {
        // All lattice points in a disk of radius 22 plus a few spikes:
        // > 512 points, so the planar hull path is exercised.
        let mut pts: Vec<Site<2>> = Vec::new();
        for x in -22..=22i64 {
            for y in -22..=22i64 {
                if x * x + y * y <= 484 {
                    pts.push([x, y]);
                }
            }
        }
        pts.push([30, 1]);
        pts.push([-29, -3]);
        let mut brute: i128 = 0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                brute = brute.max(dist2(&pts[i], &pts[j]));
            }
        }
        assert!(pts.len() > 512);
        assert_eq!(diameter_of_points(&pts), (brute as f64).sqrt());
    }

    #[test]
    fn hull_reduction_handles_collinear_clouds() {
        let pts: Vec<Site<2>> = (0..700i64).map(|x| [x, 5]).collect();
        assert_eq!(diameter_of_points(&pts), 699.0);
    }

    #[test]
    fn snapshot_round_trip_is_lossless_and_sorted() {
        let sites: Vec<Site<3>> = vec![[3, -1, 2], [-5, 0, 0], [3, -2, 9]];
        let text = snapshot_string(&sites);
        let parsed = parse_snapshot::<3>(&text).unwrap();
        let mut expect = sites.clone();
        expect.sort_unstable();
        assert_eq!(parsed, expect);
        // Lexicographic order in the text itself.
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "-5 0 0");
        assert_eq!(lines[1], "3 -2 9");
        assert_eq!(lines[2], "3 -1 2");
    }

    #[test]
    fn snapshot_rejects_malformed_lines() {
        assert!(parse_snapshot::<2>("1 2 3\n").is_err());
        assert!(parse_snapshot::<2>("1\n").is_err());
        assert!(parse_snapshot::<2>("a b\n").is_err());
        assert!(parse_snapshot::<2>("1 2\n\n3 4\n").is_ok());
    }
}
