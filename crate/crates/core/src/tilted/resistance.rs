//! Electrical-network reading of the reversible chain: conductances
//! `c(x,y) = sqrt(pi(x) pi(y))` on support edges, effective resistance by
//! a grounded-Laplacian solve, and the escape identity
//! `P_y(hit x before returning to y) = 1 / (w_y * Reff(y, x))`
//! with `w_y` the total conductance at `y`, checkable against a direct
//! jump-chain simulation.

use std::collections::{HashMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::stats::KahanSum;

use super::profile::TiltedProfile;

/// Relative residual demanded of the grounded-Laplacian solve.
const SOLVE_TOLERANCE: f64 = 1e-10;

/// Total jump budget across all escape-frequency runs.
const ESCAPE_STEP_BUDGET: u64 = 200_000_000;

/// Undirected weighted graph over lattice sites; parallel edges combine
/// by summing conductances.
#[derive(Debug, Clone)]
pub struct Network<const D: usize> {
    sites: Vec<Site<D>>,
    index: HashMap<Site<D>, usize>,
    /// Incident edges per site: (neighbor index, conductance).
    adj: Vec<Vec<(u32, f64)>>,
}

/// Outcome of an effective-resistance computation between two sites.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResistanceReport {
    /// Effective resistance; infinite when the sites are disconnected.
    pub reff: f64,
    /// Total conductance incident to the source site.
    pub w_y: f64,
    /// `1 / (w_y * reff)`: probability that the jump chain started at the
    /// source reaches the target before returning to the source.
    pub escape_probability: f64,
    pub connected: bool,
    pub cg_iterations: u64,
    /// Final residual norm of the linear solve, relative to the unit
    /// current injection.
    pub residual: f64,
}

impl<const D: usize> Network<D> {
    /// Build from an explicit edge list. Endpoints must differ and
    /// conductances must be positive and finite; repeated edges add up.
    pub fn from_edges(edges: &[(Site<D>, Site<D>, f64)]) -> Result<Self> {
        let mut sites: Vec<Site<D>> = Vec::new();
        let mut index: HashMap<Site<D>, usize> = HashMap::new();
        let mut intern = |z: Site<D>, sites: &mut Vec<Site<D>>| -> usize {
            *index.entry(z).or_insert_with(|| {
                sites.push(z);
                sites.len() - 1
            })
        };
        let mut merged: HashMap<(usize, usize), f64> = HashMap::new();
        for (a, b, c) in edges {
            if a == b {
                return Err(Error::config(format!("self loop at {a:?}")));
            }
            if !(c.is_finite() && *c > 0.0) {
                return Err(Error::config(format!(
                    "conductance {c} between {a:?} and {b:?} is not positive and finite"
                )));
            }
            let ia = intern(*a, &mut sites);
            let ib = intern(*b, &mut sites);
            let key = (ia.min(ib), ia.max(ib));
            *merged.entry(key).or_insert(0.0) += c;
        }
        let mut adj = vec![Vec::new(); sites.len()];
        for (&(ia, ib), &c) in &merged {
            adj[ia].push((ib as u32, c));
            adj[ib].push((ia as u32, c));
        }
        for list in &mut adj {
            list.sort_unstable_by_key(|(j, _)| *j);
        }
        Ok(Network { sites, index, adj })
    }

    /// The network whose conductances are the stationary edge flows
    /// `sqrt(pi(x) pi(y))` of the profile's generator.
    pub fn from_profile(profile: &TiltedProfile<D>) -> Self {
        let sites = profile.support_sites();
        let index: HashMap<Site<D>, usize> =
            sites.iter().enumerate().map(|(i, z)| (*z, i)).collect();
        let pi: Vec<f64> = sites.iter().map(|z| profile.density(z)).collect();
        let mut adj = vec![Vec::new(); sites.len()];
        for (i, z) in sites.iter().enumerate() {
            for n in crate::lattice::neighbors(*z) {
                if let Some(&j) = index.get(&n) {
                    if j > i {
                        let c = (pi[i] * pi[j]).sqrt();
                        adj[i].push((j as u32, c));
                        adj[j].push((i as u32, c));
                    }
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable_by_key(|(j, _)| *j);
        }
        Network { sites, index, adj }
    }

    pub fn site_count(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[Site<D>] {
        &self.sites
    }

    /// Total conductance incident to a site.
    pub fn weight(&self, z: &Site<D>) -> Option<f64> {
        let i = *self.index.get(z)?;
        Some(self.adj[i].iter().map(|(_, c)| c).sum())
    }

    fn require(&self, z: &Site<D>) -> Result<usize> {
        self.index
            .get(z)
            .copied()
            .ok_or_else(|| Error::domain(format!("site {z:?} is not in the network")))
    }

    /// Indices reachable from `from` (including itself).
    fn component(&self, from: usize) -> Vec<bool> {
        let mut seen = vec![false; self.sites.len()];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(i) = queue.pop_front() {
            for &(j, _) in &self.adj[i] {
                if !seen[j as usize] {
                    seen[j as usize] = true;
                    queue.push_back(j as usize);
                }
            }
        }
        seen
    }
}

/// Effective resistance between `y` (source) and `x` (ground), via a
/// conjugate-gradient solve of the grounded Laplacian with unit current
/// injected at `y`. Disconnected pairs are reported, not errored.
pub fn effective_resistance<const D: usize>(
    network: &Network<D>,
    y: &Site<D>,
    x: &Site<D>,
) -> Result<ResistanceReport> {
    let yi = network.require(y)?;
    let xi = network.require(x)?;
    if yi == xi {
        return Err(Error::domain(
            "source and target coincide; effective resistance needs two distinct sites",
        ));
    }
    let w_y: f64 = network.adj[yi].iter().map(|(_, c)| c).sum();
    let comp = network.component(xi);
    if !comp[yi] {
        return Ok(ResistanceReport {
            reff: f64::INFINITY,
            w_y,
            escape_probability: 0.0,
            connected: false,
            cg_iterations: 0,
            residual: 0.0,
        });
    }
    // Unknowns: the component of x, with x itself grounded out.
    let mut reduced = vec![usize::MAX; network.sites.len()];
    let mut order = Vec::new();
    for (i, &inside) in comp.iter().enumerate() {
        if inside && i != xi {
            reduced[i] = order.len();
            order.push(i);
        }
    }
    let n = order.len();
    let w: Vec<f64> = order
        .iter()
        .map(|&i| network.adj[i].iter().map(|(_, c)| c).sum())
        .collect();
    let apply = |v: &[f64], out: &mut [f64]| {
        for (a, &i) in order.iter().enumerate() {
            let mut s = w[a] * v[a];
            for &(j, c) in &network.adj[i] {
                let r = reduced[j as usize];
                if r != usize::MAX {
                    s -= c * v[r];
                }
            }
            out[a] = s;
        }
    };
    let dot = |a: &[f64], b: &[f64]| -> f64 {
        let mut acc = KahanSum::new();
        for (p, q) in a.iter().zip(b) {
            acc.add(p * q);
        }
        acc.value()
    };
    let src = reduced[yi];
    let mut b = vec![0.0f64; n];
    b[src] = 1.0;
    // Jacobi-preconditioned conjugate gradient.
    let mut phi = vec![0.0f64; n];
    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&w).map(|(ri, wi)| ri / wi).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0f64; n];
    let max_iter = 20 * n as u64 + 200;
    let mut iterations = 0u64;
    loop {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::numerical(format!(
                "grounded Laplacian lost positive-definiteness at iteration {iterations}"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            phi[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        if dot(&r, &r).sqrt() <= SOLVE_TOLERANCE {
            break;
        }
        if iterations >= max_iter {
            return Err(Error::numerical(format!(
                "effective-resistance solve did not reach {SOLVE_TOLERANCE:.0e} \
                 in {max_iter} iterations (residual {:.3e})",
                dot(&r, &r).sqrt()
            )));
        }
        for i in 0..n {
            z[i] = r[i] / w[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    apply(&phi, &mut ap);
    let mut res2 = KahanSum::new();
    for i in 0..n {
        let d = ap[i] - b[i];
        res2.add(d * d);
    }
    let reff = phi[src];
    Ok(ResistanceReport {
        reff,
        w_y,
        escape_probability: 1.0 / (w_y * reff),
        connected: true,
        cg_iterations: iterations,
        residual: res2.value().sqrt(),
    })
}

/// Monte Carlo frequency of the escape event: the discrete jump chain
/// (next site drawn proportionally to conductance) started at `y` reaches
/// `x` before it returns to `y`.
pub fn escape_frequency<const D: usize>(
    network: &Network<D>,
    y: &Site<D>,
    x: &Site<D>,
    runs: u64,
    rng: &mut impl Rng,
) -> Result<f64> {
    let yi = network.require(y)?;
    let xi = network.require(x)?;
    if yi == xi {
        return Err(Error::domain(
            "source and target coincide; the escape event needs two distinct sites",
        ));
    }
    if runs == 0 {
        return Err(Error::config("escape frequency needs at least one run"));
    }
    if network.adj[yi].is_empty() {
        return Ok(0.0);
    }
    let weight: Vec<f64> = (0..network.sites.len())
        .map(|i| network.adj[i].iter().map(|(_, c)| c).sum())
        .collect();
    let mut budget = ESCAPE_STEP_BUDGET;
    let mut successes = 0u64;
    for _ in 0..runs {
        let mut cur = yi;
        loop {
            let mut u = rng.gen::<f64>() * weight[cur];
            let list = &network.adj[cur];
            let mut next = list[list.len() - 1].0 as usize;
            for &(j, c) in list {
                if u < c {
                    next = j as usize;
                    break;
                }
                u -= c;
            }
            budget = budget.checked_sub(1).ok_or_else(|| {
                Error::resource(format!(
                    "escape simulation exceeded its {ESCAPE_STEP_BUDGET}-step budget"
                ))
            })?;
            cur = next;
            if cur == xi {
                successes += 1;
                break;
            }
            if cur == yi {
                break;
            }
        }
    }
    Ok(successes as f64 / runs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedSplitter;
    use crate::tilted::profile::{build_profile, DEFAULT_SMOOTHING_FLOOR};

    fn chain(k: i64) -> Network<1> {
        let edges: Vec<(Site<1>, Site<1>, f64)> =
            (0..k).map(|i| ([i], [i + 1], 1.0)).collect();
        Network::from_edges(&edges).unwrap()
    }

    #[test]
    fn series_conductances_add_as_resistances() {
        let net = chain(5);
        let report = effective_resistance(&net, &[0], &[5]).unwrap();
        assert!((report.reff - 5.0).abs() <= 1e-9);
        assert!((report.w_y - 1.0).abs() <= 1e-12);
        assert!((report.escape_probability - 0.2).abs() <= 1e-9);
        assert!(report.connected);
        assert!(report.residual <= SOLVE_TOLERANCE);
    }

    #[test]
    fn parallel_edges_merge_their_conductances() {
        let edges: Vec<(Site<1>, Site<1>, f64)> = vec![([0], [1], 1.0), ([0], [1], 1.0)];
        let net = Network::from_edges(&edges).unwrap();
        let report = effective_resistance(&net, &[0], &[1]).unwrap();
        assert!((report.reff - 0.5).abs() <= 1e-12);
        // The only move from the source is straight onto the target.
        let mut rng = SeedSplitter::new(7).stream(0);
        let freq = escape_frequency(&net, &[0], &[1], 200, &mut rng).unwrap();
        assert_eq!(freq, 1.0);
    }

    #[test]
    fn a_square_loop_matches_the_series_parallel_laws() {
        let edges: Vec<(Site<2>, Site<2>, f64)> = vec![
            ([0, 0], [1, 0], 1.0),
            ([1, 0], [1, 1], 1.0),
            ([1, 1], [0, 1], 1.0),
            ([0, 1], [0, 0], 1.0),
        ];
        let net = Network::from_edges(&edges).unwrap();
        let report = effective_resistance(&net, &[0, 0], &[1, 0]).unwrap();
        assert!((report.reff - 0.75).abs() <= 1e-9, "reff {}", report.reff);
    }

    #[test]
    fn disconnected_pairs_are_tagged_not_errored() {
        let edges: Vec<(Site<1>, Site<1>, f64)> = vec![([0], [1], 1.0), ([5], [6], 1.0)];
        let net = Network::from_edges(&edges).unwrap();
        let report = effective_resistance(&net, &[0], &[5]).unwrap();
        assert!(!report.connected);
        assert!(report.reff.is_infinite());
        assert_eq!(report.escape_probability, 0.0);
        let mut rng = SeedSplitter::new(3).stream(0);
        let freq = escape_frequency(&net, &[0], &[5], 50, &mut rng).unwrap();
        assert_eq!(freq, 0.0);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        let self_loop: Vec<(Site<1>, Site<1>, f64)> = vec![([0], [0], 1.0)];
        assert!(matches!(
            Network::from_edges(&self_loop),
            Err(Error::Config(_))
        ));
        let bad: Vec<(Site<1>, Site<1>, f64)> = vec![([0], [1], -2.0)];
        assert!(matches!(Network::from_edges(&bad), Err(Error::Config(_))));
        let nan: Vec<(Site<1>, Site<1>, f64)> = vec![([0], [1], f64::NAN)];
        assert!(matches!(Network::from_edges(&nan), Err(Error::Config(_))));
        let net = chain(3);
        assert!(matches!(
            effective_resistance(&net, &[0], &[9]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            effective_resistance(&net, &[1], &[1]),
            Err(Error::Domain(_))
        ));
        let mut rng = SeedSplitter::new(1).stream(0);
        assert!(matches!(
            escape_frequency(&net, &[1], &[1], 10, &mut rng),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            escape_frequency(&net, &[0], &[1], 0, &mut rng),
            Err(Error::Config(_))
        ));
    }

    /// The escape identity ties the linear solve to the jump chain: the
    /// simulated frequency of reaching the target before returning to the
    /// source must match 1/(w_y * Reff).
    #[test]
    fn escape_identity_holds_on_the_profile_network() {
        let profile = build_profile::<2>(8, DEFAULT_SMOOTHING_FLOOR).unwrap();
        let net = Network::from_profile(&profile);
        let y = [0i64, 0];
        let x = [6i64, 0];
        let report = effective_resistance(&net, &y, &x).unwrap();
        assert!(report.connected);
        assert!(report.escape_probability > 0.0 && report.escape_probability < 1.0);
        let runs = 4000u64;
        let mut rng = SeedSplitter::new(20240817).stream(0);
        let freq = escape_frequency(&net, &y, &x, runs, &mut rng).unwrap();
        let p = report.escape_probability;
        let se = (p * (1.0 - p) / runs as f64).sqrt();
        assert!(
            (freq - p).abs() <= 3.0 * se + 1e-9,
            "simulated {freq} vs solved {p} (se {se})"
        );
    }
}
