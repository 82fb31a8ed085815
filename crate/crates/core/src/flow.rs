//! DC power flow over a network with an arbitrary set of failed lines.
//!
//! Each connected island of the surviving graph is solved independently:
//! injections are rebalanced proportionally, the lowest-id bus is the
//! slack with angle 0, and angles come from the reduced susceptance
//! Laplacian `B theta = P` via a dense Cholesky factorization. Line flow
//! is `susceptance x (theta_from - theta_to)`; failed lines carry exactly
//! zero.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::grid::{connected_components, GridNetwork};

#[allow(unused_imports)]
use num_traits::Float;

/// Solved state for one failure set.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    /// Per-bus voltage angle in radians; slack of each island is 0.
    pub angles: Vec<f64>,
    /// Per-line MW flow, positive from `from` to `to`; 0 for failed lines.
    pub flows: Vec<f64>,
    /// Partition of buses into islands, each sorted, ordered by smallest member.
    pub islands: Vec<Vec<usize>>,
    /// Per-bus net injection after rebalancing (generation minus load).
    pub net_injection: Vec<f64>,
    /// Per-island load shed by the rebalance, aligned with `islands`.
    pub shed_load: Vec<f64>,
    /// Per-island generation curtailed by the rebalance.
    pub curtailed_generation: Vec<f64>,
}

impl FlowSolution {
    /// Total load shed across all islands.
    pub fn total_shed(&self) -> f64 {
        self.shed_load.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlowError {
    InvalidLineId { id: usize, n_lines: usize },
    /// The reduced Laplacian of an island failed to factor; only possible
    /// on malformed input since islanding is handled before the solve.
    Singular { island: Vec<usize> },
}

impl fmt::Display for FlowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowError::InvalidLineId { id, n_lines } => {
                write!(f, "failed line id {id} out of range (network has {n_lines} lines)")
            }
            FlowError::Singular { island } => {
                write!(f, "singular island system over buses {island:?}")
            }
        }
    }
}

impl core::error::Error for FlowError {}

/// Result of proportionally rebalancing one island.
#[derive(Debug, Clone, PartialEq)]
pub struct IslandBalance {
    /// Net injection per bus (same order as the inputs); sums to zero.
    pub injections: Vec<f64>,
    pub shed_load: f64,
    pub curtailed_generation: f64,
}

/// Scale generation down to the load (or load down to the generation) so
/// the island sums to zero net injection.
pub fn rebalance_island(generation: &[f64], load: &[f64]) -> IslandBalance {
    assert_eq!(generation.len(), load.len(), "island arrays must align");
    let total_gen: f64 = generation.iter().sum();
    let total_load: f64 = load.iter().sum();
    if total_gen >= total_load {
        let scale = if total_gen > 0.0 { total_load / total_gen } else { 1.0 };
        IslandBalance {
            injections: generation
                .iter()
                .zip(load)
                .map(|(g, l)| g * scale - l)
                .collect(),
            shed_load: 0.0,
            curtailed_generation: total_gen - total_load,
        }
    } else {
        let scale = total_gen / total_load;
        IslandBalance {
            injections: generation
                .iter()
                .zip(load)
                .map(|(g, l)| g - l * scale)
                .collect(),
            shed_load: total_load - total_gen,
            curtailed_generation: 0.0,
        }
    }
}

/// Solve the DC power flow of `net` with `failed` lines removed.
pub fn dc_power_flow(net: &GridNetwork, failed: &BTreeSet<usize>) -> Result<FlowSolution, FlowError> {
    let n = net.n_lines();
    let b = net.n_buses();
    if let Some(&id) = failed.iter().find(|&&id| id >= n) {
        return Err(FlowError::InvalidLineId { id, n_lines: n });
    }

    let surviving: Vec<&crate::grid::Line> =
        net.lines.iter().filter(|l| !failed.contains(&l.id)).collect();
    let islands = connected_components(b, surviving.iter().map(|l| (l.from, l.to)));

    let mut island_of = vec![usize::MAX; b];
    for (idx, island) in islands.iter().enumerate() {
        for &bus in island {
            island_of[bus] = idx;
        }
    }

    let mut angles = vec![0.0; b];
    let mut net_injection = vec![0.0; b];
    let mut shed_load = vec![0.0; islands.len()];
    let mut curtailed = vec![0.0; islands.len()];

    for (idx, island) in islands.iter().enumerate() {
        let gens: Vec<f64> = island.iter().map(|&i| net.buses[i].generation).collect();
        let loads: Vec<f64> = island.iter().map(|&i| net.buses[i].load).collect();
        let balance = rebalance_island(&gens, &loads);
        shed_load[idx] = balance.shed_load;
        curtailed[idx] = balance.curtailed_generation;
        for (&bus, &p) in island.iter().zip(&balance.injections) {
            net_injection[bus] = p;
        }

        let m = island.len();
        if m == 1 {
            continue;
        }
        // Local index within the island; position 0 is the slack.
        let mut local = vec![usize::MAX; b];
        for (li, &bus) in island.iter().enumerate() {
            local[bus] = li;
        }
        let dim = m - 1;
        let mut lap = vec![0.0; dim * dim];
        for line in &surviving {
            if island_of[line.from] != idx {
                continue;
            }
            let (u, v) = (local[line.from], local[line.to]);
            let s = line.susceptance;
            if u > 0 {
                lap[(u - 1) * dim + (u - 1)] += s;
            }
            if v > 0 {
                lap[(v - 1) * dim + (v - 1)] += s;
            }
            if u > 0 && v > 0 {
                lap[(u - 1) * dim + (v - 1)] -= s;
                lap[(v - 1) * dim + (u - 1)] -= s;
            }
        }
        let mut rhs: Vec<f64> = island[1..]
            .iter()
            .map(|&bus| net_injection[bus])
            .collect();
        cholesky_solve_in_place(&mut lap, dim, &mut rhs)
            .map_err(|_| FlowError::Singular { island: island.clone() })?;
        for (&bus, &theta) in island[1..].iter().zip(&rhs) {
            angles[bus] = theta;
        }
    }

    let mut flows = vec![0.0; n];
    for line in &surviving {
        flows[line.id] = line.susceptance * (angles[line.from] - angles[line.to]);
    }

    Ok(FlowSolution {
        angles,
        flows,
        islands,
        net_injection,
        shed_load,
        curtailed_generation: curtailed,
    })
}

/// Per-bus imbalance `net_injection - sum of incident flows`; all entries
/// should vanish within `1e-9 x total load` for a correct solve.
pub fn flow_residuals(net: &GridNetwork, solution: &FlowSolution) -> Vec<f64> {
    let mut residual = solution.net_injection.clone();
    for line in &net.lines {
        let f = solution.flows[line.id];
        residual[line.from] -= f;
        residual[line.to] += f;
    }
    residual
}

/// Dense Cholesky factor-and-solve for a symmetric positive definite
/// system stored row-major. Errors on a non-positive pivot.
fn cholesky_solve_in_place(a: &mut [f64], n: usize, b: &mut [f64]) -> Result<(), ()> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    // Factor A = L L^T, writing L into the lower triangle.
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(());
        }
        let ljj = d.sqrt();
        a[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / ljj;
        }
    }
    // Forward substitution L y = b.
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    // Back substitution L^T x = y.
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Bus, GridNetwork, Line};

    fn triangle() -> GridNetwork {
        GridNetwork::new(
            "triangle",
            vec![
                Bus { id: 0, generation: 1.0, load: 0.0 },
                Bus { id: 1, generation: 0.0, load: 1.0 },
                Bus { id: 2, generation: 0.0, load: 0.0 },
            ],
            vec![
                Line { id: 0, from: 0, to: 1, susceptance: 1.0, capacity: 10.0 },
                Line { id: 1, from: 0, to: 2, susceptance: 1.0, capacity: 10.0 },
                Line { id: 2, from: 2, to: 1, susceptance: 1.0, capacity: 10.0 },
            ],
        )
        .unwrap()
    }

    /// Independent oracle: direct 2x2 solve of the reduced Laplacian by
    /// Cramer's rule, nothing shared with the production path.
    fn triangle_oracle() -> [f64; 3] {
        // Reduced system over buses {1, 2} with slack 0:
        //   [ 2 -1 ] [t1]   [-1]
        //   [-1  2 ] [t2] = [ 0]
        let (a, b, c, d) = (2.0, -1.0, -1.0, 2.0);
        let (p1, p2) = (-1.0, 0.0);
        let det = a * d - b * c;
        let t1 = (p1 * d - b * p2) / det;
        let t2 = (a * p2 - p1 * c) / det;
        [0.0 - t1, 0.0 - t2, t2 - t1]
    }

    #[test]
    fn triangle_matches_direct_solve() {
        let solution = dc_power_flow(&triangle(), &BTreeSet::new()).unwrap();
        let expected = triangle_oracle();
        for (got, want) in solution.flows.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
        }
        // The oracle itself reproduces the closed-form values.
        assert!((expected[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((expected[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((expected[2] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_with_failed_line_is_a_path() {
        let failed: BTreeSet<usize> = [1].into_iter().collect();
        let solution = dc_power_flow(&triangle(), &failed).unwrap();
        assert!((solution.flows[0] - 1.0).abs() < 1e-12);
        assert_eq!(solution.flows[1], 0.0);
        assert!(solution.flows[2].abs() < 1e-12);
    }

    #[test]
    fn all_lines_failed_degenerates() {
        let failed: BTreeSet<usize> = [0, 1, 2].into_iter().collect();
        let solution = dc_power_flow(&triangle(), &failed).unwrap();
        assert_eq!(solution.flows, vec![0.0; 3]);
        assert_eq!(solution.islands.len(), 3);
        assert!((solution.total_shed() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rebalance_matches_proportional_rule() {
        let balanced = rebalance_island(&[10.0], &[10.0]);
        assert_eq!(balanced.injections, vec![0.0]);
        assert_eq!(balanced.shed_load, 0.0);
        assert_eq!(balanced.curtailed_generation, 0.0);

        let surplus = rebalance_island(&[12.0, 8.0], &[4.0, 6.0]);
        assert!((surplus.curtailed_generation - 10.0).abs() < 1e-12);
        assert!((surplus.injections.iter().sum::<f64>()).abs() < 1e-12);
        assert!((surplus.injections[0] - (6.0 - 4.0)).abs() < 1e-12);

        let deficit = rebalance_island(&[0.0, 0.0], &[3.0, 4.0]);
        assert_eq!(deficit.shed_load, 7.0);
        assert_eq!(deficit.injections, vec![0.0, 0.0]);
    }

    #[test]
    fn conservation_on_random_networks() {
        use crate::grid::{synthesize_network, SynthSpec, Topology};
        for seed in 0..10u64 {
            let spec = SynthSpec {
                buses: 20 + (seed as usize % 5) * 8,
                topology: if seed % 2 == 0 { Topology::Grid } else { Topology::Ring },
                load_scale: 1.0 + seed as f64 * 0.3,
                capacity_margin: 1.5,
            };
            let net = synthesize_network(&spec, seed).unwrap();
            let total_load: f64 = net.buses.iter().map(|b| b.load).sum();
            let mut rng = crate::seeded_rng(seed, 0xF10);
            let failed: BTreeSet<usize> = (0..net.n_lines())
                .filter(|_| rand::Rng::random::<f64>(&mut rng) < 0.2)
                .collect();
            let solution = dc_power_flow(&net, &failed).unwrap();
            for (bus, r) in flow_residuals(&net, &solution).iter().enumerate() {
                assert!(
                    r.abs() <= 1e-9 * total_load,
                    "seed {seed} bus {bus} residual {r}"
                );
            }
        }
    }

    #[test]
    fn zero_flow_line_removal_leaves_flows_unchanged() {
        // Symmetric 4-cycle with a zero-flow chord.
        let net = GridNetwork::new(
            "sym",
            vec![
                Bus { id: 0, generation: 2.0, load: 0.0 },
                Bus { id: 1, generation: 0.0, load: 1.0 },
                Bus { id: 2, generation: 0.0, load: 1.0 },
                Bus { id: 3, generation: 0.0, load: 0.0 },
            ],
            vec![
                Line { id: 0, from: 0, to: 1, susceptance: 1.0, capacity: 10.0 },
                Line { id: 1, from: 0, to: 2, susceptance: 1.0, capacity: 10.0 },
                Line { id: 2, from: 1, to: 3, susceptance: 1.0, capacity: 10.0 },
                Line { id: 3, from: 2, to: 3, susceptance: 1.0, capacity: 10.0 },
            ],
        )
        .unwrap();
        let base = dc_power_flow(&net, &BTreeSet::new()).unwrap();
        // Lines 2 and 3 carry zero by symmetry.
        assert!(base.flows[2].abs() < 1e-12 && base.flows[3].abs() < 1e-12);
        let failed: BTreeSet<usize> = [2].into_iter().collect();
        let removed = dc_power_flow(&net, &failed).unwrap();
        for id in [0, 1] {
            assert!((base.flows[id] - removed.flows[id]).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_failed_id_rejected() {
        let failed: BTreeSet<usize> = [9].into_iter().collect();
        assert!(matches!(
            dc_power_flow(&triangle(), &failed),
            Err(FlowError::InvalidLineId { id: 9, .. })
        ));
    }
}
