//! Graph-theoretic comparison rankers: edge betweenness centrality,
//! current-flow betweenness centrality, and line-outage distribution
//! factors.
//!
//! Betweenness counts unweighted shortest paths; current flow and the
//! outage factors use the susceptance-weighted Laplacian, so both reflect
//! the electrical rather than purely topological structure.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::grid::{connected_components, GridNetwork};

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineAlgorithm {
    /// Edge betweenness centrality.
    Bc,
    /// Edge current-flow betweenness centrality.
    Cfbc,
    /// Line outage distribution factor aggregation.
    Lodf,
}

impl BaselineAlgorithm {
    pub fn tag(self) -> &'static str {
        match self {
            BaselineAlgorithm::Bc => "BC",
            BaselineAlgorithm::Cfbc => "CFBC",
            BaselineAlgorithm::Lodf => "LODF",
        }
    }
}

/// Per-line scores and the induced descending order (smaller id on ties).
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRank {
    pub algorithm: BaselineAlgorithm,
    pub scores: Vec<f64>,
    pub order: Vec<usize>,
}

impl BaselineRank {
    fn from_scores(algorithm: BaselineAlgorithm, scores: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));
        BaselineRank { algorithm, scores, order }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BaselineError {
    Disconnected { components: usize },
    Singular,
}

impl fmt::Display for BaselineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaselineError::Disconnected { components } => {
                write!(f, "network splits into {components} components; rankers need one")
            }
            BaselineError::Singular => write!(f, "reduced Laplacian failed to factor"),
        }
    }
}

impl core::error::Error for BaselineError {}

fn require_connected(net: &GridNetwork) -> Result<(), BaselineError> {
    let components =
        connected_components(net.n_buses(), net.lines.iter().map(|l| (l.from, l.to)));
    if components.len() != 1 {
        return Err(BaselineError::Disconnected { components: components.len() });
    }
    Ok(())
}

/// Edge betweenness over unordered bus pairs: each line accumulates the
/// fraction of unweighted shortest paths passing through it, by the
/// single-source accumulation scheme run from every bus and halved.
pub fn edge_betweenness(net: &GridNetwork) -> Result<BaselineRank, BaselineError> {
    require_connected(net)?;
    let b = net.n_buses();
    let n = net.n_lines();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); b];
    for line in &net.lines {
        adj[line.from].push((line.to, line.id));
        adj[line.to].push((line.from, line.id));
    }

    let mut scores = vec![0.0f64; n];
    for source in 0..b {
        let mut dist = vec![usize::MAX; b];
        let mut sigma = vec![0.0f64; b];
        let mut preds: Vec<Vec<(usize, usize)>> = vec![Vec::new(); b];
        let mut order = Vec::with_capacity(b);
        let mut queue = VecDeque::new();
        dist[source] = 0;
        sigma[source] = 1.0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &(v, line) in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
                if dist[v] == dist[u] + 1 {
                    sigma[v] += sigma[u];
                    preds[v].push((u, line));
                }
            }
        }
        let mut delta = vec![0.0f64; b];
        for &w in order.iter().rev() {
            for &(v, line) in &preds[w] {
                let credit = sigma[v] / sigma[w] * (1.0 + delta[w]);
                scores[line] += credit;
                delta[v] += credit;
            }
        }
    }
    // Every unordered pair was visited from both endpoints.
    for s in &mut scores {
        *s *= 0.5;
    }
    Ok(BaselineRank::from_scores(BaselineAlgorithm::Bc, scores))
}

/// Inverse of the reduced susceptance Laplacian, padded with a zero row
/// and column at the grounded bus 0. `x[i * b + j]` is the potential at
/// bus `i` per unit current injected at bus `j` (withdrawn at ground).
fn padded_laplacian_inverse(net: &GridNetwork) -> Result<Vec<f64>, BaselineError> {
    let b = net.n_buses();
    let dim = b - 1;
    let mut lap = vec![0.0f64; dim * dim];
    for line in &net.lines {
        let (u, v, s) = (line.from, line.to, line.susceptance);
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
    // Cholesky factor once, then solve for each identity column.
    let mut factor = lap;
    for j in 0..dim {
        let mut d = factor[j * dim + j];
        for k in 0..j {
            d -= factor[j * dim + k] * factor[j * dim + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(BaselineError::Singular);
        }
        let ljj = d.sqrt();
        factor[j * dim + j] = ljj;
        for i in (j + 1)..dim {
            let mut s = factor[i * dim + j];
            for k in 0..j {
                s -= factor[i * dim + k] * factor[j * dim + k];
            }
            factor[i * dim + j] = s / ljj;
        }
    }
    let mut x = vec![0.0f64; b * b];
    let mut col = vec![0.0f64; dim];
    for c in 0..dim {
        col.fill(0.0);
        col[c] = 1.0;
        for i in 0..dim {
            let mut s = col[i];
            for k in 0..i {
                s -= factor[i * dim + k] * col[k];
            }
            col[i] = s / factor[i * dim + i];
        }
        for i in (0..dim).rev() {
            let mut s = col[i];
            for k in (i + 1)..dim {
                s -= factor[k * dim + i] * col[k];
            }
            col[i] = s / factor[i * dim + i];
        }
        for i in 0..dim {
            x[(i + 1) * b + (c + 1)] = col[i];
        }
    }
    Ok(x)
}

/// Current-flow betweenness: the average over all unordered bus pairs of
/// the current a line carries when one unit flows from `s` to `t`.
pub fn current_flow_betweenness(net: &GridNetwork) -> Result<BaselineRank, BaselineError> {
    require_connected(net)?;
    let b = net.n_buses();
    let x = padded_laplacian_inverse(net)?;
    let mut scores = vec![0.0f64; net.n_lines()];
    let mut pairs = 0usize;
    for s in 0..b {
        for t in (s + 1)..b {
            pairs += 1;
            for line in &net.lines {
                let (u, v) = (line.from, line.to);
                let potential_diff =
                    x[u * b + s] - x[u * b + t] - (x[v * b + s] - x[v * b + t]);
                scores[line.id] += (line.susceptance * potential_diff).abs();
            }
        }
    }
    for s in &mut scores {
        *s /= pairs as f64;
    }
    Ok(BaselineRank::from_scores(BaselineAlgorithm::Cfbc, scores))
}

/// Power transfer distribution factors: `ptdf[l * n + k]` is the flow
/// change on line `l` per unit of power moved from line `k`'s from-bus to
/// its to-bus.
pub fn ptdf_matrix(net: &GridNetwork) -> Result<Vec<f64>, BaselineError> {
    require_connected(net)?;
    let b = net.n_buses();
    let n = net.n_lines();
    let x = padded_laplacian_inverse(net)?;
    let mut ptdf = vec![0.0f64; n * n];
    for l in &net.lines {
        for k in &net.lines {
            let (u, v) = (l.from, l.to);
            let (i, j) = (k.from, k.to);
            let reach = x[u * b + i] - x[u * b + j] - (x[v * b + i] - x[v * b + j]);
            ptdf[l.id * n + k.id] = l.susceptance * reach;
        }
    }
    Ok(ptdf)
}

/// Line outage distribution factors with explicit bridge flagging.
#[derive(Debug, Clone, PartialEq)]
pub struct LodfMatrix {
    pub n: usize,
    /// Row-major `LODF[l, k]`: flow change on `l` per unit of pre-outage
    /// flow on the outaged line `k`. Diagonal is -1 by convention.
    pub values: Vec<f64>,
    /// Columns whose outage would island the network; their off-diagonal
    /// entries are zeroed and they are excluded from scoring.
    pub undefined_columns: Vec<usize>,
}

impl LodfMatrix {
    pub fn get(&self, l: usize, k: usize) -> f64 {
        self.values[l * self.n + k]
    }
}

/// Compute `LODF[l, k] = PTDF[l, k] / (1 - PTDF[k, k])`; a column whose
/// denominator vanishes (within 1e-9) outages a bridge and is flagged
/// rather than reported as an error.
pub fn lodf_matrix(net: &GridNetwork) -> Result<LodfMatrix, BaselineError> {
    let n = net.n_lines();
    let ptdf = ptdf_matrix(net)?;
    let mut values = vec![0.0f64; n * n];
    let mut undefined = Vec::new();
    for k in 0..n {
        let denom = 1.0 - ptdf[k * n + k];
        let bridge = denom.abs() <= 1e-9;
        if bridge {
            undefined.push(k);
        }
        for l in 0..n {
            values[l * n + k] = if l == k {
                -1.0
            } else if bridge {
                0.0
            } else {
                ptdf[l * n + k] / denom
            };
        }
    }
    Ok(LodfMatrix { n, values, undefined_columns: undefined })
}

/// Score each line by the summed magnitude of its outage response to every
/// other line, skipping the diagonal and undefined columns.
pub fn lodf_rank(lodf: &LodfMatrix) -> BaselineRank {
    let n = lodf.n;
    let mut defined = vec![true; n];
    for &k in &lodf.undefined_columns {
        defined[k] = false;
    }
    let scores: Vec<f64> = (0..n)
        .map(|l| {
            (0..n)
                .filter(|&k| k != l && defined[k])
                .map(|k| lodf.get(l, k).abs())
                .sum()
        })
        .collect();
    BaselineRank::from_scores(BaselineAlgorithm::Lodf, scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Bus, GridNetwork, Line};
    use alloc::collections::BTreeSet;

    fn unit_network(buses: usize, edges: &[(usize, usize)]) -> GridNetwork {
        GridNetwork::new(
            "test",
            (0..buses).map(|id| Bus { id, generation: 1.0, load: 1.0 }).collect(),
            edges
                .iter()
                .enumerate()
                .map(|(id, &(from, to))| Line {
                    id,
                    from,
                    to,
                    susceptance: 1.0,
                    capacity: 10.0,
                })
                .collect(),
        )
        .unwrap()
    }

    /// Test-only dense solver: Gauss-Jordan with partial pivoting,
    /// independent of the production Cholesky path.
    fn gauss_solve(mut a: Vec<f64>, mut rhs: Vec<f64>) -> Vec<f64> {
        let n = rhs.len();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| {
                    a[i * n + col].abs().partial_cmp(&a[j * n + col].abs()).unwrap()
                })
                .unwrap();
            for j in 0..n {
                a.swap(col * n + j, pivot * n + j);
            }
            rhs.swap(col, pivot);
            let d = a[col * n + col];
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a[i * n + col] / d;
                for j in 0..n {
                    a[i * n + j] -= f * a[col * n + j];
                }
                rhs[i] -= f * rhs[col];
            }
        }
        (0..n).map(|i| rhs[i] / a[i * n + i]).collect()
    }

    /// Brute-force per-pair current flow via the independent solver.
    fn cfbc_oracle(net: &GridNetwork) -> Vec<f64> {
        let b = net.n_buses();
        let dim = b - 1;
        let mut lap = vec![0.0f64; dim * dim];
        for line in &net.lines {
            let (u, v, s) = (line.from, line.to, line.susceptance);
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
        let mut scores = vec![0.0f64; net.n_lines()];
        let mut pairs = 0usize;
        for s in 0..b {
            for t in (s + 1)..b {
                pairs += 1;
                let mut rhs = vec![0.0f64; dim];
                if s > 0 {
                    rhs[s - 1] += 1.0;
                }
                if t > 0 {
                    rhs[t - 1] -= 1.0;
                }
                let theta_reduced = gauss_solve(lap.clone(), rhs);
                let theta = |bus: usize| if bus == 0 { 0.0 } else { theta_reduced[bus - 1] };
                for line in &net.lines {
                    scores[line.id] +=
                        (line.susceptance * (theta(line.from) - theta(line.to))).abs();
                }
            }
        }
        for v in &mut scores {
            *v /= pairs as f64;
        }
        scores
    }

    /// All shortest paths by DFS enumeration; counts per line.
    fn bc_oracle(net: &GridNetwork) -> Vec<f64> {
        let b = net.n_buses();
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); b];
        for line in &net.lines {
            adj[line.from].push((line.to, line.id));
            adj[line.to].push((line.from, line.id));
        }
        let mut scores = vec![0.0f64; net.n_lines()];
        for s in 0..b {
            for t in (s + 1)..b {
                // Enumerate every simple path, keep the shortest length.
                let mut paths: Vec<Vec<usize>> = Vec::new();
                let mut stack = vec![(s, vec![false; b], Vec::<usize>::new())];
                while let Some((u, visited, lines)) = stack.pop() {
                    if u == t {
                        paths.push(lines);
                        continue;
                    }
                    let mut visited = visited;
                    visited[u] = true;
                    for &(v, line) in &adj[u] {
                        if !visited[v] {
                            let mut next = lines.clone();
                            next.push(line);
                            stack.push((v, visited.clone(), next));
                        }
                    }
                }
                let shortest = paths.iter().map(|p| p.len()).min().unwrap();
                let shortest_paths: Vec<&Vec<usize>> =
                    paths.iter().filter(|p| p.len() == shortest).collect();
                let total = shortest_paths.len() as f64;
                for path in shortest_paths {
                    for &line in path {
                        scores[line] += 1.0 / total;
                    }
                }
            }
        }
        scores
    }

    #[test]
    fn path_graph_betweenness() {
        let net = unit_network(4, &[(0, 1), (1, 2), (2, 3)]);
        let rank = edge_betweenness(&net).unwrap();
        assert_eq!(rank.scores, vec![3.0, 4.0, 3.0]);
        assert_eq!(rank.order, vec![1, 0, 2]);
    }

    #[test]
    fn triangle_and_star_are_symmetric() {
        let triangle = unit_network(3, &[(0, 1), (1, 2), (2, 0)]);
        let rank = edge_betweenness(&triangle).unwrap();
        for &s in &rank.scores {
            assert!((s - rank.scores[0]).abs() < 1e-12);
        }
        let star = unit_network(4, &[(0, 1), (0, 2), (0, 3)]);
        let rank = edge_betweenness(&star).unwrap();
        for &s in &rank.scores {
            assert!((s - rank.scores[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn betweenness_matches_path_enumeration_on_small_graphs() {
        let cases: &[(usize, &[(usize, usize)])] = &[
            (4, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]),
            (5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 3)]),
            (6, &[(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (3, 5), (4, 5)]),
        ];
        for &(b, edges) in cases {
            let net = unit_network(b, edges);
            let got = edge_betweenness(&net).unwrap().scores;
            let want = bc_oracle(&net);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-9, "{b} buses: {got:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn two_bus_edge_carries_the_unit() {
        let net = GridNetwork::new(
            "pair",
            vec![
                Bus { id: 0, generation: 1.0, load: 0.0 },
                Bus { id: 1, generation: 0.0, load: 1.0 },
            ],
            vec![Line { id: 0, from: 0, to: 1, susceptance: 1.0, capacity: 1.0 }],
        )
        .unwrap();
        let rank = current_flow_betweenness(&net).unwrap();
        assert!((rank.scores[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_current_split() {
        let net = unit_network(3, &[(0, 1), (1, 2), (2, 0)]);
        let got = current_flow_betweenness(&net).unwrap().scores;
        // Per adjacent pair the direct edge carries 2/3 and the others
        // 1/3; averaged over three pairs every edge scores 4/9.
        for &s in &got {
            assert!((s - 4.0 / 9.0).abs() < 1e-12, "{got:?}");
        }
        let oracle = cfbc_oracle(&net);
        for (g, w) in got.iter().zip(&oracle) {
            assert!((g - w).abs() < 1e-9);
        }
    }

    #[test]
    fn cfbc_matches_per_pair_solves() {
        let net = unit_network(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 3)]);
        let got = current_flow_betweenness(&net).unwrap().scores;
        let want = cfbc_oracle(&net);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-9);
        }
    }

    #[test]
    fn triangle_lodf_is_unity() {
        // Any outage sends the line's full flow around the alternate
        // path, so every off-diagonal factor has magnitude 1; the sign
        // follows the surviving lines' orientations.
        let net = unit_network(3, &[(0, 1), (0, 2), (2, 1)]);
        let lodf = lodf_matrix(&net).unwrap();
        assert!(lodf.undefined_columns.is_empty());
        for l in 0..3 {
            for k in 0..3 {
                let expect = if l == k { -1.0 } else { 1.0 };
                assert!((lodf.get(l, k).abs() - expect.abs()).abs() < 1e-9, "({l},{k})");
            }
        }
        // The worked pair: outage of 0-2 shifts its full flow onto 0-1.
        assert!((lodf.get(0, 1) - 1.0).abs() < 1e-9);
        // Verified against a full re-solve with one unit flowing from
        // bus 0 to bus 1: base flows (2/3, 1/3, 1/3), post-outage flow on
        // 0-1 is 1 = 2/3 + 1 x 1/3.
        use crate::flow::dc_power_flow;
        let powered = GridNetwork::new(
            "triangle",
            vec![
                Bus { id: 0, generation: 1.0, load: 0.0 },
                Bus { id: 1, generation: 0.0, load: 1.0 },
                Bus { id: 2, generation: 0.0, load: 0.0 },
            ],
            net.lines.clone(),
        )
        .unwrap();
        let base = dc_power_flow(&powered, &BTreeSet::new()).unwrap();
        let resolved = dc_power_flow(&powered, &[1].into_iter().collect()).unwrap();
        let predicted = base.flows[0] + lodf.get(0, 1) * base.flows[1];
        assert!((base.flows[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((predicted - resolved.flows[0]).abs() < 1e-12);
        assert!((resolved.flows[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bridges_are_flagged_not_fatal() {
        let net = unit_network(4, &[(0, 1), (1, 2), (2, 3)]);
        let lodf = lodf_matrix(&net).unwrap();
        assert_eq!(lodf.undefined_columns, vec![0, 1, 2]);
        for l in 0..3 {
            assert_eq!(lodf.get(l, l), -1.0);
        }
        let rank = lodf_rank(&lodf);
        assert_eq!(rank.scores, vec![0.0; 3]);
    }

    #[test]
    fn lodf_predicts_post_outage_flows_exactly() {
        use crate::flow::dc_power_flow;
        use crate::grid::{synthesize_network, SynthSpec, Topology};
        for seed in 0..5u64 {
            let spec = SynthSpec {
                buses: 12,
                topology: Topology::RandomRegular { degree: 3 },
                load_scale: 1.0,
                capacity_margin: 2.0,
            };
            let net = synthesize_network(&spec, seed).unwrap();
            let base = dc_power_flow(&net, &BTreeSet::new()).unwrap();
            let lodf = lodf_matrix(&net).unwrap();
            let scale = 1.0 + base.flows.iter().fold(0.0f64, |a, f| a.max(f.abs()));
            for k in 0..net.n_lines() {
                if lodf.undefined_columns.contains(&k) {
                    continue;
                }
                let failed: BTreeSet<usize> = [k].into_iter().collect();
                let resolved = dc_power_flow(&net, &failed).unwrap();
                for l in 0..net.n_lines() {
                    if l == k {
                        continue;
                    }
                    let predicted = base.flows[l] + lodf.get(l, k) * base.flows[k];
                    assert!(
                        (predicted - resolved.flows[l]).abs() <= 1e-9 * scale,
                        "seed {seed} outage {k} line {l}: {predicted} vs {}",
                        resolved.flows[l]
                    );
                }
            }
        }
    }

    #[test]
    fn lodf_rank_matches_brute_force_on_four_bus_network() {
        // Diamond with a chord; compare against flow-change aggregation
        // from per-outage re-solves.
        use crate::flow::dc_power_flow;
        let net = GridNetwork::new(
            "diamond",
            vec![
                Bus { id: 0, generation: 2.0, load: 0.0 },
                Bus { id: 1, generation: 0.0, load: 0.7 },
                Bus { id: 2, generation: 0.0, load: 0.8 },
                Bus { id: 3, generation: 0.0, load: 0.5 },
            ],
            vec![
                Line { id: 0, from: 0, to: 1, susceptance: 1.0, capacity: 10.0 },
                Line { id: 1, from: 0, to: 2, susceptance: 2.0, capacity: 10.0 },
                Line { id: 2, from: 1, to: 3, susceptance: 1.0, capacity: 10.0 },
                Line { id: 3, from: 2, to: 3, susceptance: 1.5, capacity: 10.0 },
                Line { id: 4, from: 1, to: 2, susceptance: 0.5, capacity: 10.0 },
            ],
        )
        .unwrap();
        let base = dc_power_flow(&net, &BTreeSet::new()).unwrap();
        let lodf = lodf_matrix(&net).unwrap();
        assert!(lodf.undefined_columns.is_empty());

        let n = net.n_lines();
        let mut oracle = vec![0.0f64; n];
        for k in 0..n {
            let failed: BTreeSet<usize> = [k].into_iter().collect();
            let resolved = dc_power_flow(&net, &failed).unwrap();
            for l in 0..n {
                if l == k || base.flows[k].abs() < 1e-12 {
                    continue;
                }
                oracle[l] += ((resolved.flows[l] - base.flows[l]) / base.flows[k]).abs();
            }
        }
        let rank = lodf_rank(&lodf);
        for (got, want) in rank.scores.iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-9, "{:?} vs {oracle:?}", rank.scores);
        }
    }

    #[test]
    fn disconnected_networks_rejected() {
        let net = GridNetwork {
            name: "split".into(),
            buses: (0..4).map(|id| Bus { id, generation: 1.0, load: 1.0 }).collect(),
            lines: vec![
                Line { id: 0, from: 0, to: 1, susceptance: 1.0, capacity: 1.0 },
                Line { id: 1, from: 2, to: 3, susceptance: 1.0, capacity: 1.0 },
            ],
        };
        assert!(matches!(
            edge_betweenness(&net),
            Err(BaselineError::Disconnected { components: 2 })
        ));
        assert!(current_flow_betweenness(&net).is_err());
        assert!(lodf_matrix(&net).is_err());
    }

    #[test]
    fn rankers_ignore_line_file_order() {
        // Same network with the line list permuted (ids preserved via
        // renumbering map) must give identical per-line scores.
        let edges = [(0usize, 1usize), (1, 2), (2, 3), (3, 0), (0, 2)];
        let net = unit_network(4, &edges);
        let permutation = [3usize, 0, 4, 2, 1];
        let permuted_edges: Vec<(usize, usize)> =
            permutation.iter().map(|&i| edges[i]).collect();
        let permuted = unit_network(4, &permuted_edges);
        for (a, b) in [
            (edge_betweenness(&net).unwrap(), edge_betweenness(&permuted).unwrap()),
            (
                current_flow_betweenness(&net).unwrap(),
                current_flow_betweenness(&permuted).unwrap(),
            ),
        ] {
            for (new_id, &old_id) in permutation.iter().enumerate() {
                assert!((a.scores[old_id] - b.scores[new_id]).abs() < 1e-12);
            }
        }
    }
}
