//! Undirected turn-contact graph.
//!
//! Node `i` is the `i`-th turn wound. Orientation of the winding is carried
//! by the index order alone, so only the undirected graph is stored.

use std::collections::HashMap;

use faer::Mat;

use crate::error::{Error, Result};
use crate::winding::{distance, WindingLayout};

/// Degree of a turn whose hexagonal neighbourhood is complete.
pub const FULL_HEX_DEGREE: usize = 6;

pub const DEFAULT_CONTACT_EPSILON: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindingGraph {
    pub n: usize,
    /// Sorted pairs `(i, j)` with `i < j`.
    pub edges: Vec<(usize, usize)>,
    pub degree: Vec<usize>,
    /// Turns with fewer than [`FULL_HEX_DEGREE`] contacts.
    pub boundary: Vec<bool>,
}

impl WindingGraph {
    /// Builds a graph from an edge list, rejecting self-loops, out-of-range
    /// nodes and disconnected graphs. Duplicate and reversed pairs collapse.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut list = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({a}, {b}) out of range for {n} nodes"
                )));
            }
            if a == b {
                return Err(Error::InvalidInput(format!("self-loop at node {a}")));
            }
            list.push((a.min(b), a.max(b)));
        }
        list.sort_unstable();
        list.dedup();
        let mut degree = vec![0; n];
        for &(a, b) in &list {
            degree[a] += 1;
            degree[b] += 1;
        }
        let graph = Self {
            n,
            boundary: degree.iter().map(|&d| d < FULL_HEX_DEGREE).collect(),
            edges: list,
            degree,
        };
        let components = graph.components();
        if components.len() > 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(graph)
    }

    /// Cycle graph `0 - 1 - ... - (n-1) - 0`, whose adjacency is `S + Sᵀ`.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidInput(format!("cycle needs at least 3 nodes, got {n}")));
        }
        Self::from_edges(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut neighbours = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            neighbours[a].push(b);
            neighbours[b].push(a);
        }
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut stack = vec![start];
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &w in &neighbours[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary.iter().filter(|&&b| b).count()
    }

    pub fn adjacency_matrix(&self) -> Mat<f64> {
        let mut a = Mat::<f64>::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        a
    }

    /// `diag(degree) − A`.
    pub fn laplacian(&self) -> Mat<f64> {
        let mut l = Mat::<f64>::zeros(self.n, self.n);
        for (i, &d) in self.degree.iter().enumerate() {
            l[(i, i)] = d as f64;
        }
        for &(i, j) in &self.edges {
            l[(i, j)] = -1.0;
            l[(j, i)] = -1.0;
        }
        l
    }
}

/// Connects turns whose centres lie within `wire_diameter·(1 + ε)`.
pub fn build_graph(layout: &WindingLayout, contact_epsilon: f64) -> Result<WindingGraph> {
    if !(0.0..0.25).contains(&contact_epsilon) {
        return Err(Error::InvalidInput(format!(
            "contact_epsilon must lie in [0, 0.25), got {contact_epsilon}"
        )));
    }
    let reach = layout.spec.wire_diameter * (1.0 + contact_epsilon);
    let cell_of = |p: [f64; 2]| ((p[0] / reach).floor() as i64, (p[1] / reach).floor() as i64);

    let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, &p) in layout.positions.iter().enumerate() {
        cells.entry(cell_of(p)).or_default().push(i);
    }
    let mut edges = Vec::new();
    for (i, &p) in layout.positions.iter().enumerate() {
        let (cx, cy) = cell_of(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(members) = cells.get(&(cx + dx, cy + dy)) else {
                    continue;
                };
                for &j in members {
                    if j > i && distance(p, layout.positions[j]) <= reach {
                        edges.push((i, j));
                    }
                }
            }
        }
    }
    WindingGraph::from_edges(layout.n_turns(), edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::winding::{generate_layout, Pattern, WindingSpec};

    fn spec(n: usize, cols: usize, pattern: Pattern) -> WindingSpec {
        WindingSpec {
            n_turns: n,
            wire_diameter: 1.0,
            window_columns: cols,
            max_layers: 64,
            pattern,
            scatter_traverse_sigma: 1.0,
            seed: 3,
        }
    }

    fn brute_force_edges(layout: &WindingLayout, eps: f64) -> Vec<(usize, usize)> {
        let reach = layout.spec.wire_diameter * (1.0 + eps);
        let mut out = Vec::new();
        for i in 0..layout.n_turns() {
            for j in i + 1..layout.n_turns() {
                if distance(layout.positions[i], layout.positions[j]) <= reach {
                    out.push((i, j));
                }
            }
        }
        out
    }

    #[test]
    fn five_turn_example() {
        let layout = generate_layout(&spec(5, 3, Pattern::Machine)).unwrap();
        let g = build_graph(&layout, DEFAULT_CONTACT_EPSILON).unwrap();
        // 1-based in the worked example: (1,2),(2,3),(2,4),(3,4),(4,5),(1,5),(2,5)
        let mut expected = vec![(0, 1), (1, 2), (1, 3), (2, 3), (3, 4), (0, 4), (1, 4)];
        expected.sort_unstable();
        assert_eq!(g.edges, expected);
        assert_eq!(g.degree, vec![2, 4, 2, 3, 3]);
        assert_eq!(g.edges, brute_force_edges(&layout, DEFAULT_CONTACT_EPSILON));
    }

    #[test]
    fn two_turns_touching_share_an_edge() {
        let layout = WindingLayout {
            spec: spec(3, 3, Pattern::Machine),
            positions: vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
            turn_length: vec![1.0; 3],
        };
        let g = build_graph(&layout, 0.0).unwrap();
        assert_eq!(g.edges, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn path_adjacency() {
        let g = WindingGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let a = g.adjacency_matrix();
        let want = [[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a[(i, j)], want[i][j]);
            }
        }
    }

    #[test]
    fn full_block_interior_has_degree_six() {
        let layout = generate_layout(&spec(15 * 10 - 7, 15, Pattern::Machine)).unwrap();
        let g = build_graph(&layout, DEFAULT_CONTACT_EPSILON).unwrap();
        assert!(g.degree.iter().all(|&d| d <= FULL_HEX_DEGREE));
        // layer 3, slot 5: both neighbouring layers are complete
        let probe = layout
            .positions
            .iter()
            .position(|p| (p[0] - 5.5).abs() < 1e-9 && (p[1] - 3.0 * layout.spec.layer_pitch()).abs() < 1e-9)
            .unwrap();
        assert_eq!(g.degree[probe], 6);
        assert!(!g.boundary[probe]);
        assert!(g.degree.iter().filter(|&&d| d == 6).count() > 50);
    }

    #[test]
    fn disconnected_graph_names_components() {
        let err = WindingGraph::from_edges(5, [(0, 1), (2, 3), (3, 4)]).unwrap_err();
        match &err {
            Error::Disconnected { components } => {
                assert_eq!(components, &vec![vec![0, 1], vec![2, 3, 4]]);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("{0, 1}"));
    }

    #[test]
    fn epsilon_out_of_range() {
        let layout = generate_layout(&spec(5, 3, Pattern::Machine)).unwrap();
        assert!(build_graph(&layout, 0.3).is_err());
        assert!(build_graph(&layout, -0.1).is_err());
    }

    #[test]
    fn self_loop_rejected() {
        assert!(WindingGraph::from_edges(3, [(1, 1)]).is_err());
    }

    #[test]
    fn cycle_trace_zero_and_degree_two() {
        let g = WindingGraph::cycle(6).unwrap();
        let a = g.adjacency_matrix();
        assert_eq!((0..6).map(|i| a[(i, i)]).sum::<f64>(), 0.0);
        assert!(g.degree.iter().all(|&d| d == 2));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn scatter_graph_invariants(seed in 0u64..10_000, n in 12usize..120, cols in 4usize..12, sigma in 0.0f64..3.0) {
                let mut s = spec(n, cols, Pattern::Scatter);
                s.seed = seed;
                s.scatter_traverse_sigma = sigma;
                let layout = generate_layout(&s).unwrap();
                prop_assert!(layout.min_separation() >= s.wire_diameter * (1.0 - 1e-9));
                match build_graph(&layout, DEFAULT_CONTACT_EPSILON) {
                    Ok(g) => {
                        prop_assert_eq!(g.degree.iter().sum::<usize>(), 2 * g.edges.len());
                        prop_assert!(g.degree.iter().all(|&d| d <= FULL_HEX_DEGREE));
                        prop_assert_eq!(&g.edges, &brute_force_edges(&layout, DEFAULT_CONTACT_EPSILON));
                        let a = g.adjacency_matrix();
                        for i in 0..n {
                            prop_assert_eq!(a[(i, i)], 0.0);
                            for j in 0..n {
                                prop_assert_eq!(a[(i, j)], a[(j, i)]);
                            }
                        }
                    }
                    Err(Error::Disconnected { components }) => {
                        prop_assert_eq!(components.iter().map(Vec::len).sum::<usize>(), n);
                    }
                    Err(e) => prop_assert!(false, "unexpected error {}", e),
                }
            }
        }
    }
}
